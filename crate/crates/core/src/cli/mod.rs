//! `wgqed` command line: config-driven runs, sweeps and figure presets.
//!
//! Every run writes `manifest.json` (resolved config, version, tolerances,
//! diagnostics) next to its CSV files. Exit codes: 0 success, 2 config
//! error, 3 physics or convergence error.

pub mod config;
pub mod presets;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{ExperimentConfig, GridConfig, GridUnits, MeConfig, Model, OutputConfig, PolesConfig, SweepConfig};

use crate::dressed::DressedAnalysis;
use crate::jc::{jc_spectrum_with, JcSettings};
use crate::lindblad::{Peak, RegisterModel, SpectrumSeries, SpectrumSettings};
use crate::linresp::polariton_poles;
use crate::mps::{self, checkpoint, effective_coupling, output_correlations, output_spectrum, photon_probabilities, TimeBinMps};
use crate::tolerances;

/// Peaks are local maxima above this fraction of the maximum...
pub const PEAK_FLOOR: f64 = 0.01;
/// ...that stand out from the surrounding minima by this fraction of it.
pub const PEAK_PROMINENCE: f64 = 0.01;

pub const WORKERS_ENV: &str = "WGQED_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{module}: {message}")]
    Physics { module: &'static str, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics { .. } | CliError::Io { .. } => 3,
        }
    }

    fn physics(module: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Physics { module, message: e.to_string() }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<mps::MpsError> for CliError {
    fn from(e: mps::MpsError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::physics("mps", e)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wgqed", version, about = "Pumped qubit between atom-like mirrors in a waveguide")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one config file or preset.
    Run {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Output directory (overrides `output.path`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue an MPS run from a checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Sweep one numeric field of a config.
    Sweep {
        config: PathBuf,
        /// Dotted field path, e.g. `layout.omega`.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Figure presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    List,
    /// Print a preset as TOML.
    Show { name: String },
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wgqed: {e}");
            e.exit_code()
        }
    }
}

fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, preset, out, resume } => {
            let cfg = match (config, preset) {
                (Some(p), None) => read_config(&p)?,
                (None, Some(name)) => presets::get(&name)?,
                _ => return Err(CliError::Config("give a config file or --preset".into())),
            };
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.path));
            let summary = run_to_dir(&cfg, &dir, resume.as_deref())?;
            println!("{summary}");
            Ok(())
        }
        Command::Sweep { config, axis, values, out } => {
            let mut cfg = read_config(&config)?;
            let model = if cfg.model == Model::Sweep { cfg.sweep.as_ref().map(|s| s.model).unwrap_or(Model::SpectrumMe) } else { cfg.model };
            cfg.model = Model::Sweep;
            cfg.sweep = Some(SweepConfig { model, axis, values });
            cfg.validate()?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.path));
            println!("{}", run_to_dir(&cfg, &dir, None)?);
            Ok(())
        }
        Command::Presets { action: PresetAction::List } => {
            for p in presets::PRESETS {
                println!("{:<12} {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            print!("{}", presets::get(&name)?.to_toml());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = read_config(&config)?;
            println!("ok: model {}", cfg.model.name());
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

/// One CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].parse().unwrap_or(f64::NAN)).collect())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// Results of one model evaluation, before anything is written.
#[derive(Debug)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub diagnostics: Value,
    pub warnings: Vec<String>,
    pub state: Option<TimeBinMps>,
}

fn spectrum_table(s: &SpectrumSeries, scales: &[(&str, f64)], with_terms: bool) -> Table {
    let mut header = vec!["omega_over_gp".to_string()];
    header.extend(scales.iter().map(|(n, _)| format!("omega_over_{n}")));
    header.push("S_total".into());
    if with_terms {
        for (a, b) in s.per_term.keys() {
            header.push(format!("S_{a}{b}_re"));
            header.push(format!("S_{a}{b}_im"));
        }
    }
    let mut t = Table { name: "spectrum".into(), header, rows: Vec::new() };
    for (i, &w) in s.omega.iter().enumerate() {
        let mut row = vec![num(w)];
        row.extend(scales.iter().map(|(_, g)| num(w / g)));
        row.push(num(s.total[i]));
        if with_terms {
            for v in s.per_term.values() {
                row.push(num(v[i].re));
                row.push(num(v[i].im));
            }
        }
        t.push(row);
    }
    t
}

fn peak_table(peaks: &[Peak], scales: &[(&str, f64)]) -> Table {
    let mut header = vec!["omega_over_gp".to_string()];
    header.extend(scales.iter().map(|(n, _)| format!("omega_over_{n}")));
    header.push("S_total".into());
    let mut t = Table { name: "peaks".into(), header, rows: Vec::new() };
    for p in peaks {
        let mut row = vec![num(p.omega)];
        row.extend(scales.iter().map(|(_, g)| num(p.omega / g)));
        row.push(num(p.value));
        t.push(row);
    }
    t
}

fn excited_populations(rho: &ndarray::Array2<crate::C64>) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, bit) in [4usize, 2, 1].into_iter().enumerate() {
        out[k] = (0..8).filter(|i| i & bit != 0).map(|i| rho[[i, i]].re).sum();
    }
    out
}

fn spectrum_me(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let layout = cfg.layout()?;
    let model = RegisterModel::new(&layout).map_err(|e| CliError::physics("lindblad", e))?;
    let g = model.g();
    let settings = SpectrumSettings { t_max: cfg.me.t_max, dt: cfg.me.dt, max_substep: model.max_substep(), normalization: cfg.output.normalization };
    let omegas = cfg.grid.omegas(g);
    let out = model.spectrum(&omegas, &settings).map_err(|e| CliError::physics("lindblad", e))?;
    let rho = model.full_register_state(&out.steady.rho).map_err(|e| CliError::physics("lindblad", e))?;
    let pops = excited_populations(rho.matrix());
    let scales: Vec<(&str, f64)> = if g > 0.0 { vec![("g", g)] } else { vec![] };
    let spectrum = &out.spectrum;
    let peaks = spectrum.prominent_peaks(PEAK_FLOOR, PEAK_PROMINENCE);
    let mut populations = Table::new("populations", &["p_m1", "p_p", "p_m2"]);
    populations.push(pops.iter().map(|&p| num(p)).collect());
    Ok(Outcome {
        tables: vec![spectrum_table(spectrum, &scales, true), peak_table(&peaks, &scales), populations],
        diagnostics: json!({
            "g": g,
            "steady_state": {
                "method": out.steady.method,
                "residual": out.steady.residual,
                "null_space_gap": out.steady.gap,
            },
            "max_substep": model.max_substep(),
            "correlation_tail": spectrum.tail_residual,
            "normalization_scale": spectrum.scale,
        }),
        warnings: spectrum.warnings.clone(),
        state: None,
    })
}

fn spectrum_mps(cfg: &ExperimentConfig, resume: Option<&Path>) -> Result<Outcome, CliError> {
    let layout = cfg.layout()?;
    let mc = cfg.mps.as_ref().ok_or_else(|| CliError::Config("missing [mps]".into()))?;
    let mut run = match resume {
        Some(p) => mps::resume(&layout, mc, checkpoint::load(p)?)?,
        None => mps::run(&layout, mc)?,
    };
    let g = crate::rates::coupling_g(layout.gamma_m, layout.gamma_p);
    let g_eff = if layout.gamma_m > 0.0 { Some(effective_coupling(mc.tau_m, &layout)?) } else { None };
    let corr = output_correlations(&mut run.state, mc.window_bins())?;
    let omegas = cfg.grid.omegas(g);
    let spectrum = output_spectrum(&corr, mc.dt, &omegas, cfg.output.normalization);
    let mut scales: Vec<(&str, f64)> = Vec::new();
    if g > 0.0 {
        scales.push(("g", g));
    }
    if let Some(ge) = g_eff {
        scales.push(("geff", ge));
    }
    let peaks = spectrum.prominent_peaks(PEAK_FLOOR, PEAK_PROMINENCE);
    let mut populations = Table::new("populations", &["t_gamma_p", "p_m1", "p_p", "p_m2"]);
    for (t, p) in run.times.iter().zip(&run.populations) {
        populations.push(vec![num(*t), num(p[0]), num(p[1]), num(p[2])]);
    }
    let region = run.state.loop_region();
    let pn = photon_probabilities(&mut run.state, region)?;
    let mut probabilities = Table::new("probabilities", &["tau_gamma_p", "P0", "P1", "P2", "rest"]);
    probabilities.push(vec![num(2.0 * mc.tau_m), num(pn.p0), num(pn.p1), num(pn.p2), num(pn.rest)]);
    let mut warnings = run.warnings.clone();
    warnings.extend(spectrum.warnings.iter().cloned());
    Ok(Outcome {
        tables: vec![spectrum_table(&spectrum, &scales, false), peak_table(&peaks, &scales), populations, probabilities],
        diagnostics: json!({
            "g": g,
            "g_eff": g_eff,
            "steps": run.state.step,
            "delay_bins": run.state.delay,
            "window_bins": corr.connected.len(),
            "norm_drift": run.norm_drift,
            "discarded_weight": run.discarded_total,
            "worst_split": run.worst_split,
            "max_bond": run.max_bond,
            "final_bonds": run.state.bond_dims(),
            "correlation_tail": spectrum.tail_residual,
            "normalization_scale": spectrum.scale,
        }),
        warnings,
        state: Some(run.state),
    })
}

fn jc(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.jc.as_ref().ok_or_else(|| CliError::Config("missing [jc]".into()))?;
    let omegas = cfg.grid.omegas(p.g);
    let settings = JcSettings { normalization: cfg.output.normalization, ..JcSettings::default() };
    let out = jc_spectrum_with(p, &omegas, &settings).map_err(|e| CliError::physics("jc", e))?;
    let scales: Vec<(&str, f64)> = if p.g > 0.0 { vec![("g", p.g)] } else { vec![] };
    let peaks = out.spectrum.prominent_peaks(PEAK_FLOOR, PEAK_PROMINENCE);
    Ok(Outcome {
        tables: vec![spectrum_table(&out.spectrum, &scales, false), peak_table(&peaks, &scales)],
        diagnostics: json!({
            "n_fock": out.n_fock,
            "compared_with": out.compared_with,
            "fock_deviation": out.deviation,
            "converged": out.converged,
            "t_max": out.t_max,
            "steady_residual": out.steady_residual,
            "correlation_tail": out.spectrum.tail_residual,
        }),
        warnings: out.spectrum.warnings.clone(),
        state: None,
    })
}

fn poles(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let pc = cfg.poles.as_ref().ok_or_else(|| CliError::Config("missing [poles]".into()))?;
    let p = pc.params();
    let g = p.g();
    let taus = pc.taus();
    let poles = polariton_poles(&p, &taus).map_err(|e| CliError::physics("linresp", e))?;
    let mut t = Table::new("poles", &["tau_gamma_p", "re_pole_over_g", "im_pole_over_g", "branch_id"]);
    let mut warnings = Vec::new();
    let mut worst = 0.0f64;
    for pair in &poles {
        for pole in pair {
            if pole.value.is_none() {
                warnings.push(format!("branch {} lost at tau = {}", pole.branch, pole.tau));
            }
            worst = worst.max(pole.residual);
            t.push(vec![num(pole.tau), opt(pole.re_over_g(g)), opt(pole.im_over_g(g)), pole.branch.to_string()]);
        }
    }
    Ok(Outcome { tables: vec![t], diagnostics: json!({ "g": g, "worst_residual": worst }), warnings, state: None })
}

fn dressed(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let layout = cfg.layout()?;
    let a = DressedAnalysis::for_layout(&layout).map_err(|e| CliError::physics("dressed", e))?;
    let g = crate::rates::coupling_g(layout.gamma_m, layout.gamma_p);
    let gs = if g > 0.0 { g } else { 1.0 };
    let mut levels = Table::new("levels", &["basis", "index", "label", "energy_over_gp", "energy_over_g", "population"]);
    for (name, basis, pops) in [("natural", &a.natural, &a.natural_populations), ("driven", &a.driven, &a.driven_populations)] {
        for k in 0..basis.len() {
            levels.push(vec![name.into(), k.to_string(), basis.name(k), num(basis.eigenvalues[k]), num(basis.eigenvalues[k] / gs), num(pops[k])]);
        }
    }
    let mut lines = Table::new("lines", &["from", "to", "omega_over_gp", "omega_over_g", "dipole", "weight"]);
    for l in &a.lines.lines {
        lines.push(vec![l.from.clone(), l.to.clone(), num(l.frequency), num(l.frequency / gs), num(l.dipole), num(l.weight)]);
    }
    Ok(Outcome {
        tables: vec![levels, lines],
        diagnostics: json!({
            "g": g,
            "populated_natural": a.populated_natural(1e-3),
            "line_groups": a.lines.groups.len(),
        }),
        warnings: a.lines.warnings.clone(),
        state: None,
    })
}

/// Evaluates a single (non-sweep) config.
pub fn execute(cfg: &ExperimentConfig, resume: Option<&Path>) -> Result<Outcome, CliError> {
    if resume.is_some() && cfg.model != Model::SpectrumMps {
        return Err(CliError::Config("--resume applies to spectrum-mps only".into()));
    }
    match cfg.model {
        Model::SpectrumMe => spectrum_me(cfg),
        Model::SpectrumMps => spectrum_mps(cfg, resume),
        Model::Jc => jc(cfg),
        Model::Poles => poles(cfg),
        Model::Dressed => dressed(cfg),
        Model::Sweep => Err(CliError::Config("use run_to_dir for sweeps".into())),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn manifest(cfg: &ExperimentConfig, files: &[String], diagnostics: Value, warnings: &[String]) -> Value {
    json!({
        "tool": "wgqed",
        "version": env!("CARGO_PKG_VERSION"),
        "model": cfg.model.name(),
        "config": cfg,
        "tolerances": tolerances::record(),
        "peak_detection": { "floor": PEAK_FLOOR, "prominence": PEAK_PROMINENCE },
        "diagnostics": diagnostics,
        "warnings": warnings,
        "files": files,
    })
}

fn write_outcome(cfg: &ExperimentConfig, dir: &Path, out: &Outcome) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for t in &out.tables {
        let name = format!("{}.csv", t.name);
        write_file(&dir.join(&name), t.to_csv().as_bytes())?;
        files.push(name);
    }
    if let (true, Some(state)) = (cfg.output.checkpoint, &out.state) {
        let path = dir.join("state.mps");
        checkpoint::save(&path, state)?;
        files.push("state.mps".into());
    }
    let m = manifest(cfg, &files, out.diagnostics.clone(), &out.warnings);
    write_file(&dir.join("manifest.json"), serde_json::to_string_pretty(&m).expect("json").as_bytes())?;
    Ok(files)
}

fn point_dir(k: usize, axis: &str, v: f64) -> String {
    let leaf = axis.rsplit('.').next().unwrap_or(axis);
    format!("point_{k:03}_{leaf}_{v}")
}

fn worker_count() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => s.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Config(format!("{WORKERS_ENV}={s} is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `cfg` and writes its artifacts under `dir`; returns a one-line summary.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, resume: Option<&Path>) -> Result<String, CliError> {
    cfg.validate()?;
    if cfg.model != Model::Sweep {
        let out = execute(cfg, resume)?;
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
        let files = write_outcome(cfg, dir, &out)?;
        return Ok(format!("{}: wrote {} to {}", cfg.model.name(), files.join(", "), dir.display()));
    }
    let sweep = cfg.sweep.clone().ok_or_else(|| CliError::Config("missing [sweep]".into()))?;
    let points: Vec<ExperimentConfig> = sweep.values.iter().map(|&v| cfg.point(&sweep.axis, v, sweep.model)).collect::<Result<_, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(worker_count()?).build().map_err(|e| CliError::Config(e.to_string()))?;
    let results: Vec<Result<Outcome, CliError>> = pool.install(|| {
        use rayon::prelude::*;
        points.par_iter().map(|p| execute(p, None)).collect()
    });
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut combined: Vec<Table> = Vec::new();
    let mut point_entries = Vec::new();
    let mut warnings = Vec::new();
    for (k, ((p, &v), res)) in points.iter().zip(&sweep.values).zip(results).enumerate() {
        let out = res?;
        let sub = point_dir(k, &sweep.axis, v);
        write_outcome(p, &dir.join(&sub), &out)?;
        warnings.extend(out.warnings.iter().map(|w| format!("{sub}: {w}")));
        point_entries.push(json!({ "value": v, "dir": sub, "diagnostics": out.diagnostics }));
        for t in &out.tables {
            let c = match combined.iter_mut().find(|c| c.name == t.name) {
                Some(c) => c,
                None => {
                    let mut header = vec![sweep.axis.clone()];
                    header.extend(t.header.iter().cloned());
                    combined.push(Table { name: t.name.clone(), header, rows: Vec::new() });
                    combined.last_mut().expect("just pushed")
                }
            };
            if c.header[1..] != t.header[..] {
                return Err(CliError::physics("cli", format!("{} columns differ between sweep points", t.name)));
            }
            for r in &t.rows {
                let mut row = vec![num(v)];
                row.extend(r.iter().cloned());
                c.rows.push(row);
            }
        }
    }
    let mut files = Vec::new();
    for t in &combined {
        let name = format!("combined_{}.csv", t.name);
        write_file(&dir.join(&name), t.to_csv().as_bytes())?;
        files.push(name);
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let m = manifest(cfg, &files, json!({ "points": point_entries }), &warnings);
    write_file(&dir.join("manifest.json"), serde_json::to_string_pretty(&m).expect("json").as_bytes())?;
    let mut s = String::new();
    let _ = write!(s, "sweep of {} over {} = {:?}: wrote {} point directories and {} to {}", sweep.model.name(), sweep.axis, sweep.values, points.len(), files.join(", "), dir.display());
    Ok(s)
}
