//! Time-bin matrix-product-state engine with propagation delays.
//!
//! Chain layout, left to right: the field bins travelling between the
//! mirrors, grouped in one block of four sites per future time step, then the
//! three-qubit system site, then output bins (newest first). A block feeding
//! step `j` holds `[R_{j-l}, L_{j-l}, R_{j-2l}, L_{j-2l}]` with `l = tau_m/dt`:
//! the first pair meets the probe at step `j`, the second pair the mirrors.
//! The block for the current step sits right next to the system site; each
//! step creates the block for step `k + l` and files it at the left end.

pub mod chain;
pub mod checkpoint;
pub mod gates;
pub mod observables;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::linresp::{polariton_poles, LinRespError, LinearResponseParams};
use crate::rates::QubitLayout;
use crate::tolerances;
use crate::C64;

pub use chain::{Chain, Truncation};
pub use gates::{NoiseIncrement, StepGates};
pub use observables::{output_correlations, output_spectrum, photon_probabilities, stationarity_drift, OutputCorrelations, PhotonProbabilities};

#[derive(Debug, thiserror::Error)]
pub enum MpsError {
    #[error("invalid MPS configuration: {0}")]
    Config(String),
    #[error("truncation discarded {discarded:.3e} of the weight in one split (cutoff {cutoff:.1e}, kept chi = {chi})")]
    Truncation { discarded: f64, cutoff: f64, chi: usize },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("bin range {0:?} is outside the cavity region")]
    Region(std::ops::Range<usize>),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("no polariton pole at tau = {0}")]
    PoleGap(f64),
    #[error(transparent)]
    Poles(#[from] LinRespError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
    #[error("internal: {0}")]
    Internal(String),
}

impl MpsError {
    pub fn is_config(&self) -> bool {
        matches!(self, MpsError::Config(_) | MpsError::Region(_))
    }
}

fn default_dt() -> f64 {
    0.025
}
fn default_d_bin() -> usize {
    3
}
fn default_chi() -> usize {
    64
}
fn default_cutoff() -> f64 {
    1e-8
}
fn default_t_cor() -> f64 {
    40.0
}
fn default_norm_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsRunConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Probe to mirror delay; must be a whole number of bins.
    pub tau_m: f64,
    /// Defaults to the correlation window plus a 60/gamma_p settling time.
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default = "default_d_bin")]
    pub d_bin: usize,
    #[serde(default = "default_chi")]
    pub chi_max: usize,
    #[serde(default = "default_cutoff")]
    pub svd_cutoff: f64,
    /// Correlation window in bins; defaults to `ceil(t_cor / dt)`.
    #[serde(default, rename = "M")]
    pub window: Option<usize>,
    #[serde(default = "default_t_cor")]
    pub t_cor: f64,
    /// Full norm contraction every this many steps.
    #[serde(default = "default_norm_every")]
    pub norm_every: usize,
}

impl MpsRunConfig {
    pub fn new(tau_m: f64) -> Self {
        Self {
            dt: default_dt(),
            tau_m,
            n_steps: None,
            d_bin: default_d_bin(),
            chi_max: default_chi(),
            svd_cutoff: default_cutoff(),
            window: None,
            t_cor: default_t_cor(),
            norm_every: default_norm_every(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_steps(mut self, n: usize) -> Self {
        self.n_steps = Some(n);
        self
    }

    pub fn with_t_cor(mut self, t_cor: f64) -> Self {
        self.t_cor = t_cor;
        self
    }

    pub fn window_bins(&self) -> usize {
        self.window.unwrap_or_else(|| (self.t_cor / self.dt - 1e-9).ceil().max(1.0) as usize)
    }

    pub fn steps(&self) -> usize {
        self.n_steps.unwrap_or_else(|| self.window_bins() + (SETTLING_TIME / self.dt).round() as usize)
    }

    /// Delay in bins.
    pub fn delay_bins(&self) -> usize {
        (self.tau_m / self.dt).round() as usize
    }

    pub fn truncation(&self) -> Truncation {
        Truncation::new(self.svd_cutoff, self.chi_max)
    }

    pub fn validate(&self) -> Result<(), MpsError> {
        let bad = |m: String| Err(MpsError::Config(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.tau_m.is_finite() && self.tau_m > 0.0) {
            return bad(format!("tau_m = {} must be positive", self.tau_m));
        }
        let ratio = self.tau_m / self.dt;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad(format!("tau_m / dt = {ratio} is not a positive integer"));
        }
        if !(2..=6).contains(&self.d_bin) {
            return bad(format!("d_bin = {} outside 2..=6", self.d_bin));
        }
        if self.chi_max == 0 {
            return bad("chi_max must be positive".into());
        }
        if !(self.svd_cutoff > 0.0 && self.svd_cutoff < 1.0) {
            return bad(format!("svd_cutoff = {} outside (0, 1)", self.svd_cutoff));
        }
        if !(self.t_cor.is_finite() && self.t_cor > 0.0) {
            return bad(format!("t_cor = {} must be positive", self.t_cor));
        }
        let m = self.window_bins();
        if m == 0 || (m as f64) * self.dt < self.t_cor * (1.0 - 1e-12) {
            return bad(format!("M dt = {} is shorter than t_cor = {}", m as f64 * self.dt, self.t_cor));
        }
        if self.steps() == 0 {
            return bad("n_steps must be positive".into());
        }
        if self.norm_every == 0 {
            return bad("norm_every must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLog {
    pub discarded: f64,
    pub worst_split: f64,
    pub max_bond: usize,
}

#[derive(Debug, Clone)]
pub struct TimeBinMps {
    pub chain: Chain,
    pub d_bin: usize,
    /// Delay in bins.
    pub delay: usize,
    /// Completed steps.
    pub step: usize,
    /// Output steps kept to the right of the system site.
    pub output_capacity: usize,
    pub truncation: Truncation,
    pub truncation_log: Vec<StepLog>,
}

fn basis_site(d: usize, level: usize) -> Array3<C64> {
    let mut a = Array3::zeros((1, d, 1));
    a[[0, level, 0]] = C64::new(1.0, 0.0);
    a
}

/// `|ggg>` and vacuum in every cavity bin; no outputs yet.
pub fn build_initial_state(config: &MpsRunConfig) -> Result<TimeBinMps, MpsError> {
    config.validate()?;
    let l = config.delay_bins();
    let mut sites: Vec<Array3<C64>> = (0..4 * l).map(|_| basis_site(config.d_bin, 0)).collect();
    sites.push(basis_site(8, 0));
    Ok(TimeBinMps {
        chain: Chain::new(sites, 4 * l),
        d_bin: config.d_bin,
        delay: l,
        step: 0,
        output_capacity: config.window_bins(),
        truncation: config.truncation(),
        truncation_log: Vec::new(),
    })
}

impl TimeBinMps {
    pub fn system_site(&self) -> usize {
        4 * self.delay
    }

    /// Cavity bins between the mirrors.
    pub fn loop_region(&self) -> std::ops::Range<usize> {
        0..self.system_site()
    }

    pub fn output_steps(&self) -> usize {
        (self.chain.len() - self.system_site() - 1) / 2
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    /// Reduced three-qubit density matrix, bare index `4 m1 + 2 p + m2`.
    pub fn system_density(&mut self) -> Result<Array2<C64>, MpsError> {
        self.chain.move_center_to(self.system_site())?;
        Ok(self.chain.center_density())
    }

    /// Excited-state populations `[m1, p, m2]`.
    pub fn populations(&mut self) -> Result<[f64; 3], MpsError> {
        let rho = self.system_density()?;
        let mut out = [0.0; 3];
        for (k, bit) in [gates::MIRROR_1_BIT, gates::PROBE_BIT, gates::MIRROR_2_BIT].into_iter().enumerate() {
            out[k] = (0..8).filter(|i| i & bit != 0).map(|i| rho[[i, i]].re).sum();
        }
        Ok(out)
    }

    /// One step of length `dt`. The three qubit propagators act on disjoint
    /// bins, so their product is the full step propagator.
    pub fn step_evolution(&mut self, gates: &StepGates) -> Result<StepLog, MpsError> {
        let s = self.system_site();
        let d = self.d_bin;
        let tr = self.truncation;
        let c = &mut self.chain;
        c.move_center_to(s)?;
        // mirror 1: (L_f, S) -> (R_k, S, L_f)
        c.apply(s - 1, 2, &gates.mirror_1, &[d, 8, d], &tr)?;
        // R_m L_m R_f R_k | S L_f
        c.swap(s - 2, false, &tr)?;
        // mirror 2: (R_f, S) -> (L_k, S, R_f)
        c.apply(s - 1, 2, &gates.mirror_2, &[d, 8, d], &tr)?;
        // R_m L_m R_k L_k | S R_f L_f ; reorder to R_k L_k R_m L_m
        c.swap(s - 3, false, &tr)?;
        c.swap(s - 2, false, &tr)?;
        c.swap(s - 4, false, &tr)?;
        c.swap(s - 3, false, &tr)?;
        c.apply(s - 2, 3, &gates.probe, &[d, d, 8], &tr)?;
        for j in 0..4 {
            c.move_site_left(s - 4 + j, j, &tr)?;
        }
        c.move_center_to(s)?;
        while c.len() > s + 1 + 2 * self.output_capacity {
            c.drop_last()?;
        }
        self.step += 1;
        let (discarded, worst_split) = c.take_discarded();
        let log = StepLog { discarded, worst_split, max_bond: c.max_bond() };
        self.truncation_log.push(log);
        Ok(log)
    }

    pub fn discarded_total(&self) -> f64 {
        self.truncation_log.iter().map(|l| l.discarded).sum()
    }
}

#[derive(Debug, Clone)]
pub struct MpsRun {
    pub layout: QubitLayout,
    pub config: MpsRunConfig,
    /// Time after each step.
    pub times: Vec<f64>,
    /// `[m1, p, m2]` excited populations after each step.
    pub populations: Vec<[f64; 3]>,
    /// `(step, norm)` from full contractions.
    pub norms: Vec<(usize, f64)>,
    pub norm_drift: f64,
    pub discarded_total: f64,
    pub worst_split: f64,
    pub max_bond: usize,
    pub warnings: Vec<String>,
    pub state: TimeBinMps,
}

impl MpsRun {
    pub fn probe_population(&self) -> Vec<f64> {
        self.populations.iter().map(|p| p[1]).collect()
    }
}

pub fn run(layout: &QubitLayout, config: &MpsRunConfig) -> Result<MpsRun, MpsError> {
    let state = build_initial_state(config)?;
    resume(layout, config, state)
}

/// Continues `state` until `config.steps()` steps are complete.
pub fn resume(layout: &QubitLayout, config: &MpsRunConfig, mut state: TimeBinMps) -> Result<MpsRun, MpsError> {
    config.validate()?;
    if state.delay != config.delay_bins() || state.d_bin != config.d_bin {
        return Err(MpsError::Config("state does not match the configured delay or bin dimension".into()));
    }
    let gates = StepGates::new(layout, config.dt, config.d_bin)?;
    let total = config.steps();
    let mut times = Vec::with_capacity(total);
    let mut populations = Vec::with_capacity(total);
    let mut norms = Vec::new();
    while state.step < total {
        state.step_evolution(&gates)?;
        times.push(state.step as f64 * config.dt);
        populations.push(state.populations()?);
        if state.step % config.norm_every == 0 || state.step == total {
            norms.push((state.step, state.chain.norm_sq()));
        }
    }
    let norm_drift = norms.iter().map(|(_, n)| (n - 1.0).abs()).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if norm_drift > tolerances::MPS_NORM_DRIFT {
        warnings.push(format!("norm drift {norm_drift:.2e} exceeds {:.0e}", tolerances::MPS_NORM_DRIFT));
    }
    let probe: Vec<f64> = populations.iter().map(|p| p[1]).collect();
    let tail = &probe[probe.len() - probe.len() / 4..];
    match stationarity_drift(tail, config.dt, STATIONARITY_WINDOW) {
        Some(drift) if drift > STATIONARITY_THRESHOLD => {
            warnings.push(format!("probe population drifts by {:.2}% over the last quarter of the run", 100.0 * drift))
        }
        None => warnings.push("run too short for the stationarity test".into()),
        _ => {}
    }
    if state.output_steps() < config.window_bins() {
        warnings.push(format!("only {} of {} correlation bins available", state.output_steps(), config.window_bins()));
    }
    let discarded_total = state.discarded_total();
    let worst_split = state.truncation_log.iter().map(|l| l.worst_split).fold(0.0, f64::max);
    let max_bond = state.truncation_log.iter().map(|l| l.max_bond).max().unwrap_or(1);
    Ok(MpsRun {
        layout: layout.clone(),
        config: config.clone(),
        times,
        populations,
        norms,
        norm_drift,
        discarded_total,
        worst_split,
        max_bond,
        warnings,
        state,
    })
}

/// Default evolution time before the correlation window opens.
pub const SETTLING_TIME: f64 = 60.0;

/// Window length (units 1/gamma_p) of the drift test.
pub const STATIONARITY_WINDOW: f64 = 5.0;
pub const STATIONARITY_THRESHOLD: f64 = 0.01;

/// Real part of the upper polariton pole at mirror-to-mirror delay
/// `2 tau_m`, continued from the Markov limit.
pub fn effective_coupling(tau_m: f64, layout: &QubitLayout) -> Result<f64, MpsError> {
    let layout = layout.validated().map_err(|e| MpsError::Config(e.to_string()))?;
    let mut p = LinearResponseParams::cavity(layout.gamma_m);
    p.gamma_p = layout.gamma_p;
    p.phi_mm = layout.phi_m1_m2;
    let tau = 2.0 * tau_m;
    let n = ((tau / 0.005).ceil() as usize).max(1);
    let grid: Vec<f64> = (0..=n).map(|k| tau * k as f64 / n as f64).collect();
    let poles = polariton_poles(&p, &grid)?;
    let last = poles.last().ok_or(MpsError::PoleGap(tau))?;
    last[0].value.map(|z| z.re).ok_or(MpsError::PoleGap(tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_fractional_delay() {
        let c = MpsRunConfig::new(0.03).with_dt(0.02);
        assert!(matches!(c.validate(), Err(MpsError::Config(_))));
        let c = MpsRunConfig::new(0.05).with_dt(0.025);
        assert!(c.validate().is_ok());
        assert_eq!(c.delay_bins(), 2);
        assert_eq!(c.window_bins(), 1600);
    }

    #[test]
    fn config_rejects_short_window() {
        let mut c = MpsRunConfig::new(0.05);
        c.window = Some(10);
        assert!(c.validate().is_err());
    }

    #[test]
    fn initial_state_is_vacuum_product() {
        let c = MpsRunConfig::new(0.05).with_steps(10);
        let mut s = build_initial_state(&c).unwrap();
        assert_eq!(s.chain.norm_sq(), 1.0);
        assert!(s.bond_dims().iter().all(|&b| b == 1));
        assert_eq!(s.populations().unwrap(), [0.0; 3]);
        let region = s.loop_region();
        let p = photon_probabilities(&mut s, region).unwrap();
        assert_eq!(p.p0, 1.0);
    }

    #[test]
    fn undriven_vacuum_stays_vacuum() {
        let layout = QubitLayout::cavity(10.0);
        let c = MpsRunConfig::new(0.05).with_steps(40).with_t_cor(0.5);
        let mut r = run(&layout, &c).unwrap();
        assert!(r.populations.iter().flatten().all(|&p| p.abs() < 1e-14));
        assert!(r.max_bond == 1);
        let p = photon_probabilities(&mut r.state, 0..8).unwrap();
        assert!((p.p0 - 1.0).abs() < 1e-14);
        let corr = output_correlations(&mut r.state, 10).unwrap();
        assert!(corr.connected.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn decoupled_mirrors_follow_optical_bloch() {
        // gamma_m = 0: driven probe decays at gamma_p into the waveguide
        let omega = 1.0;
        let layout = QubitLayout { gamma_m: 0.0, ..QubitLayout::cavity(0.0) }.with_drive(omega, 0.0);
        let dt = 0.01;
        let c = MpsRunConfig::new(0.02).with_dt(dt).with_steps(600).with_t_cor(0.1);
        let r = run(&layout, &c).unwrap();
        let bloch = bloch_excited(omega, 1.0, &r.times);
        let worst = r.probe_population().iter().zip(&bloch).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 2.0 * dt, "deviation {worst}");
        assert!(r.norm_drift < 1e-10);
    }

    /// Excited population of a resonantly driven qubit with `H = omega sigma_x`.
    fn bloch_excited(omega: f64, gamma: f64, times: &[f64]) -> Vec<f64> {
        // u' = -gamma/2 u ; v' = -gamma/2 v - 2 omega w ; w' = 2 omega v - gamma (w + 1)
        let h: f64 = 1e-3;
        let f = |y: [f64; 2]| [-gamma / 2.0 * y[0] - 2.0 * omega * y[1], 2.0 * omega * y[0] - gamma * (y[1] + 1.0)];
        let mut y = [0.0, -1.0];
        let mut t = 0.0;
        let mut out = Vec::new();
        for &target in times {
            while t < target - 1e-12 {
                let step = h.min(target - t);
                let k1 = f(y);
                let k2 = f([y[0] + step / 2.0 * k1[0], y[1] + step / 2.0 * k1[1]]);
                let k3 = f([y[0] + step / 2.0 * k2[0], y[1] + step / 2.0 * k2[1]]);
                let k4 = f([y[0] + step * k3[0], y[1] + step * k3[1]]);
                for i in 0..2 {
                    y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                t += step;
            }
            out.push((1.0 + y[1]) / 2.0);
        }
        out
    }

    #[test]
    fn effective_coupling_markov_limit() {
        let layout = QubitLayout::cavity(10.0);
        let g = crate::rates::coupling_g(10.0, 1.0);
        let g0 = effective_coupling(1e-6, &layout).unwrap();
        assert!((g0 / g - 1.0).abs() < 2e-2);
        let g1 = effective_coupling(0.1, &layout).unwrap();
        assert!(g1 < g0);
    }
}
