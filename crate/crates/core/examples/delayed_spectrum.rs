//! Time-bin MPS with mirror-probe delay: output spectrum against the
//! Markovian master equation, frequencies in units of g.
//!
//! `cargo run --release --example delayed_spectrum -- [tau_m] [dt]`

use std::time::Instant;

use wgqed::lindblad::{uniform_grid, Normalization, RegisterModel, SpectrumSettings};
use wgqed::mps::{effective_coupling, output_correlations, output_spectrum, run, MpsRunConfig};
use wgqed::rates::QubitLayout;

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let tau_m = args.first().copied().unwrap_or(0.025);
    let dt = args.get(1).copied().unwrap_or(0.025);
    let layout = QubitLayout::cavity(10.0).with_drive(0.5, 0.0);
    let model = RegisterModel::new(&layout).expect("layout");
    let g = model.g();
    let grid = uniform_grid(-3.0 * g, 3.0 * g, 1201);

    let me = model.spectrum(&grid, &SpectrumSettings::new(model.max_substep())).expect("master equation");
    let fmt = |ps: &[wgqed::lindblad::Peak]| ps.iter().map(|p| format!("{:+.3}", p.omega / g)).collect::<Vec<_>>().join(" ");
    println!("master equation peaks / g: {}", fmt(&me.spectrum.prominent_peaks(0.05, 0.01)));

    let config = MpsRunConfig::new(tau_m).with_dt(dt);
    let t0 = Instant::now();
    let mut r = run(&layout, &config).expect("mps run");
    println!(
        "mps: {} steps in {:.1?}, max bond {}, discarded {:.1e}, norm drift {:.1e}",
        r.state.step,
        t0.elapsed(),
        r.max_bond,
        r.discarded_total,
        r.norm_drift
    );
    for w in &r.warnings {
        println!("  warning: {w}");
    }
    let corr = output_correlations(&mut r.state, config.window_bins()).expect("correlations");
    let s = output_spectrum(&corr, dt, &grid, Normalization::Max1);
    println!("mps peaks / g:             {}", fmt(&s.prominent_peaks(0.05, 0.01)));
    let g_eff = effective_coupling(tau_m, &layout).expect("poles");
    println!("g_eff / g at mirror-mirror delay {}: {:.4}", 2.0 * tau_m, g_eff / g);
}
