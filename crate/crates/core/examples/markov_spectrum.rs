//! Master-equation emission spectrum of the pumped cavity, with the
//! dressed-state transition lines each peak belongs to.
//!
//! `cargo run --release --example markov_spectrum -- [gamma_m] [omega] [delta]`

use wgqed::dressed::DressedAnalysis;
use wgqed::lindblad::{uniform_grid, RegisterModel, SpectrumSettings};
use wgqed::rates::QubitLayout;

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let gamma_m = args.first().copied().unwrap_or(10.0);
    let omega = args.get(1).copied().unwrap_or(0.5);
    let delta = args.get(2).copied().unwrap_or(0.0);
    let layout = QubitLayout::cavity(gamma_m).with_drive(omega, delta);
    let model = RegisterModel::new(&layout).expect("layout");
    let g = model.g();
    let grid = uniform_grid(-3.0 * g, 3.0 * g, 1201);
    let out = model.spectrum(&grid, &SpectrumSettings::new(model.max_substep())).expect("spectrum");
    println!(
        "gamma_m={gamma_m} omega={omega} delta={delta}: g={g:.4}, steady state by {:?} (residual {:.1e})",
        out.steady.method, out.steady.residual
    );
    let lines = DressedAnalysis::for_layout(&layout).expect("dressed").lines;
    for p in out.spectrum.prominent_peaks(0.01, 0.01) {
        let near = lines.nearest(p.omega).unwrap_or(f64::NAN);
        println!("  peak {:+.4} g  height {:.3}  nearest line {:.2e} gamma_p away", p.omega / g, p.value, near);
    }
    for w in &out.spectrum.warnings {
        println!("  warning: {w}");
    }
}
