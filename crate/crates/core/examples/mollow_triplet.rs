//! A single driven qubit (mirrors decoupled): resonance fluorescence with
//! sidebands at +-2 Omega, against the optical Bloch steady state.

use wgqed::lindblad::{uniform_grid, RegisterModel, SpectrumSettings};
use wgqed::rates::QubitLayout;

fn main() {
    let omega = 2.5;
    let layout = QubitLayout::cavity(0.0).with_drive(omega, 0.0);
    let model = RegisterModel::new(&layout).expect("layout");
    let grid = uniform_grid(-10.0, 10.0, 2001);
    let out = model.spectrum(&grid, &SpectrumSettings::new(model.max_substep())).expect("spectrum");
    let rho = out.steady.rho.matrix();
    let p_exc = rho[[1, 1]].re;
    let bloch = 4.0 * omega * omega / (1.0 + 8.0 * omega * omega);
    println!("excited population {p_exc:.10} (optical Bloch {bloch:.10})");
    for p in out.spectrum.peaks(0.05) {
        println!("  line at {:+.3} gamma_p, height {:.3}", p.omega, p.value);
    }
    println!("expected sidebands at +-{:.3}", 2.0 * omega);
}
