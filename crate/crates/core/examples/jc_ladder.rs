//! Driven Jaynes-Cummings cavity spectrum for a good and a bad cavity, with
//! the Fock cutoff raised until the spectrum is stable.

use std::time::Instant;

use wgqed::jc::{jc_spectrum, JCParams};
use wgqed::lindblad::uniform_grid;
use wgqed::rates::coupling_g;

fn main() {
    let g = coupling_g(10.0, 1.0);
    let grid = uniform_grid(-6.0, 6.0, 2401);
    for (kappa, omega) in [(0.1, 1.0), (1.0, 1.0)] {
        let t0 = Instant::now();
        let r = jc_spectrum(&JCParams::resonant(g, kappa, omega), &grid).expect("jc spectrum");
        println!(
            "kappa={kappa} omega={omega}: n_fock={} deviation={:.1e} t_max={:.0} ({:.1?})",
            r.n_fock,
            r.deviation,
            r.t_max,
            t0.elapsed()
        );
        for p in r.spectrum.peaks(0.0).iter().filter(|p| p.omega >= 0.0) {
            println!("  peak at {:.4} g, height {:.3e}", p.omega / g, p.value);
        }
    }
}
