//! Probability of zero, one and two photons inside the mirror loop as the
//! mirror-mirror delay grows.
//!
//! `cargo run --release --example cavity_photon_statistics -- [t_end] [chi_max]`

use std::time::Instant;

use wgqed::mps::{photon_probabilities, run, MpsRunConfig};
use wgqed::rates::QubitLayout;

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let t_end = args.first().copied().unwrap_or(10.0);
    let chi = args.get(1).map_or(64, |&c| c as usize);
    let dt = 0.025;
    let layout = QubitLayout::cavity(10.0).with_drive(0.5, 0.0);
    println!("tau_gamma_p,P0,P1,P2");
    for tau in [0.1, 0.2, 0.3] {
        let mut c = MpsRunConfig::new(tau / 2.0).with_dt(dt).with_steps((t_end / dt).round() as usize).with_t_cor(dt);
        c.chi_max = chi;
        let t0 = Instant::now();
        let mut r = run(&layout, &c).expect("mps run");
        let region = r.state.loop_region();
        let p = photon_probabilities(&mut r.state, region).expect("probabilities");
        println!("{tau},{:.6e},{:.6e},{:.6e}", p.p0, p.p1, p.p2);
        eprintln!("  {:.1?}, max bond {}", t0.elapsed(), r.max_bond);
    }
}
