//! Undriven dressed ladder of the three-qubit register and the steady-state
//! populations once the probe is pumped.

use wgqed::dressed::{natural_dressed_states, DressedAnalysis};
use wgqed::rates::QubitLayout;

fn main() {
    let layout = QubitLayout::cavity(10.0);
    let basis = natural_dressed_states(&layout).expect("ladder");
    let g = wgqed::rates::coupling_g(layout.gamma_m, layout.gamma_p);
    println!("level  energy/g");
    for k in 0..basis.len() {
        println!("{:>5}  {:+.6}", basis.name(k), basis.eigenvalues[k] / g);
    }

    let driven = layout.with_drive(0.5, 0.0);
    let a = DressedAnalysis::for_layout(&driven).expect("steady state");
    println!("\npopulations at omega = 0.5 gamma_p");
    for k in 0..a.natural.len() {
        println!("{:>5}  {:.3e}", a.natural.name(k), a.natural_populations[k]);
    }
    println!("populated above 1e-3: {:?}", a.populated_natural(1e-3));
    println!("\n{} transition frequencies (units of g):", a.lines.groups.len());
    let f: Vec<String> = a.lines.frequencies().iter().map(|w| format!("{:+.3}", w / g)).collect();
    println!("{}", f.join(" "));
}
