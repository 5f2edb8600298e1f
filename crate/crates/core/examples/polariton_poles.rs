//! Upper and lower polariton poles of the weak-excitation cavity as the
//! mirror-to-mirror delay grows.

use wgqed::linresp::{polariton_poles, LinearResponseParams};

fn main() {
    let p = LinearResponseParams::cavity(10.0);
    let g = p.g();
    let taus: Vec<f64> = (0..=50).map(|k| k as f64 * 0.01).collect();
    let poles = polariton_poles(&p, &taus).expect("pole continuation");
    println!("tau_gamma_p,re_upper/g,im_upper/g,re_lower/g,im_lower/g");
    for pair in &poles {
        let [up, lo] = pair;
        let f = |x: Option<f64>| x.map_or("nan".to_string(), |v| format!("{v:.6}"));
        println!(
            "{:.2},{},{},{},{}",
            up.tau,
            f(up.re_over_g(g)),
            f(up.im_over_g(g)),
            f(lo.re_over_g(g)),
            f(lo.im_over_g(g))
        );
    }
}
