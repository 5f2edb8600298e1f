//! Stops an MPS run, writes it to disk and resumes it to a longer horizon.

use wgqed::mps::{checkpoint, resume, run, MpsRunConfig};
use wgqed::rates::QubitLayout;

fn main() {
    let layout = QubitLayout::cavity(10.0).with_drive(0.5, 0.0);
    let short = MpsRunConfig::new(0.025).with_steps(200).with_t_cor(1.0);
    let first = run(&layout, &short).expect("first leg");
    let path = std::env::temp_dir().join("wgqed_example.mps");
    checkpoint::save(&path, &first.state).expect("save");
    println!("saved step {} to {}", first.state.step, path.display());

    let long = short.clone().with_steps(400);
    let state = checkpoint::load(&path).expect("load");
    let second = resume(&layout, &long, state).expect("second leg");
    let p = second.populations.last().expect("populations");
    println!("resumed to step {}: populations m1 {:.4} p {:.4} m2 {:.4}", second.state.step, p[0], p[1], p[2]);
    let _ = std::fs::remove_file(&path);
}
