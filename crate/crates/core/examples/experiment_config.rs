//! Drives the experiment runner from code: parse a config, sweep the pump
//! and read back the combined peak table.

use wgqed::cli::{run_to_dir, ExperimentConfig};

const CONFIG: &str = r#"
model = "sweep"
[layout]
gamma_m = 10.0
[grid]
lo = -3.0
hi = 3.0
points = 601
units = "g"
[sweep]
model = "spectrum-me"
axis = "layout.omega"
values = [0.25, 0.5, 1.0]
"#;

fn main() {
    let cfg = ExperimentConfig::parse(CONFIG).expect("config");
    let dir = std::env::temp_dir().join("wgqed_example_sweep");
    println!("{}", run_to_dir(&cfg, &dir, None).expect("sweep"));
    let peaks = std::fs::read_to_string(dir.join("combined_peaks.csv")).expect("peaks");
    print!("{peaks}");
}
