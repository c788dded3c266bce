//! Randomized invariant suite over small subshifts and potentials.
//!
//! `cargo run --release --example invariants -- 100 42`

use mfspec::check::run_checks;

fn main() {
    let mut args = std::env::args().skip(1);
    let instances = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let report = run_checks(instances, seed);
    for p in &report.properties {
        println!("{:<24} {:>4} instances  {:>2} violations  worst {:+.2e}", p.name, p.instances, p.violations, p.worst);
        if let Some(e) = &p.example {
            println!("    {e}");
        }
    }
    std::process::exit(if report.passed() { 0 } else { 1 });
}
