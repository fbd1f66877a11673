//! A short exploration run on the coupled-nuisance system, printing the
//! per-round report.
//!
//! `cargo run --release --example exploration_loop -- qoed`

use qoed::config::ExperimentConfig;
use qoed::objectives::ObjectiveKind;
use qoed::bench;

fn main() -> qoed::Result<()> {
    let method: ObjectiveKind = std::env::args().nth(1).as_deref().unwrap_or("qoed").parse()?;
    let mut cfg = ExperimentConfig::default();
    cfg.exploration.design_search.samples_per_iter = 256;
    cfg.estimation.samples_per_iter = 512;
    let report = bench::run_one(&cfg, method, 0)?;
    for r in &report.rounds {
        println!(
            "round {}: φ̂ {:?}  tr Σ {:.3e}  bonus {:.1}  k {:?}  ρ {:?}  dyn rmse x100 {:.3}",
            r.round,
            r.phi_hat.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>(),
            r.belief_trace,
            r.bonus,
            r.selected,
            r.rho.map(|x| (x * 1e3).round() / 1e3),
            r.rmse_x100
        );
    }
    println!("{}", report.to_json());
    Ok(())
}
