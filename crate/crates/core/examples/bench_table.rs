//! A reduced three-method comparison table (4 seeds, cheap search budgets).
//! At these budgets the design search is too coarse for the ordering seen
//! with the default budgets; `qoed bench` runs the full comparison.

use qoed::bench;
use qoed::config::ExperimentConfig;

fn main() -> qoed::Result<()> {
    let cfg = ExperimentConfig::parse(
        "seeds = 0..4\n\
         max_rounds = 2\n\
         design.samples = 256\n\
         estimation.samples = 512\n\
         estimation.rollouts = 4\n",
    )?;
    let out = bench::cmd_bench(&cfg)?;
    print!("{}", out.table.render());
    print!("{}", out.table.to_csv()?);
    Ok(())
}
