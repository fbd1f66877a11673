//! Two designs where scoring only the critical coordinate picks the design
//! with almost no total information.

use qoed::dynamics::{counterexample_family, CounterexampleDesign};
use qoed::objectives;

fn main() -> qoed::Result<()> {
    let (delta, big_m) = (0.1, 100.0);
    let fam = counterexample_family(delta, big_m)?;
    for (d, f) in &fam {
        println!(
            "{d:?}: tr F = {:6.1}, tr F_kk = {:.1}",
            f.trace(),
            objectives::agnostic_objective(f, &[0])?
        );
    }
    let a = &fam[&CounterexampleDesign::A];
    let b = &fam[&CounterexampleDesign::B];
    println!(
        "agnostic prefers A; it keeps {:.4} of the best trace (= (1 + δ)/(1 + M) = {:.4})",
        a.trace() / b.trace(),
        (1.0 + delta) / (1.0 + big_m)
    );
    Ok(())
}
