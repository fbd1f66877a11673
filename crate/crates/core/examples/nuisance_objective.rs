//! The three design objectives on the same information matrix, and the
//! regression view of the nuisance-adjusted one.

use qoed::fisher::FisherMatrix;
use qoed::objectives;

fn main() -> qoed::Result<()> {
    // critical coordinate 0, nuisance 1; strongly coupled
    for coupling in [0.0, 2.0, 3.9] {
        let f = FisherMatrix::from_row_slice(2, &[5.0, coupling, coupling, 4.0])?;
        let k = [0];
        let eps = objectives::default_eps(&f);
        let blocks = objectives::block_partition(&f, &k)?;
        println!(
            "coupling {coupling}: boed {:.3}  agnostic {:.3}  qoed {:.4}  regression residual {:.4}",
            objectives::boed_objective(&f),
            objectives::agnostic_objective(&f, &k)?,
            objectives::qoed_objective(&f, &k, eps)?,
            objectives::residual_regression_trace(&blocks, eps)?,
        );
    }
    Ok(())
}
