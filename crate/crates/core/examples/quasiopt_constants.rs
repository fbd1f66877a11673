//! η, β and the guarantee factor ρ for a family of designs.

use qoed::fisher::FisherMatrix;
use qoed::objectives::{self, QuasiOptConstants};

fn main() -> qoed::Result<()> {
    let family = [
        FisherMatrix::from_row_slice(3, &[9.0, 1.0, 0.5, 1.0, 2.0, 0.2, 0.5, 0.2, 1.0])?,
        FisherMatrix::from_row_slice(3, &[6.0, 2.0, 0.0, 2.0, 4.0, 1.0, 0.0, 1.0, 3.0])?,
        FisherMatrix::from_row_slice(3, &[12.0, 0.5, 3.0, 0.5, 1.0, 0.0, 3.0, 0.0, 2.5])?,
    ];
    let k = [0];
    let mut constants = Vec::new();
    for (i, f) in family.iter().enumerate() {
        let c = objectives::quasiopt_constants(f, &k)?;
        let q = objectives::qoed_objective(f, &k, objectives::default_eps(f))?;
        println!("design {i}: tr F {:6.2}  qoed {q:6.3}  η {:.3}  β {:.3}  ρ {:.3}", f.trace(), c.eta, c.beta, c.rho);
        constants.push(c);
    }
    let worst = QuasiOptConstants::worst_case(constants).expect("nonempty family");
    println!("family: η {:.3}, β {:.3} -> the qoed pick keeps at least {:.1}% of the best trace", worst.eta, worst.beta, 100.0 * worst.rho);

    for (eta, beta) in [(0.0011, 0.0008), (0.0012, 0.2784), (0.0162, 0.1421)] {
        println!("η {eta}, β {beta}: ρ = {:.4}", objectives::quasiopt_factor(eta, beta));
    }
    Ok(())
}
