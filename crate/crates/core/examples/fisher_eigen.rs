//! Estimate a Fisher matrix from score samples and read off its
//! eigendirections.

use nalgebra::{DMatrix, DVector};
use qoed::fisher::{self, ScoreSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> qoed::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // scores concentrated along (1, 1, 0) with a weak third axis
    let mix = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 2.0, -0.3, 0.0, 0.0, 0.0, 0.05]);
    let scores: Vec<ScoreSample> = (0..2000)
        .map(|_| {
            let z = DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
            ScoreSample::new(&mix * z)
        })
        .collect::<qoed::Result<_>>()?;

    let f = fisher::estimate_fim(&scores)?;
    let d = fisher::eigendecompose(&f);
    println!("F =");
    for r in f.matrix().row_iter() {
        println!("  {}", fmt(r.iter()));
    }
    for i in 0..d.dim() {
        let w = d.eigenvectors.column(i).into_owned();
        println!(
            "λ{} = {:8.4}  w = {}  wᵀFw = {:.4}",
            i + 1,
            d.eigenvalues[i],
            fmt(w.iter()),
            fisher::directional_information(&f, &w)?
        );
    }
    println!("tr F = {:.4}, CRLB trace = {:.4}", f.trace(), fisher::crlb_trace(&f, 1e-9)?);
    Ok(())
}

fn fmt<'a>(xs: impl Iterator<Item = &'a f64>) -> String {
    xs.map(|x| format!("{x:7.3}")).collect::<Vec<_>>().join(" ")
}
