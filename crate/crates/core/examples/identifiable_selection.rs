//! Split the spectrum into observable and weak directions, then pick
//! identifiable coordinates from the observable eigenvectors.

use qoed::fisher::{self, FisherMatrix};
use qoed::subspace;

fn main() -> qoed::Result<()> {
    // coordinates 0 and 1 are only excited together; 3 is barely excited
    let f = FisherMatrix::from_row_slice(
        4,
        &[
            50.0, 49.95, 5.0, 0.0, //
            49.95, 50.0, 5.0, 0.0, //
            5.0, 5.0, 20.0, 0.0, //
            0.0, 0.0, 0.0, 0.01,
        ],
    )?;
    let d = fisher::eigendecompose(&f);
    let split = subspace::split_observable(&d, 0.1, 0.01)?;
    println!("eigenvalues {:?}", d.eigenvalues.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>());
    println!("threshold {:.3}, observable {:?}, weak {:?}", split.threshold_used, split.observable, split.weak);

    for delta_cos in [0.99, 0.6] {
        let sel = subspace::select_identifiable(&split.basis, split.rank(), delta_cos, subspace::DEFAULT_EPS_LOGDET)?;
        println!(
            "delta_cos {delta_cos}: k = {:?}, gains {:?}, rejected {:?}",
            sel.sorted(),
            sel.gain_path.iter().map(|g| (g * 1e3).round() / 1e3).collect::<Vec<_>>(),
            sel.rejected
        );
    }
    Ok(())
}
