//! Recover the parameters of a linear system from one trajectory.

use nalgebra::DVector;
use qoed::dynamics::{self, DynamicsModel, LinearGaussian1D};
use qoed::estimation::{self, cem_estimate, CemConfig, ParamBelief};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qoed::Result<()> {
    let model = LinearGaussian1D::new(0.05);
    let truth = DVector::from_vec(vec![0.9, 0.2]);
    let actions: Vec<DVector<f64>> = (0..40).map(|t| DVector::from_element(1, (0.7 * t as f64).sin())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let traj = dynamics::simulate_trajectory(&model, &truth, &model.initial_state(), &actions, &mut rng)?;

    let prior = ParamBelief::diagonal(model.params().center(), &[0.75, 0.5])?;
    let est = cem_estimate(&model, &traj, &prior, &CemConfig::default(), &mut rng)?;
    println!("true {:?}  estimate [{:.4}, {:.4}]", truth.as_slice(), est.phi[0], est.phi[1]);
    println!("best objective per iteration {:?}", est.best_objective);

    let info = dynamics::trajectory_fim(&model, &traj, &est.phi)?;
    let post = estimation::belief_update(&prior, &info)?.with_mean(est.phi.clone());
    println!("belief trace {:.2e} -> {:.2e}", prior.trace(), post.trace());
    Ok(())
}
