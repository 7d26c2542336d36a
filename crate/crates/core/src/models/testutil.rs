use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian design with a dense linear signal plus unit noise.
pub(crate) fn random_problem(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta: Vec<f64> = (0..p).map(|j| if j % 2 == 0 { 1.0 + j as f64 * 0.1 } else { -0.5 }).collect();
    let y = (0..n)
        .map(|i| 3.0 + (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + rng.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}
