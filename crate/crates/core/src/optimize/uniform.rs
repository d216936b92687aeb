use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate_batch, Method, Objective, OptimizeError, Trace};
use crate::launch::{Bounds, LaunchConfig};

pub(crate) fn uniform_config(bounds: &Bounds, rng: &mut impl Rng) -> LaunchConfig {
    LaunchConfig::new(
        rng.gen_range(-bounds.x_max..=bounds.x_max),
        rng.gen_range(-bounds.y_max..=bounds.y_max),
        rng.gen_range(0.0..=bounds.t_max),
    )
}

/// `budget` i.i.d. uniform samples over the box.
pub fn uniform_run(objective: &dyn Objective, bounds: &Bounds, budget: usize, seed: u64) -> Result<Trace, OptimizeError> {
    bounds.validate().map_err(OptimizeError::Usage)?;
    if budget < 1 {
        return Err(OptimizeError::Usage("uniform sampling needs a budget of at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<LaunchConfig> = (0..budget).map(|_| uniform_config(bounds, &mut rng)).collect();
    let mut trace = Trace::new(Method::Uniform);
    evaluate_batch(objective, &configs, true, &mut trace);
    Ok(trace)
}
