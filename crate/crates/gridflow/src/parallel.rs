//! Thread-pool evaluation of sweep points.

use gridflow_core::scenario::{Action, PointRunner, ScenarioReport};
use gridflow_core::Error;
use rayon::prelude::*;

/// Runs sweep points on a dedicated pool. Results keep the input order.
pub struct PoolRunner {
    pool: rayon::ThreadPool,
}

impl PoolRunner {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Self {
            pool: rayon::ThreadPoolBuilder::new().num_threads(threads).build()?,
        })
    }
}

impl PointRunner for PoolRunner {
    fn run(
        &self,
        points: &[Vec<Action>],
        eval: &(dyn Fn(&[Action]) -> Result<ScenarioReport, Error> + Sync),
    ) -> Vec<Result<ScenarioReport, Error>> {
        self.pool.install(|| points.par_iter().map(|p| eval(p)).collect())
    }
}
