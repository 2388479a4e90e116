//! Synthetic test problems, dataset ingestion and the smooth objectives
//! built from them.

mod csv_data;
mod objectives;
mod qp;
mod regression;

pub use csv_data::{load_csv, read_csv};
pub use objectives::{LeastSquares, Logistic, Quadratic};
pub use qp::{generate_qp, QPProblem};
pub use regression::{
    generate_regression, generate_regression_raw, precondition, Loss, Preconditioning, RawRegression,
    RegressionProblem, RegressionSpec,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::objective::SmoothObjective;

/// Identifier of the seeded generator, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.9, seed_from_u64)";

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Either kind of generated problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Qp(QPProblem),
    Regression(RegressionProblem),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Qp(p) => p.dim(),
            Problem::Regression(p) => p.dim(),
        }
    }
}

/// The smooth part `f` of a generated problem.
pub fn smooth_part(problem: &Problem) -> Box<dyn SmoothObjective> {
    match problem {
        Problem::Qp(p) => Box::new(p.objective()),
        Problem::Regression(p) => p.objective(),
    }
}
