//! Variable metric proximal gradient methods with diagonal Barzilai-Borwein
//! metrics, closed-form scaled proximal operators, synthetic benchmark
//! problems and a simulated consensus solver.
//!
//! ```
//! use vmpg::{problems::generate_qp, prox::Regularizer, solver::{solve, SolverConfig}, DenseVector};
//!
//! let qp = generate_qp(20, 100.0, 0).unwrap();
//! let f = qp.objective();
//! let res = solve(&f, &Regularizer::Nonnegative, &DenseVector::zeros(20), &SolverConfig::default()).unwrap();
//! assert!(res.solution.iter().all(|&x| x >= 0.0));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consensus;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod metric;
pub mod objective;
pub mod problems;
pub mod prox;
pub mod solver;
pub mod stepsize;

pub use error::{Error, Result};
pub use exec::Execution;
pub use linalg::{DenseMatrix, DenseVector};
pub use metric::{BlockDiagonalMetric, DiagonalMetric, Partition};
pub use objective::{ProxRegularizer, SmoothObjective};
