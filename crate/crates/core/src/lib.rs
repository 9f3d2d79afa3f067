//! Sharp bounds and extreme-point certification for generalized moment
//! problems over nonnegative measures.
//!
//! * [`measure`]: finite spaces, measures, truncation, atoms, atomic partitions.
//! * [`extremality`]: deciding and witnessing extremality in `{μ : ∫ f dμ = c}`,
//!   and brute-force enumeration of all extreme points.
//! * [`bound`]: grid LP bounds on `∫ g dμ`, atom refinement, dual certificates.
//! * [`expr`] and [`problem`]: expressions and the JSON problem format.
//!
//! Data-parallel loops honour [`Execution`]; the `parallel` feature (on by
//! default) backs them with rayon.

// `!(a <= b)` is used on purpose so NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod cli;
pub mod error;
pub mod exec;
pub mod expr;
pub mod extremality;
pub mod linalg;
pub mod measure;
pub mod problem;
pub mod simplex;

pub use bound::{
    moment_bound, refine_atoms, solve_lp, verify_dual, BoundResult, DualCertificate, DualReport, MomentTarget,
    Sense, Status,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use expr::{collect_breakpoints, eval_expr, parse_expr, Expr};
pub use extremality::{certify_extreme, enumerate_extreme, perturbation_witness, ExtremalityCertificate, PerturbationWitness};
pub use measure::{
    atom_value, atomic_partition, integrate, is_atom, moment_vector, support, truncate, AtomicPartition,
    DiscreteMeasure, FiniteSpace, Measure, MomentTable, SubsetMask,
};
pub use problem::{load_problem, MomentProblem};
