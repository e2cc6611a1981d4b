//! Certified invariant densities of piecewise expanding interval maps.
//!
//! The pipeline discretizes the transfer operator (Ulam or hat functions),
//! computes an approximate fixed point in floating point, certifies that
//! powers of the discrete operator contract on zero-mean vectors, and turns
//! all of it into a rigorous bound on the distance to the true density.

pub mod bounds;
pub mod discretization;
pub mod eigen;
pub mod dynamics;
pub mod error;
pub mod interval;
pub mod norms;
pub mod observables;
pub mod pipeline;

pub use discretization::{
    assemble, pullback, scheme_constants, IntervalSparseMatrix, Partition, SchemeConstants,
    SchemeKind, WeakNorm,
};
pub use dynamics::{
    build_map, dfly_coefficients, distortion_bound, CATALOG, iterate, strong_norm_bound, Branch, BranchFn,
    LyCoefficients, LyVariant, MapDescriptor, PiecewiseMap, StrongSpace,
};
pub use error::{Error, Result};
pub use interval::{bound_range, interval_newton, ival_arith, Ival, IvalOp, RangeBound};
pub use bounds::{
    aggregate_bounds, apriori_norm_bounds, best_error_bound, coarse_to_fine, error_bound,
    extend_submultiplicative, refine_submultiplicative, rkh, tail_sum, CertifiedError,
    ErrorComponents, ErrorInputs, RkhTable,
};
pub use eigen::{approximate_fixed_point, residuals, ApproxFixedPoint, EigenOptions};
pub use norms::{
    gamma, norms_of_powers, operator_norm_bound, BoundSource, ComputedNorms, ErrorRecursion,
    NormBounds,
};
pub use observables::{lyapunov_enclosure, LyapunovEnclosure};
pub use pipeline::{one_grid, run, run_with_threads, two_grid, Grid, RunConfig, RunOutput, RunReport, Stage, Status};
