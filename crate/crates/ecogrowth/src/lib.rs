//! Solver toolkit for optimal green policies in a spatially structured economy.
//!
//! The model couples two fields on a rectangular domain with no-flux boundaries:
//! capital `k`, which diffuses, grows through saturating production dampened by
//! local pollution, and is drained by depreciation and consumption; and
//! pollution `p`, which diffuses, decays, and is fed by production everywhere
//! through a nonlocal emission kernel. Three distributed controls act on the
//! economy: a consumption fraction `c` on the whole domain, plus a green-tax
//! fraction `tau` and an abatement effort `xi` supported on a control region.
//!
//! The welfare functional integrates consumption minus pollution damage, tax
//! drag, and abatement cost over space and time. Its gradient is evaluated by
//! solving a backward costate system, and a projected gradient ascent with
//! sign-rule search directions and a grid line search climbs the functional
//! over the feasible control set.
//!
//! Space is discretized with bilinear quadrilateral finite elements on a
//! uniform grid (exact stiffness integration, lumped mass), and time with a
//! semi-implicit scheme: diffusion implicit, reactions explicit. The module
//! layout follows the pipeline:
//!
//! * [`model`]: pointwise model functions and parameters,
//! * [`grid`]: mesh, nodal fields, quadrature, operators, nonlocal kernel,
//! * [`banded`]: symmetric banded storage and Cholesky factorization,
//! * [`dynamics`]: forward state, backward costate, and sensitivity solvers,
//! * [`objective`]: welfare evaluation, gradient machinery, the ascent loop,
//! * [`scenario`], [`io`], [`cli`]: presets, config files, exports, driver.

pub mod banded;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod objective;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by presets, file formats, and the CLI.
pub type Real = f64;

/// Double-precision aliases of the generic core types.
pub type GridF64 = grid::Grid<Real>;
/// Nodal field over a [`GridF64`].
pub type FieldF64 = grid::Field<Real>;
/// Time-indexed sequence of [`FieldF64`] values.
pub type TrajectoryF64 = dynamics::Trajectory<Real>;
/// Model parameters in double precision.
pub type ModelParamsF64 = model::ModelParams<Real>;
/// Control-region geometry in double precision.
pub type RegionShapeF64 = model::RegionShape<Real>;
/// Feasible control triple in double precision.
pub type ControlSetF64 = dynamics::ControlSet<Real>;
/// Search direction triple in double precision.
pub type ControlDirectionF64 = dynamics::ControlDirection<Real>;
/// Assembled operators and factorizations in double precision.
pub type SystemF64 = dynamics::System<Real>;
/// Optimizer knobs in double precision.
pub type OptimizerConfigF64 = objective::OptimizerConfig<Real>;
/// Welfare terms in double precision.
pub type ObjectiveBreakdownF64 = objective::ObjectiveBreakdown<Real>;
/// Ascent outcome in double precision.
pub type OptimizationResultF64 = objective::OptimizationResult<Real>;
