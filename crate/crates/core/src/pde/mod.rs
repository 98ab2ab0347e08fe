//! Grid solver for the surface flow `(e^h)_t = (α+β) Δh` of conformal
//! metrics `e^h w (dc1² + dc2²)`, chart maps and transfers, and residuals of
//! the flow equation in curvilinear coordinates.

pub mod chart;
pub mod residuals;
pub mod run;
pub mod state;
pub mod stepper;
pub mod transfer;

pub use chart::{from_cartesian, jacobian, to_cartesian};
pub use residuals::{
    elliptic_laplacians, polar_first_order_term, residual_elliptic, residual_liouville, residual_parabolic, residual_polar,
    residual_polar_full, separable_residual, solitonic_residual, SeparableKind, SeparationMode, SolitonKind,
};
pub use run::{
    read_snapshot_csv, run_flow, write_probe_csv, write_snapshot_csv, write_snapshot_series, Probe, ProbeRow, RunAbort, Trajectory,
    CURVATURE_STEP_LIMIT,
};
pub use state::{Boundary, BoundaryFn, Chart, ConformalGridState, DirichletData, MIN_NODES};
pub use stepper::{max_stable_dt, step, step_cartesian, Scheme, SolverConfig, BLOW_UP};
pub use transfer::{chart_transfer, Interpolation, TargetGrid};
