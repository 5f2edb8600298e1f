//! Numerical thresholds shared across modules. Recorded verbatim in run
//! manifests.

use serde::Serialize;

/// Entrywise `|M - M^dagger|` bound for Hermitian operators.
pub const HERMITIAN: f64 = 1e-12;
/// Trace and Hermiticity bound for density matrices.
pub const DENSITY: f64 = crate::hilbert::DENSITY_TOL;
/// Smallest admissible density-matrix eigenvalue.
pub const POSITIVITY: f64 = crate::hilbert::POSITIVITY_TOL;
/// Second-smallest singular value of the Liouvillian must exceed this.
pub const NULL_SPACE_GAP: f64 = 1e-10;
/// Eigenvalues of the rate matrix below `-NEGATIVE_RATE * max(1, |Gamma|)` are rejected.
pub const NEGATIVE_RATE: f64 = 1e-12;
/// Correlation tail relative to its value at zero delay.
pub const CORRELATION_TAIL: f64 = 1e-6;
/// Superoperator size up to which the steady state is taken from an SVD.
pub const SVD_STEADY_STATE_MAX_DIM: usize = 1024;
/// Superoperator size up to which a dense matrix is assembled at all.
pub const DENSE_LIOUVILLIAN_MAX_DIM: usize = 4096;
/// Residual `max|L(rho)|` accepted by the time-stepping steady-state solver.
pub const EVOLVED_STEADY_STATE_RESIDUAL: f64 = 1e-12;
/// Spectral stability required when the Fock cutoff is raised by ten.
pub const FOCK_CONVERGENCE: f64 = 1e-6;
/// Relative tolerance for degenerate eigenvalues when fixing dressed labels.
pub const DEGENERACY_REL: f64 = 1e-9;
/// Degenerate transition lines are grouped within this fraction of g.
pub const LINE_GROUPING_REL_G: f64 = 1e-6;
/// Pole residual `|f(w)| / w0^2` accepted by the Newton solver.
pub const POLE_RESIDUAL: f64 = 1e-10;
/// MPS norm drift budget per run.
pub const MPS_NORM_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceRecord {
    pub hermitian: f64,
    pub density: f64,
    pub positivity: f64,
    pub null_space_gap: f64,
    pub negative_rate: f64,
    pub correlation_tail: f64,
    pub evolved_steady_state_residual: f64,
    pub fock_convergence: f64,
    pub degeneracy_rel: f64,
    pub line_grouping_rel_g: f64,
    pub pole_residual: f64,
    pub mps_norm_drift: f64,
}

pub fn record() -> ToleranceRecord {
    ToleranceRecord {
        hermitian: HERMITIAN,
        density: DENSITY,
        positivity: POSITIVITY,
        null_space_gap: NULL_SPACE_GAP,
        negative_rate: NEGATIVE_RATE,
        correlation_tail: CORRELATION_TAIL,
        evolved_steady_state_residual: EVOLVED_STEADY_STATE_RESIDUAL,
        fock_convergence: FOCK_CONVERGENCE,
        degeneracy_rel: DEGENERACY_REL,
        line_grouping_rel_g: LINE_GROUPING_REL_G,
        pole_residual: POLE_RESIDUAL,
        mps_norm_drift: MPS_NORM_DRIFT,
    }
}
