//! Phase-dependent collective decay and exchange couplings for the
//! mirror-probe-mirror register, and the driven effective Hamiltonian.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{embed_lowering, HilbertSpace, OperatorMatrix};

/// Site indices in the register, left to right along the waveguide.
pub const MIRROR_1: usize = 0;
pub const PROBE: usize = 1;
pub const MIRROR_2: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("gamma_m must be >= 0, got {0}")]
    NegativeMirrorRate(f64),
    #[error("gamma_p must be > 0, got {0}")]
    NonPositiveProbeRate(f64),
    #[error("non-finite layout parameter {0}")]
    NonFinite(&'static str),
    #[error("tau_m must be >= 0, got {0}")]
    NegativeDelay(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitLayout {
    pub gamma_m: f64,
    #[serde(default = "one")]
    pub gamma_p: f64,
    #[serde(default = "half_pi")]
    pub phi_m1_p: f64,
    #[serde(default = "half_pi")]
    pub phi_m2_p: f64,
    #[serde(default = "pi")]
    pub phi_m1_m2: f64,
    #[serde(default)]
    pub omega: f64,
    /// Qubit minus laser frequency.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub tau_m: f64,
    /// Forces `phi_m2_p = phi_m1_p` and `phi_m1_m2 = 2 phi_m1_p`.
    #[serde(default)]
    pub symmetric: bool,
}

fn one() -> f64 {
    1.0
}
fn half_pi() -> f64 {
    FRAC_PI_2
}
fn pi() -> f64 {
    PI
}

pub fn reduce_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl QubitLayout {
    /// Mirrors at a quarter wavelength from the probe, half a wavelength apart.
    pub fn cavity(gamma_m: f64) -> Self {
        Self {
            gamma_m,
            gamma_p: 1.0,
            phi_m1_p: FRAC_PI_2,
            phi_m2_p: FRAC_PI_2,
            phi_m1_m2: PI,
            omega: 0.0,
            delta: 0.0,
            tau_m: 0.0,
            symmetric: false,
        }
    }

    pub fn with_drive(mut self, omega: f64, delta: f64) -> Self {
        self.omega = omega;
        self.delta = delta;
        self
    }

    pub fn with_delay(mut self, tau_m: f64) -> Self {
        self.tau_m = tau_m;
        self
    }

    /// Checks ranges and returns a copy with phases reduced to `[0, 2pi)`.
    pub fn validated(&self) -> Result<Self, RateError> {
        let fields = [
            ("gamma_m", self.gamma_m),
            ("gamma_p", self.gamma_p),
            ("phi_m1_p", self.phi_m1_p),
            ("phi_m2_p", self.phi_m2_p),
            ("phi_m1_m2", self.phi_m1_m2),
            ("omega", self.omega),
            ("delta", self.delta),
            ("tau_m", self.tau_m),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(RateError::NonFinite(name));
            }
        }
        if self.gamma_m < 0.0 {
            return Err(RateError::NegativeMirrorRate(self.gamma_m));
        }
        if self.gamma_p <= 0.0 {
            return Err(RateError::NonPositiveProbeRate(self.gamma_p));
        }
        if self.tau_m < 0.0 {
            return Err(RateError::NegativeDelay(self.tau_m));
        }
        let mut out = self.clone();
        if out.symmetric {
            out.phi_m2_p = out.phi_m1_p;
            out.phi_m1_m2 = 2.0 * out.phi_m1_p;
        }
        out.phi_m1_p = reduce_phase(out.phi_m1_p);
        out.phi_m2_p = reduce_phase(out.phi_m2_p);
        out.phi_m1_m2 = reduce_phase(out.phi_m1_m2);
        Ok(out)
    }

    pub fn gammas(&self) -> [f64; 3] {
        [self.gamma_m, self.gamma_p, self.gamma_m]
    }

    /// Layout with the two mirrors exchanged.
    pub fn mirrored(&self) -> Self {
        let mut m = self.clone();
        std::mem::swap(&mut m.phi_m1_p, &mut m.phi_m2_p);
        m
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        (reduce_phase(self.phi_m1_p) - reduce_phase(self.phi_m2_p)).abs() < 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrices {
    pub gamma: Array2<f64>,
    pub delta: Array2<f64>,
}

pub fn coupling_g(gamma_m: f64, gamma_p: f64) -> f64 {
    (2.0 * gamma_m * gamma_p).sqrt() / 2.0
}

pub fn build_rate_matrices(layout: &QubitLayout) -> Result<RateMatrices, RateError> {
    let l = layout.validated()?;
    let mp = (l.gamma_m * l.gamma_p).sqrt();
    let pairs = [
        (MIRROR_1, PROBE, mp, l.phi_m1_p),
        (MIRROR_1, MIRROR_2, l.gamma_m, l.phi_m1_m2),
        (MIRROR_2, PROBE, mp, l.phi_m2_p),
    ];
    let mut gamma = Array2::zeros((3, 3));
    let mut delta = Array2::zeros((3, 3));
    for (n, &g) in l.gammas().iter().enumerate() {
        gamma[[n, n]] = g;
    }
    for (a, b, amp, phi) in pairs {
        gamma[[a, b]] = amp * phi.cos();
        gamma[[b, a]] = amp * phi.cos();
        delta[[a, b]] = amp * phi.sin();
        delta[[b, a]] = amp * phi.sin();
    }
    Ok(RateMatrices { gamma, delta })
}

/// Exchange terms `delta_nn'/2 s+_n s-_n'`, probe drive and common detuning.
pub fn effective_hamiltonian(layout: &QubitLayout, rates: &RateMatrices) -> OperatorMatrix {
    let space = HilbertSpace::qubits(3);
    let lower: Vec<OperatorMatrix> = (0..3).map(|n| embed_lowering(n, &space).unwrap()).collect();
    let raise: Vec<OperatorMatrix> = lower.iter().map(OperatorMatrix::dagger).collect();
    let mut h = OperatorMatrix::zeros(space);
    for a in 0..3 {
        let na = raise[a].dot(&lower[a]).unwrap();
        h.add_scaled(C64::new(layout.delta, 0.0), &na).unwrap();
        for b in 0..3 {
            if a != b && rates.delta[[a, b]] != 0.0 {
                let hop = raise[a].dot(&lower[b]).unwrap();
                h.add_scaled(C64::new(rates.delta[[a, b]] / 2.0, 0.0), &hop).unwrap();
            }
        }
    }
    let drive = lower[PROBE].add(&raise[PROBE]).unwrap();
    h.add_scaled(C64::new(layout.omega, 0.0), &drive).unwrap();
    h
}
