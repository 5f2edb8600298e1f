//! Weak-excitation solution for the probe between two reflecting qubits:
//! mirror reflection, delay-modified probe decay, scattered field and the
//! complex polariton poles followed continuously in the delay.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rates::coupling_g;
use crate::tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinRespError {
    #[error("round-trip denominator |1 - r^2 e^(2ikL)| = {0:e} is numerically zero")]
    NearDivergence(f64),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("delay grid must start at 0 and ascend")]
    BadGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearResponseParams {
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    pub gamma_m: f64,
    #[serde(default = "one")]
    pub gamma_p: f64,
    /// Mirror-to-mirror delay.
    #[serde(default)]
    pub tau: f64,
    /// Positional phase of the mirror reflection coefficient.
    #[serde(default)]
    pub phi: f64,
    /// Mirror-to-mirror propagation phase at `omega0`.
    #[serde(default = "pi")]
    pub phi_mm: f64,
}

fn default_omega0() -> f64 {
    1000.0
}
fn one() -> f64 {
    1.0
}
fn pi() -> f64 {
    PI
}

impl LinearResponseParams {
    pub fn cavity(gamma_m: f64) -> Self {
        Self { omega0: 1000.0, gamma_m, gamma_p: 1.0, tau: 0.0, phi: 0.0, phi_mm: PI }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), LinRespError> {
        if !(self.tau >= 0.0 && self.gamma_m >= 0.0 && self.gamma_p >= 0.0 && self.omega0 > 0.0) {
            return Err(LinRespError::Invalid(format!(
                "need tau, gamma_m, gamma_p >= 0 and omega0 > 0 (got tau={}, gamma_m={}, gamma_p={}, omega0={})",
                self.tau, self.gamma_m, self.gamma_p, self.omega0
            )));
        }
        Ok(())
    }

    pub fn g(&self) -> f64 {
        coupling_g(self.gamma_m, self.gamma_p)
    }

    /// `e^{ikL}` with a linear dispersion about `omega0`.
    pub fn round_trip(&self, omega: C64) -> C64 {
        (C64::new(0.0, self.phi_mm) + C64::i() * (omega - self.omega0) * self.tau).exp()
    }

    fn half_trip(&self, omega: C64) -> C64 {
        ((C64::new(0.0, self.phi_mm) + C64::i() * (omega - self.omega0) * self.tau) * 0.5).exp()
    }
}

/// `r1 = i w0 g e^{i phi} / (w0^2 - w^2 - i w0 g)` with `g = gamma_m`.
pub fn single_qubit_reflection(omega: C64, p: &LinearResponseParams) -> C64 {
    if p.gamma_m == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let num = C64::i() * p.omega0 * p.gamma_m * C64::from_polar(1.0, p.phi);
    num / (p.omega0 * p.omega0 - omega * omega - C64::i() * p.omega0 * p.gamma_m)
}

/// Probe decay including every mirror reflection, written out term by term.
pub fn modified_decay(omega: C64, p: &LinearResponseParams) -> Result<C64, LinRespError> {
    let r = single_qubit_reflection(omega, p);
    let e = p.round_trip(omega);
    let h = p.half_trip(omega);
    let den = C64::new(1.0, 0.0) - r * r * e * e;
    if den.norm() < 1e-12 {
        return Err(LinRespError::NearDivergence(den.norm()));
    }
    let bracket = C64::new(1.0, 0.0) + e * r + (h + h * e * r) * r * (h + r * h * e) / den;
    Ok(bracket * p.gamma_p)
}

/// The same quantity after summing the geometric series:
/// `gamma_p (1 + u) / (1 - u)` with `u = e^{ikL} r1`.
pub fn modified_decay_closed(omega: C64, p: &LinearResponseParams) -> C64 {
    let u = p.round_trip(omega) * single_qubit_reflection(omega, p);
    p.gamma_p * (1.0 + u) / (1.0 - u)
}

fn decay_and_derivative(omega: C64, p: &LinearResponseParams) -> (C64, C64) {
    let r = single_qubit_reflection(omega, p);
    let d = p.omega0 * p.omega0 - omega * omega - C64::i() * p.omega0 * p.gamma_m;
    let u = p.round_trip(omega) * r;
    let du = u * (C64::i() * p.tau + 2.0 * omega / d);
    let one = C64::new(1.0, 0.0);
    let gt = p.gamma_p * (one + u) / (one - u);
    let dgt = p.gamma_p * 2.0 * du / ((one - u) * (one - u));
    (gt, dgt)
}

/// `E_s = i w0 g~ / (w0^2 - w^2 - i w g~)`.
pub fn linear_field(omega: f64, p: &LinearResponseParams) -> Result<C64, LinRespError> {
    let w = C64::new(omega, 0.0);
    let gt = modified_decay(w, p)?;
    Ok(C64::i() * p.omega0 * gt / (p.omega0 * p.omega0 - w * w - C64::i() * w * gt))
}

/// `w0^2 - w^2 - i w g~(w)` and its derivative.
pub fn pole_function(omega: C64, p: &LinearResponseParams) -> (C64, C64) {
    let (gt, dgt) = decay_and_derivative(omega, p);
    let f = p.omega0 * p.omega0 - omega * omega - C64::i() * omega * gt;
    let df = -2.0 * omega - C64::i() * gt - C64::i() * omega * dgt;
    (f, df)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaritonPole {
    pub tau: f64,
    /// +1 for the upper polariton, -1 for the lower.
    pub branch: i8,
    /// Complex `w - w0`, or `None` where continuation failed.
    pub value: Option<C64>,
    pub residual: f64,
    pub iterations: usize,
}

impl PolaritonPole {
    pub fn re_over_g(&self, g: f64) -> Option<f64> {
        self.value.map(|v| v.re / g)
    }
    pub fn im_over_g(&self, g: f64) -> Option<f64> {
        self.value.map(|v| v.im / g)
    }
}

const MAX_NEWTON: usize = 200;

/// Damped Newton on the pole function; returns the root as `w - w0`.
pub fn newton_pole(seed: C64, p: &LinearResponseParams) -> Option<(C64, f64, usize)> {
    let scale = p.omega0 * p.omega0;
    let mut w = seed + p.omega0;
    let (mut f, mut df) = pole_function(w, p);
    for it in 0..MAX_NEWTON {
        if !f.re.is_finite() || !f.im.is_finite() {
            return None;
        }
        let step = f / df;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = w - step * lambda;
            let (ft, dft) = pole_function(trial, p);
            if ft.norm() < f.norm() || ft.norm() <= tolerances::POLE_RESIDUAL * scale * 1e-3 {
                w = trial;
                f = ft;
                df = dft;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if f.norm() <= tolerances::POLE_RESIDUAL * scale * 1e-2 || (accepted && (step * lambda).norm() < 1e-14 * p.omega0) {
            return (f.norm() <= tolerances::POLE_RESIDUAL * scale).then_some((w - p.omega0, f.norm() / scale, it + 1));
        }
        if !accepted {
            return (f.norm() <= tolerances::POLE_RESIDUAL * scale).then_some((w - p.omega0, f.norm() / scale, it + 1));
        }
    }
    None
}

/// Largest pole displacement accepted between neighbouring delays before the
/// delay step is subdivided, as a fraction of g.
const CONTINUATION_JUMP: f64 = 0.05;
const MAX_BISECTIONS: usize = 24;

fn continue_to(p: &LinearResponseParams, from_tau: f64, to_tau: f64, from: C64, g: f64) -> Option<(C64, f64, usize)> {
    let mut tau = from_tau;
    let mut root = from;
    let mut h = to_tau - from_tau;
    let mut prev: Option<(f64, C64)> = None;
    let mut total_it = 0;
    let mut depth = 0;
    let mut last_res = 0.0;
    while tau < to_tau - 1e-15 {
        let target = (tau + h).min(to_tau);
        let seed = match prev {
            Some((pt, pr)) if tau > pt => root + (root - pr) * ((target - tau) / (tau - pt)),
            _ => root,
        };
        match newton_pole(seed, &p.with_tau(target)) {
            Some((r, res, it)) if (r - root).norm() <= CONTINUATION_JUMP * g.max(1e-3) || depth >= MAX_BISECTIONS => {
                prev = Some((tau, root));
                tau = target;
                root = r;
                last_res = res;
                total_it += it;
                if depth > 0 && h < (to_tau - tau) {
                    h *= 2.0;
                    depth -= 1;
                }
            }
            _ => {
                if depth >= MAX_BISECTIONS {
                    return None;
                }
                h *= 0.5;
                depth += 1;
            }
        }
    }
    Some((root, last_res, total_it))
}

/// Re-seeds Newton across a bracket of real parts around the last root.
fn bracket_fallback(p: &LinearResponseParams, around: C64, g: f64) -> Option<(C64, f64, usize)> {
    let width = 0.5 * g.max(1e-3);
    for level in 1..=4 {
        let n = 1usize << level;
        for k in 0..=n {
            let x = around.re - width + 2.0 * width * k as f64 / n as f64;
            if let Some(r) = newton_pole(C64::new(x, around.im), p) {
                if (r.0 - around).norm() <= width {
                    return Some(r);
                }
            }
        }
    }
    None
}

/// Follows the upper and lower polariton poles along an ascending delay grid
/// starting at zero. Returns `[upper, lower]` per delay.
pub fn polariton_poles(p: &LinearResponseParams, tau_grid: &[f64]) -> Result<Vec<[PolaritonPole; 2]>, LinRespError> {
    p.validate()?;
    if tau_grid.first().is_some_and(|&t| t != 0.0) || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LinRespError::BadGrid);
    }
    let g = p.g();
    let mut out = Vec::with_capacity(tau_grid.len());
    let mut last: [Option<(f64, C64)>; 2] = [None, None];
    for &tau in tau_grid {
        let pt = p.with_tau(tau);
        let mut pair = [PolaritonPole { tau, branch: 1, value: None, residual: f64::NAN, iterations: 0 }; 2];
        for (b, sign) in [(0usize, 1.0f64), (1, -1.0)] {
            pair[b].branch = sign as i8;
            let found = match last[b] {
                None => newton_pole(C64::new(sign * g, -p.gamma_p / 4.0), &pt),
                Some((t0, r0)) => continue_to(p, t0, tau, r0, g).or_else(|| bracket_fallback(&pt, r0, g)),
            };
            if let Some((r, res, it)) = found {
                pair[b].value = Some(r);
                pair[b].residual = res;
                pair[b].iterations = it;
                last[b] = Some((tau, r));
            }
        }
        out.push(pair);
    }
    Ok(out)
}
