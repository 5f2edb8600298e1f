//! Per-qubit step propagators and their lift onto chain sites.

use ndarray::Array2;

use super::MpsError;
use crate::hilbert::eigh_hermitian;
use crate::rates::QubitLayout;
use crate::C64;

/// Truncated annihilation operator on a bin with `d` levels.
pub fn bin_lowering(d: usize) -> Array2<C64> {
    let mut b = Array2::zeros((d, d));
    for n in 1..d {
        b[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    b
}

/// Noise increments `dB = sqrt(dt) b` for one direction of one bin.
#[derive(Debug, Clone)]
pub struct NoiseIncrement {
    pub dt: f64,
    pub lowering: Array2<C64>,
}

impl NoiseIncrement {
    pub fn new(dt: f64, d_bin: usize) -> Self {
        Self { dt, lowering: bin_lowering(d_bin).mapv(|z| z * dt.sqrt()) }
    }

    pub fn raising(&self) -> Array2<C64> {
        self.lowering.t().mapv(|z| z.conj())
    }

    /// Largest entry of `[dB, dB^dagger] - dt I` below the top bin level.
    pub fn commutator_defect(&self) -> f64 {
        let up = self.raising();
        let c = self.lowering.dot(&up) - up.dot(&self.lowering);
        let d = c.nrows();
        let mut worst = 0.0f64;
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let want = if i == j { self.dt } else { 0.0 };
                worst = worst.max((c[[i, j]] - want).norm());
            }
        }
        worst
    }
}

/// `exp(M)` on (qubit, R mode, L mode) with
/// `M = -i h dt + sqrt(gamma dt / 2) sum_j (e^{-i theta_j} s- b_j^dag - e^{i theta_j} s+ b_j)`
/// and `h = delta s+ s- + omega (s+ + s-)`.
pub fn qubit_step(gamma: f64, theta: [f64; 2], delta: f64, omega: f64, dt: f64, d: usize) -> Result<Array2<C64>, MpsError> {
    let n = 2 * d * d;
    let idx = |q: usize, r: usize, l: usize| (q * d + r) * d + l;
    let b = bin_lowering(d);
    // G = i M is Hermitian.
    let mut g = Array2::<C64>::zeros((n, n));
    let i = C64::new(0.0, 1.0);
    for r in 0..d {
        for l in 0..d {
            g[[idx(1, r, l), idx(1, r, l)]] += C64::new(delta * dt, 0.0);
            g[[idx(1, r, l), idx(0, r, l)]] += C64::new(omega * dt, 0.0);
            g[[idx(0, r, l), idx(1, r, l)]] += C64::new(omega * dt, 0.0);
        }
    }
    let amp = (gamma * dt / 2.0).sqrt();
    for (j, &th) in theta.iter().enumerate() {
        // s- b_j^dag: |0, n+1> <- |1, n>
        for r in 0..d {
            for l in 0..d {
                let (src, dst, mag) = if j == 0 {
                    if r + 1 >= d {
                        continue;
                    }
                    (idx(1, r, l), idx(0, r + 1, l), b[[r, r + 1]])
                } else {
                    if l + 1 >= d {
                        continue;
                    }
                    (idx(1, r, l), idx(0, r, l + 1), b[[l, l + 1]])
                };
                let m = C64::from_polar(amp, -th) * mag;
                g[[dst, src]] += i * m;
                g[[src, dst]] += (i * m).conj();
            }
        }
    }
    let (vals, vecs) = eigh_hermitian(&g)?;
    let phases = Array2::from_diag(&vals.mapv(|v| C64::from_polar(1.0, -v)));
    Ok(vecs.dot(&phases).dot(&vecs.t().mapv(|z| z.conj())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    /// Right-moving field bin.
    R,
    /// Left-moving field bin.
    L,
    /// The three-qubit system site.
    S,
}

/// Lifts a per-qubit propagator (ordering qubit, R, L) onto consecutive
/// chain sites. `fresh` names a mode absent from the input (vacuum).
pub fn lift(k: &Array2<C64>, qubit_bit: usize, d: usize, inputs: &[Leg], outputs: &[Leg], fresh: Option<Leg>) -> Array2<C64> {
    debug_assert!(fresh.is_none_or(|f| !inputs.contains(&f) && outputs.contains(&f)));
    let dim = |legs: &[Leg]| legs.iter().map(|l| if *l == Leg::S { 8 } else { d }).product::<usize>();
    let (d_in, d_out) = (dim(inputs), dim(outputs));
    let decode = |legs: &[Leg], mut x: usize| {
        let mut v = [0usize; 3];
        for leg in legs.iter().rev() {
            let n = if *leg == Leg::S { 8 } else { d };
            let slot = match leg {
                Leg::R => 0,
                Leg::L => 1,
                Leg::S => 2,
            };
            v[slot] = x % n;
            x /= n;
        }
        v
    };
    let kd = d;
    let mut out = Array2::zeros((d_out, d_in));
    for a in 0..d_in {
        let vi = decode(inputs, a);
        let qi = usize::from(vi[2] & qubit_bit != 0);
        let col = (qi * kd + vi[0]) * kd + vi[1];
        for b in 0..d_out {
            let vo = decode(outputs, b);
            if vo[2] & !qubit_bit != vi[2] & !qubit_bit {
                continue;
            }
            let qo = usize::from(vo[2] & qubit_bit != 0);
            out[[b, a]] = k[[(qo * kd + vo[0]) * kd + vo[1], col]];
        }
    }
    out
}

pub const MIRROR_1_BIT: usize = 4;
pub const PROBE_BIT: usize = 2;
pub const MIRROR_2_BIT: usize = 1;

/// Lifted gates for one time step.
#[derive(Debug, Clone)]
pub struct StepGates {
    /// Sites (L_final, S) -> (R_fresh, S, L_final).
    pub mirror_1: Array2<C64>,
    /// Sites (R_final, S) -> (L_fresh, S, R_final).
    pub mirror_2: Array2<C64>,
    /// Sites (R_mid, L_mid, S) -> same.
    pub probe: Array2<C64>,
}

impl StepGates {
    /// Drive acts on the probe only; the detuning on all three qubits.
    pub fn new(layout: &QubitLayout, dt: f64, d: usize) -> Result<Self, MpsError> {
        let l = layout.validated().map_err(|e| MpsError::Config(e.to_string()))?;
        let km1 = qubit_step(l.gamma_m, [l.phi_m1_m2, 0.0], l.delta, 0.0, dt, d)?;
        let kp = qubit_step(l.gamma_p, [l.phi_m2_p, l.phi_m1_p], l.delta, l.omega, dt, d)?;
        let km2 = qubit_step(l.gamma_m, [0.0, l.phi_m1_m2], l.delta, 0.0, dt, d)?;
        use Leg::*;
        Ok(Self {
            mirror_1: lift(&km1, MIRROR_1_BIT, d, &[L, S], &[R, S, L], Some(R)),
            mirror_2: lift(&km2, MIRROR_2_BIT, d, &[R, S], &[L, S, R], Some(L)),
            probe: lift(&kp, PROBE_BIT, d, &[R, L, S], &[R, L, S], None),
        })
    }
}
