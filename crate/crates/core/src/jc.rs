//! Driven dissipative Jaynes-Cummings model: one qubit, one lossy cavity mode
//! and a coherent drive on the qubit. Serves as the reference ladder for the
//! three-qubit cavity.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{embed_local, sigma_minus, HilbertError, HilbertSpace, OperatorMatrix};
use crate::lindblad::{
    half_sided_transform, steady_state_with, trace_product, LindbladError, Liouvillian, LiouvillianProblem, Normalization,
    Propagator, SpectrumSeries, SteadyStateOptions,
};
use crate::tolerances;
use crate::C64;

#[derive(Debug, Error)]
pub enum JcError {
    #[error("invalid Jaynes-Cummings parameters: {0}")]
    Invalid(String),
    #[error("Fock cutoff not converged at n_fock = {n_fock}: spectra differ by {deviation:.3e} (relative) from n_fock + 10")]
    UnconvergedFock { n_fock: usize, deviation: f64 },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JCParams {
    pub g: f64,
    pub kappa: f64,
    #[serde(default)]
    pub delta_a: f64,
    #[serde(default)]
    pub delta_c: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default = "default_fock")]
    pub n_fock: usize,
    /// Optional qubit spontaneous decay; the cavity dominates by default.
    #[serde(default)]
    pub gamma_a: f64,
}

fn default_fock() -> usize {
    20
}

impl JCParams {
    pub fn resonant(g: f64, kappa: f64, omega: f64) -> Self {
        Self { g, kappa, delta_a: 0.0, delta_c: 0.0, omega, n_fock: 20, gamma_a: 0.0 }
    }

    pub fn with_fock(&self, n_fock: usize) -> Self {
        Self { n_fock, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), JcError> {
        if self.n_fock < 2 {
            return Err(JcError::Invalid(format!("n_fock = {} (need >= 2)", self.n_fock)));
        }
        if !(self.kappa >= 0.0 && self.gamma_a >= 0.0) {
            return Err(JcError::Invalid("decay rates must be non-negative".into()));
        }
        if ![self.g, self.kappa, self.delta_a, self.delta_c, self.omega, self.gamma_a].iter().all(|x| x.is_finite()) {
            return Err(JcError::Invalid("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Qubit lowering and cavity annihilation on the qubit (x) cavity space.
pub fn jc_operators(n_fock: usize) -> Result<(OperatorMatrix, OperatorMatrix), JcError> {
    if n_fock < 2 {
        return Err(HilbertError::FockTooSmall(n_fock).into());
    }
    let space = HilbertSpace::new(vec![2, n_fock])?;
    let mut a = Array2::zeros((n_fock, n_fock));
    for n in 1..n_fock {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let sm = embed_local(&sigma_minus(), 0, &space)?;
    let a = embed_local(&a, 1, &space)?;
    Ok((sm, a))
}

/// `D_a s+s- + D_c a+a + g (a s+ + a+ s-) + W (s- + s+)`.
pub fn jc_hamiltonian(p: &JCParams) -> Result<OperatorMatrix, JcError> {
    p.validate()?;
    let (sm, a) = jc_operators(p.n_fock)?;
    let sp = sm.dagger();
    let ad = a.dagger();
    let mut h = sp.dot(&sm)?.scale(C64::new(p.delta_a, 0.0));
    h.add_scaled(C64::new(p.delta_c, 0.0), &ad.dot(&a)?)?;
    h.add_scaled(C64::new(p.g, 0.0), &a.dot(&sp)?)?;
    h.add_scaled(C64::new(p.g, 0.0), &ad.dot(&sm)?)?;
    h.add_scaled(C64::new(p.omega, 0.0), &sm.add(&sp)?)?;
    Ok(h)
}

/// Master-equation problem with collapse operators `sqrt(kappa) a` and,
/// when set, `sqrt(gamma_a) s-`.
pub fn jc_problem(p: &JCParams) -> Result<LiouvillianProblem, JcError> {
    let h = jc_hamiltonian(p)?;
    let (sm, a) = jc_operators(p.n_fock)?;
    let mut collapse = vec![a.scale(C64::new(p.kappa.sqrt(), 0.0))];
    if p.gamma_a > 0.0 {
        collapse.push(sm.scale(C64::new(p.gamma_a.sqrt(), 0.0)));
    }
    Ok(LiouvillianProblem::with_collapse(h, collapse))
}

#[derive(Debug, Clone)]
pub struct JcSettings {
    /// Sampling interval of the cavity correlation.
    pub dt: f64,
    /// Correlation is followed until its envelope falls below this fraction
    /// of the zero-delay value.
    pub tail: f64,
    pub t_min: f64,
    pub t_cap: f64,
    pub fock_step: usize,
    pub fock_cap: usize,
    pub normalization: Normalization,
}

impl Default for JcSettings {
    fn default() -> Self {
        Self {
            dt: 0.02,
            tail: 1e-8,
            t_min: 20.0,
            t_cap: 4000.0,
            fock_step: 10,
            fock_cap: 100,
            normalization: Normalization::Max1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JcSpectrum {
    pub spectrum: SpectrumSeries,
    /// Cutoff of the reported spectrum.
    pub n_fock: usize,
    /// Smaller cutoff it was checked against.
    pub compared_with: Option<usize>,
    /// `max|S(N) - S(N')| / max|S(N')|` for the reported pair.
    pub deviation: f64,
    pub converged: bool,
    pub t_max: f64,
    pub steady_residual: f64,
}

/// Cavity spectrum at the given Fock cutoff with no convergence check.
pub fn jc_spectrum_fixed(p: &JCParams, omega_grid: &[f64], settings: &JcSettings) -> Result<JcSpectrum, JcError> {
    spectrum_from(p, omega_grid, settings, None).map(|(s, _)| s)
}

/// Steady state of a smaller cutoff padded with empty Fock levels.
fn pad_fock(rho: &Array2<C64>, from: usize, to: usize) -> Array2<C64> {
    let mut out = Array2::zeros((2 * to, 2 * to));
    for (qa, na) in (0..2).flat_map(|q| (0..from).map(move |n| (q, n))) {
        for (qb, nb) in (0..2).flat_map(|q| (0..from).map(move |n| (q, n))) {
            out[[qa * to + na, qb * to + nb]] = rho[[qa * from + na, qb * from + nb]];
        }
    }
    out
}

fn spectrum_from(
    p: &JCParams,
    omega_grid: &[f64],
    settings: &JcSettings,
    warm: Option<(&Array2<C64>, usize)>,
) -> Result<(JcSpectrum, Array2<C64>), JcError> {
    let problem = jc_problem(p)?;
    let mut l = Liouvillian::new(&problem)?;
    if l.dim() > 24 {
        l = l.operator_form_only();
    }
    let opts = SteadyStateOptions { initial: warm.map(|(r, n)| pad_fock(r, n, p.n_fock)), ..Default::default() };
    let ss = steady_state_with(&l, &opts)?;
    let (_, a) = jc_operators(p.n_fock)?;
    let ad = a.dagger();
    let rho = ss.rho.matrix();
    let mean_a = ss.rho.expect(&a);
    let mut x = a.matrix().dot(rho);
    x.scaled_add(-mean_a, rho);

    let max_substep = (0.5 / l.frequency_scale()).min(settings.dt);
    let prop = Propagator::new(&l, settings.dt, max_substep);
    let mut corr = vec![trace_product(&ad, &x)];
    let c0 = corr[0].norm();
    let window = ((10.0 / settings.dt).round() as usize).max(1);
    let mut warnings = Vec::new();
    if c0 > 1e-300 {
        loop {
            x = prop.advance(&x);
            corr.push(trace_product(&ad, &x));
            let n = corr.len();
            let t = (n - 1) as f64 * settings.dt;
            if n % window == 0 && t >= settings.t_min {
                let env = corr[n - window..].iter().map(|z| z.norm()).fold(0.0, f64::max);
                if env <= settings.tail * c0 {
                    break;
                }
            }
            if t >= settings.t_cap {
                warnings.push(format!("cavity correlation still above {:e} of its zero-delay value at t = {t}", settings.tail));
                break;
            }
        }
    }
    let t_max = (corr.len() - 1) as f64 * settings.dt;
    let tail_residual = if c0 > 0.0 { corr.last().unwrap().norm() / c0 } else { 0.0 };
    let s = half_sided_transform(&corr, settings.dt, omega_grid);
    let total: Vec<f64> = s.iter().map(|z| z.re).collect();
    let mut per_term = BTreeMap::new();
    per_term.insert((1, 1), s);
    let spectrum = SpectrumSeries {
        omega: omega_grid.to_vec(),
        total,
        per_term,
        normalization: Normalization::Raw,
        scale: 1.0,
        tail_residual,
        warnings,
    };
    let out = JcSpectrum {
        spectrum,
        n_fock: p.n_fock,
        compared_with: None,
        deviation: f64::NAN,
        converged: false,
        t_max,
        steady_residual: ss.residual,
    };
    Ok((out, ss.rho.matrix().clone()))
}

fn relative_deviation(a: &SpectrumSeries, b: &SpectrumSeries) -> f64 {
    let scale = b.total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.total.iter().zip(&b.total).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Cavity-emitted incoherent spectrum with the Fock cutoff raised from
/// `p.n_fock` (doubling) until it is stable against `n_fock + fock_step`.
pub fn jc_spectrum(p: &JCParams, omega_grid: &[f64]) -> Result<JcSpectrum, JcError> {
    jc_spectrum_with(p, omega_grid, &JcSettings::default())
}

pub fn jc_spectrum_with(p: &JCParams, omega_grid: &[f64], settings: &JcSettings) -> Result<JcSpectrum, JcError> {
    p.validate()?;
    let mut n = p.n_fock.min(settings.fock_cap - settings.fock_step);
    loop {
        let (lo, rho) = spectrum_from(&p.with_fock(n), omega_grid, settings, None)?;
        let (hi, _) = spectrum_from(&p.with_fock(n + settings.fock_step), omega_grid, settings, Some((&rho, n)))?;
        let deviation = relative_deviation(&lo.spectrum, &hi.spectrum);
        if deviation <= tolerances::FOCK_CONVERGENCE {
            let mut out = hi;
            out.spectrum = out.spectrum.normalized(settings.normalization);
            out.compared_with = Some(n);
            out.deviation = deviation;
            out.converged = true;
            return Ok(out);
        }
        if n + settings.fock_step >= settings.fock_cap {
            return Err(JcError::UnconvergedFock { n_fock: n + settings.fock_step, deviation });
        }
        n = (2 * n).min(settings.fock_cap - settings.fock_step);
    }
}

/// Mean photon number and qubit excitation in the steady state.
pub fn jc_steady_observables(p: &JCParams) -> Result<(f64, f64), JcError> {
    let problem = jc_problem(p)?;
    let mut l = Liouvillian::new(&problem)?;
    if l.dim() > 24 {
        l = l.operator_form_only();
    }
    let ss = steady_state_with(&l, &SteadyStateOptions::default())?;
    let (sm, a) = jc_operators(p.n_fock)?;
    let n = ss.rho.expect(&a.dagger().dot(&a)?).re;
    let e = ss.rho.expect(&sm.dagger().dot(&sm)?).re;
    Ok((n, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{local_maxima, uniform_grid, RegisterModel, SpectrumSettings};
    use crate::rates::{coupling_g, QubitLayout};
    use ndarray_linalg::{Eigh, UPLO};

    fn eigenvalues(h: &OperatorMatrix) -> Vec<f64> {
        let (e, _) = h.matrix().eigh(UPLO::Lower).unwrap();
        e.to_vec()
    }

    #[test]
    fn ladder_rungs_split_by_sqrt_n() {
        let g = 1.3;
        let p = JCParams { n_fock: 8, ..JCParams::resonant(g, 0.1, 0.0) };
        let mut e = eigenvalues(&jc_hamiltonian(&p).unwrap());
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // rungs n = 1..7 are complete; the top Fock state leaves one unpaired level
        for n in 1..8usize {
            let target = (n as f64).sqrt() * g;
            for s in [-1.0, 1.0] {
                assert!(e.iter().any(|x| (x - s * target).abs() < 1e-10), "missing {}", s * target);
            }
        }
    }

    #[test]
    fn uncoupled_is_diagonal() {
        let p = JCParams { g: 0.0, kappa: 1.0, delta_a: 0.7, delta_c: -0.4, omega: 0.0, n_fock: 5, gamma_a: 0.0 };
        let h = jc_hamiltonian(&p).unwrap();
        let m = h.matrix();
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == j {
                    let (q, n) = (i / 5, i % 5);
                    0.7 * q as f64 - 0.4 * n as f64
                } else {
                    0.0
                };
                assert!((m[[i, j]] - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn first_rung_matches_register_splitting() {
        let g = coupling_g(10.0, 1.0);
        let p = JCParams { n_fock: 4, ..JCParams::resonant(g, 0.1, 0.0) };
        let jc: Vec<f64> = eigenvalues(&jc_hamiltonian(&p).unwrap());
        let layout = QubitLayout::cavity(10.0);
        let reg = RegisterModel::new(&layout).unwrap();
        let three = eigenvalues(&reg.problem.h);
        let split = |v: &[f64]| {
            let mut s: Vec<f64> = v.iter().cloned().filter(|x| x.abs() > 1e-9 && x.abs() < 1.2 * g).collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s.last().unwrap() - s.first().unwrap()
        };
        assert!((split(&jc) - 2.0 * g).abs() < 1e-10);
        assert!((split(&three) - split(&jc)).abs() < 1e-10);
    }

    #[test]
    fn rejects_tiny_cutoff() {
        let p = JCParams { n_fock: 1, ..JCParams::resonant(1.0, 1.0, 0.1) };
        assert!(jc_hamiltonian(&p).is_err());
    }

    #[test]
    fn undriven_spectrum_vanishes() {
        let p = JCParams { n_fock: 4, ..JCParams::resonant(1.0, 1.0, 0.0) };
        let s = jc_spectrum_fixed(&p, &uniform_grid(-3.0, 3.0, 61), &JcSettings::default()).unwrap();
        assert!(s.spectrum.total.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn resonant_spectrum_is_symmetric() {
        let p = JCParams { n_fock: 6, ..JCParams::resonant(1.0, 1.0, 0.4) };
        let grid = uniform_grid(-4.0, 4.0, 161);
        let s = jc_spectrum_fixed(&p, &grid, &JcSettings::default()).unwrap().spectrum;
        let m = s.max();
        for k in 0..grid.len() {
            assert!((s.total[k] - s.total[grid.len() - 1 - k]).abs() < 1e-8 * m);
        }
    }

    #[test]
    fn bad_cavity_limit_reduces_to_a_driven_qubit() {
        // kappa >> g: the cavity follows the qubit, which decays at 4 g^2 / kappa
        let (g, kappa, omega) = (2.0, 50.0, 1.0);
        let p = JCParams { n_fock: 5, ..JCParams::resonant(g, kappa, omega) };
        let grid = uniform_grid(-4.0, 4.0, 401);
        let jc = jc_spectrum_fixed(&p, &grid, &JcSettings::default()).unwrap().spectrum.normalized(Normalization::Max1);
        let mut layout = QubitLayout::cavity(0.0).with_drive(omega, 0.0);
        layout.gamma_p = 4.0 * g * g / kappa;
        let reg = RegisterModel::new(&layout).unwrap();
        let settings = SpectrumSettings { t_max: 150.0, ..SpectrumSettings::new(reg.max_substep()) };
        let q = reg.spectrum(&grid, &settings).unwrap().spectrum;
        let pk_jc = local_maxima(&grid, &jc.total, 0.05);
        let pk_q = local_maxima(&grid, &q.total, 0.05);
        assert_eq!(pk_jc.len(), 3);
        assert_eq!(pk_q.len(), 3);
        for (a, b) in pk_jc.iter().zip(&pk_q) {
            assert!((a.omega - b.omega).abs() <= 0.1, "{} vs {}", a.omega, b.omega);
        }
        let diff = jc.total.iter().zip(&q.total).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 0.1, "max normalized difference {diff}");
    }
}
