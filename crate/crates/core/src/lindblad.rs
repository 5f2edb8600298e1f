//! Markovian master equation: Liouvillian assembly, steady states,
//! regression-theorem correlations and the incoherent waveguide spectrum.

use std::collections::BTreeMap;

use ndarray::{linalg::kron, Array1, Array2};
use ndarray_linalg::{Eigh, SVD, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{embed_lowering, DensityMatrix, HilbertError, HilbertSpace, OperatorMatrix, I, ONE, ZERO};
use crate::rates::{build_rate_matrices, coupling_g, QubitLayout, RateError, RateMatrices, MIRROR_1, MIRROR_2, PROBE};
use crate::sparse::SparseOp;
use crate::tolerances;

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error("dissipator is not positive semidefinite, negative eigenrates {0:?}")]
    NegativeRates(Vec<f64>),
    #[error("steady state is not unique: null space dimension {dimension} (second smallest singular value {gap:e})")]
    DegenerateNullSpace { dimension: usize, gap: f64 },
    #[error("steady state not converged: residual {residual:e} after t = {time}")]
    NotConverged { residual: f64, time: f64 },
    #[error("time grid must be ascending and non-negative")]
    BadGrid,
    #[error("rate matrix is {rows}x{cols} but {emitters} emitters were given")]
    RateShape { rows: usize, cols: usize, emitters: usize },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

impl From<ndarray_linalg::error::LinalgError> for LindbladError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        LindbladError::Linalg(e.to_string())
    }
}

/// Hamiltonian plus dissipation, either as a rate matrix over emitter
/// lowering operators or as explicit collapse operators (or both).
#[derive(Debug, Clone)]
pub struct LiouvillianProblem {
    pub h: OperatorMatrix,
    pub gamma: Option<Array2<f64>>,
    pub emitters: Vec<OperatorMatrix>,
    pub collapse_ops: Vec<OperatorMatrix>,
}

impl LiouvillianProblem {
    pub fn with_rates(h: OperatorMatrix, gamma: Array2<f64>, emitters: Vec<OperatorMatrix>) -> Result<Self, LindbladError> {
        if gamma.dim() != (emitters.len(), emitters.len()) {
            return Err(LindbladError::RateShape { rows: gamma.nrows(), cols: gamma.ncols(), emitters: emitters.len() });
        }
        Ok(Self { h, gamma: Some(gamma), emitters, collapse_ops: Vec::new() })
    }

    pub fn with_collapse(h: OperatorMatrix, collapse_ops: Vec<OperatorMatrix>) -> Self {
        Self { h, gamma: None, emitters: Vec::new(), collapse_ops }
    }

    pub fn space(&self) -> &HilbertSpace {
        self.h.space()
    }

    /// Diagonalizes the rate matrix into independent jump operators
    /// `sqrt(lambda_k) sum_n v_k[n] s-_n` and appends explicit collapse ops.
    pub fn jump_operators(&self) -> Result<Vec<OperatorMatrix>, LindbladError> {
        let mut out = Vec::new();
        if let Some(gamma) = &self.gamma {
            let (lam, v) = gamma.eigh(UPLO::Upper)?;
            let scale = gamma.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            let negative: Vec<f64> = lam.iter().cloned().filter(|&l| l < -tolerances::NEGATIVE_RATE * scale).collect();
            if !negative.is_empty() {
                return Err(LindbladError::NegativeRates(negative));
            }
            for (k, &l) in lam.iter().enumerate() {
                if l <= tolerances::NEGATIVE_RATE * scale {
                    continue;
                }
                let mut c = OperatorMatrix::zeros(self.space().clone());
                for (n, e) in self.emitters.iter().enumerate() {
                    c.add_scaled(C64::new(l.sqrt() * v[[n, k]], 0.0), e)?;
                }
                out.push(c);
            }
        }
        out.extend(self.collapse_ops.iter().cloned());
        Ok(out)
    }
}

/// Column-stacked superoperator: `vec(d rho/dt) = L vec(rho)`.
pub fn build_liouvillian(problem: &LiouvillianProblem) -> Result<Array2<C64>, LindbladError> {
    let n = problem.h.dim();
    let id = Array2::<C64>::eye(n);
    let h = problem.h.matrix();
    let mut l = (kron(&id, h) - kron(&h.t(), &id)).mapv(|z| -I * z);
    for c in problem.jump_operators()? {
        let cm = c.matrix();
        let cdc = c.dagger().matrix().dot(cm);
        l = l + kron(&cm.mapv(|z| z.conj()), cm) - kron(&id, &cdc).mapv(|z| z * 0.5) - kron(&cdc.t(), &id).mapv(|z| z * 0.5);
    }
    Ok(l)
}

pub fn vec_cols(x: &Array2<C64>) -> Array1<C64> {
    let n = x.nrows();
    Array1::from_shape_fn(n * x.ncols(), |k| x[[k % n, k / n]])
}

pub fn unvec_cols(v: &Array1<C64>, n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, v.len() / n), |(i, j)| v[i + n * j])
}

/// Master-equation generator holding the operator form and, for small
/// spaces, the dense superoperator.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: HilbertSpace,
    heff: SparseOp,
    heff_dag: SparseOp,
    jumps: Vec<(SparseOp, SparseOp)>,
    dense: Option<Array2<C64>>,
    scale: f64,
}

impl Liouvillian {
    pub fn new(problem: &LiouvillianProblem) -> Result<Self, LindbladError> {
        let n = problem.h.dim();
        let jumps = problem.jump_operators()?;
        let mut heff = problem.h.matrix().clone();
        let mut rate_sum = 0.0;
        for c in &jumps {
            let cdc = c.dagger().matrix().dot(c.matrix());
            rate_sum += cdc.diag().iter().fold(0.0f64, |m, z| m.max(z.re));
            heff.scaled_add(C64::new(0.0, -0.5), &cdc);
        }
        let hnorm = problem.h.matrix().rows().into_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let heff_sp = SparseOp::from_dense(heff.view());
        let dense = if n * n <= tolerances::DENSE_LIOUVILLIAN_MAX_DIM { Some(build_liouvillian(problem)?) } else { None };
        Ok(Self {
            space: problem.space().clone(),
            heff_dag: heff_sp.dagger(),
            heff: heff_sp,
            jumps: jumps
                .iter()
                .map(|c| {
                    let s = SparseOp::from_dense(c.matrix().view());
                    let d = s.dagger();
                    (s, d)
                })
                .collect(),
            dense,
            scale: hnorm.max(rate_sum).max(1e-300),
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    /// Drops the dense superoperator so propagation stays in operator form.
    pub fn operator_form_only(mut self) -> Self {
        self.dense = None;
        self
    }

    pub fn dense(&self) -> Option<&Array2<C64>> {
        self.dense.as_ref()
    }

    /// Rough frequency scale (row-sum norm of H or total jump rate).
    pub fn frequency_scale(&self) -> f64 {
        self.scale
    }

    /// `L(x)` in operator form.
    pub fn apply(&self, x: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(x.raw_dim());
        self.heff.left_mul_acc(-I, x, &mut out);
        self.heff_dag.right_mul_acc(I, x, &mut out);
        for (c, cd) in &self.jumps {
            let t = c.left_mul(x);
            cd.right_mul_acc(ONE, &t, &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyStateMethod {
    NullVector,
    TimeStepping,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub method: SteadyStateMethod,
    /// Second-smallest singular value when the null vector route was used.
    pub gap: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SteadyStateOptions {
    pub initial: Option<Array2<C64>>,
    pub step: f64,
    pub max_time: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { initial: None, step: 0.05, max_time: 1.0e4 }
    }
}

pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix, LindbladError> {
    steady_state_with(l, &SteadyStateOptions::default()).map(|s| s.rho)
}

/// Null vector of the dense superoperator for small spaces, otherwise
/// fixed-step evolution until `max|L(rho)|` falls below the residual bound.
pub fn steady_state_with(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyState, LindbladError> {
    let n = l.dim();
    if let (true, Some(dense)) = (n * n <= tolerances::SVD_STEADY_STATE_MAX_DIM, l.dense()) {
        let (_, s, vt) = dense.svd(false, true)?;
        let vt = vt.expect("right singular vectors requested");
        let d = s.len();
        let gap = if d >= 2 { s[d - 2] } else { f64::INFINITY };
        if gap <= tolerances::NULL_SPACE_GAP {
            let dimension = s.iter().filter(|&&x| x <= tolerances::NULL_SPACE_GAP).count();
            return Err(LindbladError::DegenerateNullSpace { dimension, gap });
        }
        let v = vt.row(d - 1).mapv(|z| z.conj());
        let rho = DensityMatrix::from_unnormalized(l.space().clone(), unvec_cols(&v, n))?;
        let residual = max_abs(&l.apply(rho.matrix()));
        return Ok(SteadyState { rho, method: SteadyStateMethod::NullVector, gap: Some(gap), residual });
    }
    let mut x = opts.initial.clone().unwrap_or_else(|| {
        let mut g = Array2::zeros((n, n));
        g[[0, 0]] = ONE;
        g
    });
    let h = opts.step.min(1.0 / l.frequency_scale());
    let tol = tolerances::EVOLVED_STEADY_STATE_RESIDUAL * l.frequency_scale().max(1.0);
    let check_every = 200usize;
    let mut t = 0.0;
    let mut residual = max_abs(&l.apply(&x));
    while residual > tol {
        if t > opts.max_time {
            return Err(LindbladError::NotConverged { residual, time: t });
        }
        for _ in 0..check_every {
            x = rk4_step(l, &x, h);
        }
        t += h * check_every as f64;
        let tr = x.diag().sum();
        x.mapv_inplace(|z| z / tr);
        residual = max_abs(&l.apply(&x));
    }
    let rho = DensityMatrix::from_unnormalized(l.space().clone(), x)?;
    Ok(SteadyState { rho, method: SteadyStateMethod::TimeStepping, gap: None, residual })
}

fn max_abs(x: &Array2<C64>) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn rk4_step(l: &Liouvillian, x: &Array2<C64>, h: f64) -> Array2<C64> {
    let k1 = l.apply(x);
    let k2 = l.apply(&(x + &k1.mapv(|z| z * (h / 2.0))));
    let k3 = l.apply(&(x + &k2.mapv(|z| z * (h / 2.0))));
    let k4 = l.apply(&(x + &k3.mapv(|z| z * h)));
    let mut out = x.clone();
    out.scaled_add(C64::new(h / 6.0, 0.0), &k1);
    out.scaled_add(C64::new(h / 3.0, 0.0), &k2);
    out.scaled_add(C64::new(h / 3.0, 0.0), &k3);
    out.scaled_add(C64::new(h / 6.0, 0.0), &k4);
    out
}

/// Advances by `dt` with `substeps` classical RK4 steps. For small spaces
/// the composed RK4 step is precomputed as a matrix.
pub struct Propagator<'a> {
    l: &'a Liouvillian,
    dt: f64,
    substeps: usize,
    step: Option<Array2<C64>>,
}

impl<'a> Propagator<'a> {
    pub fn new(l: &'a Liouvillian, dt: f64, max_substep: f64) -> Self {
        let substeps = ((dt / max_substep) - 1e-9).ceil().max(1.0) as usize;
        let h = dt / substeps as f64;
        let step = l.dense().map(|lm| {
            let d = lm.nrows();
            let a = lm.mapv(|z| z * h);
            let mut term = Array2::<C64>::eye(d);
            let mut p = Array2::<C64>::eye(d);
            for k in 1..=4 {
                term = term.dot(&a).mapv(|z| z / k as f64);
                p = p + &term;
            }
            let mut total = p.clone();
            for _ in 1..substeps {
                total = p.dot(&total);
            }
            total
        });
        Self { l, dt, substeps, step }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn advance(&self, x: &Array2<C64>) -> Array2<C64> {
        match &self.step {
            Some(p) => unvec_cols(&p.dot(&vec_cols(x)), x.nrows()),
            None => {
                let h = self.dt / self.substeps as f64;
                let mut y = x.clone();
                for _ in 0..self.substeps {
                    y = rk4_step(self.l, &y, h);
                }
                y
            }
        }
    }
}

/// `Tr(A X)` without forming the product.
pub fn trace_product(a: &OperatorMatrix, x: &Array2<C64>) -> C64 {
    let m = a.matrix();
    let n = m.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            let v = m[[i, k]];
            if v != ZERO {
                acc += v * x[[k, i]];
            }
        }
    }
    acc
}

/// `<A(t) B> - <A><B>` in the steady state for each `t` in `t_grid`.
pub fn regression_correlation(
    l: &Liouvillian,
    rho_ss: &DensityMatrix,
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    t_grid: &[f64],
    max_substep: f64,
) -> Result<Vec<C64>, LindbladError> {
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(LindbladError::BadGrid);
    }
    let rho = rho_ss.matrix();
    let mean_b = rho_ss.expect(b);
    let mut x = b.matrix().dot(rho);
    x.scaled_add(-mean_b, rho);
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t = 0.0;
    let mut cached: Option<Propagator> = None;
    for &target in t_grid {
        let dt = target - t;
        if dt > 0.0 {
            let reuse = cached.as_ref().is_some_and(|p| (p.dt() - dt).abs() <= 1e-12 * dt.max(1.0));
            if !reuse {
                cached = Some(Propagator::new(l, dt, max_substep));
            }
            x = cached.as_ref().unwrap().advance(&x);
            t = target;
        }
        out.push(trace_product(a, &x));
    }
    Ok(out)
}

/// Trapezoidal `int_0^T c(t) exp(-i w t) dt` on a uniform grid.
pub fn half_sided_transform(c: &[C64], dt: f64, omegas: &[f64]) -> Vec<C64> {
    let n = c.len();
    omegas
        .iter()
        .map(|&w| {
            if n < 2 {
                return ZERO;
            }
            let rot = C64::from_polar(1.0, -w * dt);
            let mut phase = ONE;
            let mut acc = ZERO;
            for (k, &ck) in c.iter().enumerate() {
                if k % 512 == 0 {
                    phase = C64::from_polar(1.0, -w * dt * k as f64);
                }
                let wgt = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                acc += ck * phase * wgt;
                phase *= rot;
            }
            acc * dt
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Raw,
    #[default]
    Max1,
}

#[derive(Debug, Clone)]
pub struct SpectrumSeries {
    /// Frequencies `w - w_L` in units of gamma_p.
    pub omega: Vec<f64>,
    pub total: Vec<f64>,
    /// Weighted complex contributions `g_nn' S0_nn'` keyed by 1-based site numbers.
    pub per_term: BTreeMap<(usize, usize), Vec<C64>>,
    pub normalization: Normalization,
    /// Factor the raw values were divided by.
    pub scale: f64,
    /// Largest `|C(t_max)| / |C(0)|` over the correlations used.
    pub tail_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub value: f64,
    pub index: usize,
}

impl SpectrumSeries {
    pub fn grid_spacing(&self) -> f64 {
        if self.omega.len() < 2 {
            0.0
        } else {
            (self.omega[self.omega.len() - 1] - self.omega[0]) / (self.omega.len() - 1) as f64
        }
    }

    pub fn max(&self) -> f64 {
        self.total.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Interior local maxima above `rel` times the global maximum.
    pub fn peaks(&self, rel: f64) -> Vec<Peak> {
        local_maxima(&self.omega, &self.total, rel)
    }

    /// Peaks above `rel` of the maximum that also stand out from the
    /// surrounding valleys by `prominence` of the maximum.
    pub fn prominent_peaks(&self, rel: f64, prominence: f64) -> Vec<Peak> {
        let max = self.max();
        self.peaks(rel).into_iter().filter(|p| peak_prominence(&self.total, p.index) >= prominence * max).collect()
    }

    pub fn direct(&self, n: usize) -> Option<Vec<f64>> {
        self.per_term.get(&(n, n)).map(|v| v.iter().map(|z| z.re).collect())
    }

    /// `(g_nn' S0_nn' + conj(g_n'n S0_n'n)) / 2` for `n < n'`.
    pub fn interference(&self, n: usize, m: usize) -> Option<Vec<C64>> {
        let a = self.per_term.get(&(n, m))?;
        let b = self.per_term.get(&(m, n))?;
        Some(a.iter().zip(b).map(|(x, y)| (x + y.conj()) * 0.5).collect())
    }

    pub fn normalized(mut self, norm: Normalization) -> Self {
        let factor = match norm {
            Normalization::Raw => 1.0,
            Normalization::Max1 => {
                let m = self.total.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
                if m > 0.0 {
                    m
                } else {
                    1.0
                }
            }
        };
        self.total.iter_mut().for_each(|v| *v /= factor);
        for v in self.per_term.values_mut() {
            v.iter_mut().for_each(|z| *z /= factor);
        }
        self.scale *= factor;
        self.normalization = norm;
        self
    }
}

pub fn local_maxima(omega: &[f64], values: &[f64], rel: f64) -> Vec<Peak> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let thr = rel * max;
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > thr)
        .map(|i| Peak { omega: omega[i], value: values[i], index: i })
        .collect()
}

/// Height of `values[i]` above the higher of the two lowest points reached
/// before climbing above it on either side.
pub fn peak_prominence(values: &[f64], i: usize) -> f64 {
    let v = values[i];
    let valley = |it: &mut dyn Iterator<Item = &f64>| {
        let mut lo = v;
        for &x in it {
            if x > v {
                break;
            }
            lo = lo.min(x);
        }
        lo
    };
    let left = valley(&mut values[..i].iter().rev());
    let right = valley(&mut values[i + 1..].iter());
    v - left.max(right)
}

/// Complex detection weights `g_nn'` for a detector to the right of all qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionWeights {
    pub g_matrix: Array2<C64>,
}

impl DetectionWeights {
    /// `g_nn' = sqrt(gamma_n gamma_n') exp(-i phi_D(n) + i phi_D(n'))`, with
    /// `phi_D` the propagation phase from qubit `n` to the detector.
    pub fn for_layout(layout: &QubitLayout) -> Self {
        let gam = layout.gammas();
        let mut phase = [0.0; 3];
        phase[MIRROR_1] = layout.phi_m1_m2;
        phase[PROBE] = layout.phi_m2_p;
        phase[MIRROR_2] = 0.0;
        let g_matrix = Array2::from_shape_fn((3, 3), |(n, m)| C64::from_polar((gam[n] * gam[m]).sqrt(), -phase[n] + phase[m]));
        Self { g_matrix }
    }

    pub fn restricted(&self, sites: &[usize]) -> Self {
        Self { g_matrix: Array2::from_shape_fn((sites.len(), sites.len()), |(a, b)| self.g_matrix[[sites[a], sites[b]]]) }
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.g_matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.g_matrix[[i, j]] - self.g_matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }
}

pub fn detection_weights(layout: &QubitLayout) -> DetectionWeights {
    DetectionWeights::for_layout(layout)
}

#[derive(Debug, Clone)]
pub struct SpectrumSettings {
    pub t_max: f64,
    pub dt: f64,
    pub max_substep: f64,
    pub normalization: Normalization,
}

impl SpectrumSettings {
    pub fn new(max_substep: f64) -> Self {
        Self { t_max: 40.0, dt: 0.01, max_substep, normalization: Normalization::Max1 }
    }
}

/// Incoherent spectrum from all ordered emitter pairs. `labels` gives the
/// 1-based site numbers used as per-term keys.
pub fn incoherent_spectrum(
    l: &Liouvillian,
    rho_ss: &DensityMatrix,
    emitters: &[OperatorMatrix],
    labels: &[usize],
    weights: &DetectionWeights,
    omega_grid: &[f64],
    settings: &SpectrumSettings,
) -> Result<SpectrumSeries, LindbladError> {
    let n_t = (settings.t_max / settings.dt).round() as usize + 1;
    let raising: Vec<OperatorMatrix> = emitters.iter().map(OperatorMatrix::dagger).collect();
    let rho = rho_ss.matrix();
    let prop = Propagator::new(l, settings.dt, settings.max_substep);
    let m = emitters.len();
    let mut corr = vec![vec![Vec::with_capacity(n_t); m]; m];
    for b in 0..m {
        let mean_b = rho_ss.expect(&emitters[b]);
        let mut x = emitters[b].matrix().dot(rho);
        x.scaled_add(-mean_b, rho);
        for k in 0..n_t {
            if k > 0 {
                x = prop.advance(&x);
            }
            for a in 0..m {
                corr[a][b].push(trace_product(&raising[a], &x));
            }
        }
    }
    let c0 = corr.iter().flatten().map(|c| c[0].norm()).fold(0.0, f64::max);
    let tail = corr.iter().flatten().map(|c| c[n_t - 1].norm()).fold(0.0, f64::max);
    let tail_residual = if c0 > 0.0 { tail / c0 } else { 0.0 };
    let mut warnings = Vec::new();
    if tail_residual > tolerances::CORRELATION_TAIL {
        warnings.push(format!("correlation tail {tail_residual:.3e} of its zero-delay value at t_max = {}", settings.t_max));
    }
    let mut total = vec![0.0; omega_grid.len()];
    let mut per_term = BTreeMap::new();
    for a in 0..m {
        for b in 0..m {
            let s0 = half_sided_transform(&corr[a][b], settings.dt, omega_grid);
            let g = weights.g_matrix[[a, b]];
            let term: Vec<C64> = s0.iter().map(|&s| g * s).collect();
            for (t, z) in total.iter_mut().zip(&term) {
                *t += z.re;
            }
            per_term.insert((labels[a], labels[b]), term);
        }
    }
    let series = SpectrumSeries {
        omega: omega_grid.to_vec(),
        total,
        per_term,
        normalization: Normalization::Raw,
        scale: 1.0,
        tail_residual,
        warnings,
    };
    Ok(series.normalized(settings.normalization))
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// The mirror-probe-mirror register as a master-equation problem. With
/// `gamma_m = 0` the mirrors are dynamically inert and only the probe is kept.
#[derive(Debug, Clone)]
pub struct RegisterModel {
    pub layout: QubitLayout,
    pub rates: RateMatrices,
    /// Register sites retained (indices into mirror-1, probe, mirror-2).
    pub sites: Vec<usize>,
    pub problem: LiouvillianProblem,
    pub weights: DetectionWeights,
}

impl RegisterModel {
    pub fn new(layout: &QubitLayout) -> Result<Self, LindbladError> {
        let layout = layout.validated()?;
        let rates = build_rate_matrices(&layout)?;
        let weights = DetectionWeights::for_layout(&layout);
        if layout.gamma_m == 0.0 {
            let space = HilbertSpace::qubits(1);
            let s = embed_lowering(0, &space)?;
            let mut h = s.add(&s.dagger())?.scale(C64::new(layout.omega, 0.0));
            h.add_scaled(C64::new(layout.delta, 0.0), &s.dagger().dot(&s)?)?;
            let gamma = Array2::from_elem((1, 1), layout.gamma_p);
            let problem = LiouvillianProblem::with_rates(h, gamma, vec![s])?;
            return Ok(Self { layout, rates, sites: vec![PROBE], problem, weights: weights.restricted(&[PROBE]) });
        }
        let space = HilbertSpace::qubits(3);
        let h = crate::rates::effective_hamiltonian(&layout, &rates);
        let emitters = (0..3).map(|n| embed_lowering(n, &space)).collect::<Result<Vec<_>, _>>()?;
        let problem = LiouvillianProblem::with_rates(h, rates.gamma.clone(), emitters)?;
        Ok(Self { layout, rates, sites: vec![MIRROR_1, PROBE, MIRROR_2], problem, weights })
    }

    pub fn g(&self) -> f64 {
        coupling_g(self.layout.gamma_m, self.layout.gamma_p)
    }

    /// `0.01 / max(gamma_m, gamma_p, Omega, g)`.
    pub fn max_substep(&self) -> f64 {
        let l = &self.layout;
        0.01 / [l.gamma_m, l.gamma_p, l.omega.abs(), self.g()].iter().cloned().fold(0.0, f64::max)
    }

    pub fn liouvillian(&self) -> Result<Liouvillian, LindbladError> {
        Liouvillian::new(&self.problem)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s + 1).collect()
    }

    pub fn emitters(&self) -> &[OperatorMatrix] {
        &self.problem.emitters
    }

    /// Steady state on the full three-qubit space (inert mirrors in `|g>`).
    pub fn full_register_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix, LindbladError> {
        if self.sites.len() == 3 {
            return Ok(rho.clone());
        }
        let r = rho.matrix();
        let mut full = Array2::zeros((8, 8));
        for a in 0..2 {
            for b in 0..2 {
                full[[2 * a, 2 * b]] = r[[a, b]];
            }
        }
        Ok(DensityMatrix::new(HilbertSpace::qubits(3), full)?)
    }

    pub fn spectrum(&self, omega_grid: &[f64], settings: &SpectrumSettings) -> Result<MarkovSpectrum, LindbladError> {
        let l = self.liouvillian()?;
        let ss = steady_state_with(&l, &SteadyStateOptions::default())?;
        let spectrum = incoherent_spectrum(&l, &ss.rho, self.emitters(), &self.labels(), &self.weights, omega_grid, settings)?;
        Ok(MarkovSpectrum { steady: ss, spectrum })
    }
}

#[derive(Debug, Clone)]
pub struct MarkovSpectrum {
    pub steady: SteadyState,
    pub spectrum: SpectrumSeries,
}
