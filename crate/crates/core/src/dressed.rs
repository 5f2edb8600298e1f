//! Dressed states of the register Hamiltonian: the undriven ladder labelled
//! by excitation number, drive-dressed quasi-levels labelled by overlap with
//! it, steady-state populations and the allowed emission lines.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::hilbert::{eigh_hermitian, embed_lowering, DensityMatrix, HilbertSpace, OperatorMatrix, ZERO};
use crate::lindblad::{LindbladError, RegisterModel};
use crate::rates::{build_rate_matrices, coupling_g, effective_hamiltonian, QubitLayout, RateError};
use crate::tolerances;

#[derive(Debug, Error)]
pub enum DressedError {
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
}

impl From<ndarray_linalg::error::LinalgError> for DressedError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        DressedError::Eigen(e.to_string())
    }
}

pub const NATURAL_LABELS: [&str; 8] = ["0", "1a", "1b", "1c", "2a", "2b", "2c", "3"];

/// Overlap below which a driven level is left unlabelled.
pub const LABEL_MIN_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct DressedBasis {
    /// `None` for levels whose best overlap with the undriven ladder is below one half.
    pub labels: Vec<Option<String>>,
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns in the bare basis.
    pub vectors: Array2<C64>,
}

impl DressedBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> Array1<C64> {
        self.vectors.column(k).to_owned()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.as_deref() == Some(label))
    }

    pub fn name(&self, k: usize) -> String {
        self.labels[k].clone().unwrap_or_else(|| format!("#{k}"))
    }

    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.t().mapv(|z| z.conj()).dot(&self.vectors);
        let n = g.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[[i, j]] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Largest-magnitude component made real and positive; ties go to the lowest index.
fn fix_phase(v: &mut Array1<C64>) {
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best_mag + 1e-12 {
            best = i;
            best_mag = z.norm();
        }
    }
    if best_mag > 0.0 {
        let ph = v[best] / v[best].norm();
        v.mapv_inplace(|z| z / ph);
    }
}

fn undriven(layout: &QubitLayout) -> Result<OperatorMatrix, DressedError> {
    let l = layout.validated()?.with_drive(0.0, layout.delta);
    let rates = build_rate_matrices(&l)?;
    Ok(effective_hamiltonian(&l, &rates))
}

fn driven(layout: &QubitLayout) -> Result<OperatorMatrix, DressedError> {
    let l = layout.validated()?;
    let rates = build_rate_matrices(&l)?;
    Ok(effective_hamiltonian(&l, &rates))
}

/// Undriven eigenstates, diagonalized per excitation number and ordered by
/// excitation number then energy.
pub fn natural_dressed_states(layout: &QubitLayout) -> Result<DressedBasis, DressedError> {
    let h = undriven(layout)?;
    let m = h.matrix();
    let mut eigenvalues = Vec::with_capacity(8);
    let mut vectors = Array2::zeros((8, 8));
    let mut col = 0;
    for k in 0..=3u32 {
        let idx: Vec<usize> = (0..8usize).filter(|i| i.count_ones() == k).collect();
        let block = Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| m[[idx[a], idx[b]]]);
        let (ev, vec) = eigh_hermitian(&block)?;
        for (j, &e) in ev.iter().enumerate() {
            let mut v = Array1::zeros(8);
            for (a, &i) in idx.iter().enumerate() {
                v[i] = vec[[a, j]];
            }
            fix_phase(&mut v);
            vectors.column_mut(col).assign(&v);
            eigenvalues.push(e);
            col += 1;
        }
    }
    Ok(DressedBasis { labels: NATURAL_LABELS.iter().map(|s| Some(s.to_string())).collect(), eigenvalues, vectors })
}

/// Full eigendecomposition of the driven Hamiltonian, labelled greedily by
/// overlap with the undriven ladder. Degenerate eigenspaces are rotated onto
/// the projected natural states first so labels are reproducible.
pub fn driven_quasi_levels(layout: &QubitLayout) -> Result<DressedBasis, DressedError> {
    let natural = natural_dressed_states(layout)?;
    let h = driven(layout)?;
    let (ev, vecs) = eigh_hermitian(h.matrix())?;
    let n = ev.len();
    let scale = ev.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let mut vectors = vecs.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (ev[end] - ev[start]).abs() <= tolerances::DEGENERACY_REL * scale {
            end += 1;
        }
        if end - start > 1 {
            let sub = vecs.slice(ndarray::s![.., start..end]).to_owned();
            let mut proj: Vec<(f64, Array1<C64>)> = (0..natural.len())
                .map(|k| {
                    let nk = natural.vectors.column(k);
                    let coeff = sub.t().mapv(|z| z.conj()).dot(&nk);
                    let p = sub.dot(&coeff);
                    (p.iter().map(|z| z.norm_sqr()).sum::<f64>(), p)
                })
                .collect();
            proj.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let mut basis: Vec<Array1<C64>> = Vec::new();
            for (_, mut p) in proj.into_iter().chain((0..end - start).map(|j| (0.0, sub.column(j).to_owned()))) {
                if basis.len() == end - start {
                    break;
                }
                for b in &basis {
                    let c: C64 = b.iter().zip(p.iter()).map(|(x, y)| x.conj() * y).sum();
                    p.scaled_add(-c, b);
                }
                let norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    basis.push(p.mapv(|z| z / norm));
                }
            }
            for (j, b) in basis.into_iter().enumerate() {
                vectors.column_mut(start + j).assign(&b);
            }
        }
        start = end;
    }
    for mut c in vectors.axis_iter_mut(Axis(1)) {
        let mut v = c.to_owned();
        fix_phase(&mut v);
        c.assign(&v);
    }
    let overlaps = Array2::from_shape_fn((n, natural.len()), |(i, k)| {
        let s: C64 = vectors.column(i).iter().zip(natural.vectors.column(k)).map(|(a, b)| b.conj() * a).sum();
        s.norm_sqr()
    });
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..natural.len()).map(move |k| (i, k))).collect();
    pairs.sort_by(|a, b| overlaps[[b.0, b.1]].partial_cmp(&overlaps[[a.0, a.1]]).unwrap().then(a.cmp(b)));
    let mut labels: Vec<Option<String>> = vec![None; n];
    let mut used = vec![false; natural.len()];
    for (i, k) in pairs {
        if labels[i].is_none() && !used[k] && overlaps[[i, k]] >= LABEL_MIN_OVERLAP {
            labels[i] = natural.labels[k].clone();
            used[k] = true;
        }
    }
    Ok(DressedBasis { labels, eigenvalues: ev.to_vec(), vectors })
}

pub fn dressed_populations(rho_ss: &DensityMatrix, basis: &DressedBasis) -> Vec<f64> {
    let rho = rho_ss.matrix();
    (0..basis.len())
        .map(|k| {
            let v = basis.vectors.column(k);
            let rv = rho.dot(&v);
            v.iter().zip(rv.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re
        })
        .collect()
}

/// Sum of the three lowering operators on the register.
pub fn total_lowering() -> OperatorMatrix {
    let sp = HilbertSpace::qubits(3);
    let mut d = OperatorMatrix::zeros(sp.clone());
    for n in 0..3 {
        d.add_scaled(C64::new(1.0, 0.0), &embed_lowering(n, &sp).unwrap()).unwrap();
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub struct Transition {
    pub from: String,
    pub to: String,
    /// `E_from - E_to`, relative to the laser frequency.
    pub frequency: f64,
    /// `|<to| D |from>|`.
    pub dipole: f64,
    /// Population of the initial level times the squared dipole element.
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionTable {
    pub lines: Vec<Transition>,
    /// Indices into `lines` of transitions sharing a frequency.
    pub groups: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl TransitionTable {
    pub fn frequencies(&self) -> Vec<f64> {
        self.groups.iter().map(|g| self.lines[g[0]].frequency).collect()
    }

    pub fn nearest(&self, omega: f64) -> Option<f64> {
        self.lines.iter().map(|t| (t.frequency - omega).abs()).fold(None, |m, d| Some(m.map_or(d, |x: f64| x.min(d))))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LineSelection {
    /// Minimum population of the initial level.
    pub population_threshold: f64,
    /// Dipole cutoff relative to the largest element over all level pairs.
    pub weight_cutoff: f64,
    /// Lines closer than this are grouped as degenerate.
    pub grouping: f64,
}

impl LineSelection {
    pub fn for_coupling(g: f64) -> Self {
        Self { population_threshold: 1e-3, weight_cutoff: 1e-3, grouping: tolerances::LINE_GROUPING_REL_G * g.max(1e-300) }
    }
}

pub fn transition_lines(basis: &DressedBasis, populations: &[f64], dipole: &OperatorMatrix, sel: &LineSelection) -> TransitionTable {
    let n = basis.len();
    let dv = basis.vectors.t().mapv(|z| z.conj()).dot(&dipole.matrix().dot(&basis.vectors));
    let max = dv.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut lines = Vec::new();
    for k in 0..n {
        if populations[k] < sel.population_threshold {
            continue;
        }
        for kp in 0..n {
            let m = dv[[kp, k]].norm();
            if max > 0.0 && m > sel.weight_cutoff * max && dv[[kp, k]] != ZERO {
                lines.push(Transition {
                    from: basis.name(k),
                    to: basis.name(kp),
                    frequency: basis.eigenvalues[k] - basis.eigenvalues[kp],
                    dipole: m,
                    weight: populations[k] * m * m,
                });
            }
        }
    }
    lines.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, t) in lines.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (t.frequency - lines[g[0]].frequency).abs() <= sel.grouping => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut warnings = Vec::new();
    if lines.is_empty() {
        warnings.push("no transition passes the population and dipole thresholds".to_string());
    }
    TransitionTable { lines, groups, warnings }
}

/// Steady-state dressed-state picture for one layout.
#[derive(Debug, Clone)]
pub struct DressedAnalysis {
    pub natural: DressedBasis,
    pub driven: DressedBasis,
    pub natural_populations: Vec<f64>,
    pub driven_populations: Vec<f64>,
    pub lines: TransitionTable,
}

impl DressedAnalysis {
    pub fn for_layout(layout: &QubitLayout) -> Result<Self, DressedError> {
        let model = RegisterModel::new(layout)?;
        let l = model.liouvillian()?;
        let rho = model.full_register_state(&crate::lindblad::steady_state(&l)?)?;
        Self::with_state(layout, &rho)
    }

    pub fn with_state(layout: &QubitLayout, rho: &DensityMatrix) -> Result<Self, DressedError> {
        let natural = natural_dressed_states(layout)?;
        let driven = driven_quasi_levels(layout)?;
        let natural_populations = dressed_populations(rho, &natural);
        let driven_populations = dressed_populations(rho, &driven);
        let sel = LineSelection::for_coupling(coupling_g(layout.gamma_m, layout.gamma_p));
        let lines = transition_lines(&driven, &driven_populations, &total_lowering(), &sel);
        Ok(Self { natural, driven, natural_populations, driven_populations, lines })
    }

    /// Natural levels holding at least `threshold` population.
    pub fn populated_natural(&self, threshold: f64) -> Vec<String> {
        self.natural_populations.iter().enumerate().filter(|(_, &p)| p >= threshold).map(|(k, _)| self.natural.name(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn state(entries: &[(usize, f64)]) -> Array1<C64> {
        let mut v = Array1::zeros(8);
        for &(i, c) in entries {
            v[i] = C64::new(c, 0.0);
        }
        v
    }

    fn overlap(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
    }

    #[test]
    fn ladder_ends_are_bare() {
        let b = natural_dressed_states(&QubitLayout::cavity(10.0)).unwrap();
        assert_abs_diff_eq!(b.vectors[[0, 0]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.vectors[[7, 7]].re, 1.0, epsilon = 1e-15);
        assert!(b.orthonormality_error() < 1e-12);
    }

    #[test]
    fn dark_state_and_energy() {
        let l = QubitLayout::cavity(10.0).with_drive(0.0, 0.4);
        let b = natural_dressed_states(&l).unwrap();
        let k = b.index_of("1b").unwrap();
        let s = 0.5f64.sqrt();
        assert!(overlap(&b.vector(k), &state(&[(4, s), (1, -s)])) > 1.0 - 1e-12);
        assert_abs_diff_eq!(b.eigenvalues[k], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn drive_does_not_reach_dark_state_from_ground() {
        let b = natural_dressed_states(&QubitLayout::cavity(10.0)).unwrap();
        let sp = HilbertSpace::qubits(3);
        let s = embed_lowering(1, &sp).unwrap();
        for op in [s.clone(), s.dagger()] {
            let v = op.apply(&b.vector(0));
            assert!(overlap(&b.vector(b.index_of("1b").unwrap()), &v) < 1e-14);
        }
    }

    #[test]
    fn weak_drive_is_continuous() {
        // detuned so that no two undriven levels coincide
        let nat = natural_dressed_states(&QubitLayout::cavity(10.0).with_drive(0.0, 0.3)).unwrap();
        let drv = driven_quasi_levels(&QubitLayout::cavity(10.0).with_drive(1e-4, 0.3)).unwrap();
        for (k, lab) in NATURAL_LABELS.iter().enumerate() {
            let i = drv.index_of(lab).expect("every level labelled at weak drive");
            assert!((drv.eigenvalues[i] - nat.eigenvalues[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn ground_only_populations_give_no_lines() {
        let l = QubitLayout::cavity(10.0);
        let b = natural_dressed_states(&l).unwrap();
        let mut rho = Array2::zeros((8, 8));
        rho[[0, 0]] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::new(HilbertSpace::qubits(3), rho).unwrap();
        let p = dressed_populations(&rho, &b);
        assert_abs_diff_eq!(p[0], 1.0);
        let t = transition_lines(&b, &p, &total_lowering(), &LineSelection::for_coupling(2.0));
        assert!(t.lines.is_empty());
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn populations_sum_to_one_and_lines_antisymmetric() {
        let a = DressedAnalysis::for_layout(&QubitLayout::cavity(10.0).with_drive(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(a.natural_populations.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.driven_populations.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        let e = &a.driven.eigenvalues;
        for t in &a.lines.lines {
            let i = (0..8).find(|&k| a.driven.name(k) == t.from).unwrap();
            let j = (0..8).find(|&k| a.driven.name(k) == t.to).unwrap();
            assert_abs_diff_eq!(t.frequency, -(e[j] - e[i]), epsilon = 1e-14);
        }
    }
}
