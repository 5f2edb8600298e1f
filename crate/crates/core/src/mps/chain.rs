//! Open-boundary MPS with a tracked orthogonality center. The rightmost bond
//! may stay open: it purifies sites that were dropped from the right end.

use ndarray::{s, Array2, Array3, Axis};
use ndarray_linalg::{JobSvd, QR, SVDDC};

use super::MpsError;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Largest discarded weight per split.
    pub cutoff: f64,
    pub chi_max: usize,
    /// A split discarding more than `abort_factor * cutoff` is an error.
    pub abort_factor: f64,
}

impl Truncation {
    pub fn new(cutoff: f64, chi_max: usize) -> Self {
        Self { cutoff, chi_max, abort_factor: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub sites: Vec<Array3<C64>>,
    pub center: usize,
    /// Discarded weight accumulated since the last `take_discarded`.
    discarded: f64,
    worst_split: f64,
}

/// Row-major reshape of an owned array of any memory layout.
fn std_shape<D: ndarray::Dimension, E: ndarray::IntoDimension>(
    a: ndarray::Array<C64, D>,
    shape: E,
) -> Result<ndarray::Array<C64, E::Dim>, ndarray::ShapeError> {
    let a = if a.is_standard_layout() { a } else { a.as_standard_layout().into_owned() };
    a.into_shape_with_order(shape)
}

fn conj_t(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

impl Chain {
    pub fn new(sites: Vec<Array3<C64>>, center: usize) -> Self {
        Self { sites, center, discarded: 0.0, worst_split: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|a| a.dim().2).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|a| a.dim().0.max(a.dim().2)).max().unwrap_or(1)
    }

    /// Returns and resets (accumulated, worst single split) discarded weight.
    pub fn take_discarded(&mut self) -> (f64, f64) {
        let out = (self.discarded, self.worst_split);
        self.discarded = 0.0;
        self.worst_split = 0.0;
        out
    }

    fn site_matrix_left(a: &Array3<C64>) -> Array2<C64> {
        let (l, d, r) = a.dim();
        std_shape(a.clone(), (l * d, r)).unwrap()
    }

    fn site_matrix_right(a: &Array3<C64>) -> Array2<C64> {
        let (l, d, r) = a.dim();
        std_shape(a.clone(), (l, d * r)).unwrap()
    }

    fn move_right(&mut self) -> Result<(), MpsError> {
        let i = self.center;
        let (l, d, _) = self.sites[i].dim();
        let (q, r) = Self::site_matrix_left(&self.sites[i]).qr()?;
        let k = q.ncols();
        self.sites[i] = std_shape(q, (l, d, k)).unwrap();
        let next = &self.sites[i + 1];
        let (_, d2, r2) = next.dim();
        let m = r.dot(&Self::site_matrix_right(next));
        self.sites[i + 1] = std_shape(m, (k, d2, r2)).unwrap();
        self.center = i + 1;
        Ok(())
    }

    fn move_left(&mut self) -> Result<(), MpsError> {
        let i = self.center;
        let (_, d, r) = self.sites[i].dim();
        let m = Self::site_matrix_right(&self.sites[i]);
        // A = R^dagger Q^dagger with Q R the QR factorization of A^dagger
        let (q, rr) = conj_t(&m).qr()?;
        let k = q.ncols();
        self.sites[i] = std_shape(conj_t(&q), (k, d, r)).unwrap();
        let prev = &self.sites[i - 1];
        let (l0, d0, _) = prev.dim();
        let m = Self::site_matrix_left(prev).dot(&conj_t(&rr));
        self.sites[i - 1] = std_shape(m, (l0, d0, k)).unwrap();
        self.center = i - 1;
        Ok(())
    }

    pub fn move_center_to(&mut self, j: usize) -> Result<(), MpsError> {
        while self.center < j {
            self.move_right()?;
        }
        while self.center > j {
            self.move_left()?;
        }
        Ok(())
    }

    /// Truncated SVD of `m`; returns `(U, s, Vh)` with the kept singular
    /// values rescaled to the original total weight.
    fn truncated_svd(&mut self, m: &Array2<C64>, trunc: &Truncation) -> Result<(Array2<C64>, Vec<f64>, Array2<C64>), MpsError> {
        let (u, s, vt) = m.svddc(JobSvd::Some)?;
        let u = u.expect("U requested");
        let vt = vt.expect("Vh requested");
        let total: f64 = s.iter().map(|x| x * x).sum();
        if total == 0.0 {
            return Err(MpsError::ZeroNorm);
        }
        let mut keep = s.len();
        let mut tail = 0.0;
        while keep > 1 {
            let w = s[keep - 1] * s[keep - 1];
            if (tail + w) / total > trunc.cutoff {
                break;
            }
            tail += w;
            keep -= 1;
        }
        while keep > trunc.chi_max {
            tail += s[keep - 1] * s[keep - 1];
            keep -= 1;
        }
        let discarded = tail / total;
        if discarded > trunc.abort_factor * trunc.cutoff {
            return Err(MpsError::Truncation { discarded, cutoff: trunc.cutoff, chi: keep });
        }
        self.discarded += discarded;
        self.worst_split = self.worst_split.max(discarded);
        let scale = (total / (total - tail)).sqrt();
        let sv: Vec<f64> = s.iter().take(keep).map(|x| x * scale).collect();
        Ok((u.slice(s![.., ..keep]).to_owned(), sv, vt.slice(s![..keep, ..]).to_owned()))
    }

    /// Contracts sites `i..i+n` into `(chi_l, D, chi_r)`; the center must
    /// lie inside the range.
    pub fn contract(&self, i: usize, n: usize) -> Array3<C64> {
        let (l, d0, _) = self.sites[i].dim();
        let mut acc = Self::site_matrix_left(&self.sites[i]);
        let mut phys = d0;
        for k in 1..n {
            let a = &self.sites[i + k];
            let (_, d, r) = a.dim();
            acc = acc.dot(&Self::site_matrix_right(a));
            phys *= d;
            acc = std_shape(acc, (l * phys, r)).unwrap();
        }
        let r = acc.ncols();
        std_shape(acc, (l, phys, r)).unwrap()
    }

    /// Splits `theta = (chi_l, prod(dims), chi_r)` into `dims.len()` sites
    /// from the right. The first returned site carries the center.
    fn split(&mut self, theta: Array3<C64>, dims: &[usize], trunc: &Truncation) -> Result<Vec<Array3<C64>>, MpsError> {
        let (l, total, r) = theta.dim();
        debug_assert_eq!(total, dims.iter().product::<usize>());
        let mut out = Vec::with_capacity(dims.len());
        let mut rest = std_shape(theta, (l * total, r)).unwrap();
        let mut left_phys = total;
        let mut right_bond = r;
        for &d in dims[1..].iter().rev() {
            left_phys /= d;
            let m = std_shape(rest, (l * left_phys, d * right_bond)).unwrap();
            let (u, sv, vt) = self.truncated_svd(&m, trunc)?;
            let k = sv.len();
            out.push(std_shape(vt, (k, d, right_bond)).unwrap());
            let mut us = u;
            for (mut col, &x) in us.axis_iter_mut(Axis(1)).zip(&sv) {
                col.mapv_inplace(|z| z * x);
            }
            rest = us;
            right_bond = k;
        }
        out.push(std_shape(rest, (l, dims[0], right_bond)).unwrap());
        out.reverse();
        Ok(out)
    }

    /// Applies `gate` (`d_out x d_in`) to sites `i..i+n_in` and replaces them
    /// with sites of physical dimensions `out_dims`. Center ends at `i`.
    pub fn apply(&mut self, i: usize, n_in: usize, gate: &Array2<C64>, out_dims: &[usize], trunc: &Truncation) -> Result<(), MpsError> {
        if self.center < i || self.center >= i + n_in {
            self.move_center_to(i)?;
        }
        let theta = self.contract(i, n_in);
        let (l, d_in, r) = theta.dim();
        assert_eq!(gate.ncols(), d_in, "gate input dimension");
        let d_out = gate.nrows();
        let flat = std_shape(theta.permuted_axes([1, 0, 2]), (d_in, l * r)).unwrap();
        let applied = std_shape(gate.dot(&flat), (d_out, l, r)).unwrap();
        let theta = applied.permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
        let new_sites = self.split(theta, out_dims, trunc)?;
        self.sites.splice(i..i + n_in, new_sites);
        self.center = i;
        Ok(())
    }

    /// Exchanges sites `i` and `i+1`; the center ends on the left or right one.
    pub fn swap(&mut self, i: usize, center_left: bool, trunc: &Truncation) -> Result<(), MpsError> {
        if self.center != i && self.center != i + 1 {
            self.move_center_to(if self.center < i { i } else { i + 1 })?;
        }
        let (l, d1, _) = self.sites[i].dim();
        let (_, d2, r) = self.sites[i + 1].dim();
        let theta = std_shape(self.contract(i, 2), (l, d1, d2, r)).unwrap();
        let swapped = theta.permuted_axes([0, 2, 1, 3]).as_standard_layout().into_owned();
        let m = std_shape(swapped, (l * d2, d1 * r)).unwrap();
        let (mut u, sv, mut vt) = self.truncated_svd(&m, trunc)?;
        let k = sv.len();
        if center_left {
            for (mut col, &x) in u.axis_iter_mut(Axis(1)).zip(&sv) {
                col.mapv_inplace(|z| z * x);
            }
        } else {
            for (mut row, &x) in vt.axis_iter_mut(Axis(0)).zip(&sv) {
                row.mapv_inplace(|z| z * x);
            }
        }
        self.sites[i] = std_shape(u, (l, d2, k)).unwrap();
        self.sites[i + 1] = std_shape(vt, (k, d1, r)).unwrap();
        self.center = if center_left { i } else { i + 1 };
        Ok(())
    }

    /// Moves site `from` to position `to < from`, shifting the sites between.
    pub fn move_site_left(&mut self, from: usize, to: usize, trunc: &Truncation) -> Result<(), MpsError> {
        self.move_center_to(from)?;
        for p in (to..from).rev() {
            self.swap(p, true, trunc)?;
        }
        Ok(())
    }

    /// Removes the rightmost site, keeping its left bond as the open
    /// purifying bond. The center must lie to its left.
    pub fn drop_last(&mut self) -> Result<(), MpsError> {
        if self.center + 1 >= self.sites.len() {
            return Err(MpsError::Internal("cannot drop the site holding the center".into()));
        }
        self.sites.pop();
        Ok(())
    }

    /// `E' = sum_{s,t} O[t,s] A[.,s,.]^T E conj(A[.,t,.])`.
    pub fn transfer(e: &Array2<C64>, a: &Array3<C64>, op: Option<&Array2<C64>>) -> Array2<C64> {
        let (_, d, r) = a.dim();
        let mut out = Array2::<C64>::zeros((r, r));
        for t in 0..d {
            let x: Array2<C64> = match op {
                None => a.index_axis(Axis(1), t).to_owned(),
                Some(o) => {
                    let mut x = Array2::<C64>::zeros((a.dim().0, r));
                    for s in 0..d {
                        let c = o[[t, s]];
                        if c != C64::new(0.0, 0.0) {
                            x.scaled_add(c, &a.index_axis(Axis(1), s));
                        }
                    }
                    x
                }
            };
            let conj_a = a.index_axis(Axis(1), t).mapv(|z| z.conj());
            out = out + x.t().dot(&e.dot(&conj_a));
        }
        out
    }

    /// Full `<psi|psi>`, tracing the open right bond.
    pub fn norm_sq(&self) -> f64 {
        let mut e = Array2::<C64>::eye(self.sites[0].dim().0);
        for a in &self.sites {
            e = Self::transfer(&e, a, None);
        }
        e.diag().iter().map(|z| z.re).sum()
    }

    /// Density matrix of the physical leg of the center site.
    pub fn center_density(&self) -> Array2<C64> {
        let a = &self.sites[self.center];
        let (l, d, r) = a.dim();
        let m = a.as_standard_layout().into_owned().permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
        let m = std_shape(m, (d, l * r)).unwrap();
        m.dot(&conj_t(&m))
    }
}
