//! Row-compressed complex matrices for operator-form master equations.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone)]
pub struct SparseOp {
    n: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    pub fn from_dense(m: ArrayView2<C64>) -> Self {
        let n = m.nrows();
        let rows = (0..n)
            .map(|i| (0..m.ncols()).filter(|&j| m[[i, j]] != C64::new(0.0, 0.0)).map(|j| (j, m[[i, j]])).collect())
            .collect();
        Self { n, rows }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn dagger(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                rows[j].push((i, a.conj()));
            }
        }
        Self { n: self.n, rows }
    }

    /// `out += c * (self . x)`
    pub fn left_mul_acc(&self, c: C64, x: &Array2<C64>, out: &mut Array2<C64>) {
        let m = x.ncols();
        let xs = x.as_standard_layout();
        let xs = xs.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("output in standard layout");
        for (i, row) in self.rows.iter().enumerate() {
            let orow = &mut os[i * m..(i + 1) * m];
            for &(k, a) in row {
                let f = c * a;
                for (o, v) in orow.iter_mut().zip(&xs[k * m..(k + 1) * m]) {
                    *o += f * v;
                }
            }
        }
    }

    /// `out += c * (x . self)`
    pub fn right_mul_acc(&self, c: C64, x: &Array2<C64>, out: &mut Array2<C64>) {
        let n = self.n;
        let xs = x.as_standard_layout();
        let xs = xs.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("output in standard layout");
        for i in 0..x.nrows() {
            let xrow = &xs[i * n..(i + 1) * n];
            let orow = &mut os[i * n..(i + 1) * n];
            for (k, row) in self.rows.iter().enumerate() {
                let xv = c * xrow[k];
                if xv == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(j, a) in row {
                    orow[j] += xv * a;
                }
            }
        }
    }

    pub fn left_mul(&self, x: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(x.raw_dim());
        self.left_mul_acc(C64::new(1.0, 0.0), x, &mut out);
        out
    }

    pub fn right_mul(&self, x: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(x.raw_dim());
        self.right_mul_acc(C64::new(1.0, 0.0), x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_products() {
        let a = Array2::from_shape_fn((4, 4), |(i, j)| {
            if (i + 2 * j) % 3 == 0 {
                C64::new(i as f64 - 1.0, j as f64 * 0.5)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let x = Array2::from_shape_fn((4, 4), |(i, j)| C64::new((i * 4 + j) as f64, -(i as f64)));
        let s = SparseOp::from_dense(a.view());
        let l = s.left_mul(&x) - a.dot(&x);
        let r = s.right_mul(&x) - x.dot(&a);
        let d = s.dagger().left_mul(&x) - a.t().mapv(|z| z.conj()).dot(&x);
        for m in [l, r, d] {
            assert!(m.iter().all(|z| z.norm() < 1e-12));
        }
    }
}
