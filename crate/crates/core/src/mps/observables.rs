//! Output-field correlations, spectra and cavity photon statistics.

use std::collections::BTreeMap;

use ndarray::Array2;

use super::chain::Chain;
use super::gates::bin_lowering;
use super::{MpsError, TimeBinMps};
use crate::lindblad::{half_sided_transform, Normalization, SpectrumSeries};
use crate::tolerances;
use crate::C64;

#[derive(Debug, Clone)]
pub struct OutputCorrelations {
    /// `<b_q^dag b_{q-p}>` for the newest right-moving output bin `q`.
    pub raw: Vec<C64>,
    /// `<b_{q-p}>`.
    pub mean: Vec<C64>,
    /// `raw[p] - conj(mean[0]) mean[p]`.
    pub connected: Vec<C64>,
}

fn trace(e: &Array2<C64>) -> C64 {
    e.diag().sum()
}

/// Correlations of the right-moving output (just past the right mirror)
/// over `window` bins. Output sites are right-canonical, so every
/// expectation value closes with a trace.
pub fn output_correlations(mps: &mut TimeBinMps, window: usize) -> Result<OutputCorrelations, MpsError> {
    let s = mps.system_site();
    mps.chain.move_center_to(s)?;
    let available = mps.output_steps();
    let window = window.min(available);
    let b = bin_lowering(mps.d_bin);
    let bd = b.t().mapv(|z| z.conj());
    let n_op = bd.dot(&b);
    let chain = &mps.chain;
    let dl = chain.sites[s].dim().0;
    let env0 = Chain::transfer(&Array2::eye(dl), &chain.sites[s], None);
    let mut raw = Vec::with_capacity(window);
    let mut mean = Vec::with_capacity(window);
    let mut with_bd = env0.clone();
    let mut plain = env0;
    for p in 0..window {
        let site = s + 1 + 2 * p;
        let a = &chain.sites[site];
        if p == 0 {
            raw.push(trace(&Chain::transfer(&plain, a, Some(&n_op))));
            mean.push(trace(&Chain::transfer(&plain, a, Some(&b))));
            with_bd = Chain::transfer(&with_bd, a, Some(&bd));
        } else {
            raw.push(trace(&Chain::transfer(&with_bd, a, Some(&b))));
            mean.push(trace(&Chain::transfer(&plain, a, Some(&b))));
            with_bd = Chain::transfer(&with_bd, a, None);
        }
        plain = Chain::transfer(&plain, a, None);
        if p + 1 < window {
            let l_site = &chain.sites[site + 1];
            with_bd = Chain::transfer(&with_bd, l_site, None);
            plain = Chain::transfer(&plain, l_site, None);
        }
    }
    let connected = raw.iter().zip(&mean).map(|(r, m)| r - mean.first().copied().unwrap_or_default().conj() * m).collect();
    Ok(OutputCorrelations { raw, mean, connected })
}

/// `S(w) = 2 Re int_0^T C(t) exp(+i w t) dt` with `C(p dt) = connected[p] / dt`.
/// The bin couplings carry propagation phases `exp(-i phi)`, the conjugate of
/// the master-equation convention, so the transform sign is flipped as well
/// and both engines place a line at the same `w`.
pub fn output_spectrum(corr: &OutputCorrelations, dt: f64, omega_grid: &[f64], normalization: Normalization) -> SpectrumSeries {
    let c: Vec<C64> = corr.connected.iter().map(|z| z / dt).collect();
    let conj: Vec<C64> = c.iter().map(|z| z.conj()).collect();
    let s0: Vec<C64> = half_sided_transform(&conj, dt, omega_grid).into_iter().map(|z| z.conj()).collect();
    let total = s0.iter().map(|z| 2.0 * z.re).collect();
    let c0 = c.first().map(|z| z.norm()).unwrap_or(0.0);
    let tail_residual = match c.last() {
        Some(z) if c0 > 0.0 => z.norm() / c0,
        _ => 0.0,
    };
    let mut warnings = Vec::new();
    if tail_residual > tolerances::CORRELATION_TAIL {
        warnings.push(format!("output correlation tail {tail_residual:.3e} of its zero-delay value at t = {}", dt * c.len() as f64));
    }
    let mut per_term = BTreeMap::new();
    per_term.insert((0, 0), s0);
    SpectrumSeries {
        omega: omega_grid.to_vec(),
        total,
        per_term,
        normalization: Normalization::Raw,
        scale: 1.0,
        tail_residual,
        warnings,
    }
    .normalized(normalization)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonProbabilities {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// `norm - p0 - p1 - p2`.
    pub rest: f64,
}

/// Probabilities of 0, 1 and 2 photons in total over bins `region`, which
/// must lie left of the system site.
pub fn photon_probabilities(mps: &mut TimeBinMps, region: std::ops::Range<usize>) -> Result<PhotonProbabilities, MpsError> {
    let s = mps.system_site();
    if region.is_empty() || region.end > s {
        return Err(MpsError::Region(region));
    }
    mps.chain.move_center_to(s)?;
    let chain = &mps.chain;
    let d = mps.d_bin;
    let proj: Vec<Array2<C64>> = (0..d)
        .map(|n| {
            let mut p = Array2::zeros((d, d));
            p[[n, n]] = C64::new(1.0, 0.0);
            p
        })
        .collect();
    let dl = chain.sites[region.start].dim().0;
    // env[n]: weight of exactly n photons so far
    let mut env: Vec<Array2<C64>> = vec![Array2::eye(dl), Array2::zeros((dl, dl)), Array2::zeros((dl, dl))];
    for i in region.clone() {
        let a = &chain.sites[i];
        let r = a.dim().2;
        let mut next = vec![Array2::<C64>::zeros((r, r)); 3];
        for (n, e) in env.iter().enumerate() {
            if e.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            for (j, pj) in proj.iter().enumerate() {
                if n + j <= 2 {
                    next[n + j] = &next[n + j] + &Chain::transfer(e, a, Some(pj));
                }
            }
        }
        env = next;
    }
    for i in region.end..=s {
        for e in env.iter_mut() {
            *e = Chain::transfer(e, &chain.sites[i], None);
        }
    }
    let p: Vec<f64> = env.iter().map(|e| trace(e).re).collect();
    let norm = chain.center_density().diag().iter().map(|z| z.re).sum::<f64>();
    Ok(PhotonProbabilities { p0: p[0], p1: p[1], p2: p[2], rest: norm - p[0] - p[1] - p[2] })
}

/// Relative spread `(max - min) / |mean|` of consecutive window averages of
/// `series`; `None` when fewer than two windows fit.
pub fn stationarity_drift(series: &[f64], dt: f64, window_time: f64) -> Option<f64> {
    let w = ((window_time / dt).round() as usize).max(1);
    let n = series.len() / w;
    if n < 2 {
        return None;
    }
    let start = series.len() - n * w;
    let means: Vec<f64> = series[start..].chunks(w).map(|c| c.iter().sum::<f64>() / w as f64).collect();
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = means.iter().sum::<f64>() / n as f64;
    if mean.abs() < 1e-300 {
        return Some(if hi - lo == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Some((hi - lo) / mean.abs())
}
