//! Property checks shared by the proptest suite and the acceptance run.
#![allow(dead_code)]

use proptest::prelude::*;
use wgqed::lindblad::{uniform_grid, RegisterModel, SpectrumSettings};
use wgqed::mps::{run, MpsRunConfig};
use wgqed::rates::{build_rate_matrices, QubitLayout};
use wgqed::tolerances;

/// Driven collinear layouts (mirror-mirror phase is the sum of the two
/// mirror-probe phases) with phases away from multiples of pi, where dark
/// subspaces would make the steady state non-unique.
pub fn layouts() -> impl Strategy<Value = QubitLayout> {
    let phase = || prop_oneof![0.2..2.9f64, 3.4..6.0f64];
    (0.0..10.0f64, 0.05..1.5f64, -1.0..1.0f64, phase(), phase()).prop_map(
        |(gm, omega, delta, a, b)| QubitLayout {
            phi_m1_p: a,
            phi_m2_p: b,
            phi_m1_m2: a + b,
            ..QubitLayout::cavity(gm).with_drive(omega, delta)
        },
    )
}

/// Cavity-phase layouts small enough for a short MPS run.
pub fn mps_layouts() -> impl Strategy<Value = QubitLayout> {
    (0.5..4.0f64, 0.1..1.0f64, -0.5..0.5f64).prop_map(|(gm, omega, delta)| QubitLayout::cavity(gm).with_drive(omega, delta))
}

pub fn check_rates(layout: &QubitLayout) -> Result<(), String> {
    let r = build_rate_matrices(layout).map_err(|e| e.to_string())?;
    for i in 0..3 {
        for j in 0..3 {
            let (gi, gj, gij) = (r.gamma[[i, i]], r.gamma[[j, j]], r.gamma[[i, j]]);
            if gij * gij > gi * gj * (1.0 + 1e-12) + 1e-14 {
                return Err(format!("Cauchy-Schwarz violated at ({i},{j}): {gij}^2 > {gi}*{gj}"));
            }
        }
    }
    let w = wgqed::lindblad::detection_weights(layout);
    if w.hermiticity_error() > tolerances::HERMITIAN {
        return Err(format!("detection weights not Hermitian: {:.2e}", w.hermiticity_error()));
    }
    Ok(())
}

/// Steady state is a density matrix and the spectrum is non-negative.
pub fn check_steady_state_and_spectrum(layout: &QubitLayout) -> Result<(), String> {
    let model = RegisterModel::new(layout).map_err(|e| e.to_string())?;
    let grid = uniform_grid(-8.0, 8.0, 161);
    let mut settings = SpectrumSettings::new(model.max_substep());
    settings.t_max = 60.0;
    settings.dt = 0.02;
    settings.normalization = wgqed::lindblad::Normalization::Raw;
    let out = model.spectrum(&grid, &settings).map_err(|e| e.to_string())?;
    let rho = out.steady.rho.matrix();
    let trace: f64 = rho.diag().iter().map(|z| z.re).sum();
    if (trace - 1.0).abs() > tolerances::DENSITY {
        return Err(format!("trace {trace}"));
    }
    let herm = rho.indexed_iter().map(|((i, j), z)| (z - rho[[j, i]].conj()).norm()).fold(0.0, f64::max);
    if herm > tolerances::HERMITIAN {
        return Err(format!("hermiticity error {herm:.2e}"));
    }
    let min = out.steady.rho.min_eigenvalue();
    if min < -tolerances::POSITIVITY {
        return Err(format!("negative eigenvalue {min:.2e}"));
    }
    let s = &out.spectrum;
    let max = s.total.iter().cloned().fold(0.0, f64::max);
    // the truncated correlation tail bounds how far below zero the transform may ring
    let floor = -(1e-9 + 4.0 * s.tail_residual) * max;
    if let Some((w, v)) = s.omega.iter().zip(&s.total).find(|(_, &v)| v < floor) {
        return Err(format!("spectrum {v:.3e} at {w} below {floor:.3e} (max {max:.3e}, tail {:.1e})", s.tail_residual));
    }
    Ok(())
}

pub fn check_mps_norm(layout: &QubitLayout) -> Result<(), String> {
    let c = MpsRunConfig::new(0.05).with_steps(120).with_t_cor(0.5);
    let r = run(layout, &c).map_err(|e| e.to_string())?;
    if r.norm_drift > tolerances::MPS_NORM_DRIFT {
        return Err(format!("norm drift {:.2e}", r.norm_drift));
    }
    Ok(())
}
