//! Prediction of the excess essential spectrum from the Green diagonal.

use serde::Serialize;

use super::SpectralError;
use crate::kernel::WalkKernel;
use crate::potential::PotentialSpec;
use crate::resolvent::{g_lambda, ResolventError};

/// Roots of `g_λ(0) = 1 + 1/v` for one essential value `v`.
#[derive(Clone, Debug, Serialize)]
pub struct EssentialBranch {
    pub v: f64,
    pub target: f64,
    pub above: f64,
    pub below: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EssentialPrediction {
    pub branches: Vec<EssentialBranch>,
    /// All predicted points, ascending.
    pub lambda_set: Vec<f64>,
    /// Root above 1 for `v₀`; absent when `v₀ = 0`.
    pub lambda0: Option<f64>,
}

/// `λ±(v)` for the lazy walk on ℤ.
pub fn lambda_pm_1d(q: f64, v: f64) -> Result<(f64, f64), SpectralError> {
    if !(0.0..1.0).contains(&q) || !(v > 0.0) {
        return Err(SpectralError::InvalidArgument(format!(
            "need 0 <= q < 1 and v > 0, got q = {q}, v = {v}"
        )));
    }
    let c = (v + 1.0).powi(2) / (2.0 * v + 1.0);
    let root = (q * q - (2.0 * q - 1.0) / c).sqrt();
    Ok((c * (q - root), c * (q + root)))
}

fn g0(k: &WalkKernel, lambda: f64) -> Result<f64, ResolventError> {
    g_lambda(k, lambda).map(|e| e.value)
}

fn bisect<F>(mut lo: f64, mut hi: f64, f: F) -> Result<f64, SpectralError>
where
    F: Fn(f64) -> Result<f64, ResolventError>,
{
    let f_lo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid)?;
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The unique `λ > 1` with `g_λ(0) = 1 + 1/v`.
pub fn root_above_one(k: &WalkKernel, v: f64) -> Result<f64, SpectralError> {
    let target = 1.0 + 1.0 / v;
    let f = |l: f64| g0(k, l).map(|g| g - target);
    let mut hi = 2.0;
    while f(hi)? > 0.0 {
        hi = 1.0 + 2.0 * (hi - 1.0);
    }
    let mut h = hi - 1.0;
    loop {
        h *= 0.5;
        if h < 1e-12 {
            return Err(SpectralError::NoRootAboveOne { v });
        }
        match f(1.0 + h) {
            Ok(val) if val > 0.0 => return bisect(1.0 + h, hi, f),
            Ok(_) => hi = 1.0 + h,
            Err(ResolventError::QuadratureNotConverged { .. }) => {
                return Err(SpectralError::NoRootAboveOne { v })
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// All `λ < ℓ(P)` with `g_λ(0) = 1 + 1/v`, found by a log-spaced scan
/// toward `ℓ(P)` followed by bisection of every sign change.
pub fn roots_below_spectrum(k: &WalkKernel, v: f64) -> Result<Vec<f64>, SpectralError> {
    let lower = k.spectrum().lower;
    if lower >= 0.0 {
        // λ/(λ − p̂) < 1 there, so the target above 1 is never reached.
        return Ok(Vec::new());
    }
    let target = 1.0 + 1.0 / v;
    let f = |l: f64| g0(k, l).map(|g| g - target);
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    const PER_DECADE: i32 = 8;
    for step in 0..=(15 * PER_DECADE) {
        let t = 10f64.powf(3.0 - step as f64 / PER_DECADE as f64);
        let lam = lower - t;
        let val = match f(lam) {
            Ok(x) => x,
            Err(ResolventError::QuadratureNotConverged { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        if let Some((pl, pv)) = prev {
            if (pv > 0.0) != (val > 0.0) {
                roots.push(bisect(pl, lam, f)?);
            }
        }
        if val > target {
            break;
        }
        prev = Some((lam, val));
    }
    Ok(roots)
}

/// `Λ_V` from the declared essential values of `V`.
pub fn essential_spectrum_predictor(
    k: &WalkKernel,
    spec: &PotentialSpec,
) -> Result<EssentialPrediction, SpectralError> {
    let mut branches = Vec::new();
    for &v in spec.declared_essential_values() {
        if v <= 0.0 {
            continue;
        }
        let above = root_above_one(k, v)?;
        let below = roots_below_spectrum(k, v)?;
        branches.push(EssentialBranch {
            v,
            target: 1.0 + 1.0 / v,
            above,
            below,
        });
    }
    let mut lambda_set: Vec<f64> = branches
        .iter()
        .flat_map(|b| std::iter::once(b.above).chain(b.below.iter().copied()))
        .collect();
    lambda_set.sort_by(f64::total_cmp);
    let v0 = spec.v0();
    let lambda0 = branches.iter().find(|b| b.v == v0).map(|b| b.above);
    Ok(EssentialPrediction {
        branches,
        lambda_set,
        lambda0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::GeometricSparse;
    use crate::resolvent::{g_lambda_closed_1d, g_lambda_quadrature};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn lambda_pm_simple_walk() {
        let (lm, lp) = lambda_pm_1d(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(lp, 2.0 / 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(lm, -2.0 / 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(g_lambda_closed_1d(0.0, lp, 0).unwrap().value, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn prediction_branches_in_one_dimension() {
        let v = GeometricSparse::new(1, 1.0, 3).build().unwrap();
        let pred = essential_spectrum_predictor(&WalkKernel::simple1d(), &v).unwrap();
        let s = 2.0 / 3f64.sqrt();
        assert_eq!(pred.lambda_set.len(), 2);
        assert_abs_diff_eq!(pred.lambda_set[0], -s, epsilon = 1e-12);
        assert_abs_diff_eq!(pred.lambda_set[1], s, epsilon = 1e-12);
        assert_abs_diff_eq!(pred.lambda0.unwrap(), s, epsilon = 1e-12);

        let lazy = WalkKernel::lazy1d(0.6).unwrap();
        let pred = essential_spectrum_predictor(&lazy, &v).unwrap();
        assert_eq!(pred.lambda_set.len(), 1);
        assert_abs_diff_eq!(pred.lambda_set[0], lambda_pm_1d(0.6, 1.0).unwrap().1, epsilon = 1e-12);
    }

    #[test]
    fn two_dimensional_root_exists_and_rechecks() {
        let v = GeometricSparse::new(2, 1.0, 3).build().unwrap();
        let k = WalkKernel::simple2d();
        let pred = essential_spectrum_predictor(&k, &v).unwrap();
        let l0 = pred.lambda0.unwrap();
        assert!(l0 > 1.0);
        let g = g_lambda_quadrature(&k, l0, 128).unwrap().value;
        assert_abs_diff_eq!(g, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_v0_has_no_prediction() {
        let v = crate::potential::PotentialSpec::decaying(1, 1.0, 2.0, 20).unwrap();
        let pred = essential_spectrum_predictor(&WalkKernel::simple1d(), &v).unwrap();
        assert!(pred.lambda_set.is_empty() && pred.lambda0.is_none());
    }

    proptest! {
        #[test]
        fn lambda_pm_brackets_spectrum(q in 0.0f64..0.99, v in 0.01f64..50.0) {
            let (lm, lp) = lambda_pm_1d(q, v).unwrap();
            prop_assert!(lp > 1.0);
            prop_assert!(lm < 2.0 * q - 1.0);
            let g = g_lambda_closed_1d(q, lp, 0).unwrap().value;
            prop_assert!((g - (1.0 + 1.0 / v)).abs() < 1e-8 * (1.0 + 1.0 / v));
        }

        #[test]
        fn root_finder_matches_formula(q in 0.0f64..0.45, v in 0.2f64..5.0) {
            let k = WalkKernel::lazy1d(q).unwrap();
            let (lm, lp) = lambda_pm_1d(q, v).unwrap();
            prop_assert!((root_above_one(&k, v).unwrap() - lp).abs() < 1e-10);
            let below = roots_below_spectrum(&k, v).unwrap();
            prop_assert!(below.iter().any(|r| (r - lm).abs() < 1e-9), "{:?} vs {}", below, lm);
        }
    }
}
