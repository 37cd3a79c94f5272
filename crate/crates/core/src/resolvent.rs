//! Green functions of the free walk: `G_λ = (λ − P)^{-1}` and the scaled
//! diagonal `g_λ(x) = λ G_λ(0, x)`.
//!
//! Three independent evaluators are provided so that each can be checked
//! against the others: the nearest-neighbour closed form on ℤ, periodic
//! trapezoidal quadrature on the torus, and the Neumann series in `1/λ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::WalkKernel;
use crate::lattice::Point;

/// Default starting resolution for torus quadrature.
pub const DEFAULT_QUAD_POINTS: usize = 64;

/// Relative stopping tolerance for quadrature doubling.
const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolventError {
    #[error("lambda = {lambda} lies in the spectrum [{lower}, {upper}]")]
    LambdaInSpectrum { lambda: f64, lower: f64, upper: f64 },
    #[error("quadrature did not converge at {points} points per axis (ratio {ratio:.3})")]
    QuadratureNotConverged { points: usize, ratio: f64 },
    #[error("Neumann series diverges for |lambda| = {0} <= 1")]
    SeriesDiverges(f64),
    #[error("decay fit needs at least 8 points, got {0}")]
    TooFewPoints(usize),
    #[error("value {value} at distance {distance} is not positive")]
    NonPositiveValue { distance: f64, value: f64 },
    #[error("fitted slope {slope} is not decaying")]
    NotDecaying { slope: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenMethod {
    #[serde(rename = "closed_1d")]
    ClosedForm1d,
    Quadrature,
    Series,
}

impl GreenMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            GreenMethod::ClosedForm1d => "closed_1d",
            GreenMethod::Quadrature => "quadrature",
            GreenMethod::Series => "series",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenEvaluation {
    pub lambda: f64,
    pub value: f64,
    pub method: GreenMethod,
    pub est_error: f64,
}

/// Least-squares fit `value ≈ prefactor · exp(−rate · distance)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    /// RMS of the residuals in log space.
    pub residual: f64,
    pub points: usize,
}

fn check_off_spectrum(k: &WalkKernel, lambda: f64) -> Result<(), ResolventError> {
    let s = k.spectrum();
    if !lambda.is_finite() || s.contains(lambda) {
        return Err(ResolventError::LambdaInSpectrum {
            lambda,
            lower: s.lower,
            upper: s.upper,
        });
    }
    Ok(())
}

/// `G_λ(0, x)` for every `x` in `xs`, sharing one torus grid.
///
/// The grid is doubled from `max(pts, 4|x|_∞ + 8)` until every value moves
/// by less than `1e−13 · max(1, |G|)`; the returned error is the size of the
/// last change.
pub fn green_batch(
    k: &WalkKernel,
    lambda: f64,
    xs: &[Point],
    pts_per_axis: usize,
) -> Result<(Vec<f64>, f64), ResolventError> {
    check_off_spectrum(k, lambda)?;
    if xs.iter().any(|x| x.dim() != k.dim()) {
        return Err(ResolventError::InvalidArgument(
            "site dimension differs from kernel dimension".into(),
        ));
    }
    let d = k.dim();
    let cap = match d {
        1 => 1 << 22,
        2 => 4096,
        _ => 256,
    };
    let reach = xs.iter().map(|x| x.norm_inf()).max().unwrap_or(0) as usize;
    let mut n = pts_per_axis.max(4 * reach + 8).next_power_of_two().min(cap / 2);
    let mut prev = torus_average(k, lambda, xs, n);
    let mut prev_diff = f64::INFINITY;
    loop {
        let next_n = 2 * n;
        if next_n > cap {
            return Err(ResolventError::QuadratureNotConverged {
                points: n,
                ratio: 1.0,
            });
        }
        let cur = torus_average(k, lambda, xs, next_n);
        let diff = max_abs_diff(&cur, &prev);
        let scale = cur.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if diff <= QUAD_TOL * scale {
            return Ok((cur, diff));
        }
        if 2 * next_n > cap {
            let ratio = diff / prev_diff;
            if ratio > 0.5 || !ratio.is_finite() {
                return Err(ResolventError::QuadratureNotConverged {
                    points: next_n,
                    ratio,
                });
            }
            return Ok((cur, diff * ratio / (1.0 - ratio)));
        }
        prev = cur;
        prev_diff = diff;
        n = next_n;
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Trapezoidal average of `cos(θ·x)/(λ − p̂(θ))` over an `n^d` grid.
///
/// Rows of the grid (fixed first coordinate) are summed in parallel and then
/// reduced in index order so that results do not depend on thread count.
fn torus_average(k: &WalkKernel, lambda: f64, xs: &[Point], n: usize) -> Vec<f64> {
    let d = k.dim();
    let h = 2.0 * PI / n as f64;
    let inner = n.pow(d as u32 - 1);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut acc = vec![0.0; xs.len()];
            let mut theta = vec![0.0; d];
            theta[0] = h * i0 as f64;
            for rest in 0..inner {
                let mut r = rest;
                for t in theta.iter_mut().skip(1) {
                    *t = h * (r % n) as f64;
                    r /= n;
                }
                let w = 1.0 / (lambda - k.char_function(&theta));
                for (a, x) in acc.iter_mut().zip(xs) {
                    *a += w * x.dot(&theta).cos();
                }
            }
            acc
        })
        .collect();
    let total = (n * inner) as f64;
    let mut out = vec![0.0; xs.len()];
    for row in rows {
        for (o, r) in out.iter_mut().zip(row) {
            *o += r;
        }
    }
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// `g_λ(0) = λ G_λ(0, 0)` by torus quadrature.
pub fn g_lambda_quadrature(
    k: &WalkKernel,
    lambda: f64,
    pts_per_axis: usize,
) -> Result<GreenEvaluation, ResolventError> {
    if pts_per_axis < 64 {
        return Err(ResolventError::InvalidArgument(format!(
            "{pts_per_axis} quadrature points per axis, need at least 64"
        )));
    }
    let (vals, err) = green_batch(k, lambda, &[Point::origin(k.dim())], pts_per_axis)?;
    Ok(GreenEvaluation {
        lambda,
        value: lambda * vals[0],
        method: GreenMethod::Quadrature,
        est_error: lambda.abs() * err,
    })
}

/// `G_λ(0, x)` by torus quadrature.
pub fn green_kernel(
    k: &WalkKernel,
    lambda: f64,
    x: &Point,
    pts_per_axis: usize,
) -> Result<GreenEvaluation, ResolventError> {
    let (vals, err) = green_batch(k, lambda, &[*x], pts_per_axis)?;
    Ok(GreenEvaluation {
        lambda,
        value: vals[0],
        method: GreenMethod::Quadrature,
        est_error: err,
    })
}

/// `g_λ(0) = Σ_n λ^{−n} p_n(0)` for `|λ| > 1`.
pub fn g_lambda_series(
    k: &WalkKernel,
    lambda: f64,
    tol: f64,
) -> Result<GreenEvaluation, ResolventError> {
    let a = lambda.abs();
    if !(a > 1.0) {
        return Err(ResolventError::SeriesDiverges(a));
    }
    if !(tol > 0.0) {
        return Err(ResolventError::InvalidArgument("tolerance must be positive".into()));
    }
    // Terms are bounded by |λ|^{−n}; stop once that bound is below the target.
    let shrink = 1.0 - 1.0 / a;
    let n_max = ((tol * shrink).ln() / (-a.ln())).ceil().max(1.0) as usize;
    let probs = k.return_probabilities(n_max);
    let inv = 1.0 / lambda;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for p in probs {
        sum += pow * p;
        pow *= inv;
    }
    Ok(GreenEvaluation {
        lambda,
        value: sum,
        method: GreenMethod::Series,
        est_error: a.powi(-(n_max as i32 + 1)) / shrink,
    })
}

/// Closed form of `g_λ(x)` for the lazy nearest-neighbour walk on ℤ.
pub fn g_lambda_closed_1d(q: f64, lambda: f64, x: i64) -> Result<GreenEvaluation, ResolventError> {
    if !(0.0..1.0).contains(&q) {
        return Err(ResolventError::InvalidArgument(format!(
            "laziness q = {q} must lie in [0, 1)"
        )));
    }
    let lower = 2.0 * q - 1.0;
    if !lambda.is_finite() || (lower..=1.0).contains(&lambda) {
        return Err(ResolventError::LambdaInSpectrum {
            lambda,
            lower,
            upper: 1.0,
        });
    }
    let delta = (lambda - 1.0) * (lambda - lower);
    let root = delta.sqrt();
    let ratio = (lambda - q - root) / (1.0 - q);
    let n = x.unsigned_abs() as i32;
    let value = if lambda > 1.0 {
        lambda / root * ratio.powi(n)
    } else {
        -(lambda / root) * ratio.powi(-n)
    };
    Ok(GreenEvaluation {
        lambda,
        value,
        method: GreenMethod::ClosedForm1d,
        est_error: 4.0 * f64::EPSILON * value.abs(),
    })
}

/// Geometric ratio of `g_λ(x+1)/g_λ(x)` for the lazy walk on ℤ, `λ > 1`.
pub fn closed_1d_decay_base(q: f64, lambda: f64) -> f64 {
    let delta = (lambda - 1.0) * (lambda - (2.0 * q - 1.0));
    (lambda - q - delta.sqrt()) / (1.0 - q)
}

/// `G_λ(0, x)` for every `x`, by the closed form when the kernel is a lazy
/// walk on ℤ and by shared-grid quadrature otherwise.
pub fn green_values(
    k: &WalkKernel,
    lambda: f64,
    xs: &[Point],
) -> Result<Vec<f64>, ResolventError> {
    check_off_spectrum(k, lambda)?;
    match k.lazy1d_parameter() {
        Some(q) => xs
            .iter()
            .map(|x| g_lambda_closed_1d(q, lambda, x.coords()[0]).map(|e| e.value / lambda))
            .collect(),
        None => green_batch(k, lambda, xs, DEFAULT_QUAD_POINTS).map(|(v, _)| v),
    }
}

/// `g_λ(0)` by the most accurate available method.
pub fn g_lambda(k: &WalkKernel, lambda: f64) -> Result<GreenEvaluation, ResolventError> {
    match k.lazy1d_parameter() {
        Some(q) => g_lambda_closed_1d(q, lambda, 0),
        None => g_lambda_quadrature(k, lambda, DEFAULT_QUAD_POINTS),
    }
}

/// Log-linear least squares on `(distance, value)` pairs.
pub fn decay_rate_estimate(values: &[(f64, f64)]) -> Result<DecayFit, ResolventError> {
    if values.len() < 8 {
        return Err(ResolventError::TooFewPoints(values.len()));
    }
    if let Some(&(distance, value)) = values.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(ResolventError::NonPositiveValue { distance, value });
    }
    let n = values.len() as f64;
    let mx = values.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = values.iter().map(|(_, v)| v.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, v) in values {
        sxy += (x - mx) * (v.ln() - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(ResolventError::InvalidArgument("all distances coincide".into()));
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(ResolventError::NotDecaying { slope });
    }
    let intercept = my - slope * mx;
    let rss: f64 = values
        .iter()
        .map(|&(x, v)| (v.ln() - intercept - slope * x).powi(2))
        .sum();
    Ok(DecayFit {
        rate: -slope,
        prefactor: intercept.exp(),
        residual: (rss / n).sqrt(),
        points: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lazy(q: f64) -> WalkKernel {
        WalkKernel::lazy1d(q).unwrap()
    }

    #[test]
    fn closed_form_values() {
        assert_abs_diff_eq!(g_lambda_closed_1d(0.0, 1.25, 0).unwrap().value, 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g_lambda_closed_1d(0.0, 1.25, 2).unwrap().value, 5.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            g_lambda_closed_1d(0.25, -2.0, 0).unwrap().value,
            0.5f64.sqrt() / 0.75,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(g_lambda_closed_1d(0.25, -1.0, 0).unwrap().value, 1.0, epsilon = 1e-15);
        assert!(g_lambda_closed_1d(0.5, -1e-20, 0).unwrap().value < 1e-9);
        assert!(matches!(
            g_lambda_closed_1d(0.25, 0.0, 0),
            Err(ResolventError::LambdaInSpectrum { .. })
        ));
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let k = WalkKernel::simple1d();
        let e = g_lambda_quadrature(&k, 1.25, 64).unwrap();
        assert_abs_diff_eq!(e.value, 5.0 / 3.0, epsilon = 1e-12);
        assert!(e.est_error < 1e-10);
        let g1 = green_kernel(&k, 1.25, &Point::new(&[1]), 64).unwrap();
        assert_abs_diff_eq!(g1.value, 2.0 / 3.0, epsilon = 1e-12);
        let q = g_lambda_quadrature(&lazy(0.25), -1.0, 64).unwrap();
        assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-12);
        let near_zero = g_lambda_quadrature(&lazy(0.5), -1e-6, 64).unwrap();
        assert!(near_zero.value.abs() < 1e-3);
        assert!(g_lambda_quadrature(&k, 1.25, 32).is_err());
        assert!(matches!(
            g_lambda_quadrature(&k, 0.5, 64),
            Err(ResolventError::LambdaInSpectrum { .. })
        ));
    }

    #[test]
    fn green_ratio_is_one_half() {
        let k = WalkKernel::simple1d();
        let xs: Vec<Point> = (0..10).map(|x| Point::new(&[x])).collect();
        let (vals, _) = green_batch(&k, 1.25, &xs, 64).unwrap();
        for w in vals.windows(2) {
            assert_abs_diff_eq!(w[1] / w[0], 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn series_values() {
        let k = WalkKernel::simple1d();
        assert_abs_diff_eq!(g_lambda_series(&k, 1.25, 1e-13).unwrap().value, 5.0 / 3.0, epsilon = 1e-10);
        // 1 + p₂/λ² + p₄/λ⁴ + … with p₂ = 1/2, p₄ = 3/8.
        let ten = g_lambda_series(&k, 10.0, 1e-14).unwrap().value;
        assert_abs_diff_eq!(ten, 1.0 + 0.5e-2 + 0.375e-4, epsilon = 1e-6);
        assert!(g_lambda_series(&k, 1e6, 1e-12).unwrap().value - 1.0 < 1e-11);
        assert_eq!(
            g_lambda_series(&k, 0.9, 1e-12).unwrap_err(),
            ResolventError::SeriesDiverges(0.9)
        );
    }

    #[test]
    fn two_dimensional_series_matches_quadrature() {
        let k = WalkKernel::simple2d();
        for lam in [1.2, -1.5, 3.0] {
            let s = g_lambda_series(&k, lam, 1e-12).unwrap().value;
            let q = g_lambda_quadrature(&k, lam, 64).unwrap().value;
            assert_abs_diff_eq!(s, q, epsilon = 1e-9);
        }
    }

    #[test]
    fn decay_fit_exact_data() {
        let pts: Vec<(f64, f64)> = (0..12).map(|x| (x as f64, 3.0 * 0.5f64.powi(x))).collect();
        let fit = decay_rate_estimate(&pts).unwrap();
        assert_abs_diff_eq!(fit.rate, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.prefactor, 3.0, epsilon = 1e-10);
        assert!(fit.residual < 1e-12);
        assert_eq!(decay_rate_estimate(&pts[..5]).unwrap_err(), ResolventError::TooFewPoints(5));
        let mut bad = pts.clone();
        bad[3].1 = 0.0;
        assert!(matches!(
            decay_rate_estimate(&bad),
            Err(ResolventError::NonPositiveValue { .. })
        ));
    }

    #[test]
    fn decay_fit_on_green_values() {
        for (lam, rate) in [(1.25, 2f64.ln()), (2.0 / 3f64.sqrt(), 3f64.sqrt().ln())] {
            let pts: Vec<(f64, f64)> = (1..=12)
                .map(|x| (x as f64, g_lambda_closed_1d(0.0, lam, x).unwrap().value / lam))
                .collect();
            assert_abs_diff_eq!(decay_rate_estimate(&pts).unwrap().rate, rate, epsilon = 1e-6);
        }
    }

    #[test]
    fn strictly_decreasing_above_one() {
        for k in [WalkKernel::simple1d(), WalkKernel::simple2d()] {
            let vals: Vec<f64> = (0..60)
                .map(|i| g_lambda(&k, 1.05 + 0.05 * i as f64).unwrap().value)
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn jensen_lower_bound_below_spectrum() {
        for q in [0.1, 0.25, 0.4] {
            let k = lazy(q);
            let lower = k.spectrum().lower;
            for i in 1..40 {
                let lam = lower - 0.05 * i as f64;
                let g = g_lambda(&k, lam).unwrap().value;
                assert!(g > lam.abs() / (lam.abs() + q), "q={q} lam={lam}");
            }
        }
    }

    proptest! {
        #[test]
        fn oracles_agree_1d(q in 0.0f64..0.9, lam in 1.06f64..8.0, sign in proptest::bool::ANY) {
            let k = lazy(q);
            let lam = if sign { lam } else { (2.0 * q - 1.0) - (lam - 1.0) };
            let closed = g_lambda_closed_1d(q, lam, 0).unwrap().value;
            let quad = g_lambda_quadrature(&k, lam, 64).unwrap().value;
            prop_assert!((closed - quad).abs() < 1e-8);
            if lam.abs() > 1.05 {
                let series = g_lambda_series(&k, lam, 1e-12).unwrap().value;
                prop_assert!((closed - series).abs() < 1e-8);
            }
        }

        #[test]
        fn translation_invariance(x in -6i64..6, y in -6i64..6, lam in 1.1f64..4.0) {
            let k = WalkKernel::simple2d();
            let a = green_kernel(&k, lam, &Point::new(&[x, y]), 64).unwrap().value;
            let b = green_kernel(&k, lam, &Point::new(&[-x, -y]), 64).unwrap().value;
            prop_assert!((a - b).abs() < 1e-13);
        }
    }
}
