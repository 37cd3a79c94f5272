//! The operator `G_{V,λ} = V^{1/2}(λG_λ − 1)V^{1/2}` on the support of `V`,
//! its split into `γV + H`, and the resolvent identity built from it.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::WalkKernel;
use crate::lattice::{LatticeBox, Point};
use crate::potential::PotentialSpec;
use crate::resolvent::{decay_rate_estimate, green_values, ResolventError};
use crate::spectral::{SpectralError, TruncatedOperator};

/// Default tolerance on `|μ − 1|` for declaring `λ` an eigenvalue.
pub const BS_TOL: f64 = 1e-6;
/// Minimum distance of `λ` from `σ(P)` accepted by [`assemble_bs`].
pub const SPECTRUM_MARGIN: f64 = 0.02;
/// `ε₀` below this is treated as zero.
pub const EPSILON0_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BsError {
    #[error("lambda = {lambda} is within {margin} of the spectrum [{lower}, 1]")]
    LambdaInSpectrum { lambda: f64, lower: f64, margin: f64 },
    #[error("potential has no support site in the box")]
    EmptySupport,
    #[error("1 - G_(V,lambda) is not invertible: distance of 1 to its spectrum is {distance:e}")]
    BsNotInvertible { distance: f64 },
    #[error("epsilon0 = inf |1 - gamma V_K| = {epsilon0:e} vanishes; enlarge K")]
    Epsilon0Zero { epsilon0: f64 },
    #[error("weight alpha = {alpha} must lie in (0, {rate}) below the Green decay rate")]
    AlphaTooLarge { alpha: f64, rate: f64 },
    #[error("no crossing of the top eigenvalue through 1 in ({lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Clone, Debug)]
pub struct BsAssembly {
    pub lambda: f64,
    /// `g_λ(0) − 1`.
    pub gamma: f64,
    pub matrix: DMatrix<f64>,
    /// `H_{V,λ}`: the off-diagonal part of `matrix`.
    pub off_diag: DMatrix<f64>,
    pub support_sites: Vec<Point>,
    pub support_values: Vec<f64>,
}

impl BsAssembly {
    /// `max |matrix − γ diag(V) − off_diag|`.
    pub fn split_defect(&self) -> f64 {
        let n = self.support_sites.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { self.gamma * self.support_values[i] } else { 0.0 };
                worst = worst.max((self.matrix[(i, j)] - diag - self.off_diag[(i, j)]).abs());
            }
        }
        worst
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BsTest {
    pub is_eigenvalue: bool,
    /// `min |μ − 1|` over eigenvalues `μ` of `G_{V,λ}`.
    pub distance: f64,
}

fn check_lambda(k: &WalkKernel, lambda: f64) -> Result<(), BsError> {
    let s = k.spectrum();
    if !lambda.is_finite() || s.distance(lambda) < SPECTRUM_MARGIN {
        return Err(BsError::LambdaInSpectrum {
            lambda,
            lower: s.lower,
            margin: SPECTRUM_MARGIN,
        });
    }
    Ok(())
}

/// `G_λ(x, y)` for all pairs in `rows × cols`, via one batch of differences.
fn green_block(
    k: &WalkKernel,
    lambda: f64,
    rows: &[Point],
    cols: &[Point],
) -> Result<DMatrix<f64>, BsError> {
    let mut index: HashMap<Point, usize> = HashMap::new();
    let mut diffs = Vec::new();
    for x in rows {
        for y in cols {
            let z = *y - *x;
            index.entry(z).or_insert_with(|| {
                diffs.push(z);
                diffs.len() - 1
            });
        }
    }
    let values = green_values(k, lambda, &diffs)?;
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        values[index[&(cols[j] - rows[i])]]
    }))
}

fn assemble_on(
    k: &WalkKernel,
    lambda: f64,
    support: Vec<(Point, f64)>,
) -> Result<BsAssembly, BsError> {
    if support.is_empty() {
        return Err(BsError::EmptySupport);
    }
    let sites: Vec<Point> = support.iter().map(|(x, _)| *x).collect();
    let values: Vec<f64> = support.iter().map(|(_, v)| *v).collect();
    let green = green_block(k, lambda, &sites, &sites)?;
    let n = sites.len();
    let g0 = lambda * green[(0, 0)];
    let gamma = g0 - 1.0;
    let roots: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        roots[i] * roots[j] * (lambda * green[(i, j)] - delta)
    });
    let off_diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            lambda * roots[i] * roots[j] * green[(i, j)]
        }
    });
    Ok(BsAssembly {
        lambda,
        gamma,
        matrix,
        off_diag,
        support_sites: sites,
        support_values: values,
    })
}

/// Assembles `G_{V,λ}` on the support of `V` inside `bx`.
pub fn assemble_bs(
    k: &WalkKernel,
    spec: &PotentialSpec,
    lambda: f64,
    bx: &LatticeBox,
) -> Result<BsAssembly, BsError> {
    check_lambda(k, lambda)?;
    assemble_on(k, lambda, spec.support_in(bx))
}

pub fn bs_eigenvalue_test(asm: &BsAssembly, tol: f64) -> BsTest {
    let distance = asm
        .eigenvalues()
        .iter()
        .map(|m| (m - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    BsTest {
        is_eigenvalue: distance < tol,
        distance,
    }
}

/// `(λ, distance)` for every `λ` in `lambdas`, assembled in parallel.
pub fn bs_scan(
    k: &WalkKernel,
    spec: &PotentialSpec,
    bx: &LatticeBox,
    lambdas: &[f64],
) -> Result<Vec<(f64, BsTest)>, BsError> {
    lambdas
        .par_iter()
        .map(|&l| {
            let asm = assemble_bs(k, spec, l, bx)?;
            Ok((l, bs_eigenvalue_test(&asm, BS_TOL)))
        })
        .collect()
}

/// The largest `λ > 1` at which the top eigenvalue of `G_{V,λ}` equals 1.
///
/// Above 1 every entry of `λG_λ` decreases in `λ`, so the top eigenvalue of
/// `G_{V,λ}` is decreasing and the crossing is found by bisection.
pub fn bs_top_crossing(
    k: &WalkKernel,
    spec: &PotentialSpec,
    bx: &LatticeBox,
) -> Result<f64, BsError> {
    let support = spec.support_in(bx);
    let top = |l: f64| -> Result<f64, BsError> {
        let asm = assemble_on(k, l, support.clone())?;
        Ok(*asm.eigenvalues().last().unwrap() - 1.0)
    };
    let lo0 = 1.0 + SPECTRUM_MARGIN;
    let hi0 = 1.0 + spec.sup_norm() + 1.0;
    let (mut lo, mut hi) = (lo0, hi0);
    if top(lo)? <= 0.0 || top(hi)? >= 0.0 {
        return Err(BsError::NoCrossing { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if top(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug)]
pub struct BsResolvent {
    /// `(λ − P_V)^{−1}(x, y)` for `x, y` in the box.
    pub matrix: DMatrix<f64>,
    /// Radius of the interior cube used for residual checks.
    pub interior_radius: i64,
    /// `max |((λ − P_V) R − I)(x, y)|` over all rows and interior columns.
    pub residual: f64,
}

/// `(λ − P_V)^{−1} = G + G V^{1/2}(1 − G_{V,λ})^{−1} V^{1/2} P G` on `bx`,
/// with `PG = λG − 1`.
pub fn resolvent_via_bs(
    k: &WalkKernel,
    spec: &PotentialSpec,
    lambda: f64,
    bx: &LatticeBox,
) -> Result<BsResolvent, BsError> {
    check_lambda(k, lambda)?;
    let sites: Vec<Point> = bx.iter().collect();
    let green = green_block(k, lambda, &sites, &sites)?;
    let index_of = |p: &Point| bx.index_of(p).expect("support lies in the box");
    let support = spec.support_in(bx);
    let mut result = green.clone();
    if !support.is_empty() {
        let asm = assemble_on(k, lambda, support.clone())?;
        let test = bs_eigenvalue_test(&asm, BS_TOL);
        if test.is_eigenvalue {
            return Err(BsError::BsNotInvertible {
                distance: test.distance,
            });
        }
        let s = support.len();
        let cols: Vec<usize> = support.iter().map(|(x, _)| index_of(x)).collect();
        let roots: Vec<f64> = support.iter().map(|(_, v)| v.sqrt()).collect();
        let inv = (DMatrix::identity(s, s) - &asm.matrix)
            .lu()
            .try_inverse()
            .ok_or(BsError::BsNotInvertible { distance: 0.0 })?;
        let n = sites.len();
        // Left factor G V^{1/2}: n × s.  Right factor V^{1/2}(λG − 1): s × n.
        let left = DMatrix::from_fn(n, s, |i, a| green[(i, cols[a])] * roots[a]);
        let right = DMatrix::from_fn(s, n, |a, j| {
            let delta = if cols[a] == j { 1.0 } else { 0.0 };
            roots[a] * (lambda * green[(cols[a], j)] - delta)
        });
        result += left * inv * right;
    }
    let interior_radius = bx.radius() / 2;
    let op = TruncatedOperator::new(k, spec, bx.radius())?;
    let n = sites.len();
    let mut residual: f64 = 0.0;
    for (j, y) in sites.iter().enumerate() {
        if y.norm_inf() > interior_radius {
            continue;
        }
        let col: Vec<f64> = result.column(j).iter().copied().collect();
        let pc = op.apply(&col);
        for i in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((lambda * col[i] - pc[i] - delta).abs());
        }
    }
    Ok(BsResolvent {
        matrix: result,
        interior_radius,
        residual,
    })
}

/// Dense `(λ − P_V)^{−1}` of the Dirichlet truncation.
pub fn direct_resolvent(
    k: &WalkKernel,
    spec: &PotentialSpec,
    lambda: f64,
    radius: i64,
) -> Result<DMatrix<f64>, BsError> {
    let op = TruncatedOperator::new(k, spec, radius)?;
    let n = op.len();
    let a = DMatrix::identity(n, n) * lambda - op.matrix().to_dense();
    a.lu()
        .try_inverse()
        .ok_or(BsError::BsNotInvertible { distance: 0.0 })
}

/// `|λ| √(A_N B_N)`, where `A_N` is the largest off-diagonal row sum of
/// `√(V(x)V(y)) |G_λ(x, y)|` over rows with `|x| ≥ N`, and `B_N` the largest
/// such sum restricted to columns with `|y| ≥ N`.
pub fn off_diag_tail_norm(asm: &BsAssembly, n: f64) -> f64 {
    let sites = &asm.support_sites;
    let lam = asm.lambda.abs();
    let far: Vec<bool> = sites.iter().map(|x| x.norm() >= n).collect();
    let mut a_n: f64 = 0.0;
    let mut b_n: f64 = 0.0;
    for i in 0..sites.len() {
        let mut row = 0.0;
        let mut row_far = 0.0;
        for (j, &far_j) in far.iter().enumerate() {
            let h = asm.off_diag[(i, j)].abs() / lam;
            row += h;
            if far_j {
                row_far += h;
            }
        }
        if far[i] {
            a_n = a_n.max(row);
        }
        b_n = b_n.max(row_far);
    }
    lam * (a_n * b_n).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct NeumannCertificate {
    pub lambda: f64,
    pub alpha: f64,
    /// Sites removed from `V`.
    pub excluded: Vec<Point>,
    /// `inf_x |1 − γ V_K(x)|` over the box.
    pub epsilon0: f64,
    /// Row-sum bound on `‖H_{V_K,λ}‖` in `ℓ²`.
    pub h_norm: f64,
    /// Weighted row-sum bound in `ℓ^{∞,α}`.
    pub h_norm_weighted: f64,
    pub contraction: f64,
    pub valid: bool,
}

/// Decay rate of `G_λ(0, x)` along the first axis, fitted over `|x| ≤ 16`.
pub fn green_decay_rate(k: &WalkKernel, lambda: f64) -> Result<f64, BsError> {
    let xs: Vec<Point> = (1..=16).map(|s| Point::axis(k.dim(), 0, s)).collect();
    let vals = green_values(k, lambda, &xs)?;
    let pts: Vec<(f64, f64)> = vals
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64, v.abs()))
        .filter(|(_, v)| *v > 1e-280)
        .collect();
    Ok(decay_rate_estimate(&pts)?.rate)
}

/// Row-sum certificate that `1 − G_{V_K,λ}` is invertible by a Neumann
/// series on `ℓ²` and on the weighted space `ℓ^{∞,α}`.
pub fn neumann_invertibility(
    k: &WalkKernel,
    spec: &PotentialSpec,
    excluded: &[Point],
    lambda: f64,
    alpha: f64,
    bx: &LatticeBox,
) -> Result<NeumannCertificate, BsError> {
    check_lambda(k, lambda)?;
    let rate = green_decay_rate(k, lambda)?;
    if !(alpha > 0.0 && alpha < rate) {
        return Err(BsError::AlphaTooLarge { alpha, rate });
    }
    let support: Vec<(Point, f64)> = spec
        .support_in(bx)
        .into_iter()
        .filter(|(x, _)| !excluded.contains(x))
        .collect();
    let g0 = green_values(k, lambda, &[Point::origin(k.dim())])?[0] * lambda;
    let gamma = g0 - 1.0;
    // Off-support sites contribute |1 − 0| = 1.
    let has_gap_sites = support.len() < bx.len();
    let epsilon0 = support
        .iter()
        .map(|(_, v)| (1.0 - gamma * v).abs())
        .chain(has_gap_sites.then_some(1.0))
        .fold(f64::INFINITY, f64::min);
    if epsilon0 < EPSILON0_FLOOR {
        return Err(BsError::Epsilon0Zero { epsilon0 });
    }
    let (h_norm, h_norm_weighted) = if support.is_empty() {
        (0.0, 0.0)
    } else {
        let asm = assemble_on(k, lambda, support)?;
        let sites = &asm.support_sites;
        let mut plain: f64 = 0.0;
        let mut weighted: f64 = 0.0;
        for i in 0..sites.len() {
            let mut row = 0.0;
            let mut wrow = 0.0;
            for j in 0..sites.len() {
                let h = asm.off_diag[(i, j)].abs();
                row += h;
                wrow += h * (alpha * (sites[i].norm() - sites[j].norm())).exp();
            }
            plain = plain.max(row);
            weighted = weighted.max(wrow);
        }
        (plain, weighted)
    };
    let contraction = h_norm.max(h_norm_weighted) / epsilon0;
    Ok(NeumannCertificate {
        lambda,
        alpha,
        excluded: excluded.to_vec(),
        epsilon0,
        h_norm,
        h_norm_weighted,
        contraction,
        valid: epsilon0 > 0.0 && contraction < 1.0,
    })
}

/// Grows the excluded set greedily, each time removing the support site with
/// the smallest `|1 − γV(x)|`, until the certificate is valid or `max_sites`
/// sites have been removed.
pub fn grow_neumann_certificate(
    k: &WalkKernel,
    spec: &PotentialSpec,
    lambda: f64,
    alpha: f64,
    bx: &LatticeBox,
    max_sites: usize,
) -> Result<NeumannCertificate, BsError> {
    let g0 = green_values(k, lambda, &[Point::origin(k.dim())])?[0] * lambda;
    let gamma = g0 - 1.0;
    let mut order = spec.support_in(bx);
    order.sort_by(|a, b| {
        (1.0 - gamma * a.1)
            .abs()
            .total_cmp(&(1.0 - gamma * b.1).abs())
            .then(a.0.norm_sq().cmp(&b.0.norm_sq()))
    });
    let mut excluded = Vec::new();
    let mut last_err = None;
    for step in 0..=max_sites.min(order.len()) {
        match neumann_invertibility(k, spec, &excluded, lambda, alpha, bx) {
            Ok(cert) if cert.valid => return Ok(cert),
            Ok(cert) => last_err = Some(Ok(cert)),
            Err(e @ BsError::Epsilon0Zero { .. }) => last_err = Some(Err(e)),
            Err(e) => return Err(e),
        }
        if step < order.len() {
            excluded.push(order[step].0);
        }
    }
    last_err.expect("at least one attempt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::GeometricSparse;
    use crate::resolvent::g_lambda_closed_1d;
    use crate::spectral::lambda_pm_1d;
    use approx::assert_abs_diff_eq;

    fn p1(x: i64) -> Point {
        Point::new(&[x])
    }

    #[test]
    fn single_site_reduction() {
        let k = WalkKernel::simple1d();
        let bx = LatticeBox::centered(1, 10);
        let v = PotentialSpec::single_site(p1(0), 0.7, 10).unwrap();
        let asm = assemble_bs(&k, &v, 1.5, &bx).unwrap();
        let g = g_lambda_closed_1d(0.0, 1.5, 0).unwrap().value;
        assert_eq!(asm.matrix.shape(), (1, 1));
        assert_abs_diff_eq!(asm.matrix[(0, 0)], 0.7 * (g - 1.0), epsilon = 1e-14);

        let (_, lp) = lambda_pm_1d(0.0, 1.0).unwrap();
        let one = PotentialSpec::single_site(p1(0), 1.0, 10).unwrap();
        let at = assemble_bs(&k, &one, lp, &bx).unwrap();
        assert_abs_diff_eq!(at.matrix[(0, 0)], 1.0, epsilon = 1e-13);
        assert!(bs_eigenvalue_test(&at, 1e-9).is_eigenvalue);
        let off = bs_eigenvalue_test(&assemble_bs(&k, &one, 1.5, &bx).unwrap(), BS_TOL);
        assert!(!off.is_eigenvalue);
        assert_abs_diff_eq!(off.distance, 2.0 - 1.5 / 1.25f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn two_site_off_diagonal() {
        let k = WalkKernel::simple1d();
        let v = PotentialSpec::explicit(1, [(p1(-1), 0.8), (p1(1), 0.8)].into(), 5).unwrap();
        let asm = assemble_bs(&k, &v, 1.25, &LatticeBox::centered(1, 5)).unwrap();
        assert_abs_diff_eq!(asm.matrix[(0, 1)], 0.8 * 5.0 / 12.0, epsilon = 1e-14);
        assert!(asm.split_defect() < 1e-12);
        assert!(asm.asymmetry() < 1e-12);
        assert_eq!(asm.off_diag[(0, 0)], 0.0);
    }

    #[test]
    fn empty_support_and_spectrum_guard() {
        let k = WalkKernel::simple1d();
        let bx = LatticeBox::centered(1, 5);
        assert!(matches!(
            assemble_bs(&k, &PotentialSpec::zero(1, 5).unwrap(), 2.0, &bx),
            Err(BsError::EmptySupport)
        ));
        assert!(matches!(
            assemble_bs(&k, &PotentialSpec::single_site(p1(0), 1.0, 5).unwrap(), 1.01, &bx),
            Err(BsError::LambdaInSpectrum { .. })
        ));
    }

    #[test]
    fn resolvent_identity_against_direct_inverse() {
        let k = WalkKernel::simple1d();
        let bx = LatticeBox::centered(1, 40);
        for spec in [
            PotentialSpec::zero(1, 40).unwrap(),
            PotentialSpec::single_site(p1(0), 1.0, 40).unwrap(),
            GeometricSparse::new(1, 1.0, 3).anchor(p1(0), 2.0).build().unwrap(),
        ] {
            let via = resolvent_via_bs(&k, &spec, 2.0, &bx).unwrap();
            assert!(via.residual < 1e-6, "residual {}", via.residual);
            let direct = direct_resolvent(&k, &spec, 2.0, 40).unwrap();
            let mut worst: f64 = 0.0;
            for (i, x) in bx.iter().enumerate() {
                for (j, y) in bx.iter().enumerate() {
                    if x.norm_inf() <= 20 && y.norm_inf() <= 20 {
                        worst = worst.max((via.matrix[(i, j)] - direct[(i, j)]).abs());
                    }
                }
            }
            assert!(worst < 1e-6, "interior mismatch {worst}");
        }
        let (_, lp) = lambda_pm_1d(0.0, 1.0).unwrap();
        assert!(matches!(
            resolvent_via_bs(&k, &PotentialSpec::single_site(p1(0), 1.0, 40).unwrap(), lp, &bx),
            Err(BsError::BsNotInvertible { .. })
        ));
    }

    #[test]
    fn crossing_matches_lambda_plus() {
        let k = WalkKernel::lazy1d(0.25).unwrap();
        for v in [0.5, 1.0, 2.0] {
            let spec = PotentialSpec::single_site(p1(0), v, 20).unwrap();
            let l = bs_top_crossing(&k, &spec, &spec.working_box()).unwrap();
            assert_abs_diff_eq!(l, lambda_pm_1d(0.25, v).unwrap().1, epsilon = 1e-10);
        }
    }

    #[test]
    fn tail_norms() {
        let k = WalkKernel::simple1d();
        let single = PotentialSpec::single_site(p1(0), 1.0, 50).unwrap();
        let asm = assemble_bs(&k, &single, 2.0, &single.working_box()).unwrap();
        assert_eq!(off_diag_tail_norm(&asm, 1.0), 0.0);

        let sparse = GeometricSparse::new(1, 1.0, 3).box_radius(300).build().unwrap();
        let asm = assemble_bs(&k, &sparse, 2.0, &sparse.working_box()).unwrap();
        let t: Vec<f64> = [8.0, 32.0, 128.0].iter().map(|&n| off_diag_tail_norm(&asm, n)).collect();
        assert!(t.windows(2).all(|w| w[1] < w[0]) && t[2] < 1e-3, "{t:?}");

        let dense = PotentialSpec::constant(1, 1.0, 300).unwrap();
        let asm = assemble_bs(&k, &dense, 2.0, &dense.working_box()).unwrap();
        assert!([8.0, 32.0, 128.0].iter().all(|&n| off_diag_tail_norm(&asm, n) > 0.05));
    }

    #[test]
    fn neumann_certificates() {
        let k = WalkKernel::simple1d();
        let bx = LatticeBox::centered(1, 100);
        let single = PotentialSpec::single_site(p1(0), 1.0, 100).unwrap();
        let c = neumann_invertibility(&k, &single, &[p1(0)], 2.0, 0.5, &bx).unwrap();
        assert!(c.valid && c.epsilon0 == 1.0 && c.h_norm == 0.0);

        let sparse = GeometricSparse::new(1, 1.0, 3).box_radius(100).build().unwrap();
        let c = neumann_invertibility(&k, &sparse, &[], 2.0, 0.5, &bx).unwrap();
        assert_abs_diff_eq!(c.epsilon0, 2.0 - 2.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert!(c.valid, "{c:?}");

        let (_, lp) = lambda_pm_1d(0.0, 1.0).unwrap();
        assert!(matches!(
            neumann_invertibility(&k, &sparse, &[], lp, 0.1, &bx),
            Err(BsError::Epsilon0Zero { .. })
        ));
        assert!(matches!(
            neumann_invertibility(&k, &sparse, &[], 2.0, 5.0, &bx),
            Err(BsError::AlphaTooLarge { .. })
        ));
    }

    #[test]
    fn greedy_growth_reaches_validity() {
        // Just above λ₊(2) the anchor site makes ε₀ tiny; removing it helps.
        let k = WalkKernel::simple1d();
        let spec = GeometricSparse::new(1, 1.0, 3).anchor(p1(0), 2.0).box_radius(100).build().unwrap();
        let (_, lp2) = lambda_pm_1d(0.0, 2.0).unwrap();
        let cert = grow_neumann_certificate(&k, &spec, lp2 + 0.01, 0.1, &spec.working_box(), 5).unwrap();
        assert!(cert.valid);
        assert!(cert.excluded.contains(&p1(0)));
    }
}
