//! Eigensolvers for the symmetrized truncation: dense for small boxes,
//! Lanczos with full reorthogonalization for large ones, and Sturm counting
//! on the band for isolated eigenvalues near a target.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::operator::TruncatedOperator;
use super::SpectralError;
use crate::sparse::SparseMatrix;

/// Boxes up to this many sites are solved densely.
pub const DENSE_LIMIT: usize = 1600;

const LANCZOS_SEED: u64 = 0x5eed_1a2c_2051;

#[derive(Clone, Debug, Serialize)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit eigenvector of the symmetrized matrix.
    pub psi: Vec<f64>,
    /// `D^{1/2} ψ`, an eigenvector of `P_V` with `‖φ‖_V = 1`.
    pub phi: Vec<f64>,
    /// `‖P_V φ − λ φ‖_V / ‖φ‖_V`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TopEigenpairs {
    /// Largest eigenvalues first.
    pub by_value: Vec<Eigenpair>,
    /// Largest `|eigenvalue|` first.
    pub by_abs: Vec<Eigenpair>,
}

/// All eigenvalues (ascending) and eigenvectors (columns) of the dense
/// symmetrized matrix.
pub fn dense_eigen(op: &TruncatedOperator) -> Result<(Vec<f64>, DMatrix<f64>), SpectralError> {
    if op.len() > DENSE_LIMIT {
        return Err(SpectralError::BoxTooLarge {
            sites: op.len(),
            cap: DENSE_LIMIT,
        });
    }
    let eig = SymmetricEigen::new(op.dense_sym());
    let mut order: Vec<usize> = (0..op.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(op.len(), op.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// All eigenvalues, ascending.
pub fn full_spectrum(op: &TruncatedOperator) -> Result<Vec<f64>, SpectralError> {
    dense_eigen(op).map(|(v, _)| v)
}

fn make_pair(op: &TruncatedOperator, value: f64, mut psi: Vec<f64>) -> Eigenpair {
    let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|x| *x /= norm);
    let peak = psi
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if peak < 0.0 {
        psi.iter_mut().for_each(|x| *x = -*x);
    }
    let phi = op.to_phi(&psi);
    let residual = op.residual(value, &phi);
    Eigenpair {
        value,
        psi,
        phi,
        residual,
    }
}

/// The `count` largest eigenpairs by value and by absolute value.
pub fn eigensolve_top(op: &TruncatedOperator, count: usize) -> Result<TopEigenpairs, SpectralError> {
    if count == 0 || count > 10 {
        return Err(SpectralError::InvalidArgument(format!(
            "eigenpair count {count} outside 1..=10"
        )));
    }
    let count = count.min(op.len());
    let candidates: Vec<(f64, Vec<f64>)> = if op.len() <= DENSE_LIMIT {
        let (values, vectors) = dense_eigen(op)?;
        let n = values.len();
        let mut idx: Vec<usize> = (n.saturating_sub(count)..n).collect();
        idx.extend(0..count.min(n));
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter()
            .map(|i| (values[i], vectors.column(i).iter().copied().collect()))
            .collect()
    } else {
        lanczos_extremes(op.sym(), count)?
    };
    let mut by_value: Vec<(f64, Vec<f64>)> = candidates.clone();
    by_value.sort_by(|a, b| b.0.total_cmp(&a.0));
    by_value.truncate(count);
    let mut by_abs = candidates;
    by_abs.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()).then(b.0.total_cmp(&a.0)));
    by_abs.truncate(count);
    Ok(TopEigenpairs {
        by_value: by_value.into_iter().map(|(v, p)| make_pair(op, v, p)).collect(),
        by_abs: by_abs.into_iter().map(|(v, p)| make_pair(op, v, p)).collect(),
    })
}

/// Ritz pairs for the `count` smallest and `count` largest eigenvalues.
fn lanczos_extremes(a: &SparseMatrix, count: usize) -> Result<Vec<(f64, Vec<f64>)>, SpectralError> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut steps = (8 * count + 80).min(n);
    loop {
        let (values, vectors) = lanczos(a, steps, &start);
        let m = values.len();
        let mut picks: Vec<usize> = (m.saturating_sub(count)..m).collect();
        picks.extend(0..count.min(m));
        picks.sort_unstable();
        picks.dedup();
        let mut worst: f64 = 0.0;
        let mut out = Vec::with_capacity(picks.len());
        for i in picks {
            let y = &vectors[i];
            let ay = a.matvec(y);
            let res = ay
                .iter()
                .zip(y)
                .map(|(p, q)| (p - values[i] * q).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(res);
            out.push((values[i], y.clone()));
        }
        if worst < 1e-10 || steps == n {
            return Ok(out);
        }
        if steps >= 4000 {
            return Err(SpectralError::NoConvergence {
                iterations: steps,
                residual: worst,
            });
        }
        steps = (2 * steps).min(n);
    }
}

/// `m`-step Lanczos with full reorthogonalization; returns Ritz values
/// ascending and the corresponding unit Ritz vectors.
fn lanczos(a: &SparseMatrix, m: usize, start: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let norm = start.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut q: Vec<f64> = start.iter().map(|x| x / norm).collect();
    for _ in 0..m {
        let mut w = a.matvec(&q);
        let al: f64 = w.iter().zip(&q).map(|(x, y)| x * y).sum();
        basis.push(q.clone());
        alpha.push(al);
        for _pass in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bt = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if basis.len() == m || bt < 1e-12 {
            break;
        }
        beta.push(bt);
        q = w.iter().map(|x| x / bt).collect();
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i.abs_diff(j) == 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&c| {
            let mut y = vec![0.0; n];
            for (j, b) in basis.iter().enumerate() {
                let s = eig.eigenvectors[(j, c)];
                y.iter_mut().zip(b).for_each(|(acc, x)| *acc += s * x);
            }
            y
        })
        .collect();
    (values, vectors)
}

/// Dense lower band of a symmetric sparse matrix, for inertia counts.
#[derive(Clone, Debug)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    /// `band[i * (bw + 1) + (i − j)] = A(i, j)` for `i − bw ≤ j ≤ i`.
    band: Vec<f64>,
    bound: f64,
}

impl BandedSym {
    pub fn new(a: &SparseMatrix) -> Self {
        let n = a.dim();
        let bw = a.bandwidth();
        let mut band = vec![0.0; n * (bw + 1)];
        let mut bound: f64 = 0.0;
        for i in 0..n {
            let mut row_abs = 0.0;
            for (j, v) in a.row(i) {
                row_abs += v.abs();
                if j <= i {
                    band[i * (bw + 1) + (i - j)] = v;
                }
            }
            bound = bound.max(row_abs);
        }
        BandedSym { n, bw, band, bound }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[i * (self.bw + 1) + (i - j)]
        }
    }

    /// Banded `LDLᵀ` of `A − x` without pivoting; zero pivots are nudged
    /// to a tiny negative value.  `l[i * b + (i − j − 1)] = L(i, j)`.
    fn factor(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let (n, b) = (self.n, self.bw);
        let mut l = vec![0.0; n * b.max(1)];
        let mut d = vec![0.0; n];
        let tiny = f64::EPSILON * self.bound.max(1e-300);
        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..i {
                let mut s = self.entry(i, j);
                for k in i.saturating_sub(b).max(j.saturating_sub(b))..j {
                    s -= l[i * b + (i - k - 1)] * l[j * b + (j - k - 1)] * d[k];
                }
                l[i * b + (i - j - 1)] = s / d[j];
            }
            let mut di = self.entry(i, i) - x;
            for k in lo..i {
                let lik = l[i * b + (i - k - 1)];
                di -= lik * lik * d[k];
            }
            if di == 0.0 {
                di = -tiny;
            }
            d[i] = di;
        }
        (l, d)
    }

    /// Number of eigenvalues strictly below `x` (negative pivots of
    /// `A − x`).
    pub fn count_below(&self, x: f64) -> usize {
        self.factor(x).1.iter().filter(|&&d| d < 0.0).count()
    }

    /// Solves `(A − σ) y = rhs`.
    pub fn solve_shifted(&self, sigma: f64, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.bw);
        let (l, d) = self.factor(sigma);
        let mut y = rhs.to_vec();
        for i in 0..n {
            for j in i.saturating_sub(b)..i {
                y[i] -= l[i * b + (i - j - 1)] * y[j];
            }
        }
        y.iter_mut().zip(&d).for_each(|(v, dv)| *v /= dv);
        for i in (0..n).rev() {
            for j in i + 1..(i + b + 1).min(n) {
                y[i] -= l[j * b + (j - i - 1)] * y[j];
            }
        }
        y
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn kth_eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.n);
        let (mut lo, mut hi) = (-self.bound - 1.0, self.bound + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Distance from `target` to the nearest eigenvalue.
    pub fn distance_to_spectrum(&self, target: f64) -> f64 {
        let below = self.count_below(target);
        let mut best = f64::INFINITY;
        if below > 0 {
            best = best.min((target - self.kth_eigenvalue(below - 1)).abs());
        }
        if below < self.n {
            best = best.min((self.kth_eigenvalue(below) - target).abs());
        }
        best
    }
}

/// Eigenvector for a known eigenvalue by banded inverse iteration.
///
/// The banded solve keeps small relative errors in exponentially small
/// tails, which a dense eigensolver cannot resolve.
pub fn inverse_iteration(
    op: &TruncatedOperator,
    value: f64,
    start_psi: &[f64],
    iterations: usize,
) -> Eigenpair {
    let banded = BandedSym::new(op.sym());
    let shift = value + 1e-11 * value.abs().max(1.0);
    let mut psi = start_psi.to_vec();
    for _ in 0..iterations.max(1) {
        psi = banded.solve_shifted(shift, &psi);
        let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|x| *x /= norm);
    }
    let peak = psi.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if peak < 0.0 {
        psi.iter_mut().for_each(|x| *x = -*x);
    }
    let phi = op.to_phi(&psi);
    let residual = op.residual(value, &phi);
    Eigenpair {
        value,
        psi,
        phi,
        residual,
    }
}

/// Polishes a Perron pair by the shifted power iteration
/// `φ ← (P_V φ + r φ)/(2r)`, which fixes entrywise relative accuracy in the
/// tails and tolerates a mirrored eigenvalue at `−r`.
pub fn perron_refine(
    op: &TruncatedOperator,
    start: &Eigenpair,
    max_iter: usize,
) -> Result<Eigenpair, SpectralError> {
    let floor = start
        .phi
        .iter()
        .map(|x| x.abs())
        .filter(|x| *x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut phi: Vec<f64> = start.phi.iter().map(|x| x.abs().max(floor)).collect();
    let mut r = start.value;
    let mut converged = false;
    for _ in 0..max_iter {
        let pf = op.apply(&phi);
        let mut next: Vec<f64> = pf.iter().zip(&phi).map(|(a, b)| (a + r * b) / (2.0 * r)).collect();
        let norm = op.norm_v(&next);
        next.iter_mut().for_each(|x| *x /= norm);
        let change = next
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a / b - 1.0).abs())
            .fold(0.0, f64::max);
        let pn = op.apply(&next);
        r = op.inner_v(&pn, &next);
        phi = next;
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    let residual = op.residual(r, &phi);
    if !converged && residual > 1e-8 {
        return Err(SpectralError::NoConvergence {
            iterations: max_iter,
            residual,
        });
    }
    let psi = op.to_psi(&phi);
    Ok(Eigenpair {
        value: r,
        psi,
        phi,
        residual,
    })
}

/// Top eigenpair of `P_V` with a refined, strictly positive `φ`.
pub fn perron_pair(op: &TruncatedOperator) -> Result<Eigenpair, SpectralError> {
    let top = eigensolve_top(op, 1)?;
    perron_refine(op, &top.by_value[0], 400_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::WalkKernel;
    use crate::lattice::Point;
    use crate::potential::PotentialSpec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn free_1d(l: i64) -> TruncatedOperator {
        TruncatedOperator::new(&WalkKernel::simple1d(), &PotentialSpec::zero(1, l).unwrap(), l).unwrap()
    }

    #[test]
    fn dirichlet_path_spectrum() {
        let l = 100;
        let op = free_1d(l);
        let n = (2 * l + 1) as f64;
        let spec = full_spectrum(&op).unwrap();
        // Path graph on n vertices: cos(jπ/(n+1)).
        for (i, mu) in spec.iter().rev().enumerate() {
            assert_abs_diff_eq!(*mu, (PI * (i + 1) as f64 / (n + 1.0)).cos(), epsilon = 1e-12);
        }
        let top = eigensolve_top(&op, 3).unwrap();
        assert_abs_diff_eq!(top.by_value[0].value, (PI / (2.0 * l as f64 + 2.0)).cos(), epsilon = 1e-12);
        assert!(top.by_value[0].residual < 1e-10);
        assert!(top.by_value[0].phi.iter().all(|&x| x > 0.0));
        // Bipartite: ±top tie in absolute value.
        assert_abs_diff_eq!(top.by_abs[0].value.abs(), top.by_abs[1].value.abs(), epsilon = 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_on_two_dimensional_box() {
        let k = WalkKernel::simple2d();
        let v = PotentialSpec::single_site(Point::new(&[0, 0]), 1.5, 12).unwrap();
        let op = TruncatedOperator::new(&k, &v, 12).unwrap();
        let (values, _) = dense_eigen(&op).unwrap();
        let ritz = lanczos_extremes(op.sym(), 3).unwrap();
        let top = ritz.iter().map(|r| r.0).fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(top, *values.last().unwrap(), epsilon = 1e-10);
        let bottom = ritz.iter().map(|r| r.0).fold(f64::MAX, f64::min);
        assert_abs_diff_eq!(bottom, values[0], epsilon = 1e-10);
    }

    #[test]
    fn sturm_counts_match_dense() {
        let k = WalkKernel::from_entries(
            1,
            &[(vec![0], 0.2), (vec![1], 0.25), (vec![-1], 0.25), (vec![2], 0.15), (vec![-2], 0.15)],
        )
        .unwrap();
        let v = crate::potential::GeometricSparse::new(1, 1.0, 2).box_radius(30).build().unwrap();
        let op = TruncatedOperator::new(&k, &v, 30).unwrap();
        let values = full_spectrum(&op).unwrap();
        let band = BandedSym::new(op.sym());
        for x in [-0.7, 0.0, 0.3, 1.0, 1.2] {
            let dense = values.iter().filter(|&&m| m < x).count();
            assert_eq!(band.count_below(x), dense);
        }
        for k in [0, 7, 60] {
            assert_abs_diff_eq!(band.kth_eigenvalue(k), values[k], epsilon = 1e-13);
        }
        let target = 1.05;
        let nearest = values.iter().map(|m| (m - target).abs()).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(band.distance_to_spectrum(target), nearest, epsilon = 1e-13);
    }

    #[test]
    fn perron_refinement_is_relatively_accurate() {
        let k = WalkKernel::simple1d();
        let v = PotentialSpec::single_site(Point::new(&[0]), 1.0, 60).unwrap();
        let op = TruncatedOperator::new(&k, &v, 60).unwrap();
        let pair = perron_pair(&op).unwrap();
        assert_abs_diff_eq!(pair.value, 2.0 / 3f64.sqrt(), epsilon = 1e-12);
        let pf = op.apply(&pair.phi);
        for (a, b) in pf.iter().zip(&pair.phi) {
            assert!((a / (pair.value * b) - 1.0).abs() < 1e-9);
        }
        assert_abs_diff_eq!(op.norm_v(&pair.phi), 1.0, epsilon = 1e-12);
    }
}
