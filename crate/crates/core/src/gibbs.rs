//! Doob-transformed chain, Feynman–Kac semigroups and the Gibbs path
//! measures `μ_N` built from `P_V`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::WalkKernel;
use crate::lattice::{LatticeBox, Point};
use crate::potential::PotentialSpec;
use crate::resolvent::{decay_rate_estimate, ResolventError};
use crate::sparse::SparseMatrix;
use crate::spectral::{Eigenpair, SpectralError, TruncatedOperator};

pub const MAX_EIGEN_RESIDUAL: f64 = 1e-8;
pub const MAX_ROW_DEFICIT: f64 = 1e-6;
pub const MIN_MC_SAMPLES: usize = 1000;
/// `D(n)` values at or below this are treated as round-off.
pub const DISCREPANCY_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GibbsError {
    #[error("eigen residual {residual:e} exceeds {MAX_EIGEN_RESIDUAL:e}")]
    EigenResidualTooLarge { residual: f64 },
    #[error("eigenvector is not strictly positive at {site:?} (value {value:e})")]
    NonPositivePhi { site: Vec<i64>, value: f64 },
    #[error("row deficit {deficit:e} exceeds {MAX_ROW_DEFICIT:e}")]
    RowDeficitTooLarge { deficit: f64 },
    #[error("start {site:?} lies outside the box")]
    StartOutsideBox { site: Vec<i64> },
    #[error("horizon {horizon} with kernel range {range} exceeds box radius {radius}")]
    HorizonExceedsBox { horizon: usize, range: i64, radius: i64 },
    #[error("no geometric decay detected ({points} usable points)")]
    NoDecayDetected { points: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Row-stochastic `P(x, y) = φ(x)⁻¹ (1 + V(x)) p(y − x) φ(y) / r` on a box.
#[derive(Clone, Debug)]
pub struct ChainKernel {
    pub bx: LatticeBox,
    pub rows: SparseMatrix,
    /// `max |row sum − 1|` before renormalization.
    pub row_deficit: f64,
    /// `m ∝ φ² / (1 + V)`, summing to 1.
    pub stationary: Vec<f64>,
    pub r: f64,
    pub phi: Vec<f64>,
    cumulative: Vec<Vec<(usize, f64)>>,
}

impl ChainKernel {
    pub fn len(&self) -> usize {
        self.stationary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stationary.is_empty()
    }

    /// `max |m(x)P(x, y) − m(y)P(y, x)|`.
    pub fn detailed_balance_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.len() {
            for (y, pxy) in self.rows.row(x) {
                let pyx = self.rows.get(y, x);
                worst = worst.max((self.stationary[x] * pxy - self.stationary[y] * pyx).abs());
            }
        }
        worst
    }

    /// `max_y |(mP)(y) − m(y)|`.
    pub fn stationarity_violation(&self) -> f64 {
        let mut pushed = vec![0.0; self.len()];
        for x in 0..self.len() {
            for (y, p) in self.rows.row(x) {
                pushed[y] += self.stationary[x] * p;
            }
        }
        pushed
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn step(&self, from: usize, u: f64) -> usize {
        let row = &self.cumulative[from];
        row.iter()
            .find(|(_, c)| u < *c)
            .unwrap_or_else(|| row.last().expect("rows are non-empty"))
            .0
    }
}

/// Builds the Doob transform from a principal eigenpair of `op`.
pub fn doob_kernel(op: &TruncatedOperator, pair: &Eigenpair) -> Result<ChainKernel, GibbsError> {
    let residual = op.residual(pair.value, &pair.phi);
    if !(residual < MAX_EIGEN_RESIDUAL) {
        return Err(GibbsError::EigenResidualTooLarge { residual });
    }
    let bx = op.lattice_box().clone();
    if let Some((i, &value)) = pair.phi.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(GibbsError::NonPositivePhi {
            site: bx.point(i).coords().to_vec(),
            value,
        });
    }
    let r = pair.value;
    let phi = &pair.phi;
    let mut deficit: f64 = 0.0;
    let mut rows = Vec::with_capacity(op.len());
    for x in 0..op.len() {
        let mut row: Vec<(usize, f64)> = op
            .matrix()
            .row(x)
            .map(|(y, a)| (y, a * phi[y] / (r * phi[x])))
            .collect();
        let sum: f64 = row.iter().map(|(_, v)| v).sum();
        deficit = deficit.max((sum - 1.0).abs());
        row.iter_mut().for_each(|(_, v)| *v /= sum);
        rows.push(row);
    }
    if deficit > MAX_ROW_DEFICIT {
        return Err(GibbsError::RowDeficitTooLarge { deficit });
    }
    let weights: Vec<f64> = phi
        .iter()
        .zip(op.potential())
        .map(|(f, v)| f * f / (1.0 + v))
        .collect();
    let total: f64 = weights.iter().sum();
    let stationary = weights.iter().map(|w| w / total).collect();
    let cumulative = rows
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            row.iter()
                .map(|&(y, v)| {
                    acc += v;
                    (y, acc)
                })
                .collect()
        })
        .collect();
    Ok(ChainKernel {
        bx,
        rows: SparseMatrix::from_rows(rows),
        row_deficit: deficit,
        stationary,
        r,
        phi: phi.clone(),
        cumulative,
    })
}

/// A path of the chain started at `x0`; `steps + 1` sites.
pub fn simulate_chain(
    chain: &ChainKernel,
    x0: &Point,
    steps: usize,
    seed: u64,
) -> Result<Vec<Point>, GibbsError> {
    let idx = chain.bx.index_of(x0).ok_or_else(|| GibbsError::StartOutsideBox {
        site: x0.coords().to_vec(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(simulate_indices(chain, idx, steps, &mut rng)
        .into_iter()
        .map(|i| chain.bx.point(i))
        .collect())
}

fn simulate_indices(chain: &ChainKernel, start: usize, steps: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut path = Vec::with_capacity(steps + 1);
    let mut cur = start;
    path.push(cur);
    for _ in 0..steps {
        cur = chain.step(cur, rng.gen::<f64>());
        path.push(cur);
    }
    path
}

/// Fraction of time spent at each box site.
pub fn occupation(chain: &ChainKernel, path: &[Point]) -> Vec<f64> {
    let mut counts = vec![0.0; chain.len()];
    for p in path {
        if let Some(i) = chain.bx.index_of(p) {
            counts[i] += 1.0;
        }
    }
    let n = path.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `P_V^n f` on the truncation.
pub fn fk_semigroup(op: &TruncatedOperator, f: &[f64], n: usize) -> Vec<f64> {
    let mut cur = f.to_vec();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..n {
        op.matrix().matvec_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FkEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `E_x0[f(S_n) ∏_{j<n} (1 + V(S_j))]` over
/// untruncated walk paths.  Sample `i` draws from its own stream, so the
/// result does not depend on the thread count.
pub fn fk_monte_carlo<F>(
    k: &WalkKernel,
    spec: &PotentialSpec,
    f: F,
    x0: &Point,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<FkEstimate, GibbsError>
where
    F: Fn(&Point) -> f64 + Sync,
{
    if samples < MIN_MC_SAMPLES {
        return Err(GibbsError::InvalidArgument(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let offsets: Vec<Point> = k.offsets().iter().map(|(x, _)| *x).collect();
    let dist = WeightedIndex::new(k.offsets().iter().map(|(_, p)| *p))
        .map_err(|e| GibbsError::InvalidArgument(e.to_string()))?;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mut x = *x0;
            let mut weight = 1.0;
            for _ in 0..n {
                weight *= 1.0 + spec.value(&x);
                x = x + offsets[dist.sample(&mut rng)];
            }
            weight * f(&x)
        })
        .collect();
    let m = samples as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(FkEstimate {
        estimate: mean,
        stderr: (var / m).sqrt(),
        samples,
    })
}

/// Law of `(S_1, …, S_k)` under `μ_N`.
#[derive(Clone, Debug, Serialize)]
pub struct GibbsMarginal {
    pub horizon: usize,
    pub k: usize,
    pub law: Vec<(Vec<Point>, f64)>,
    /// `(P_V^N 1)(0)`; may overflow to infinity for long horizons.
    pub z_n: f64,
    pub log_z: f64,
}

impl GibbsMarginal {
    pub fn total_mass(&self) -> f64 {
        self.law.iter().map(|(_, p)| p).sum()
    }

    pub fn expectation<F: Fn(&[Point]) -> f64>(&self, f: F) -> f64 {
        self.law.iter().map(|(path, p)| p * f(path)).sum()
    }
}

/// `P_V^m 1` for `m = 0..=m_max`, each scaled to max 1, with the log of
/// the removed factor.
fn backward_vectors(op: &TruncatedOperator, m_max: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::with_capacity(m_max + 1);
    let mut cur = vec![1.0; op.len()];
    let mut log_scale = 0.0;
    out.push((cur.clone(), 0.0));
    for _ in 0..m_max {
        let mut next = op.apply(&cur);
        let s = next.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        next.iter_mut().for_each(|v| *v /= s);
        log_scale += s.ln();
        out.push((next.clone(), log_scale));
        cur = next;
    }
    out
}

/// All box paths `0 = x_0, x_1, …, x_k` with weight
/// `∏_{j<k} (1 + V(x_j)) p(x_{j+1} − x_j) · tail(x_k)`.
fn weighted_paths<F>(op: &TruncatedOperator, k: usize, tail: F) -> Vec<(Vec<usize>, f64)>
where
    F: Fn(usize) -> f64,
{
    let mut out = Vec::new();
    let mut stack = vec![(vec![op.origin_index()], 1.0)];
    while let Some((path, w)) = stack.pop() {
        let last = *path.last().unwrap();
        if path.len() == k + 1 {
            out.push((path, w * tail(last)));
            continue;
        }
        for (y, a) in op.matrix().row(last) {
            let mut next = path.clone();
            next.push(y);
            stack.push((next, w * a));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn check_horizon(op: &TruncatedOperator, horizon: usize) -> Result<(), GibbsError> {
    let range = op.kernel_range();
    if horizon as i64 * range > op.radius() {
        return Err(GibbsError::HorizonExceedsBox {
            horizon,
            range,
            radius: op.radius(),
        });
    }
    Ok(())
}

fn marginal_from(
    op: &TruncatedOperator,
    horizon: usize,
    k: usize,
    tail: &(Vec<f64>, f64),
) -> GibbsMarginal {
    let paths = weighted_paths(op, k, |x| tail.0[x]);
    let total: f64 = paths.iter().map(|(_, w)| w).sum();
    let bx = op.lattice_box();
    let law = paths
        .into_iter()
        .map(|(p, w)| (p[1..].iter().map(|&i| bx.point(i)).collect(), w / total))
        .collect();
    let log_z = total.ln() + tail.1;
    GibbsMarginal {
        horizon,
        k,
        law,
        z_n: log_z.exp(),
        log_z,
    }
}

/// Exact `μ_N`-law of the first `k` steps by forward enumeration against
/// the backward vector `P_V^{N−k} 1`.
pub fn gibbs_marginal(
    op: &TruncatedOperator,
    horizon: usize,
    k: usize,
) -> Result<GibbsMarginal, GibbsError> {
    if horizon < k + 1 {
        return Err(GibbsError::InvalidArgument(format!(
            "horizon {horizon} must be at least k + 1 = {}",
            k + 1
        )));
    }
    check_horizon(op, horizon)?;
    let tail = backward_vectors(op, horizon - k).pop().unwrap();
    Ok(marginal_from(op, horizon, k, &tail))
}

/// Law of `(S_1, …, S_k)` under the chain started at the origin, from the
/// chain rows.
pub fn nu_marginal(chain: &ChainKernel, k: usize) -> Vec<(Vec<Point>, f64)> {
    let origin = chain
        .bx
        .index_of(&Point::origin(chain.bx.dim()))
        .expect("box is centred at the origin");
    let mut out = Vec::new();
    let mut stack = vec![(vec![origin], 1.0)];
    while let Some((path, w)) = stack.pop() {
        if path.len() == k + 1 {
            out.push((path, w));
            continue;
        }
        for (y, p) in chain.rows.row(*path.last().unwrap()) {
            let mut next = path.clone();
            next.push(y);
            stack.push((next, w * p));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.into_iter()
        .map(|(p, w)| (p[1..].iter().map(|&i| chain.bx.point(i)).collect(), w))
        .collect()
}

/// The same law from `P_V` and `(r, φ)` directly: the product telescopes to
/// `r^{−k} ∏(1 + V(x_j)) p(x_{j+1} − x_j) · φ(x_k) / φ(0)`.
pub fn nu_marginal_direct(op: &TruncatedOperator, pair: &Eigenpair, k: usize) -> Vec<(Vec<Point>, f64)> {
    let origin = op.origin_index();
    let scale = pair.value.powi(-(k as i32)) / pair.phi[origin];
    let bx = op.lattice_box();
    weighted_paths(op, k, |x| pair.phi[x] * scale)
        .into_iter()
        .map(|(p, w)| (p[1..].iter().map(|&i| bx.point(i)).collect(), w))
        .collect()
}

fn law_expectation<F: Fn(&[Point]) -> f64>(law: &[(Vec<Point>, f64)], f: &F) -> f64 {
    law.iter().map(|(p, w)| w * f(p)).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceFit {
    pub horizons: Vec<usize>,
    /// `D(n) = |E_{μ_n} F − E_ν F|`.
    pub discrepancy: Vec<f64>,
    /// Fitted geometric ratio per step.
    pub epsilon: f64,
    pub residual: f64,
    pub points_used: usize,
}

/// `D(n)` for every horizon in `horizons`.
pub fn discrepancy_sequence<F>(
    op: &TruncatedOperator,
    chain: &ChainKernel,
    k: usize,
    horizons: &[usize],
    functional: F,
) -> Result<Vec<f64>, GibbsError>
where
    F: Fn(&[Point]) -> f64 + Sync,
{
    let n_max = *horizons.iter().max().ok_or_else(|| {
        GibbsError::InvalidArgument("empty horizon list".into())
    })?;
    if horizons.iter().any(|&n| n < k + 1) {
        return Err(GibbsError::InvalidArgument(format!("horizons must exceed k = {k}")));
    }
    check_horizon(op, n_max)?;
    let target = law_expectation(&nu_marginal(chain, k), &functional);
    let tails = backward_vectors(op, n_max - k);
    Ok(horizons
        .par_iter()
        .map(|&n| {
            let mu = marginal_from(op, n, k, &tails[n - k]);
            (mu.expectation(&functional) - target).abs()
        })
        .collect())
}

/// Geometric fit of `D(n)` over `horizons`, ignoring values at round-off.
pub fn convergence_rate<F>(
    op: &TruncatedOperator,
    chain: &ChainKernel,
    k: usize,
    horizons: &[usize],
    functional: F,
) -> Result<ConvergenceFit, GibbsError>
where
    F: Fn(&[Point]) -> f64 + Sync,
{
    let discrepancy = discrepancy_sequence(op, chain, k, horizons, functional)?;
    let pts: Vec<(f64, f64)> = horizons
        .iter()
        .zip(&discrepancy)
        .filter(|(_, d)| **d > DISCREPANCY_FLOOR)
        .map(|(&n, &d)| (n as f64, d))
        .collect();
    let fit = decay_rate_estimate(&pts).map_err(|e| match e {
        ResolventError::TooFewPoints(p) => GibbsError::NoDecayDetected { points: p },
        _ => GibbsError::NoDecayDetected { points: pts.len() },
    })?;
    Ok(ConvergenceFit {
        horizons: horizons.to_vec(),
        discrepancy,
        epsilon: (-fit.rate).exp(),
        residual: fit.residual,
        points_used: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionPoint {
    pub n: usize,
    pub log_z: f64,
    /// `Z_N^{1/N}`.
    pub root: f64,
    /// `(Z_N / Z_{N−2})^{1/2}`, insensitive to a mirror eigenvalue `−r`.
    pub two_step_ratio: f64,
}

/// `Z_N = (P_V^N 1)(0)` for `N = 1..=n_max`.
pub fn partition_growth(op: &TruncatedOperator, n_max: usize) -> Vec<PartitionPoint> {
    let origin = op.origin_index();
    let back = backward_vectors(op, n_max);
    let log_z: Vec<f64> = back.iter().map(|(u, s)| u[origin].ln() + s).collect();
    (1..=n_max)
        .map(|n| PartitionPoint {
            n,
            log_z: log_z[n],
            root: (log_z[n] / n as f64).exp(),
            two_step_ratio: (0.5 * (log_z[n] - log_z[n.saturating_sub(2)])).exp(),
        })
        .collect()
}

/// `⟨P_V 1, 1⟩_V / ⟨1, 1⟩_V`, a lower bound on `r(P_V)`.
pub fn constant_rayleigh_quotient(op: &TruncatedOperator) -> f64 {
    let one = vec![1.0; op.len()];
    op.inner_v(&op.apply(&one), &one) / op.inner_v(&one, &one)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::GeometricSparse;
    use crate::spectral::perron_pair;
    use approx::assert_abs_diff_eq;

    fn p1(x: i64) -> Point {
        Point::new(&[x])
    }

    fn single_delta(radius: i64) -> (TruncatedOperator, Eigenpair) {
        let spec = PotentialSpec::single_site(p1(0), 1.0, radius).unwrap();
        let op = TruncatedOperator::new(&WalkKernel::simple1d(), &spec, radius).unwrap();
        let pair = perron_pair(&op).unwrap();
        (op, pair)
    }

    #[test]
    fn doob_chain_single_delta() {
        let (op, pair) = single_delta(40);
        let chain = doob_kernel(&op, &pair).unwrap();
        assert!(chain.row_deficit < 1e-10, "{}", chain.row_deficit);
        assert!(chain.detailed_balance_violation() < 1e-12);
        assert!(chain.stationarity_violation() < 1e-12);
        assert_abs_diff_eq!(chain.stationary.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let i = |x: i64| op.lattice_box().index_of(&p1(x)).unwrap();
        let m = &chain.stationary;
        assert!(m[i(0)] > m[i(1)] && m[i(0)] > m[i(-1)]);
        for x in 1..10 {
            assert_abs_diff_eq!(m[i(x + 1)] / m[i(x)], 1.0 / 3.0, epsilon = 1e-8);
        }
        // Drift toward the origin from the right.
        assert!(chain.rows.get(i(5), i(4)) > chain.rows.get(i(5), i(6)));
    }

    #[test]
    fn free_walk_h_transform() {
        let spec = PotentialSpec::zero(1, 10).unwrap();
        let op = TruncatedOperator::new(&WalkKernel::simple1d(), &spec, 10).unwrap();
        let pair = perron_pair(&op).unwrap();
        let chain = doob_kernel(&op, &pair).unwrap();
        assert!(chain.row_deficit < 1e-10);
        assert!(chain.detailed_balance_violation() < 1e-12);
    }

    #[test]
    fn doob_rejects_bad_pairs() {
        let (op, mut pair) = single_delta(20);
        pair.phi[3] = -1e-3;
        assert!(matches!(doob_kernel(&op, &pair), Err(GibbsError::EigenResidualTooLarge { .. })));
        let (op, mut pair) = single_delta(20);
        pair.value += 1e-3;
        assert!(matches!(doob_kernel(&op, &pair), Err(GibbsError::EigenResidualTooLarge { .. })));
        // Flipping a far boundary value barely moves the residual.
        let (op, mut pair) = single_delta(40);
        pair.phi[0] = -pair.phi[0];
        assert!(matches!(doob_kernel(&op, &pair), Err(GibbsError::NonPositivePhi { .. })));
    }

    #[test]
    fn simulation_is_deterministic_and_ergodic() {
        let (op, pair) = single_delta(30);
        let chain = doob_kernel(&op, &pair).unwrap();
        assert_eq!(simulate_chain(&chain, &p1(0), 0, 1).unwrap(), vec![p1(0)]);
        let a = simulate_chain(&chain, &p1(2), 1000, 7).unwrap();
        let b = simulate_chain(&chain, &p1(2), 1000, 7).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            simulate_chain(&chain, &p1(31), 5, 1),
            Err(GibbsError::StartOutsideBox { .. })
        ));
        let path = simulate_chain(&chain, &p1(0), 1_000_000, 11).unwrap();
        let tv = total_variation(&occupation(&chain, &path), &chain.stationary);
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn semigroup_basics() {
        let spec = PotentialSpec::zero(1, 10).unwrap();
        let op = TruncatedOperator::new(&WalkKernel::simple1d(), &spec, 10).unwrap();
        let mut delta = vec![0.0; op.len()];
        delta[op.origin_index()] = 1.0;
        assert_eq!(fk_semigroup(&op, &delta, 0), delta);
        let two = fk_semigroup(&op, &delta, 2);
        let i = |x: i64| op.lattice_box().index_of(&p1(x)).unwrap();
        assert_abs_diff_eq!(two[i(0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(two[i(2)], 0.25, epsilon = 1e-15);
        assert_eq!(two[i(1)], 0.0);

        let (op, _) = single_delta(250);
        let ones = vec![1.0; op.len()];
        let z = fk_semigroup(&op, &ones, 200)[op.origin_index()];
        assert!(((z.ln() / 200.0).exp() - 2.0 / 3f64.sqrt()).abs() < 5e-3);
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let k = WalkKernel::simple1d();
        let spec = PotentialSpec::zero(1, 30).unwrap();
        let free = fk_monte_carlo(&k, &spec, |_| 1.0, &p1(0), 20, 2000, 3).unwrap();
        assert_eq!(free.estimate, 1.0);
        assert_eq!(free.stderr, 0.0);

        let spec = PotentialSpec::single_site(p1(0), 1.0, 30).unwrap();
        let op = TruncatedOperator::new(&k, &spec, 30).unwrap();
        let exact = fk_semigroup(&op, &vec![1.0; op.len()], 20)[op.origin_index()];
        let mc = fk_monte_carlo(&k, &spec, |_| 1.0, &p1(0), 20, 20_000, 5).unwrap();
        assert!((mc.estimate - exact).abs() < 3.0 * mc.stderr, "{mc:?} vs {exact}");
        let again = fk_monte_carlo(&k, &spec, |_| 1.0, &p1(0), 20, 20_000, 5).unwrap();
        assert_eq!(mc, again);
        assert!(fk_monte_carlo(&k, &spec, |_| 1.0, &p1(0), 20, 10, 5).is_err());
    }

    #[test]
    fn marginals() {
        let (op, _) = single_delta(45);
        let trivial = gibbs_marginal(&op, 1, 0).unwrap();
        assert_abs_diff_eq!(trivial.z_n, 2.0, epsilon = 1e-14);
        assert_eq!(trivial.law.len(), 1);
        let m = gibbs_marginal(&op, 40, 1).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        assert!(m.z_n > 0.0);
        assert!(matches!(gibbs_marginal(&op, 46, 1), Err(GibbsError::HorizonExceedsBox { .. })));

        let free = TruncatedOperator::new(
            &WalkKernel::simple1d(),
            &PotentialSpec::zero(1, 10).unwrap(),
            10,
        )
        .unwrap();
        let m = gibbs_marginal(&free, 6, 2).unwrap();
        assert_abs_diff_eq!(m.z_n, 1.0, epsilon = 1e-14);
        assert!(m.law.iter().all(|(_, p)| (p - 0.25).abs() < 1e-14));
    }

    #[test]
    fn nu_two_ways() {
        let (op, pair) = single_delta(30);
        let chain = doob_kernel(&op, &pair).unwrap();
        for k in 1..=3 {
            let a = nu_marginal(&chain, k);
            let b = nu_marginal_direct(&op, &pair, k);
            assert_eq!(a.len(), b.len());
            for ((pa, wa), (pb, wb)) in a.iter().zip(&b) {
                assert_eq!(pa, pb);
                assert!((wa - wb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_functional_has_no_discrepancy() {
        let (op, pair) = single_delta(30);
        let chain = doob_kernel(&op, &pair).unwrap();
        let d = discrepancy_sequence(&op, &chain, 1, &[5, 10, 20], |_| 1.0).unwrap();
        assert!(d.iter().all(|x| *x < 1e-14));
        assert!(matches!(
            convergence_rate(&op, &chain, 1, &[5, 10, 20], |_| 1.0),
            Err(GibbsError::NoDecayDetected { .. })
        ));
    }

    #[test]
    fn lazy_walk_convergence_rate() {
        let k = WalkKernel::lazy1d(0.3).unwrap();
        let spec = GeometricSparse::new(1, 1.0, 3).anchor(p1(0), 2.0).box_radius(80).build().unwrap();
        let op = TruncatedOperator::new(&k, &spec, 80).unwrap();
        let pair = perron_pair(&op).unwrap();
        let chain = doob_kernel(&op, &pair).unwrap();
        let ns: Vec<usize> = (10..=60).collect();
        let fit = convergence_rate(&op, &chain, 1, &ns, |p| (p[0] == p1(1)) as u8 as f64).unwrap();
        assert!(fit.epsilon < 1.0);
    }

    #[test]
    fn partition_sequence() {
        let free = TruncatedOperator::new(
            &WalkKernel::simple1d(),
            &PotentialSpec::zero(1, 60).unwrap(),
            60,
        )
        .unwrap();
        assert!(partition_growth(&free, 50).iter().all(|p| (p.root - 1.0).abs() < 1e-14));

        let (op, pair) = single_delta(120);
        let seq = partition_growth(&op, 100);
        let upper = op.max_row_sum();
        let lower = constant_rayleigh_quotient(&op);
        assert!(lower <= pair.value);
        for p in &seq[20..] {
            assert!(p.root <= upper && p.root >= pair.value);
        }
        let even: Vec<f64> = seq.iter().filter(|p| p.n % 2 == 0).map(|p| p.root).collect();
        assert!(even[10..].windows(2).all(|w| w[1] <= w[0]));
        assert_abs_diff_eq!(seq[99].two_step_ratio, pair.value, epsilon = 1e-6);
    }
}
