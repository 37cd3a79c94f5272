//! Symmetric finite-range transition kernels `p` on ℤ^d and the convolution
//! operator `P f(x) = Σ_y p(x − y) f(y)`.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{LatticeBox, Point, MAX_DIM};
use crate::sparse::SparseMatrix;

/// Tolerance on `Σ p(x) = 1` and on `p(x) = p(−x)`.
pub const KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel has no offset with positive probability")]
    EmptySupport,
    #[error("negative probability {prob} at offset {offset}")]
    NegativeProbability { offset: Point, prob: f64 },
    #[error("offset {offset} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        offset: Point,
        got: usize,
        expected: usize,
    },
    #[error("kernel is not symmetric: p({offset}) = {p_plus} but p(-x) = {p_minus}")]
    NotSymmetric {
        offset: Point,
        p_plus: f64,
        p_minus: f64,
    },
    #[error("probabilities sum to {total} (defect {defect:e})")]
    NotNormalized { total: f64, defect: f64 },
    #[error("support does not generate Z^d: {unreached} sites of Q(0,{radius}) unreachable")]
    NotIrreducible { radius: i64, unreached: usize },
    #[error("box radius {box_radius} must exceed the kernel range {range}")]
    BoxTooSmall { box_radius: i64, range: i64 },
    #[error("theta is not on the spectrum: |p̂(θ) − λ| = {gap:e}")]
    ThetaNotOnSpectrum { gap: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `σ(P) = [lower, upper]` with `upper = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumInterval {
    pub lower: f64,
    pub upper: f64,
}

impl SpectrumInterval {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lower && lambda <= self.upper
    }

    /// Distance from `lambda` to the interval (0 inside).
    pub fn distance(&self, lambda: f64) -> f64 {
        if lambda < self.lower {
            self.lower - lambda
        } else if lambda > self.upper {
            lambda - self.upper
        } else {
            0.0
        }
    }
}

/// A validated symmetric, normalized, finite-range, irreducible kernel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkKernel {
    dim: usize,
    /// Sorted by offset; both `x` and `−x` present.
    offsets: Vec<(Point, f64)>,
    range: i64,
    spectrum: SpectrumInterval,
    normalization_defect: f64,
    irreducibility_radius: i64,
}

/// Summary emitted by `validate`.
#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub dim: usize,
    pub range: i64,
    pub support_size: usize,
    pub p0: f64,
    pub normalization_defect: f64,
    /// Irreducibility is certified only on `Q(0, radius)` by breadth-first search.
    pub irreducibility_radius: i64,
    pub irreducibility_is_finite_proxy: bool,
    pub spectrum: SpectrumInterval,
}

impl WalkKernel {
    /// Validates a raw offset → probability list.
    ///
    /// Duplicate offsets are merged and zero entries dropped. Checks run in
    /// the order: dimensions, signs, support, symmetry, normalization,
    /// irreducibility.
    pub fn validate(dim: usize, raw: &[(Point, f64)]) -> Result<Self, KernelError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(KernelError::InvalidArgument(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        let mut merged: BTreeMap<Point, f64> = BTreeMap::new();
        for &(offset, prob) in raw {
            if offset.dim() != dim {
                return Err(KernelError::DimensionMismatch {
                    offset,
                    got: offset.dim(),
                    expected: dim,
                });
            }
            if !(prob >= 0.0) || !prob.is_finite() {
                return Err(KernelError::NegativeProbability { offset, prob });
            }
            *merged.entry(offset).or_insert(0.0) += prob;
        }
        merged.retain(|_, p| *p > 0.0);
        if merged.is_empty() {
            return Err(KernelError::EmptySupport);
        }
        for (&x, &p) in &merged {
            let q = merged.get(&-x).copied().unwrap_or(0.0);
            if (p - q).abs() > KERNEL_TOL {
                return Err(KernelError::NotSymmetric {
                    offset: x,
                    p_plus: p,
                    p_minus: q,
                });
            }
        }
        let total: f64 = merged.values().sum();
        let defect = (total - 1.0).abs();
        if defect > KERNEL_TOL {
            return Err(KernelError::NotNormalized { total, defect });
        }
        let offsets: Vec<(Point, f64)> = merged.into_iter().collect();
        let range = offsets.iter().map(|(x, _)| x.norm_inf()).max().unwrap_or(0);
        let irreducibility_radius = (2 * range).max(1);
        let unreached = unreached_sites(dim, &offsets, irreducibility_radius);
        if unreached > 0 {
            return Err(KernelError::NotIrreducible {
                radius: irreducibility_radius,
                unreached,
            });
        }
        let mut k = WalkKernel {
            dim,
            offsets,
            range,
            spectrum: SpectrumInterval {
                lower: -1.0,
                upper: 1.0,
            },
            normalization_defect: defect,
            irreducibility_radius,
        };
        let density = if dim <= 2 { 256 } else { 64 };
        k.spectrum = k.spectrum_bounds(density)?;
        Ok(k)
    }

    /// Convenience form taking plain coordinate vectors.
    pub fn from_entries(dim: usize, entries: &[(Vec<i64>, f64)]) -> Result<Self, KernelError> {
        let raw: Vec<(Point, f64)> = entries
            .iter()
            .map(|(c, p)| (Point::new(c), *p))
            .collect();
        WalkKernel::validate(dim, &raw)
    }

    /// Simple random walk on ℤ: `p(±1) = 1/2`.
    pub fn simple1d() -> Self {
        WalkKernel::lazy1d(0.0).expect("simple walk is valid")
    }

    /// Lazy walk on ℤ: `p(0) = q`, `p(±1) = (1 − q)/2`.
    pub fn lazy1d(q: f64) -> Result<Self, KernelError> {
        if !(0.0..1.0).contains(&q) {
            return Err(KernelError::InvalidArgument(format!(
                "laziness q = {q} must lie in [0, 1)"
            )));
        }
        let side = (1.0 - q) / 2.0;
        WalkKernel::from_entries(1, &[(vec![0], q), (vec![1], side), (vec![-1], side)])
    }

    /// Simple random walk on ℤ²: `p(±e₁) = p(±e₂) = 1/4`.
    pub fn simple2d() -> Self {
        WalkKernel::from_entries(
            2,
            &[
                (vec![1, 0], 0.25),
                (vec![-1, 0], 0.25),
                (vec![0, 1], 0.25),
                (vec![0, -1], 0.25),
            ],
        )
        .expect("simple 2D walk is valid")
    }

    /// Parses `simple1d`, `simple2d` or `lazy1d(q)`.
    pub fn preset(name: &str) -> Result<Self, KernelError> {
        let name = name.trim();
        match name {
            "simple1d" => Ok(WalkKernel::simple1d()),
            "simple2d" => Ok(WalkKernel::simple2d()),
            _ => {
                let q = name
                    .strip_prefix("lazy1d(")
                    .and_then(|s| s.strip_suffix(')'))
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| KernelError::InvalidArgument(format!("unknown preset `{name}`")))?;
                WalkKernel::lazy1d(q)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> i64 {
        self.range
    }

    pub fn offsets(&self) -> &[(Point, f64)] {
        &self.offsets
    }

    pub fn prob(&self, x: &Point) -> f64 {
        self.offsets
            .binary_search_by(|(o, _)| o.cmp(x))
            .map(|i| self.offsets[i].1)
            .unwrap_or(0.0)
    }

    pub fn p0(&self) -> f64 {
        self.prob(&Point::origin(self.dim))
    }

    /// `σ(P) = [ℓ(P), 1]`, computed at validation time.
    pub fn spectrum(&self) -> SpectrumInterval {
        self.spectrum
    }

    /// Laziness `q` when this is a nearest-neighbour walk on ℤ.
    pub fn lazy1d_parameter(&self) -> Option<f64> {
        if self.dim != 1 || self.range != 1 {
            return None;
        }
        let q = self.p0();
        let side = self.prob(&Point::new(&[1]));
        ((q + 2.0 * side - 1.0).abs() < KERNEL_TOL).then_some(q)
    }

    pub fn report(&self) -> KernelReport {
        KernelReport {
            dim: self.dim,
            range: self.range,
            support_size: self.offsets.len(),
            p0: self.p0(),
            normalization_defect: self.normalization_defect,
            irreducibility_radius: self.irreducibility_radius,
            irreducibility_is_finite_proxy: true,
            spectrum: self.spectrum,
        }
    }

    /// `p̂(θ) = Σ_x p(x) cos(θ·x)`; real because `p` is symmetric.
    pub fn char_function(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim);
        self.offsets
            .iter()
            .map(|(x, p)| p * x.dot(theta).cos())
            .sum()
    }

    /// `σ(P)` from a tensor grid scan of `p̂` refined by golden-section
    /// coordinate sweeps around the best grid points.
    pub fn spectrum_bounds(&self, grid_density: usize) -> Result<SpectrumInterval, KernelError> {
        if grid_density < 8 {
            return Err(KernelError::InvalidArgument(format!(
                "grid density {grid_density} below 8 points per axis"
            )));
        }
        let lower = minimize_trig(self.dim, grid_density, |t| self.char_function(t));
        Ok(SpectrumInterval { lower, upper: 1.0 })
    }

    /// The truncation of `P` to `bx` with zero extension outside.
    pub fn transition_matrix(&self, bx: &LatticeBox) -> SparseMatrix {
        let rows = (0..bx.len())
            .map(|i| {
                let x = bx.point(i);
                self.offsets
                    .iter()
                    .filter_map(|&(z, p)| bx.index_of(&(x + z)).map(|j| (j, p)))
                    .collect()
            })
            .collect();
        SparseMatrix::from_rows(rows)
    }

    /// `P f` on `bx` with `f` extended by zero outside the box.
    pub fn apply_p(&self, bx: &LatticeBox, f: &[f64]) -> Result<Vec<f64>, KernelError> {
        if bx.radius() <= self.range {
            return Err(KernelError::BoxTooSmall {
                box_radius: bx.radius(),
                range: self.range,
            });
        }
        if f.len() != bx.len() {
            return Err(KernelError::InvalidArgument(format!(
                "function has {} values, box has {} sites",
                f.len(),
                bx.len()
            )));
        }
        Ok(self.transition_matrix(bx).matvec(f))
    }

    /// Return probability `p_n(0)` of the `n`-fold convolution.
    pub fn convolution_power_at_zero(&self, n: usize) -> f64 {
        self.return_probabilities(n)[n]
    }

    /// `[p_0(0), p_1(0), …, p_{n_max}(0)]`, exact up to rounding.
    ///
    /// A path that is back at the origin after `n ≤ n_max` steps never leaves
    /// `Q(0, ⌈n_max/2⌉·r)`, so the Dirichlet truncation to that box loses
    /// nothing.
    pub fn return_probabilities(&self, n_max: usize) -> Vec<f64> {
        let radius = ((n_max as i64 + 1) / 2 * self.range).max(1);
        let bx = LatticeBox::centered(self.dim, radius);
        let pm = self.transition_matrix(&bx);
        let origin = bx.index_of(&Point::origin(self.dim)).unwrap();
        let mut dist = vec![0.0; bx.len()];
        dist[origin] = 1.0;
        let mut next = vec![0.0; bx.len()];
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(1.0);
        for _ in 0..n_max {
            pm.matvec_into(&dist, &mut next);
            std::mem::swap(&mut dist, &mut next);
            out.push(dist[origin]);
        }
        out
    }

    /// `‖(λ − P)u_n‖` for the normalized plane wave `u_n = e^{iθ·x} 1_{Q(0, n+r)}`.
    pub fn weyl_sequence_residual(
        &self,
        theta: &[f64],
        lambda: f64,
        n: usize,
    ) -> Result<f64, KernelError> {
        if theta.len() != self.dim {
            return Err(KernelError::InvalidArgument("theta has wrong dimension".into()));
        }
        if n == 0 {
            return Err(KernelError::InvalidArgument("n must be at least 1".into()));
        }
        let gap = (self.char_function(theta) - lambda).abs();
        if gap >= 1e-10 {
            return Err(KernelError::ThetaNotOnSpectrum { gap });
        }
        let wave_radius = n as i64 + self.range;
        let bx = LatticeBox::centered(self.dim, wave_radius + self.range);
        let pm = self.transition_matrix(&bx);
        let mut re = vec![0.0; bx.len()];
        let mut im = vec![0.0; bx.len()];
        let mut count = 0usize;
        for (i, x) in bx.iter().enumerate() {
            if x.norm_inf() <= wave_radius {
                let phase = x.dot(theta);
                re[i] = phase.cos();
                im[i] = phase.sin();
                count += 1;
            }
        }
        let pre = pm.matvec(&re);
        let pim = pm.matvec(&im);
        let mut sq = 0.0;
        for i in 0..bx.len() {
            sq += (lambda * re[i] - pre[i]).powi(2) + (lambda * im[i] - pim[i]).powi(2);
        }
        Ok((sq / count as f64).sqrt())
    }
}

/// Number of sites of `Q(0, target)` not reachable from 0 by sums of
/// support offsets, searching inside `Q(0, 2·target)`.
fn unreached_sites(dim: usize, offsets: &[(Point, f64)], target: i64) -> usize {
    let search = LatticeBox::centered(dim, 2 * target);
    let start = Point::origin(dim);
    let mut seen: HashSet<Point> = HashSet::new();
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for &(z, _) in offsets {
            let y = x + z;
            if search.contains(&y) && seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    LatticeBox::centered(dim, target)
        .iter()
        .filter(|p| !seen.contains(p))
        .count()
}

/// Global minimum of a 2π-periodic trigonometric polynomial on `[−π, π]^d`.
pub(crate) fn minimize_trig<F: Fn(&[f64]) -> f64>(dim: usize, density: usize, f: F) -> f64 {
    let h = 2.0 * PI / density as f64;
    let total = density.pow(dim as u32);
    let mut theta = vec![0.0; dim];
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    const KEEP: usize = 4;
    for idx in 0..total {
        let mut rest = idx;
        for t in theta.iter_mut() {
            *t = -PI + h * (rest % density) as f64;
            rest /= density;
        }
        let v = f(&theta);
        if best.len() < KEEP || v < best[best.len() - 1].0 {
            best.push((v, theta.clone()));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(KEEP);
        }
    }
    let mut overall = best[0].0;
    for (mut value, mut point) in best {
        for _sweep in 0..60 {
            let before = value;
            for a in 0..dim {
                let centre = point[a];
                let (t, v) = golden_section(centre - h, centre + h, |t| {
                    let mut p = point.clone();
                    p[a] = t;
                    f(&p)
                });
                if v < value {
                    value = v;
                    point[a] = t;
                }
            }
            if before - value <= 1e-16 {
                break;
            }
        }
        overall = overall.min(value);
    }
    overall
}

fn golden_section<F: Fn(f64) -> f64>(mut a: f64, mut b: f64, f: F) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(c: &[i64]) -> Point {
        Point::new(c)
    }

    #[test]
    fn simple_walk_is_valid_with_zero_entry() {
        let k = WalkKernel::validate(1, &[(pt(&[0]), 0.0), (pt(&[1]), 0.5), (pt(&[-1]), 0.5)])
            .unwrap();
        assert_eq!(k.range(), 1);
        assert_eq!(k.offsets().len(), 2);
        assert!(k.report().irreducibility_is_finite_proxy);
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        let err = WalkKernel::validate(1, &[(pt(&[-1]), 0.5), (pt(&[1]), 0.6)]).unwrap_err();
        assert!(matches!(err, KernelError::NotSymmetric { .. }));
    }

    #[test]
    fn even_steps_not_irreducible() {
        // Independent enumeration: sums of ±2 only ever land on even sites,
        // so every odd site of Q(0, 4) is missed.
        let odd_sites = (-4i64..=4).filter(|x| x % 2 != 0).count();
        let err = WalkKernel::validate(1, &[(pt(&[2]), 0.5), (pt(&[-2]), 0.5)]).unwrap_err();
        assert_eq!(
            err,
            KernelError::NotIrreducible {
                radius: 4,
                unreached: odd_sites
            }
        );
    }

    #[test]
    fn degenerate_and_malformed_kernels() {
        assert_eq!(
            WalkKernel::validate(1, &[(pt(&[0]), 0.0)]).unwrap_err(),
            KernelError::EmptySupport
        );
        assert!(matches!(
            WalkKernel::validate(1, &[(pt(&[0]), 1.0)]).unwrap_err(),
            KernelError::NotIrreducible { .. }
        ));
        assert!(matches!(
            WalkKernel::validate(1, &[(pt(&[1]), 0.4), (pt(&[-1]), 0.4)]).unwrap_err(),
            KernelError::NotNormalized { .. }
        ));
        assert!(matches!(
            WalkKernel::validate(1, &[(pt(&[1]), -0.5)]).unwrap_err(),
            KernelError::NegativeProbability { .. }
        ));
    }

    #[test]
    fn char_function_values() {
        let k = WalkKernel::simple1d();
        assert_abs_diff_eq!(k.char_function(&[0.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.char_function(&[PI]), -1.0, epsilon = 1e-15);
        for q in [0.1, 0.25, 0.7] {
            let lazy = WalkKernel::lazy1d(q).unwrap();
            // q + (1 − q)cos π
            assert_abs_diff_eq!(lazy.char_function(&[PI]), 2.0 * q - 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn spectrum_lower_edges() {
        assert_abs_diff_eq!(WalkKernel::simple1d().spectrum().lower, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            WalkKernel::lazy1d(0.25).unwrap().spectrum().lower,
            -0.5,
            epsilon = 1e-12
        );
        // Brute-force oracle on a fine grid for (cos θ₁ + cos θ₂)/2.
        let n = 400;
        let mut brute = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let a = -PI + 2.0 * PI * i as f64 / n as f64;
                let b = -PI + 2.0 * PI * j as f64 / n as f64;
                brute = brute.min((a.cos() + b.cos()) / 2.0);
            }
        }
        let k = WalkKernel::simple2d();
        assert_abs_diff_eq!(k.spectrum().lower, brute, epsilon = 1e-12);
        assert!(k.spectrum_bounds(4).is_err());
    }

    #[test]
    fn spectrum_edge_refined_off_grid() {
        // p̂(θ) = 0.4 + 0.2cos θ + 0.1cos 2θ: minimum at cos θ = −1 (value 0.3);
        // a coarse 9-point grid misses θ = π exactly.
        let k = WalkKernel::from_entries(
            1,
            &[
                (vec![0], 0.4),
                (vec![1], 0.1),
                (vec![-1], 0.1),
                (vec![2], 0.2),
                (vec![-2], 0.2),
            ],
        )
        .unwrap();
        // p̂ = 0.4 + 0.2cos θ + 0.4cos 2θ; d/dθ = 0 at cos θ = −1/8.
        let c = -0.125f64;
        let exact = 0.4 + 0.2 * c + 0.4 * (2.0 * c * c - 1.0);
        let s = k.spectrum_bounds(9).unwrap();
        assert_abs_diff_eq!(s.lower, exact, epsilon = 1e-12);
        assert!(s.lower >= 2.0 * k.p0() - 1.0 - 1e-12);
    }

    #[test]
    fn apply_p_delta_and_constants() {
        let k = WalkKernel::simple1d();
        let bx = LatticeBox::centered(1, 5);
        let mut f = vec![0.0; bx.len()];
        f[bx.index_of(&pt(&[0])).unwrap()] = 1.0;
        let pf = k.apply_p(&bx, &f).unwrap();
        for (i, x) in bx.iter().enumerate() {
            let expected = if x.norm_inf() == 1 { 0.5 } else { 0.0 };
            assert_eq!(pf[i], expected);
        }
        let ones = vec![1.0; bx.len()];
        let p1 = k.apply_p(&bx, &ones).unwrap();
        for (i, x) in bx.iter().enumerate() {
            if bx.depth(&x) >= k.range() {
                assert_abs_diff_eq!(p1[i], 1.0, epsilon = 1e-15);
            }
        }
        assert!(matches!(
            k.apply_p(&LatticeBox::centered(1, 1), &[0.0; 3]),
            Err(KernelError::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn plane_wave_is_eigenfunction_in_interior() {
        let k = WalkKernel::simple2d();
        let theta = [0.7, -1.9];
        let bx = LatticeBox::centered(2, 6);
        let f: Vec<f64> = bx.iter().map(|x| x.dot(&theta).cos()).collect();
        let pf = k.apply_p(&bx, &f).unwrap();
        let lam = k.char_function(&theta);
        for (i, x) in bx.iter().enumerate() {
            if bx.depth(&x) >= 1 {
                assert_abs_diff_eq!(pf[i], lam * f[i], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn return_probabilities_by_path_enumeration() {
        // Enumerate all ±1 sequences of length n and count those summing to 0.
        fn enumerate(n: u32) -> f64 {
            let hits = (0u32..1 << n)
                .filter(|bits| 2 * bits.count_ones() as i64 == n as i64)
                .count();
            hits as f64 / (1u64 << n) as f64
        }
        let k = WalkKernel::simple1d();
        let probs = k.return_probabilities(12);
        assert_eq!(probs[0], 1.0);
        assert_eq!(k.convolution_power_at_zero(0), 1.0);
        for (n, &p) in probs.iter().enumerate().skip(1) {
            assert_abs_diff_eq!(p, enumerate(n as u32), epsilon = 1e-15);
        }
        assert_eq!(k.convolution_power_at_zero(2), 0.5);
        assert_eq!(k.convolution_power_at_zero(7), 0.0);
    }

    #[test]
    fn return_probability_matches_matrix_power() {
        let k = WalkKernel::lazy1d(0.3).unwrap();
        for n in [1usize, 4, 9] {
            let bx = LatticeBox::centered(1, n as i64 * k.range());
            let pm = k.transition_matrix(&bx).to_dense();
            let o = bx.index_of(&pt(&[0])).unwrap();
            let power = pm.pow(n as u32);
            assert_abs_diff_eq!(
                power[(o, o)],
                k.convolution_power_at_zero(n),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn weyl_residual_positive_and_guarded() {
        let k = WalkKernel::simple1d();
        let r = k.weyl_sequence_residual(&[0.0], 1.0, 50).unwrap();
        // Exact: only the two edge sites and their outer neighbours contribute.
        // (λ−P)φ = 1/2 at x = ±(n+1) and −1/2 at x = ±(n+2); ‖φ‖² = 2n+3.
        let exact = (4.0 * 0.25 / 103.0f64).sqrt();
        assert_abs_diff_eq!(r, exact, epsilon = 1e-14);
        assert!(matches!(
            k.weyl_sequence_residual(&[0.3], 1.0, 5),
            Err(KernelError::ThetaNotOnSpectrum { .. })
        ));
    }

    #[test]
    fn presets_parse() {
        assert_eq!(WalkKernel::preset("lazy1d(0.25)").unwrap().p0(), 0.25);
        assert_eq!(WalkKernel::preset("simple2d").unwrap().dim(), 2);
        assert!(WalkKernel::preset("lazy1d(1.5)").is_err());
        assert!(WalkKernel::preset("bogus").is_err());
        assert_eq!(WalkKernel::lazy1d(0.25).unwrap().lazy1d_parameter(), Some(0.25));
        assert_eq!(WalkKernel::simple2d().lazy1d_parameter(), None);
    }
}
