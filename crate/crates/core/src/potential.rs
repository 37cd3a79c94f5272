//! Nonnegative bounded potentials on ℤ^d: finitely many explicit values plus
//! a rule describing the tail.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{LatticeBox, Point, MAX_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("anchor value {anchor} is below v0 = {v0}")]
    AnchorBelowV0 { anchor: f64, v0: f64 },
    #[error("potential value {value} at {site} is negative or not finite")]
    InvalidValue { site: String, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need two support sites with |x| >= {r}, found {found}")]
    InsufficientSupport { r: f64, found: usize },
    #[error("no concentration cube found inside the working box of radius {box_radius}")]
    NotFoundInBox { box_radius: i64 },
    #[error("v0 = 0: the potential has no essential mass away from zero")]
    NoEssentialMass,
}

/// How `V` behaves away from its explicit values.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRule {
    /// No tail: `V` vanishes off the explicit sites.
    Finite,
    /// `V(±base^k e_α) = values[k mod len]` for `k ≥ 0`, on axis 0 or on all axes.
    Geometric {
        base: i64,
        values: Vec<f64>,
        all_axes: bool,
    },
    /// `V(x) = amplitude · base^{−|x|}`.
    Decaying { amplitude: f64, base: f64 },
    /// `V ≡ value` everywhere (dense control).
    Constant { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialSpec {
    dim: usize,
    explicit: BTreeMap<Point, f64>,
    tail: TailRule,
    declared_essential_values: Vec<f64>,
    sup_norm: f64,
    box_radius: i64,
}

/// `a_ε(x)` samples and the tail suprema of `a_ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsenessProfile {
    pub epsilon: f64,
    pub samples: Vec<(Point, f64)>,
    /// `(R, sup_{|x| ≥ R} a_ε(x))`; an empty supremum counts as 0.
    pub sup_tail: Vec<(f64, f64)>,
}

impl SparsenessProfile {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.sup_tail.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// Builder for sparse potentials supported on geometric sequences of sites.
#[derive(Clone, Debug)]
pub struct GeometricSparse {
    dim: usize,
    values: Vec<f64>,
    base: i64,
    all_axes: bool,
    box_radius: i64,
    anchor: Option<(Point, f64)>,
}

impl GeometricSparse {
    pub fn new(dim: usize, value: f64, base: i64) -> Self {
        GeometricSparse {
            dim,
            values: vec![value],
            base,
            all_axes: false,
            box_radius: 100,
            anchor: None,
        }
    }

    /// Values cycled along `k`; replaces the single value given to `new`.
    pub fn values(mut self, values: Vec<f64>) -> Self {
        self.values = values;
        self
    }

    pub fn all_axes(mut self, yes: bool) -> Self {
        self.all_axes = yes;
        self
    }

    pub fn box_radius(mut self, radius: i64) -> Self {
        self.box_radius = radius;
        self
    }

    pub fn anchor(mut self, site: Point, value: f64) -> Self {
        self.anchor = Some((site, value));
        self
    }

    pub fn build(self) -> Result<PotentialSpec, PotentialError> {
        if self.base < 2 {
            return Err(PotentialError::InvalidParameter(format!(
                "base {} must be at least 2",
                self.base
            )));
        }
        if self.values.is_empty() {
            return Err(PotentialError::InvalidParameter("empty value sequence".into()));
        }
        for &v in &self.values {
            if !(v > 0.0) || !v.is_finite() {
                return Err(PotentialError::InvalidParameter(format!(
                    "sparse site value {v} must be positive"
                )));
            }
        }
        let v0 = self.values.iter().copied().fold(0.0, f64::max);
        let mut explicit = BTreeMap::new();
        if let Some((site, value)) = self.anchor {
            if value < v0 {
                return Err(PotentialError::AnchorBelowV0 { anchor: value, v0 });
            }
            explicit.insert(site, value);
        }
        let mut essential = self.values.clone();
        essential.push(0.0);
        PotentialSpec::assemble(
            self.dim,
            explicit,
            TailRule::Geometric {
                base: self.base,
                values: self.values,
                all_axes: self.all_axes,
            },
            essential,
            self.box_radius,
        )
    }
}

impl PotentialSpec {
    fn assemble(
        dim: usize,
        explicit: BTreeMap<Point, f64>,
        tail: TailRule,
        mut essential: Vec<f64>,
        box_radius: i64,
    ) -> Result<Self, PotentialError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(PotentialError::InvalidParameter(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if box_radius < 1 {
            return Err(PotentialError::InvalidParameter("box radius must be positive".into()));
        }
        let mut sup_norm: f64 = 0.0;
        for (site, &value) in &explicit {
            if site.dim() != dim {
                return Err(PotentialError::InvalidParameter(format!(
                    "site {site} has dimension {}, expected {dim}",
                    site.dim()
                )));
            }
            if !(value >= 0.0) || !value.is_finite() {
                return Err(PotentialError::InvalidValue {
                    site: site.to_string(),
                    value,
                });
            }
            sup_norm = sup_norm.max(value);
        }
        sup_norm = sup_norm.max(match &tail {
            TailRule::Finite => 0.0,
            TailRule::Geometric { values, .. } => values.iter().copied().fold(0.0, f64::max),
            TailRule::Decaying { amplitude, .. } => *amplitude,
            TailRule::Constant { value } => *value,
        });
        essential.sort_by(f64::total_cmp);
        essential.dedup();
        Ok(PotentialSpec {
            dim,
            explicit,
            tail,
            declared_essential_values: essential,
            sup_norm,
            box_radius,
        })
    }

    /// Finitely many explicit values; `V = 0` elsewhere.
    pub fn explicit(
        dim: usize,
        values: BTreeMap<Point, f64>,
        box_radius: i64,
    ) -> Result<Self, PotentialError> {
        PotentialSpec::assemble(dim, values, TailRule::Finite, vec![0.0], box_radius)
    }

    /// `V = value · δ_site`.
    pub fn single_site(site: Point, value: f64, box_radius: i64) -> Result<Self, PotentialError> {
        PotentialSpec::explicit(site.dim(), BTreeMap::from([(site, value)]), box_radius)
    }

    pub fn zero(dim: usize, box_radius: i64) -> Result<Self, PotentialError> {
        PotentialSpec::explicit(dim, BTreeMap::new(), box_radius)
    }

    /// `V(x) = amplitude · base^{−|x|}` with `base > 1`.
    pub fn decaying(
        dim: usize,
        amplitude: f64,
        base: f64,
        box_radius: i64,
    ) -> Result<Self, PotentialError> {
        if !(amplitude >= 0.0) || !(base > 1.0) {
            return Err(PotentialError::InvalidParameter(format!(
                "decaying potential needs amplitude >= 0 and base > 1, got {amplitude}, {base}"
            )));
        }
        PotentialSpec::assemble(
            dim,
            BTreeMap::new(),
            TailRule::Decaying { amplitude, base },
            vec![0.0],
            box_radius,
        )
    }

    /// `V ≡ value`; its essential range is `{value}`.
    pub fn constant(dim: usize, value: f64, box_radius: i64) -> Result<Self, PotentialError> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(PotentialError::InvalidParameter(format!(
                "constant value {value} must be nonnegative"
            )));
        }
        PotentialSpec::assemble(
            dim,
            BTreeMap::new(),
            TailRule::Constant { value },
            vec![value],
            box_radius,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail(&self) -> &TailRule {
        &self.tail
    }

    pub fn explicit_values(&self) -> &BTreeMap<Point, f64> {
        &self.explicit
    }

    /// Working box radius used by finite queries.
    pub fn box_radius(&self) -> i64 {
        self.box_radius
    }

    pub fn working_box(&self) -> LatticeBox {
        LatticeBox::centered(self.dim, self.box_radius)
    }

    /// `‖V‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Declared essential range, sorted ascending.
    pub fn declared_essential_values(&self) -> &[f64] {
        &self.declared_essential_values
    }

    /// `v₀ = max` of the declared essential values.
    pub fn v0(&self) -> f64 {
        self.declared_essential_values
            .last()
            .copied()
            .unwrap_or(0.0)
    }

    /// Returns a copy with a different working box.
    pub fn with_box_radius(&self, box_radius: i64) -> Self {
        PotentialSpec {
            box_radius: box_radius.max(1),
            ..self.clone()
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        if let Some(&v) = self.explicit.get(x) {
            return v;
        }
        match &self.tail {
            TailRule::Finite => 0.0,
            TailRule::Constant { value } => *value,
            TailRule::Decaying { amplitude, base } => amplitude * base.powf(-x.norm()),
            TailRule::Geometric {
                base,
                values,
                all_axes,
            } => {
                let c = x.coords();
                let nonzero: Vec<usize> = (0..c.len()).filter(|&a| c[a] != 0).collect();
                if nonzero.len() != 1 || (!all_axes && nonzero[0] != 0) {
                    return 0.0;
                }
                match geometric_exponent(c[nonzero[0]].unsigned_abs(), *base as u64) {
                    Some(k) => values[k % values.len()],
                    None => 0.0,
                }
            }
        }
    }

    /// Values of `V` on every site of `bx`, in box index order.
    pub fn values_on(&self, bx: &LatticeBox) -> Vec<f64> {
        bx.iter().map(|x| self.value(&x)).collect()
    }

    /// Sites of `bx` where `V > 0`, in box index order.
    pub fn support_in(&self, bx: &LatticeBox) -> Vec<(Point, f64)> {
        bx.iter()
            .map(|x| (x, self.value(&x)))
            .filter(|(_, v)| *v > 0.0)
            .collect()
    }

    /// Declared `v₀` and `sup_{|x| ≥ R} V(x)` over the working box for each `R`.
    pub fn v0_of(&self, radii: &[f64]) -> (f64, Vec<f64>) {
        let support = self.support_in(&self.working_box());
        let empirical = radii
            .iter()
            .map(|&r| {
                support
                    .iter()
                    .filter(|(x, _)| x.norm() >= r)
                    .map(|(_, v)| *v)
                    .fold(0.0, f64::max)
            })
            .collect();
        (self.v0(), empirical)
    }

    /// `a_ε(x) = Σ_{y≠x} √(V(x)V(y)) e^{−ε|x−y|}` over `Q(0, box_radius)`.
    pub fn sparseness_profile(
        &self,
        epsilon: f64,
        box_radius: i64,
    ) -> Result<SparsenessProfile, PotentialError> {
        if !(epsilon > 0.0) {
            return Err(PotentialError::InvalidParameter(format!(
                "epsilon {epsilon} must be positive"
            )));
        }
        let support = self.support_in(&LatticeBox::centered(self.dim, box_radius));
        let roots: Vec<f64> = support.iter().map(|(_, v)| v.sqrt()).collect();
        let samples: Vec<(Point, f64)> = support
            .iter()
            .enumerate()
            .map(|(i, (x, _))| {
                let a: f64 = support
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, (y, _))| roots[i] * roots[j] * (-epsilon * (*x - *y).norm()).exp())
                    .sum();
                (*x, a)
            })
            .collect();
        let sup_tail = [8, 4, 2]
            .iter()
            .map(|&div| {
                let r = box_radius as f64 / div as f64;
                let sup = samples
                    .iter()
                    .filter(|(x, _)| x.norm() >= r)
                    .map(|(_, a)| *a)
                    .fold(0.0, f64::max);
                (r, sup)
            })
            .collect();
        Ok(SparsenessProfile {
            epsilon,
            samples,
            sup_tail,
        })
    }

    /// `min |x − y|` over distinct support sites with `|x|, |y| ≥ r`.
    pub fn pair_separation(&self, r: f64) -> Result<f64, PotentialError> {
        let far: Vec<Point> = self
            .support_in(&self.working_box())
            .into_iter()
            .map(|(x, _)| x)
            .filter(|x| x.norm() >= r)
            .collect();
        if far.len() < 2 {
            return Err(PotentialError::InsufficientSupport {
                r,
                found: far.len(),
            });
        }
        let mut best = f64::INFINITY;
        for (i, x) in far.iter().enumerate() {
            for y in &far[i + 1..] {
                best = best.min((*x - *y).norm());
            }
        }
        Ok(best)
    }

    /// A site `c` with `Q(0,L) ∩ Q(c,ℓ) = ∅`, `V(c) > (1−ε)v₀` and
    /// `Σ_{Q(c,ℓ)∖{c}} V < ε`.
    ///
    /// Candidates are scanned by increasing `|c|`; ties prefer the
    /// lexicographically largest site.
    pub fn find_concentration_cube(
        &self,
        outer: i64,
        cube: i64,
        epsilon: f64,
    ) -> Result<Point, PotentialError> {
        let v0 = self.v0();
        if !(v0 > 0.0) {
            return Err(PotentialError::NoEssentialMass);
        }
        if !(epsilon > 0.0 && epsilon < 1.0) || outer < 0 || cube < 0 {
            return Err(PotentialError::InvalidParameter(
                "need L, l >= 0 and epsilon in (0, 1)".into(),
            ));
        }
        let mut candidates = self.support_in(&self.working_box());
        candidates.sort_by(|(a, _), (b, _)| a.norm_sq().cmp(&b.norm_sq()).then(b.cmp(a)));
        candidates
            .into_iter()
            .map(|(c, _)| c)
            .find(|c| self.is_concentration_cube(c, outer, cube, epsilon))
            .ok_or(PotentialError::NotFoundInBox {
                box_radius: self.box_radius,
            })
    }

    /// Checks the three concentration conditions for `c` directly.
    pub fn is_concentration_cube(&self, c: &Point, outer: i64, cube: i64, epsilon: f64) -> bool {
        let outside = LatticeBox::centered(self.dim, outer).is_disjoint(&LatticeBox::new(*c, cube));
        let high = self.value(c) > (1.0 - epsilon) * self.v0();
        let rest: f64 = LatticeBox::new(*c, cube)
            .iter()
            .filter(|x| x != c)
            .map(|x| self.value(&x))
            .sum();
        outside && high && rest < epsilon
    }

    /// Number of sites of `Q(0, radius)` with `|V(x) − target| < tol`.
    pub fn count_near(&self, target: f64, tol: f64, radius: i64) -> usize {
        LatticeBox::centered(self.dim, radius)
            .iter()
            .filter(|x| (self.value(x) - target).abs() < tol)
            .count()
    }
}

/// `Some(k)` when `n = base^k`.
fn geometric_exponent(mut n: u64, base: u64) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let mut k = 0;
    while n.is_multiple_of(base) {
        n /= base;
        k += 1;
    }
    (n == 1).then_some(k)
}
