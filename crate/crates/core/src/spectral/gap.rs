//! Bipartite signs, diagonal dominance, the lower-edge inequality and the
//! projection test for geometric contraction.

use serde::Serialize;

use super::eigen::{dense_eigen, perron_refine, Eigenpair};
use super::operator::TruncatedOperator;
use super::SpectralError;
use crate::kernel::{minimize_trig, WalkKernel};
use crate::lattice::{LatticeBox, Point};
use crate::potential::PotentialSpec;
use crate::resolvent::decay_rate_estimate;

/// `J(x) = (−1)^{Σ_{α∈I} x_α}` for the axis set `I` (bit `α` ↔ axis `α`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BipartiteSign {
    pub axes: u32,
}

impl BipartiteSign {
    pub fn sign(&self, x: &Point) -> f64 {
        if x.masked_sum(self.axes).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn on_box(&self, bx: &LatticeBox) -> Vec<f64> {
        bx.iter().map(|x| self.sign(&x)).collect()
    }
}

fn even_subset(axes: u32, x: &Point) -> bool {
    x.masked_sum(axes).rem_euclid(2) == 0
}

/// First axis set `I` (in bitmask order) for which `p` vanishes on
/// `A = {Σ_{α∈I} x_α even}`, confirmed on a sample box.
pub fn bipartite_detect(k: &WalkKernel) -> Option<BipartiteSign> {
    let d = k.dim();
    (1u32..(1 << d)).find_map(|axes| {
        if k.offsets().iter().any(|(x, _)| even_subset(axes, x)) {
            return None;
        }
        let sign = BipartiteSign { axes };
        let bx = LatticeBox::centered(d, 2 * k.range() + 1);
        let pm = k.transition_matrix(&bx);
        let js = sign.on_box(&bx);
        let ok = (0..bx.len()).all(|i| pm.row(i).all(|(j, p)| p == 0.0 || js[i] * js[j] < 0.0));
        ok.then_some(sign)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceCheck {
    pub holds: bool,
    /// `p(0) − Σ_{A∖{0}} p` for each axis set.
    pub margins: Vec<(u32, f64)>,
    pub best_margin: f64,
}

pub fn diag_dominance_check(k: &WalkKernel) -> DominanceCheck {
    let p0 = k.p0();
    let margins: Vec<(u32, f64)> = (1u32..(1 << k.dim()))
        .map(|axes| {
            let off: f64 = k
                .offsets()
                .iter()
                .filter(|(x, _)| !x.is_origin() && even_subset(axes, x))
                .map(|(_, p)| p)
                .sum();
            (axes, p0 - off)
        })
        .collect();
    let best_margin = margins.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    DominanceCheck {
        holds: best_margin > 0.0,
        margins,
        best_margin,
    }
}

/// `min_θ Σ_{x∈A} p(x) cos(θ·x)`, the bottom of `1_A P 1_A`.
pub fn restricted_bottom(k: &WalkKernel, axes: u32) -> f64 {
    let part: Vec<(Point, f64)> = k
        .offsets()
        .iter()
        .filter(|(x, _)| even_subset(axes, x))
        .copied()
        .collect();
    if part.is_empty() {
        return 0.0;
    }
    let density = if k.dim() <= 2 { 256 } else { 64 };
    minimize_trig(k.dim(), density, |t| part.iter().map(|(x, p)| p * x.dot(t).cos()).sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeCheck {
    pub r: f64,
    pub ell: f64,
    /// `(axes, ℓ(1_A P 1_A), slack)` for each axis set.
    pub per_subset: Vec<(u32, f64, f64)>,
    pub min_slack: f64,
}

/// `slack = ℓ(P_V) − (−r(P_V) + 2ℓ(1_A P 1_A))` on `Q(0, L)`.
pub fn edge_inequality_check(
    k: &WalkKernel,
    spec: &PotentialSpec,
    radius: i64,
) -> Result<EdgeCheck, SpectralError> {
    let op = TruncatedOperator::new(k, spec, radius)?;
    let (values, _) = dense_eigen(&op)?;
    let r = *values.last().unwrap();
    let ell = values[0];
    let per_subset: Vec<(u32, f64, f64)> = (1u32..(1 << k.dim()))
        .map(|axes| {
            let bottom = restricted_bottom(k, axes);
            (axes, bottom, ell - (-r + 2.0 * bottom))
        })
        .collect();
    let min_slack = per_subset.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    Ok(EdgeCheck {
        r,
        ell,
        per_subset,
        min_slack,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionFit {
    pub two_term: bool,
    /// `‖r^{−n} P_V^n (f − Π_V f)‖_V` for `n = 0..=n_max`.
    pub norms: Vec<f64>,
    /// Fitted contraction per step; absent when `f` lies in the range of `Π_V`.
    pub epsilon: Option<f64>,
    /// Ratio of the next eigenvalue modulus to `r`.
    pub predicted: f64,
    pub r: f64,
}

impl ProjectionFit {
    pub fn relative_error(&self) -> Option<f64> {
        self.epsilon.map(|e| (e - self.predicted).abs() / self.predicted)
    }
}

/// Test vectors for [`gap_projection_test`].
#[derive(Clone, Debug)]
pub enum TestVector {
    /// `δ_x`.
    Delta(Point),
    /// The Perron vector itself.
    Perron,
    Values(Vec<f64>),
}

/// Iterates `r^{−n} P_V^n` on `f − Π_V f` (re-projecting after every step to
/// keep rounding errors from re-entering the top eigenspace) and fits the
/// geometric rate over the second half of the iterations that stay above
/// round-off.
pub fn gap_projection_test(
    k: &WalkKernel,
    spec: &PotentialSpec,
    radius: i64,
    f: &TestVector,
    n_max: usize,
) -> Result<ProjectionFit, SpectralError> {
    let op = TruncatedOperator::new(k, spec, radius)?;
    let (values, vectors) = dense_eigen(&op)?;
    let n = values.len();
    let r = values[n - 1];
    let ell = values[0];
    let sign = bipartite_detect(k);
    if sign.is_none() && !(r + ell > 1e-9) {
        return Err(SpectralError::GapNotCertified { r, ell });
    }
    let psi: Vec<f64> = vectors.column(n - 1).iter().copied().collect();
    let start = Eigenpair {
        value: r,
        phi: op.to_phi(&psi),
        psi,
        residual: 0.0,
    };
    let phi = perron_refine(&op, &start, 400_000)?.phi;
    let mut basis = vec![phi.clone()];
    if let Some(j) = sign {
        let js = j.on_box(op.lattice_box());
        basis.push(phi.iter().zip(&js).map(|(a, b)| a * b).collect());
    }
    let inner = if sign.is_some() && n > 2 { &values[1..n - 1] } else { &values[..n - 1] };
    let predicted = inner.iter().map(|m| m.abs()).fold(0.0, f64::max) / r;
    let project_out = |g: &mut Vec<f64>| {
        for b in &basis {
            let c = op.inner_v(g, b);
            g.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    };
    let mut g = match f {
        TestVector::Delta(x) => {
            let mut v = vec![0.0; n];
            let idx = op.lattice_box().index_of(x).ok_or_else(|| {
                SpectralError::InvalidArgument(format!("test site {x} outside the box"))
            })?;
            v[idx] = 1.0;
            v
        }
        TestVector::Perron => phi.clone(),
        TestVector::Values(v) if v.len() == n => v.clone(),
        TestVector::Values(v) => {
            return Err(SpectralError::InvalidArgument(format!(
                "test vector has {} entries, box has {n}",
                v.len()
            )))
        }
    };
    let scale = op.norm_v(&g);
    project_out(&mut g);
    let mut norms = vec![op.norm_v(&g)];
    for _ in 0..n_max {
        let mut next: Vec<f64> = op.apply(&g).into_iter().map(|x| x / r).collect();
        project_out(&mut next);
        norms.push(op.norm_v(&next));
        g = next;
    }
    let floor = 1e-12 * scale;
    let epsilon = if norms[0] <= floor {
        None
    } else {
        // Second half of the stretch that stays above the floor.
        let usable = norms.iter().take_while(|v| **v > floor).count();
        let pts: Vec<(f64, f64)> = norms[..usable]
            .iter()
            .enumerate()
            .skip(usable / 2)
            .map(|(i, v)| (i as f64, *v))
            .collect();
        decay_rate_estimate(&pts).ok().map(|fit| (-fit.rate).exp())
    };
    Ok(ProjectionFit {
        two_term: basis.len() == 2,
        norms,
        epsilon,
        predicted,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::GeometricSparse;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bipartite_signs() {
        let j = bipartite_detect(&WalkKernel::simple1d()).unwrap();
        assert_eq!(j.sign(&Point::new(&[3])), -1.0);
        assert_eq!(j.sign(&Point::new(&[-4])), 1.0);
        assert!(bipartite_detect(&WalkKernel::lazy1d(0.2).unwrap()).is_none());
        let j2 = bipartite_detect(&WalkKernel::simple2d()).unwrap();
        assert_eq!(j2.axes, 0b11);
    }

    #[test]
    fn dominance_margins() {
        let lazy = diag_dominance_check(&WalkKernel::lazy1d(0.3).unwrap());
        assert!(lazy.holds);
        assert_abs_diff_eq!(lazy.best_margin, 0.3, epsilon = 1e-15);
        assert!(!diag_dominance_check(&WalkKernel::simple1d()).holds);
        let k = WalkKernel::from_entries(
            1,
            &[(vec![0], 0.1), (vec![1], 0.25), (vec![-1], 0.25), (vec![2], 0.2), (vec![-2], 0.2)],
        )
        .unwrap();
        assert_abs_diff_eq!(diag_dominance_check(&k).best_margin, 0.1 - 0.4, epsilon = 1e-15);
    }

    #[test]
    fn restricted_bottoms() {
        assert_eq!(restricted_bottom(&WalkKernel::simple1d(), 1), 0.0);
        assert_abs_diff_eq!(restricted_bottom(&WalkKernel::lazy1d(0.3).unwrap(), 1), 0.3, epsilon = 1e-15);
        // 0.1 + 0.4 cos 2θ has minimum −0.3.
        let k = WalkKernel::from_entries(
            1,
            &[(vec![0], 0.1), (vec![1], 0.25), (vec![-1], 0.25), (vec![2], 0.2), (vec![-2], 0.2)],
        )
        .unwrap();
        assert_abs_diff_eq!(restricted_bottom(&k, 1), 0.1 - 0.4, epsilon = 1e-12);
    }

    #[test]
    fn edge_inequality_on_free_and_delta() {
        let free = edge_inequality_check(&WalkKernel::lazy1d(0.3).unwrap(), &PotentialSpec::zero(1, 40).unwrap(), 40).unwrap();
        assert!(free.min_slack >= -1e-8);
        let k = WalkKernel::simple1d();
        let v = PotentialSpec::single_site(Point::new(&[0]), 1.0, 40).unwrap();
        let e = edge_inequality_check(&k, &v, 40).unwrap();
        assert_abs_diff_eq!(e.min_slack, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn projection_absorbs_perron_vector() {
        let k = WalkKernel::simple1d();
        let v = GeometricSparse::new(1, 1.0, 3).anchor(Point::new(&[0]), 2.0).build().unwrap();
        let fit = gap_projection_test(&k, &v, 60, &TestVector::Perron, 40).unwrap();
        assert!(fit.two_term);
        assert!(fit.epsilon.is_none());
        assert!(fit.norms.iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn one_term_when_spectrum_is_one_sided() {
        // Neither bipartite nor diagonally dominant; −r < ℓ is checked directly.
        let k = WalkKernel::from_entries(
            1,
            &[(vec![0], 0.1), (vec![1], 0.25), (vec![-1], 0.25), (vec![2], 0.2), (vec![-2], 0.2)],
        )
        .unwrap();
        let v = PotentialSpec::single_site(Point::new(&[0]), 1.0, 20).unwrap();
        let fit = gap_projection_test(&k, &v, 20, &TestVector::Delta(Point::new(&[0])), 40).unwrap();
        assert!(!fit.two_term);
    }
}
