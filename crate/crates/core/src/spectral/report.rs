use rayon::prelude::*;
use serde::Serialize;

use super::eigen::{dense_eigen, eigensolve_top, inverse_iteration, perron_refine, DENSE_LIMIT};
use super::essential::{essential_spectrum_predictor, EssentialPrediction};
use super::gap::bipartite_detect;
use super::operator::TruncatedOperator;
use super::SpectralError;
use crate::kernel::WalkKernel;
use crate::lattice::LatticeBox;
use crate::potential::PotentialSpec;
use crate::resolvent::{closed_1d_decay_base, decay_rate_estimate, DecayFit};

/// Margin above `max(λ₀, 1)` for an eigenvalue to count as discrete.
pub const DISCRETE_MARGIN: f64 = 1e-4;
/// Cauchy tolerance for discrete eigenvalues across the last two boxes.
pub const STABILITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub radius: i64,
    pub r: f64,
    pub ell: f64,
    /// Largest eigenvalue below `r`.
    pub next_below: f64,
    /// Largest `|μ|` over eigenvalues other than `r`.
    pub second_abs: f64,
    /// Largest `|μ|` after removing both `r` and, when bipartite, `−r`.
    pub second_abs_excluding_mirror: f64,
    pub gap: f64,
    pub abs_gap: f64,
    pub bipartite: bool,
    pub residual: f64,
    pub phi_positive: bool,
    pub phi: Vec<f64>,
    /// Fit of `|φ|` over the far-field shells.
    pub decay: Option<DecayFit>,
    /// Fit from the peak shell outward, including the near-field structure
    /// of `V`.
    pub decay_near: Option<DecayFit>,
    /// `−ln` of the Green decay base at `r`, for lazy walks on ℤ.
    pub decay_predicted: Option<f64>,
    /// Full spectrum ascending when the box was solved densely.
    pub eigenvalues: Vec<f64>,
}

impl SpectralReport {
    /// `second_abs` relevant for contraction after projecting out the
    /// top eigenspace (and its mirror image when bipartite).
    pub fn contraction_ratio(&self) -> f64 {
        self.second_abs_excluding_mirror / self.r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralStudy {
    pub reports: Vec<SpectralReport>,
    pub prediction: Option<EssentialPrediction>,
    /// Eigenvalues above `max(λ₀, 1) + margin` in the largest box.
    pub discrete_candidates: Vec<f64>,
    /// Far-field decay fits of the eigenfunction of each discrete candidate
    /// in the largest box.
    pub discrete_decay: Vec<DiscreteDecay>,
    pub stabilized: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscreteDecay {
    pub value: f64,
    pub residual: f64,
    pub decay: Option<DecayFit>,
}

/// Inverse-iteration sweeps used to resolve eigenfunction tails.
pub const TAIL_SWEEPS: usize = 12;

fn envelope(bx: &LatticeBox, phi: &[f64]) -> Vec<f64> {
    let mut env = vec![0.0f64; bx.radius() as usize + 1];
    for (i, x) in bx.iter().enumerate() {
        let s = x.norm_inf() as usize;
        env[s] = env[s].max(phi[i].abs());
    }
    env
}

/// Envelope over the shells `L/2 ..= 3L/4`, away from both the bulk of the
/// eigenfunction and the Dirichlet boundary.
pub fn far_field_envelope(bx: &LatticeBox, phi: &[f64]) -> Vec<(f64, f64)> {
    let l = bx.radius() as usize;
    let env = envelope(bx, phi);
    (l / 2..=l - l / 4).map(|s| (s as f64, env[s])).collect()
}

/// Envelope `max |φ|` over sup-norm shells, from the peak shell out to
/// three quarters of the box, as `(shell, value)` pairs.
pub fn shell_envelope(bx: &LatticeBox, phi: &[f64]) -> Vec<(f64, f64)> {
    let l = bx.radius() as usize;
    let env = envelope(bx, phi);
    let peak = env
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let stop = l - l / 4;
    (peak..=stop.max(peak)).map(|s| (s as f64, env[s])).collect()
}

fn single_report(
    k: &WalkKernel,
    spec: &PotentialSpec,
    radius: i64,
    bipartite: bool,
) -> Result<SpectralReport, SpectralError> {
    let op = TruncatedOperator::new(k, spec, radius)?;
    let (eigenvalues, top_pair) = if op.len() <= DENSE_LIMIT {
        let (values, vectors) = dense_eigen(&op)?;
        let n = values.len();
        let psi: Vec<f64> = vectors.column(n - 1).iter().copied().collect();
        let top = super::eigen::Eigenpair {
            value: values[n - 1],
            phi: op.to_phi(&psi),
            psi,
            residual: 0.0,
        };
        (values, top)
    } else {
        let top = eigensolve_top(&op, 6)?;
        let mut vals: Vec<f64> = top
            .by_value
            .iter()
            .chain(top.by_abs.iter())
            .map(|p| p.value)
            .collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        (vals, top.by_value[0].clone())
    };
    let n = eigenvalues.len();
    let r = eigenvalues[n - 1];
    let ell = eigenvalues[0];
    let next_below = if n > 1 { eigenvalues[n - 2] } else { f64::NAN };
    let second_abs = eigenvalues[..n - 1]
        .iter()
        .map(|m| m.abs())
        .fold(0.0, f64::max);
    let inner = if bipartite && n > 2 { &eigenvalues[1..n - 1] } else { &eigenvalues[..n - 1] };
    let second_abs_excluding_mirror = inner.iter().map(|m| m.abs()).fold(0.0, f64::max);
    let refined = perron_refine(&op, &top_pair, 400_000)?;
    let phi_positive = refined.phi.iter().all(|&x| x > 0.0);
    let decay = decay_rate_estimate(&far_field_envelope(op.lattice_box(), &refined.phi)).ok();
    let decay_near = decay_rate_estimate(&shell_envelope(op.lattice_box(), &refined.phi)).ok();
    let decay_predicted = k
        .lazy1d_parameter()
        .filter(|_| r > 1.0)
        .map(|q| -closed_1d_decay_base(q, r).ln());
    Ok(SpectralReport {
        radius,
        r,
        ell,
        next_below,
        second_abs,
        second_abs_excluding_mirror,
        gap: r - next_below,
        abs_gap: r - second_abs,
        bipartite,
        residual: refined.residual,
        phi_positive,
        phi: refined.phi,
        decay,
        decay_near,
        decay_predicted,
        eigenvalues,
    })
}

/// Reports for every box radius without the stabilization check.
pub fn spectral_reports(
    k: &WalkKernel,
    spec: &PotentialSpec,
    radii: &[i64],
) -> Result<Vec<SpectralReport>, SpectralError> {
    let bipartite = bipartite_detect(k).is_some();
    radii
        .par_iter()
        .map(|&l| single_report(k, spec, l, bipartite))
        .collect()
}

/// Per-box reports plus the prediction of `Λ_V` and the discrete
/// eigenvalues above it, which must agree across the last two boxes.
pub fn spectral_report(
    k: &WalkKernel,
    spec: &PotentialSpec,
    radii: &[i64],
) -> Result<SpectralStudy, SpectralError> {
    if radii.len() < 3 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectralError::InvalidArgument(
            "need at least three increasing box radii".into(),
        ));
    }
    let reports = spectral_reports(k, spec, radii)?;
    let prediction = if spec.v0() > 0.0 {
        Some(essential_spectrum_predictor(k, spec)?)
    } else {
        None
    };
    let threshold = prediction
        .as_ref()
        .and_then(|p| p.lambda0)
        .unwrap_or(1.0)
        .max(1.0)
        + DISCRETE_MARGIN;
    let above = |rep: &SpectralReport| -> Vec<f64> {
        let mut v: Vec<f64> = rep.eigenvalues.iter().copied().filter(|&m| m > threshold).collect();
        v.reverse();
        v
    };
    let last = above(&reports[reports.len() - 1]);
    let prev = above(&reports[reports.len() - 2]);
    let stabilized = last.len() == prev.len()
        && last.iter().zip(&prev).all(|(a, b)| (a - b).abs() < STABILITY_TOL);
    if !stabilized {
        return Err(SpectralError::NotStabilized {
            detail: format!("{prev:?} -> {last:?}"),
        });
    }
    let largest = *radii.last().unwrap();
    let discrete_decay = discrete_decay_fits(k, spec, largest, &last)?;
    Ok(SpectralStudy {
        reports,
        prediction,
        discrete_candidates: last,
        discrete_decay,
        stabilized,
    })
}

/// Far-field decay fits for the eigenfunctions of the given eigenvalues.
pub fn discrete_decay_fits(
    k: &WalkKernel,
    spec: &PotentialSpec,
    radius: i64,
    values: &[f64],
) -> Result<Vec<DiscreteDecay>, SpectralError> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let op = TruncatedOperator::new(k, spec, radius)?;
    let starts: Vec<(f64, Vec<f64>)> = if op.len() <= DENSE_LIMIT {
        let (vals, vecs) = dense_eigen(&op)?;
        (0..vals.len())
            .map(|j| (vals[j], vecs.column(j).iter().copied().collect()))
            .collect()
    } else {
        eigensolve_top(&op, values.len().min(10))?
            .by_value
            .into_iter()
            .map(|p| (p.value, p.psi))
            .collect()
    };
    Ok(values
        .iter()
        .map(|&value| {
            let (_, psi) = starts
                .iter()
                .min_by(|a, b| (a.0 - value).abs().total_cmp(&(b.0 - value).abs()))
                .expect("eigenpairs available");
            let pair = inverse_iteration(&op, value, psi, TAIL_SWEEPS);
            DiscreteDecay {
                value,
                residual: pair.residual,
                decay: decay_rate_estimate(&far_field_envelope(op.lattice_box(), &pair.phi)).ok(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Point;
    use crate::potential::GeometricSparse;
    use crate::spectral::lambda_pm_1d;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_delta_report() {
        let k = WalkKernel::simple1d();
        let v = PotentialSpec::single_site(Point::new(&[0]), 1.0, 60).unwrap();
        let study = spectral_report(&k, &v, &[30, 45, 60]).unwrap();
        let rep = study.reports.last().unwrap();
        assert_abs_diff_eq!(rep.r, 2.0 / 3f64.sqrt(), epsilon = 1e-8);
        assert!(rep.phi_positive);
        assert!(rep.bipartite);
        assert_abs_diff_eq!(rep.ell, -rep.r, epsilon = 1e-10);
        let fit = rep.decay.unwrap();
        assert_abs_diff_eq!(fit.rate, 3f64.sqrt().ln(), epsilon = 1e-4);
        assert_abs_diff_eq!(rep.decay_predicted.unwrap(), 3f64.sqrt().ln(), epsilon = 1e-10);
        assert_eq!(study.discrete_candidates.len(), 1);
        let d = &study.discrete_decay[0];
        assert_abs_diff_eq!(d.decay.unwrap().rate, 3f64.sqrt().ln(), epsilon = 1e-4);
    }

    #[test]
    fn staircase_near_field_and_clean_far_field() {
        let k = WalkKernel::simple1d();
        let v = GeometricSparse::new(1, 1.0, 3).box_radius(200).build().unwrap();
        let study = spectral_report(&k, &v, &[100, 150, 200]).unwrap();
        assert_eq!(study.discrete_decay.len(), 2);
        for d in &study.discrete_decay {
            let fit = d.decay.unwrap();
            assert!(fit.rate > 0.0 && fit.residual < 0.1, "{d:?}");
            // Free decay at λ beyond the last site inside the box.
            let free = -(d.value - (d.value * d.value - 1.0).sqrt()).ln();
            assert_abs_diff_eq!(fit.rate, free, epsilon = 1e-6);
        }
        let rep = study.reports.last().unwrap();
        assert!(rep.decay_near.unwrap().residual > 0.1);
    }

    #[test]
    fn anchor_spec_gap() {
        let k = WalkKernel::simple1d();
        let v = GeometricSparse::new(1, 1.0, 3)
            .anchor(Point::new(&[0]), 2.0)
            .build()
            .unwrap();
        let study = spectral_report(&k, &v, &[60, 120, 240]).unwrap();
        let (_, lp) = lambda_pm_1d(0.0, 1.0).unwrap();
        let r = study.reports.last().unwrap().r;
        assert!(r > lp + 1e-3);
        assert!(study.reports.iter().all(|rep| rep.phi_positive));
        // Dirichlet monotonicity.
        assert!(study.reports.windows(2).all(|w| w[1].r >= w[0].r - 1e-14));
    }
}
