//! The `paper-repro` acceptance suite: fourteen numbered checks, each
//! producing a pass/fail verdict with its measured values.

use std::time::Instant;

use serde::Serialize;

use crate::birman_schwinger::{
    assemble_bs, bs_top_crossing, direct_resolvent, neumann_invertibility, off_diag_tail_norm,
    resolvent_via_bs,
};
use crate::config::ConfigError;
use crate::gibbs::{
    convergence_rate, doob_kernel, fk_monte_carlo, fk_semigroup, partition_growth,
};
use crate::kernel::WalkKernel;
use crate::lattice::{LatticeBox, Point};
use crate::potential::{GeometricSparse, PotentialSpec};
use crate::resolvent::{
    closed_1d_decay_base, g_lambda_closed_1d, g_lambda_quadrature, g_lambda_series, green_kernel,
    DEFAULT_QUAD_POINTS,
};
use crate::runner::{num, Table};
use crate::spectral::eigen::{full_spectrum, BandedSym};
use crate::spectral::gap::{restricted_bottom, TestVector};
use crate::spectral::report::{spectral_reports, discrete_decay_fits};
use crate::spectral::{
    bipartite_detect, diag_dominance_check, edge_inequality_check, gap_projection_test,
    lambda_pm_1d, perron_pair, spectral_report, TruncatedOperator,
};

pub const SUITE_NAME: &str = "paper-repro";

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub measured: String,
    pub tolerance: String,
    /// Wall-clock limit in seconds, if the criterion has one.
    pub runtime_limit: Option<f64>,
    /// Wall-clock time; not written to files so outputs stay reproducible.
    #[serde(skip)]
    pub runtime: f64,
}

impl CriterionResult {
    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<34} {} [{:.2}s]",
            self.status(),
            self.id,
            self.title,
            self.measured,
            self.runtime
        )
    }
}

struct Verdict {
    passed: bool,
    measured: String,
}

type Outcome = Result<Verdict, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Criterion {
    id: u8,
    title: &'static str,
    tolerance: &'static str,
    runtime_limit: Option<f64>,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 14] = [
    Criterion { id: 1, title: "green oracle agreement", tolerance: "1e-8", runtime_limit: Some(5.0), run: green_oracles },
    Criterion { id: 2, title: "green special values", tolerance: "1e-9", runtime_limit: None, run: green_special_values },
    Criterion { id: 3, title: "single-site exactness", tolerance: "1e-6 value, 1e-4 decay", runtime_limit: Some(30.0), run: single_site_exactness },
    Criterion { id: 4, title: "birman-schwinger correspondence", tolerance: "1e-6", runtime_limit: None, run: bs_correspondence },
    Criterion { id: 5, title: "essential spectrum accumulation", tolerance: "factor 2", runtime_limit: Some(120.0), run: essential_accumulation },
    Criterion { id: 6, title: "spectral gap", tolerance: "1e-6 Cauchy, 1e-3 margin", runtime_limit: None, run: spectral_gap },
    Criterion { id: 7, title: "absolute gap dichotomy", tolerance: "1e-10 symmetry, 10% rate", runtime_limit: None, run: absolute_gap },
    Criterion { id: 8, title: "edge inequality", tolerance: "slack >= -1e-8", runtime_limit: None, run: edge_inequality },
    Criterion { id: 9, title: "compactness witness", tolerance: "< 1e-3 sparse, > 0.05 dense", runtime_limit: None, run: compactness_witness },
    Criterion { id: 10, title: "decay certificate", tolerance: "contraction < 1, fit residual < 0.1", runtime_limit: None, run: decay_certificate },
    Criterion { id: 11, title: "gibbs convergence", tolerance: "15% of predicted rate", runtime_limit: Some(60.0), run: gibbs_convergence },
    Criterion { id: 12, title: "partition growth", tolerance: "1e-3", runtime_limit: None, run: partition_growth_check },
    Criterion { id: 13, title: "monte carlo consistency", tolerance: "3 stderr, sqrt(3) +- 20%", runtime_limit: None, run: monte_carlo },
    Criterion { id: 14, title: "weyl sequence scaling", tolerance: "slope in [-0.65, -0.35]", runtime_limit: None, run: weyl_scaling },
];

pub fn criterion_ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.id).collect()
}

/// Runs a single criterion by number.
pub fn run_criterion(id: u8) -> Option<CriterionResult> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let outcome = (c.run)();
    let runtime = start.elapsed().as_secs_f64();
    let (mut passed, measured) = match outcome {
        Ok(v) => (v.passed, v.measured),
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = c.runtime_limit {
        passed &= runtime < limit;
    }
    Some(CriterionResult {
        id: c.id,
        title: c.title,
        passed,
        measured,
        tolerance: c.tolerance.to_owned(),
        runtime_limit: c.runtime_limit,
        runtime,
    })
}

/// Runs every criterion in order, spreading them over `workers` threads.
pub fn run_suite(name: &str, workers: usize) -> Result<Vec<CriterionResult>, ConfigError> {
    if name != SUITE_NAME {
        return Err(ConfigError::Invalid(format!(
            "unknown suite `{name}`; available: {SUITE_NAME}"
        )));
    }
    let ids = criterion_ids();
    if workers <= 1 {
        return Ok(ids.into_iter().filter_map(run_criterion).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    use rayon::prelude::*;
    Ok(pool.install(|| ids.into_par_iter().filter_map(run_criterion).collect()))
}

pub fn suite_table(results: &[CriterionResult]) -> Table {
    let mut t = Table::new("suite", &["id", "title", "status", "measured", "tolerance"]);
    for r in results {
        t.push(vec![
            r.id.to_string(),
            r.title.to_owned(),
            r.status().to_owned(),
            r.measured.clone(),
            r.tolerance.clone(),
        ]);
    }
    t
}

fn p1(x: i64) -> Point {
    Point::new(&[x])
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

/// Geometric sparse potential on ℤ with `V(0) = 2` on top.
pub fn anchor_spec(box_radius: i64) -> PotentialSpec {
    GeometricSparse::new(1, 1.0, 3)
        .anchor(p1(0), 2.0)
        .box_radius(box_radius)
        .build()
        .expect("valid anchor spec")
}

fn geometric_spec(box_radius: i64) -> PotentialSpec {
    GeometricSparse::new(1, 1.0, 3)
        .box_radius(box_radius)
        .build()
        .expect("valid geometric spec")
}

fn green_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    for q in [0.0, 0.25, 0.5] {
        let k = WalkKernel::lazy1d(q).map_err(fail)?;
        for lambda in [-10.0, -2.0, -1.25, 1.25, 2.0, 10.0] {
            let closed = g_lambda_closed_1d(q, lambda, 0).map_err(fail)?.value;
            let quad = g_lambda_quadrature(&k, lambda, DEFAULT_QUAD_POINTS).map_err(fail)?.value;
            let series = g_lambda_series(&k, lambda, 1e-14).map_err(fail)?.value;
            worst = worst.max((closed - quad).abs()).max((closed - series).abs());
            for x in [1, 2, 5] {
                let c = g_lambda_closed_1d(q, lambda, x).map_err(fail)?.value;
                let g = lambda * green_kernel(&k, lambda, &p1(x), DEFAULT_QUAD_POINTS).map_err(fail)?.value;
                worst = worst.max((c - g).abs());
            }
        }
    }
    Ok(Verdict {
        passed: worst <= 1e-8,
        measured: format!("max discrepancy {}", sci(worst)),
    })
}

fn green_special_values() -> Outcome {
    let q = 0.25;
    let at_half = g_lambda_closed_1d(q, (2.0 * q - 1.0) / (2.0 * q), 0).map_err(fail)?.value;
    let at_q = g_lambda_closed_1d(q, (2.0 * q - 1.0) / q, 0).map_err(fail)?.value;
    let expected_q = (1.0f64 - 2.0 * q).sqrt() / (1.0 - q);
    // λ = 0 is the lower spectral edge when q = 1/2; take the limit from below.
    let at_zero = g_lambda_closed_1d(0.5, -1e-24, 0).map_err(fail)?.value;
    let errs = [(at_half - 1.0).abs(), (at_q - expected_q).abs(), at_zero.abs()];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    Ok(Verdict {
        passed: worst <= 1e-9,
        measured: format!(
            "g(-1)={} g(-2)={} (want {}) g(0-)={}",
            num(at_half),
            num(at_q),
            num(expected_q),
            sci(at_zero)
        ),
    })
}

fn single_site_exactness() -> Outcome {
    let mut worst_value: f64 = 0.0;
    let mut worst_decay: f64 = 0.0;
    for q in [0.0, 0.25] {
        let k = WalkKernel::lazy1d(q).map_err(fail)?;
        for v in [0.5, 1.0, 2.0] {
            let spec = PotentialSpec::single_site(p1(0), v, 60).map_err(fail)?;
            let rep = &spectral_reports(&k, &spec, &[60]).map_err(fail)?[0];
            let (_, lp) = lambda_pm_1d(q, v).map_err(fail)?;
            worst_value = worst_value.max((rep.r - lp).abs());
            let predicted = -closed_1d_decay_base(q, lp).ln();
            let fitted = rep.decay.ok_or("no decay fit")?.rate;
            worst_decay = worst_decay.max((fitted - predicted).abs());
        }
    }
    Ok(Verdict {
        passed: worst_value <= 1e-6 && worst_decay <= 1e-4,
        measured: format!("eigenvalue err {} decay err {}", sci(worst_value), sci(worst_decay)),
    })
}

fn bs_correspondence() -> Outcome {
    let mut worst_cross: f64 = 0.0;
    let mut cases: Vec<(WalkKernel, PotentialSpec)> = Vec::new();
    for q in [0.0, 0.25] {
        for v in [0.5, 1.0, 2.0] {
            cases.push((
                WalkKernel::lazy1d(q).map_err(fail)?,
                PotentialSpec::single_site(p1(0), v, 60).map_err(fail)?,
            ));
        }
    }
    cases.push((WalkKernel::simple1d(), anchor_spec(60)));
    for (k, spec) in &cases {
        let crossing = bs_top_crossing(k, spec, &spec.working_box()).map_err(fail)?;
        let op = TruncatedOperator::new(k, spec, 60).map_err(fail)?;
        let r = perron_pair(&op).map_err(fail)?.value;
        worst_cross = worst_cross.max((crossing - r).abs());
    }
    let mut worst_resolvent: f64 = 0.0;
    let resolvent_cases = [
        (WalkKernel::simple1d(), PotentialSpec::single_site(p1(0), 1.0, 40).map_err(fail)?, 2.0),
        (WalkKernel::simple1d(), anchor_spec(40), 2.5),
        (WalkKernel::lazy1d(0.25).map_err(fail)?, PotentialSpec::single_site(p1(0), 2.0, 40).map_err(fail)?, -1.5),
    ];
    for (k, spec, lambda) in &resolvent_cases {
        let bx = LatticeBox::centered(1, 40);
        let via = resolvent_via_bs(k, spec, *lambda, &bx).map_err(fail)?;
        let direct = direct_resolvent(k, spec, *lambda, 40).map_err(fail)?;
        for (i, x) in bx.iter().enumerate() {
            for (j, y) in bx.iter().enumerate() {
                if x.norm_inf() <= 20 && y.norm_inf() <= 20 {
                    worst_resolvent = worst_resolvent.max((via.matrix[(i, j)] - direct[(i, j)]).abs());
                }
            }
        }
    }
    Ok(Verdict {
        passed: worst_cross <= 1e-6 && worst_resolvent <= 1e-6,
        measured: format!("crossing err {} resolvent err {}", sci(worst_cross), sci(worst_resolvent)),
    })
}

fn essential_accumulation() -> Outcome {
    let k = WalkKernel::simple1d();
    let spec = GeometricSparse::new(1, 1.0, 16).box_radius(1024).build().map_err(fail)?;
    let (lm, lp) = lambda_pm_1d(0.0, 1.0).map_err(fail)?;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for l in [256, 512, 1024] {
        let op = TruncatedOperator::new(&k, &spec, l).map_err(fail)?;
        let banded = BandedSym::new(op.sym());
        plus.push(banded.distance_to_spectrum(lp));
        minus.push(banded.distance_to_spectrum(lm));
    }
    let shrinks = |d: &[f64]| d[2] <= 0.5 * d[0];
    Ok(Verdict {
        passed: shrinks(&plus) && shrinks(&minus),
        measured: format!(
            "to l+: {} -> {}, to l-: {} -> {}",
            sci(plus[0]),
            sci(plus[2]),
            sci(minus[0]),
            sci(minus[2])
        ),
    })
}

fn spectral_gap() -> Outcome {
    let k = WalkKernel::simple1d();
    let reports = spectral_reports(&k, &anchor_spec(240), &[60, 120, 240]).map_err(fail)?;
    let (_, lp) = lambda_pm_1d(0.0, 1.0).map_err(fail)?;
    let n = reports.len();
    let cauchy = (reports[n - 1].r - reports[n - 2].r).abs();
    let margin = reports[n - 1].r - lp;
    let positive = reports.iter().all(|r| r.phi_positive);
    Ok(Verdict {
        passed: cauchy < 1e-6 && margin > 1e-3 && positive,
        measured: format!(
            "r={} cauchy {} margin {} positive {positive}",
            num(reports[n - 1].r),
            sci(cauchy),
            sci(margin)
        ),
    })
}

fn absolute_gap() -> Outcome {
    let spec = anchor_spec(60);
    // Bipartite case.
    let k0 = WalkKernel::simple1d();
    let sign = bipartite_detect(&k0).is_some();
    let op = TruncatedOperator::new(&k0, &spec, 60).map_err(fail)?;
    let spectrum = full_spectrum(&op).map_err(fail)?;
    let n = spectrum.len();
    let asym = (0..n).map(|i| (spectrum[i] + spectrum[n - 1 - i]).abs()).fold(0.0, f64::max);
    let fit0 = gap_projection_test(&k0, &spec, 60, &TestVector::Delta(p1(1)), 200).map_err(fail)?;
    let eps0 = fit0.epsilon.ok_or("no contraction fitted for q = 0")?;
    let rel0 = fit0.relative_error().unwrap_or(f64::INFINITY);
    let ok0 = sign && asym < 1e-10 && fit0.two_term && eps0 < 1.0 && rel0 < 0.1;
    // Diagonally dominant case.
    let k3 = WalkKernel::lazy1d(0.3).map_err(fail)?;
    let dom = diag_dominance_check(&k3);
    let op3 = TruncatedOperator::new(&k3, &spec, 60).map_err(fail)?;
    let s3 = full_spectrum(&op3).map_err(fail)?;
    let (ell, r) = (s3[0], s3[s3.len() - 1]);
    let fit3 = gap_projection_test(&k3, &spec, 60, &TestVector::Delta(p1(1)), 200).map_err(fail)?;
    let eps3 = fit3.epsilon.ok_or("no contraction fitted for q = 0.3")?;
    let rel3 = fit3.relative_error().unwrap_or(f64::INFINITY);
    let ok3 = dom.holds
        && (dom.best_margin - 0.3).abs() < 1e-12
        && (restricted_bottom(&k3, 1) - 0.3).abs() < 1e-12
        && -r < ell
        && !fit3.two_term
        && eps3 < 1.0
        && rel3 < 0.1;
    Ok(Verdict {
        passed: ok0 && ok3,
        measured: format!(
            "q=0: asym {} eps {} rel {}; q=0.3: margin {} r+l {} eps {} rel {}",
            sci(asym),
            num(eps0),
            sci(rel0),
            num(dom.best_margin),
            sci(r + ell),
            num(eps3),
            sci(rel3)
        ),
    })
}

fn edge_battery() -> Result<Vec<(WalkKernel, PotentialSpec, i64)>, String> {
    let range2 = WalkKernel::from_entries(
        1,
        &[(vec![0], 0.1), (vec![1], 0.25), (vec![-1], 0.25), (vec![2], 0.2), (vec![-2], 0.2)],
    )
    .map_err(fail)?;
    let kernels1 = vec![
        WalkKernel::simple1d(),
        WalkKernel::lazy1d(0.25).map_err(fail)?,
        WalkKernel::lazy1d(0.3).map_err(fail)?,
        WalkKernel::lazy1d(0.6).map_err(fail)?,
        range2,
    ];
    let l1 = 40;
    let specs1 = vec![
        PotentialSpec::zero(1, l1).map_err(fail)?,
        PotentialSpec::single_site(p1(0), 1.0, l1).map_err(fail)?,
        PotentialSpec::explicit(1, [(p1(-3), 0.5), (p1(4), 2.0)].into(), l1).map_err(fail)?,
        geometric_spec(l1),
        anchor_spec(l1),
        PotentialSpec::decaying(1, 1.0, 2.0, l1).map_err(fail)?,
    ];
    let mut out = Vec::new();
    for k in &kernels1 {
        for s in &specs1 {
            out.push((k.clone(), s.clone(), l1));
        }
    }
    let l2 = 10;
    let k2 = WalkKernel::simple2d();
    let specs2 = vec![
        PotentialSpec::zero(2, l2).map_err(fail)?,
        PotentialSpec::single_site(Point::new(&[0, 0]), 1.0, l2).map_err(fail)?,
        GeometricSparse::new(2, 1.0, 3).all_axes(true).box_radius(l2).build().map_err(fail)?,
        PotentialSpec::decaying(2, 1.0, 2.0, l2).map_err(fail)?,
    ];
    for s in specs2 {
        out.push((k2.clone(), s, l2));
    }
    Ok(out)
}

fn edge_inequality() -> Outcome {
    let battery = edge_battery()?;
    let mut worst = f64::INFINITY;
    for (k, spec, l) in &battery {
        let check = edge_inequality_check(k, spec, *l).map_err(fail)?;
        worst = worst.min(check.min_slack);
    }
    Ok(Verdict {
        passed: worst >= -1e-8,
        measured: format!("min slack {} over {} cases", sci(worst), battery.len()),
    })
}

fn compactness_witness() -> Outcome {
    let k = WalkKernel::simple1d();
    let ns = [8.0, 32.0, 128.0];
    let tails = |spec: &PotentialSpec| -> Result<Vec<f64>, String> {
        let asm = assemble_bs(&k, spec, 2.0, &spec.working_box()).map_err(fail)?;
        Ok(ns.iter().map(|&n| off_diag_tail_norm(&asm, n)).collect())
    };
    let mut sparse_ok = true;
    let mut parts = Vec::new();
    for (label, spec) in [("geometric", geometric_spec(300)), ("anchor", anchor_spec(300))] {
        let t = tails(&spec)?;
        sparse_ok &= t.windows(2).all(|w| w[1] < w[0]) && t[2] < 1e-3;
        parts.push(format!("{label} {}", t.iter().map(|x| sci(*x)).collect::<Vec<_>>().join("/")));
    }
    let dense = tails(&PotentialSpec::constant(1, 1.0, 300).map_err(fail)?)?;
    let dense_ok = dense.iter().all(|&x| x > 0.05);
    parts.push(format!("dense {}", dense.iter().map(|x| sci(*x)).collect::<Vec<_>>().join("/")));
    Ok(Verdict {
        passed: sparse_ok && dense_ok,
        measured: parts.join("; "),
    })
}

fn decay_certificate() -> Outcome {
    let k = WalkKernel::simple1d();
    let geo = geometric_spec(200);
    let cert = neumann_invertibility(&k, &geo, &[], 2.0, 0.5, &geo.working_box()).map_err(fail)?;
    let mut fits_ok = true;
    let mut worst_residual: f64 = 0.0;
    let mut count = 0;
    for spec in [geo.clone(), anchor_spec(200)] {
        let study = spectral_report(&k, &spec, &[100, 150, 200]).map_err(fail)?;
        let fits = if study.discrete_decay.is_empty() {
            discrete_decay_fits(&k, &spec, 200, &[study.reports.last().unwrap().r]).map_err(fail)?
        } else {
            study.discrete_decay
        };
        for f in &fits {
            count += 1;
            match f.decay {
                Some(d) => {
                    fits_ok &= d.rate > 0.0 && d.residual < 0.1;
                    worst_residual = worst_residual.max(d.residual);
                }
                None => fits_ok = false,
            }
        }
    }
    Ok(Verdict {
        passed: cert.valid && fits_ok,
        measured: format!(
            "eps0 {} contraction {}; {count} eigenfunctions, worst fit residual {}",
            num(cert.epsilon0),
            num(cert.contraction),
            sci(worst_residual)
        ),
    })
}

fn gibbs_convergence() -> Outcome {
    // With q = 0 and an even potential, μ_n(S_1 = 1) = 1/2 for every n, so
    // the lazy walk is used to make the first-step law non-trivial.
    let k = WalkKernel::lazy1d(0.3).map_err(fail)?;
    let spec = anchor_spec(80);
    let op = TruncatedOperator::new(&k, &spec, 80).map_err(fail)?;
    let pair = perron_pair(&op).map_err(fail)?;
    let chain = doob_kernel(&op, &pair).map_err(fail)?;
    let ns: Vec<usize> = (10..=60).collect();
    let target = p1(1);
    let fit = convergence_rate(&op, &chain, 1, &ns, move |p: &[Point]| {
        if p[0] == target {
            1.0
        } else {
            0.0
        }
    })
    .map_err(fail)?;
    let predicted = spectral_reports(&k, &spec, &[80]).map_err(fail)?[0].contraction_ratio();
    let rel = (fit.epsilon - predicted).abs() / predicted;
    Ok(Verdict {
        passed: fit.epsilon < 1.0 && rel <= 0.15,
        measured: format!(
            "fitted eps {} predicted {} rel {}",
            num(fit.epsilon),
            num(predicted),
            sci(rel)
        ),
    })
}

fn partition_growth_check() -> Outcome {
    let k = WalkKernel::simple1d();
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, spec) in [
        ("single", PotentialSpec::single_site(p1(0), 1.0, 250).map_err(fail)?),
        ("anchor", anchor_spec(250)),
    ] {
        let op = TruncatedOperator::new(&k, &spec, 250).map_err(fail)?;
        let r = perron_pair(&op).map_err(fail)?.value;
        let seq = partition_growth(&op, 200);
        let last = seq[199];
        let err = (last.root - r).abs();
        ok &= err <= 1e-3;
        parts.push(format!(
            "{label}: root {} r {} err {} two-step ratio err {}",
            num(last.root),
            num(r),
            sci(err),
            sci((last.two_step_ratio - r).abs())
        ));
    }
    Ok(Verdict {
        passed: ok,
        measured: parts.join("; "),
    })
}

fn monte_carlo() -> Outcome {
    let k = WalkKernel::simple1d();
    let spec = PotentialSpec::single_site(p1(0), 1.0, 30).map_err(fail)?;
    let op = TruncatedOperator::new(&k, &spec, 30).map_err(fail)?;
    let exact = fk_semigroup(&op, &vec![1.0; op.len()], 20)[op.origin_index()];
    let base = fk_monte_carlo(&k, &spec, |_| 1.0, &p1(0), 20, 100_000, 2024).map_err(fail)?;
    let triple = fk_monte_carlo(&k, &spec, |_| 1.0, &p1(0), 20, 300_000, 2024).map_err(fail)?;
    let z = (base.estimate - exact).abs() / base.stderr;
    let ratio = base.stderr / triple.stderr;
    let s3 = 3f64.sqrt();
    Ok(Verdict {
        passed: z <= 3.0 && (0.8 * s3..=1.2 * s3).contains(&ratio),
        measured: format!(
            "exact {} estimate {} ({z:.3} stderr) stderr ratio {ratio:.4}",
            num(exact),
            num(base.estimate),
        ),
    })
}

fn weyl_scaling() -> Outcome {
    let ns = [10usize, 14, 20, 28, 40, 57, 80, 113, 160, 200];
    let mut slopes = Vec::new();
    for (k, theta) in [
        (WalkKernel::simple1d(), vec![1.0]),
        (WalkKernel::simple2d(), vec![1.0, 0.5]),
    ] {
        let lambda = k.char_function(&theta);
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                k.weyl_sequence_residual(&theta, lambda, n)
                    .map(|r| ((n as f64).ln(), r.ln()))
            })
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        slopes.push(sxy / sxx);
    }
    Ok(Verdict {
        passed: slopes.iter().all(|s| (-0.65..=-0.35).contains(s)),
        measured: format!("slope d=1 {:.4}, d=2 {:.4}", slopes[0], slopes[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(run_suite("nope", 1), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn ids_are_sequential() {
        assert_eq!(criterion_ids(), (1..=14).collect::<Vec<u8>>());
    }

    #[test]
    fn fast_criteria_pass() {
        for id in [2, 14] {
            let r = run_criterion(id).unwrap();
            assert!(r.passed, "{}", r.line());
        }
    }
}
