//! Runs one configured experiment and collects its tables, JSON summary and
//! pass/fail checks.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::birman_schwinger::{
    assemble_bs, bs_eigenvalue_test, bs_top_crossing, neumann_invertibility, BsError, BS_TOL,
};
use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::gibbs::{
    convergence_rate, discrepancy_sequence, doob_kernel, fk_monte_carlo, fk_semigroup,
    occupation, partition_growth, simulate_chain, total_variation, GibbsError,
};
use crate::kernel::{KernelError, WalkKernel};
use crate::lattice::Point;
use crate::potential::{PotentialError, PotentialSpec};
use crate::resolvent::{
    g_lambda_closed_1d, g_lambda_series, green_kernel, GreenEvaluation, ResolventError,
    DEFAULT_QUAD_POINTS,
};
use crate::spectral::eigen::BandedSym;
use crate::spectral::report::discrete_decay_fits;
use crate::spectral::{
    essential_spectrum_predictor, perron_pair, spectral_report, SpectralError, TruncatedOperator,
};

/// Version of the JSON summary layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("[{module}] {message}")]
    Module { module: &'static str, message: String },
}

macro_rules! module_error {
    ($ty:ty, $name:literal) => {
        impl From<$ty> for RunError {
            fn from(e: $ty) -> Self {
                RunError::Module {
                    module: $name,
                    message: e.to_string(),
                }
            }
        }
    };
}

module_error!(KernelError, "kernel");
module_error!(PotentialError, "potential");
module_error!(ResolventError, "resolvent");
module_error!(BsError, "birman_schwinger");
module_error!(SpectralError, "spectral");
module_error!(GibbsError, "gibbs");

/// A CSV table; every cell is already formatted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_owned(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub invariant: String,
    pub module: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(invariant: &str, module: &'static str, passed: bool, detail: String) -> Self {
        Check {
            invariant: invariant.to_owned(),
            module,
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub tables: Vec<Table>,
    pub summary: Value,
    pub checks: Vec<Check>,
    /// Optional JSON-lines dump as `(file stem, lines)`.
    pub jsonl: Option<(String, Vec<String>)>,
}

impl Outcome {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    /// The JSON summary written next to the tables.
    pub fn summary_document(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind.as_str(),
            "passed": self.first_failure().is_none(),
            "checks": self.checks,
            "result": self.summary,
        })
    }
}

/// Shortest round-trip form, switching to exponent notation outside
/// `[1e-4, 1e15)`; stable across runs and platforms.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn coords(p: &Point) -> Vec<String> {
    p.coords().iter().map(|c| c.to_string()).collect()
}

fn points(dim: usize, raw: &[Vec<i64>]) -> Result<Vec<Point>, RunError> {
    raw.iter()
        .map(|c| {
            if c.len() == dim {
                Ok(Point::new(c))
            } else {
                Err(ConfigError::Invalid(format!("site {c:?} does not have {dim} coordinates")).into())
            }
        })
        .collect()
}

fn axis_labels(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

pub fn run(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<Outcome, RunError> {
    cfg.validate(kind)?;
    let k = cfg.kernel()?;
    let spec = cfg.potential(k.dim())?;
    let (tables, summary, checks, jsonl) = match kind {
        ExperimentKind::Validate => validate(&k, &spec)?,
        ExperimentKind::Green => green(cfg, &k)?,
        ExperimentKind::Bs => bs(cfg, &k, &spec)?,
        ExperimentKind::Spectrum => spectrum(cfg, &k, &spec)?,
        ExperimentKind::Essential => essential(cfg, &k, &spec)?,
        ExperimentKind::Decay => decay(cfg, &k, &spec)?,
        ExperimentKind::Gibbs => gibbs(cfg, &k, &spec)?,
        ExperimentKind::Doob => doob(cfg, &k, &spec)?,
        ExperimentKind::Fk => fk(cfg, &k, &spec)?,
    };
    Ok(Outcome {
        kind,
        tables,
        summary,
        checks,
        jsonl,
    })
}

type Parts = (Vec<Table>, Value, Vec<Check>, Option<(String, Vec<String>)>);

fn validate(k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let report = k.report();
    let mut t = Table::new("kernel", &["check", "value", "ok"]);
    let mut row = |name: &str, value: String, ok: bool| t.push(vec![name.into(), value, ok.to_string()]);
    row("normalization_defect", num(report.normalization_defect), report.normalization_defect <= 1e-12);
    row("support_size", report.support_size.to_string(), report.support_size > 0);
    row("range", report.range.to_string(), true);
    row("irreducibility_radius", report.irreducibility_radius.to_string(), true);
    row("spectrum_lower", num(report.spectrum.lower), report.spectrum.lower >= -1.0);
    row("spectrum_upper", num(report.spectrum.upper), (report.spectrum.upper - 1.0).abs() < 1e-12);
    let checks = vec![
        Check::new(
            "kernel normalization",
            "kernel",
            report.normalization_defect <= 1e-12,
            num(report.normalization_defect),
        ),
        Check::new(
            "potential dimension matches kernel",
            "potential",
            spec.dim() == k.dim(),
            format!("{} vs {}", spec.dim(), k.dim()),
        ),
    ];
    let summary = json!({
        "kernel": report,
        "potential": {
            "dim": spec.dim(),
            "box_radius": spec.box_radius(),
            "sup_norm": spec.sup_norm(),
            "v0": spec.v0(),
            "declared_essential_values": spec.declared_essential_values(),
        },
    });
    Ok((vec![t], summary, checks, None))
}

fn green(cfg: &ExperimentConfig, k: &WalkKernel) -> Result<Parts, RunError> {
    let lambdas = cfg.run.lambdas.clone().unwrap_or_else(|| vec![-2.0, 2.0]);
    let sites = points(
        k.dim(),
        &cfg.run
            .sites
            .clone()
            .unwrap_or_else(|| (0..4).map(|s| Point::axis(k.dim(), 0, s).coords().to_vec()).collect()),
    )?;
    let pts = cfg.run.points.unwrap_or(DEFAULT_QUAD_POINTS);
    let tol = cfg.run.tolerance.unwrap_or(1e-8);
    let mut header = vec!["lambda".to_string()];
    header.extend(axis_labels(k.dim()));
    header.extend(["value", "method", "est_error"].map(String::from));
    let mut t = Table {
        name: "green".into(),
        header,
        rows: Vec::new(),
    };
    let mut worst: f64 = 0.0;
    let mut push = |lambda: f64, x: &Point, e: &GreenEvaluation| {
        let mut row = vec![num(lambda)];
        row.extend(coords(x));
        row.extend([num(e.value), e.method.as_str().into(), num(e.est_error)]);
        t.push(row);
    };
    for &lambda in &lambdas {
        for x in &sites {
            // Every row reports g_λ(x) = λ G_λ(0, x).
            let raw = green_kernel(k, lambda, x, pts)?;
            let quad = GreenEvaluation {
                value: lambda * raw.value,
                est_error: lambda.abs() * raw.est_error,
                ..raw
            };
            push(lambda, x, &quad);
            if let Some(q) = k.lazy1d_parameter() {
                let closed = g_lambda_closed_1d(q, lambda, x.coords()[0])?;
                worst = worst.max((closed.value - quad.value).abs());
                push(lambda, x, &closed);
            }
            if x.is_origin() && lambda.abs() > 1.0 {
                let series = g_lambda_series(k, lambda, 1e-13)?;
                worst = worst.max((series.value - quad.value).abs());
                push(lambda, x, &series);
            }
        }
    }
    let checks = vec![Check::new(
        "green methods agree",
        "resolvent",
        worst <= tol,
        format!("max discrepancy {} (tolerance {})", num(worst), num(tol)),
    )];
    Ok((vec![t], json!({ "max_discrepancy": worst, "tolerance": tol }), checks, None))
}

fn lambda_grid(cfg: &ExperimentConfig, default: (f64, f64, usize)) -> Vec<f64> {
    if let Some(l) = &cfg.run.lambdas {
        return l.clone();
    }
    match &cfg.run.lambda_range {
        Some(r) => r.points(),
        None => crate::config::LambdaRange {
            start: default.0,
            stop: default.1,
            steps: default.2,
        }
        .points(),
    }
}

fn bs(cfg: &ExperimentConfig, k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let bx = spec.working_box();
    let alpha = cfg.run.alpha.unwrap_or(0.1);
    let top = 1.0 + spec.sup_norm() + 1.0;
    let grid = lambda_grid(cfg, (1.05, top, 40));
    let mut t = Table::new("bs", &["lambda", "distance_to_1", "valid_certificate"]);
    for &lambda in &grid {
        let asm = assemble_bs(k, spec, lambda, &bx)?;
        let test = bs_eigenvalue_test(&asm, BS_TOL);
        let valid = neumann_invertibility(k, spec, &[], lambda, alpha, &bx)
            .map(|c| c.valid)
            .unwrap_or(false);
        t.push(vec![num(lambda), num(test.distance), valid.to_string()]);
    }
    let crossing = bs_top_crossing(k, spec, &bx).ok();
    let radius = cfg.run.radii.as_ref().and_then(|r| r.last().copied()).unwrap_or(spec.box_radius());
    let op = TruncatedOperator::new(k, spec, radius)?;
    let r = perron_pair(&op)?.value;
    let mut checks = Vec::new();
    if let Some(c) = crossing {
        checks.push(Check::new(
            "bs crossing matches top eigenvalue",
            "birman_schwinger",
            (c - r).abs() < 1e-6,
            format!("crossing {} vs r {}", num(c), num(r)),
        ));
    }
    let summary = json!({ "crossing": crossing, "top_eigenvalue": r, "box_radius": radius });
    Ok((vec![t], summary, checks, None))
}

fn radii_or(cfg: &ExperimentConfig, default: &[i64]) -> Vec<i64> {
    cfg.run.radii.clone().unwrap_or_else(|| default.to_vec())
}

fn spectrum(cfg: &ExperimentConfig, k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let radii = radii_or(cfg, &[30, 45, 60]);
    let study = spectral_report(k, spec, &radii)?;
    let lambda0 = study.prediction.as_ref().and_then(|p| p.lambda0);
    let mut t = Table::new(
        "spectrum",
        &["L", "r", "ell", "gap", "abs_gap", "second_abs", "lambda0_pred", "decay_alpha"],
    );
    for rep in &study.reports {
        t.push(vec![
            rep.radius.to_string(),
            num(rep.r),
            num(rep.ell),
            num(rep.gap),
            num(rep.abs_gap),
            num(rep.second_abs),
            lambda0.map(num).unwrap_or_default(),
            rep.decay.map(|d| num(d.rate)).unwrap_or_default(),
        ]);
    }
    let last = study.reports.last().expect("at least three radii");
    let checks = vec![
        Check::new(
            "top eigenvector strictly positive",
            "spectral",
            study.reports.iter().all(|r| r.phi_positive),
            format!("residual {}", num(last.residual)),
        ),
        Check::new(
            "discrete eigenvalues stabilize",
            "spectral",
            study.stabilized,
            format!("{:?}", study.discrete_candidates),
        ),
    ];
    let reports: Vec<Value> = study
        .reports
        .iter()
        .map(|r| {
            json!({
                "L": r.radius, "r": r.r, "ell": r.ell, "gap": r.gap, "abs_gap": r.abs_gap,
                "second_abs": r.second_abs,
                "second_abs_excluding_mirror": r.second_abs_excluding_mirror,
                "bipartite": r.bipartite, "residual": r.residual, "phi_positive": r.phi_positive,
                "decay": r.decay, "decay_near": r.decay_near, "decay_predicted": r.decay_predicted,
                "eigenvalues": r.eigenvalues,
            })
        })
        .collect();
    let summary = json!({
        "reports": reports,
        "prediction": study.prediction,
        "discrete_candidates": study.discrete_candidates,
        "discrete_decay": study.discrete_decay,
    });
    Ok((vec![t], summary, checks, None))
}

fn essential(cfg: &ExperimentConfig, k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let pred = essential_spectrum_predictor(k, spec)?;
    let mut roots = Table::new("lambda_v", &["v", "target_g0", "root", "side"]);
    for b in &pred.branches {
        roots.push(vec![num(b.v), num(b.target), num(b.above), "above".into()]);
        for r in &b.below {
            roots.push(vec![num(b.v), num(b.target), num(*r), "below".into()]);
        }
    }
    let radii = radii_or(cfg, &[64, 128, 256]);
    let mut dist = Table::new("distances", &["L", "target", "distance"]);
    let mut per_target: Vec<Vec<f64>> = vec![Vec::new(); pred.lambda_set.len()];
    for &l in &radii {
        let op = TruncatedOperator::new(k, spec, l)?;
        let banded = BandedSym::new(op.sym());
        for (i, &target) in pred.lambda_set.iter().enumerate() {
            let d = banded.distance_to_spectrum(target);
            per_target[i].push(d);
            dist.push(vec![l.to_string(), num(target), num(d)]);
        }
    }
    let checks = pred
        .lambda_set
        .iter()
        .zip(&per_target)
        .map(|(target, ds)| {
            let (first, last) = (ds[0], *ds.last().unwrap());
            Check::new(
                &format!("truncated spectrum accumulates at {}", num(*target)),
                "spectral",
                last <= 0.5 * first,
                format!("distance {} -> {}", num(first), num(last)),
            )
        })
        .collect();
    Ok((vec![roots, dist], json!({ "prediction": pred }), checks, None))
}

fn decay(cfg: &ExperimentConfig, k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let lambda = cfg.run.lambdas.as_ref().and_then(|l| l.first().copied()).unwrap_or(2.0);
    let alpha = cfg.run.alpha.unwrap_or(0.5);
    let excluded = points(k.dim(), &cfg.run.excluded.clone().unwrap_or_default())?;
    let cert = neumann_invertibility(k, spec, &excluded, lambda, alpha, &spec.working_box())?;
    let radii = radii_or(cfg, &[100, 150, 200]);
    let study = spectral_report(k, spec, &radii)?;
    let fits = if study.discrete_decay.is_empty() {
        // Without discrete eigenvalues above the essential part, fit the top one.
        discrete_decay_fits(k, spec, *radii.last().unwrap(), &[study.reports.last().unwrap().r])?
    } else {
        study.discrete_decay.clone()
    };
    let mut t = Table::new("decay", &["eigenvalue", "rate", "prefactor", "fit_residual"]);
    for f in &fits {
        let (rate, pre, res) = f
            .decay
            .map(|d| (num(d.rate), num(d.prefactor), num(d.residual)))
            .unwrap_or_default();
        t.push(vec![num(f.value), rate, pre, res]);
    }
    let mut checks = vec![Check::new(
        "neumann certificate valid",
        "birman_schwinger",
        cert.valid,
        format!("epsilon0 {} contraction {}", num(cert.epsilon0), num(cert.contraction)),
    )];
    for f in &fits {
        let ok = f.decay.map(|d| d.rate > 0.0 && d.residual < 0.1).unwrap_or(false);
        checks.push(Check::new(
            &format!("eigenfunction at {} decays log-linearly", num(f.value)),
            "spectral",
            ok,
            format!("{:?}", f.decay),
        ));
    }
    Ok((vec![t], json!({ "certificate": cert, "fits": fits }), checks, None))
}

fn indicator_first_step(target: Point) -> impl Fn(&[Point]) -> f64 + Sync {
    move |path: &[Point]| if path[0] == target { 1.0 } else { 0.0 }
}

fn gibbs(cfg: &ExperimentConfig, k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let n_max = cfg.run.horizon.unwrap_or(60);
    let n_min = cfg.run.horizon_min.unwrap_or(10);
    let k_len = cfg.run.marginal_length.unwrap_or(1);
    let radius = radii_or(cfg, &[(n_max as i64 * k.range()).max(4 * k.range()) + 20])
        .last()
        .copied()
        .unwrap();
    let op = TruncatedOperator::new(k, spec, radius)?;
    let pair = perron_pair(&op)?;
    let chain = doob_kernel(&op, &pair)?;
    let ns: Vec<usize> = (n_min..=n_max).collect();
    let target = Point::axis(k.dim(), 0, 1);
    let d = discrepancy_sequence(&op, &chain, k_len, &ns, indicator_first_step(target))?;
    let fit = convergence_rate(&op, &chain, k_len, &ns, indicator_first_step(target)).ok();
    let rep = &crate::spectral::report::spectral_reports(k, spec, &[radius])?[0];
    let predicted = rep.contraction_ratio();
    let eps = fit.as_ref().map(|f| f.epsilon);
    let mut dt = Table::new("convergence", &["n", "D_n", "fitted_eps"]);
    for (n, v) in ns.iter().zip(&d) {
        dt.push(vec![n.to_string(), num(*v), eps.map(num).unwrap_or_default()]);
    }
    let growth = partition_growth(&op, n_max);
    let mut zt = Table::new("partition", &["N", "Z_N_root"]);
    for p in &growth {
        zt.push(vec![p.n.to_string(), num(p.root)]);
    }
    let checks = vec![
        Check::new(
            "detailed balance",
            "gibbs",
            chain.detailed_balance_violation() < 1e-12,
            num(chain.detailed_balance_violation()),
        ),
        Check::new(
            "geometric convergence of the first-step marginal",
            "gibbs",
            eps.map(|e| e < 1.0 && (e - predicted).abs() <= 0.15 * predicted).unwrap_or(false),
            format!(
                "fitted {} vs predicted {}",
                eps.map(num).unwrap_or_else(|| "none".into()),
                num(predicted)
            ),
        ),
    ];
    let summary = json!({
        "box_radius": radius, "r": pair.value, "row_deficit": chain.row_deficit,
        "fit": fit, "predicted_ratio": predicted,
    });
    Ok((vec![dt, zt], summary, checks, None))
}

fn doob(cfg: &ExperimentConfig, k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let seed = cfg.run.seed.expect("validated");
    let steps = cfg.run.steps.unwrap_or(1_000_000);
    let radius = radii_or(cfg, &[spec.box_radius().min(60)]).last().copied().unwrap();
    let op = TruncatedOperator::new(k, spec, radius)?;
    let pair = perron_pair(&op)?;
    let chain = doob_kernel(&op, &pair)?;
    let start = match &cfg.run.start {
        Some(c) => points(k.dim(), std::slice::from_ref(c))?[0],
        None => Point::origin(k.dim()),
    };
    let path = simulate_chain(&chain, &start, steps, seed)?;
    let occ = occupation(&chain, &path);
    let tv = total_variation(&occ, &chain.stationary);
    let mut header: Vec<String> = axis_labels(k.dim());
    header.extend(["stationary", "occupation"].map(String::from));
    let mut t = Table {
        name: "stationary".into(),
        header,
        rows: Vec::new(),
    };
    for (i, x) in chain.bx.iter().enumerate() {
        let mut row = coords(&x);
        row.extend([num(chain.stationary[i]), num(occ[i])]);
        t.push(row);
    }
    let checks = vec![
        Check::new("row deficit", "gibbs", chain.row_deficit <= 1e-6, num(chain.row_deficit)),
        Check::new(
            "detailed balance",
            "gibbs",
            chain.detailed_balance_violation() < 1e-12,
            num(chain.detailed_balance_violation()),
        ),
        Check::new(
            "occupation converges to stationary measure",
            "gibbs",
            steps < 1_000_000 || tv < 0.01,
            format!("total variation {} after {steps} steps", num(tv)),
        ),
    ];
    let jsonl = cfg.run.dump_paths.unwrap_or(false).then(|| {
        let lines = path
            .iter()
            .enumerate()
            .map(|(i, p)| json!({ "step": i, "site": p.coords() }).to_string())
            .collect();
        ("path".to_string(), lines)
    });
    let summary = json!({
        "r": pair.value, "row_deficit": chain.row_deficit, "total_variation": tv,
        "steps": steps, "seed": seed,
    });
    Ok((vec![t], summary, checks, jsonl))
}

fn fk(cfg: &ExperimentConfig, k: &WalkKernel, spec: &PotentialSpec) -> Result<Parts, RunError> {
    let seed = cfg.run.seed.expect("validated");
    let n = cfg.run.horizon.unwrap_or(20);
    let samples = cfg.run.samples.unwrap_or(100_000);
    let radius = (n as i64 * k.range()).max(4 * k.range());
    let op = TruncatedOperator::new(k, spec, radius)?;
    let exact = fk_semigroup(&op, &vec![1.0; op.len()], n)[op.origin_index()];
    let origin = Point::origin(k.dim());
    let mc = fk_monte_carlo(k, spec, |_| 1.0, &origin, n, samples, seed)?;
    let mut t = Table::new("fk", &["n", "exact", "estimate", "stderr", "samples"]);
    t.push(vec![n.to_string(), num(exact), num(mc.estimate), num(mc.stderr), samples.to_string()]);
    let checks = vec![Check::new(
        "monte carlo within 3 standard errors",
        "gibbs",
        (mc.estimate - exact).abs() <= 3.0 * mc.stderr,
        format!("|{} - {}| vs 3 x {}", num(mc.estimate), num(exact), num(mc.stderr)),
    )];
    Ok((vec![t], json!({ "exact": exact, "monte_carlo": mc, "seed": seed }), checks, None))
}
