//! Subcommand drivers.

use std::fmt::Write as _;
use std::time::Instant;

use glaeser_core::glaeser::ScaleRow;
use glaeser_core::{
    basis, decide, extend, finiteness_scan, lift_jet, refine_bundle, select_section, stabilize, unlift, Bundle,
    Constraints, Jet, JetField, JetVec, MultiIndex, RegularModulus, Status, Verdict,
};

use crate::report::{FinitenessSummary, Report, ScaleResidual, ShapeInfo};
use crate::spec::{ProblemSpecFile, SpecError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Usage(String),
    /// The instance is not known to be solvable and `--force` was not given.
    #[error("{0}")]
    Refused(String),
    #[error("{0}")]
    Core(#[from] glaeser_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Usage(_) => 3,
            CliError::Refused(_) => 4,
            CliError::Core(_) | CliError::Io { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Command-line values that take precedence over the spec's config block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub k_sharp: Option<usize>,
    pub scales: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub timing: bool,
}

fn refinement_config(spec: &ProblemSpecFile, ov: &Overrides) -> Result<glaeser_core::RefinementConfig> {
    let mut cfg = spec.refinement_config();
    if let Some(k) = ov.k_sharp {
        cfg.k_sharp = k;
    }
    if let Some(s) = &ov.scales {
        cfg.scales = s.clone();
    }
    if let Some(t) = ov.tol {
        cfg.tol_min = t;
    }
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn base_report(command: &str, spec: &ProblemSpecFile) -> Report {
    Report {
        command: command.to_string(),
        shape: ShapeInfo {
            m: spec.m,
            n: spec.n,
            d: spec.d,
        },
        points: spec.points.len(),
        verdict: None,
        iterations: None,
        reached_fixpoint: None,
        bound: None,
        dims_per_round: Vec::new(),
        scale_residuals: Vec::new(),
        first_empty_point: None,
        first_empty_index: None,
        finiteness: None,
        timing_ms: None,
    }
}

fn scale_rows(rows: &[ScaleRow]) -> Vec<ScaleResidual> {
    rows.iter()
        .map(|r| ScaleResidual {
            delta: r.delta,
            points_resolved: r.points_resolved,
            tuples: r.tuples,
            max_min_q: r.max_min_q,
            max_mean_q: r.max_mean_q,
        })
        .collect()
}

fn elapsed_ms(t: Instant, on: bool) -> Option<f64> {
    on.then(|| t.elapsed().as_secs_f64() * 1e3)
}

/// Stabilizes the bundle and classifies it.
pub fn run_decide(spec: &ProblemSpecFile, ov: &Overrides) -> Result<(Report, Verdict)> {
    let t = Instant::now();
    let cfg = refinement_config(spec, ov)?;
    let v = decide(&spec.bundle()?, &cfg)?;
    let mut r = base_report("decide", spec);
    r.verdict = Some(v.status.into());
    r.iterations = Some(v.iterations);
    r.reached_fixpoint = Some(v.reached_fixpoint);
    r.bound = Some(v.bound);
    r.dims_per_round = v.dims_per_round.clone();
    r.scale_residuals = scale_rows(&v.scale_report);
    r.first_empty_point = v.first_empty_point.clone();
    r.first_empty_index = v.first_empty_index;
    r.timing_ms = elapsed_ms(t, ov.timing);
    Ok((r, v))
}

/// Refines `rounds` times, or to stabilization when `rounds` is `None`.
/// Returns the refined bundle as an explicit-bundle spec.
pub fn run_refine(spec: &ProblemSpecFile, ov: &Overrides, rounds: Option<usize>) -> Result<(ProblemSpecFile, Report)> {
    let t = Instant::now();
    let cfg = refinement_config(spec, ov)?;
    let b = spec.bundle()?;
    let mut r = base_report("refine", spec);
    let out = match rounds {
        None => {
            let st = stabilize(&b, &cfg)?;
            r.iterations = Some(st.iterations);
            r.reached_fixpoint = Some(st.reached_fixpoint);
            r.bound = Some(st.bound);
            r.dims_per_round = st.dims_per_round;
            st.bundle
        }
        Some(k) => {
            let mut cur = b;
            r.dims_per_round.push(cur.dims());
            let mut done = 0;
            while done < k && cur.first_empty().is_none() {
                cur = refine_bundle(&cur, &cfg)?;
                r.dims_per_round.push(cur.dims());
                done += 1;
            }
            let n = r.dims_per_round.len();
            r.iterations = Some(done);
            r.reached_fixpoint = Some(n >= 2 && r.dims_per_round[n - 1] == r.dims_per_round[n - 2]);
            r.bound = Some(cur.shape().stabilization_bound());
            cur
        }
    };
    if let Some(i) = out.first_empty() {
        r.first_empty_index = Some(i);
        r.first_empty_point = Some(out.points()[i].clone());
    }
    r.timing_ms = elapsed_ms(t, ov.timing);
    Ok((ProblemSpecFile::from_bundle(&out, spec.config.clone()), r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtendOptions {
    /// Samples per axis over the bounding box of the points.
    pub grid: usize,
    pub force: bool,
    /// Also emit rows at the data points.
    pub include_data: bool,
}

/// Builds the extension from a section of the stabilized bundle and samples
/// it. Returns the CSV text.
pub fn run_extend(spec: &ProblemSpecFile, ov: &Overrides, opts: ExtendOptions) -> Result<String> {
    let (_, v) = run_decide(spec, ov)?;
    if v.status != Status::Solvable && !opts.force {
        return Err(CliError::Refused(format!(
            "decide returned {}; pass --force to extend anyway",
            v.status.as_str()
        )));
    }
    let source: Bundle = if v.stabilized.first_empty().is_none() {
        v.stabilized
    } else {
        spec.bundle()?
    };
    if let Some(i) = source.first_empty() {
        return Err(CliError::Refused(format!("fiber at point {i} is empty; nothing to extend")));
    }
    let field = select_section(&source)?;
    let ext = extend(&field, &field.bounding_box(0.0))?;
    let mut samples = ext.domain().grid(opts.grid);
    if opts.include_data {
        samples.extend(field.points().iter().cloned());
    }
    Ok(grid_csv(&field, |y, a| ext.eval(y, a), &samples)?)
}

fn grid_csv(
    field: &JetField,
    eval: impl Fn(&[f64], &MultiIndex) -> glaeser_core::Result<Vec<f64>>,
    samples: &[Vec<f64>],
) -> glaeser_core::Result<String> {
    let shape = field.shape();
    let b = basis(shape.n, shape.m);
    let mut out = String::new();
    for i in 1..=shape.n {
        let _ = write!(out, "x{i},");
    }
    out.push_str("component,alpha,value\n");
    for y in samples {
        let coords: String = y.iter().map(|v| format!("{v},")).collect();
        let per_alpha = b
            .indices()
            .iter()
            .map(|a| eval(y, a))
            .collect::<glaeser_core::Result<Vec<_>>>()?;
        for j in 0..shape.d {
            for (p, vals) in per_alpha.iter().enumerate() {
                let _ = writeln!(out, "{coords}{j},{p},{}", vals[j]);
            }
        }
    }
    Ok(out)
}

/// Default subset size `3 · 2^(n-1)`, capped by the number of points.
pub fn default_scan_size(n: usize, points: usize) -> usize {
    (3usize << n.saturating_sub(1).min(20)).min(points)
}

/// Scans small subsets for the largest constrained least-squares value.
pub fn run_finiteness(spec: &ProblemSpecFile, ov: &Overrides) -> Result<Report> {
    let t = Instant::now();
    let omega = match &spec.config.omega {
        Some(o) => o.modulus()?,
        None => {
            return Err(CliError::Spec(SpecError {
                line: None,
                message: "finiteness needs a `config.omega` block".into(),
            }))
        }
    };
    let k_sharp = ov
        .k_sharp
        .or(spec.config.scan_k_sharp)
        .unwrap_or_else(|| default_scan_size(spec.n, spec.points.len()));
    if k_sharp == 0 {
        return Err(CliError::Usage("--k-sharp must be at least 1".into()));
    }
    let budget = spec.config.scan_budget.unwrap_or(4096);
    let seed = ov.seed.or(spec.config.seed).unwrap_or(0);
    let scan = match spec.bhk_instance() {
        Some(inst) => {
            let inst = inst?;
            finiteness_scan(&Constraints::Bhk { inst: &inst, m: spec.m }, &omega, k_sharp, budget, seed)?
        }
        None => finiteness_scan(&Constraints::Bundle(&spec.bundle()?), &omega, k_sharp, budget, seed)?,
    };
    let mut r = base_report("finiteness", spec);
    let best = scan.best;
    r.finiteness = Some(FinitenessSummary {
        sup_m: best.value,
        subset_points: best.subset.iter().map(|&k| spec.points[k].clone()).collect(),
        subset: best.subset,
        witness: best.witness.iter().map(JetVec::flatten).collect(),
        k_sharp,
        examined: scan.examined,
        exhaustive: scan.exhaustive,
        kkt_residual: best.kkt_residual,
        constraint_residual: best.constraint_residual,
    });
    r.timing_ms = elapsed_ms(t, ov.timing);
    Ok(r)
}

/// Outcome of one built-in check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Deterministic coefficients in `[-1, 1]`.
fn wobble(k: usize, salt: f64) -> f64 {
    (k as f64 * 1.618_033_988_75 + salt).sin()
}

fn dyadic_line(smax: i32) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0]];
    for s in 1..=smax {
        let h = 0.5f64.powi(s);
        pts.push(vec![h]);
        pts.push(vec![-h]);
    }
    pts
}

/// Small fixed battery of known answers.
pub fn selfcheck() -> Vec<CheckLine> {
    let mut out = Vec::new();
    let mut push = |name, r: glaeser_core::Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        out.push(CheckLine { name, passed, detail });
    };
    push("jet ring laws", check_ring());
    push("absolute value is not C^1", check_abs());
    push("signed square extends", check_signed_square());
    push("coordinate ideal misses one", check_coordinates());
    push("lift round trip", check_lift());
    push("lipschitz pair value", check_pair());
    out
}

fn check_ring() -> glaeser_core::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for t in 0..60 {
        let (n, m) = (1 + t % 3, t % 4);
        let x: Vec<f64> = (0..n).map(|i| 0.3 * wobble(i + t, 0.1)).collect();
        let len = glaeser_core::scalar_dim(m, n);
        let jet = |salt: f64| Jet::new(x.clone(), m, (0..len).map(|k| wobble(k + t, salt)).collect());
        let (p, q, r) = (jet(1.0)?, jet(2.0)?, jet(3.0)?);
        let pq = p.multiply(&q)?;
        let comm = pq.sub(&q.multiply(&p)?)?.max_abs_coeff();
        let assoc = pq.multiply(&r)?.sub(&p.multiply(&q.multiply(&r)?)?)?.max_abs_coeff();
        worst = worst.max(comm).max(assoc);
    }
    Ok((worst <= 1e-11, format!("max residual {worst:.3e}")))
}

fn check_abs() -> glaeser_core::Result<(bool, String)> {
    let pts = dyadic_line(12);
    let vals: Vec<f64> = pts.iter().map(|p| p[0].abs()).collect();
    let v = decide(&Bundle::from_interpolation(pts, &vals, 1)?, &Default::default())?;
    let ok = v.status == Status::Unsolvable && v.first_empty_point == Some(vec![0.0]);
    Ok((ok, format!("{} at {:?}", v.status.as_str(), v.first_empty_point)))
}

fn check_signed_square() -> glaeser_core::Result<(bool, String)> {
    let pts = dyadic_line(12);
    let vals: Vec<f64> = pts.iter().map(|p| p[0] * p[0].abs()).collect();
    let v = decide(&Bundle::from_interpolation(pts.clone(), &vals, 1)?, &Default::default())?;
    if v.status != Status::Solvable {
        return Ok((false, v.status.as_str().to_string()));
    }
    let field = select_section(&v.stabilized)?;
    let ext = extend(&field, &field.bounding_box(0.0))?;
    let zero = MultiIndex::zero(1);
    let mut worst: f64 = 0.0;
    for (p, f) in pts.iter().zip(&vals) {
        worst = worst.max((ext.eval(p, &zero)?[0] - f).abs());
    }
    Ok((worst <= 1e-8, format!("residual at data {worst:.3e}")))
}

fn check_coordinates() -> glaeser_core::Result<(bool, String)> {
    let mut pts = vec![vec![0.0, 0.0]];
    for s in 1..=3 {
        let h = 0.5f64.powi(s);
        pts.extend([vec![h, 0.0], vec![0.0, h], vec![h, h]]);
    }
    let f = vec![pts.iter().map(|p| p[0]).collect(), pts.iter().map(|p| p[1]).collect()];
    let inst = glaeser_core::BhkInstance::new(pts.clone(), f, vec![1.0; pts.len()])?;
    let v = decide(&Bundle::from_bhk(&inst, 1)?, &Default::default())?;
    let ok = v.status == Status::Unsolvable && v.iterations == 0 && v.first_empty_index == Some(0);
    Ok((ok, format!("{} after {} rounds", v.status.as_str(), v.iterations)))
}

fn check_lift() -> glaeser_core::Result<(bool, String)> {
    let x = vec![0.25, -0.5];
    let flat: Vec<f64> = (0..12).map(|k| wobble(k, 0.7)).collect();
    let p = JetVec::from_flat(&x, 2, 2, &flat)?;
    let back = unlift(&lift_jet(&p), 2, 2)?;
    Ok((back == p, "exact".to_string()))
}

fn check_pair() -> glaeser_core::Result<(bool, String)> {
    let inst = glaeser_core::BhkInstance::new(vec![vec![0.0], vec![0.5]], vec![vec![1.0, 1.0]], vec![1.0, -1.0])?;
    let scan = finiteness_scan(&Constraints::Bhk { inst: &inst, m: 0 }, &RegularModulus::lipschitz(), 2, 16, 0)?;
    let want = 18f64.sqrt();
    let err = (scan.best.value - want).abs();
    Ok((err <= 1e-9 * want, format!("sup M_S {:.12}", scan.best.value)))
}
