//! Subcommand implementations. Each `run_*` function is pure apart from
//! reading auxiliary input files; the `cmd_*` wrappers handle output and
//! exit codes.

use crate::config::{CaseConfig, CaseSpec};
use crate::oracle::{oracles, Oracle};
use crate::output::{csv_line, fields_csv, opt_real, real};
use crate::pipeline::{Case, Source};
use crate::{exit, CliError};
use harmap_core::functionals::{
    curvature_functional, dirichlet_energy, evaluate_points, image_area, opt_ext_real, PointField,
    REPORT_SCHEMA_VERSION,
};
use harmap_core::gridio::write_grid_csv;
use harmap_core::quadrature::{fitted_order, pairwise_orders, richardson};
use harmap_core::solver::residual;
use harmap_core::{verify_chain, Exec, Family, Verdict, VerificationReport};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub fields: bool,
    pub quiet: bool,
    pub exec: Exec,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub resolution: usize,
    pub spacing: f64,
    pub energy: f64,
    #[serde(serialize_with = "opt_ext_real")]
    pub functional_f: Option<f64>,
    pub two_area: f64,
    #[serde(serialize_with = "opt_ext_real")]
    pub left_margin: Option<f64>,
    #[serde(serialize_with = "opt_ext_real")]
    pub right_margin: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Refinement {
    pub rows: Vec<RefinementRow>,
    /// Order observed from successive differences; needs three resolutions.
    pub observed_order: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub reports: Vec<VerificationReport>,
    pub refinement: Refinement,
    pub verdict: Verdict,
    pub exit_code: i32,
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn observed_order(spacings: &[f64], values: &[f64]) -> Option<f64> {
    if values.len() < 3 || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let orders = pairwise_orders(&spacings[..diffs.len()], &diffs);
    orders.last().copied().filter(|o| o.is_finite())
}

/// Verification at every configured resolution; the previous resolution
/// serves as the Richardson partner.
pub fn run_verify(
    cfg: &CaseConfig,
    base: &Path,
    exec: Exec,
    want_fields: bool,
) -> Result<(RunReport, Vec<(usize, PointField)>), CliError> {
    let case = Case::from_config(cfg, base)?;
    let mut reports = Vec::new();
    let mut fields = Vec::new();
    let mut spacings = Vec::new();
    let mut previous = None;
    for &res in &cfg.resolutions {
        let field = case.field(res, exec)?;
        spacings.push(field.grid.max_physical_spacing());
        reports.push(verify_chain(
            case.info.clone(),
            &field,
            previous.as_ref(),
            &cfg.thresholds,
            exec,
        ));
        if want_fields {
            fields.push((res, evaluate_points(&field, &cfg.thresholds, exec)));
        }
        previous = Some(field);
    }

    let rows: Vec<RefinementRow> = reports
        .iter()
        .zip(&spacings)
        .map(|(r, &h)| RefinementRow {
            resolution: r.resolution,
            spacing: h,
            energy: r.energy,
            functional_f: r.functional_f,
            two_area: r.two_area,
            left_margin: r.left_margin,
            right_margin: r.right_margin,
            verdict: r.verdict.clone(),
        })
        .collect();
    let series =
        |f: fn(&RefinementRow) -> Option<f64>| -> Option<Vec<f64>> { rows.iter().map(f).collect() };
    let mut observed = BTreeMap::new();
    observed.insert(
        "energy".to_string(),
        observed_order(&spacings, &series(|r| Some(r.energy)).unwrap()),
    );
    observed.insert(
        "functional_f".to_string(),
        series(|r| r.functional_f).and_then(|v| observed_order(&spacings, &v)),
    );
    observed.insert(
        "two_area".to_string(),
        observed_order(&spacings, &series(|r| Some(r.two_area)).unwrap()),
    );

    let verdict = reports
        .last()
        .expect("at least one resolution")
        .verdict
        .clone();
    let exit_code = verdict.exit_code();
    Ok((
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            reports,
            refinement: Refinement {
                rows,
                observed_order: observed,
            },
            verdict,
            exit_code,
        },
        fields,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveRecord {
    pub resolution: usize,
    pub dims: [usize; 2],
    pub ambient_dim: usize,
    pub tol: f64,
    pub solver_residual: f64,
    pub discrete_laplacian_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max node error against the analytic family whose trace was imposed.
    pub trace_max_error: Option<f64>,
    pub grid_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub schema_version: u32,
    pub case: String,
    pub runs: Vec<SolveRecord>,
}

pub fn run_solve(
    cfg: &CaseConfig,
    base: &Path,
    exec: Exec,
) -> Result<(SolveSummary, Vec<(String, String)>), CliError> {
    let case = Case::from_config(cfg, base)?;
    let CaseSpec::Solver {
        tol,
        boundary,
        domain,
        ..
    } = &cfg.case
    else {
        return Err(CliError::Config("`solve` needs a solver case".into()));
    };
    let trace = match boundary {
        crate::config::BoundarySpec::Trace {
            family,
            params,
            ambient_dim,
        } => {
            let mut fam = harmap_core::AnalyticFamily::by_name(family, params)?;
            fam.domain = *domain;
            if let Some(n) = ambient_dim {
                fam = fam.with_ambient_dim(*n)?;
            }
            Some(fam)
        }
        _ => None,
    };
    let mut runs = Vec::new();
    let mut files = Vec::new();
    for &res in &cfg.resolutions {
        let map = case.solve(res, exec)?;
        let trace_max_error = trace.as_ref().map(|fam| {
            let g = &map.grid;
            (0..g.len())
                .map(|k| {
                    let (i, j) = g.ij(k);
                    let exact = fam.family.jet_at(g.param(i, j)).value;
                    map.value(i, j)
                        .iter()
                        .zip(exact.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        });
        let name = format!("grid_r{res}.csv");
        let (n0, n1) = map.grid.dims();
        runs.push(SolveRecord {
            resolution: res,
            dims: [n0, n1],
            ambient_dim: map.ambient_dim,
            tol: *tol,
            solver_residual: map.solver_residual,
            discrete_laplacian_residual: residual(&map),
            iterations: map.iterations,
            converged: map.converged,
            trace_max_error,
            grid_file: name.clone(),
        });
        files.push((name, write_grid_csv(&map)));
    }
    Ok((
        SolveSummary {
            schema_version: REPORT_SCHEMA_VERSION,
            case: case.info.name,
            runs,
        },
        files,
    ))
}

pub const SWEEP_COLUMNS: [&str; 15] = [
    "resolution",
    "energy",
    "functional_f",
    "two_area",
    "left_margin",
    "right_margin",
    "left_margin_err",
    "right_margin_err",
    "eq9_max",
    "eq10_max",
    "masked_fraction",
    "positive_curvature_fraction",
    "status",
    "reason",
    "error",
];

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub params: Vec<f64>,
    pub report: Result<VerificationReport, String>,
}

/// Cartesian product of the swept values, in parameter-name order.
fn tuples(sweep: &BTreeMap<String, Vec<f64>>) -> Vec<Vec<f64>> {
    sweep.values().fold(vec![Vec::new()], |acc, values| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut t = prefix.clone();
                    t.push(*v);
                    t
                })
            })
            .collect()
    })
}

pub fn run_sweep(
    cfg: &CaseConfig,
    base: &Path,
    exec: Exec,
) -> Result<(Vec<String>, Vec<SweepRow>), CliError> {
    let CaseSpec::Analytic {
        family,
        params,
        domain,
        ambient_dim,
    } = &cfg.case
    else {
        return Err(CliError::Config("`sweep` needs an analytic case".into()));
    };
    if cfg.sweep.is_empty() || cfg.sweep.len() > 2 {
        return Err(CliError::Config(
            "`sweep` needs one or two swept parameters".into(),
        ));
    }
    let names: Vec<String> = cfg.sweep.keys().cloned().collect();
    let mut probe = params.clone();
    for n in &names {
        probe.insert(n.clone(), 1.0);
    }
    Family::from_name(family, &probe)?;

    let rows = tuples(&cfg.sweep)
        .into_iter()
        .map(|t| {
            let mut p = params.clone();
            for (n, v) in names.iter().zip(&t) {
                p.insert(n.clone(), *v);
            }
            let spec = CaseSpec::Analytic {
                family: family.clone(),
                params: p,
                domain: *domain,
                ambient_dim: *ambient_dim,
            };
            let sub = CaseConfig {
                case: spec,
                resolutions: cfg.resolutions.clone(),
                thresholds: cfg.thresholds,
                sweep: BTreeMap::new(),
                output: Default::default(),
            };
            let report = run_verify(&sub, base, exec, false)
                .map(|(r, _)| r.reports.last().cloned().expect("non-empty"))
                .map_err(|e| e.to_string());
            SweepRow { params: t, report }
        })
        .collect();
    Ok((names, rows))
}

pub fn sweep_csv(names: &[String], rows: &[SweepRow]) -> String {
    let mut header: Vec<String> = names.to_vec();
    header.extend(SWEEP_COLUMNS.iter().map(|s| s.to_string()));
    let mut out = csv_line(&header);
    for row in rows {
        let mut f: Vec<String> = row.params.iter().map(|v| real(*v)).collect();
        match &row.report {
            Ok(r) => {
                let (status, reason) = verdict_parts(&r.verdict);
                f.extend([
                    r.resolution.to_string(),
                    real(r.energy),
                    opt_real(r.functional_f),
                    real(r.two_area),
                    opt_real(r.left_margin),
                    opt_real(r.right_margin),
                    real(r.error_estimates.left_margin),
                    real(r.error_estimates.right_margin),
                    opt_real(r.eq9_residual_stats.as_ref().map(|s| s.max)),
                    opt_real(r.eq10_residual_stats.as_ref().map(|s| s.max)),
                    real(r.masked_fraction),
                    real(r.positive_curvature_fraction),
                    status.into(),
                    reason,
                    String::new(),
                ]);
            }
            Err(e) => {
                f.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len() - 3));
                f.push("Error".into());
                f.push(String::new());
                f.push(e.replace(',', ";"));
            }
        }
        out.push_str(&csv_line(&f));
    }
    out
}

fn verdict_parts(v: &Verdict) -> (&'static str, String) {
    match v {
        Verdict::ChainHolds => ("ChainHolds", String::new()),
        Verdict::ChainViolated => ("ChainViolated", String::new()),
        Verdict::Undefined(r) => ("Undefined", r.replace(',', ";")),
    }
}

/// 0 when every row holds, 1 if any row violates, then 2 for undefined
/// rows and 3 for rows that failed to run.
pub fn sweep_exit_code(rows: &[SweepRow]) -> i32 {
    let codes: Vec<i32> = rows
        .iter()
        .map(|r| match &r.report {
            Ok(rep) => rep.verdict.exit_code(),
            Err(_) => exit::CONFIG,
        })
        .collect();
    if codes.contains(&exit::VIOLATED) {
        exit::VIOLATED
    } else if codes.contains(&exit::UNDEFINED) {
        exit::UNDEFINED
    } else if codes.contains(&exit::CONFIG) {
        exit::CONFIG
    } else {
        exit::HOLDS
    }
}

pub const ORDER_BAND: [f64; 2] = [1.7, 2.3];
/// Relative error treated as round-off for exactly integrated cases.
pub const ROUNDOFF_REL: f64 = 1e-11;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub spacing: f64,
    pub computed: f64,
    pub oracle: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantityConvergence {
    pub quantity: String,
    /// `exact` or `self_reference`.
    pub oracle_kind: String,
    pub rows: Vec<ConvergenceRow>,
    pub pairwise_orders: Vec<f64>,
    pub fitted_order: Option<f64>,
    /// `roundoff`, `order` or `fail`.
    pub status: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub case: String,
    pub order_band: [f64; 2],
    pub quantities: Vec<QuantityConvergence>,
    pub pass: bool,
}

fn integrals(case: &Case, res: usize, cfg: &CaseConfig, exec: Exec) -> Result<[f64; 3], CliError> {
    let field = case.field(res, exec)?;
    let pts = evaluate_points(&field, &cfg.thresholds, exec);
    let f = curvature_functional(&pts, &cfg.thresholds)
        .map_err(|e| CliError::Config(format!("curvature functional undefined: {e}")))?;
    Ok([dirichlet_energy(&field), image_area(&field), f])
}

pub fn run_convergence(
    cfg: &CaseConfig,
    base: &Path,
    exec: Exec,
) -> Result<ConvergenceReport, CliError> {
    let case = Case::from_config(cfg, base)?;
    let Source::Analytic(fam) = &case.source else {
        return Err(CliError::Config(
            "`convergence` needs an analytic case".into(),
        ));
    };
    let or = oracles(fam).ok_or_else(|| {
        CliError::Config(format!(
            "no oracle registered for `{}` on this domain",
            fam.name()
        ))
    })?;
    if cfg.resolutions.len() < 2 {
        return Err(CliError::Config(
            "`convergence` needs at least two resolutions".into(),
        ));
    }
    let mut values = Vec::new();
    let mut spacings = Vec::new();
    for &res in &cfg.resolutions {
        values.push(integrals(&case, res, cfg, exec)?);
        spacings.push(harmap_core::TensorGrid::new(&fam.domain, res).max_physical_spacing());
    }
    let kinds = [or.energy, or.area, or.functional_f];
    let reference = if kinds.contains(&Oracle::SelfReference) {
        let top = *cfg.resolutions.last().unwrap();
        let q2 = integrals(&case, 2 * top, cfg, exec)?;
        let q4 = integrals(&case, 4 * top, cfg, exec)?;
        Some([0, 1, 2].map(|k| richardson(q4[k], q2[k], 2.0, 2.0).extrapolated))
    } else {
        None
    };

    let names = ["energy", "area", "functional_f"];
    let quantities: Vec<QuantityConvergence> = (0..3)
        .map(|k| {
            let (oracle, kind) = match kinds[k] {
                Oracle::Exact(v) => (v, "exact"),
                Oracle::SelfReference => (reference.unwrap()[k], "self_reference"),
            };
            let rows: Vec<ConvergenceRow> = cfg
                .resolutions
                .iter()
                .zip(&spacings)
                .zip(&values)
                .map(|((&resolution, &spacing), v)| ConvergenceRow {
                    resolution,
                    spacing,
                    computed: v[k],
                    oracle,
                    abs_error: (v[k] - oracle).abs(),
                })
                .collect();
            let errors: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
            let scale = oracle.abs().max(1.0);
            let roundoff = errors.iter().all(|e| *e <= ROUNDOFF_REL * scale);
            let all_finite = errors.iter().all(|e| e.is_finite() && *e > 0.0);
            let (pairwise, fitted) = if all_finite {
                (
                    pairwise_orders(&spacings, &errors),
                    Some(fitted_order(&spacings, &errors)),
                )
            } else {
                (Vec::new(), None)
            };
            let in_band = fitted.is_some_and(|o| (ORDER_BAND[0]..=ORDER_BAND[1]).contains(&o));
            let status = if roundoff {
                "roundoff"
            } else if in_band {
                "order"
            } else {
                "fail"
            };
            QuantityConvergence {
                quantity: names[k].into(),
                oracle_kind: kind.into(),
                rows,
                pairwise_orders: pairwise,
                fitted_order: fitted,
                status: status.into(),
                pass: status != "fail",
            }
        })
        .collect();
    let pass = quantities.iter().all(|q| q.pass);
    Ok(ConvergenceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        case: case.info.name,
        order_band: ORDER_BAND,
        quantities,
        pass,
    })
}

pub const CONVERGENCE_COLUMNS: [&str; 6] = [
    "quantity",
    "resolution",
    "spacing",
    "computed",
    "oracle",
    "abs_error",
];

pub fn convergence_csv(rep: &ConvergenceReport) -> String {
    let mut out = CONVERGENCE_COLUMNS.join(",");
    out.push('\n');
    for q in &rep.quantities {
        for r in &q.rows {
            out.push_str(&csv_line(&[
                q.quantity.clone(),
                r.resolution.to_string(),
                real(r.spacing),
                real(r.computed),
                real(r.oracle),
                real(r.abs_error),
            ]));
        }
    }
    out
}

struct Sink<'a> {
    dir: Option<PathBuf>,
    opts: &'a RunOptions,
}

impl Sink<'_> {
    fn new<'a>(cfg: &CaseConfig, base: &Path, opts: &'a RunOptions) -> Result<Sink<'a>, CliError> {
        let dir = opts
            .out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(|d| base.join(d)));
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        Ok(Sink { dir, opts })
    }

    /// Writes `name` into the output directory, or prints `text` to stdout
    /// when there is none and `primary` is set.
    fn emit(&self, name: &str, text: &str, primary: bool) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                let p = d.join(name);
                std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))
            }
            None => {
                if primary && !self.opts.quiet {
                    print!("{text}");
                }
                Ok(())
            }
        }
    }

    fn log(&self, msg: &str) {
        if !self.opts.quiet {
            eprintln!("{msg}");
        }
    }
}

fn json(v: &impl Serialize) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Runs `f` and converts errors into exit codes with a diagnostic on stderr.
fn guarded(f: impl FnOnce() -> Result<i32, CliError>) -> i32 {
    match f() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_verify(config: &Path, opts: &RunOptions) -> i32 {
    guarded(|| {
        let cfg = CaseConfig::load(config)?;
        let base = base_dir(config);
        let sink = Sink::new(&cfg, &base, opts)?;
        let want_fields = opts.fields || cfg.output.fields;
        let (report, fields) = run_verify(&cfg, &base, opts.exec, want_fields)?;
        for r in &report.reports {
            sink.log(&format!(
                "{} r={}: energy={} F={} 2*area={} verdict={:?}",
                r.case.name,
                r.resolution,
                real(r.energy),
                opt_real(r.functional_f),
                real(r.two_area),
                r.verdict
            ));
        }
        sink.emit("report.json", &json(&report)?, true)?;
        if sink.dir.is_some() {
            for (res, pts) in &fields {
                sink.emit(&format!("fields_r{res}.csv"), &fields_csv(pts), false)?;
            }
        } else if want_fields {
            sink.log("--fields needs an output directory; skipped");
        }
        Ok(report.exit_code)
    })
}

pub fn cmd_solve(config: &Path, opts: &RunOptions) -> i32 {
    guarded(|| {
        let cfg = CaseConfig::load(config)?;
        let base = base_dir(config);
        let sink = Sink::new(&cfg, &base, opts)?;
        let (summary, files) = run_solve(&cfg, &base, opts.exec)?;
        for r in &summary.runs {
            sink.log(&format!(
                "r={}: residual={} iterations={}",
                r.resolution,
                real(r.solver_residual),
                r.iterations
            ));
        }
        for (name, text) in &files {
            sink.emit(name, text, false)?;
        }
        sink.emit("solve.json", &json(&summary)?, true)?;
        Ok(exit::HOLDS)
    })
}

pub fn cmd_sweep(config: &Path, opts: &RunOptions) -> i32 {
    guarded(|| {
        let cfg = CaseConfig::load(config)?;
        let base = base_dir(config);
        let sink = Sink::new(&cfg, &base, opts)?;
        let (names, rows) = run_sweep(&cfg, &base, opts.exec)?;
        sink.emit("sweep.csv", &sweep_csv(&names, &rows), true)?;
        Ok(sweep_exit_code(&rows))
    })
}

pub fn cmd_convergence(config: &Path, opts: &RunOptions) -> i32 {
    guarded(|| {
        let cfg = CaseConfig::load(config)?;
        let base = base_dir(config);
        let sink = Sink::new(&cfg, &base, opts)?;
        let rep = run_convergence(&cfg, &base, opts.exec)?;
        for q in &rep.quantities {
            sink.log(&format!(
                "{}: fitted order {} ({})",
                q.quantity,
                opt_real(q.fitted_order),
                q.status
            ));
        }
        sink.emit("convergence.csv", &convergence_csv(&rep), false)?;
        sink.emit("convergence.json", &json(&rep)?, true)?;
        Ok(if rep.pass {
            exit::HOLDS
        } else {
            exit::VIOLATED
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> CaseConfig {
        CaseConfig::from_json(text).unwrap()
    }

    #[test]
    fn tuples_cover_product() {
        let mut s = BTreeMap::new();
        s.insert("a".to_string(), vec![1.0, 2.0]);
        s.insert("b".to_string(), vec![0.0, 0.5, 1.0]);
        let t = tuples(&s);
        assert_eq!(t.len(), 6);
        assert_eq!(t[0], vec![1.0, 0.0]);
        assert_eq!(t[5], vec![2.0, 1.0]);
    }

    #[test]
    fn affine_verify() {
        let c = cfg(
            r#"{"case": {"kind": "analytic", "family": "affine_plane", "params": {"p": 2, "q": 1}},
                        "resolutions": [16, 32]}"#,
        );
        let (rep, _) = run_verify(&c, Path::new("."), Exec::Sequential, false).unwrap();
        let last = rep.reports.last().unwrap();
        assert!((last.energy - 5.0).abs() < 1e-12);
        assert!((last.functional_f.unwrap() - 4.0).abs() < 1e-12);
        assert!((last.two_area - 4.0).abs() < 1e-12);
        assert_eq!(rep.exit_code, 0);
    }

    #[test]
    fn sweep_rejects_unknown_parameter() {
        let c = cfg(r#"{"case": {"kind": "analytic", "family": "radial_family"},
                        "resolutions": [8], "sweep": {"delta": [1]}}"#);
        assert!(run_sweep(&c, Path::new("."), Exec::Sequential).is_err());
    }

    #[test]
    fn identity_convergence_is_roundoff() {
        let c = cfg(
            r#"{"case": {"kind": "analytic", "family": "identity_plane"}, "resolutions": [8, 16, 32]}"#,
        );
        let rep = run_convergence(&c, Path::new("."), Exec::Sequential).unwrap();
        assert!(rep.pass);
        assert!(rep.quantities.iter().all(|q| q.status == "roundoff"));
    }
}
