//! Execution of the run modes.

use nonlocal_bbm::geometry::{dot, Frame, Point};
use nonlocal_bbm::limits::{
    composed_limit_sweep_p, inequality_audit, pointwise_gradient_limit_sweep, seminorm_limit_sweep,
    truncated_gradient_limit_sweep, AuditKind, AuditReport, SweepReport,
};
use nonlocal_bbm::operators::{
    bbm_operator_p, frac_derivative_p, frac_derivative_truncated, gagliardo_seminorm_p,
    riesz_of_gradient,
};
use nonlocal_bbm::quadrature::CutSphereRule;
use nonlocal_bbm::special::{bbm_constant_extended, bbm_constant_p, riesz_constant, sphere_area};
use nonlocal_bbm::{InnerCache, OperatorValue, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{Mode, OperatorKind, Resolved};
use crate::output::{Case, ConstantEntry, EvalEntry, FitEntry, Row, Summary, SUMMARY_VERSION};

/// Everything a run produces, before any file is written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub summary: Summary,
    /// Audit failures plus non-converged values.
    pub problems: usize,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.problems == 0 {
            0
        } else {
            1
        }
    }
}

pub fn config_hash(r: &Resolved, mode: Mode) -> String {
    let canonical = serde_json::json!({ "mode": mode, "config": r.config });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

fn point_vec(dim: usize, x: &Point) -> Vec<f64> {
    x[..dim].to_vec()
}

/// Sphere-rule cross-check of `K_n`, zero for `n = 1`.
fn kn_quadrature_gap(dim: usize, kn: f64) -> Result<f64> {
    if dim == 1 {
        return Ok(0.0);
    }
    let e: Point = [1.0, 0.0, 0.0];
    let rule = CutSphereRule::new(dim, 64)?;
    let v = rule.integrate_abs_pow(&Frame::along(dim, &e), 1.0, |w| dot(&e, w));
    Ok((v - kn).abs())
}

pub fn constants(dims: &[usize], alphas: &[f64], p: f64) -> Result<Vec<ConstantEntry>> {
    let mut out = Vec::new();
    let entry = |case_id: String, value: f64, error_estimate: f64| ConstantEntry {
        case_id,
        value,
        error_estimate,
    };
    for &n in dims {
        let kn = bbm_constant_extended(n)?;
        out.push(entry(
            format!("bbm_constant/n{n}"),
            kn,
            kn_quadrature_gap(n, kn)?,
        ));
        if n >= 2 && p != 1.0 {
            out.push(entry(
                format!("bbm_constant_p/n{n}/p{p}"),
                bbm_constant_p(n, p)?,
                0.0,
            ));
        }
        out.push(entry(format!("sphere_area/n{n}"), sphere_area(n), 0.0));
        let mut riesz_alphas: Vec<f64> = alphas.iter().copied().filter(|&a| a < n as f64).collect();
        if n >= 2 && !riesz_alphas.contains(&1.0) {
            riesz_alphas.push(1.0);
        }
        for a in riesz_alphas {
            out.push(entry(
                format!("riesz_constant/n{n}/alpha{a}"),
                riesz_constant(n, a)?,
                0.0,
            ));
        }
    }
    Ok(out)
}

pub fn constant_rows(entries: &[ConstantEntry]) -> Vec<Row> {
    entries
        .iter()
        .map(|e| Row {
            case_id: e.case_id.clone(),
            value: Some(e.value),
            error_estimate: Some(e.error_estimate),
            ..Row::default()
        })
        .collect()
}

fn case_prefix(r: &Resolved, name: &str) -> String {
    format!("{name}/{}/n{}", r.field_name, r.config.dimension)
}

fn eval(r: &Resolved) -> Result<Vec<EvalEntry>> {
    let f = r.field.as_ref().expect("checked by check_mode");
    let dim = r.config.dimension;
    let op = r.config.operator;
    let p = r.config.p;
    let spec = &r.spec;
    let cache = InnerCache::new();
    let alphas: Vec<Option<f64>> = match op {
        OperatorKind::RieszOfGradient => vec![None],
        _ => r
            .config
            .schedule
            .values()
            .iter()
            .map(|&a| Some(a))
            .collect(),
    };
    let points: Vec<Option<&Point>> = if op.uses_points() {
        r.points.iter().map(Some).collect()
    } else {
        vec![None]
    };
    let jobs: Vec<(Option<f64>, Option<&Point>)> = points
        .iter()
        .flat_map(|x| alphas.iter().map(move |a| (*a, *x)))
        .collect();
    let case_id = case_prefix(r, op.as_str());
    jobs.par_iter()
        .map(|&(alpha, x)| {
            let value: OperatorValue = match (op, alpha, x) {
                (OperatorKind::FracDerivative, Some(a), Some(x)) => {
                    frac_derivative_p(f, a, p, x, spec)?
                }
                (OperatorKind::Truncated, Some(a), Some(x)) => {
                    frac_derivative_truncated(f, a, x, r.config.radius.expect("checked"), spec)?
                }
                (OperatorKind::Composed, Some(a), Some(x)) => {
                    bbm_operator_p(f, a, p, x, spec, &cache)?.value
                }
                (OperatorKind::Seminorm, Some(a), None) => gagliardo_seminorm_p(f, a, p, spec)?,
                (OperatorKind::RieszOfGradient, None, Some(x)) => riesz_of_gradient(f, x, spec)?,
                _ => unreachable!("job shape follows the operator"),
            };
            Ok(EvalEntry {
                case_id: case_id.clone(),
                alpha,
                point: x.map(|x| point_vec(dim, x)),
                value: value.value,
                error_estimate: value.error_estimate,
                converged: value.is_converged(spec.target_rel_error),
            })
        })
        .collect()
}

fn eval_rows(entries: &[EvalEntry]) -> Vec<Row> {
    entries
        .iter()
        .map(|e| Row {
            case_id: e.case_id.clone(),
            alpha: e.alpha,
            point: e.point.clone(),
            value: Some(e.value),
            error_estimate: Some(e.error_estimate),
            pass: Some(e.converged),
            ..Row::default()
        })
        .collect()
}

fn sweeps(r: &Resolved) -> Result<Vec<SweepReport>> {
    let f = r.field.as_ref().expect("checked by check_mode");
    let (s, spec) = (&r.config.schedule, &r.spec);
    let cache = InnerCache::new();
    match r.config.operator {
        OperatorKind::Seminorm => Ok(vec![seminorm_limit_sweep(f, s, spec)?]),
        op => r
            .points
            .iter()
            .map(|x| match op {
                OperatorKind::FracDerivative => pointwise_gradient_limit_sweep(f, x, s, spec),
                OperatorKind::Truncated => {
                    truncated_gradient_limit_sweep(f, x, r.config.radius.expect("checked"), s, spec)
                }
                OperatorKind::Composed => composed_limit_sweep_p(f, x, r.config.p, s, spec, &cache),
                _ => unreachable!("rejected by check_mode"),
            })
            .collect(),
    }
}

fn sweep_rows(r: &Resolved, report: &SweepReport) -> Vec<Row> {
    let case_id = case_prefix(r, &report.case_id);
    report
        .rows
        .iter()
        .map(|row| Row {
            case_id: case_id.clone(),
            alpha: Some(row.alpha),
            point: report.point.clone(),
            value: Some(row.value),
            error_estimate: Some(row.error_estimate),
            target: Some(row.target),
            abs_error: Some(row.abs_error),
            rel_error: row.rel_error,
            pass: Some(row.converged),
        })
        .collect()
}

fn audit_rows(r: &Resolved, report: &AuditReport) -> Vec<Row> {
    report
        .rows
        .iter()
        .map(|row| {
            let case_id = case_prefix(r, &format!("audit_{}", row.kind.as_str()));
            if row.kind.is_explicit() {
                Row {
                    case_id,
                    alpha: Some(row.alpha),
                    point: row.point.clone(),
                    value: Some(row.lhs),
                    error_estimate: Some(row.epsilon_quad),
                    target: Some(row.rhs),
                    pass: row.pass,
                    ..Row::default()
                }
            } else {
                Row {
                    case_id,
                    alpha: Some(row.alpha),
                    point: row.point.clone(),
                    value: row.ratio,
                    ..Row::default()
                }
            }
        })
        .collect()
}

fn audit(r: &Resolved) -> Result<AuditReport> {
    let f = r.field.as_ref().expect("checked by check_mode");
    let mut report = inequality_audit(
        f,
        &r.config.schedule,
        &r.points,
        &r.spec,
        r.config.audit,
        &InnerCache::new(),
    )?;
    report.case_id = case_prefix(r, "audit");
    Ok(report)
}

/// Runs `mode` on a resolved configuration in the current rayon pool.
pub fn execute(r: &Resolved, mode: Mode) -> Result<RunOutput> {
    let dim = r.config.dimension;
    let mut rows = Vec::new();
    let mut cases = Vec::new();
    let mut fits = Vec::new();
    let mut audits = Vec::new();
    let mut problems = 0;

    if matches!(mode, Mode::Constants | Mode::Report) {
        let entries = constants(&[dim], r.config.schedule.values(), r.config.p)?;
        rows.extend(constant_rows(&entries));
        cases.push(Case::Constants { entries });
    }
    if mode == Mode::Eval {
        let entries = eval(r)?;
        problems += entries.iter().filter(|e| !e.converged).count();
        rows.extend(eval_rows(&entries));
        cases.push(Case::Eval { entries });
    }
    if matches!(mode, Mode::Sweep | Mode::Report) {
        for report in sweeps(r)? {
            problems += report.rows.iter().filter(|row| !row.converged).count();
            rows.extend(sweep_rows(r, &report));
            if let Some(fit) = report.fit {
                fits.push(FitEntry {
                    case_id: case_prefix(r, &report.case_id),
                    point: report.point.clone(),
                    fit,
                });
            }
            cases.push(Case::Sweep(report));
        }
    }
    if matches!(mode, Mode::Audit | Mode::Report) {
        let report = audit(r)?;
        problems += report.failures() + report.rows.iter().filter(|row| !row.converged).count();
        rows.extend(audit_rows(r, &report));
        audits.push(report);
    }
    Ok(RunOutput {
        rows,
        summary: Summary {
            version: SUMMARY_VERSION,
            config_hash: config_hash(r, mode),
            cases,
            fits,
            audits,
        },
        problems,
    })
}

/// Kinds that carry an explicit constant, for the console summary.
pub fn explicit_failures(summary: &Summary) -> Vec<(AuditKind, f64)> {
    summary
        .audits
        .iter()
        .flat_map(|a| a.rows.iter())
        .filter(|r| r.pass == Some(false))
        .map(|r| (r.kind, r.alpha))
        .collect()
}
