//! Sweeps along `alpha -> 1-`, comparison with the gradient limits, rate fits
//! and the explicit-constant inequality audits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{w11_norms, Smoothness, TestField};
use crate::geometry::{norm, Point};
use crate::operators::{
    bbm_operator, bbm_operator_p, frac_derivative, frac_derivative_truncated, gagliardo_seminorm,
    riesz_of_gradient, InnerCache,
};
use crate::quadrature::{OperatorValue, QuadratureSpec};
use crate::special::{bbm_constant, bbm_constant_extended, bbm_constant_p, sphere_area};

/// Targets below this magnitude get no relative error.
pub const TINY: f64 = 1e-14;

/// Strictly increasing orders in `(0, 1)` ending at or above `0.99`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlphaSchedule {
    values: Vec<f64>,
}

impl AlphaSchedule {
    pub const DEFAULT: [f64; 7] = [0.5, 0.7, 0.9, 0.95, 0.99, 0.995, 0.999];

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("alpha schedule is empty".into()));
        }
        for (i, &a) in values.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Domain(format!(
                    "schedule[{i}] = {a} is outside (0, 1)"
                )));
            }
            if i > 0 && !(a > values[i - 1]) {
                return Err(Error::Domain(format!(
                    "schedule[{i}] = {a} is not strictly increasing"
                )));
            }
        }
        let last = values[values.len() - 1];
        if last < 0.99 {
            return Err(Error::Domain(format!(
                "schedule must reach 0.99, last value is {last}"
            )));
        }
        Ok(AlphaSchedule { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether every order lies in `[1/2, 1)`, as the composed operator requires.
    pub fn is_composed_compatible(&self) -> bool {
        self.values[0] >= 0.5
    }
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule {
            values: Self::DEFAULT.to_vec(),
        }
    }
}

impl TryFrom<Vec<f64>> for AlphaSchedule {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        AlphaSchedule::new(values)
    }
}

impl From<AlphaSchedule> for Vec<f64> {
    fn from(s: AlphaSchedule) -> Self {
        s.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub target: f64,
    pub abs_error: f64,
    /// `None` when `|target| <= TINY`.
    pub rel_error: Option<f64>,
    pub converged: bool,
    /// The quadrature error estimate exceeds a quarter of `|value - target|`.
    pub quadrature_dominated: bool,
    /// Which nested level failed to converge, if any.
    pub failed_level: Option<String>,
}

impl SweepRow {
    pub fn new(alpha: f64, value: OperatorValue, target: f64, target_rel_error: f64) -> Self {
        let abs_error = (value.value - target).abs();
        SweepRow {
            alpha,
            value: value.value,
            error_estimate: value.error_estimate,
            target,
            abs_error,
            rel_error: (target.abs() > TINY).then(|| abs_error / target.abs()),
            converged: value.is_converged(target_rel_error),
            quadrature_dominated: value.error_estimate > 0.25 * abs_error,
            failed_level: None,
        }
    }

    /// Relative error when defined, absolute error otherwise.
    pub fn error(&self) -> f64 {
        self.rel_error.unwrap_or(self.abs_error)
    }
}

/// Least-squares fit `|error| ~ constant (1 - alpha)^slope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub constant: f64,
    /// `+inf` when every fitted error is exactly zero; written as `"inf"` in JSON.
    #[serde(with = "extended_float")]
    pub slope: f64,
    pub rows: usize,
}

mod extended_float {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(D::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

impl RateFit {
    pub fn is_degenerate(&self) -> bool {
        self.slope == f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub case_id: String,
    pub target_description: String,
    pub point: Option<Vec<f64>>,
    pub target_error_estimate: f64,
    pub rows: Vec<SweepRow>,
    pub fit: Option<RateFit>,
}

impl SweepReport {
    fn assemble(
        case_id: &str,
        target_description: String,
        point: Option<Vec<f64>>,
        target_error_estimate: f64,
        rows: Vec<SweepRow>,
    ) -> Self {
        let mut report = SweepReport {
            case_id: case_id.to_string(),
            target_description,
            point,
            target_error_estimate,
            rows,
            fit: None,
        };
        report.fit = rate_fit(&report, DEFAULT_FIT_ROWS).ok();
        report
    }

    pub fn last(&self) -> Option<&SweepRow> {
        self.rows.last()
    }

    pub fn row_at(&self, alpha: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.alpha == alpha)
    }

    /// The last `k` errors form a non-increasing sequence, each step allowed
    /// to rise by the quadrature error estimates of the two rows involved.
    pub fn tail_non_increasing(&self, k: usize) -> bool {
        let n = self.rows.len();
        if n < 2 || k < 2 {
            return true;
        }
        let tail = &self.rows[n.saturating_sub(k)..];
        tail.windows(2).all(|w| {
            let scale = w[1].target.abs().max(TINY);
            let slack = if w[1].rel_error.is_some() {
                (w[0].error_estimate + w[1].error_estimate) / scale
            } else {
                w[0].error_estimate + w[1].error_estimate
            };
            w[1].error() <= w[0].error() + slack
        })
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

pub const DEFAULT_FIT_ROWS: usize = 4;

/// Fit `log |error| = log C + slope log(1 - alpha)` over the last `tail_rows` rows.
pub fn rate_fit(report: &SweepReport, tail_rows: usize) -> Result<RateFit> {
    let n = report.rows.len();
    let k = tail_rows.min(n);
    if k < 3 {
        return Err(Error::Fit(format!("need at least 3 rows, have {k}")));
    }
    let tail = &report.rows[n - k..];
    if tail.iter().all(|r| r.abs_error == 0.0) {
        return Ok(RateFit {
            constant: 0.0,
            slope: f64::INFINITY,
            rows: k,
        });
    }
    if tail
        .iter()
        .any(|r| !(r.abs_error > 0.0) || !r.abs_error.is_finite())
    {
        return Err(Error::Fit("errors must be positive and finite".into()));
    }
    let xs: Vec<f64> = tail.iter().map(|r| (1.0 - r.alpha).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.abs_error.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("alpha values coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(RateFit {
        constant: (my - slope * mx).exp(),
        slope,
        rows: k,
    })
}

/// Resolution used for limit targets: never coarser than the default preset.
pub fn target_spec(spec: &QuadratureSpec, dim: usize) -> QuadratureSpec {
    let d = QuadratureSpec::default_for(dim);
    QuadratureSpec {
        inner_shells: spec.inner_shells.max(d.inner_shells),
        outer_shells: spec.outer_shells.max(d.outer_shells),
        gauss_order: spec.gauss_order.max(d.gauss_order),
        sphere_order: spec.sphere_order.max(d.sphere_order),
        ..*spec
    }
}

fn kn(dim: usize) -> Result<f64> {
    if dim >= 2 {
        bbm_constant(dim)
    } else {
        bbm_constant_extended(dim)
    }
}

fn point_vec(f: &TestField, x: &Point) -> Vec<f64> {
    x[..f.dim()].to_vec()
}

fn sweep_rows<F>(
    schedule: &AlphaSchedule,
    target: f64,
    spec: &QuadratureSpec,
    eval: F,
) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<(OperatorValue, Option<&'static str>)> + Sync + Send,
{
    let out: Vec<Result<SweepRow>> = schedule
        .values()
        .par_iter()
        .map(|&a| {
            let (v, failed) = eval(a)?;
            let mut row = SweepRow::new(a, v, target, spec.target_rel_error);
            if let Some(level) = failed {
                row.failed_level = Some(level.to_string());
                row.converged = false;
            }
            Ok(row)
        })
        .collect();
    out.into_iter().collect()
}

/// Rows of `(1 - alpha) D^alpha f(x)` against `K_n |grad f(x)|`.
pub fn pointwise_gradient_limit_sweep(
    f: &TestField,
    x: &Point,
    schedule: &AlphaSchedule,
    spec: &QuadratureSpec,
) -> Result<SweepReport> {
    if f.smoothness() < Smoothness::C2 {
        return Err(Error::Domain("the pointwise limit needs a C2 field".into()));
    }
    let target = kn(f.dim())? * norm(&f.grad(x));
    let rows = sweep_rows(schedule, target, spec, |a| {
        Ok((frac_derivative(f, a, x, spec)?.scaled(1.0 - a), None))
    })?;
    Ok(SweepReport::assemble(
        "pointwise_gradient",
        "K_n |grad f(x)|".into(),
        Some(point_vec(f, x)),
        0.0,
        rows,
    ))
}

/// Rows of `(1 - alpha) int_{B(x, r)} ...` against `K_n |grad f(x)|`.
pub fn truncated_gradient_limit_sweep(
    f: &TestField,
    x: &Point,
    radius: f64,
    schedule: &AlphaSchedule,
    spec: &QuadratureSpec,
) -> Result<SweepReport> {
    let target = kn(f.dim())? * norm(&f.grad(x));
    let rows = sweep_rows(schedule, target, spec, |a| {
        Ok((
            frac_derivative_truncated(f, a, x, radius, spec)?.scaled(1.0 - a),
            None,
        ))
    })?;
    Ok(SweepReport::assemble(
        "truncated_gradient",
        format!("K_n |grad f(x)| (ball radius {radius})"),
        Some(point_vec(f, x)),
        0.0,
        rows,
    ))
}

fn check_composed_schedule(schedule: &AlphaSchedule) -> Result<()> {
    if !schedule.is_composed_compatible() {
        return Err(Error::Domain(
            "composed sweeps need every alpha in [1/2, 1)".into(),
        ));
    }
    Ok(())
}

/// Rows of `(1 - alpha) I_alpha(D^alpha f)(x)` against `K_n I_1(|grad f|)(x)`.
pub fn composed_limit_sweep(
    f: &TestField,
    x: &Point,
    schedule: &AlphaSchedule,
    spec: &QuadratureSpec,
    cache: &InnerCache,
) -> Result<SweepReport> {
    composed_sweep(f, x, 1.0, schedule, spec, cache)
}

/// Rows of `(1 - alpha)^{1/p} I_alpha(D^alpha_p f)(x)` against `K_{n,p} I_1(|grad f|)(x)`.
pub fn composed_limit_sweep_p(
    f: &TestField,
    x: &Point,
    p: f64,
    schedule: &AlphaSchedule,
    spec: &QuadratureSpec,
    cache: &InnerCache,
) -> Result<SweepReport> {
    composed_sweep(f, x, p, schedule, spec, cache)
}

fn composed_sweep(
    f: &TestField,
    x: &Point,
    p: f64,
    schedule: &AlphaSchedule,
    spec: &QuadratureSpec,
    cache: &InnerCache,
) -> Result<SweepReport> {
    check_composed_schedule(schedule)?;
    let constant = if p == 1.0 {
        bbm_constant(f.dim())?
    } else {
        bbm_constant_p(f.dim(), p)?
    };
    let potential = riesz_of_gradient(f, x, &target_spec(spec, f.dim()))?;
    let target = constant * potential.value;
    let rows = sweep_rows(schedule, target, spec, |a| {
        let v = if p == 1.0 {
            bbm_operator(f, a, x, spec, cache)?
        } else {
            bbm_operator_p(f, a, p, x, spec, cache)?
        };
        Ok((v.value, v.failed_level(spec.target_rel_error)))
    })?;
    let (id, desc) = if p == 1.0 {
        ("composed".to_string(), "K_n I_1(|grad f|)(x)".to_string())
    } else {
        (
            format!("composed_p{p}"),
            format!("K_(n,p) I_1(|grad f|)(x), p = {p}"),
        )
    };
    Ok(SweepReport::assemble(
        &id,
        desc,
        Some(point_vec(f, x)),
        constant * potential.error_estimate,
        rows,
    ))
}

/// Rows of `(1 - alpha) [f]_{W^{alpha, 1}}` against `K_n ||grad f||_1`.
pub fn seminorm_limit_sweep(
    f: &TestField,
    schedule: &AlphaSchedule,
    spec: &QuadratureSpec,
) -> Result<SweepReport> {
    let norms = w11_norms(f, &target_spec(spec, f.dim()))?;
    let k = kn(f.dim())?;
    let target = k * norms.grad_l1.value;
    let rows = sweep_rows(schedule, target, spec, |a| {
        Ok((gagliardo_seminorm(f, a, spec)?.scaled(1.0 - a), None))
    })?;
    Ok(SweepReport::assemble(
        "seminorm",
        "K_n ||grad f||_1".into(),
        None,
        k * norms.grad_l1.error_estimate,
        rows,
    ))
}

/// Which audits to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditParts {
    pub lemma_bound: bool,
    pub seminorm_bound: bool,
    pub subrepresentation: bool,
    pub potential_domination: bool,
}

impl Default for AuditParts {
    fn default() -> Self {
        AuditParts {
            lemma_bound: true,
            seminorm_bound: true,
            subrepresentation: true,
            potential_domination: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    /// `(1 - alpha) D^alpha f(x) <= sigma (||grad f||_inf + 2 ||f||_inf)`.
    LemmaBound,
    /// `alpha (1 - alpha) [f] <= sigma (alpha ||grad f||_1 + 2 (1 - alpha) ||f||_1)`.
    SeminormBound,
    /// `alpha (1 - alpha) [f] <= 2 sigma ||f||_{W^{1,1}}`.
    SeminormSobolevBound,
    /// `|f(x)| / ((1 - alpha) I_alpha(D^alpha f)(x))`, reported only.
    SubrepresentationRatio,
    /// `(1 - alpha) I_alpha(D^alpha f)(x) / I_1(|grad f|)(x)`, reported only.
    PotentialDominationRatio,
}

impl AuditKind {
    pub fn is_explicit(&self) -> bool {
        matches!(
            self,
            AuditKind::LemmaBound | AuditKind::SeminormBound | AuditKind::SeminormSobolevBound
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AuditKind::LemmaBound => "lemma_bound",
            AuditKind::SeminormBound => "seminorm_bound",
            AuditKind::SeminormSobolevBound => "seminorm_sobolev_bound",
            AuditKind::SubrepresentationRatio => "subrepresentation_ratio",
            AuditKind::PotentialDominationRatio => "potential_domination_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub kind: AuditKind,
    pub alpha: f64,
    pub point: Option<Vec<f64>>,
    /// Left side of a bound, or numerator of a ratio.
    pub lhs: f64,
    /// Right side of a bound, or denominator of a ratio.
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub epsilon_quad: f64,
    /// `Some` for explicit-constant rows.
    pub pass: Option<bool>,
    pub converged: bool,
    /// Denominator below `TINY`; excluded from suprema.
    pub indeterminate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub case_id: String,
    pub rows: Vec<AuditRow>,
    pub subrepresentation_sup: Option<f64>,
    pub domination_sup: Option<f64>,
    /// Domination ratio at the largest alpha for each point, to compare with `K_n`.
    pub domination_final: Vec<f64>,
}

impl AuditReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.pass == Some(false)).count()
    }

    pub fn all_pass(&self) -> bool {
        self.failures() == 0
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

fn ratio_row(
    kind: AuditKind,
    alpha: f64,
    point: Vec<f64>,
    num: f64,
    den: f64,
    converged: bool,
) -> AuditRow {
    let indeterminate = den.abs() < TINY;
    AuditRow {
        kind,
        alpha,
        point: Some(point),
        lhs: num,
        rhs: den,
        ratio: (!indeterminate).then(|| num / den),
        epsilon_quad: 0.0,
        pass: None,
        converged,
        indeterminate,
    }
}

fn sup(rows: &[AuditRow], kind: AuditKind) -> Option<f64> {
    rows.iter()
        .filter(|r| r.kind == kind && !r.indeterminate)
        .filter_map(|r| r.ratio)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })
}

/// Explicit-constant checks and implicit-constant ratios over a schedule and
/// a set of sample points.
pub fn inequality_audit(
    f: &TestField,
    schedule: &AlphaSchedule,
    points: &[Point],
    spec: &QuadratureSpec,
    parts: AuditParts,
    cache: &InnerCache,
) -> Result<AuditReport> {
    let dim = f.dim();
    let sigma = sphere_area(dim);
    let tol = spec.target_rel_error;
    let mut rows = Vec::new();

    if parts.lemma_bound {
        let bound = sigma * (f.grad_sup_norm() + 2.0 * f.sup_norm());
        let jobs: Vec<(f64, Point)> = schedule
            .values()
            .iter()
            .flat_map(|&a| points.iter().map(move |x| (a, *x)))
            .collect();
        let out: Vec<Result<AuditRow>> = jobs
            .par_iter()
            .map(|(a, x)| {
                let v = frac_derivative(f, *a, x, spec)?.scaled(1.0 - a);
                let eps = 3.0 * v.error_estimate;
                Ok(AuditRow {
                    kind: AuditKind::LemmaBound,
                    alpha: *a,
                    point: Some(point_vec(f, x)),
                    lhs: v.value,
                    rhs: bound,
                    ratio: (bound > TINY).then(|| v.value / bound),
                    epsilon_quad: eps,
                    pass: Some(v.value <= bound + eps),
                    converged: v.is_converged(tol),
                    indeterminate: false,
                })
            })
            .collect();
        for r in out {
            rows.push(r?);
        }
    }

    if parts.seminorm_bound {
        let norms = w11_norms(f, &target_spec(spec, dim))?;
        let out: Vec<Result<[AuditRow; 2]>> = schedule
            .values()
            .par_iter()
            .map(|&a| {
                let s = gagliardo_seminorm(f, a, spec)?.scaled(a * (1.0 - a));
                let b1 = sigma * (a * norms.grad_l1.value + 2.0 * (1.0 - a) * norms.l1.value);
                let e1 = 3.0
                    * (s.error_estimate
                        + sigma
                            * (a * norms.grad_l1.error_estimate
                                + 2.0 * (1.0 - a) * norms.l1.error_estimate));
                let b2 = 2.0 * sigma * norms.total();
                let e2 = 3.0 * (s.error_estimate + 2.0 * sigma * norms.error_estimate());
                let row = |kind, bound: f64, eps: f64| AuditRow {
                    kind,
                    alpha: a,
                    point: None,
                    lhs: s.value,
                    rhs: bound,
                    ratio: (bound > TINY).then(|| s.value / bound),
                    epsilon_quad: eps,
                    pass: Some(s.value <= bound + eps),
                    converged: s.is_converged(tol),
                    indeterminate: false,
                };
                Ok([
                    row(AuditKind::SeminormBound, b1, e1),
                    row(AuditKind::SeminormSobolevBound, b2, e2),
                ])
            })
            .collect();
        for pair in out {
            rows.extend(pair?);
        }
    }

    let composed = dim >= 2 && (parts.subrepresentation || parts.potential_domination);
    let mut domination_final = Vec::new();
    if composed {
        check_composed_schedule(schedule)?;
        let tspec = target_spec(spec, dim);
        for x in points {
            let potential = riesz_of_gradient(f, x, &tspec)?;
            let values: Vec<Result<(f64, crate::operators::ComposedValue)>> = schedule
                .values()
                .par_iter()
                .map(|&a| Ok((a, bbm_operator(f, a, x, spec, cache)?)))
                .collect();
            let mut last_ratio = None;
            for v in values {
                let (a, c) = v?;
                let converged = c.failed_level(tol).is_none();
                if parts.subrepresentation {
                    rows.push(ratio_row(
                        AuditKind::SubrepresentationRatio,
                        a,
                        point_vec(f, x),
                        f.eval(x).abs(),
                        c.value.value,
                        converged,
                    ));
                }
                if parts.potential_domination {
                    let row = ratio_row(
                        AuditKind::PotentialDominationRatio,
                        a,
                        point_vec(f, x),
                        c.value.value,
                        potential.value,
                        converged,
                    );
                    last_ratio = row.ratio;
                    rows.push(row);
                }
            }
            if let Some(r) = last_ratio {
                domination_final.push(r);
            }
        }
    }

    Ok(AuditReport {
        case_id: "audit".into(),
        subrepresentation_sup: sup(&rows, AuditKind::SubrepresentationRatio),
        domination_sup: sup(&rows, AuditKind::PotentialDominationRatio),
        domination_final,
        rows,
    })
}
