//! Margin evaluators and constant fits for the heat-kernel estimates.
//!
//! Every evaluator walks a `SamplingPlan` over a solution, computes the
//! pointwise slack `RHS - LHS` (or the pointwise quantity a constant must
//! dominate) and reduces in sample order, so reports are bit-identical
//! whether the map step ran sequentially or on the rayon pool.

mod bernstein;
mod evolution;
mod hamilton;
mod kernel_bounds;
mod pfunction;
mod plan;

pub use bernstein::{bernstein_laplacian_fit, bernstein_t_stability, kotschwar_gradient_fit};
pub use evolution::{
    bochner_residuals, f_evolution_check, random_samples, BochnerReport, FEvolutionOptions, BOCHNER_TOLERANCE,
    F_EVOLUTION_FLOOR,
};
pub use hamilton::{closed_manifold_laplacian_margin, hamilton_gradient_margin, main_laplacian_margin};
pub use kernel_bounds::{
    doubling_fit, kernel_laplacian_bound, li_yau_fit, sharpness_scan, SharpnessRow, SharpnessScan,
};
pub use pfunction::{p_function_at_start, p_function_check, p_value, Trichotomy};
pub use plan::{kernel_samples, solution_samples, Sample, SamplingPlan};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{ModelGeometry, Point};
use crate::kernels::{BoundedSolution, KernelJet, KernelModel};

/// Margin floor for inequalities evaluated on analytic jets.
pub const ANALYTIC_FLOOR: f64 = -1e-9;
/// Relative margin floor for inequalities evaluated on discrete-field jets.
pub const DISCRETE_RELATIVE_FLOOR: f64 = -1e-4;
/// Samples whose value falls below this are skipped: their squared
/// derivatives would underflow.
pub const UNDERFLOW_FLOOR: f64 = 1e-150;
/// Discrete-field samples below this fraction of the peak value at the same
/// time are skipped: there the solver's absolute error dominates the value.
pub const DISCRETE_VALUE_FLOOR: f64 = 1e-6;
/// Same for the sphere's Legendre series, whose absolute rounding error is
/// a few ulps of the peak value.
pub const SERIES_VALUE_FLOOR: f64 = 1e-8;

/// Fraction of the peak value below which a model's values are not trusted.
pub fn value_floor(model: &KernelModel) -> f64 {
    match model {
        KernelModel::Discrete(_) => DISCRETE_VALUE_FLOOR,
        KernelModel::Analytic { geom, .. } if geom.kind == crate::geometry::GeometryKind::SphereS2 => {
            SERIES_VALUE_FLOOR
        }
        _ => 0.0,
    }
}

/// Where a margin or a fit was attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub coords: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: String,
    pub geometry: String,
    /// Minimum over the plan of the slack; `>= tolerance_floor` means the inequality held.
    pub worst_margin: f64,
    pub argmin: Option<Location>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_constant: Option<f64>,
    pub samples: usize,
    pub tolerance_floor: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
}

impl EstimateReport {
    fn new(id: &str, geom: &ModelGeometry, floor: f64) -> Self {
        Self {
            estimate_id: id.to_string(),
            geometry: geom.key(),
            worst_margin: f64::INFINITY,
            argmin: None,
            fitted_constant: None,
            samples: 0,
            tolerance_floor: floor,
            pass: false,
            diagnostics: BTreeMap::new(),
        }
    }

    fn diag(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_string(), value);
    }
}

/// Constants left implicit by the estimates, fitted as suprema over a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantName {
    /// `C(n, K)` of the closed-manifold Laplacian estimate.
    ClosedLaplacian,
    /// `C(n)` of the whole-manifold gradient bound `t|∇u|² <= C A²(1+KT)`.
    GradientBound,
    /// `C(n)` of the whole-manifold Laplacian bound `t|Δu| <= C A`.
    LaplacianBound,
    /// Two-sided Gaussian kernel bound constant `C₁`.
    LiYau,
    /// Volume doubling constant `C₂` at parabolic scale.
    Doubling,
    /// Cutoff constant `C₃`.
    Cutoff,
    /// Constant `C` of the kernel Laplacian bound.
    KernelLaplacian,
    /// Rate `c` in the evolution inequality of `F`.
    EvolutionRate,
}

impl ConstantName {
    pub fn label(self) -> &'static str {
        match self {
            ConstantName::ClosedLaplacian => "C(n,K)",
            ConstantName::GradientBound => "C(n)[gradient]",
            ConstantName::LaplacianBound => "C(n)[laplacian]",
            ConstantName::LiYau => "C1",
            ConstantName::Doubling => "C2",
            ConstantName::Cutoff => "C3",
            ConstantName::KernelLaplacian => "C[kernel-laplacian]",
            ConstantName::EvolutionRate => "c[F-evolution]",
        }
    }
}

impl fmt::Display for ConstantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub name: ConstantName,
    pub value: f64,
    pub family: String,
    pub binding: Option<Location>,
    pub samples: usize,
}

/// Report plus the fit it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub report: EstimateReport,
    pub fit: ConstantFit,
}

/// Pointwise outcome of an evaluator.
#[derive(Debug, Clone, Copy)]
struct Eval {
    value: f64,
    /// Secondary pointwise quantity (e.g. a ratio) reduced separately.
    aux: f64,
    skipped: bool,
}

impl Eval {
    fn of(value: f64) -> Self {
        Self { value, aux: f64::NAN, skipped: false }
    }

    fn with_aux(value: f64, aux: f64) -> Self {
        Self { value, aux, skipped: false }
    }

    fn skip() -> Self {
        Self { value: f64::NAN, aux: f64::NAN, skipped: true }
    }
}

fn max_aux(evals: &[Eval]) -> f64 {
    evals.iter().filter(|e| !e.skipped && !e.aux.is_nan()).map(|e| e.aux).fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluate `f` on the jets of a bounded solution at every plan sample,
/// skipping samples whose value underflows.
fn eval_solution<F>(sol: &BoundedSolution, plan: &SamplingPlan, f: F) -> Result<(Vec<Sample>, Vec<Eval>)>
where
    F: Fn(&Sample, &KernelJet) -> Result<Eval> + Sync + Send,
{
    let samples = solution_samples(sol, plan)?;
    let floor = value_floor(&sol.kernel);
    let source = sol.source();
    let evals = plan.execution.try_map(&samples, |smp| {
        let jet = sol.jet(&smp.point, smp.time)?;
        if is_underflow(&jet) || (floor > 0.0 && jet.u < floor * sol.value(&source, smp.time)?) {
            Ok(Eval::skip())
        } else {
            f(smp, &jet)
        }
    })?;
    Ok((samples, evals))
}

/// As `eval_solution`, at kernel times.
fn eval_kernel<F>(model: &KernelModel, plan: &SamplingPlan, f: F) -> Result<(Vec<Sample>, Vec<Eval>)>
where
    F: Fn(&Sample, &KernelJet) -> Result<Eval> + Sync + Send,
{
    let samples = kernel_samples(model, plan)?;
    let floor = value_floor(model);
    let source = model.source();
    let evals = plan.execution.try_map(&samples, |smp| {
        let jet = model.jet(&smp.point, smp.time)?;
        if is_underflow(&jet) || (floor > 0.0 && jet.u < floor * model.jet(&source, smp.time)?.u) {
            Ok(Eval::skip())
        } else {
            f(smp, &jet)
        }
    })?;
    Ok((samples, evals))
}

/// Fill the margin fields of `report` from a minimum-type reduction.
fn apply_margin(report: &mut EstimateReport, samples: &[Sample], evals: &[Eval]) -> Result<()> {
    let ext = reduce(evals, false)?;
    report.worst_margin = if ext.index.is_some() { ext.value } else { f64::INFINITY };
    report.argmin = location(samples, ext.index);
    report.samples = ext.evaluated;
    report.pass = report.worst_margin >= report.tolerance_floor;
    if ext.skipped > 0 {
        report.diag("skipped_samples", ext.skipped as f64);
    }
    Ok(())
}

fn is_discrete(model: &KernelModel) -> bool {
    matches!(model, KernelModel::Discrete(_))
}

/// Largest `u/A` tolerated before a solution is declared inconsistent with its bound.
fn bound_slack(discrete: bool) -> f64 {
    if discrete {
        1e-6
    } else {
        1e-12
    }
}

fn check_bound(u: f64, a: f64, discrete: bool, smp: &Sample) -> Result<()> {
    if u > a * (1.0 + bound_slack(discrete)) {
        return Err(Error::DataIntegrity(format!(
            "u = {u} exceeds the bound A = {a} at {:?}, time {}",
            smp.point.coords, smp.time
        )));
    }
    Ok(())
}

/// Ordered reduction: first index attaining the minimum (or maximum).
#[derive(Debug, Clone, Copy)]
struct Extremum {
    value: f64,
    index: Option<usize>,
    evaluated: usize,
    skipped: usize,
}

fn reduce(evals: &[Eval], take_max: bool) -> Result<Extremum> {
    let mut ext = Extremum {
        value: if take_max { f64::NEG_INFINITY } else { f64::INFINITY },
        index: None,
        evaluated: 0,
        skipped: 0,
    };
    for (i, e) in evals.iter().enumerate() {
        if e.skipped {
            ext.skipped += 1;
            continue;
        }
        if e.value.is_nan() {
            return Err(Error::DataIntegrity(format!("non-finite pointwise value at sample {i}")));
        }
        ext.evaluated += 1;
        let better = if take_max { e.value > ext.value } else { e.value < ext.value };
        if better {
            ext.value = e.value;
            ext.index = Some(i);
        }
    }
    Ok(ext)
}

fn location(samples: &[Sample], idx: Option<usize>) -> Option<Location> {
    idx.map(|i| Location { coords: samples[i].point.coords.clone(), t: samples[i].time })
}

fn is_underflow(jet: &KernelJet) -> bool {
    !(jet.u >= UNDERFLOW_FLOOR)
}

/// Margin as reported: absolute for analytic jets, relative to the local
/// size of the inequality for discrete jets.
fn margin(rhs: f64, lhs: f64, discrete: bool) -> f64 {
    if discrete {
        let scale = rhs.abs().max(lhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (rhs - lhs) / scale
        }
    } else {
        rhs - lhs
    }
}

fn floor_for(discrete: bool) -> f64 {
    if discrete {
        DISCRETE_RELATIVE_FLOOR
    } else {
        ANALYTIC_FLOOR
    }
}

fn require_nonnegative_ricci(geom: &ModelGeometry) -> Result<f64> {
    let k = geom.ricci_lower_bound()?;
    if k != 0.0 {
        return Err(Error::Hypothesis(format!(
            "requires nonnegative Ricci curvature; {} has Ric >= -{k}",
            geom.key()
        )));
    }
    Ok(k)
}

/// Fill a report from a maximum-type fit (the constant is the maximum
/// pointwise quantity; its margin under itself is zero at the binding sample).
fn fit_report(
    id: &str,
    geom: &ModelGeometry,
    name: ConstantName,
    family: String,
    samples: &[Sample],
    evals: &[Eval],
    floor: f64,
) -> Result<Fitted> {
    let ext = reduce(evals, true)?;
    let value = if ext.index.is_some() { ext.value } else { 0.0 };
    let mut report = EstimateReport::new(id, geom, floor);
    report.worst_margin = 0.0;
    report.argmin = location(samples, ext.index);
    report.fitted_constant = Some(value);
    report.samples = ext.evaluated;
    report.pass = value.is_finite();
    if ext.skipped > 0 {
        report.diag("skipped_samples", ext.skipped as f64);
    }
    let fit = ConstantFit { name, value, family, binding: report.argmin.clone(), samples: ext.evaluated };
    Ok(Fitted { report, fit })
}
