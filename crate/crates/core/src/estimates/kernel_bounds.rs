//! Two-sided Gaussian bounds, volume doubling, the kernel Laplacian bound and
//! its sharpness in `t`.

use serde::Serialize;

use super::*;
use crate::geometry::GeometryKind;

/// Minimal `C₁` with
/// `exp(-d²/((4-δ)t)) / (C₁ V(√t)) <= H(x, y, t) <= C₁ / V(√t)` over the plan.
pub fn li_yau_fit(model: &KernelModel, delta: f64, plan: &SamplingPlan) -> Result<Fitted> {
    let geom = *model.geometry();
    require_nonnegative_ricci(&geom)?;
    check_delta(delta)?;
    let source = model.source();
    let (samples, evals) = eval_kernel(model, plan, |smp, jet| {
        let t = smp.time;
        let vol = geom.ball_volume(&source, t.sqrt())?;
        let upper = jet.u * vol;
        let lower = (-smp.dist * smp.dist / ((4.0 - delta) * t) - jet.u.ln() - vol.ln()).exp();
        let lower_binds = if lower >= upper { 1.0 } else { 0.0 };
        Ok(Eval::with_aux(upper.max(lower), lower_binds))
    })?;
    let mut fitted = fit_report(
        "liyau-fit",
        &geom,
        ConstantName::LiYau,
        format!("heat kernel on {}, delta = {delta}", geom.key()),
        &samples,
        &evals,
        floor_for(is_discrete(model)),
    )?;
    if let Some(i) = reduce(&evals, true)?.index {
        fitted.report.diag("lower_bound_binds", evals[i].aux);
    }
    Ok(fitted)
}

/// Supremum over the plan times of `V(√t) / V(√(t/2))`, with the margin
/// against the nonnegative-curvature bound `2^{n/2}`.
pub fn doubling_fit(geom: &ModelGeometry, source: &Point, plan: &SamplingPlan) -> Result<Fitted> {
    require_nonnegative_ricci(geom)?;
    plan.validate()?;
    let times = plan.times();
    let evals: Vec<Eval> = plan
        .execution
        .try_map(&times, |&t| geom.doubling_constant(source, t).map(Eval::of))?;
    let samples: Vec<Sample> = times.iter().map(|&t| Sample { point: source.clone(), time: t, dist: 0.0 }).collect();
    let mut fitted = fit_report(
        "doubling",
        geom,
        ConstantName::Doubling,
        format!("balls about {:?} on {}", source.coords, geom.key()),
        &samples,
        &evals,
        ANALYTIC_FLOOR,
    )?;
    let bound = 2f64.powf(geom.dim as f64 / 2.0);
    let report = &mut fitted.report;
    report.worst_margin = bound - fitted.fit.value;
    report.pass = report.worst_margin >= report.tolerance_floor;
    report.diag("comparison_bound", bound);
    Ok(fitted)
}

/// Fit of the minimal `C` in `ΔH/H <= (2/t)[C + 4d²/((4-δ)t)]`, and the margin
/// under the assembled constant `n + 4 log(C₁² C₂)`.
pub fn kernel_laplacian_bound(model: &KernelModel, delta: f64, plan: &SamplingPlan) -> Result<Fitted> {
    let geom = *model.geometry();
    require_nonnegative_ricci(&geom)?;
    check_delta(delta)?;
    let c1 = li_yau_fit(model, delta, plan)?.fit.value;
    let c2 = doubling_fit(&geom, &model.source(), plan)?.fit.value;
    let n = geom.dim as f64;
    let assembled = n + 4.0 * (c1 * c1 * c2).ln();
    let discrete = is_discrete(model);
    let (samples, evals) = eval_kernel(model, plan, |smp, jet| {
        let t = smp.time;
        let gauss = 4.0 * smp.dist * smp.dist / ((4.0 - delta) * t);
        let lhs = jet.lap / jet.u;
        let q = 0.5 * t * lhs - gauss;
        let rhs = 2.0 / t * (assembled + gauss);
        Ok(Eval::with_aux(q, margin(rhs, lhs, discrete)))
    })?;
    let mut fitted = fit_report(
        "thm1.3",
        &geom,
        ConstantName::KernelLaplacian,
        format!("heat kernel on {}, delta = {delta}", geom.key()),
        &samples,
        &evals,
        floor_for(discrete),
    )?;
    let worst = evals.iter().filter(|e| !e.skipped).map(|e| e.aux);
    let (mut best, mut idx) = (f64::INFINITY, None);
    for (i, m) in worst.enumerate() {
        if m < best {
            best = m;
            idx = Some(i);
        }
    }
    let kept: Vec<&Sample> = samples.iter().zip(&evals).filter(|(_, e)| !e.skipped).map(|(s, _)| s).collect();
    let report = &mut fitted.report;
    report.worst_margin = best;
    report.argmin = idx.map(|i| Location { coords: kept[i].point.coords.clone(), t: kept[i].time });
    report.pass = best >= report.tolerance_floor;
    report.diag("fitted_C", fitted.fit.value);
    report.diag("assembled_C", assembled);
    report.diag("C1", c1);
    report.diag("C2", c2);
    Ok(fitted)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 4.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta must lie in (0, 4), got {delta}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessScan {
    pub rows: Vec<SharpnessRow>,
    /// `(4 - δ)/32`, the small-`t` limit of the ratio.
    pub limit: f64,
    /// Whether the ratio is monotone along the scanned times.
    pub monotone: bool,
}

impl SharpnessScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lhs,rhs,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.t, r.lhs, r.rhs, r.ratio));
        }
        out
    }
}

/// Ratio of `ΔH/H` to the right side of the kernel Laplacian bound at fixed
/// distance `d` on Euclidean space. The log-derivative ratio is evaluated in
/// closed form, so it stays finite after `H` itself underflows.
pub fn sharpness_scan(geom: &ModelGeometry, d: f64, delta: f64, times: &[f64], c: f64) -> Result<SharpnessScan> {
    if geom.kind != GeometryKind::Euclidean {
        return Err(Error::Hypothesis(format!("sharpness scan runs on Euclidean space, not {}", geom.key())));
    }
    check_delta(delta)?;
    if !(d > 0.0) {
        return Err(Error::Domain(format!("sharpness scan needs d > 0, got {d}")));
    }
    let n = geom.dim as f64;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        let lhs = d * d / (4.0 * t * t) - n / (2.0 * t);
        let rhs = 2.0 / t * (c + 4.0 * d * d / ((4.0 - delta) * t));
        rows.push(SharpnessRow { t, lhs, rhs, ratio: lhs / rhs });
    }
    let inc = rows.windows(2).all(|w| w[1].ratio >= w[0].ratio);
    let dec = rows.windows(2).all(|w| w[1].ratio <= w[0].ratio);
    Ok(SharpnessScan { rows, limit: (4.0 - delta) / 32.0, monotone: inc || dec })
}
