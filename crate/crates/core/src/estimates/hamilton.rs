//! Gradient and Laplacian estimates for bounded positive solutions.

use super::*;

/// `s|∇u|²/u² <= (1 + 2Ks) log(A/u)`.
pub fn hamilton_gradient_margin(sol: &BoundedSolution, plan: &SamplingPlan) -> Result<EstimateReport> {
    let geom = sol.geometry();
    let k = geom.ricci_lower_bound()?;
    let a = sol.sup_bound;
    let discrete = is_discrete(&sol.kernel);
    let (samples, evals) = eval_solution(sol, plan, |smp, jet| {
        check_bound(jet.u, a, discrete, smp)?;
        let s = smp.time;
        let rhs = (1.0 + 2.0 * k * s) * (a / jet.u).ln();
        let lhs = s * jet.grad_sq / (jet.u * jet.u);
        let ratio = if rhs > 0.0 { lhs / rhs } else { f64::NAN };
        Ok(Eval::with_aux(margin(rhs, lhs, discrete), ratio))
    })?;
    let mut report = EstimateReport::new("eq1.1", geom, floor_for(discrete));
    apply_margin(&mut report, &samples, &evals)?;
    report.diag("max_lhs_over_rhs", max_aux(&evals));
    report.diag("ricci_k", k);
    Ok(report)
}

/// `sΔu/u <= n + 4 log(A/u)`; requires nonnegative Ricci curvature.
pub fn main_laplacian_margin(sol: &BoundedSolution, plan: &SamplingPlan) -> Result<EstimateReport> {
    let geom = sol.geometry();
    require_nonnegative_ricci(geom)?;
    let n = geom.dim as f64;
    let a = sol.sup_bound;
    let discrete = is_discrete(&sol.kernel);
    let (samples, evals) = eval_solution(sol, plan, |smp, jet| {
        check_bound(jet.u, a, discrete, smp)?;
        let rhs = n + 4.0 * (a / jet.u).ln();
        let lhs = smp.time * jet.lap / jet.u;
        Ok(Eval::of(margin(rhs, lhs, discrete)))
    })?;
    let mut report = EstimateReport::new("eq1.4", geom, floor_for(discrete));
    apply_margin(&mut report, &samples, &evals)?;
    Ok(report)
}

/// Fit of `C` in `sΔu/u <= C (1 + log(A/u))` on a closed geometry, with the
/// `n + 4 log(A/u)` form cross-checked as the margin.
pub fn closed_manifold_laplacian_margin(sol: &BoundedSolution, plan: &SamplingPlan) -> Result<Fitted> {
    let geom = sol.geometry();
    if !geom.is_compact() {
        return Err(Error::Hypothesis(format!("requires a closed manifold; {} is noncompact", geom.key())));
    }
    let k = geom.ricci_lower_bound()?;
    let n = geom.dim as f64;
    let a = sol.sup_bound;
    let (samples, evals) = eval_solution(sol, plan, |smp, jet| {
        check_bound(jet.u, a, false, smp)?;
        let log = (a / jet.u).ln();
        let lhs = smp.time * jet.lap / jet.u;
        // A constant solution imposes nothing: any C >= 0 works.
        Ok(Eval::with_aux((lhs / (1.0 + log)).max(0.0), n + 4.0 * log - lhs))
    })?;
    let mut fitted = fit_report(
        "eq1.2-fit",
        geom,
        ConstantName::ClosedLaplacian,
        format!("shifted solution on {}, t0 = {}", geom.key(), sol.t0),
        &samples,
        &evals,
        ANALYTIC_FLOOR,
    )?;
    let cross = evals.iter().filter(|e| !e.skipped).map(|e| e.aux).fold(f64::INFINITY, f64::min);
    let admissible = n.max(4.0);
    let report = &mut fitted.report;
    report.worst_margin = cross;
    report.diag("laplacian_form_margin", cross);
    report.diag("admissible_bound", admissible);
    report.diag("ricci_k", k);
    report.pass = cross >= ANALYTIC_FLOOR && fitted.fit.value <= admissible + 1e-9;
    Ok(fitted)
}
