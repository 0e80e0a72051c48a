//! Evolution identities and inequalities checked by finite differences of
//! analytic jets: the Bochner identities for `s|∇u|²` and `(Δu)²`, and the
//! evolution inequality for `F = (C + s|∇u|²) s² (Δu)²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::GeometryKind;

/// Relative step of the spatial differences (times `√τ`).
const SPACE_STEP: f64 = 1e-3;
/// Relative step of the time differences (times `τ`).
const TIME_STEP: f64 = 1e-3;
/// Tolerance on the relative Bochner residuals.
pub const BOCHNER_TOLERANCE: f64 = 1e-6;
/// Margin floor of the normalized `F` residual.
pub const F_EVOLUTION_FLOOR: f64 = -1e-6;

/// Fourth-order central first and second derivatives from samples at
/// `-2h, -h, 0, h, 2h`.
fn five_point(w: [f64; 5], h: f64) -> (f64, f64) {
    let d1 = (w[0] - 8.0 * w[1] + 8.0 * w[3] - w[4]) / (12.0 * h);
    let d2 = (-w[0] + 16.0 * w[1] - 30.0 * w[2] + 16.0 * w[3] - w[4]) / (12.0 * h * h);
    (d1, d2)
}

/// Fourth-order finite-difference Laplacian of `w` at `x`, or `None` where
/// the radial stencil would cross the pole.
fn fd_laplacian<W>(geom: &ModelGeometry, x: &Point, h: f64, w: &W) -> Result<Option<f64>>
where
    W: Fn(&Point) -> Result<f64>,
{
    let w0 = w(x)?;
    if geom.is_radial() {
        let r = x.coords[0];
        let at = |r: f64| geom.point_on_ray(r).and_then(|p| w(&p));
        if r == 0.0 {
            // A smooth radial function is even in r and has Δw(0) = n w''(0).
            let (w1, w2) = (at(h)?, at(2.0 * h)?);
            let (_, d2) = five_point([w2, w1, w0, w1, w2], h);
            return Ok(Some(geom.dim as f64 * d2));
        }
        if r < 4.0 * h {
            return Ok(None);
        }
        let (w_r, w_rr) = five_point([at(r - 2.0 * h)?, at(r - h)?, w0, at(r + h)?, at(r + 2.0 * h)?], h);
        let coef = match geom.kind {
            GeometryKind::SphereS2 => 1.0 / r.tan(),
            GeometryKind::HyperbolicH3 => 2.0 / r.tanh(),
            GeometryKind::WarpedSurface { warp, .. } => warp.df(r) / warp.f(r),
            _ => unreachable!("radial geometries are listed above"),
        };
        return Ok(Some(w_rr + coef * w_r));
    }
    let mut sum = 0.0;
    for i in 0..geom.dim {
        let shifted = |k: f64| -> Result<f64> {
            let mut c = x.coords.clone();
            c[i] += k * h;
            w(&geom.point(&c)?)
        };
        let (_, d2) = five_point([shifted(-2.0)?, shifted(-1.0)?, w0, shifted(1.0)?, shifted(2.0)?], h);
        sum += d2;
    }
    Ok(Some(sum))
}

/// Fourth-order central time derivative of `w(s)` with step `h` (`h <= s/4`).
fn fd_time<W>(s: f64, h: f64, w: &W) -> Result<f64>
where
    W: Fn(f64) -> Result<f64>,
{
    let (d1, _) = five_point([w(s - 2.0 * h)?, w(s - h)?, 0.0, w(s + h)?, w(s + 2.0 * h)?], h);
    Ok(d1)
}

fn steps(sol: &BoundedSolution, s: f64) -> (f64, f64) {
    let tau = s + sol.t0;
    (SPACE_STEP * tau.sqrt(), (TIME_STEP * tau).min(0.25 * s))
}

fn require_analytic(sol: &BoundedSolution, what: &str) -> Result<()> {
    if !sol.kernel.has_third_derivatives() {
        return Err(Error::NotApplicable(format!("{what} needs analytic jets with third derivatives")));
    }
    if sol.geometry().is_radial() && sol.source().coords.iter().any(|&c| c != 0.0) {
        return Err(Error::NotApplicable(format!(
            "{what} on a radial chart needs the source at the base point"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BochnerReport {
    /// Largest relative residual of the `s|∇u|²` identity.
    pub max_gradient_residual: f64,
    /// Largest relative residual of the `(Δu)²` identity.
    pub max_laplacian_residual: f64,
    /// Smallest `hess_sq - lap²/n` seen (nonnegative by Cauchy-Schwarz).
    pub min_trace_gap: f64,
    pub worst: Option<Location>,
    pub samples: usize,
}

impl BochnerReport {
    pub fn passes(&self) -> bool {
        self.max_gradient_residual <= BOCHNER_TOLERANCE
            && self.max_laplacian_residual <= BOCHNER_TOLERANCE
            && self.min_trace_gap >= -1e-12
    }

    pub fn to_report(&self, geom: &ModelGeometry) -> EstimateReport {
        let mut r = EstimateReport::new("bochner", geom, -BOCHNER_TOLERANCE);
        r.worst_margin = -self.max_gradient_residual.max(self.max_laplacian_residual);
        r.argmin = self.worst.clone();
        r.samples = self.samples;
        r.pass = self.passes();
        r.diag("gradient_identity_residual", self.max_gradient_residual);
        r.diag("laplacian_identity_residual", self.max_laplacian_residual);
        r.diag("min_trace_gap", self.min_trace_gap);
        r
    }
}

/// `count` space-time points drawn uniformly from the plan's box (flat
/// charts) or ray segment (radial charts), times uniform in `[t_min, t_max]`.
pub fn random_samples(sol: &BoundedSolution, plan: &SamplingPlan, count: usize, seed: u64) -> Result<Vec<Sample>> {
    plan.validate()?;
    let geom = sol.geometry();
    let source = sol.source();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let s = rng.gen_range(plan.t_min..=plan.t_max);
        let point = if geom.is_radial() {
            let lo = (0.05 * plan.radius).min(0.1);
            geom.point_on_ray(rng.gen_range(lo..=plan.radius))?
        } else {
            let c: Vec<f64> = source.coords.iter().map(|&c| c + rng.gen_range(-plan.radius..=plan.radius)).collect();
            geom.point(&c)?
        };
        let dist = geom.distance(&point, &source)?;
        out.push(Sample { point, time: s, dist });
    }
    Ok(out)
}

/// Residuals of
/// `(∂s - Δ)(s|∇u|²) = -2s|∇∇u|² - 2s Ric(∇u,∇u) + |∇u|²` and
/// `(∂s - Δ)(Δu)² = -2|∇Δu|²` at the given samples, relative to the sum of the
/// magnitudes of the terms.
pub fn bochner_residuals(sol: &BoundedSolution, samples: &[Sample], execution: Execution) -> Result<BochnerReport> {
    require_analytic(sol, "the Bochner check")?;
    let geom = sol.geometry();
    let ric_factor = match geom.kind {
        _ if geom.is_flat() => 0.0,
        GeometryKind::HyperbolicH3 => -2.0,
        _ => {
            return Err(Error::NotApplicable(format!(
                "Bochner residuals need a flat geometry or H³, not {}",
                geom.key()
            )))
        }
    };
    let n = geom.dim as f64;
    let rows = execution.try_map(samples, |smp| -> Result<Option<(f64, f64, f64)>> {
        let s = smp.time;
        let jet = sol.jet(&smp.point, s)?;
        if is_underflow(&jet) {
            return Ok(None);
        }
        let (h, ht) = steps(sol, s);
        let w1 = |p: &Point, s: f64| sol.jet(p, s).map(|j| s * j.grad_sq);
        let w2 = |p: &Point, s: f64| sol.jet(p, s).map(|j| j.lap * j.lap);
        let Some(lap1) = fd_laplacian(geom, &smp.point, h, &|p: &Point| w1(p, s))? else { return Ok(None) };
        let Some(lap2) = fd_laplacian(geom, &smp.point, h, &|p: &Point| w2(p, s))? else { return Ok(None) };
        let dt1 = fd_time(s, ht, &|s| w1(&smp.point, s))?;
        let dt2 = fd_time(s, ht, &|s| w2(&smp.point, s))?;
        let hess = 2.0 * s * jet.hess_sq;
        let ric = 2.0 * s * ric_factor * jet.grad_sq;
        let res1 = dt1 - lap1 + hess + ric - jet.grad_sq;
        let scale1 = dt1.abs() + lap1.abs() + hess.abs() + ric.abs() + jet.grad_sq.abs();
        let gls = 2.0 * jet.grad_lap_sq.expect("analytic jets carry third derivatives");
        let res2 = dt2 - lap2 + gls;
        let scale2 = dt2.abs() + lap2.abs() + gls;
        let rel = |r: f64, sc: f64| if sc > 0.0 { r.abs() / sc } else { 0.0 };
        Ok(Some((rel(res1, scale1), rel(res2, scale2), jet.trace_gap(geom.dim))))
    })?;
    let mut report = BochnerReport {
        max_gradient_residual: 0.0,
        max_laplacian_residual: 0.0,
        min_trace_gap: f64::INFINITY,
        worst: None,
        samples: 0,
    };
    let mut worst = -1.0;
    for (smp, row) in samples.iter().zip(rows) {
        let Some((r1, r2, gap)) = row else { continue };
        if r1.is_nan() || r2.is_nan() {
            return Err(Error::DataIntegrity(format!("non-finite Bochner residual at {:?}", smp.point.coords)));
        }
        report.samples += 1;
        report.max_gradient_residual = report.max_gradient_residual.max(r1);
        report.max_laplacian_residual = report.max_laplacian_residual.max(r2);
        report.min_trace_gap = report.min_trace_gap.min(gap / n.max(1.0));
        if r1.max(r2) > worst {
            worst = r1.max(r2);
            report.worst = Some(Location { coords: smp.point.coords.clone(), t: smp.time });
        }
    }
    Ok(report)
}

/// Inputs of the `F` evolution check. `c_star` defaults to 1% above the
/// measured `sup s|∇u|²`; `c` defaults to the fitted (largest admissible) rate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FEvolutionOptions {
    pub c_star: Option<f64>,
    pub c: Option<f64>,
}

/// Checks `(∂s - Δ)F <= -(c/s)F² + 18n(1+K²)C²/s` with `C = 8 C*`, where
/// `F = (C + s|∇u|²) s² (Δu)²` and both derivatives of `F` are central
/// differences. Fits the largest `c` for which the inequality holds on the
/// plan; the margin is the residual normalized by `18n(1+K²)C²/s`.
pub fn f_evolution_check(sol: &BoundedSolution, plan: &SamplingPlan, opts: FEvolutionOptions) -> Result<Fitted> {
    require_analytic(sol, "the F evolution check")?;
    let geom = sol.geometry();
    let k = geom.ricci_lower_bound()?;
    if k > 0.0 && plan.t_max > 1.0 {
        return Err(Error::Hypothesis(format!(
            "with Ric >= -{k} the evolution inequality needs T <= 1, plan has T = {}",
            plan.t_max
        )));
    }
    let (_, grads) = eval_solution(sol, plan, |smp, jet| Ok(Eval::of(smp.time * jet.grad_sq)))?;
    let measured = reduce(&grads, true)?.value.max(0.0);
    let c_star = match opts.c_star {
        Some(c) if c < measured * (1.0 - 1e-12) => {
            return Err(Error::Precondition(format!(
                "C* = {c} is below the measured sup s|∇u|² = {measured}"
            )))
        }
        Some(c) => c,
        None => measured * 1.01,
    };
    let big_c = 8.0 * c_star;
    let n = geom.dim as f64;
    let source_term = 18.0 * n * (1.0 + k * k) * big_c * big_c;
    let f_at = |p: &Point, s: f64| sol.jet(p, s).map(|j| (big_c + s * j.grad_sq) * s * s * j.lap * j.lap);

    // value: slack at c = 0 normalized by the source term; aux: F²/(s·source),
    // so the normalized residual at rate c is `value - c·aux`.
    let (samples, evals) = eval_solution(sol, plan, |smp, _| {
        let s = smp.time;
        let (h, ht) = steps(sol, s);
        let Some(lap_f) = fd_laplacian(geom, &smp.point, h, &|p: &Point| f_at(p, s))? else {
            return Ok(Eval::skip());
        };
        let dt_f = fd_time(s, ht, &|s| f_at(&smp.point, s))?;
        let f = f_at(&smp.point, s)?;
        let q = source_term / s;
        Ok(Eval::with_aux((q - (dt_f - lap_f)) / q, f * f / (s * q)))
    })?;
    let mut c_fit = f64::INFINITY;
    let mut binding = None;
    for (i, e) in evals.iter().enumerate() {
        if !e.skipped && e.aux > 0.0 && e.value / e.aux < c_fit {
            c_fit = e.value / e.aux;
            binding = Some(i);
        }
    }
    let c_used = opts.c.unwrap_or(c_fit);
    let residuals: Vec<Eval> = evals
        .iter()
        .map(|e| match e {
            e if e.skipped => Eval::skip(),
            e if e.aux > 0.0 => Eval::of(e.value - c_used * e.aux),
            e => Eval::of(e.value),
        })
        .collect();
    let min_slack = reduce(&evals, false)?.value;
    let mut report = EstimateReport::new("lem2.3", geom, F_EVOLUTION_FLOOR);
    apply_margin(&mut report, &samples, &residuals)?;
    report.fitted_constant = Some(c_fit);
    report.pass = report.pass && c_fit > 0.0;
    report.diag("c_fit", c_fit);
    report.diag("c_used", c_used);
    report.diag("c_star", c_star);
    report.diag("measured_sup_s_grad_sq", measured);
    report.diag("calibrated_C(n)", 1.0 / (c_fit * c_star * c_star));
    report.diag("min_slack_at_zero_rate", min_slack);
    let fit = ConstantFit {
        name: ConstantName::EvolutionRate,
        value: c_fit,
        family: format!("shifted solution on {}, t0 = {}, C* = {c_star}", geom.key(), sol.t0),
        binding: location(&samples, binding),
        samples: report.samples,
    };
    Ok(Fitted { report, fit })
}
