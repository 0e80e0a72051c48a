//! The P-function `P = s(Δu_ε + |∇u_ε|²/u_ε) - u_ε(n + 4 log(A/u_ε))`,
//! `u_ε = u + ε`, whose nonpositivity is the Laplacian estimate.

use serde::{Deserialize, Serialize};

use super::*;
use crate::geometry::GeometryKind;
use crate::quad::trapezoid_weights;

/// Three-way split of a sample by the size of `Δu_ε` against `g = |∇u_ε|²/u_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trichotomy {
    /// `Δu_ε <= g`
    GradientDominant,
    /// `g < Δu_ε <= 3g`
    Intermediate,
    /// `Δu_ε > 3g`
    LaplacianDominant,
}

impl Trichotomy {
    pub fn classify(lap: f64, g: f64) -> Option<Self> {
        if lap.is_nan() || g.is_nan() {
            None
        } else if lap <= g {
            Some(Trichotomy::GradientDominant)
        } else if lap <= 3.0 * g {
            Some(Trichotomy::Intermediate)
        } else {
            Some(Trichotomy::LaplacianDominant)
        }
    }
}

/// `P` at solution time `s` from a jet of `u`, with `log_bound` in the logarithm.
pub fn p_value(jet: &KernelJet, s: f64, log_bound: f64, eps: f64, n: usize) -> f64 {
    let ue = jet.u + eps;
    s * (jet.lap + jet.grad_sq / ue) - ue * (n as f64 + 4.0 * (log_bound / ue).ln())
}

/// `P` on the initial slice `s = 0`, where it reduces to `-u_ε(n + 4 log(A/u_ε))`.
pub fn p_function_at_start(sol: &BoundedSolution, x: &Point, eps_fraction: f64) -> Result<f64> {
    let jet = sol.jet(x, 0.0)?;
    Ok(p_value(&jet, 0.0, sol.sup_bound, eps_fraction * sol.sup_bound, sol.geometry().dim))
}

/// Tolerance for "P >= 0" when deciding where the evolution inequality must be checked.
const P_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Row {
    p: f64,
    p_shifted: f64,
    class: Option<Trichotomy>,
    case3_violation: bool,
    evolution: Option<bool>,
}

/// Evaluates `P` for `ε = eps_fraction·A` over the plan, restricted to
/// `d² <= 8(T + t0) log(A/ε)`:
/// (a) `max P`, (b) the trichotomy with the case-3 implication,
/// (c) `(∂s - Δ)P <= 0` wherever `P >= -tol` on flat geometries,
/// (d) the `e^{-d²}`-weighted quadrature of `P₊²`.
pub fn p_function_check(sol: &BoundedSolution, eps_fraction: f64, plan: &SamplingPlan) -> Result<EstimateReport> {
    if !(eps_fraction > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps_fraction}")));
    }
    let geom = sol.geometry();
    let n = geom.dim;
    let a = sol.sup_bound;
    let eps = eps_fraction * a;
    let discrete = is_discrete(&sol.kernel);
    let cap_sq = 8.0 * (plan.t_max + sol.t0) * (a / eps).ln().max(1.0);
    let check_evolution = geom.is_flat() && sol.kernel.has_third_derivatives();
    let all = solution_samples(sol, plan)?;
    let samples: Vec<Sample> = all.into_iter().filter(|s| s.dist * s.dist <= cap_sq).collect();

    let rows = plan.execution.try_map(&samples, |smp| -> Result<Row> {
        let s = smp.time;
        let jet = sol.jet(&smp.point, s)?;
        let ue = jet.u + eps;
        let g = jet.grad_sq / ue;
        let p = p_value(&jet, s, a, eps, n);
        let class = Trichotomy::classify(jet.lap, g);
        let case3_violation = class == Some(Trichotomy::LaplacianDominant)
            && p >= 0.0
            && 2.0 * (jet.lap - g) < n as f64 * ue / s * (1.0 - 1e-12);
        let evolution = if check_evolution && p >= -P_TOLERANCE {
            let h = 1e-3 * (s + sol.t0).sqrt();
            let ht = (1e-3 * (s + sol.t0)).min(0.5 * s);
            let p_at = |x: &Point, s: f64| sol.jet(x, s).map(|j| p_value(&j, s, a, eps, n));
            let mut lap_p: f64 = 0.0;
            let p0 = p_at(&smp.point, s)?;
            for i in 0..n {
                let mut c = smp.point.coords.clone();
                c[i] += h;
                let pp = p_at(&geom.point(&c)?, s)?;
                c[i] -= 2.0 * h;
                let pm = p_at(&geom.point(&c)?, s)?;
                lap_p += (pp - 2.0 * p0 + pm) / (h * h);
            }
            let dt_p = (p_at(&smp.point, s + ht)? - p_at(&smp.point, s - ht)?) / (2.0 * ht);
            let scale = dt_p.abs() + lap_p.abs();
            Some(dt_p - lap_p <= 1e-6 * scale + P_TOLERANCE)
        } else {
            None
        };
        Ok(Row { p, p_shifted: p_value(&jet, s, a + eps, eps, n), class, case3_violation, evolution })
    })?;

    // quadrature weights: trapezoid in time, cell volume in space
    let mut times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    times.sort_by(|x, y| x.total_cmp(y));
    times.dedup();
    let time_w = trapezoid_weights(&times);
    let cell = |smp: &Sample| -> f64 {
        let r = smp.dist;
        match geom.kind {
            GeometryKind::SphereS2 => plan.step * 2.0 * std::f64::consts::PI * r.sin(),
            GeometryKind::HyperbolicH3 => plan.step * 4.0 * std::f64::consts::PI * r.sinh().powi(2),
            GeometryKind::WarpedSurface { warp, .. } => plan.step * 2.0 * std::f64::consts::PI * warp.f(r),
            _ => plan.step.powi(n as i32),
        }
    };

    let mut report = EstimateReport::new("p-function", geom, if discrete { DISCRETE_RELATIVE_FLOOR * a } else { ANALYTIC_FLOOR });
    let mut max_p = f64::NEG_INFINITY;
    let mut max_shifted = f64::NEG_INFINITY;
    let mut counts = [0usize; 3];
    let (mut unclassified, mut case3_positive, mut case3_violations) = (0usize, 0usize, 0usize);
    let (mut triggered, mut evolution_violations) = (0usize, 0usize);
    let mut integral = 0.0;
    for (smp, row) in samples.iter().zip(&rows) {
        if row.p.is_nan() {
            return Err(Error::DataIntegrity(format!("non-finite P at {:?}, s = {}", smp.point.coords, smp.time)));
        }
        if row.p > max_p {
            max_p = row.p;
            report.argmin = Some(Location { coords: smp.point.coords.clone(), t: smp.time });
        }
        max_shifted = max_shifted.max(row.p_shifted);
        match row.class {
            Some(Trichotomy::GradientDominant) => counts[0] += 1,
            Some(Trichotomy::Intermediate) => counts[1] += 1,
            Some(Trichotomy::LaplacianDominant) => {
                counts[2] += 1;
                if row.p >= 0.0 {
                    case3_positive += 1;
                }
            }
            None => unclassified += 1,
        }
        case3_violations += row.case3_violation as usize;
        if let Some(ok) = row.evolution {
            triggered += 1;
            evolution_violations += (!ok) as usize;
        }
        let positive = row.p.max(0.0);
        if positive > 0.0 {
            let j = times.partition_point(|&t| t < smp.time);
            integral += (-smp.dist * smp.dist).exp() * positive * positive * time_w[j] * cell(smp);
        }
    }
    report.samples = samples.len();
    report.worst_margin = -max_p;
    report.pass = report.worst_margin >= report.tolerance_floor
        && unclassified == 0
        && case3_violations == 0
        && evolution_violations == 0
        && integral.is_finite();
    report.diag("epsilon", eps);
    report.diag("max_p", max_p);
    if eps >= 1e-3 * a {
        report.diag("max_p_shifted_bound", max_shifted);
    }
    report.diag("case_gradient_dominant", counts[0] as f64);
    report.diag("case_intermediate", counts[1] as f64);
    report.diag("case_laplacian_dominant", counts[2] as f64);
    report.diag("case_laplacian_dominant_p_nonnegative", case3_positive as f64);
    report.diag("case_laplacian_dominant_violations", case3_violations as f64);
    report.diag("unclassified", unclassified as f64);
    report.diag("evolution_checks_triggered", triggered as f64);
    report.diag("evolution_violations", evolution_violations as f64);
    report.diag("weighted_positive_part_integral", integral);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::shifted_solution;

    #[test]
    fn classification_boundaries() {
        assert_eq!(Trichotomy::classify(1.0, 1.0), Some(Trichotomy::GradientDominant));
        assert_eq!(Trichotomy::classify(3.0, 1.0), Some(Trichotomy::Intermediate));
        assert_eq!(Trichotomy::classify(3.5, 1.0), Some(Trichotomy::LaplacianDominant));
        assert_eq!(Trichotomy::classify(f64::NAN, 1.0), None);
    }

    #[test]
    fn initial_slice_is_negative() {
        let g = ModelGeometry::euclidean(2).unwrap();
        let sol = shifted_solution(&g, &g.origin(), 1.0).unwrap();
        for x in [0.0, 1.0, 3.0] {
            let p = p_function_at_start(&sol, &g.point(&[x, 0.0]).unwrap(), 1e-2).unwrap();
            assert!(p < 0.0, "{x}: {p}");
        }
    }

    #[test]
    fn euclidean_p_negative_everywhere() {
        let g = ModelGeometry::euclidean(1).unwrap();
        let sol = shifted_solution(&g, &g.origin(), 1.0).unwrap();
        let plan = SamplingPlan::new(0.01, 10.0, 10, 8.0, 0.05);
        for eps in [1e-2, 1e-4] {
            let r = p_function_check(&sol, eps, &plan).unwrap();
            assert!(r.pass && r.diagnostics["max_p"] < 0.0, "{r:?}");
            assert_eq!(r.diagnostics["weighted_positive_part_integral"], 0.0);
            assert_eq!(r.diagnostics["evolution_checks_triggered"], 0.0);
        }
    }
}
