//! Fits of the whole-manifold gradient and Laplacian bounds `s|∇u|² <= C A²(1+Ks)`
//! and `s|Δu| <= C A` over families of bounded solutions.

use super::*;

fn family_label(family: &[BoundedSolution]) -> String {
    let t0s: Vec<String> = family.iter().map(|s| format!("{}", s.t0)).collect();
    match family.first() {
        Some(first) => format!("{} shifted family, t0 in {{{}}}", first.geometry().key(), t0s.join(", ")),
        None => "empty family".to_string(),
    }
}

fn family_fit<F>(
    id: &str,
    name: ConstantName,
    family: &[BoundedSolution],
    plan: &SamplingPlan,
    f: F,
) -> Result<Fitted>
where
    F: Fn(&BoundedSolution, &Sample, &KernelJet) -> Result<Eval> + Sync + Send,
{
    let first = family
        .first()
        .ok_or_else(|| Error::Domain("a constant fit needs at least one solution".into()))?;
    let geom = *first.geometry();
    let mut samples = Vec::new();
    let mut evals = Vec::new();
    for sol in family {
        if sol.geometry() != &geom {
            return Err(Error::DomainMismatch("family members live on different geometries".into()));
        }
        let (s, e) = eval_solution(sol, plan, |smp, jet| f(sol, smp, jet))?;
        samples.extend(s);
        evals.extend(e);
    }
    let discrete = family.iter().any(|s| is_discrete(&s.kernel));
    fit_report(id, &geom, name, family_label(family), &samples, &evals, floor_for(discrete))
}

/// Supremum of `s|∇u|² / (A²(1 + Ks))`.
pub fn kotschwar_gradient_fit(family: &[BoundedSolution], plan: &SamplingPlan) -> Result<Fitted> {
    let k = match family.first() {
        Some(s) => s.geometry().ricci_lower_bound()?,
        None => 0.0,
    };
    family_fit("thm2.1-fit", ConstantName::GradientBound, family, plan, |sol, smp, jet| {
        let a = sol.sup_bound;
        Ok(Eval::of(smp.time * jet.grad_sq / (a * a * (1.0 + k * smp.time))))
    })
}

/// Supremum of `s|Δu| / A`; requires nonnegative Ricci curvature.
pub fn bernstein_laplacian_fit(family: &[BoundedSolution], plan: &SamplingPlan) -> Result<Fitted> {
    if let Some(s) = family.first() {
        require_nonnegative_ricci(s.geometry())?;
    }
    family_fit("thm2.4-fit", ConstantName::LaplacianBound, family, plan, |sol, smp, jet| {
        Ok(Eval::of(smp.time * jet.lap.abs() / sol.sup_bound))
    })
}

/// Laplacian fit over the plan and over the plan with `t_max` scaled by
/// `factor`; returns both values. Equal values show the constant does not
/// grow with the time horizon.
pub fn bernstein_t_stability(family: &[BoundedSolution], plan: &SamplingPlan, factor: f64) -> Result<(f64, f64)> {
    let short = bernstein_laplacian_fit(family, plan)?.fit.value;
    let long_plan = SamplingPlan { t_max: plan.t_max * factor, ..plan.clone() };
    let long = bernstein_laplacian_fit(family, &long_plan)?.fit.value;
    Ok((short, long))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::shifted_solution;

    fn family(n: usize, t0s: &[f64]) -> Vec<BoundedSolution> {
        let g = ModelGeometry::euclidean(n).unwrap();
        t0s.iter().map(|&t0| shifted_solution(&g, &g.origin(), t0).unwrap()).collect()
    }

    #[test]
    fn gradient_constant_oracle() {
        let fam = family(1, &[1.0]);
        let plan = SamplingPlan::new(0.01, 10.0, 100, 6.0, 0.01);
        let f = kotschwar_gradient_fit(&fam, &plan).unwrap();
        let oracle = (-1.0f64).exp() / 8.0;
        assert!((f.fit.value - oracle).abs() < 1e-4, "{}", f.fit.value);
        assert!(f.fit.value <= oracle + 1e-15);
    }

    #[test]
    fn laplacian_constant_oracle_and_horizon_independence() {
        let fam = family(1, &[1.0]);
        let plan = SamplingPlan::new(0.01, 10.0, 100, 6.0, 0.01);
        let f = bernstein_laplacian_fit(&fam, &plan).unwrap();
        let oracle = 3f64.powf(-1.5);
        assert!((f.fit.value - oracle).abs() < 1e-4, "{}", f.fit.value);
        let b = f.fit.binding.unwrap();
        assert_eq!(b.coords, vec![0.0]);
        let (short, long) = bernstein_t_stability(&fam, &plan, 10.0).unwrap();
        assert!((short - long).abs() <= 1e-10 * short);
    }

    #[test]
    fn constant_solution_fits_zero() {
        let g = ModelGeometry::euclidean(2).unwrap();
        let fam = vec![BoundedSolution::constant(g, 1.0)];
        let plan = SamplingPlan::new(0.01, 1.0, 4, 1.0, 0.5);
        assert_eq!(kotschwar_gradient_fit(&fam, &plan).unwrap().fit.value, 0.0);
        assert_eq!(bernstein_laplacian_fit(&fam, &plan).unwrap().fit.value, 0.0);
    }

    #[test]
    fn refinement_never_decreases_fit() {
        let fam = family(2, &[0.5, 1.0]);
        let plan = SamplingPlan::new(0.01, 4.0, 5, 4.0, 0.4);
        let coarse = kotschwar_gradient_fit(&fam, &plan).unwrap().fit.value;
        let fine = kotschwar_gradient_fit(&fam, &plan.refined()).unwrap().fit.value;
        assert!(fine >= coarse);
    }
}
