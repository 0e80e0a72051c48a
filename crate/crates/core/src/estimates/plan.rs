//! Space-time sampling plans.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{GeometryKind, ModelGeometry, Point};
use crate::kernels::KernelModel;

/// Log-spaced times `t_min·10^{k/per_decade} <= t_max` crossed with a spatial
/// lattice of spacing `step` inside `radius` of the source.
///
/// Refinement (`refined`) and extension of `t_max` only ever add samples, so
/// a worst margin can only decrease and a fitted supremum only increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub radius: f64,
    pub step: f64,
    /// Regularisation levels for the P-function, as fractions of the bound `A`.
    pub epsilons: Vec<f64>,
    /// Gaussian exponent slack in `4 - δ`.
    pub delta: f64,
    /// How the map step runs; does not affect results or the plan hash.
    #[serde(skip)]
    pub execution: Execution,
}

impl SamplingPlan {
    pub fn new(t_min: f64, t_max: f64, per_decade: usize, radius: f64, step: f64) -> Self {
        Self {
            t_min,
            t_max,
            per_decade,
            radius,
            step,
            epsilons: vec![1e-2, 1e-4],
            delta: 0.5,
            execution: Execution::default(),
        }
    }

    /// Default plan for the shifted solutions used on `geom`.
    pub fn default_for(geom: &ModelGeometry) -> Self {
        match geom.kind {
            GeometryKind::Euclidean => match geom.dim {
                1 => Self::new(0.01, 10.0, 100, 8.0, 0.01),
                2 => Self::new(0.01, 10.0, 20, 8.0, 0.1),
                _ => Self::new(0.01, 10.0, 8, 6.0, 0.4),
            },
            GeometryKind::FlatTorus { period } => match geom.dim {
                1 => Self::new(0.005, 5.0, 40, period / 2.0, period / 400.0),
                _ => Self::new(0.005, 5.0, 10, period / 2.0, period / 40.0),
            },
            GeometryKind::FlatCylinder { .. } => Self::new(0.01, 2.0, 20, 6.0, 0.1),
            GeometryKind::SphereS2 => Self::new(5e-4, 2.0, 20, std::f64::consts::PI, std::f64::consts::PI / 200.0),
            GeometryKind::HyperbolicH3 => Self::new(0.01, 2.0, 20, 6.0, 0.02),
            GeometryKind::WarpedSurface { .. } => Self::new(0.01, 2.0, 20, 4.0, 0.02),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t_min > 0.0
            && self.t_max >= self.t_min
            && self.t_max.is_finite()
            && self.per_decade > 0
            && self.radius >= 0.0
            && self.step > 0.0
            && self.delta > 0.0
            && self.delta < 4.0
            && self.epsilons.iter().all(|&e| e > 0.0 && e.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid sampling plan {self:?}")))
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0i32;
        loop {
            let t = self.t_min * 10f64.powf(k as f64 / self.per_decade as f64);
            if t > self.t_max * (1.0 + 1e-12) {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }

    /// Doubled time density and halved spatial step.
    pub fn refined(&self) -> Self {
        Self { per_decade: self.per_decade * 2, step: self.step / 2.0, ..self.clone() }
    }

    /// Parabolic rescaling: times by `lambda`, lengths by `sqrt(lambda)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let s = lambda.sqrt();
        Self {
            t_min: self.t_min * lambda,
            t_max: self.t_max * lambda,
            radius: self.radius * s,
            step: self.step * s,
            ..self.clone()
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Stable hex digest of the plan together with the geometry key.
    pub fn hash(&self, geom: &ModelGeometry) -> String {
        let mut hasher = Sha256::new();
        hasher.update(geom.key().as_bytes());
        hasher.update(b"\n");
        hasher.update(serde_json::to_vec(self).expect("plan serializes"));
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// One space-time sample. `time` is the solution time `s` for bounded
/// solutions and the kernel time `t` for kernel samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub point: Point,
    pub time: f64,
    /// Distance to the source.
    pub dist: f64,
}

fn cross(geom: &ModelGeometry, source: &Point, points: Vec<Point>, times: &[f64]) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(points.len() * times.len());
    for p in points {
        let dist = geom.distance(&p, source)?;
        for &t in times {
            out.push(Sample { point: p.clone(), time: t, dist });
        }
    }
    Ok(out)
}

/// Nodes of a discrete field within the plan radius, thinned to the plan step.
fn field_points(model: &KernelModel, plan: &SamplingPlan) -> Result<Vec<Point>> {
    let KernelModel::Discrete(field) = model else { unreachable!() };
    let h = field.op.h;
    let stride = ((plan.step / h).round() as usize).max(1);
    let mut pts = Vec::new();
    let mut i = 0;
    while i < field.op.len() && field.op.r[i] <= plan.radius * (1.0 + 1e-12) {
        pts.push(field.geometry.point_on_ray(field.op.r[i])?);
        i += stride;
    }
    Ok(pts)
}

/// Samples at kernel times. For discrete fields the recorded snapshot times
/// inside `[t_min, t_max]` replace the log grid.
pub fn kernel_samples(model: &KernelModel, plan: &SamplingPlan) -> Result<Vec<Sample>> {
    plan.validate()?;
    let geom = model.geometry();
    let source = model.source();
    match model {
        KernelModel::Discrete(field) => {
            let times: Vec<f64> = field
                .times
                .iter()
                .copied()
                .filter(|&t| t >= plan.t_min * (1.0 - 1e-12) && t <= plan.t_max * (1.0 + 1e-12))
                .collect();
            cross(geom, &source, field_points(model, plan)?, &times)
        }
        _ => cross(geom, &source, geom.sample_points(&source, plan.radius, plan.step)?, &plan.times()),
    }
}

/// Samples at solution times `s` for `u(x, s) = H(x, y, s + t0)`.
pub fn solution_samples(sol: &crate::kernels::BoundedSolution, plan: &SamplingPlan) -> Result<Vec<Sample>> {
    plan.validate()?;
    let geom = sol.geometry();
    let source = sol.source();
    match &sol.kernel {
        KernelModel::Discrete(field) => {
            let times: Vec<f64> = field
                .times
                .iter()
                .map(|&t| t - sol.t0)
                .filter(|&s| s >= plan.t_min * (1.0 - 1e-9) && s <= plan.t_max * (1.0 + 1e-9))
                .collect();
            cross(geom, &source, field_points(&sol.kernel, plan)?, &times)
        }
        _ => cross(geom, &source, geom.sample_points(&source, plan.radius, plan.step)?, &plan.times()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let p = SamplingPlan::new(0.01, 10.0, 10, 1.0, 0.5);
        let t = p.times();
        assert_eq!(t.len(), 31);
        assert!((t[30] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_is_a_superset() {
        let p = SamplingPlan::new(0.01, 10.0, 5, 2.0, 0.5);
        let coarse = p.times();
        let fine = p.refined().times();
        for t in coarse {
            assert!(fine.iter().any(|&s| (s - t).abs() <= 1e-12 * t), "{t}");
        }
    }

    #[test]
    fn hash_ignores_execution_but_not_content() {
        let g = ModelGeometry::euclidean(1).unwrap();
        let p = SamplingPlan::default_for(&g);
        let q = p.clone().with_execution(Execution::Sequential);
        assert_eq!(p.hash(&g), q.hash(&g));
        assert_ne!(p.hash(&g), p.refined().hash(&g));
        assert_ne!(p.hash(&g), p.hash(&ModelGeometry::euclidean(2).unwrap()));
    }

    #[test]
    fn invalid_plans_rejected() {
        let mut p = SamplingPlan::new(0.0, 1.0, 5, 1.0, 0.1);
        assert!(p.validate().is_err());
        p.t_min = 0.1;
        p.delta = 4.0;
        assert!(p.validate().is_err());
    }
}
