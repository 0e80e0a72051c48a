//! Heat kernels with analytic jets up to third order, and the bounded
//! solutions `u(x, s) = H(x, y, s + t0)` built from them.

pub mod flat;
pub mod hyperbolic;
pub mod sphere;

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::discrete::RadialField;
use crate::error::{Error, Result};
use crate::geometry::{GeometryKind, ModelGeometry, Point};
use flat::{circle_stack, gaussian_stack, product_jet, PeriodicMethod, Stack};

pub use hyperbolic::{h3_jet, h3_kernel};
pub use sphere::{sphere_jet, sphere_kernel, SPHERE_T_MIN};

/// Value and derivative invariants of a heat solution at a space-time point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelJet {
    pub u: f64,
    /// `|∇u|²`
    pub grad_sq: f64,
    /// `Δu`
    pub lap: f64,
    /// `|∇∇u|²`
    pub hess_sq: f64,
    /// `|∇Δu|²`; absent for discrete fields, which never provide third derivatives.
    pub grad_lap_sq: Option<f64>,
}

impl KernelJet {
    pub fn constant(u: f64) -> Self {
        Self { u, grad_sq: 0.0, lap: 0.0, hess_sq: 0.0, grad_lap_sq: Some(0.0) }
    }

    /// `hess_sq - lap²/n`, nonnegative up to rounding by Cauchy-Schwarz on the trace.
    pub fn trace_gap(&self, n: usize) -> f64 {
        self.hess_sq - self.lap * self.lap / n as f64
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive, got {t}")))
    }
}

fn flat_stacks(geom: &ModelGeometry, x: &Point, y: &Point, t: f64, method: PeriodicMethod) -> Result<Vec<Stack>> {
    let disp = geom.displacement(y, x)?;
    match geom.kind {
        GeometryKind::Euclidean => Ok(disp.iter().map(|&d| gaussian_stack(d, t)).collect()),
        GeometryKind::FlatTorus { period } => disp.iter().map(|&d| circle_stack(d, t, period, method)).collect(),
        GeometryKind::FlatCylinder { period } => {
            Ok(vec![circle_stack(disp[0], t, period, method)?, gaussian_stack(disp[1], t)])
        }
        _ => unreachable!("flat_stacks on a curved model"),
    }
}

/// Heat kernel jet at `(x, t)` for a point source at `y`.
pub fn kernel_jet(geom: &ModelGeometry, x: &Point, y: &Point, t: f64) -> Result<KernelJet> {
    check_time(t)?;
    match geom.kind {
        GeometryKind::Euclidean | GeometryKind::FlatTorus { .. } | GeometryKind::FlatCylinder { .. } => {
            Ok(product_jet(&flat_stacks(geom, x, y, t, PeriodicMethod::Auto)?))
        }
        GeometryKind::SphereS2 => sphere_jet(geom.distance(x, y)?, t),
        GeometryKind::HyperbolicH3 => h3_jet(geom.distance(x, y)?, t),
        GeometryKind::WarpedSurface { .. } => Err(Error::NotApplicable(
            "warped surfaces have no closed-form kernel; use the radial solver".into(),
        )),
    }
}

pub fn heat_kernel(geom: &ModelGeometry, x: &Point, y: &Point, t: f64) -> Result<f64> {
    check_time(t)?;
    match geom.kind {
        GeometryKind::SphereS2 => sphere_kernel(geom.distance(x, y)?, t),
        GeometryKind::HyperbolicH3 => h3_kernel(geom.distance(x, y)?, t),
        _ => kernel_jet(geom, x, y, t).map(|j| j.u),
    }
}

/// `|image-sum kernel - Fourier kernel|` on a torus or cylinder.
pub fn dual_representation_check(geom: &ModelGeometry, x: &Point, y: &Point, t: f64) -> Result<f64> {
    check_time(t)?;
    if !matches!(geom.kind, GeometryKind::FlatTorus { .. } | GeometryKind::FlatCylinder { .. }) {
        return Err(Error::NotApplicable(format!("{} is not periodic", geom.key())));
    }
    let value = |m| -> Result<f64> { Ok(flat_stacks(geom, x, y, t, m)?.iter().map(|s| s[0]).product()) };
    Ok((value(PeriodicMethod::Images)? - value(PeriodicMethod::Fourier)?).abs())
}

/// Where a solution's kernel values come from.
#[derive(Debug, Clone)]
pub enum KernelModel {
    Analytic { geom: ModelGeometry, source: Point },
    /// Numerical kernel on a warped surface, source at the pole.
    Discrete(Arc<RadialField>),
    /// `u ≡ value`; the trivial bounded solution.
    Constant { geom: ModelGeometry, value: f64 },
}

impl KernelModel {
    pub fn geometry(&self) -> &ModelGeometry {
        match self {
            KernelModel::Analytic { geom, .. } | KernelModel::Constant { geom, .. } => geom,
            KernelModel::Discrete(f) => &f.geometry,
        }
    }

    pub fn source(&self) -> Point {
        match self {
            KernelModel::Analytic { source, .. } => source.clone(),
            _ => self.geometry().origin(),
        }
    }

    pub fn has_third_derivatives(&self) -> bool {
        !matches!(self, KernelModel::Discrete(_))
    }

    /// Jet at kernel time `t`.
    pub fn jet(&self, x: &Point, t: f64) -> Result<KernelJet> {
        match self {
            KernelModel::Analytic { geom, source } => kernel_jet(geom, x, source, t),
            KernelModel::Discrete(field) => field.jet_at_point(x, t),
            KernelModel::Constant { value, .. } => Ok(KernelJet::constant(*value)),
        }
    }
}

/// `u(x, s) = H(x, source, s + t0)` with `0 < u <= sup_bound`.
#[derive(Debug, Clone)]
pub struct BoundedSolution {
    pub kernel: KernelModel,
    pub t0: f64,
    /// The bound `A`.
    pub sup_bound: f64,
}

impl BoundedSolution {
    pub fn geometry(&self) -> &ModelGeometry {
        self.kernel.geometry()
    }

    pub fn source(&self) -> Point {
        self.kernel.source()
    }

    pub fn jet(&self, x: &Point, s: f64) -> Result<KernelJet> {
        if s < 0.0 {
            return Err(Error::Domain(format!("solution time must be nonnegative, got {s}")));
        }
        self.kernel.jet(x, s + self.t0)
    }

    pub fn value(&self, x: &Point, s: f64) -> Result<f64> {
        self.jet(x, s).map(|j| j.u)
    }

    /// The constant solution `u ≡ a`.
    pub fn constant(geom: ModelGeometry, a: f64) -> Self {
        Self { kernel: KernelModel::Constant { geom, value: a }, t0: 0.0, sup_bound: a }
    }

    /// Solution started from the first snapshot of a radial solve.
    pub fn from_field(field: Arc<RadialField>) -> Self {
        let t0 = field.times[0];
        let a = field.snapshot(0).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self { kernel: KernelModel::Discrete(field), t0, sup_bound: a }
    }

    /// Assert `u <= A` on the given space-time samples; returns the largest ratio `u/A`.
    pub fn check_sup_bound(&self, samples: &[(Point, f64)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (x, s) in samples {
            let u = self.value(x, *s)?;
            worst = worst.max(u / self.sup_bound);
            if u > self.sup_bound * (1.0 + 1e-12) {
                return Err(Error::DataIntegrity(format!(
                    "u = {u} exceeds the bound A = {} at s = {s}",
                    self.sup_bound
                )));
            }
        }
        Ok(worst)
    }
}

/// Shifted kernel `u(x, s) = H(x, y, s + t0)` with `A = H(y, y, t0)`.
pub fn shifted_solution(geom: &ModelGeometry, y: &Point, t0: f64) -> Result<BoundedSolution> {
    check_time(t0)?;
    let a = heat_kernel(geom, y, y, t0)?;
    Ok(BoundedSolution {
        kernel: KernelModel::Analytic { geom: *geom, source: y.clone() },
        t0,
        sup_bound: a,
    })
}
