//! Crank–Nicolson heat solver for radial functions on `dr² + f(r)² dθ²`.
//!
//! The radial Laplacian `∂²_r + (f'/f) ∂_r` is discretized by central
//! differences with the exact `f'/f` at the nodes,
//!
//! ```text
//! (Lu)_i = [(1 + h g_i/2) u_{i+1} - 2 u_i + (1 - h g_i/2) u_{i-1}] / h²,  g = f'/f,
//! ```
//!
//! which is pointwise second order even where the curvature `-f''/f` blows
//! up at the pole. The pole row is the symmetric limit
//! `2 ∂²_r u = 4(u_1 - u_0)/h²` and the outer row is homogeneous Neumann.
//! The tridiagonal matrix is symmetric with respect to positive weights
//! `V_i ≈ h f(r_i)`, so the discrete mass `2π Σ V_i u_i` is conserved
//! exactly by Crank–Nicolson.

mod tridiag;

pub use tridiag::solve_tridiagonal;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{ModelGeometry, Point, Warp};
use crate::kernels::KernelJet;

/// Space-time grid of a radial solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n_r: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub n_t: usize,
    /// Keep every `record_every`-th step in the history (the last step is always kept).
    pub record_every: usize,
}

impl RadialGrid {
    pub fn h_r(&self) -> f64 {
        self.r_max / (self.n_r - 1) as f64
    }

    pub fn h_t(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_t as f64
    }

    /// `h_t / h_r²`; informational only since the scheme is implicit.
    pub fn diffusion_number(&self) -> f64 {
        self.h_t() / (self.h_r() * self.h_r())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 3 || self.n_t == 0 || self.record_every == 0 {
            return Err(Error::Domain(format!("grid needs n_r >= 3, n_t >= 1, record_every >= 1: {self:?}")));
        }
        if !(self.r_max > 0.0 && self.t_end > self.t_start && self.t_start >= 0.0) {
            return Err(Error::Domain(format!("invalid grid extents: {self:?}")));
        }
        Ok(())
    }
}

/// Central-difference radial Laplacian on a uniform node set.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    pub warp: Warp,
    pub h: f64,
    pub r: Vec<f64>,
    /// `f` at the nodes.
    pub f: Vec<f64>,
    /// `f'/f` at the nodes (zero at the pole, where it is not used).
    pub log_df: Vec<f64>,
    /// Symmetrizing weights of the stencil, `≈ h f(r_i)`.
    pub volumes: Vec<f64>,
    // (Lu)_i = lower_i u_{i-1} + diag_i u_i + upper_i u_{i+1}
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl RadialOperator {
    pub fn new(warp: Warp, r_max: f64, n_r: usize) -> Result<Self> {
        if n_r < 3 || !(r_max > 0.0) {
            return Err(Error::Domain(format!("need n_r >= 3 and r_max > 0, got {n_r}, {r_max}")));
        }
        let h = r_max / (n_r - 1) as f64;
        let r: Vec<f64> = (0..n_r).map(|i| i as f64 * h).collect();
        let f: Vec<f64> = r.iter().map(|&x| warp.f(x)).collect();
        for i in 1..n_r {
            if !(f[i] > 0.0) {
                return Err(Error::DegenerateWarp { r: r[i], value: f[i] });
            }
        }
        let log_df: Vec<f64> = r
            .iter()
            .zip(&f)
            .map(|(&x, &fx)| if x == 0.0 { 0.0 } else { warp.df(x) / fx })
            .collect();
        let h2 = h * h;
        let mut lower = vec![0.0; n_r];
        let mut diag = vec![-2.0 / h2; n_r];
        let mut upper = vec![0.0; n_r];
        // pole: 2 u_rr with the symmetric ghost u_{-1} = u_1
        upper[0] = 4.0 / h2;
        diag[0] = -4.0 / h2;
        for i in 1..n_r - 1 {
            let g: f64 = log_df[i];
            if !(0.5 * h * g.abs() < 1.0) {
                return Err(Error::Domain(format!("radial step {h} too coarse for f'/f = {g} at r = {}", r[i])));
            }
            lower[i] = (1.0 - 0.5 * h * g) / h2;
            upper[i] = (1.0 + 0.5 * h * g) / h2;
        }
        // outer Neumann row: ghost u_n = u_{n-2}
        lower[n_r - 1] = 2.0 / h2;
        // Weights that make the stencil symmetric, w_i upper_i = w_{i+1} lower_{i+1};
        // they approximate h f(r_i) and the weighted sum is the conserved mass.
        let mut volumes = vec![0.0; n_r];
        volumes[0] = 0.25 * h * warp.f(0.5 * h);
        for i in 0..n_r - 1 {
            volumes[i + 1] = volumes[i] * upper[i] / lower[i + 1];
        }
        Ok(Self { warp, h, r, f, log_df, volumes, lower, diag, upper })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn laplacian_at(&self, u: &[f64], i: usize) -> f64 {
        let n = self.len();
        let mut v = self.diag[i] * u[i];
        if i > 0 {
            v += self.lower[i] * u[i - 1];
        }
        if i + 1 < n {
            v += self.upper[i] * u[i + 1];
        }
        v
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.laplacian_at(u, i)).collect()
    }

    /// Discrete mass `2π Σ V_i u_i`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        2.0 * PI * self.volumes.iter().zip(u).map(|(v, x)| v * x).sum::<f64>()
    }

    /// One Crank–Nicolson step of size `h_t`.
    pub fn step_crank_nicolson(&self, u: &[f64], h_t: f64) -> Result<Vec<f64>> {
        if !(h_t > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {h_t}")));
        }
        let n = self.len();
        let a = 0.5 * h_t;
        let rhs: Vec<f64> = (0..n).map(|i| u[i] + a * self.laplacian_at(u, i)).collect();
        let lower: Vec<f64> = self.lower.iter().map(|c| -a * c).collect();
        let upper: Vec<f64> = self.upper.iter().map(|c| -a * c).collect();
        let diag: Vec<f64> = self.diag.iter().map(|c| 1.0 - a * c).collect();
        solve_tridiagonal(&lower, &diag, &upper, &rhs)
    }

    /// `(u_r, u_rr)` at node `i` by central differences with symmetric ghosts at both ends.
    pub fn radial_derivatives(&self, u: &[f64], i: usize) -> (f64, f64) {
        let n = self.len();
        let h = self.h;
        if i == 0 {
            (0.0, 2.0 * (u[1] - u[0]) / (h * h))
        } else if i + 1 == n {
            (0.0, 2.0 * (u[n - 2] - u[n - 1]) / (h * h))
        } else {
            ((u[i + 1] - u[i - 1]) / (2.0 * h), (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h))
        }
    }
}

/// `radial_laplacian(field, i)` on the latest snapshot.
pub fn radial_laplacian(field: &RadialField, i: usize) -> f64 {
    field.op.laplacian_at(field.snapshot(field.times.len() - 1), i)
}

/// Recorded radial solution history.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub geometry: ModelGeometry,
    pub op: Arc<RadialOperator>,
    pub times: Vec<f64>,
    values: Vec<Vec<f64>>,
    /// Number of recorded node values that went negative or non-finite; values
    /// that underflow to exactly zero far from the source are not counted.
    pub positivity_violations: usize,
}

/// Extremes of `max_i u` and `min_i u` over the history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    /// Largest increase of `max_i u(·, t_j)` between consecutive snapshots.
    pub max_increase: f64,
    /// Largest decrease of `min_i u(·, t_j)` between consecutive snapshots.
    pub min_decrease: f64,
}

impl MaxPrincipleReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_increase <= tol && self.min_decrease <= tol
    }
}

impl RadialField {
    pub fn new(geometry: ModelGeometry, op: Arc<RadialOperator>, t: f64, u: Vec<f64>) -> Self {
        let mut field = Self { geometry, op, times: Vec::new(), values: Vec::new(), positivity_violations: 0 };
        field.push(t, u);
        field
    }

    fn push(&mut self, t: f64, u: Vec<f64>) {
        self.positivity_violations += u.iter().filter(|&&x| !(x >= 0.0) || !x.is_finite()).count();
        self.times.push(t);
        self.values.push(u);
    }

    pub fn snapshot(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().expect("field has at least one snapshot")
    }

    pub fn mass(&self, j: usize) -> f64 {
        self.op.mass(&self.values[j])
    }

    /// Advance the latest snapshot by one step and record it.
    pub fn step_crank_nicolson(&mut self, h_t: f64) -> Result<()> {
        let next = self.op.step_crank_nicolson(self.last(), h_t)?;
        let t = self.times.last().unwrap() + h_t;
        self.push(t, next);
        Ok(())
    }

    /// Index of node `r`, if `r` sits on the grid.
    pub fn node_index(&self, r: f64) -> Option<usize> {
        let x = r / self.op.h;
        let i = x.round();
        ((x - i).abs() <= 1e-9 && i >= 0.0 && (i as usize) < self.op.len()).then_some(i as usize)
    }

    /// Index of the recorded snapshot at time `t`, if any.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let j = self.times.partition_point(|&s| s < t - 1e-12 * t.abs().max(1.0));
        (j < self.times.len() && (self.times[j] - t).abs() <= 1e-9 * t.abs().max(1.0)).then_some(j)
    }

    /// First- and second-order jet at node `i`, snapshot `j`. Third-order
    /// quantities are never formed from discrete data.
    pub fn jet(&self, i: usize, j: usize) -> KernelJet {
        let u = &self.values[j];
        let (ur, urr) = self.op.radial_derivatives(u, i);
        let tangential = if i == 0 { urr } else { self.op.log_df[i] * ur };
        KernelJet {
            u: u[i],
            grad_sq: ur * ur,
            lap: self.op.laplacian_at(u, i),
            hess_sq: urr * urr + tangential * tangential,
            grad_lap_sq: None,
        }
    }

    pub fn jet_at_point(&self, x: &Point, t: f64) -> Result<KernelJet> {
        let i = self
            .node_index(x.coords[0])
            .ok_or_else(|| Error::Domain(format!("r = {} is not a grid node", x.coords[0])))?;
        let j = self
            .time_index(t)
            .ok_or_else(|| Error::Domain(format!("t = {t} is not a recorded time")))?;
        Ok(self.jet(i, j))
    }

    pub fn max_principle(&self) -> MaxPrincipleReport {
        let mut report = MaxPrincipleReport { max_increase: 0.0, min_decrease: 0.0 };
        let extremes: Vec<(f64, f64)> = self
            .values
            .iter()
            .map(|u| u.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x))))
            .collect();
        for w in extremes.windows(2) {
            report.max_increase = report.max_increase.max(w[1].0 - w[0].0);
            report.min_decrease = report.min_decrease.max(w[0].1 - w[1].1);
        }
        report
    }

    /// CSV with columns `r,t,u,grad_sq,lap` for the selected snapshots.
    pub fn to_csv(&self, snapshots: &[usize]) -> String {
        let mut out = String::from("r,t,u,grad_sq,lap\n");
        for &j in snapshots {
            for i in 0..self.op.len() {
                let jet = self.jet(i, j);
                let _ = writeln!(out, "{},{},{:e},{:e},{:e}", self.op.r[i], self.times[j], jet.u, jet.grad_sq, jet.lap);
            }
        }
        out
    }
}

/// Flat Gaussian `(4πt0)^{-1} e^{-r²/4t0}`: the planar kernel at time `t0`,
/// used as an approximate point source near a smooth pole.
pub fn gaussian_initial(t0: f64) -> impl Fn(f64) -> f64 {
    move |r| (-r * r / (4.0 * t0)).exp() / (4.0 * PI * t0)
}

/// Integrate from `initial` at `grid.t_start` to `grid.t_end`.
pub fn solve_heat<F: Fn(f64) -> f64>(grid: &RadialGrid, warp: Warp, initial: F) -> Result<RadialField> {
    grid.validate()?;
    let op = Arc::new(RadialOperator::new(warp, grid.r_max, grid.n_r)?);
    let u0: Vec<f64> = op.r.iter().map(|&r| initial(r)).collect();
    // far tails may underflow to zero; anything negative or non-finite is an error
    if u0.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || !(u0[0] > 0.0) {
        return Err(Error::Domain("initial data must be finite, nonnegative and positive at the pole".into()));
    }
    let geometry = ModelGeometry::warped(warp, grid.r_max)?;
    let mut field = RadialField::new(geometry, op.clone(), grid.t_start, u0);
    let h_t = grid.h_t();
    let mut u = field.last().to_vec();
    for step in 1..=grid.n_t {
        u = op.step_crank_nicolson(&u, h_t)?;
        if step % grid.record_every == 0 || step == grid.n_t {
            field.push(grid.t_start + step as f64 * h_t, u.clone());
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_laplacian_of_r_squared_is_four() {
        let op = RadialOperator::new(Warp::Flat, 5.0, 51).unwrap();
        let u: Vec<f64> = op.r.iter().map(|r| r * r).collect();
        for i in 0..op.len() - 1 {
            assert!((op.laplacian_at(&u, i) - 4.0).abs() < 1e-10, "node {i}");
        }
    }

    #[test]
    fn constants_are_harmonic() {
        let op = RadialOperator::new(Warp::Cigar, 10.0, 101).unwrap();
        let u = vec![3.5; op.len()];
        for i in 0..op.len() {
            assert!(op.laplacian_at(&u, i).abs() < 1e-11, "node {i}");
        }
        let next = op.step_crank_nicolson(&u, 0.1).unwrap();
        assert!(next.iter().all(|&x| (x - 3.5).abs() < 1e-13));
    }

    #[test]
    fn degenerate_warp_rejected() {
        // the sine warp closes again at r = π
        let err = RadialOperator::new(Warp::Sine, 4.0, 41).unwrap_err();
        assert!(matches!(err, Error::DegenerateWarp { .. }), "{err:?}");
    }

    #[test]
    fn mass_is_conserved_by_a_step() {
        let op = RadialOperator::new(Warp::Cigar, 15.0, 301).unwrap();
        let u: Vec<f64> = op.r.iter().map(|&r| gaussian_initial(0.1)(r)).collect();
        let next = op.step_crank_nicolson(&u, 0.05).unwrap();
        assert!((op.mass(&next) - op.mass(&u)).abs() < 1e-13 * op.mass(&u));
    }
}
