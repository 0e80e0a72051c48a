//! One-dimensional heat kernels (line and circle) and product jets.

use std::f64::consts::PI;

use super::KernelJet;
use crate::error::{Error, Result};

/// Hard cap on image or Fourier terms per evaluation.
pub const TERM_BUDGET: usize = 100_000;

/// Value and first three derivatives of a one-dimensional kernel.
pub type Stack = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodicMethod {
    /// Images for `t < L²/4`, Fourier modes otherwise.
    Auto,
    Images,
    Fourier,
}

/// Gaussian `(4πt)^{-1/2} e^{-x²/4t}` and its x-derivatives.
pub fn gaussian_stack(x: f64, t: f64) -> Stack {
    let g = (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp();
    let a = x / (2.0 * t);
    [
        g,
        -a * g,
        (a * a - 0.5 / t) * g,
        (1.5 * a / t - a * a * a) * g,
    ]
}

/// Periodic kernel on ℝ/Lℤ as a sum over translates of the Gaussian.
pub fn circle_images(x: f64, t: f64, period: f64) -> Result<Stack> {
    // e^{-s²/4t} < e^{-60} beyond this reach
    let reach = (240.0 * t).sqrt() + x.abs();
    let k_max = (reach / period).ceil() as usize + 1;
    if k_max > TERM_BUDGET {
        return Err(Error::Truncation(format!("{k_max} images needed at t={t}, L={period}")));
    }
    let mut acc = gaussian_stack(x, t);
    for k in 1..=k_max as i64 {
        for s in [x - k as f64 * period, x + k as f64 * period] {
            let g = gaussian_stack(s, t);
            for i in 0..4 {
                acc[i] += g[i];
            }
        }
    }
    Ok(acc)
}

/// Periodic kernel on ℝ/Lℤ as a cosine series.
pub fn circle_fourier(x: f64, t: f64, period: f64) -> Result<Stack> {
    let base = 2.0 * PI / period;
    let mut acc = [1.0 / period, 0.0, 0.0, 0.0];
    let mut m = 1usize;
    loop {
        let k = base * m as f64;
        let decay = (-k * k * t).exp();
        if decay * (1.0 + k).powi(3) < 1e-18 {
            return Ok(acc);
        }
        if m > TERM_BUDGET {
            return Err(Error::Truncation(format!("Fourier series did not converge at t={t}, L={period}")));
        }
        let w = 2.0 / period * decay;
        let (s, c) = (k * x).sin_cos();
        acc[0] += w * c;
        acc[1] -= w * k * s;
        acc[2] -= w * k * k * c;
        acc[3] += w * k * k * k * s;
        m += 1;
    }
}

pub fn circle_stack(x: f64, t: f64, period: f64, method: PeriodicMethod) -> Result<Stack> {
    match method {
        PeriodicMethod::Images => circle_images(x, t, period),
        PeriodicMethod::Fourier => circle_fourier(x, t, period),
        PeriodicMethod::Auto => {
            if t < 0.25 * period * period {
                circle_images(x, t, period)
            } else {
                circle_fourier(x, t, period)
            }
        }
    }
}

/// Jet of `u = Π_i g_i(x_i)` from per-axis derivative stacks.
pub fn product_jet(stacks: &[Stack]) -> KernelJet {
    let n = stacks.len();
    // product of values over axes not in `skip`
    let prod_except = |skip: &[usize]| -> f64 {
        (0..n).filter(|i| !skip.contains(i)).map(|i| stacks[i][0]).product()
    };
    let u = prod_except(&[]);
    let mut grad_sq = 0.0;
    let mut hess_sq = 0.0;
    let mut lap = 0.0;
    for i in 0..n {
        let gi = stacks[i][1] * prod_except(&[i]);
        grad_sq += gi * gi;
        for j in 0..n {
            let hij = if i == j {
                stacks[i][2] * prod_except(&[i])
            } else {
                stacks[i][1] * stacks[j][1] * prod_except(&[i, j])
            };
            hess_sq += hij * hij;
            if i == j {
                lap += hij;
            }
        }
    }
    let mut grad_lap_sq = 0.0;
    for k in 0..n {
        let mut d = 0.0;
        for i in 0..n {
            d += if i == k {
                stacks[k][3] * prod_except(&[k])
            } else {
                stacks[i][2] * stacks[k][1] * prod_except(&[i, k])
            };
        }
        grad_lap_sq += d * d;
    }
    KernelJet { u, grad_sq, lap, hess_sq, grad_lap_sq: Some(grad_lap_sq) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivatives_by_differences() {
        let (x, t, h) = (0.7, 0.3, 1e-4);
        let s = gaussian_stack(x, t);
        let p = gaussian_stack(x + h, t);
        let m = gaussian_stack(x - h, t);
        for i in 0..3 {
            let fd = (p[i] - m[i]) / (2.0 * h);
            assert!((fd - s[i + 1]).abs() < 1e-7 * (1.0 + s[i + 1].abs()), "order {}", i + 1);
        }
    }

    #[test]
    fn images_and_fourier_agree() {
        let period = 2.0 * PI;
        for &t in &[0.05, 0.3, 1.0, 4.0, 10.0] {
            for &x in &[0.0, 1.0, -2.5, 3.1] {
                let a = circle_images(x, t, period).unwrap();
                let b = circle_fourier(x, t, period).unwrap();
                for i in 0..4 {
                    assert!((a[i] - b[i]).abs() < 1e-12, "t={t} x={x} order {i}: {} vs {}", a[i], b[i]);
                }
            }
        }
    }

    #[test]
    fn fourier_budget_is_enforced() {
        assert!(matches!(circle_fourier(0.0, 1e-12, 2.0 * PI), Err(Error::Truncation(_))));
    }
}
