//! Composite Simpson quadrature on uniform grids.

/// Composite Simpson rule for `f` on `[a, b]` with at least `min_panels`
/// subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, min_panels: usize) -> f64 {
    if b == a {
        return 0.0;
    }
    let n = (min_panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson rule with the panel count chosen from a target step `h`.
pub fn simpson_step<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, h: f64) -> f64 {
    let panels = ((b - a).abs() / h).ceil() as usize;
    simpson(f, a, b, panels)
}

/// Trapezoid weights for a sorted, possibly non-uniform, abscissa list.
pub fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let dx = xs[i + 1] - xs[i];
        w[i] += 0.5 * dx;
        w[i + 1] += 0.5 * dx;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sine_converges() {
        let v = simpson(f64::sin, 0.0, std::f64::consts::PI, 200);
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let xs = [0.0, 0.1, 0.5, 2.0];
        let s: f64 = trapezoid_weights(&xs).iter().sum();
        assert!((s - 2.0).abs() < 1e-15);
    }
}
