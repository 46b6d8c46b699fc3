//! Smooth step built from `f(y) = e^{-1/y}`, with exact first and second
//! derivatives.

/// `S(y) = f(y) / (f(y) + f(1 − y))`: 0 for `y ≤ 0`, 1 for `y ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep {
    pub start: f64,
    pub end: f64,
}

fn bump_parts(y: f64) -> (f64, f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / y).exp();
    if f == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let y2 = y * y;
    (f, f / y2, f * (1.0 / (y2 * y2) - 2.0 / (y2 * y)))
}

/// Values of the unit step and its first two derivatives at `y`.
pub fn unit_step(y: f64) -> (f64, f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if y >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (f, f1, f2) = bump_parts(y);
    let (g, gm1, gm2) = bump_parts(1.0 - y);
    // g(y) = f(1 − y): g' = −f'(1 − y), g'' = f''(1 − y)
    let (g1, g2) = (-gm1, gm2);
    let s = f + g;
    let n = f1 * g - f * g1;
    let n1 = f2 * g - f * g2;
    let value = f / s;
    let d1 = n / (s * s);
    let d2 = n1 / (s * s) - 2.0 * n * (f1 + g1) / (s * s * s);
    (value, d1, d2)
}

impl SmoothStep {
    pub fn new(start: f64, end: f64) -> Self {
        assert!(start < end, "empty transition band");
        Self { start, end }
    }

    /// Rises from 0 at `start` to 1 at `end`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let w = self.end - self.start;
        let (v, d1, d2) = unit_step((s - self.start) / w);
        (v, d1 / w, d2 / (w * w))
    }

    /// `1 − S`, equal to 1 before `start`.
    pub fn eval_falling(&self, s: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = self.eval(s);
        (1.0 - v, -d1, -d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_symmetry() {
        assert_eq!(unit_step(-0.1), (0.0, 0.0, 0.0));
        assert_eq!(unit_step(1.3), (1.0, 0.0, 0.0));
        let (v, _, d2) = unit_step(0.5);
        assert!((v - 0.5).abs() < 1e-15 && d2.abs() < 1e-12);
        for y in [0.1, 0.27, 0.4] {
            let (a, a1, a2) = unit_step(y);
            let (b, b1, b2) = unit_step(1.0 - y);
            assert!((a + b - 1.0).abs() < 1e-15);
            assert!((a1 - b1).abs() < 1e-12 && (a2 + b2).abs() < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let step = SmoothStep::new(0.45, 0.55);
        let h = 1e-6;
        for s in [0.46, 0.48, 0.5, 0.53, 0.549] {
            let (_, d1, d2) = step.eval(s);
            let (p, p1, _) = step.eval(s + h);
            let (m, m1, _) = step.eval(s - h);
            assert!((d1 - (p - m) / (2.0 * h)).abs() < 1e-6 * (1.0 + d1.abs()));
            assert!((d2 - (p1 - m1) / (2.0 * h)).abs() < 1e-5 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn flat_near_band_edges() {
        let step = SmoothStep::new(0.45, 0.55);
        let (v, d1, d2) = step.eval(0.4505);
        assert!(v < 1e-80 && d1 < 1e-70 && d2.abs() < 1e-60);
    }
}
