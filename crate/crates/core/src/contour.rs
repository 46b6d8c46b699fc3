//! Argument-principle root isolation for analytic functions on rectangles.
//!
//! The winding number along a side is accumulated from principal phase
//! increments of `f`; a segment is accepted only when its increment is small
//! and agrees with Simpson's rule applied to the logarithmic derivative
//! `f'/f` and is short compared with `1/|f'/f|`, otherwise it is bisected. Zeros are then isolated by recursive
//! quadrisection and polished by Newton's method on `f/f'`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ScaledComplex;

/// Value and logarithmic derivative of the function being counted.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub value: ScaledComplex,
    pub log_derivative: Complex64,
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    pub fn contains(&self, z: Complex64, margin: f64) -> bool {
        z.re >= self.re_min - margin && z.re <= self.re_max + margin && z.im >= self.im_min - margin && z.im <= self.im_max + margin
    }

    pub fn square(center: Complex64, half: f64) -> Self {
        Self { re_min: center.re - half, re_max: center.re + half, im_min: center.im - half, im_max: center.im + half }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn quarters(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.re_min + fx * (self.re_max - self.re_min);
        let ym = self.im_min + fy * (self.im_max - self.im_min);
        [
            Rect { re_max: xm, im_max: ym, ..*self },
            Rect { re_min: xm, im_max: ym, ..*self },
            Rect { re_max: xm, im_min: ym, ..*self },
            Rect { re_min: xm, im_min: ym, ..*self },
        ]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContourOptions {
    /// Newton step tolerance, also the smallest box diameter.
    pub tol: f64,
    pub max_depth: usize,
    pub max_newton: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_depth: 48, max_newton: 60 }
    }
}

/// Zero cluster found in a box: location and total multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub z: Complex64,
    pub multiplicity: usize,
}

const SPLIT_FRACTIONS: [f64; 4] = [0.5137, 0.4737, 0.5419, 0.4929];

pub struct RootFinder<F> {
    f: F,
    opts: ContourOptions,
}

fn wrap(phase: f64) -> f64 {
    let mut p = phase % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

impl<F: Fn(Complex64) -> Sample> RootFinder<F> {
    pub fn new(f: F, opts: ContourOptions) -> Self {
        Self { f, opts }
    }

    fn sample(&self, z: Complex64) -> Result<Sample> {
        let s = (self.f)(z);
        if s.value.is_zero() || !s.value.mantissa.is_finite() || !s.log_derivative.is_finite() {
            return Err(Error::ContourThroughZero { re: z.re, im: z.im });
        }
        Ok(s)
    }

    /// Phase change of `f` along the straight segment `a → b`.
    fn segment(&self, a: Complex64, sa: Sample, b: Complex64, sb: Sample, scale: f64) -> Result<f64> {
        let mut stack = vec![(a, sa, b, sb)];
        let mut total = 0.0;
        while let Some((a, sa, b, sb)) = stack.pop() {
            let m = 0.5 * (a + b);
            let sm = self.sample(m)?;
            let dp = wrap(sb.value.arg() - sa.value.arg());
            let est = ((b - a) / 6.0 * (sa.log_derivative + 4.0 * sm.log_derivative + sb.log_derivative)).im;
            // the spread bound keeps every segment shorter than about twice its
            // distance to the nearest zero, so even-order zeros cannot hide
            let spread = (b - a).norm()
                * sa.log_derivative.norm().max(sm.log_derivative.norm()).max(sb.log_derivative.norm());
            if dp.abs() < 1.0 && (est - dp).abs() < 0.25 && spread < 2.0 {
                total += dp;
                continue;
            }
            if (b - a).norm() < 1e-13 * scale {
                return Err(Error::ContourThroughZero { re: m.re, im: m.im });
            }
            stack.push((m, sm, b, sb));
            stack.push((a, sa, m, sm));
        }
        Ok(total)
    }

    /// Number of zeros (with multiplicity) inside `rect`.
    pub fn winding(&self, rect: &Rect) -> Result<usize> {
        let corners = rect.corners();
        let scale = rect.diameter().max(1.0);
        let samples = corners.iter().map(|&c| self.sample(c)).collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for i in 0..4 {
            let (a, b) = (corners[i], corners[(i + 1) % 4]);
            // a few initial pieces per side keep the first Simpson estimates local
            let pieces = 4;
            let mut prev = (a, samples[i]);
            for p in 1..=pieces {
                let z = if p == pieces { b } else { a + (b - a) * (p as f64 / pieces as f64) };
                let s = if p == pieces { samples[(i + 1) % 4] } else { self.sample(z)? };
                total += self.segment(prev.0, prev.1, z, s, scale)?;
                prev = (z, s);
            }
        }
        let n = total / (2.0 * PI);
        let rounded = n.round();
        if (n - rounded).abs() > 1e-6 || rounded < 0.0 {
            let c = rect.center();
            return Err(Error::ContourThroughZero { re: c.re, im: c.im });
        }
        Ok(rounded as usize)
    }

    /// Newton iteration `z ← z − m f/f'`; returns the limit if the step
    /// falls below the tolerance.
    pub fn newton(&self, start: Complex64, multiplicity: usize) -> Option<Complex64> {
        let mut z = start;
        let mut converged = false;
        for _ in 0..self.opts.max_newton {
            let s = (self.f)(z);
            if s.value.is_zero() {
                return Some(z);
            }
            if !s.log_derivative.is_finite() || s.log_derivative.norm() == 0.0 {
                return None;
            }
            let step = multiplicity as f64 / s.log_derivative;
            z -= step;
            if !z.is_finite() {
                return None;
            }
            if converged {
                // one extra polishing step after convergence
                return Some(z);
            }
            if step.norm() <= self.opts.tol {
                converged = true;
            }
        }
        converged.then_some(z)
    }

    /// Isolates all zeros inside `rect`; returns them with the total winding
    /// number of the outer contour.
    pub fn find(&self, rect: &Rect) -> Result<(Vec<Zero>, usize)> {
        let n = self.winding(rect)?;
        let mut out = Vec::new();
        if n > 0 {
            self.refine(*rect, n, 0, &mut out)?;
        }
        Ok((out, n))
    }

    fn refine(&self, rect: Rect, n: usize, depth: usize, out: &mut Vec<Zero>) -> Result<()> {
        if depth > self.opts.max_depth {
            return Err(Error::MaxDepthExceeded(self.opts.max_depth));
        }
        let tol = self.opts.tol;
        if rect.diameter() < tol {
            out.push(Zero { z: rect.center(), multiplicity: n });
            return Ok(());
        }
        if let Some(z) = self.newton(rect.center(), n) {
            if rect.contains(z, tol) {
                if n == 1 {
                    out.push(Zero { z, multiplicity: 1 });
                    return Ok(());
                }
                let half = (1e-6 * z.norm()).max(1e-7);
                if half < 0.25 * rect.diameter() && self.winding(&Rect::square(z, half)).ok() == Some(n) {
                    out.push(Zero { z, multiplicity: n });
                    return Ok(());
                }
            }
        }
        let mut last_err = None;
        for &fx in &SPLIT_FRACTIONS {
            let fy = 1.0 - fx;
            let quarters = rect.quarters(fx, fy);
            let counts: Result<Vec<usize>> = quarters.iter().map(|q| self.winding(q)).collect();
            match counts {
                Ok(counts) if counts.iter().sum::<usize>() == n => {
                    for (q, c) in quarters.iter().zip(counts) {
                        if c > 0 {
                            self.refine(*q, c, depth + 1, out)?;
                        }
                    }
                    return Ok(());
                }
                Ok(_) => {
                    let c = rect.center();
                    last_err = Some(Error::ContourThroughZero { re: c.re, im: c.im });
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("at least one split attempted"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_sample(roots: &'static [(f64, f64)]) -> impl Fn(Complex64) -> Sample {
        move |z: Complex64| {
            let mut v = ScaledComplex::ONE;
            let mut ld = Complex64::new(0.0, 0.0);
            for &(re, im) in roots {
                let d = z - Complex64::new(re, im);
                v = v.times(d);
                ld += 1.0 / d;
            }
            Sample { value: v, log_derivative: ld }
        }
    }

    #[test]
    fn counts_and_locates_polynomial_roots() {
        static ROOTS: [(f64, f64); 4] = [(1.0, -0.5), (2.0, 0.3), (2.0, 0.3), (-3.0, 0.0)];
        let finder = RootFinder::new(poly_sample(&ROOTS), ContourOptions::default());
        let rect = Rect { re_min: 0.1, re_max: 4.0, im_min: -1.0, im_max: 1.0 };
        let (zeros, n) = finder.find(&rect).unwrap();
        assert_eq!(n, 3);
        assert_eq!(zeros.iter().map(|z| z.multiplicity).sum::<usize>(), 3);
        let double = zeros.iter().find(|z| z.multiplicity == 2).unwrap();
        assert!((double.z - Complex64::new(2.0, 0.3)).norm() < 1e-7);
        let simple = zeros.iter().find(|z| z.multiplicity == 1).unwrap();
        assert!((simple.z - Complex64::new(1.0, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn empty_box() {
        static ROOTS: [(f64, f64); 1] = [(5.0, 5.0)];
        let finder = RootFinder::new(poly_sample(&ROOTS), ContourOptions::default());
        let rect = Rect { re_min: 0.0, re_max: 1.0, im_min: 0.0, im_max: 1.0 };
        assert_eq!(finder.find(&rect).unwrap(), (vec![], 0));
    }

    #[test]
    fn zero_on_contour_is_reported() {
        static ROOTS: [(f64, f64); 1] = [(0.5, 0.0)];
        let finder = RootFinder::new(poly_sample(&ROOTS), ContourOptions::default());
        let rect = Rect { re_min: 0.0, re_max: 1.0, im_min: 0.0, im_max: 1.0 };
        assert!(matches!(finder.winding(&rect), Err(Error::ContourThroughZero { .. })));
    }

    #[test]
    fn close_pair_is_separated() {
        static ROOTS: [(f64, f64); 2] = [(1.0, 0.0), (1.0 + 1e-4, 0.0)];
        let finder = RootFinder::new(poly_sample(&ROOTS), ContourOptions::default());
        let rect = Rect { re_min: 0.3, re_max: 2.0, im_min: -0.7, im_max: 0.6 };
        let (zeros, n) = finder.find(&rect).unwrap();
        assert_eq!(n, 2);
        assert_eq!(zeros.len(), 2, "{zeros:?}");
    }
}
