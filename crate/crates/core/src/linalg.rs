//! Dense complex linear algebra: LU with an overflow-safe determinant, SVD
//! based kernels and minimal-norm solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Complex number `mantissa · 2^exponent` with `|mantissa| ∈ [1, 2)`, or zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub exponent: i64,
}

impl ScaledComplex {
    pub const ZERO: Self = Self { mantissa: Complex64::new(0.0, 0.0), exponent: 0 };
    pub const ONE: Self = Self { mantissa: Complex64::new(1.0, 0.0), exponent: 0 };

    pub fn new(value: Complex64) -> Self {
        Self::ONE.times(value)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == Complex64::new(0.0, 0.0)
    }

    pub fn times(self, factor: Complex64) -> Self {
        let m = self.mantissa * factor;
        let norm = m.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Self { mantissa: m, exponent: self.exponent };
        }
        let shift = norm.log2().floor() as i32;
        let mut mantissa = m * 2f64.powi(-shift);
        let mut exponent = self.exponent + shift as i64;
        // log2 rounding at exact powers of two
        if mantissa.norm() >= 2.0 {
            mantissa /= 2.0;
            exponent += 1;
        } else if mantissa.norm() < 1.0 {
            mantissa *= 2.0;
            exponent -= 1;
        }
        Self { mantissa, exponent }
    }

    /// Phase of the represented number.
    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    /// `log2 |z|`, `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().log2() + self.exponent as f64
        }
    }

    /// Plain value; may overflow to infinity or underflow to zero.
    pub fn value(&self) -> Complex64 {
        let e = self.exponent.clamp(-2000, 2000) as i32;
        self.mantissa * 2f64.powi(e)
    }
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign_flips: usize,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_flips = 0;
        for k in 0..n {
            let (p, _) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
                sign_flips += 1;
            }
            let pivot = lu[(k, k)];
            if pivot.norm() == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor.norm() == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Self { lu, perm, sign_flips }
    }

    pub fn det(&self) -> ScaledComplex {
        let n = self.lu.nrows();
        let mut d = if self.sign_flips.is_multiple_of(2) { ScaledComplex::ONE } else { ScaledComplex::new(Complex64::new(-1.0, 0.0)) };
        for k in 0..n {
            d = d.times(self.lu[(k, k)]);
        }
        d
    }

    pub fn is_singular(&self) -> bool {
        (0..self.lu.nrows()).any(|k| self.lu[(k, k)].norm() == 0.0)
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        let n = self.lu.nrows();
        let mut x: CVector = CVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// `tr(A⁻¹ B)`.
    pub fn trace_solve(&self, b: &CMatrix) -> Complex64 {
        (0..b.ncols())
            .map(|j| self.solve(&b.column(j).into_owned())[j])
            .sum()
    }
}

/// Singular values (descending) and right singular vectors of `a`.
pub fn svd(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.ncols();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = CMatrix::zeros(n, order.len());
    for (c, &i) in order.iter().enumerate() {
        for r in 0..n {
            v[(r, c)] = v_t[(i, r)].conj();
        }
    }
    (values, v)
}

/// Orthonormal basis of the numerical kernel: right singular vectors whose
/// singular value is at most `rel_tol · σ_max`, and at least `min_dim` of them.
pub fn kernel(a: &CMatrix, rel_tol: f64, min_dim: usize) -> Vec<CVector> {
    let (values, v) = svd(a);
    let n = values.len();
    let smax = values.first().copied().unwrap_or(0.0);
    let small = values.iter().filter(|&&s| s <= rel_tol * smax).count();
    let dim = small.max(min_dim).min(n);
    (n - dim..n).map(|c| v.column(c).into_owned()).collect()
}

/// Minimal-norm least-squares solution of `a x = b`.
pub fn min_norm_solve(a: &CMatrix, b: &CVector, rel_tol: f64) -> CVector {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, rel_tol * smax).expect("SVD with U and V^T")
}

pub fn smallest_singular_ratio(a: &CMatrix) -> f64 {
    let s = a.clone().singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}
