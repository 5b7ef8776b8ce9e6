//! Discrete fractional primitives: rising factorial, nabla fractional
//! sums and differences, and the two-parameter discrete Mittag-Leffler
//! matrix function.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jordan::eigenvalues;

/// Fractional order `n`.
///
/// [`FracOrder::new`] admits `0 < n < 1`. The closed boundary `n = 1`,
/// where every operator reduces to its integer counterpart, is reachable
/// through [`FracOrder::with_unit_boundary`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(n: f64) -> Result<Self> {
        if n > 0.0 && n < 1.0 {
            Ok(Self(n))
        } else {
            Err(Error::Domain(format!("fractional order {n} outside (0, 1)")))
        }
    }

    pub fn with_unit_boundary(n: f64) -> Result<Self> {
        if n > 0.0 && n <= 1.0 {
            Ok(Self(n))
        } else {
            Err(Error::Domain(format!("fractional order {n} outside (0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Truncation policy for the Mittag-Leffler series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 10_000,
        }
    }
}

impl SeriesControl {
    pub fn new(tol: f64, max_terms: usize) -> Result<Self> {
        if tol.is_nan() || tol <= 0.0 || max_terms == 0 {
            return Err(Error::Domain(format!(
                "series control needs tol > 0 and max_terms >= 1 (got {tol}, {max_terms})"
            )));
        }
        Ok(Self { tol, max_terms })
    }
}

fn is_gamma_pole(x: f64) -> bool {
    x <= 0.0 && x == libm::round(x)
}

/// `(ln|Gamma(x)|, sign Gamma(x))`, failing at the poles.
pub fn ln_gamma(x: f64) -> Result<(f64, f64)> {
    if is_gamma_pole(x) || !x.is_finite() {
        return Err(Error::Domain(format!("Gamma has a pole at {x}")));
    }
    let (value, sign) = libm::lgamma_r(x);
    Ok((value, if sign < 0 { -1.0 } else { 1.0 }))
}

pub fn gamma(x: f64) -> Result<f64> {
    let (lg, sign) = ln_gamma(x)?;
    Ok(sign * libm::exp(lg))
}

fn ln_rising(k: f64, alpha: f64) -> Result<(f64, f64)> {
    let (top, s_top) = ln_gamma(k + alpha)?;
    let (bottom, s_bottom) = ln_gamma(k)?;
    Ok((top - bottom, s_top * s_bottom))
}

/// Rising power `k^(alpha) = Gamma(k + alpha) / Gamma(k)`.
pub fn rising_factorial(k: f64, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        if is_gamma_pole(k) {
            return Err(Error::Domain(format!("Gamma has a pole at {k}")));
        }
        return Ok(1.0);
    }
    let (lr, sign) = ln_rising(k, alpha)?;
    Ok(sign * libm::exp(lr))
}

/// Kernel weights `w_i = (i + 1)^(order - 1) / Gamma(order)` of the nabla
/// fractional sum, for `i = 0..len`. Order zero yields the identity kernel.
pub fn fractional_sum_weights(order: f64, len: usize) -> Vec<f64> {
    let mut w = vec![0.0; len];
    if len == 0 {
        return w;
    }
    w[0] = 1.0;
    for i in 1..len {
        w[i] = w[i - 1] * (i as f64 - 1.0 + order) / i as f64;
    }
    w
}

fn check_sequence(y: &[DVector<f64>]) -> Result<usize> {
    let dim = y.first().map(|v| v.len()).ok_or(Error::IndexOutOfRange { index: 0, last: -1 })?;
    if let Some(bad) = y.iter().find(|v| v.len() != dim) {
        return Err(crate::error::dim_error("sequence element", dim, bad.len()));
    }
    Ok(dim)
}

/// `nabla_base^{-n} Y_k = (1/Gamma(n)) sum_{j=base}^{k} (k-j+1)^(n-1) Y_j`,
/// where `y[0]` holds `Y_base`.
pub fn nabla_fractional_sum(y: &[DVector<f64>], base: i64, n: f64, k: i64) -> Result<DVector<f64>> {
    let dim = check_sequence(y)?;
    let last = base + y.len() as i64 - 1;
    if k < base || k > last {
        return Err(Error::IndexOutOfRange { index: k, last });
    }
    if n.is_nan() || n <= 0.0 {
        return Err(Error::Domain(format!("fractional sum order {n} must be positive")));
    }
    let span = (k - base) as usize;
    let w = fractional_sum_weights(n, span + 1);
    let mut out = DVector::zeros(dim);
    for j in 0..=span {
        out.axpy(w[span - j], &y[j], 1.0);
    }
    Ok(out)
}

fn binomial(d: usize, r: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..r {
        c = c * (d - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Riemann-Liouville composition `nabla^d o nabla_0^{-(d - order)}` with
/// `d = ceil(order)`, for a sequence starting at index 0. Backward
/// differences treat indices below 0 as zero, so `k = 0` is allowed; order
/// zero is the identity.
pub fn riemann_liouville_difference(y: &[DVector<f64>], order: f64, k: usize) -> Result<DVector<f64>> {
    let dim = check_sequence(y)?;
    if k >= y.len() {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            last: y.len() as i64 - 1,
        });
    }
    if order.is_nan() || order < 0.0 {
        return Err(Error::Domain(format!("difference order {order} must be non-negative")));
    }
    let rounded = libm::round(order);
    let order = if (order - rounded).abs() < 1e-12 { rounded } else { order };
    let d = libm::ceil(order) as usize;
    let sum_order = d as f64 - order;
    let w = fractional_sum_weights(sum_order, k + 1);
    let partial = |idx: usize| -> DVector<f64> {
        let mut z = DVector::zeros(dim);
        for j in 0..=idx {
            z.axpy(w[idx - j], &y[j], 1.0);
        }
        z
    };
    let mut out = DVector::zeros(dim);
    for r in 0..=d.min(k) {
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        out.axpy(sign * binomial(d, r), &partial(k - r), 1.0);
    }
    Ok(out)
}

/// `nabla_0^n Y_k = nabla (nabla_0^{-(1-n)} Y)_k` for `k >= 1`.
pub fn nabla_fractional_difference(y: &[DVector<f64>], n: FracOrder, k: usize) -> Result<DVector<f64>> {
    if k == 0 {
        return Err(Error::Domain("backward difference needs a predecessor (k >= 1)".into()));
    }
    riemann_liouville_difference(y, n.value(), k)
}

/// How a Mittag-Leffler value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MittagLefflerMethod {
    /// Truncated power series.
    Series,
    /// Convolution recurrence, used when the series cancels too heavily.
    Recurrence,
}

/// A Mittag-Leffler evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MittagLeffler {
    pub value: DMatrix<f64>,
    /// Series terms summed (also reported when the recurrence was used).
    pub terms: usize,
    pub method: MittagLefflerMethod,
}

/// Ratio of summed term norms to the norm of the sum beyond which the
/// series result is replaced by the recurrence (about four digits lost).
pub const CANCELLATION_LIMIT: f64 = 1e4;

/// Coefficients `g_0 ..= g_last` of `((1 - x)^n I - J)^{-1}`.
///
/// They satisfy `(I - J) g_k = delta_{k0} I - sum_{i=1}^{k} c_i g_{k-i}` with
/// `c_i` the coefficients of `(1 - x)^n`, and `g_k = (k+1)^(n-1) F_{n,n}(J (k+n)^(n))`.
pub fn resolvent_coefficients(j: &DMatrix<f64>, n: f64, last: usize) -> Result<Vec<DMatrix<f64>>> {
    let p = j.nrows();
    let lu = (DMatrix::<f64>::identity(p, p) - j).lu();
    if p > 0 && lu.determinant() == 0.0 {
        return Err(Error::Domain("I - J is singular".into()));
    }
    let c = fractional_sum_weights(-n, last + 1);
    let mut g: Vec<DMatrix<f64>> = Vec::with_capacity(last + 1);
    for k in 0..=last {
        let mut rhs = if k == 0 { DMatrix::identity(p, p) } else { DMatrix::zeros(p, p) };
        for i in 1..=k {
            rhs -= &g[k - i] * c[i];
        }
        let gk = lu.solve(&rhs).ok_or_else(|| Error::Domain("I - J is singular".into()))?;
        g.push(gk);
    }
    Ok(g)
}

pub fn spectral_radius(j: &DMatrix<f64>) -> f64 {
    eigenvalues(j).iter().fold(0.0_f64, |a, z| a.max(z.modulus()))
}

/// `F_{n,n}(J (k+n)^(n)) = sum_i J^i (k+n)^(i n) / Gamma((i+1) n)`.
///
/// Summation stops once two consecutive terms are below `ctrl.tol` relative
/// to the partial sum and the geometric tail estimate from the last term
/// ratio is below the same bound.
///
/// For negative or complex eigenvalues the terms alternate or rotate and can
/// exceed the sum by many orders of magnitude, so for `k >= 0` the value is
/// then taken from [`resolvent_coefficients`] instead; the same happens
/// whenever the summed term norms exceed [`CANCELLATION_LIMIT`] times the
/// result.
pub fn mittag_leffler(j: &DMatrix<f64>, k: i64, n: FracOrder, ctrl: &SeriesControl) -> Result<MittagLeffler> {
    if !j.is_square() {
        return Err(crate::error::dim_error("J", "square", format!("{}x{}", j.nrows(), j.ncols())));
    }
    let p = j.nrows();
    if p == 0 {
        return Ok(MittagLeffler {
            value: DMatrix::zeros(0, 0),
            terms: 0,
            method: MittagLefflerMethod::Series,
        });
    }
    let eigs = eigenvalues(j);
    let rho = eigs.iter().fold(0.0_f64, |a, z| a.max(z.modulus()));
    let oscillating = eigs
        .iter()
        .any(|z| z.modulus() > f64::EPSILON && libm::atan2(z.im, z.re).abs() > 1e-8);
    if rho >= 1.0 {
        return Err(Error::Solvability {
            violations: vec![format!("spectral radius {rho} not below 1")],
        });
    }
    let nv = n.value();
    let base = k as f64 + nv;
    if k < -1 || base < 0.0 {
        return Err(Error::Domain(format!("Mittag-Leffler argument k = {k} below -1")));
    }
    let coef = |i: usize| -> Result<f64> {
        let a = i as f64 * nv;
        let (lr, sr) = ln_rising(base, a)?;
        let (lg, sg) = ln_gamma((i as f64 + 1.0) * nv)?;
        Ok(sr * sg * libm::exp(lr - lg))
    };
    let mut sum = DMatrix::<f64>::identity(p, p) * coef(0)?;
    let mut power = DMatrix::<f64>::identity(p, p);
    let mut prev_norm = sum.norm();
    let mut magnitude = prev_norm;
    let mut streak = 0;
    for i in 1..ctrl.max_terms {
        power = &power * j;
        let term = &power * coef(i)?;
        sum += &term;
        let tn = term.norm();
        let sn = sum.norm();
        magnitude += tn;
        let tail = if tn == 0.0 {
            0.0
        } else if prev_norm > 0.0 && tn < prev_norm {
            let r = tn / prev_norm;
            tn * r / (1.0 - r)
        } else {
            f64::INFINITY
        };
        if tn <= ctrl.tol * sn && tail <= ctrl.tol * sn {
            streak += 1;
            if streak >= 2 {
                let terms = i + 1;
                if k >= 0 && (oscillating || magnitude > CANCELLATION_LIMIT * sn) {
                    let k = k as usize;
                    let g = resolvent_coefficients(j, nv, k)?;
                    let weight = rising_factorial(k as f64 + 1.0, nv - 1.0)?;
                    return Ok(MittagLeffler {
                        value: &g[k] / weight,
                        terms,
                        method: MittagLefflerMethod::Recurrence,
                    });
                }
                return Ok(MittagLeffler {
                    value: sum,
                    terms,
                    method: MittagLefflerMethod::Series,
                });
            }
        } else {
            streak = 0;
        }
        prev_norm = tn;
    }
    Err(Error::Convergence { terms: ctrl.max_terms })
}
