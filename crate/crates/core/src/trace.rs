//! The trace map, its invariant, the line of initial conditions, the
//! trace-polynomial recursion and transfer matrices.

use crate::dd::Dd;
use crate::logscalar::LogScalar;
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Golden mean (1 + sqrt 5) / 2.
pub const PHI: f64 = 1.618_033_988_749_895;
/// Inverse golden mean (sqrt 5 - 1) / 2, the rotation number of the potential.
pub const ALPHA: f64 = 0.618_033_988_749_895;
/// ln(PHI).
pub const LOG_PHI: f64 = 0.481_211_825_059_603_4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("coupling must be finite and nonnegative, got {0}")]
    BadCoupling(f64),
    #[error("trace value overflowed f64 at level {level}; energy escapes the spectrum, use the log-magnitude path")]
    Overflow { level: usize },
}

/// Coupling constant with the derived constants. Only `lambda` is stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub lambda: f64,
}

impl CouplingParams {
    /// `lambda == 0` is accepted for the free-case oracle.
    pub fn new(lambda: f64) -> Result<Self, TraceError> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(CouplingParams { lambda })
        } else {
            Err(TraceError::BadCoupling(lambda))
        }
    }

    /// Level of the invariant surface containing the line of initial conditions.
    #[must_use]
    pub fn invariant_level(&self) -> f64 {
        self.lambda * self.lambda / 4.0
    }

    #[must_use]
    pub fn alpha(&self) -> f64 {
        ALPHA
    }

    #[must_use]
    pub fn phi(&self) -> f64 {
        PHI
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TraceVector {
    #[must_use]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        TraceVector { x, y, z }
    }

    #[must_use]
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    #[must_use]
    pub fn dist(&self, o: &TraceVector) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

/// T(x, y, z) = (2xy - z, x, y).
#[must_use]
pub fn trace_map(v: TraceVector) -> TraceVector {
    TraceVector::new(2.0 * v.x * v.y - v.z, v.x, v.y)
}

/// Fricke-Vogt invariant x^2 + y^2 + z^2 - 2xyz - 1.
#[must_use]
pub fn fricke_vogt(v: TraceVector) -> f64 {
    v.x * v.x + v.y * v.y + v.z * v.z - 2.0 * v.x * v.y * v.z - 1.0
}

/// Point ((E - lambda)/2, E/2, 1) of the line of initial conditions.
#[must_use]
pub fn line_point(lambda: f64, e: f64) -> TraceVector {
    TraceVector::new((e - lambda) / 2.0, e / 2.0, 1.0)
}

/// Values x_{-1}..x_K at one energy, with optional derivatives in E.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSequence {
    pub lambda: f64,
    pub energy: f64,
    /// `values[i]` is x_{i-1}.
    pub values: Vec<f64>,
    /// `derivatives[i]` is x'_{i-1}.
    pub derivatives: Option<Vec<LogScalar>>,
}

impl TraceSequence {
    /// x_k for k >= -1.
    #[must_use]
    pub fn x(&self, k: isize) -> f64 {
        self.values[(k + 1) as usize]
    }

    /// x'_k for k >= -1, if derivatives were requested.
    #[must_use]
    pub fn dx(&self, k: isize) -> Option<LogScalar> {
        self.derivatives.as_ref().map(|d| d[(k + 1) as usize])
    }

    #[must_use]
    pub fn k_max(&self) -> usize {
        self.values.len() - 2
    }

    /// The point T^k(line_point) = (x_{k+1}, x_k, x_{k-1}) for 0 <= k < K.
    #[must_use]
    pub fn point(&self, k: usize) -> TraceVector {
        let k = k as isize;
        TraceVector::new(self.x(k + 1), self.x(k), self.x(k - 1))
    }
}

/// Run the recursion x_{k+1} = 2 x_k x_{k-1} - x_{k-2} from
/// x_{-1} = 1, x_0 = E/2, x_1 = (E - lambda)/2.
///
/// Derivatives are carried in signed-log form and never overflow; the values
/// themselves are plain reals and overflow is reported as an error.
pub fn trace_sequence(
    lambda: f64,
    e: f64,
    k_max: usize,
    with_derivatives: bool,
) -> Result<TraceSequence, TraceError> {
    let mut values = Vec::with_capacity(k_max + 2);
    values.push(1.0);
    values.push(e / 2.0);
    if k_max >= 1 {
        values.push((e - lambda) / 2.0);
    }
    for k in 1..k_max {
        let (a, b, c) = (values[k + 1], values[k], values[k - 1]);
        let next = 2.0 * a * b - c;
        if !next.is_finite() {
            return Err(TraceError::Overflow { level: k + 1 });
        }
        values.push(next);
    }
    let derivatives = if with_derivatives {
        let half = LogScalar::from_f64(0.5);
        let two = LogScalar::from_f64(2.0);
        let mut d = Vec::with_capacity(k_max + 2);
        d.push(LogScalar::ZERO);
        d.push(half);
        if k_max >= 1 {
            d.push(half);
        }
        for k in 1..k_max {
            let xa = LogScalar::from_f64(values[k + 1]);
            let xb = LogScalar::from_f64(values[k]);
            let next = two * (d[k + 1] * xb + xa * d[k]) - d[k - 1];
            d.push(next);
        }
        Some(d)
    } else {
        None
    };
    Ok(TraceSequence { lambda, energy: e, values, derivatives })
}

/// Outcome of a high-precision evaluation of x_k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceValue {
    Finite(Dd),
    /// The orbit has entered the escaping regime: |x_j| > 1 for every later
    /// level and x_k has the given sign.
    Escaped(i8),
}

impl TraceValue {
    #[must_use]
    pub fn sign(self) -> i8 {
        match self {
            TraceValue::Finite(v) => v.signum_i(),
            TraceValue::Escaped(s) => s,
        }
    }

    /// |x_k| < 1.
    #[must_use]
    pub fn inside(self) -> bool {
        match self {
            TraceValue::Finite(v) => v.abs() < Dd::ONE,
            TraceValue::Escaped(_) => false,
        }
    }

    #[must_use]
    pub fn to_f64(self) -> f64 {
        match self {
            TraceValue::Finite(v) => v.to_f64(),
            TraceValue::Escaped(s) => f64::from(s) * f64::INFINITY,
        }
    }
}

#[inline]
fn sign_of(v: Dd) -> i8 {
    let s = v.signum_i();
    if s == 0 {
        1
    } else {
        s
    }
}

/// x_k(E) in double-double precision.
///
/// Once |x_j| > 1, |x_{j-1}| > 1 and |x_j| >= |x_{j-2}|, the recursion grows
/// monotonically in modulus and signs obey s_{j+1} = s_j s_{j-1}; evaluation
/// stops there and only the sign is tracked.
#[must_use]
pub fn trace_value_dd(lambda: f64, e: Dd, k: usize) -> TraceValue {
    let half = e.scale2(0.5);
    match k {
        0 => return TraceValue::Finite(half),
        1 => return TraceValue::Finite(half.add_f64(-lambda / 2.0)),
        _ => {}
    }
    let mut c = Dd::ONE;
    let mut b = half;
    let mut a = half.add_f64(-lambda / 2.0);
    let one = Dd::ONE;
    for j in 1..k {
        let aa = a.abs();
        if aa > one && b.abs() > one && aa >= c.abs() {
            let (mut sa, mut sb) = (sign_of(a), sign_of(b));
            for _ in j..k {
                let s = sa * sb;
                sb = sa;
                sa = s;
            }
            return TraceValue::Escaped(sa);
        }
        let next = (a * b).scale2(2.0) - c;
        c = b;
        b = a;
        a = next;
    }
    TraceValue::Finite(a)
}

/// x_k(E) and x_k'(E) in double-double precision, for energies whose orbit
/// stays bounded up to level k (band interiors). Derivatives are renormalised
/// by exact powers of two and returned in signed-log form.
#[must_use]
pub fn trace_with_derivative_dd(lambda: f64, e: Dd, k: usize) -> (Dd, LogScalar) {
    let half = e.scale2(0.5);
    let x1 = half.add_f64(-lambda / 2.0);
    let dhalf = Dd::from_f64(0.5);
    match k {
        0 => return (half, LogScalar::from_f64(0.5)),
        1 => return (x1, LogScalar::from_f64(0.5)),
        _ => {}
    }
    const BIG: f64 = 1e150;
    const SHRINK: f64 = 1.0 / 1_606_938_044_258_990_275_541_962_092_341_162_602_522_202_993_782_792_835_301_376.0; // 2^-200
    let ln_grow = 200.0 * std::f64::consts::LN_2;
    let (mut c, mut b, mut a) = (Dd::ONE, half, x1);
    let (mut dc, mut db, mut da) = (Dd::ZERO, dhalf, dhalf);
    let mut log_scale = 0.0;
    for _ in 1..k {
        let next = (a * b).scale2(2.0) - c;
        let dnext = (da * b + a * db).scale2(2.0) - dc;
        c = b;
        b = a;
        a = next;
        dc = db;
        db = da;
        da = dnext;
        if da.hi.abs() > BIG {
            dc = dc.scale2(SHRINK);
            db = db.scale2(SHRINK);
            da = da.scale2(SHRINK);
            log_scale += ln_grow;
        }
    }
    let d = da.to_f64();
    let ls = if d == 0.0 {
        LogScalar::ZERO
    } else {
        LogScalar::new(if d > 0.0 { 1 } else { -1 }, d.abs().ln() + log_scale)
    };
    (a, ls)
}

/// x_{-1}..x_k at one energy in double-double precision (no escape cut-off).
#[must_use]
pub fn trace_values_dd(lambda: f64, e: Dd, k: usize) -> Vec<Dd> {
    let half = e.scale2(0.5);
    let mut v = Vec::with_capacity(k + 2);
    v.push(Dd::ONE);
    v.push(half);
    if k >= 1 {
        v.push(half.add_f64(-lambda / 2.0));
    }
    for j in 1..k {
        let next = (v[j + 1] * v[j]).scale2(2.0) - v[j - 1];
        v.push(next);
    }
    v
}

/// Fractional part as v - floor(v), in [0, 1).
#[must_use]
pub fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// Site potential lambda * chi_[1-alpha, 1)(n alpha + omega mod 1).
#[must_use]
pub fn potential(n: i64, omega: f64, lambda: f64) -> f64 {
    let t = frac(n as f64 * ALPHA + omega);
    if t >= 1.0 - ALPHA {
        lambda
    } else {
        0.0
    }
}

/// Product T(n) ... T(1) of one-step matrices [[z - V(l), -1], [1, 0]] for
/// n > 0; for n < 0 the product T(n+1)^{-1} ... T(0)^{-1}; identity for n = 0.
#[must_use]
pub fn transfer_matrix(n: i64, omega: f64, z: Complex64, lambda: f64) -> Matrix2<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut m = Matrix2::identity();
    if n > 0 {
        for l in 1..=n {
            let v = potential(l, omega, lambda);
            let step = Matrix2::new(z - v, -one, one, zero);
            m = step * m;
        }
    } else {
        for l in (n + 1..=0).rev() {
            let v = potential(l, omega, lambda);
            // inverse of [[a, -1], [1, 0]] is [[0, 1], [-1, a]]
            let inv = Matrix2::new(zero, one, -one, z - v);
            m = inv * m;
        }
    }
    m
}

/// Largest real root of x^3 - (2 + lambda) x - 1 by Newton's method from the
/// right, where the cubic is convex and increasing.
#[must_use]
pub fn a_lambda(lambda: f64) -> f64 {
    let c = 2.0 + lambda;
    let f = |x: f64| x * x * x - c * x - 1.0;
    let mut x = c.sqrt() + 1.0;
    // the iteration decreases monotonically to the root; stop when it stalls
    for _ in 0..200 {
        let step = f(x) / (3.0 * x * x - c);
        let next = x - step;
        if !(next < x) {
            break;
        }
        x = next;
    }
    // the last step may undershoot by rounding; keep the smaller residual
    let lower = f64::from_bits(x.to_bits() - 1);
    if f(lower).abs() < f(x).abs() {
        lower
    } else {
        x
    }
}
