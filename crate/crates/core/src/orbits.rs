//! Periodic orbits of the trace map on the invariant surfaces: the period-2
//! family P_a = (a, a/(2a-1), a) and the period-4 family Q_b = (-1/2, b, -1/2),
//! with their multipliers and the closed-form curves built from them.

use crate::trace::{fricke_vogt, trace_map, TraceVector, LOG_PHI};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("no invariant bracket for lambda = {0} below a = 1e6")]
    BracketFailure(f64),
    #[error("Jacobian spectrum not of the form (mu, +-1, 1/mu): {0}")]
    EigenFailure(String),
    #[error("orbit does not close: defect {0:e}")]
    NotClosed(f64),
    #[error("coupling must be nonnegative and finite, got {0}")]
    BadCoupling(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OrbitFamily {
    P(f64),
    Q(f64),
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub points: Vec<TraceVector>,
    pub period: usize,
    /// Largest-modulus eigenvalue of the period-step Jacobian, signed.
    pub multiplier: f64,
    pub lyapunov_u: f64,
    pub family: OrbitFamily,
}

impl PeriodicOrbit {
    fn build(start: TraceVector, period: usize, multiplier: f64, family: OrbitFamily) -> Self {
        let mut points = Vec::with_capacity(period);
        let mut p = start;
        for _ in 0..period {
            points.push(p);
            p = trace_map(p);
        }
        PeriodicOrbit { points, period, multiplier, lyapunov_u: multiplier.abs().ln() / period as f64, family }
    }

    /// max over points of |T^p(x) - x|.
    #[must_use]
    pub fn closing_defect(&self) -> f64 {
        self.points
            .iter()
            .map(|&x| {
                let mut y = x;
                for _ in 0..self.period {
                    y = trace_map(y);
                }
                y.dist(&x)
            })
            .fold(0.0, f64::max)
    }
}

/// Larger-modulus root of mu^2 - c mu + 1 = 0 (|c| >= 2).
#[must_use]
pub fn dominant_root(c: f64) -> f64 {
    let d = (c * c - 4.0).max(0.0).sqrt();
    if c >= 0.0 {
        (c + d) / 2.0
    } else {
        (c - d) / 2.0
    }
}

/// Both roots of mu^2 - c mu + 1 = 0, dominant first.
#[must_use]
pub fn quadratic_roots(c: f64) -> (f64, f64) {
    let r = dominant_root(c);
    (r, 1.0 / r)
}

/// Fricke-Vogt level of P_a.
#[must_use]
pub fn invariant_p(a: f64) -> f64 {
    fricke_vogt(p_point(a))
}

fn p_point(a: f64) -> TraceVector {
    TraceVector::new(a, a / (2.0 * a - 1.0), a)
}

/// Trace of the P_a multiplier quadratic: (8a^2 - 2a + 1)/(2a - 1).
#[must_use]
pub fn p_trace(a: f64) -> f64 {
    (8.0 * a * a - 2.0 * a + 1.0) / (2.0 * a - 1.0)
}

/// Trace of the Q_b multiplier quadratic: 8(1 - 2b)b + 1.
#[must_use]
pub fn q_trace(b: f64) -> f64 {
    8.0 * (1.0 - 2.0 * b) * b + 1.0
}

/// The period-2 orbit on S_lambda, a >= 1 solved by bisection.
pub fn solve_period2(lambda: f64) -> Result<PeriodicOrbit, OrbitError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(OrbitError::BadCoupling(lambda));
    }
    let target = lambda * lambda / 4.0;
    let a = if target == 0.0 {
        1.0
    } else {
        let mut hi = 2.0;
        while invariant_p(hi) < target {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(OrbitError::BracketFailure(lambda));
            }
        }
        let mut lo = 1.0;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if invariant_p(m) < target {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(PeriodicOrbit::build(p_point(a), 2, dominant_root(p_trace(a)), OrbitFamily::P(a)))
}

/// The period-4 orbit on S_lambda: b^2 - b/2 - 1/2 = lambda^2/4, b >= 1.
pub fn solve_period4(lambda: f64) -> Result<PeriodicOrbit, OrbitError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(OrbitError::BadCoupling(lambda));
    }
    let b = (0.5 + (2.25 + lambda * lambda).sqrt()) / 2.0;
    let start = TraceVector::new(-0.5, b, -0.5);
    Ok(PeriodicOrbit::build(start, 4, dominant_root(q_trace(b)), OrbitFamily::Q(b)))
}

/// Jacobian of T at v.
#[must_use]
pub fn jacobian(v: TraceVector) -> Matrix3<f64> {
    Matrix3::new(2.0 * v.y, 2.0 * v.x, -1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

/// Largest-modulus eigenvalue of the Jacobian product around the orbit.
/// The spectrum must be {mu, +-1, 1/mu} with real mu.
pub fn orbit_multiplier_numeric(orbit: &PeriodicOrbit) -> Result<f64, OrbitError> {
    let defect = orbit.closing_defect();
    if !(defect <= 1e-8 * (1.0 + orbit.points[0].norm())) {
        return Err(OrbitError::NotClosed(defect));
    }
    let mut m = Matrix3::identity();
    for &p in &orbit.points {
        m = jacobian(p) * m;
    }
    let det = m.determinant();
    if (det.abs() - 1.0).abs() > 1e-9 {
        return Err(OrbitError::EigenFailure(format!("|det| = {det}")));
    }
    let mut ev: Vec<_> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let top = ev[0];
    if top.im.abs() > 1e-9 * top.norm() {
        return Err(OrbitError::EigenFailure(format!("complex leading eigenvalue {top}")));
    }
    if !ev.iter().any(|z| (z.norm() - 1.0).abs() < 1e-6 && z.im.abs() < 1e-6) {
        return Err(OrbitError::EigenFailure(format!("no neutral eigenvalue in {ev:?}")));
    }
    Ok(top.re)
}

/// 4 log(phi) / (log(4l^2 + sqrt(16l^4 + 56l^2 + 45) + 7) - log 2).
#[must_use]
pub fn bound_curve_p6label(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    let inner = 4.0 * l2 + (16.0 * l2 * l2 + 56.0 * l2 + 45.0).sqrt() + 7.0;
    4.0 * LOG_PHI / (inner.ln() - std::f64::consts::LN_2)
}

/// 6 log(phi) / (log(l^4 + sqrt((l^4 + 8l^2 + 18)^2 - 4) + 8l^2 + 18) - log 2).
#[must_use]
pub fn bound_curve_p4label(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    let l4 = l2 * l2;
    let s = l4 + 8.0 * l2 + 18.0;
    let inner = l4 + (s * s - 4.0).sqrt() + 8.0 * l2 + 18.0;
    6.0 * LOG_PHI / (inner.ln() - std::f64::consts::LN_2)
}

/// Closed-form multiplier of the period-2 family as a function of
/// I = lambda^2/4, with A = sqrt(16I + 25) and B = sqrt(8I - A + 5).
#[must_use]
pub fn period2_multiplier_closed_form(lambda: f64) -> f64 {
    let i = lambda * lambda / 4.0;
    let r2 = std::f64::consts::SQRT_2;
    let a = (16.0 * i + 25.0).sqrt();
    let b = (8.0 * i - a + 5.0).max(0.0).sqrt();
    let rad = 256.0 * i * i
        + 16.0 * (2.0 * a + 3.0 * r2 * b + r2 * a * b + 35.0) * i
        + 22.0 * a
        + 75.0 * r2 * b
        + 21.0 * r2 * a * b
        + 250.0;
    let num = r2 * rad.sqrt() + 16.0 * i + a + 2.0 * r2 * b + r2 * a * b + 23.0;
    num / (2.0 * a + 2.0 * r2 * b - 2.0)
}

/// 2 log(phi) / log of the closed-form period-2 multiplier.
#[must_use]
pub fn gamma_closed_form(lambda: f64) -> f64 {
    2.0 * LOG_PHI / period2_multiplier_closed_form(lambda).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohomologyReport {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub lyapunov_p: f64,
    pub lyapunov_q: f64,
    /// 8a^3 - 4a + 1 at the solved a.
    pub cubic_at_a: f64,
    pub distinct: bool,
}

impl CohomologyReport {
    #[must_use]
    pub fn ok(&self) -> bool {
        self.distinct && self.cubic_at_a >= 5.0 - 1e-12
    }
}

/// Per-step exponents of P_a and Q_b on the same surface differ, so the
/// unstable log-derivative is not cohomologous to a constant.
pub fn cohomology_check(lambda: f64) -> Result<CohomologyReport, OrbitError> {
    let p = solve_period2(lambda)?;
    let q = solve_period4(lambda)?;
    let (OrbitFamily::P(a), OrbitFamily::Q(b)) = (p.family, q.family) else {
        unreachable!("families are fixed by the solvers")
    };
    let cubic = 8.0 * a * a * a - 4.0 * a + 1.0;
    Ok(CohomologyReport {
        lambda,
        a,
        b,
        lyapunov_p: p.lyapunov_u,
        lyapunov_q: q.lyapunov_u,
        cubic_at_a: cubic,
        distinct: (p.lyapunov_u - q.lyapunov_u).abs() > 1e-9,
    })
}

/// CSV over a coupling grid:
/// lambda,bound_p6label,bound_p4label,gamma_closed_form,gamma_period2,gamma_period4.
/// gamma_period2 = log(phi)/Lyap(P_a) and gamma_period4 = log(phi)/Lyap(Q_b);
/// the latter reproduces bound_p6label.
pub fn orbits_csv(lambdas: &[f64]) -> Result<String, OrbitError> {
    let mut s = String::from("lambda,bound_p6label,bound_p4label,gamma_closed_form,gamma_period2,gamma_period4\n");
    for &l in lambdas {
        let p = solve_period2(l)?;
        let q = solve_period4(l)?;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            crate::fmt17(l),
            crate::fmt17(bound_curve_p6label(l)),
            crate::fmt17(bound_curve_p4label(l)),
            crate::fmt17(gamma_closed_form(l)),
            crate::fmt17(LOG_PHI / p.lyapunov_u),
            crate::fmt17(LOG_PHI / q.lyapunov_u)
        );
    }
    Ok(s)
}
