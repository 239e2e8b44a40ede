//! Signed numbers stored as a sign and the natural log of the magnitude.
//!
//! Trace-polynomial derivatives grow like `exp(k * lyapunov)`; this type keeps
//! them representable for any level that matters here.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    /// -1, 0 or +1.
    pub sign: i8,
    /// ln|value|; meaningless (kept at -inf) when `sign == 0`.
    pub log_mag: f64,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar { sign: 0, log_mag: f64::NEG_INFINITY };
    pub const ONE: LogScalar = LogScalar { sign: 1, log_mag: 0.0 };

    #[must_use]
    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogScalar { sign: sign.signum(), log_mag }
        }
    }

    #[must_use]
    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScalar { sign: if x > 0.0 { 1 } else { -1 }, log_mag: x.abs().ln() }
        }
    }

    /// Plain value; overflows to +-inf or underflows to 0 outside f64 range.
    #[must_use]
    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    #[must_use]
    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    #[must_use]
    pub fn abs(self) -> Self {
        if self.sign == 0 {
            self
        } else {
            LogScalar { sign: 1, log_mag: self.log_mag }
        }
    }

    /// ln|value|, `-inf` for zero.
    #[must_use]
    pub fn ln_abs(self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_mag
        }
    }

    #[must_use]
    pub fn scale(self, c: f64) -> Self {
        self * LogScalar::from_f64(c)
    }

    /// Total order on the represented real values.
    #[must_use]
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.log_mag.total_cmp(&other.log_mag),
                _ => other.log_mag.total_cmp(&self.log_mag),
            },
            o => o,
        }
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;
    fn neg(self) -> LogScalar {
        LogScalar { sign: -self.sign, log_mag: self.log_mag }
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, b: LogScalar) -> LogScalar {
        if self.sign == 0 || b.sign == 0 {
            return Self::ZERO;
        }
        LogScalar { sign: self.sign * b.sign, log_mag: self.log_mag + b.log_mag }
    }
}

impl Div for LogScalar {
    type Output = LogScalar;
    fn div(self, b: LogScalar) -> LogScalar {
        assert!(b.sign != 0, "LogScalar division by zero");
        if self.sign == 0 {
            return Self::ZERO;
        }
        LogScalar { sign: self.sign * b.sign, log_mag: self.log_mag - b.log_mag }
    }
}

impl Add for LogScalar {
    type Output = LogScalar;
    fn add(self, b: LogScalar) -> LogScalar {
        if self.sign == 0 {
            return b;
        }
        if b.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_mag >= b.log_mag { (self, b) } else { (b, self) };
        let d = small.log_mag - big.log_mag;
        if big.sign == small.sign {
            LogScalar { sign: big.sign, log_mag: big.log_mag + d.exp().ln_1p() }
        } else if d == 0.0 {
            Self::ZERO
        } else {
            // 1 - e^d without cancellation
            LogScalar { sign: big.sign, log_mag: big.log_mag + (-d.exp_m1()).ln() }
        }
    }
}

impl Sub for LogScalar {
    type Output = LogScalar;
    fn sub(self, b: LogScalar) -> LogScalar {
        self + (-b)
    }
}
