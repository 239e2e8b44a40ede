//! Hoelder exponent, dimensions of the density of states and of the
//! spectrum, and the upper transport exponent, estimated from the root
//! derivatives of the level-k trace polynomials.
//!
//! With L_k(min), L_k(mean), L_k(max) the smallest, average and largest of
//! (1/k) ln|x_k'| over the F_k roots, the per-level estimates are
//! log(phi)/L_k(max) (gamma), log(phi)/L_k(mean) (dim nu), the zero of
//! P_k(t) = (1/k) ln sum exp(-t ln|x_k'|) (dim Sigma) and log(phi)/L_k(min)
//! (alpha). Limits in k are taken on the exponent side: L_k(mean) and
//! P_k(t) are fitted by c + d/k over five levels, while the extremal
//! exponents, which oscillate with period dividing 6 in k, use the two
//! levels K and K-6.

use crate::bands::{classify_bands, compute_bands, BandError, BandHierarchy};
use crate::combinatorics::{build_comb_table, comb_ratio, ls_intercept};
use crate::orbits::{bound_curve_p4label, bound_curve_p6label, gamma_closed_form};
use crate::thermo::{bowen_root, pressure_from_logs, ThermoError};
use crate::trace::LOG_PHI;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Levels in the c + d/k fit for the mean exponent and the pressure.
pub const FIT_LEVELS: usize = 5;
/// Level lag for the extremal exponents.
pub const EXTREMAL_LAG: usize = 6;
/// Fit windows end at K, K-1, ..., K-WINDOWS+1; their spread is the error
/// indicator.
pub const WINDOWS: usize = 3;
/// Smallest k_max for which the limits are extrapolated.
pub const MIN_EXTRAPOLATION_LEVEL: usize = EXTREMAL_LAG + WINDOWS + 1;
/// Tolerance on the orbit-bound cross-checks.
pub const ORBIT_TOLERANCE: f64 = 0.01;

/// 1.5 log(phi), (5 + sqrt 5)/4 log(phi), log(1 + sqrt 2), 2 log(phi).
pub const ASYMPTOTIC_GAMMA: f64 = 1.5 * LOG_PHI;
pub const ASYMPTOTIC_NU: f64 = 0.870_520_369_427_006_8;
pub const ASYMPTOTIC_SIGMA: f64 = 0.881_373_587_019_542_9;
pub const ASYMPTOTIC_ALPHA: f64 = 2.0 * LOG_PHI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("bands: {0}")]
    Band(#[from] BandError),
    #[error("pressure: {0}")]
    Thermo(#[from] ThermoError),
    #[error("need k_max >= 2, got {0}")]
    TooFewLevels(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub per_level: Vec<(usize, f64)>,
    pub extrapolated: f64,
    /// Spread of the estimates from the fit windows ending at K, K-1, K-2.
    pub error_indicator: f64,
    pub windows: Vec<f64>,
}

impl SpectralEstimate {
    fn new(per_level: Vec<(usize, f64)>, windows: Vec<f64>) -> Self {
        let (extrapolated, windows) = if windows.is_empty() {
            // too few levels: the top per-level values stand in for the windows
            let tail: Vec<f64> = per_level.iter().rev().take(WINDOWS).map(|p| p.1).collect();
            (tail[0], tail)
        } else {
            (windows[0], windows)
        };
        let hi = windows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = windows.iter().copied().fold(f64::INFINITY, f64::min);
        SpectralEstimate { value: extrapolated, per_level, extrapolated, error_indicator: hi - lo, windows }
    }

    #[must_use]
    pub fn at_level(&self, k: usize) -> Option<f64> {
        self.per_level.iter().find(|p| p.0 == k).map(|p| p.1)
    }
}

/// ln|x_k'| at every root of every level.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeLogs {
    pub lambda: f64,
    pub logs: Vec<Vec<f64>>,
}

impl DerivativeLogs {
    #[must_use]
    pub fn from_hierarchy(h: &BandHierarchy) -> Self {
        DerivativeLogs {
            lambda: h.lambda,
            logs: h.levels.iter().map(|lv| lv.iter().map(|b| b.deriv.ln_abs()).collect()).collect(),
        }
    }

    #[must_use]
    pub fn k_max(&self) -> usize {
        self.logs.len() - 1
    }

    fn max_log(&self, k: usize) -> f64 {
        self.logs[k].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn min_log(&self, k: usize) -> f64 {
        self.logs[k].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mean of (1/k) ln|x_k'|, summed left to right.
    fn mean_exponent(&self, k: usize) -> f64 {
        self.logs[k].iter().sum::<f64>() / (k as f64 * self.logs[k].len() as f64)
    }

    #[must_use]
    pub fn pressure(&self, k: usize, t: f64) -> f64 {
        pressure_from_logs(&self.logs[k], k, t)
    }

    /// Window end points K, K-1, K-2 if every window fits above level 1.
    fn window_ends(&self) -> Vec<usize> {
        let kmax = self.k_max();
        if kmax < MIN_EXTRAPOLATION_LEVEL {
            return Vec::new();
        }
        (0..WINDOWS).map(|i| kmax - i).collect()
    }
}

/// c in y_k = c + d/k, least squares over levels end-FIT_LEVELS+1..=end.
fn fit_window(end: usize, y: impl Fn(usize) -> f64) -> f64 {
    let ks: Vec<usize> = (end + 1 - FIT_LEVELS..=end).collect();
    let x: Vec<f64> = ks.iter().map(|&k| 1.0 / k as f64).collect();
    let v: Vec<f64> = ks.iter().map(|&k| y(k)).collect();
    ls_intercept(&x, &v)
}

/// c in (1/k) s_k = c + d/k through levels end and end - EXTREMAL_LAG.
fn extremal_window(end: usize, s: impl Fn(usize) -> f64) -> f64 {
    (s(end) - s(end - EXTREMAL_LAG)) / EXTREMAL_LAG as f64
}

fn levels(d: &DerivativeLogs) -> std::ops::RangeInclusive<usize> {
    2..=d.k_max()
}

pub fn estimate_gamma_from(d: &DerivativeLogs) -> SpectralEstimate {
    let per = levels(d).map(|k| (k, LOG_PHI * k as f64 / d.max_log(k))).collect();
    let w = d.window_ends().into_iter().map(|e| LOG_PHI / extremal_window(e, |k| d.max_log(k))).collect();
    SpectralEstimate::new(per, w)
}

pub fn estimate_alpha_from(d: &DerivativeLogs) -> SpectralEstimate {
    let per = levels(d).map(|k| (k, LOG_PHI * k as f64 / d.min_log(k))).collect();
    let w = d.window_ends().into_iter().map(|e| LOG_PHI / extremal_window(e, |k| d.min_log(k))).collect();
    SpectralEstimate::new(per, w)
}

pub fn estimate_dim_nu_from(d: &DerivativeLogs) -> SpectralEstimate {
    let per = levels(d).map(|k| (k, LOG_PHI / d.mean_exponent(k))).collect();
    let w = d.window_ends().into_iter().map(|e| LOG_PHI / fit_window(e, |k| d.mean_exponent(k))).collect();
    SpectralEstimate::new(per, w)
}

pub fn estimate_dim_sigma_from(d: &DerivativeLogs) -> Result<SpectralEstimate, ReportError> {
    let mut per = Vec::new();
    for k in levels(d) {
        let f = |t: f64| d.pressure(k, t);
        let r = bowen_root(f).ok_or(ThermoError::RootNotBracketed { level: k, p0: f(0.0), p2: f(2.0) })?;
        per.push((k, r));
    }
    let mut w = Vec::new();
    for e in d.window_ends() {
        let f = |t: f64| fit_window(e, |k| d.pressure(k, t));
        let r = bowen_root(f).ok_or(ThermoError::RootNotBracketed { level: e, p0: f(0.0), p2: f(2.0) })?;
        w.push(r);
    }
    Ok(SpectralEstimate::new(per, w))
}

fn logs_for(lambda: f64, k_max: usize) -> Result<DerivativeLogs, ReportError> {
    if k_max < 2 {
        return Err(ReportError::TooFewLevels(k_max));
    }
    Ok(DerivativeLogs::from_hierarchy(&compute_bands(lambda, k_max)?))
}

pub fn estimate_alpha(lambda: f64, k_max: usize) -> Result<SpectralEstimate, ReportError> {
    Ok(estimate_alpha_from(&logs_for(lambda, k_max)?))
}

pub fn estimate_gamma(lambda: f64, k_max: usize) -> Result<SpectralEstimate, ReportError> {
    Ok(estimate_gamma_from(&logs_for(lambda, k_max)?))
}

pub fn estimate_dim_nu(lambda: f64, k_max: usize) -> Result<SpectralEstimate, ReportError> {
    Ok(estimate_dim_nu_from(&logs_for(lambda, k_max)?))
}

pub fn estimate_dim_sigma(lambda: f64, k_max: usize) -> Result<SpectralEstimate, ReportError> {
    estimate_dim_sigma_from(&logs_for(lambda, k_max)?)
}

/// Box-counting dimension of the union of level-k bands: slope of
/// log N(eps) against log(1/eps) on a geometric range of eps between
/// 1e-2 times the spectrum diameter and 10 times the widest band; None when
/// that range is empty or wider than nine decades.
#[must_use]
pub fn box_count_dimension(h: &BandHierarchy, level: usize) -> Option<f64> {
    let lv = h.level(level).ok()?;
    let lo = lv.first()?.left.to_f64();
    let hi = lv.last()?.right.to_f64();
    let widest = lv.iter().map(crate::bands::Band::width).fold(0.0, f64::max);
    let (e_max, e_min) = (1e-2 * (hi - lo), 10.0 * widest);
    // scale ranges beyond 1e9 make box counts meaningless (and overflow)
    if !(e_min > 1e-9 * e_max && e_min < e_max / 4.0) {
        return None;
    }
    let n = 12;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let eps = e_max * (e_min / e_max).powf(i as f64 / (n - 1) as f64);
        let mut count = 0u64;
        let mut last: Option<i64> = None;
        for b in lv {
            let a = ((b.left.to_f64() - lo) / eps).floor() as i64;
            let c = ((b.right.to_f64() - lo) / eps).floor() as i64;
            let start = match last {
                Some(l) if a <= l => l + 1,
                _ => a,
            };
            if c >= start {
                count += (c - start + 1) as u64;
            }
            last = Some(last.map_or(c, |l| l.max(c)));
        }
        x.push(-eps.ln());
        y.push((count as f64).ln());
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitBounds {
    pub bound_p6label: f64,
    pub bound_p4label: f64,
    pub gamma_closed_form: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainStatus {
    Strict,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainAudit {
    pub status: ChainStatus,
    /// dim nu - gamma, dim Sigma - dim nu, alpha - dim Sigma.
    pub margins: [f64; 3],
    /// Sums of adjacent error indicators.
    pub required: [f64; 3],
    /// gamma_k <= dim nu_k <= alpha_k at every level.
    pub per_level_order: bool,
    /// Levels where the zero of P_k falls outside [gamma_k, alpha_k].
    pub bowen_outside: Vec<usize>,
    /// gamma <= every orbit upper bound + tol and alpha >= every orbit
    /// lower bound - tol.
    pub orbit_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub version: String,
    pub k_max: usize,
    pub fit_levels: usize,
    pub extremal_lag: usize,
    pub windows: usize,
    pub root_tolerance: String,
    pub orbit_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda: f64,
    pub gamma: SpectralEstimate,
    pub dim_nu: SpectralEstimate,
    pub dim_sigma: SpectralEstimate,
    pub alpha: SpectralEstimate,
    pub orbit_bounds: OrbitBounds,
    pub box_dimension: Option<f64>,
    pub chain: ChainAudit,
    pub metadata: ReportMetadata,
}

impl SpectralReport {
    /// (gamma, dim nu, dim Sigma, alpha) values.
    #[must_use]
    pub fn values(&self) -> [f64; 4] {
        [self.gamma.value, self.dim_nu.value, self.dim_sigma.value, self.alpha.value]
    }

    #[must_use]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

fn chain_audit(g: &SpectralEstimate, n: &SpectralEstimate, s: &SpectralEstimate, a: &SpectralEstimate, ob: &OrbitBounds) -> ChainAudit {
    let margins = [n.value - g.value, s.value - n.value, a.value - s.value];
    let required = [
        g.error_indicator + n.error_indicator,
        n.error_indicator + s.error_indicator,
        s.error_indicator + a.error_indicator,
    ];
    let strict = margins.iter().zip(&required).all(|(m, r)| m > r);
    let per_level_order = g.per_level.iter().all(|&(k, gk)| {
        let nk = n.at_level(k).unwrap_or(f64::NAN);
        let ak = a.at_level(k).unwrap_or(f64::NAN);
        gk <= nk && nk <= ak
    });
    let bowen_outside = s
        .per_level
        .iter()
        .filter(|&&(k, sk)| {
            let gk = g.at_level(k).unwrap_or(f64::NAN);
            let ak = a.at_level(k).unwrap_or(f64::NAN);
            !(gk <= sk && sk <= ak)
        })
        .map(|p| p.0)
        .collect();
    let upper = ob.gamma_closed_form.min(ob.bound_p6label).min(ob.bound_p4label);
    let lower = ob.bound_p6label.max(ob.bound_p4label);
    let orbit_consistent = g.value <= upper + ORBIT_TOLERANCE && a.value >= lower - ORBIT_TOLERANCE;
    ChainAudit {
        status: if strict { ChainStatus::Strict } else { ChainStatus::Inconclusive },
        margins,
        required,
        per_level_order,
        bowen_outside,
        orbit_consistent,
    }
}

/// All four estimates from a computed hierarchy.
pub fn report_from_hierarchy(h: &BandHierarchy) -> Result<SpectralReport, ReportError> {
    let k_max = h.k_max();
    if k_max < 2 {
        return Err(ReportError::TooFewLevels(k_max));
    }
    let d = DerivativeLogs::from_hierarchy(h);
    let gamma = estimate_gamma_from(&d);
    let dim_nu = estimate_dim_nu_from(&d);
    let dim_sigma = estimate_dim_sigma_from(&d)?;
    let alpha = estimate_alpha_from(&d);
    let lambda = h.lambda;
    let orbit_bounds = OrbitBounds {
        bound_p6label: bound_curve_p6label(lambda),
        bound_p4label: bound_curve_p4label(lambda),
        gamma_closed_form: gamma_closed_form(lambda),
    };
    let chain = chain_audit(&gamma, &dim_nu, &dim_sigma, &alpha, &orbit_bounds);
    Ok(SpectralReport {
        lambda,
        box_dimension: box_count_dimension(h, k_max),
        gamma,
        dim_nu,
        dim_sigma,
        alpha,
        orbit_bounds,
        chain,
        metadata: ReportMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            k_max,
            fit_levels: FIT_LEVELS,
            extremal_lag: EXTREMAL_LAG,
            windows: WINDOWS,
            root_tolerance: "bisection to 1e-8 of bracket, then Newton in double-double to 1e-31 relative".into(),
            orbit_tolerance: ORBIT_TOLERANCE,
        },
    })
}

pub fn full_report(lambda: f64, k_max: usize) -> Result<SpectralReport, ReportError> {
    report_from_hierarchy(&compute_bands(lambda, k_max)?)
}

/// S_l(lambda) = ((lambda - 4) + sqrt((lambda - 4)^2 - 12))/2, lambda >= 8.
#[must_use]
pub fn s_lower(lambda: f64) -> f64 {
    let a = lambda - 4.0;
    0.5 * (a + (a * a - 12.0).sqrt())
}

/// S_u(lambda) = 2 lambda + 22.
#[must_use]
pub fn s_upper(lambda: f64) -> f64 {
    2.0 * lambda + 22.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub level: usize,
    pub index: usize,
    pub m: usize,
    pub log_deriv: f64,
    /// m ln S_l and m ln S_u.
    pub log_lower: f64,
    pub log_upper: f64,
}

/// Roots of levels 0..=k_max with |x_k'| outside [S_l^m, S_u^m], m = m_count.
#[must_use]
pub fn sandwich_violations(h: &BandHierarchy) -> Vec<SandwichViolation> {
    let (ll, lu) = (s_lower(h.lambda).ln(), s_upper(h.lambda).ln());
    let mut out = Vec::new();
    for lv in &h.levels {
        for b in lv {
            let l = b.deriv.ln_abs();
            let m = b.m_count as f64;
            if !(m * ll <= l && l <= m * lu) {
                out.push(SandwichViolation {
                    level: b.level,
                    index: b.index,
                    m: b.m_count,
                    log_deriv: l,
                    log_lower: m * ll,
                    log_upper: m * lu,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuSandwichRow {
    pub level: usize,
    /// Per-type m histograms of the bands equal a_{k,m} and b_{k,m}.
    pub table_match: bool,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl NuSandwichRow {
    #[must_use]
    pub fn holds(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

/// Per-level dim nu against log(phi)/((C_k/kF_k) ln S_u) and
/// log(phi)/((C_k/kF_k) ln S_l), for levels 2..=k_max of a typed hierarchy.
pub fn nu_sandwich(h: &BandHierarchy) -> Result<Vec<NuSandwichRow>, ReportError> {
    let h = if h.levels.get(2).is_some_and(|lv| lv.iter().all(|b| b.parent.is_some())) {
        h.clone()
    } else {
        classify_bands(h.clone())?
    };
    let k_max = h.k_max();
    let t = build_comb_table(k_max.max(2));
    let d = DerivativeLogs::from_hierarchy(&h);
    let (ll, lu) = (s_lower(h.lambda).ln(), s_upper(h.lambda).ln());
    let mut rows = Vec::new();
    for k in 2..=k_max {
        let mut ha = vec![0u64; k + 1];
        let mut hb = vec![0u64; k + 1];
        for b in &h.levels[k] {
            match b.band_type {
                crate::bands::BandType::A => ha[b.m_count] += 1,
                _ => hb[b.m_count] += 1,
            }
        }
        let table_match = (0..=k).all(|m| {
            t.a[k].get(m) == num_bigint::BigUint::from(ha[m]) && t.b[k].get(m) == num_bigint::BigUint::from(hb[m])
        });
        let r = comb_ratio(&t, k);
        rows.push(NuSandwichRow {
            level: k,
            table_match,
            lower: LOG_PHI / (r * lu),
            value: LOG_PHI / d.mean_exponent(k),
            upper: LOG_PHI / (r * ll),
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendAudit {
    pub quantity: String,
    pub target: f64,
    /// value times ln(lambda), in the order of the coupling list.
    pub products: Vec<f64>,
    pub within_tolerance: bool,
    pub monotone: bool,
}

/// value * ln(lambda) against the large-coupling constants, for reports
/// sorted by increasing lambda.
#[must_use]
pub fn asymptotic_trends(reports: &[SpectralReport], rel_tol: f64) -> Vec<TrendAudit> {
    let names = ["gamma", "dim_nu", "dim_sigma", "alpha"];
    let targets = [ASYMPTOTIC_GAMMA, ASYMPTOTIC_NU, ASYMPTOTIC_SIGMA, ASYMPTOTIC_ALPHA];
    (0..4)
        .map(|q| {
            let products: Vec<f64> = reports.iter().map(|r| r.values()[q] * r.lambda.ln()).collect();
            let dev: Vec<f64> = products.iter().map(|p| (p - targets[q]).abs()).collect();
            TrendAudit {
                quantity: names[q].into(),
                target: targets[q],
                within_tolerance: dev.iter().all(|d| *d <= rel_tol * targets[q]),
                monotone: dev.windows(2).all(|w| w[1] < w[0]),
                products,
            }
        })
        .collect()
}

/// CSV: lambda,gamma*loglambda,dimnu*loglambda,dimsigma*loglambda,alpha*loglambda,
/// preceded by a row of the target constants.
#[must_use]
pub fn asymptotics_csv(reports: &[SpectralReport]) -> String {
    let mut s = String::from("lambda,gamma_loglambda,dimnu_loglambda,dimsigma_loglambda,alpha_loglambda\n");
    let _ = writeln!(
        s,
        "target,{},{},{},{}",
        crate::fmt17(ASYMPTOTIC_GAMMA),
        crate::fmt17(ASYMPTOTIC_NU),
        crate::fmt17(ASYMPTOTIC_SIGMA),
        crate::fmt17(ASYMPTOTIC_ALPHA)
    );
    for r in reports {
        let l = r.lambda.ln();
        let v = r.values();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            crate::fmt17(r.lambda),
            crate::fmt17(v[0] * l),
            crate::fmt17(v[1] * l),
            crate::fmt17(v[2] * l),
            crate::fmt17(v[3] * l)
        );
    }
    s
}

/// CSV of one report: quantity,value,extrapolated,error_indicator,window_K,window_K-1,window_K-2
/// followed by the per-level table k,gamma,dim_nu,dim_sigma,alpha.
#[must_use]
pub fn report_csv(r: &SpectralReport) -> String {
    let mut s = String::from("quantity,value,extrapolated,error_indicator,windows\n");
    for (name, e) in [("gamma", &r.gamma), ("dim_nu", &r.dim_nu), ("dim_sigma", &r.dim_sigma), ("alpha", &r.alpha)] {
        let w: Vec<String> = e.windows.iter().map(|x| crate::fmt17(*x)).collect();
        let _ = writeln!(
            s,
            "{name},{},{},{},{}",
            crate::fmt17(e.value),
            crate::fmt17(e.extrapolated),
            crate::fmt17(e.error_indicator),
            w.join(";")
        );
    }
    s.push_str("k,gamma_k,dim_nu_k,dim_sigma_k,alpha_k\n");
    for &(k, g) in &r.gamma.per_level {
        let _ = writeln!(
            s,
            "{k},{},{},{},{}",
            crate::fmt17(g),
            crate::fmt17(r.dim_nu.at_level(k).unwrap_or(f64::NAN)),
            crate::fmt17(r.dim_sigma.at_level(k).unwrap_or(f64::NAN)),
            crate::fmt17(r.alpha.at_level(k).unwrap_or(f64::NAN))
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert!((ASYMPTOTIC_NU - (5.0 + 5f64.sqrt()) / 4.0 * LOG_PHI).abs() < 1e-15);
        assert!((ASYMPTOTIC_SIGMA - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-15);
        assert!((s_lower(8.0) - 3.0).abs() < 1e-15);
        assert_eq!(s_upper(8.0), 38.0);
    }

    #[test]
    fn fit_recovers_affine_data() {
        let c = fit_window(12, |k| 0.3 + 1.7 / k as f64);
        assert!((c - 0.3).abs() < 1e-13);
        let c = extremal_window(12, |k| 0.3 * k as f64 + 1.7);
        assert!((c - 0.3).abs() < 1e-13);
    }

    #[test]
    fn short_hierarchy_falls_back_to_levels() {
        let r = full_report(2.0, 6).unwrap();
        assert_eq!(r.gamma.windows.len(), 3);
        assert_eq!(r.gamma.value, r.gamma.at_level(6).unwrap());
        assert!(full_report(2.0, 1).is_err());
    }

    #[test]
    fn chain_at_two() {
        let r = full_report(2.0, 14).unwrap();
        let [g, n, s, a] = r.values();
        assert!(g < n && n < s && s < a, "{:?}", r.values());
        assert!(r.chain.per_level_order);
        assert!(r.chain.orbit_consistent);
        assert!(a >= bound_curve_p6label(2.0) - 0.01);
        assert!(g <= gamma_closed_form(2.0) + 0.01);
    }
}
