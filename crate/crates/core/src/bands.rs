//! Bands of the level-k spectral approximants {E : |x_k(E)| <= 1}.
//!
//! Level k has exactly F_k bands, each holding one simple root of x_k. Roots
//! are searched only inside the components of sigma_{k-1} U sigma_{k-2},
//! which contain sigma_k, on uniform grids refined until the sign-change
//! count reaches F_k. All energies are double-double.

use crate::dd::Dd;
use crate::logscalar::LogScalar;
use crate::trace::{potential, trace_value_dd, trace_values_dd, trace_with_derivative_dd, TraceValue};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Largest level handled by the dense eigen-solver cross-check.
pub const EIGEN_LEVEL_CAP: usize = 16;
/// Grid points per component are never refined beyond this.
const MAX_GRID: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("coupling must be positive and finite, got {0}")]
    BadCoupling(f64),
    #[error("level {level}: found {found} bands, expected {expected}; retry with grid refinement x{refinement}")]
    BandCountMismatch { level: usize, found: usize, expected: usize, refinement: usize },
    #[error("band typing needs coupling > 4, got {0}")]
    NotApplicable(f64),
    #[error("band hierarchy violated at level {level}, band {index}: {reason}")]
    StructureViolation { level: usize, index: usize, reason: String },
    #[error("level {k} exceeds the eigen-solver cap {cap}")]
    DimensionTooLarge { k: usize, cap: usize },
    #[error("{0}")]
    DomainError(String),
    #[error("level {0} not computed")]
    MissingLevel(usize),
}

/// F_k with F_0 = F_1 = 1.
#[must_use]
pub fn fib(k: usize) -> u64 {
    let (mut a, mut b) = (1u64, 1u64);
    for _ in 0..k {
        let c = a + b;
        a = b;
        b = c;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandType {
    A,
    B,
    Untyped,
}

impl BandType {
    #[must_use]
    pub fn label(self) -> &'static str {
        match self {
            BandType::A => "A",
            BandType::B => "B",
            BandType::Untyped => "-",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub level: usize,
    /// 1-based, left to right.
    pub index: usize,
    pub left: Dd,
    pub right: Dd,
    pub root: Dd,
    /// x_k'(root), signed.
    pub deriv: LogScalar,
    pub band_type: BandType,
    /// (level, index) of the enclosing band one or two levels up.
    pub parent: Option<(usize, usize)>,
    /// Number of j in 0..k-1 with |x_j(root)| <= 1, the count tallied by
    /// a_{k,m} and b_{k,m}.
    pub m_count: usize,
}

impl Band {
    #[must_use]
    pub fn width(&self) -> f64 {
        (self.right - self.left).to_f64()
    }

    #[must_use]
    pub fn contains(&self, other: &Band) -> bool {
        self.left <= other.left && other.right <= self.right
    }

    #[must_use]
    pub fn intersects(&self, other: &Band) -> bool {
        self.left <= other.right && other.left <= self.right
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandHierarchy {
    pub lambda: f64,
    pub levels: Vec<Vec<Band>>,
    /// lambda^2 / 4.
    pub delta_cap: f64,
}

impl BandHierarchy {
    #[must_use]
    pub fn k_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> Result<&[Band], BandError> {
        self.levels.get(k).map(Vec::as_slice).ok_or(BandError::MissingLevel(k))
    }
}

fn sign_or_plus(v: TraceValue) -> i8 {
    let s = v.sign();
    if s == 0 {
        1
    } else {
        s
    }
}

/// Close interval [a, b] of energies in which a level's roots are searched.
#[derive(Clone, Copy, Debug)]
struct Component {
    lo: Dd,
    hi: Dd,
}

fn components(prev: &[Band], prev2: &[Band]) -> Vec<Component> {
    let mut iv: Vec<(Dd, Dd)> = prev
        .iter()
        .chain(prev2.iter())
        .map(|b| {
            let pad = (b.right - b.left).scale2(1.0 / 256.0);
            (b.left - pad, b.right + pad)
        })
        .collect();
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<Component> = Vec::new();
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(c) if lo <= c.hi => {
                if hi > c.hi {
                    c.hi = hi;
                }
            }
            _ => out.push(Component { lo, hi }),
        }
    }
    out
}

fn grid_point(c: &Component, i: usize, n: usize) -> Dd {
    let t = i as f64 / (n - 1) as f64;
    c.lo + (c.hi - c.lo).mul_f64(t)
}

/// Sign-change brackets of x_k on an n-point grid over one component.
fn scan(lambda: f64, k: usize, c: &Component, n: usize) -> Vec<(Dd, Dd)> {
    let mut out = Vec::new();
    let mut prev_e = c.lo;
    let mut prev_s = sign_or_plus(trace_value_dd(lambda, prev_e, k));
    for i in 1..n {
        let e = if i == n - 1 { c.hi } else { grid_point(c, i, n) };
        let s = sign_or_plus(trace_value_dd(lambda, e, k));
        if s != prev_s {
            out.push((prev_e, e));
        }
        prev_e = e;
        prev_s = s;
    }
    out
}

fn newton_step(x: Dd, d: LogScalar) -> Option<Dd> {
    if d.is_zero() {
        return None;
    }
    let xf = x.to_f64();
    if xf == 0.0 {
        return Some(Dd::ZERO);
    }
    let q = LogScalar::from_f64(xf) / d;
    let step = q.to_f64();
    step.is_finite().then(|| Dd::from_f64(step))
}

/// Root of x_k inside a sign-change bracket: bisection down to a small
/// fraction of the bracket, then safeguarded Newton steps.
fn polish_root(lambda: f64, k: usize, mut lo: Dd, mut hi: Dd) -> Dd {
    let s_lo = sign_or_plus(trace_value_dd(lambda, lo, k));
    let target = (hi - lo).to_f64() * 1e-8;
    for _ in 0..64 {
        if (hi - lo).to_f64() <= target {
            break;
        }
        let m = Dd::mid(lo, hi);
        if m == lo || m == hi {
            break;
        }
        if sign_or_plus(trace_value_dd(lambda, m, k)) == s_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    let mut e = Dd::mid(lo, hi);
    for _ in 0..40 {
        let (x, d) = trace_with_derivative_dd(lambda, e, k);
        if x.signum_i() == 0 {
            return e;
        }
        if sign_or_plus(TraceValue::Finite(x)) == s_lo {
            lo = e;
        } else {
            hi = e;
        }
        let next = match newton_step(x, d) {
            Some(st) => e - st,
            None => Dd::mid(lo, hi),
        };
        let next = if next > lo && next < hi { next } else { Dd::mid(lo, hi) };
        let moved = (next - e).abs();
        e = next;
        if moved.to_f64() <= 1e-31 * e.to_f64().abs().max(1.0) {
            break;
        }
    }
    e
}

/// Inside band `s` (|x_k| < 1 with derivative sign s).
fn in_band(lambda: f64, k: usize, e: Dd, s: i8) -> bool {
    let v = trace_value_dd(lambda, e, k);
    if !v.inside() {
        return false;
    }
    trace_with_derivative_dd(lambda, e, k).1.sign == s
}

/// Edge between `outside` (predicate false) and `inside` (the root).
fn band_edge(lambda: f64, k: usize, mut outside: Dd, mut inside: Dd, s: i8) -> Dd {
    for _ in 0..220 {
        let m = Dd::mid(outside, inside);
        if m == outside || m == inside {
            break;
        }
        if in_band(lambda, k, m, s) {
            inside = m;
        } else {
            outside = m;
        }
        let w = (inside - outside).abs().to_f64();
        if w <= 4e-32 * inside.to_f64().abs().max(1.0) {
            break;
        }
    }
    inside
}

fn m_count(lambda: f64, k: usize, root: Dd) -> usize {
    let v = trace_values_dd(lambda, root, k);
    (0..k).filter(|&j| v[j + 1].abs() <= Dd::ONE).count()
}

fn trivial_level(lambda: f64, k: usize) -> Vec<Band> {
    let (root, left, right) = if k == 0 {
        (Dd::ZERO, Dd::from_f64(-2.0), Dd::from_f64(2.0))
    } else {
        let r = Dd::from_f64(lambda);
        (r, r.add_f64(-2.0), r.add_f64(2.0))
    };
    vec![Band {
        level: k,
        index: 1,
        left,
        right,
        root,
        deriv: LogScalar::from_f64(0.5),
        band_type: BandType::Untyped,
        parent: None,
        m_count: m_count(lambda, k, root),
    }]
}

/// One level from the two before it.
fn next_level(lambda: f64, k: usize, prev: &[Band], prev2: &[Band]) -> Result<Vec<Band>, BandError> {
    let expected = fib(k) as usize;
    let comps = components(prev, prev2);
    let mut n = 9usize;
    let brackets: Vec<Vec<(Dd, Dd)>> = loop {
        let found: Vec<Vec<(Dd, Dd)>> = comps.par_iter().map(|c| scan(lambda, k, c, n)).collect();
        let total: usize = found.iter().map(Vec::len).sum();
        if total == expected {
            break found;
        }
        if total > expected || 2 * n - 1 > MAX_GRID {
            return Err(BandError::BandCountMismatch { level: k, found: total, expected, refinement: 2 });
        }
        n = 2 * n - 1;
    };
    // (component, bracket) pairs in left-to-right order
    let jobs: Vec<(usize, Dd, Dd)> = brackets
        .iter()
        .enumerate()
        .flat_map(|(ci, bs)| bs.iter().map(move |&(a, b)| (ci, a, b)))
        .collect();
    let roots: Vec<(usize, Dd, LogScalar)> = jobs
        .par_iter()
        .map(|&(ci, a, b)| {
            let r = polish_root(lambda, k, a, b);
            let (_, d) = trace_with_derivative_dd(lambda, r, k);
            (ci, r, d)
        })
        .collect();
    let bands: Vec<Band> = (0..roots.len())
        .into_par_iter()
        .map(|j| {
            let (ci, r, d) = roots[j];
            let c = &comps[ci];
            let lo_bound = if j > 0 && roots[j - 1].0 == ci { roots[j - 1].1 } else { c.lo };
            let hi_bound = if j + 1 < roots.len() && roots[j + 1].0 == ci { roots[j + 1].1 } else { c.hi };
            let left = band_edge(lambda, k, lo_bound, r, d.sign);
            let right = band_edge(lambda, k, hi_bound, r, d.sign);
            Band {
                level: k,
                index: j + 1,
                left,
                right,
                root: r,
                deriv: d,
                band_type: BandType::Untyped,
                parent: None,
                m_count: m_count(lambda, k, r),
            }
        })
        .collect();
    check_level(lambda, k, &bands)?;
    Ok(bands)
}

fn check_level(lambda: f64, k: usize, bands: &[Band]) -> Result<(), BandError> {
    for (j, b) in bands.iter().enumerate() {
        let violation = |reason: &str| BandError::StructureViolation { level: k, index: j + 1, reason: reason.into() };
        if !(b.left < b.root && b.root < b.right) {
            return Err(violation("root not strictly inside band"));
        }
        if b.deriv.is_zero() {
            return Err(violation("vanishing derivative at root"));
        }
        if j > 0 && !(bands[j - 1].right < b.left) {
            return Err(violation("overlaps left neighbour"));
        }
        let sl = trace_value_dd(lambda, b.left, k).sign();
        let sr = trace_value_dd(lambda, b.right, k).sign();
        if sl == sr {
            return Err(violation("edge values do not change sign"));
        }
    }
    Ok(())
}

/// All levels 0..=k_max.
pub fn compute_bands(lambda: f64, k_max: usize) -> Result<BandHierarchy, BandError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(BandError::BadCoupling(lambda));
    }
    let mut levels: Vec<Vec<Band>> = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let lv = if k < 2 {
            trivial_level(lambda, k)
        } else {
            next_level(lambda, k, &levels[k - 1], &levels[k - 2])?
        };
        levels.push(lv);
    }
    Ok(BandHierarchy { lambda, levels, delta_cap: lambda * lambda / 4.0 })
}

/// Index of the band of `level` containing `b`, if any.
fn container(level: &[Band], b: &Band) -> Option<usize> {
    let i = level.partition_point(|c| c.left <= b.left);
    (i > 0 && level[i - 1].contains(b)).then(|| i - 1)
}

/// Bands of `level` lying in `b`, as an index range.
fn inside_range(level: &[Band], b: &Band) -> std::ops::Range<usize> {
    let start = level.partition_point(|c| c.left < b.left);
    let end = level.partition_point(|c| c.right <= b.right);
    start..end.max(start)
}

fn intersecting(level: &[Band], b: &Band) -> usize {
    let start = level.partition_point(|c| c.right < b.left);
    let end = level.partition_point(|c| c.left <= b.right);
    end.saturating_sub(start)
}

/// Type A bands lie in sigma_{k-1}, type B bands in sigma_{k-2}. Fills
/// types and parents and checks the nesting pattern: an A band at level k
/// holds one B band of level k+2 and nothing of level k+1; a B band holds one
/// A band of level k+1 and two B bands of level k+2.
pub fn classify_bands(mut h: BandHierarchy) -> Result<BandHierarchy, BandError> {
    if h.lambda <= 4.0 {
        return Err(BandError::NotApplicable(h.lambda));
    }
    let kmax = h.k_max();
    if kmax < 2 {
        return Err(BandError::MissingLevel(2));
    }
    h.levels[0][0].band_type = BandType::A;
    h.levels[1][0].band_type = BandType::B;
    for k in 2..=kmax {
        let (upper, rest) = h.levels.split_at_mut(k);
        for j in 0..rest[0].len() {
            let b = &rest[0][j];
            let in_a = container(&upper[k - 1], b);
            let in_b = container(&upper[k - 2], b);
            let (t, parent) = match (in_a, in_b) {
                (Some(p), None) => (BandType::A, (k - 1, p + 1)),
                (None, Some(p)) => (BandType::B, (k - 2, p + 1)),
                _ => {
                    return Err(BandError::StructureViolation {
                        level: k,
                        index: j + 1,
                        reason: "not contained in exactly one of the two previous approximants".into(),
                    })
                }
            };
            rest[0][j].band_type = t;
            rest[0][j].parent = Some(parent);
        }
    }
    for k in 0..=kmax {
        let lv = &h.levels[k];
        for b in lv {
            let violation = |reason: String| BandError::StructureViolation { level: k, index: b.index, reason };
            if k < kmax {
                let r1 = inside_range(&h.levels[k + 1], b);
                let n1 = intersecting(&h.levels[k + 1], b);
                match b.band_type {
                    BandType::A if n1 != 0 => {
                        return Err(violation(format!("type A band meets {n1} bands of the next level")))
                    }
                    BandType::B if r1.len() != 1 || n1 != 1 || h.levels[k + 1][r1.start].band_type != BandType::A => {
                        return Err(violation("type B band must hold exactly one type A child".into()))
                    }
                    _ => {}
                }
            }
            if k + 2 <= kmax {
                let r2 = inside_range(&h.levels[k + 2], b);
                let n2 = intersecting(&h.levels[k + 2], b);
                let want = if b.band_type == BandType::A { 1 } else { 2 };
                if r2.len() != want || n2 != want || h.levels[k + 2][r2].iter().any(|c| c.band_type != BandType::B) {
                    return Err(violation(format!("expected {want} type B bands two levels down")));
                }
            }
        }
        if k >= 2 {
            let a = lv.iter().filter(|b| b.band_type == BandType::A).count() as u64;
            let bb = lv.len() as u64 - a;
            if a != fib(k - 2) || bb != fib(k - 1) {
                return Err(BandError::StructureViolation {
                    level: k,
                    index: 0,
                    reason: format!("type counts ({a}, {bb}) differ from (F_(k-2), F_(k-1))"),
                });
            }
        }
    }
    Ok(h)
}

/// Per-level root derivative summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDerivatives {
    pub level: usize,
    pub roots: Vec<f64>,
    pub derivs: Vec<LogScalar>,
    pub min_log: f64,
    pub max_log: f64,
    pub sum_log: f64,
}

/// x_k' at every root of a level, with min, max and sum of ln|x_k'|
/// accumulated left to right.
pub fn root_derivatives(h: &BandHierarchy, level: usize) -> Result<LevelDerivatives, BandError> {
    let lv = h.level(level)?;
    let mut min_log = f64::INFINITY;
    let mut max_log = f64::NEG_INFINITY;
    let mut sum_log = 0.0;
    for b in lv {
        let l = b.deriv.ln_abs();
        min_log = min_log.min(l);
        max_log = max_log.max(l);
        sum_log += l;
    }
    Ok(LevelDerivatives {
        level,
        roots: lv.iter().map(|b| b.root.to_f64()).collect(),
        derivs: lv.iter().map(|b| b.deriv).collect(),
        min_log,
        max_log,
        sum_log,
    })
}

/// Site potentials of the length-F_k periodic block whose twisted
/// eigenvalues are the roots of x_k. Level 0 uses the single site [0].
#[must_use]
pub fn level_word(lambda: f64, k: usize) -> Vec<f64> {
    if k == 0 {
        return vec![0.0];
    }
    (1..=fib(k) as i64).map(|n| potential(n, 0.0, lambda)).collect()
}

/// Hermitian F_k x F_k periodic block with Bloch twist e^{i pi/2}.
#[must_use]
pub fn twisted_matrix(lambda: f64, k: usize) -> DMatrix<Complex64> {
    let w = level_word(lambda, k);
    let n = w.len();
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(w[i], 0.0);
        if i + 1 < n {
            h[(i, i + 1)] = Complex64::new(1.0, 0.0);
            h[(i + 1, i)] = Complex64::new(1.0, 0.0);
        }
    }
    let twist = Complex64::new(0.0, 1.0);
    h[(n - 1, 0)] += twist;
    h[(0, n - 1)] += twist.conj();
    h
}

/// Roots of x_k as eigenvalues of the twisted periodic block, sorted.
pub fn twisted_eigen_roots(lambda: f64, k: usize) -> Result<Vec<f64>, BandError> {
    if k > EIGEN_LEVEL_CAP {
        return Err(BandError::DimensionTooLarge { k, cap: EIGEN_LEVEL_CAP });
    }
    let h = twisted_matrix(lambda, k);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Scalar bounds (inverse outer radius from below, inverse inner radius from
/// above) of the complex components in terms of the smallest root derivative.
pub fn koebe_radius_bounds(
    delta: f64,
    lambda: f64,
    min_deriv: LogScalar,
) -> Result<(LogScalar, LogScalar), BandError> {
    if !(delta > 0.0 && delta < lambda * lambda / 8.0) {
        return Err(BandError::DomainError(format!(
            "delta = {delta} outside (0, lambda^2/8) for lambda = {lambda}"
        )));
    }
    let m = min_deriv.abs();
    let lower = (delta / ((1.0 + delta) * (1.0 + 2.0 * delta))).powi(2);
    let upper = (2.0 + 3.0 * delta).powi(2) / ((1.0 + delta) * (1.0 + 2.0 * delta).powi(2));
    Ok((m.scale(lower), m.scale(upper)))
}

/// Bands at which x_k does not change sign exactly once across `probes`
/// evenly spaced points (edges included).
#[must_use]
pub fn monotonicity_failures(h: &BandHierarchy, level: usize, probes: usize) -> Vec<usize> {
    let Ok(lv) = h.level(level) else { return Vec::new() };
    lv.par_iter()
        .filter_map(|b| {
            let c = Component { lo: b.left, hi: b.right };
            let mut changes = 0;
            let mut prev = trace_value_dd(h.lambda, b.left, level).sign();
            for i in 1..probes {
                let e = if i == probes - 1 { b.right } else { grid_point(&c, i, probes) };
                let s = trace_value_dd(h.lambda, e, level).sign();
                if s != 0 && prev != 0 && s != prev {
                    changes += 1;
                }
                if s != 0 {
                    prev = s;
                }
            }
            (changes != 1).then_some(b.index)
        })
        .collect()
}

/// Number of grid energies lying in three consecutive approximants
/// sigma_k, sigma_{k+1}, sigma_{k+2}.
#[must_use]
pub fn triple_intersection_hits(lambda: f64, k: usize, grid: &[f64]) -> usize {
    grid.par_iter()
        .filter(|&&e| {
            let v = trace_values_dd(lambda, Dd::from_f64(e), k + 2);
            (k..=k + 2).all(|j| v[j + 1].abs() <= Dd::ONE)
        })
        .count()
}

/// CSV of bands: level,index,left,right,root,log_deriv,type,m_count.
#[must_use]
pub fn bands_csv(h: &BandHierarchy) -> String {
    let mut s = String::from("level,index,left,right,root,log_deriv,type,m_count\n");
    for lv in &h.levels {
        for b in lv {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                b.level,
                b.index,
                crate::fmt17(b.left.to_f64()),
                crate::fmt17(b.right.to_f64()),
                crate::fmt17(b.root.to_f64()),
                crate::fmt17(b.deriv.ln_abs()),
                b.band_type.label(),
                b.m_count
            );
        }
    }
    s
}
