//! Symbolic model and thermodynamic formalism: Parry measures of 0-1
//! matrices, level-k pressure built from root derivatives, Bowen roots,
//! and lineage statistics of the band hierarchy.

use crate::bands::{BandError, BandHierarchy, BandType};
use crate::trace::LOG_PHI;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("matrix is not a square 0-1 matrix")]
    NotBinary,
    #[error("matrix is not irreducible")]
    NotTransitive,
    #[error("level {level}: pressure does not change sign on [0, 2] (P(0) = {p0}, P(2) = {p2})")]
    RootNotBracketed { level: usize, p0: f64, p2: f64 },
    #[error("lineage coding needs coupling > 4, got {0}")]
    NotApplicable(f64),
    #[error("word length {0} outside 1..=6")]
    BadWordLength(usize),
    #[error("pressure needs level >= 1")]
    BadLevel,
    #[error("level {level} has no band {index} (bands are numbered from 1)")]
    BadIndex { level: usize, index: usize },
    #[error(transparent)]
    Band(#[from] BandError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub matrix: Vec<Vec<u8>>,
    pub perron_value: f64,
    pub right_vec: Vec<f64>,
    pub left_vec: Vec<f64>,
    pub stationary: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

impl MarkovModel {
    #[must_use]
    pub fn n(&self) -> usize {
        self.matrix.len()
    }

    #[must_use]
    pub fn admissible(&self, word: &[usize]) -> bool {
        word.iter().all(|&i| i < self.n()) && word.windows(2).all(|w| self.matrix[w[0]][w[1]] == 1)
    }

    /// u_{i_0} v_{i_n} / lambda^n for an admissible word i_0 ... i_n.
    #[must_use]
    pub fn cylinder(&self, word: &[usize]) -> f64 {
        if word.is_empty() || !self.admissible(word) {
            return 0.0;
        }
        let n = word.len() - 1;
        self.left_vec[word[0]] * self.right_vec[word[n]] / self.perron_value.powi(n as i32)
    }

    /// p_{i_0} p_{i_0 i_1} ... p_{i_{n-1} i_n}.
    #[must_use]
    pub fn path_measure(&self, word: &[usize]) -> f64 {
        if word.is_empty() || !self.admissible(word) {
            return 0.0;
        }
        word.windows(2).fold(self.stationary[word[0]], |acc, w| acc * self.transition[w[0]][w[1]])
    }

    /// Every admissible word of length `len`, in lexicographic order.
    #[must_use]
    pub fn words(&self, len: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (0..self.n()).map(|i| vec![i]).collect();
        for _ in 1..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    let last = *w.last().unwrap_or(&0);
                    (0..self.n()).filter(move |&j| self.matrix[last][j] == 1).map(move |j| {
                        let mut x = w.clone();
                        x.push(j);
                        x
                    })
                })
                .collect();
        }
        if len == 0 {
            out.clear();
        }
        out
    }
}

fn irreducible(a: &[Vec<u8>]) -> bool {
    let n = a.len();
    // reachability closure of I + A
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || a[i][j] == 1).collect()).collect();
    for m in 0..n {
        for i in 0..n {
            if reach[i][m] {
                for j in 0..n {
                    if reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach.iter().all(|r| r.iter().all(|&x| x))
}

/// Perron vector by power iteration on A + I (aperiodic, same eigenvectors).
fn perron_vector(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let shifted = m + DMatrix::<f64>::identity(n, n);
    let mut v = DMatrix::<f64>::from_element(n, 1, 1.0 / n as f64);
    for _ in 0..100_000 {
        let w = &shifted * &v;
        let s: f64 = w.iter().sum();
        let w = w / s;
        let diff = (&w - &v).amax();
        v = w;
        if diff < 1e-16 {
            break;
        }
    }
    v.iter().copied().collect()
}

/// Perron data and the Parry chain p_ij = A_ij v_j / (lambda v_i).
pub fn parry_measure(a: &[Vec<u8>]) -> Result<MarkovModel, ThermoError> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n || r.iter().any(|&x| x > 1)) {
        return Err(ThermoError::NotBinary);
    }
    if !irreducible(a) {
        return Err(ThermoError::NotTransitive);
    }
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| f64::from(a[i][j]));
    let mut v = perron_vector(&m);
    let mut u = perron_vector(&m.transpose());
    let av = &m * DMatrix::from_column_slice(n, 1, &v);
    let num: f64 = u.iter().zip(av.iter()).map(|(x, y)| x * y).sum();
    let den: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    let lam = num / den;
    let sv: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sv);
    let uv: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    u.iter_mut().for_each(|x| *x /= uv);
    let stationary: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x * y).collect();
    let transition: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| f64::from(a[i][j]) * v[j] / (lam * v[i])).collect()).collect();
    Ok(MarkovModel { matrix: a.to_vec(), perron_value: lam, right_vec: v, left_vec: u, stationary, transition })
}

/// log of the Perron value.
pub fn top_entropy(a: &[Vec<u8>]) -> Result<f64, ThermoError> {
    Ok(parry_measure(a)?.perron_value.ln())
}

/// The golden-mean matrix [[1,1],[1,0]]: symbol 1 is never repeated.
#[must_use]
pub fn golden_mean() -> Vec<Vec<u8>> {
    vec![vec![1, 1], vec![1, 0]]
}

/// (1/k) log sum_j exp(-t l_j), overflow-safe.
#[must_use]
pub fn pressure_from_logs(logs: &[f64], k: usize, t: f64) -> f64 {
    let m = logs.iter().map(|&l| -t * l).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|&l| (-t * l - m).exp()).sum();
    (m + s.ln()) / k as f64
}

/// Zero of a decreasing function on [0, 2] by bisection; `None` unless
/// f(0) > 0 > f(2).
pub fn bowen_root(f: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if f(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub lambda: f64,
    pub level: usize,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bowen_root: f64,
    /// (1/k) log F_k.
    pub entropy_at_zero: f64,
    /// Minus the mean of ln|x_k'| over roots, per level step.
    pub tangent_slope: f64,
    /// t-intercept of the line log(phi) + slope t.
    pub tangent_intercept: f64,
    /// t-intercepts of log(phi) - t L for L the largest and smallest
    /// per-step log-derivative.
    pub gamma_intercept: f64,
    pub alpha_intercept: f64,
}

impl PressureCurve {
    /// Second differences >= -1e-9 and first differences < 0 on the grid.
    #[must_use]
    pub fn is_convex_decreasing(&self) -> bool {
        let dec = self.values.windows(2).all(|w| w[1] < w[0]);
        let convex = self.t_grid.windows(3).zip(self.values.windows(3)).all(|(t, p)| {
            let s1 = (p[1] - p[0]) / (t[1] - t[0]);
            let s2 = (p[2] - p[1]) / (t[2] - t[1]);
            s2 - s1 >= -1e-9
        });
        dec && convex
    }
}

/// Level-k pressure of root derivatives over `t_grid`.
pub fn pressure_curve(h: &BandHierarchy, level: usize, t_grid: &[f64]) -> Result<PressureCurve, ThermoError> {
    if level == 0 {
        return Err(ThermoError::BadLevel);
    }
    let lv = h.level(level)?;
    let logs: Vec<f64> = lv.iter().map(|b| b.deriv.ln_abs()).collect();
    let k = level;
    let f = |t: f64| pressure_from_logs(&logs, k, t);
    let root = bowen_root(f).ok_or(ThermoError::RootNotBracketed { level, p0: f(0.0), p2: f(2.0) })?;
    let kf = k as f64;
    let mean = logs.iter().sum::<f64>() / (kf * logs.len() as f64);
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max) / kf;
    let min = logs.iter().copied().fold(f64::INFINITY, f64::min) / kf;
    Ok(PressureCurve {
        lambda: h.lambda,
        level,
        t_grid: t_grid.to_vec(),
        values: t_grid.iter().map(|&t| f(t)).collect(),
        bowen_root: root,
        entropy_at_zero: (logs.len() as f64).ln() / kf,
        tangent_slope: -mean,
        tangent_intercept: LOG_PHI / mean,
        gamma_intercept: LOG_PHI / max,
        alpha_intercept: LOG_PHI / min,
    })
}

/// CSV: t,pressure,line_gamma,line_nu,line_alpha where the lines pass
/// through (0, log phi) and cross the t-axis at the annotated intercepts.
#[must_use]
pub fn pressure_csv(c: &PressureCurve) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# intercepts gamma={} dim_nu={} dim_sigma={} alpha={}",
        crate::fmt17(c.gamma_intercept),
        crate::fmt17(c.tangent_intercept),
        crate::fmt17(c.bowen_root),
        crate::fmt17(c.alpha_intercept)
    );
    s.push_str("t,pressure,line_gamma,line_nu,line_alpha\n");
    let line = |x: f64, t: f64| LOG_PHI * (1.0 - t / x);
    for (&t, &p) in c.t_grid.iter().zip(&c.values) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            crate::fmt17(t),
            crate::fmt17(p),
            crate::fmt17(line(c.gamma_intercept, t)),
            crate::fmt17(line(c.tangent_intercept, t)),
            crate::fmt17(line(c.alpha_intercept, t))
        );
    }
    s
}

/// Golden-mean code of a typed band, read from the band upward. Each step
/// moves to a band one level up (symbol 0) or two levels up (block 1,0):
/// an A band to its B parent (0); a B band under an A parent to it (1,0);
/// of the two B bands inside a B parent the left goes to the parent (1,0)
/// and the right to the parent's A child (0). Level-k bands and these
/// paths down to level 0 or 1 are in bijection. Bands are numbered from 1.
pub fn lineage_word(h: &BandHierarchy, level: usize, index: usize) -> Result<Vec<usize>, ThermoError> {
    if index == 0 || index > h.level(level)?.len() {
        return Err(ThermoError::BadIndex { level, index });
    }
    let mut word = Vec::new();
    let (mut k, mut j) = (level, index);
    while k >= 2 {
        let b = &h.level(k)?[j - 1];
        let (pk, pj) = b.parent.ok_or(BandError::StructureViolation {
            level: k,
            index: j,
            reason: "untyped band".into(),
        })?;
        match b.band_type {
            BandType::A => {
                word.push(0);
                (k, j) = (pk, pj);
            }
            BandType::B => {
                let parent = &h.level(pk)?[pj - 1];
                let right_child = parent.band_type == BandType::B
                    && h.level(k)?.iter().position(|c| c.parent == Some((pk, pj))).map(|p| p + 1) != Some(j);
                if right_child {
                    let a_child = h.level(k - 1)?
                        .iter()
                        .position(|c| c.parent == Some((pk, pj)))
                        .ok_or(BandError::StructureViolation {
                            level: pk,
                            index: pj,
                            reason: "type B band without a type A child".into(),
                        })?;
                    word.push(0);
                    (k, j) = (k - 1, a_child + 1);
                } else {
                    word.push(1);
                    word.push(0);
                    (k, j) = (pk, pj);
                }
            }
            BandType::Untyped => {
                return Err(BandError::StructureViolation { level: k, index: j, reason: "untyped band".into() }.into())
            }
        }
    }
    Ok(word)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionReport {
    pub lambda: f64,
    pub level: usize,
    pub word_len: usize,
    pub bands: usize,
    /// (word, empirical frequency, Parry cylinder measure).
    pub table: Vec<(String, f64, f64)>,
    pub l1: f64,
    pub total_frequency: f64,
}

/// L1 distance between window frequencies of lineage words over all level-k
/// bands and Parry cylinder measures of the golden-mean shift.
pub fn equidistribution_check(
    h: &BandHierarchy,
    level: usize,
    word_len: usize,
) -> Result<EquidistributionReport, ThermoError> {
    if h.lambda <= 4.0 {
        return Err(ThermoError::NotApplicable(h.lambda));
    }
    if !(1..=6).contains(&word_len) {
        return Err(ThermoError::BadWordLength(word_len));
    }
    let model = parry_measure(&golden_mean())?;
    let lv = h.level(level)?;
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut total = 0u64;
    for b in lv {
        let w = lineage_word(h, level, b.index)?;
        for win in w.windows(word_len) {
            *counts.entry(win.to_vec()).or_default() += 1;
            total += 1;
        }
    }
    let name = |w: &[usize]| w.iter().map(|d| char::from(b'0' + *d as u8)).collect::<String>();
    let mut table = Vec::new();
    let mut l1 = 0.0;
    let mut total_frequency = 0.0;
    for w in model.words(word_len) {
        let emp = counts.get(&w).map_or(0.0, |&c| c as f64 / total as f64);
        let mu = model.cylinder(&w);
        l1 += (emp - mu).abs();
        total_frequency += emp;
        table.push((name(&w), emp, mu));
    }
    // windows outside the shift count fully against the model
    for (w, &c) in &counts {
        if !model.admissible(w) {
            let emp = c as f64 / total as f64;
            l1 += emp;
            total_frequency += emp;
            table.push((name(w), emp, 0.0));
        }
    }
    Ok(EquidistributionReport {
        lambda: h.lambda,
        level,
        word_len,
        bands: lv.len(),
        table,
        l1,
        total_frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::{classify_bands, compute_bands};
    use crate::trace::PHI;

    #[test]
    fn golden_mean_parry() {
        let m = parry_measure(&golden_mean()).unwrap();
        assert!((m.perron_value - PHI).abs() < 1e-14);
        let p0 = PHI * PHI / (PHI * PHI + 1.0);
        assert!((m.stationary[0] - p0).abs() < 1e-12);
        assert!((m.stationary[1] - (1.0 - p0)).abs() < 1e-12);
        assert!((m.stationary[0] - 0.72361).abs() < 1e-5);
        for i in 0..2 {
            let row: f64 = m.transition[i].iter().sum();
            assert!((row - 1.0).abs() < 1e-14);
            let st: f64 = (0..2).map(|j| m.stationary[j] * m.transition[j][i]).sum();
            assert!((st - m.stationary[i]).abs() < 1e-12);
        }
        for len in 1..=6 {
            let words = m.words(len);
            let total: f64 = words.iter().map(|w| m.cylinder(w)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for w in &words {
                assert!((m.cylinder(w) - m.path_measure(w)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn entropies() {
        assert!((top_entropy(&golden_mean()).unwrap() - LOG_PHI).abs() < 1e-14);
        let full = parry_measure(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert!((full.perron_value - 2.0).abs() < 1e-14);
        assert!(full.transition.iter().flatten().all(|&p| (p - 0.5).abs() < 1e-14));
        assert!(full.stationary.iter().all(|&p| (p - 0.5).abs() < 1e-14));
        let perm = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]];
        assert!(top_entropy(&perm).unwrap().abs() < 1e-14);
        assert_eq!(parry_measure(&[vec![1, 0], vec![0, 1]]), Err(ThermoError::NotTransitive));
        assert_eq!(parry_measure(&[vec![2]]), Err(ThermoError::NotBinary));
    }

    #[test]
    fn pressure_basics() {
        let h = compute_bands(2.0, 14).unwrap();
        let t: Vec<f64> = (0..=300).map(|i| -1.0 + 0.01 * f64::from(i)).collect();
        let c = pressure_curve(&h, 14, &t).unwrap();
        assert!(c.is_convex_decreasing());
        assert!(c.bowen_root > 0.0 && c.bowen_root < 1.0);
        let p0 = pressure_from_logs(&h.levels[14].iter().map(|b| b.deriv.ln_abs()).collect::<Vec<_>>(), 14, 0.0);
        assert!((p0 - c.entropy_at_zero).abs() < 1e-14);
        assert!((c.entropy_at_zero - (610f64).ln() / 14.0).abs() < 1e-14);
        assert!(c.gamma_intercept <= c.tangent_intercept && c.tangent_intercept <= c.alpha_intercept);
        assert!(c.gamma_intercept < c.bowen_root && c.bowen_root < c.alpha_intercept);
    }

    #[test]
    fn lineage_words_are_golden_mean_paths() {
        let h = classify_bands(compute_bands(8.0, 12).unwrap()).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for b in &h.levels[12] {
            let w = lineage_word(&h, 12, b.index).unwrap();
            assert!(w.windows(2).all(|x| x != [1, 1]));
            assert!(seen.insert(w));
        }
        assert_eq!(seen.len(), 233);
        assert!(matches!(equidistribution_check(&compute_bands(3.0, 4).unwrap(), 4, 2), Err(ThermoError::NotApplicable(_))));
    }
}
