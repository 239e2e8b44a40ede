//! Exact counts of Raymond's band hierarchy.
//!
//! a_{k,m} (b_{k,m}) is the number of type A (B) bands of level k whose
//! root lies in exactly m of the approximants sigma_0, ..., sigma_{k-1}.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Write as _;

/// 4 / (5 + sqrt 5).
pub const COMB_LIMIT: f64 = 0.552_786_404_500_042;

/// One level of a sparse m-indexed table: entries m_start, m_start+1, ...
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseRow {
    pub m_start: usize,
    pub vals: Vec<BigUint>,
}

impl SparseRow {
    #[must_use]
    pub fn get(&self, m: usize) -> BigUint {
        if m < self.m_start {
            return BigUint::zero();
        }
        self.vals.get(m - self.m_start).cloned().unwrap_or_default()
    }

    /// Support (first, last) of nonzero entries.
    #[must_use]
    pub fn support(&self) -> Option<(usize, usize)> {
        let first = self.vals.iter().position(|v| !v.is_zero())?;
        let last = self.vals.iter().rposition(|v| !v.is_zero())?;
        Some((self.m_start + first, self.m_start + last))
    }

    fn from_dense(dense: Vec<BigUint>) -> Self {
        let Some(first) = dense.iter().position(|v| !v.is_zero()) else {
            return SparseRow::default();
        };
        let last = dense.iter().rposition(|v| !v.is_zero()).unwrap_or(first);
        SparseRow { m_start: first, vals: dense[first..=last].to_vec() }
    }

    fn end(&self) -> usize {
        self.m_start + self.vals.len()
    }

    #[must_use]
    pub fn total(&self) -> BigUint {
        self.vals.iter().sum()
    }

    /// Sum of m times the entry.
    #[must_use]
    pub fn first_moment(&self) -> BigUint {
        self.vals.iter().enumerate().map(|(i, v)| v * BigUint::from(self.m_start + i)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombTable {
    pub k_max: usize,
    pub fib: Vec<BigUint>,
    pub a: Vec<SparseRow>,
    pub b: Vec<SparseRow>,
    pub big_a: Vec<BigUint>,
    pub big_b: Vec<BigUint>,
    pub big_c: Vec<BigUint>,
}

/// Row shifted one step up in m.
fn shifted(r: &SparseRow) -> SparseRow {
    if r.vals.is_empty() {
        return SparseRow::default();
    }
    SparseRow { m_start: r.m_start + 1, vals: r.vals.clone() }
}

/// x + 2y, both shifted one step up in m.
fn combine(x: &SparseRow, y: &SparseRow) -> SparseRow {
    let end = x.end().max(y.end());
    let dense: Vec<BigUint> = (0..=end).map(|m| {
        if m == 0 {
            BigUint::zero()
        } else {
            x.get(m - 1) + (y.get(m - 1) << 1)
        }
    }).collect();
    SparseRow::from_dense(dense)
}

/// Table up to k_max from a_{0,0} = 1, b_{1,0} = 1 via
/// a_{k,m} = b_{k-1,m-1}, b_{k,m} = a_{k-2,m-1} + 2 b_{k-2,m-1}.
#[must_use]
pub fn build_comb_table(k_max: usize) -> CombTable {
    let mut fib = vec![BigUint::one(), BigUint::one()];
    while fib.len() <= k_max {
        let n = fib.len();
        let next = &fib[n - 1] + &fib[n - 2];
        fib.push(next);
    }
    fib.truncate(k_max + 1);
    let mut a: Vec<SparseRow> = Vec::with_capacity(k_max + 1);
    let mut b: Vec<SparseRow> = Vec::with_capacity(k_max + 1);
    a.push(SparseRow { m_start: 0, vals: vec![BigUint::one()] });
    b.push(SparseRow::default());
    if k_max >= 1 {
        a.push(SparseRow::default());
        b.push(SparseRow { m_start: 0, vals: vec![BigUint::one()] });
    }
    for k in 2..=k_max {
        a.push(shifted(&b[k - 1]));
        b.push(combine(&a[k - 2], &b[k - 2]));
    }
    let big_a: Vec<BigUint> = a.iter().map(SparseRow::first_moment).collect();
    let big_b: Vec<BigUint> = b.iter().map(SparseRow::first_moment).collect();
    let big_c = big_a.iter().zip(&big_b).map(|(x, y)| x + y).collect();
    CombTable { k_max, fib, a, b, big_a, big_b, big_c }
}

fn binom(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// 2^{2k-3m-1} (m/(k-m)) C(k-m, 2m-k) as an exact integer, or `None` if
/// the rational value is not an integer. Zero outside ceil(k/2) <= m <= floor(2k/3).
/// Level 0 is the initial value a_{0,0} = 1.
#[must_use]
pub fn closed_form_a(k: usize, m: usize) -> Option<BigUint> {
    if k == 0 {
        return Some(if m == 0 { BigUint::one() } else { BigUint::zero() });
    }
    if 2 * m < k || 3 * m > 2 * k {
        return Some(BigUint::zero());
    }
    let e = 2 * k as i64 - 3 * m as i64 - 1;
    let mut num = BigUint::from(m) * binom((k - m) as u64, (2 * m - k) as u64);
    let mut den = BigUint::from(k - m);
    if e >= 0 {
        num <<= e as usize;
    } else {
        den <<= (-e) as usize;
    }
    (&num % &den).is_zero().then(|| num / den)
}

/// (k, m) pairs where recursion and closed form differ, for k <= table k_max.
#[must_use]
pub fn closed_form_mismatches(t: &CombTable) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for k in 0..=t.k_max {
        for m in 0..=k + 1 {
            if closed_form_a(k, m) != Some(t.a[k].get(m)) {
                bad.push((k, m));
            }
        }
    }
    bad
}

/// Levels at which the aggregate recursions fail when recomputed from the
/// raw sums: A_k = B_{k-1} + F_{k-2} (k >= 2), B_k = A_{k-2} + 2B_{k-2} +
/// F_{k-1} (k >= 3) and C_k = C_{k-1} + C_{k-2} + 2F_{k-2} (k >= 4).
#[must_use]
pub fn aggregate_recursion_failures(t: &CombTable) -> Vec<(char, usize)> {
    let mut bad = Vec::new();
    let two = BigUint::from(2u8);
    for k in 2..=t.k_max {
        if t.big_a[k] != &t.big_b[k - 1] + &t.fib[k - 2] {
            bad.push(('A', k));
        }
        if k >= 3 && t.big_b[k] != &t.big_a[k - 2] + &two * &t.big_b[k - 2] + &t.fib[k - 1] {
            bad.push(('B', k));
        }
        if k >= 4 && t.big_c[k] != &t.big_c[k - 1] + &t.big_c[k - 2] + &two * &t.fib[k - 2] {
            bad.push(('C', k));
        }
    }
    bad
}

/// Levels k >= 2 where the a and b row sums differ from F_{k-2}, F_{k-1}.
#[must_use]
pub fn count_failures(t: &CombTable) -> Vec<usize> {
    (2..=t.k_max)
        .filter(|&k| t.a[k].total() != t.fib[k - 2] || t.b[k].total() != t.fib[k - 1])
        .collect()
}

fn big_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// C_k / (k F_k), k >= 1.
#[must_use]
pub fn comb_ratio(t: &CombTable, k: usize) -> f64 {
    big_f64(&t.big_c[k]) / (k as f64 * big_f64(&t.fib[k]))
}

/// Least-squares intercept of y = c + d x.
#[must_use]
pub fn ls_intercept(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return my;
    }
    my - sxy / sxx * mx
}

/// (C_K/(K F_K), beta) with beta the intercept of a fit beta + c/k over the
/// top ten levels.
///
/// # Panics
/// If the table stops below level 20.
#[must_use]
pub fn comb_limit(t: &CombTable) -> (f64, f64) {
    assert!(t.k_max >= 20, "comb_limit needs k_max >= 20");
    let ks: Vec<usize> = (t.k_max - 9..=t.k_max).collect();
    let x: Vec<f64> = ks.iter().map(|&k| 1.0 / k as f64).collect();
    let y: Vec<f64> = ks.iter().map(|&k| comb_ratio(t, k)).collect();
    (comb_ratio(t, t.k_max), ls_intercept(&x, &y))
}

/// max_k |C_k - beta k F_k| / F_k over k >= 1 with beta the exact limit.
#[must_use]
pub fn residual_bound(t: &CombTable) -> f64 {
    (1..=t.k_max)
        .map(|k| {
            let f = big_f64(&t.fib[k]);
            (big_f64(&t.big_c[k]) - COMB_LIMIT * k as f64 * f).abs() / f
        })
        .fold(0.0, f64::max)
}

/// CSV: k,F_k,a_k,b_k,A_k,B_k,C_k,C_k/(kF_k).
#[must_use]
pub fn comb_csv(t: &CombTable) -> String {
    let mut s = String::from("k,F_k,a_k,b_k,A_k,B_k,C_k,ratio\n");
    for k in 0..=t.k_max {
        let ratio = if k == 0 { String::from("nan") } else { crate::fmt17(comb_ratio(t, k)) };
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{},{},{ratio}",
            t.fib[k],
            t.a[k].total(),
            t.b[k].total(),
            t.big_a[k],
            t.big_b[k],
            t.big_c[k]
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_values() {
        let t = build_comb_table(4);
        assert_eq!(t.a[0].get(0), BigUint::one());
        assert!(t.a[1].vals.is_empty());
        assert_eq!(t.b[1].get(0), BigUint::one());
        assert_eq!(t.b[1].total(), BigUint::one());
        assert_eq!(t.a[2].get(1), BigUint::one());
    }

    #[test]
    fn closed_form_matches_recursion() {
        let t = build_comb_table(60);
        assert!(closed_form_mismatches(&t).is_empty());
        assert!(count_failures(&t).is_empty());
        assert!(aggregate_recursion_failures(&t).is_empty());
        for k in 2..=60 {
            if let Some((lo, hi)) = t.a[k].support() {
                assert!(2 * lo >= k && 3 * hi <= 2 * k);
            }
        }
    }

    #[test]
    fn limit_ratio() {
        let t = build_comb_table(60);
        let (r, ex) = comb_limit(&t);
        assert!((r - COMB_LIMIT).abs() < 0.02);
        assert!((ex - COMB_LIMIT).abs() < 1e-3, "{ex}");
        assert!((COMB_LIMIT - 4.0 / (5.0 + 5f64.sqrt())).abs() < 1e-15);
        assert!(residual_bound(&t).is_finite());
    }

    #[test]
    fn fib_identity() {
        let t = build_comb_table(80);
        for k in 2..=80 {
            assert_eq!(t.fib[k], &t.fib[k - 1] + &t.fib[k - 2]);
        }
    }

    #[test]
    fn csv_shape() {
        let t = build_comb_table(10);
        let csv = comb_csv(&t);
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.lines().nth(3).unwrap().starts_with("2,2,1,1,"));
    }
}
