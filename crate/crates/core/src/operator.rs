//! Direct computations on finite sections of the Hamiltonian
//! (H u)(n) = u(n+1) + u(n-1) + V(n) u(n): potentials, eigenvalue counting,
//! gap labels, density-of-states scaling and wavepacket spreading.

use crate::bands::{fib, BandError, BandHierarchy};
use crate::trace::{frac, potential, PHI};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Largest section used for time evolution.
pub const MAX_TRANSPORT_LENGTH: usize = 4096;
/// Nodes of the geometric time grid.
pub const QUADRATURE_NODES: usize = 512;
/// Sites with |n| above this fraction of L count as outside.
pub const OUTSIDE_FRACTION: f64 = 0.45;
/// Largest tolerated time-averaged outside probability.
pub const OUTSIDE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("gap labels not matched: {0:?}")]
    CoverageFailure(Vec<i64>),
    #[error("wavepacket reaches the boundary: outside probability {outside:e} at T = {t}")]
    BoundaryContamination { outside: f64, t: f64 },
    #[error("{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Band(#[from] BandError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub lambda: f64,
    pub omega: f64,
    pub length: usize,
    /// V(1), ..., V(L).
    pub values: Vec<f64>,
    /// For omega = 0 and L a Fibonacci number: whether the 0/1 word equals
    /// the prefix of the substitution fixed point.
    pub substitution_match: Option<bool>,
}

impl PotentialSpec {
    /// Sites carrying lambda as 1, the others as 0.
    #[must_use]
    pub fn word(&self) -> Vec<u8> {
        self.values.iter().map(|&v| u8::from(v != 0.0)).collect()
    }
}

/// Prefix of the fixed point of a -> ab, b -> a with a = 1, b = 0.
#[must_use]
pub fn substitution_word(len: usize) -> Vec<u8> {
    let mut w = vec![1u8];
    while w.len() < len {
        w = w.iter().flat_map(|&c| if c == 1 { vec![1, 0] } else { vec![1] }).collect();
    }
    w.truncate(len);
    w
}

fn is_fibonacci(n: usize) -> bool {
    (0..93).map(fib).take_while(|&f| f <= n as u64).any(|f| f == n as u64)
}

#[must_use]
pub fn generate_potential(lambda: f64, omega: f64, length: usize) -> PotentialSpec {
    let values: Vec<f64> = (1..=length as i64).map(|n| potential(n, omega, lambda)).collect();
    let mut p = PotentialSpec { lambda, omega, length, values, substitution_match: None };
    if omega == 0.0 && lambda != 0.0 && is_fibonacci(length) {
        p.substitution_match = Some(p.word() == substitution_word(length));
    }
    p
}

/// Smallest period q <= L/2 of a word, if any.
#[must_use]
pub fn smallest_period(w: &[u8]) -> Option<usize> {
    (1..=w.len() / 2).find(|&q| w.iter().zip(&w[q..]).all(|(a, b)| a == b))
}

/// Eigenvalue count of the Dirichlet section at or below E.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdsCount {
    pub count: usize,
    pub length: usize,
    /// E hit an eigenvalue and was moved up by 1e-12.
    pub perturbed: bool,
}

impl IdsCount {
    #[must_use]
    pub fn value(&self) -> f64 {
        self.count as f64 / self.length as f64
    }
}

/// Negative pivots of the LDL^T factorization of H - E, or None when a
/// pivot vanishes.
fn sturm_count(diag: &[f64], e: f64) -> Option<usize> {
    let mut count = 0;
    let mut d = 1.0f64;
    for (i, &v) in diag.iter().enumerate() {
        d = if i == 0 { v - e } else { v - e - 1.0 / d };
        if d == 0.0 {
            return None;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    Some(count)
}

/// #{eigenvalues <= E} / L of the Dirichlet section, by Sturm counting.
#[must_use]
pub fn ids_finite(p: &PotentialSpec, e: f64) -> IdsCount {
    match sturm_count(&p.values, e) {
        Some(c) => IdsCount { count: c, length: p.length, perturbed: false },
        None => {
            let mut shifted = e;
            let mut c = None;
            while c.is_none() {
                shifted += 1e-12 * e.abs().max(1.0);
                c = sturm_count(&p.values, shifted);
            }
            IdsCount { count: c.unwrap_or(0), length: p.length, perturbed: true }
        }
    }
}

/// Dirichlet section as a dense symmetric matrix.
#[must_use]
pub fn section_matrix(diag: &[f64]) -> DMatrix<f64> {
    let n = diag.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub level: usize,
    /// The gap right of band j.
    pub gap_index: usize,
    pub left: f64,
    pub right: f64,
    /// j / F_k.
    pub ids_value: f64,
    pub label_m: i64,
    pub label_error: f64,
}

/// Best label m in [-F_k, F_k] for every inner gap of a level, and a check
/// that each 1 <= |m| <= m_max is the label of some gap with error < 2/F_k.
pub fn gap_labels(h: &BandHierarchy, level: usize, m_max: i64) -> Result<Vec<GapRecord>, OperatorError> {
    let lv = h.level(level)?;
    let f = lv.len();
    let fk = f as f64;
    let fracs: Vec<(i64, f64)> = (-(f as i64)..=f as i64).map(|m| (m, frac(m as f64 * PHI))).collect();
    let records: Vec<GapRecord> = (1..f)
        .into_par_iter()
        .map(|j| {
            let ids = j as f64 / fk;
            let (m, err) = fracs
                .iter()
                .map(|&(m, x)| (m, (ids - x).abs()))
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            GapRecord {
                level,
                gap_index: j,
                left: lv[j - 1].right.to_f64(),
                right: lv[j].left.to_f64(),
                ids_value: ids,
                label_m: m,
                label_error: err,
            }
        })
        .collect();
    let missing: Vec<i64> = (-m_max..=m_max)
        .filter(|&m| m != 0)
        .filter(|&m| !records.iter().any(|r| r.label_m == m && r.label_error < 2.0 / fk))
        .collect();
    if missing.is_empty() {
        Ok(records)
    } else {
        Err(OperatorError::CoverageFailure(missing))
    }
}

/// CSV: level,j,left,right,m,label_error.
#[must_use]
pub fn gaps_csv(records: &[GapRecord]) -> String {
    let mut s = String::from("level,j,left,right,m,label_error\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.level,
            r.gap_index,
            crate::fmt17(r.left),
            crate::fmt17(r.right),
            r.label_m,
            crate::fmt17(r.label_error)
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DosProbe {
    /// (left, right, log nu(I) / log |I|) over the bands of the level.
    pub bands: Vec<(f64, f64, f64)>,
    /// The same ratio over dyadic subintervals of the spectrum hull that
    /// hold at least one root.
    pub dyadic: Vec<(f64, f64, f64)>,
    pub min_band_ratio: f64,
    pub mean_band_ratio: f64,
}

/// Scaling of the root-counting measure (1/F_k per root) on the level's
/// bands and on `dyadic_levels` rounds of dyadic subdivision.
pub fn dos_scaling_probe(h: &BandHierarchy, level: usize, dyadic_levels: usize) -> Result<DosProbe, OperatorError> {
    let lv = h.level(level)?;
    let f = lv.len() as f64;
    let bands: Vec<(f64, f64, f64)> = lv
        .iter()
        .map(|b| (b.left.to_f64(), b.right.to_f64(), (1.0 / f).ln() / b.width().ln()))
        .collect();
    let roots: Vec<f64> = lv.iter().map(|b| b.root.to_f64()).collect();
    let lo = lv[0].left.to_f64();
    let hi = lv[lv.len() - 1].right.to_f64();
    let mut dyadic = Vec::new();
    for r in 1..=dyadic_levels {
        let n = 1usize << r;
        let w = (hi - lo) / n as f64;
        for i in 0..n {
            let (a, b) = (lo + w * i as f64, lo + w * (i + 1) as f64);
            let c = roots.partition_point(|&x| x < b) - roots.partition_point(|&x| x < a);
            if c > 0 && w < 1.0 {
                dyadic.push((a, b, (c as f64 / f).ln() / w.ln()));
            }
        }
    }
    let min_band_ratio = bands.iter().map(|b| b.2).fold(f64::INFINITY, f64::min);
    let mean_band_ratio = bands.iter().map(|b| b.2).sum::<f64>() / f;
    Ok(DosProbe { bands, dyadic, min_band_ratio, mean_band_ratio })
}

/// Geometric time nodes and weights for (2/T) int_0^inf exp(-2t/T) g(t) dt:
/// Simpson's rule in ln t on [t_min, t_max], the trapezoid rule on
/// [0, t_min] (node t = 0 carried separately as weight w0).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeQuadrature {
    pub nodes: Vec<f64>,
    t_min: f64,
}

impl TimeQuadrature {
    /// Nodes from 1e-4 to 25 T_max.
    #[must_use]
    pub fn new(t_max_avg: f64) -> Self {
        let t_min = 1e-4;
        let t_max = 25.0 * t_max_avg;
        let n = QUADRATURE_NODES;
        let r = (t_max / t_min).ln() / (n - 1) as f64;
        TimeQuadrature { nodes: (0..n).map(|i| t_min * (r * i as f64).exp()).collect(), t_min }
    }

    /// (weight of t = 0, weights of the nodes) for averaging scale T.
    #[must_use]
    pub fn weights(&self, t_avg: f64) -> (f64, Vec<f64>) {
        let n = self.nodes.len();
        let h = (self.nodes[n - 1] / self.nodes[0]).ln() / (n - 1) as f64;
        let kernel = |t: f64| 2.0 / t_avg * (-2.0 * t / t_avg).exp();
        let mut w = vec![0.0; n];
        // Simpson over an even number of intervals, trapezoid on a leftover one
        let simpson_end = if (n - 1).is_multiple_of(2) { n - 1 } else { n - 2 };
        for i in (0..simpson_end).step_by(2) {
            for (off, c) in [(0, 1.0), (1, 4.0), (2, 1.0)] {
                let t = self.nodes[i + off];
                w[i + off] += c * h / 3.0 * t * kernel(t);
            }
        }
        for i in simpson_end..n - 1 {
            for off in 0..2 {
                let t = self.nodes[i + off];
                w[i + off] += 0.5 * h * t * kernel(t);
            }
        }
        w[0] += 0.5 * self.t_min * kernel(self.t_min);
        (0.5 * self.t_min * kernel(0.0), w)
    }

    /// Weighted average of samples g(0) and g(nodes).
    #[must_use]
    pub fn average(&self, t_avg: f64, g0: f64, g: &[f64]) -> f64 {
        let (w0, w) = self.weights(t_avg);
        w0 * g0 + w.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportSeries {
    pub p: f64,
    /// (T, time-averaged moment, ln M(T) / (p ln T)).
    pub rows: Vec<(f64, f64, f64)>,
    /// ln M(T) / (p ln T) at the largest T of the grid.
    pub beta: f64,
    /// Least-squares slope of ln M against ln T, divided by p.
    pub beta_fit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportRun {
    pub lambda: f64,
    pub omega: f64,
    pub length: usize,
    pub series: Vec<TransportSeries>,
    /// max over time nodes of |sum_n |psi_n(t)|^2 - 1|.
    pub unitarity_error: f64,
    /// Largest time-averaged probability on |n| > 0.45 L over the T grid.
    pub outside_probability: f64,
    /// Largest relative gap between the moments and their geometric-grid
    /// quadrature; grows once T times the spectral width outruns the grid.
    pub quadrature_discrepancy: f64,
}

/// Site labels n and potentials of the length-L section centred at 0:
/// n runs over -(c-1)..=L-c with c = ceil(L/2).
#[must_use]
pub fn centered_sites(lambda: f64, omega: f64, length: usize) -> (Vec<i64>, Vec<f64>) {
    let c = length.div_ceil(2) as i64;
    let sites: Vec<i64> = (1 - c..=length as i64 - c).collect();
    let v = sites.iter().map(|&n| potential(n, omega, lambda)).collect();
    (sites, v)
}

/// Time-averaged probabilities a(n, T) = (2/T) int exp(-2t/T) |psi_n(t)|^2 dt
/// from eigenpairs: each pair (j, l) averages to 1 / (1 + ((E_j - E_l) T/2)^2).
fn averaged_density(phi: &DMatrix<f64>, energies: &[f64], a: &[f64], t: f64) -> Vec<f64> {
    let n = energies.len();
    let k = DMatrix::from_fn(n, n, |j, l| {
        let w = (energies[j] - energies[l]) * t / 2.0;
        a[j] * a[l] / (1.0 + w * w)
    });
    let b = phi * k;
    (0..n).map(|s| b.row(s).dot(&phi.row(s))).collect()
}

/// Time-averaged moments sum_n |n|^p a(n, T) of the centred Dirichlet
/// section for each p in `ps` and T in `t_grid`.
pub fn transport_moments(
    lambda: f64,
    omega: f64,
    length: usize,
    ps: &[f64],
    t_grid: &[f64],
) -> Result<TransportRun, OperatorError> {
    if !(8..=MAX_TRANSPORT_LENGTH).contains(&length) {
        return Err(OperatorError::InvalidConfig(format!("length {length} outside 8..={MAX_TRANSPORT_LENGTH}")));
    }
    let t_top = t_grid.iter().copied().fold(0.0, f64::max);
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 1.0)) || t_top > length as f64 / 4.0 {
        return Err(OperatorError::InvalidConfig(format!(
            "averaging times must lie in (1, L/4 = {}]",
            length as f64 / 4.0
        )));
    }
    if ps.iter().any(|&p| !(p > 0.0)) {
        return Err(OperatorError::InvalidConfig("moment orders must be positive".into()));
    }
    let (sites, v) = centered_sites(lambda, omega, length);
    let origin = sites.iter().position(|&n| n == 0).unwrap_or(0);
    let eig = section_matrix(&v).symmetric_eigen();
    let phi = &eig.eigenvectors;
    let energies: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let a: Vec<f64> = (0..length).map(|j| phi[(origin, j)]).collect();
    let dist: Vec<f64> = sites.iter().map(|&n| n.unsigned_abs() as f64).collect();
    let weights: Vec<Vec<f64>> = ps.iter().map(|&p| dist.iter().map(|x| x.powf(p)).collect()).collect();
    let cut = OUTSIDE_FRACTION * length as f64;

    // sampled evolution on the geometric grid: unitarity and a quadrature cross-check
    let quad = TimeQuadrature::new(t_top);
    let nodes = &quad.nodes;
    let m = nodes.len();
    let cr = DMatrix::from_fn(length, m, |j, i| a[j] * (energies[j] * nodes[i]).cos());
    let ci = DMatrix::from_fn(length, m, |j, i| -a[j] * (energies[j] * nodes[i]).sin());
    let re = phi * cr;
    let im = phi * ci;
    let dens = re.component_mul(&re) + im.component_mul(&im);
    let mut unitarity_error: f64 = 0.0;
    let mut sampled = vec![vec![0.0; m]; ps.len()];
    for i in 0..m {
        let col = dens.column(i);
        unitarity_error = unitarity_error.max((col.iter().sum::<f64>() - 1.0).abs());
        for (q, w) in weights.iter().enumerate() {
            sampled[q][i] = w.iter().zip(col.iter()).map(|(x, y)| x * y).sum();
        }
    }

    let averaged: Vec<Vec<f64>> = t_grid.par_iter().map(|&t| averaged_density(phi, &energies, &a, t)).collect();
    let mut outside_probability: f64 = 0.0;
    for (&t, d) in t_grid.iter().zip(&averaged) {
        let o: f64 = dist.iter().zip(d).filter(|(x, _)| **x > cut).map(|(_, y)| y.max(0.0)).sum();
        outside_probability = outside_probability.max(o);
        if o > OUTSIDE_TOLERANCE {
            return Err(OperatorError::BoundaryContamination { outside: o, t });
        }
    }
    let mut quadrature_discrepancy: f64 = 0.0;
    let series = ps
        .iter()
        .enumerate()
        .map(|(q, &p)| {
            let rows: Vec<(f64, f64, f64)> = t_grid
                .iter()
                .zip(&averaged)
                .map(|(&t, d)| {
                    let mt: f64 = weights[q].iter().zip(d).map(|(x, y)| x * y).sum();
                    let mq = quad.average(t, 0.0, &sampled[q]);
                    quadrature_discrepancy = quadrature_discrepancy.max((mq / mt - 1.0).abs());
                    (t, mt, mt.ln() / (p * t.ln()))
                })
                .collect();
            let x: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
            let top = rows.iter().max_by(|a, b| a.0.total_cmp(&b.0)).map_or(f64::NAN, |r| r.2);
            TransportSeries { p, beta: top, beta_fit: slope(&x, &y) / p, rows }
        })
        .collect();
    Ok(TransportRun {
        lambda,
        omega,
        length,
        series,
        unitarity_error,
        outside_probability,
        quadrature_discrepancy,
    })
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// CSV: p,T,moment,beta.
#[must_use]
pub fn transport_csv(run: &TransportRun) -> String {
    let mut s = String::from("p,T,moment,beta\n");
    for ser in &run.series {
        for &(t, m, b) in &ser.rows {
            let _ = writeln!(s, "{},{},{},{}", crate::fmt17(ser.p), crate::fmt17(t), crate::fmt17(m), crate::fmt17(b));
        }
    }
    s
}
