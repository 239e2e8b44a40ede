//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use fibtrace::bands::{classify_bands, compute_bands, fib, twisted_eigen_roots};
use fibtrace::combinatorics::{build_comb_table, closed_form_mismatches, comb_limit, comb_ratio, COMB_LIMIT};
use fibtrace::operator::{gap_labels, generate_potential, ids_finite, transport_moments};
use fibtrace::orbits::{
    bound_curve_p4label, bound_curve_p6label, gamma_closed_form, orbit_multiplier_numeric,
    period2_multiplier_closed_form, solve_period2, solve_period4,
};
use fibtrace::report::{asymptotic_trends, full_report, sandwich_violations, ChainStatus};
use fibtrace::thermo::{equidistribution_check, golden_mean, parry_measure, pressure_curve, pressure_from_logs};
use fibtrace::trace::{fricke_vogt, trace_sequence, transfer_matrix, LOG_PHI};
use num_complex::Complex64;
use std::f64::consts::PI;
use fibtrace::cli::run_from;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cosine_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 1..50 {
        let theta = f64::from(i) / 100.0;
        let s = trace_sequence(0.0, 2.0 * (2.0 * PI * theta).cos(), 20, false).map_err(|e| e.to_string())?;
        for k in 0..=20usize {
            let want = (2.0 * PI * fib(k) as f64 * theta).cos();
            worst = worst.max((s.x(k as isize) - want).abs());
        }
    }
    check(worst < 1e-8, format!("max error {worst:.3e}"))
}

fn invariant_conservation() -> Outcome {
    let mut worst: f64 = 0.0;
    for lambda in [1.0, 4.0, 16.0] {
        let h = compute_bands(lambda, 12).map_err(|e| e.to_string())?;
        let g0 = lambda * lambda / 4.0;
        for b in h.level(12).map_err(|e| e.to_string())? {
            let s = trace_sequence(lambda, b.root.to_f64(), 13, false).map_err(|e| e.to_string())?;
            for k in 0..=12 {
                worst = worst.max((fricke_vogt(s.point(k)) - g0).abs() / g0);
            }
        }
    }
    check(worst < 1e-9, format!("max relative residual {worst:.3e}"))
}

fn band_counts() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for lambda in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let h = compute_bands(lambda, 18).map_err(|e| format!("lambda={lambda}: {e}"))?;
        for k in 0..=18 {
            if h.levels[k].len() as u64 != fib(k) {
                bad.push((lambda, k));
            }
        }
        for k in 1..=14 {
            let ev = twisted_eigen_roots(lambda, k).map_err(|e| e.to_string())?;
            let roots: Vec<f64> = h.levels[k].iter().map(|b| b.root.to_f64()).collect();
            if ev.len() != roots.len() {
                bad.push((lambda, k));
                continue;
            }
            for (a, b) in ev.iter().zip(&roots) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(bad.is_empty() && worst < 1e-7, format!("count mismatches {bad:?}, max root difference {worst:.3e}"))
}

fn trace_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for lambda in [1.0, 4.0] {
        for i in 0..1000 {
            let e = -3.0 + (6.0 + lambda) * f64::from(i) / 999.0;
            let s = trace_sequence(lambda, e, 12, false).map_err(|e| e.to_string())?;
            // the level-0 block is the single site 0, not a trace of x_0
            for k in 1..=12usize {
                let m = transfer_matrix(fib(k) as i64, 0.0, Complex64::new(e, 0.0), lambda);
                let tr = (m[(0, 0)] + m[(1, 1)]).re;
                let want = 2.0 * s.x(k as isize);
                worst = worst.max((tr - want).abs() / want.abs().max(1.0));
            }
        }
    }
    check(worst < 1e-8, format!("max relative error {worst:.3e}"))
}

fn combinatorics() -> Outcome {
    let t = build_comb_table(60);
    let mism = closed_form_mismatches(&t);
    let a_ok = (2..=60).all(|k| t.a[k].total() == t.fib[k - 2]);
    let r60 = comb_ratio(&t, 60);
    let (_, ex) = comb_limit(&t);
    check(
        mism.is_empty() && a_ok && (r60 - 0.552_786_4).abs() < 0.02 && (ex - COMB_LIMIT).abs() < 1e-3,
        format!("closed-form mismatches {}, a_k = F_(k-2) {a_ok}, C_60/(60 F_60) = {r60:.6}, extrapolated {ex:.7}", mism.len()),
    )
}

fn orbit_multipliers() -> Outcome {
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let o = solve_period2(lambda).map_err(|e| e.to_string())?;
        let num = orbit_multiplier_numeric(&o).map_err(|e| e.to_string())?;
        let cf = period2_multiplier_closed_form(lambda);
        worst = worst.max((num.abs() - cf).abs() / cf);
        let q = solve_period4(lambda).map_err(|e| e.to_string())?;
        let qn = orbit_multiplier_numeric(&q).map_err(|e| e.to_string())?;
        worst = worst.max((qn.abs() - q.multiplier.abs()).abs() / q.multiplier.abs());
    }
    let q = solve_period4(2.0).map_err(|e| e.to_string())?;
    let b = q.points[0].y;
    let mu_err = (q.multiplier.abs() - (23.0 + 525f64.sqrt()) / 2.0).abs();
    check(
        worst < 1e-9 && (b - 1.5).abs() < 1e-10 && mu_err < 1e-9,
        format!("max relative error {worst:.3e}, period-4 b = {b}, multiplier error {mu_err:.3e}"),
    )
}

fn phi_identities() -> Outcome {
    let e4 = ((7.0 + 45f64.sqrt()) / 2.0).ln() - 4.0 * LOG_PHI;
    let e6 = ((18.0 + 320f64.sqrt()) / 2.0).ln() - 6.0 * LOG_PHI;
    let l = 1e-3;
    let (c6, c4, g) = (bound_curve_p6label(l), bound_curve_p4label(l), gamma_closed_form(l));
    check(
        e4.abs() < 1e-12 && e6.abs() < 1e-12 && (c6 - 1.0).abs() < 1e-3 && (c4 - 1.0).abs() < 1e-3 && (g - 0.5).abs() < 1e-3,
        format!("identity errors {e4:.1e} {e6:.1e}; at lambda=1e-3 curves {c6:.6} {c4:.6}, gamma {g:.6}"),
    )
}

fn sandwich() -> Outcome {
    let mut detail = Vec::new();
    let mut total = 0;
    for lambda in [8.0, 16.0, 24.0] {
        let h = compute_bands(lambda, 14).map_err(|e| e.to_string())?;
        let v = sandwich_violations(&h);
        total += v.len();
        let mut levels: Vec<usize> = v.iter().map(|x| x.level).collect();
        levels.dedup();
        detail.push(format!("lambda={lambda}: {} violations at levels {levels:?}", v.len()));
    }
    check(total == 0, detail.join("; "))
}

fn strict_chain() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for lambda in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let r = full_report(lambda, 18).map_err(|e| e.to_string())?;
        ok &= r.chain.status == ChainStatus::Strict && r.chain.per_level_order;
        let v = r.values();
        detail.push(format!(
            "lambda={lambda}: {:.4} < {:.4} < {:.4} < {:.4} {:?} per-level {}",
            v[0], v[1], v[2], v[3], r.chain.status, r.chain.per_level_order
        ));
    }
    check(ok, detail.join("; "))
}

fn asymptotics() -> Outcome {
    let reports: Result<Vec<_>, _> = [32.0, 128.0, 512.0].iter().map(|&l| full_report(l, 16)).collect();
    let reports = reports.map_err(|e| e.to_string())?;
    let trends = asymptotic_trends(&reports, 0.15);
    let ok = trends.iter().all(|t| t.within_tolerance && t.monotone);
    let detail: Vec<String> = trends
        .iter()
        .map(|t| {
            let p: Vec<String> = t.products.iter().map(|x| format!("{x:.4}")).collect();
            format!(
                "{} [{}] -> {:.4} within {} monotone {}",
                t.quantity,
                p.join(", "),
                t.target,
                t.within_tolerance,
                t.monotone
            )
        })
        .collect();
    check(ok, detail.join("; "))
}

fn gap_labeling() -> Outcome {
    let h = compute_bands(2.0, 16).map_err(|e| e.to_string())?;
    let g = gap_labels(&h, 16, 20).map_err(|e| e.to_string())?;
    let p = generate_potential(2.0, 0.0, 2000);
    let worst = g
        .iter()
        .map(|r| (ids_finite(&p, 0.5 * (r.left + r.right)).value() - r.ids_value).abs())
        .fold(0.0, f64::max);
    check(worst < 0.01, format!("{} gaps, all |m| <= 20 labelled, max IDS deviation {worst:.2e}", g.len()))
}

fn thermo() -> Outcome {
    let m = parry_measure(&golden_mean()).map_err(|e| e.to_string())?;
    let perr = (m.stationary[0] - 0.723_606_797_749_979).abs().max((m.stationary[1] - 0.276_393_202_250_021).abs());
    let h = compute_bands(2.0, 20).map_err(|e| e.to_string())?;
    let ts: Vec<f64> = (0..=300).map(|i| -1.0 + 0.01 * f64::from(i)).collect();
    let c14 = pressure_curve(&h, 14, &ts).map_err(|e| e.to_string())?;
    let logs: Vec<f64> = h.levels[20].iter().map(|b| b.deriv.ln_abs()).collect();
    let p20 = pressure_from_logs(&logs, 20, 0.0);
    let nu14 = full_report(2.0, 14).map_err(|e| e.to_string())?.dim_nu.at_level(14).unwrap_or(f64::NAN);
    let tangent_err = (c14.tangent_intercept - nu14).abs();
    let h8 = classify_bands(compute_bands(8.0, 16).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let eq = equidistribution_check(&h8, 16, 5).map_err(|e| e.to_string())?;
    check(
        perr < 1e-10 && c14.is_convex_decreasing() && (p20 - LOG_PHI).abs() < 0.02 && tangent_err < 1e-10 && eq.l1 < 0.05,
        format!(
            "Parry error {perr:.1e}, convex decreasing {}, P_20(0) - log phi = {:.4}, tangent vs dim_nu {tangent_err:.1e}, equidistribution L1 {:.4}",
            c14.is_convex_decreasing(),
            p20 - LOG_PHI,
            eq.l1
        ),
    )
}

fn transport() -> Outcome {
    let free = transport_moments(0.0, 0.0, 2048, &[2.0], &[4.0, 8.0, 16.0, 24.0, 32.0]).map_err(|e| e.to_string())?;
    let bf = free.series[0].beta;
    let ts: Vec<f64> = (0..12).map(|i| 8.0 * 32f64.powf(f64::from(i) / 11.0)).collect();
    let run = transport_moments(8.0, 0.0, 1024, &[1.0, 2.0, 5.0], &ts).map_err(|e| e.to_string())?;
    let b: Vec<f64> = run.series.iter().map(|s| s.beta).collect();
    let moments_ok = run.series.iter().all(|s| s.rows.iter().all(|r| r.1 >= 0.0));
    let unit = free.unitarity_error.max(run.unitarity_error);
    let ok = unit < 1e-9
        && (bf - 1.0).abs() < 0.05
        && b.iter().all(|&x| x > 0.0 && x < 1.0)
        && b.windows(2).all(|w| w[0] <= w[1])
        && moments_ok;
    check(
        ok,
        format!(
            "unitarity {unit:.1e}, free beta {bf:.4}, lambda=8 beta(1,2,5) = {:.4} {:.4} {:.4}, outside {:.1e}",
            b[0],
            b[1],
            b[2],
            run.outside_probability.max(free.outside_probability)
        ),
    )
}

/// Output of one in-process CLI run with the wall-time line removed.
fn data_rows(args: &[&str], dir: &Path, tag: &str) -> Result<String, String> {
    let out = dir.join(tag);
    let out_s = out.to_string_lossy().into_owned();
    let mut argv = vec!["fibtrace"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--output", &out_s]);
    let code = run_from(argv);
    if code != ExitCode::SUCCESS && code != ExitCode::from(2) {
        return Err(format!("{args:?} failed"));
    }
    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    if args.contains(&"json") {
        let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        v["metadata"]["wall_time_s"] = serde_json::Value::Null;
        return Ok(v.to_string());
    }
    Ok(text.lines().filter(|l| !l.starts_with("# wall_time_s")).collect::<Vec<_>>().join("\n"))
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 9] = [
        &["bands", "--lambda", "2", "--k-max", "8"],
        &["orbits", "--lambda-grid", "0.05:16:0.05"],
        &["dims", "--lambda", "2", "--k-max", "12"],
        &["pressure", "--lambda", "2", "--level", "12", "--t", "-1:2:0.01"],
        &["gaps", "--lambda", "2", "--level", "12", "--m-max", "5"],
        &["comb", "--k-max", "40"],
        &["transport", "--lambda", "8", "--length", "256", "--t", "4,8,16", "--random-omegas", "2", "--seed", "7"],
        &["sweep", "--lambdas", "32,64", "--k-max", "12", "--report", "asymptotics"],
        &["dims", "--lambdas", "1,2", "--k-max", "12", "--format", "json"],
    ];
    let dir = std::env::temp_dir().join(format!("fibtrace-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for (i, c) in commands.iter().enumerate() {
        // same output path both times: it is part of the echoed configuration
        let tag = format!("run{i}");
        if data_rows(c, &dir, &tag)? != data_rows(c, &dir, &tag)? {
            differing.push(c[0]);
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(differing.is_empty(), format!("{} commands, differing: {differing:?}", commands.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("zero-coupling cosine oracle", cosine_oracle),
        ("invariant conservation", invariant_conservation),
        ("band counts and eigen roots", band_counts),
        ("trace identity", trace_identity),
        ("combinatorics", combinatorics),
        ("orbit multipliers", orbit_multipliers),
        ("golden-ratio identities", phi_identities),
        ("derivative sandwich", sandwich),
        ("strict inequality chain", strict_chain),
        ("large-coupling trends", asymptotics),
        ("gap labeling", gap_labeling),
        ("thermodynamic checks", thermo),
        ("transport", transport),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {:2} PASS {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:2} FAIL {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
