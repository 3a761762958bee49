//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line straight to
//! stdout (bypassing libtest capture) before asserting.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use pgt_core::bounds::{
    adaptive_lower_bound, constructive_upper_bounds, error_exponent, huffman_expected_length,
    mutual_info_t1, nondisjunct_probability_bound, semiadaptive_upper_bound, source_entropy,
};
use pgt_core::channel::syndrome;
use pgt_core::decode::{decode_support, decode_threshold};
use pgt_core::design::{bernoulli_matrix, is_disjunct, is_error_tolerant_disjunct, TestMatrix};
use pgt_core::dist::{select_delta, Regime, TruncatedPoisson};
use pgt_core::harness::{run_nonadaptive, run_semiadaptive_traced, ExperimentConfig, Scheme};
use pgt_core::semiadaptive::{per_realization_test_bound, stage_plan};

fn report(id: u32, name: &str, passed: bool, detail: &str, started: Instant) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let line = format!(
        "acceptance criterion {id} ({name}): {verdict} [{:.1}s] {detail}\n",
        started.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

/// Truncated Poisson probabilities by the recurrence `t_d = t_{d−1} λ / d`.
fn pmf_by_recurrence(lambda: f64, n: u64) -> Vec<f64> {
    let mut terms = vec![1.0f64];
    for d in 1..=n {
        let prev = *terms.last().unwrap();
        terms.push(prev * lambda / d as f64);
    }
    let total: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / total).collect()
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[test]
fn criterion_1_distribution_exactness() {
    let started = Instant::now();
    let regime = Regime::default();
    let mut worst_norm = 0.0f64;
    let mut worst_mean = 0.0f64;
    let mut markov_failures = Vec::new();
    for &lambda in &[0.5, 1.0, 5.0, 50.0] {
        for &n in &[1u64, 10, 1_000, 1_000_000] {
            let model = TruncatedPoisson::new(lambda, n).unwrap();
            let pmf: Vec<f64> = (0..=n).map(|d| model.pmf(d)).collect();
            let total: f64 = pmf.iter().sum();
            let mean: f64 = pmf.iter().enumerate().map(|(d, p)| d as f64 * p).sum();
            worst_norm = worst_norm.max((total - 1.0).abs());
            worst_mean = worst_mean.max((model.mean() - mean).abs());
            let delta = select_delta(&model, &regime).unwrap();
            let tail = model.tail_exact(delta);
            let markov = model.mean() / (delta + 1) as f64;
            if tail > markov {
                markov_failures.push((lambda, n, delta, tail, markov));
            }
        }
    }
    let passed = worst_norm <= 1e-12 && worst_mean <= 1e-10 && markov_failures.is_empty();
    let detail = format!(
        "max |sum pmf - 1| = {worst_norm:.2e}, max mean gap = {worst_mean:.2e}, markov violations = {markov_failures:?}"
    );
    report(1, "distribution exactness", passed, &detail, started);
    assert!(passed, "{detail}");
}

/// Calls `f` with every nondecreasing sequence of `n` column masks below `2^m`.
fn for_each_column_multiset(m: usize, n: usize, f: &mut impl FnMut(&[u64])) {
    fn rec(m: usize, n: usize, start: u64, cols: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        if cols.len() == n {
            f(cols);
            return;
        }
        for c in start..(1u64 << m) {
            cols.push(c);
            rec(m, n, c, cols, f);
            cols.pop();
        }
    }
    rec(m, n, 0, &mut Vec::with_capacity(n), f);
}

/// All subsets of `0..n` as bitmasks with at most `k` members.
fn small_subsets(n: usize, k: usize) -> Vec<u32> {
    (0u32..1 << n).filter(|s| s.count_ones() as usize <= k).collect()
}

fn members(mask: u32) -> Vec<usize> {
    (0..32).filter(|j| mask >> j & 1 == 1).collect()
}

/// Minimum over columns `j` and sets `S` of `delta` other columns of the
/// number of rows where `j` is 1 and all of `S` are 0.
fn min_private_rows(cols: &[u64], delta: usize) -> u32 {
    let n = cols.len();
    let mut best = u32::MAX;
    for s in small_subsets(n, delta) {
        if s.count_ones() as usize != delta {
            continue;
        }
        let union = members(s).iter().fold(0u64, |acc, &j| acc | cols[j]);
        for (j, &col) in cols.iter().enumerate() {
            if s >> j & 1 == 0 {
                best = best.min((col & !union).count_ones());
            }
        }
    }
    best
}

#[test]
fn criterion_2_disjunct_decoding_oracle() {
    let started = Instant::now();
    let mut matrices = 0u64;
    let mut disjunct_cases = 0u64;
    let mut tolerant_cases = 0u64;
    let mut counterexamples: Vec<String> = Vec::new();
    for m in 1..=5usize {
        for n in 1..=6usize {
            let sets_by_size: Vec<Vec<u32>> = (0..n).map(|k| small_subsets(n, k)).collect();
            for_each_column_multiset(m, n, &mut |cols| {
                matrices += 1;
                let matrix = TestMatrix::from_column_masks(m, cols).unwrap();
                for (delta, sets) in sets_by_size.iter().enumerate() {
                    let private = min_private_rows(cols, delta);
                    let disjunct = is_disjunct(&matrix, delta).unwrap();
                    if disjunct != (private >= 1) {
                        counterexamples.push(format!("verdict mismatch {cols:?} delta={delta}"));
                    }
                    if disjunct {
                        disjunct_cases += 1;
                        for &s in sets {
                            let set = members(s);
                            let y = syndrome(&matrix, &set).unwrap();
                            if decode_support(&matrix, &y).unwrap().recovered != set {
                                counterexamples.push(format!("support {cols:?} set={set:?}"));
                            }
                        }
                    }
                    for v in 1..=(m - 1) / 2 {
                        let tolerant = is_error_tolerant_disjunct(&matrix, delta, v).unwrap();
                        if tolerant != (private > 2 * v as u32) {
                            counterexamples.push(format!("tolerant verdict {cols:?} delta={delta} v={v}"));
                        }
                        if !tolerant {
                            continue;
                        }
                        tolerant_cases += 1;
                        let flips: Vec<u32> = small_subsets(m, v);
                        for &s in sets {
                            let set = members(s);
                            let clean = syndrome(&matrix, &set).unwrap();
                            for &f in &flips {
                                let mut y = clean.clone();
                                for row in members(f) {
                                    y.bits.flip(row);
                                }
                                if decode_threshold(&matrix, &y, v).unwrap().recovered != set {
                                    counterexamples.push(format!(
                                        "threshold {cols:?} set={set:?} flips={f:b}"
                                    ));
                                }
                            }
                        }
                    }
                }
            });
        }
    }
    let passed = counterexamples.is_empty() && disjunct_cases > 0 && tolerant_cases > 0;
    let detail = format!(
        "{matrices} matrices up to column order, {disjunct_cases} disjunct and {tolerant_cases} tolerant cases, {} counterexamples {:?}",
        counterexamples.len(),
        counterexamples.iter().take(3).collect::<Vec<_>>()
    );
    report(2, "disjunct decoding oracle", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_3_semiadaptive_zero_error_and_count() {
    let started = Instant::now();
    let (lambda, n) = (10.0, 1000u64);
    let config = ExperimentConfig::new(lambda, n, Scheme::SemiAdaptive, 5000, 20240601);
    let model = TruncatedPoisson::new(lambda, n).unwrap();
    let lambda_bar = model.mean();
    let plan = stage_plan(n as usize, lambda_bar).unwrap();
    let (agg, trials) = run_semiadaptive_traced(&config).unwrap();
    let over_bound = trials
        .iter()
        .filter(|t| t.tests_used > per_realization_test_bound(&plan, t.d_true))
        .count();
    let ceiling = 1.884 * lambda_bar * (n as f64 / lambda_bar).log2() * 1.25;
    let floor = adaptive_lower_bound(lambda, n).unwrap().value * 0.5;
    let passed = agg.errors == 0
        && over_bound == 0
        && agg.mean_tests <= ceiling
        && agg.mean_tests >= floor;
    let detail = format!(
        "errors = {}, trials over per-realization bound = {over_bound}, mean tests = {:.3} in [{floor:.3}, {ceiling:.3}] (theory ub {:.3})",
        agg.errors,
        agg.mean_tests,
        semiadaptive_upper_bound(lambda_bar, n).unwrap().value
    );
    report(3, "semi-adaptive zero error and count bound", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_4_huffman_sandwich() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut worst_entropy_gap = 0.0f64;
    for &lambda in &[0.5, 1.0, 2.0] {
        for n in 1..=14u64 {
            let model = TruncatedPoisson::new(lambda, n).unwrap();
            let pmf = pmf_by_recurrence(lambda, n);
            let mut oracle = 0.0;
            for mask in 0u32..1 << n {
                let d = mask.count_ones() as u64;
                let p = pmf[d as usize] / binomial(n, d);
                oracle -= p * p.log2();
            }
            let h = source_entropy(&model).value;
            let len = huffman_expected_length(&model).unwrap().value;
            worst_entropy_gap = worst_entropy_gap.max((h - oracle).abs());
            if (h - oracle).abs() > 1e-9 || !(h <= len + 1e-12 && len < h + 1.0) {
                failures.push((lambda, n, h, oracle, len));
            }
        }
    }
    let model = TruncatedPoisson::new(1.0, 2).unwrap();
    let h = source_entropy(&model).value;
    let len = huffman_expected_length(&model).unwrap().value;
    // "Exactly 2.0" is checked to floating-point rounding of the summed probabilities.
    let example_ok = (h - 1.9219).abs() < 5e-5 && (len - 2.0).abs() < 1e-12;
    let passed = failures.is_empty() && example_ok;
    let detail = format!(
        "max entropy gap vs 2^n enumeration = {worst_entropy_gap:.2e}; (1,2): H = {h:.6}, E[len] = {len}; failures = {failures:?}"
    );
    report(4, "Huffman sandwich", passed, &detail, started);
    assert!(passed, "{detail}");
}

/// `E_o` from its defining triple sum over `t₁`, `t₂`, `y`.
fn exponent_by_enumeration(rho: f64, i: u32, d: u32, p: f64) -> f64 {
    let bern = |bits: u32, len: u32| {
        let ones = bits.count_ones() as i32;
        p.powi(ones) * (1.0 - p).powi(len as i32 - ones)
    };
    let mut outer = 0.0;
    for y in 0..2u32 {
        for t2 in 0..(1u32 << (d - i)) {
            let mut inner = 0.0;
            for t1 in 0..(1u32 << i) {
                let positive = u32::from(t1 != 0 || t2 != 0);
                let joint = if positive == y { bern(t2, d - i) } else { 0.0 };
                inner += bern(t1, i) * joint.powf(1.0 / (1.0 + rho));
            }
            outer += inner.powf(1.0 + rho);
        }
    }
    -outer.ln()
}

#[test]
fn criterion_5_error_exponent_identities() {
    let started = Instant::now();
    let mut zero_ok = true;
    let mut worst_enum = 0.0f64;
    let mut worst_slope = 0.0f64;
    let mut concavity_ok = true;
    for d in 1..=6u64 {
        for i in 1..=d {
            for &p in &[0.1, 0.3, 0.5] {
                zero_ok &= error_exponent(0.0, i, d, p).unwrap().value == 0.0;
                for &rho in &[0.0, 0.25, 0.5, 1.0] {
                    let e = error_exponent(rho, i, d, p).unwrap().value;
                    let oracle = exponent_by_enumeration(rho, i as u32, d as u32, p);
                    worst_enum = worst_enum.max((e - oracle).abs());
                }
                let h = 1e-4;
                let f = |r: f64| error_exponent(r, i, d, p).unwrap().value;
                let slope = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
                let closed = (1.0 - p).powi((d - i) as i32);
                let x = (1.0 - p).powi(i as i32);
                let hb = -x * x.ln() - (1.0 - x) * (1.0 - x).ln();
                worst_slope = worst_slope.max((slope - closed * hb).abs());
                worst_slope = worst_slope.max((mutual_info_t1(i, d, p).unwrap() - closed * hb).abs());
                let grid: Vec<f64> = (0..20).map(|k| f(k as f64 / 19.0)).collect();
                concavity_ok &= grid.windows(2).all(|w| w[1] >= w[0]);
                concavity_ok &= grid.windows(3).all(|w| w[0] + w[2] <= 2.0 * w[1] + 1e-15);
            }
        }
    }
    let passed = zero_ok && worst_enum <= 1e-12 && worst_slope <= 1e-6 && concavity_ok;
    let detail = format!(
        "E_o(0)=0: {zero_ok}, max enumeration gap = {worst_enum:.2e}, max slope gap = {worst_slope:.2e}, monotone+concave: {concavity_ok}"
    );
    report(5, "error-exponent identities", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_6_nonadaptive_error_rates() {
    let started = Instant::now();
    let (lambda, n) = (3.0, 200u64);
    let model = TruncatedPoisson::new(lambda, n).unwrap();
    let regime = Regime::default();
    let bound_m = constructive_upper_bounds(&model, &regime, 0)
        .unwrap()
        .into_iter()
        .find(|b| b.name == "method2")
        .unwrap()
        .value as u64;
    let run_at = |m: u64| {
        let mut c = ExperimentConfig::new(lambda, n, Scheme::Method2, 2000, 6060);
        c.m_override = Some(m);
        run_nonadaptive(&c).unwrap()
    };
    let high = run_at(2 * bound_m);
    let low = run_at(bound_m / 2);
    let individual =
        run_nonadaptive(&ExperimentConfig::new(lambda, n, Scheme::Individual, 2000, 6060)).unwrap();
    let passed = high.error_ci.midpoint() < low.error_ci.midpoint() && individual.errors == 0;
    let detail = format!(
        "method2 m = {bound_m}; P(E) at m={:?}: {:.4} (mid {:.4}), at m={:?}: {:.4} (mid {:.4}); individual testing errors = {}",
        high.m,
        high.error_rate,
        high.error_ci.midpoint(),
        low.m,
        low.error_rate,
        low.error_ci.midpoint(),
        individual.errors
    );
    report(6, "nonadaptive error-rate behavior", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_7_random_design_disjunctness_rate() {
    let started = Instant::now();
    let (n, delta, p) = (30u64, 2u64, 1.0 / 3.0);
    let m = (std::f64::consts::E * 9.0 * (n as f64).ln()).ceil() as u64;
    let bound = nondisjunct_probability_bound(n, delta, p, m).unwrap();
    let seeds = 500u64;
    let failures = (0..seeds)
        .filter(|&seed| {
            let matrix = bernoulli_matrix(m as usize, n as usize, p, seed).unwrap();
            !is_disjunct(&matrix, delta as usize).unwrap()
        })
        .count();
    let fraction = failures as f64 / seeds as f64;
    let passed = m == 84 && fraction <= bound;
    let detail = format!("m = {m}, non-disjunct fraction = {fraction} ({failures}/{seeds}) <= bound {bound:.7}");
    report(7, "random design disjunctness rate", passed, &detail, started);
    assert!(passed, "{detail}");
}

fn pgt(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_pgt")).args(args).output().unwrap();
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pgt-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn criterion_8_cli_determinism() {
    let started = Instant::now();
    let sweep_config = scratch("sweep.json");
    std::fs::write(
        &sweep_config,
        r#"[{"lambda": 2, "n": 60, "scheme": {"kind": "method1"}, "trials": 50, "seed": 3},
            {"lambda": 2, "n": 60, "scheme": {"kind": "semi_adaptive"}, "trials": 50, "seed": 3}]"#,
    )
    .unwrap();
    let trace_a = scratch("trace_a.jsonl");
    let trace_b = scratch("trace_b.jsonl");
    let commands: Vec<Vec<String>> = vec![
        "simulate-semiadaptive --lambda 10 --n 1000 --trials 100 --seed 1",
        "simulate-nonadaptive --scheme method1 --lambda 2 --n 80 --trials 200 --seed 5",
        "simulate-nonadaptive --scheme method1-noisy --v 1 --lambda 1 --n 40 --trials 100 --seed 5",
        "simulate-nonadaptive --scheme method2 --lambda 3 --n 200 --trials 200 --seed 9 --fixed-matrix",
        "design --method bernoulli --m 20 --n 30 --p 0.2 --seed 4",
        "design --method chengdu --delta 2 --n 30 --p 0.9 --seed 4",
    ]
    .into_iter()
    .map(|s| s.split(' ').map(String::from).collect())
    .chain([vec!["sweep".to_string(), "--config".into(), sweep_config.display().to_string()]])
    .collect();

    let mut mismatches = Vec::new();
    for args in &commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (a, code_a) = pgt(&args);
        let (b, code_b) = pgt(&args);
        if a != b || code_a != 0 || code_b != 0 || a.is_empty() {
            mismatches.push(args.join(" "));
        }
    }
    let traced = |path: &PathBuf| {
        pgt(&[
            "simulate-semiadaptive", "--lambda", "4", "--n", "300", "--trials", "30", "--seed", "2",
            "--trace", path.to_str().unwrap(),
        ]);
        std::fs::read(path).unwrap()
    };
    let (ta, tb) = (traced(&trace_a), traced(&trace_b));
    if ta != tb || ta.is_empty() {
        mismatches.push("trace file".into());
    }
    let passed = mismatches.is_empty();
    let detail = format!("{} commands plus trace output compared byte for byte; mismatches: {mismatches:?}", commands.len());
    report(8, "CLI determinism", passed, &detail, started);
    assert!(passed, "{detail}");
}
