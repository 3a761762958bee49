//! The `s`-stage algorithm: random pooling with shrinking group sizes, then
//! individual tests on whatever survives.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    /// Number of stages; the last one tests individually.
    pub s: usize,
    /// Group sizes `k_1 > … > k_{s−1}` of the pooled stages.
    pub k: Vec<usize>,
    pub n: usize,
    pub lambda_bar: f64,
}

/// Bookkeeping for one stage of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub pool_size: usize,
    pub groups: usize,
    pub tests: usize,
    pub positive_groups: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stages: Vec<StageRecord>,
    pub total_tests: usize,
    /// Sorted.
    pub recovered: Vec<usize>,
}

/// Plan with `s₀ = ln(n/λ̄)`, `s = ⌈s₀⌉` and `k_i = ⌈(n/λ̄)^{(s₀−i)/s₀}⌉ = ⌈e^{s₀−i}⌉`.
pub fn stage_plan(n: usize, lambda_bar: f64) -> Result<StagePlan> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(lambda_bar.is_finite() && lambda_bar > 0.0) {
        return Err(Error::invalid(format!("lambda_bar must be positive, got {lambda_bar}")));
    }
    if lambda_bar >= n as f64 {
        return Err(Error::domain(format!("lambda_bar {lambda_bar} must be below n = {n}")));
    }
    let s0 = (n as f64 / lambda_bar).ln();
    let s = (s0.ceil() as usize).max(1);
    let k = (1..s).map(|i| (s0 - i as f64).exp().ceil() as usize).collect();
    Ok(StagePlan { s, k, n, lambda_bar })
}

/// Runs the plan against a known defective set.
///
/// Each pooled stage shuffles the surviving pool and cuts it into consecutive
/// groups of `k_i` (the last group may be short). Members of positive groups
/// survive to the next stage; the final stage tests survivors one by one.
pub fn run_stages<R: Rng + ?Sized>(
    plan: &StagePlan,
    defectives: &[usize],
    rng: &mut R,
) -> Result<StageTrace> {
    let mut is_defective = vec![false; plan.n];
    for &j in defectives {
        if j >= plan.n {
            return Err(Error::invalid(format!("defective index {j} out of range for n = {}", plan.n)));
        }
        is_defective[j] = true;
    }

    let mut pool: Vec<usize> = (0..plan.n).collect();
    let mut stages = Vec::with_capacity(plan.s);
    for &size in &plan.k {
        pool.shuffle(rng);
        let mut survivors = Vec::new();
        let mut record = StageRecord {
            pool_size: pool.len(),
            groups: 0,
            tests: 0,
            positive_groups: 0,
        };
        for group in pool.chunks(size) {
            record.groups += 1;
            record.tests += 1;
            if group.iter().any(|&j| is_defective[j]) {
                record.positive_groups += 1;
                survivors.extend_from_slice(group);
            }
        }
        stages.push(record);
        pool = survivors;
    }

    let mut recovered: Vec<usize> = pool.iter().copied().filter(|&j| is_defective[j]).collect();
    recovered.sort_unstable();
    stages.push(StageRecord {
        pool_size: pool.len(),
        groups: pool.len(),
        tests: pool.len(),
        positive_groups: recovered.len(),
    });
    let total_tests = stages.iter().map(|r| r.tests).sum();
    Ok(StageTrace {
        stages,
        total_tests,
        recovered,
    })
}

/// `⌈n/k₁⌉ + Σ_{i=2}^{s−1} ⌈d k_{i−1}/k_i⌉ + d k_{s−1}`, or `n` for a single stage.
pub fn per_realization_test_bound(plan: &StagePlan, d: usize) -> usize {
    let Some(&k1) = plan.k.first() else {
        return plan.n;
    };
    let mut total = plan.n.div_ceil(k1);
    for pair in plan.k.windows(2) {
        total += (d * pair[0]).div_ceil(pair[1]);
    }
    total + d * plan.k[plan.k.len() - 1]
}
