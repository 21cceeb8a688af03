//! Paired-seed comparison of two controllers.

use serde::Serialize;

use super::trial::{TrialOutcome, TrialRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedOutcome {
    pub trial_index: usize,
    pub seed: u64,
    pub a: TrialOutcome,
    pub b: TrialOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub label_a: String,
    pub label_b: String,
    pub trials: usize,
    pub success_percent_a: f64,
    pub success_percent_b: f64,
    /// `success_percent_a − success_percent_b`.
    pub difference_percent: f64,
    /// Seeds where only A succeeded.
    pub wins_a: usize,
    /// Seeds where only B succeeded.
    pub wins_b: usize,
    pub ties: usize,
    /// Two-sided binomial sign test on the untied pairs.
    pub p_value: f64,
    pub pairs: Vec<PairedOutcome>,
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Two-sided sign test: `min(1, 2 P(X ≤ min(k_a, k_b)))`, `X ~ Bin(k_a + k_b, ½)`.
pub fn sign_test(wins_a: usize, wins_b: usize) -> f64 {
    let n = wins_a + wins_b;
    if n == 0 {
        return 1.0;
    }
    let k = wins_a.min(wins_b);
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0;
    let mut ln_tail = f64::NEG_INFINITY;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        ln_tail = ln_add(ln_tail, ln_choose + ln_half_n);
    }
    (2.0 * ln_tail.exp()).min(1.0)
}

/// Pairs records by trial index; both sets must cover the same seeds.
pub fn compare_records(label_a: &str, a: &[TrialRecord], label_b: &str, b: &[TrialRecord]) -> Result<ComparisonReport> {
    if a.len() != b.len() {
        return Err(Error::Config(format!(
            "trial counts differ: {} has {}, {} has {}",
            label_a,
            a.len(),
            label_b,
            b.len()
        )));
    }
    let mut a: Vec<&TrialRecord> = a.iter().collect();
    let mut b: Vec<&TrialRecord> = b.iter().collect();
    a.sort_by_key(|r| r.trial_index);
    b.sort_by_key(|r| r.trial_index);
    let mut pairs = Vec::with_capacity(a.len());
    let (mut wins_a, mut wins_b, mut succ_a, mut succ_b) = (0, 0, 0, 0);
    for (ra, rb) in a.iter().zip(&b) {
        if ra.trial_index != rb.trial_index || ra.seed != rb.seed {
            return Err(Error::Config(format!(
                "records are not paired: trial {} (seed {}) against trial {} (seed {})",
                ra.trial_index, ra.seed, rb.trial_index, rb.seed
            )));
        }
        let sa = ra.outcome == TrialOutcome::Success;
        let sb = rb.outcome == TrialOutcome::Success;
        succ_a += sa as usize;
        succ_b += sb as usize;
        match (sa, sb) {
            (true, false) => wins_a += 1,
            (false, true) => wins_b += 1,
            _ => {}
        }
        pairs.push(PairedOutcome {
            trial_index: ra.trial_index,
            seed: ra.seed,
            a: ra.outcome,
            b: rb.outcome,
        });
    }
    let n = pairs.len();
    let pct = |s: usize| if n == 0 { 0.0 } else { 100.0 * s as f64 / n as f64 };
    Ok(ComparisonReport {
        label_a: label_a.to_string(),
        label_b: label_b.to_string(),
        trials: n,
        success_percent_a: pct(succ_a),
        success_percent_b: pct(succ_b),
        difference_percent: pct(succ_a) - pct(succ_b),
        wins_a,
        wins_b,
        ties: n - wins_a - wins_b,
        p_value: sign_test(wins_a, wins_b),
        pairs,
    })
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        format!(
            "{a} vs {b} over {n} paired seeds\n  success {a}: {sa:.2}%  {b}: {sb:.2}%  difference {d:+.2}%\n  only {a} succeeded: {wa}  only {b} succeeded: {wb}  ties: {t}\n  sign test p = {p:.3e}\n",
            a = self.label_a,
            b = self.label_b,
            n = self.trials,
            sa = self.success_percent_a,
            sb = self.success_percent_b,
            d = self.difference_percent,
            wa = self.wins_a,
            wb = self.wins_b,
            t = self.ties,
            p = self.p_value,
        )
    }
}
