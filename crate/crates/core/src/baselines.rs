//! Reference selectors: exhaustive search, random selection, greedy forward
//! selection, and greedy backward elimination.
//!
//! All baselines score candidate sets with the GRQ of a GEVD on the reduced
//! pair, so every method optimizes the same objective as the group-sparse
//! selector. Ties are broken deterministically toward the lowest sensor
//! index, which makes the lexicographically smallest optimum the canonical
//! exhaustive answer.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gs_select::SelectionResult;
use crate::linalg::{reduce_pair, solve_gevd, CovariancePair};

/// Default cap on the number of subsets the exhaustive search will visit.
pub const EXHAUSTIVE_CAP: u128 = 2_000_000;

/// One step of a greedy search, for CSV export and debugging.
#[derive(Debug, Clone)]
pub struct GreedyStep {
    pub step: usize,
    pub sensor: usize,
    pub action: GreedyAction,
    /// GRQ of the working set after this step.
    pub grq_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyAction {
    Add,
    Remove,
}

/// The sequence of steps a greedy search took.
#[derive(Debug, Clone, Default)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
}

impl GreedyTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,sensor,action,grq_db\n");
        for s in &self.steps {
            let action = match s.action {
                GreedyAction::Add => "add",
                GreedyAction::Remove => "remove",
            };
            out.push_str(&format!("{},{},{},{}\n", s.step, s.sensor, action, s.grq_db));
        }
        out
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn score(pair: &CovariancePair, sensors: &[usize], k: usize) -> Result<f64> {
    let reduced = reduce_pair(pair, sensors)?;
    Ok(solve_gevd(&reduced, k)?.grq_db)
}

fn validate_budget(pair: &CovariancePair, m: usize) -> Result<()> {
    if m < pair.dims.k || m > pair.dims.c {
        return Err(Error::InvalidConfig(format!(
            "budget M={m} must satisfy K={} <= M <= C={}",
            pair.dims.k, pair.dims.c
        )));
    }
    Ok(())
}

/// Globally optimal selection by enumerating all `C choose M` subsets in
/// lexicographic order. Strict improvement keeps the lexicographically
/// smallest optimum on exact ties. Refuses to run past `cap` subsets.
pub fn exhaustive(pair: &CovariancePair, m: usize, cap: u128) -> Result<SelectionResult> {
    validate_budget(pair, m)?;
    let c = pair.dims.c;
    let count = binomial(c as u128, m as u128);
    if count > cap {
        return Err(Error::SubsetCapExceeded { count, cap });
    }

    let mut subset: Vec<usize> = (0..m).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let grq = score(pair, &subset, pair.dims.k)?;
        if best.as_ref().is_none_or(|(_, b)| grq > *b) {
            best = Some((subset.clone(), grq));
        }
        // Next lexicographic M-combination of 0..C.
        let mut i = m;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if subset[i] < c - (m - i) {
                subset[i] += 1;
                for j in (i + 1)..m {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                let (sensors, _) = best.expect("at least one subset scored");
                let reduced = reduce_pair(pair, &sensors)?;
                let solution = solve_gevd(&reduced, pair.dims.k)?;
                return Ok(SelectionResult::converged(sensors, solution));
            }
        }
    }
}

/// Average GRQ over uniformly drawn `M`-subsets. Averaging is in dB by
/// default; `linear` averages the raw trace ratios and converts once.
pub fn random_baseline(
    pair: &CovariancePair,
    m: usize,
    draws: usize,
    linear: bool,
    rng: &mut impl Rng,
) -> Result<f64> {
    validate_budget(pair, m)?;
    if draws == 0 {
        return Err(Error::InvalidConfig("need at least one random draw".into()));
    }
    let all: Vec<usize> = (0..pair.dims.c).collect();
    let mut acc = 0.0;
    for _ in 0..draws {
        let sensors: Vec<usize> = all.choose_multiple(rng, m).copied().collect();
        let grq = score(pair, &sensors, pair.dims.k)?;
        acc += if linear { 10f64.powf(grq / 10.0) } else { grq };
    }
    let mean = acc / draws as f64;
    Ok(if linear { 10.0 * mean.log10() } else { mean })
}

/// Greedy forward selection: grow from the empty set, adding the sensor
/// whose inclusion maximizes the GRQ. While the working set is smaller than
/// `K`, candidates are scored with a reduced filter count `min(|set|, K)`.
pub fn forward_selection(
    pair: &CovariancePair,
    m: usize,
) -> Result<(SelectionResult, GreedyTrace)> {
    validate_budget(pair, m)?;
    let c = pair.dims.c;
    let k = pair.dims.k;
    let mut selected: Vec<usize> = Vec::new();
    let mut trace = GreedyTrace::default();

    for step in 0..m {
        let k_eff = k.min(selected.len() + 1).min((selected.len() + 1) * pair.dims.l);
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..c {
            if selected.contains(&cand) {
                continue;
            }
            let mut trial = selected.clone();
            trial.push(cand);
            trial.sort_unstable();
            let grq = score(pair, &trial, k_eff)?;
            if best.is_none_or(|(_, b)| grq > b) {
                best = Some((cand, grq));
            }
        }
        let (sensor, grq) = best.expect("candidate pool non-empty while |set| < M <= C");
        selected.push(sensor);
        selected.sort_unstable();
        trace.steps.push(GreedyStep {
            step,
            sensor,
            action: GreedyAction::Add,
            grq_db: grq,
        });
    }

    let reduced = reduce_pair(pair, &selected)?;
    let solution = solve_gevd(&reduced, k)?;
    Ok((SelectionResult::converged(selected, solution), trace))
}

/// Greedy backward elimination: shrink from the full set, removing the
/// sensor whose removal keeps the GRQ highest. Ties remove the lowest index.
pub fn backward_elimination(
    pair: &CovariancePair,
    m: usize,
) -> Result<(SelectionResult, GreedyTrace)> {
    validate_budget(pair, m)?;
    let c = pair.dims.c;
    let k = pair.dims.k;
    let mut selected: Vec<usize> = (0..c).collect();
    let mut trace = GreedyTrace::default();

    let mut step = 0;
    while selected.len() > m {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &cand) in selected.iter().enumerate() {
            let mut trial = selected.clone();
            trial.remove(pos);
            let grq = score(pair, &trial, k)?;
            if best.is_none_or(|(_, b)| grq > b) {
                best = Some((cand, grq));
            }
        }
        let (sensor, grq) = best.expect("set larger than M >= K is non-empty");
        selected.retain(|&s| s != sensor);
        trace.steps.push(GreedyStep {
            step,
            sensor,
            action: GreedyAction::Remove,
            grq_db: grq,
        });
        step += 1;
    }

    let reduced = reduce_pair(pair, &selected)?;
    let solution = solve_gevd(&reduced, k)?;
    Ok((SelectionResult::converged(selected, solution), trace))
}
