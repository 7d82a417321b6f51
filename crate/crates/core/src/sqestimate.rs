//! Statistical-query access to a target: per-coefficient queries
//! `φ(x, y) = 1[x ∈ ℓ]·y·χ_S(x)`, three answering backends, influence
//! estimation from answers, and the parity separation demo.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boolfn::{BoolFn, Restriction};
use crate::builder::{build_impurity_dt, build_stabilizing_dt_with, BuildParams, LeafScorer};
use crate::error::{Error, Result};
use crate::noise::{derive_seed, ns_of};
use crate::splitters::{ImpurityKind, TieBreak};
use crate::tree::leaf_weight;

/// Default cap on the number of queries one oracle may answer.
pub const DEFAULT_QUERY_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SqQuery {
    pub restriction: Restriction,
    /// Bit `i-1` set means `i ∈ S`.
    pub subset: usize,
    pub tau: f64,
}

impl SqQuery {
    pub fn new(restriction: Restriction, subset: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::BadQuery(format!("tolerance {tau} outside (0, 1]")));
        }
        if subset & restriction.var_mask() != 0 {
            return Err(Error::BadQuery(format!("subset {} meets the fixed variables of {restriction}", subset_label(subset))));
        }
        Ok(Self { restriction, subset, tau })
    }

    fn stream(&self) -> u64 {
        let r = &self.restriction;
        derive_seed(derive_seed(r.var_mask() as u64, r.value_mask() as u64), self.subset as u64)
    }
}

fn subset_vars(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|b| (mask >> b) & 1 == 1).map(|b| b + 1).collect()
}

fn subset_label(mask: usize) -> String {
    let v: Vec<String> = subset_vars(mask).iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqBackend {
    /// Truth-table expectation.
    Exact,
    /// Empirical mean over `m` uniform labeled examples per query.
    Sampling { m: usize, seed: u64 },
    /// Exact value pushed by exactly `τ` in a seeded direction.
    Adversarial { seed: u64 },
}

impl fmt::Display for SqBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqBackend::Exact => f.write_str("exact"),
            SqBackend::Sampling { m, seed } => write!(f, "sampling:{m}:{seed}"),
            SqBackend::Adversarial { seed } => write!(f, "adversarial:{seed}"),
        }
    }
}

/// Hoeffding radius for a mean of `m` values in `[-1, 1]` at failure
/// probability `alpha`.
pub fn hoeffding_radius(m: usize, alpha: f64) -> f64 {
    (2.0 * (2.0 / alpha).ln() / m as f64).sqrt()
}

/// Samples needed for [`hoeffding_radius`] to reach `tau`.
pub fn samples_for(tau: f64, alpha: f64) -> usize {
    (2.0 * (2.0 / alpha).ln() / (tau * tau)).ceil() as usize
}

/// `E[1[x ∈ ℓ]·f(x)·χ_S(x)]` over the uniform cube.
pub fn sq_exact(f: &BoolFn, q: &SqQuery) -> Result<f64> {
    check_query(f, q)?;
    let (vm, vv) = (q.restriction.var_mask(), q.restriction.value_mask());
    let free = ((1usize << f.n()) - 1) & !vm;
    // walk the subcube: x = vv | sub for every submask of `free`
    let mut acc: i64 = 0;
    let mut sub = free;
    loop {
        let x = vv | sub;
        acc += i64::from(f.table()[x]) * chi(q.subset, x);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
    Ok(acc as f64 / f.table().len() as f64)
}

/// `χ_S(x) = Π_{i∈S} x_i`, with bit set meaning `x_i = +1`.
fn chi(subset: usize, x: usize) -> i64 {
    if (subset & !x).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn check_query(f: &BoolFn, q: &SqQuery) -> Result<()> {
    q.restriction.validate(f.n())?;
    if q.subset >> f.n() != 0 {
        return Err(Error::BadQuery(format!("subset {} exceeds n = {}", subset_label(q.subset), f.n())));
    }
    if q.subset & q.restriction.var_mask() != 0 {
        return Err(Error::BadQuery(format!("subset {} meets the fixed variables", subset_label(q.subset))));
    }
    Ok(())
}

/// Answers one query; `f` must be over its full variable set `1..=n`.
pub fn sq_answer(f: &BoolFn, q: &SqQuery, backend: SqBackend) -> Result<f64> {
    match backend {
        SqBackend::Exact => sq_exact(f, q),
        SqBackend::Adversarial { seed } => {
            let exact = sq_exact(f, q)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, q.stream()));
            Ok(if rng.gen_bool(0.5) { exact + q.tau } else { exact - q.tau })
        }
        SqBackend::Sampling { m, seed } => {
            check_query(f, q)?;
            if m == 0 {
                return Err(Error::BadQuery("sampling backend needs m ≥ 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, q.stream()));
            let mask = (1usize << f.n()) - 1;
            let (vm, vv) = (q.restriction.var_mask(), q.restriction.value_mask());
            let mut acc: i64 = 0;
            for _ in 0..m {
                let x = (rng.gen::<u64>() as usize) & mask;
                if x & vm == vv {
                    acc += i64::from(f.table()[x]) * chi(q.subset, x);
                }
            }
            Ok(acc as f64 / m as f64)
        }
    }
}

/// One line of the query ledger.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub leaf: String,
    pub subset: Vec<usize>,
    pub tau: f64,
    pub backend: String,
    pub value: f64,
    pub exact: Option<f64>,
}

/// A budgeted oracle for one target that logs every query.
#[derive(Clone, Debug)]
pub struct SqOracle<'a> {
    f: &'a BoolFn,
    backend: SqBackend,
    budget: u64,
    used: u64,
    ledger: Vec<LedgerEntry>,
    log_exact: bool,
}

impl<'a> SqOracle<'a> {
    pub fn new(f: &'a BoolFn, backend: SqBackend) -> Self {
        Self {
            f,
            backend,
            budget: DEFAULT_QUERY_BUDGET,
            used: 0,
            ledger: Vec::new(),
            log_exact: true,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Skip computing exact values for the ledger.
    pub fn without_exact_log(mut self) -> Self {
        self.log_exact = false;
        self
    }

    pub fn target(&self) -> &BoolFn {
        self.f
    }

    pub fn backend(&self) -> SqBackend {
        self.backend
    }

    pub fn queries_used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.used)
    }

    /// Fails without asking anything when `count` queries would overrun.
    pub fn reserve(&self, count: u64) -> Result<()> {
        if self.used + count > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
                needed: self.used + count,
            });
        }
        Ok(())
    }

    pub fn ask(&mut self, q: &SqQuery) -> Result<f64> {
        self.reserve(1)?;
        let value = sq_answer(self.f, q, self.backend)?;
        self.used += 1;
        let exact = match self.backend {
            SqBackend::Exact => Some(value),
            _ if self.log_exact => Some(sq_exact(self.f, q)?),
            _ => None,
        };
        self.ledger.push(LedgerEntry {
            leaf: q.restriction.to_string(),
            subset: subset_vars(q.subset),
            tau: q.tau,
            backend: self.backend.to_string(),
            value,
            exact,
        });
        Ok(value)
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    /// The ledger as JSON lines.
    pub fn ledger_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.ledger {
            out.push_str(&serde_json::to_string(e).expect("ledger entries serialize"));
            out.push('\n');
        }
        out
    }
}

/// An assembled influence estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InfluenceEstimate {
    pub estimate: f64,
    /// Worst-case error if every answer is within its tolerance.
    pub error_bound: f64,
    pub queries: u64,
}

/// Submasks of `free` that contain `must` and have at most `d` bits, in
/// ascending order.
fn subsets_up_to(free: usize, must: usize, d: usize) -> Vec<usize> {
    let rest = free & !must;
    let mut out = Vec::new();
    let mut sub = 0usize;
    loop {
        let s = sub | must;
        if s != 0 && s.count_ones() as usize <= d {
            out.push(s);
        }
        if sub == rest {
            break;
        }
        sub = (sub.wrapping_sub(rest)) & rest;
    }
    out.sort_unstable();
    out
}

fn free_mask(n: usize, leaf: &Restriction) -> usize {
    ((1usize << n) - 1) & !leaf.var_mask()
}

/// Estimates `Inf_i^{(δ,d)}(f_ℓ)` from one query per `S ∋ i`, `|S| ≤ d`,
/// `S` free at `ℓ`, rescaling each answer by `2^{|ℓ|}`.
pub fn estimate_noisy_dwise_influence(
    oracle: &mut SqOracle<'_>,
    leaf: &Restriction,
    i: usize,
    delta: f64,
    d: usize,
    tau: f64,
) -> Result<InfluenceEstimate> {
    let n = oracle.target().n();
    leaf.validate(n)?;
    if i == 0 || i > n {
        return Err(Error::var_out_of_range(i, n));
    }
    if leaf.contains(i) {
        return Err(Error::BadQuery(format!("x{i} is fixed at {leaf}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::OutOfRange { name: "delta", value: delta, range: "[0, 1)" });
    }
    let subsets = subsets_up_to(free_mask(n, leaf), 1 << (i - 1), d);
    oracle.reserve(subsets.len() as u64)?;
    let scale = 1.0 / leaf_weight(leaf.len());
    let e = scale * tau;
    let before = oracle.queries_used();
    let (mut estimate, mut slack) = (0.0, 0.0);
    for s in subsets {
        let v = oracle.ask(&SqQuery::new(leaf.clone(), s, tau)?)?;
        let c = scale * v;
        let w = (1.0 - delta).powi(s.count_ones() as i32);
        estimate += w * c * c;
        slack += w * (2.0 * e * c.abs() + e * e);
    }
    Ok(InfluenceEstimate {
        estimate,
        error_bound: 2.0 * slack,
        queries: oracle.queries_used() - before,
    })
}

/// Leaf scorer that sees the target only through an [`SqOracle`]. Each
/// coefficient `(ℓ, S)` is queried once and shared across variables.
pub struct SqScorer<'a> {
    pub oracle: SqOracle<'a>,
    pub tau: f64,
}

impl<'a> SqScorer<'a> {
    pub fn new(oracle: SqOracle<'a>, tau: f64) -> Self {
        Self { oracle, tau }
    }
}

impl LeafScorer for SqScorer<'_> {
    fn influences(&mut self, f: &BoolFn, _f_leaf: &BoolFn, leaf: &Restriction, delta: f64, d: usize) -> Result<Vec<(usize, f64)>> {
        let n = f.n();
        let free = free_mask(n, leaf);
        let subsets = subsets_up_to(free, 0, d);
        self.oracle.reserve(subsets.len() as u64)?;
        let scale = 1.0 / leaf_weight(leaf.len());
        let mut weighted: HashMap<usize, f64> = HashMap::with_capacity(subsets.len());
        for &s in &subsets {
            let v = self.oracle.ask(&SqQuery::new(leaf.clone(), s, self.tau)?)?;
            let c = scale * v;
            weighted.insert(s, (1.0 - delta).powi(s.count_ones() as i32) * c * c);
        }
        Ok((1..=n)
            .filter(|&i| (free >> (i - 1)) & 1 == 1)
            .map(|i| {
                let total = subsets
                    .iter()
                    .filter(|&&s| (s >> (i - 1)) & 1 == 1)
                    .map(|s| weighted[s])
                    .sum();
                (i, total)
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuilderOutcome {
    pub method: String,
    pub size: usize,
    pub error: f64,
    pub queries: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub n: usize,
    pub subset: Vec<usize>,
    pub delta: f64,
    pub eps: f64,
    pub d: usize,
    pub tau: f64,
    pub t: usize,
    /// `NS_δ(χ_S)` and the bound `δ·k` it must respect.
    pub ns: f64,
    pub ns_bound: f64,
    pub noisy: BuilderOutcome,
    pub baselines: Vec<BuilderOutcome>,
}

/// Settings for [`parity_separation_demo`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemoConfig {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub eps: f64,
    pub t: usize,
    pub d: Option<usize>,
    pub tau: f64,
    pub backend: SqBackend,
    pub seed: u64,
}

/// Runs the impurity baselines (highest-index ties) and the SQ-backed noisy
/// builder on a random parity of `k` variables. The parity is drawn from the
/// first `n - log₂ t` variables, so the tie-break has room to waste splits on
/// irrelevant ones.
pub fn parity_separation_demo(cfg: &DemoConfig) -> Result<SeparationReport> {
    let DemoConfig { n, k, delta, eps, t, d, tau, backend, seed } = *cfg;
    if k == 0 || k > n {
        return Err(Error::OutOfRange { name: "k", value: k as f64, range: "1 ≤ k ≤ n" });
    }
    if k >= usize::BITS as usize || (1usize << k) > t {
        return Err(Error::OutOfRange { name: "t", value: t as f64, range: "t ≥ 2^k" });
    }
    let spare = (t as f64).log2().ceil() as usize;
    let pool = if n >= k + spare { n - spare } else { n };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subset = rand::seq::index::sample(&mut rng, pool, k).into_vec();
    subset.sort_unstable();
    let subset: Vec<usize> = subset.into_iter().map(|v| v + 1).collect();
    let mask = subset.iter().fold(0usize, |m, &v| m | (1 << (v - 1)));
    let f = BoolFn::from_fn(n, |x| (mask & !x).count_ones() % 2 == 0)?;

    let ns = ns_of(&f, delta)?;
    let mut params = BuildParams::new(t, delta, eps)?;
    if let Some(d) = d {
        params.d = d;
    }
    let mut scorer = SqScorer::new(SqOracle::new(&f, backend).without_exact_log(), tau);
    let run = build_stabilizing_dt_with(&f, &params, &mut scorer)?;
    let noisy = BuilderOutcome {
        method: "noisy".into(),
        size: run.tree.size(),
        error: run.error,
        queries: Some(scorer.oracle.queries_used()),
    };
    let baselines = ImpurityKind::ALL
        .iter()
        .map(|&kind| {
            let r = build_impurity_dt(&f, kind, t, TieBreak::HighVar, delta)?;
            Ok(BuilderOutcome {
                method: format!("{kind}(highvar)"),
                size: r.tree.size(),
                error: r.error,
                queries: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeparationReport {
        n,
        subset,
        delta,
        eps,
        d: params.d,
        tau,
        t,
        ns,
        ns_bound: delta * k as f64,
        noisy,
        baselines,
    })
}
