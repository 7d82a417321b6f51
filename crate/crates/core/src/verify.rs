//! Randomized and exhaustive property suites. Each property reports its
//! trial count and worst slack (bound minus measured value; negative beyond
//! the tolerance is a failure).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boolfn::{dist, make_target, random_dt_target, BoolFn, Restriction, TargetSpec};
use crate::builder::{
    build_impurity_dt, build_stabilizing_dt, case_split, preset_params, summation_size_bound, truncate_reference,
    BuildParams, Preset,
};
use crate::error::{Error, Result};
use crate::fourier::{default_degree, spectrum};
use crate::noise::{jones_decompose, ns_exact, ns_mc, ns_of, ns_wrt_tree, stability_gain, NoiseParams};
use crate::splitters::{impurity, noisy_score, purity_gain, ImpurityKind, ScoreEntry, TieBreak};
use crate::sqestimate::{
    estimate_noisy_dwise_influence, hoeffding_radius, samples_for, sq_answer, sq_exact, SqBackend, SqOracle, SqQuery,
};
use crate::tree::{
    enumerate_dt_targets, f_completion, opt_brute, random_tree, tree_error, tree_error_by_leaves, CompletedTree,
    PartialTree,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Boolfn,
    Fourier,
    Noise,
    Tree,
    Splitters,
    Builder,
    Sq,
}

impl Suite {
    const EACH: [Suite; 7] = [
        Suite::Boolfn,
        Suite::Fourier,
        Suite::Noise,
        Suite::Tree,
        Suite::Splitters,
        Suite::Builder,
        Suite::Sq,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Boolfn => "boolfn",
            Suite::Fourier => "fourier",
            Suite::Noise => "noise",
            Suite::Tree => "tree",
            Suite::Splitters => "splitters",
            Suite::Builder => "builder",
            Suite::Sq => "sq",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        std::iter::once(Suite::All)
            .chain(Suite::EACH)
            .find(|suite| suite.to_string() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    pub trials: usize,
    pub nmax: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            nmax: 10,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub trials: usize,
    pub failures: usize,
    pub worst_slack: f64,
    pub detail: Option<String>,
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{} trials={} failures={} worst_slack={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.trials,
            self.failures,
            self.worst_slack
        )?;
        if let Some(d) = &self.detail {
            write!(f, " ({d})")?;
        }
        Ok(())
    }
}

struct Check {
    name: &'static str,
    tol: f64,
    trials: usize,
    failures: usize,
    worst: f64,
    detail: Option<String>,
    /// Failures allowed for statistical properties.
    allowed: usize,
}

impl Check {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            tol,
            trials: 0,
            failures: 0,
            worst: f64::INFINITY,
            detail: None,
            allowed: 0,
        }
    }

    fn allowing(mut self, failures: usize) -> Self {
        self.allowed = failures;
        self
    }

    /// `slack = bound - measured`.
    fn slack(&mut self, slack: f64) {
        self.trials += 1;
        self.worst = self.worst.min(slack);
        if !(slack >= -self.tol) {
            self.failures += 1;
        }
    }

    fn le(&mut self, measured: f64, bound: f64) {
        self.slack(bound - measured);
    }

    fn close(&mut self, a: f64, b: f64) {
        self.slack(-(a - b).abs());
    }

    fn holds(&mut self, ok: bool) {
        self.slack(if ok { 0.0 } else { -1.0 });
    }

    fn note(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    fn finish(self, suite: Suite) -> PropertyReport {
        PropertyReport {
            suite: suite.to_string(),
            name: self.name.to_string(),
            passed: self.failures <= self.allowed,
            trials: self.trials,
            failures: self.failures,
            worst_slack: if self.trials == 0 { 0.0 } else { self.worst },
            detail: self.detail,
        }
    }
}

/// A mix of uniform, biased, tree-structured and parity/majority targets.
pub fn random_function(rng: &mut impl Rng, n: usize) -> BoolFn {
    let cube = 1usize << n;
    match rng.gen_range(0..4) {
        0 => {
            let bits: Vec<bool> = (0..cube).map(|_| rng.gen_bool(0.5)).collect();
            BoolFn::from_fn(n, |x| bits[x]).expect("n within cap")
        }
        1 => {
            let p: f64 = rng.gen_range(0.02..0.98);
            let bits: Vec<bool> = (0..cube).map(|_| rng.gen_bool(p)).collect();
            BoolFn::from_fn(n, |x| bits[x]).expect("n within cap")
        }
        2 => {
            let s = rng.gen_range(1..=cube.min(32));
            random_tree(n, s, rng)
                .and_then(|t| t.to_boolfn())
                .expect("size fits the cube")
        }
        _ => {
            let k = rng.gen_range(1..=n);
            let vars = rand::seq::index::sample(rng, n, k).into_vec();
            let mask = vars.iter().fold(0usize, |m, v| m | (1 << v));
            if k % 2 == 1 && rng.gen_bool(0.5) {
                BoolFn::from_fn(n, |x| 2 * (x & mask).count_ones() as usize > k).expect("n within cap")
            } else {
                BoolFn::from_fn(n, |x| (mask & !x).count_ones() % 2 == 0).expect("n within cap")
            }
        }
    }
}

fn random_restriction(rng: &mut impl Rng, n: usize, max_len: usize) -> Restriction {
    let len = rng.gen_range(0..=max_len.min(n));
    let vars = rand::seq::index::sample(rng, n, len).into_vec();
    Restriction::new(
        vars.into_iter()
            .map(|v| (v + 1, if rng.gen_bool(0.5) { 1 } else { -1 }))
            .collect(),
    )
    .expect("distinct variables")
}

fn pick_n(rng: &mut impl Rng, lo: usize, nmax: usize) -> usize {
    rng.gen_range(lo.min(nmax)..=nmax)
}

/// Runs one suite (or all of them).
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<Vec<PropertyReport>> {
    if cfg.nmax == 0 || cfg.nmax > 16 {
        return Err(Error::OutOfRange {
            name: "nmax",
            value: cfg.nmax as f64,
            range: "1 ≤ nmax ≤ 16",
        });
    }
    let mut out = Vec::new();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in suites {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (s as u64).wrapping_mul(0x9E37_79B9));
        let reports = match s {
            Suite::Boolfn => boolfn_suite(cfg, &mut rng)?,
            Suite::Fourier => fourier_suite(cfg, &mut rng)?,
            Suite::Noise => noise_suite(cfg, &mut rng)?,
            Suite::Tree => tree_suite(cfg, &mut rng)?,
            Suite::Splitters => splitters_suite(cfg, &mut rng)?,
            Suite::Builder => builder_suite(cfg, &mut rng)?,
            Suite::Sq => sq_suite(cfg, &mut rng)?,
            Suite::All => unreachable!(),
        };
        out.extend(reports.into_iter().map(|c| c.finish(s)));
    }
    Ok(out)
}

fn boolfn_suite(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let nmax = cfg.nmax.min(8);
    let mut det = Check::new("make_target_deterministic", 0.0);
    for spec in ["parity:1,2", "majority:1,2,3", "dt:5:7", "corrupt:0.1:9:(dictator:1)", "table:96"] {
        let spec: TargetSpec = spec.parse()?;
        let n = if matches!(spec, TargetSpec::Table(_)) { 3 } else { nmax.max(3) };
        det.holds(make_target(&spec, n)? == make_target(&spec, n)?);
    }

    let mut compose = Check::new("restrict_composes", 0.0);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 2, nmax);
        let f = random_function(rng, n);
        let both = random_restriction(rng, n, n);
        let cut = rng.gen_range(0..=both.len());
        let (a, b) = both.assignments().split_at(cut);
        let r1 = Restriction::new(a.to_vec())?;
        let r2 = Restriction::new(b.to_vec())?;
        let staged = f.restrict_global(&r1)?.restrict_global(&r2)?;
        let direct = f.restrict_global(&both)?;
        compose.holds(staged.table() == direct.table() && staged.vars() == direct.vars());
    }

    let mut metric = Check::new("dist_is_metric", 1e-15);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax);
        let (f, g, h) = (random_function(rng, n), random_function(rng, n), random_function(rng, n));
        metric.close(dist(&f, &f)?, 0.0);
        metric.close(dist(&f, &g)?, dist(&g, &f)?);
        metric.le(dist(&f, &h)?, dist(&f, &g)? + dist(&g, &h)?);
    }

    let mut corrupt = Check::new("corruption_rate", 0.0);
    for trial in 0..cfg.trials.clamp(1, 50) {
        let n = 10;
        let eta = rng.gen_range(0.01..0.45);
        let base = make_target(&"dictator:1".parse()?, n)?;
        let spec = TargetSpec::Corrupted {
            base: Box::new(TargetSpec::Dictator(1)),
            rate: eta,
            seed: trial as u64,
        };
        let f = make_target(&spec, n)?;
        let flips = dist(&base, &f)?;
        let sd = (eta * (1.0 - eta) / 1024.0).sqrt();
        corrupt.le((flips - eta).abs(), 5.0 * sd);
    }
    Ok(vec![det, compose, metric, corrupt])
}

fn fourier_suite(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let nmax = cfg.nmax;
    let mut parseval = Check::new("parseval", 1e-9);
    let mut round = Check::new("wht_round_trip", 1e-9);
    let structured = ["parity:1,2", "dictator:1", "majority:1,2,3", "dt:3:8", "constant:+1", "corrupt:0.2:1:(majority:1,2,3)"];
    for spec in structured {
        let f = make_target(&spec.parse()?, nmax.clamp(3, 12))?;
        let sp = spectrum(&f);
        parseval.close(sp.second_moment(), 1.0);
    }
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax.min(12));
        let f = random_function(rng, n);
        let sp = spectrum(&f);
        parseval.close(sp.second_moment(), 1.0);
        for (v, &t) in sp.to_values().iter().zip(f.table()) {
            round.close(*v, f64::from(t));
        }
    }

    let mut deriv = Check::new("influence_is_derivative_energy", 1e-12);
    let mut dominance = Check::new("noisy_influence_dominates_dwise", 1e-12);
    let mut monotone = Check::new("dwise_monotone_in_d_and_delta", 1e-12);
    let mut smoothed = Check::new("smoothed_influence_below_noisy", 1e-12);
    let mut truncated = Check::new("truncated_variance", 1e-12);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax);
        let f = random_function(rng, n);
        let sp = spectrum(&f);
        let i = rng.gen_range(1..=n);
        let delta = [0.05, 0.1, 0.2, 0.3, 0.5][rng.gen_range(0..5)];
        deriv.close(sp.influence(i)?, sp.discrete_derivative(i)?.second_moment());

        let full = sp.noisy_influence(i, delta)?;
        let mut prev = 0.0;
        for d in 0..=n {
            let v = sp.noisy_dwise_influence(i, delta, d)?;
            dominance.le(v, full);
            dominance.le(0.0, v);
            monotone.le(prev, v);
            prev = v;
        }
        dominance.close(sp.noisy_dwise_influence(i, delta, n)?, full);
        let d = rng.gen_range(0..=n);
        monotone.le(sp.noisy_dwise_influence(i, delta + 0.1, d)?, sp.noisy_dwise_influence(i, delta, d)?);

        let smooth_inf = sp.attenuate_truncate(delta, None)?.influence(i)?;
        smoothed.le(smooth_inf, full);

        for eps in [0.1, 0.01] {
            for delta in [0.05, 0.2] {
                let d = default_degree(eps, delta);
                let var = sp.attenuate_truncate(delta, None)?.variance();
                let var_trunc = sp.attenuate_truncate(delta, Some(d))?.variance();
                truncated.le(var, var_trunc + eps);
            }
        }
    }

    let mut dt_total = Check::new("dt_total_influence_le_log_s", 1e-9);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 2, nmax);
        let s = rng.gen_range(1..=(1usize << n).min(64));
        let t = random_dt_target(n, s, rng.gen())?;
        dt_total.le(spectrum(&t.f).total_influence(), (s as f64).log2());
    }
    // Majority on three bits is a monotone size-6 tree.
    let maj = make_target(&"majority:1,2,3".parse()?, 3)?;
    let inf = spectrum(&maj).total_influence();
    let mut mono = Check::new("monotone_dt_total_influence", 1e-9);
    mono.le(inf, 6f64.log2().sqrt());
    let mono = mono.note(format!("Maj3: Inf = {inf}, √log₂ 6 = {:.4}", 6f64.log2().sqrt()));

    Ok(vec![parseval, round, deriv, dominance, monotone, smoothed, truncated, dt_total, mono])
}

/// `NS_δ` by summing over every `(x, y)` with per-coordinate flip
/// probability `δ/2`; independent of the Fourier path.
pub fn ns_enumerated(f: &BoolFn, delta: f64) -> f64 {
    let n = f.n();
    let cube = 1usize << n;
    let q = delta / 2.0;
    let mut total = 0.0;
    for x in 0..cube {
        for flip in 0..cube {
            let y = x ^ flip;
            if f.table()[x] != f.table()[y] {
                let k = flip.count_ones() as i32;
                total += q.powi(k) * (1.0 - q).powi(n as i32 - k);
            }
        }
    }
    total / cube as f64
}

fn noise_suite(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let nmax = cfg.nmax;
    let deltas = [0.05, 0.1, 0.3, 0.5];

    let mut jones = Check::new("jones_identity", 1e-10);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax);
        let f = random_function(rng, n);
        let i = rng.gen_range(1..=n);
        let sides = jones_decompose(&f, i, deltas[rng.gen_range(0..4)])?;
        jones.close(sides.lhs, sides.rhs);
    }

    let mut tele = Check::new("potential_telescoping", 1e-10);
    let mut nonincreasing = Check::new("potential_nonincreasing", 1e-12);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax.min(8));
        let f = random_function(rng, n);
        let delta = deltas[rng.gen_range(0..4)];
        let mut tree = PartialTree::new(n);
        let mut pot = ns_wrt_tree(&f, &tree, delta)?;
        for _ in 0..rng.gen_range(1..=20) {
            let open: Vec<_> = tree.leaves().into_iter().filter(|&l| tree.depth_of(l) < n).collect();
            if open.is_empty() {
                break;
            }
            let leaf = open[rng.gen_range(0..open.len())];
            let free: Vec<usize> = (1..=n).filter(|&v| !tree.path(leaf).contains(v)).collect();
            let var = free[rng.gen_range(0..free.len())];
            let gain = stability_gain(&f, &tree, leaf, var, delta)?;
            tree.split_leaf(leaf, var)?;
            let next = ns_wrt_tree(&f, &tree, delta)?;
            tele.close(pot - next, gain);
            nonincreasing.le(next, pot);
            pot = next;
        }
    }

    let mut bounds = Check::new("ns_in_range_and_monotone", 1e-12);
    let mut oracle = Check::new("ns_matches_enumeration", 1e-12);
    let mut easy1 = Check::new("dt_ns_le_delta_log_s", 1e-12);
    let mut easy2 = Check::new("ns_le_ns_plus_twice_dist", 1e-12);
    let mut by_inf = Check::new("ns_le_delta_total_influence", 1e-12);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax);
        let f = random_function(rng, n);
        let sp = spectrum(&f);
        let mut prev = 0.0;
        for k in 0..=20 {
            let v = ns_exact(&sp, k as f64 / 20.0)?;
            bounds.le(0.0, v);
            bounds.le(v, 0.5);
            bounds.le(prev, v);
            prev = v;
        }
        let delta = deltas[rng.gen_range(0..4)];
        if n <= 6 {
            oracle.close(ns_exact(&sp, delta)?, ns_enumerated(&f, delta));
        }
        by_inf.le(ns_exact(&sp, delta)?, delta * sp.total_influence());

        let s = rng.gen_range(1..=(1usize << n).min(64));
        let t = random_dt_target(n, s, rng.gen())?;
        easy1.le(ns_of(&t.f, delta)?, delta * (s as f64).log2());

        let g = random_function(rng, n);
        easy2.le(ns_exact(&sp, delta)?, ns_of(&g, delta)? + 2.0 * dist(&f, &g)?);
    }

    let mut parity = Check::new("parity_ns_le_delta_k", 1e-12);
    for k in 1..=nmax {
        let f = BoolFn::from_fn(k, |x| x.count_ones() % 2 == (k % 2) as u32)?;
        for delta in deltas {
            parity.le(ns_of(&f, delta)?, delta * k as f64);
        }
    }

    let m = 100_000;
    let radius = 4.0 * ((2.0f64 / 0.001).ln() / (2.0 * m as f64)).sqrt();
    let mut mc = Check::new("monte_carlo_consistency", 0.0);
    for _ in 0..cfg.trials.clamp(1, 50) {
        let n = pick_n(rng, 1, nmax);
        let f = random_function(rng, n);
        let delta = deltas[rng.gen_range(0..4)];
        let est = ns_mc(&f, &NoiseParams::new(delta, Some(m), rng.gen())?)?;
        mc.le((est - ns_of(&f, delta)?).abs(), radius);
    }

    Ok(vec![jones, tele, nonincreasing, bounds, oracle, easy1, easy2, by_inf, parity, mc])
}

fn all_completions(tree: &PartialTree) -> impl Iterator<Item = CompletedTree> + '_ {
    let leaves = tree.leaves();
    (0..1usize << leaves.len()).map(move |bits| {
        let labels = leaves
            .iter()
            .enumerate()
            .map(|(k, &l)| (l, if (bits >> k) & 1 == 1 { 1 } else { -1 }))
            .collect();
        CompletedTree::new(tree.clone(), &labels).expect("every leaf labeled")
    })
}

fn tree_suite(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let nmax = cfg.nmax.min(8);
    let mut weights = Check::new("leaf_weights_sum_to_one", 1e-12);
    let mut lambda = Check::new("query_probabilities_le_log_size", 1e-12);
    let mut optimal = Check::new("f_completion_is_optimal", 1e-15);
    let mut monotone = Check::new("error_monotone_under_splits", 1e-15);
    let mut counting = Check::new("error_by_leaves_matches", 1e-12);
    let mut sexpr = Check::new("sexpr_round_trip", 0.0);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax);
        let f = random_function(rng, n);
        let s = rng.gen_range(1..=(1usize << n).min(8));
        let t = random_tree(n, s, rng)?;
        let tree = t.partial();
        weights.close(tree.leaf_weight_sum(), 1.0);
        lambda.le(tree.query_probabilities().iter().sum::<f64>(), (s as f64).log2());

        let completed = f_completion(tree, &f)?;
        let best = tree_error(&completed, &f)?;
        for c in all_completions(tree) {
            optimal.le(best, tree_error(&c, &f)?);
        }
        counting.close(tree_error_by_leaves(&t, &f)?, tree_error(&t, &f)?);

        let open: Vec<_> = tree.leaves().into_iter().filter(|&l| tree.depth_of(l) < n).collect();
        if let Some(&leaf) = open.first() {
            let var = (1..=n).find(|&v| !tree.path(leaf).contains(v)).expect("leaf has a free variable");
            let grown = tree.split(leaf, var)?;
            monotone.le(tree_error(&f_completion(&grown, &f)?, &f)?, best);
        }

        let text = t.to_sexpr();
        sexpr.holds(CompletedTree::parse_with_n(&text, n)? == t);
    }

    let mut rounding_sq = Check::new("rounding_sq_le_twice_best_constant", 1e-12);
    let mut rounding_dist = Check::new("rounding_dist_le_sq_error", 1e-12);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, nmax);
        let f = random_function(rng, n);
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let sign = f.majority_sign();
        let sq = |v: f64| f.table().iter().map(|&y| (f64::from(y) - v).powi(2)).sum::<f64>() / f.table().len() as f64;
        let to_const = sq(c);
        rounding_sq.le(sq(f64::from(sign)), 2.0 * to_const);
        let d = f.table().iter().filter(|&&y| y != sign).count() as f64 / f.table().len() as f64;
        rounding_dist.le(d, to_const);
    }

    let mut opt = Check::new("opt_brute_lower_bounds_builders", 1e-15);
    for _ in 0..cfg.trials.clamp(1, 100) {
        let n = pick_n(rng, 2, cfg.nmax.min(4));
        let f = random_function(rng, n);
        let t = rng.gen_range(1..=8);
        let (best, witness) = opt_brute(&f, t)?;
        opt.close(tree_error(&witness, &f)?, best);
        let noisy = build_stabilizing_dt(&f, &BuildParams::new(t, 0.1, 0.1)?)?;
        opt.le(best, noisy.error);
        let gini = build_impurity_dt(&f, ImpurityKind::Gini, t, TieBreak::LowVar, 0.1)?;
        opt.le(best, gini.error);
    }

    Ok(vec![weights, lambda, optimal, monotone, counting, sexpr, rounding_sq, rounding_dist, opt])
}

fn maximizers(values: &[(usize, f64)], tol: f64) -> Vec<usize> {
    let top = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    values.iter().filter(|v| v.1 >= top - tol).map(|v| v.0).collect()
}

fn splitters_suite(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut constraints = Check::new("impurity_constraints", 1e-9);
    for kind in ImpurityKind::ALL {
        constraints.close(impurity(kind, 0.0)?, 0.0);
        constraints.close(impurity(kind, 1.0)?, 0.0);
        constraints.close(impurity(kind, 0.5)?, 1.0);
        let g = |k: usize| impurity(kind, k as f64 / 128.0);
        for k in 1..128 {
            constraints.le(g(k - 1)? - 2.0 * g(k)? + g(k + 1)?, 0.0);
            constraints.close(g(k)?, g(128 - k)?);
        }
    }

    let mut argmax = Check::new("purity_argmax_is_correlation_argmax", 0.0);
    let mut ordering = Check::new("purity_order_is_correlation_order", 0.0);
    let mut limits = Check::new("noisy_score_limits", 0.0);
    let mut decomposition = Check::new("score_decomposition", 0.0);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 1, cfg.nmax.min(8));
        let f = random_function(rng, n);
        let sp = spectrum(&f);
        let corr: Vec<(usize, f64)> = (1..=n).map(|i| (i, sp.coeff(1 << (i - 1)).powi(2))).collect();
        for kind in ImpurityKind::ALL {
            let gains = (1..=n)
                .map(|i| Ok((i, purity_gain(kind, &f, i)?)))
                .collect::<Result<Vec<_>>>()?;
            argmax.holds(maximizers(&gains, 1e-12) == maximizers(&corr, 1e-12));
            for a in 0..n {
                for b in 0..n {
                    let g = gains[a].1 - gains[b].1;
                    let c = corr[a].1 - corr[b].1;
                    ordering.holds((g >= -1e-12) == (c >= -1e-12));
                }
            }
        }

        let delta = [0.05, 0.2, 0.4][rng.gen_range(0..3)];
        let full: Vec<(usize, f64)> = (1..=n).map(|i| Ok((i, sp.noisy_influence(i, delta)?))).collect::<Result<_>>()?;
        let best = noisy_score(&f, delta, n)?;
        limits.holds(best.var.map_or(false, |v| maximizers(&full, 1e-12).first() == Some(&v)));
        let tiny = noisy_score(&f, 1e-9, 1)?;
        let gini: Vec<(usize, f64)> = (1..=n)
            .map(|i| Ok((i, purity_gain(ImpurityKind::Gini, &f, i)?)))
            .collect::<Result<_>>()?;
        limits.holds(tiny.var == maximizers(&gini, 1e-12).first().copied());

        let depth = rng.gen_range(0..=n);
        let e = ScoreEntry::new(0, depth, best.var.unwrap_or(1), best.raw);
        decomposition.holds(e.score == best.raw * 0.5f64.powi(depth as i32) && e.score >= 0.0 && e.score <= e.raw);
    }
    Ok(vec![constraints, argmax, ordering, limits, decomposition])
}

/// Per-target verdicts of the exhaustive Case-1 run over small trees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CaseOneTally {
    pub targets: usize,
    pub iterations: usize,
    pub case1: usize,
    pub floor_violations: usize,
    pub depth_violations: usize,
}

/// Runs the builder on every function computed by a tree with at most
/// `max_size` leaves over `n ≤ 4` variables and checks the score floor at
/// every iteration where the Case-1 condition holds.
pub fn case_one_exhaustive(n: usize, max_size: usize, delta: f64, eps: f64) -> Result<CaseOneTally> {
    let mut smallest: std::collections::BTreeMap<Vec<i8>, (usize, CompletedTree)> = Default::default();
    for t in enumerate_dt_targets(n, max_size)? {
        let e = smallest.entry(t.f.table().to_vec()).or_insert((t.size, t.tree.clone()));
        if t.size < e.0 {
            *e = (t.size, t.tree);
        }
    }
    let mut tally = CaseOneTally::default();
    for (table, (s, reference)) in smallest {
        if s < 2 {
            continue;
        }
        tally.targets += 1;
        let f = BoolFn::from_table(n, table)?;
        let reference = truncate_reference(&reference, s, eps);
        let mut p = BuildParams::new(1 << n, delta, eps)?;
        p.s = Some(s);
        let run = build_stabilizing_dt(&f, &p)?;
        let mut tree = PartialTree::new(n);
        for (k, &(leaf, var)) in run.splits.iter().enumerate() {
            tally.iterations += 1;
            if case_split(&f, &tree, &reference, delta, eps)?.is_case1() {
                tally.case1 += 1;
                if !run.floor_met[k] {
                    tally.floor_violations += 1;
                }
            }
            tree.split_leaf(leaf, var)?;
        }
        if run.depth_bound_holds(s, eps) == Some(false) {
            tally.depth_violations += 1;
        }
    }
    Ok(tally)
}

/// One row of the size-bound table: a random tree target, the first size at
/// which the builder reached error `ε`, and the summation-form bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeBoundRow {
    pub n: usize,
    pub s: usize,
    pub seed: u64,
    pub kappa: f64,
    pub reached_at: Option<usize>,
    pub log2_bound: f64,
    pub within: bool,
}

/// Preset-general runs on random size-`s` tree targets, `t` capped at `2^n`.
pub fn size_bound_rows(count: usize, nmax: usize, eps: f64, seed: u64) -> Result<Vec<SizeBoundRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [4usize, 8, 16];
    (0..count)
        .map(|k| {
            let s = sizes[k % sizes.len()];
            let lo = (s.trailing_zeros() as usize).max(2);
            let n = rng.gen_range(lo.min(nmax)..=nmax);
            let target_seed = rng.gen();
            let t = random_dt_target(n, s.min(1 << n), target_seed)?;
            let mut p = preset_params(s, eps, Preset::General)?;
            p.t = 1 << n;
            let run = build_stabilizing_dt(&t.f, &p)?;
            let bound = summation_size_bound(run.kappa, s, eps, p.delta)?;
            let reached_at = run.size_reaching(eps);
            Ok(SizeBoundRow {
                n,
                s,
                seed: target_seed,
                kappa: run.kappa,
                reached_at,
                log2_bound: bound.log2_t,
                within: reached_at.is_some_and(|r| bound.admits(r, 4.0)),
            })
        })
        .collect()
}

fn builder_suite(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let nmax = cfg.nmax;
    let mut determinism = Check::new("determinism", 0.0);
    let mut tele = Check::new("trace_potential_telescopes", 1e-9);
    let mut err_mono = Check::new("trace_error_nonincreasing", 0.0);
    for _ in 0..cfg.trials.clamp(1, 50) {
        let n = pick_n(rng, 2, nmax.min(8));
        let f = random_function(rng, n);
        let mut p = BuildParams::new(rng.gen_range(2..=24), [0.05, 0.1, 0.3][rng.gen_range(0..3)], 0.1)?;
        p.tiebreak = TieBreak::Random(rng.gen());
        let a = build_stabilizing_dt(&f, &p)?;
        let b = build_stabilizing_dt(&f, &p)?;
        determinism.holds(crate::tree::trace_to_csv(&a.trace) == crate::tree::trace_to_csv(&b.trace) && a.tree.to_sexpr() == b.tree.to_sexpr());

        let mut tree = PartialTree::new(n);
        let mut expected = a.kappa;
        let mut err = a.initial_error;
        for (row, &(leaf, var)) in a.trace.iter().zip(&a.splits) {
            expected -= stability_gain(&f, &tree, leaf, var, p.delta)?;
            tree.split_leaf(leaf, var)?;
            tele.close(row.potential, expected);
            err_mono.le(row.error, err);
            err = row.error;
        }
    }

    let mut separation = Check::new("parity_separation", 0.0);
    let f = make_target(&"parity:1,2".parse()?, nmax.max(3).min(10))?;
    let noisy = build_stabilizing_dt(&f, &BuildParams::new(4, 0.1, 0.1)?)?;
    separation.holds(noisy.error == 0.0 && noisy.tree.size() == 4);
    for kind in ImpurityKind::ALL {
        let r = build_impurity_dt(&f, kind, 4, TieBreak::HighVar, 0.1)?;
        separation.holds(r.error == 0.5);
    }

    let n4 = nmax.min(4);
    let mut floor = Check::new("case1_score_floor", 0.0);
    let mut depth = Check::new("depth_bound", 0.0);
    let mut details = Vec::new();
    for (delta, eps) in [(0.1, 0.05), (0.3, 0.02)] {
        let tally = case_one_exhaustive(n4, 6, delta, eps)?;
        for _ in 0..tally.case1 - tally.floor_violations {
            floor.holds(true);
        }
        for _ in 0..tally.floor_violations {
            floor.holds(false);
        }
        for _ in 0..tally.targets - tally.depth_violations {
            depth.holds(true);
        }
        for _ in 0..tally.depth_violations {
            depth.holds(false);
        }
        details.push(format!(
            "δ={delta} ε={eps}: {} targets, {} iterations, {} in case 1",
            tally.targets, tally.iterations, tally.case1
        ));
    }
    let floor = floor.note(details.join("; "));

    let mut size_bound = Check::new("size_within_4x_summation_bound", 0.0);
    let rows = size_bound_rows(cfg.trials.clamp(1, 50), nmax.max(4), 0.1, rng.gen())?;
    let tightest = rows
        .iter()
        .filter_map(|r| Some(r.log2_bound - (r.reached_at? as f64).log2()).filter(|_| r.kappa > 0.0))
        .fold(f64::INFINITY, f64::min);
    for r in &rows {
        size_bound.holds(r.within);
    }
    let size_bound = size_bound.note(format!("tightest log₂(bound/size) {tightest:.1} over non-constant targets"));

    Ok(vec![determinism, tele, err_mono, separation, floor, depth, size_bound])
}

fn sq_suite(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let nmax = cfg.nmax;
    let alpha = 0.001;
    let queries = 1000;
    let mut contract = Vec::new();
    let tau = 0.05;
    let backends = [
        ("sq_contract_exact", SqBackend::Exact),
        ("sq_contract_adversarial", SqBackend::Adversarial { seed: rng.gen() }),
        ("sq_contract_sampling", SqBackend::Sampling { m: samples_for(tau, alpha), seed: rng.gen() }),
    ];
    for (name, backend) in backends {
        let statistical = matches!(backend, SqBackend::Sampling { .. });
        let mut c = Check::new(name, 1e-12).allowing(if statistical { queries / 200 } else { 0 });
        for _ in 0..queries {
            let n = pick_n(rng, 1, nmax);
            let f = random_function(rng, n);
            let leaf = random_restriction(rng, n, n.min(3));
            let free = ((1usize << n) - 1) & !leaf.var_mask();
            let subset = rng.gen::<u64>() as usize & free;
            let q = SqQuery::new(leaf, subset, tau)?;
            c.le((sq_answer(&f, &q, backend)? - sq_exact(&f, &q)?).abs(), tau);
        }
        contract.push(c);
    }

    let mut equivalence = Check::new("exact_estimates_match_fourier", 1e-9);
    for _ in 0..cfg.trials {
        let n = pick_n(rng, 2, nmax);
        let f = random_function(rng, n);
        let leaf = random_restriction(rng, n, n - 1);
        let free: Vec<usize> = (1..=n).filter(|&v| !leaf.contains(v)).collect();
        let i = free[rng.gen_range(0..free.len())];
        let d = rng.gen_range(1..=3);
        let delta = [0.05, 0.1, 0.3][rng.gen_range(0..3)];
        let mut oracle = SqOracle::new(&f, SqBackend::Exact);
        let est = estimate_noisy_dwise_influence(&mut oracle, &leaf, i, delta, d, 0.1)?;
        let fl = f.restrict_global(&leaf)?;
        let exact = spectrum(&fl).noisy_dwise_influence(fl.local_of(i).expect("free"), delta, d)?;
        equivalence.close(est.estimate, exact);
    }

    let trials = 10_000;
    let m = 1000;
    let radius = hoeffding_radius(m, alpha);
    let mut concentration = Check::new("sampling_within_hoeffding_radius", 0.0).allowing(trials / 200);
    for _ in 0..trials {
        let n = pick_n(rng, 1, nmax);
        let f = random_function(rng, n);
        let leaf = random_restriction(rng, n, n.min(2));
        let free = ((1usize << n) - 1) & !leaf.var_mask();
        let q = SqQuery::new(leaf, rng.gen::<u64>() as usize & free, radius.min(1.0))?;
        let v = sq_answer(&f, &q, SqBackend::Sampling { m, seed: rng.gen() })?;
        concentration.le((v - sq_exact(&f, &q)?).abs(), radius);
    }
    let concentration = concentration.note(format!("m={m}, radius={radius:.4}"));

    let mut robust = Check::new("adversarial_argmax_stable", 0.0);
    let mut configs = 0;
    while configs < cfg.trials.clamp(1, 50) {
        let n = pick_n(rng, 2, nmax.min(8));
        let f = random_function(rng, n);
        let (delta, d) = (0.1, 2);
        let sp = spectrum(&f);
        let mut infl: Vec<(usize, f64)> = (1..=n).map(|i| Ok((i, sp.noisy_dwise_influence(i, delta, d)?))).collect::<Result<_>>()?;
        infl.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let gap = infl[0].1 - infl[1].1;
        if gap < 1e-3 {
            continue;
        }
        configs += 1;
        // shrink τ until the worst-case estimate error is below half the gap
        let mut tau = gap / 2.0;
        loop {
            let mut oracle = SqOracle::new(&f, SqBackend::Exact);
            let worst = (1..=n)
                .map(|i| Ok(estimate_noisy_dwise_influence(&mut oracle, &Restriction::empty(), i, delta, d, tau)?.error_bound))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            if worst < gap / 2.0 {
                break;
            }
            tau /= 2.0;
        }
        for seed in 0..20 {
            let mut oracle = SqOracle::new(&f, SqBackend::Adversarial { seed }).without_exact_log();
            let est: Vec<(usize, f64)> = (1..=n)
                .map(|i| Ok((i, estimate_noisy_dwise_influence(&mut oracle, &Restriction::empty(), i, delta, d, tau)?.estimate)))
                .collect::<Result<_>>()?;
            let top = est.iter().copied().fold((0, f64::NEG_INFINITY), |acc, e| if e.1 > acc.1 { e } else { acc });
            robust.holds(top.0 == infl[0].0);
        }
    }

    let mut out = contract;
    out.extend([equivalence, concentration, robust]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert_eq!("sq".parse::<Suite>().unwrap(), Suite::Sq);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn small_suites_pass() {
        let cfg = VerifyConfig { trials: 20, nmax: 6, seed: 3 };
        for suite in [Suite::Boolfn, Suite::Fourier, Suite::Tree, Suite::Splitters] {
            for r in run_suite(suite, &cfg).unwrap() {
                assert!(r.passed, "{r}");
            }
        }
    }

    #[test]
    fn enumeration_oracle_matches_closed_form() {
        let f = make_target(&"parity:1,2".parse().unwrap(), 3).unwrap();
        assert!((ns_enumerated(&f, 0.2) - 0.18).abs() < 1e-12);
    }
}
