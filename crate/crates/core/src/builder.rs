//! Top-down induction: the noise-stabilizing builder, impurity baselines,
//! parameter presets and the per-split progress bound.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boolfn::{BoolFn, Restriction};
use crate::error::{Error, Result};
use crate::fourier::{default_degree, spectrum, Spectrum};
use crate::noise::ns_exact;
use crate::splitters::{best_purity_split, noisy_influences, ImpurityKind, ScoreEntry, TieBreak, TieBreaker, TIE_EPS};
use crate::tree::{f_completion, leaf_weight, CompletedTree, NodeId, PartialTree, TraceRow};

/// Parameters of the noise-stabilizing builder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    /// Size budget (number of leaves).
    pub t: usize,
    pub delta: f64,
    pub eps: f64,
    /// Degree cap for the noisy influence score.
    pub d: usize,
    /// Reference size, used only by diagnostics.
    pub s: Option<usize>,
    /// Stop once the best score is at most this value.
    pub early_stop: Option<f64>,
    #[serde(with = "tiebreak_serde")]
    pub tiebreak: TieBreak,
    /// Rescore only the two fresh leaves after each split.
    pub cache_scores: bool,
}

mod tiebreak_serde {
    use super::TieBreak;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &TieBreak, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(t)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TieBreak, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl BuildParams {
    /// Defaults: `d = ⌈ln(1/ε)/δ⌉`, early stop at score 0, lowest-index ties.
    pub fn new(t: usize, delta: f64, eps: f64) -> Result<Self> {
        let p = Self {
            t,
            delta,
            eps,
            d: 1,
            s: None,
            early_stop: Some(0.0),
            tiebreak: TieBreak::LowVar,
            cache_scores: true,
        };
        p.check_ranges()?;
        Ok(Self {
            d: default_degree(eps, delta),
            ..p
        })
    }

    fn check_ranges(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::BudgetZero);
        }
        Error::check_unit_open("delta", self.delta)?;
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::OutOfRange {
                name: "eps",
                value: self.eps,
                range: "(0, 1/2)",
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_ranges()?;
        if self.d == 0 {
            return Err(Error::OutOfRange {
                name: "d",
                value: 0.0,
                range: "d ≥ 1",
            });
        }
        if let Some(theta) = self.early_stop {
            if !(theta >= 0.0) {
                return Err(Error::OutOfRange {
                    name: "early_stop",
                    value: theta,
                    range: "θ ≥ 0",
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    /// The tree reached `t` leaves.
    Budget,
    /// No leaf has a free variable left to query.
    Exhausted,
    /// The best score fell to the early-stop threshold.
    EarlyStop,
}

/// Outcome of an induction run.
#[derive(Clone, Debug)]
pub struct BuildReport {
    pub tree: CompletedTree,
    pub trace: Vec<TraceRow>,
    /// `NS_δ(f)`, the potential of the empty tree.
    pub kappa: f64,
    /// Error of the single-leaf completion.
    pub initial_error: f64,
    pub error: f64,
    /// `(leaf, var)` for every split, in order; replays the run exactly.
    pub splits: Vec<(NodeId, usize)>,
    /// Depth of the tree after each split.
    pub depths: Vec<usize>,
    /// Whether each selected score met `ε/(j·log₂(s/ε)·log₂ s)`; empty when
    /// no reference size `s ≥ 2` was given.
    pub floor_met: Vec<bool>,
    pub stop: StopReason,
    pub d: usize,
}

impl BuildReport {
    /// First tree size at which the completion error is at most `target`.
    pub fn size_reaching(&self, target: f64) -> Option<usize> {
        if self.initial_error <= target {
            return Some(1);
        }
        self.trace.iter().find(|r| r.error <= target).map(|r| r.iter + 1)
    }

    /// Checks `2^{Δ_j} ≤ j·log₂(s/ε)·log₂ s / ε` for every tree `T°_j` reached
    /// while all earlier splits met the score floor. `None` without `s`.
    pub fn depth_bound_holds(&self, s: usize, eps: f64) -> Option<bool> {
        if s < 2 || self.floor_met.is_empty() {
            return None;
        }
        let scale = (s as f64 / eps).log2() * (s as f64).log2() / eps;
        for (k, (&depth, &met)) in self.depths.iter().zip(&self.floor_met).enumerate() {
            if !met {
                break;
            }
            let j = k + 2;
            if 2f64.powi(depth as i32) > j as f64 * scale {
                return Some(false);
            }
        }
        Some(true)
    }
}

/// Computes noisy d-wise influences at a leaf.
pub trait LeafScorer {
    /// `(var, Inf_var^{(δ,d)}(f_ℓ))` for every free variable at `leaf`, in
    /// ascending variable order.
    fn influences(&mut self, f: &BoolFn, f_leaf: &BoolFn, leaf: &Restriction, delta: f64, d: usize) -> Result<Vec<(usize, f64)>>;
}

/// Exact scoring from the leaf's truth table.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactScorer;

impl LeafScorer for ExactScorer {
    fn influences(&mut self, _f: &BoolFn, f_leaf: &BoolFn, _leaf: &Restriction, delta: f64, d: usize) -> Result<Vec<(usize, f64)>> {
        noisy_influences(f_leaf, delta, d)
    }
}

struct LeafState {
    f: BoolFn,
    ns: f64,
    wrong: usize,
    entry: Option<ScoreEntry>,
}

/// Shared loop: grow until the budget, exhaustion, or the early-stop rule.
struct Grower<'a> {
    f: &'a BoolFn,
    delta: f64,
    tree: PartialTree,
    leaves: BTreeMap<NodeId, LeafState>,
    trace: Vec<TraceRow>,
    splits: Vec<(NodeId, usize)>,
    depths: Vec<usize>,
    floor_met: Vec<bool>,
}

impl<'a> Grower<'a> {
    fn new(f: &'a BoolFn, delta: f64) -> Result<Self> {
        let mut g = Self {
            f,
            delta,
            tree: PartialTree::new(f.n()),
            leaves: BTreeMap::new(),
            trace: Vec::new(),
            splits: Vec::new(),
            depths: Vec::new(),
            floor_met: Vec::new(),
        };
        g.leaves.insert(0, g.leaf_state(f.clone())?);
        Ok(g)
    }

    fn leaf_state(&self, f: BoolFn) -> Result<LeafState> {
        let ns = ns_exact(&spectrum(&f), self.delta)?;
        let plus = f.count_plus();
        let wrong = plus.min(f.table().len() - plus);
        Ok(LeafState { f, ns, wrong, entry: None })
    }

    fn potential(&self) -> f64 {
        self.leaves
            .iter()
            .map(|(&id, st)| leaf_weight(self.tree.depth_of(id)) * st.ns)
            .sum()
    }

    fn error(&self) -> f64 {
        let wrong: usize = self.leaves.values().map(|st| st.wrong).sum();
        wrong as f64 / self.f.table().len() as f64
    }

    /// Fills in missing scores (all of them when `rescore_all`).
    fn rescore(
        &mut self,
        rescore_all: bool,
        score: &mut dyn FnMut(&BoolFn, &Restriction) -> Result<Option<(usize, f64)>>,
    ) -> Result<()> {
        for (&id, st) in self.leaves.iter_mut() {
            if st.entry.is_some() && !rescore_all {
                continue;
            }
            st.entry = score(&st.f, self.tree.path(id))?
                .map(|(var, raw)| ScoreEntry::new(id, self.tree.depth_of(id), var, raw));
        }
        Ok(())
    }

    fn best(&self, ties: &mut TieBreaker) -> Option<ScoreEntry> {
        let entries: Vec<ScoreEntry> = self.leaves.values().filter_map(|st| st.entry).collect();
        let top = entries.iter().map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<ScoreEntry> = entries.into_iter().filter(|e| e.score >= top - TIE_EPS).collect();
        ties.pick_entry(&tied)
    }

    fn split(&mut self, e: ScoreEntry, floor: Option<f64>) -> Result<()> {
        let j = self.tree.size();
        let parent = self.leaves.remove(&e.leaf).expect("entry refers to a live leaf");
        let local = parent
            .f
            .local_of(e.var)
            .ok_or_else(|| Error::var_out_of_range(e.var, self.f.n()))?;
        let (l, r) = self.tree.split_leaf(e.leaf, e.var)?;
        let lf = parent.f.restrict(&Restriction::new(vec![(local, -1)])?)?;
        let rf = parent.f.restrict(&Restriction::new(vec![(local, 1)])?)?;
        let ls = self.leaf_state(lf)?;
        let rs = self.leaf_state(rf)?;
        self.leaves.insert(l, ls);
        self.leaves.insert(r, rs);
        self.splits.push((e.leaf, e.var));
        self.depths.push(self.tree.depth());
        if let Some(floor) = floor {
            self.floor_met.push(e.score >= floor / j as f64);
        }
        self.trace.push(TraceRow {
            iter: j,
            leaf: self.tree.path(e.leaf).to_string(),
            var: e.var,
            score: e.score,
            potential: self.potential(),
            error: self.error(),
        });
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn run(
        mut self,
        t: usize,
        early_stop: Option<f64>,
        ties: &mut TieBreaker,
        rescore_all: bool,
        floor: Option<f64>,
        d: usize,
        score: &mut dyn FnMut(&BoolFn, &Restriction) -> Result<Option<(usize, f64)>>,
    ) -> Result<BuildReport> {
        let kappa = self.potential();
        let error0 = self.error();
        let mut stop = StopReason::Budget;
        while self.tree.size() < t {
            self.rescore(rescore_all, score)?;
            let Some(best) = self.best(ties) else {
                stop = StopReason::Exhausted;
                break;
            };
            if early_stop.is_some_and(|theta| best.score <= theta) {
                stop = StopReason::EarlyStop;
                break;
            }
            self.split(best, floor)?;
        }
        let tree = f_completion(&self.tree, self.f)?;
        let error = self.error();
        Ok(BuildReport {
            tree,
            trace: self.trace,
            kappa,
            error,
            initial_error: error0,
            splits: self.splits,
            depths: self.depths,
            floor_met: self.floor_met,
            stop,
            d,
        })
    }
}

/// `ε/(log₂(s/ε)·log₂ s)`; the Case-1 floor at size `j` is this over `j`.
pub fn score_floor_scale(s: usize, eps: f64) -> Option<f64> {
    (s >= 2).then(|| eps / ((s as f64 / eps).log2() * (s as f64).log2()))
}

/// Grows a tree by repeatedly splitting the leaf of highest score
/// `2^{-|ℓ|}·max_i Inf_i^{(δ,d)}(f_ℓ)` and returns its f-completion.
pub fn build_stabilizing_dt(f: &BoolFn, p: &BuildParams) -> Result<BuildReport> {
    build_stabilizing_dt_with(f, p, &mut ExactScorer)
}

pub fn build_stabilizing_dt_with(f: &BoolFn, p: &BuildParams, scorer: &mut dyn LeafScorer) -> Result<BuildReport> {
    p.validate()?;
    let mut ties = TieBreaker::new(p.tiebreak);
    let mut var_ties = TieBreaker::new(p.tiebreak);
    let floor = p.s.and_then(|s| score_floor_scale(s, p.eps));
    let (delta, d) = (p.delta, p.d);
    let mut score = |fl: &BoolFn, path: &Restriction| -> Result<Option<(usize, f64)>> {
        let infl = scorer.influences(f, fl, path, delta, d)?;
        Ok(var_ties.pick(&infl))
    };
    Grower::new(f, p.delta)?.run(p.t, p.early_stop, &mut ties, !p.cache_scores, floor, p.d, &mut score)
}

/// Classical top-down induction: the leaf score is
/// `2^{-|ℓ|}·max_i purity_gain(kind, f_ℓ, i)`. Constant leaves are never
/// split; zero-gain leaves are. `delta` only feeds the potential column.
pub fn build_impurity_dt(f: &BoolFn, kind: ImpurityKind, t: usize, tiebreak: TieBreak, delta: f64) -> Result<BuildReport> {
    if t == 0 {
        return Err(Error::BudgetZero);
    }
    Error::check_unit_open("delta", delta)?;
    let mut ties = TieBreaker::new(tiebreak);
    let mut var_ties = TieBreaker::new(tiebreak);
    let mut score = |fl: &BoolFn, _: &Restriction| -> Result<Option<(usize, f64)>> {
        if fl.is_constant() {
            return Ok(None);
        }
        best_purity_split(kind, fl, &mut var_ties)
    };
    Grower::new(f, delta)?.run(t, None, &mut ties, false, None, 0, &mut score)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    General,
    Monotone,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::General => "general",
            Preset::Monotone => "monotone",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Preset::General),
            "monotone" => Ok(Preset::Monotone),
            _ => Err(Error::InvalidSpec(format!("unknown preset `{s}`"))),
        }
    }
}

/// `δ = ε/log₂ s` (general) or `ε/(2√log₂ s)` (monotone), `d = ⌈ln(1/ε)/δ⌉`.
/// The budget `t` defaults to `s`; callers choose their own.
pub fn preset_params(s: usize, eps: f64, mode: Preset) -> Result<BuildParams> {
    if s < 2 {
        return Err(Error::OutOfRange {
            name: "s",
            value: s as f64,
            range: "s ≥ 2",
        });
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, 1/2)",
        });
    }
    let log_s = (s as f64).log2();
    let delta = match mode {
        Preset::General => eps / log_s,
        Preset::Monotone => eps / (2.0 * log_s.sqrt()),
    };
    let mut p = BuildParams::new(s, delta, eps)?;
    p.s = Some(s);
    Ok(p)
}

/// Smallest `t` with `Σ_{j≤t} εδ/(j(1-δ)·log₂(s/ε)·log₂ s) ≥ κ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeBound {
    /// `κ(1-δ)·log₂(s/ε)·log₂ s/(εδ)`: the harmonic number to reach.
    pub harmonic_target: f64,
    pub log2_t: f64,
    /// Exact value when it fits comfortably in a `u64`.
    pub t: Option<u64>,
}

impl SizeBound {
    /// `size ≤ factor · t`, decided in log space.
    pub fn admits(&self, size: usize, factor: f64) -> bool {
        (size as f64).log2() <= self.log2_t + factor.log2() + 1e-12
    }
}

pub fn summation_size_bound(kappa: f64, s: usize, eps: f64, delta: f64) -> Result<SizeBound> {
    let scale = score_floor_scale(s, eps).ok_or(Error::OutOfRange {
        name: "s",
        value: s as f64,
        range: "s ≥ 2",
    })?;
    Error::check_unit_open("delta", delta)?;
    let target = kappa.max(0.0) * (1.0 - delta) / (delta * scale);
    if target <= 1.0 {
        return Ok(SizeBound { harmonic_target: target, log2_t: 0.0, t: Some(1) });
    }
    // Direct summation while it is cheap; H_t = ln t + γ + 1/(2t) - … beyond.
    const DIRECT: u64 = 1 << 24;
    let mut h = 0.0;
    for j in 1..=DIRECT {
        h += 1.0 / j as f64;
        if h >= target {
            return Ok(SizeBound { harmonic_target: target, log2_t: (j as f64).log2(), t: Some(j) });
        }
    }
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let ln_t = target - EULER_GAMMA;
    let log2_t = ln_t / std::f64::consts::LN_2;
    let t = (log2_t < 60.0).then(|| ln_t.exp().ceil() as u64);
    Ok(SizeBound { harmonic_target: target, log2_t, t })
}

/// Both sides of the per-split progress bound for `f` against `T★`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressCheck {
    /// `[½Var(f_δ) - (2E[(T★-f_δ)²] + 5ε/2)] / (k·log₂ s)`.
    pub lhs_bound: f64,
    /// `max_i Inf_i^{(δ,d)}(f)`.
    pub max_influence: f64,
    pub holds: bool,
    pub note: Option<String>,
    pub d: usize,
}

/// Rounding slack when comparing the two sides.
pub const PROGRESS_SLACK: f64 = 1e-12;

pub fn osss_progress_check(f: &BoolFn, t_star: &CompletedTree, delta: f64, eps: f64) -> Result<ProgressCheck> {
    if t_star.n() != f.n() {
        return Err(Error::DimensionMismatch { left: f.n(), right: t_star.n() });
    }
    Error::check_unit_open("delta", delta)?;
    Error::check_unit_open("eps", eps)?;
    let d = default_degree(eps, delta);
    let sp = spectrum(f);
    let max_influence = sp
        .noisy_dwise_influences(delta, d)?
        .into_iter()
        .fold(0.0, f64::max);
    let (s, k) = (t_star.size(), t_star.depth());
    if s < 2 || k < 1 {
        return Ok(ProgressCheck {
            lhs_bound: f64::NEG_INFINITY,
            max_influence,
            holds: true,
            note: Some(format!("degenerate reference tree (size {s}, depth {k}); bound is vacuous")),
            d,
        });
    }
    let smooth = sp.attenuate_truncate(delta, None)?;
    let t_sp = spectrum(&t_star.to_boolfn()?);
    let gap = crate::fourier::l2_dist(&t_sp, &smooth)?;
    let numerator = 0.5 * smooth.variance() - (2.0 * gap + 2.5 * eps);
    let lhs_bound = numerator / (k as f64 * (s as f64).log2());
    Ok(ProgressCheck {
        lhs_bound,
        max_influence,
        holds: max_influence >= lhs_bound - PROGRESS_SLACK,
        note: None,
        d,
    })
}

/// The two sides of the Case-1 condition
/// `E_ℓ[Var((f_ℓ)_δ)] ≥ 4·E_ℓ[‖(f_ℓ)_δ - T‖²] + 7ε` for a partial tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseSplit {
    pub mean_variance: f64,
    pub threshold: f64,
}

impl CaseSplit {
    pub fn is_case1(&self) -> bool {
        self.mean_variance >= self.threshold
    }
}

/// Evaluates the Case-1 condition with each `f_ℓ` read as a function on the
/// whole cube (constant in the path variables) and compared to `reference`.
pub fn case_split(f: &BoolFn, tree: &PartialTree, reference: &CompletedTree, delta: f64, eps: f64) -> Result<CaseSplit> {
    let n = f.n();
    if tree.n() != n || reference.n() != n {
        return Err(Error::DimensionMismatch { left: n, right: tree.n().max(reference.n()) });
    }
    let r_sp = spectrum(&reference.to_boolfn()?);
    let mut mean_variance = 0.0;
    let mut mean_gap = 0.0;
    for leaf in tree.leaves() {
        let path = tree.path(leaf);
        let (vm, vv) = (path.var_mask(), path.value_mask());
        let lifted = BoolFn::from_fn(n, |x| f.table()[(x & !vm) | vv] > 0)?;
        let smooth: Spectrum = spectrum(&lifted).attenuate_truncate(delta, None)?;
        let w = leaf_weight(path.len());
        mean_variance += w * smooth.variance();
        mean_gap += w * crate::fourier::l2_dist(&smooth, &r_sp)?;
    }
    Ok(CaseSplit {
        mean_variance,
        threshold: 4.0 * mean_gap + 7.0 * eps,
    })
}

/// The reference tree cut to depth `⌈log₂(s/ε)⌉`, cut paths labeled `+1`.
pub fn truncate_reference(tree: &CompletedTree, s: usize, eps: f64) -> CompletedTree {
    let depth = (s as f64 / eps).log2().ceil().max(0.0) as usize;
    tree.truncated(depth, 1)
}
