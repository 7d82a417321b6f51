//! Splitting criteria: impurity-based purity gain and the noisy d-wise
//! influence score.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boolfn::{BoolFn, Restriction};
use crate::error::{Error, Result};
use crate::fourier::spectrum;
use crate::tree::{leaf_weight, NodeId};

/// Values closer than this are treated as tied.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ImpurityKind {
    /// Binary entropy (ID3, C4.5).
    Entropy,
    /// `4p(1-p)` (CART).
    Gini,
    /// `2√(p(1-p))`.
    Km,
}

impl ImpurityKind {
    pub const ALL: [ImpurityKind; 3] = [ImpurityKind::Entropy, ImpurityKind::Gini, ImpurityKind::Km];
}

impl fmt::Display for ImpurityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImpurityKind::Entropy => "entropy",
            ImpurityKind::Gini => "gini",
            ImpurityKind::Km => "km",
        })
    }
}

impl FromStr for ImpurityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(ImpurityKind::Entropy),
            "gini" => Ok(ImpurityKind::Gini),
            "km" => Ok(ImpurityKind::Km),
            _ => Err(Error::InvalidSpec(format!("unknown impurity `{s}`"))),
        }
    }
}

/// `G(p)` for the given impurity function; `0·log 0 = 0`.
pub fn impurity(kind: ImpurityKind, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    let q = 1.0 - p;
    Ok(match kind {
        ImpurityKind::Entropy => {
            let h = |v: f64| if v <= 0.0 { 0.0 } else { -v * v.log2() };
            h(p) + h(q)
        }
        ImpurityKind::Gini => 4.0 * p * q,
        ImpurityKind::Km => 2.0 * (p * q).sqrt(),
    })
}

fn plus_fraction(f: &BoolFn) -> f64 {
    f.count_plus() as f64 / f.table().len() as f64
}

/// `G(dist(f)) - E_b[G(dist(f_{x_i=b}))]` for global variable `var`.
pub fn purity_gain(kind: ImpurityKind, f: &BoolFn, var: usize) -> Result<f64> {
    let local = f
        .local_of(var)
        .ok_or_else(|| Error::var_out_of_range(var, f.vars().last().copied().unwrap_or(0)))?;
    let lo = f.restrict(&Restriction::new(vec![(local, -1)])?)?;
    let hi = f.restrict(&Restriction::new(vec![(local, 1)])?)?;
    let g = |h: &BoolFn| {
        let p = plus_fraction(h);
        impurity(kind, p.min(1.0 - p))
    };
    Ok(g(f)? - 0.5 * g(&lo)? - 0.5 * g(&hi)?)
}

/// Policy for choosing among tied variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    LowVar,
    HighVar,
    Random(u64),
}

impl Default for TieBreak {
    fn default() -> Self {
        TieBreak::LowVar
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TieBreak::LowVar => f.write_str("lowvar"),
            TieBreak::HighVar => f.write_str("highvar"),
            TieBreak::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowvar" => Ok(TieBreak::LowVar),
            "highvar" => Ok(TieBreak::HighVar),
            _ => s
                .strip_prefix("random:")
                .and_then(|seed| seed.parse().ok())
                .map(TieBreak::Random)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown tie-break `{s}`"))),
        }
    }
}

/// Stateful tie resolution; the random policy owns a seeded generator.
#[derive(Clone, Debug)]
pub struct TieBreaker {
    policy: TieBreak,
    rng: Option<ChaCha8Rng>,
}

impl TieBreaker {
    pub fn new(policy: TieBreak) -> Self {
        let rng = match policy {
            TieBreak::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self { policy, rng }
    }

    /// Maximizer of `value` over `(var, value)` candidates given in ascending
    /// variable order.
    pub fn pick(&mut self, candidates: &[(usize, f64)]) -> Option<(usize, f64)> {
        let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<(usize, f64)> = candidates
            .iter()
            .copied()
            .filter(|c| c.1 >= best - TIE_EPS)
            .collect();
        match self.policy {
            TieBreak::LowVar => tied.first().copied(),
            TieBreak::HighVar => tied.last().copied(),
            TieBreak::Random(_) => {
                if tied.is_empty() {
                    return None;
                }
                let rng = self.rng.as_mut().expect("random policy owns a generator");
                Some(tied[rng.gen_range(0..tied.len())])
            }
        }
    }

    /// Resolves a tie between leaves. Entries must be sorted by leaf id;
    /// deterministic policies order by variable first, then leaf id.
    pub fn pick_entry(&mut self, tied: &[ScoreEntry]) -> Option<ScoreEntry> {
        match self.policy {
            TieBreak::LowVar => tied.iter().min_by_key(|e| (e.var, e.leaf)).copied(),
            TieBreak::HighVar => tied
                .iter()
                .min_by_key(|e| (std::cmp::Reverse(e.var), e.leaf))
                .copied(),
            TieBreak::Random(_) => {
                if tied.is_empty() {
                    return None;
                }
                let rng = self.rng.as_mut().expect("random policy owns a generator");
                Some(tied[rng.gen_range(0..tied.len())])
            }
        }
    }
}

/// Best purity-gain split of `f` over its free variables.
pub fn best_purity_split(kind: ImpurityKind, f: &BoolFn, ties: &mut TieBreaker) -> Result<Option<(usize, f64)>> {
    let gains = f
        .vars()
        .iter()
        .map(|&v| Ok((v, purity_gain(kind, f, v)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ties.pick(&gains))
}

/// Best variable by `Inf_i^{(δ,d)}` on a leaf subfunction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisyScore {
    /// Global index of the maximizer; `None` when no variable is free.
    pub var: Option<usize>,
    pub raw: f64,
}

/// All `Inf_i^{(δ,d)}(f_ℓ)` for the free variables, keyed by global index.
pub fn noisy_influences(f: &BoolFn, delta: f64, d: usize) -> Result<Vec<(usize, f64)>> {
    if f.is_constant() {
        return Ok(f.vars().iter().map(|&v| (v, 0.0)).collect());
    }
    let infl = spectrum(f).noisy_dwise_influences(delta, d)?;
    Ok(f.vars().iter().copied().zip(infl).collect())
}

/// Maximizer of the noisy d-wise influence, ties to the lowest global index.
pub fn noisy_score(f: &BoolFn, delta: f64, d: usize) -> Result<NoisyScore> {
    noisy_score_with(f, delta, d, &mut TieBreaker::new(TieBreak::LowVar))
}

pub fn noisy_score_with(f: &BoolFn, delta: f64, d: usize, ties: &mut TieBreaker) -> Result<NoisyScore> {
    let infl = noisy_influences(f, delta, d)?;
    Ok(match ties.pick(&infl) {
        Some((var, raw)) => NoisyScore { var: Some(var), raw },
        None => NoisyScore { var: None, raw: 0.0 },
    })
}

/// A leaf's best split and its weighted score `2^{-|ℓ|} · raw`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreEntry {
    pub leaf: NodeId,
    pub var: usize,
    pub raw: f64,
    pub score: f64,
}

impl ScoreEntry {
    pub fn new(leaf: NodeId, depth: usize, var: usize, raw: f64) -> Self {
        Self {
            leaf,
            var,
            raw,
            score: leaf_weight(depth) * raw,
        }
    }
}
