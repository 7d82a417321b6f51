//! Noise sensitivity, exact and sampled, and the tree-indexed potential
//! `NS_δ(f, T°) = Σ_ℓ 2^{-|ℓ|} NS_δ(f_ℓ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boolfn::BoolFn;
use crate::error::{Error, Result};
use crate::fourier::{spectrum, Spectrum};
use crate::tree::{leaf_weight, NodeId, PartialTree};

/// Noise rate plus optional Monte Carlo settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    pub delta: f64,
    pub mc_samples: Option<usize>,
    pub seed: u64,
}

impl NoiseParams {
    pub fn new(delta: f64, mc_samples: Option<usize>, seed: u64) -> Result<Self> {
        Error::check_unit_open("delta", delta)?;
        if mc_samples == Some(0) {
            return Err(Error::OutOfRange {
                name: "mc_samples",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(Self {
            delta,
            mc_samples,
            seed,
        })
    }
}

/// How a δ-noisy copy is drawn. The two are equal in distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoisyCopy {
    /// With probability δ replace the coordinate by a fresh uniform bit.
    Rerandomize,
    /// Flip the coordinate with probability δ/2.
    Flip,
}

/// `NS_δ(f) = (1 - Σ_S (1-δ)^{|S|} f̂(S)²) / 2`.
pub fn ns_exact(sp: &Spectrum, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "[0, 1]",
        });
    }
    let stab = sp.noise_stability(delta)?;
    Ok(((1.0 - stab) / 2.0).clamp(0.0, 0.5))
}

/// [`ns_exact`] straight from a truth table.
pub fn ns_of(f: &BoolFn, delta: f64) -> Result<f64> {
    ns_exact(&spectrum(f), delta)
}

/// Mixes a master seed with a stream index (splitmix64 finalizer).
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn noisy_copy(x: usize, n: usize, delta: f64, how: NoisyCopy, rng: &mut impl Rng) -> usize {
    let mut y = x;
    for b in 0..n {
        match how {
            NoisyCopy::Rerandomize => {
                if rng.gen_bool(delta) {
                    y = (y & !(1 << b)) | (usize::from(rng.gen_bool(0.5)) << b);
                }
            }
            NoisyCopy::Flip => {
                if rng.gen_bool(delta / 2.0) {
                    y ^= 1 << b;
                }
            }
        }
    }
    y
}

const MC_CHUNK: usize = 1 << 14;

/// Fraction of sampled pairs `(x, x̃)` with `f(x) != f(x̃)`.
pub fn ns_mc(f: &BoolFn, params: &NoiseParams) -> Result<f64> {
    ns_mc_with(f, params, NoisyCopy::Rerandomize)
}

/// [`ns_mc`] with an explicit noisy-copy sampler. Samples are split into
/// fixed chunks, each with its own generator derived from the seed, so the
/// estimate does not depend on thread scheduling.
pub fn ns_mc_with(f: &BoolFn, params: &NoiseParams, how: NoisyCopy) -> Result<f64> {
    let m = params.mc_samples.ok_or(Error::OutOfRange {
        name: "mc_samples",
        value: 0.0,
        range: "required for Monte Carlo",
    })?;
    let n = f.n();
    let table = f.table();
    let chunks = m.div_ceil(MC_CHUNK);
    let disagreements: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, c as u64));
            let count = MC_CHUNK.min(m - c * MC_CHUNK);
            (0..count)
                .filter(|_| {
                    let x = rng.gen_range(0..table.len());
                    let y = noisy_copy(x, n, params.delta, how, &mut rng);
                    table[x] != table[y]
                })
                .count()
        })
        .sum();
    Ok(disagreements as f64 / m as f64)
}

/// Exact potential `Σ_ℓ 2^{-|ℓ|} NS_δ(f_ℓ)` over the leaves of `tree`.
pub fn ns_wrt_tree(f: &BoolFn, tree: &PartialTree, delta: f64) -> Result<f64> {
    if f.n() != tree.n() {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: tree.n(),
        });
    }
    tree.leaves()
        .into_iter()
        .map(|leaf| {
            let sub = f.restrict_global(tree.path(leaf))?;
            Ok(leaf_weight(tree.depth_of(leaf)) * ns_of(&sub, delta)?)
        })
        .sum()
}

/// Drop in the potential from splitting `leaf` on `x_var`:
/// `2^{-|ℓ|} · δ/(2(1-δ)) · Inf_i^{(δ)}(f_ℓ)`.
pub fn stability_gain(f: &BoolFn, tree: &PartialTree, leaf: NodeId, var: usize, delta: f64) -> Result<f64> {
    Error::check_unit_open("delta", delta)?;
    if !tree.is_leaf(leaf) {
        return Err(Error::NotALeaf(leaf));
    }
    if var == 0 || var > tree.n() {
        return Err(Error::var_out_of_range(var, tree.n()));
    }
    if tree.path(leaf).contains(var) {
        return Err(Error::VariableOnPath(var));
    }
    let sub = f.restrict_global(tree.path(leaf))?;
    let local = sub
        .local_of(var)
        .ok_or_else(|| Error::var_out_of_range(var, f.n()))?;
    let inf = spectrum(&sub).noisy_influence(local, delta)?;
    Ok(leaf_weight(tree.depth_of(leaf)) * split_gain_factor(delta) * inf)
}

/// `δ / (2(1-δ))`.
pub fn split_gain_factor(delta: f64) -> f64 {
    delta / (2.0 * (1.0 - delta))
}

/// Both sides of the one-variable decomposition of noise sensitivity,
/// computed along independent routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesSides {
    /// `NS_δ(f)` from the full spectrum.
    pub lhs: f64,
    /// `½NS_δ(f_{x_i=-1}) + ½NS_δ(f_{x_i=1}) + δ/(2(1-δ)) · Inf_i^{(δ)}(f)`.
    pub rhs: f64,
}

pub fn jones_decompose(f: &BoolFn, var: usize, delta: f64) -> Result<JonesSides> {
    Error::check_unit_open("delta", delta)?;
    if var == 0 || var > f.n() {
        return Err(Error::var_out_of_range(var, f.n()));
    }
    let sp = spectrum(f);
    let lhs = ns_exact(&sp, delta)?;
    let restricted = |b: i8| -> Result<f64> {
        let rho = crate::boolfn::Restriction::new(vec![(var, b)])?;
        ns_of(&f.restrict(&rho)?, delta)
    };
    let rhs = 0.5 * restricted(-1)? + 0.5 * restricted(1)?
        + split_gain_factor(delta) * sp.noisy_influence(var, delta)?;
    Ok(JonesSides { lhs, rhs })
}
