//! Boolean functions `f: {±1}^n -> {±1}` stored as full truth tables.
//!
//! Input bitmask bit `i - 1` encodes `x_i`; a set bit means `x_i = +1`.
//! Variable indices in the public API are 1-based.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tree::{self, CompletedTree};

/// Default cap on the number of variables of an exact truth table.
pub const DEFAULT_MAX_VARS: usize = 20;

/// An exactly represented Boolean function.
///
/// `vars[k]` is the global (1-based) name of local coordinate `k + 1`. Fresh
/// functions use the identity map; [`BoolFn::restrict`] compacts the free
/// coordinates and carries the map along.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolFn {
    n: usize,
    table: Vec<i8>,
    vars: Vec<usize>,
    origin: String,
}

impl fmt::Debug for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoolFn")
            .field("n", &self.n)
            .field("vars", &self.vars)
            .field("origin", &self.origin)
            .finish_non_exhaustive()
    }
}

impl BoolFn {
    /// Builds a function from a table of ±1 entries indexed by input bitmask.
    pub fn from_table(n: usize, table: Vec<i8>) -> Result<Self> {
        check_size(n, DEFAULT_MAX_VARS)?;
        if table.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: table.len().trailing_zeros() as usize,
            });
        }
        if let Some(pos) = table.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::IndexOutOfRange {
                index: pos,
                range: "table entries must be -1 or +1".into(),
            });
        }
        Ok(Self {
            n,
            table,
            vars: (1..=n).collect(),
            origin: "table".into(),
        })
    }

    /// Tabulates `eval(mask)` for every input.
    pub fn from_fn(n: usize, eval: impl Fn(usize) -> bool) -> Result<Self> {
        check_size(n, DEFAULT_MAX_VARS)?;
        let table = (0..1usize << n)
            .map(|x| if eval(x) { 1 } else { -1 })
            .collect();
        Ok(Self {
            n,
            table,
            vars: (1..=n).collect(),
            origin: "fn".into(),
        })
    }

    pub fn constant(n: usize, value: i8) -> Result<Self> {
        let mut f = Self::from_fn(n, |_| value > 0)?;
        f.origin = format!("constant:{}", if value > 0 { "+1" } else { "-1" });
        Ok(f)
    }

    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.origin = origin.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    /// Global names of the local coordinates, ascending.
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn evaluate(&self, x: usize) -> Result<i8> {
        self.table.get(x).copied().ok_or(Error::IndexOutOfRange {
            index: x,
            range: format!("0..{}", self.table.len()),
        })
    }

    /// Local coordinate (1-based) carrying global variable `global`, if free.
    pub fn local_of(&self, global: usize) -> Option<usize> {
        self.vars.binary_search(&global).ok().map(|k| k + 1)
    }

    pub fn count_plus(&self) -> usize {
        self.table.iter().filter(|&&v| v > 0).count()
    }

    /// `E[f]` under the uniform distribution.
    pub fn mean(&self) -> f64 {
        let plus = self.count_plus() as f64;
        (2.0 * plus - self.table.len() as f64) / self.table.len() as f64
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&v| v == self.table[0])
    }

    /// `sign(E[f])` with `sign(0) = +1`.
    pub fn majority_sign(&self) -> i8 {
        if 2 * self.count_plus() >= self.table.len() {
            1
        } else {
            -1
        }
    }

    /// Subfunction with the variables of `rho` fixed. `rho` uses local indices;
    /// the result's coordinates are the remaining local ones in ascending order.
    pub fn restrict(&self, rho: &Restriction) -> Result<BoolFn> {
        rho.validate(self.n)?;
        let mut fixed: Vec<(usize, i8)> = rho.assignments().to_vec();
        // Descending order keeps lower bit positions stable while compacting.
        fixed.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        let mut table = self.table.clone();
        for &(var, value) in &fixed {
            table = fix_bit(&table, var - 1, value > 0);
        }
        let vars = self
            .vars
            .iter()
            .enumerate()
            .filter(|(k, _)| !rho.contains(k + 1))
            .map(|(_, &g)| g)
            .collect();
        Ok(BoolFn {
            n: self.n - rho.len(),
            table,
            vars,
            origin: format!("{}|{}", self.origin, rho),
        })
    }

    /// Restriction given in global variable names.
    pub fn restrict_global(&self, rho: &Restriction) -> Result<BoolFn> {
        let local = rho
            .assignments()
            .iter()
            .map(|&(g, b)| {
                self.local_of(g)
                    .map(|l| (l, b))
                    .ok_or_else(|| Error::var_out_of_range(g, self.n))
            })
            .collect::<Result<Vec<_>>>()?;
        self.restrict(&Restriction::new(local)?)
    }
}

fn fix_bit(table: &[i8], bit: usize, set: bool) -> Vec<i8> {
    let low_mask = (1usize << bit) - 1;
    let half = table.len() / 2;
    (0..half)
        .map(|idx| {
            let low = idx & low_mask;
            let high = (idx & !low_mask) << 1;
            let full = high | low | if set { 1 << bit } else { 0 };
            table[full]
        })
        .collect()
}

pub(crate) fn check_size(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::TableTooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// `Pr[f(x) != g(x)]` by exact enumeration.
pub fn dist(f: &BoolFn, g: &BoolFn) -> Result<f64> {
    if f.n != g.n {
        return Err(Error::DimensionMismatch {
            left: f.n,
            right: g.n,
        });
    }
    let diff = f
        .table
        .iter()
        .zip(&g.table)
        .filter(|(a, b)| a != b)
        .count();
    Ok(diff as f64 / f.table.len() as f64)
}

/// A partial assignment: an ordered list of `(variable, ±1)` pairs with
/// distinct variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Restriction {
    assignments: Vec<(usize, i8)>,
}

impl Restriction {
    pub fn new(assignments: Vec<(usize, i8)>) -> Result<Self> {
        for (k, &(var, value)) in assignments.iter().enumerate() {
            if value != 1 && value != -1 {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    range: "assigned values must be -1 or +1".into(),
                });
            }
            if assignments[..k].iter().any(|&(v, _)| v == var) {
                return Err(Error::DuplicateVariable(var));
            }
        }
        Ok(Self { assignments })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn assignments(&self) -> &[(usize, i8)] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.assignments.iter().any(|&(v, _)| v == var)
    }

    pub fn value_of(&self, var: usize) -> Option<i8> {
        self.assignments
            .iter()
            .find(|&&(v, _)| v == var)
            .map(|&(_, b)| b)
    }

    /// Extends the path by one more fixed variable.
    pub fn extended(&self, var: usize, value: i8) -> Result<Self> {
        if self.contains(var) {
            return Err(Error::DuplicateVariable(var));
        }
        let mut assignments = self.assignments.clone();
        assignments.push((var, value));
        Self::new(assignments)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for &(var, _) in &self.assignments {
            if var == 0 || var > n {
                return Err(Error::var_out_of_range(var, n));
            }
        }
        Ok(())
    }

    /// Whether input `x` (a bitmask over `n` global variables) satisfies the path.
    pub fn admits(&self, x: usize) -> bool {
        self.assignments
            .iter()
            .all(|&(var, b)| ((x >> (var - 1)) & 1 == 1) == (b > 0))
    }

    /// Bitmask of the fixed variables.
    pub fn var_mask(&self) -> usize {
        self.assignments
            .iter()
            .fold(0, |m, &(var, _)| m | 1 << (var - 1))
    }

    /// Bitmask of the variables fixed to `+1`.
    pub fn value_mask(&self) -> usize {
        self.assignments
            .iter()
            .filter(|&&(_, b)| b > 0)
            .fold(0, |m, &(var, _)| m | 1 << (var - 1))
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.assignments.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<String> = self
            .assignments
            .iter()
            .map(|&(v, b)| format!("x{}={}", v, if b > 0 { "+1" } else { "-1" }))
            .collect();
        f.write_str(&parts.join("&"))
    }
}

/// Description of a target function. Text grammar:
/// `parity:1,2` | `dictator:3` | `majority:1,2,3` | `dt:<seed>:<size>` |
/// `table:<hex>` | `corrupt:<rate>:<seed>:(<inner spec>)` | `constant:+1`.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Parity(Vec<usize>),
    Dictator(usize),
    Majority(Vec<usize>),
    RandomDt { seed: u64, size: usize },
    Table(String),
    Corrupted {
        base: Box<TargetSpec>,
        rate: f64,
        seed: u64,
    },
    Constant(i8),
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            TargetSpec::Parity(s) => write!(f, "parity:{}", join(s)),
            TargetSpec::Dictator(i) => write!(f, "dictator:{i}"),
            TargetSpec::Majority(s) => write!(f, "majority:{}", join(s)),
            TargetSpec::RandomDt { seed, size } => write!(f, "dt:{seed}:{size}"),
            TargetSpec::Table(hex) => write!(f, "table:{hex}"),
            TargetSpec::Corrupted { base, rate, seed } => {
                write!(f, "corrupt:{rate}:{seed}:({base})")
            }
            TargetSpec::Constant(v) => write!(f, "constant:{}", if *v > 0 { "+1" } else { "-1" }),
        }
    }
}

fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidSpec(format!("bad variable index `{t}`")))
        })
        .collect()
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("missing `:` in `{s}`")))?;
        let bad = |what: &str| Error::InvalidSpec(format!("{what} in `{s}`"));
        match kind {
            "parity" => Ok(TargetSpec::Parity(parse_index_list(rest)?)),
            "dictator" => rest
                .trim()
                .parse()
                .map(TargetSpec::Dictator)
                .map_err(|_| bad("bad dictator index")),
            "majority" => Ok(TargetSpec::Majority(parse_index_list(rest)?)),
            "dt" => {
                let (seed, size) = rest.split_once(':').ok_or_else(|| bad("expected dt:<seed>:<size>"))?;
                Ok(TargetSpec::RandomDt {
                    seed: seed.trim().parse().map_err(|_| bad("bad seed"))?,
                    size: size.trim().parse().map_err(|_| bad("bad size"))?,
                })
            }
            "table" => {
                let hex = rest.trim();
                if hex.is_empty() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
                    return Err(bad("bad hex table"));
                }
                Ok(TargetSpec::Table(hex.to_ascii_lowercase()))
            }
            "corrupt" => {
                let mut parts = rest.splitn(3, ':');
                let rate = parts
                    .next()
                    .and_then(|r| r.trim().parse::<f64>().ok())
                    .ok_or_else(|| bad("bad flip rate"))?;
                let seed = parts
                    .next()
                    .and_then(|r| r.trim().parse::<u64>().ok())
                    .ok_or_else(|| bad("bad seed"))?;
                let inner = parts.next().ok_or_else(|| bad("missing inner spec"))?.trim();
                let inner = inner
                    .strip_prefix('(')
                    .and_then(|i| i.strip_suffix(')'))
                    .ok_or_else(|| bad("inner spec must be parenthesised"))?;
                Ok(TargetSpec::Corrupted {
                    base: Box::new(inner.parse()?),
                    rate,
                    seed,
                })
            }
            "constant" => match rest.trim() {
                "+1" | "1" => Ok(TargetSpec::Constant(1)),
                "-1" => Ok(TargetSpec::Constant(-1)),
                _ => Err(bad("constant must be +1 or -1")),
            },
            _ => Err(bad("unknown target kind")),
        }
    }
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    for &i in indices {
        if i == 0 || i > n {
            return Err(Error::var_out_of_range(i, n));
        }
    }
    for (k, &i) in indices.iter().enumerate() {
        if indices[..k].contains(&i) {
            return Err(Error::DuplicateVariable(i));
        }
    }
    Ok(())
}

fn subset_mask(indices: &[usize]) -> usize {
    indices.iter().fold(0, |m, &i| m | 1 << (i - 1))
}

/// Builds the truth table of `spec` on `n` variables, with the default cap.
pub fn make_target(spec: &TargetSpec, n: usize) -> Result<BoolFn> {
    make_target_with_cap(spec, n, DEFAULT_MAX_VARS)
}

pub fn make_target_with_cap(spec: &TargetSpec, n: usize, cap: usize) -> Result<BoolFn> {
    check_size(n, cap)?;
    let f = match spec {
        TargetSpec::Parity(s) => {
            check_indices(s, n)?;
            let mask = subset_mask(s);
            BoolFn::from_fn(n, |x| (x & mask).count_ones() % 2 == 0)?
        }
        TargetSpec::Dictator(i) => {
            check_indices(&[*i], n)?;
            BoolFn::from_fn(n, |x| (x >> (i - 1)) & 1 == 1)?
        }
        TargetSpec::Majority(s) => {
            check_indices(s, n)?;
            if s.len() % 2 == 0 {
                return Err(Error::InvalidSpec(format!(
                    "majority arity must be odd, got {}",
                    s.len()
                )));
            }
            let mask = subset_mask(s);
            BoolFn::from_fn(n, |x| 2 * (x & mask).count_ones() as usize > s.len())?
        }
        TargetSpec::RandomDt { seed, size } => random_dt_target(n, *size, *seed)?.f,
        TargetSpec::Table(hex) => from_hex(n, hex)?,
        TargetSpec::Corrupted { base, rate, seed } => {
            if !(0.0..0.5).contains(rate) {
                return Err(Error::OutOfRange {
                    name: "flip rate",
                    value: *rate,
                    range: "[0, 1/2)",
                });
            }
            let mut f = make_target_with_cap(base, n, cap)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for v in f.table.iter_mut() {
                if rng.gen_bool(*rate) {
                    *v = -*v;
                }
            }
            f
        }
        TargetSpec::Constant(v) => BoolFn::constant(n, *v)?,
    };
    Ok(f.with_origin(format!("{spec}@n={n}")))
}

/// Hex digits encode table entries as bits, most significant bit first,
/// `1 = +1`. Tables shorter than one digit use the leading bits and require
/// the remaining bits to be zero.
fn from_hex(n: usize, hex: &str) -> Result<BoolFn> {
    let len = 1usize << n;
    let expected = len.div_ceil(4);
    if hex.len() != expected {
        return Err(Error::BadHexLength {
            n,
            got: hex.len(),
            expected,
        });
    }
    let bits: Vec<bool> = hex
        .chars()
        .flat_map(|c| {
            let d = c.to_digit(16).unwrap_or(0);
            (0..4).rev().map(move |b| (d >> b) & 1 == 1)
        })
        .collect();
    if bits[len..].iter().any(|&b| b) {
        return Err(Error::InvalidSpec(format!(
            "hex table `{hex}` has bits set past the 2^{n} entries"
        )));
    }
    BoolFn::from_fn(n, |x| bits[x])
}

/// Hex encoding matching the `table:` grammar.
pub fn to_hex(f: &BoolFn) -> String {
    let len = f.table.len();
    let digits = len.div_ceil(4);
    (0..digits)
        .map(|d| {
            let v = (0..4).fold(0u32, |acc, b| {
                let idx = 4 * d + b;
                acc << 1 | u32::from(idx < len && f.table[idx] > 0)
            });
            char::from_digit(v, 16).unwrap_or('0')
        })
        .collect()
}

/// A random decision-tree target together with the tree that generated it.
#[derive(Clone, Debug)]
pub struct RandomDt {
    pub f: BoolFn,
    pub tree: CompletedTree,
    pub size: usize,
    pub depth: usize,
}

/// Grows a random tree by splitting a uniformly chosen splittable leaf on a
/// uniformly chosen variable not yet on its path, until `s` leaves, then
/// labels leaves uniformly at random.
pub fn random_dt_target(n: usize, s: usize, seed: u64) -> Result<RandomDt> {
    check_size(n, DEFAULT_MAX_VARS)?;
    if s == 0 {
        return Err(Error::BudgetZero);
    }
    if n < usize::BITS as usize - 1 && s > 1usize << n {
        return Err(Error::SizeExceedsDomain { size: s, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = tree::random_tree(n, s, &mut rng)?;
    let f = tree.to_boolfn()?.with_origin(format!("dt:{seed}:{s}@n={n}"));
    Ok(RandomDt {
        size: tree.size(),
        depth: tree.depth(),
        f,
        tree,
    })
}
