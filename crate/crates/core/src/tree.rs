//! Partial and completed decision trees over `n` global variables.
//!
//! Left children take the `x_i = -1` branch, right children `x_i = +1`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolfn::{BoolFn, Restriction};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Internal {
        var: usize,
        left: NodeId,
        right: NodeId,
    },
    Leaf,
}

/// A decision tree with unlabeled leaves. Node ids are assigned in creation
/// order; the root is node 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialTree {
    n: usize,
    nodes: Vec<Node>,
    paths: Vec<Restriction>,
    leaf_count: usize,
}

impl PartialTree {
    /// The empty tree: a single root leaf.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            nodes: vec![Node::Leaf],
            paths: vec![Restriction::empty()],
            leaf_count: 1,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.nodes.get(id), Some(Node::Leaf))
    }

    /// Leaf ids in ascending order.
    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&id| self.is_leaf(id)).collect()
    }

    /// Root-to-node path as a restriction over global variables.
    pub fn path(&self, id: NodeId) -> &Restriction {
        &self.paths[id]
    }

    pub fn depth_of(&self, id: NodeId) -> usize {
        self.paths[id].len()
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        self.leaf_count
    }

    pub fn depth(&self) -> usize {
        self.leaves()
            .into_iter()
            .map(|l| self.depth_of(l))
            .max()
            .unwrap_or(0)
    }

    /// `Σ_leaves 2^{-|ℓ|}`.
    pub fn leaf_weight_sum(&self) -> f64 {
        self.leaves()
            .into_iter()
            .map(|l| leaf_weight(self.depth_of(l)))
            .sum()
    }

    /// Replaces `leaf` by a query to `x_var`; returns the new `(left, right)`
    /// leaf ids for the `-1` and `+1` branches.
    pub fn split_leaf(&mut self, leaf: NodeId, var: usize) -> Result<(NodeId, NodeId)> {
        if !self.is_leaf(leaf) {
            return Err(Error::NotALeaf(leaf));
        }
        if var == 0 || var > self.n {
            return Err(Error::var_out_of_range(var, self.n));
        }
        if self.paths[leaf].contains(var) {
            return Err(Error::VariableOnPath(var));
        }
        let left = self.nodes.len();
        let right = left + 1;
        let lp = self.paths[leaf].extended(var, -1)?;
        let rp = self.paths[leaf].extended(var, 1)?;
        self.nodes[leaf] = Node::Internal { var, left, right };
        self.nodes.push(Node::Leaf);
        self.nodes.push(Node::Leaf);
        self.paths.push(lp);
        self.paths.push(rp);
        self.leaf_count += 1;
        Ok((left, right))
    }

    /// Non-mutating form of [`PartialTree::split_leaf`].
    pub fn split(&self, leaf: NodeId, var: usize) -> Result<PartialTree> {
        let mut t = self.clone();
        t.split_leaf(leaf, var)?;
        Ok(t)
    }

    /// Leaf reached by input `x` (bitmask over the `n` global variables).
    pub fn leaf_for(&self, x: usize) -> NodeId {
        let mut id = 0;
        while let Node::Internal { var, left, right } = self.nodes[id] {
            id = if (x >> (var - 1)) & 1 == 1 { right } else { left };
        }
        id
    }

    /// `λ_i = Pr[the tree queries x_i]` for `i = 1..=n` (index `i - 1`).
    pub fn query_probabilities(&self) -> Vec<f64> {
        let mut lambda = vec![0.0; self.n];
        for (id, node) in self.nodes.iter().enumerate() {
            if let Node::Internal { var, .. } = node {
                lambda[var - 1] += leaf_weight(self.depth_of(id));
            }
        }
        lambda
    }
}

/// `2^{-depth}`.
pub fn leaf_weight(depth: usize) -> f64 {
    0.5f64.powi(depth as i32)
}

/// A partial tree with a ±1 label on every leaf.
#[derive(Clone, Debug)]
pub struct CompletedTree {
    tree: PartialTree,
    labels: Vec<i8>,
}

impl PartialEq for CompletedTree {
    fn eq(&self, other: &Self) -> bool {
        self.tree.n == other.tree.n && self.to_sexpr() == other.to_sexpr()
    }
}

impl CompletedTree {
    /// Labels are given per leaf id; entries for internal nodes are ignored.
    pub fn new(tree: PartialTree, labels: &HashMap<NodeId, i8>) -> Result<Self> {
        let mut out = vec![0i8; tree.node_count()];
        for leaf in tree.leaves() {
            match labels.get(&leaf) {
                Some(&v) if v == 1 || v == -1 => out[leaf] = v,
                _ => {
                    return Err(Error::IndexOutOfRange {
                        index: leaf,
                        range: "every leaf needs a ±1 label".into(),
                    })
                }
            }
        }
        Ok(Self { tree, labels: out })
    }

    /// A single leaf with the given label.
    pub fn constant(n: usize, label: i8) -> Self {
        Self {
            tree: PartialTree::new(n),
            labels: vec![label],
        }
    }

    pub fn partial(&self) -> &PartialTree {
        &self.tree
    }

    pub fn n(&self) -> usize {
        self.tree.n
    }

    pub fn size(&self) -> usize {
        self.tree.size()
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn label(&self, leaf: NodeId) -> Option<i8> {
        self.tree.is_leaf(leaf).then(|| self.labels[leaf])
    }

    pub fn evaluate(&self, x: usize) -> i8 {
        self.labels[self.tree.leaf_for(x)]
    }

    pub fn to_boolfn(&self) -> Result<BoolFn> {
        BoolFn::from_fn(self.tree.n, |x| self.evaluate(x) > 0)
    }

    /// The same tree cut at `max_depth`: leaves below the cut are replaced by
    /// a leaf labeled `fill`.
    pub fn truncated(&self, max_depth: usize, fill: i8) -> CompletedTree {
        let shape = self.shape_from(0, max_depth, fill);
        CompletedTree::from_shape(self.tree.n, &shape)
    }

    fn shape_from(&self, id: NodeId, budget: usize, fill: i8) -> Shape {
        match self.tree.nodes[id] {
            Node::Leaf => Shape::Leaf(self.labels[id]),
            Node::Internal { .. } if budget == 0 => Shape::Leaf(fill),
            Node::Internal { var, left, right } => Shape::Split(
                var,
                Box::new(self.shape_from(left, budget - 1, fill)),
                Box::new(self.shape_from(right, budget - 1, fill)),
            ),
        }
    }

    fn to_shape(&self) -> Shape {
        self.shape_from(0, usize::MAX, 1)
    }

    fn from_shape(n: usize, shape: &Shape) -> CompletedTree {
        fn grow(tree: &mut PartialTree, labels: &mut HashMap<NodeId, i8>, id: NodeId, shape: &Shape) {
            match shape {
                Shape::Leaf(v) => {
                    labels.insert(id, *v);
                }
                Shape::Split(var, l, r) => {
                    let (li, ri) = tree
                        .split_leaf(id, *var)
                        .expect("shape variables are valid by construction");
                    grow(tree, labels, li, l);
                    grow(tree, labels, ri, r);
                }
            }
        }
        let mut tree = PartialTree::new(n);
        let mut labels = HashMap::new();
        grow(&mut tree, &mut labels, 0, shape);
        CompletedTree::new(tree, &labels).expect("all leaves labeled")
    }

    /// S-expression form: `(split <var> <left> <right>)` / `(leaf +1|-1)`.
    pub fn to_sexpr(&self) -> String {
        fn emit(out: &mut String, shape: &Shape) {
            match shape {
                Shape::Leaf(v) => {
                    let _ = write!(out, "(leaf {})", if *v > 0 { "+1" } else { "-1" });
                }
                Shape::Split(var, l, r) => {
                    let _ = write!(out, "(split {var} ");
                    emit(out, l);
                    out.push(' ');
                    emit(out, r);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        emit(&mut out, &self.to_shape());
        out
    }

    /// Parses an s-expression tree; `n` is the largest variable index used.
    pub fn parse(text: &str) -> Result<CompletedTree> {
        let shape = SexprParser::new(text).parse_tree()?;
        let n = shape.max_var();
        Ok(CompletedTree::from_shape(n, &shape))
    }

    /// Parses an s-expression tree over an explicit ambient `n`.
    pub fn parse_with_n(text: &str, n: usize) -> Result<CompletedTree> {
        let shape = SexprParser::new(text).parse_tree()?;
        if shape.max_var() > n {
            return Err(Error::var_out_of_range(shape.max_var(), n));
        }
        Ok(CompletedTree::from_shape(n, &shape))
    }

    pub fn to_json(&self) -> TreeJson {
        fn conv(shape: &Shape) -> TreeJson {
            match shape {
                Shape::Leaf(v) => TreeJson::Leaf { label: *v },
                Shape::Split(var, l, r) => TreeJson::Split {
                    var: *var,
                    left: Box::new(conv(l)),
                    right: Box::new(conv(r)),
                },
            }
        }
        conv(&self.to_shape())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Shape {
    Leaf(i8),
    Split(usize, Box<Shape>, Box<Shape>),
}

impl Shape {
    fn max_var(&self) -> usize {
        match self {
            Shape::Leaf(_) => 0,
            Shape::Split(v, l, r) => (*v).max(l.max_var()).max(r.max_var()),
        }
    }

    fn check_paths(&self, path: &mut Vec<usize>) -> std::result::Result<(), usize> {
        match self {
            Shape::Leaf(_) => Ok(()),
            Shape::Split(v, l, r) => {
                if path.contains(v) {
                    return Err(*v);
                }
                path.push(*v);
                l.check_paths(path)?;
                r.check_paths(path)?;
                path.pop();
                Ok(())
            }
        }
    }
}

/// JSON tree form: `{type: "split", var, left, right}` / `{type: "leaf", label}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeJson {
    Split {
        var: usize,
        left: Box<TreeJson>,
        right: Box<TreeJson>,
    },
    Leaf {
        label: i8,
    },
}

struct SexprParser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> SexprParser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(self.error(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{want}`, found end of input"))),
        }
    }

    fn atom(&mut self) -> Result<String> {
        self.skip_ws();
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            s.push(c);
            self.bump();
        }
        if s.is_empty() {
            Err(self.error("expected an atom"))
        } else {
            Ok(s)
        }
    }

    fn parse_tree(mut self) -> Result<Shape> {
        let shape = self.node()?;
        self.skip_ws();
        if self.chars.peek().is_some() {
            return Err(self.error("trailing input after tree"));
        }
        let mut path = Vec::new();
        if let Err(v) = shape.check_paths(&mut path) {
            return Err(Error::VariableOnPath(v));
        }
        Ok(shape)
    }

    fn node(&mut self) -> Result<Shape> {
        self.expect('(')?;
        let head = self.atom()?;
        let shape = match head.as_str() {
            "leaf" => {
                let label = self.atom()?;
                match label.as_str() {
                    "+1" | "1" => Shape::Leaf(1),
                    "-1" => Shape::Leaf(-1),
                    other => return Err(self.error(format!("bad leaf label `{other}`"))),
                }
            }
            "split" => {
                let var_text = self.atom()?;
                let var: usize = var_text
                    .parse()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| self.error(format!("bad variable `{var_text}`")))?;
                let left = self.node()?;
                let right = self.node()?;
                Shape::Split(var, Box::new(left), Box::new(right))
            }
            other => return Err(self.error(format!("unknown node `{other}`"))),
        };
        self.expect(')')?;
        Ok(shape)
    }
}

/// Labels every leaf with `sign(E[f_ℓ])`, `sign(0) = +1`.
pub fn f_completion(tree: &PartialTree, f: &BoolFn) -> Result<CompletedTree> {
    check_dims(tree.n(), f.n())?;
    let mut plus = vec![0usize; tree.node_count()];
    let mut total = vec![0usize; tree.node_count()];
    for (x, &v) in f.table().iter().enumerate() {
        let leaf = tree.leaf_for(x);
        total[leaf] += 1;
        if v > 0 {
            plus[leaf] += 1;
        }
    }
    let labels = tree
        .leaves()
        .into_iter()
        .map(|l| (l, if 2 * plus[l] >= total[l] { 1 } else { -1 }))
        .collect();
    CompletedTree::new(tree.clone(), &labels)
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        Err(Error::DimensionMismatch { left, right })
    } else {
        Ok(())
    }
}

/// `Pr[f(x) != T(x)]` by enumerating every input.
pub fn tree_error(tree: &CompletedTree, f: &BoolFn) -> Result<f64> {
    check_dims(tree.n(), f.n())?;
    let wrong = f
        .table()
        .iter()
        .enumerate()
        .filter(|&(x, &v)| tree.evaluate(x) != v)
        .count();
    Ok(wrong as f64 / f.table().len() as f64)
}

/// Same quantity as [`tree_error`], summed leaf by leaf over restrictions.
pub fn tree_error_by_leaves(tree: &CompletedTree, f: &BoolFn) -> Result<f64> {
    check_dims(tree.n(), f.n())?;
    let mut err = 0.0;
    for leaf in tree.partial().leaves() {
        let sub = f.restrict_global(tree.partial().path(leaf))?;
        let label = tree.labels[leaf];
        let wrong = sub.table().iter().filter(|&&v| v != label).count();
        err += leaf_weight(tree.partial().depth_of(leaf)) * wrong as f64 / sub.table().len() as f64;
    }
    Ok(err)
}

/// Caps for [`opt_brute`].
pub const OPT_BRUTE_MAX_VARS: usize = 4;
pub const OPT_BRUTE_MAX_SIZE: usize = 8;

/// Minimum error over all trees with at most `s` leaves, plus a minimizer.
///
/// Every tree shape with non-repeating path variables is explored; since
/// subtrees over disjoint subcubes contribute independently to the error, the
/// search keeps only the best subtree per (subcube, leaf budget) pair.
pub fn opt_brute(f: &BoolFn, s: usize) -> Result<(f64, CompletedTree)> {
    if f.n() > OPT_BRUTE_MAX_VARS || s > OPT_BRUTE_MAX_SIZE {
        return Err(Error::InstanceTooLarge(format!(
            "n = {}, s = {} (caps n <= {OPT_BRUTE_MAX_VARS}, s <= {OPT_BRUTE_MAX_SIZE})",
            f.n(),
            s
        )));
    }
    if s == 0 {
        return Err(Error::BudgetZero);
    }
    let mut search = OptSearch {
        f,
        memo: HashMap::new(),
    };
    let (wrong, shape) = search.best(0, 0, s);
    let err = wrong as f64 / f.table().len() as f64;
    Ok((err, CompletedTree::from_shape(f.n(), &shape)))
}

struct OptSearch<'a> {
    f: &'a BoolFn,
    memo: HashMap<(usize, usize, usize), (usize, Shape)>,
}

impl OptSearch<'_> {
    /// Fewest misclassified inputs in the subcube `(fixed, values)` using at
    /// most `budget` leaves.
    fn best(&mut self, fixed: usize, values: usize, budget: usize) -> (usize, Shape) {
        if let Some(hit) = self.memo.get(&(fixed, values, budget)) {
            return hit.clone();
        }
        let n = self.f.n();
        let (mut plus, mut total) = (0, 0);
        for (x, &v) in self.f.table().iter().enumerate() {
            if x & fixed == values {
                total += 1;
                if v > 0 {
                    plus += 1;
                }
            }
        }
        let label = if 2 * plus >= total { 1 } else { -1 };
        let mut best = (plus.min(total - plus), Shape::Leaf(label));
        if budget >= 2 {
            for var in 1..=n {
                let bit = 1 << (var - 1);
                if fixed & bit != 0 {
                    continue;
                }
                for left_budget in 1..budget {
                    let (lw, ls) = self.best(fixed | bit, values, left_budget);
                    let (rw, rs) = self.best(fixed | bit, values | bit, budget - left_budget);
                    if lw + rw < best.0 {
                        best = (lw + rw, Shape::Split(var, Box::new(ls), Box::new(rs)));
                    }
                }
            }
        }
        self.memo.insert((fixed, values, budget), best.clone());
        best
    }
}

/// Random tree with exactly `s` leaves; see [`crate::boolfn::random_dt_target`].
pub fn random_tree(n: usize, s: usize, rng: &mut impl Rng) -> Result<CompletedTree> {
    let mut tree = PartialTree::new(n);
    while tree.size() < s {
        let splittable: Vec<NodeId> = tree
            .leaves()
            .into_iter()
            .filter(|&l| tree.depth_of(l) < n)
            .collect();
        if splittable.is_empty() {
            return Err(Error::SizeExceedsDomain { size: s, n });
        }
        let leaf = splittable[rng.gen_range(0..splittable.len())];
        let free: Vec<usize> = (1..=n).filter(|&v| !tree.path(leaf).contains(v)).collect();
        let var = free[rng.gen_range(0..free.len())];
        tree.split_leaf(leaf, var)?;
    }
    let labels = tree
        .leaves()
        .into_iter()
        .map(|l| (l, if rng.gen_bool(0.5) { 1 } else { -1 }))
        .collect();
    CompletedTree::new(tree, &labels)
}

/// A function computed by some small tree, with one generating tree.
#[derive(Clone, Debug)]
pub struct DtTarget {
    pub f: BoolFn,
    pub tree: CompletedTree,
    pub size: usize,
    pub depth: usize,
}

#[derive(Clone, Copy)]
enum Make {
    Leaf(i8),
    Split { var: usize, sub: usize, left: usize, right: usize },
}

#[derive(Clone, Copy)]
struct Enumerated {
    table: u64,
    size: usize,
    depth: usize,
    make: Make,
}

/// Every distinct `(truth table, size, depth)` triple realized by a labeled
/// tree over `n ≤ 4` variables with at most `max_size` leaves. Together the
/// triples cover every such tree, since the bounds that consume them depend on
/// nothing else.
pub fn enumerate_dt_targets(n: usize, max_size: usize) -> Result<Vec<DtTarget>> {
    if n > OPT_BRUTE_MAX_VARS || max_size > OPT_BRUTE_MAX_SIZE || max_size == 0 {
        return Err(Error::InstanceTooLarge(format!(
            "enumeration needs n ≤ {OPT_BRUTE_MAX_VARS} and 1 ≤ size ≤ {OPT_BRUTE_MAX_SIZE}, got n={n}, size={max_size}"
        )));
    }
    let cube = 1usize << n;
    let full: u64 = if cube == 64 { u64::MAX } else { (1u64 << cube) - 1 };
    let var_masks: Vec<u64> = (0..n)
        .map(|v| (0..cube).filter(|x| (x >> v) & 1 == 1).fold(0u64, |m, x| m | (1 << x)))
        .collect();

    let mut memo: Vec<Option<Vec<Enumerated>>> = vec![None; 1 << n];
    fn fill(avail: usize, n: usize, max_size: usize, full: u64, var_masks: &[u64], memo: &mut Vec<Option<Vec<Enumerated>>>) {
        if memo[avail].is_some() {
            return;
        }
        let mut out = vec![
            Enumerated { table: 0, size: 1, depth: 0, make: Make::Leaf(-1) },
            Enumerated { table: full, size: 1, depth: 0, make: Make::Leaf(1) },
        ];
        let mut seen: std::collections::HashSet<(u64, usize, usize)> = out.iter().map(|e| (e.table, e.size, e.depth)).collect();
        for v in 0..n {
            if (avail >> v) & 1 == 0 {
                continue;
            }
            let sub = avail & !(1 << v);
            fill(sub, n, max_size, full, var_masks, memo);
            let parts = memo[sub].as_ref().expect("filled above");
            for (li, l) in parts.iter().enumerate() {
                for (ri, r) in parts.iter().enumerate() {
                    if l.size + r.size > max_size {
                        continue;
                    }
                    let table = (l.table & !var_masks[v] & full) | (r.table & var_masks[v]);
                    let key = (table, l.size + r.size, 1 + l.depth.max(r.depth));
                    if seen.insert(key) {
                        out.push(Enumerated {
                            table,
                            size: key.1,
                            depth: key.2,
                            make: Make::Split { var: v + 1, sub, left: li, right: ri },
                        });
                    }
                }
            }
        }
        memo[avail] = Some(out);
    }
    let top = (1 << n) - 1;
    fill(top, n, max_size, full, &var_masks, &mut memo);

    fn shape(memo: &[Option<Vec<Enumerated>>], avail: usize, idx: usize) -> Shape {
        let e = memo[avail].as_ref().expect("filled")[idx];
        match e.make {
            Make::Leaf(v) => Shape::Leaf(v),
            Make::Split { var, sub, left, right } => Shape::Split(
                var,
                Box::new(shape(memo, sub, left)),
                Box::new(shape(memo, sub, right)),
            ),
        }
    }
    memo[top]
        .as_ref()
        .expect("filled")
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            let f = BoolFn::from_fn(n, |x| (e.table >> x) & 1 == 1)?;
            let tree = CompletedTree::from_shape(n, &shape(&memo, top, idx));
            Ok(DtTarget { f, tree, size: e.size, depth: e.depth })
        })
        .collect()
}

/// One split of a top-down induction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Size of the tree being split (`j` for `T°_j`).
    pub iter: usize,
    /// Path of the split leaf, e.g. `x1=-1&x4=+1` (`root` for the empty path).
    pub leaf: String,
    pub var: usize,
    pub score: f64,
    /// `NS_δ(f, T°)` after the split.
    pub potential: f64,
    /// Error of the f-completion after the split.
    pub error: f64,
}

pub const TRACE_CSV_HEADER: &str = "iter,leaf,var,score,potential,error";

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iter, r.leaf, r.var, r.score, r.potential, r.error
        );
    }
    out
}
