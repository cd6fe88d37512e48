//! Tree-based GP programs.
//!
//! A [`ProgramTree`] is stored as its pre-order gene sequence, so every
//! subtree is a contiguous slice and crossover is a splice. All arithmetic
//! is protected: division by a near-zero denominator yields 1.0 and results
//! saturate at ±[`VALUE_LIMIT`], so evaluation never produces NaN or ∞.

use std::fmt;
use std::ops::{Deref, Range};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

/// Magnitude at which intermediate results saturate.
pub const VALUE_LIMIT: f64 = 1e100;
/// Denominators with smaller magnitude make protected division return 1.0.
pub const DIVISION_EPSILON: f64 = 1e-9;
/// Probability that a crossover point is drawn from the function nodes.
pub const FUNCTION_POINT_BIAS: f64 = 0.9;
/// Point re-selections before crossover gives up and copies the parents.
pub const CROSSOVER_ATTEMPTS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum GpError {
    #[error("primitive set has no functions")]
    NoFunctions,
    #[error("primitive set has no feature terminals")]
    NoFeatures,
    #[error("population size {0} is below 2")]
    PopulationSize(usize),
    #[error("invalid depth range [{min}, {max}]")]
    DepthRange { min: usize, max: usize },
    #[error("invalid constant range [{0}, {1}]")]
    ConstRange(f64, f64),
    #[error("cannot parse program: {0}")]
    Parse(String),
    #[error("feature x{index} out of range for {n_features} features")]
    FeatureIndex { index: usize, n_features: usize },
    #[error("program depth {depth} exceeds limit {limit}")]
    TooDeep { depth: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    /// Protected division.
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let v = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b.abs() < DIVISION_EPSILON {
                    1.0
                } else {
                    a / b
                }
            }
        };
        v.clamp(-VALUE_LIMIT, VALUE_LIMIT)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
        }
    }

    fn from_symbol(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.symbol() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gene {
    Func(Op),
    Feature(usize),
    Const(f64),
}

impl Gene {
    #[inline]
    pub fn arity(&self) -> usize {
        match self {
            Gene::Func(_) => 2,
            _ => 0,
        }
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Gene::Func(_))
    }
}

/// Functions and terminals available to tree construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSet {
    functions: Vec<Op>,
    n_features: usize,
    const_range: (f64, f64),
}

impl PrimitiveSet {
    pub fn new(
        functions: Vec<Op>,
        n_features: usize,
        const_range: (f64, f64),
    ) -> Result<Self, GpError> {
        if functions.is_empty() {
            return Err(GpError::NoFunctions);
        }
        if n_features == 0 {
            return Err(GpError::NoFeatures);
        }
        let (lo, hi) = const_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(GpError::ConstRange(lo, hi));
        }
        Ok(PrimitiveSet {
            functions,
            n_features,
            const_range,
        })
    }

    /// `{+, −, ×, ÷}` over `n_features` inputs with constants in [−1, 1].
    pub fn arithmetic(n_features: usize) -> Result<Self, GpError> {
        Self::new(Op::ALL.to_vec(), n_features, (-1.0, 1.0))
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Terminal symbols: one per feature plus the ephemeral constant.
    fn n_terminals(&self) -> usize {
        self.n_features + 1
    }

    fn random_function<R: Rng + ?Sized>(&self, rng: &mut R) -> Gene {
        Gene::Func(self.functions[rng.random_range(0..self.functions.len())])
    }

    fn random_terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> Gene {
        let k = rng.random_range(0..self.n_terminals());
        if k == self.n_features {
            let (lo, hi) = self.const_range;
            Gene::Const(if lo == hi { lo } else { rng.random_range(lo..=hi) })
        } else {
            Gene::Feature(k)
        }
    }

    fn full<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R, out: &mut Vec<Gene>) {
        if depth == 0 {
            out.push(self.random_terminal(rng));
        } else {
            out.push(self.random_function(rng));
            self.full(depth - 1, rng, out);
            self.full(depth - 1, rng, out);
        }
    }

    fn grow<R: Rng + ?Sized>(
        &self,
        depth: usize,
        force_function: bool,
        rng: &mut R,
        out: &mut Vec<Gene>,
    ) {
        let n_func = self.functions.len();
        let pick_function = depth > 0
            && (force_function || rng.random_range(0..n_func + self.n_terminals()) < n_func);
        if pick_function {
            out.push(self.random_function(rng));
            self.grow(depth - 1, false, rng, out);
            self.grow(depth - 1, false, rng, out);
        } else {
            out.push(self.random_terminal(rng));
        }
    }

    /// A fresh grow-method tree of depth at most `depth`.
    pub fn grow_tree<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> ProgramTree {
        let mut genes = Vec::new();
        self.grow(depth, false, rng, &mut genes);
        ProgramTree { genes }
    }
}

/// A GP program in pre-order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramTree {
    genes: Vec<Gene>,
}

impl ProgramTree {
    /// Wraps a pre-order gene sequence, checking that arities close exactly.
    pub fn from_genes(genes: Vec<Gene>) -> Result<Self, GpError> {
        let mut need = 1usize;
        for (i, g) in genes.iter().enumerate() {
            if need == 0 {
                return Err(GpError::Parse(format!("trailing genes from position {i}")));
            }
            need = need - 1 + g.arity();
        }
        if need != 0 || genes.is_empty() {
            return Err(GpError::Parse("incomplete gene sequence".into()));
        }
        Ok(ProgramTree { genes })
    }

    pub fn terminal(gene: Gene) -> Self {
        assert_eq!(gene.arity(), 0, "terminal gene expected");
        ProgramTree { genes: vec![gene] }
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    /// Number of nodes (functions + terminals).
    pub fn node_count(&self) -> usize {
        self.genes.len()
    }

    /// Depth with the root at depth 0.
    pub fn depth(&self) -> usize {
        node_depths(&self.genes).into_iter().max().unwrap_or(0)
    }

    /// Pre-order index range of the subtree rooted at `start`.
    pub fn subtree(&self, start: usize) -> Range<usize> {
        start..subtree_end(&self.genes, start)
    }

    /// Checks the arity, depth and feature-bound invariants.
    pub fn validate(&self, n_features: usize, max_depth: usize) -> Result<(), GpError> {
        Self::from_genes(self.genes.clone())?;
        for g in &self.genes {
            if let Gene::Feature(index) = *g {
                if index >= n_features {
                    return Err(GpError::FeatureIndex { index, n_features });
                }
            }
        }
        let depth = self.depth();
        if depth > max_depth {
            return Err(GpError::TooDeep {
                depth,
                limit: max_depth,
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, inputs: &Inputs) -> SemanticsVector {
        SemanticsVector(evaluate_genes(&self.genes, inputs))
    }

    /// Semantics of the subtree occupying `range`.
    pub fn evaluate_subtree(&self, range: Range<usize>, inputs: &Inputs) -> SemanticsVector {
        SemanticsVector(evaluate_genes(&self.genes[range], inputs))
    }

    fn splice(&self, at: Range<usize>, donor: &[Gene]) -> ProgramTree {
        let mut genes = Vec::with_capacity(self.genes.len() - at.len() + donor.len());
        genes.extend_from_slice(&self.genes[..at.start]);
        genes.extend_from_slice(donor);
        genes.extend_from_slice(&self.genes[at.end..]);
        ProgramTree { genes }
    }
}

fn subtree_end(genes: &[Gene], start: usize) -> usize {
    let mut need = 1usize;
    let mut i = start;
    while need > 0 {
        need = need - 1 + genes[i].arity();
        i += 1;
    }
    i
}

fn node_depths(genes: &[Gene]) -> Vec<usize> {
    let mut depths = Vec::with_capacity(genes.len());
    // (depth of children, children still to place) per open function node
    let mut open: Vec<(usize, usize)> = Vec::new();
    for g in genes {
        let d = match open.last_mut() {
            Some((child_depth, remaining)) => {
                *remaining -= 1;
                *child_depth
            }
            None => 0,
        };
        if matches!(open.last(), Some((_, 0))) {
            open.pop();
        }
        depths.push(d);
        if g.arity() > 0 {
            open.push((d + 1, g.arity()));
        }
    }
    depths
}

/// Feature-major view of a dataset's inputs used for vectorised evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    columns: Vec<Vec<f64>>,
    len: usize,
}

impl Inputs {
    pub fn new(columns: Vec<Vec<f64>>) -> Self {
        let len = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == len), "ragged columns");
        Inputs { columns, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

impl From<&Dataset> for Inputs {
    fn from(ds: &Dataset) -> Self {
        Inputs::new(ds.columns())
    }
}

fn evaluate_genes(genes: &[Gene], inputs: &Inputs) -> Vec<f64> {
    let n = inputs.len;
    let mut stack: Vec<Vec<f64>> = Vec::new();
    let mut spare: Vec<Vec<f64>> = Vec::new();
    for gene in genes.iter().rev() {
        match *gene {
            Gene::Feature(k) => {
                let mut buf = spare.pop().unwrap_or_default();
                buf.clear();
                buf.extend_from_slice(&inputs.columns[k]);
                stack.push(buf);
            }
            Gene::Const(c) => {
                let mut buf = spare.pop().unwrap_or_default();
                buf.clear();
                buf.resize(n, c);
                stack.push(buf);
            }
            Gene::Func(op) => {
                let mut left = stack.pop().expect("well-formed program");
                let right = stack.pop().expect("well-formed program");
                for (l, r) in left.iter_mut().zip(&right) {
                    *l = op.apply(*l, *r);
                }
                stack.push(left);
                spare.push(right);
            }
        }
    }
    stack.pop().expect("non-empty program")
}

/// Outputs of a program on each fitness case, in dataset order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SemanticsVector(pub Vec<f64>);

impl Deref for SemanticsVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for SemanticsVector {
    fn from(v: Vec<f64>) -> Self {
        SemanticsVector(v)
    }
}

/// Runs `tree` on every case of `ds`.
pub fn evaluate_semantics(tree: &ProgramTree, ds: &Dataset) -> SemanticsVector {
    tree.evaluate(&Inputs::from(ds))
}

/// Ramped half-and-half: depths cycle through `[min_depth, max_depth]` in
/// pairs, and within a pair the first tree uses the full method and the
/// second the grow method. Grow trees always have a function at the root.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    pop_size: usize,
    min_depth: usize,
    max_depth: usize,
    primitives: &PrimitiveSet,
    rng: &mut R,
) -> Result<Vec<ProgramTree>, GpError> {
    if pop_size < 2 {
        return Err(GpError::PopulationSize(pop_size));
    }
    if min_depth < 1 || min_depth > max_depth {
        return Err(GpError::DepthRange {
            min: min_depth,
            max: max_depth,
        });
    }
    let n_depths = max_depth - min_depth + 1;
    Ok((0..pop_size)
        .map(|i| {
            let depth = min_depth + (i / 2) % n_depths;
            let mut genes = Vec::new();
            if i % 2 == 0 {
                primitives.full(depth, rng, &mut genes);
            } else {
                primitives.grow(depth, true, rng, &mut genes);
            }
            ProgramTree { genes }
        })
        .collect())
}

fn select_point<R: Rng + ?Sized>(tree: &ProgramTree, rng: &mut R) -> usize {
    let (funcs, terms): (Vec<usize>, Vec<usize>) =
        (0..tree.genes.len()).partition(|&i| tree.genes[i].is_function());
    if !funcs.is_empty() && rng.random_bool(FUNCTION_POINT_BIAS) {
        funcs[rng.random_range(0..funcs.len())]
    } else {
        terms[rng.random_range(0..terms.len())]
    }
}

/// Result of one subtree crossover, including which subtrees were swapped.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverOutcome {
    pub offspring: (ProgramTree, ProgramTree),
    /// Swapped ranges in the first and second parent, or `None` when no
    /// attempt satisfied the depth limit.
    pub exchanged: Option<(Range<usize>, Range<usize>)>,
}

/// Subtree crossover that also reports the exchanged subtrees.
///
/// Point selection is retried up to [`CROSSOVER_ATTEMPTS`] times when an
/// offspring would exceed `max_depth`; after that, any offspring still over
/// the limit is replaced by a copy of its parent.
pub fn crossover_with_points<R: Rng + ?Sized>(
    p1: &ProgramTree,
    p2: &ProgramTree,
    rng: &mut R,
    max_depth: usize,
) -> CrossoverOutcome {
    let mut last = None;
    for _ in 0..CROSSOVER_ATTEMPTS {
        let r1 = p1.subtree(select_point(p1, rng));
        let r2 = p2.subtree(select_point(p2, rng));
        let c1 = p1.splice(r1.clone(), &p2.genes[r2.clone()]);
        let c2 = p2.splice(r2.clone(), &p1.genes[r1.clone()]);
        let ok1 = c1.depth() <= max_depth;
        let ok2 = c2.depth() <= max_depth;
        if ok1 && ok2 {
            return CrossoverOutcome {
                offspring: (c1, c2),
                exchanged: Some((r1, r2)),
            };
        }
        last = Some((c1, ok1, c2, ok2));
    }
    let (c1, ok1, c2, ok2) = last.expect("at least one attempt");
    CrossoverOutcome {
        offspring: (
            if ok1 { c1 } else { p1.clone() },
            if ok2 { c2 } else { p2.clone() },
        ),
        exchanged: None,
    }
}

pub fn subtree_crossover<R: Rng + ?Sized>(
    p1: &ProgramTree,
    p2: &ProgramTree,
    rng: &mut R,
    max_depth: usize,
) -> (ProgramTree, ProgramTree) {
    crossover_with_points(p1, p2, rng, max_depth).offspring
}

/// Replaces a uniformly chosen node's subtree with a fresh grow-method
/// subtree of depth at most `subtree_depth`, shortened so the result stays
/// within `max_depth`.
pub fn subtree_mutation<R: Rng + ?Sized>(
    parent: &ProgramTree,
    primitives: &PrimitiveSet,
    rng: &mut R,
    max_depth: usize,
    subtree_depth: usize,
) -> ProgramTree {
    let point = rng.random_range(0..parent.genes.len());
    let at_depth = node_depths(&parent.genes)[point];
    let budget = subtree_depth.min(max_depth.saturating_sub(at_depth));
    let fresh = primitives.grow_tree(budget, rng);
    parent.splice(parent.subtree(point), &fresh.genes)
}

impl fmt::Display for ProgramTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(genes: &[Gene], i: usize, f: &mut fmt::Formatter<'_>) -> Result<usize, fmt::Error> {
            match genes[i] {
                Gene::Func(op) => {
                    write!(f, "({} ", op.symbol())?;
                    let next = write_node(genes, i + 1, f)?;
                    f.write_str(" ")?;
                    let end = write_node(genes, next, f)?;
                    f.write_str(")")?;
                    Ok(end)
                }
                Gene::Feature(k) => write!(f, "x{k}").map(|_| i + 1),
                Gene::Const(c) => write!(f, "{c:?}").map(|_| i + 1),
            }
        }
        write_node(&self.genes, 0, f).map(|_| ())
    }
}

impl FromStr for ProgramTree {
    type Err = GpError;

    /// Parses the prefix form written by `Display`, e.g. `(+ x0 (* 0.5 x1))`.
    fn from_str(s: &str) -> Result<Self, GpError> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut genes = Vec::new();
        let mut pos = 0;
        parse_expr(&tokens, &mut pos, &mut genes)?;
        if pos != tokens.len() {
            return Err(GpError::Parse(format!("unexpected token {:?}", tokens[pos])));
        }
        Ok(ProgramTree { genes })
    }
}

fn parse_expr(tokens: &[&str], pos: &mut usize, out: &mut Vec<Gene>) -> Result<(), GpError> {
    let tok = *tokens
        .get(*pos)
        .ok_or_else(|| GpError::Parse("unexpected end of input".into()))?;
    *pos += 1;
    if tok == "(" {
        let sym = *tokens
            .get(*pos)
            .ok_or_else(|| GpError::Parse("unexpected end of input".into()))?;
        let op = Op::from_symbol(sym).ok_or_else(|| GpError::Parse(format!("unknown function {sym:?}")))?;
        *pos += 1;
        out.push(Gene::Func(op));
        parse_expr(tokens, pos, out)?;
        parse_expr(tokens, pos, out)?;
        if tokens.get(*pos) != Some(&")") {
            return Err(GpError::Parse("expected ')'".into()));
        }
        *pos += 1;
        Ok(())
    } else if let Some(idx) = tok.strip_prefix('x') {
        let k = idx
            .parse()
            .map_err(|_| GpError::Parse(format!("bad feature {tok:?}")))?;
        out.push(Gene::Feature(k));
        Ok(())
    } else {
        let c: f64 = tok
            .parse()
            .map_err(|_| GpError::Parse(format!("bad token {tok:?}")))?;
        out.push(Gene::Const(c));
        Ok(())
    }
}
