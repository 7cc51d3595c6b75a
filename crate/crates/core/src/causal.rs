//! Causal DAGs over the Bell-scenario variables and d-separation queries.
//!
//! The six built-in graphs cover the one-hidden-variable scheme and the two
//! three-hidden-variable schemes, each with and without the hidden variable
//! `λ` feeding the setting-side variables.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A variable of the Bell scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    A,
    B,
    X,
    Y,
    Lambda,
    Lambda1,
    Lambda2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Observed,
    Hidden,
}

impl Var {
    pub const ALL: [Var; 7] = [
        Var::A,
        Var::B,
        Var::X,
        Var::Y,
        Var::Lambda,
        Var::Lambda1,
        Var::Lambda2,
    ];

    pub fn kind(self) -> NodeKind {
        match self {
            Var::Lambda | Var::Lambda1 | Var::Lambda2 => NodeKind::Hidden,
            _ => NodeKind::Observed,
        }
    }

    /// ASCII name used by the text formats.
    pub fn name(self) -> &'static str {
        match self {
            Var::A => "a",
            Var::B => "b",
            Var::X => "x",
            Var::Y => "y",
            Var::Lambda => "l",
            Var::Lambda1 => "l1",
            Var::Lambda2 => "l2",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Var> {
        Ok(match s.trim() {
            "a" => Var::A,
            "b" => Var::B,
            "x" => Var::X,
            "y" => Var::Y,
            "l" | "lambda" | "λ" => Var::Lambda,
            "l1" | "lambda1" | "λ1" | "λ₁" => Var::Lambda1,
            "l2" | "lambda2" | "λ2" | "λ₂" => Var::Lambda2,
            other => return Err(Error::UnknownNode(other.to_string())),
        })
    }
}

/// A set of variables, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn contains(self, v: Var) -> bool {
        self.0 & v.bit() != 0
    }

    pub fn insert(&mut self, v: Var) {
        self.0 |= v.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: VarSet) -> VarSet {
        VarSet(self.0 & other.0)
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Var> {
        Var::ALL.into_iter().filter(move |v| self.contains(*v))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Set with exactly the members flagged in `mask` (bit `i` = `Var::ALL[i]`).
    pub fn from_bits(mask: u8) -> VarSet {
        VarSet(mask & 0x7f)
    }
}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> Self {
        let mut s = VarSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl From<Var> for VarSet {
    fn from(v: Var) -> Self {
        VarSet(v.bit())
    }
}

impl<const N: usize> From<[Var; N]> for VarSet {
    fn from(vars: [Var; N]) -> Self {
        vars.into_iter().collect()
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Var::name).collect();
        f.write_str(&names.join(","))
    }
}

/// Built-in causal structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    #[serde(rename = "1a")]
    OneA,
    #[serde(rename = "1b")]
    OneB,
    #[serde(rename = "2a")]
    TwoA,
    #[serde(rename = "2b")]
    TwoB,
    #[serde(rename = "3a")]
    ThreeA,
    #[serde(rename = "3b")]
    ThreeB,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::OneA,
        Figure::OneB,
        Figure::TwoA,
        Figure::TwoB,
        Figure::ThreeA,
        Figure::ThreeB,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Figure::OneA => "1a",
            Figure::OneB => "1b",
            Figure::TwoA => "2a",
            Figure::TwoB => "2b",
            Figure::ThreeA => "3a",
            Figure::ThreeB => "3b",
        }
    }

    /// True for the variants where `λ` is a parent of the setting-side variables.
    pub fn relaxes_mic(self) -> bool {
        matches!(self, Figure::OneB | Figure::TwoB | Figure::ThreeB)
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Figure> {
        Figure::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Directed acyclic graph over a subset of [`Var`]. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: VarSet,
    edges: Vec<(Var, Var)>,
    parents: [VarSet; 7],
    children: [VarSet; 7],
}

impl Dag {
    /// Builds a graph, rejecting duplicate nodes, dangling edges and cycles.
    pub fn new(nodes: &[Var], edges: &[(Var, Var)]) -> Result<Dag> {
        let mut set = VarSet::EMPTY;
        for &v in nodes {
            if set.contains(v) {
                return Err(Error::DuplicateNode(v.to_string()));
            }
            set.insert(v);
        }
        let mut dag = Dag {
            nodes: set,
            edges: Vec::new(),
            parents: [VarSet::EMPTY; 7],
            children: [VarSet::EMPTY; 7],
        };
        for &(from, to) in edges {
            dag = dag.with_edge(from, to)?;
        }
        Ok(dag)
    }

    /// Copy of this graph with one more edge.
    pub fn with_edge(&self, from: Var, to: Var) -> Result<Dag> {
        for v in [from, to] {
            if !self.nodes.contains(v) {
                return Err(Error::UnknownNode(v.to_string()));
            }
        }
        let mut dag = self.clone();
        if dag.children[from as usize].contains(to) {
            return Ok(dag);
        }
        // A cycle appears iff `from` is reachable from `to`.
        if from == to || dag.descendants(to.into()).contains(from) {
            return Err(Error::Cycle(from.to_string(), to.to_string()));
        }
        dag.edges.push((from, to));
        dag.children[from as usize].insert(to);
        dag.parents[to as usize].insert(from);
        Ok(dag)
    }

    pub fn builtin(figure: Figure) -> Dag {
        use Var::*;
        let base_one = [(X, A), (Y, B), (Lambda, A), (Lambda, B)];
        let base_two = [
            (Lambda1, X),
            (Lambda2, Y),
            (X, A),
            (Y, B),
            (Lambda, A),
            (Lambda, B),
        ];
        let base_three = [
            (Lambda1, X),
            (Lambda2, Y),
            (Lambda1, A),
            (Lambda2, B),
            (Lambda, A),
            (Lambda, B),
        ];
        let (nodes, mut edges): (&[Var], Vec<(Var, Var)>) = match figure {
            Figure::OneA | Figure::OneB => (&[A, B, X, Y, Lambda], base_one.to_vec()),
            Figure::TwoA | Figure::TwoB => (&Var::ALL, base_two.to_vec()),
            Figure::ThreeA | Figure::ThreeB => (&Var::ALL, base_three.to_vec()),
        };
        match figure {
            Figure::OneB => edges.extend([(Lambda, X), (Lambda, Y)]),
            Figure::TwoB | Figure::ThreeB => edges.extend([(Lambda, Lambda1), (Lambda, Lambda2)]),
            _ => {}
        }
        Dag::new(nodes, &edges).expect("built-in figures are acyclic")
    }

    /// The built-in figure this graph equals, if any.
    pub fn as_builtin(&self) -> Option<Figure> {
        Figure::ALL
            .into_iter()
            .find(|&f| Dag::builtin(f).same_structure(self))
    }

    fn same_structure(&self, other: &Dag) -> bool {
        self.nodes == other.nodes && self.children == other.children
    }

    pub fn nodes(&self) -> VarSet {
        self.nodes
    }

    pub fn edges(&self) -> &[(Var, Var)] {
        &self.edges
    }

    pub fn parents(&self, v: Var) -> VarSet {
        self.parents[v as usize]
    }

    pub fn children(&self, v: Var) -> VarSet {
        self.children[v as usize]
    }

    /// Strict descendants of `from`.
    pub fn descendants(&self, from: VarSet) -> VarSet {
        self.closure(from, |v| self.children(v))
    }

    /// `from` together with all its ancestors.
    pub fn ancestors_inclusive(&self, from: VarSet) -> VarSet {
        from.union(self.closure(from, |v| self.parents(v)))
    }

    fn closure(&self, from: VarSet, step: impl Fn(Var) -> VarSet) -> VarSet {
        let mut seen = VarSet::EMPTY;
        let mut stack: Vec<Var> = from.iter().collect();
        while let Some(v) = stack.pop() {
            for w in step(v).iter() {
                if !seen.contains(w) {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Edge list, one `parent -> child` per line; isolated nodes on their own line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(p, c) in &self.edges {
            out.push_str(&format!("{p} -> {c}\n"));
        }
        for v in self.nodes.iter() {
            if self.parents(v).is_empty() && self.children(v).is_empty() {
                out.push_str(&format!("{v}\n"));
            }
        }
        out
    }

    /// Parses the format produced by [`Dag::to_edge_list`]. `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Dag> {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let note = |v: Var, nodes: &mut Vec<Var>| {
            if !nodes.contains(&v) {
                nodes.push(v);
            }
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |detail: String| Error::Parse {
                what: "edge list",
                detail: format!("line {}: {detail}", lineno + 1),
            };
            match line.split_once("->") {
                Some((p, c)) => {
                    let p: Var = p.parse().map_err(|e: Error| bad(e.to_string()))?;
                    let c: Var = c.parse().map_err(|e: Error| bad(e.to_string()))?;
                    note(p, &mut nodes);
                    note(c, &mut nodes);
                    edges.push((p, c));
                }
                None => {
                    let v: Var = line.parse().map_err(|e: Error| bad(e.to_string()))?;
                    note(v, &mut nodes);
                }
            }
        }
        Dag::new(&nodes, &edges)
    }
}

/// `left ⫫ right | given`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndependenceQuery {
    left: VarSet,
    right: VarSet,
    given: VarSet,
}

impl IndependenceQuery {
    pub fn new(
        left: impl Into<VarSet>,
        right: impl Into<VarSet>,
        given: impl Into<VarSet>,
    ) -> Result<Self> {
        let (left, right, given) = (left.into(), right.into(), given.into());
        if left.is_empty() || right.is_empty() {
            return Err(Error::EmptyQuery);
        }
        for (s, t) in [(left, right), (left, given), (right, given)] {
            if let Some(v) = s.intersection(t).iter().next() {
                return Err(Error::OverlappingQuery(v.to_string()));
            }
        }
        Ok(Self { left, right, given })
    }

    pub fn left(&self) -> VarSet {
        self.left
    }

    pub fn right(&self) -> VarSet {
        self.right
    }

    pub fn given(&self) -> VarSet {
        self.given
    }

    pub fn swapped(&self) -> Self {
        Self {
            left: self.right,
            right: self.left,
            given: self.given,
        }
    }

    fn vars(&self) -> VarSet {
        self.left.union(self.right).union(self.given)
    }
}

impl fmt::Display for IndependenceQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {} | {}", self.left, self.right, self.given)
    }
}

fn parse_var_list(s: &str) -> Result<VarSet> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(Var::from_str)
        .collect()
}

impl FromStr for IndependenceQuery {
    type Err = Error;

    /// Syntax: `A,B _||_ C,D | E,F`; the `| ...` part may be empty or absent.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |detail: &str| Error::Parse {
            what: "independence query",
            detail: format!("{detail} in `{s}`"),
        };
        let (left, rest) = s.split_once("_||_").ok_or_else(|| bad("missing `_||_`"))?;
        let (right, given) = rest.split_once('|').unwrap_or((rest, ""));
        if given.contains('|') {
            return Err(bad("more than one `|`"));
        }
        IndependenceQuery::new(
            parse_var_list(left)?,
            parse_var_list(right)?,
            parse_var_list(given)?,
        )
    }
}

/// Decides `left ⫫ right | given` by reachability over (node, direction)
/// states: a trail may pass a non-collider only if it is unobserved, and a
/// collider only if it is an ancestor of (or in) the conditioning set.
pub fn d_separated(dag: &Dag, q: &IndependenceQuery) -> Result<bool> {
    if let Some(v) = q.vars().iter().find(|v| !dag.nodes.contains(*v)) {
        return Err(Error::UnknownNode(v.to_string()));
    }
    let observed_anc = dag.ancestors_inclusive(q.given);

    #[derive(Clone, Copy, PartialEq)]
    enum Dir {
        // Arrived from a child, travelling against edge direction.
        Up,
        // Arrived from a parent.
        Down,
    }

    let mut visited_up = VarSet::EMPTY;
    let mut visited_down = VarSet::EMPTY;
    let mut queue: VecDeque<(Var, Dir)> = q.left.iter().map(|v| (v, Dir::Up)).collect();
    while let Some((v, dir)) = queue.pop_front() {
        let visited = match dir {
            Dir::Up => &mut visited_up,
            Dir::Down => &mut visited_down,
        };
        if visited.contains(v) {
            continue;
        }
        visited.insert(v);
        let observed = q.given.contains(v);
        if !observed && q.right.contains(v) {
            return Ok(false);
        }
        match dir {
            Dir::Up if !observed => {
                queue.extend(dag.parents(v).iter().map(|p| (p, Dir::Up)));
                queue.extend(dag.children(v).iter().map(|c| (c, Dir::Down)));
            }
            Dir::Up => {}
            Dir::Down => {
                if !observed {
                    queue.extend(dag.children(v).iter().map(|c| (c, Dir::Down)));
                }
                if observed_anc.contains(v) {
                    queue.extend(dag.parents(v).iter().map(|p| (p, Dir::Up)));
                }
            }
        }
    }
    Ok(true)
}

/// Measurement independence: `λ ⫫ {λ₁, λ₂}` when the graph has the
/// intermediate hidden variables, otherwise `λ ⫫ {x, y}`.
pub fn mic_holds(dag: &Dag) -> Result<bool> {
    let nodes = dag.nodes();
    if !nodes.contains(Var::Lambda) {
        return Err(Error::MissingMicNodes);
    }
    let settings = if nodes.contains(Var::Lambda1) && nodes.contains(Var::Lambda2) {
        VarSet::from([Var::Lambda1, Var::Lambda2])
    } else if nodes.contains(Var::X) && nodes.contains(Var::Y) {
        VarSet::from([Var::X, Var::Y])
    } else {
        return Err(Error::MissingMicNodes);
    };
    d_separated(
        dag,
        &IndependenceQuery::new([Var::Lambda], settings, VarSet::EMPTY)?,
    )
}

/// Factorization identities that the causal Markov condition yields on a
/// built-in graph. Each entry is a d-separation statement true on `dag`.
pub fn markov_identities(dag: &Dag) -> Result<Vec<IndependenceQuery>> {
    use Var::*;
    let figure = dag.as_builtin().ok_or(Error::NotBuiltin)?;
    let q = |l: &[Var], r: &[Var], g: &[Var]| {
        IndependenceQuery::new(
            l.iter().copied().collect::<VarSet>(),
            r.iter().copied().collect::<VarSet>(),
            g.iter().copied().collect::<VarSet>(),
        )
        .expect("identity sets are disjoint")
    };
    let mut out = match figure {
        Figure::OneA | Figure::OneB => vec![
            q(&[A], &[Y], &[X, Lambda]),
            q(&[B], &[X], &[Y, Lambda]),
            q(&[A], &[B], &[X, Y, Lambda]),
        ],
        Figure::TwoA | Figure::TwoB => vec![
            // P(a,b|x,y,λ,λ₁,λ₂) = P(a,b|x,y,λ)
            q(&[A, B], &[Lambda1, Lambda2], &[X, Y, Lambda]),
            // P(x,y|λ,λ₁,λ₂) = P(x,y|λ₁,λ₂)
            q(&[X, Y], &[Lambda], &[Lambda1, Lambda2]),
            q(&[A], &[B], &[X, Y, Lambda]),
        ],
        Figure::ThreeA | Figure::ThreeB => vec![
            // P(a,b|x,y,λ,λ₁,λ₂) = P(a,b|λ,λ₁,λ₂)
            q(&[A, B], &[X, Y], &[Lambda, Lambda1, Lambda2]),
            // P(x,y|λ,λ₁,λ₂) = P(x,y|λ₁,λ₂)
            q(&[X, Y], &[Lambda], &[Lambda1, Lambda2]),
            q(&[A], &[B], &[Lambda, Lambda1, Lambda2]),
        ],
    };
    match figure {
        Figure::OneA => out.push(q(&[Lambda], &[X, Y], &[])),
        Figure::TwoA | Figure::ThreeA => out.push(q(&[Lambda], &[Lambda1, Lambda2], &[])),
        _ => {}
    }
    debug_assert!(out.iter().all(|q| d_separated(dag, q) == Ok(true)));
    Ok(out)
}
