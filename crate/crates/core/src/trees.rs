//! Binary coupling trees (maximal nested set families), swap moves and the
//! recoupling graph.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ModeSet;

/// Largest leaf count accepted by the enumerations.
pub const MAX_ENUMERATION_LEAVES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Leaf(usize),
    Pair(Box<Node>, Box<Node>),
}

impl Node {
    fn set(&self) -> ModeSet {
        match self {
            Node::Leaf(m) => ModeSet::singleton(*m),
            Node::Pair(l, r) => l.set().union(r.set()),
        }
    }

    fn canonical(&self) -> Node {
        match self {
            Node::Leaf(m) => Node::Leaf(*m),
            Node::Pair(l, r) => {
                let (l, r) = (l.canonical(), r.canonical());
                if l.set().min_mode() <= r.set().min_mode() {
                    Node::Pair(Box::new(l), Box::new(r))
                } else {
                    Node::Pair(Box::new(r), Box::new(l))
                }
            }
        }
    }

    fn collect(&self, out: &mut Vec<ModeSet>) {
        out.push(self.set());
        if let Node::Pair(l, r) = self {
            l.collect(out);
            r.collect(out);
        }
    }

    fn find(&self, set: ModeSet) -> Option<&Node> {
        if self.set() == set {
            return Some(self);
        }
        match self {
            Node::Leaf(_) => None,
            Node::Pair(l, r) => {
                if set.is_subset(l.set()) {
                    l.find(set)
                } else if set.is_subset(r.set()) {
                    r.find(set)
                } else {
                    None
                }
            }
        }
    }

    fn parent_of(&self, set: ModeSet) -> Option<&Node> {
        match self {
            Node::Leaf(_) => None,
            Node::Pair(l, r) => {
                if l.set() == set || r.set() == set {
                    Some(self)
                } else if set.is_subset(l.set()) {
                    l.parent_of(set)
                } else if set.is_subset(r.set()) {
                    r.parent_of(set)
                } else {
                    None
                }
            }
        }
    }

    fn twisted(&self, set: ModeSet) -> Node {
        match self {
            Node::Leaf(m) => Node::Leaf(*m),
            Node::Pair(l, r) => {
                if self.set() == set {
                    Node::Pair(r.clone(), l.clone())
                } else {
                    Node::Pair(Box::new(l.twisted(set)), Box::new(r.twisted(set)))
                }
            }
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            Node::Leaf(m) => out.push_str(&m.to_string()),
            Node::Pair(l, r) => {
                out.push('(');
                l.write(out);
                out.push(',');
                r.write(out);
                out.push(')');
            }
        }
    }
}

/// Orientation data of an internal non-root node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeContext {
    pub node: ModeSet,
    pub left: ModeSet,
    pub right: ModeSet,
    pub parent: ModeSet,
    pub sibling: ModeSet,
}

/// A binary tree with leaves `1..=n` and ordered children.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CouplingTree {
    n: usize,
    root: Node,
}

impl CouplingTree {
    /// Parses a fully parenthesized bracketing such as `((1,2),3)`.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let chars: Vec<(usize, char)> = s.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        let mut pos = 0;
        let root = parse_node(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::TreeSyntax { pos: chars[pos].0, msg: "trailing input".into() });
        }
        let mut leaves = Vec::new();
        collect_leaves(&root, &mut leaves);
        if leaves.len() != n {
            return Err(Error::InvalidTree(format!("expected {n} leaves, found {}", leaves.len())));
        }
        let mut seen = vec![false; n + 1];
        for &m in &leaves {
            if m == 0 || m > n {
                return Err(Error::InvalidTree(format!("leaf {m} outside 1..={n}")));
            }
            if seen[m] {
                return Err(Error::InvalidTree(format!("duplicate leaf {m}")));
            }
            seen[m] = true;
        }
        if n < 2 {
            return Err(Error::InvalidTree("a coupling tree needs at least two leaves".into()));
        }
        if n > ModeSet::MAX_MODES {
            return Err(Error::InvalidTree(format!("at most {} leaves", ModeSet::MAX_MODES)));
        }
        Ok(CouplingTree { n, root })
    }

    /// The canonical tree of a maximal nested family (children by minimum leaf).
    pub fn from_family(n: usize, sets: &BTreeSet<ModeSet>) -> Result<Self> {
        validate_family(n, sets)?;
        let mut all: BTreeSet<ModeSet> = sets.clone();
        all.insert(ModeSet::full(n));
        for m in 1..=n {
            all.insert(ModeSet::singleton(m));
        }
        fn build(set: ModeSet, all: &BTreeSet<ModeSet>) -> Result<Node> {
            if set.len() == 1 {
                return Ok(Node::Leaf(set.min_mode().unwrap()));
            }
            let proper: Vec<ModeSet> = all.iter().copied().filter(|s| s.is_subset(set) && *s != set).collect();
            let maximal: Vec<ModeSet> = proper
                .iter()
                .copied()
                .filter(|s| !proper.iter().any(|t| t != s && s.is_subset(*t)))
                .collect();
            if maximal.len() != 2 || maximal[0].union(maximal[1]) != set {
                return Err(Error::InvalidTree(format!("node {set} does not split into two children")));
            }
            let (mut l, mut r) = (maximal[0], maximal[1]);
            if l.min_mode() > r.min_mode() {
                std::mem::swap(&mut l, &mut r);
            }
            Ok(Node::Pair(Box::new(build(l, all)?), Box::new(build(r, all)?)))
        }
        Ok(CouplingTree { n, root: build(ModeSet::full(n), &all)? })
    }

    /// `(((1,2),3),...,n)`.
    pub fn chain(n: usize) -> Self {
        assert!(n >= 2);
        let mut node = Node::Leaf(1);
        for m in 2..=n {
            node = Node::Pair(Box::new(node), Box::new(Node::Leaf(m)));
        }
        CouplingTree { n, root: node }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn canonical(&self) -> Self {
        CouplingTree { n: self.n, root: self.root.canonical() }
    }

    pub fn canonical_string(&self) -> String {
        self.canonical().to_string()
    }

    /// Every member set: singletons, internal nodes and the root.
    pub fn family(&self) -> BTreeSet<ModeSet> {
        let mut v = Vec::new();
        self.root.collect(&mut v);
        v.into_iter().collect()
    }

    /// Internal nodes `A` with `1 < |A| < n`, in `ModeSet` order.
    pub fn labelling_algebra(&self) -> BTreeSet<ModeSet> {
        self.family().into_iter().filter(|s| s.len() > 1 && s.len() < self.n).collect()
    }

    /// Children and sibling of an internal non-root node.
    pub fn node_context(&self, set: ModeSet) -> Option<NodeContext> {
        if set.len() < 2 || set.len() >= self.n {
            return None;
        }
        let node = self.root.find(set)?;
        let (left, right) = match node {
            Node::Pair(l, r) => (l.set(), r.set()),
            Node::Leaf(_) => return None,
        };
        let parent = self.root.parent_of(set)?.set();
        Some(NodeContext { node: set, left, right, parent, sibling: parent.difference(set) })
    }

    /// Exchanges the children of an internal node (the root included).
    pub fn twist(&self, set: ModeSet) -> Result<Self> {
        match self.root.find(set) {
            Some(Node::Pair(..)) => Ok(CouplingTree { n: self.n, root: self.root.twisted(set) }),
            _ => Err(Error::NotInternalNode(set.to_string())),
        }
    }

    /// Same labelling algebra, ignoring orientation.
    pub fn same_labelling(&self, other: &CouplingTree) -> bool {
        self.n == other.n && self.labelling_algebra() == other.labelling_algebra()
    }

    /// Internal sets as strings, e.g. `["{1,2}", "{1,2,3}"]`.
    pub fn labelling_strings(&self) -> Vec<String> {
        self.labelling_algebra().iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for CouplingTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.root.write(&mut s);
        f.write_str(&s)
    }
}

impl Serialize for CouplingTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn parse_node(chars: &[(usize, char)], pos: &mut usize) -> Result<Node> {
    let err = |pos: usize, msg: &str| {
        let at = chars.get(pos).map(|c| c.0).unwrap_or_else(|| chars.last().map(|c| c.0 + 1).unwrap_or(0));
        Error::TreeSyntax { pos: at, msg: msg.to_string() }
    };
    match chars.get(*pos) {
        Some((_, '(')) => {
            *pos += 1;
            let l = parse_node(chars, pos)?;
            if !matches!(chars.get(*pos), Some((_, ','))) {
                return Err(err(*pos, "expected ','"));
            }
            *pos += 1;
            let r = parse_node(chars, pos)?;
            if !matches!(chars.get(*pos), Some((_, ')'))) {
                return Err(err(*pos, "expected ')'"));
            }
            *pos += 1;
            Ok(Node::Pair(Box::new(l), Box::new(r)))
        }
        Some((_, c)) if c.is_ascii_digit() => {
            let start = *pos;
            let mut value: usize = 0;
            while let Some((_, c)) = chars.get(*pos).filter(|(_, c)| c.is_ascii_digit()) {
                value = value
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(c.to_digit(10).unwrap() as usize))
                    .ok_or_else(|| err(start, "leaf index too large"))?;
                *pos += 1;
            }
            Ok(Node::Leaf(value))
        }
        Some(_) => Err(err(*pos, "expected '(' or a leaf index")),
        None => Err(err(*pos, "unexpected end of input")),
    }
}

fn collect_leaves(node: &Node, out: &mut Vec<usize>) {
    match node {
        Node::Leaf(m) => out.push(*m),
        Node::Pair(l, r) => {
            collect_leaves(l, out);
            collect_leaves(r, out);
        }
    }
}

/// Checks that `sets` (internal non-root sets, optionally with singletons and
/// the root) form a maximal nested family on `[n]`.
pub fn validate_family(n: usize, sets: &BTreeSet<ModeSet>) -> Result<()> {
    if !(2..=ModeSet::MAX_MODES).contains(&n) {
        return Err(Error::InvalidTree(format!("leaf count {n} out of range")));
    }
    let full = ModeSet::full(n);
    for s in sets {
        if s.is_empty() || !s.is_subset(full) {
            return Err(Error::InvalidTree(format!("set {s} is not a non-empty subset of [{n}]")));
        }
    }
    let sets: Vec<ModeSet> = sets.iter().copied().collect();
    for (i, x) in sets.iter().enumerate() {
        for y in &sets[i + 1..] {
            if !x.is_compatible(*y) {
                return Err(Error::InvalidTree(format!("sets {x} and {y} cross")));
            }
        }
    }
    let internal = sets.iter().filter(|s| s.len() > 1 && s.len() < n).count();
    if internal != n - 2 {
        return Err(Error::InvalidTree(format!(
            "family has {internal} internal sets, a maximal one has {}",
            n - 2
        )));
    }
    Ok(())
}

/// A single swap `G1 -> G2` with its local triple `K = G1\G2`, `L = G1 n G2`, `M = G2\G1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Swap {
    pub from: CouplingTree,
    pub to: CouplingTree,
    pub removed: ModeSet,
    pub added: ModeSet,
    pub k: ModeSet,
    pub l: ModeSet,
    pub m: ModeSet,
}

impl Swap {
    /// The swap relating two trees whose labelling algebras differ in one set.
    pub fn between(from: &CouplingTree, to: &CouplingTree) -> Result<Swap> {
        let (a, b) = (from.labelling_algebra(), to.labelling_algebra());
        let removed: Vec<ModeSet> = a.difference(&b).copied().collect();
        let added: Vec<ModeSet> = b.difference(&a).copied().collect();
        if from.n() != to.n() || removed.len() != 1 || added.len() != 1 {
            return Err(Error::NotASwap(from.to_string(), to.to_string()));
        }
        let (g1, g2) = (removed[0], added[0]);
        Ok(Swap {
            from: from.clone(),
            to: to.clone(),
            removed: g1,
            added: g2,
            k: g1.difference(g2),
            l: g1.intersection(g2),
            m: g2.difference(g1),
        })
    }
}

/// All canonical trees reachable from `t` by one swap, ordered by `(G1, G2)`.
pub fn neighbors(t: &CouplingTree) -> Vec<Swap> {
    let t = t.canonical();
    let base = t.labelling_algebra();
    let mut out = Vec::new();
    for &g1 in &base {
        let ctx = t.node_context(g1).expect("labelling sets are internal non-root nodes");
        let mut options = [ctx.left.union(ctx.sibling), ctx.right.union(ctx.sibling)];
        options.sort();
        for g2 in options {
            let mut fam = base.clone();
            fam.remove(&g1);
            fam.insert(g2);
            let to = CouplingTree::from_family(t.n(), &fam).expect("a swap yields a maximal nested family");
            out.push(Swap {
                from: t.clone(),
                to,
                removed: g1,
                added: g2,
                k: g1.difference(g2),
                l: g1.intersection(g2),
                m: g2.difference(g1),
            });
        }
    }
    out
}

/// `(2n - 3)!!`.
pub fn tree_count(n: usize) -> usize {
    (1..n.max(2)).map(|k| 2 * k - 1).product()
}

/// Every tree modulo twists, in canonical form, sorted by canonical string.
pub fn enumerate_trees(n: usize) -> Result<Vec<CouplingTree>> {
    if !(2..=MAX_ENUMERATION_LEAVES).contains(&n) {
        return Err(Error::OutOfGuard(n, format!("2..={MAX_ENUMERATION_LEAVES}")));
    }
    // Insert leaf k above every node of every tree on k-1 leaves.
    fn graft(node: &Node, leaf: usize, out: &mut Vec<Node>) {
        out.push(Node::Pair(Box::new(node.clone()), Box::new(Node::Leaf(leaf))));
        if let Node::Pair(l, r) = node {
            let mut left = Vec::new();
            graft(l, leaf, &mut left);
            for x in left {
                out.push(Node::Pair(Box::new(x), r.clone()));
            }
            let mut right = Vec::new();
            graft(r, leaf, &mut right);
            for x in right {
                out.push(Node::Pair(l.clone(), Box::new(x)));
            }
        }
    }
    let mut trees = vec![Node::Pair(Box::new(Node::Leaf(1)), Box::new(Node::Leaf(2)))];
    for leaf in 3..=n {
        let mut next = Vec::new();
        for t in &trees {
            graft(t, leaf, &mut next);
        }
        trees = next;
    }
    let mut out: Vec<CouplingTree> = trees.into_iter().map(|root| CouplingTree { n, root }.canonical()).collect();
    out.sort_by_cached_key(|t| t.to_string());
    Ok(out)
}

/// Vertices are twist classes (canonical trees), edges are single swaps.
#[derive(Debug, Clone)]
pub struct RecouplingGraph {
    n: usize,
    vertices: Vec<CouplingTree>,
    index: HashMap<BTreeSet<ModeSet>, usize>,
    adjacency: Vec<Vec<usize>>,
}

/// Builds the recoupling graph on all trees with `n` leaves.
pub fn recoupling_graph(n: usize) -> Result<RecouplingGraph> {
    let vertices = enumerate_trees(n)?;
    let index: HashMap<BTreeSet<ModeSet>, usize> =
        vertices.iter().enumerate().map(|(i, t)| (t.labelling_algebra(), i)).collect();
    let adjacency = vertices
        .iter()
        .map(|t| {
            let mut adj: Vec<usize> = neighbors(t).iter().map(|s| index[&s.to.labelling_algebra()]).collect();
            adj.sort_unstable();
            adj.dedup();
            adj
        })
        .collect();
    Ok(RecouplingGraph { n, vertices, index, adjacency })
}

impl RecouplingGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[CouplingTree] {
        &self.vertices
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn vertex_of(&self, t: &CouplingTree) -> Option<usize> {
        if t.n() != self.n {
            return None;
        }
        self.index.get(&t.labelling_algebra()).copied()
    }

    fn require(&self, t: &CouplingTree) -> Result<usize> {
        self.vertex_of(t).ok_or_else(|| Error::UnknownVertex(t.to_string()))
    }

    /// Hop distances from one vertex (`usize::MAX` if unreachable).
    pub fn distances_from(&self, v: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertices.len()];
        let mut queue = VecDeque::from([v]);
        dist[v] = 0;
        while let Some(x) = queue.pop_front() {
            for &y in &self.adjacency[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(|&d| d != usize::MAX)
    }

    /// Largest shortest-path length over all vertex pairs.
    pub fn diameter(&self) -> usize {
        (0..self.vertices.len())
            .map(|v| self.distances_from(v).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    fn swaps_along(&self, vertices: &[usize]) -> Vec<Swap> {
        vertices
            .windows(2)
            .map(|w| Swap::between(&self.vertices[w[0]], &self.vertices[w[1]]).expect("adjacent vertices"))
            .collect()
    }

    /// A breadth-first shortest path (lowest-index neighbours first).
    pub fn path(&self, t1: &CouplingTree, t2: &CouplingTree) -> Result<Vec<Swap>> {
        let (s, t) = (self.require(t1)?, self.require(t2)?);
        let dist = self.distances_from(t);
        if dist[s] == usize::MAX {
            return Err(Error::UnknownVertex(t2.to_string()));
        }
        let mut walk = vec![s];
        let mut cur = s;
        while cur != t {
            cur = *self.adjacency[cur].iter().find(|&&y| dist[y] + 1 == dist[cur]).unwrap();
            walk.push(cur);
        }
        Ok(self.swaps_along(&walk))
    }

    /// Up to `limit` distinct shortest paths, in lexicographic vertex order.
    pub fn shortest_paths(&self, t1: &CouplingTree, t2: &CouplingTree, limit: usize) -> Result<Vec<Vec<Swap>>> {
        let (s, t) = (self.require(t1)?, self.require(t2)?);
        let dist = self.distances_from(t);
        let mut out = Vec::new();
        fn rec(g: &RecouplingGraph, dist: &[usize], walk: &mut Vec<usize>, limit: usize, out: &mut Vec<Vec<usize>>) {
            if out.len() >= limit {
                return;
            }
            let cur = *walk.last().unwrap();
            if dist[cur] == 0 {
                out.push(walk.clone());
                return;
            }
            for &y in &g.adjacency[cur] {
                if dist[y] + 1 == dist[cur] {
                    walk.push(y);
                    rec(g, dist, walk, limit, out);
                    walk.pop();
                }
            }
        }
        if dist[s] != usize::MAX {
            rec(self, &dist, &mut vec![s], limit, &mut out);
        }
        Ok(out.iter().map(|w| self.swaps_along(w)).collect())
    }

    /// Graphviz export; vertices are labelled by canonical tree strings.
    pub fn to_dot(&self) -> String {
        let mut s = format!("graph recoupling_{} {{\n", self.n);
        for (i, t) in self.vertices.iter().enumerate() {
            s.push_str(&format!("  v{i} [label=\"{}\"];\n", t));
        }
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &j in adj.iter().filter(|&&j| j > i) {
                s.push_str(&format!("  v{i} -- v{j};\n"));
            }
        }
        s.push_str("}\n");
        s
    }
}

fn family_of(n: usize, sets: &[ModeSet]) -> CouplingTree {
    CouplingTree::from_family(n, &sets.iter().copied().collect()).expect("valid family")
}

/// `{{1,2},{3,4}} -> {{1,2},{1,2,3}} -> {{1,3},{1,2,3}} -> {{1,3},{2,4}}`.
pub fn ninej_path() -> (CouplingTree, Vec<Swap>) {
    let s = |m: &[usize]| ModeSet::from_modes(m);
    let trees = [
        family_of(4, &[s(&[1, 2]), s(&[3, 4])]),
        family_of(4, &[s(&[1, 2]), s(&[1, 2, 3])]),
        family_of(4, &[s(&[1, 3]), s(&[1, 2, 3])]),
        family_of(4, &[s(&[1, 3]), s(&[2, 4])]),
    ];
    let swaps = trees.windows(2).map(|w| Swap::between(&w[0], &w[1]).unwrap()).collect();
    (trees[0].clone(), swaps)
}

/// From the chain `{[k] : 1<k<n}` to `{[k..n] : 1<k<n}`: for `k = 2..n-1` and
/// `l = 1..k-1`, replace `[l..k]` by `[l+1..k+1]`.
pub fn chain_reversal_path(n: usize) -> (CouplingTree, Vec<Swap>) {
    assert!(n >= 3);
    let start = CouplingTree::chain(n);
    let mut fam = start.labelling_algebra();
    let mut cur = start.clone();
    let mut swaps = Vec::new();
    for k in 2..n {
        for l in 1..k {
            fam.remove(&ModeSet::range(l, k));
            fam.insert(ModeSet::range(l + 1, k + 1));
            let next = CouplingTree::from_family(n, &fam).expect("chain reversal stays maximal");
            swaps.push(Swap::between(&cur, &next).unwrap());
            cur = next;
        }
    }
    (start, swaps)
}

/// From `{[k] : 1<k<n}` to `{[2..k] : 2<k<=n}`, replacing `[l]` by `[2..l+1]`
/// for `l = 2..n-1`; each label changes once.
pub fn tratnik_path(n: usize) -> (CouplingTree, Vec<Swap>) {
    assert!(n >= 3);
    let start = CouplingTree::chain(n);
    let mut fam = start.labelling_algebra();
    let mut cur = start.clone();
    let mut swaps = Vec::new();
    for l in 2..n {
        fam.remove(&ModeSet::range(1, l));
        fam.insert(ModeSet::range(2, l + 1));
        let next = CouplingTree::from_family(n, &fam).expect("intermediate families are maximal");
        swaps.push(Swap::between(&cur, &next).unwrap());
        cur = next;
    }
    (start, swaps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(m: &[usize]) -> ModeSet {
        ModeSet::from_modes(m)
    }

    fn set_of(v: &[ModeSet]) -> BTreeSet<ModeSet> {
        v.iter().copied().collect()
    }

    #[test]
    fn parse_examples() {
        let t = CouplingTree::parse("((1,2),3)", 3).unwrap();
        assert_eq!(t.labelling_algebra(), set_of(&[s(&[1, 2])]));
        let t = CouplingTree::parse("((1,2),(3,4))", 4).unwrap();
        assert_eq!(t.labelling_algebra(), set_of(&[s(&[1, 2]), s(&[3, 4])]));
        let t = CouplingTree::parse("(1,2)", 2).unwrap();
        assert!(t.labelling_algebra().is_empty());
        let t = CouplingTree::parse(" ( ( 2 , 1 ) , 3 ) ", 3).unwrap();
        assert_eq!(t.to_string(), "((2,1),3)");
        assert_eq!(t.canonical_string(), "((1,2),3)");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(CouplingTree::parse("((1,2),3", 3), Err(Error::TreeSyntax { .. })));
        assert!(matches!(CouplingTree::parse("((1,2)3)", 3), Err(Error::TreeSyntax { .. })));
        assert!(matches!(CouplingTree::parse("((1,2),3)x", 3), Err(Error::TreeSyntax { .. })));
        assert!(matches!(CouplingTree::parse("((1,1),3)", 3), Err(Error::InvalidTree(_))));
        assert!(matches!(CouplingTree::parse("((1,2),4)", 3), Err(Error::InvalidTree(_))));
        assert!(matches!(CouplingTree::parse("((1,2),3)", 4), Err(Error::InvalidTree(_))));
        assert!(CouplingTree::parse("", 1).is_err());
    }

    #[test]
    fn labelling_algebras() {
        let chain = CouplingTree::chain(4);
        assert_eq!(chain.to_string(), "(((1,2),3),4)");
        assert_eq!(chain.labelling_algebra(), set_of(&[s(&[1, 2]), s(&[1, 2, 3])]));
        assert_eq!(CouplingTree::chain(5).labelling_algebra().len(), 3);
        for t in enumerate_trees(3).unwrap() {
            assert_eq!(t.labelling_algebra().len(), 1);
        }
    }

    #[test]
    fn node_context_reads_orientation() {
        let t = CouplingTree::parse("((3,(2,1)),4)", 4).unwrap();
        let ctx = t.node_context(s(&[1, 2])).unwrap();
        assert_eq!((ctx.left, ctx.right, ctx.sibling, ctx.parent), (s(&[2]), s(&[1]), s(&[3]), s(&[1, 2, 3])));
        let ctx = t.node_context(s(&[1, 2, 3])).unwrap();
        assert_eq!((ctx.left, ctx.right, ctx.sibling), (s(&[3]), s(&[1, 2]), s(&[4])));
        assert!(t.node_context(s(&[1, 2, 3, 4])).is_none());
        assert!(t.node_context(s(&[1, 3])).is_none());
        let tw = t.twist(s(&[1, 2])).unwrap();
        assert_eq!(tw.to_string(), "((3,(1,2)),4)");
        assert!(tw.same_labelling(&t));
    }

    #[test]
    fn family_validation() {
        assert!(validate_family(4, &set_of(&[s(&[1, 2]), s(&[2, 3])])).is_err());
        assert!(validate_family(4, &set_of(&[s(&[1, 2])])).is_err());
        assert!(validate_family(4, &set_of(&[s(&[1, 2]), s(&[3, 4])])).is_ok());
        let t = CouplingTree::from_family(4, &set_of(&[s(&[3, 4]), s(&[2, 3, 4])])).unwrap();
        assert_eq!(t.to_string(), "(1,(2,(3,4)))");
    }

    #[test]
    fn tree_counts() {
        for (n, c) in [(2, 1), (3, 3), (4, 15), (5, 105), (6, 945)] {
            let trees = enumerate_trees(n).unwrap();
            assert_eq!(trees.len(), c);
            assert_eq!(tree_count(n), c);
            let distinct: BTreeSet<_> = trees.iter().map(|t| t.labelling_strings()).collect();
            assert_eq!(distinct.len(), c);
            for t in &trees {
                validate_family(n, &t.labelling_algebra()).unwrap();
            }
        }
        assert!(enumerate_trees(1).is_err());
        assert!(enumerate_trees(9).is_err());
    }

    #[test]
    fn brute_force_count_n4() {
        // Oracle: all pairs of 2- and 3-subsets of [4] that form a nested family.
        let subsets: Vec<ModeSet> = (1..16u32).map(ModeSet::from_bits).filter(|x| x.len() == 2 || x.len() == 3).collect();
        let mut count = 0;
        for (i, x) in subsets.iter().enumerate() {
            for y in &subsets[i + 1..] {
                if validate_family(4, &set_of(&[*x, *y])).is_ok() {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 15);
    }

    #[test]
    fn neighbors_n3_and_n4() {
        let t = CouplingTree::parse("((1,2),3)", 3).unwrap();
        let got: BTreeSet<_> = neighbors(&t).iter().map(|x| x.added).collect();
        assert_eq!(got, set_of(&[s(&[1, 3]), s(&[2, 3])]));
        let chain = CouplingTree::chain(4);
        let fams: Vec<_> = neighbors(&chain).iter().map(|x| x.to.labelling_algebra()).collect();
        assert!(fams.contains(&set_of(&[s(&[1, 2]), s(&[3, 4])])));
        assert!(fams.contains(&set_of(&[s(&[2, 3]), s(&[1, 2, 3])])));
        assert_eq!(fams.len(), 4);
    }

    #[test]
    fn swap_triple() {
        let t = CouplingTree::parse("((1,2),3)", 3).unwrap();
        let sw = neighbors(&t).into_iter().find(|x| x.added == s(&[2, 3])).unwrap();
        assert_eq!((sw.k, sw.l, sw.m), (s(&[1]), s(&[2]), s(&[3])));
    }

    #[test]
    fn neighbors_symmetric_irreflexive() {
        for n in 3..=5 {
            for t in enumerate_trees(n).unwrap() {
                for sw in neighbors(&t) {
                    assert!(!sw.to.same_labelling(&t));
                    assert!(neighbors(&sw.to).iter().any(|b| b.to.same_labelling(&t)));
                }
            }
        }
    }

    #[test]
    fn graph_n3_complete() {
        let g = recoupling_graph(3).unwrap();
        assert_eq!(g.vertices().len(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.diameter(), 1);
    }

    #[test]
    fn graph_connected_with_bounded_diameter() {
        for n in 2..=6 {
            let g = recoupling_graph(n).unwrap();
            assert!(g.is_connected());
            assert!(g.diameter() <= (n - 1) * (n - 2) / 2);
        }
    }

    #[test]
    fn ninej_paths() {
        let g = recoupling_graph(4).unwrap();
        let from = CouplingTree::parse("((1,2),(3,4))", 4).unwrap();
        let to = CouplingTree::parse("((1,3),(2,4))", 4).unwrap();
        let p = g.path(&from, &to).unwrap();
        assert_eq!(p.len(), 3);
        let all = g.shortest_paths(&from, &to, 100).unwrap();
        assert!(all.len() >= 3);
        let (start, named) = ninej_path();
        assert!(start.same_labelling(&from));
        assert!(named.last().unwrap().to.same_labelling(&to));
        let named_fams: Vec<_> = named.iter().map(|x| x.to.labelling_algebra()).collect();
        assert!(all.iter().any(|p| p.iter().map(|x| x.to.labelling_algebra()).collect::<Vec<_>>() == named_fams));
        assert!(g.path(&from, &from).unwrap().is_empty());
        assert!(g.path(&CouplingTree::chain(3), &from).is_err());
    }

    #[test]
    fn named_paths() {
        for n in 3..=6 {
            let (_, p) = chain_reversal_path(n);
            assert_eq!(p.len(), (n - 1) * (n - 2) / 2);
            let last = p.last().unwrap().to.labelling_algebra();
            let expect: BTreeSet<_> = (2..n).map(|k| ModeSet::range(k, n)).collect();
            assert_eq!(last, expect);
            let (_, p) = tratnik_path(n);
            assert_eq!(p.len(), n - 2);
            let expect: BTreeSet<_> = (3..=n).map(|k| ModeSet::range(2, k)).collect();
            assert_eq!(p.last().unwrap().to.labelling_algebra(), expect);
        }
    }

    #[test]
    fn dot_export() {
        let dot = recoupling_graph(3).unwrap().to_dot();
        assert!(dot.starts_with("graph recoupling_3 {"));
        assert_eq!(dot.matches(" -- ").count(), 3);
    }
}
