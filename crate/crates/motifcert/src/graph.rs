//! Loop-pair graphs, motif trees and rotation-invariant canonical forms.
//!
//! A loop node lists its pair nodes in cyclic 5'→3' order: the closing pair first (or
//! the pseudo-pair `r` for the external loop), then the branches. The weight of the edge
//! between a loop and one of its pairs is the number of unpaired bases that follow that
//! pair inside the loop, so each loop segment is attached to exactly one edge.
//!
//! Canonical strings use the alphabet `E H S B I M p r`. A loop entered from its parent
//! pair serializes as `K[w](w1:c1,...)`, where `w` is the weight of the parent edge and
//! children follow in cyclic order after the parent. Pair nodes are `p(...)` when both
//! loops are present and `p^` when the pair is a motif boundary.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motif::Motif;
use crate::structure::{Decomposition, LoopKind, Pair, SecondaryStructure};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Loop { id: usize, kind: LoopKind },
    Pair { pair: Pair, boundary: bool },
    Root,
}

impl NodeKind {
    fn is_rootable(self) -> bool {
        matches!(self, NodeKind::Pair { boundary: true, .. } | NodeKind::Root)
    }
}

/// Bipartite loop/pair tree with ordered, weighted adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopPairGraph {
    nodes: Vec<NodeKind>,
    /// `(neighbour, weight)`; cyclic 5'→3' order for loop nodes.
    adj: Vec<Vec<(NodeId, usize)>>,
}

impl LoopPairGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, v: NodeId) -> NodeKind {
        self.nodes[v]
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, usize)] {
        &self.adj[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, usize)> + '_ {
        self.loop_nodes().flat_map(move |u| self.adj[u].iter().map(move |&(v, w)| (u, v, w)))
    }

    pub fn loop_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&v| matches!(self.nodes[v], NodeKind::Loop { .. }))
    }

    /// Boundary pair nodes and `r`, the nodes a motif tree can be rooted at.
    pub fn rootable_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].is_rootable())
    }

    pub fn find_pair(&self, p: Pair) -> Option<NodeId> {
        self.nodes.iter().position(|n| matches!(n, NodeKind::Pair { pair, .. } if *pair == p))
    }

    pub fn root_node(&self) -> Option<NodeId> {
        self.nodes.iter().position(|n| *n == NodeKind::Root)
    }

    /// Number of bases: two per pair node plus every edge weight.
    pub fn length(&self) -> usize {
        let pairs = self.nodes.iter().filter(|n| matches!(n, NodeKind::Pair { .. })).count();
        2 * pairs + self.edges().map(|(_, _, w)| w).sum::<usize>()
    }

    pub fn cardinality(&self) -> usize {
        self.loop_nodes().count()
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph loop_pair {\n");
        for (v, n) in self.nodes.iter().enumerate() {
            let (label, shape) = match n {
                NodeKind::Loop { id, kind } => (format!("{}{}", kind.letter(), id), "ellipse"),
                NodeKind::Pair { pair: (i, j), boundary } => {
                    (format!("({i},{j}){}", if *boundary { "^" } else { "" }), "box")
                }
                NodeKind::Root => ("r".to_string(), "diamond"),
            };
            let _ = writeln!(s, "  n{v} [label=\"{label}\", shape={shape}];");
        }
        for (u, v, w) in self.edges() {
            let _ = writeln!(s, "  n{u} -- n{v} [label=\"{w}\"];");
        }
        s.push_str("}\n");
        s
    }

    /// Rebuilds the structure of a full graph (one containing `r`).
    pub fn to_structure(&self) -> Result<SecondaryStructure> {
        let r = self.root_node().ok_or_else(|| Error::MalformedShape("graph has no pseudo-pair r".into()))?;
        let &(ext, _) = self.adj[r].first().ok_or_else(|| Error::MalformedShape("r is isolated".into()))?;
        let mut db = String::new();
        self.write_loop(ext, r, &mut db)?;
        db.parse()
    }

    fn write_loop(&self, v: NodeId, parent: NodeId, db: &mut String) -> Result<()> {
        let ns = &self.adj[v];
        let at = ns.iter().position(|&(u, _)| u == parent).ok_or(Error::NotBoundary(parent))?;
        let k = ns.len();
        db.extend(std::iter::repeat_n('.', ns[at].1));
        for step in 1..k {
            let (p, w) = ns[(at + step) % k];
            let child = self.adj[p].iter().map(|&(u, _)| u).find(|&u| u != v);
            db.push('(');
            match child {
                Some(c) => self.write_loop(c, p, db)?,
                None => return Err(Error::MalformedShape("pair node without inner loop".into())),
            }
            db.push(')');
            db.extend(std::iter::repeat_n('.', w));
        }
        Ok(())
    }

    fn ser_loop(&self, v: NodeId, parent: NodeId, out: &mut String) {
        let ns = &self.adj[v];
        let at = ns.iter().position(|&(u, _)| u == parent).expect("parent is a neighbour");
        let NodeKind::Loop { kind, .. } = self.nodes[v] else { unreachable!() };
        let k = ns.len();
        let _ = write!(out, "{}[{}](", kind.letter(), ns[at].1);
        for step in 1..k {
            if step > 1 {
                out.push(',');
            }
            let (c, w) = ns[(at + step) % k];
            let _ = write!(out, "{w}:");
            self.ser_child(c, v, out);
        }
        out.push(')');
    }

    fn ser_child(&self, c: NodeId, from: NodeId, out: &mut String) {
        match self.nodes[c] {
            NodeKind::Root => out.push('r'),
            NodeKind::Pair { boundary: true, .. } => out.push_str("p^"),
            NodeKind::Pair { .. } => {
                out.push_str("p(");
                if let Some(&(next, _)) = self.adj[c].iter().find(|&&(u, _)| u != from) {
                    self.ser_loop(next, c, out);
                }
                out.push(')');
            }
            NodeKind::Loop { .. } => unreachable!("loops only neighbour pairs"),
        }
    }

    /// Serialization of the tree rooted at `root`.
    pub fn serialize_from(&self, root: NodeId) -> Result<String> {
        let mut out = String::new();
        match self.nodes[root] {
            NodeKind::Root => out.push('r'),
            NodeKind::Pair { boundary: true, .. } => out.push_str("p^"),
            _ => return Err(Error::NotBoundary(root)),
        }
        out.push('(');
        if let Some(&(l, _)) = self.adj[root].first() {
            self.ser_loop(l, root, &mut out);
        }
        out.push(')');
        Ok(out)
    }
}

fn pair_order(l: &crate::structure::Loop) -> Vec<Option<Pair>> {
    let mut v: Vec<Option<Pair>> = Vec::with_capacity(l.closing_pairs.len() + 1);
    if l.is_external() {
        v.push(None);
    }
    v.extend(l.closing_pairs.iter().copied().map(Some));
    v
}

fn build(d: &Decomposition, loop_ids: &[usize], boundary: impl Fn(Pair) -> bool, with_root: bool) -> LoopPairGraph {
    let mut nodes = Vec::new();
    let mut loop_node = vec![None; d.loop_count()];
    for &id in loop_ids {
        loop_node[id] = Some(nodes.len());
        nodes.push(NodeKind::Loop { id, kind: d.loops[id].kind });
    }
    let mut pairs: Vec<Pair> = loop_ids.iter().flat_map(|&id| d.loops[id].closing_pairs.iter().copied()).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut pair_node = std::collections::HashMap::new();
    for p in pairs {
        pair_node.insert(p, nodes.len());
        nodes.push(NodeKind::Pair { pair: p, boundary: boundary(p) });
    }
    let root = with_root.then(|| {
        nodes.push(NodeKind::Root);
        nodes.len() - 1
    });
    let mut adj = vec![Vec::new(); nodes.len()];
    for &id in loop_ids {
        let l = &d.loops[id];
        let u = loop_node[id].unwrap();
        for (p, &w) in pair_order(l).into_iter().zip(&l.unpaired_counts) {
            let v = match p {
                Some(p) => pair_node[&p],
                None => root.expect("external loop implies r"),
            };
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
    }
    // Pair nodes list the enclosing loop before the closed loop.
    for (v, node) in nodes.iter().enumerate() {
        if let NodeKind::Pair { pair, .. } = node {
            adj[v].sort_by_key(|&(u, _)| match nodes[u] {
                NodeKind::Loop { id, .. } => usize::from(d.loops[id].outer() == Some(*pair)),
                _ => 2,
            });
        }
    }
    LoopPairGraph { nodes, adj }
}

/// Loop-pair graph of a whole structure, with `r` attached to the external loop.
pub fn build_graph(y: &SecondaryStructure) -> LoopPairGraph {
    let d = Decomposition::new(y.clone());
    let ids: Vec<usize> = (0..d.loop_count()).collect();
    build(&d, &ids, |_| false, true)
}

/// Induced subgraph on the loops of `m`, boundary pairs flagged.
pub fn motif_subgraph(m: &Motif) -> LoopPairGraph {
    let ids: Vec<usize> = m.loop_ids().iter().copied().collect();
    let boundary = m.boundary_pairs();
    build(m.host(), &ids, |p| boundary.contains(&p), m.contains_external())
}

/// A motif subgraph rooted at a boundary pair node or at `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifTree {
    graph: Arc<LoopPairGraph>,
    root: NodeId,
}

impl MotifTree {
    /// Roots `m` at its outer boundary pair, or at `r` when it holds the external loop.
    pub fn from_motif(m: &Motif) -> Self {
        let graph = motif_subgraph(m);
        let root = match m.outer_pair() {
            Some(p) => graph.find_pair(p).expect("outer pair is a node"),
            None => graph.root_node().expect("external motif has r"),
        };
        MotifTree { graph: Arc::new(graph), root }
    }

    pub fn new(graph: LoopPairGraph, root: NodeId) -> Result<Self> {
        if root >= graph.node_count() || !graph.node(root).is_rootable() {
            return Err(Error::NotBoundary(root));
        }
        Ok(MotifTree { graph: Arc::new(graph), root })
    }

    pub fn graph(&self) -> &LoopPairGraph {
        &self.graph
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Rootable leaves other than the current root, in pre-order.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, usize::MAX)];
        while let Some((v, parent)) = stack.pop() {
            if v != self.root && self.graph.node(v).is_rootable() {
                out.push(v);
            }
            let ns = self.graph.neighbors(v);
            let at = ns.iter().position(|&(u, _)| u == parent).unwrap_or(ns.len().saturating_sub(1));
            let k = ns.len();
            for step in (1..=k).rev() {
                let (c, _) = ns[(at + step) % k];
                if c != parent {
                    stack.push((c, v));
                }
            }
        }
        out
    }

    /// Re-roots the tree at `leaf`. Each loop keeps its cyclic neighbour order, so the
    /// children of a loop become the rotation of its neighbour list that starts after
    /// the new parent.
    pub fn rotate(&self, leaf: NodeId) -> Result<MotifTree> {
        if leaf >= self.graph.node_count() || !self.graph.node(leaf).is_rootable() {
            return Err(Error::NotBoundary(leaf));
        }
        Ok(MotifTree { graph: Arc::clone(&self.graph), root: leaf })
    }

    pub fn serialize(&self) -> String {
        self.graph.serialize_from(self.root).expect("root is rootable")
    }
}

/// Re-roots `t` at the `child_id`-th rootable leaf of its pre-order.
pub fn rotate(t: &MotifTree, child_id: usize) -> Result<MotifTree> {
    let leaves = t.leaves();
    let leaf = *leaves.get(child_id).ok_or(Error::NotBoundary(child_id))?;
    t.rotate(leaf)
}

/// Rotation-invariant identity of a motif.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub canonical: String,
    pub length: usize,
    pub cardinality: usize,
}

/// Smallest serialization over all rootings at boundary pairs and `r`.
pub fn canonical_form(g: &LoopPairGraph) -> CanonicalForm {
    let canonical = g.rootable_nodes().filter_map(|v| g.serialize_from(v).ok()).min().unwrap_or_default();
    CanonicalForm { canonical, length: g.length(), cardinality: g.cardinality() }
}

pub fn motif_canonical_form(m: &Motif) -> CanonicalForm {
    canonical_form(&motif_subgraph(m))
}

/// Whether two motifs can be rotated into each other.
pub fn equivalent(a: &Motif, b: &Motif) -> bool {
    motif_canonical_form(a) == motif_canonical_form(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motif::extract_motif;
    use crate::structure::parse_dotbracket;

    fn y(s: &str) -> SecondaryStructure {
        parse_dotbracket(s).unwrap()
    }

    #[test]
    fn unpaired_chain_graph() {
        let g = build_graph(&y("..."));
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 3)]);
        assert_eq!(g.length(), 3);
    }

    #[test]
    fn hairpin_stack_chain() {
        let g = build_graph(&y("((...))"));
        assert_eq!(g.cardinality(), 3);
        let h = g.loop_nodes().find(|&v| matches!(g.node(v), NodeKind::Loop { kind: LoopKind::Hairpin, .. })).unwrap();
        assert_eq!(g.neighbors(h), &[(g.find_pair((2, 6)).unwrap(), 3)]);
        assert_eq!(g.length(), 7);
    }

    #[test]
    fn structure_round_trips_through_graph() {
        for s in [".", "...", "((...))", "..((...))..(((....)))", "((.((...))..((....)).))", ".(((...)).(...).)."] {
            assert_eq!(build_graph(&y(s)).to_structure().unwrap().to_dotbracket(), s);
        }
    }

    #[test]
    fn rotation_at_root_is_identity() {
        let m = extract_motif(&y("((.(...).((...))..))"), [1, 2]).unwrap();
        let t = MotifTree::from_motif(&m);
        assert_eq!(t.rotate(t.root()).unwrap(), t);
        assert!(t.rotate(0).is_err());
    }

    #[test]
    fn two_boundary_rotation_is_involution() {
        let m = extract_motif(&y("((.((...)).))"), [1, 2]).unwrap();
        let t = MotifTree::from_motif(&m);
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 1);
        let back = rotate(&rotate(&t, 0).unwrap(), 0).unwrap();
        assert_eq!(back.serialize(), t.serialize());
    }

    #[test]
    fn canonical_form_ignores_host_context() {
        let a = extract_motif(&y("((...))"), [2]).unwrap();
        let b = extract_motif(&y("..(((...)))"), [3]).unwrap();
        assert!(equivalent(&a, &b));
        assert_eq!(motif_canonical_form(&a).canonical, "p^(H[3]())");
    }

    #[test]
    fn dot_export_lists_every_edge() {
        let g = build_graph(&y("((...))"));
        let dot = g.to_dot();
        assert_eq!(dot.matches(" -- ").count(), 5);
        assert!(dot.contains("label=\"3\""));
    }
}
