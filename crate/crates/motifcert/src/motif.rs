//! Motifs: contiguous loop sets of a host structure.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fold::FoldConstraint;
use crate::structure::{CriticalPositions, Decomposition, Loop, LoopKind, Pair, SecondaryStructure};

/// A contiguous set of loops of a host structure, identified by decomposition index.
#[derive(Debug, Clone)]
pub struct Motif {
    host: Arc<Decomposition>,
    loop_ids: BTreeSet<usize>,
}

impl PartialEq for Motif {
    fn eq(&self, other: &Self) -> bool {
        self.loop_ids == other.loop_ids && self.host.structure == other.host.structure
    }
}

impl Eq for Motif {}

impl Motif {
    /// Extracts the motif made of `ids` from `host`.
    pub fn new(host: Arc<Decomposition>, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let loop_ids: BTreeSet<usize> = ids.into_iter().collect();
        if loop_ids.is_empty() {
            return Err(Error::NotContiguous);
        }
        if let Some(&bad) = loop_ids.iter().find(|&&id| id >= host.loop_count()) {
            return Err(Error::InvalidLoopId(bad));
        }
        let start = *loop_ids.iter().next().unwrap();
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in host.neighborhood(u)? {
                if loop_ids.contains(&v) && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        if seen.len() != loop_ids.len() {
            return Err(Error::NotContiguous);
        }
        Ok(Motif { host, loop_ids })
    }

    /// The motif covering every loop of `host`.
    pub fn whole(host: Arc<Decomposition>) -> Self {
        let loop_ids = (0..host.loop_count()).collect();
        Motif { host, loop_ids }
    }

    pub fn host(&self) -> &Arc<Decomposition> {
        &self.host
    }

    pub fn structure(&self) -> &SecondaryStructure {
        &self.host.structure
    }

    pub fn loop_ids(&self) -> &BTreeSet<usize> {
        &self.loop_ids
    }

    pub fn loops(&self) -> impl Iterator<Item = &Loop> + '_ {
        self.loop_ids.iter().map(|&id| &self.host.loops[id])
    }

    pub fn cardinality(&self) -> usize {
        self.loop_ids.len()
    }

    pub fn contains_external(&self) -> bool {
        self.loop_ids.contains(&0)
    }

    /// Every pair touched by a motif loop, sorted.
    pub fn pairs(&self) -> Vec<Pair> {
        let set: BTreeSet<Pair> = self.loops().flat_map(|l| l.closing_pairs.iter().copied()).collect();
        set.into_iter().collect()
    }

    fn is_internal(&self, p: Pair) -> bool {
        self.host.loops_of_pair(p).is_some_and(|(a, b)| self.loop_ids.contains(&a) && self.loop_ids.contains(&b))
    }

    /// Pairs shared by two motif loops.
    pub fn internal_pairs(&self) -> Vec<Pair> {
        self.pairs().into_iter().filter(|&p| self.is_internal(p)).collect()
    }

    /// Pairs linking a motif loop to a loop outside the motif.
    pub fn boundary_pairs(&self) -> Vec<Pair> {
        self.pairs().into_iter().filter(|&p| !self.is_internal(p)).collect()
    }

    /// Boundary pair closing the topmost motif loop, absent when the motif holds the external loop.
    pub fn outer_pair(&self) -> Option<Pair> {
        self.loops().next().and_then(Loop::outer)
    }

    /// Boundary pairs other than the outer one, sorted.
    pub fn inner_boundary_pairs(&self) -> Vec<Pair> {
        let outer = self.outer_pair();
        self.boundary_pairs().into_iter().filter(|&p| Some(p) != outer).collect()
    }

    pub fn unpaired_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.loops().flat_map(Loop::unpaired_positions).collect();
        v.sort_unstable();
        v
    }

    /// Pair and unpaired positions of the motif, sorted.
    pub fn positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pairs().into_iter().flat_map(|(i, j)| [i, j]).collect();
        v.extend(self.unpaired_positions());
        v.sort_unstable();
        v
    }

    /// Number of bases touched by the motif.
    pub fn length(&self) -> usize {
        2 * self.pairs().len() + self.unpaired_positions().len()
    }

    /// Union of the critical positions of all motif loops.
    pub fn critical_positions(&self) -> CriticalPositions {
        CriticalPositions::from_positions(self.loops().flat_map(|l| l.critical_positions().positions().to_vec()))
    }

    pub fn is_submotif(&self, other: &Motif) -> Result<bool> {
        if self.host.structure != other.host.structure {
            return Err(Error::DifferentHost);
        }
        Ok(self.loop_ids.is_subset(&other.loop_ids))
    }

    /// Loops of `self` absent from `other` and loops of `other` absent from `self`,
    /// compared by loop identity (kind and pairs). Hosts must share a length.
    pub fn loop_difference<'a>(&'a self, other: &'a Motif) -> Result<(Vec<&'a Loop>, Vec<&'a Loop>)> {
        if self.host.len() != other.host.len() {
            return Err(Error::DifferentHost);
        }
        let a: HashSet<&Loop> = self.loops().collect();
        let b: HashSet<&Loop> = other.loops().collect();
        let only_a = self.loops().filter(|l| !b.contains(l)).collect();
        let only_b = other.loops().filter(|l| !a.contains(l)).collect();
        Ok((only_a, only_b))
    }

    /// Fold constraint that keeps every loop outside the motif fixed.
    pub fn constraint(&self) -> FoldConstraint {
        FoldConstraint::from_motif(self)
    }

    pub fn text_form(&self) -> String {
        let ids: Vec<String> = self.loop_ids.iter().map(|i| i.to_string()).collect();
        format!("{}|loops={}", self.host.structure.to_dotbracket(), ids.join(","))
    }
}

impl fmt::Display for Motif {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text_form())
    }
}

impl FromStr for Motif {
    type Err = Error;

    /// Parses `dotbracket|loops=0,1`.
    fn from_str(s: &str) -> Result<Self> {
        let (db, rest) = s
            .trim()
            .split_once('|')
            .ok_or_else(|| Error::Format(format!("expected `structure|loops=...`, got `{s}`")))?;
        let ids = rest.trim().strip_prefix("loops=").ok_or_else(|| Error::Format("missing `loops=`".into()))?;
        let ids = ids
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Format(format!("bad loop id `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        extract_motif(&db.parse()?, ids)
    }
}

pub fn extract_motif(y: &SecondaryStructure, ids: impl IntoIterator<Item = usize>) -> Result<Motif> {
    Motif::new(Arc::new(Decomposition::new(y.clone())), ids)
}

pub fn is_submotif(a: &Motif, b: &Motif) -> Result<bool> {
    a.is_submotif(b)
}

/// Union of critical positions over the loops in exactly one of the two motifs.
pub fn differential_positions(rival: &Motif, target: &Motif) -> Result<CriticalPositions> {
    let (only_r, only_t) = rival.loop_difference(target)?;
    let mut loops: Vec<&Loop> = only_r.into_iter().chain(only_t).collect();
    loops.sort_by_key(|l| (l.closing_pairs.first().copied(), l.kind));
    let mut pos: Vec<usize> = loops.iter().flat_map(|l| l.critical_positions().positions().to_vec()).collect();
    pos.sort_unstable();
    pos.dedup();
    Ok(CriticalPositions::from_positions(pos))
}

/// A motif shape written as a dot-bracket string whose outermost pair spans the whole
/// string; `()` marks an inner boundary pair (its interior lies outside the motif).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MotifShape(String);

impl MotifShape {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for MotifShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |why: &str| Error::MalformedShape(format!("`{s}`: {why}"));
        let chars: Vec<char> = s.chars().collect();
        if chars.len() < 2 || chars[0] != '(' || chars[chars.len() - 1] != ')' {
            return Err(bad("must be enclosed by one outer pair"));
        }
        let mut stack = Vec::new();
        for (k, &c) in chars.iter().enumerate() {
            match c {
                '(' => stack.push(k),
                ')' => {
                    let i = stack.pop().ok_or_else(|| bad("unbalanced"))?;
                    if stack.is_empty() && (i != 0 || k != chars.len() - 1) {
                        return Err(bad("must be enclosed by one outer pair"));
                    }
                    let inner = &chars[i + 1..k];
                    if k == i + 1 && i == 0 {
                        return Err(bad("outer pair encloses nothing"));
                    }
                    if k > i + 1 && !inner.contains(&'(') && inner.len() < 3 {
                        return Err(bad("hairpin with fewer than 3 unpaired bases"));
                    }
                }
                '.' => {}
                _ => return Err(bad("unexpected character")),
            }
        }
        if !stack.is_empty() {
            return Err(bad("unbalanced"));
        }
        Ok(MotifShape(s.to_string()))
    }
}

impl fmt::Display for MotifShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// All motif shapes of length at most `max_len`, sorted by length then text.
pub fn enumerate_shapes(max_len: usize) -> Vec<MotifShape> {
    // contents[n] = loop contents of exactly n characters.
    let mut items: Vec<Vec<String>> = vec![Vec::new(); max_len + 1];
    let mut contents: Vec<Vec<String>> = vec![Vec::new(); max_len + 1];
    // seqs[n] = (string, has_pair) item sequences of length n.
    let mut seqs: Vec<Vec<(String, bool, usize)>> = vec![Vec::new(); max_len + 1];
    seqs[0].push((String::new(), false, 0));
    for n in 1..=max_len {
        // items of length n: '.', "()", or "(" content ")"
        let mut it = Vec::new();
        if n == 1 {
            it.push(".".to_string());
        }
        if n == 2 {
            it.push("()".to_string());
        }
        if n >= 3 {
            for c in &contents[n - 2] {
                it.push(format!("({c})"));
            }
        }
        items[n] = it;
        let mut s = Vec::new();
        for first in 1..=n {
            for item in &items[first] {
                for (rest, has_pair, dots) in &seqs[n - first] {
                    let is_dot = item == ".";
                    s.push((format!("{item}{rest}"), *has_pair || !is_dot, dots + usize::from(is_dot)));
                }
            }
        }
        seqs[n] = s;
        contents[n] = seqs[n].iter().filter(|(_, hp, d)| *hp || *d >= 3).map(|(t, _, _)| t.clone()).collect();
    }
    let mut out: Vec<MotifShape> =
        (2..=max_len).flat_map(|n| contents[n - 2].iter().map(|c| MotifShape(format!("({c})")))).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

/// A motif realised in a minimal host: the outer boundary pair hangs off the external
/// loop and each inner boundary pair closes a fixed `AAA` hairpin.
#[derive(Debug, Clone)]
pub struct StandaloneEmbedding {
    pub shape: MotifShape,
    pub host: SecondaryStructure,
    pub motif: Motif,
    pub constraint: FoldConstraint,
}

pub fn embed_standalone(shape: &MotifShape) -> Result<StandaloneEmbedding> {
    let db = shape.as_str().replace("()", "(...)");
    let host: SecondaryStructure = db.parse()?;
    let decomposition = Arc::new(Decomposition::new(host.clone()));
    // Loops closed by a pair that came from `()` are fixed context.
    let boundary_opens: HashSet<usize> = {
        let mut set = HashSet::new();
        let mut offset = 0;
        for (k, w) in shape.as_str().as_bytes().windows(2).enumerate() {
            if w == b"()" {
                set.insert(k + 1 + offset);
                offset += 3;
            }
        }
        set
    };
    let ids: Vec<usize> = decomposition
        .loops
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind != LoopKind::External && !boundary_opens.contains(&l.closing_pairs[0].0))
        .map(|(id, _)| id)
        .collect();
    let motif = Motif::new(decomposition, ids)?;
    let constraint = motif.constraint();
    Ok(StandaloneEmbedding { shape: shape.clone(), host, motif, constraint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_dotbracket;

    fn host(db: &str) -> Arc<Decomposition> {
        Arc::new(Decomposition::new(parse_dotbracket(db).unwrap()))
    }

    #[test]
    fn pair_partition() {
        let h = host("((.((...))(...)..))");
        // loops: 0 E, 1 S(1,19), 2 M(2,18), 3 S(4,10), 4 H(5,9), 5 H(11,15)
        let m = Motif::new(h.clone(), [1, 2, 3]).unwrap();
        assert_eq!(m.internal_pairs(), vec![(2, 18), (4, 10)]);
        assert_eq!(m.boundary_pairs(), vec![(1, 19), (5, 9), (11, 15)]);
        assert_eq!(m.outer_pair(), Some((1, 19)));
        assert_eq!(m.inner_boundary_pairs(), vec![(5, 9), (11, 15)]);
        assert_eq!(m.length(), 2 * 5 + 3);
        assert_eq!(m.cardinality(), 3);
    }

    #[test]
    fn non_contiguous_is_rejected() {
        let h = host("((.((...))(...)..))");
        assert_eq!(Motif::new(h.clone(), [4, 5]).unwrap_err(), Error::NotContiguous);
        assert_eq!(Motif::new(h, [9]).unwrap_err(), Error::InvalidLoopId(9));
    }

    #[test]
    fn containment() {
        let h = host("((.((...))(...)..))");
        let a = Motif::new(h.clone(), [2, 3]).unwrap();
        let b = Motif::new(h.clone(), [1, 2, 3]).unwrap();
        assert!(a.is_submotif(&b).unwrap());
        assert!(!b.is_submotif(&a).unwrap());
        assert!(a.is_submotif(&a).unwrap());
        let other = extract_motif(&parse_dotbracket("(...)").unwrap(), [1]).unwrap();
        assert_eq!(a.is_submotif(&other), Err(Error::DifferentHost));
    }

    #[test]
    fn text_form_round_trip() {
        let m: Motif = "((...))|loops=0,1".parse().unwrap();
        assert_eq!(m.text_form(), "((...))|loops=0,1");
        assert!("((...))|loops=0,2".parse::<Motif>().is_err());
    }

    #[test]
    fn differential_positions_of_helix_and_merged_loop() {
        let target = extract_motif(&parse_dotbracket("(((...)))").unwrap(), [1, 2]).unwrap();
        let rival = extract_motif(&parse_dotbracket("(.(...).)").unwrap(), [1]).unwrap();
        let d = differential_positions(&rival, &target).unwrap();
        assert_eq!(d.positions(), &[1, 2, 3, 7, 8, 9]);
        assert_eq!(differential_positions(&target, &rival).unwrap(), d);
        assert!(differential_positions(&target, &target).unwrap().is_empty());
    }

    #[test]
    fn shapes_validate() {
        assert!("(...)".parse::<MotifShape>().is_ok());
        assert!("(())".parse::<MotifShape>().is_ok());
        assert!("(.()..())".parse::<MotifShape>().is_ok());
        assert!("()".parse::<MotifShape>().is_err());
        assert!("(..)".parse::<MotifShape>().is_err());
        assert!("(...)(...)".parse::<MotifShape>().is_err());
        assert!("((...)".parse::<MotifShape>().is_err());
        assert!("(.x.)".parse::<MotifShape>().is_err());
    }

    #[test]
    fn enumerated_shapes_are_valid_and_unique() {
        let shapes = enumerate_shapes(8);
        let set: HashSet<_> = shapes.iter().collect();
        assert_eq!(set.len(), shapes.len());
        for s in &shapes {
            assert_eq!(s.as_str().parse::<MotifShape>().as_ref(), Ok(s));
        }
        assert!(shapes.iter().any(|s| s.as_str() == "(())"));
        assert!(shapes.iter().any(|s| s.as_str() == "(...)"));
        assert!(shapes.iter().any(|s| s.as_str() == "((...))"));
    }

    #[test]
    fn standalone_embedding() {
        let e = embed_standalone(&"(...)".parse().unwrap()).unwrap();
        assert_eq!(e.host.to_dotbracket(), "(...)");
        assert_eq!(e.motif.cardinality(), 1);
        let e = embed_standalone(&"(.().())".parse().unwrap()).unwrap();
        assert_eq!(e.host.to_dotbracket(), "(.(...).(...))");
        assert_eq!(e.motif.cardinality(), 1);
        assert_eq!(e.motif.inner_boundary_pairs(), vec![(3, 7), (9, 13)]);
        let e = embed_standalone(&"((()))".parse().unwrap()).unwrap();
        assert_eq!(e.motif.cardinality(), 2);
        assert_eq!(e.motif.internal_pairs(), vec![(2, 8)]);
    }
}
