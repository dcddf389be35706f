//! Sequences, dot-bracket structures and their loop decomposition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of unpaired bases enclosed by a hairpin.
pub const MIN_HAIRPIN: usize = 3;

/// A base pair `(i, j)` with `i < j`, 1-based.
pub type Pair = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Base {
    A,
    C,
    G,
    U,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::U];

    /// Index into `ALL` (A=0 .. U=3).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Base {
        Base::ALL[i]
    }

    pub fn from_char(c: char) -> Option<Base> {
        match c.to_ascii_uppercase() {
            'A' => Some(Base::A),
            'C' => Some(Base::C),
            'G' => Some(Base::G),
            'U' | 'T' => Some(Base::U),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        ['A', 'C', 'G', 'U'][self.index()]
    }

    /// Preferred Watson-Crick partner.
    pub fn complement(self) -> Base {
        match self {
            Base::A => Base::U,
            Base::C => Base::G,
            Base::G => Base::C,
            Base::U => Base::A,
        }
    }
}

/// The six canonical pairs, in the order CG, GC, GU, UG, AU, UA.
pub const CANONICAL_PAIRS: [(Base, Base); 6] = [
    (Base::C, Base::G),
    (Base::G, Base::C),
    (Base::G, Base::U),
    (Base::U, Base::G),
    (Base::A, Base::U),
    (Base::U, Base::A),
];

pub fn is_canonical(a: Base, b: Base) -> bool {
    CANONICAL_PAIRS.contains(&(a, b))
}

/// An RNA sequence over {A, C, G, U}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence(Vec<Base>);

impl Sequence {
    pub fn new(bases: Vec<Base>) -> Self {
        Sequence(bases)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Base at 1-based position `pos`.
    pub fn get(&self, pos: usize) -> Option<Base> {
        pos.checked_sub(1).and_then(|k| self.0.get(k)).copied()
    }

    pub fn set(&mut self, pos: usize, b: Base) {
        self.0[pos - 1] = b;
    }

    pub fn bases(&self) -> &[Base] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Base> + '_ {
        self.0.iter().copied()
    }
}

impl FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .enumerate()
            .map(|(k, c)| Base::from_char(c).ok_or(Error::InvalidCharacter(k + 1, c)))
            .collect::<Result<Vec<_>>>()
            .map(Sequence)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{}", b.to_char()))
    }
}

/// A pseudoknot-free secondary structure over positions `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SecondaryStructure {
    // partner[0] is unused so positions index directly.
    partner: Vec<Option<usize>>,
}

impl SecondaryStructure {
    /// Empty structure of length `n`.
    pub fn unpaired(n: usize) -> Self {
        SecondaryStructure { partner: vec![None; n + 1] }
    }

    /// Builds a structure from a pair list, checking overlap, crossing and hairpin size.
    pub fn from_pairs(n: usize, pairs: &[Pair]) -> Result<Self> {
        let mut s = Self::unpaired(n);
        for &(i, j) in pairs {
            if i == 0 || j > n || i >= j {
                return Err(Error::InvalidPairs(format!("({i}, {j}) outside 1..={n}")));
            }
            if s.partner[i].is_some() || s.partner[j].is_some() {
                return Err(Error::InvalidPairs(format!("position reused by ({i}, {j})")));
            }
            s.partner[i] = Some(j);
            s.partner[j] = Some(i);
        }
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let mut stack: Vec<usize> = Vec::new();
        for k in 1..=self.len() {
            match self.partner[k] {
                Some(p) if p > k => stack.push(k),
                Some(p) => {
                    if stack.pop() != Some(p) {
                        return Err(Error::InvalidPairs(format!("pair ({p}, {k}) crosses another pair")));
                    }
                    if k - p - 1 < MIN_HAIRPIN && (p + 1..k).all(|q| self.partner[q].is_none()) {
                        return Err(Error::InvalidHairpin(p, k));
                    }
                }
                None => {}
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.partner.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn partner(&self, pos: usize) -> Option<usize> {
        self.partner.get(pos).copied().flatten()
    }

    pub fn is_paired(&self, pos: usize) -> bool {
        self.partner(pos).is_some()
    }

    /// Pairs sorted by their 5' position.
    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        (1..=self.len()).filter_map(move |i| self.partner[i].filter(|&j| j > i).map(|j| (i, j)))
    }

    pub fn pair_count(&self) -> usize {
        self.pairs().count()
    }

    pub fn to_dotbracket(&self) -> String {
        (1..=self.len())
            .map(|k| match self.partner[k] {
                Some(p) if p > k => '(',
                Some(_) => ')',
                None => '.',
            })
            .collect()
    }

    /// Loops of the structure: the external loop first, then the loop closed by each
    /// pair in order of its 5' position.
    pub fn decompose_loops(&self) -> Vec<Loop> {
        let mut loops = vec![self.scan_loop(None)];
        loops.extend(self.pairs().map(|p| self.scan_loop(Some(p))));
        loops
    }

    fn scan_loop(&self, closing: Option<Pair>) -> Loop {
        let (lo, hi) = match closing {
            Some((i, j)) => (i + 1, j),
            None => (1, self.len() + 1),
        };
        let mut pairs: Vec<Pair> = closing.into_iter().collect();
        let mut counts = Vec::new();
        let mut run = 0;
        let mut k = lo;
        while k < hi {
            match self.partner[k] {
                Some(l) if l > k => {
                    counts.push(run);
                    run = 0;
                    pairs.push((k, l));
                    k = l + 1;
                }
                _ => {
                    run += 1;
                    k += 1;
                }
            }
        }
        counts.push(run);
        let kind = match closing {
            None => LoopKind::External,
            Some(_) => match pairs.len() {
                1 => LoopKind::Hairpin,
                2 => match (counts[0], counts[1]) {
                    (0, 0) => LoopKind::Stack,
                    (0, _) | (_, 0) => LoopKind::Bulge,
                    _ => LoopKind::Internal,
                },
                _ => LoopKind::Multi,
            },
        };
        Loop { kind, closing_pairs: pairs, unpaired_counts: counts }
    }
}

impl FromStr for SecondaryStructure {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let n = text.chars().count();
        let mut s = Self::unpaired(n);
        let mut open = Vec::new();
        for (k, c) in text.chars().enumerate() {
            let pos = k + 1;
            match c {
                '(' => open.push(pos),
                ')' => {
                    let i = open.pop().ok_or(Error::UnbalancedBrackets(pos))?;
                    s.partner[i] = Some(pos);
                    s.partner[pos] = Some(i);
                }
                '.' => {}
                _ => return Err(Error::InvalidCharacter(pos, c)),
            }
        }
        if let Some(&i) = open.first() {
            return Err(Error::UnbalancedBrackets(i));
        }
        s.validate()?;
        Ok(s)
    }
}

impl fmt::Display for SecondaryStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dotbracket())
    }
}

pub fn parse_dotbracket(text: &str) -> Result<SecondaryStructure> {
    text.parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LoopKind {
    External,
    Hairpin,
    Stack,
    Bulge,
    Internal,
    Multi,
}

impl LoopKind {
    /// One-letter label used by loop-pair graphs.
    pub fn letter(self) -> char {
        match self {
            LoopKind::External => 'E',
            LoopKind::Hairpin => 'H',
            LoopKind::Stack => 'S',
            LoopKind::Bulge => 'B',
            LoopKind::Internal => 'I',
            LoopKind::Multi => 'M',
        }
    }
}

impl fmt::Display for LoopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A loop identified by its pairs.
///
/// For enclosed loops `closing_pairs[0]` is the closing pair and the rest are branches
/// in 5'→3' order; the external loop lists only its branches. `unpaired_counts` has one
/// entry per segment, so its length is the number of branches plus one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Loop {
    pub kind: LoopKind,
    pub closing_pairs: Vec<Pair>,
    pub unpaired_counts: Vec<usize>,
}

impl Loop {
    pub fn is_external(&self) -> bool {
        self.kind == LoopKind::External
    }

    /// Closing pair of an enclosed loop.
    pub fn outer(&self) -> Option<Pair> {
        (!self.is_external()).then(|| self.closing_pairs[0])
    }

    pub fn branches(&self) -> &[Pair] {
        if self.is_external() {
            &self.closing_pairs
        } else {
            &self.closing_pairs[1..]
        }
    }

    pub fn unpaired_total(&self) -> usize {
        self.unpaired_counts.iter().sum()
    }

    /// Length of the sequence an external loop spans.
    pub fn external_len(&self) -> Option<usize> {
        self.is_external().then(|| {
            self.closing_pairs.last().map_or(0, |&(_, j)| j) + self.unpaired_counts.last().copied().unwrap_or(0)
        })
    }

    /// Segment boundaries `(after, before)`: unpaired bases of a segment lie strictly between.
    fn segments(&self) -> Vec<(usize, usize)> {
        let mut ends: Vec<(usize, usize)> = Vec::with_capacity(self.closing_pairs.len() + 1);
        let (start, stop) = match self.outer() {
            Some((i, j)) => (i, j),
            None => (0, self.external_len().unwrap_or(0) + 1),
        };
        let mut prev = start;
        for &(k, l) in self.branches() {
            ends.push((prev, k));
            prev = l;
        }
        ends.push((prev, stop));
        ends
    }

    pub fn unpaired_positions(&self) -> impl Iterator<Item = usize> {
        self.segments().into_iter().flat_map(|(a, b)| a + 1..b)
    }

    pub fn pair_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.closing_pairs.iter().flat_map(|&(i, j)| [i, j])
    }

    /// Pair positions followed by mismatch positions; special hairpin sizes add the
    /// remaining unpaired bases, which sequence-specific lookups read.
    pub fn critical_positions(&self) -> CriticalPositions {
        let pairs: Vec<usize> = self.pair_positions().collect();
        let mut mismatches = Vec::new();
        let mut extra = Vec::new();
        match self.kind {
            LoopKind::Hairpin => {
                let (i, j) = self.closing_pairs[0];
                mismatches.extend([i + 1, j - 1]);
                if matches!(j - i - 1, 3 | 4 | 6) {
                    extra.extend(i + 2..j - 1);
                }
            }
            LoopKind::Internal => {
                let (i, j) = self.closing_pairs[0];
                let (k, l) = self.closing_pairs[1];
                mismatches.extend([i + 1, j - 1, k - 1, l + 1]);
            }
            LoopKind::Stack | LoopKind::Bulge => {}
            LoopKind::Multi => {
                let (i, j) = self.closing_pairs[0];
                mismatches.extend([i + 1, j - 1]);
                for &(k, l) in self.branches() {
                    mismatches.extend([k - 1, l + 1]);
                }
            }
            LoopKind::External => {
                let n = self.external_len().unwrap_or(0);
                for &(k, l) in self.branches() {
                    if k > 1 {
                        mismatches.push(k - 1);
                    }
                    if l < n {
                        mismatches.push(l + 1);
                    }
                }
            }
        }
        CriticalPositions::from_parts(pairs, mismatches, extra)
    }
}

/// Critical positions of a loop: pair positions, then mismatch positions, then any
/// further positions read by sequence-specific hairpin lookups. Deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CriticalPositions {
    positions: Vec<usize>,
    n_pairs: usize,
    n_mismatches: usize,
}

impl CriticalPositions {
    pub fn from_parts(pairs: Vec<usize>, mismatches: Vec<usize>, extra: Vec<usize>) -> Self {
        let mut positions: Vec<usize> = Vec::new();
        let mut push = |v: Vec<usize>| {
            let before = positions.len();
            for p in v {
                if !positions.contains(&p) {
                    positions.push(p);
                }
            }
            positions.len() - before
        };
        let n_pairs = push(pairs);
        let n_mismatches = push(mismatches);
        push(extra);
        CriticalPositions { positions, n_pairs, n_mismatches }
    }

    /// Arbitrary position list (e.g. a union of several loops), kept in the given order.
    pub fn from_positions(positions: impl IntoIterator<Item = usize>) -> Self {
        Self::from_parts(Vec::new(), positions.into_iter().collect(), Vec::new())
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn pair_positions(&self) -> &[usize] {
        &self.positions[..self.n_pairs]
    }

    pub fn mismatch_positions(&self) -> &[usize] {
        &self.positions[self.n_pairs..self.n_pairs + self.n_mismatches]
    }

    pub fn sequence_positions(&self) -> &[usize] {
        &self.positions[self.n_pairs + self.n_mismatches..]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.positions.contains(&pos)
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.positions.clone();
        v.sort_unstable();
        v
    }
}

/// `critical_positions` as a free function that also checks the index range.
pub fn critical_positions(l: &Loop, n: usize) -> Result<CriticalPositions> {
    let cp = l.critical_positions();
    match cp.positions().iter().find(|&&p| p == 0 || p > n) {
        Some(&p) => Err(Error::OutOfRange(p)),
        None => Ok(cp),
    }
}

/// A structure together with its decomposition and pair/loop incidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub structure: SecondaryStructure,
    pub loops: Vec<Loop>,
    // closing_loop[i] = id of the loop closed by the pair opening at i.
    closing_loop: Vec<Option<usize>>,
    // enclosing_loop[i] = id of the loop holding the pair opening at i as a branch.
    enclosing_loop: Vec<Option<usize>>,
}

impl Decomposition {
    pub fn new(structure: SecondaryStructure) -> Self {
        let loops = structure.decompose_loops();
        let n = structure.len();
        let mut closing_loop = vec![None; n + 1];
        let mut enclosing_loop = vec![None; n + 1];
        for (id, l) in loops.iter().enumerate() {
            if let Some((i, _)) = l.outer() {
                closing_loop[i] = Some(id);
            }
            for &(k, _) in l.branches() {
                enclosing_loop[k] = Some(id);
            }
        }
        Decomposition { structure, loops, closing_loop, enclosing_loop }
    }

    pub fn len(&self) -> usize {
        self.structure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structure.is_empty()
    }

    pub fn loop_count(&self) -> usize {
        self.loops.len()
    }

    pub fn get(&self, id: usize) -> Result<&Loop> {
        self.loops.get(id).ok_or(Error::InvalidLoopId(id))
    }

    /// The two loops sharing pair `p`: (enclosing loop, loop closed by `p`).
    pub fn loops_of_pair(&self, p: Pair) -> Option<(usize, usize)> {
        Some((self.enclosing_loop.get(p.0).copied()??, self.closing_loop.get(p.0).copied()??))
    }

    /// Loops sharing a pair with `id`, ordered by the 5' position of the shared pair.
    pub fn neighborhood(&self, id: usize) -> Result<Vec<usize>> {
        let l = self.get(id)?;
        let mut out = Vec::with_capacity(l.closing_pairs.len());
        if let Some((i, _)) = l.outer() {
            out.extend(self.enclosing_loop[i]);
        }
        for &(k, _) in l.branches() {
            out.extend(self.closing_loop[k]);
        }
        Ok(out)
    }
}

/// Loop neighbourhood of `loop_id` in `y`.
pub fn loop_neighborhood(y: &SecondaryStructure, loop_id: usize) -> Result<Vec<usize>> {
    Decomposition::new(y.clone()).neighborhood(loop_id)
}

/// One record of a structure file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureRecord {
    pub id: String,
    pub structure: SecondaryStructure,
    pub sequence: Option<Sequence>,
}

/// Reads `id<TAB>dotbracket[<TAB>sequence]` or bare dot-bracket lines; `#` lines and blank
/// lines are skipped. Bare records are named by line number.
pub fn read_structure_records(text: &str) -> Result<Vec<StructureRecord>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |e: Error| Error::ParseError { line: k + 1, reason: e.to_string() };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let (id, db, seq) = match fields.as_slice() {
            [db] => (format!("line{}", k + 1), *db, None),
            [id, db] => (id.to_string(), *db, None),
            [id, db, seq, ..] => (id.to_string(), *db, Some(*seq)),
            [] => unreachable!(),
        };
        let structure: SecondaryStructure = db.parse().map_err(err)?;
        let sequence = match seq {
            Some(s) => {
                let s: Sequence = s.parse().map_err(err)?;
                if s.len() != structure.len() {
                    return Err(Error::ParseError {
                        line: k + 1,
                        reason: "sequence and structure lengths differ".into(),
                    });
                }
                Some(s)
            }
            None => None,
        };
        out.push(StructureRecord { id, structure, sequence });
    }
    Ok(out)
}
