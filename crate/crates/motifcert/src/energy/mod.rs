//! Loop free energies in units of 0.01 kcal/mol.

mod params;

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

pub use params::{load_parameters, ParameterSet, Table, DEF, INF, MAXLOOP};

use crate::error::{Error, Result};
use crate::motif::Motif;
use crate::structure::{Base, Loop, LoopKind, Pair, SecondaryStructure, Sequence};

/// Free energy in units of 0.01 kcal/mol, or `INFINITE` for forbidden configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Energy(i32);

impl Energy {
    pub const ZERO: Energy = Energy(0);
    pub const INFINITE: Energy = Energy(i32::MAX);

    pub fn new(dcal: i32) -> Self {
        if dcal >= INF {
            Energy::INFINITE
        } else {
            Energy(dcal)
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Energy::INFINITE
    }

    /// Finite value in units of 0.01 kcal/mol.
    pub fn value(self) -> Option<i32> {
        (!self.is_infinite()).then_some(self.0)
    }

    pub fn kcal(self) -> Option<f64> {
        self.value().map(|v| v as f64 / 100.0)
    }

    /// `self - other` with infinities kept apart.
    pub fn minus(self, other: Energy) -> EnergyDelta {
        match (self.value(), other.value()) {
            (Some(a), Some(b)) => EnergyDelta::Finite(a - b),
            (None, Some(_)) => EnergyDelta::PlusInfinity,
            (Some(_), None) => EnergyDelta::MinusInfinity,
            (None, None) => EnergyDelta::Undefined,
        }
    }
}

impl Add for Energy {
    type Output = Energy;

    fn add(self, rhs: Energy) -> Energy {
        match (self.value(), rhs.value()) {
            (Some(a), Some(b)) => Energy::new(a + b),
            _ => Energy::INFINITE,
        }
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{:.2}", v as f64 / 100.0),
            None => f.write_str("inf"),
        }
    }
}

/// Difference of two energies, either of which may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnergyDelta {
    Finite(i32),
    PlusInfinity,
    MinusInfinity,
    Undefined,
}

impl EnergyDelta {
    pub fn is_nonpositive(self) -> bool {
        matches!(self, EnergyDelta::Finite(v) if v <= 0) || self == EnergyDelta::MinusInfinity
    }

    pub fn is_negative(self) -> bool {
        matches!(self, EnergyDelta::Finite(v) if v < 0) || self == EnergyDelta::MinusInfinity
    }
}

impl Neg for EnergyDelta {
    type Output = EnergyDelta;

    fn neg(self) -> EnergyDelta {
        match self {
            EnergyDelta::Finite(v) => EnergyDelta::Finite(-v),
            EnergyDelta::PlusInfinity => EnergyDelta::MinusInfinity,
            EnergyDelta::MinusInfinity => EnergyDelta::PlusInfinity,
            EnergyDelta::Undefined => EnergyDelta::Undefined,
        }
    }
}

impl fmt::Display for EnergyDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyDelta::Finite(v) => write!(f, "{:.2}", *v as f64 / 100.0),
            EnergyDelta::PlusInfinity => f.write_str("+inf"),
            EnergyDelta::MinusInfinity => f.write_str("-inf"),
            EnergyDelta::Undefined => f.write_str("undefined"),
        }
    }
}

/// Read access to nucleotides by 1-based position.
pub trait BaseLookup {
    fn base(&self, pos: usize) -> Result<Base>;
}

impl BaseLookup for Sequence {
    #[inline]
    fn base(&self, pos: usize) -> Result<Base> {
        self.get(pos).ok_or(Error::MissingPosition(pos))
    }
}

/// A partial map from positions to nucleotides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct NucleotideAssignment(BTreeMap<usize, Base>);

impl NucleotideAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pos: usize, b: Base) {
        self.0.insert(pos, b);
    }

    pub fn get(&self, pos: usize) -> Option<Base> {
        self.0.get(&pos).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Base)> + '_ {
        self.0.iter().map(|(&p, &b)| (p, b))
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }
}

impl FromIterator<(usize, Base)> for NucleotideAssignment {
    fn from_iter<I: IntoIterator<Item = (usize, Base)>>(iter: I) -> Self {
        NucleotideAssignment(iter.into_iter().collect())
    }
}

impl BaseLookup for NucleotideAssignment {
    #[inline]
    fn base(&self, pos: usize) -> Result<Base> {
        self.get(pos).ok_or(Error::MissingPosition(pos))
    }
}

/// Dense scratch assignment used by enumeration loops; unset positions are `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseAssignment(pub Vec<Option<Base>>);

impl DenseAssignment {
    pub fn new(n: usize) -> Self {
        DenseAssignment(vec![None; n + 1])
    }

    pub fn from_sequence(x: &Sequence) -> Self {
        let mut v = vec![None];
        v.extend(x.iter().map(Some));
        DenseAssignment(v)
    }

    pub fn set(&mut self, pos: usize, b: Base) {
        self.0[pos] = Some(b);
    }
}

impl BaseLookup for DenseAssignment {
    #[inline]
    fn base(&self, pos: usize) -> Result<Base> {
        self.0.get(pos).copied().flatten().ok_or(Error::MissingPosition(pos))
    }
}

/// Copies the nucleotides of `x` at `positions`.
pub fn project(x: &Sequence, positions: &[usize]) -> Result<NucleotideAssignment> {
    positions.iter().map(|&p| x.get(p).map(|b| (p, b)).ok_or(Error::OutOfRange(p))).collect()
}

#[inline]
fn code(b: Base) -> usize {
    b.index() + 1
}

/// Pair type index (CG=1 .. UA=6), or `None` for a non-canonical pair.
#[inline]
pub fn pair_type(a: Base, b: Base) -> Option<usize> {
    use Base::*;
    match (a, b) {
        (C, G) => Some(1),
        (G, C) => Some(2),
        (G, U) => Some(3),
        (U, G) => Some(4),
        (A, U) => Some(5),
        (U, A) => Some(6),
        _ => None,
    }
}

fn extrapolate(table: &[i32; MAXLOOP + 1], size: usize, lxc: f64) -> i32 {
    if size <= MAXLOOP {
        table[size]
    } else {
        table[MAXLOOP] + (lxc * (size as f64 / MAXLOOP as f64).ln()) as i32
    }
}

impl ParameterSet {
    #[inline]
    fn au(&self, t: usize) -> i32 {
        if t > 2 {
            self.terminal_au
        } else {
            0
        }
    }

    /// Hairpin closed by `(i, j)`.
    pub fn hairpin_energy<L: BaseLookup>(&self, i: usize, j: usize, x: &L) -> Result<Energy> {
        let size = j - i - 1;
        let Some(t) = pair_type(x.base(i)?, x.base(j)?) else {
            return Ok(Energy::INFINITE);
        };
        if size < 3 {
            return Ok(Energy::INFINITE);
        }
        let special = match size {
            3 => Some(&self.triloops),
            4 => Some(&self.tetraloops),
            6 => Some(&self.hexaloops),
            _ => None,
        };
        if let Some(table) = special.filter(|t| !t.is_empty()) {
            let key: String = (i..=j).map(|k| x.base(k).map(Base::to_char)).collect::<Result<_>>()?;
            if let Some(&e) = table.get(&key) {
                return Ok(Energy::new(e));
            }
        }
        let mut e = extrapolate(&self.hairpin, size, self.lxc);
        if size == 3 {
            return Ok(Energy::new(e + self.au(t)));
        }
        e += self.mismatch_hairpin.get(&[t, code(x.base(i + 1)?), code(x.base(j - 1)?)]);
        Ok(Energy::new(e))
    }

    /// Stack, bulge or interior loop with outer pair `(i, j)` and inner pair `(k, l)`.
    pub fn interior_energy<L: BaseLookup>(&self, i: usize, j: usize, k: usize, l: usize, x: &L) -> Result<Energy> {
        let (Some(t), Some(t2)) = (pair_type(x.base(i)?, x.base(j)?), pair_type(x.base(l)?, x.base(k)?)) else {
            return Ok(Energy::INFINITE);
        };
        let n1 = k - i - 1;
        let n2 = j - l - 1;
        let (ns, nl) = if n1 > n2 { (n2, n1) } else { (n1, n2) };
        if nl == 0 {
            return Ok(Energy::new(self.stack.get(&[t, t2])));
        }
        if ns == 0 {
            let mut e = extrapolate(&self.bulge, nl, self.lxc);
            if nl == 1 {
                e += self.stack.get(&[t, t2]);
            } else {
                e += self.au(t) + self.au(t2);
            }
            return Ok(Energy::new(e));
        }
        let si1 = code(x.base(i + 1)?);
        let sj1 = code(x.base(j - 1)?);
        let sp1 = code(x.base(k - 1)?);
        let sq1 = code(x.base(l + 1)?);
        let e = match (ns, nl) {
            (1, 1) if self.int11.is_some() => self.int11.as_ref().unwrap().get(&[t, t2, si1, sj1]),
            (1, 2) if self.int21.is_some() => {
                let tab = self.int21.as_ref().unwrap();
                if n1 == 1 {
                    tab.get(&[t, t2, si1, sq1, sj1])
                } else {
                    tab.get(&[t2, t, sq1, si1, sp1])
                }
            }
            (1, _) => {
                extrapolate(&self.interior, nl + 1, self.lxc)
                    + ((nl - ns) as i32 * self.ninio).min(self.max_ninio)
                    + self.mismatch_interior_1n.get(&[t, si1, sj1])
                    + self.mismatch_interior_1n.get(&[t2, sq1, sp1])
            }
            (2, 2) if self.int22.is_some() => {
                if t > 6 || t2 > 6 {
                    INF
                } else {
                    self.int22.as_ref().unwrap().get(&[t, t2, si1, sp1, sq1, sj1])
                }
            }
            (2, 3) => {
                self.interior[5]
                    + self.ninio.min(self.max_ninio)
                    + self.mismatch_interior_23.get(&[t, si1, sj1])
                    + self.mismatch_interior_23.get(&[t2, sq1, sp1])
            }
            _ => {
                extrapolate(&self.interior, n1 + n2, self.lxc)
                    + ((nl - ns) as i32 * self.ninio).min(self.max_ninio)
                    + self.mismatch_interior.get(&[t, si1, sj1])
                    + self.mismatch_interior.get(&[t2, sq1, sp1])
            }
        };
        Ok(Energy::new(e))
    }

    /// Contribution of one multiloop stem of pair type `t` with neighbours `s5`, `s3`.
    #[inline]
    pub fn ml_stem(&self, t: usize, s5: Base, s3: Base) -> i32 {
        self.mismatch_multi.get(&[t, code(s5), code(s3)]) + self.au(t) + self.ml_intern
    }

    /// Contribution of one exterior stem; neighbours may be absent at sequence ends.
    #[inline]
    pub fn ext_stem(&self, t: usize, s5: Option<Base>, s3: Option<Base>) -> i32 {
        let d = match (s5, s3) {
            (Some(a), Some(b)) => self.mismatch_exterior.get(&[t, code(a), code(b)]),
            (Some(a), None) => self.dangle5.get(&[t, code(a)]),
            (None, Some(b)) => self.dangle3.get(&[t, code(b)]),
            (None, None) => 0,
        };
        d + self.au(t)
    }

    /// Multiloop stem for branch `(k, l)`; for the closing pair pass `closing = true`.
    pub fn ml_stem_at<L: BaseLookup>(&self, k: usize, l: usize, closing: bool, x: &L) -> Result<Energy> {
        let (a, b) = if closing { (x.base(l)?, x.base(k)?) } else { (x.base(k)?, x.base(l)?) };
        let Some(t) = pair_type(a, b) else {
            return Ok(Energy::INFINITE);
        };
        let (s5, s3) = if closing { (x.base(l - 1)?, x.base(k + 1)?) } else { (x.base(k - 1)?, x.base(l + 1)?) };
        Ok(Energy::new(self.ml_stem(t, s5, s3)))
    }

    /// Exterior stem for branch `(k, l)` in a sequence of length `n`.
    pub fn ext_stem_at<L: BaseLookup>(&self, k: usize, l: usize, n: usize, x: &L) -> Result<Energy> {
        let Some(t) = pair_type(x.base(k)?, x.base(l)?) else {
            return Ok(Energy::INFINITE);
        };
        let s5 = if k > 1 { Some(x.base(k - 1)?) } else { None };
        let s3 = if l < n { Some(x.base(l + 1)?) } else { None };
        Ok(Energy::new(self.ext_stem(t, s5, s3)))
    }

    /// Energy of loop `l` reading nucleotides from `x`.
    pub fn loop_energy_with<L: BaseLookup>(&self, l: &Loop, x: &L) -> Result<Energy> {
        match l.kind {
            LoopKind::Hairpin => {
                let (i, j) = l.closing_pairs[0];
                self.hairpin_energy(i, j, x)
            }
            LoopKind::Stack | LoopKind::Bulge | LoopKind::Internal => {
                let (i, j) = l.closing_pairs[0];
                let (k, m) = l.closing_pairs[1];
                self.interior_energy(i, j, k, m, x)
            }
            LoopKind::Multi => {
                let (i, j) = l.closing_pairs[0];
                let mut e = Energy::new(self.ml_closing + self.ml_base * l.unpaired_total() as i32);
                e = e + self.ml_stem_at(i, j, true, x)?;
                for &(k, m) in l.branches() {
                    e = e + self.ml_stem_at(k, m, false, x)?;
                }
                Ok(e)
            }
            LoopKind::External => {
                let n = l.external_len().unwrap_or(0);
                l.branches().iter().map(|&(k, m)| self.ext_stem_at(k, m, n, x)).sum()
            }
        }
    }
}

/// Energy of `l` from the nucleotides in `a`.
pub fn loop_energy(p: &ParameterSet, l: &Loop, a: &NucleotideAssignment) -> Result<Energy> {
    if let Some(&missing) = l.critical_positions().positions().iter().find(|&&q| a.get(q).is_none()) {
        return Err(Error::MissingPosition(missing));
    }
    p.loop_energy_with(l, a)
}

/// Energy of every loop of `y` on `x`, in decomposition order.
pub fn loop_energies(p: &ParameterSet, x: &Sequence, y: &SecondaryStructure) -> Result<Vec<(Loop, Energy)>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: y.len(), found: x.len() });
    }
    y.decompose_loops()
        .into_iter()
        .map(|l| {
            let a = project(x, l.critical_positions().positions())?;
            let e = loop_energy(p, &l, &a)?;
            Ok((l, e))
        })
        .collect()
}

/// Total free energy of `y` on `x`.
pub fn structure_energy(p: &ParameterSet, x: &Sequence, y: &SecondaryStructure) -> Result<Energy> {
    Ok(loop_energies(p, x, y)?.into_iter().map(|(_, e)| e).sum())
}

/// Sum of the energies of the loops of `m`.
pub fn motif_energy<L: BaseLookup>(p: &ParameterSet, a: &L, m: &Motif) -> Result<Energy> {
    m.loops().map(|l| p.loop_energy_with(l, a)).sum()
}

/// An additive piece of a loop energy. Multiloop and exterior energies split into a
/// sequence-independent constant and one term per stem, so identical stems of two
/// loops cancel in an energy difference.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EnergyTerm {
    /// A hairpin, stack, bulge or interior loop as a whole.
    Loop(Loop),
    /// Multiloop closing penalty and unpaired-base cost.
    MultiConstant {
        unpaired: usize,
    },
    MultiStem {
        pair: Pair,
        closing: bool,
    },
    ExteriorStem {
        pair: Pair,
        n: usize,
    },
}

impl EnergyTerm {
    /// Positions the term reads.
    pub fn positions(&self) -> Vec<usize> {
        match self {
            EnergyTerm::Loop(l) => l.critical_positions().positions().to_vec(),
            EnergyTerm::MultiConstant { .. } => Vec::new(),
            EnergyTerm::MultiStem { pair: (i, j), closing: true } => vec![*i, *j, i + 1, j - 1],
            EnergyTerm::MultiStem { pair: (k, l), closing: false } => vec![*k, *l, k - 1, l + 1],
            EnergyTerm::ExteriorStem { pair: (k, l), n } => {
                let mut v = vec![*k, *l];
                if *k > 1 {
                    v.push(k - 1);
                }
                if l < n {
                    v.push(l + 1);
                }
                v
            }
        }
    }
}

/// Additive terms of `l`; their energies sum to the loop energy.
pub fn loop_terms(l: &Loop) -> Vec<EnergyTerm> {
    match l.kind {
        LoopKind::Multi => {
            let mut v = vec![
                EnergyTerm::MultiConstant { unpaired: l.unpaired_total() },
                EnergyTerm::MultiStem { pair: l.closing_pairs[0], closing: true },
            ];
            v.extend(l.branches().iter().map(|&pair| EnergyTerm::MultiStem { pair, closing: false }));
            v
        }
        LoopKind::External => {
            let n = l.external_len().unwrap_or(0);
            l.branches().iter().map(|&pair| EnergyTerm::ExteriorStem { pair, n }).collect()
        }
        _ => vec![EnergyTerm::Loop(l.clone())],
    }
}

impl ParameterSet {
    pub fn term_energy<L: BaseLookup>(&self, term: &EnergyTerm, x: &L) -> Result<Energy> {
        match term {
            EnergyTerm::Loop(l) => self.loop_energy_with(l, x),
            EnergyTerm::MultiConstant { unpaired } => {
                Ok(Energy::new(self.ml_closing + self.ml_base * *unpaired as i32))
            }
            EnergyTerm::MultiStem { pair: (i, j), closing } => self.ml_stem_at(*i, *j, *closing, x),
            EnergyTerm::ExteriorStem { pair: (k, l), n } => self.ext_stem_at(*k, *l, *n, x),
        }
    }
}

/// Terms of `rival` and of `target` left after cancelling those they share, counted
/// with multiplicity.
pub fn differential_terms(rival: &Motif, target: &Motif) -> Result<(Vec<EnergyTerm>, Vec<EnergyTerm>)> {
    let (only_r, only_t) = rival.loop_difference(target)?;
    let mut r: Vec<EnergyTerm> = only_r.into_iter().flat_map(loop_terms).collect();
    let mut t: Vec<EnergyTerm> = Vec::new();
    for term in only_t.into_iter().flat_map(loop_terms) {
        match r.iter().position(|x| *x == term) {
            Some(k) => {
                r.swap_remove(k);
            }
            None => t.push(term),
        }
    }
    Ok((r, t))
}

/// Energy of the loops of `rival` not in `target`, minus those of `target` not in `rival`.
pub fn delta_delta_g<L: BaseLookup>(p: &ParameterSet, a: &L, rival: &Motif, target: &Motif) -> Result<EnergyDelta> {
    let (only_rival, only_target) = rival.loop_difference(target)?;
    let er: Energy = only_rival.iter().map(|l| p.loop_energy_with(l, a)).sum::<Result<Energy>>()?;
    let et: Energy = only_target.iter().map(|l| p.loop_energy_with(l, a)).sum::<Result<Energy>>()?;
    Ok(er.minus(et))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_dotbracket;

    fn params() -> ParameterSet {
        ParameterSet::turner2004()
    }

    fn seq(s: &str) -> Sequence {
        s.parse().unwrap()
    }

    #[test]
    fn stack_matches_table_entry() {
        let p = params();
        let x = seq("CGAAACG");
        let loops = parse_dotbracket("((...))").unwrap().decompose_loops();
        let a = project(&x, loops[1].critical_positions().positions()).unwrap();
        // outer C-G, inner G-C read as (C, G) from the inside
        assert_eq!(loop_energy(&p, &loops[1], &a).unwrap(), Energy::new(p.stack.get(&[1, 1])));
        let x = seq("CCAAAGG");
        let a = project(&x, loops[1].critical_positions().positions()).unwrap();
        assert_eq!(loop_energy(&p, &loops[1], &a).unwrap(), Energy::new(p.stack.get(&[1, 2])));
        assert_eq!(p.stack.get(&[1, 2]), -330);
    }

    #[test]
    fn non_canonical_pair_is_infinite() {
        let p = params();
        let y = parse_dotbracket("((...))").unwrap();
        let x = seq("AAAAAAA");
        for l in y.decompose_loops() {
            if l.kind != LoopKind::External {
                let a = project(&x, l.critical_positions().positions()).unwrap();
                assert!(loop_energy(&p, &l, &a).unwrap().is_infinite());
            }
        }
        assert!(structure_energy(&p, &x, &y).unwrap().is_infinite());
    }

    #[test]
    fn special_tetraloop_uses_lookup() {
        let p = params();
        let x = seq("CAACGG");
        let l = &parse_dotbracket("(....)").unwrap().decompose_loops()[1];
        let a = project(&x, l.critical_positions().positions()).unwrap();
        assert_eq!(loop_energy(&p, l, &a).unwrap(), Energy::new(550));
    }

    #[test]
    fn missing_position_is_reported() {
        let p = params();
        let l = &parse_dotbracket("(...)").unwrap().decompose_loops()[1];
        let a: NucleotideAssignment = [(1, Base::G), (5, Base::C)].into_iter().collect();
        assert_eq!(loop_energy(&p, l, &a), Err(Error::MissingPosition(2)));
    }

    #[test]
    fn empty_structure_is_zero() {
        let p = params();
        assert_eq!(structure_energy(&p, &seq("ACG"), &parse_dotbracket("...").unwrap()).unwrap(), Energy::ZERO);
    }

    #[test]
    fn projection() {
        let x = seq("ACGU");
        let a = project(&x, &[2, 4]).unwrap();
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![(2, Base::C), (4, Base::U)]);
        assert!(project(&x, &[]).unwrap().is_empty());
        assert_eq!(project(&x, &[5]), Err(Error::OutOfRange(5)));
    }

    #[test]
    fn long_hairpin_extrapolation_truncates() {
        let p = params();
        let size = 40;
        let x: Sequence = format!("G{}C", "A".repeat(size)).parse().unwrap();
        let e = p.hairpin_energy(1, size + 2, &x).unwrap().value().unwrap();
        let expected = p.hairpin[30] + (p.lxc * (40.0f64 / 30.0).ln()) as i32 + p.mismatch_hairpin.get(&[2, 1, 1]);
        assert_eq!(e, expected);
    }

    #[test]
    fn delta_arithmetic() {
        assert_eq!(Energy::new(5).minus(Energy::new(7)), EnergyDelta::Finite(-2));
        assert_eq!(Energy::INFINITE.minus(Energy::new(7)), EnergyDelta::PlusInfinity);
        assert_eq!(-EnergyDelta::PlusInfinity, EnergyDelta::MinusInfinity);
        assert!(EnergyDelta::MinusInfinity.is_nonpositive());
        assert!(!EnergyDelta::Undefined.is_nonpositive());
        assert_eq!(Energy::new(3) + Energy::INFINITE, Energy::INFINITE);
        assert_eq!(Energy::new(-450).to_string(), "-4.50");
    }
}
