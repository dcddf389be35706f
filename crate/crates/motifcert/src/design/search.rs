//! Rival-motif search and the brute-force designability oracle.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constraint::{
    default_fill, sample_with, Constraint, DesignSpace, SpaceStatus, JOIN_STEP_LIMIT, MAX_POSITIONS,
};
use crate::energy::{differential_terms, DenseAssignment, EnergyTerm, ParameterSet};
use crate::error::{Error, Result};
use crate::fold::MotifEnsemble;
use crate::motif::{differential_positions, Motif};
use crate::structure::{Base, Decomposition, Loop, Pair, SecondaryStructure, Sequence, CANONICAL_PAIRS};

/// Limits of one rival search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Largest enumeration of differential positions for one rival.
    pub m: u128,
    /// Largest number of rivals.
    pub n: usize,
    /// Samples drawn per iteration.
    pub k: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { m: 10_000_000_000, n: 100_000, k: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnknownReason {
    BudgetN,
    BudgetM,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictKind {
    Designable(Sequence),
    Undesignable(Vec<Motif>),
    Unknown(UnknownReason),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub iterations: usize,
    pub samples: usize,
    pub rivals: usize,
    pub join_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub stats: SearchStats,
}

impl Verdict {
    pub fn is_designable(&self) -> bool {
        matches!(self.kind, VerdictKind::Designable(_))
    }

    pub fn is_undesignable(&self) -> bool {
        matches!(self.kind, VerdictKind::Undesignable(_))
    }
}

/// One position group of an enumeration: a lone position or both ends of a target pair.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Single(usize),
    Pair(usize, usize),
}

impl Slot {
    fn arity(self) -> u128 {
        match self {
            Slot::Single(_) => 4,
            Slot::Pair(..) => CANONICAL_PAIRS.len() as u128,
        }
    }

    fn set(self, choice: usize, a: &mut DenseAssignment) {
        match self {
            Slot::Single(q) => a.set(q, Base::from_index(choice)),
            Slot::Pair(i, j) => {
                let (bi, bj) = CANONICAL_PAIRS[choice];
                a.set(i, bi);
                a.set(j, bj);
            }
        }
    }
}

/// Groups `positions` into slots: a pair of `y` whose two ends are both listed takes
/// one of the six canonical pairs, every other position one of four bases.
fn slots(positions: &[usize], y: &SecondaryStructure) -> Vec<Slot> {
    let listed: HashSet<usize> = positions.iter().copied().collect();
    positions
        .iter()
        .filter_map(|&q| match y.partner(q) {
            Some(r) if listed.contains(&r) => (q < r).then_some(Slot::Pair(q, r)),
            _ => Some(Slot::Single(q)),
        })
        .collect()
}

fn enumeration_size(slots: &[Slot]) -> u128 {
    slots.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.arity())).unwrap_or(u128::MAX)
}

fn decode(mut idx: u128, slots: &[Slot], a: &mut DenseAssignment) {
    for &s in slots {
        let r = s.arity();
        s.set((idx % r) as usize, a);
        idx /= r;
    }
}

/// Positions read by the energy terms that differ between `rival` and `target`. A
/// subset of their differential positions: multiloop and exterior stems present in
/// both motifs cancel.
pub fn effective_positions(rival: &Motif, target: &Motif) -> Result<Vec<usize>> {
    let (r, t) = differential_terms(rival, target)?;
    let mut v: Vec<usize> = r.iter().chain(&t).flat_map(EnergyTerm::positions).collect();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// Stand-in for an infinite term inside bounds.
const BOUND_INF: i64 = 1 << 40;

/// Energy of one term tabulated over the slots it reads, with min/max bounds for
/// every prefix of those slots.
struct TermTable {
    /// (slot index, stride), slot indices increasing.
    slots: Vec<(usize, usize)>,
    values: Vec<Option<i32>>,
    /// bounds[c][i]: min and max over entries whose first c slots encode to i.
    bounds: Vec<Vec<(i64, i64)>>,
}

impl TermTable {
    fn new(p: &ParameterSet, term: &EnergyTerm, sl: &[Slot], n: usize) -> Result<Self> {
        let read: HashSet<usize> = term.positions().into_iter().collect();
        let mut slots = Vec::new();
        let mut stride = 1;
        for (k, s) in sl.iter().enumerate() {
            let hit = match *s {
                Slot::Single(q) => read.contains(&q),
                Slot::Pair(i, j) => read.contains(&i) || read.contains(&j),
            };
            if hit {
                slots.push((k, stride));
                stride *= s.arity() as usize;
            }
        }
        let mut a = DenseAssignment::new(n);
        let values: Vec<Option<i32>> = (0..stride)
            .map(|local| {
                for &(k, st) in &slots {
                    let r = sl[k].arity() as usize;
                    sl[k].set(local / st % r, &mut a);
                }
                Ok(p.term_energy(term, &a)?.value())
            })
            .collect::<Result<_>>()?;
        let mut bounds =
            vec![values.iter().map(|v| v.map_or((BOUND_INF, BOUND_INF), |e| (e.into(), e.into()))).collect::<Vec<_>>()];
        for c in (0..slots.len()).rev() {
            let prefix = slots[c].1;
            let finer = &bounds[0];
            let mut b = vec![(i64::MAX, i64::MIN); prefix];
            for (i, &(lo, hi)) in finer.iter().enumerate() {
                let e = &mut b[i % prefix];
                e.0 = e.0.min(lo);
                e.1 = e.1.max(hi);
            }
            bounds.insert(0, b);
        }
        Ok(TermTable { slots, values, bounds })
    }

    #[inline]
    fn get(&self, digits: &[usize]) -> Option<i32> {
        self.values[self.slots.iter().map(|&(k, st)| digits[k] * st).sum::<usize>()]
    }

    /// Bounds given that slots below `depth` are fixed by `digits`.
    #[inline]
    fn bound(&self, depth: usize, digits: &[usize]) -> (i64, i64) {
        let c = self.slots.partition_point(|&(k, _)| k < depth);
        let i: usize = self.slots[..c].iter().map(|&(k, st)| digits[k] * st).sum();
        self.bounds[c][i]
    }
}

/// Sum of tabulated terms; `None` when one of them is infinite.
fn table_sum(tables: &[TermTable], digits: &[usize]) -> Option<i64> {
    tables.iter().try_fold(0i64, |acc, t| Some(acc + i64::from(t.get(digits)?)))
}

/// Leaves visited plus tuples stored per rival before the rival counts as over budget.
/// Keeps one constraint under 256 MiB whatever M allows.
pub const WALK_WORK_CAP: u64 = 1 << 25;

/// Depth-first enumeration of slot choices that skips subtrees where the sign of
/// E(rival) - E(target) is already decided.
struct Walk<'a> {
    rival: &'a [TermTable],
    target: &'a [TermTable],
    codes: &'a [Vec<u64>],
}

impl Walk<'_> {
    /// Returns false once `work` (leaves visited plus tuples emitted) runs out.
    fn run(&self, depth: usize, digits: &mut [usize], code: u64, out: &mut Vec<u64>, work: &mut u64) -> bool {
        if depth == digits.len() {
            if *work == 0 {
                return false;
            }
            *work -= 1;
            // target wins when strictly lower, or when the rival is infinite and the target is not
            let wins = match (table_sum(self.rival, digits), table_sum(self.target, digits)) {
                (Some(er), Some(et)) => er > et,
                (None, Some(_)) => true,
                _ => false,
            };
            if wins {
                out.push(code);
            }
            return true;
        }
        if depth > 0 {
            let (mut lo, mut hi) = (0i64, 0i64);
            for t in self.rival {
                let (a, b) = t.bound(depth, digits);
                lo += a;
                hi += b;
            }
            let mut target_inf = false;
            for t in self.target {
                let (a, b) = t.bound(depth, digits);
                target_inf |= b >= BOUND_INF;
                lo -= b;
                hi -= a;
            }
            if !target_inf {
                if hi <= 0 {
                    return true;
                }
                if lo > 0 && lo < BOUND_INF / 2 {
                    return self.emit_all(depth, code, out, work);
                }
            }
        }
        (0..self.codes[depth].len()).all(|c| {
            digits[depth] = c;
            self.run(depth + 1, digits, code + self.codes[depth][c], out, work)
        })
    }

    fn emit_all(&self, depth: usize, code: u64, out: &mut Vec<u64>, work: &mut u64) -> bool {
        if depth == self.codes.len() {
            if *work == 0 {
                return false;
            }
            *work -= 1;
            out.push(code);
            return true;
        }
        self.codes[depth].iter().all(|&c| self.emit_all(depth + 1, code + c, out, work))
    }
}

/// Assignments of the effective differential positions on which the target strictly
/// beats the rival.
pub fn constraint_from_rival(p: &ParameterSet, target: &Motif, rival: &Motif, budget_m: u128) -> Result<Constraint> {
    let positions = effective_positions(rival, target)?;
    let sl = slots(&positions, target.structure());
    let size = enumeration_size(&sl);
    if size > budget_m || positions.len() > MAX_POSITIONS {
        return Err(Error::BudgetExceeded(size));
    }
    let (only_r, only_t) = differential_terms(rival, target)?;
    let n = target.structure().len();
    let table = |terms: &[EnergyTerm]| terms.iter().map(|t| TermTable::new(p, t, &sl, n)).collect::<Result<Vec<_>>>();
    let (tr, tt) = (table(&only_r)?, table(&only_t)?);
    // tuple bits contributed by each choice of each slot
    let index: HashMap<usize, usize> = positions.iter().enumerate().map(|(k, &q)| (q, k)).collect();
    let codes: Vec<Vec<u64>> = sl
        .iter()
        .map(|&s| {
            (0..s.arity() as usize)
                .map(|c| {
                    let mut a = DenseAssignment::new(n);
                    s.set(c, &mut a);
                    a.0.iter()
                        .enumerate()
                        .filter_map(|(q, b)| Some((b.as_ref()?.index() as u64) << (2 * index[&q])))
                        .sum()
                })
                .collect()
        })
        .collect();
    let walk = Walk { rival: &tr, target: &tt, codes: &codes };
    if sl.is_empty() {
        let mut out = Vec::new();
        walk.run(0, &mut [], 0, &mut out, &mut 1);
        return Constraint::new(positions, out);
    }
    let share = WALK_WORK_CAP / codes[0].len() as u64;
    let parts: Option<Vec<Vec<u64>>> = (0..codes[0].len())
        .into_par_iter()
        .map(|c| {
            let mut digits = vec![0; sl.len()];
            digits[0] = c;
            let (mut out, mut work) = (Vec::new(), share);
            walk.run(1, &mut digits, codes[0][c], &mut out, &mut work).then_some(out)
        })
        .collect();
    let parts = parts.ok_or(Error::BudgetExceeded(size))?;
    Constraint::new(positions, parts.into_iter().flatten())
}

/// Whether `rival` is at least as stable as `target` on every assignment of the
/// differential positions, which proves the target undesignable.
pub fn verify_single_rival(p: &ParameterSet, target: &Motif, rival: &Motif, budget_m: u128) -> Result<bool> {
    if differential_positions(rival, target)?.is_empty() {
        return Err(Error::InvalidConstraint("rival has the same loops as the target".into()));
    }
    Ok(constraint_from_rival(p, target, rival, budget_m)?.is_empty())
}

/// The motif formed by the free pairs of a region fold in place of the target's interior.
pub fn rival_motif(target: &Motif, free_pairs: &[Pair]) -> Result<Motif> {
    let y = target.structure();
    let internal: HashSet<Pair> = target.internal_pairs().into_iter().collect();
    let pairs: Vec<Pair> = y.pairs().filter(|p| !internal.contains(p)).chain(free_pairs.iter().copied()).collect();
    let host = Arc::new(Decomposition::new(SecondaryStructure::from_pairs(y.len(), &pairs)?));
    let outside: HashSet<&Loop> = target
        .host()
        .loops
        .iter()
        .enumerate()
        .filter(|(id, _)| !target.loop_ids().contains(id))
        .map(|(_, l)| l)
        .collect();
    let ids: Vec<usize> =
        host.loops.iter().enumerate().filter(|(_, l)| !outside.contains(l)).map(|(id, _)| id).collect();
    Motif::new(host, ids)
}

/// Rival search settings beyond the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub budget: SearchBudget,
    pub seed: u64,
    pub join_step_limit: usize,
    /// Failed joins or iterations without a new rival tolerated before giving up.
    pub retry_limit: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: SearchBudget::default(), seed: 0, join_step_limit: JOIN_STEP_LIMIT, retry_limit: 1000 }
    }
}

/// Iteratively collects rivals of `target` until a sequence designs it, the design
/// space becomes empty, or a budget runs out.
pub fn rival_search(p: &ParameterSet, target: &Motif, opts: &SearchOptions) -> Result<Verdict> {
    let y = target.structure();
    let ens = MotifEnsemble::new(target);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut space = DesignSpace::new();
    let mut rivals: Vec<Motif> = Vec::new();
    let mut seen: HashSet<Vec<Pair>> = HashSet::new();
    let mut stats = SearchStats::default();
    let done = |kind, stats| Ok(Verdict { kind, stats });
    loop {
        stats.iterations += 1;
        let mut fresh: Vec<Motif> = Vec::new();
        for _ in 0..opts.budget.k.max(1) {
            let x = match sample_with(space.constraints(), y, &mut rng, opts.join_step_limit) {
                Ok(x) => x,
                Err(Error::JoinFailed) => {
                    stats.join_failures += 1;
                    if stats.join_failures > opts.retry_limit {
                        return done(VerdictKind::Unknown(UnknownReason::Timeout), stats);
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            stats.samples += 1;
            let f = ens.fold(p, &x, true)?;
            if f.pairs == ens.target_pairs() {
                if !f.cooptimal {
                    debug_assert!(ens.is_umfe(p, &x)?);
                    return done(VerdictKind::Designable(x), stats);
                }
                continue;
            }
            if seen.insert(f.pairs.clone()) {
                fresh.push(rival_motif(target, &f.pairs)?);
            }
        }
        if fresh.is_empty() {
            stats.join_failures += 1;
            if stats.join_failures > opts.retry_limit {
                return done(VerdictKind::Unknown(UnknownReason::Timeout), stats);
            }
        }
        for r in fresh {
            if rivals.len() >= opts.budget.n {
                return done(VerdictKind::Unknown(UnknownReason::BudgetN), stats);
            }
            let c = match constraint_from_rival(p, target, &r, opts.budget.m) {
                Ok(c) => c,
                Err(Error::BudgetExceeded(_)) => return done(VerdictKind::Unknown(UnknownReason::BudgetM), stats),
                Err(e) => return Err(e),
            };
            rivals.push(r);
            stats.rivals = rivals.len();
            space.add(c);
        }
        if space.prune() == SpaceStatus::Empty {
            return done(VerdictKind::Undesignable(rivals), stats);
        }
    }
}

/// Rival search with default options apart from budget and seed.
pub fn rival_motif_search(
    p: &ParameterSet,
    m: &Motif,
    y: &SecondaryStructure,
    b: SearchBudget,
    seed: u64,
) -> Result<Verdict> {
    if m.structure() != y {
        return Err(Error::DifferentHost);
    }
    rival_search(p, m, &SearchOptions { budget: b, seed, ..SearchOptions::default() })
}

/// Default enumeration cap of the brute-force oracle.
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForce {
    Designable(Sequence),
    Undesignable,
}

/// Number of motif assignments the brute-force oracle enumerates.
pub fn brute_force_size(m: &Motif) -> u128 {
    let positions: Vec<usize> = m.positions();
    enumeration_size(&slots(&positions, m.structure()))
}

/// Tries every nucleotide assignment of the motif's positions, canonical on its pairs.
pub fn brute_force_decide(p: &ParameterSet, m: &Motif, cap: u128) -> Result<BruteForce> {
    let positions = m.positions();
    let y = m.structure();
    let sl = slots(&positions, y);
    let size = enumeration_size(&sl);
    if size > cap {
        return Err(Error::TooLarge(size));
    }
    let ens = MotifEnsemble::new(m);
    let base = DenseAssignment::from_sequence(&default_fill(y, &[]));
    let found = (0..size as u64)
        .into_par_iter()
        .map_init(
            || base.clone(),
            |a, idx| -> Result<Option<Sequence>> {
                decode(u128::from(idx), &sl, a);
                let x = Sequence::new(a.0[1..].iter().map(|b| b.expect("dense")).collect());
                Ok(ens.is_umfe(p, &x)?.then_some(x))
            },
        )
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    match found {
        Some(Ok(Some(x))) => Ok(BruteForce::Designable(x)),
        Some(Err(e)) => Err(e),
        _ => Ok(BruteForce::Undesignable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fold::umfe_holds;
    use crate::motif::extract_motif;
    use crate::structure::parse_dotbracket;

    fn p() -> ParameterSet {
        ParameterSet::turner2004()
    }

    /// Plain enumeration of every slot assignment, scored with the full loop energies.
    fn naive_constraint(target: &Motif, rival: &Motif) -> Vec<u64> {
        let positions = effective_positions(rival, target).unwrap();
        let sl = slots(&positions, target.structure());
        let mut a = DenseAssignment::new(target.structure().len());
        let params = p();
        let mut out = Vec::new();
        for idx in 0..enumeration_size(&sl) {
            decode(idx, &sl, &mut a);
            let loses = match crate::energy::delta_delta_g(&params, &a, rival, target).unwrap() {
                crate::energy::EnergyDelta::Finite(d) => d > 0,
                crate::energy::EnergyDelta::PlusInfinity => true,
                _ => false,
            };
            if loses {
                out.push(Constraint::encode_lookup(&positions, &a).unwrap());
            }
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn pruned_walk_matches_plain_enumeration() {
        let cases = [
            // stack and hairpin; rival opens the inner pair
            ("((....))", vec![1, 2], "(......)|loops=1"),
            // exterior and stack; rival drops the outer pair
            ("..((...)).", vec![0, 1], "...(...)..|loops=0"),
            // bulge and hairpin; rival opens the hairpin
            ("(.((....)))", vec![1, 2], "(.(......))|loops=2"),
        ];
        for (y, ids, rival) in cases {
            let target = extract_motif(&parse_dotbracket(y).unwrap(), ids).unwrap();
            let rival: Motif = rival.parse().unwrap();
            let got = constraint_from_rival(&p(), &target, &rival, BRUTE_FORCE_CAP).unwrap();
            assert_eq!(got.tuples(), naive_constraint(&target, &rival).as_slice(), "{rival}");
        }
    }

    #[test]
    fn single_hairpin_is_designable_by_brute_force() {
        let m = extract_motif(&parse_dotbracket("(...)").unwrap(), [1]).unwrap();
        assert_eq!(brute_force_size(&m), 6 * 64);
        let BruteForce::Designable(x) = brute_force_decide(&p(), &m, BRUTE_FORCE_CAP).unwrap() else { panic!() };
        assert!(umfe_holds(&p(), &x, m.structure(), &m).unwrap());
    }

    #[test]
    fn two_pairs_three_unpaired_enumeration_size() {
        let m = extract_motif(&parse_dotbracket("((...))").unwrap(), [1, 2]).unwrap();
        assert_eq!(brute_force_size(&m), 2304);
    }

    #[test]
    fn single_loop_motif_is_designable_on_first_sample() {
        let y = parse_dotbracket("((.((...))..((....)).))").unwrap();
        let m = extract_motif(&y, [2]).unwrap();
        let v = rival_motif_search(&p(), &m, &y, SearchBudget::default(), 1).unwrap();
        let VerdictKind::Designable(x) = &v.kind else { panic!("{v:?}") };
        assert_eq!(v.stats.samples, 1);
        assert!(umfe_holds(&p(), x, &y, &m).unwrap());
    }

    #[test]
    fn refuted_rival_has_empty_constraint() {
        // An unpaired hairpin-closing pair on a stack: the rival opens the inner pair.
        let y = parse_dotbracket("((...))").unwrap();
        let target = extract_motif(&y, [1, 2]).unwrap();
        let rival = rival_motif(&target, &[]).unwrap();
        assert_eq!(rival.cardinality(), 1);
        let c = constraint_from_rival(&p(), &target, &rival, 1 << 20).unwrap();
        let delta = differential_positions(&rival, &target).unwrap();
        assert!(c.positions().iter().all(|&q| delta.contains(q)));
        let v = verify_single_rival(&p(), &target, &rival, 1 << 20).unwrap();
        assert_eq!(v, c.is_empty());
    }

    #[test]
    fn rival_equal_to_target_is_rejected() {
        let y = parse_dotbracket("((...))").unwrap();
        let m = extract_motif(&y, [1, 2]).unwrap();
        assert!(verify_single_rival(&p(), &m, &m, 1 << 20).is_err());
    }

    #[test]
    fn over_budget_rival_is_reported() {
        let y = parse_dotbracket("((...))").unwrap();
        let target = extract_motif(&y, [1, 2]).unwrap();
        let rival = rival_motif(&target, &[]).unwrap();
        assert!(matches!(constraint_from_rival(&p(), &target, &rival, 10), Err(Error::BudgetExceeded(_))));
    }
}
