//! Nucleotide constraints over critical positions, their pruning and sampling.

use std::collections::HashSet;

use rand::Rng;

use crate::energy::{BaseLookup, NucleotideAssignment};
use crate::error::{Error, Result};
use crate::structure::{is_canonical, Base, SecondaryStructure, Sequence};

/// Tuples pack two bits per position, so a constraint spans at most this many positions.
pub const MAX_POSITIONS: usize = 32;

/// Admissible nucleotide tuples over an ordered list of positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    positions: Vec<usize>,
    tuples: Vec<u64>,
}

#[inline]
fn code_at(t: u64, k: usize) -> usize {
    ((t >> (2 * k)) & 3) as usize
}

impl Constraint {
    /// `positions` must be strictly increasing; tuples are sorted and deduplicated.
    pub fn new(positions: Vec<usize>, tuples: impl IntoIterator<Item = u64>) -> Result<Self> {
        if positions.len() > MAX_POSITIONS {
            return Err(Error::InvalidConstraint(format!("{} positions exceed {MAX_POSITIONS}", positions.len())));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) || positions.first() == Some(&0) {
            return Err(Error::InvalidConstraint("positions must be 1-based and strictly increasing".into()));
        }
        let mask = if positions.len() == MAX_POSITIONS { u64::MAX } else { (1u64 << (2 * positions.len())) - 1 };
        let mut tuples: Vec<u64> = tuples.into_iter().collect();
        if tuples.iter().any(|&t| t & !mask != 0) {
            return Err(Error::InvalidConstraint("tuple encodes more positions than declared".into()));
        }
        tuples.sort_unstable();
        tuples.dedup();
        Ok(Constraint { positions, tuples })
    }

    pub fn from_assignments<'a>(
        positions: Vec<usize>,
        rows: impl IntoIterator<Item = &'a NucleotideAssignment>,
    ) -> Result<Self> {
        let tuples = rows.into_iter().map(|a| Self::encode_lookup(&positions, a)).collect::<Result<Vec<_>>>()?;
        Self::new(positions, tuples)
    }

    pub(crate) fn encode_lookup<L: BaseLookup>(positions: &[usize], a: &L) -> Result<u64> {
        positions.iter().enumerate().try_fold(0u64, |acc, (k, &q)| Ok(acc | ((a.base(q)?.index() as u64) << (2 * k))))
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn tuples(&self) -> &[u64] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn base(&self, tuple: u64, k: usize) -> Base {
        Base::from_index(code_at(tuple, k))
    }

    pub fn assignment(&self, tuple: u64) -> NucleotideAssignment {
        self.positions.iter().enumerate().map(|(k, &q)| (q, self.base(tuple, k))).collect()
    }

    /// Whether the nucleotides of `x` at the constraint positions form an admissible tuple.
    pub fn admits<L: BaseLookup>(&self, x: &L) -> Result<bool> {
        let t = Self::encode_lookup(&self.positions, x)?;
        Ok(self.tuples.binary_search(&t).is_ok())
    }

    fn project(&self, t: u64, idx: &[usize]) -> u64 {
        idx.iter().enumerate().fold(0, |acc, (k, &i)| acc | ((code_at(t, i) as u64) << (2 * k)))
    }

    /// Index pairs of shared positions.
    fn overlap(&self, other: &Constraint) -> (Vec<usize>, Vec<usize>) {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let (mut i, mut j) = (0, 0);
        while i < self.positions.len() && j < other.positions.len() {
            match self.positions[i].cmp(&other.positions[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    a.push(i);
                    b.push(j);
                    i += 1;
                    j += 1;
                }
            }
        }
        (a, b)
    }

    /// Drops tuples whose projection onto the shared positions has no support in `other`.
    fn prune_against(&mut self, other: &Constraint) -> bool {
        let (mine, theirs) = self.overlap(other);
        if mine.is_empty() {
            return false;
        }
        let support: HashSet<u64> = other.tuples.iter().map(|&t| other.project(t, &theirs)).collect();
        let before = self.tuples.len();
        let projected: Vec<u64> = self.tuples.iter().map(|&t| self.project(t, &mine)).collect();
        let mut k = 0;
        self.tuples.retain(|_| {
            let keep = support.contains(&projected[k]);
            k += 1;
            keep
        });
        self.tuples.len() != before
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceStatus {
    Open,
    Empty,
}

/// Pairwise pruning of overlapping constraints until nothing changes.
pub fn intersect_constraints(mut cs: Vec<Constraint>) -> (Vec<Constraint>, SpaceStatus) {
    let mut changed = true;
    while changed && !cs.iter().any(Constraint::is_empty) {
        changed = false;
        for a in 0..cs.len() {
            for b in 0..cs.len() {
                if a != b {
                    let other = cs[b].clone();
                    changed |= cs[a].prune_against(&other);
                }
            }
        }
    }
    let status = if cs.iter().any(Constraint::is_empty) { SpaceStatus::Empty } else { SpaceStatus::Open };
    (cs, status)
}

/// Sequences that strictly beat every accepted rival, as a list of constraints.
#[derive(Debug, Clone, Default)]
pub struct DesignSpace {
    constraints: Vec<Constraint>,
    empty: bool,
}

impl DesignSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add(&mut self, c: Constraint) {
        self.empty |= c.is_empty();
        self.constraints.push(c);
    }

    pub fn prune(&mut self) -> SpaceStatus {
        let (cs, status) = intersect_constraints(std::mem::take(&mut self.constraints));
        self.constraints = cs;
        self.empty |= status == SpaceStatus::Empty;
        self.status()
    }

    pub fn status(&self) -> SpaceStatus {
        if self.empty {
            SpaceStatus::Empty
        } else {
            SpaceStatus::Open
        }
    }
}

/// Default fill: `C`/`G` on pairs of `y` (or the complement of an already fixed end)
/// and `A` on unpaired positions.
pub fn default_fill(y: &SecondaryStructure, partial: &[Option<Base>]) -> Sequence {
    let n = y.len();
    let mut out: Vec<Option<Base>> = (0..=n).map(|q| partial.get(q).copied().flatten()).collect();
    for q in 1..=n {
        if out[q].is_some() {
            continue;
        }
        out[q] = Some(match y.partner(q) {
            Some(r) => match out[r] {
                Some(b) => b.complement(),
                None if q < r => Base::C,
                None => Base::G,
            },
            None => Base::A,
        });
    }
    Sequence::new(out.into_iter().skip(1).map(|b| b.expect("filled")).collect())
}

struct Join<'a, R> {
    order: Vec<&'a Constraint>,
    y: &'a SecondaryStructure,
    cur: Vec<Option<Base>>,
    steps: usize,
    limit: usize,
    rng: &'a mut R,
}

impl<R: Rng> Join<'_, R> {
    fn fits(&self, c: &Constraint, t: u64) -> bool {
        c.positions.iter().enumerate().all(|(k, &q)| {
            let b = c.base(t, k);
            if let Some(have) = self.cur[q] {
                return have == b;
            }
            let Some(r) = self.y.partner(q) else { return true };
            // the partner may be fixed already or by this same tuple
            let other = self.cur[r].or_else(|| c.positions.binary_search(&r).ok().map(|kr| c.base(t, kr)));
            other.is_none_or(|o| pair_ok(q, b, r, o))
        })
    }

    fn solve(&mut self, level: usize) -> Result<bool> {
        if level == self.order.len() {
            return Ok(true);
        }
        let c = self.order[level];
        let len = c.tuples.len();
        if len == 0 {
            return Ok(false);
        }
        let start = self.rng.gen_range(0..len);
        for s in 0..len {
            self.steps += 1;
            if self.steps > self.limit {
                return Err(Error::JoinFailed);
            }
            let t = c.tuples[(start + s) % len];
            if !self.fits(c, t) {
                continue;
            }
            let set: Vec<usize> = c.positions.iter().copied().filter(|&q| self.cur[q].is_none()).collect();
            for (k, &q) in c.positions.iter().enumerate() {
                self.cur[q] = Some(c.base(t, k));
            }
            if self.solve(level + 1)? {
                return Ok(true);
            }
            for q in set {
                self.cur[q] = None;
            }
        }
        Ok(false)
    }
}

fn pair_ok(q: usize, bq: Base, r: usize, br: Base) -> bool {
    if q < r {
        is_canonical(bq, br)
    } else {
        is_canonical(br, bq)
    }
}

/// Join order: smallest constraint first, then greatest overlap with what is placed.
fn join_order(cs: &[Constraint]) -> Vec<&Constraint> {
    let mut left: Vec<&Constraint> = cs.iter().collect();
    let mut placed: HashSet<usize> = HashSet::new();
    let mut order = Vec::with_capacity(cs.len());
    while !left.is_empty() {
        let (k, _) = left
            .iter()
            .enumerate()
            .max_by_key(|(k, c)| {
                let shared = c.positions.iter().filter(|q| placed.contains(q)).count();
                (shared, std::cmp::Reverse(c.len()), std::cmp::Reverse(*k))
            })
            .expect("nonempty");
        let c = left.remove(k);
        placed.extend(c.positions.iter().copied());
        order.push(c);
    }
    order
}

/// Backtracking join over `cs`, then the default fill of `y` everywhere else.
pub fn sample_with<R: Rng>(
    cs: &[Constraint],
    y: &SecondaryStructure,
    rng: &mut R,
    step_limit: usize,
) -> Result<Sequence> {
    let mut join = Join { order: join_order(cs), y, cur: vec![None; y.len() + 1], steps: 0, limit: step_limit, rng };
    if !join.solve(0)? {
        return Err(Error::JoinFailed);
    }
    Ok(default_fill(y, &join.cur))
}

/// Default step limit of one backtracking join.
pub const JOIN_STEP_LIMIT: usize = 1_000_000;

/// Seeded sample of a sequence for `y` consistent with every constraint.
pub fn sample_sequence(cs: &[Constraint], y: &SecondaryStructure, seed: u64) -> Result<Sequence> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    sample_with(cs, y, &mut rng, JOIN_STEP_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc(bases: &str) -> u64 {
        bases.chars().enumerate().fold(0, |acc, (k, c)| acc | ((Base::from_char(c).unwrap().index() as u64) << (2 * k)))
    }

    fn c(pos: &[usize], rows: &[&str]) -> Constraint {
        Constraint::new(pos.to_vec(), rows.iter().map(|r| enc(r))).unwrap()
    }

    #[test]
    fn disjoint_constraints_are_untouched() {
        let a = c(&[1, 2], &["AC", "GU"]);
        let b = c(&[3], &["A"]);
        let (out, st) = intersect_constraints(vec![a.clone(), b.clone()]);
        assert_eq!(out, vec![a, b]);
        assert_eq!(st, SpaceStatus::Open);
    }

    #[test]
    fn disjoint_tuples_on_shared_positions_empty_both() {
        let (out, st) = intersect_constraints(vec![c(&[1, 2], &["AC"]), c(&[1, 2], &["GU"])]);
        assert!(out.iter().all(Constraint::is_empty));
        assert_eq!(st, SpaceStatus::Empty);
    }

    #[test]
    fn pruning_keeps_supported_tuples() {
        let (out, st) = intersect_constraints(vec![c(&[1, 2], &["AC", "GC", "UU"]), c(&[2, 3], &["CA"])]);
        assert_eq!(st, SpaceStatus::Open);
        assert_eq!(out[0].tuples(), c(&[1, 2], &["AC", "GC"]).tuples());
    }

    #[test]
    fn odd_cycle_survives_pairwise_pruning() {
        // x1 != x2, x2 != x3, x3 != x1 over {A, C}: arc consistent but unsatisfiable.
        let ne = ["AC", "CA"];
        let cs = vec![c(&[1, 2], &ne), c(&[2, 3], &ne), c(&[1, 3], &ne)];
        let (out, st) = intersect_constraints(cs);
        assert_eq!(st, SpaceStatus::Open);
        assert!(out.iter().all(|k| k.len() == 2));
        let y = SecondaryStructure::unpaired(3);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        assert!(matches!(sample_with(&out, &y, &mut rng, 1000), Err(Error::JoinFailed)));
    }

    #[test]
    fn empty_space_samples_default_fill() {
        let y: SecondaryStructure = "((...)).".parse().unwrap();
        assert_eq!(sample_sequence(&[], &y, 7).unwrap().to_string(), "CCAAAGGA");
    }

    #[test]
    fn sampled_sequence_satisfies_constraints_and_pairs() {
        let y: SecondaryStructure = "((...))".parse().unwrap();
        let k = c(&[1, 3], &["GA", "UC", "AG"]);
        for seed in 0..20 {
            let x = sample_sequence(std::slice::from_ref(&k), &y, seed).unwrap();
            assert!(k.admits(&x).unwrap());
            for (i, j) in y.pairs() {
                assert!(is_canonical(x.get(i).unwrap(), x.get(j).unwrap()));
            }
        }
        assert_eq!(sample_sequence(std::slice::from_ref(&k), &y, 3).unwrap(), sample_sequence(&[k], &y, 3).unwrap());
    }

    #[test]
    fn tuples_respect_declared_width() {
        assert!(Constraint::new(vec![1], [enc("AC")]).is_err());
        assert!(Constraint::new(vec![2, 1], []).is_err());
    }
}
