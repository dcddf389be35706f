//! Constrained minimum free energy folding with co-optimal detection.
//!
//! Forced pairs split the sequence into independent regions, one per loop of the forced
//! skeleton. Inside a region, forced pairs directly enclosed by it act as atomic block
//! tokens; free positions may pair only with free positions of the same region. Each
//! region is folded by a Zuker-style recursion that also counts optimal structures,
//! saturating at 2.
//!
//! Tie-breaking in tracebacks prefers, in order: enclosed pairs with the lowest 5'
//! index, multiloops, then hairpins; in exterior and multiloop segments stems are
//! preferred over unpaired bases.

use std::fmt;
use std::str::FromStr;

use crate::energy::{pair_type, Energy, ParameterSet};
use crate::error::{Error, Result};
use crate::motif::Motif;
use crate::structure::{is_canonical, Pair, SecondaryStructure, Sequence, MIN_HAIRPIN};

/// Per-position folding directive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Directive {
    Free,
    Unpaired,
    Paired(usize),
}

/// Hard constraint over positions `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FoldConstraint {
    directives: Vec<Directive>,
}

impl FoldConstraint {
    /// Every position free.
    pub fn unconstrained(n: usize) -> Self {
        FoldConstraint { directives: vec![Directive::Free; n + 1] }
    }

    /// Builds a constraint from 1-based directives (`directives[0]` is position 1).
    pub fn new(directives: Vec<Directive>) -> Result<Self> {
        let mut d = vec![Directive::Free];
        d.extend(directives);
        let c = FoldConstraint { directives: d };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        let mut stack = Vec::new();
        for k in 1..=n {
            if let Directive::Paired(p) = self.directives[k] {
                if p == 0 || p > n || p == k || self.directives[p] != Directive::Paired(k) {
                    return Err(Error::InvalidConstraint(format!("position {k} forced to pair with {p}")));
                }
                if p > k {
                    stack.push(k);
                } else if stack.pop() != Some(p) {
                    return Err(Error::InvalidConstraint(format!("forced pair ({p}, {k}) crosses another")));
                }
            }
        }
        Ok(())
    }

    /// The constraint keeping every loop outside `m` fixed: boundary pairs and outside
    /// pairs forced, outside unpaired bases forbidden to pair, the motif interior free.
    pub fn from_motif(m: &Motif) -> Self {
        let y = m.structure();
        let mut directives = vec![Directive::Unpaired; y.len() + 1];
        for (i, j) in y.pairs() {
            directives[i] = Directive::Paired(j);
            directives[j] = Directive::Paired(i);
        }
        for (i, j) in m.internal_pairs() {
            directives[i] = Directive::Free;
            directives[j] = Directive::Free;
        }
        for k in m.unpaired_positions() {
            directives[k] = Directive::Free;
        }
        FoldConstraint { directives }
    }

    pub fn len(&self) -> usize {
        self.directives.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn directive(&self, pos: usize) -> Directive {
        self.directives[pos]
    }

    pub fn forced_pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        (1..=self.len()).filter_map(move |k| match self.directives[k] {
            Directive::Paired(p) if p > k => Some((k, p)),
            _ => None,
        })
    }

    pub fn free_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.len()).filter(move |&k| self.directives[k] == Directive::Free)
    }

    /// Whether `s` respects every directive.
    pub fn is_satisfied_by(&self, s: &SecondaryStructure) -> bool {
        s.len() == self.len()
            && (1..=self.len()).all(|k| match self.directives[k] {
                Directive::Paired(p) => s.partner(k) == Some(p),
                Directive::Unpaired => s.partner(k).is_none(),
                Directive::Free => s.partner(k).is_none_or(|p| self.directives[p] == Directive::Free),
            })
    }
}

impl FromStr for FoldConstraint {
    type Err = Error;

    /// `.` free, `x` unpaired, matching brackets forced pairs.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut d = vec![Directive::Free; s.chars().count() + 1];
        let mut open = Vec::new();
        for (k, c) in s.chars().enumerate() {
            let pos = k + 1;
            match c {
                '.' => {}
                'x' => d[pos] = Directive::Unpaired,
                '(' => open.push(pos),
                ')' => {
                    let i = open.pop().ok_or(Error::UnbalancedBrackets(pos))?;
                    d[i] = Directive::Paired(pos);
                    d[pos] = Directive::Paired(i);
                }
                _ => return Err(Error::InvalidCharacter(pos, c)),
            }
        }
        if let Some(&i) = open.first() {
            return Err(Error::UnbalancedBrackets(i));
        }
        Ok(FoldConstraint { directives: d })
    }
}

impl fmt::Display for FoldConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 1..=self.len() {
            let c = match self.directives[k] {
                Directive::Free => '.',
                Directive::Unpaired => 'x',
                Directive::Paired(p) if p > k => '(',
                Directive::Paired(_) => ')',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldResult {
    pub mfe: Energy,
    pub structure: SecondaryStructure,
    /// At least two distinct structures attain `mfe`.
    pub cooptimal: bool,
}

/// Minimum free energy structure of `x` under `c`.
pub fn fold_constrained(p: &ParameterSet, x: &Sequence, c: &FoldConstraint) -> Result<FoldResult> {
    if x.len() != c.len() {
        return Err(Error::LengthMismatch { expected: c.len(), found: x.len() });
    }
    let forced: Vec<Pair> = c.forced_pairs().collect();
    for &(i, j) in &forced {
        if !is_canonical(x.get(i).unwrap(), x.get(j).unwrap()) {
            return Err(Error::Infeasible(i, j));
        }
    }
    let mut pairs = forced.clone();
    let mut total = Energy::ZERO;
    let mut count: u8 = 1;
    let closings = std::iter::once(None).chain(forced.iter().copied().map(Some));
    for closing in closings {
        let region = Region::from_constraint(c, closing);
        let fold = region.fold(p, x);
        if fold.energy.is_infinite() {
            let (i, j) = closing.unwrap_or((0, 0));
            return Err(Error::Infeasible(i, j));
        }
        total = total + fold.energy;
        count = sat(u16::from(count) * u16::from(fold.count));
        pairs.extend(fold.traceback(0));
    }
    let structure = SecondaryStructure::from_pairs(x.len(), &pairs)?;
    Ok(FoldResult { mfe: total, structure, cooptimal: count >= 2 })
}

/// Unconstrained MFE fold.
pub fn fold(p: &ParameterSet, x: &Sequence) -> Result<FoldResult> {
    fold_constrained(p, x, &FoldConstraint::unconstrained(x.len()))
}

#[inline]
fn sat(v: u16) -> u8 {
    v.min(2) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Free,
    Unpaired,
    Block,
}

#[derive(Debug, Clone, Copy)]
struct Token {
    lo: usize,
    hi: usize,
    kind: TokKind,
}

/// The positions strictly inside one loop of the forced skeleton.
#[derive(Debug, Clone)]
pub struct Region {
    closing: Option<Pair>,
    n: usize,
    tokens: Vec<Token>,
    block_prefix: Vec<usize>,
}

impl Region {
    fn build(closing: Option<Pair>, n: usize, mut classify: impl FnMut(usize) -> (TokKind, usize)) -> Self {
        let (start, stop) = match closing {
            Some((i, j)) => (i + 1, j),
            None => (1, n + 1),
        };
        let mut tokens = Vec::new();
        let mut k = start;
        while k < stop {
            let (kind, hi) = classify(k);
            tokens.push(Token { lo: k, hi, kind });
            k = hi + 1;
        }
        let mut block_prefix = vec![0; tokens.len() + 1];
        for (t, tok) in tokens.iter().enumerate() {
            block_prefix[t + 1] = block_prefix[t] + usize::from(tok.kind == TokKind::Block);
        }
        Region { closing, n, tokens, block_prefix }
    }

    fn from_constraint(c: &FoldConstraint, closing: Option<Pair>) -> Self {
        Self::build(closing, c.len(), |k| match c.directive(k) {
            Directive::Paired(p) => (TokKind::Block, p),
            Directive::Free => (TokKind::Free, k),
            Directive::Unpaired => (TokKind::Unpaired, k),
        })
    }

    /// The region in which `m` folds when every loop outside it is fixed.
    pub fn for_motif(m: &Motif) -> Self {
        let c = FoldConstraint::from_motif(m);
        Self::from_constraint(&c, m.outer_pair())
    }

    pub fn closing(&self) -> Option<Pair> {
        self.closing
    }

    fn no_block(&self, a: usize, b_excl: usize) -> bool {
        a >= b_excl || self.block_prefix[b_excl] == self.block_prefix[a]
    }

    /// Folds the region on `x`.
    pub fn fold<'a>(&'a self, p: &'a ParameterSet, x: &'a Sequence) -> RegionFold<'a> {
        let mut f = RegionFold::new(self, p, x);
        f.fill();
        f
    }
}

type Cell = (i32, u8);
const NONE: Cell = (i32::MAX, 0);
const BIG: i32 = i32::MAX / 4;

#[inline]
fn better(best: &mut Cell, e: i32, c: u8) {
    if c == 0 || e >= BIG {
        return;
    }
    if e < best.0 {
        *best = (e, c);
    } else if e == best.0 {
        best.1 = sat(u16::from(best.1) + u16::from(c));
    }
}

#[inline]
fn finite(e: Energy) -> i32 {
    e.value().unwrap_or(BIG)
}

/// Filled DP tables of one region.
pub struct RegionFold<'a> {
    region: &'a Region,
    p: &'a ParameterSet,
    x: &'a Sequence,
    m: usize,
    v: Vec<Cell>,
    wm: Vec<Cell>,
    wm1: Vec<Cell>,
    ext: Vec<Cell>,
    top: Cell,
    /// Minimum free energy of the region's loops.
    pub energy: Energy,
    /// Number of optimal structures, saturated at 2.
    pub count: u8,
}

impl<'a> RegionFold<'a> {
    fn new(region: &'a Region, p: &'a ParameterSet, x: &'a Sequence) -> Self {
        let m = region.tokens.len();
        RegionFold {
            region,
            p,
            x,
            m,
            v: vec![NONE; m * m],
            wm: vec![NONE; m * m],
            wm1: vec![NONE; m * m],
            ext: vec![NONE; m + 1],
            top: NONE,
            energy: Energy::INFINITE,
            count: 0,
        }
    }

    #[inline]
    fn at(&self, a: usize, b: usize) -> usize {
        a * self.m + b
    }

    #[inline]
    fn tok(&self, t: usize) -> Token {
        self.region.tokens[t]
    }

    fn can_pair(&self, a: usize, b: usize) -> bool {
        let (ta, tb) = (self.tok(a), self.tok(b));
        ta.kind == TokKind::Free
            && tb.kind == TokKind::Free
            && is_canonical(self.x.get(ta.lo).unwrap(), self.x.get(tb.lo).unwrap())
    }

    /// Positions of the stem spanning tokens `a..=b`.
    #[inline]
    fn stem(&self, a: usize, b: usize) -> Pair {
        (self.tok(a).lo, self.tok(b).hi)
    }

    fn ml_stem(&self, a: usize, b: usize) -> i32 {
        let (i, j) = self.stem(a, b);
        // cells touching the sequence ends are never used inside a multiloop
        self.p.ml_stem_at(i, j, false, self.x).map_or(BIG, finite)
    }

    fn ext_stem(&self, a: usize, b: usize) -> i32 {
        let (i, j) = self.stem(a, b);
        finite(self.p.ext_stem_at(i, j, self.region.n, self.x).unwrap())
    }

    fn hairpin(&self, i: usize, j: usize) -> i32 {
        finite(self.p.hairpin_energy(i, j, self.x).unwrap())
    }

    fn interior(&self, i: usize, j: usize, k: usize, l: usize) -> i32 {
        finite(self.p.interior_energy(i, j, k, l, self.x).unwrap())
    }

    /// Alternatives for the loop closed by positions `(i, j)` whose interior is tokens
    /// `lo..hi` (exclusive). Calls `f(energy, count, Alt)` in tie-break order.
    fn closed_alternatives(&self, i: usize, j: usize, lo: usize, hi: usize, mut f: impl FnMut(i32, u8, Alt) -> bool) {
        let r = self.region;
        // enclosed stems (p, q)
        let mut p = lo;
        while p < hi && r.no_block(lo, p) {
            let mut q = hi;
            while q > p {
                q -= 1;
                if !r.no_block(q + 1, hi) {
                    break;
                }
                let (e, c) = self.v[self.at(p, q)];
                if c > 0 {
                    let (k, l) = self.stem(p, q);
                    let el = self.interior(i, j, k, l);
                    if el < BIG && f(el + e, c, Alt::Interior(p, q)) {
                        return;
                    }
                }
            }
            p += 1;
        }
        // multiloop: WM[lo][u-1] + WM1[u][hi-1]
        if hi >= lo + 2 {
            let base = self.p.ml_closing + finite(self.p.ml_stem_at(i, j, true, self.x).unwrap());
            if base < BIG {
                for u in lo + 1..hi {
                    let (e1, c1) = self.wm[self.at(lo, u - 1)];
                    let (e2, c2) = self.wm1[self.at(u, hi - 1)];
                    if c1 > 0 && c2 > 0 && f(base + e1 + e2, sat(u16::from(c1) * u16::from(c2)), Alt::Multi(u)) {
                        return;
                    }
                }
            }
        }
        // hairpin
        if r.no_block(lo, hi) && j - i > MIN_HAIRPIN {
            let e = self.hairpin(i, j);
            if e < BIG {
                f(e, 1, Alt::Hairpin);
            }
        }
    }

    fn wm1_alternatives(&self, a: usize, b: usize, mut f: impl FnMut(i32, u8, Alt) -> bool) {
        let r = self.region;
        for c in a..=b {
            if !r.no_block(c + 1, b + 1) {
                continue;
            }
            let (e, n) = self.v[self.at(a, c)];
            if n > 0 {
                let s = self.ml_stem(a, c);
                if s < BIG && f(e + s + self.p.ml_base * (b - c) as i32, n, Alt::Stem(c)) {
                    return;
                }
            }
        }
    }

    fn wm_alternatives(&self, a: usize, b: usize, mut f: impl FnMut(i32, u8, Alt) -> bool) {
        let r = self.region;
        for u in a..=b {
            if !r.no_block(a, u) {
                break;
            }
            let (e, n) = self.wm1[self.at(u, b)];
            if n > 0 && f(self.p.ml_base * (u - a) as i32 + e, n, Alt::First(u)) {
                return;
            }
        }
        for u in a + 1..=b {
            let (e1, c1) = self.wm[self.at(a, u - 1)];
            let (e2, c2) = self.wm1[self.at(u, b)];
            if c1 > 0 && c2 > 0 && f(e1 + e2, sat(u16::from(c1) * u16::from(c2)), Alt::Split(u)) {
                return;
            }
        }
    }

    /// Alternatives for the exterior prefix of `t` tokens.
    fn ext_alternatives(&self, t: usize, mut f: impl FnMut(i32, u8, Alt) -> bool) {
        let last = t - 1;
        for k in 0..=last {
            let (e0, c0) = self.ext[k];
            let (e, c) = self.v[self.at(k, last)];
            if c0 > 0 && c > 0 {
                let s = self.ext_stem(k, last);
                if s < BIG && f(e0 + e + s, sat(u16::from(c0) * u16::from(c)), Alt::Stem(k)) {
                    return;
                }
            }
        }
        let (e0, c0) = self.ext[last];
        if self.tok(last).kind != TokKind::Block && c0 > 0 {
            f(e0, c0, Alt::Unpaired);
        }
    }

    fn fill(&mut self) {
        let m = self.m;
        for span in 0..m {
            for a in 0..m - span {
                let b = a + span;
                let idx = self.at(a, b);
                // V
                if span == 0 {
                    if self.tok(a).kind == TokKind::Block {
                        self.v[idx] = (0, 1);
                    }
                } else if self.can_pair(a, b) {
                    let mut best = NONE;
                    let (i, j) = (self.tok(a).lo, self.tok(b).lo);
                    self.closed_alternatives(i, j, a + 1, b, |e, c, _| {
                        better(&mut best, e, c);
                        false
                    });
                    self.v[idx] = best;
                }
                let mut best = NONE;
                self.wm1_alternatives(a, b, |e, c, _| {
                    better(&mut best, e, c);
                    false
                });
                self.wm1[idx] = best;
                let mut best = NONE;
                self.wm_alternatives(a, b, |e, c, _| {
                    better(&mut best, e, c);
                    false
                });
                self.wm[idx] = best;
            }
        }
        match self.region.closing {
            None => {
                self.ext[0] = (0, 1);
                for t in 1..=m {
                    let mut best = NONE;
                    self.ext_alternatives(t, |e, c, _| {
                        better(&mut best, e, c);
                        false
                    });
                    self.ext[t] = best;
                }
                self.top = self.ext[m];
            }
            Some((i, j)) => {
                let mut best = NONE;
                self.closed_alternatives(i, j, 0, m, |e, c, _| {
                    better(&mut best, e, c);
                    false
                });
                self.top = best;
            }
        }
        if self.top.1 > 0 {
            self.energy = Energy::new(self.top.0);
            self.count = self.top.1;
        }
    }

    /// Free pairs of the `rank`-th optimal structure (`rank < count`), in tie-break order.
    pub fn traceback(&self, rank: u8) -> Vec<Pair> {
        let mut out = Vec::new();
        if self.top.1 == 0 {
            return out;
        }
        debug_assert!(rank < self.count);
        match self.region.closing {
            None => self.tb_ext(self.m, rank, &mut out),
            Some((i, j)) => self.tb_closed(i, j, 0, self.m, self.top.0, rank, &mut out),
        }
        out.sort_unstable();
        out
    }

    fn pick(target: i32, rank: &mut u8, chosen: &mut Option<(Alt, u8)>, e: i32, c: u8, alt: Alt) -> bool {
        if e != target {
            return false;
        }
        if *rank < c {
            *chosen = Some((alt, *rank));
            true
        } else {
            *rank -= c;
            false
        }
    }

    fn tb_v(&self, a: usize, b: usize, rank: u8, out: &mut Vec<Pair>) {
        if a == b {
            return; // block
        }
        let (i, j) = (self.tok(a).lo, self.tok(b).lo);
        out.push((i, j));
        self.tb_closed(i, j, a + 1, b, self.v[self.at(a, b)].0, rank, out);
    }

    #[allow(clippy::too_many_arguments)]
    fn tb_closed(&self, i: usize, j: usize, lo: usize, hi: usize, target: i32, rank: u8, out: &mut Vec<Pair>) {
        let mut r = rank;
        let mut chosen = None;
        self.closed_alternatives(i, j, lo, hi, |e, c, alt| Self::pick(target, &mut r, &mut chosen, e, c, alt));
        match chosen.expect("traceback follows a filled cell") {
            (Alt::Interior(p, q), r) => self.tb_v(p, q, r, out),
            (Alt::Multi(u), r) => {
                let c2 = self.wm1[self.at(u, hi - 1)].1;
                self.tb_wm(lo, u - 1, r / c2, out);
                self.tb_wm1(u, hi - 1, r % c2, out);
            }
            (Alt::Hairpin, _) => {}
            (alt, _) => unreachable!("{alt:?}"),
        }
    }

    fn tb_wm1(&self, a: usize, b: usize, rank: u8, out: &mut Vec<Pair>) {
        let mut r = rank;
        let mut chosen = None;
        let target = self.wm1[self.at(a, b)].0;
        self.wm1_alternatives(a, b, |e, c, alt| Self::pick(target, &mut r, &mut chosen, e, c, alt));
        match chosen.expect("traceback follows a filled cell") {
            (Alt::Stem(c), r) => self.tb_v(a, c, r, out),
            (alt, _) => unreachable!("{alt:?}"),
        }
    }

    fn tb_wm(&self, a: usize, b: usize, rank: u8, out: &mut Vec<Pair>) {
        let mut r = rank;
        let mut chosen = None;
        let target = self.wm[self.at(a, b)].0;
        self.wm_alternatives(a, b, |e, c, alt| Self::pick(target, &mut r, &mut chosen, e, c, alt));
        match chosen.expect("traceback follows a filled cell") {
            (Alt::First(u), r) => self.tb_wm1(u, b, r, out),
            (Alt::Split(u), r) => {
                let c2 = self.wm1[self.at(u, b)].1;
                self.tb_wm(a, u - 1, r / c2, out);
                self.tb_wm1(u, b, r % c2, out);
            }
            (alt, _) => unreachable!("{alt:?}"),
        }
    }

    fn tb_ext(&self, t: usize, rank: u8, out: &mut Vec<Pair>) {
        if t == 0 {
            return;
        }
        let mut r = rank;
        let mut chosen = None;
        let target = self.ext[t].0;
        self.ext_alternatives(t, |e, c, alt| Self::pick(target, &mut r, &mut chosen, e, c, alt));
        match chosen.expect("traceback follows a filled cell") {
            (Alt::Stem(k), r) => {
                let c2 = self.v[self.at(k, t - 1)].1;
                self.tb_ext(k, r / c2, out);
                self.tb_v(k, t - 1, r % c2, out);
            }
            (Alt::Unpaired, r) => self.tb_ext(t - 1, r, out),
            (alt, _) => unreachable!("{alt:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Alt {
    Interior(usize, usize),
    Multi(usize),
    Hairpin,
    Stem(usize),
    First(usize),
    Split(usize),
    Unpaired,
}

/// Motif ensemble folding: the target's region folded on candidate sequences.
#[derive(Debug, Clone)]
pub struct MotifEnsemble {
    region: Region,
    target: Vec<Pair>,
}

/// Outcome of folding a motif region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleFold {
    pub energy: Energy,
    /// Free pairs of the traced optimal structure, sorted.
    pub pairs: Vec<Pair>,
    pub cooptimal: bool,
}

impl MotifEnsemble {
    pub fn new(m: &Motif) -> Self {
        let mut target = m.internal_pairs();
        target.sort_unstable();
        MotifEnsemble { region: Region::for_motif(m), target }
    }

    pub fn target_pairs(&self) -> &[Pair] {
        &self.target
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    fn check_boundary(&self, x: &Sequence) -> Result<()> {
        if let Some((i, j)) = self.region.closing {
            if pair_type(x.get(i).ok_or(Error::OutOfRange(i))?, x.get(j).ok_or(Error::OutOfRange(j))?).is_none() {
                return Err(Error::Infeasible(i, j));
            }
        }
        for t in &self.region.tokens {
            if t.kind == TokKind::Block && pair_type(x.get(t.lo).unwrap(), x.get(t.hi).unwrap()).is_none() {
                return Err(Error::Infeasible(t.lo, t.hi));
            }
        }
        Ok(())
    }

    /// Folds the region; with `avoid_target`, a co-optimal alternative to the target is
    /// traced when the first optimal structure is the target itself.
    pub fn fold(&self, p: &ParameterSet, x: &Sequence, avoid_target: bool) -> Result<EnsembleFold> {
        self.check_boundary(x)?;
        let f = self.region.fold(p, x);
        if f.energy.is_infinite() {
            let (i, j) = self.region.closing.unwrap_or((0, 0));
            return Err(Error::Infeasible(i, j));
        }
        let mut pairs = f.traceback(0);
        let cooptimal = f.count >= 2;
        if avoid_target && cooptimal && pairs == self.target {
            pairs = f.traceback(1);
        }
        Ok(EnsembleFold { energy: f.energy, pairs, cooptimal })
    }

    /// Whether the target is the unique optimum of its ensemble on `x`.
    pub fn is_umfe(&self, p: &ParameterSet, x: &Sequence) -> Result<bool> {
        let f = self.fold(p, x, false)?;
        Ok(!f.cooptimal && f.pairs == self.target)
    }
}

/// Whether `m` is the unique MFE motif of `x` when everything outside `m` is fixed.
pub fn umfe_holds(p: &ParameterSet, x: &Sequence, y: &SecondaryStructure, m: &Motif) -> Result<bool> {
    if m.structure() != y {
        return Err(Error::DifferentHost);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: y.len(), found: x.len() });
    }
    MotifEnsemble::new(m).is_umfe(p, x)
}
