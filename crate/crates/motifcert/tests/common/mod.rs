#![allow(dead_code)]

use std::sync::OnceLock;

use motifcert::energy::{structure_energy, Energy, ParameterSet};
use motifcert::motif::MotifShape;
use motifcert::structure::{is_canonical, Base, Pair, SecondaryStructure, Sequence};
use rand::Rng;

/// Pairs (3,50) (4,49) (5,48) (9,24) (10,23) (11,19) (12,18) (28,44) (29,43) (32,39) (33,38), n = 52.
pub const TABLE_FIXTURE: &str = "..(((...((((.....))...))...((..((....))...))...)))..";

/// Two-multiloop structure, 75 nt, 12 loops.
pub const TWO_MULTI_FIXTURE: &str = "....(....(((..(.........)..((...((....))...((....))........))......))))....";

pub fn params() -> &'static ParameterSet {
    static P: OnceLock<ParameterSet> = OnceLock::new();
    P.get_or_init(ParameterSet::turner2004)
}

const BASES: [Base; 4] = [Base::A, Base::C, Base::G, Base::U];
const CANONICAL: [(Base, Base); 6] = [
    (Base::A, Base::U),
    (Base::U, Base::A),
    (Base::C, Base::G),
    (Base::G, Base::C),
    (Base::G, Base::U),
    (Base::U, Base::G),
];

pub fn random_base(rng: &mut impl Rng) -> Base {
    BASES[rng.gen_range(0..4)]
}

pub fn random_sequence(n: usize, rng: &mut impl Rng) -> Sequence {
    Sequence::new((0..n).map(|_| random_base(rng)).collect())
}

/// Random bases with a random canonical pair on every pair of `y`.
pub fn random_sequence_for(y: &SecondaryStructure, rng: &mut impl Rng) -> Sequence {
    let mut x = random_sequence(y.len(), rng);
    for (i, j) in y.pairs() {
        let (a, b) = CANONICAL[rng.gen_range(0..6)];
        x.set(i, a);
        x.set(j, b);
    }
    x
}

/// Random pseudoknot-free structure with hairpins of at least 3 unpaired bases.
pub fn random_structure(n: usize, pair_prob: f64, rng: &mut impl Rng) -> SecondaryStructure {
    fn fill(i: usize, j: usize, p: f64, rng: &mut impl Rng, out: &mut Vec<Pair>) {
        let mut k = i;
        while k + 4 <= j {
            if rng.gen_bool(p) {
                let l = rng.gen_range(k + 4..=j);
                out.push((k, l));
                fill(k + 1, l - 1, p, rng, out);
                k = l + 1;
            } else {
                k += 1;
            }
        }
    }
    let mut pairs = Vec::new();
    fill(1, n, pair_prob, rng, &mut pairs);
    SecondaryStructure::from_pairs(n, &pairs).expect("generated pairs nest")
}

/// Every structure over `x` whose pairs are canonical and whose hairpins hold >= 3 bases.
pub fn all_structures(x: &Sequence) -> Vec<SecondaryStructure> {
    fn rec(x: &Sequence, i: usize, j: usize) -> Vec<Vec<Pair>> {
        if i + 4 > j + 1 {
            return vec![Vec::new()];
        }
        // i unpaired
        let mut out = rec(x, i + 1, j);
        for k in i + 4..=j {
            if !is_canonical(x.get(i).unwrap(), x.get(k).unwrap()) {
                continue;
            }
            let inner = rec(x, i + 1, k - 1);
            let rest = if k < j { rec(x, k + 1, j) } else { vec![Vec::new()] };
            for a in &inner {
                for b in &rest {
                    let mut v = vec![(i, k)];
                    v.extend(a);
                    v.extend(b);
                    out.push(v);
                }
            }
        }
        out
    }
    rec(x, 1, x.len()).into_iter().map(|p| SecondaryStructure::from_pairs(x.len(), &p).unwrap()).collect()
}

/// Minimum energy over all structures and the number attaining it (saturated at 2).
pub fn exhaustive_mfe(p: &ParameterSet, x: &Sequence) -> (Energy, usize) {
    let mut best: Option<Energy> = None;
    let mut count = 0;
    for y in all_structures(x) {
        let e = structure_energy(p, x, &y).unwrap();
        match best {
            Some(b) if e > b => {}
            Some(b) if e == b => count += 1,
            _ => {
                best = Some(e);
                count = 1;
            }
        }
    }
    (best.unwrap(), count.min(2))
}

/// Chain of bulges written from the outer pair inward; `true` puts the bulge base on the 5' side.
pub fn bulge_chain(five_prime: &[bool]) -> MotifShape {
    let mut s = "()".to_string();
    for &f in five_prime.iter().rev() {
        s = if f { format!("(.{s})") } else { format!("({s}.)") };
    }
    s.parse().unwrap()
}

/// Dot-bracket realization of a rooted serialization `p^(K[w](w1:c1,...))`, with each
/// boundary leaf written as `()`.
pub fn shape_from_serialization(s: &str) -> String {
    struct P<'a> {
        s: &'a [u8],
        k: usize,
    }
    impl P<'_> {
        fn eat(&mut self, c: u8) {
            assert_eq!(self.s[self.k] as char, c as char, "at {} in {}", self.k, String::from_utf8_lossy(self.s));
            self.k += 1;
        }
        fn num(&mut self) -> usize {
            let st = self.k;
            while self.s[self.k].is_ascii_digit() {
                self.k += 1;
            }
            std::str::from_utf8(&self.s[st..self.k]).unwrap().parse().unwrap()
        }
        fn lp(&mut self) -> String {
            self.k += 1; // kind letter
            self.eat(b'[');
            let w = self.num();
            self.eat(b']');
            self.eat(b'(');
            let mut out = ".".repeat(w);
            while self.s[self.k] != b')' {
                if self.s[self.k] == b',' {
                    self.k += 1;
                }
                let wi = self.num();
                self.eat(b':');
                out += &self.child();
                out += &".".repeat(wi);
            }
            self.eat(b')');
            out
        }
        fn child(&mut self) -> String {
            self.eat(b'p');
            if self.s[self.k] == b'^' {
                self.k += 1;
                return "()".into();
            }
            self.eat(b'(');
            let inner = self.lp();
            self.eat(b')');
            format!("({inner})")
        }
    }
    let mut p = P { s: s.as_bytes(), k: 0 };
    p.eat(b'p');
    p.eat(b'^');
    p.eat(b'(');
    let inner = p.lp();
    p.eat(b')');
    assert_eq!(p.k, s.len());
    format!("({inner})")
}
