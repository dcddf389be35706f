mod common;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use common::{bulge_chain, params, TWO_MULTI_FIXTURE};
use motifcert::design::{
    bottom_up_scan, fast_motif_with, rival_motif_search, verify_single_rival, MotifStores, Outcome, ScanConfig,
    SearchBudget, SearchStats, Verdict, VerdictKind,
};
use motifcert::graph::{build_graph, motif_canonical_form, motif_subgraph, NodeKind};
use motifcert::motif::{embed_standalone, extract_motif, Motif, MotifShape};
use motifcert::structure::{Decomposition, LoopKind, SecondaryStructure};
use motifcert::Result;

const MERGED_RIVAL: &str = "....(....(((..(.........).......((....))...((....))................))))....|loops=4";

fn fixture() -> SecondaryStructure {
    TWO_MULTI_FIXTURE.parse().unwrap()
}

fn standalone(shape: &str) -> Motif {
    embed_standalone(&shape.parse::<MotifShape>().unwrap()).unwrap().motif
}

#[test]
fn two_multi_fixture_loop_table() {
    use LoopKind::*;
    let d = Decomposition::new(fixture());
    let kinds: Vec<LoopKind> = d.loops.iter().map(|l| l.kind).collect();
    assert_eq!(kinds, [External, Bulge, Stack, Stack, Multi, Hairpin, Stack, Multi, Stack, Hairpin, Stack, Hairpin]);
    assert_eq!(d.loops[4].closing_pairs, [(12, 68), (15, 25), (28, 61)]);
    assert_eq!(d.loops[7].closing_pairs, [(29, 60), (33, 40), (44, 51)]);
    assert_eq!(d.loops[5].unpaired_counts, [9]);
}

#[test]
fn two_multi_fixture_graph_weights() {
    let g = build_graph(&fixture());
    assert_eq!(g.loop_nodes().count(), 12);
    // one pair node per base pair plus r
    assert_eq!(g.node_count(), 12 + 11 + 1);
    let hairpin = g.find_pair((15, 25)).unwrap();
    let w: Vec<usize> = g
        .neighbors(hairpin)
        .iter()
        .filter(|(v, _)| matches!(g.node(*v), NodeKind::Loop { kind: LoopKind::Hairpin, .. }))
        .map(|&(_, w)| w)
        .collect();
    assert_eq!(w, [9]);
    let m3 = extract_motif(&fixture(), [4, 6, 7]).unwrap();
    let sub = motif_subgraph(&m3);
    assert_eq!(sub.cardinality(), 3);
}

#[test]
fn merged_multiloop_rival_refutes_three_loop_motif() {
    let m3 = extract_motif(&fixture(), [4, 6, 7]).unwrap();
    let rival: Motif = MERGED_RIVAL.parse().unwrap();
    assert!(verify_single_rival(params(), &m3, &rival, SearchBudget::default().m).unwrap());
}

#[test]
fn three_loop_motif_is_undesignable_and_its_parts_are_not() {
    let y = fixture();
    let m1 = extract_motif(&y, [4]).unwrap();
    let m2 = extract_motif(&y, [6, 7]).unwrap();
    let m3 = extract_motif(&y, [4, 6, 7]).unwrap();
    for m in [&m1, &m2] {
        let v = rival_motif_search(params(), m, &y, SearchBudget::default(), 1).unwrap();
        assert!(v.is_designable(), "{m}: {:?}", v.kind);
    }
    let v = rival_motif_search(params(), &m3, &y, SearchBudget::default(), 1).unwrap();
    let VerdictKind::Undesignable(rivals) = v.kind else { panic!("{:?}", v.kind) };
    assert!(rivals.iter().any(|r| r.text_form() == MERGED_RIVAL));
}

#[test]
fn bulge_chain_rotations() {
    let a = embed_standalone(&bulge_chain(&[true, true, true])).unwrap().motif;
    let b = embed_standalone(&bulge_chain(&[false, false, false])).unwrap().motif;
    let c = embed_standalone(&bulge_chain(&[true, false, true])).unwrap().motif;
    assert_eq!(motif_canonical_form(&a), motif_canonical_form(&b));
    assert_ne!(motif_canonical_form(&b), motif_canonical_form(&c));
}

#[test]
fn multiloop_with_hairpin_on_either_branch() {
    let d = standalone("(.(...).().)");
    let e = standalone("(.().(...).)");
    assert_eq!(motif_canonical_form(&d), motif_canonical_form(&e));
    assert_ne!(motif_canonical_form(&d), motif_canonical_form(&standalone("(.(...).(...).)")));
}

fn verdict(m: &Motif, undesignable: bool) -> Verdict {
    let kind = if undesignable {
        VerdictKind::Undesignable(vec![m.clone()])
    } else {
        VerdictKind::Designable("A".repeat(m.structure().len()).parse().unwrap())
    };
    Verdict { kind, stats: SearchStats::default() }
}

#[test]
fn bottom_up_scan_with_mock_oracle() {
    // undesignable iff the set holds both loops of the stack/multiloop pair
    let oracle = |m: &Motif| -> Result<Verdict> { Ok(verdict(m, m.loop_ids().is_superset(&BTreeSet::from([6, 7])))) };
    let found = bottom_up_scan(&fixture(), &oracle).unwrap();
    let sets: Vec<&BTreeSet<usize>> = found.iter().map(Motif::loop_ids).collect();
    assert_eq!(sets, [&BTreeSet::from([6, 7])]);
}

#[test]
fn fast_motif_skips_supersets_and_known_forms() {
    let calls = AtomicUsize::new(0);
    let oracle = |m: &Motif| -> Result<Verdict> {
        calls.fetch_add(1, Ordering::Relaxed);
        Ok(verdict(m, m.loop_ids().is_superset(&BTreeSet::from([6, 7]))))
    };
    let stores = MotifStores::default();
    let cfg = ScanConfig { structure_id: "two_multi".into(), ..ScanConfig::default() };
    let r = fast_motif_with(&fixture(), &oracle, &stores, &cfg).unwrap();
    assert_eq!(r.minimal.len(), 1);
    assert_eq!(r.minimal[0].loops, [6, 7]);
    let c = r.counts;
    assert_eq!(c.candidates, r.candidates.len());
    assert_eq!(c.candidates, c.evaluated + c.skipped_known + c.skipped_superset);
    assert!(c.skipped_superset > 0);
    for cand in &r.candidates {
        let holds = cand.loops.contains(&6) && cand.loops.contains(&7);
        if cand.outcome == Outcome::SkippedSuperset {
            assert!(holds && cand.loops.len() > 2);
        }
    }
    // a second scan answers everything from the stores
    let before = calls.load(Ordering::Relaxed);
    let again = fast_motif_with(&fixture(), &oracle, &stores, &cfg).unwrap();
    assert_eq!(calls.load(Ordering::Relaxed), before);
    assert!(again.minimal.iter().all(|m| m.known));
}
