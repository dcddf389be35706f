//! Scans of a structure for minimal undesignable motifs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::{rival_search, SearchBudget, SearchOptions, UnknownReason, Verdict, VerdictKind};
use crate::energy::ParameterSet;
use crate::error::Result;
use crate::graph::{motif_canonical_form, CanonicalForm};
use crate::motif::Motif;
use crate::structure::{Decomposition, SecondaryStructure};

/// Classifies motifs; implemented by closures and by [`RivalSearchOracle`].
pub trait MotifOracle: Sync {
    fn classify(&self, m: &Motif) -> Result<Verdict>;
}

impl<F: Fn(&Motif) -> Result<Verdict> + Sync> MotifOracle for F {
    fn classify(&self, m: &Motif) -> Result<Verdict> {
        self(m)
    }
}

/// Rival-motif search with fixed parameters, budget and seed.
pub struct RivalSearchOracle<'a> {
    pub params: &'a ParameterSet,
    pub options: SearchOptions,
}

impl MotifOracle for RivalSearchOracle<'_> {
    fn classify(&self, m: &Motif) -> Result<Verdict> {
        rival_search(self.params, m, &self.options)
    }
}

/// Connected loop sets of `d` by increasing size, never growing a set that holds a
/// known undesignable one; returns the minimal undesignable motifs.
pub fn bottom_up_scan(y: &SecondaryStructure, decide: &impl MotifOracle) -> Result<Vec<Motif>> {
    let d = Arc::new(Decomposition::new(y.clone()));
    let mut minimal: Vec<Motif> = Vec::new();
    let mut level: BTreeSet<BTreeSet<usize>> = (0..d.loop_count()).map(|id| BTreeSet::from([id])).collect();
    while !level.is_empty() {
        let mut designable = Vec::new();
        for set in &level {
            if minimal.iter().any(|m| m.loop_ids().is_subset(set)) {
                continue;
            }
            let m = Motif::new(Arc::clone(&d), set.iter().copied())?;
            if decide.classify(&m)?.is_undesignable() {
                minimal.push(m);
            } else {
                designable.push(set);
            }
        }
        let mut next = BTreeSet::new();
        for set in designable {
            for &u in set {
                for v in d.neighborhood(u)? {
                    if !set.contains(&v) {
                        let mut grown = set.clone();
                        grown.insert(v);
                        next.insert(grown);
                    }
                }
            }
        }
        level = next;
    }
    Ok(minimal)
}

/// A motif kept in a store, keyed by its canonical string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredMotif {
    pub form: CanonicalForm,
    /// Text form of the first occurrence.
    pub motif: String,
    pub rivals: Vec<String>,
}

/// Designable and minimal undesignable motifs shared across scans; first writer wins.
#[derive(Debug, Default)]
pub struct MotifStores {
    designable: RwLock<BTreeMap<String, StoredMotif>>,
    minimal: RwLock<BTreeMap<String, StoredMotif>>,
}

impl MotifStores {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_designable(&self, canonical: &str) -> bool {
        self.designable.read().expect("store lock").contains_key(canonical)
    }

    pub fn minimal(&self, canonical: &str) -> Option<StoredMotif> {
        self.minimal.read().expect("store lock").get(canonical).cloned()
    }

    pub fn insert_designable(&self, m: StoredMotif) -> bool {
        insert_first(&self.designable, m)
    }

    pub fn insert_minimal(&self, m: StoredMotif) -> bool {
        insert_first(&self.minimal, m)
    }

    pub fn designable_entries(&self) -> Vec<StoredMotif> {
        self.designable.read().expect("store lock").values().cloned().collect()
    }

    pub fn minimal_entries(&self) -> Vec<StoredMotif> {
        self.minimal.read().expect("store lock").values().cloned().collect()
    }
}

fn insert_first(store: &RwLock<BTreeMap<String, StoredMotif>>, m: StoredMotif) -> bool {
    let mut w = store.write().expect("store lock");
    if w.contains_key(&m.form.canonical) {
        return false;
    }
    w.insert(m.form.canonical.clone(), m);
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Designable,
    Undesignable,
    Unknown(UnknownReason),
    KnownDesignable,
    KnownUndesignable,
    SkippedSuperset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub loops: Vec<usize>,
    pub canonical: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportedMotif {
    pub loops: Vec<usize>,
    pub motif: String,
    pub form: CanonicalForm,
    pub rivals: Vec<String>,
    /// Already present in the minimal store before this scan.
    pub known: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanCounts {
    pub candidates: usize,
    pub evaluated: usize,
    pub skipped_known: usize,
    pub skipped_superset: usize,
}

/// Per-structure result of [`fast_motif`]. `elapsed` is not serialized so that replays
/// produce identical reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub structure_id: String,
    pub structure: String,
    pub seed: u64,
    pub budget: SearchBudget,
    pub params_digest: String,
    pub candidates: Vec<CandidateReport>,
    pub minimal: Vec<ReportedMotif>,
    pub counts: ScanCounts,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Metadata echoed into a report.
#[derive(Debug, Clone, Default)]
pub struct ScanConfig {
    pub structure_id: String,
    pub seed: u64,
    pub budget: SearchBudget,
    pub params_digest: String,
}

/// Loops with at most this many neighbours seed candidate motifs.
pub const MAX_NEIGHBORS: usize = 3;

/// Candidate loop sets: each loop with a small neighbourhood joined with every
/// nonempty subset of its neighbours, in (size, loop id, subset) order, deduplicated.
pub fn candidate_sets(d: &Decomposition) -> Result<Vec<BTreeSet<usize>>> {
    let mut by_size: BTreeMap<usize, Vec<BTreeSet<usize>>> = BTreeMap::new();
    for u in 0..d.loop_count() {
        let nb = d.neighborhood(u)?;
        if nb.is_empty() || nb.len() > MAX_NEIGHBORS {
            continue;
        }
        for size in 1..=nb.len() {
            for subset in combinations(nb.len(), size) {
                let mut set = BTreeSet::from([u]);
                set.extend(subset.iter().map(|&k| nb[k]));
                by_size.entry(set.len()).or_default().push(set);
            }
        }
    }
    let mut seen = BTreeSet::new();
    Ok(by_size.into_values().flatten().filter(|s| seen.insert(s.clone())).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn stored(m: &Motif, form: &CanonicalForm, rivals: &[Motif]) -> StoredMotif {
    StoredMotif { form: form.clone(), motif: m.text_form(), rivals: rivals.iter().map(Motif::text_form).collect() }
}

/// Scans the neighbourhood motifs of `y`, classifying candidates with `oracle`.
pub fn fast_motif_with(
    y: &SecondaryStructure,
    oracle: &impl MotifOracle,
    stores: &MotifStores,
    cfg: &ScanConfig,
) -> Result<ScanReport> {
    let start = Instant::now();
    let d = Arc::new(Decomposition::new(y.clone()));
    let sets = candidate_sets(&d)?;
    let mut report = ScanReport {
        structure_id: cfg.structure_id.clone(),
        structure: y.to_dotbracket(),
        seed: cfg.seed,
        budget: cfg.budget,
        params_digest: cfg.params_digest.clone(),
        candidates: Vec::with_capacity(sets.len()),
        minimal: Vec::new(),
        counts: ScanCounts { candidates: sets.len(), ..ScanCounts::default() },
        elapsed: Duration::ZERO,
    };
    // Loop sets of this host found undesignable, minimal or not, and those left unknown.
    let mut undesignable: Vec<BTreeSet<usize>> = Vec::new();
    let mut unknown: Vec<BTreeSet<usize>> = Vec::new();

    let mut by_size: BTreeMap<usize, Vec<BTreeSet<usize>>> = BTreeMap::new();
    for s in sets {
        by_size.entry(s.len()).or_default().push(s);
    }
    for (_, level) in by_size {
        enum Plan {
            Done(Outcome),
            Evaluate(usize),
        }
        let mut plans = Vec::with_capacity(level.len());
        let mut queue: Vec<(Motif, CanonicalForm)> = Vec::new();
        let mut queued: HashMap<String, usize> = HashMap::new();
        let mut motifs = Vec::with_capacity(level.len());
        for set in &level {
            let m = Motif::new(Arc::clone(&d), set.iter().copied())?;
            let form = motif_canonical_form(&m);
            let plan = if undesignable.iter().any(|u| u.is_subset(set)) {
                Plan::Done(Outcome::SkippedSuperset)
            } else if let Some(known) = stores.minimal(&form.canonical) {
                report.minimal.push(ReportedMotif {
                    loops: set.iter().copied().collect(),
                    motif: m.text_form(),
                    form: form.clone(),
                    rivals: known.rivals,
                    known: true,
                });
                undesignable.push(set.clone());
                Plan::Done(Outcome::KnownUndesignable)
            } else if stores.is_designable(&form.canonical) {
                Plan::Done(Outcome::KnownDesignable)
            } else {
                let k = *queued.entry(form.canonical.clone()).or_insert_with(|| {
                    queue.push((m.clone(), form.clone()));
                    queue.len() - 1
                });
                Plan::Evaluate(k)
            };
            plans.push(plan);
            motifs.push((m, form));
        }
        let verdicts: Vec<Verdict> = queue.par_iter().map(|(m, _)| oracle.classify(m)).collect::<Result<_>>()?;
        let mut first_use = vec![true; queue.len()];
        for ((set, plan), (m, form)) in level.iter().zip(plans).zip(motifs) {
            let outcome = match plan {
                Plan::Done(o) => {
                    if o == Outcome::SkippedSuperset {
                        report.counts.skipped_superset += 1;
                    } else {
                        report.counts.skipped_known += 1;
                    }
                    o
                }
                Plan::Evaluate(k) => {
                    let fresh = std::mem::replace(&mut first_use[k], false);
                    if fresh {
                        report.counts.evaluated += 1;
                    } else {
                        report.counts.skipped_known += 1;
                    }
                    match &verdicts[k].kind {
                        VerdictKind::Designable(_) => {
                            stores.insert_designable(stored(&m, &form, &[]));
                            if fresh {
                                Outcome::Designable
                            } else {
                                Outcome::KnownDesignable
                            }
                        }
                        VerdictKind::Undesignable(rivals) => {
                            undesignable.push(set.clone());
                            let is_minimal = !unknown.iter().any(|u| u.is_subset(set));
                            if is_minimal {
                                let first = stores.insert_minimal(stored(&m, &form, rivals));
                                report.minimal.push(ReportedMotif {
                                    loops: set.iter().copied().collect(),
                                    motif: m.text_form(),
                                    form: form.clone(),
                                    rivals: rivals.iter().map(Motif::text_form).collect(),
                                    known: !first,
                                });
                            }
                            if fresh {
                                Outcome::Undesignable
                            } else {
                                Outcome::KnownUndesignable
                            }
                        }
                        VerdictKind::Unknown(r) => {
                            unknown.push(set.clone());
                            Outcome::Unknown(*r)
                        }
                    }
                }
            };
            report.candidates.push(CandidateReport {
                loops: set.iter().copied().collect(),
                canonical: form.canonical,
                outcome,
            });
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Scan of `y` with rival-motif search as the oracle.
pub fn fast_motif(
    p: &ParameterSet,
    y: &SecondaryStructure,
    b: SearchBudget,
    seed: u64,
    stores: &MotifStores,
    structure_id: &str,
) -> Result<ScanReport> {
    let oracle =
        RivalSearchOracle { params: p, options: SearchOptions { budget: b, seed, ..SearchOptions::default() } };
    let cfg = ScanConfig { structure_id: structure_id.to_string(), seed, budget: b, params_digest: p.digest.clone() };
    fast_motif_with(y, &oracle, stores, &cfg)
}
