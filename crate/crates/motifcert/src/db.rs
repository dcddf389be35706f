//! JSON-lines motif database keyed by canonical form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::design::{Outcome, ScanReport, SearchBudget, UnknownReason, Verdict, VerdictKind};
use crate::error::{Error, Result};
use crate::graph::CanonicalForm;
use crate::motif::Motif;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictSummary {
    Designable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        witness: Option<String>,
    },
    Undesignable,
    Unknown {
        reason: UnknownReason,
    },
}

impl VerdictSummary {
    fn is_decisive(&self) -> bool {
        !matches!(self, VerdictSummary::Unknown { .. })
    }
}

impl From<&Verdict> for VerdictSummary {
    fn from(v: &Verdict) -> Self {
        match &v.kind {
            VerdictKind::Designable(x) => VerdictSummary::Designable { witness: Some(x.to_string()) },
            VerdictKind::Undesignable(_) => VerdictSummary::Undesignable,
            VerdictKind::Unknown(r) => VerdictSummary::Unknown { reason: *r },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Occurrence {
    pub dataset: String,
    pub structure: String,
    pub host_length: usize,
    pub loops: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub budget: SearchBudget,
    pub params_digest: String,
}

impl Provenance {
    pub fn new(seed: u64, budget: SearchBudget, params_digest: &str) -> Self {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            budget,
            params_digest: params_digest.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifRecord {
    pub schema: u32,
    pub canonical: String,
    pub length: usize,
    pub cardinality: usize,
    pub verdict: VerdictSummary,
    pub rivals: Vec<String>,
    pub occurrences: Vec<Occurrence>,
    pub provenance: Provenance,
}

impl MotifRecord {
    pub fn new(
        form: &CanonicalForm,
        verdict: VerdictSummary,
        rivals: Vec<String>,
        occurrence: Occurrence,
        provenance: Provenance,
    ) -> Self {
        MotifRecord {
            schema: SCHEMA_VERSION,
            canonical: form.canonical.clone(),
            length: form.length,
            cardinality: form.cardinality,
            verdict,
            rivals,
            occurrences: vec![occurrence],
            provenance,
        }
    }

    fn check(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Incompatible(format!("schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if self.occurrences.is_empty() {
            return Err(Error::Format(format!("record `{}` has no occurrences", self.canonical)));
        }
        if self.verdict == VerdictSummary::Undesignable && self.rivals.is_empty() {
            return Err(Error::Format(format!("undesignable record `{}` has no rivals", self.canonical)));
        }
        Ok(())
    }

    /// Folds `other`, a record with the same key, into `self`.
    fn absorb(&mut self, other: MotifRecord) -> Result<()> {
        match (&self.verdict, &other.verdict) {
            (VerdictSummary::Designable { .. }, VerdictSummary::Undesignable)
            | (VerdictSummary::Undesignable, VerdictSummary::Designable { .. }) => {
                return Err(Error::VerdictConflict(self.canonical.clone()));
            }
            (a, b) if !a.is_decisive() && b.is_decisive() => {
                self.verdict = other.verdict.clone();
                self.rivals = other.rivals.clone();
            }
            _ => {}
        }
        let occ: BTreeSet<Occurrence> = self.occurrences.drain(..).chain(other.occurrences).collect();
        self.occurrences = occ.into_iter().collect();
        Ok(())
    }
}

/// Records indexed by canonical string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    records: BTreeMap<String, MotifRecord>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses one record per non-blank line.
    pub fn load(text: &str) -> Result<Self> {
        let mut db = Database::new();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: MotifRecord =
                serde_json::from_str(line).map_err(|e| Error::ParseError { line: k + 1, reason: e.to_string() })?;
            rec.check().map_err(|e| Error::ParseError { line: k + 1, reason: e.to_string() })?;
            db.upsert(rec)?;
        }
        Ok(db)
    }

    /// One JSON record per line, in canonical-key order.
    pub fn save(&self) -> String {
        let mut out = String::new();
        for r in self.records.values() {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&MotifRecord> {
        self.records.get(canonical)
    }

    pub fn records(&self) -> impl Iterator<Item = &MotifRecord> {
        self.records.values()
    }

    pub fn digests(&self) -> BTreeSet<&str> {
        self.records.values().map(|r| r.provenance.params_digest.as_str()).collect()
    }

    /// Inserts `rec` or merges it into the record with the same key.
    pub fn upsert(&mut self, rec: MotifRecord) -> Result<()> {
        rec.check()?;
        match self.records.get_mut(&rec.canonical) {
            Some(existing) => existing.absorb(rec),
            None => {
                self.records.insert(rec.canonical.clone(), rec);
                Ok(())
            }
        }
    }

    /// Records every evaluated or recognised candidate of a scan.
    pub fn add_report(&mut self, report: &ScanReport, dataset: &str) -> Result<()> {
        let prov = Provenance::new(report.seed, report.budget, &report.params_digest);
        let host_length = report.structure.len();
        let occurrence = |loops: &[usize]| Occurrence {
            dataset: dataset.to_string(),
            structure: report.structure_id.clone(),
            host_length,
            loops: loops.to_vec(),
        };
        for m in &report.minimal {
            let rec = MotifRecord::new(
                &m.form,
                VerdictSummary::Undesignable,
                m.rivals.clone(),
                occurrence(&m.loops),
                prov.clone(),
            );
            self.upsert(rec)?;
        }
        let minimal: BTreeSet<&str> = report.minimal.iter().map(|m| m.form.canonical.as_str()).collect();
        for c in &report.candidates {
            let verdict = match c.outcome {
                Outcome::Designable | Outcome::KnownDesignable => VerdictSummary::Designable { witness: None },
                Outcome::Unknown(reason) => VerdictSummary::Unknown { reason },
                _ => continue,
            };
            if minimal.contains(c.canonical.as_str()) {
                continue;
            }
            let form = CanonicalForm { canonical: c.canonical.clone(), length: 0, cardinality: c.loops.len() };
            let mut rec = MotifRecord::new(&form, verdict, Vec::new(), occurrence(&c.loops), prov.clone());
            rec.length = canonical_length(&c.canonical);
            self.upsert(rec)?;
        }
        Ok(())
    }

    /// Records a classified standalone motif under dataset `dataset`.
    pub fn add_verdict(
        &mut self,
        m: &Motif,
        form: &CanonicalForm,
        v: &Verdict,
        dataset: &str,
        id: &str,
        prov: &Provenance,
    ) -> Result<()> {
        let rivals = match &v.kind {
            VerdictKind::Undesignable(r) => r.iter().map(Motif::text_form).collect(),
            _ => Vec::new(),
        };
        let occ = Occurrence {
            dataset: dataset.to_string(),
            structure: id.to_string(),
            host_length: m.structure().len(),
            loops: m.loop_ids().iter().copied().collect(),
        };
        self.upsert(MotifRecord::new(form, v.into(), rivals, occ, prov.clone()))
    }

    pub fn stats(&self) -> DatabaseStats {
        DatabaseStats::of(self)
    }
}

/// Bases encoded by a canonical string: two per pair node plus every edge weight.
pub fn canonical_length(canonical: &str) -> usize {
    let pairs = canonical.matches('p').count();
    let mut weights = 0;
    let mut num = String::new();
    for ch in canonical.chars() {
        if ch.is_ascii_digit() {
            num.push(ch);
        } else {
            if matches!(ch, ':' | ']') {
                weights += num.parse::<usize>().unwrap_or(0);
            }
            num.clear();
        }
    }
    2 * pairs + weights
}

/// Union of two databases. Records with the same key merge their occurrences; a
/// designable/undesignable clash is an error, as are differing parameter digests
/// unless `force` is set.
pub fn db_merge(a: &Database, b: &Database, force: bool) -> Result<Database> {
    let (da, dbb) = (a.digests(), b.digests());
    if !force && !da.is_empty() && !dbb.is_empty() && da != dbb {
        return Err(Error::Incompatible(format!(
            "parameter digests differ ({} vs {}); use --force to merge anyway",
            da.into_iter().collect::<Vec<_>>().join(","),
            dbb.into_iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = a.clone();
    for r in b.records() {
        out.upsert(r.clone())?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FamilyStats {
    pub dataset: String,
    pub structures: usize,
    pub avg_length: f64,
    pub undesignable_structures: usize,
    pub motif_occurrences: usize,
    pub unique_motifs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DatabaseStats {
    pub families: Vec<FamilyStats>,
    pub all: FamilyStats,
    pub unique_undesignable: usize,
    pub length_range: Option<(usize, usize)>,
    pub avg_length: f64,
    pub cardinality_range: Option<(usize, usize)>,
}

impl DatabaseStats {
    fn of(db: &Database) -> Self {
        #[derive(Default)]
        struct Acc {
            structures: BTreeMap<String, usize>,
            undesignable: BTreeSet<String>,
            occurrences: usize,
            unique: BTreeSet<String>,
        }
        let mut fam: BTreeMap<String, Acc> = BTreeMap::new();
        let mut all = Acc::default();
        for r in db.records() {
            let und = r.verdict == VerdictSummary::Undesignable;
            for o in &r.occurrences {
                let key = format!("{}/{}", o.dataset, o.structure);
                for acc in [fam.entry(o.dataset.clone()).or_default(), &mut all] {
                    acc.structures.insert(key.clone(), o.host_length);
                    if und {
                        acc.undesignable.insert(key.clone());
                        acc.occurrences += 1;
                        acc.unique.insert(r.canonical.clone());
                    }
                }
            }
        }
        let finish = |dataset: String, a: &Acc| FamilyStats {
            dataset,
            structures: a.structures.len(),
            avg_length: if a.structures.is_empty() {
                0.0
            } else {
                a.structures.values().sum::<usize>() as f64 / a.structures.len() as f64
            },
            undesignable_structures: a.undesignable.len(),
            motif_occurrences: a.occurrences,
            unique_motifs: a.unique.len(),
        };
        let und: Vec<&MotifRecord> = db.records().filter(|r| r.verdict == VerdictSummary::Undesignable).collect();
        let range =
            |f: fn(&MotifRecord) -> usize| Some((und.iter().map(|r| f(r)).min()?, und.iter().map(|r| f(r)).max()?));
        DatabaseStats {
            families: fam.iter().map(|(k, a)| finish(k.clone(), a)).collect(),
            all: finish("All".into(), &all),
            unique_undesignable: und.len(),
            length_range: range(|r| r.length),
            avg_length: if und.is_empty() {
                0.0
            } else {
                und.iter().map(|r| r.length).sum::<usize>() as f64 / und.len() as f64
            },
            cardinality_range: range(|r| r.cardinality),
        }
    }
}

impl fmt::Display for DatabaseStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<20} {:>10} {:>10} {:>8} {:>10} {:>8}",
            "dataset", "structures", "avg.len", "undes.", "m.u.total", "unique"
        );
        for r in self.families.iter().chain(std::iter::once(&self.all)) {
            let _ = writeln!(
                s,
                "{:<20} {:>10} {:>10.1} {:>8} {:>10} {:>8}",
                r.dataset, r.structures, r.avg_length, r.undesignable_structures, r.motif_occurrences, r.unique_motifs
            );
        }
        let _ = write!(s, "unique undesignable motifs across all families: {}", self.unique_undesignable);
        if let (Some((l0, l1)), Some((c0, c1))) = (self.length_range, self.cardinality_range) {
            let _ = write!(s, "; length [{l0}, {l1}] (avg {:.1}); cardinality [{c0}, {c1}]", self.avg_length);
        }
        writeln!(f, "{s}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(canonical: &str, verdict: VerdictSummary, structure: &str, digest: &str) -> MotifRecord {
        let rivals = if verdict == VerdictSummary::Undesignable { vec!["(...)|loops=1".into()] } else { Vec::new() };
        let form = CanonicalForm { canonical: canonical.into(), length: canonical_length(canonical), cardinality: 2 };
        let occ = Occurrence { dataset: "d".into(), structure: structure.into(), host_length: 20, loops: vec![1, 2] };
        MotifRecord::new(&form, verdict, rivals, occ, Provenance::new(0, SearchBudget::default(), digest))
    }

    fn db(recs: Vec<MotifRecord>) -> Database {
        let mut d = Database::new();
        for r in recs {
            d.upsert(r).unwrap();
        }
        d
    }

    #[test]
    fn canonical_length_counts_pairs_and_weights() {
        assert_eq!(canonical_length("p^(H[3]())"), 5);
        assert_eq!(canonical_length("p^(S[0](0:p(H[4]())))"), 8);
    }

    #[test]
    fn json_lines_round_trip() {
        let d = db(vec![
            rec("a", VerdictSummary::Undesignable, "s1", "x"),
            rec("b", VerdictSummary::Designable { witness: None }, "s1", "x"),
        ]);
        assert_eq!(Database::load(&d.save()).unwrap(), d);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let d = db(vec![rec("a", VerdictSummary::Undesignable, "s1", "x")]);
        assert_eq!(db_merge(&d, &Database::new(), false).unwrap(), d);
        assert_eq!(db_merge(&Database::new(), &d, false).unwrap(), d);
    }

    #[test]
    fn same_motif_from_two_structures_merges_occurrences() {
        let a = db(vec![rec("a", VerdictSummary::Undesignable, "s1", "x")]);
        let b = db(vec![rec("a", VerdictSummary::Undesignable, "s2", "x")]);
        let m = db_merge(&a, &b, false).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.get("a").unwrap().occurrences.len(), 2);
    }

    #[test]
    fn conflicting_verdicts_are_rejected() {
        let a = db(vec![rec("a", VerdictSummary::Undesignable, "s1", "x")]);
        let b = db(vec![rec("a", VerdictSummary::Designable { witness: None }, "s2", "x")]);
        assert!(matches!(db_merge(&a, &b, false), Err(Error::VerdictConflict(_))));
    }

    #[test]
    fn digest_guard_needs_force() {
        let a = db(vec![rec("a", VerdictSummary::Undesignable, "s1", "x")]);
        let b = db(vec![rec("b", VerdictSummary::Undesignable, "s1", "y")]);
        assert!(matches!(db_merge(&a, &b, false), Err(Error::Incompatible(_))));
        assert_eq!(db_merge(&a, &b, true).unwrap().len(), 2);
    }

    #[test]
    fn stats_count_occurrences_and_unique_motifs() {
        let d = db(vec![
            rec("a", VerdictSummary::Undesignable, "s1", "x"),
            rec("a", VerdictSummary::Undesignable, "s2", "x"),
            rec("b", VerdictSummary::Designable { witness: None }, "s3", "x"),
        ]);
        let s = d.stats();
        assert_eq!(s.all.structures, 3);
        assert_eq!(s.all.undesignable_structures, 2);
        assert_eq!(s.all.motif_occurrences, 2);
        assert_eq!(s.unique_undesignable, 1);
        assert!(s.to_string().contains("across all families: 1"));
    }
}
