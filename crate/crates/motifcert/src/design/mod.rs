//! Designability: rival-motif search, the brute-force oracle and structure scans.

mod constraint;
mod scan;
mod search;

pub use constraint::{
    default_fill, intersect_constraints, sample_sequence, sample_with, Constraint, DesignSpace, SpaceStatus,
    JOIN_STEP_LIMIT, MAX_POSITIONS,
};
pub use scan::{
    bottom_up_scan, candidate_sets, fast_motif, fast_motif_with, CandidateReport, MotifOracle, MotifStores, Outcome,
    ReportedMotif, RivalSearchOracle, ScanConfig, ScanCounts, ScanReport, StoredMotif, MAX_NEIGHBORS,
};
pub use search::{
    brute_force_decide, brute_force_size, constraint_from_rival, effective_positions, rival_motif, rival_motif_search,
    rival_search, verify_single_rival, BruteForce, SearchBudget, SearchOptions, SearchStats, UnknownReason, Verdict,
    VerdictKind, BRUTE_FORCE_CAP,
};
