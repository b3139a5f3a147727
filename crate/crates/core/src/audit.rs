//! Removal-run auditor.
//!
//! For a rank draw, run `R` is the class engine on the whole instance and
//! run `R_j` is the same engine, under the same ranks, with bidder `j`
//! removed. Comparing the two traces checks, per edge `(i, j)`:
//!
//! * no-surpassing: if `j`'s effective bid to `i` beats everything `i` is
//!   offered in `R_j`, nothing offered to `i` in `R` beats it;
//! * the multiset containments between the availability multisets `T(i)`,
//!   `T_j(i)` and their neighbour restrictions `S(i)`, `S_j(i)`;
//! * threshold dominance: `i`'s utility in `R` is at least the (truncated)
//!   threshold `u_e` read off `R_j`, and for OBM, `j` is matched in `R`
//!   whenever `1 - p_j > u_e`.
//!
//! The first two are theorems for OBM and SINGLE-VALUED and open for
//! GENERAL; the auditor reports what it sees either way.

use alloc::vec;
use alloc::vec::Vec;

use crate::engines::{effective_bid, run_with, Algorithm, RankAssignment, RunOptions, RunOutcome, RunTrace};
use crate::instance::{Instance, ProblemClass};
use crate::{Error, Result};

/// `R_j`: the class engine on the instance without `removed`, same ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalRun {
    pub removed: usize,
    pub outcome: RunOutcome,
}

impl RemovalRun {
    pub fn trace(&self) -> &RunTrace {
        self.outcome.trace.as_ref().expect("removal runs are traced")
    }
}

/// `R`, traced.
pub fn run_full(instance: &Instance, ranks: &RankAssignment) -> Result<RunOutcome> {
    run_with(
        Algorithm::for_class(instance.class),
        instance,
        Some(ranks),
        RunOptions::traced(),
    )
}

pub fn run_with_removal(instance: &Instance, ranks: &RankAssignment, removed: usize) -> Result<RemovalRun> {
    if removed >= instance.num_bidders() {
        return Err(Error::UnknownBidder(removed));
    }
    let outcome = run_with(
        Algorithm::for_class(instance.class),
        instance,
        Some(ranks),
        RunOptions::without(removed),
    )?;
    Ok(RemovalRun { removed, outcome })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow {
    pub query: usize,
    pub bidder: usize,
    pub bid: u64,
    /// Utility of the query in `R_j`.
    pub utility_without: f64,
    /// Largest value the threshold can take: `bid * (1 - 1/e)`.
    pub cap: f64,
    /// `u_e`: the utility in `R_j`, truncated at `cap` outside OBM.
    pub threshold: f64,
}

/// Thresholds of every edge of bidder `j`.
pub fn thresholds(instance: &Instance, ranks: &RankAssignment, j: usize) -> Result<Vec<ThresholdRow>> {
    let removal = run_with_removal(instance, ranks, j)?;
    Ok(thresholds_from(instance, j, &removal.outcome))
}

fn thresholds_from(instance: &Instance, j: usize, without: &RunOutcome) -> Vec<ThresholdRow> {
    instance
        .edges()
        .filter(|(_, e)| e.bidder == j)
        .map(|(q, e)| {
            let ut = without.utility[q];
            let cap = effective_bid(e.bid, libm::exp(-1.0));
            let threshold = match instance.class {
                ProblemClass::Obm => ut,
                _ => ut.min(cap),
            };
            ThresholdRow {
                query: q,
                bidder: j,
                bid: e.bid,
                utility_without: ut,
                cap,
                threshold,
            }
        })
        .collect()
}

/// A query that was outbid in `R` although `j`'s bid beat everything it
/// was offered in `R_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSurpassViolation {
    pub query: usize,
    pub bidder: usize,
    /// `j`'s effective bid to the query.
    pub ebid: f64,
    /// Best effective bid offered to the query in `R_j` (0 if none).
    pub beta: f64,
    /// The largest bid offered in `R`, which exceeds `ebid`.
    pub surpassing_bid: f64,
    pub surpassing_bidder: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Containment {
    /// `T_j(i) ∩ F1 = T(i) ∩ F1`
    AboveEqual,
    /// `T_j(i) ∩ F2 ⊆ T(i) ∩ F2`
    BelowSubset,
    /// `S_j(i) ⊆ S(i)`
    NeighborSubset,
}

impl Containment {
    pub fn name(self) -> &'static str {
        match self {
            Containment::AboveEqual => "T_j∩F1 = T∩F1",
            Containment::BelowSubset => "T_j∩F2 ⊆ T∩F2",
            Containment::NeighborSubset => "S_j ⊆ S",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultisetFailure {
    pub step: usize,
    pub part: Containment,
    /// The bidder whose multiplicity breaks the containment.
    pub bidder: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultisetVerdict {
    pub removed: usize,
    pub steps: usize,
    pub failures: Vec<MultisetFailure>,
}

impl MultisetVerdict {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DominanceCheck {
    /// `u_i >= u_e`
    Utility,
    /// OBM: `1 - p_j > u_e` implies `j` is matched in `R`.
    MatchedWhenCheap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceFailure {
    pub query: usize,
    pub bidder: usize,
    pub check: DominanceCheck,
    pub utility: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks {
    pub no_surpassing: bool,
    pub multiset: bool,
    pub dominance: bool,
}

impl Checks {
    pub const ALL: Checks = Checks {
        no_surpassing: true,
        multiset: true,
        dominance: true,
    };

    pub const NO_SURPASSING: Checks = Checks {
        no_surpassing: true,
        multiset: false,
        dominance: false,
    };
}

impl Default for Checks {
    fn default() -> Self {
        Checks::ALL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub class: ProblemClass,
    /// Seed of the rank draw; `None` for injected ranks.
    pub seed: Option<u64>,
    pub num_queries: usize,
    pub edges_tested: u64,
    /// Edges where `j`'s bid beat everything offered in `R_j`.
    pub antecedent_true: u64,
    pub violations: Vec<NoSurpassViolation>,
    pub multiset: Vec<MultisetVerdict>,
    pub dominance_checked: u64,
    pub dominance_failures: Vec<DominanceFailure>,
}

impl AuditReport {
    pub fn queries_with_violation(&self) -> usize {
        let mut qs: Vec<usize> = self.violations.iter().map(|v| v.query).collect();
        qs.sort_unstable();
        qs.dedup();
        qs.len()
    }

    pub fn per_edge_rate(&self) -> f64 {
        rate(self.violations.len() as u64, self.edges_tested)
    }

    pub fn per_query_rate(&self) -> f64 {
        rate(self.queries_with_violation() as u64, self.num_queries as u64)
    }

    pub fn run_violated(&self) -> bool {
        !self.violations.is_empty()
    }

    pub fn multiset_failures(&self) -> usize {
        self.multiset.iter().map(|v| v.failures.len()).sum()
    }

    /// True when no check found anything.
    pub fn clean(&self) -> bool {
        self.violations.is_empty() && self.multiset_failures() == 0 && self.dominance_failures.is_empty()
    }
}

fn rate(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Runs `R` once and `R_j` for every bidder, then the selected checks.
pub fn audit(instance: &Instance, ranks: &RankAssignment, checks: Checks) -> Result<AuditReport> {
    let full = run_full(instance, ranks)?;
    let mut report = AuditReport {
        class: instance.class,
        seed: ranks.seed(),
        num_queries: instance.num_queries(),
        edges_tested: 0,
        antecedent_true: 0,
        violations: Vec::new(),
        multiset: Vec::new(),
        dominance_checked: 0,
        dominance_failures: Vec::new(),
    };
    for j in 0..instance.num_bidders() {
        let removal = run_with_removal(instance, ranks, j)?;
        if checks.no_surpassing {
            no_surpassing_for(instance, ranks, j, &full, &removal.outcome, &mut report);
        }
        if checks.multiset {
            report
                .multiset
                .push(multiset_for(instance, ranks, j, &full, &removal.outcome));
        }
        if checks.dominance {
            dominance_for(instance, ranks, j, &full, &removal.outcome, &mut report);
        }
    }
    report.violations.sort_by_key(|v| (v.query, v.bidder));
    report.dominance_failures.sort_by_key(|f| (f.query, f.bidder));
    Ok(report)
}

pub fn check_no_surpassing(instance: &Instance, ranks: &RankAssignment) -> Result<AuditReport> {
    audit(instance, ranks, Checks::NO_SURPASSING)
}

pub fn check_multiset_lemmas(instance: &Instance, ranks: &RankAssignment, j: usize) -> Result<MultisetVerdict> {
    let full = run_full(instance, ranks)?;
    let removal = run_with_removal(instance, ranks, j)?;
    Ok(multiset_for(instance, ranks, j, &full, &removal.outcome))
}

pub fn check_threshold_dominance(instance: &Instance, ranks: &RankAssignment) -> Result<AuditReport> {
    audit(
        instance,
        ranks,
        Checks {
            no_surpassing: false,
            multiset: false,
            dominance: true,
        },
    )
}

fn steps(outcome: &RunOutcome) -> &[crate::engines::TraceStep] {
    &outcome.trace.as_ref().expect("audit runs are traced").steps
}

fn no_surpassing_for(
    instance: &Instance,
    ranks: &RankAssignment,
    j: usize,
    full: &RunOutcome,
    without: &RunOutcome,
    report: &mut AuditReport,
) {
    let (with_steps, without_steps) = (steps(full), steps(without));
    for (q, e) in instance.edges().filter(|(_, e)| e.bidder == j) {
        report.edges_tested += 1;
        let ebid = effective_bid(e.bid, ranks.price(j));
        let beta = without_steps[q].best_offer().map_or(0.0, |o| o.effective);
        if ebid <= beta {
            continue;
        }
        report.antecedent_true += 1;
        if let Some(top) = with_steps[q].best_offer() {
            if top.effective > ebid {
                report.violations.push(NoSurpassViolation {
                    query: q,
                    bidder: j,
                    ebid,
                    beta,
                    surpassing_bid: top.effective,
                    surpassing_bidder: top.bidder,
                });
            }
        }
    }
}

/// Whether `l` precedes `j` in the order that defines `F1`: effective unit
/// bids for OBM and SINGLE-VALUED, prices for GENERAL; ties towards the
/// lower id, as in the engines.
fn precedes(instance: &Instance, ranks: &RankAssignment, l: usize, j: usize) -> bool {
    let key = |x: usize| match instance.class {
        ProblemClass::Obm => effective_bid(1, ranks.price(x)),
        ProblemClass::SingleValued => {
            let b = instance.bidders[x].single.map_or(1, |sv| sv.bid);
            effective_bid(b, ranks.price(x))
        }
        ProblemClass::General => -ranks.price(x),
    };
    let (kl, kj) = (key(l), key(j));
    kl > kj || (kl == kj && l < j)
}

fn multiset_for(
    instance: &Instance,
    ranks: &RankAssignment,
    j: usize,
    full: &RunOutcome,
    without: &RunOutcome,
) -> MultisetVerdict {
    let m = instance.num_bidders();
    let above: Vec<bool> = (0..m).map(|l| l != j && precedes(instance, ranks, l, j)).collect();
    let full_copies: Vec<u64> = (0..m).map(|l| instance.initial_copies(l)).collect();
    let mut failures = Vec::new();
    let (with_steps, without_steps) = (steps(full), steps(without));
    for (step, (s, sj)) in with_steps.iter().zip(without_steps).enumerate() {
        for l in (0..m).filter(|&l| l != j) {
            // multiset intersection with F keeps min(multiplicity, |F|_l)
            let t = s.available[l].min(full_copies[l]);
            let tj = sj.available[l].min(full_copies[l]);
            let broken = if above[l] {
                (tj != t).then_some(Containment::AboveEqual)
            } else {
                (tj > t).then_some(Containment::BelowSubset)
            };
            if let Some(part) = broken {
                failures.push(MultisetFailure { step, part, bidder: l });
            }
        }
        for &(l, copies) in &sj.neighbors {
            let have = s.neighbors.iter().find(|&&(x, _)| x == l).map_or(0, |&(_, c)| c);
            if copies > have {
                failures.push(MultisetFailure {
                    step,
                    part: Containment::NeighborSubset,
                    bidder: l,
                });
            }
        }
    }
    MultisetVerdict {
        removed: j,
        steps: with_steps.len(),
        failures,
    }
}

fn dominance_for(
    instance: &Instance,
    ranks: &RankAssignment,
    j: usize,
    full: &RunOutcome,
    without: &RunOutcome,
    report: &mut AuditReport,
) {
    for row in thresholds_from(instance, j, without) {
        report.dominance_checked += 1;
        let utility = full.utility[row.query];
        if utility < row.threshold {
            report.dominance_failures.push(DominanceFailure {
                query: row.query,
                bidder: j,
                check: DominanceCheck::Utility,
                utility,
                threshold: row.threshold,
            });
        }
        if instance.class == ProblemClass::Obm
            && effective_bid(1, ranks.price(j)) > row.threshold
            && !full.is_matched(j)
        {
            report.dominance_failures.push(DominanceFailure {
                query: row.query,
                bidder: j,
                check: DominanceCheck::MatchedWhenCheap,
                utility,
                threshold: row.threshold,
            });
        }
    }
}

/// Re-runs `R` and `R_j` and confirms every number the violation cites.
pub fn recheck(instance: &Instance, ranks: &RankAssignment, v: &NoSurpassViolation) -> Result<bool> {
    let full = run_full(instance, ranks)?;
    let removal = run_with_removal(instance, ranks, v.bidder)?;
    let Some(bid) = instance.bid(v.query, v.bidder) else {
        return Ok(false);
    };
    let ebid = effective_bid(bid, ranks.price(v.bidder));
    let beta = steps(&removal.outcome)[v.query]
        .best_offer()
        .map_or(0.0, |o| o.effective);
    let cited = steps(&full)[v.query]
        .offers
        .iter()
        .find(|o| o.bidder == v.surpassing_bidder)
        .map(|o| o.effective);
    Ok(ebid == v.ebid && beta == v.beta && ebid > beta && cited == Some(v.surpassing_bid) && v.surpassing_bid > ebid)
}

/// Counts over many audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditTotals {
    pub runs: u64,
    pub runs_with_violation: u64,
    pub queries: u64,
    pub queries_with_violation: u64,
    pub edges_tested: u64,
    pub antecedent_true: u64,
    pub violations: u64,
    pub multiset_runs: u64,
    pub multiset_failures: u64,
    pub dominance_checked: u64,
    pub dominance_failures: u64,
}

impl AuditTotals {
    pub fn absorb(&mut self, r: &AuditReport) {
        self.runs += 1;
        self.runs_with_violation += u64::from(r.run_violated());
        self.queries += r.num_queries as u64;
        self.queries_with_violation += r.queries_with_violation() as u64;
        self.edges_tested += r.edges_tested;
        self.antecedent_true += r.antecedent_true;
        self.violations += r.violations.len() as u64;
        self.multiset_runs += r.multiset.len() as u64;
        self.multiset_failures += r.multiset_failures() as u64;
        self.dominance_checked += r.dominance_checked;
        self.dominance_failures += r.dominance_failures.len() as u64;
    }

    pub fn per_edge_rate(&self) -> f64 {
        rate(self.violations, self.edges_tested)
    }

    pub fn per_query_rate(&self) -> f64 {
        rate(self.queries_with_violation, self.queries)
    }

    pub fn per_run_rate(&self) -> f64 {
        rate(self.runs_with_violation, self.runs)
    }
}

/// Ranks for the no-surpassing counterexample: `j` and `j'` share one rank,
/// any other bidder gets rank 1 (price 1, effective bid 0).
pub fn equal_ranks(num_bidders: usize, rank: f64) -> Result<RankAssignment> {
    let mut ws = vec![1.0; num_bidders];
    for w in ws.iter_mut().take(2) {
        *w = rank;
    }
    RankAssignment::from_ranks(ws)
}
