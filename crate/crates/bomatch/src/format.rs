//! File formats.
//!
//! Instances, run outcomes, rank vectors and audit reports are JSON; tables
//! (ratios, contributions, sweeps, audit violations) are CSV with a leading
//! `#` provenance line carrying the seed. Every writer has a reader, and
//! floats are printed in shortest round-trip form, so files compare
//! byte-for-byte across runs.

use std::fs;
use std::io;
use std::path::Path;

use bomatch_core::audit::{AuditReport, AuditTotals, DominanceCheck};
use bomatch_core::engines::{RankAssignment, RunOutcome, TraceStep};
use bomatch_core::harness::{ContributionEstimate, ContributionTarget, RatioEstimate, SweepRow};
use bomatch_core::instance::{Bidder, Edge, Instance, ProblemClass, SingleValue};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{field}: {reason}")]
    Field { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] bomatch_core::Error),
}

fn field(field: impl Into<String>, reason: impl Into<String>) -> FormatError {
    FormatError::Field {
        field: field.into(),
        reason: reason.into(),
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BidderDoc {
    id: usize,
    budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantedDoc {
    assignment: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    class: String,
    n: usize,
    bidders: Vec<BidderDoc>,
    edges: Vec<Vec<(usize, u64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    planted_opt: Option<PlantedDoc>,
}

pub fn instance_to_json(instance: &Instance) -> String {
    let doc = InstanceDoc {
        class: instance.class.name().into(),
        n: instance.num_queries(),
        bidders: instance
            .bidders
            .iter()
            .enumerate()
            .map(|(id, b)| BidderDoc {
                id,
                budget: b.budget,
                b: b.single.map(|s| s.bid),
                k: b.single.map(|s| s.cap),
            })
            .collect(),
        edges: instance
            .queries
            .iter()
            .map(|q| q.iter().map(|e| (e.bidder, e.bid)).collect())
            .collect(),
        planted_opt: instance.planted.as_ref().map(|p| PlantedDoc {
            assignment: p.assignment.clone(),
        }),
    };
    let mut s = serde_json::to_string(&doc).expect("instance documents always serialize");
    s.push('\n');
    s
}

/// Parses and validates an instance.
pub fn instance_from_json(text: &str) -> Result<Instance, FormatError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let class =
        ProblemClass::parse(&doc.class).ok_or_else(|| field("class", format!("unknown class {:?}", doc.class)))?;
    if doc.n != doc.edges.len() {
        return Err(field(
            "n",
            format!("n = {} but edges lists {} queries", doc.n, doc.edges.len()),
        ));
    }
    let mut bidders = Vec::with_capacity(doc.bidders.len());
    for (idx, b) in doc.bidders.iter().enumerate() {
        if b.id != idx {
            return Err(field(
                format!("bidders[{idx}].id"),
                format!("expected {idx}, found {}", b.id),
            ));
        }
        let single = match (b.b, b.k) {
            (Some(bid), Some(cap)) => Some(SingleValue { bid, cap }),
            (None, None) => None,
            _ => return Err(field(format!("bidders[{idx}]"), "b and k must appear together")),
        };
        bidders.push(Bidder {
            budget: b.budget,
            single,
        });
    }
    let queries = doc
        .edges
        .iter()
        .map(|q| q.iter().map(|&(bidder, bid)| Edge { bidder, bid }).collect())
        .collect();
    let mut instance = Instance::new(class, bidders, queries);
    if let Some(p) = doc.planted_opt {
        instance = instance.with_planted(p.assignment);
    }
    if let Some(v) = instance.validate().into_iter().next() {
        let at = match (v.query, v.bidder) {
            (Some(q), _) => format!("edges[{q}]"),
            (None, Some(b)) => format!("bidders[{b}]"),
            (None, None) => "instance".into(),
        };
        return Err(field(at, v.to_string()));
    }
    Ok(instance)
}

pub fn read_instance(path: &Path) -> Result<Instance, FormatError> {
    instance_from_json(&read_text(path)?).map_err(|e| match e {
        FormatError::Io { .. } => e,
        other => field(path.display().to_string(), other.to_string()),
    })
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<(), FormatError> {
    write_text(path, &instance_to_json(instance))
}

/// First 16 hex digits of the SHA-256 of the canonical instance JSON.
pub fn instance_id(instance: &Instance) -> String {
    let digest = Sha256::digest(instance_to_json(instance).as_bytes());
    hex::encode(&digest[..8])
}

pub fn ranks_to_json(ranks: &RankAssignment) -> String {
    let mut s = serde_json::to_string(ranks.ranks()).expect("floats in [0, 1] serialize");
    s.push('\n');
    s
}

pub fn ranks_from_json(text: &str) -> Result<RankAssignment, FormatError> {
    let ws: Vec<f64> = serde_json::from_str(text)?;
    Ok(RankAssignment::from_ranks(ws)?)
}

pub fn read_ranks(path: &Path) -> Result<RankAssignment, FormatError> {
    ranks_from_json(&read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferDoc {
    pub bidder: usize,
    pub bid: u64,
    pub effective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDoc {
    pub query: usize,
    pub available: Vec<u64>,
    pub neighbors: Vec<(usize, u64)>,
    pub offers: Vec<OfferDoc>,
    pub accepted: Option<usize>,
}

impl From<&TraceStep> for StepDoc {
    fn from(s: &TraceStep) -> Self {
        StepDoc {
            query: s.query,
            available: s.available.clone(),
            neighbors: s.neighbors.clone(),
            offers: s
                .offers
                .iter()
                .map(|o| OfferDoc {
                    bidder: o.bidder,
                    bid: o.bid,
                    effective: o.effective,
                })
                .collect(),
            accepted: s.accepted.map(|o| o.bidder),
        }
    }
}

/// A run as written by `run`. The first five fields are the run itself;
/// the rest is provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub matching: Vec<(usize, usize, u64)>,
    #[serde(rename = "W")]
    pub w: u64,
    #[serde(rename = "Wf")]
    pub wf: u64,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub algorithm: String,
    pub instance_id: String,
    /// `None` for injected ranks and deterministic algorithms.
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StepDoc>>,
}

impl RunDoc {
    pub fn new(outcome: &RunOutcome, instance_id: String, seed: Option<u64>) -> Self {
        RunDoc {
            matching: outcome.matching.iter().map(|m| (m.query, m.bidder, m.bid)).collect(),
            w: outcome.real,
            wf: outcome.fake,
            u: outcome.utility.clone(),
            r: outcome.revenue.clone(),
            algorithm: outcome.algorithm.name().into(),
            instance_id,
            seed,
            trace: outcome
                .trace
                .as_ref()
                .map(|t| t.steps.iter().map(StepDoc::from).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("run documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn csv_with_header<T: Serialize>(provenance: &str, rows: &[T]) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let body =
        String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv output is utf-8");
    Ok(format!("# {provenance}\n{body}"))
}

/// Header-less tables still need their column names.
fn csv_columns<T: Serialize>(provenance: &str, rows: &[T], columns: &[&str]) -> Result<String, FormatError> {
    if rows.is_empty() {
        Ok(format!("# {provenance}\n{}\n", columns.join(",")))
    } else {
        csv_with_header(provenance, rows)
    }
}

fn csv_rows<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, FormatError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub instance_id: String,
    pub algorithm: String,
    pub trials: u64,
    #[serde(rename = "mean_W")]
    pub mean_w: f64,
    #[serde(rename = "mean_Wf")]
    pub mean_wf: f64,
    pub opt: u64,
    pub ratio: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    pub opt_kind: String,
    pub ratio_total: f64,
    pub se_total: f64,
}

impl From<&RatioEstimate> for RatioRow {
    fn from(e: &RatioEstimate) -> Self {
        RatioRow {
            instance_id: e.instance_id.clone().unwrap_or_default(),
            algorithm: e.algorithm.name().into(),
            trials: e.trials,
            mean_w: e.mean_w,
            mean_wf: e.mean_wf,
            opt: e.opt,
            ratio: e.ratio,
            se: e.se,
            ci_lo: e.ci_lo,
            ci_hi: e.ci_hi,
            seed: e.seed,
            opt_kind: e.opt_kind.name().into(),
            ratio_total: e.ratio_total,
            se_total: e.se_total,
        }
    }
}

pub fn ratio_csv(rows: &[RatioRow], seed: u64) -> Result<String, FormatError> {
    csv_with_header(&format!("ratio seed={seed}"), rows)
}

pub fn ratio_rows(text: &str) -> Result<Vec<RatioRow>, FormatError> {
    csv_rows(text)
}

pub fn ratio_json(rows: &[RatioRow]) -> String {
    let mut s = serde_json::to_string(rows).expect("ratio rows serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRow {
    pub instance_id: String,
    /// `edge` or `star`.
    pub target: String,
    pub bidder: usize,
    /// Space-separated query ids.
    pub queries: String,
    pub trials: u64,
    pub mean: f64,
    pub se: f64,
    pub bound: f64,
    pub margin: f64,
    pub conditional: bool,
    pub seed: u64,
}

impl ContributionRow {
    pub fn new(e: &ContributionEstimate, instance_id: &str, seed: u64) -> Self {
        let kind = match e.target {
            ContributionTarget::Edge { .. } => "edge",
            ContributionTarget::Star(_) => "star",
        };
        let queries: Vec<String> = e.target.queries().iter().map(|q| q.to_string()).collect();
        ContributionRow {
            instance_id: instance_id.into(),
            target: kind.into(),
            bidder: e.target.bidder(),
            queries: queries.join(" "),
            trials: e.trials,
            mean: e.mean,
            se: e.se,
            bound: e.bound,
            margin: e.margin,
            conditional: e.conditional,
            seed,
        }
    }
}

pub fn contribution_csv(rows: &[ContributionRow], seed: u64) -> Result<String, FormatError> {
    csv_columns(
        &format!("contributions seed={seed}"),
        rows,
        &[
            "instance_id",
            "target",
            "bidder",
            "queries",
            "trials",
            "mean",
            "se",
            "bound",
            "margin",
            "conditional",
            "seed",
        ],
    )
}

pub fn contribution_rows(text: &str) -> Result<Vec<ContributionRow>, FormatError> {
    csv_rows(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub mu_target: f64,
    pub mu_actual: f64,
    pub ratio: f64,
    pub wf_fraction: f64,
    pub violations_sampled: u64,
    pub se: f64,
    pub total_ratio: f64,
    pub total_se: f64,
    pub wf_within_mu: bool,
    pub instances: usize,
    pub trials: u64,
    pub audited_runs: u64,
}

impl From<&SweepRow> for SweepCsvRow {
    fn from(r: &SweepRow) -> Self {
        SweepCsvRow {
            mu_target: r.mu_target,
            mu_actual: r.mu_actual,
            ratio: r.ratio,
            wf_fraction: r.wf_fraction,
            violations_sampled: r.violations_sampled,
            se: r.se,
            total_ratio: r.total_ratio,
            total_se: r.total_se,
            wf_within_mu: r.wf_within_mu,
            instances: r.instances,
            trials: r.trials,
            audited_runs: r.audited_runs,
        }
    }
}

pub fn sweep_csv(rows: &[SweepCsvRow], seed: u64) -> Result<String, FormatError> {
    csv_with_header(&format!("sweep seed={seed}"), rows)
}

pub fn sweep_rows(text: &str) -> Result<Vec<SweepCsvRow>, FormatError> {
    csv_rows(text)
}

/// One no-surpassing violation, flattened for aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRow {
    /// Seed of the rank draw; empty for injected ranks.
    pub seed: Option<u64>,
    pub query: usize,
    pub bidder: usize,
    pub ebid: f64,
    pub beta: f64,
    pub surpassing_bid: f64,
    pub surpassing_bidder: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultisetRow {
    pub seed: Option<u64>,
    pub removed: usize,
    pub step: usize,
    pub part: String,
    pub bidder: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub seed: Option<u64>,
    pub query: usize,
    pub bidder: usize,
    pub check: String,
    pub utility: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TotalsDoc {
    pub runs: u64,
    pub runs_with_violation: u64,
    pub queries: u64,
    pub queries_with_violation: u64,
    pub edges_tested: u64,
    pub antecedent_true: u64,
    pub violations: u64,
    pub per_edge_rate: f64,
    pub per_query_rate: f64,
    pub per_run_rate: f64,
    pub multiset_runs: u64,
    pub multiset_failures: u64,
    pub dominance_checked: u64,
    pub dominance_failures: u64,
}

impl From<&AuditTotals> for TotalsDoc {
    fn from(t: &AuditTotals) -> Self {
        TotalsDoc {
            runs: t.runs,
            runs_with_violation: t.runs_with_violation,
            queries: t.queries,
            queries_with_violation: t.queries_with_violation,
            edges_tested: t.edges_tested,
            antecedent_true: t.antecedent_true,
            violations: t.violations,
            per_edge_rate: t.per_edge_rate(),
            per_query_rate: t.per_query_rate(),
            per_run_rate: t.per_run_rate(),
            multiset_runs: t.multiset_runs,
            multiset_failures: t.multiset_failures,
            dominance_checked: t.dominance_checked,
            dominance_failures: t.dominance_failures,
        }
    }
}

/// Everything `audit` reports about one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditDoc {
    pub instance_id: String,
    pub class: String,
    /// Master seed; `None` for injected ranks.
    pub seed: Option<u64>,
    pub totals: TotalsDoc,
    pub violations: Vec<ViolationRow>,
    pub multiset_failures: Vec<MultisetRow>,
    pub dominance_failures: Vec<DominanceRow>,
}

impl AuditDoc {
    pub fn new(instance_id: String, class: ProblemClass, seed: Option<u64>, reports: &[AuditReport]) -> Self {
        let mut totals = AuditTotals::default();
        let mut violations = Vec::new();
        let mut multiset_failures = Vec::new();
        let mut dominance_failures = Vec::new();
        for r in reports {
            totals.absorb(r);
            violations.extend(r.violations.iter().map(|v| ViolationRow {
                seed: r.seed,
                query: v.query,
                bidder: v.bidder,
                ebid: v.ebid,
                beta: v.beta,
                surpassing_bid: v.surpassing_bid,
                surpassing_bidder: v.surpassing_bidder,
            }));
            for m in &r.multiset {
                multiset_failures.extend(m.failures.iter().map(|f| MultisetRow {
                    seed: r.seed,
                    removed: m.removed,
                    step: f.step,
                    part: f.part.name().into(),
                    bidder: f.bidder,
                }));
            }
            dominance_failures.extend(r.dominance_failures.iter().map(|f| DominanceRow {
                seed: r.seed,
                query: f.query,
                bidder: f.bidder,
                check: match f.check {
                    DominanceCheck::Utility => "utility".into(),
                    DominanceCheck::MatchedWhenCheap => "matched_when_cheap".into(),
                },
                utility: f.utility,
                threshold: f.threshold,
            }));
        }
        AuditDoc {
            instance_id,
            class: class.name().into(),
            seed,
            totals: TotalsDoc::from(&totals),
            violations,
            multiset_failures,
            dominance_failures,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("audit documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per violation.
    pub fn to_csv(&self) -> Result<String, FormatError> {
        let seed = self.seed.map_or_else(|| "injected".to_string(), |s| s.to_string());
        csv_columns(
            &format!("audit instance={} seed={seed}", self.instance_id),
            &self.violations,
            &[
                "seed",
                "query",
                "bidder",
                "ebid",
                "beta",
                "surpassing_bid",
                "surpassing_bidder",
            ],
        )
    }
}

pub fn violation_rows(text: &str) -> Result<Vec<ViolationRow>, FormatError> {
    csv_rows(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bomatch_core::audit::{audit, equal_ranks, Checks};
    use bomatch_core::engines::{draw_ranks, run_with, Algorithm, RunOptions};
    use bomatch_core::instance::{gen_example_no_surpass, gen_planted, gen_random, PlantedParams, RandomParams};
    use proptest::prelude::*;

    #[test]
    fn field_order_follows_the_format() {
        let inst = Instance::new(
            ProblemClass::SingleValued,
            vec![Bidder::single_valued(2, 3)],
            vec![vec![Edge::new(0, 2)]],
        )
        .with_planted(vec![(0, 0)]);
        assert_eq!(
            instance_to_json(&inst),
            "{\"class\":\"single_valued\",\"n\":1,\"bidders\":[{\"id\":0,\"budget\":6,\"b\":2,\"k\":3}],\
             \"edges\":[[[0,2]]],\"planted_opt\":{\"assignment\":[[0,0]]}}\n"
        );
    }

    #[test]
    fn malformed_instances_name_the_problem() {
        let err =
            instance_from_json("{\"class\":\"obm\",\"n\":1,\"bidders\":[{\"id\":0}],\"edges\":[[]]}").unwrap_err();
        assert!(err.to_string().contains("budget"), "{err}");
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = instance_from_json("{\"class\":\"obm\",\"n\":2,\"bidders\":[],\"edges\":[[]]}").unwrap_err();
        assert!(err.to_string().starts_with("n:"), "{err}");
        let err =
            instance_from_json("{\"class\":\"obm\",\"n\":1,\"bidders\":[{\"id\":3,\"budget\":1}],\"edges\":[[]]}")
                .unwrap_err();
        assert!(err.to_string().contains("bidders[0].id"), "{err}");
        let err =
            instance_from_json("{\"class\":\"obm\",\"n\":1,\"bidders\":[{\"id\":0,\"budget\":1}],\"edges\":[[[0,2]]]}")
                .unwrap_err();
        assert!(err.to_string().contains("edges[0]"), "{err}");
        assert!(instance_from_json("{\"class\":\"adwords\",\"n\":0,\"bidders\":[],\"edges\":[]}").is_err());
    }

    #[test]
    fn run_document_round_trips() {
        let inst = gen_random(&RandomParams::new(ProblemClass::General, 6, 3, 1)).unwrap();
        let ranks = draw_ranks(&inst, 4);
        let out = run_with(Algorithm::General, &inst, Some(&ranks), RunOptions::traced()).unwrap();
        let doc = RunDoc::new(&out, instance_id(&inst), Some(4));
        let text = doc.to_json();
        assert!(text.starts_with("{\"matching\":"));
        assert_eq!(RunDoc::from_json(&text).unwrap(), doc);
        assert_eq!(doc.trace.as_ref().unwrap().len(), 6);
    }

    #[test]
    fn ranks_round_trip_exactly() {
        let r = draw_ranks(&gen_random(&RandomParams::new(ProblemClass::Obm, 3, 7, 2)).unwrap(), 9);
        assert_eq!(ranks_from_json(&ranks_to_json(&r)).unwrap().ranks(), r.ranks());
        assert!(ranks_from_json("[0.5, 1.5]").is_err());
    }

    #[test]
    fn audit_csv_round_trips() {
        let inst = gen_example_no_surpass(2, 5).unwrap();
        let r = equal_ranks(2, 0.5).unwrap();
        let report = audit(&inst, &r, Checks::NO_SURPASSING).unwrap();
        let doc = AuditDoc::new(instance_id(&inst), inst.class, None, &[report]);
        assert!(!doc.violations.is_empty());
        assert_eq!(violation_rows(&doc.to_csv().unwrap()).unwrap(), doc.violations);
        assert_eq!(AuditDoc::from_json(&doc.to_json()).unwrap(), doc);
        let empty = AuditDoc::new("x".into(), ProblemClass::Obm, Some(1), &[]);
        assert!(empty.to_csv().unwrap().ends_with("surpassing_bidder\n"));
    }

    #[test]
    fn ids_depend_on_content() {
        let a = gen_random(&RandomParams::new(ProblemClass::Obm, 5, 3, 1)).unwrap();
        let b = gen_random(&RandomParams::new(ProblemClass::Obm, 5, 3, 2)).unwrap();
        assert_eq!(instance_id(&a), instance_id(&a.clone()));
        assert_ne!(instance_id(&a), instance_id(&b));
        assert_eq!(instance_id(&a).len(), 16);
    }

    proptest! {
        #[test]
        fn instances_round_trip(seed in any::<u64>(), n in 1usize..20, m in 1usize..6, class in 0u8..3, planted in any::<bool>()) {
            let class = [ProblemClass::Obm, ProblemClass::SingleValued, ProblemClass::General][class as usize];
            let inst = if planted {
                let mut p = PlantedParams::new(class, m, seed);
                p.budget = p.budget.min(20);
                gen_planted(&p).unwrap()
            } else {
                gen_random(&RandomParams::new(class, n, m, seed)).unwrap()
            };
            let text = instance_to_json(&inst);
            let back = instance_from_json(&text).unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(instance_to_json(&back), text);
        }
    }
}
