//! Seeded Monte-Carlo estimators.
//!
//! Trial `t` of an experiment with master seed `s` uses the ranks
//! `RankAssignment::for_trial(m, s, t)`. A [`TrialMap`] decides how trials
//! are scheduled; results always come back in trial order and are reduced
//! sequentially, so estimates are bit-identical for any number of lanes.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::audit::{audit, AuditReport, AuditTotals, Checks};
use crate::engines::{run_with, Algorithm, RankAssignment, RunOptions, RunOutcome};
use crate::instance::{gen_planted, Instance, PlantedParams, ProblemClass, Ratio};
use crate::oracle::{planted_certificate, OfflineOptimum, OptimumKind};
use crate::rng::derive_seed;
use crate::{Error, Result, ONE_MINUS_INV_E};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Schedules independent trials `0..trials`.
pub trait TrialMap {
    /// Returns `f(0), f(1), ..., f(trials - 1)` in that order.
    fn map<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialMap for Sequential {
    fn map<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..trials).map(f).collect()
    }
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Two passes in slice order; `se = 0` for fewer than two samples.
    pub fn of(samples: &[f64]) -> MeanSe {
        let n = samples.len();
        if n == 0 {
            return MeanSe { mean: 0.0, se: 0.0 };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return MeanSe { mean, se: 0.0 };
        }
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = libm::sqrt(ss / (n - 1) as f64);
        MeanSe {
            mean,
            se: sd / libm::sqrt(n as f64),
        }
    }

    /// `mean >= bound - k * se`
    pub fn at_least(&self, bound: f64, k: f64) -> bool {
        self.mean >= bound - k * self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioEstimate {
    pub algorithm: Algorithm,
    /// Content hash of the instance, filled in by callers that have one.
    pub instance_id: Option<String>,
    /// 1 for deterministic algorithms.
    pub trials: u64,
    pub seed: u64,
    pub mean_w: f64,
    pub mean_wf: f64,
    pub opt: u64,
    pub opt_kind: OptimumKind,
    /// Mean of `W / opt`.
    pub ratio: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Mean of `(W + W_f) / opt`.
    pub ratio_total: f64,
    pub se_total: f64,
}

impl RatioEstimate {
    pub fn ratio_stats(&self) -> MeanSe {
        MeanSe {
            mean: self.ratio,
            se: self.se,
        }
    }

    pub fn total_stats(&self) -> MeanSe {
        MeanSe {
            mean: self.ratio_total,
            se: self.se_total,
        }
    }
}

/// Runs `algorithm` once per trial (once in total if it is deterministic).
pub fn run_trials<M: TrialMap>(
    instance: &Instance,
    algorithm: Algorithm,
    trials: u64,
    seed: u64,
    map: &M,
) -> Result<Vec<RunOutcome>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let trials = if algorithm.is_randomized() { trials } else { 1 };
    let m = instance.num_bidders();
    collect(map.map(trials, |t| {
        let ranks = RankAssignment::for_trial(m, seed, t);
        run_with(algorithm, instance, Some(&ranks), RunOptions::default())
    }))
}

/// Monte-Carlo estimate of `E[W] / opt`. Upper-bound optima are rejected;
/// see [`estimate_ratio_against_bound`].
pub fn estimate_ratio<M: TrialMap>(
    instance: &Instance,
    algorithm: Algorithm,
    opt: &OfflineOptimum,
    trials: u64,
    seed: u64,
    map: &M,
) -> Result<RatioEstimate> {
    if opt.kind == OptimumKind::UpperBound {
        return Err(Error::NoOptimum("only an upper bound is available".into()));
    }
    estimate_ratio_against_bound(instance, algorithm, opt, trials, seed, map)
}

/// Like [`estimate_ratio`] but also accepts an upper bound, in which case
/// the ratio is conservative.
pub fn estimate_ratio_against_bound<M: TrialMap>(
    instance: &Instance,
    algorithm: Algorithm,
    opt: &OfflineOptimum,
    trials: u64,
    seed: u64,
    map: &M,
) -> Result<RatioEstimate> {
    if opt.value == 0 {
        return Err(Error::NoOptimum("offline optimum is 0".into()));
    }
    let runs = run_trials(instance, algorithm, trials, seed, map)?;
    let opt_f = opt.value as f64;
    let w: Vec<f64> = runs.iter().map(|r| r.real as f64).collect();
    let wf: Vec<f64> = runs.iter().map(|r| r.fake as f64).collect();
    let ratio: Vec<f64> = w.iter().map(|x| x / opt_f).collect();
    let total: Vec<f64> = runs.iter().map(|r| (r.real + r.fake) as f64 / opt_f).collect();
    let (rs, ts) = (MeanSe::of(&ratio), MeanSe::of(&total));
    Ok(RatioEstimate {
        algorithm,
        instance_id: None,
        trials: runs.len() as u64,
        seed,
        mean_w: MeanSe::of(&w).mean,
        mean_wf: MeanSe::of(&wf).mean,
        opt: opt.value,
        opt_kind: opt.kind,
        ratio: rs.mean,
        se: rs.se,
        ci_lo: rs.mean - Z95 * rs.se,
        ci_hi: rs.mean + Z95 * rs.se,
        ratio_total: ts.mean,
        se_total: ts.se,
    })
}

/// A bidder together with queries of the offline optimum assigned to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Star {
    pub bidder: usize,
    pub queries: Vec<usize>,
}

/// Groups an assignment by bidder. Bidders without queries are left out.
pub fn decompose(num_bidders: usize, assignment: &[(usize, usize)]) -> Vec<Star> {
    let mut stars: Vec<Star> = (0..num_bidders)
        .map(|bidder| Star {
            bidder,
            queries: Vec::new(),
        })
        .collect();
    for &(q, b) in assignment {
        if let Some(s) = stars.get_mut(b) {
            s.queries.push(q);
        }
    }
    for s in &mut stars {
        s.queries.sort_unstable();
    }
    stars.retain(|s| !s.queries.is_empty());
    stars
}

/// Stars of the planted solution, else of the optimum's witness.
pub fn stars_for(instance: &Instance, opt: Option<&OfflineOptimum>) -> Option<Vec<Star>> {
    if let Some(p) = &instance.planted {
        return Some(decompose(instance.num_bidders(), &p.assignment));
    }
    opt.and_then(|o| o.witness.as_ref())
        .map(|w| decompose(instance.num_bidders(), w))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ContributionTarget {
    Edge { query: usize, bidder: usize },
    Star(Star),
}

impl ContributionTarget {
    pub fn bidder(&self) -> usize {
        match self {
            ContributionTarget::Edge { bidder, .. } => *bidder,
            ContributionTarget::Star(s) => s.bidder,
        }
    }

    pub fn queries(&self) -> Vec<usize> {
        match self {
            ContributionTarget::Edge { query, .. } => alloc::vec![*query],
            ContributionTarget::Star(s) => s.queries.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContributionEstimate {
    pub target: ContributionTarget,
    pub trials: u64,
    /// Mean of `r_j + sum of u_i` over the target's queries.
    pub mean: f64,
    pub se: f64,
    pub bound: f64,
    /// `mean - bound`.
    pub margin: f64,
    /// GENERAL: the bound is only claimed under the no-surpassing assumption.
    pub conditional: bool,
}

impl ContributionEstimate {
    pub fn stats(&self) -> MeanSe {
        MeanSe {
            mean: self.mean,
            se: self.se,
        }
    }

    /// `mean >= bound - k * se`
    pub fn holds_within(&self, k: f64) -> bool {
        self.stats().at_least(self.bound, k)
    }
}

fn contributions<M: TrialMap>(
    instance: &Instance,
    targets: Vec<(ContributionTarget, f64)>,
    trials: u64,
    seed: u64,
    map: &M,
) -> Result<Vec<ContributionEstimate>> {
    let runs = run_trials(instance, Algorithm::for_class(instance.class), trials, seed, map)?;
    let conditional = instance.class == ProblemClass::General;
    Ok(targets
        .into_iter()
        .map(|(target, bound)| {
            let j = target.bidder();
            let qs = target.queries();
            let samples: Vec<f64> = runs
                .iter()
                .map(|r| r.revenue[j] + qs.iter().map(|&q| r.utility[q]).sum::<f64>())
                .collect();
            let s = MeanSe::of(&samples);
            ContributionEstimate {
                target,
                trials: runs.len() as u64,
                mean: s.mean,
                se: s.se,
                bound,
                margin: s.mean - bound,
                conditional,
            }
        })
        .collect())
}

/// Per-edge `E[u_i + r_j]` under RANKING, against `1 - 1/e`.
pub fn estimate_edge_contributions<M: TrialMap>(
    instance: &Instance,
    edges: &[(usize, usize)],
    trials: u64,
    seed: u64,
    map: &M,
) -> Result<Vec<ContributionEstimate>> {
    if instance.class != ProblemClass::Obm {
        return Err(Error::ClassMismatch {
            engine: "edge contributions",
            expected: ProblemClass::Obm,
            found: instance.class,
        });
    }
    let mut targets = Vec::with_capacity(edges.len());
    for &(query, bidder) in edges {
        if instance.bid(query, bidder).is_none() {
            return Err(Error::InvalidParameter(format!("({query}, {bidder}) is not an edge")));
        }
        targets.push((ContributionTarget::Edge { query, bidder }, ONE_MINUS_INV_E));
    }
    contributions(instance, targets, trials, seed, map)
}

/// Checks a star and returns its bound: `k_j b_j (1 - 1/e)` for a j-star,
/// `B_j (1 - 1/e)` for a B_j-star.
pub fn star_bound(instance: &Instance, star: &Star) -> Result<f64> {
    let j = star.bidder;
    let malformed = |reason: String| Error::MalformedStar { bidder: j, reason };
    let bidder = instance.bidders.get(j).ok_or(Error::UnknownBidder(j))?;
    let mut seen = star.queries.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != star.queries.len() {
        return Err(malformed("repeated query".into()));
    }
    let mut total = 0u64;
    for &q in &star.queries {
        match instance.bid(q, j) {
            Some(b) => total += b,
            None => return Err(malformed(format!("query {q} is not a neighbour"))),
        }
    }
    match instance.class {
        ProblemClass::SingleValued => {
            let sv = bidder
                .single
                .ok_or_else(|| malformed("bidder is not single-valued".into()))?;
            if star.queries.len() as u64 != sv.cap {
                return Err(malformed(format!("{} queries, k = {}", star.queries.len(), sv.cap)));
            }
            Ok((sv.cap * sv.bid) as f64 * ONE_MINUS_INV_E)
        }
        ProblemClass::General => {
            if total != bidder.budget {
                return Err(malformed(format!("bids sum to {total}, budget is {}", bidder.budget)));
            }
            Ok(bidder.budget as f64 * ONE_MINUS_INV_E)
        }
        ProblemClass::Obm => Err(Error::ClassMismatch {
            engine: "star contributions",
            expected: ProblemClass::SingleValued,
            found: ProblemClass::Obm,
        }),
    }
}

/// Per-star `E[r_j + sum of u_i]` under the class engine.
pub fn estimate_star_contributions<M: TrialMap>(
    instance: &Instance,
    stars: &[Star],
    trials: u64,
    seed: u64,
    map: &M,
) -> Result<Vec<ContributionEstimate>> {
    let targets = stars
        .iter()
        .map(|s| Ok((ContributionTarget::Star(s.clone()), star_bound(instance, s)?)))
        .collect::<Result<Vec<_>>>()?;
    contributions(instance, targets, trials, seed, map)
}

/// `sum over bidders of max(bid - 1)`, the per-run cap on `W_f`.
pub fn fake_money_bound(instance: &Instance) -> u64 {
    instance.max_bids().iter().map(|b| b.saturating_sub(1)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FakeMoneyReport {
    pub trials: u64,
    pub seed: u64,
    pub bound: u64,
    pub fake: Vec<u64>,
    pub total_budget: u64,
    pub mu: Ratio,
    /// Largest `W_f / sum B_j` over trials.
    pub max_fraction: Ratio,
    pub mean_fraction: f64,
}

impl FakeMoneyReport {
    pub fn max_fake(&self) -> u64 {
        self.fake.iter().copied().max().unwrap_or(0)
    }

    /// `W_f / sum B_j <= mu(I)` on every trial, compared exactly.
    pub fn within_mu(&self) -> bool {
        self.max_fraction <= self.mu
    }
}

/// Runs the GENERAL engine and checks `W_f <= sum max(bid - 1)` exactly on
/// every trial; a violation is an error.
pub fn fake_money_report<M: TrialMap>(instance: &Instance, trials: u64, seed: u64, map: &M) -> Result<FakeMoneyReport> {
    if instance.class != ProblemClass::General {
        return Err(Error::ClassMismatch {
            engine: "fake money report",
            expected: ProblemClass::General,
            found: instance.class,
        });
    }
    let runs = run_trials(instance, Algorithm::General, trials, seed, map)?;
    let bound = fake_money_bound(instance);
    let fake: Vec<u64> = runs.iter().map(|r| r.fake).collect();
    if let Some((trial, &f)) = fake.iter().enumerate().find(|(_, &f)| f > bound) {
        return Err(Error::FakeMoneyBound {
            trial: trial as u64,
            fake: f,
            bound,
        });
    }
    let total_budget = instance.total_budget();
    let fractions: Vec<f64> = fake.iter().map(|&f| f as f64 / total_budget.max(1) as f64).collect();
    Ok(FakeMoneyReport {
        trials: runs.len() as u64,
        seed,
        bound,
        max_fraction: Ratio::new(fake.iter().copied().max().unwrap_or(0), total_budget.max(1)),
        fake,
        total_budget,
        mu: instance.mu(),
        mean_fraction: MeanSe::of(&fractions).mean,
    })
}

/// Audits the first `runs` trial rank draws of an experiment.
pub fn audit_trials<M: TrialMap>(
    instance: &Instance,
    runs: u64,
    seed: u64,
    checks: Checks,
    map: &M,
) -> Result<Vec<AuditReport>> {
    let m = instance.num_bidders();
    collect(map.map(runs, |t| {
        let ranks = RankAssignment::for_trial(m, seed, t);
        audit(instance, &ranks, checks)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mu_targets: Vec<f64>,
    /// Template for every planted GENERAL instance; `mu_target` and `seed`
    /// are overwritten per instance.
    pub base: PlantedParams,
    pub instances_per_cell: usize,
    pub trials: u64,
    /// Rank draws audited for no-surpassing violations per instance.
    pub audited_seeds: u64,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(mu_targets: Vec<f64>, seed: u64) -> Self {
        let mut base = PlantedParams::new(ProblemClass::General, 6, seed);
        base.budget = 100;
        SweepConfig {
            mu_targets,
            base,
            instances_per_cell: 3,
            trials: 200,
            audited_seeds: 5,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu_target: f64,
    /// Largest `mu(I)` among the cell's instances.
    pub mu_actual: f64,
    pub instances: usize,
    pub trials: u64,
    /// Mean of `W / w(P)` over every (instance, trial).
    pub ratio: f64,
    pub se: f64,
    /// Mean of `(W + W_f) / w(P)`.
    pub total_ratio: f64,
    pub total_se: f64,
    /// Mean of `W_f / w(P)`.
    pub wf_fraction: f64,
    /// `W_f / w(P) <= mu(I)` held on every run.
    pub wf_within_mu: bool,
    pub audited_runs: u64,
    pub violations_sampled: u64,
}

impl SweepRow {
    pub fn audit_clean(&self) -> bool {
        self.violations_sampled == 0
    }
}

/// For each `mu` target, plants GENERAL instances, runs the fake-money
/// engine and tabulates real and total ratios against `w(P) = sum B_j`.
pub fn sweep_mu<M: TrialMap>(cfg: &SweepConfig, map: &M) -> Result<Vec<SweepRow>> {
    if cfg.instances_per_cell == 0 {
        return Err(Error::InvalidParameter(
            "a sweep cell needs at least one instance".into(),
        ));
    }
    let mut rows = Vec::with_capacity(cfg.mu_targets.len());
    for (cell, &mu) in cfg.mu_targets.iter().enumerate() {
        let mut ratio = Vec::new();
        let mut total = Vec::new();
        let mut frac = Vec::new();
        let mut mu_actual: f64 = 0.0;
        let mut within = true;
        let mut audit_totals = AuditTotals::default();
        for c in 0..cfg.instances_per_cell {
            let mut p = cfg.base.clone();
            p.class = ProblemClass::General;
            p.mu_target = mu;
            p.seed = derive_seed(cfg.seed, (cell * cfg.instances_per_cell + c) as u64);
            let inst = gen_planted(&p)?;
            let opt = planted_certificate(&inst)
                .ok_or_else(|| Error::NoOptimum("planted instance has no certificate".into()))?;
            let report = fake_money_report(&inst, cfg.trials, p.seed, map)?;
            let est = estimate_ratio(&inst, Algorithm::General, &opt, cfg.trials, p.seed, map)?;
            let runs = run_trials(&inst, Algorithm::General, cfg.trials, p.seed, map)?;
            let w_p = opt.value as f64;
            for r in &runs {
                ratio.push(r.real as f64 / w_p);
                total.push((r.real + r.fake) as f64 / w_p);
                frac.push(r.fake as f64 / w_p);
            }
            debug_assert_eq!(est.trials, runs.len() as u64);
            mu_actual = mu_actual.max(inst.mu().to_f64());
            within &= report.within_mu();
            for a in audit_trials(&inst, cfg.audited_seeds, p.seed, Checks::NO_SURPASSING, map)? {
                audit_totals.absorb(&a);
            }
        }
        let (rs, ts) = (MeanSe::of(&ratio), MeanSe::of(&total));
        rows.push(SweepRow {
            mu_target: mu,
            mu_actual,
            instances: cfg.instances_per_cell,
            trials: cfg.trials,
            ratio: rs.mean,
            se: rs.se,
            total_ratio: ts.mean,
            total_se: ts.se,
            wf_fraction: MeanSe::of(&frac).mean,
            wf_within_mu: within,
            audited_runs: audit_totals.runs,
            violations_sampled: audit_totals.violations,
        });
    }
    Ok(rows)
}
