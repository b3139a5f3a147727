//! Online engines.
//!
//! Three rank-based engines share one loop: RANKING for OBM, the
//! single-valued algorithm and the fake-money GENERAL algorithm. Each bidder
//! `j` draws a rank `w_j` uniformly from `[0, 1]` and gets the price
//! `p_j = exp(w_j - 1)`. An arriving query receives the effective bid
//! `bid * (1 - p_j)` from every neighbour that is still available and takes
//! the largest; the query's utility is that effective bid and the bidder's
//! revenue grows by `bid * p_j`.
//!
//! The loop sees bidders only through [`Availability`], a yes/no oracle, so
//! the bid computation cannot depend on budget magnitudes. What "available"
//! means and what a match costs is decided by the per-run ledger:
//!
//! * OBM: one copy per good.
//! * SINGLE-VALUED: `k_j` copies, a match consumes one.
//! * GENERAL: `B_j` copies (the leftover `L_j`), a match consumes
//!   `min(L_j, bid)`; the rest of the bid is fake money.
//!
//! Greedy and MSVV are deterministic baselines that read leftover budgets
//! directly and never overspend.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::instance::{Edge, Instance, ProblemClass};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// One rank draw. The only source of randomness of a rank-based run.
#[derive(Debug, Clone, PartialEq)]
pub struct RankAssignment {
    ranks: Vec<f64>,
    prices: Vec<f64>,
    seed: Option<u64>,
}

impl RankAssignment {
    /// Injected ranks. Each must lie in `[0, 1]`.
    pub fn from_ranks(ranks: Vec<f64>) -> Result<Self> {
        for (bidder, &value) in ranks.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::RankOutOfRange { bidder, value });
            }
        }
        let prices = ranks.iter().map(|&w| price_of_rank(w)).collect();
        Ok(RankAssignment {
            ranks,
            prices,
            seed: None,
        })
    }

    fn from_rng<R: Rng>(num_bidders: usize, rng: &mut R, seed: u64) -> Self {
        let ranks: Vec<f64> = (0..num_bidders).map(|_| rng.gen::<f64>()).collect();
        let prices = ranks.iter().map(|&w| price_of_rank(w)).collect();
        RankAssignment {
            ranks,
            prices,
            seed: Some(seed),
        }
    }

    /// Ranks of trial `trial` under `master`. The recorded seed is the
    /// derived per-trial seed, so `draw_ranks(instance, seed)` reproduces them.
    pub fn for_trial(num_bidders: usize, master: u64, trial: u64) -> Self {
        let seed = derive_seed(master, trial);
        Self::from_rng(num_bidders, &mut seeded(seed), seed)
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn rank(&self, bidder: usize) -> f64 {
        self.ranks[bidder]
    }

    pub fn price(&self, bidder: usize) -> f64 {
        self.prices[bidder]
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Seed the ranks were drawn from, `None` for injected ranks.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Bidders by increasing price, ties by id.
    pub fn price_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.prices[a].total_cmp(&self.prices[b]).then(a.cmp(&b)));
        order
    }

    fn check_covers(&self, instance: &Instance) -> Result<()> {
        if self.len() != instance.num_bidders() {
            return Err(Error::RankCount {
                expected: instance.num_bidders(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

pub fn price_of_rank(rank: f64) -> f64 {
    libm::exp(rank - 1.0)
}

/// `bid * (1 - price)`; every comparison of effective bids in the crate goes
/// through this expression.
pub fn effective_bid(bid: u64, price: f64) -> f64 {
    bid as f64 * (1.0 - price)
}

/// One uniform rank per bidder, deterministic in `seed`.
pub fn draw_ranks(instance: &Instance, seed: u64) -> RankAssignment {
    RankAssignment::from_rng(instance.num_bidders(), &mut seeded(seed), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Ranking,
    SingleValued,
    General,
    Greedy,
    Msvv,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ranking,
        Algorithm::SingleValued,
        Algorithm::General,
        Algorithm::Greedy,
        Algorithm::Msvv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ranking => "ranking",
            Algorithm::SingleValued => "single_valued",
            Algorithm::General => "general",
            Algorithm::Greedy => "greedy",
            Algorithm::Msvv => "msvv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Algorithm::Ranking | Algorithm::SingleValued | Algorithm::General)
    }

    /// The rank-based engine designed for `class`.
    pub fn for_class(class: ProblemClass) -> Self {
        match class {
            ProblemClass::Obm => Algorithm::Ranking,
            ProblemClass::SingleValued => Algorithm::SingleValued,
            ProblemClass::General => Algorithm::General,
        }
    }

    fn check_class(self, instance: &Instance) -> Result<()> {
        let expected = match self {
            Algorithm::Ranking => ProblemClass::Obm,
            Algorithm::SingleValued => ProblemClass::SingleValued,
            Algorithm::General => ProblemClass::General,
            Algorithm::Greedy | Algorithm::Msvv => return Ok(()),
        };
        if instance.class != expected {
            return Err(Error::ClassMismatch {
                engine: self.name(),
                expected,
                found: instance.class,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Record a [`RunTrace`].
    pub trace: bool,
    /// Run on the instance with this bidder removed.
    pub without: Option<usize>,
}

impl RunOptions {
    pub fn traced() -> Self {
        RunOptions {
            trace: true,
            without: None,
        }
    }

    pub fn without(bidder: usize) -> Self {
        RunOptions {
            trace: true,
            without: Some(bidder),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offer {
    pub bidder: usize,
    /// The bid on the edge (for the baselines: the capped amount offered).
    pub bid: u64,
    /// What the query compares: the effective bid, or the baseline's score.
    pub effective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Match {
    pub query: usize,
    pub bidder: usize,
    /// Weight of the matched edge.
    pub bid: u64,
}

/// One arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub query: usize,
    /// `T(i)`: available copies of every bidder just before the query is served.
    pub available: Vec<u64>,
    /// `S(i)`: `(bidder, copies)` for the query's neighbours with copies left.
    pub neighbors: Vec<(usize, u64)>,
    pub offers: Vec<Offer>,
    pub accepted: Option<Offer>,
}

impl TraceStep {
    /// Largest offer, ties towards the lowest bidder id.
    pub fn best_offer(&self) -> Option<Offer> {
        best_of(self.offers.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    /// In arrival order.
    pub matching: Vec<Match>,
    /// Per query; 0 for unmatched queries.
    pub utility: Vec<f64>,
    /// Per bidder; 0 for bidders never matched.
    pub revenue: Vec<f64>,
    /// Real money `W`.
    pub real: u64,
    /// Fake money `W_f`.
    pub fake: u64,
    /// Copies left per bidder (`L_j` for GENERAL).
    pub leftover: Vec<u64>,
    /// Matches per bidder (`d_j`).
    pub degree: Vec<u64>,
    pub trace: Option<RunTrace>,
}

impl RunOutcome {
    pub fn size(&self) -> usize {
        self.matching.len()
    }

    /// Sum of matched edge weights, equal to `real + fake`.
    pub fn weight(&self) -> u64 {
        self.matching.iter().map(|m| m.bid).sum()
    }

    pub fn matched_bidder(&self, query: usize) -> Option<usize> {
        self.matching
            .binary_search_by_key(&query, |m| m.query)
            .ok()
            .map(|idx| self.matching[idx].bidder)
    }

    pub fn is_matched(&self, bidder: usize) -> bool {
        self.degree.get(bidder).is_some_and(|&d| d > 0)
    }

    /// `(query, bidder)` pairs of the matching.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.matching.iter().map(|m| (m.query, m.bidder)).collect()
    }

    pub fn utility_total(&self) -> f64 {
        self.utility.iter().sum()
    }

    pub fn revenue_total(&self) -> f64 {
        self.revenue.iter().sum()
    }
}

/// What the rank-based loop is allowed to know about a bidder.
pub trait Availability {
    fn is_available(&self, bidder: usize) -> bool;
}

impl<F: Fn(usize) -> bool> Availability for F {
    fn is_available(&self, bidder: usize) -> bool {
        self(bidder)
    }
}

/// Offers every available neighbour's effective bid and returns them with the
/// winner. This is the entire decision rule of the rank-based engines.
pub fn collect_offers<A: Availability + ?Sized>(
    edges: &[Edge],
    ranks: &RankAssignment,
    availability: &A,
) -> (Vec<Offer>, Option<Offer>) {
    let offers: Vec<Offer> = edges
        .iter()
        .filter(|e| availability.is_available(e.bidder))
        .map(|e| Offer {
            bidder: e.bidder,
            bid: e.bid,
            effective: effective_bid(e.bid, ranks.price(e.bidder)),
        })
        .collect();
    let best = best_of(offers.iter().copied());
    (offers, best)
}

fn best_of<I: Iterator<Item = Offer>>(offers: I) -> Option<Offer> {
    offers.fold(None, |best: Option<Offer>, o| match best {
        Some(b) if b.effective > o.effective || (b.effective == o.effective && b.bidder < o.bidder) => Some(b),
        _ => Some(o),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CopyRule {
    /// Each match consumes one copy.
    PerMatch,
    /// Each match consumes `min(L_j, bid)` copies.
    Money,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Charge {
    real: u64,
    fake: u64,
}

/// Per-bidder availability multiset for one run.
#[derive(Debug, Clone)]
struct Ledger {
    copies: Vec<u64>,
    rule: CopyRule,
}

impl Ledger {
    fn new(instance: &Instance, without: Option<usize>) -> Self {
        let rule = match instance.class {
            ProblemClass::General => CopyRule::Money,
            _ => CopyRule::PerMatch,
        };
        let mut copies: Vec<u64> = (0..instance.num_bidders())
            .map(|j| instance.initial_copies(j))
            .collect();
        if let Some(j) = without {
            copies[j] = 0;
        }
        Ledger { copies, rule }
    }

    fn charge(&mut self, bidder: usize, bid: u64) -> Charge {
        let left = &mut self.copies[bidder];
        match self.rule {
            CopyRule::PerMatch => {
                *left -= 1;
                Charge { real: bid, fake: 0 }
            }
            CopyRule::Money => {
                let real = (*left).min(bid);
                *left -= real;
                Charge { real, fake: bid - real }
            }
        }
    }

    fn snapshot(&self, edges: &[Edge]) -> (Vec<u64>, Vec<(usize, u64)>) {
        let neighbors = edges
            .iter()
            .filter(|e| self.copies[e.bidder] > 0)
            .map(|e| (e.bidder, self.copies[e.bidder]))
            .collect();
        (self.copies.clone(), neighbors)
    }
}

impl Availability for Ledger {
    fn is_available(&self, bidder: usize) -> bool {
        self.copies[bidder] > 0
    }
}

struct Recorder {
    algorithm: Algorithm,
    matching: Vec<Match>,
    utility: Vec<f64>,
    revenue: Vec<f64>,
    degree: Vec<u64>,
    real: u64,
    fake: u64,
    trace: Option<RunTrace>,
}

impl Recorder {
    fn new(algorithm: Algorithm, instance: &Instance, trace: bool) -> Self {
        Recorder {
            algorithm,
            matching: Vec::new(),
            utility: vec![0.0; instance.num_queries()],
            revenue: vec![0.0; instance.num_bidders()],
            degree: vec![0; instance.num_bidders()],
            real: 0,
            fake: 0,
            trace: trace.then(RunTrace::default),
        }
    }

    fn step(&mut self, query: usize, ledger: &Ledger, edges: &[Edge], offers: Vec<Offer>, accepted: Option<Offer>) {
        if let Some(trace) = &mut self.trace {
            let (available, neighbors) = ledger.snapshot(edges);
            trace.steps.push(TraceStep {
                query,
                available,
                neighbors,
                offers,
                accepted,
            });
        }
    }

    fn settle(&mut self, query: usize, bidder: usize, bid: u64, charge: Charge) {
        self.matching.push(Match { query, bidder, bid });
        self.degree[bidder] += 1;
        self.real += charge.real;
        self.fake += charge.fake;
    }

    fn finish(self, ledger: Ledger) -> RunOutcome {
        RunOutcome {
            algorithm: self.algorithm,
            matching: self.matching,
            utility: self.utility,
            revenue: self.revenue,
            real: self.real,
            fake: self.fake,
            leftover: ledger.copies,
            degree: self.degree,
            trace: self.trace,
        }
    }
}

fn run_ranked(
    algorithm: Algorithm,
    instance: &Instance,
    ranks: &RankAssignment,
    opts: RunOptions,
) -> Result<RunOutcome> {
    algorithm.check_class(instance)?;
    ranks.check_covers(instance)?;
    let mut ledger = Ledger::new(instance, opts.without);
    let mut rec = Recorder::new(algorithm, instance, opts.trace);
    for (query, edges) in instance.queries.iter().enumerate() {
        let (offers, accepted) = collect_offers(edges, ranks, &ledger);
        rec.step(query, &ledger, edges, offers, accepted);
        if let Some(win) = accepted {
            let price = ranks.price(win.bidder);
            rec.utility[query] = win.effective;
            rec.revenue[win.bidder] += win.bid as f64 * price;
            let charge = ledger.charge(win.bidder, win.bid);
            rec.settle(query, win.bidder, win.bid, charge);
        }
    }
    Ok(rec.finish(ledger))
}

/// RANKING, permutation form: each buyer takes the first unmatched good she
/// likes in `order`. Utilities and revenues stay zero.
pub fn run_ranking_permutation(instance: &Instance, order: &[usize]) -> Result<RunOutcome> {
    Algorithm::Ranking.check_class(instance)?;
    let m = instance.num_bidders();
    let mut position = vec![usize::MAX; m];
    for (pos, &good) in order.iter().enumerate() {
        if good >= m || position[good] != usize::MAX {
            return Err(Error::BadPermutation(alloc::format!("{order:?}")));
        }
        position[good] = pos;
    }
    if order.len() != m {
        return Err(Error::BadPermutation(alloc::format!("{order:?}")));
    }
    let mut ledger = Ledger::new(instance, None);
    let mut rec = Recorder::new(Algorithm::Ranking, instance, false);
    for (query, edges) in instance.queries.iter().enumerate() {
        let pick = edges
            .iter()
            .filter(|e| ledger.is_available(e.bidder))
            .min_by_key(|e| position[e.bidder]);
        if let Some(e) = pick {
            let charge = ledger.charge(e.bidder, e.bid);
            rec.settle(query, e.bidder, e.bid, charge);
        }
    }
    Ok(rec.finish(ledger))
}

/// RANKING, price form: each buyer takes the cheapest unmatched good she likes.
pub fn run_ranking(instance: &Instance, ranks: &RankAssignment) -> Result<RunOutcome> {
    run_ranked(Algorithm::Ranking, instance, ranks, RunOptions::default())
}

/// Single-valued bidders: `j` is available while `d_j < k_j`.
pub fn run_single_valued(instance: &Instance, ranks: &RankAssignment) -> Result<RunOutcome> {
    run_ranked(Algorithm::SingleValued, instance, ranks, RunOptions::default())
}

/// GENERAL with fake money: `j` bids while `L_j > 0`, even when the bid
/// exceeds `L_j`; the excess is counted in `W_f`.
pub fn run_general(instance: &Instance, ranks: &RankAssignment) -> Result<RunOutcome> {
    run_ranked(Algorithm::General, instance, ranks, RunOptions::default())
}

/// Highest capped bid `min(L_j, bid)` wins.
pub fn run_greedy(instance: &Instance) -> RunOutcome {
    run_baseline(Algorithm::Greedy, instance, RunOptions::default())
}

/// MSVV trade-off: maximise `bid * (1 - exp(-(1 - f)))` with `f` the spent
/// fraction of the budget.
pub fn run_msvv(instance: &Instance) -> RunOutcome {
    run_baseline(Algorithm::Msvv, instance, RunOptions::default())
}

/// MSVV discount for a bidder that has spent fraction `spent` of its budget.
pub fn msvv_discount(spent: f64) -> f64 {
    1.0 - libm::exp(-(1.0 - spent))
}

fn run_baseline(algorithm: Algorithm, instance: &Instance, opts: RunOptions) -> RunOutcome {
    let general = instance.embed_general();
    let mut ledger = Ledger::new(&general, opts.without);
    let mut rec = Recorder::new(algorithm, instance, opts.trace);
    for (query, edges) in instance.queries.iter().enumerate() {
        let offers: Vec<Offer> = edges
            .iter()
            .filter(|e| ledger.is_available(e.bidder))
            .map(|e| {
                let left = ledger.copies[e.bidder];
                let capped = left.min(e.bid);
                let effective = match algorithm {
                    Algorithm::Msvv => {
                        let budget = general.bidders[e.bidder].budget;
                        e.bid as f64 * msvv_discount((budget - left) as f64 / budget as f64)
                    }
                    _ => capped as f64,
                };
                Offer {
                    bidder: e.bidder,
                    bid: capped,
                    effective,
                }
            })
            .collect();
        let accepted = best_of(offers.iter().copied());
        rec.step(query, &ledger, edges, offers, accepted);
        if let Some(win) = accepted {
            rec.revenue[win.bidder] += win.bid as f64;
            let charge = ledger.charge(win.bidder, win.bid);
            rec.settle(query, win.bidder, win.bid, charge);
        }
    }
    rec.finish(ledger)
}

/// Runs `algorithm`. Rank-based engines need `ranks`; baselines ignore them.
pub fn run_with(
    algorithm: Algorithm,
    instance: &Instance,
    ranks: Option<&RankAssignment>,
    opts: RunOptions,
) -> Result<RunOutcome> {
    if let Some(j) = opts.without {
        if j >= instance.num_bidders() {
            return Err(Error::UnknownBidder(j));
        }
    }
    if algorithm.is_randomized() {
        let ranks = ranks.ok_or_else(|| Error::InvalidParameter(alloc::format!("{algorithm} needs ranks")))?;
        run_ranked(algorithm, instance, ranks, opts)
    } else {
        Ok(run_baseline(algorithm, instance, opts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_example_three, gen_random, gen_upper_triangular, Bidder, RandomParams};
    use proptest::prelude::*;

    fn ranks(ws: &[f64]) -> RankAssignment {
        RankAssignment::from_ranks(ws.to_vec()).unwrap()
    }

    fn assert_accounting(out: &RunOutcome) {
        assert_eq!(out.real + out.fake, out.weight());
        let total = out.utility_total() + out.revenue_total();
        assert!(
            (total - out.weight() as f64).abs() < 1e-9,
            "{total} vs {}",
            out.weight()
        );
    }

    #[test]
    fn price_endpoints() {
        let r = ranks(&[0.0, 1.0]);
        assert_eq!(r.price(0), libm::exp(-1.0));
        assert!((r.price(0) - 1.0 / core::f64::consts::E).abs() < 1e-16);
        assert_eq!(r.price(1), 1.0);
        assert!(RankAssignment::from_ranks(vec![1.5]).is_err());
        assert!(RankAssignment::from_ranks(vec![f64::NAN]).is_err());
    }

    #[test]
    fn draws_are_deterministic() {
        let inst = gen_upper_triangular(6).unwrap();
        assert_eq!(draw_ranks(&inst, 11), draw_ranks(&inst, 11));
        assert_ne!(draw_ranks(&inst, 11), draw_ranks(&inst, 12));
        assert!(draw_ranks(&inst, 11).ranks().iter().all(|w| (0.0..=1.0).contains(w)));
    }

    #[test]
    fn permutation_form_hand_traces() {
        let inst = gen_upper_triangular(2).unwrap();
        assert_eq!(run_ranking_permutation(&inst, &[0, 1]).unwrap().size(), 2);
        let out = run_ranking_permutation(&inst, &[1, 0]).unwrap();
        assert_eq!(out.pairs(), vec![(0, 1)]);
        let one = gen_upper_triangular(1).unwrap();
        assert_eq!(run_ranking_permutation(&one, &[0]).unwrap().size(), 1);
        assert!(run_ranking_permutation(&inst, &[1, 1]).is_err());
        assert!(run_ranking_permutation(&inst, &[0]).is_err());
    }

    #[test]
    fn ranking_takes_cheapest_good() {
        let inst = Instance::new(
            ProblemClass::Obm,
            vec![Bidder::with_budget(1); 2],
            vec![vec![Edge::new(0, 1), Edge::new(1, 1)]],
        );
        let r = ranks(&[0.3, 0.1]);
        let out = run_ranking(&inst, &r).unwrap();
        assert_eq!(out.pairs(), vec![(0, 1)]);
        assert_eq!(out.revenue[1], r.price(1));
        assert_eq!(out.revenue[0], 0.0);
        assert_eq!(out.utility[0] + out.revenue[1], 1.0);
        assert_accounting(&out);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let inst = Instance::new(
            ProblemClass::Obm,
            vec![Bidder::with_budget(1); 3],
            vec![vec![Edge::new(2, 1), Edge::new(1, 1), Edge::new(0, 1)]],
        );
        let out = run_ranking(&inst, &ranks(&[0.9, 0.4, 0.4])).unwrap();
        assert_eq!(out.pairs(), vec![(0, 1)]);
    }

    #[test]
    fn engines_reject_wrong_class() {
        let inst = gen_upper_triangular(2).unwrap();
        let r = ranks(&[0.5, 0.5]);
        assert!(matches!(run_general(&inst, &r), Err(Error::ClassMismatch { .. })));
        assert!(matches!(run_single_valued(&inst, &r), Err(Error::ClassMismatch { .. })));
        assert!(run_ranking(&inst.embed_general(), &r).is_err());
        assert!(matches!(
            run_ranking(&inst, &ranks(&[0.5])),
            Err(Error::RankCount { .. })
        ));
    }

    #[test]
    fn single_valued_degree_cap() {
        let inst = Instance::new(
            ProblemClass::SingleValued,
            vec![Bidder::single_valued(3, 2)],
            vec![vec![Edge::new(0, 3)]; 3],
        );
        let r = ranks(&[0.4]);
        let out = run_single_valued(&inst, &r).unwrap();
        assert_eq!(out.pairs(), vec![(0, 0), (1, 0)]);
        assert_eq!(out.degree[0], 2);
        assert_eq!(out.leftover[0], 0);
        assert_eq!(out.real, 6);
        assert_eq!(out.utility[2], 0.0);
        assert!((out.utility[0] + r.price(0) * 3.0 - 3.0).abs() < 1e-12);
        assert_accounting(&out);
    }

    #[test]
    fn general_splits_real_and_fake_money() {
        let inst = Instance::new(
            ProblemClass::General,
            vec![Bidder::with_budget(5)],
            vec![vec![Edge::new(0, 3)], vec![Edge::new(0, 5)], vec![Edge::new(0, 1)]],
        );
        let out = run_general(&inst, &ranks(&[0.2])).unwrap();
        // after the first match L = 2; the bid of 5 pays 2 real and 3 fake
        assert_eq!(out.size(), 2);
        assert_eq!((out.real, out.fake), (5, 3));
        assert_eq!(out.leftover[0], 0);
        assert_accounting(&out);
    }

    #[test]
    fn greedy_on_example_three() {
        let (i1, i2, i3) = gen_example_three(4).unwrap();
        assert_eq!(run_greedy(&i3).real, 8);
        assert_eq!(run_greedy(&i1).real, 4);
        assert_eq!(run_greedy(&i2).real, 8);
        for i in [&i1, &i2, &i3] {
            let out = run_greedy(i);
            assert_eq!(out.fake, 0);
            assert_accounting(&out);
        }
    }

    #[test]
    fn greedy_picks_highest_bid() {
        let inst = Instance::new(
            ProblemClass::General,
            vec![Bidder::with_budget(10), Bidder::with_budget(10)],
            vec![vec![Edge::new(0, 3), Edge::new(1, 7)]],
        );
        assert_eq!(run_greedy(&inst).pairs(), vec![(0, 1)]);
    }

    #[test]
    fn greedy_caps_bids_at_leftover() {
        let inst = Instance::new(
            ProblemClass::General,
            vec![Bidder::with_budget(4)],
            vec![vec![Edge::new(0, 3)], vec![Edge::new(0, 3)]],
        );
        let out = run_greedy(&inst);
        assert_eq!(out.matching[1].bid, 1);
        assert_eq!((out.real, out.fake), (4, 0));
    }

    #[test]
    fn msvv_discount_endpoints() {
        assert!((msvv_discount(0.0) - (1.0 - libm::exp(-1.0))).abs() < 1e-15);
        assert_eq!(msvv_discount(1.0), 0.0);
    }

    #[test]
    fn msvv_balances_identical_bidders() {
        let bid = 3;
        let inst = Instance::new(
            ProblemClass::General,
            vec![Bidder::with_budget(60), Bidder::with_budget(60)],
            vec![vec![Edge::new(0, bid), Edge::new(1, bid)]; 30],
        );
        let out = run_msvv(&inst);
        let spent: Vec<u64> = (0..2).map(|j| 60 - out.leftover[j]).collect();
        for prefix in 1..=30 {
            let mut s = [0u64; 2];
            for m in &out.matching[..prefix] {
                s[m.bidder] += m.bid;
            }
            assert!(s[0].abs_diff(s[1]) <= bid);
        }
        assert_eq!(spent, vec![45, 45]);
    }

    #[test]
    fn trace_multisets_start_full_and_shrink() {
        let inst = gen_random(&RandomParams::new(ProblemClass::SingleValued, 15, 4, 5)).unwrap();
        let r = draw_ranks(&inst, 3);
        let out = run_with(Algorithm::SingleValued, &inst, Some(&r), RunOptions::traced()).unwrap();
        let steps = &out.trace.as_ref().unwrap().steps;
        let initial: Vec<u64> = (0..4).map(|j| inst.initial_copies(j)).collect();
        assert_eq!(steps[0].available, initial);
        for w in steps.windows(2) {
            assert!(w[1].available.iter().zip(&w[0].available).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn removal_hides_the_bidder() {
        let inst = gen_upper_triangular(2).unwrap();
        let r = ranks(&[0.5, 0.2]);
        let out = run_with(Algorithm::Ranking, &inst, Some(&r), RunOptions::without(1)).unwrap();
        assert_eq!(out.pairs(), vec![(0, 0)]);
        assert_eq!(out.utility[1], 0.0);
        assert!(run_with(Algorithm::Ranking, &inst, Some(&r), RunOptions::without(2)).is_err());
    }

    /// The decision rule is a function of the edges, the prices and an
    /// availability oracle only; rescaling every budget while keeping the
    /// oracle's answers fixed cannot change what a query picks.
    #[test]
    fn decision_rule_sees_only_availability() {
        let edges = [Edge::new(0, 4), Edge::new(1, 2), Edge::new(2, 9)];
        let r = ranks(&[0.1, 0.9, 0.5]);
        let all = |_: usize| true;
        let (offers, best) = collect_offers(&edges, &r, &all);
        assert_eq!(offers.len(), 3);
        let expected = (0..3)
            .max_by(|&a, &b| {
                effective_bid(edges[a].bid, r.price(a)).total_cmp(&effective_bid(edges[b].bid, r.price(b)))
            })
            .unwrap();
        assert_eq!(best.unwrap().bidder, expected);

        let not_winner = move |j: usize| j != expected;
        let (offers, best) = collect_offers(&edges, &r, &not_winner);
        assert_eq!(offers.len(), 2);
        assert_ne!(best.unwrap().bidder, expected);
    }

    #[test]
    fn budget_magnitudes_do_not_change_general_runs_while_availability_agrees() {
        // Budgets large enough that nobody runs out behave identically.
        let mut p = RandomParams::new(ProblemClass::General, 25, 5, 17);
        p.budget = crate::instance::BudgetPolicy::Fixed(1_000);
        let small = gen_random(&p).unwrap();
        let mut big = small.clone();
        for b in &mut big.bidders {
            b.budget = 1_000_000;
        }
        let r = draw_ranks(&small, 1);
        let a = run_general(&small, &r).unwrap();
        let b = run_general(&big, &r).unwrap();
        assert_eq!(a.matching, b.matching);
        assert_eq!(a.utility, b.utility);
        assert_eq!(a.revenue, b.revenue);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn engines_are_feasible_and_account_exactly(seed in any::<u64>(), class_idx in 0usize..3, n in 1usize..25, m in 1usize..7) {
            let class = [ProblemClass::Obm, ProblemClass::SingleValued, ProblemClass::General][class_idx];
            let inst = gen_random(&RandomParams::new(class, n, m, seed)).unwrap();
            let r = draw_ranks(&inst, seed ^ 1);
            let general = inst.embed_general();
            let outs = [
                run_with(Algorithm::for_class(class), &inst, Some(&r), RunOptions::default()).unwrap(),
                run_greedy(&general),
                run_msvv(&general),
            ];
            for out in &outs {
                assert_accounting(out);
                let mut seen = vec![false; n];
                for mt in &out.matching {
                    prop_assert!(!core::mem::replace(&mut seen[mt.query], true));
                }
                for j in 0..m {
                    let budget = inst.bidders[j].budget;
                    let mut left = budget;
                    for mt in out.matching.iter().filter(|mt| mt.bidder == j) {
                        prop_assert!(left > 0, "bidder {} matched after running out", j);
                        left -= if out.algorithm == Algorithm::General { left.min(mt.bid) } else { mt.bid };
                    }
                    if out.algorithm == Algorithm::General {
                        prop_assert_eq!(left, out.leftover[j]);
                    }
                    if matches!(out.algorithm, Algorithm::Ranking | Algorithm::SingleValued) {
                        prop_assert!(out.degree[j] <= inst.initial_copies(j));
                    }
                }
                if out.algorithm != Algorithm::General {
                    prop_assert_eq!(out.fake, 0);
                }
                prop_assert!(out.utility.iter().all(|&u| u >= 0.0));
                prop_assert!(out.revenue.iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn price_form_equals_permutation_form(seed in any::<u64>(), n in 1usize..30, m in 1usize..10) {
            let inst = gen_random(&RandomParams::new(ProblemClass::Obm, n, m, seed)).unwrap();
            let r = draw_ranks(&inst, seed.rotate_left(7));
            let priced = run_ranking(&inst, &r).unwrap();
            let permuted = run_ranking_permutation(&inst, &r.price_order()).unwrap();
            prop_assert_eq!(priced.matching, permuted.matching);
        }

        #[test]
        fn reductions_to_ranking(seed in any::<u64>(), n in 1usize..30, m in 1usize..10) {
            let inst = gen_random(&RandomParams::new(ProblemClass::Obm, n, m, seed)).unwrap();
            let r = draw_ranks(&inst, !seed);
            let base = run_ranking(&inst, &r).unwrap();
            let general = run_general(&inst.embed_general(), &r).unwrap();
            let single = run_single_valued(&inst.embed_single_valued().unwrap(), &r).unwrap();
            prop_assert_eq!(&base.matching, &general.matching);
            prop_assert_eq!(&base.matching, &single.matching);
            prop_assert_eq!(general.fake, 0);
        }
    }
}
