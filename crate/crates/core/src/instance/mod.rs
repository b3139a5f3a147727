//! Problem instances: a bipartite market of online queries and offline bidders.
//!
//! Queries arrive in index order; the order is part of the instance. Bidder
//! ids are their positions in [`Instance::bidders`], and every tie in the
//! crate is broken towards the lowest bidder id.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

mod generators;

pub use generators::{
    gen_example_no_surpass, gen_example_three, gen_planted, gen_random, gen_upper_triangular, BudgetPolicy,
    PlantedParams, RandomParams,
};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemClass {
    /// Online bipartite matching: unit bids, unit budgets.
    Obm,
    /// Each bidder bids one value `b` and may win at most `k` queries.
    SingleValued,
    /// Arbitrary integer bids bounded by the bidder's budget.
    General,
}

impl ProblemClass {
    pub fn name(self) -> &'static str {
        match self {
            ProblemClass::Obm => "obm",
            ProblemClass::SingleValued => "single_valued",
            ProblemClass::General => "general",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "obm" => Some(ProblemClass::Obm),
            "single_valued" => Some(ProblemClass::SingleValued),
            "general" => Some(ProblemClass::General),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-valued bidder parameters: bid `b` on every edge, at most `k` wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SingleValue {
    pub bid: u64,
    pub cap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bidder {
    pub budget: u64,
    /// Present exactly for single-valued instances.
    pub single: Option<SingleValue>,
}

impl Bidder {
    pub fn with_budget(budget: u64) -> Self {
        Bidder { budget, single: None }
    }

    pub fn single_valued(bid: u64, cap: u64) -> Self {
        Bidder {
            budget: bid * cap,
            single: Some(SingleValue { bid, cap }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub bidder: usize,
    pub bid: u64,
}

impl Edge {
    pub fn new(bidder: usize, bid: u64) -> Self {
        Edge { bidder, bid }
    }
}

/// A feasible offline assignment carried along as metadata. Engines never
/// look at it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PlantedSolution {
    /// `(query, bidder)` pairs.
    pub assignment: Vec<(usize, usize)>,
}

impl PlantedSolution {
    /// Sum of the assigned bids. Pairs that are not edges count as zero.
    pub fn value(&self, instance: &Instance) -> u64 {
        self.assignment.iter().filter_map(|&(q, b)| instance.bid(q, b)).sum()
    }

    /// Queries assigned to `bidder`, in arrival order.
    pub fn star(&self, bidder: usize) -> Vec<usize> {
        let mut qs: Vec<usize> = self
            .assignment
            .iter()
            .filter(|&&(_, b)| b == bidder)
            .map(|&(q, _)| q)
            .collect();
        qs.sort_unstable();
        qs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    pub class: ProblemClass,
    pub bidders: Vec<Bidder>,
    /// Per query, in arrival order, the bidders interested in it and their bids.
    pub queries: Vec<Vec<Edge>>,
    pub planted: Option<PlantedSolution>,
}

impl Instance {
    pub fn new(class: ProblemClass, bidders: Vec<Bidder>, queries: Vec<Vec<Edge>>) -> Self {
        Instance {
            class,
            bidders,
            queries,
            planted: None,
        }
    }

    pub fn with_planted(mut self, assignment: Vec<(usize, usize)>) -> Self {
        self.planted = Some(PlantedSolution { assignment });
        self
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn num_bidders(&self) -> usize {
        self.bidders.len()
    }

    pub fn num_edges(&self) -> usize {
        self.queries.iter().map(Vec::len).sum()
    }

    pub fn bid(&self, query: usize, bidder: usize) -> Option<u64> {
        self.queries
            .get(query)?
            .iter()
            .find(|e| e.bidder == bidder)
            .map(|e| e.bid)
    }

    pub fn total_budget(&self) -> u64 {
        self.bidders.iter().map(|b| b.budget).sum()
    }

    /// Iterates `(query, edge)` over every edge in arrival order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, Edge)> + '_ {
        self.queries
            .iter()
            .enumerate()
            .flat_map(|(q, es)| es.iter().map(move |&e| (q, e)))
    }

    /// Largest bid of each bidder, 0 for bidders without edges.
    pub fn max_bids(&self) -> Vec<u64> {
        let mut max = vec![0u64; self.num_bidders()];
        for (_, e) in self.edges() {
            if let Some(m) = max.get_mut(e.bidder) {
                *m = (*m).max(e.bid);
            }
        }
        max
    }

    /// Number of copies each bidder starts with in the availability
    /// multiset: 1 for OBM, `k` for single-valued, the budget otherwise.
    pub fn initial_copies(&self, bidder: usize) -> u64 {
        let b = &self.bidders[bidder];
        match (self.class, b.single) {
            (ProblemClass::Obm, _) => 1,
            (ProblemClass::SingleValued, Some(sv)) => sv.cap,
            _ => b.budget,
        }
    }

    /// The same market viewed as a GENERAL instance (always valid when
    /// `self` is).
    pub fn embed_general(&self) -> Instance {
        Instance {
            class: ProblemClass::General,
            bidders: self.bidders.iter().map(|b| Bidder::with_budget(b.budget)).collect(),
            queries: self.queries.clone(),
            planted: self.planted.clone(),
        }
    }

    /// An OBM instance viewed as SINGLE-VALUED with `b = k = 1`.
    pub fn embed_single_valued(&self) -> Result<Instance> {
        if self.class != ProblemClass::Obm {
            return Err(Error::ClassMismatch {
                engine: "embed_single_valued",
                expected: ProblemClass::Obm,
                found: self.class,
            });
        }
        Ok(Instance {
            class: ProblemClass::SingleValued,
            bidders: self.bidders.iter().map(|_| Bidder::single_valued(1, 1)).collect(),
            queries: self.queries.clone(),
            planted: self.planted.clone(),
        })
    }

    /// Checks every invariant of the instance's class.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = self.num_bidders();
        for (j, b) in self.bidders.iter().enumerate() {
            if b.budget == 0 {
                out.push(Violation::bidder(j, ViolationKind::ZeroBudget));
            }
            match self.class {
                ProblemClass::Obm => {
                    if b.budget != 1 {
                        out.push(Violation::bidder(j, ViolationKind::ObmBudget));
                    }
                }
                ProblemClass::SingleValued => match b.single {
                    None => out.push(Violation::bidder(j, ViolationKind::MissingSingleValue)),
                    Some(sv) => {
                        if sv.bid == 0 || sv.cap == 0 || sv.bid.checked_mul(sv.cap) != Some(b.budget) {
                            out.push(Violation::bidder(j, ViolationKind::SingleValuedBudget));
                        }
                    }
                },
                ProblemClass::General => {}
            }
            if self.class != ProblemClass::SingleValued && b.single.is_some() {
                out.push(Violation::bidder(j, ViolationKind::UnexpectedSingleValue));
            }
        }

        for (q, edges) in self.queries.iter().enumerate() {
            for (pos, e) in edges.iter().enumerate() {
                if e.bidder >= m {
                    out.push(Violation::edge(q, e.bidder, ViolationKind::UnknownBidder));
                    continue;
                }
                if edges[..pos].iter().any(|o| o.bidder == e.bidder) {
                    out.push(Violation::edge(q, e.bidder, ViolationKind::DuplicateEdge));
                }
                if e.bid == 0 {
                    out.push(Violation::edge(q, e.bidder, ViolationKind::ZeroBid));
                    continue;
                }
                let bidder = &self.bidders[e.bidder];
                match self.class {
                    ProblemClass::Obm if e.bid != 1 => {
                        out.push(Violation::edge(q, e.bidder, ViolationKind::ObmBid));
                    }
                    ProblemClass::SingleValued => {
                        if let Some(sv) = bidder.single {
                            if e.bid != sv.bid {
                                out.push(Violation::edge(q, e.bidder, ViolationKind::SingleValuedBid));
                            }
                        }
                    }
                    ProblemClass::General if e.bid > bidder.budget => {
                        out.push(Violation::edge(q, e.bidder, ViolationKind::BidExceedsBudget));
                    }
                    _ => {}
                }
            }
        }

        if let Some(planted) = &self.planted {
            out.extend(check_assignment(self, &planted.assignment).err().map(|v| Violation {
                kind: ViolationKind::Planted(v.reason),
                ..v
            }));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// `max_j (max_{(i,j)} bid(i,j) - 1) / B_j`; bidders without edges contribute 0.
    pub fn mu(&self) -> Ratio {
        self.max_bids()
            .iter()
            .zip(&self.bidders)
            .map(|(&max_bid, b)| Ratio::new(max_bid.saturating_sub(1), b.budget.max(1)))
            .max()
            .unwrap_or(Ratio::ZERO)
    }
}

/// Checks an offline assignment against the instance: every pair is an edge,
/// each query is used at most once and no bidder is assigned more than its
/// budget. Returns the assignment's value.
pub fn check_assignment(instance: &Instance, assignment: &[(usize, usize)]) -> core::result::Result<u64, Violation> {
    let mut used = vec![false; instance.num_queries()];
    let mut spent = vec![0u64; instance.num_bidders()];
    let mut value = 0u64;
    for &(q, b) in assignment {
        if q >= instance.num_queries() {
            return Err(Violation::edge(q, b, ViolationKind::AssignmentNotEdge));
        }
        let bid = instance
            .bid(q, b)
            .ok_or_else(|| Violation::edge(q, b, ViolationKind::AssignmentNotEdge))?;
        if core::mem::replace(&mut used[q], true) {
            return Err(Violation::edge(q, b, ViolationKind::AssignmentReusesQuery));
        }
        spent[b] += bid;
        value += bid;
    }
    for (j, (&s, bidder)) in spent.iter().zip(&instance.bidders).enumerate() {
        if s > bidder.budget {
            return Err(Violation::bidder(j, ViolationKind::AssignmentOverBudget));
        }
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    ZeroBudget,
    ZeroBid,
    ObmBid,
    ObmBudget,
    MissingSingleValue,
    UnexpectedSingleValue,
    SingleValuedBid,
    SingleValuedBudget,
    BidExceedsBudget,
    UnknownBidder,
    DuplicateEdge,
    AssignmentNotEdge,
    AssignmentReusesQuery,
    AssignmentOverBudget,
    Planted(&'static str),
}

impl ViolationKind {
    fn describe(self) -> &'static str {
        match self {
            ViolationKind::ZeroBudget => "budgets must be positive",
            ViolationKind::ZeroBid => "bids must be positive",
            ViolationKind::ObmBid => "OBM bids must be 1",
            ViolationKind::ObmBudget => "OBM budgets must be 1",
            ViolationKind::MissingSingleValue => "single-valued bidder lacks b and k",
            ViolationKind::UnexpectedSingleValue => "b and k are only meaningful for single-valued instances",
            ViolationKind::SingleValuedBid => "single-valued bids must all equal the bidder's b",
            ViolationKind::SingleValuedBudget => "single-valued budget must equal k * b with k, b >= 1",
            ViolationKind::BidExceedsBudget => "bid exceeds the bidder's budget",
            ViolationKind::UnknownBidder => "edge refers to an unknown bidder",
            ViolationKind::DuplicateEdge => "query lists the same bidder twice",
            ViolationKind::AssignmentNotEdge => "assignment uses a pair that is not an edge",
            ViolationKind::AssignmentReusesQuery => "assignment uses a query twice",
            ViolationKind::AssignmentOverBudget => "assignment exceeds a bidder's budget",
            ViolationKind::Planted(reason) => reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Violation {
    pub query: Option<usize>,
    pub bidder: Option<usize>,
    pub kind: ViolationKind,
    reason: &'static str,
}

impl Violation {
    fn bidder(bidder: usize, kind: ViolationKind) -> Self {
        Violation {
            query: None,
            bidder: Some(bidder),
            kind,
            reason: kind.describe(),
        }
    }

    fn edge(query: usize, bidder: usize, kind: ViolationKind) -> Self {
        Violation {
            query: Some(query),
            bidder: Some(bidder),
            kind,
            reason: kind.describe(),
        }
    }

    pub fn reason(&self) -> &'static str {
        self.reason
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.query, self.bidder) {
            (Some(q), Some(b)) => write!(f, "query {q}, bidder {b}: {}", self.reason),
            (None, Some(b)) => write!(f, "bidder {b}: {}", self.reason),
            _ => f.write_str(self.reason),
        }
    }
}

/// Non-negative rational with exact comparison.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    /// Panics if `den` is zero.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        Ratio { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact `self <= other`.
    pub fn le(self, other: Ratio) -> bool {
        self.cmp(&other) != Ordering::Greater
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}
