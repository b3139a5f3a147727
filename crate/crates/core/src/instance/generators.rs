//! Instance generators. Every generator is a pure function of its arguments.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Bidder, Edge, Instance, ProblemClass};
use crate::rng::seeded;
use crate::{Error, Result};

/// Upper-triangular OBM: query `i` likes goods `i..n`. The identity matching
/// is planted.
pub fn gen_upper_triangular(n: usize) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidParameter("upper_triangular needs n >= 1".into()));
    }
    let queries = (0..n).map(|i| (i..n).map(|j| Edge::new(j, 1)).collect()).collect();
    let bidders = vec![Bidder::with_budget(1); n];
    Ok(Instance::new(ProblemClass::Obm, bidders, queries).with_planted((0..n).map(|i| (i, i)).collect()))
}

/// The three two-bidder instances that defeat any greedy rule which refuses
/// bids larger than the leftover budget. Budgets are `w` each and the offline
/// optimum of every instance is `2w`.
pub fn gen_example_three(w: u64) -> Result<(Instance, Instance, Instance)> {
    if w == 0 {
        return Err(Error::InvalidParameter("example_three needs W >= 1".into()));
    }
    let units = w as usize;
    let both = || vec![Edge::new(0, 1), Edge::new(1, 1)];
    let bidders = vec![Bidder::with_budget(w); 2];

    let with_tail = |tail_bidder: usize| {
        let mut queries: Vec<Vec<Edge>> = (0..units).map(|_| both()).collect();
        queries.push(vec![Edge::new(tail_bidder, w)]);
        let other = 1 - tail_bidder;
        let mut planted: Vec<(usize, usize)> = (0..units).map(|q| (q, other)).collect();
        planted.push((units, tail_bidder));
        Instance::new(ProblemClass::General, bidders.clone(), queries).with_planted(planted)
    };

    let first = with_tail(0);
    let second = with_tail(1);
    let third = Instance::new(
        ProblemClass::General,
        bidders.clone(),
        (0..2 * units).map(|_| both()).collect(),
    )
    .with_planted((0..2 * units).map(|q| (q, q / units)).collect());
    Ok((first, second, third))
}

/// Two bidders `j` (id 0) and `j'` (id 1) over `k` queries: `j` bids `alpha`
/// on all of them, `j'` bids `alpha - 1` on the first `k - 1` and
/// `(alpha - 1)(k - 1)` on the last. Budgets are `alpha * k` and
/// `(alpha - 1)(k - 1)`. With equal prices the last query goes to `j'` even
/// though `j` outbids everything the query sees once `j` is removed.
pub fn gen_example_no_surpass(alpha: u64, k: usize) -> Result<Instance> {
    if alpha < 2 || k < 3 {
        return Err(Error::InvalidParameter(format!(
            "example_no_surpass needs alpha >= 2 and k >= 3, got alpha={alpha}, k={k}"
        )));
    }
    let kk = k as u64;
    let tail = (alpha - 1) * (kk - 1);
    let bidders = vec![Bidder::with_budget(alpha * kk), Bidder::with_budget(tail)];
    let mut queries: Vec<Vec<Edge>> = (0..k - 1)
        .map(|_| vec![Edge::new(0, alpha), Edge::new(1, alpha - 1)])
        .collect();
    queries.push(vec![Edge::new(0, alpha), Edge::new(1, tail)]);
    Ok(Instance::new(ProblemClass::General, bidders, queries))
}

/// How budgets are drawn. For single-valued instances the policy draws `k`
/// (the budget is then `k * b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetPolicy {
    Fixed(u64),
    Uniform { lo: u64, hi: u64 },
}

impl BudgetPolicy {
    fn min(self) -> u64 {
        match self {
            BudgetPolicy::Fixed(b) => b,
            BudgetPolicy::Uniform { lo, .. } => lo,
        }
    }

    fn draw<R: Rng>(self, rng: &mut R) -> u64 {
        match self {
            BudgetPolicy::Fixed(b) => b,
            BudgetPolicy::Uniform { lo, hi } => rng.gen_range(lo..=hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub class: ProblemClass,
    pub n: usize,
    pub m: usize,
    /// Probability of each query-bidder edge, in `(0, 1]`.
    pub density: f64,
    /// Inclusive range of bids (of `b` for single-valued bidders).
    pub bid_range: (u64, u64),
    pub budget: BudgetPolicy,
    pub seed: u64,
}

impl RandomParams {
    pub fn new(class: ProblemClass, n: usize, m: usize, seed: u64) -> Self {
        RandomParams {
            class,
            n,
            m,
            density: 0.3,
            bid_range: (1, 5),
            budget: match class {
                ProblemClass::SingleValued => BudgetPolicy::Uniform { lo: 1, hi: 3 },
                _ => BudgetPolicy::Uniform { lo: 5, hi: 20 },
            },
            seed,
        }
    }
}

/// Random instance; every query gets at least one edge.
pub fn gen_random(p: &RandomParams) -> Result<Instance> {
    if p.n == 0 || p.m == 0 {
        return Err(Error::InvalidParameter("random instances need n, m >= 1".into()));
    }
    if !(p.density > 0.0 && p.density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density {} is outside (0, 1]",
            p.density
        )));
    }
    let (lo, hi) = p.bid_range;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidParameter(format!("bad bid range [{lo}, {hi}]")));
    }
    if let BudgetPolicy::Uniform { lo: blo, hi: bhi } = p.budget {
        if blo > bhi {
            return Err(Error::InvalidParameter(format!("bad budget range [{blo}, {bhi}]")));
        }
    }
    if p.budget.min() == 0 {
        return Err(Error::InvalidParameter("budgets must be positive".into()));
    }
    if p.class == ProblemClass::General && lo > p.budget.min() {
        return Err(Error::Infeasible(format!(
            "smallest bid {lo} exceeds the smallest budget {}",
            p.budget.min()
        )));
    }

    let mut rng = seeded(p.seed);
    let bidders: Vec<Bidder> = (0..p.m)
        .map(|_| match p.class {
            ProblemClass::Obm => Bidder::with_budget(1),
            ProblemClass::SingleValued => {
                let b = rng.gen_range(lo..=hi);
                let k = p.budget.draw(&mut rng);
                Bidder::single_valued(b, k)
            }
            ProblemClass::General => Bidder::with_budget(p.budget.draw(&mut rng)),
        })
        .collect();

    let draw_bid = |rng: &mut rand_chacha::ChaCha8Rng, j: usize| match p.class {
        ProblemClass::Obm => 1,
        ProblemClass::SingleValued => bidders[j].single.map_or(1, |sv| sv.bid),
        ProblemClass::General => rng.gen_range(lo..=hi.min(bidders[j].budget)),
    };

    let mut queries = Vec::with_capacity(p.n);
    for _ in 0..p.n {
        let mut edges = Vec::new();
        for j in 0..p.m {
            if rng.gen_bool(p.density) {
                edges.push(Edge::new(j, draw_bid(&mut rng, j)));
            }
        }
        if edges.is_empty() {
            let j = rng.gen_range(0..p.m);
            edges.push(Edge::new(j, draw_bid(&mut rng, j)));
        }
        queries.push(edges);
    }
    Ok(Instance::new(p.class, bidders, queries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedParams {
    pub class: ProblemClass,
    /// Total number of queries. `None` plants the required queries and adds
    /// a quarter as many distractor-only queries.
    pub n: Option<usize>,
    pub m: usize,
    /// Per-bidder budget for GENERAL; the largest `k` for SINGLE-VALUED.
    pub budget: u64,
    /// Largest `b` drawn for SINGLE-VALUED bidders.
    pub max_single_bid: u64,
    /// GENERAL only: bids are capped so that `mu(I) <= mu_target`.
    pub mu_target: f64,
    /// Probability of each distractor edge.
    pub density: f64,
    pub seed: u64,
}

impl PlantedParams {
    pub fn new(class: ProblemClass, m: usize, seed: u64) -> Self {
        PlantedParams {
            class,
            n: None,
            m,
            budget: match class {
                ProblemClass::Obm => 1,
                ProblemClass::SingleValued => 4,
                ProblemClass::General => 100,
            },
            max_single_bid: 5,
            mu_target: 0.1,
            density: 0.2,
            seed,
        }
    }
}

/// Largest bid `t` with `(t - 1) / budget <= mu`, never above the budget.
pub(crate) fn max_bid_for_mu(budget: u64, mu: f64) -> u64 {
    let b = budget as f64;
    let mut extra = libm::floor(mu * b).max(0.0) as u64;
    while extra > 0 && extra as f64 / b > mu {
        extra -= 1;
    }
    while (extra + 1) as f64 / b <= mu && extra + 1 < budget {
        extra += 1;
    }
    (extra + 1).min(budget)
}

/// Instance with a planted assignment that spends every budget exactly, so
/// the offline optimum is the total budget. Distractor edges are added on
/// top and the arrival order is shuffled.
pub fn gen_planted(p: &PlantedParams) -> Result<Instance> {
    if p.m == 0 {
        return Err(Error::InvalidParameter("planted instances need m >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p.density) {
        return Err(Error::InvalidParameter(format!(
            "density {} is outside [0, 1]",
            p.density
        )));
    }
    if !(0.0..=1.0).contains(&p.mu_target) {
        return Err(Error::InvalidParameter(format!(
            "mu target {} is outside [0, 1]",
            p.mu_target
        )));
    }
    if p.class != ProblemClass::Obm && p.budget == 0 {
        return Err(Error::InvalidParameter("budget must be positive".into()));
    }
    if p.class == ProblemClass::SingleValued && p.max_single_bid == 0 {
        return Err(Error::InvalidParameter("max_single_bid must be positive".into()));
    }

    let mut rng = seeded(p.seed);
    let bidders: Vec<Bidder> = (0..p.m)
        .map(|_| match p.class {
            ProblemClass::Obm => Bidder::with_budget(1),
            ProblemClass::SingleValued => {
                let b = rng.gen_range(1..=p.max_single_bid);
                let k = rng.gen_range(1..=p.budget);
                Bidder::single_valued(b, k)
            }
            ProblemClass::General => Bidder::with_budget(p.budget),
        })
        .collect();
    let cap = max_bid_for_mu(p.budget.max(1), p.mu_target);

    // (bidder, bid) of each planted query
    let mut planted: Vec<(usize, u64)> = Vec::new();
    for (j, bidder) in bidders.iter().enumerate() {
        match p.class {
            ProblemClass::Obm => planted.push((j, 1)),
            ProblemClass::SingleValued => {
                let sv = bidder.single.expect("single-valued bidder");
                planted.extend((0..sv.cap).map(|_| (j, sv.bid)));
            }
            ProblemClass::General => {
                let mut left = bidder.budget;
                while left > 0 {
                    let part = rng.gen_range(1..=cap.min(left));
                    planted.push((j, part));
                    left -= part;
                }
            }
        }
    }

    let needed = planted.len();
    let n = p.n.unwrap_or(needed + needed.div_ceil(4));
    if n < needed {
        return Err(Error::Infeasible(format!(
            "the planted assignment needs {needed} queries but n = {n}"
        )));
    }

    let distractor_bid = |rng: &mut rand_chacha::ChaCha8Rng, j: usize| match p.class {
        ProblemClass::Obm => 1,
        ProblemClass::SingleValued => bidders[j].single.map_or(1, |sv| sv.bid),
        ProblemClass::General => rng.gen_range(1..=cap.min(bidders[j].budget)),
    };

    let mut slots: Vec<(Vec<Edge>, Option<usize>)> = Vec::with_capacity(n);
    for q in 0..n {
        let owner = planted.get(q).copied();
        let mut edges = Vec::new();
        for j in 0..p.m {
            match owner {
                Some((o, bid)) if o == j => edges.push(Edge::new(j, bid)),
                _ => {
                    if p.density > 0.0 && rng.gen_bool(p.density) {
                        edges.push(Edge::new(j, distractor_bid(&mut rng, j)));
                    }
                }
            }
        }
        if edges.is_empty() {
            let j = rng.gen_range(0..p.m);
            edges.push(Edge::new(j, distractor_bid(&mut rng, j)));
        }
        slots.push((edges, owner.map(|(o, _)| o)));
    }
    slots.shuffle(&mut rng);

    let mut assignment = Vec::with_capacity(needed);
    let mut queries = Vec::with_capacity(n);
    for (q, (edges, owner)) in slots.into_iter().enumerate() {
        if let Some(o) = owner {
            assignment.push((q, o));
        }
        queries.push(edges);
    }
    Ok(Instance::new(p.class, bidders, queries).with_planted(assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Ratio;

    #[test]
    fn upper_triangular_shapes() {
        let one = gen_upper_triangular(1).unwrap();
        assert_eq!(one.num_queries(), 1);
        assert_eq!(one.num_edges(), 1);

        let three = gen_upper_triangular(3).unwrap();
        let liked: Vec<Vec<usize>> = three
            .queries
            .iter()
            .map(|es| es.iter().map(|e| e.bidder).collect())
            .collect();
        assert_eq!(liked, vec![vec![0, 1, 2], vec![1, 2], vec![2]]);
        assert!(three.is_valid());

        let two = gen_upper_triangular(2).unwrap();
        assert_eq!(two.planted.as_ref().unwrap().value(&two), 2);

        assert!(gen_upper_triangular(0).is_err());
    }

    #[test]
    fn example_three_matches_construction() {
        let (i1, i2, i3) = gen_example_three(3).unwrap();
        assert_eq!(i3.num_queries(), 6);
        assert!(i3
            .queries
            .iter()
            .all(|es| es == &vec![Edge::new(0, 1), Edge::new(1, 1)]));
        assert_eq!(i1.num_queries(), 4);
        assert_eq!(i1.queries[3], vec![Edge::new(0, 3)]);
        assert_eq!(i2.queries[3], vec![Edge::new(1, 3)]);
        for inst in [&i1, &i2, &i3] {
            assert!(inst.is_valid(), "{:?}", inst.validate());
            assert_eq!(inst.planted.as_ref().unwrap().value(inst), 6);
            assert!(inst.bidders.iter().all(|b| b.budget == 3));
        }
        assert!(gen_example_three(0).is_err());
    }

    #[test]
    fn example_no_surpass_parameters() {
        let inst = gen_example_no_surpass(2, 3).unwrap();
        assert_eq!(inst.bidders[0].budget, 6);
        assert_eq!(inst.bidders[1].budget, 2);
        assert_eq!(inst.bid(2, 1), Some(2));
        assert_eq!(inst.bid(0, 0), Some(2));
        assert_eq!(inst.bid(1, 1), Some(1));
        assert!(inst.is_valid());
        assert_eq!(inst.mu(), Ratio::new(1, 2));

        assert_eq!(gen_example_no_surpass(3, 4).unwrap().bid(3, 1), Some(6));
        assert!(gen_example_no_surpass(1, 5).is_err());
        assert!(gen_example_no_surpass(2, 2).is_err());
    }

    #[test]
    fn random_is_deterministic_and_covers_queries() {
        for class in [ProblemClass::Obm, ProblemClass::SingleValued, ProblemClass::General] {
            let p = RandomParams::new(class, 20, 6, 99);
            let a = gen_random(&p).unwrap();
            assert_eq!(a, gen_random(&p).unwrap());
            assert!(a.is_valid(), "{class}: {:?}", a.validate());
            assert!(a.queries.iter().all(|es| !es.is_empty()));
        }
    }

    #[test]
    fn random_density_one_is_complete() {
        let mut p = RandomParams::new(ProblemClass::General, 7, 4, 3);
        p.density = 1.0;
        let inst = gen_random(&p).unwrap();
        assert_eq!(inst.num_edges(), 28);
    }

    #[test]
    fn random_obm_ignores_bid_range() {
        let mut p = RandomParams::new(ProblemClass::Obm, 10, 5, 1);
        p.bid_range = (4, 9);
        let inst = gen_random(&p).unwrap();
        assert!(inst.edges().all(|(_, e)| e.bid == 1));
        assert!(inst.bidders.iter().all(|b| b.budget == 1));
    }

    #[test]
    fn random_rejects_bad_parameters() {
        let mut p = RandomParams::new(ProblemClass::General, 10, 5, 1);
        p.bid_range = (30, 40);
        assert!(matches!(gen_random(&p), Err(Error::Infeasible(_))));
        p.bid_range = (1, 2);
        p.density = 0.0;
        assert!(gen_random(&p).is_err());
        p.density = 0.5;
        p.m = 0;
        assert!(gen_random(&p).is_err());
    }

    #[test]
    fn max_bid_for_mu_examples() {
        assert_eq!(max_bid_for_mu(1000, 0.01), 11);
        assert_eq!(max_bid_for_mu(100, 0.0), 1);
        assert_eq!(max_bid_for_mu(100, 0.2), 21);
        assert_eq!(max_bid_for_mu(3, 1.0), 3);
        // 0.1 * 30 is 3.0000000000000004 in binary
        assert_eq!(max_bid_for_mu(30, 0.1), 4);
    }

    #[test]
    fn planted_general_respects_mu_and_exhausts_budgets() {
        let mut p = PlantedParams::new(ProblemClass::General, 5, 7);
        p.budget = 1000;
        p.mu_target = 0.01;
        let inst = gen_planted(&p).unwrap();
        assert!(inst.is_valid(), "{:?}", inst.validate());
        assert!(inst.edges().all(|(_, e)| e.bid <= 11));
        assert!(inst.mu().to_f64() <= 0.01);
        assert_eq!(inst.planted.as_ref().unwrap().value(&inst), inst.total_budget());
        assert_eq!(inst, gen_planted(&p).unwrap());
    }

    #[test]
    fn planted_rejects_short_n() {
        let mut p = PlantedParams::new(ProblemClass::Obm, 5, 7);
        p.n = Some(3);
        assert!(matches!(gen_planted(&p), Err(Error::Infeasible(_))));
        p.n = Some(5);
        let inst = gen_planted(&p).unwrap();
        assert_eq!(inst.planted.as_ref().unwrap().value(&inst), 5);
    }
}
