//! Engines and offline solvers against naive reference implementations
//! written directly from the algorithm statements.

use bomatch_core::audit::check_no_surpassing;
use bomatch_core::engines::{run_greedy, run_msvv, run_with, Algorithm, RankAssignment, RunOptions, RunOutcome};
use bomatch_core::instance::{Bidder, Edge, Instance, ProblemClass};
use bomatch_core::oracle::{opt_general_exact, opt_obm, opt_single_valued};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

/// Exhaustive offline optimum: every query goes to one neighbour or nowhere,
/// no bidder is assigned more than its budget.
fn naive_opt(inst: &Instance) -> u64 {
    fn go(inst: &Instance, q: usize, spent: &mut Vec<u64>) -> u64 {
        if q == inst.queries.len() {
            return 0;
        }
        let mut best = go(inst, q + 1, spent);
        for e in &inst.queries[q] {
            if spent[e.bidder] + e.bid <= inst.bidders[e.bidder].budget {
                spent[e.bidder] += e.bid;
                best = best.max(e.bid + go(inst, q + 1, spent));
                spent[e.bidder] -= e.bid;
            }
        }
        best
    }
    go(inst, 0, &mut vec![0; inst.bidders.len()])
}

struct Reference {
    matching: Vec<(usize, usize, u64)>,
    real: u64,
    fake: u64,
    utility: Vec<f64>,
    revenue: Vec<f64>,
    /// Largest effective bid offered to each query, 0 if none.
    top_offer: Vec<f64>,
}

/// The rank-based rule for every class: among available neighbours take the
/// largest `bid * (1 - e^(w - 1))`, lowest id first on ties.
fn naive_ranked(inst: &Instance, w: &[f64]) -> Reference {
    naive_ranked_without(inst, w, None)
}

fn naive_ranked_without(inst: &Instance, w: &[f64], removed: Option<usize>) -> Reference {
    let m = inst.bidders.len();
    let price: Vec<f64> = w.iter().map(|x| (x - 1.0).exp()).collect();
    let mut left: Vec<u64> = inst.bidders.iter().map(|b| b.budget).collect();
    let mut wins = vec![0u64; m];
    let mut out = Reference {
        matching: vec![],
        real: 0,
        fake: 0,
        utility: vec![0.0; inst.queries.len()],
        revenue: vec![0.0; m],
        top_offer: vec![0.0; inst.queries.len()],
    };
    for (q, edges) in inst.queries.iter().enumerate() {
        let mut sorted = edges.clone();
        sorted.sort_by_key(|e| e.bidder);
        let mut best: Option<(Edge, f64)> = None;
        for e in sorted {
            let j = e.bidder;
            let available = Some(j) != removed
                && match inst.class {
                    ProblemClass::Obm => wins[j] == 0,
                    ProblemClass::SingleValued => wins[j] < inst.bidders[j].single.unwrap().cap,
                    ProblemClass::General => left[j] > 0,
                };
            let ebid = e.bid as f64 * (1.0 - price[j]);
            if available && best.is_none_or(|(_, b)| ebid > b) {
                best = Some((e, ebid));
            }
        }
        if let Some((e, ebid)) = best {
            out.top_offer[q] = ebid;
            let j = e.bidder;
            wins[j] += 1;
            let paid = left[j].min(e.bid);
            left[j] -= paid;
            out.real += paid;
            out.fake += e.bid - paid;
            out.utility[q] = ebid;
            out.revenue[j] += e.bid as f64 * price[j];
            out.matching.push((q, j, e.bid));
        }
    }
    out
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
}

fn triples(out: &RunOutcome) -> Vec<(usize, usize, u64)> {
    out.matching.iter().map(|m| (m.query, m.bidder, m.bid)).collect()
}

fn instance_strategy(class: ProblemClass) -> impl Strategy<Value = Instance> {
    (1usize..=7, 1usize..=4).prop_flat_map(move |(n, m)| {
        let bidder = match class {
            ProblemClass::Obm => Just(Bidder::with_budget(1)).boxed(),
            ProblemClass::SingleValued => (1u64..=4, 1u64..=3)
                .prop_map(|(b, k)| Bidder::single_valued(b, k))
                .boxed(),
            ProblemClass::General => (1u64..=8).prop_map(Bidder::with_budget).boxed(),
        };
        let bidders = prop::collection::vec(bidder, m);
        let raw = prop::collection::vec(prop::collection::vec((any::<bool>(), 1u64..=8), m), n);
        (bidders, raw).prop_map(move |(bidders, raw)| {
            let queries = raw
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, (on, _))| *on)
                        .map(|(j, &(_, bid))| {
                            let b = &bidders[j];
                            let bid = match class {
                                ProblemClass::Obm => 1,
                                ProblemClass::SingleValued => b.single.unwrap().bid,
                                ProblemClass::General => 1 + (bid - 1) % b.budget,
                            };
                            Edge::new(j, bid)
                        })
                        .rev()
                        .collect()
                })
                .collect();
            Instance::new(class, bidders.clone(), queries)
        })
    })
}

fn any_class() -> impl Strategy<Value = ProblemClass> {
    prop_oneof![
        Just(ProblemClass::Obm),
        Just(ProblemClass::SingleValued),
        Just(ProblemClass::General)
    ]
}

fn with_ranks(class: ProblemClass) -> impl Strategy<Value = (Instance, Vec<f64>)> {
    instance_strategy(class).prop_flat_map(|inst| {
        let m = inst.bidders.len();
        (Just(inst), prop::collection::vec(0.0f64..=1.0, m))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn engines_follow_the_reference((inst, w) in any_class().prop_flat_map(with_ranks)) {
        let ranks = RankAssignment::from_ranks(w.clone()).unwrap();
        let alg = Algorithm::for_class(inst.class);
        let got = run_with(alg, &inst, Some(&ranks), RunOptions::default()).unwrap();
        let want = naive_ranked(&inst, &w);
        prop_assert_eq!(triples(&got), want.matching);
        prop_assert_eq!(got.real, want.real);
        prop_assert_eq!(got.fake, want.fake);
        prop_assert!(close(&got.utility, &want.utility));
        prop_assert!(close(&got.revenue, &want.revenue));
    }

    #[test]
    fn offline_solvers_match_enumeration(inst in any_class().prop_flat_map(instance_strategy)) {
        let want = naive_opt(&inst);
        let got = match inst.class {
            ProblemClass::Obm => opt_obm(&inst).unwrap(),
            ProblemClass::SingleValued => opt_single_valued(&inst).unwrap(),
            ProblemClass::General => opt_general_exact(&inst, u64::MAX).unwrap(),
        };
        prop_assert_eq!(got.value, want);
        prop_assert_eq!(opt_general_exact(&inst.embed_general(), u64::MAX).unwrap().value, want);
    }

    // Not for GENERAL: a capped payment min(L_j, bid) can use budget that no
    // feasible offline assignment reaches.
    #[test]
    fn online_never_beats_offline((inst, w) in prop_oneof![
        with_ranks(ProblemClass::Obm),
        with_ranks(ProblemClass::SingleValued)
    ]) {
        let opt = naive_opt(&inst);
        let ranks = RankAssignment::from_ranks(w).unwrap();
        let out = run_with(Algorithm::for_class(inst.class), &inst, Some(&ranks), RunOptions::default()).unwrap();
        prop_assert!(out.real <= opt);
        prop_assert!(run_greedy(&inst).real <= opt);
        prop_assert!(run_msvv(&inst).real <= opt);
    }

    #[test]
    fn no_surpassing_audit_follows_the_reference((inst, w) in any_class().prop_flat_map(with_ranks)) {
        let full = naive_ranked(&inst, &w);
        let price: Vec<f64> = w.iter().map(|x| (x - 1.0).exp()).collect();
        let (mut tested, mut antecedent, mut violations) = (0u64, 0u64, Vec::new());
        for (j, &pj) in price.iter().enumerate() {
            let without = naive_ranked_without(&inst, &w, Some(j));
            for (q, edges) in inst.queries.iter().enumerate() {
                for e in edges.iter().filter(|e| e.bidder == j) {
                    tested += 1;
                    let ebid = e.bid as f64 * (1.0 - pj);
                    if ebid > without.top_offer[q] {
                        antecedent += 1;
                        if full.top_offer[q] > ebid {
                            violations.push((q, j));
                        }
                    }
                }
            }
        }
        violations.sort_unstable();
        let report = check_no_surpassing(&inst, &RankAssignment::from_ranks(w).unwrap()).unwrap();
        prop_assert_eq!(report.edges_tested, tested);
        prop_assert_eq!(report.antecedent_true, antecedent);
        let got: Vec<(usize, usize)> = report.violations.iter().map(|v| (v.query, v.bidder)).collect();
        prop_assert_eq!(&got, &violations);
        if inst.class != ProblemClass::General {
            prop_assert!(violations.is_empty());
        }
    }

    #[test]
    fn greedy_follows_the_reference(inst in instance_strategy(ProblemClass::General)) {
        let mut left: Vec<u64> = inst.bidders.iter().map(|b| b.budget).collect();
        let mut want = Vec::new();
        for (q, edges) in inst.queries.iter().enumerate() {
            let mut best: Option<(usize, u64)> = None;
            for e in edges {
                let capped = left[e.bidder].min(e.bid);
                let better = match best {
                    None => true,
                    Some((b, c)) => capped > c || (capped == c && e.bidder < b),
                };
                if left[e.bidder] > 0 && better {
                    best = Some((e.bidder, capped));
                }
            }
            if let Some((j, c)) = best {
                left[j] -= c;
                want.push((q, j, c));
            }
        }
        let got = run_greedy(&inst);
        prop_assert_eq!(triples(&got), want);
        prop_assert_eq!(got.fake, 0);
    }
}

#[test]
fn capped_payments_can_exceed_the_offline_optimum() {
    let inst = Instance::new(
        ProblemClass::General,
        vec![Bidder::with_budget(3)],
        vec![vec![Edge::new(0, 2)], vec![Edge::new(0, 2)]],
    );
    assert_eq!(naive_opt(&inst), 2);
    assert_eq!(run_greedy(&inst).real, 3);
}

#[test]
fn greedy_is_at_least_half_on_small_instances() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = instance_strategy(ProblemClass::General);
    for _ in 0..300 {
        let inst = strategy.new_tree(&mut runner).unwrap().current();
        let opt = naive_opt(&inst);
        assert!(2 * run_greedy(&inst).real >= opt, "{inst:?}");
    }
}
