//! The acceptance suite behind `bomatch verify`.
//!
//! Each criterion returns a [`CriterionReport`] with a pass/fail verdict and
//! the numbers it was decided on. `Scale::Full` uses the pinned sample sizes;
//! `Scale::Smoke` shrinks them for a quick check and keeps the tolerances.

use std::fmt;
use std::time::Instant;

use bomatch_core::audit::{audit, equal_ranks, recheck, AuditTotals, Checks};
use bomatch_core::engines::{
    run_general, run_greedy, run_ranking, run_ranking_permutation, run_single_valued, Algorithm, RankAssignment,
};
use bomatch_core::harness::{
    estimate_edge_contributions, estimate_ratio, estimate_star_contributions, fake_money_report, stars_for, sweep_mu,
    SweepConfig, TrialMap,
};
use bomatch_core::instance::{
    gen_example_no_surpass, gen_example_three, gen_planted, gen_random, gen_upper_triangular, BudgetPolicy, Instance,
    PlantedParams, ProblemClass, RandomParams,
};
use bomatch_core::oracle::{opt_general_exact, opt_obm, opt_single_valued, planted_certificate};
use bomatch_core::rng::derive_seed;
use bomatch_core::{Result, ONE_MINUS_INV_E};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Smoke,
    Full,
}

impl Scale {
    pub fn parse(s: &str) -> Option<Scale> {
        match s {
            "smoke" => Some(Scale::Smoke),
            "full" => Some(Scale::Full),
            _ => None,
        }
    }

    fn pick<T>(self, smoke: T, full: T) -> T {
        match self {
            Scale::Smoke => smoke,
            Scale::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({:.1}s)",
            self.id,
            self.verdict(),
            self.title,
            self.seconds
        )
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary_line())?;
        for d in &self.details {
            writeln!(f, "    {d}")?;
        }
        Ok(())
    }
}

pub const TITLES: [&str; 10] = [
    "ranking tightness trend on upper-triangular instances",
    "per-edge contribution bound for ranking",
    "single-valued ratio and j-star bounds",
    "no-surpassing property and its general counterexample",
    "multiset containments under bidder removal",
    "threshold dominance and matched-when-cheap",
    "fake-money accounting",
    "small-bids conditional convergence",
    "reductions and equivalences",
    "offline oracles and the three-instance example",
];

/// Collects lines and the verdict of one criterion.
struct Check {
    passed: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            passed: true,
            details: Vec::new(),
        }
    }

    fn note(&mut self, line: String) {
        self.details.push(line);
    }

    fn require(&mut self, ok: bool, line: String) {
        if !ok {
            self.passed = false;
            self.details.push(format!("FAILED {line}"));
        } else {
            self.details.push(line);
        }
    }

    /// Fails silently-counted conditions with only the first few spelled out.
    fn require_all(&mut self, failures: &[String], what: &str, total: usize) {
        self.require(
            failures.is_empty(),
            format!("{what}: {} of {total} failed", failures.len()),
        );
        for f in failures.iter().take(5) {
            self.details.push(format!("  {f}"));
        }
    }
}

pub fn run_criterion<M: TrialMap>(id: u8, scale: Scale, seed: u64, map: &M) -> CriterionReport {
    let start = Instant::now();
    let seed = derive_seed(seed, id as u64);
    let mut c = Check::new();
    let outcome = match id {
        1 => ranking_tightness(&mut c, scale, seed, map),
        2 => edge_contributions(&mut c, scale, seed, map),
        3 => single_valued_guarantee(&mut c, scale, seed, map),
        4 => no_surpassing(&mut c, scale, seed, map),
        5 => multiset_lemmas(&mut c, scale, seed, map),
        6 => threshold_dominance(&mut c, scale, seed, map),
        7 => fake_money(&mut c, scale, seed, map),
        8 => small_convergence(&mut c, scale, seed, map),
        9 => reductions(&mut c, scale, seed),
        10 => oracles(&mut c, scale, seed),
        _ => {
            c.require(false, format!("no criterion {id}"));
            Ok(())
        }
    };
    if let Err(e) = outcome {
        c.require(false, format!("error: {e}"));
    }
    CriterionReport {
        id,
        title: TITLES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed: c.passed,
        details: c.details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all<M: TrialMap>(scale: Scale, seed: u64, map: &M) -> Vec<CriterionReport> {
    (1..=10).map(|id| run_criterion(id, scale, seed, map)).collect()
}

fn ranking_tightness<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let trials = scale.pick(4_000, 20_000);
    let (lo, hi) = (ONE_MINUS_INV_E - 0.02, ONE_MINUS_INV_E + 0.06);
    let mut previous: Option<(f64, f64)> = None;
    for n in [50usize, 100, 200] {
        let inst = gen_upper_triangular(n)?;
        let opt = opt_obm(&inst)?;
        let est = estimate_ratio(
            &inst,
            Algorithm::Ranking,
            &opt,
            trials,
            derive_seed(seed, n as u64),
            map,
        )?;
        c.require(
            (lo..=hi).contains(&est.ratio),
            format!("n={n}: ratio {:.5} (se {:.5}) in [{lo:.4}, {hi:.4}]", est.ratio, est.se),
        );
        if let Some((prev, prev_se)) = previous {
            let slack = 2.0 * (prev_se * prev_se + est.se * est.se).sqrt();
            c.require(
                est.ratio <= prev + slack,
                format!(
                    "n={n}: ratio {:.5} does not exceed the previous {prev:.5} (+2se {slack:.5})",
                    est.ratio
                ),
            );
        }
        previous = Some((est.ratio, est.se));
    }
    Ok(())
}

fn random_obm(n: usize, m: usize, seed: u64) -> Result<Instance> {
    gen_random(&RandomParams::new(ProblemClass::Obm, n, m, seed))
}

fn edge_contributions<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let instances = scale.pick(5, 20);
    let trials = scale.pick(2_000, 10_000);
    let mut failures = Vec::new();
    let (mut edges, mut worst) = (0usize, f64::INFINITY);
    for idx in 0..instances {
        let s = derive_seed(seed, idx);
        let n = 10 + (s % 21) as usize;
        let inst = random_obm(n, n, s)?;
        let opt = opt_obm(&inst)?;
        let witness = opt.witness.clone().unwrap_or_default();
        for e in estimate_edge_contributions(&inst, &witness, trials, s, map)? {
            edges += 1;
            worst = worst.min(e.mean - e.bound + 3.0 * e.se);
            if !e.holds_within(3.0) {
                failures.push(format!(
                    "instance {idx}, edge {:?}: {:.4} (se {:.4})",
                    e.target, e.mean, e.se
                ));
            }
        }
    }
    c.note(format!(
        "{instances} instances, {edges} matching edges, {trials} trials each"
    ));
    c.note(format!("smallest mean - bound + 3se: {worst:.4}"));
    c.require_all(&failures, "edges below 1 - 1/e - 3se", edges);
    Ok(())
}

fn single_valued_guarantee<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let instances = scale.pick(5, 20);
    let trials = scale.pick(2_000, 10_000);
    let mut ratio_failures = Vec::new();
    let mut star_failures = Vec::new();
    let (mut stars_seen, mut min_ratio) = (0usize, f64::INFINITY);
    for idx in 0..instances {
        let s = derive_seed(seed, idx);
        let inst = gen_planted(&PlantedParams::new(ProblemClass::SingleValued, 8, s))?;
        let opt = planted_certificate(&inst).expect("planted instances carry a certificate");
        let est = estimate_ratio(&inst, Algorithm::SingleValued, &opt, trials, s, map)?;
        min_ratio = min_ratio.min(est.ratio);
        if !est.ratio_stats().at_least(ONE_MINUS_INV_E, 3.0) {
            ratio_failures.push(format!("instance {idx}: ratio {:.4} (se {:.4})", est.ratio, est.se));
        }
        let stars = stars_for(&inst, Some(&opt)).unwrap_or_default();
        for e in estimate_star_contributions(&inst, &stars, trials, s, map)? {
            stars_seen += 1;
            if !e.holds_within(3.0) {
                star_failures.push(format!(
                    "instance {idx}, bidder {}: {:.3} < {:.3} (se {:.3})",
                    e.target.bidder(),
                    e.mean,
                    e.bound,
                    e.se
                ));
            }
        }
    }
    c.note(format!(
        "{instances} planted instances, {trials} trials; smallest ratio {min_ratio:.4}"
    ));
    c.require_all(&ratio_failures, "ratios below 1 - 1/e - 3se", instances as usize);
    c.require_all(&star_failures, "j-stars below k b (1 - 1/e) - 3se", stars_seen);
    Ok(())
}

/// `pairs` random (instance, rank seed) audits of one class.
fn audit_batch<M: TrialMap>(
    class: ProblemClass,
    pairs: u64,
    seed: u64,
    checks: Checks,
    map: &M,
) -> Result<AuditTotals> {
    let reports = map.map(pairs, |p| {
        let s = derive_seed(seed, p);
        let n = 1 + (s % 25) as usize;
        let m = 1 + ((s >> 8) % 8) as usize;
        let mut params = RandomParams::new(class, n, m, s);
        params.density = 0.2 + ((s >> 16) % 5) as f64 * 0.1;
        if class == ProblemClass::SingleValued {
            params.budget = BudgetPolicy::Uniform { lo: 1, hi: 4 };
        }
        let inst = gen_random(&params)?;
        let ranks = RankAssignment::for_trial(m, s, 0);
        audit(&inst, &ranks, checks)
    });
    let mut totals = AuditTotals::default();
    for r in reports {
        totals.absorb(&r?);
    }
    Ok(totals)
}

fn no_surpassing<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let pairs = scale.pick(200, 1_000);
    for (i, class) in [ProblemClass::Obm, ProblemClass::SingleValued].into_iter().enumerate() {
        let t = audit_batch(class, pairs, derive_seed(seed, i as u64), Checks::NO_SURPASSING, map)?;
        c.require(
            t.violations == 0,
            format!(
                "{class}: {} violations over {} runs ({} edges, {} with the antecedent)",
                t.violations, t.runs, t.edges_tested, t.antecedent_true
            ),
        );
    }
    let inst = gen_example_no_surpass(2, 5)?;
    let ranks = equal_ranks(2, 0.5)?;
    let report = audit(&inst, &ranks, Checks::NO_SURPASSING)?;
    let confirmed = report
        .violations
        .iter()
        .map(|v| recheck(&inst, &ranks, v))
        .collect::<Result<Vec<bool>>>()?;
    c.require(
        !report.violations.is_empty() && confirmed.iter().all(|&ok| ok),
        format!(
            "general example (alpha=2, k=5, equal ranks): {} violations, all rechecked: {}",
            report.violations.len(),
            confirmed.iter().all(|&ok| ok)
        ),
    );
    for v in &report.violations {
        c.note(format!(
            "  query {} bidder {}: ebid {:.4} > beta {:.4}, surpassed by bidder {} at {:.4}",
            v.query, v.bidder, v.ebid, v.beta, v.surpassing_bidder, v.surpassing_bid
        ));
    }
    Ok(())
}

fn multiset_lemmas<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let pairs = scale.pick(200, 1_000);
    let checks = Checks {
        no_surpassing: false,
        multiset: true,
        dominance: false,
    };
    for (i, class) in [ProblemClass::Obm, ProblemClass::SingleValued].into_iter().enumerate() {
        let t = audit_batch(class, pairs, derive_seed(seed, i as u64), checks, map)?;
        c.require(
            t.multiset_failures == 0,
            format!(
                "{class}: {} failed containments over {} runs ({} removal runs)",
                t.multiset_failures, t.runs, t.multiset_runs
            ),
        );
    }
    Ok(())
}

fn threshold_dominance<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let pairs = scale.pick(200, 1_000);
    let checks = Checks {
        no_surpassing: false,
        multiset: false,
        dominance: true,
    };
    let t = audit_batch(ProblemClass::Obm, pairs, seed, checks, map)?;
    c.require(
        t.dominance_failures == 0,
        format!(
            "obm: {} failures over {} runs ({} edges checked)",
            t.dominance_failures, t.runs, t.dominance_checked
        ),
    );
    Ok(())
}

fn fake_money<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let instances = scale.pick(30, 100);
    let trials = scale.pick(100, 500);
    let mut runs = 0u64;
    for idx in 0..instances {
        let s = derive_seed(seed, idx);
        let mut p = RandomParams::new(
            ProblemClass::General,
            1 + (s % 40) as usize,
            1 + ((s >> 8) % 6) as usize,
            s,
        );
        p.bid_range = (1, 2 + (s >> 16) % 10);
        p.budget = BudgetPolicy::Uniform { lo: 10, hi: 30 };
        let inst = gen_random(&p)?;
        runs += fake_money_report(&inst, trials, s, map)?.trials;
    }
    for w in 1..=6 {
        let (i1, i2, i3) = gen_example_three(w)?;
        for inst in [i1, i2, i3, gen_example_no_surpass(2 + w % 3, 3 + w as usize)?] {
            runs += fake_money_report(&inst, trials, w, map)?.trials;
        }
    }
    c.require(
        true,
        format!("W_f <= sum max(bid - 1) on all {runs} random and example runs"),
    );

    let mut mu_failures = Vec::new();
    let mut planted = 0;
    for (cell, mu) in [0.2, 0.1, 0.05, 0.01].into_iter().enumerate() {
        for idx in 0..scale.pick(3, 10) {
            let s = derive_seed(seed, 1_000 + (cell * 100 + idx) as u64);
            let mut p = PlantedParams::new(ProblemClass::General, 6, s);
            p.mu_target = mu;
            let inst = gen_planted(&p)?;
            let r = fake_money_report(&inst, trials, s, map)?;
            planted += 1;
            if !r.within_mu() {
                mu_failures.push(format!("mu {mu}: max W_f/w(P) {} > mu(I) {}", r.max_fraction, r.mu));
            }
        }
    }
    c.require_all(&mu_failures, "planted instances with W_f / w(P) > mu(I)", planted);

    let mut nonzero = Vec::new();
    let mut unit = 0;
    for idx in 0..scale.pick(20, 50) {
        let s = derive_seed(seed, 5_000 + idx);
        let obm = random_obm(1 + (s % 30) as usize, 1 + ((s >> 8) % 8) as usize, s)?.embed_general();
        let mut p = PlantedParams::new(ProblemClass::General, 4, s);
        p.mu_target = 0.0;
        p.budget = 10;
        for inst in [obm, gen_planted(&p)?] {
            unit += 1;
            let r = fake_money_report(&inst, trials, s, map)?;
            if r.max_fake() != 0 {
                nonzero.push(format!("instance {idx}: W_f = {}", r.max_fake()));
            }
        }
    }
    c.require_all(&nonzero, "unit-bid instances with W_f != 0", unit);
    Ok(())
}

fn small_convergence<M: TrialMap>(c: &mut Check, scale: Scale, seed: u64, map: &M) -> Result<()> {
    let mut cfg = SweepConfig::new(vec![0.2, 0.1, 0.05, 0.01], seed);
    cfg.instances_per_cell = scale.pick(2, 4);
    cfg.trials = scale.pick(300, 2_000);
    cfg.audited_seeds = scale.pick(5, 25);
    let rows = sweep_mu(&cfg, map)?;
    let mut prev: Option<f64> = None;
    for r in &rows {
        let line = format!(
            "mu {:.2} (actual {:.4}): W/w(P) {:.4} (se {:.4}), (W+W_f)/w(P) {:.4} (se {:.4}), \
             W_f/w(P) {:.5}, {} violations in {} audited runs",
            r.mu_target,
            r.mu_actual,
            r.ratio,
            r.se,
            r.total_ratio,
            r.total_se,
            r.wf_fraction,
            r.violations_sampled,
            r.audited_runs
        );
        c.require(
            r.wf_within_mu,
            format!("mu {:.2}: W_f/w(P) <= mu(I) on every run", r.mu_target),
        );
        if r.audit_clean() {
            let bound_ok = r.total_ratio >= ONE_MINUS_INV_E - 3.0 * r.total_se;
            let gap_ok = r.total_ratio - r.ratio <= r.mu_actual + 1e-12;
            c.require(bound_ok && gap_ok, line);
        } else {
            c.note(format!("{line} (reported only)"));
        }
        if let Some(p) = prev {
            if r.ratio + 2.0 * r.se < p {
                c.note(format!("  soft trend check: ratio fell from {p:.4} to {:.4}", r.ratio));
            }
        }
        prev = Some(r.ratio);
    }
    Ok(())
}

fn same_matching(a: &[(usize, usize)], b: &[(usize, usize)]) -> bool {
    a == b
}

fn reductions(c: &mut Check, scale: Scale, seed: u64) -> Result<()> {
    let instances = scale.pick(30, 100);
    let seeds_each = scale.pick(3, 10);
    let (mut general, mut single, mut perm, mut total) = (Vec::new(), Vec::new(), Vec::new(), 0);
    for idx in 0..instances {
        let s = derive_seed(seed, idx);
        let inst = random_obm(1 + (s % 30) as usize, 1 + ((s >> 8) % 10) as usize, s)?;
        let as_general = inst.embed_general();
        let as_single = inst.embed_single_valued()?;
        for t in 0..seeds_each {
            total += 1;
            let ranks = RankAssignment::for_trial(inst.num_bidders(), s, t);
            let base = run_ranking(&inst, &ranks)?.pairs();
            if !same_matching(&run_general(&as_general, &ranks)?.pairs(), &base) {
                general.push(format!("instance {idx}, trial {t}"));
            }
            if !same_matching(&run_single_valued(&as_single, &ranks)?.pairs(), &base) {
                single.push(format!("instance {idx}, trial {t}"));
            }
            if !same_matching(&run_ranking_permutation(&inst, &ranks.price_order())?.pairs(), &base) {
                perm.push(format!("instance {idx}, trial {t}"));
            }
        }
    }
    c.note(format!(
        "{instances} obm-shaped instances, {seeds_each} rank draws each"
    ));
    c.require_all(&general, "general engine differs from ranking", total);
    c.require_all(&single, "single-valued engine (k=1, b=1) differs from ranking", total);
    c.require_all(&perm, "permutation form differs from price form", total);
    Ok(())
}

/// Exhaustive search over every assignment of queries to neighbours (or to
/// nobody), keeping spend within budgets.
pub fn brute_force_opt(instance: &Instance) -> u64 {
    fn go(inst: &Instance, q: usize, spent: &mut [u64], value: u64, best: &mut u64) {
        if q == inst.num_queries() {
            *best = (*best).max(value);
            return;
        }
        go(inst, q + 1, spent, value, best);
        for e in &inst.queries[q] {
            if spent[e.bidder] + e.bid <= inst.bidders[e.bidder].budget {
                spent[e.bidder] += e.bid;
                go(inst, q + 1, spent, value + e.bid, best);
                spent[e.bidder] -= e.bid;
            }
        }
    }
    let mut spent = vec![0; instance.num_bidders()];
    let mut best = 0;
    go(instance, 0, &mut spent, 0, &mut best);
    best
}

fn oracles(c: &mut Check, scale: Scale, seed: u64) -> Result<()> {
    let instances = scale.pick(50, 200);
    let mut mismatches = Vec::new();
    for (i, class) in [ProblemClass::Obm, ProblemClass::SingleValued].into_iter().enumerate() {
        for idx in 0..instances {
            let s = derive_seed(seed, (i * 10_000 + idx) as u64);
            let n = 1 + (s % 8) as usize;
            let m = 1 + ((s >> 8) % 5) as usize;
            let mut p = RandomParams::new(class, n, m, s);
            p.density = 0.3 + ((s >> 16) % 5) as f64 * 0.1;
            let inst = gen_random(&p)?;
            let got = match class {
                ProblemClass::Obm => opt_obm(&inst)?.value,
                _ => opt_single_valued(&inst)?.value,
            };
            let want = brute_force_opt(&inst);
            if got != want {
                mismatches.push(format!(
                    "{class} instance {idx} (n={n}, m={m}): solver {got}, enumeration {want}"
                ));
            }
        }
    }
    c.require_all(&mismatches, "solver/enumeration mismatches", 2 * instances);

    for w in 1..=6u64 {
        let (i1, i2, i3) = gen_example_three(w)?;
        let mut optima = Vec::new();
        let mut greedy_ok = false;
        for inst in [&i1, &i2, &i3] {
            let opt = opt_general_exact(inst, 10_000_000)?.value;
            let enumerated = brute_force_opt(inst);
            optima.push((opt, enumerated));
            let greedy = run_greedy(inst).weight();
            // greedy <= (1/2 + 1/W) OPT, compared in integers
            greedy_ok |= 2 * w * greedy <= (w + 2) * opt;
        }
        let all_2w = optima.iter().all(|&(o, e)| o == 2 * w && e == 2 * w);
        c.require(all_2w, format!("W={w}: optima {optima:?} all equal 2W = {}", 2 * w));
        c.require(
            greedy_ok,
            format!("W={w}: greedy within (1/2 + 1/W) OPT on at least one instance"),
        );
    }
    Ok(())
}
