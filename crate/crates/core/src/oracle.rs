//! Offline optima: the denominators of every competitive ratio.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::instance::{check_assignment, Instance, ProblemClass};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimumKind {
    Exact,
    UpperBound,
    PlantedCertificate,
}

impl OptimumKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimumKind::Exact => "exact",
            OptimumKind::UpperBound => "upper_bound",
            OptimumKind::PlantedCertificate => "planted_certificate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfflineOptimum {
    pub value: u64,
    /// `(query, bidder)` pairs achieving `value`; absent for upper bounds.
    pub witness: Option<Vec<(usize, usize)>>,
    pub kind: OptimumKind,
}

impl OfflineOptimum {
    fn verified(instance: &Instance, value: u64, witness: Vec<(usize, usize)>, kind: OptimumKind) -> Result<Self> {
        match check_assignment(instance, &witness) {
            Ok(v) if v == value => Ok(OfflineOptimum {
                value,
                witness: Some(witness),
                kind,
            }),
            Ok(v) => Err(Error::InvalidWitness(format!("witness is worth {v}, claimed {value}"))),
            Err(violation) => Err(Error::InvalidWitness(format!("{violation}"))),
        }
    }
}

/// Maximum-cardinality matching by augmenting paths.
pub fn opt_obm(instance: &Instance) -> Result<OfflineOptimum> {
    require(instance, ProblemClass::Obm, "opt_obm")?;
    let m = instance.num_bidders();
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut seen = vec![0usize; m];
    for q in 0..instance.num_queries() {
        augment(instance, q, q + 1, &mut owner, &mut seen);
    }
    let mut witness: Vec<(usize, usize)> = owner
        .iter()
        .enumerate()
        .filter_map(|(j, q)| q.map(|q| (q, j)))
        .collect();
    witness.sort_unstable();
    let value = witness.len() as u64;
    OfflineOptimum::verified(instance, value, witness, OptimumKind::Exact)
}

// `seen[j] == stamp` marks goods already visited in the current search.
fn augment(instance: &Instance, q: usize, stamp: usize, owner: &mut [Option<usize>], seen: &mut [usize]) -> bool {
    for e in &instance.queries[q] {
        let j = e.bidder;
        if seen[j] == stamp {
            continue;
        }
        seen[j] = stamp;
        let free = match owner[j] {
            None => true,
            Some(other) => augment(instance, other, stamp, owner, seen),
        };
        if free {
            owner[j] = Some(q);
            return true;
        }
    }
    false
}

/// Maximum-weight b-matching (query capacity 1, bidder capacity `k_j`, edge
/// weight `b_j`) by successive shortest paths on the bipartite network.
pub fn opt_single_valued(instance: &Instance) -> Result<OfflineOptimum> {
    require(instance, ProblemClass::SingleValued, "opt_single_valued")?;
    let n = instance.num_queries();
    let m = instance.num_bidders();
    let source = n + m;
    let sink = source + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    for q in 0..n {
        net.add_edge(source, q, 1, 0);
    }
    let mut arcs = Vec::new();
    for (q, e) in instance.edges() {
        arcs.push((net.add_edge(q, n + e.bidder, 1, -(e.bid as i64)), q, e.bidder));
    }
    for j in 0..m {
        net.add_edge(n + j, sink, instance.initial_copies(j) as i64, 0);
    }
    let cost = net.min_cost_flow(source, sink);
    let witness: Vec<(usize, usize)> = arcs
        .into_iter()
        .filter(|&(arc, _, _)| net.cap[arc] == 0)
        .map(|(_, q, j)| (q, j))
        .collect();
    OfflineOptimum::verified(instance, (-cost) as u64, witness, OptimumKind::Exact)
}

struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
        }
    }

    /// Returns the index of the forward arc; its reverse is `index ^ 1`.
    fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let idx = self.to.len();
        self.adj[from].push(idx);
        self.to.push(to);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[to].push(idx + 1);
        self.to.push(from);
        self.cap.push(0);
        self.cost.push(-cost);
        idx
    }

    /// Augments along cheapest paths while they have negative cost; returns
    /// the total cost. The residual graph never has negative cycles, so
    /// Bellman-Ford suffices.
    fn min_cost_flow(&mut self, source: usize, sink: usize) -> i64 {
        let nodes = self.adj.len();
        let mut total = 0i64;
        loop {
            let mut dist = vec![i64::MAX; nodes];
            let mut via = vec![usize::MAX; nodes];
            dist[source] = 0;
            let mut changed = true;
            while changed {
                changed = false;
                for u in 0..nodes {
                    if dist[u] == i64::MAX {
                        continue;
                    }
                    for &arc in &self.adj[u] {
                        let v = self.to[arc];
                        if self.cap[arc] > 0 && dist[u] + self.cost[arc] < dist[v] {
                            dist[v] = dist[u] + self.cost[arc];
                            via[v] = arc;
                            changed = true;
                        }
                    }
                }
            }
            if dist[sink] == i64::MAX || dist[sink] >= 0 {
                return total;
            }
            let mut push = i64::MAX;
            let mut v = sink;
            while v != source {
                let arc = via[v];
                push = push.min(self.cap[arc]);
                v = self.to[arc ^ 1];
            }
            let mut v = sink;
            while v != source {
                let arc = via[v];
                self.cap[arc] -= push;
                self.cap[arc ^ 1] += push;
                v = self.to[arc ^ 1];
            }
            total += push * dist[sink];
        }
    }
}

/// `min(sum of budgets, sum over queries of the largest bid)`.
pub fn opt_general_bound(instance: &Instance) -> OfflineOptimum {
    let per_query: u64 = instance
        .queries
        .iter()
        .map(|es| es.iter().map(|e| e.bid).max().unwrap_or(0))
        .sum();
    OfflineOptimum {
        value: per_query.min(instance.total_budget()),
        witness: None,
        kind: OptimumKind::UpperBound,
    }
}

/// Exact optimum by depth-first branch and bound over query assignments.
/// Fails with [`Error::NodeLimitExceeded`] once `node_limit` nodes have been
/// expanded. Accepts any class; budgets are hard constraints.
pub fn opt_general_exact(instance: &Instance, node_limit: u64) -> Result<OfflineOptimum> {
    let n = instance.num_queries();
    let m = instance.num_bidders();
    // suffix[q][j]: total bid of bidder j on queries q..n
    let mut suffix = vec![vec![0u64; m]; n + 1];
    for q in (0..n).rev() {
        suffix[q] = suffix[q + 1].clone();
        for e in &instance.queries[q] {
            suffix[q][e.bidder] += e.bid;
        }
    }
    let mut search = Search {
        instance,
        suffix,
        node_limit,
        nodes: 0,
        leftover: instance.bidders.iter().map(|b| b.budget).collect(),
        current: Vec::new(),
        value: 0,
        best: 0,
        best_assignment: Vec::new(),
        ceiling: opt_general_bound(instance).value,
    };
    search.descend(0)?;
    let Search {
        best, best_assignment, ..
    } = search;
    OfflineOptimum::verified(instance, best, best_assignment, OptimumKind::Exact)
}

struct Search<'a> {
    instance: &'a Instance,
    suffix: Vec<Vec<u64>>,
    node_limit: u64,
    nodes: u64,
    leftover: Vec<u64>,
    current: Vec<(usize, usize)>,
    value: u64,
    best: u64,
    best_assignment: Vec<(usize, usize)>,
    ceiling: u64,
}

impl Search<'_> {
    fn bound(&self, q: usize) -> u64 {
        let by_query: u64 = self.instance.queries[q..]
            .iter()
            .map(|es| {
                es.iter()
                    .filter(|e| e.bid <= self.leftover[e.bidder])
                    .map(|e| e.bid)
                    .max()
                    .unwrap_or(0)
            })
            .sum();
        let by_bidder: u64 = self.leftover.iter().zip(&self.suffix[q]).map(|(&l, &s)| l.min(s)).sum();
        by_query.min(by_bidder)
    }

    /// Returns `Ok(true)` once the incumbent meets the global upper bound.
    fn descend(&mut self, q: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(Error::NodeLimitExceeded(self.node_limit));
        }
        if self.value > self.best {
            self.best = self.value;
            self.best_assignment = self.current.clone();
            if self.best == self.ceiling {
                return Ok(true);
            }
        }
        if q == self.instance.num_queries() || self.value + self.bound(q) <= self.best {
            return Ok(false);
        }
        let mut options: Vec<(usize, u64)> = self.instance.queries[q]
            .iter()
            .filter(|e| e.bid <= self.leftover[e.bidder])
            .map(|e| (e.bidder, e.bid))
            .collect();
        options.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (j, bid) in options {
            self.leftover[j] -= bid;
            self.value += bid;
            self.current.push((q, j));
            let done = self.descend(q + 1)?;
            self.current.pop();
            self.value -= bid;
            self.leftover[j] += bid;
            if done {
                return Ok(true);
            }
        }
        self.descend(q + 1)
    }
}

/// The planted assignment, when it is feasible and spends every budget.
pub fn planted_certificate(instance: &Instance) -> Option<OfflineOptimum> {
    let planted = instance.planted.as_ref()?;
    let value = check_assignment(instance, &planted.assignment).ok()?;
    (value == instance.total_budget()).then(|| OfflineOptimum {
        value,
        witness: Some(planted.assignment.clone()),
        kind: OptimumKind::PlantedCertificate,
    })
}

/// Best available optimum: a planted certificate, then the class's exact
/// solver, then the upper bound when branch and bound runs out of nodes.
pub fn best_optimum(instance: &Instance, node_limit: u64) -> Result<OfflineOptimum> {
    if let Some(cert) = planted_certificate(instance) {
        return Ok(cert);
    }
    match instance.class {
        ProblemClass::Obm => opt_obm(instance),
        ProblemClass::SingleValued => opt_single_valued(instance),
        ProblemClass::General => match opt_general_exact(instance, node_limit) {
            Err(Error::NodeLimitExceeded(_)) => Ok(opt_general_bound(instance)),
            other => other,
        },
    }
}

fn require(instance: &Instance, expected: ProblemClass, engine: &'static str) -> Result<()> {
    if instance.class != expected {
        return Err(Error::ClassMismatch {
            engine,
            expected,
            found: instance.class,
        });
    }
    Ok(())
}
