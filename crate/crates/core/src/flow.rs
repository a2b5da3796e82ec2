//! Four-layer flow network (source, reviewers, papers, sink) with
//! incremental reviewer-to-paper edge insertion.
//!
//! Max-flow uses Dinic's algorithm and resumes from the current residual
//! state, so inserting edges and re-querying only pays for the new augmenting
//! paths. Selection among maximum flows uses a primal-dual min-cost flow on
//! negated edge costs, i.e. it returns a maximum flow of maximum total cost.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::instance::SimilarityMatrix;

const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    orig: i64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n_reviewers: usize,
    papers: Vec<usize>,
    slot_of: HashMap<usize, usize>,
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    /// (reviewer, paper, forward arc index) in insertion order.
    inserted: Vec<(usize, usize, usize)>,
    pair_arc: HashMap<(usize, usize), usize>,
    flow_value: i64,
}

impl FlowNetwork {
    /// Network with per-reviewer capacities and a sink capacity for each
    /// listed paper. `papers` holds global paper indices.
    pub fn new(reviewer_capacity: &[usize], papers: &[usize], paper_capacity: &[usize]) -> Result<Self> {
        if papers.is_empty() {
            return Err(Error::InvalidInput("flow network needs at least one paper".into()));
        }
        if papers.len() != paper_capacity.len() {
            return Err(Error::Dimension(format!(
                "{} papers but {} sink capacities",
                papers.len(),
                paper_capacity.len()
            )));
        }
        let n = reviewer_capacity.len();
        let mut slot_of = HashMap::with_capacity(papers.len());
        for (slot, &j) in papers.iter().enumerate() {
            if slot_of.insert(j, slot).is_some() {
                return Err(Error::InvalidInput(format!("paper {j} listed twice")));
            }
        }
        let mut net = Self {
            n_reviewers: n,
            papers: papers.to_vec(),
            slot_of,
            arcs: Vec::new(),
            adj: vec![Vec::new(); n + papers.len() + 2],
            inserted: Vec::new(),
            pair_arc: HashMap::new(),
            flow_value: 0,
        };
        for (i, &cap) in reviewer_capacity.iter().enumerate() {
            net.add_arc(net.source(), net.reviewer_node(i), cap as i64, 0.0);
        }
        for (slot, &cap) in paper_capacity.iter().enumerate() {
            net.add_arc(net.n_reviewers + 1 + slot, net.sink(), cap as i64, 0.0);
        }
        Ok(net)
    }

    /// Network where every paper in `papers` can take `kappa` units.
    pub fn layered(kappa: usize, papers: &[usize], capacities: &[usize]) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidInput("kappa must be at least 1".into()));
        }
        Self::new(capacities, papers, &vec![kappa; papers.len()])
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let idx = self.arcs.len();
        self.arcs.push(Arc { to, cap, orig: cap, cost });
        self.arcs.push(Arc { to: from, cap: 0, orig: 0, cost: -cost });
        self.adj[from].push(idx);
        self.adj[to].push(idx + 1);
        idx
    }

    fn source(&self) -> usize {
        0
    }

    fn sink(&self) -> usize {
        self.adj.len() - 1
    }

    fn reviewer_node(&self, i: usize) -> usize {
        1 + i
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Number of directed (forward) edges.
    pub fn edge_count(&self) -> usize {
        self.arcs.len() / 2
    }

    pub fn n_reviewers(&self) -> usize {
        self.n_reviewers
    }

    pub fn papers(&self) -> &[usize] {
        &self.papers
    }

    pub fn reviewer_capacity(&self, i: usize) -> usize {
        self.arcs[2 * i].orig as usize
    }

    pub fn paper_capacity(&self, paper: usize) -> Option<usize> {
        self.slot_of
            .get(&paper)
            .map(|&slot| self.arcs[2 * (self.n_reviewers + slot)].orig as usize)
    }

    /// Sum of sink capacities: the flow value every paper being saturated
    /// would need.
    pub fn target(&self) -> usize {
        (0..self.papers.len())
            .map(|slot| self.arcs[2 * (self.n_reviewers + slot)].orig as usize)
            .sum()
    }

    pub fn has_edge(&self, reviewer: usize, paper: usize) -> bool {
        self.pair_arc.contains_key(&(reviewer, paper))
    }

    /// Inserted reviewer-paper edges as (reviewer, paper, cost), in insertion
    /// order.
    pub fn inserted_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.inserted
            .iter()
            .map(move |&(i, j, a)| (i, j, self.arcs[a].cost))
    }

    /// Adds a unit-capacity edge from `reviewer` to `paper`. Existing flow is
    /// kept.
    pub fn insert_edge(&mut self, reviewer: usize, paper: usize, cost: f64) -> Result<()> {
        if reviewer >= self.n_reviewers {
            return Err(Error::InvalidInput(format!("reviewer {reviewer} out of range")));
        }
        let slot = *self
            .slot_of
            .get(&paper)
            .ok_or_else(|| Error::InvalidInput(format!("paper {paper} not in this network")))?;
        if self.pair_arc.contains_key(&(reviewer, paper)) {
            return Err(Error::DuplicateEdge { reviewer, paper });
        }
        let a = self.add_arc(self.reviewer_node(reviewer), self.n_reviewers + 1 + slot, 1, cost);
        self.pair_arc.insert((reviewer, paper), a);
        self.inserted.push((reviewer, paper, a));
        Ok(())
    }

    /// Copy of the network with every inserted edge re-costed and zero flow.
    pub fn recosted(&self, mut cost: impl FnMut(usize, usize, f64) -> f64) -> FlowNetwork {
        let mut net = self.clone();
        for &(i, j, a) in &self.inserted {
            let c = cost(i, j, self.arcs[a].cost);
            net.arcs[a].cost = c;
            net.arcs[a + 1].cost = -c;
        }
        net.reset_flow();
        net
    }

    fn reset_flow(&mut self) {
        for a in &mut self.arcs {
            a.cap = a.orig;
        }
        self.flow_value = 0;
    }

    /// Value of a maximum integral flow. Continues from the current flow and
    /// leaves the witness flow in the network.
    pub fn max_flow_value(&mut self) -> usize {
        let (s, t) = (self.source(), self.sink());
        let mut level = vec![-1i32; self.adj.len()];
        let mut it = vec![0usize; self.adj.len()];
        while self.bfs_levels(&mut level, |_| true) {
            it.iter_mut().for_each(|x| *x = 0);
            loop {
                let pushed = self.dfs_augment(s, t, i64::MAX, &level, &mut it, &|_| true);
                if pushed == 0 {
                    break;
                }
                self.flow_value += pushed;
            }
        }
        self.flow_value as usize
    }

    fn bfs_levels(&self, level: &mut [i32], admissible: impl Fn(usize) -> bool) -> bool {
        level.iter_mut().for_each(|l| *l = -1);
        let s = self.source();
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if arc.cap > 0 && level[arc.to] < 0 && admissible(a) {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level[self.sink()] >= 0
    }

    fn dfs_augment(
        &mut self,
        u: usize,
        t: usize,
        limit: i64,
        level: &[i32],
        it: &mut [usize],
        admissible: &dyn Fn(usize) -> bool,
    ) -> i64 {
        if u == t {
            return limit;
        }
        while it[u] < self.adj[u].len() {
            let a = self.adj[u][it[u]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > 0 && level[to] == level[u] + 1 && admissible(a) {
                let pushed = self.dfs_augment(to, t, limit.min(cap), level, it, admissible);
                if pushed > 0 {
                    self.arcs[a].cap -= pushed;
                    self.arcs[a ^ 1].cap += pushed;
                    return pushed;
                }
            }
            it[u] += 1;
        }
        0
    }

    /// Among all maximum flows, finds one maximizing the total cost of the
    /// reviewer-paper edges it uses, and returns those edges as
    /// (reviewer, paper) pairs sorted by paper then reviewer.
    ///
    /// The result is deterministic for a fixed insertion order.
    pub fn select_max_cost_max_flow(&mut self) -> Vec<(usize, usize)> {
        self.reset_flow();
        self.min_cost_flow_negated();
        self.flow_pairs()
    }

    /// Max-cost max-flow followed by [`FlowNetwork::level_ties`].
    pub fn select_leveled_max_cost_max_flow(&mut self) -> Vec<(usize, usize)> {
        let pairs = self.select_max_cost_max_flow();
        self.level_ties(pairs)
    }

    /// Cost-neutral reviewer exchanges between two papers that raise the
    /// smaller of their two cost sums, applied until none is left. Each pass
    /// takes the first exchange found scanning papers by ascending sum, then
    /// index. Total cost, degrees and the edge set are unchanged, so a
    /// max-cost max-flow stays one.
    pub fn level_ties(&self, pairs: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
        const TIE: f64 = 1e-12;
        let cost = |i: usize, j: usize| self.arcs[self.pair_arc[&(i, j)]].cost;
        let k = self.papers.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for &(i, j) in &pairs {
            members[self.slot_of[&j]].push(i);
        }
        let sum = |slot: usize, rs: &[usize]| -> f64 {
            let mut terms: Vec<f64> = rs.iter().map(|&i| cost(i, self.papers[slot])).collect();
            terms.sort_by(f64::total_cmp);
            terms.iter().sum()
        };
        'outer: loop {
            let sums: Vec<f64> = (0..k).map(|a| sum(a, &members[a])).collect();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(self.papers[a].cmp(&self.papers[b])));
            for (pos, &a) in order.iter().enumerate() {
                let pa = self.papers[a];
                for &b in &order[pos + 1..] {
                    if sums[b] <= sums[a] + TIE {
                        continue;
                    }
                    let pb = self.papers[b];
                    for (x, &i) in members[a].iter().enumerate() {
                        if members[b].contains(&i) || !self.has_edge(i, pb) {
                            continue;
                        }
                        for (y, &i2) in members[b].iter().enumerate() {
                            if members[a].contains(&i2) || !self.has_edge(i2, pa) {
                                continue;
                            }
                            let before = cost(i, pa) + cost(i2, pb);
                            let after = cost(i2, pa) + cost(i, pb);
                            if (before - after).abs() > TIE {
                                continue;
                            }
                            let na = sums[a] - cost(i, pa) + cost(i2, pa);
                            let nb = sums[b] - cost(i2, pb) + cost(i, pb);
                            if na.min(nb) > sums[a] + TIE {
                                members[a][x] = i2;
                                members[b][y] = i;
                                continue 'outer;
                            }
                        }
                    }
                }
            }
            break;
        }
        let mut out: Vec<(usize, usize)> = members
            .iter()
            .enumerate()
            .flat_map(|(slot, rs)| rs.iter().map(move |&i| (i, self.papers[slot])))
            .collect();
        out.sort_by_key(|&(i, j)| (j, i));
        out
    }

    /// Reviewer-paper edges carrying flow in the current state.
    pub fn flow_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .inserted
            .iter()
            .filter(|&&(_, _, a)| self.arcs[a].cap == 0)
            .map(|&(i, j, _)| (i, j))
            .collect();
        pairs.sort_by_key(|&(i, j)| (j, i));
        pairs
    }

    /// Primal-dual min-cost max-flow where the working cost of each arc is the
    /// negation of its stored cost.
    fn min_cost_flow_negated(&mut self) {
        let nodes = self.adj.len();
        let (s, t) = (self.source(), self.sink());
        let work = |arc: &Arc| -arc.cost;

        // initial potentials: shortest distances on the zero-flow DAG
        let mut pot = vec![f64::INFINITY; nodes];
        pot[s] = 0.0;
        for i in 0..self.n_reviewers {
            if self.arcs[2 * i].cap > 0 {
                pot[self.reviewer_node(i)] = 0.0;
            }
        }
        for &(i, _, a) in &self.inserted {
            let u = self.reviewer_node(i);
            let v = self.arcs[a].to;
            if pot[u].is_finite() {
                pot[v] = pot[v].min(pot[u] + work(&self.arcs[a]));
            }
        }
        for slot in 0..self.papers.len() {
            let v = self.n_reviewers + 1 + slot;
            if pot[v].is_finite() && self.arcs[2 * (self.n_reviewers + slot)].cap > 0 {
                pot[t] = pot[t].min(pot[v]);
            }
        }
        for p in &mut pot {
            if !p.is_finite() {
                *p = 0.0;
            }
        }

        let mut dist = vec![f64::INFINITY; nodes];
        let mut done = vec![false; nodes];
        let mut level = vec![-1i32; nodes];
        let mut it = vec![0usize; nodes];
        loop {
            // Dijkstra on reduced costs (O(V^2); the graph is small and dense)
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
            done.iter_mut().for_each(|d| *d = false);
            dist[s] = 0.0;
            loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..nodes {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                for &a in &self.adj[u] {
                    let arc = &self.arcs[a];
                    if arc.cap <= 0 {
                        continue;
                    }
                    let rc = (work(arc) + pot[u] - pot[arc.to]).max(0.0);
                    let nd = dist[u] + rc;
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            for v in 0..nodes {
                if dist[v].is_finite() {
                    pot[v] += dist[v];
                }
            }
            // blocking flows along zero-reduced-cost arcs
            let admissible = {
                let arcs = &self.arcs;
                let pot = &pot;
                let tails = self.arc_tails();
                move |a: usize| {
                    let arc = &arcs[a];
                    (work(arc) + pot[tails[a]] - pot[arc.to]).abs() <= COST_EPS
                }
            };
            let admissible_set: Vec<bool> = (0..self.arcs.len()).map(admissible).collect();
            let mut progressed = false;
            while self.bfs_levels(&mut level, |a| admissible_set[a]) {
                it.iter_mut().for_each(|x| *x = 0);
                let mut any = false;
                loop {
                    let pushed =
                        self.dfs_augment(s, t, i64::MAX, &level, &mut it, &|a| admissible_set[a]);
                    if pushed == 0 {
                        break;
                    }
                    any = true;
                    self.flow_value += pushed;
                }
                if !any {
                    break;
                }
                progressed = true;
            }
            if !progressed {
                // numerical corner: no admissible path despite a finite
                // distance; fall back to a single shortest-path augmentation
                if !self.augment_shortest_path(&pot) {
                    break;
                }
            }
        }
    }

    fn arc_tails(&self) -> Vec<usize> {
        let mut tails = vec![0; self.arcs.len()];
        for (u, list) in self.adj.iter().enumerate() {
            for &a in list {
                tails[a] = u;
            }
        }
        tails
    }

    fn augment_shortest_path(&mut self, pot: &[f64]) -> bool {
        let nodes = self.adj.len();
        let (s, t) = (self.source(), self.sink());
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[s] = 0.0;
        while let Some(u) = (0..nodes)
            .filter(|&v| !done[v] && dist[v].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
        {
            done[u] = true;
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if arc.cap <= 0 {
                    continue;
                }
                let nd = dist[u] + (-arc.cost + pot[u] - pot[arc.to]).max(0.0);
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    prev[arc.to] = a;
                }
            }
        }
        if !dist[t].is_finite() {
            return false;
        }
        let mut v = t;
        while v != s {
            let a = prev[v];
            self.arcs[a].cap -= 1;
            self.arcs[a ^ 1].cap += 1;
            v = self.arcs[a ^ 1].to;
        }
        self.flow_value += 1;
        true
    }

    /// Plain-text edge list: one `from to capacity flow cost` line per edge.
    pub fn to_edge_list(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FlowNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |v: usize| -> String {
            if v == 0 {
                "source".into()
            } else if v <= self.n_reviewers {
                format!("r{}", v - 1)
            } else if v == self.adj.len() - 1 {
                "sink".into()
            } else {
                format!("p{}", self.papers[v - self.n_reviewers - 1])
            }
        };
        let tails = self.arc_tails();
        for a in (0..self.arcs.len()).step_by(2) {
            let arc = &self.arcs[a];
            writeln!(
                f,
                "{} {} {} {} {}",
                name(tails[a]),
                name(arc.to),
                arc.orig,
                arc.orig - arc.cap,
                arc.cost
            )?;
        }
        Ok(())
    }
}

/// Builds the layered network for `kappa` reviewers per paper over `papers`.
pub fn build_network(
    kappa: usize,
    papers: &[usize],
    s: &SimilarityMatrix,
    capacities: &[usize],
) -> Result<FlowNetwork> {
    if capacities.len() != s.n_reviewers() {
        return Err(Error::Dimension(format!(
            "{} capacities for {} reviewers",
            capacities.len(),
            s.n_reviewers()
        )));
    }
    if let Some(&j) = papers.iter().find(|&&j| j >= s.n_papers()) {
        return Err(Error::Dimension(format!("paper {j} out of range")));
    }
    FlowNetwork::layered(kappa, papers, capacities)
}
