//! Event-driven simulation of the n-particle system.
//!
//! Every node i reads its own stream N_i and every directed edge (i, j),
//! including the diagonal, reads N_ij. Node candidates are merged through a
//! heap. Edge streams are advanced lazily: an edge only has to be brought up
//! to date before something reads it (a candidate at node i reads row i) or
//! before one of its endpoints changes (a jump of node i changes the rates of
//! row i and column i). Between those moments its rate is frozen, so
//! processing its events late gives exactly the time-ordered merge.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::path::Path;
use crate::prm::{initial_state, Cursor, StreamId, StreamShape};

/// Default cap on the predicted number of candidate events per run.
pub const DEFAULT_EVENT_BUDGET: f64 = 5e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
    /// β(n) for this system.
    pub beta: f64,
    /// Edge-stream ceiling factor shared by the whole experiment family.
    pub beta_max: f64,
    pub log_edges: bool,
    pub event_budget: f64,
}

impl SimConfig {
    pub fn new(n: usize, seed: u64, beta: f64) -> Self {
        SimConfig { n, seed, beta, beta_max: beta, log_edges: false, event_budget: DEFAULT_EVENT_BUDGET }
    }

    pub fn beta_max(mut self, beta_max: f64) -> Self {
        self.beta_max = beta_max;
        self
    }

    pub fn log_edges(mut self, on: bool) -> Self {
        self.log_edges = on;
        self
    }

    pub fn budget(mut self, budget: f64) -> Self {
        self.event_budget = budget;
        self
    }
}

/// Expected candidate count n·Σρ(y)Λ_y·T + n²·Σρ(y)β_max Λ̃_y·T.
pub fn predicted_candidates(spec: &ModelSpec, n: usize, beta_max: f64) -> f64 {
    let t = spec.horizon();
    let n = n as f64;
    n * StreamShape::node(spec).total_rate() * t + n * n * StreamShape::edge(spec, beta_max).total_rate() * t
}

/// Refuses configurations whose predicted candidate count exceeds the budget.
pub fn check_budget(spec: &ModelSpec, n: usize, beta_max: f64, budget: f64) -> Result<()> {
    let predicted = predicted_candidates(spec, n, beta_max);
    if predicted > budget {
        Err(Error::Budget { predicted, budget })
    } else {
        Ok(())
    }
}

/// Jump records; initial states are kept separately.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub node_x0: Vec<i64>,
    pub node_jumps: Vec<Vec<(f64, i64)>>,
    /// Present only when edge logging is on; row-major over (i, j).
    pub edge_x0: Option<Vec<i64>>,
    pub edge_jumps: Vec<(usize, usize, f64, i64)>,
}

impl TrajectoryLog {
    pub fn n(&self) -> usize {
        self.node_x0.len()
    }

    pub fn node_path(&self, i: usize) -> Path {
        Path { x0: self.node_x0[i], jumps: self.node_jumps[i].clone() }
    }

    /// Path of edge (i, j); requires edge logging.
    pub fn edge_path(&self, i: usize, j: usize) -> Option<Path> {
        let n = self.n();
        let x0 = self.edge_x0.as_ref()?[i * n + j];
        let jumps = self.edge_jumps.iter().filter(|e| e.0 == i && e.1 == j).map(|e| (e.2, e.3)).collect();
        Some(Path { x0, jumps })
    }

    /// CSV with columns entity_kind,i,j,time,new_state; initial states appear at time 0.
    /// Nodes have j empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("entity_kind,i,j,time,new_state\n");
        for (i, &x) in self.node_x0.iter().enumerate() {
            let _ = writeln!(s, "node,{i},,0,{x}");
        }
        if let Some(e0) = &self.edge_x0 {
            let n = self.n();
            for (k, &xi) in e0.iter().enumerate() {
                let _ = writeln!(s, "edge,{},{},0,{xi}", k / n, k % n);
            }
        }
        let mut rows: Vec<(f64, u8, usize, usize, i64)> = Vec::new();
        for (i, js) in self.node_jumps.iter().enumerate() {
            rows.extend(js.iter().map(|&(t, x)| (t, 0, i, 0, x)));
        }
        rows.extend(self.edge_jumps.iter().map(|&(i, j, t, xi)| (t, 1, i, j, xi)));
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
        for (t, kind, i, j, x) in rows {
            if kind == 0 {
                let _ = writeln!(s, "node,{i},,{t},{x}");
            } else {
                let _ = writeln!(s, "edge,{i},{j},{t},{x}");
            }
        }
        s
    }

    /// μ^n(t) over the node-state indices of `spec`.
    pub fn global_empirical_at(&self, spec: &ModelSpec, t: f64) -> Vec<f64> {
        let nodes = &spec.spaces().node;
        let mut p = vec![0.0; nodes.len()];
        let w = 1.0 / self.n() as f64;
        for i in 0..self.n() {
            let k = self.node_jumps[i].partition_point(|&(s, _)| s <= t);
            let x = if k == 0 { self.node_x0[i] } else { self.node_jumps[i][k - 1].1 };
            p[nodes.index_of(x).expect("logged state in space")] += w;
        }
        p
    }
}

/// Snapshot rows: time followed by one column per state.
pub fn laws_to_csv(states: &[i64], times: &[f64], laws: &[Vec<f64>]) -> String {
    let mut s = String::from("time");
    for x in states {
        let _ = write!(s, ",p_{x}");
    }
    s.push('\n');
    for (t, p) in times.iter().zip(laws) {
        let _ = write!(s, "{t}");
        for v in p {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    s: f64,
    i: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // min-heap on (s, i)
    fn cmp(&self, other: &Self) -> Ordering {
        other.s.total_cmp(&self.s).then(other.i.cmp(&self.i))
    }
}

/// Per-edge stream state, structure-of-arrays over the n² directed edges.
#[derive(Debug, Clone)]
struct Edges {
    xi: Vec<u8>,
    key: Vec<u64>,
    next_t: Vec<f64>,
    ord: Vec<u32>,
}

/// The n-particle system X ∈ S_x^n, Ξ ∈ S_ξ^{n×n} at time `t`.
#[derive(Debug, Clone)]
pub struct NSystem {
    spec: ModelSpec,
    cfg: SimConfig,
    t: f64,
    x: Vec<u8>,
    edges: Edges,
    node_shape: StreamShape,
    edge_shape: StreamShape,
    /// β·Γ̃ indexed ((x·|S_x| + x̃)·|S_ξ| + ξ)·|Y| + y.
    edge_rate: Vec<f64>,
    node_key: Vec<u64>,
    node_cursor: Vec<Cursor>,
    node_next: Vec<(usize, f64)>,
    heap: BinaryHeap<Pending>,
    log: TrajectoryLog,
    accepted_nodes: u64,
    accepted_edges: u64,
}

impl NSystem {
    /// Draws X_i(0) ~ μ(0), Ξ_ij(0) ~ θ(0) from the streams' reserved counters.
    pub fn init(spec: &ModelSpec, cfg: SimConfig) -> Result<Self> {
        let n = cfg.n;
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let (_, nx, ne) = spec.dims();
        if nx > 256 || ne > 256 {
            return Err(Error::InvalidArgument("state spaces above 256 states are not supported".into()));
        }
        if !(cfg.beta >= 0.0 && cfg.beta <= cfg.beta_max && cfg.beta_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("need 0 <= beta ({}) <= beta_max ({})", cfg.beta, cfg.beta_max)));
        }
        check_budget(spec, n, cfg.beta_max, cfg.event_budget)?;
        let node_shape = StreamShape::node(spec);
        let edge_shape = StreamShape::edge(spec, cfg.beta_max);

        let node_key: Vec<u64> = (0..n).map(|i| StreamId::Node(i).key(cfg.seed)).collect();
        let x: Vec<u8> = node_key.iter().map(|&k| initial_state(k, spec.mu0()) as u8).collect();
        let mut edges = Edges {
            xi: Vec::with_capacity(n * n),
            key: Vec::with_capacity(n * n),
            next_t: Vec::with_capacity(n * n),
            ord: vec![1; n * n],
        };
        let live = edge_shape.total_rate() > 0.0;
        for i in 0..n {
            for j in 0..n {
                let k = StreamId::Edge(i, j).key(cfg.seed);
                edges.key.push(k);
                edges.xi.push(initial_state(k, spec.theta0()) as u8);
                edges.next_t.push(if live { edge_shape.gap(k, 0) } else { f64::INFINITY });
            }
        }

        let mut node_cursor = vec![Cursor::default(); n];
        let mut node_next = vec![(0, f64::INFINITY); n];
        let mut heap = BinaryHeap::with_capacity(n);
        for i in 0..n {
            if let Some((s, y, z)) = node_cursor[i].advance(&node_shape, node_key[i]) {
                node_next[i] = (y, z);
                heap.push(Pending { s, i });
            }
        }
        let m = spec.dims().0;
        let mut edge_rate = Vec::with_capacity(nx * nx * ne * m);
        for x in 0..nx {
            for xt in 0..nx {
                for e in 0..ne {
                    edge_rate.extend((0..m).map(|y| cfg.beta * spec.gamma_tilde(y, e, x, xt)));
                }
            }
        }
        let nodes = &spec.spaces().node;
        let log = TrajectoryLog {
            node_x0: x.iter().map(|&k| nodes.value(k as usize)).collect(),
            node_jumps: vec![Vec::new(); n],
            edge_x0: cfg.log_edges.then(|| edges.xi.iter().map(|&k| spec.spaces().edge.value(k as usize)).collect()),
            edge_jumps: Vec::new(),
        };
        Ok(NSystem {
            spec: spec.clone(),
            cfg,
            t: 0.0,
            x,
            edges,
            node_shape,
            edge_shape,
            edge_rate,
            node_key,
            node_cursor,
            node_next,
            heap,
            log,
            accepted_nodes: 0,
            accepted_edges: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Node state indices.
    pub fn node_states(&self) -> &[u8] {
        &self.x
    }

    pub fn node_value(&self, i: usize) -> i64 {
        self.spec.spaces().node.value(self.x[i] as usize)
    }

    /// Edge state index of (i, j); only current after a completed `run_until`.
    pub fn edge_state(&self, i: usize, j: usize) -> u8 {
        self.edges.xi[i * self.cfg.n + j]
    }

    pub fn log(&self) -> &TrajectoryLog {
        &self.log
    }

    pub fn into_log(self) -> TrajectoryLog {
        self.log
    }

    /// (accepted node jumps, accepted edge jumps) so far.
    pub fn accepted(&self) -> (u64, u64) {
        (self.accepted_nodes, self.accepted_edges)
    }

    /// A_i(y, x) = Σ_j γ(y, x, X_j, Ξ_ij).
    pub fn aggregate(&self, i: usize, y: usize, x: usize) -> f64 {
        let n = self.cfg.n;
        let row = &self.edges.xi[i * n..(i + 1) * n];
        let base = self.spec.gamma_index(y, x, 0, 0);
        let ne = self.spec.spaces().edge.len();
        let g = &self.spec.gamma_table()[base..];
        self.x.iter().zip(row).map(|(&xj, &e)| g[xj as usize * ne + e as usize]).sum()
    }

    /// ν_i^n = (1/n) Σ_j δ_(X_j, Ξ_ij), flattened as x̃·|S_ξ| + ξ̃.
    pub fn local_empirical(&self, i: usize) -> Vec<f64> {
        let n = self.cfg.n;
        let (_, nx, ne) = self.spec.dims();
        let mut counts = vec![0usize; nx * ne];
        for j in 0..n {
            counts[self.x[j] as usize * ne + self.edges.xi[i * n + j] as usize] += 1;
        }
        counts.into_iter().map(|c| c as f64 / n as f64).collect()
    }

    /// μ^n = (1/n) Σ_i δ_{X_i}.
    pub fn global_empirical(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.spec.spaces().node.len()];
        for &x in &self.x {
            counts[x as usize] += 1;
        }
        counts.into_iter().map(|c| c as f64 / self.cfg.n as f64).collect()
    }

    /// Processes every candidate with s ≤ `until`.
    pub fn run_until(&mut self, until: f64) -> Result<()> {
        if until < self.t || until > self.spec.horizon() {
            return Err(Error::OutOfRange { t0: self.t, t1: until, horizon: self.spec.horizon() });
        }
        let n = self.cfg.n;
        while let Some(&Pending { s, i }) = self.heap.peek() {
            if s > until {
                break;
            }
            self.heap.pop();
            let (y, z) = self.node_next[i];
            // left limit: edges of row i see every event strictly before s
            self.sync_row(i, s, false)?;
            let xi = self.x[i] as usize;
            let rate = self.aggregate(i, y, xi) / n as f64;
            if z <= rate {
                self.sync_row(i, s, true)?;
                self.sync_col(i, s, true)?;
                let Some(to) = self.spec.node_target(y, xi) else {
                    return Err(Error::Closure {
                        entity: format!("node {i}"),
                        from: self.spec.spaces().node.value(xi),
                        mark: self.spec.spaces().marks.value(y),
                        time: s,
                    });
                };
                self.x[i] = to as u8;
                self.log.node_jumps[i].push((s, self.spec.spaces().node.value(to)));
                self.accepted_nodes += 1;
            }
            if let Some((s2, y2, z2)) = self.node_cursor[i].advance(&self.node_shape, self.node_key[i]) {
                self.node_next[i] = (y2, z2);
                self.heap.push(Pending { s: s2, i });
            }
        }
        for i in 0..n {
            self.sync_row(i, until, true)?;
        }
        if self.cfg.log_edges {
            // lazy synchronization records edge jumps out of time order
            self.log.edge_jumps.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        }
        self.t = until;
        Ok(())
    }

    /// Runs to the horizon.
    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.spec.horizon())
    }

    /// Runs through `grid` (increasing, within [t, T]) and returns μ^n at each point.
    pub fn run_snapshots(&mut self, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        grid.iter()
            .map(|&t| {
                self.run_until(t)?;
                Ok(self.global_empirical())
            })
            .collect()
    }

    fn sync_row(&mut self, i: usize, bound: f64, inclusive: bool) -> Result<()> {
        let n = self.cfg.n;
        let xi_ = self.x[i] as usize;
        for j in 0..n {
            self.sync_edge(i, j, xi_, self.x[j] as usize, bound, inclusive)?;
        }
        Ok(())
    }

    fn sync_col(&mut self, j: usize, bound: f64, inclusive: bool) -> Result<()> {
        let n = self.cfg.n;
        let xj = self.x[j] as usize;
        for i in 0..n {
            self.sync_edge(i, j, self.x[i] as usize, xj, bound, inclusive)?;
        }
        Ok(())
    }

    #[inline]
    fn sync_edge(&mut self, i: usize, j: usize, xi_: usize, xj: usize, bound: f64, inclusive: bool) -> Result<()> {
        let e = i * self.cfg.n + j;
        let mut t = self.edges.next_t[e];
        if !(t < bound || (inclusive && t == bound)) {
            return Ok(());
        }
        // split borrows so the loop below keeps everything in registers
        let NSystem { spec, cfg, edges, edge_shape, edge_rate, log, accepted_edges, .. } = self;
        let (m, nx, ne) = spec.dims();
        let rates = &edge_rate[(xi_ * nx + xj) * ne * m..(xi_ * nx + xj + 1) * ne * m];
        let key = edges.key[e];
        let mut ord = edges.ord[e] as u64;
        let mut state = edges.xi[e] as usize;
        loop {
            let (y, z) = edge_shape.mark_level(key, ord - 1);
            if z <= rates[state * m + y] {
                let Some(to) = spec.edge_target(y, state) else {
                    return Err(Error::Closure {
                        entity: format!("edge ({i},{j})"),
                        from: spec.spaces().edge.value(state),
                        mark: spec.spaces().marks.value(y),
                        time: t,
                    });
                };
                state = to;
                *accepted_edges += 1;
                if cfg.log_edges {
                    log.edge_jumps.push((i, j, t, spec.spaces().edge.value(to)));
                }
            }
            t += edge_shape.gap(key, ord);
            ord += 1;
            if !(t < bound || (inclusive && t == bound)) {
                break;
            }
        }
        edges.next_t[e] = t;
        edges.ord[e] = u32::try_from(ord).map_err(|_| Error::Numerical("edge stream ordinal overflow".into()))?;
        edges.xi[e] = state as u8;
        Ok(())
    }
}

/// Initializes and runs to T.
pub fn simulate(spec: &ModelSpec, cfg: SimConfig) -> Result<NSystem> {
    let mut sys = NSystem::init(spec, cfg)?;
    sys.run()?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, StateSpace, StateSpaces};

    fn spaces() -> StateSpaces {
        StateSpaces::new(StateSpace::range(0, 2), StateSpace::range(0, 1), StateSpace::new(vec![-1, 1]))
    }

    fn busy() -> ModelSpec {
        ModelBuilder::new(spaces(), vec![1.0, 0.7])
            .node_rates(|y, x, xt, xi| 0.2 + 0.1 * (x + xt) as f64 + 0.3 * xi as f64 + 0.05 * y as f64)
            .edge_rates(|y, xi, x, xt| 0.3 + 0.2 * (x * xt) as f64 + 0.1 * (xi + y) as f64)
            .mu0(vec![0.3, 0.4, 0.3])
            .theta0(vec![0.5, 0.5])
            .horizon(2.0)
            .build()
            .unwrap()
    }

    #[test]
    fn zero_rates_freeze_everything() {
        let spec = ModelBuilder::new(spaces(), vec![1.0, 1.0]).mu0(vec![0.2, 0.5, 0.3]).build().unwrap();
        let sys = simulate(&spec, SimConfig::new(20, 1, 3.0)).unwrap();
        assert!(sys.log().node_jumps.iter().all(Vec::is_empty));
        assert_eq!(sys.accepted(), (0, 0));
    }

    #[test]
    fn point_mass_init_and_single_particle() {
        let spec = ModelBuilder::new(spaces(), vec![1.0, 1.0])
            .node_rates(|y, x, xt, xi| 0.1 * (1 + y + 2 + x + xt + xi) as f64)
            .build()
            .unwrap();
        let sys = NSystem::init(&spec, SimConfig::new(5, 9, 1.0)).unwrap();
        assert!(sys.node_states().iter().all(|&x| x == 0));
        let one = NSystem::init(&spec, SimConfig::new(1, 9, 1.0)).unwrap();
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(one.aggregate(0, y, x), spec.gamma(y, x, 0, 0));
            }
        }
    }

    #[test]
    fn deterministic_replay() {
        let spec = busy();
        let cfg = SimConfig::new(30, 17, 2.0).log_edges(true);
        let a = simulate(&spec, cfg).unwrap();
        let b = simulate(&spec, cfg).unwrap();
        assert_eq!(a.log(), b.log());
        assert_eq!(a.log().to_csv(), b.log().to_csv());
        assert!(a.accepted().0 > 0 && a.accepted().1 > 0);
    }

    #[test]
    fn stepping_matches_single_run() {
        let spec = busy();
        let cfg = SimConfig::new(25, 4, 3.0).log_edges(true);
        let a = simulate(&spec, cfg).unwrap();
        let mut b = NSystem::init(&spec, cfg).unwrap();
        for k in 1..=20 {
            b.run_until(0.1 * k as f64).unwrap();
        }
        assert_eq!(a.log(), b.log());
        assert_eq!(a.edges.xi, b.edges.xi);
    }

    #[test]
    fn aggregate_matches_local_empirical() {
        let spec = busy();
        let mut sys = NSystem::init(&spec, SimConfig::new(12, 5, 1.0)).unwrap();
        for t in [0.0, 0.7, 2.0] {
            sys.run_until(t).unwrap();
            for i in 0..12 {
                let nu = sys.local_empirical(i);
                assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for y in 0..2 {
                    for x in 0..3 {
                        let a = sys.aggregate(i, y, x);
                        let b = 12.0 * spec.aggregate_rate(y, x, &nu).unwrap();
                        assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn budget_guard() {
        let spec = busy();
        let err = NSystem::init(&spec, SimConfig::new(100, 1, 50.0).budget(1e5)).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }

    #[test]
    fn beta_above_ceiling_rejected() {
        let spec = busy();
        assert!(NSystem::init(&spec, SimConfig::new(3, 1, 5.0).beta_max(2.0)).is_err());
    }

    #[test]
    fn csv_has_header_and_initial_rows() {
        let spec = busy();
        let sys = simulate(&spec, SimConfig::new(3, 2, 1.0)).unwrap();
        let csv = sys.log().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("entity_kind,i,j,time,new_state"));
        assert!(lines.next().unwrap().starts_with("node,0,,0,"));
    }
}
