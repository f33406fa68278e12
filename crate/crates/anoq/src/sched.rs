//! Round-loop policies under bandit feedback.
//!
//! A scheduler handle sees only the current queue matrix when deciding and
//! only post-decision feedback (capacities, realized transmissions, and in
//! utility mode the scalar utility value of its own arrival choice) when
//! observing. Handles never touch the trace object.
//!
//! `nso` runs one magnitude-adaptive link learner per link: each round it
//! announces the loss bound `M·‖Q_m − Q_n‖∞`, plays the learner's simplex
//! point as the link allocation, and afterwards feeds the realized loss
//! vector `C·(Q_m − Q_n)`. `umo2` adds a bandit convex optimizer over the
//! arrival set with the drift-plus-penalty loss `⟨Q, λ⟩ − V·g(λ)`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::bco::{AdaBgd, AdaBgdConfig, BallSandwichedSet, ScheduleTriple};
use crate::error::{AnoqError, Result};
use crate::net::{ArrivalMatrix, CapacityMatrix, LinkAllocationPlan, QueueMatrix, Topology, TransmissionMatrix};
use crate::olo::{make_base_learner, AdaPfol, BaseLearnerKind};
use crate::simplex::sample_uniform_simplex;

/// A round's decision: the per-link allocation plan and, for schedulers that
/// choose their own arrivals, the arrival matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerDecision {
    pub plan: LinkAllocationPlan,
    pub arrivals: Option<ArrivalMatrix>,
}

/// Learner diagnostics surfaced in run summaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchedStats {
    pub reset_counts: Vec<u32>,
    pub max_alpha: Option<f64>,
    pub eta_strictly_decreasing: Option<bool>,
}

/// A policy driven by the simulation loop.
pub trait Scheduler: Send {
    /// Decide this round's actions from the pre-decision queue state.
    /// `privileged_capacities` is `Some` only for knowledge-privileged
    /// baselines (deliberate bandit-model violations, flagged in output).
    fn decide(
        &mut self,
        q: &QueueMatrix,
        privileged_capacities: Option<&CapacityMatrix>,
    ) -> Result<SchedulerDecision>;

    /// Post-decision feedback: realized capacities and transmissions, plus
    /// the scalar utility value of the played arrivals in utility mode.
    fn observe(
        &mut self,
        q: &QueueMatrix,
        c: &CapacityMatrix,
        mu: &TransmissionMatrix,
        utility_value: Option<f64>,
    ) -> Result<()>;

    fn is_knowledge_privileged(&self) -> bool {
        false
    }

    fn stats(&self) -> SchedStats {
        SchedStats::default()
    }
}

/// The drift-plus-penalty loss `⟨Q, λ⟩ − V·g(λ)` fed to the arrival learner.
pub fn dpp_loss(q: &QueueMatrix, arrivals: &ArrivalMatrix, v: f64, utility_value: f64) -> f64 {
    let inner: f64 = q.flat().iter().zip(arrivals.flat()).map(|(a, b)| a * b).sum();
    inner - v * utility_value
}

/// One adaptive link learner per link, shared by `nso` and `umo2`.
struct LinkLearnerBank {
    links: Vec<(usize, usize)>,
    capacity_bound: f64,
    learners: Vec<AdaPfol>,
    /// This round's announced bounds, for the soundness assertion at
    /// observe time.
    announced: Vec<f64>,
    decided: bool,
}

impl LinkLearnerBank {
    fn new(topo: &Topology, horizon: u64, kind: BaseLearnerKind) -> Self {
        let learners = (0..topo.link_count())
            .map(|_| AdaPfol::new(make_base_learner(kind, topo.server_count, horizon)))
            .collect();
        Self {
            links: topo.links.clone(),
            capacity_bound: topo.capacity_bound,
            learners,
            announced: vec![0.0; topo.link_count()],
            decided: false,
        }
    }

    fn with_learners(topo: &Topology, learners: Vec<AdaPfol>) -> Self {
        assert_eq!(learners.len(), topo.link_count());
        Self {
            links: topo.links.clone(),
            capacity_bound: topo.capacity_bound,
            learners,
            announced: vec![0.0; topo.link_count()],
            decided: false,
        }
    }

    fn decide(&mut self, q: &QueueMatrix) -> Result<LinkAllocationPlan> {
        let mut per_link = Vec::with_capacity(self.links.len());
        for (l, &(from, to)) in self.links.iter().enumerate() {
            let mut linf = 0.0_f64;
            for k in 0..q.dim() {
                linf = linf.max((q.get(to, k) - q.get(from, k)).abs());
            }
            let bound = self.capacity_bound * linf;
            // A zero bound means the coming loss is identically zero; the
            // learner contract wants strictly positive announcements, so we
            // skip the call (no reset can trigger below the current scale).
            if bound > 0.0 {
                self.learners[l].announce_bound(bound)?;
            }
            self.announced[l] = bound;
            per_link.push(self.learners[l].act());
        }
        self.decided = true;
        Ok(LinkAllocationPlan { per_link })
    }

    fn observe(&mut self, q: &QueueMatrix, c: &CapacityMatrix) -> Result<()> {
        if !self.decided {
            return Err(AnoqError::Contract("observe called before decide".into()));
        }
        self.decided = false;
        for (l, &(from, to)) in self.links.iter().enumerate() {
            let cap = c.per_link[l];
            let g: Vec<f64> =
                (0..q.dim()).map(|k| cap * (q.get(to, k) - q.get(from, k))).collect();
            let linf = g.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            // Announcement soundness: |fed| <= announced since C <= M.
            if linf > self.announced[l] * (1.0 + 1e-9) + 1e-12 {
                return Err(AnoqError::Invariant(format!(
                    "link {l}: fed loss magnitude {linf} exceeds announced {}",
                    self.announced[l]
                )));
            }
            self.learners[l].feed(&g)?;
        }
        Ok(())
    }

    fn reset_counts(&self) -> Vec<u32> {
        self.learners.iter().map(|l| l.resets()).collect()
    }
}

/// Stability scheduler: per-link online linear optimization only; arrivals
/// come from the environment.
pub struct NsoScheduler {
    bank: LinkLearnerBank,
}

impl NsoScheduler {
    pub fn new(topo: &Topology, horizon: u64, kind: BaseLearnerKind) -> Self {
        Self { bank: LinkLearnerBank::new(topo, horizon, kind) }
    }

    /// Test hook: inject prebuilt per-link learners.
    pub fn with_learners(topo: &Topology, learners: Vec<AdaPfol>) -> Self {
        Self { bank: LinkLearnerBank::with_learners(topo, learners) }
    }

    pub fn announced_bounds(&self) -> &[f64] {
        &self.bank.announced
    }

    pub fn link_scales(&self) -> Vec<f64> {
        self.bank.learners.iter().map(|l| l.scale()).collect()
    }
}

impl Scheduler for NsoScheduler {
    fn decide(
        &mut self,
        q: &QueueMatrix,
        _privileged_capacities: Option<&CapacityMatrix>,
    ) -> Result<SchedulerDecision> {
        Ok(SchedulerDecision { plan: self.bank.decide(q)?, arrivals: None })
    }

    fn observe(
        &mut self,
        q: &QueueMatrix,
        c: &CapacityMatrix,
        _mu: &TransmissionMatrix,
        _utility_value: Option<f64>,
    ) -> Result<()> {
        self.bank.observe(q, c)
    }

    fn stats(&self) -> SchedStats {
        SchedStats { reset_counts: self.bank.reset_counts(), ..Default::default() }
    }
}

/// Maps the arrival learner's set coordinates into the arrival matrix.
#[derive(Debug, Clone)]
pub struct ArrivalSet {
    pub set: BallSandwichedSet,
    /// (server, commodity) per coordinate, 0-based.
    pub entries: Vec<(usize, usize)>,
}

impl ArrivalSet {
    pub fn new(set: BallSandwichedSet, entries: Vec<(usize, usize)>) -> Result<Self> {
        if set.dim() != entries.len() {
            return Err(AnoqError::Structural(format!(
                "arrival set has dimension {} but {} entries",
                set.dim(),
                entries.len()
            )));
        }
        Ok(Self { set, entries })
    }

    /// Validate that the whole set sits inside `[0, R]` per coordinate.
    pub fn validate_within(&self, topo: &Topology) -> Result<()> {
        let c = self.set.center();
        for (i, &(srv, com)) in self.entries.iter().enumerate() {
            if srv >= topo.server_count || com >= topo.server_count || srv == com {
                return Err(AnoqError::Invariant(format!(
                    "arrival entry {}:{} invalid for {} servers",
                    srv + 1,
                    com + 1,
                    topo.server_count
                )));
            }
            let extent = self.set.coordinate_extent(i);
            if c[i] - extent < -1e-9 || c[i] + extent > topo.arrival_bound + 1e-9 {
                return Err(AnoqError::Invariant(format!(
                    "arrival set coordinate {i} can leave [0, {}]",
                    topo.arrival_bound
                )));
            }
        }
        Ok(())
    }

    pub fn matrix_from_coords(&self, coords: &[f64], n: usize) -> ArrivalMatrix {
        let mut m = ArrivalMatrix::zeros(n);
        for (i, &(srv, com)) in self.entries.iter().enumerate() {
            m.set(srv, com, coords[i]);
        }
        m
    }
}

struct PendingBco {
    triple: ScheduleTriple,
    direction: Vec<f64>,
    arrivals: ArrivalMatrix,
}

/// Utility scheduler: link learners plus one bandit convex optimizer over
/// the arrival set.
pub struct Umo2Scheduler {
    bank: LinkLearnerBank,
    bgd: AdaBgd,
    arrival_set: ArrivalSet,
    v: f64,
    servers: usize,
    rng: ChaCha12Rng,
    pending: Option<PendingBco>,
}

impl Umo2Scheduler {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        topo: &Topology,
        horizon: u64,
        kind: BaseLearnerKind,
        arrival_set: ArrivalSet,
        v: f64,
        utility_bound: f64,
        utility_lipschitz: f64,
        path_budget: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        arrival_set.validate_within(topo)?;
        let cfg = AdaBgdConfig {
            path_coeff: path_budget.0,
            path_delta: path_budget.1,
            horizon,
            v,
            utility_bound,
            lipschitz: utility_lipschitz,
            increment_bound: topo.queue_increment_bound(),
        };
        let bgd = AdaBgd::new(arrival_set.set.clone(), cfg)?;
        Ok(Self {
            bank: LinkLearnerBank::new(topo, horizon, kind),
            bgd,
            arrival_set,
            v,
            servers: topo.server_count,
            rng: ChaCha12Rng::seed_from_u64(seed),
            pending: None,
        })
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

impl Scheduler for Umo2Scheduler {
    fn decide(
        &mut self,
        q: &QueueMatrix,
        _privileged_capacities: Option<&CapacityMatrix>,
    ) -> Result<SchedulerDecision> {
        let plan = self.bank.decide(q)?;
        let triple = self.bgd.schedule(q.linf(), q.l2())?;
        let (x, s) = self.bgd.act(&triple, &mut self.rng);
        let coords = self.bgd.set().to_ambient(&x);
        let arrivals = self.arrival_set.matrix_from_coords(&coords, self.servers);
        self.pending = Some(PendingBco { triple, direction: s, arrivals: arrivals.clone() });
        Ok(SchedulerDecision { plan, arrivals: Some(arrivals) })
    }

    fn observe(
        &mut self,
        q: &QueueMatrix,
        c: &CapacityMatrix,
        _mu: &TransmissionMatrix,
        utility_value: Option<f64>,
    ) -> Result<()> {
        self.bank.observe(q, c)?;
        let pending = self
            .pending
            .take()
            .ok_or_else(|| AnoqError::Contract("observe called before decide".into()))?;
        let u = utility_value.ok_or_else(|| {
            AnoqError::Contract("utility scheduler needs the scalar utility feedback".into())
        })?;
        let loss = dpp_loss(q, &pending.arrivals, self.v, u);
        self.bgd.feed(&pending.triple, loss, &pending.direction);
        Ok(())
    }

    fn stats(&self) -> SchedStats {
        SchedStats {
            reset_counts: self.bank.reset_counts(),
            max_alpha: Some(self.bgd.max_alpha()),
            eta_strictly_decreasing: Some(self.bgd.eta_strictly_decreasing()),
        }
    }
}

/// Knowledge-privileged skyline: puts all link mass on the commodity with
/// the largest backpressure weight `C·[Q_n − Q_m]₊`, using the current
/// round's capacities (a deliberate bandit-model violation).
pub struct OracleBackpressure {
    links: Vec<(usize, usize)>,
}

impl OracleBackpressure {
    pub fn new(topo: &Topology) -> Self {
        Self { links: topo.links.clone() }
    }
}

impl Scheduler for OracleBackpressure {
    fn decide(
        &mut self,
        q: &QueueMatrix,
        privileged_capacities: Option<&CapacityMatrix>,
    ) -> Result<SchedulerDecision> {
        let caps = privileged_capacities.ok_or_else(|| {
            AnoqError::Contract("oracle baseline needs the current capacities".into())
        })?;
        let n = q.dim();
        let mut per_link = Vec::with_capacity(self.links.len());
        for (l, &(from, to)) in self.links.iter().enumerate() {
            let mut best_k = None;
            let mut best_w = 0.0;
            for k in 0..n {
                let w = caps.per_link[l] * (q.get(from, k) - q.get(to, k)).max(0.0);
                if w > best_w {
                    best_w = w;
                    best_k = Some(k);
                }
            }
            let mut alloc = vec![0.0; n];
            // All weights nonpositive: idle on the sender's own commodity.
            alloc[best_k.unwrap_or(from)] = 1.0;
            per_link.push(alloc);
        }
        Ok(SchedulerDecision { plan: LinkAllocationPlan { per_link }, arrivals: None })
    }

    fn observe(
        &mut self,
        _q: &QueueMatrix,
        _c: &CapacityMatrix,
        _mu: &TransmissionMatrix,
        _utility_value: Option<f64>,
    ) -> Result<()> {
        Ok(())
    }

    fn is_knowledge_privileged(&self) -> bool {
        true
    }
}

/// Uniform random simplex point per link per round.
pub struct UniformRandom {
    links: usize,
    commodities: usize,
    rng: ChaCha12Rng,
}

impl UniformRandom {
    pub fn new(topo: &Topology, seed: u64) -> Self {
        Self {
            links: topo.link_count(),
            commodities: topo.server_count,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }
}

impl Scheduler for UniformRandom {
    fn decide(
        &mut self,
        _q: &QueueMatrix,
        _privileged_capacities: Option<&CapacityMatrix>,
    ) -> Result<SchedulerDecision> {
        let per_link = (0..self.links)
            .map(|_| sample_uniform_simplex(self.commodities, &mut self.rng))
            .collect();
        Ok(SchedulerDecision { plan: LinkAllocationPlan { per_link }, arrivals: None })
    }

    fn observe(
        &mut self,
        _q: &QueueMatrix,
        _c: &CapacityMatrix,
        _mu: &TransmissionMatrix,
        _utility_value: Option<f64>,
    ) -> Result<()> {
        Ok(())
    }
}

/// Replays a configured plan every round.
pub struct FixedPlan {
    plan: LinkAllocationPlan,
}

impl FixedPlan {
    pub fn new(topo: &Topology, plan: LinkAllocationPlan) -> Result<Self> {
        plan.validate(topo)?;
        Ok(Self { plan })
    }
}

impl Scheduler for FixedPlan {
    fn decide(
        &mut self,
        _q: &QueueMatrix,
        _privileged_capacities: Option<&CapacityMatrix>,
    ) -> Result<SchedulerDecision> {
        Ok(SchedulerDecision { plan: self.plan.clone(), arrivals: None })
    }

    fn observe(
        &mut self,
        _q: &QueueMatrix,
        _c: &CapacityMatrix,
        _mu: &TransmissionMatrix,
        _utility_value: Option<f64>,
    ) -> Result<()> {
        Ok(())
    }
}
