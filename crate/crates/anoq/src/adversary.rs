//! Oblivious adversarial traces and certified reference policies.
//!
//! A trace fixes, before any scheduler runs, the per-round link capacities,
//! the external arrivals (stability mode), and the utility functions
//! (utility mode). Alongside the trace the generator constructs a reference
//! policy: a window partition of the horizon plus a per-round allocation
//! (and, in utility mode, arrival) sequence whose window-averaged service
//! strictly exceeds every queue's window-averaged net arrivals by a slack
//! that the verifier certifies.
//!
//! Reference allocations route each commodity along hop-count-decreasing
//! links only, and dump every link's surplus mass on the receiving server's
//! own commodity, where jobs vanish on arrival. Both choices keep the
//! fluid dynamics from injecting phantom traffic into queues the policy
//! never meant to load.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AnoqError, Result};
use crate::net::{ArrivalMatrix, CapacityMatrix, LinkAllocationPlan, Topology};

/// Trace mode: who chooses the arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Arrivals are part of the trace (adversarial).
    Stability,
    /// Arrivals are scheduler-chosen; the trace fixes utilities instead.
    Utility,
}

/// Per-round utility function over the controllable arrival coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UtilitySpec {
    /// `g(λ) = Σ_i w_i · ln(1 + λ_i)`, `w_i ≥ 0`.
    LogWeights { weights: Vec<f64> },
    /// `g(λ) = Σ_i a_i·λ_i − b_i·λ_i²`, `b_i ≥ 0`.
    LinQuad { linear: Vec<f64>, quad: Vec<f64> },
}

impl UtilitySpec {
    pub fn dim(&self) -> usize {
        match self {
            UtilitySpec::LogWeights { weights } => weights.len(),
            UtilitySpec::LinQuad { linear, .. } => linear.len(),
        }
    }

    /// `g(λ)` at ambient (nonnegative) coordinates.
    pub fn value(&self, lam: &[f64]) -> f64 {
        match self {
            UtilitySpec::LogWeights { weights } => {
                weights.iter().zip(lam).map(|(w, l)| w * (1.0 + l).ln()).sum()
            }
            UtilitySpec::LinQuad { linear, quad } => linear
                .iter()
                .zip(quad)
                .zip(lam)
                .map(|((a, b), l)| a * l - b * l * l)
                .sum(),
        }
    }

    /// Analytic gradient; oracle-only (never handed to a scheduler).
    pub fn gradient(&self, lam: &[f64]) -> Vec<f64> {
        match self {
            UtilitySpec::LogWeights { weights } => {
                weights.iter().zip(lam).map(|(w, l)| w / (1.0 + l)).collect()
            }
            UtilitySpec::LinQuad { linear, quad } => linear
                .iter()
                .zip(quad)
                .zip(lam)
                .map(|((a, b), l)| a - 2.0 * b * l)
                .collect(),
        }
    }

    /// Closed-form bound `G ≥ sup |g|` on the box `[lo, hi]`.
    pub fn bound_on_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            UtilitySpec::LogWeights { weights } => {
                // Nondecreasing in each coordinate; lo is nonnegative.
                let _ = lo;
                weights.iter().zip(hi).map(|(w, h)| w * (1.0 + h).ln()).sum::<f64>()
            }
            UtilitySpec::LinQuad { linear, quad } => {
                // Sum of per-coordinate bounds on |a·l − b·l²| over [lo, hi].
                linear
                    .iter()
                    .zip(quad)
                    .zip(lo.iter().zip(hi))
                    .map(|((a, b), (&l, &h))| {
                        let f = |x: f64| (a * x - b * x * x).abs();
                        let mut m = f(l).max(f(h));
                        if *b > 0.0 {
                            let v = a / (2.0 * b);
                            if v > l && v < h {
                                m = m.max(f(v));
                            }
                        }
                        m
                    })
                    .sum()
            }
        }
    }

    /// Closed-form Lipschitz constant (l2) on the box `[lo, hi]`.
    pub fn lipschitz_on_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            UtilitySpec::LogWeights { weights } => {
                // |∂_i g| = w_i/(1+λ_i) ≤ w_i/(1+lo_i).
                weights
                    .iter()
                    .zip(lo)
                    .map(|(w, l)| {
                        let d = w / (1.0 + l);
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            UtilitySpec::LinQuad { linear, quad } => {
                // |∂_i g| = |a − 2bλ| ≤ max at the box corners.
                linear
                    .iter()
                    .zip(quad)
                    .zip(lo.iter().zip(hi))
                    .map(|((a, b), (&l, &h))| {
                        let d = (a - 2.0 * b * l).abs().max((a - 2.0 * b * h).abs());
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// Midpoint concavity spot-check on random pairs from `[lo, hi]`:
    /// `g((x+y)/2) ≥ (g(x)+g(y))/2 − 1e-9`.
    pub fn check_concavity<R: Rng + ?Sized>(
        &self,
        lo: &[f64],
        hi: &[f64],
        pairs: usize,
        rng: &mut R,
    ) -> bool {
        let d = self.dim();
        let sample = |rng: &mut R| -> Vec<f64> {
            (0..d).map(|i| lo[i] + rng.random::<f64>() * (hi[i] - lo[i])).collect()
        };
        for _ in 0..pairs {
            let x = sample(rng);
            let y = sample(rng);
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            if self.value(&mid) < 0.5 * (self.value(&x) + self.value(&y)) - 1e-9 {
                return false;
            }
        }
        true
    }

    /// Lipschitz spot-check on random pairs:
    /// `|g(x) − g(y)| ≤ lip·‖x−y‖₂ + 1e-9`.
    pub fn check_lipschitz<R: Rng + ?Sized>(
        &self,
        lo: &[f64],
        hi: &[f64],
        lip: f64,
        pairs: usize,
        rng: &mut R,
    ) -> bool {
        let d = self.dim();
        let sample = |rng: &mut R| -> Vec<f64> {
            (0..d).map(|i| lo[i] + rng.random::<f64>() * (hi[i] - lo[i])).collect()
        };
        for _ in 0..pairs {
            let x = sample(rng);
            let y = sample(rng);
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if (self.value(&x) - self.value(&y)).abs() > lip * dist + 1e-9 {
                return false;
            }
        }
        true
    }
}

/// Fully materialized oblivious trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryTrace {
    pub topology: Topology,
    pub mode: TraceMode,
    /// Controllable / externally loaded (server, commodity) pairs, 0-based.
    pub arrival_entries: Vec<(usize, usize)>,
    /// `capacities[t][l]`, one row per round.
    pub capacity_rows: Vec<Vec<f64>>,
    /// Stability mode: `arrival_rows[t][e]` aligned with `arrival_entries`.
    pub arrival_rows: Option<Vec<Vec<f64>>>,
    /// Utility mode: one spec per round.
    pub utilities: Option<Vec<UtilitySpec>>,
    /// Utility mode: box over the arrival entries on which `utility_bound`
    /// and `utility_lipschitz` were certified.
    pub utility_domain: Option<(Vec<f64>, Vec<f64>)>,
    /// `G = max_t sup |g_t|` over the domain box (utility mode).
    pub utility_bound: Option<f64>,
    /// `L = max_t Lip(g_t)` over the domain box (utility mode).
    pub utility_lipschitz: Option<f64>,
}

impl AdversaryTrace {
    pub fn rounds(&self) -> usize {
        self.capacity_rows.len()
    }

    pub fn capacities(&self, t: usize) -> CapacityMatrix {
        CapacityMatrix { per_link: self.capacity_rows[t].clone() }
    }

    pub fn capacity_row(&self, t: usize) -> &[f64] {
        &self.capacity_rows[t]
    }

    /// Stability-mode arrivals materialized as a full matrix.
    pub fn arrivals(&self, t: usize) -> Option<ArrivalMatrix> {
        self.arrival_rows.as_ref().map(|rows| {
            let mut m = ArrivalMatrix::zeros(self.topology.server_count);
            for (e, &(srv, com)) in self.arrival_entries.iter().enumerate() {
                m.set(srv, com, rows[t][e]);
            }
            m
        })
    }

    pub fn utility(&self, t: usize) -> Option<&UtilitySpec> {
        self.utilities.as_ref().map(|u| &u[t])
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.rounds();
        if t == 0 {
            return Err(AnoqError::Invariant("trace must have at least one round".into()));
        }
        for (i, row) in self.capacity_rows.iter().enumerate() {
            if row.len() != self.topology.link_count() {
                return Err(AnoqError::Structural(format!(
                    "capacity row {i} has {} links, expected {}",
                    row.len(),
                    self.topology.link_count()
                )));
            }
            for &c in row {
                if !(0.0..=self.topology.capacity_bound + 1e-12).contains(&c) {
                    return Err(AnoqError::Invariant(format!(
                        "capacity {c} outside [0, {}] in round {i}",
                        self.topology.capacity_bound
                    )));
                }
            }
        }
        match self.mode {
            TraceMode::Stability => {
                let rows = self.arrival_rows.as_ref().ok_or_else(|| {
                    AnoqError::Invariant("stability trace needs arrival rows".into())
                })?;
                if rows.len() != t {
                    return Err(AnoqError::LengthMismatch(format!(
                        "{} arrival rows for {t} rounds",
                        rows.len()
                    )));
                }
                for row in rows {
                    if row.len() != self.arrival_entries.len() {
                        return Err(AnoqError::Structural(
                            "arrival row width != entry count".into(),
                        ));
                    }
                    for &v in row {
                        if !(0.0..=self.topology.arrival_bound + 1e-12).contains(&v) {
                            return Err(AnoqError::Invariant(format!(
                                "arrival {v} outside [0, {}]",
                                self.topology.arrival_bound
                            )));
                        }
                    }
                }
            }
            TraceMode::Utility => {
                let utils = self.utilities.as_ref().ok_or_else(|| {
                    AnoqError::Invariant("utility trace needs utility specs".into())
                })?;
                if utils.len() != t {
                    return Err(AnoqError::LengthMismatch(format!(
                        "{} utility specs for {t} rounds",
                        utils.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reference policy certified against an [`AdversaryTrace`].
///
/// Allocation and arrival sequences are stored as change-point segments; the
/// per-round accessors expand them on demand, so the policy is logically a
/// full sequence over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePolicy {
    /// `(start_round, plan)` segments, 0-based, first must start at 0.
    pub allocation_segments: Vec<(usize, LinkAllocationPlan)>,
    /// Utility mode: `(start_round, arrivals-at-entries)` segments.
    pub arrival_segments: Option<Vec<(usize, Vec<f64>)>>,
    /// Disjoint consecutive windows `[start, end]` (inclusive, 0-based)
    /// covering the whole horizon.
    pub windows: Vec<(usize, usize)>,
    /// Certified slack `ε_W ≥ 0`.
    pub slack: f64,
    /// `C_W` with `Σ_j (|W_j|−1)² ≤ C_W·T`.
    pub window_constant: f64,
    /// `(C^a, δ_a)`: allocation path-length budget `P_t ≤ C·t^{1/2−δ}`.
    pub alloc_path_budget: (f64, f64),
    /// `(C^λ, δ_λ)`: arrival path-length budget, utility mode only.
    pub arrival_path_budget: Option<(f64, f64)>,
}

fn segment_index<T>(segments: &[(usize, T)], t: usize) -> usize {
    match segments.binary_search_by_key(&t, |s| s.0) {
        Ok(i) => i,
        Err(i) => i - 1,
    }
}

impl ReferencePolicy {
    pub fn allocation_at(&self, t: usize) -> &LinkAllocationPlan {
        &self.allocation_segments[segment_index(&self.allocation_segments, t)].1
    }

    pub fn arrivals_at(&self, t: usize) -> Option<&[f64]> {
        self.arrival_segments
            .as_ref()
            .map(|segs| segs[segment_index(segs, t)].1.as_slice())
    }

    /// Utility-mode reference arrivals materialized as a full matrix.
    pub fn arrival_matrix_at(&self, t: usize, trace: &AdversaryTrace) -> Option<ArrivalMatrix> {
        self.arrivals_at(t).map(|vals| {
            let mut m = ArrivalMatrix::zeros(trace.topology.server_count);
            for (e, &(srv, com)) in trace.arrival_entries.iter().enumerate() {
                m.set(srv, com, vals[e]);
            }
            m
        })
    }

    /// Path length `P_t = Σ_{s<t} Σ_links ‖å(s) − å(s+1)‖₁` for every prefix.
    fn alloc_path_prefix(&self, t_rounds: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(t_rounds);
        let mut acc = 0.0;
        out.push(0.0);
        for t in 1..t_rounds {
            let prev = self.allocation_at(t - 1);
            let cur = self.allocation_at(t);
            if !std::ptr::eq(prev, cur) {
                for (a, b) in prev.per_link.iter().zip(&cur.per_link) {
                    acc += crate::simplex::l1_distance(a, b);
                }
            }
            out.push(acc);
        }
        out
    }

    fn arrival_path_prefix(&self, t_rounds: usize) -> Option<Vec<f64>> {
        self.arrival_segments.as_ref()?;
        let mut out = Vec::with_capacity(t_rounds);
        let mut acc = 0.0;
        out.push(0.0);
        for t in 1..t_rounds {
            let prev = self.arrivals_at(t - 1).unwrap();
            let cur = self.arrivals_at(t).unwrap();
            acc += crate::simplex::l1_distance(prev, cur);
            out.push(acc);
        }
        Some(out)
    }

    /// Structural and budget invariants against a trace of `t_rounds`.
    pub fn validate(&self, topo: &Topology, t_rounds: usize) -> Result<()> {
        // Windows: disjoint consecutive intervals covering [0, T-1].
        let mut expect = 0;
        for &(s, e) in &self.windows {
            if s != expect || e < s || e >= t_rounds {
                return Err(AnoqError::Invariant(format!(
                    "windows are not a partition: got [{s}, {e}], expected start {expect}"
                )));
            }
            expect = e + 1;
        }
        if expect != t_rounds {
            return Err(AnoqError::Invariant(format!(
                "windows cover [0, {expect}) but the trace has {t_rounds} rounds"
            )));
        }
        // Window constant.
        let sq: f64 = self.windows.iter().map(|&(s, e)| ((e - s) as f64).powi(2)).sum();
        if sq > self.window_constant * t_rounds as f64 * (1.0 + 1e-12) {
            return Err(AnoqError::Invariant(format!(
                "Σ(|W|−1)² = {sq} exceeds C_W·T = {}",
                self.window_constant * t_rounds as f64
            )));
        }
        if self.slack < 0.0 {
            return Err(AnoqError::Invariant(format!("slack must be >= 0, got {}", self.slack)));
        }
        for (start, plan) in &self.allocation_segments {
            if *start >= t_rounds {
                return Err(AnoqError::Invariant(format!(
                    "allocation segment starts at {start} beyond the horizon {t_rounds}"
                )));
            }
            plan.validate(topo)?;
        }
        if self.allocation_segments.first().map(|s| s.0) != Some(0) {
            return Err(AnoqError::Invariant("first allocation segment must start at 0".into()));
        }
        // Path budgets.
        let (c_a, d_a) = self.alloc_path_budget;
        let prefix = self.alloc_path_prefix(t_rounds);
        for (t, &p) in prefix.iter().enumerate() {
            let budget = c_a * ((t + 1) as f64).powf(0.5 - d_a);
            if p > budget * (1.0 + 1e-12) {
                return Err(AnoqError::Invariant(format!(
                    "allocation path length {p} at t={} exceeds budget {budget}",
                    t + 1
                )));
            }
        }
        if let (Some((c_l, d_l)), Some(prefix)) =
            (self.arrival_path_budget, self.arrival_path_prefix(t_rounds))
        {
            for (t, &p) in prefix.iter().enumerate() {
                let budget = c_l * ((t + 1) as f64).powf(0.5 - d_l);
                if p > budget * (1.0 + 1e-12) {
                    return Err(AnoqError::Invariant(format!(
                        "arrival path length {p} at t={} exceeds budget {budget}",
                        t + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `Σ_t ‖x_t − x_{t+1}‖₁` of a vector sequence.
pub fn path_length(seq: &[Vec<f64>]) -> f64 {
    seq.windows(2).map(|w| crate::simplex::l1_distance(&w[0], &w[1])).sum()
}

/// Verifier outcome: the achieved slack, or the first violated triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VerifyOutcome {
    Accept {
        /// Minimum window slack over all participating (window, server,
        /// commodity) triples; equals the declared slack when no triple
        /// participates.
        slack: f64,
    },
    Reject {
        window: usize,
        server: usize,
        commodity: usize,
        /// Amount by which the certified inequality fails:
        /// `ε_W + net − service`.
        deficit: f64,
    },
}

impl VerifyOutcome {
    pub fn is_accept(&self) -> bool {
        matches!(self, VerifyOutcome::Accept { .. })
    }
}

/// Check the piecewise-stability inequality of a reference policy against a
/// trace: on every window and for every (server, commodity) queue, the
/// window-averaged service must exceed the window-averaged net arrivals
/// (external plus forwarded) by the declared slack.
///
/// Destination pairs (`n = k`) are exempt, as are pairs with no service and
/// no net arrivals in the window (their queues never charge).
pub fn verify_piecewise_stability(
    trace: &AdversaryTrace,
    reference: &ReferencePolicy,
    topo: &Topology,
) -> Result<VerifyOutcome> {
    trace.validate()?;
    reference.validate(topo, trace.rounds())?;
    let n = topo.server_count;
    let mut min_slack = f64::INFINITY;

    for (j, &(start, end)) in reference.windows.iter().enumerate() {
        let wlen = (end - start + 1) as f64;
        // service[n*k] and net[n*k] accumulated over the window.
        let mut service = vec![0.0; n * n];
        let mut net = vec![0.0; n * n];
        for t in start..=end {
            let caps = trace.capacity_row(t);
            let plan = reference.allocation_at(t);
            for (l, &(from, to)) in topo.links.iter().enumerate() {
                let c = caps[l];
                for k in 0..n {
                    let flow = c * plan.per_link[l][k];
                    service[from * n + k] += flow;
                    net[to * n + k] += flow;
                }
            }
            match trace.mode {
                TraceMode::Stability => {
                    let rows = trace.arrival_rows.as_ref().unwrap();
                    for (e, &(srv, com)) in trace.arrival_entries.iter().enumerate() {
                        net[srv * n + com] += rows[t][e];
                    }
                }
                TraceMode::Utility => {
                    let vals = reference.arrivals_at(t).ok_or_else(|| {
                        AnoqError::Invariant(
                            "utility-mode verification needs reference arrivals".into(),
                        )
                    })?;
                    for (e, &(srv, com)) in trace.arrival_entries.iter().enumerate() {
                        net[srv * n + com] += vals[e];
                    }
                }
            }
        }
        for server in 0..n {
            for k in 0..n {
                if server == k {
                    continue;
                }
                let s = service[server * n + k] / wlen;
                let a = net[server * n + k] / wlen;
                if s == 0.0 && a == 0.0 {
                    continue;
                }
                let slack = s - a;
                if slack + 1e-9 < reference.slack {
                    return Ok(VerifyOutcome::Reject {
                        window: j,
                        server,
                        commodity: k,
                        deficit: reference.slack + a - s,
                    });
                }
                min_slack = min_slack.min(slack);
            }
        }
    }
    let slack = if min_slack.is_finite() { min_slack.max(0.0) } else { reference.slack };
    Ok(VerifyOutcome::Accept { slack })
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Capacity process family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CapacityFamily {
    /// Per-phase constant levels drawn uniformly from `[cap_lo, cap_hi]`,
    /// phase lengths uniform in `[phase_min, phase_max]`.
    Piecewise { cap_lo: f64, cap_hi: f64, phase_min: usize, phase_max: usize },
    /// `C(t) = base + amp·sin(2π(t+offset_l)/period)` with per-link offsets.
    Sinusoid { base: f64, amp: f64, period: usize, window_len: usize },
    /// Base capacity with zero-capacity bursts of fixed length starting
    /// independently with the given per-round probability on one link.
    Jamming { base: f64, burst_prob: f64, burst_len: usize, window_len: usize },
}

/// Utility process parameters (utility mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityProcess {
    /// "log" or "linquad".
    pub family: String,
    /// Base weight per controllable entry.
    pub weights: Vec<f64>,
    /// Relative weight oscillation amplitude in `[0, 1)`.
    pub drift_amp: f64,
    /// Oscillation period in rounds.
    pub drift_period: usize,
}

/// Everything the generator needs besides the topology and the rng.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub rounds: usize,
    pub capacity: CapacityFamily,
    /// Externally loaded / controllable (server, commodity) pairs, 0-based.
    pub arrival_entries: Vec<(usize, usize)>,
    /// Stability mode: per-phase arrival levels, cycled; each inner vector is
    /// aligned with `arrival_entries`.
    pub arrival_levels: Vec<Vec<f64>>,
    /// Utility mode: reference arrivals (constant), aligned with entries.
    pub ref_arrivals: Option<Vec<f64>>,
    /// Utility mode: utility process.
    pub utility: Option<UtilityProcess>,
    /// Utility mode: domain box over the entries (for G/L certification).
    pub utility_domain: Option<(Vec<f64>, Vec<f64>)>,
    /// Slack the reference construction aims for; the achieved value is
    /// reported by the verifier and may be larger.
    pub slack_target: f64,
    /// Reported allocation path budget `(C^a, δ_a)`.
    pub alloc_path_budget: (f64, f64),
    /// Reported arrival path budget `(C^λ, δ_λ)`, utility mode.
    pub arrival_path_budget: Option<(f64, f64)>,
}

/// Hop-count distance of every server to every destination (BFS over
/// reversed links); `usize::MAX` when unreachable.
fn hop_distances(topo: &Topology) -> Vec<Vec<usize>> {
    let n = topo.server_count;
    let mut dist = vec![vec![usize::MAX; n]; n];
    for k in 0..n {
        dist[k][k] = 0;
        let mut frontier = std::collections::VecDeque::from([k]);
        while let Some(node) = frontier.pop_front() {
            for l in topo.in_links(node) {
                let (from, _) = topo.links[l];
                if dist[from][k] == usize::MAX {
                    dist[from][k] = dist[node][k] + 1;
                    frontier.push_back(from);
                }
            }
        }
    }
    dist
}

/// Build the static next-hop reference allocation: serve each loaded
/// (server, commodity) requirement along hop-decreasing links sized against
/// worst-window capacities, then dump each link's surplus mass on the
/// receiver's own commodity.
fn build_reference_plan(
    topo: &Topology,
    cap_min: &[f64],
    cap_max: &[f64],
    arrival_max: &[f64],
    slack_target: f64,
) -> Result<LinkAllocationPlan> {
    let n = topo.server_count;
    let dist = hop_distances(topo);
    let mut alloc = vec![vec![0.0; n]; topo.link_count()];

    for k in 0..n {
        // Unreachable but loaded pairs are infeasible outright.
        for server in 0..n {
            if server != k && dist[server][k] == usize::MAX && arrival_max[server * n + k] > 0.0 {
                return Err(AnoqError::Construction(format!(
                    "server {} cannot route commodity {} (window 0)",
                    server + 1,
                    k + 1
                )));
            }
        }
        let mut order: Vec<usize> =
            (0..n).filter(|&s| s != k && dist[s][k] != usize::MAX).collect();
        order.sort_by_key(|&s| std::cmp::Reverse(dist[s][k]));
        // incoming[s]: worst-case forwarded flow of commodity k into s.
        let mut incoming = vec![0.0; n];
        for &server in &order {
            let external = arrival_max[server * n + k];
            let inbound = incoming[server];
            if external == 0.0 && inbound == 0.0 {
                continue;
            }
            let requirement = external + inbound + slack_target;
            let next_hops: Vec<usize> = topo
                .out_links(server)
                .filter(|&l| {
                    let to = topo.links[l].1;
                    dist[to][k] != usize::MAX && dist[to][k] < dist[server][k]
                })
                .collect();
            let total_cap: f64 = next_hops.iter().map(|&l| cap_min[l]).sum();
            if total_cap <= 0.0 {
                return Err(AnoqError::Construction(format!(
                    "server {} has no capacity toward commodity {} (window 0)",
                    server + 1,
                    k + 1
                )));
            }
            let share = requirement / total_cap;
            for &l in &next_hops {
                alloc[l][k] += share;
                let to = topo.links[l].1;
                if to != k {
                    incoming[to] += cap_max[l] * share;
                }
            }
        }
    }

    // Surplus mass goes to the receiver's own commodity: those jobs exit on
    // arrival, so the mass is genuinely idle.
    for (l, &(_, to)) in topo.links.iter().enumerate() {
        let sum: f64 = alloc[l].iter().sum();
        if sum > 1.0 + 1e-9 {
            return Err(AnoqError::Construction(format!(
                "link {} needs allocation mass {sum} > 1; requested slack {slack_target} is \
                 infeasible under the capacity bounds (window 0)",
                l + 1
            )));
        }
        alloc[l][to] += (1.0 - sum).max(0.0);
    }
    let plan = LinkAllocationPlan { per_link: alloc };
    plan.validate(topo)?;
    Ok(plan)
}

/// Generate an oblivious trace together with a certified reference policy.
///
/// The returned pair always satisfies [`verify_piecewise_stability`] with
/// the policy's recorded slack; that slack is the verifier's achieved value,
/// which is at least the requested target. Construction fails when the
/// requested slack is infeasible under the capacity and arrival bounds.
pub fn generate_trace<R: Rng + ?Sized>(
    topo: &Topology,
    params: &TraceParams,
    mode: TraceMode,
    rng: &mut R,
) -> Result<(AdversaryTrace, ReferencePolicy)> {
    let t_rounds = params.rounds;
    if t_rounds == 0 {
        return Err(AnoqError::Construction("rounds must be at least 1".into()));
    }
    for &(srv, com) in &params.arrival_entries {
        if srv >= topo.server_count || com >= topo.server_count {
            return Err(AnoqError::Construction(format!(
                "arrival entry ({}, {}) outside the {}-server topology",
                srv + 1,
                com + 1,
                topo.server_count
            )));
        }
        if srv == com {
            return Err(AnoqError::Construction(format!(
                "arrival entry ({}, {}) loads a destination queue",
                srv + 1,
                com + 1
            )));
        }
    }

    // Capacities and the window partition.
    let links = topo.link_count();
    let mut capacity_rows = Vec::with_capacity(t_rounds);
    let mut windows = Vec::new();
    let mut phase_of_round = Vec::with_capacity(t_rounds);
    match &params.capacity {
        CapacityFamily::Piecewise { cap_lo, cap_hi, phase_min, phase_max } => {
            if !(0.0 <= *cap_lo && cap_lo <= cap_hi && *cap_hi <= topo.capacity_bound) {
                return Err(AnoqError::Construction(format!(
                    "capacity levels [{cap_lo}, {cap_hi}] outside [0, {}]",
                    topo.capacity_bound
                )));
            }
            if *phase_min == 0 || phase_min > phase_max {
                return Err(AnoqError::Construction(
                    "phase lengths must satisfy 1 <= phase_min <= phase_max".into(),
                ));
            }
            let mut t = 0;
            let mut phase = 0;
            while t < t_rounds {
                let span = *phase_min
                    + (rng.random::<f64>() * (*phase_max - *phase_min + 1) as f64) as usize;
                let span = span.min(t_rounds - t).max(1);
                let level: Vec<f64> = (0..links)
                    .map(|_| cap_lo + rng.random::<f64>() * (cap_hi - cap_lo))
                    .collect();
                for _ in 0..span {
                    capacity_rows.push(level.clone());
                    phase_of_round.push(phase);
                }
                windows.push((t, t + span - 1));
                t += span;
                phase += 1;
            }
        }
        CapacityFamily::Sinusoid { base, amp, period, window_len } => {
            if *amp < 0.0 || base + amp > topo.capacity_bound || base - amp < 0.0 {
                return Err(AnoqError::Construction(format!(
                    "sinusoid range [{}, {}] outside [0, {}]",
                    base - amp,
                    base + amp,
                    topo.capacity_bound
                )));
            }
            if *period == 0 || *window_len == 0 {
                return Err(AnoqError::Construction("period and window_len must be >= 1".into()));
            }
            let offsets: Vec<f64> =
                (0..links).map(|_| rng.random::<f64>() * *period as f64).collect();
            for t in 0..t_rounds {
                capacity_rows.push(
                    offsets
                        .iter()
                        .map(|o| {
                            base + amp
                                * (2.0 * std::f64::consts::PI * (t as f64 + o) / *period as f64)
                                    .sin()
                        })
                        .collect(),
                );
                phase_of_round.push(t / window_len);
            }
            let mut t = 0;
            while t < t_rounds {
                let end = (t + window_len - 1).min(t_rounds - 1);
                windows.push((t, end));
                t = end + 1;
            }
        }
        CapacityFamily::Jamming { base, burst_prob, burst_len, window_len } => {
            if *base <= 0.0 || *base > topo.capacity_bound {
                return Err(AnoqError::Construction(format!(
                    "jamming base {base} outside (0, {}]",
                    topo.capacity_bound
                )));
            }
            if *window_len == 0 || *burst_len == 0 {
                return Err(AnoqError::Construction(
                    "window_len and burst_len must be >= 1".into(),
                ));
            }
            let mut jam_until = vec![0usize; links];
            for t in 0..t_rounds {
                if rng.random::<f64>() < *burst_prob {
                    let l = (rng.random::<f64>() * links as f64) as usize % links;
                    jam_until[l] = t + burst_len;
                }
                capacity_rows
                    .push((0..links).map(|l| if t < jam_until[l] { 0.0 } else { *base }).collect());
                phase_of_round.push(t / window_len);
            }
            let mut t = 0;
            while t < t_rounds {
                let end = (t + window_len - 1).min(t_rounds - 1);
                windows.push((t, end));
                t = end + 1;
            }
        }
    }

    // Arrivals / utilities.
    let n = topo.server_count;
    let entries = params.arrival_entries.len();
    let (arrival_rows, utilities, utility_domain, utility_bound, utility_lipschitz) = match mode {
        TraceMode::Stability => {
            if params.arrival_levels.is_empty() {
                return Err(AnoqError::Construction(
                    "stability mode needs at least one arrival level".into(),
                ));
            }
            for level in &params.arrival_levels {
                if level.len() != entries {
                    return Err(AnoqError::Construction(format!(
                        "arrival level has {} values for {entries} entries",
                        level.len()
                    )));
                }
                for &v in level {
                    if !(0.0..=topo.arrival_bound).contains(&v) {
                        return Err(AnoqError::Construction(format!(
                            "arrival level {v} outside [0, {}]",
                            topo.arrival_bound
                        )));
                    }
                }
            }
            let rows: Vec<Vec<f64>> = (0..t_rounds)
                .map(|t| {
                    params.arrival_levels[phase_of_round[t] % params.arrival_levels.len()].clone()
                })
                .collect();
            (Some(rows), None, None, None, None)
        }
        TraceMode::Utility => {
            let proc = params.utility.as_ref().ok_or_else(|| {
                AnoqError::Construction("utility mode needs a utility process".into())
            })?;
            let domain = params.utility_domain.clone().ok_or_else(|| {
                AnoqError::Construction("utility mode needs a domain box".into())
            })?;
            if proc.weights.len() != entries {
                return Err(AnoqError::Construction(format!(
                    "utility process has {} weights for {entries} entries",
                    proc.weights.len()
                )));
            }
            if !(0.0..1.0).contains(&proc.drift_amp) || proc.drift_period == 0 {
                return Err(AnoqError::Construction(
                    "utility drift needs amp in [0,1) and period >= 1".into(),
                ));
            }
            let mut specs = Vec::with_capacity(t_rounds);
            let mut g_max: f64 = 0.0;
            let mut l_max: f64 = 0.0;
            for t in 0..t_rounds {
                let wobble = 1.0
                    + proc.drift_amp
                        * (2.0 * std::f64::consts::PI * t as f64 / proc.drift_period as f64)
                            .sin();
                let weights: Vec<f64> = proc.weights.iter().map(|w| w * wobble).collect();
                let spec = match proc.family.as_str() {
                    "log" => UtilitySpec::LogWeights { weights },
                    "linquad" => {
                        let quad = weights.iter().map(|w| 0.25 * w).collect();
                        UtilitySpec::LinQuad { linear: weights, quad }
                    }
                    other => {
                        return Err(AnoqError::Construction(format!(
                            "unknown utility family '{other}'"
                        )))
                    }
                };
                g_max = g_max.max(spec.bound_on_box(&domain.0, &domain.1));
                l_max = l_max.max(spec.lipschitz_on_box(&domain.0, &domain.1));
                specs.push(spec);
            }
            (None, Some(specs), Some(domain), Some(g_max), Some(l_max))
        }
    };

    let trace = AdversaryTrace {
        topology: topo.clone(),
        mode,
        arrival_entries: params.arrival_entries.clone(),
        capacity_rows,
        arrival_rows,
        utilities,
        utility_domain,
        utility_bound,
        utility_lipschitz,
    };
    trace.validate()?;

    // Reference construction against worst-case window averages.
    let mut cap_min = vec![f64::INFINITY; links];
    let mut cap_max = vec![0.0_f64; links];
    for &(s, e) in &windows {
        for l in 0..links {
            let avg: f64 =
                (s..=e).map(|t| trace.capacity_rows[t][l]).sum::<f64>() / (e - s + 1) as f64;
            cap_min[l] = cap_min[l].min(avg);
            cap_max[l] = cap_max[l].max(avg);
        }
    }
    let mut arrival_max = vec![0.0; n * n];
    match mode {
        TraceMode::Stability => {
            for level in &params.arrival_levels {
                for (e, &(srv, com)) in params.arrival_entries.iter().enumerate() {
                    let cell = &mut arrival_max[srv * n + com];
                    *cell = f64::max(*cell, level[e]);
                }
            }
        }
        TraceMode::Utility => {
            let refs = params.ref_arrivals.as_ref().ok_or_else(|| {
                AnoqError::Construction("utility mode needs reference arrivals".into())
            })?;
            if refs.len() != entries {
                return Err(AnoqError::Construction(format!(
                    "reference arrivals have {} values for {entries} entries",
                    refs.len()
                )));
            }
            for (e, &(srv, com)) in params.arrival_entries.iter().enumerate() {
                arrival_max[srv * n + com] = refs[e];
            }
        }
    }

    let plan = build_reference_plan(topo, &cap_min, &cap_max, &arrival_max, params.slack_target)?;
    let window_sq: f64 = windows.iter().map(|&(s, e)| ((e - s) as f64).powi(2)).sum();
    let window_constant = window_sq / t_rounds as f64;

    let mut reference = ReferencePolicy {
        allocation_segments: vec![(0, plan)],
        arrival_segments: match mode {
            TraceMode::Stability => None,
            TraceMode::Utility => Some(vec![(0, params.ref_arrivals.clone().unwrap())]),
        },
        windows,
        slack: params.slack_target,
        window_constant,
        alloc_path_budget: params.alloc_path_budget,
        arrival_path_budget: params.arrival_path_budget,
    };
    if mode == TraceMode::Utility && reference.arrival_path_budget.is_none() {
        return Err(AnoqError::Construction("utility mode needs an arrival path budget".into()));
    }

    // Certify, then record the achieved slack.
    match verify_piecewise_stability(&trace, &reference, topo)? {
        VerifyOutcome::Accept { slack } => {
            reference.slack = slack;
            Ok((trace, reference))
        }
        VerifyOutcome::Reject { window, server, commodity, deficit } => {
            Err(AnoqError::Construction(format!(
                "requested slack {} infeasible: window {window} server {} commodity {} short by \
                 {deficit}",
                params.slack_target,
                server + 1,
                commodity + 1
            )))
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization (versioned line format, bit-exact round trip)
// ---------------------------------------------------------------------------

mod textio {
    /// Canonical float rendering: Rust's shortest round-trip form.
    pub fn fmt(x: f64) -> String {
        format!("{x}")
    }

    pub fn join(values: &[f64], sep: &str) -> String {
        values.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(sep)
    }
}

/// Serialize a trace plus its reference policy to the `anoq-trace 1` line
/// format. Serialize-parse-serialize is byte-identical.
pub fn serialize_trace(trace: &AdversaryTrace, reference: &ReferencePolicy) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let topo = &trace.topology;
    out.push_str("anoq-trace 1\n");
    let _ = writeln!(out, "servers {}", topo.server_count);
    let links: Vec<String> =
        topo.links.iter().map(|&(a, b)| format!("{}>{}", a + 1, b + 1)).collect();
    let _ = writeln!(out, "links {}", links.join(" "));
    let _ = writeln!(out, "capacity_bound {}", textio::fmt(topo.capacity_bound));
    let _ = writeln!(out, "arrival_bound {}", textio::fmt(topo.arrival_bound));
    let _ = writeln!(
        out,
        "mode {}",
        match trace.mode {
            TraceMode::Stability => "stability",
            TraceMode::Utility => "utility",
        }
    );
    let _ = writeln!(out, "rounds {}", trace.rounds());
    let entries: Vec<String> =
        trace.arrival_entries.iter().map(|&(s, k)| format!("{}:{}", s + 1, k + 1)).collect();
    let _ = writeln!(out, "entries {}", entries.join(" "));
    if let (Some((lo, hi)), Some(g), Some(l)) =
        (&trace.utility_domain, trace.utility_bound, trace.utility_lipschitz)
    {
        let _ =
            writeln!(out, "utility_domain {} / {}", textio::join(lo, ","), textio::join(hi, ","));
        let _ = writeln!(out, "utility_bound {}", textio::fmt(g));
        let _ = writeln!(out, "utility_lipschitz {}", textio::fmt(l));
    }
    let windows: Vec<String> =
        reference.windows.iter().map(|&(s, e)| format!("{}-{}", s + 1, e + 1)).collect();
    let _ = writeln!(out, "windows {}", windows.join(" "));
    let _ = writeln!(out, "slack {}", textio::fmt(reference.slack));
    let _ = writeln!(out, "window_constant {}", textio::fmt(reference.window_constant));
    let _ = writeln!(
        out,
        "path_budget_alloc {} {}",
        textio::fmt(reference.alloc_path_budget.0),
        textio::fmt(reference.alloc_path_budget.1)
    );
    if let Some((c, d)) = reference.arrival_path_budget {
        let _ = writeln!(out, "path_budget_arrival {} {}", textio::fmt(c), textio::fmt(d));
    }
    for (start, plan) in &reference.allocation_segments {
        let body: Vec<String> = plan.per_link.iter().map(|v| textio::join(v, ",")).collect();
        let _ = writeln!(out, "refplan {} {}", start + 1, body.join("|"));
    }
    if let Some(segs) = &reference.arrival_segments {
        for (start, vals) in segs {
            let _ = writeln!(out, "refarr {} {}", start + 1, textio::join(vals, ","));
        }
    }
    for t in 0..trace.rounds() {
        let caps = textio::join(&trace.capacity_rows[t], " ");
        match trace.mode {
            TraceMode::Stability => {
                let arr = textio::join(&trace.arrival_rows.as_ref().unwrap()[t], " ");
                let _ = writeln!(out, "r {caps} | {arr}");
            }
            TraceMode::Utility => {
                let spec = &trace.utilities.as_ref().unwrap()[t];
                let body = match spec {
                    UtilitySpec::LogWeights { weights } => {
                        format!("log {}", textio::join(weights, ","))
                    }
                    UtilitySpec::LinQuad { linear, quad } => {
                        format!(
                            "linquad {} / {}",
                            textio::join(linear, ","),
                            textio::join(quad, ",")
                        )
                    }
                };
                let _ = writeln!(out, "r {caps} | {body}");
            }
        }
    }
    out
}

/// Parse the `anoq-trace 1` format.
pub fn parse_trace(text: &str) -> Result<(AdversaryTrace, ReferencePolicy)> {
    let mut lines = text.lines().peekable();
    let bad = |msg: &str| AnoqError::TraceFormat(msg.to_string());
    let header = lines.next().ok_or_else(|| bad("empty trace"))?;
    if header != "anoq-trace 1" {
        return Err(bad(&format!("unsupported header '{header}'")));
    }

    fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
        let line = line.ok_or_else(|| AnoqError::TraceFormat(format!("missing '{key}' line")))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| AnoqError::TraceFormat(format!("expected '{key} ...', got '{line}'")))
    }
    fn parse_f64(s: &str) -> Result<f64> {
        s.parse::<f64>().map_err(|_| AnoqError::TraceFormat(format!("bad number '{s}'")))
    }
    fn parse_f64_list(s: &str, sep: char) -> Result<Vec<f64>> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(sep).map(parse_f64).collect()
    }

    let servers: usize =
        field(lines.next(), "servers")?.parse().map_err(|_| bad("bad server count"))?;
    let links: Vec<(usize, usize)> = field(lines.next(), "links")?
        .split(' ')
        .filter(|s| !s.is_empty())
        .map(|tok| {
            let (a, b) = tok.split_once('>').ok_or_else(|| bad(&format!("bad link '{tok}'")))?;
            let a: usize = a.parse().map_err(|_| bad("bad link endpoint"))?;
            let b: usize = b.parse().map_err(|_| bad("bad link endpoint"))?;
            if a == 0 || b == 0 {
                return Err(bad("link endpoints are 1-based"));
            }
            Ok((a - 1, b - 1))
        })
        .collect::<Result<_>>()?;
    let capacity_bound = parse_f64(field(lines.next(), "capacity_bound")?)?;
    let arrival_bound = parse_f64(field(lines.next(), "arrival_bound")?)?;
    let topo = Topology::new(servers, links, capacity_bound, arrival_bound)?;

    let mode = match field(lines.next(), "mode")? {
        "stability" => TraceMode::Stability,
        "utility" => TraceMode::Utility,
        other => return Err(bad(&format!("unknown mode '{other}'"))),
    };
    let rounds: usize =
        field(lines.next(), "rounds")?.parse().map_err(|_| bad("bad round count"))?;
    let arrival_entries: Vec<(usize, usize)> = field(lines.next(), "entries")?
        .split(' ')
        .filter(|s| !s.is_empty())
        .map(|tok| {
            let (a, b) = tok.split_once(':').ok_or_else(|| bad(&format!("bad entry '{tok}'")))?;
            let a: usize = a.parse().map_err(|_| bad("bad entry server"))?;
            let b: usize = b.parse().map_err(|_| bad("bad entry commodity"))?;
            if a == 0 || b == 0 {
                return Err(bad("entries are 1-based"));
            }
            Ok((a - 1, b - 1))
        })
        .collect::<Result<_>>()?;

    let mut utility_domain = None;
    let mut utility_bound = None;
    let mut utility_lipschitz = None;
    if mode == TraceMode::Utility {
        let dom = field(lines.next(), "utility_domain")?;
        let (lo, hi) = dom.split_once(" / ").ok_or_else(|| bad("bad utility_domain"))?;
        utility_domain = Some((parse_f64_list(lo, ',')?, parse_f64_list(hi, ',')?));
        utility_bound = Some(parse_f64(field(lines.next(), "utility_bound")?)?);
        utility_lipschitz = Some(parse_f64(field(lines.next(), "utility_lipschitz")?)?);
    }

    let windows: Vec<(usize, usize)> = field(lines.next(), "windows")?
        .split(' ')
        .filter(|s| !s.is_empty())
        .map(|tok| {
            let (a, b) = tok.split_once('-').ok_or_else(|| bad(&format!("bad window '{tok}'")))?;
            let a: usize = a.parse().map_err(|_| bad("bad window start"))?;
            let b: usize = b.parse().map_err(|_| bad("bad window end"))?;
            if a == 0 || b == 0 {
                return Err(bad("windows are 1-based"));
            }
            Ok((a - 1, b - 1))
        })
        .collect::<Result<_>>()?;
    let slack = parse_f64(field(lines.next(), "slack")?)?;
    let window_constant = parse_f64(field(lines.next(), "window_constant")?)?;
    let pa = field(lines.next(), "path_budget_alloc")?;
    let (c_a, d_a) = pa.split_once(' ').ok_or_else(|| bad("bad path_budget_alloc"))?;
    let alloc_path_budget = (parse_f64(c_a)?, parse_f64(d_a)?);
    let mut arrival_path_budget = None;
    if let Some(line) = lines.peek() {
        if line.starts_with("path_budget_arrival ") {
            let v = field(lines.next(), "path_budget_arrival")?;
            let (c, d) = v.split_once(' ').ok_or_else(|| bad("bad path_budget_arrival"))?;
            arrival_path_budget = Some((parse_f64(c)?, parse_f64(d)?));
        }
    }

    let mut allocation_segments = Vec::new();
    while let Some(line) = lines.peek() {
        if !line.starts_with("refplan ") {
            break;
        }
        let body = field(lines.next(), "refplan")?;
        let (start, rest) = body.split_once(' ').ok_or_else(|| bad("bad refplan"))?;
        let start: usize = start.parse().map_err(|_| bad("bad refplan start"))?;
        if start == 0 {
            return Err(bad("refplan rounds are 1-based"));
        }
        let per_link: Vec<Vec<f64>> =
            rest.split('|').map(|v| parse_f64_list(v, ',')).collect::<Result<_>>()?;
        allocation_segments.push((start - 1, LinkAllocationPlan { per_link }));
    }
    let mut arrival_segments_vec = Vec::new();
    while let Some(line) = lines.peek() {
        if !line.starts_with("refarr ") {
            break;
        }
        let body = field(lines.next(), "refarr")?;
        let (start, rest) = body.split_once(' ').ok_or_else(|| bad("bad refarr"))?;
        let start: usize = start.parse().map_err(|_| bad("bad refarr start"))?;
        if start == 0 {
            return Err(bad("refarr rounds are 1-based"));
        }
        arrival_segments_vec.push((start - 1, parse_f64_list(rest, ',')?));
    }

    let mut capacity_rows = Vec::with_capacity(rounds);
    let mut arrival_rows = Vec::new();
    let mut utilities = Vec::new();
    for _ in 0..rounds {
        let body = field(lines.next(), "r")?;
        let (caps, rest) = body.split_once(" | ").ok_or_else(|| bad("round line missing ' | '"))?;
        capacity_rows.push(parse_f64_list(caps, ' ')?);
        match mode {
            TraceMode::Stability => arrival_rows.push(parse_f64_list(rest, ' ')?),
            TraceMode::Utility => {
                let spec = if let Some(w) = rest.strip_prefix("log ") {
                    UtilitySpec::LogWeights { weights: parse_f64_list(w, ',')? }
                } else if let Some(body) = rest.strip_prefix("linquad ") {
                    let (a, b) = body.split_once(" / ").ok_or_else(|| bad("bad linquad params"))?;
                    UtilitySpec::LinQuad {
                        linear: parse_f64_list(a, ',')?,
                        quad: parse_f64_list(b, ',')?,
                    }
                } else {
                    return Err(bad(&format!("unknown utility record '{rest}'")));
                };
                utilities.push(spec);
            }
        }
    }
    if lines.next().is_some() {
        return Err(bad("trailing data after the last round"));
    }

    let trace = AdversaryTrace {
        topology: topo,
        mode,
        arrival_entries,
        capacity_rows,
        arrival_rows: (mode == TraceMode::Stability).then_some(arrival_rows),
        utilities: (mode == TraceMode::Utility).then_some(utilities),
        utility_domain,
        utility_bound,
        utility_lipschitz,
    };
    trace.validate()?;
    let reference = ReferencePolicy {
        allocation_segments,
        arrival_segments: (mode == TraceMode::Utility).then_some(arrival_segments_vec),
        windows,
        slack,
        window_constant,
        alloc_path_budget,
        arrival_path_budget,
    };
    reference.validate(&trace.topology, trace.rounds())?;
    Ok((trace, reference))
}

/// Content hash of a serialized trace: SHA-256 over a `blob`-framed payload,
/// rendered as lowercase hex.
pub fn trace_content_hash(serialized: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", serialized.len()).as_bytes());
    hasher.update(serialized.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
