//! Network topology, queue state, and the queue-update dynamics.
//!
//! Jobs are fluid (real-valued). A round moves jobs in three strokes: each
//! queue loses its outgoing transmissions (clipped at zero jointly over the
//! queue's total outgoing service), gains incoming transmissions in full, and
//! gains external arrivals. Destination queues are identically zero: a
//! commodity-`k` job reaching server `k` leaves the network.
//!
//! Incoming transmissions are credited in full even when the upstream queue
//! was short; this is a fluid-model artifact of the dynamics and is kept
//! verbatim (flow conservation is not enforced).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AnoqError, Result};
use crate::FEASIBILITY_TOL;

/// Directed network: servers `0..server_count`, links as ordered directed
/// pairs, plus the global capacity bound `M` and arrival bound `R`.
///
/// Servers are 0-based internally; text formats use 1-based ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub server_count: usize,
    pub links: Vec<(usize, usize)>,
    pub capacity_bound: f64,
    pub arrival_bound: f64,
}

impl Topology {
    pub fn new(
        server_count: usize,
        links: Vec<(usize, usize)>,
        capacity_bound: f64,
        arrival_bound: f64,
    ) -> Result<Self> {
        if server_count == 0 {
            return Err(AnoqError::Invariant("server_count must be positive".into()));
        }
        if !(capacity_bound > 0.0) {
            return Err(AnoqError::Invariant(format!(
                "capacity_bound must be > 0, got {capacity_bound}"
            )));
        }
        if !(arrival_bound >= 0.0) {
            return Err(AnoqError::Invariant(format!(
                "arrival_bound must be >= 0, got {arrival_bound}"
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(n, m) in &links {
            if n == m {
                return Err(AnoqError::Invariant(format!("self-loop link {}>{}", n + 1, m + 1)));
            }
            if n >= server_count || m >= server_count {
                return Err(AnoqError::Invariant(format!(
                    "link {}>{} endpoint outside 1..={}",
                    n + 1,
                    m + 1,
                    server_count
                )));
            }
            if !seen.insert((n, m)) {
                return Err(AnoqError::Invariant(format!("duplicate link {}>{}", n + 1, m + 1)));
            }
        }
        Ok(Self { server_count, links, capacity_bound, arrival_bound })
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Indices into `links` of links leaving server `n`.
    pub fn out_links(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.links.iter().enumerate().filter(move |(_, l)| l.0 == n).map(|(i, _)| i)
    }

    /// Indices into `links` of links entering server `n`.
    pub fn in_links(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.links.iter().enumerate().filter(move |(_, l)| l.1 == n).map(|(i, _)| i)
    }

    /// Worst-case one-round change of a single queue entry: `2NM + R`.
    pub fn queue_increment_bound(&self) -> f64 {
        2.0 * self.server_count as f64 * self.capacity_bound + self.arrival_bound
    }
}

/// Per-(server, commodity) nonnegative backlogs, row = server, column =
/// commodity. The diagonal (destination queues) is identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueMatrix {
    n: usize,
    backlog: Vec<f64>,
}

impl QueueMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, backlog: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut q = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(AnoqError::Structural(format!(
                    "queue row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                q.set(i, k, v)?;
            }
        }
        Ok(q)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, server: usize, commodity: usize) -> f64 {
        self.backlog[server * self.n + commodity]
    }

    pub fn set(&mut self, server: usize, commodity: usize, v: f64) -> Result<()> {
        if v < 0.0 {
            return Err(AnoqError::Invariant(format!(
                "negative backlog {v} at ({server},{commodity})"
            )));
        }
        if server == commodity && v != 0.0 {
            return Err(AnoqError::Invariant(format!(
                "destination queue ({server},{commodity}) must stay 0"
            )));
        }
        self.backlog[server * self.n + commodity] = v;
        Ok(())
    }

    /// Backlog vector of server `n` over all commodities.
    pub fn row(&self, server: usize) -> &[f64] {
        &self.backlog[server * self.n..(server + 1) * self.n]
    }

    /// Row-major flattened view (fixed order for norm computations).
    pub fn flat(&self) -> &[f64] {
        &self.backlog
    }

    pub fn l1(&self) -> f64 {
        self.backlog.iter().sum()
    }

    pub fn l2_squared(&self) -> f64 {
        self.backlog.iter().map(|x| x * x).sum()
    }

    pub fn l2(&self) -> f64 {
        self.l2_squared().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.backlog.iter().fold(0.0_f64, |a, &b| a.max(b))
    }
}

/// Total backlog in the network, `‖Q‖₁`.
pub fn queue_l1(q: &QueueMatrix) -> f64 {
    q.l1()
}

/// Per-link probability vector over commodities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAllocationPlan {
    /// Aligned with `Topology::links`; each inner vector has length `N`.
    pub per_link: Vec<Vec<f64>>,
}

impl LinkAllocationPlan {
    /// One uniform distribution per link.
    pub fn uniform(topo: &Topology) -> Self {
        let n = topo.server_count;
        Self { per_link: vec![vec![1.0 / n as f64; n]; topo.link_count()] }
    }

    pub fn validate(&self, topo: &Topology) -> Result<()> {
        if self.per_link.len() != topo.link_count() {
            return Err(AnoqError::Structural(format!(
                "plan has {} links, topology has {}",
                self.per_link.len(),
                topo.link_count()
            )));
        }
        for (i, v) in self.per_link.iter().enumerate() {
            if v.len() != topo.server_count {
                return Err(AnoqError::Structural(format!(
                    "plan for link {i} has {} commodities, expected {}",
                    v.len(),
                    topo.server_count
                )));
            }
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > FEASIBILITY_TOL {
                return Err(AnoqError::Invariant(format!(
                    "plan for link {i} sums to {sum}, expected 1"
                )));
            }
            if let Some(&bad) = v.iter().find(|&&x| x < -FEASIBILITY_TOL) {
                return Err(AnoqError::Invariant(format!(
                    "plan for link {i} has negative entry {bad}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-link capacity in `[0, M]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityMatrix {
    /// Aligned with `Topology::links`.
    pub per_link: Vec<f64>,
}

impl CapacityMatrix {
    pub fn validate(&self, topo: &Topology) -> Result<()> {
        if self.per_link.len() != topo.link_count() {
            return Err(AnoqError::Structural(format!(
                "capacities cover {} links, topology has {}",
                self.per_link.len(),
                topo.link_count()
            )));
        }
        for (i, &c) in self.per_link.iter().enumerate() {
            if !(0.0..=topo.capacity_bound + FEASIBILITY_TOL).contains(&c) {
                return Err(AnoqError::Invariant(format!(
                    "capacity {c} on link {i} outside [0, {}]",
                    topo.capacity_bound
                )));
            }
        }
        Ok(())
    }
}

/// Realized per-(link, commodity) transmissions, each in `[0, M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMatrix {
    /// Aligned with `Topology::links`; inner length `N`.
    pub per_link: Vec<Vec<f64>>,
}

/// N×N external arrivals, entries in `[0, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ArrivalMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, server: usize, commodity: usize) -> f64 {
        self.values[server * self.n + commodity]
    }

    pub fn set(&mut self, server: usize, commodity: usize, v: f64) {
        self.values[server * self.n + commodity] = v;
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub fn validate(&self, topo: &Topology) -> Result<()> {
        if self.n != topo.server_count {
            return Err(AnoqError::Structural(format!(
                "arrival matrix is {}x{}, topology has {} servers",
                self.n, self.n, topo.server_count
            )));
        }
        for (i, &v) in self.values.iter().enumerate() {
            if !(-FEASIBILITY_TOL..=topo.arrival_bound + FEASIBILITY_TOL).contains(&v) {
                return Err(AnoqError::Invariant(format!(
                    "arrival {v} at flat index {i} outside [0, {}]",
                    topo.arrival_bound
                )));
            }
        }
        Ok(())
    }
}

/// How to turn a capacity and an allocation into realized transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmissionMode {
    /// `μ = C·a` exactly.
    Deterministic,
    /// `μ = M·Bernoulli(C·a/M)` independently per (link, commodity);
    /// unbiased for `C·a` and supported on `{0, M}`.
    Bernoulli,
}

/// One round of the queue dynamics.
///
/// For `k ≠ n`:
/// `Q'ₙ⁽ᵏ⁾ = [Qₙ⁽ᵏ⁾ − Σ_out μ]₊ + Σ_in μ + λₙ⁽ᵏ⁾`, and `Q'ₖ⁽ᵏ⁾ = 0`.
/// The positive part applies to the queue's total outgoing service, not
/// per-link.
pub fn step(
    q: &QueueMatrix,
    mu: &TransmissionMatrix,
    lam: &ArrivalMatrix,
    topo: &Topology,
) -> Result<QueueMatrix> {
    let n = topo.server_count;
    if q.dim() != n {
        return Err(AnoqError::Structural(format!(
            "queue matrix is {}x{}, topology has {n} servers",
            q.dim(),
            q.dim()
        )));
    }
    if mu.per_link.len() != topo.link_count() {
        return Err(AnoqError::Structural(format!(
            "transmissions cover {} links, topology has {}",
            mu.per_link.len(),
            topo.link_count()
        )));
    }
    if lam.dim() != n {
        return Err(AnoqError::Structural(format!(
            "arrival matrix is {}x{}, topology has {n} servers",
            lam.dim(),
            lam.dim()
        )));
    }
    for (i, v) in mu.per_link.iter().enumerate() {
        if v.len() != n {
            return Err(AnoqError::Structural(format!(
                "transmissions for link {i} have {} commodities, expected {n}",
                v.len()
            )));
        }
    }

    let mut next = QueueMatrix::zeros(n);
    for server in 0..n {
        for k in 0..n {
            if k == server {
                continue;
            }
            let outgoing: f64 = topo.out_links(server).map(|l| mu.per_link[l][k]).sum();
            let incoming: f64 = topo.in_links(server).map(|l| mu.per_link[l][k]).sum();
            let drained = (q.get(server, k) - outgoing).max(0.0);
            next.set(server, k, drained + incoming + lam.get(server, k))?;
        }
    }
    Ok(next)
}

/// Realize transmissions from capacities and an allocation plan.
///
/// Deterministic mode returns `μ = C·a` exactly; Bernoulli mode scales a coin
/// flip to `[0, M]` so that `E[μ] = C·a` holds in both modes.
pub fn realize_transmissions<R: Rng + ?Sized>(
    c: &CapacityMatrix,
    plan: &LinkAllocationPlan,
    mode: TransmissionMode,
    topo: &Topology,
    rng: &mut R,
) -> Result<TransmissionMatrix> {
    c.validate(topo)?;
    plan.validate(topo)?;
    let m = topo.capacity_bound;
    let per_link = c
        .per_link
        .iter()
        .zip(&plan.per_link)
        .map(|(&cap, alloc)| {
            alloc
                .iter()
                .map(|&a| {
                    let mean = (cap * a.max(0.0)).min(m);
                    match mode {
                        TransmissionMode::Deterministic => mean,
                        TransmissionMode::Bernoulli => {
                            let p = mean / m;
                            if rng.random::<f64>() < p {
                                m
                            } else {
                                0.0
                            }
                        }
                    }
                })
                .collect()
        })
        .collect();
    Ok(TransmissionMatrix { per_link })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn two_node_line() -> Topology {
        Topology::new(2, vec![(0, 1)], 2.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_bad_endpoints() {
        assert!(Topology::new(2, vec![(0, 0)], 1.0, 1.0).is_err());
        assert!(Topology::new(2, vec![(0, 2)], 1.0, 1.0).is_err());
        assert!(Topology::new(2, vec![(0, 1), (0, 1)], 1.0, 1.0).is_err());
        assert!(Topology::new(2, vec![(0, 1)], 0.0, 1.0).is_err());
    }

    #[test]
    fn step_zero_fixed_point() {
        let topo = two_node_line();
        let q = QueueMatrix::zeros(2);
        let mu = TransmissionMatrix { per_link: vec![vec![0.0, 0.0]] };
        let lam = ArrivalMatrix::zeros(2);
        let next = step(&q, &mu, &lam, &topo).unwrap();
        assert_eq!(next, QueueMatrix::zeros(2));
    }

    #[test]
    fn step_direct_substitution() {
        // Q_1^{(2)}=3, mu_{1,2}^{(2)}=1, lambda_1^{(2)}=0.5 -> Q'_1^{(2)}=2.5,
        // and the transmitted jobs vanish at their destination.
        let topo = two_node_line();
        let mut q = QueueMatrix::zeros(2);
        q.set(0, 1, 3.0).unwrap();
        let mu = TransmissionMatrix { per_link: vec![vec![0.0, 1.0]] };
        let mut lam = ArrivalMatrix::zeros(2);
        lam.set(0, 1, 0.5);
        let next = step(&q, &mu, &lam, &topo).unwrap();
        assert_eq!(next.get(0, 1), 2.5);
        assert_eq!(next.get(1, 1), 0.0);
    }

    #[test]
    fn step_underflow_clipping() {
        // Q=1, outgoing 3, lambda=2 -> [1-3]_+ + 2 = 2.
        let topo = Topology::new(2, vec![(0, 1)], 3.0, 2.0).unwrap();
        let mut q = QueueMatrix::zeros(2);
        q.set(0, 1, 1.0).unwrap();
        let mu = TransmissionMatrix { per_link: vec![vec![0.0, 3.0]] };
        let mut lam = ArrivalMatrix::zeros(2);
        lam.set(0, 1, 2.0);
        let next = step(&q, &mu, &lam, &topo).unwrap();
        assert_eq!(next.get(0, 1), 2.0);
    }

    #[test]
    fn step_dimension_mismatch_is_structural() {
        let topo = two_node_line();
        let q = QueueMatrix::zeros(3);
        let mu = TransmissionMatrix { per_link: vec![vec![0.0, 0.0]] };
        let lam = ArrivalMatrix::zeros(2);
        assert!(matches!(step(&q, &mu, &lam, &topo), Err(AnoqError::Structural(_))));
    }

    #[test]
    fn queue_l1_examples() {
        assert_eq!(queue_l1(&QueueMatrix::zeros(3)), 0.0);
        let mut q = QueueMatrix::zeros(3);
        q.set(0, 1, 2.5).unwrap();
        assert_eq!(queue_l1(&q), 2.5);
        let q = QueueMatrix::from_rows(&[vec![0.0, 3.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(queue_l1(&q), 4.0);
    }

    #[test]
    fn realize_deterministic() {
        let topo = Topology::new(3, vec![(0, 1)], 2.0, 0.0).unwrap();
        let c = CapacityMatrix { per_link: vec![2.0] };
        let plan = LinkAllocationPlan { per_link: vec![vec![0.5, 0.5, 0.0]] };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mu =
            realize_transmissions(&c, &plan, TransmissionMode::Deterministic, &topo, &mut rng)
                .unwrap();
        assert_eq!(mu.per_link[0], vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn realize_bernoulli_zero_capacity() {
        let topo = Topology::new(2, vec![(0, 1)], 1.0, 0.0).unwrap();
        let c = CapacityMatrix { per_link: vec![0.0] };
        let plan = LinkAllocationPlan { per_link: vec![vec![0.5, 0.5]] };
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mu =
                realize_transmissions(&c, &plan, TransmissionMode::Bernoulli, &topo, &mut rng)
                    .unwrap();
            assert_eq!(mu.per_link[0], vec![0.0, 0.0]);
        }
    }

    #[test]
    fn realize_bernoulli_monte_carlo_mean() {
        // C=2, M=4, a=(0.5,0.5,0): each realized entry has mean 1. With 1e5
        // draws the sample mean must land within 1 +- 0.05 (~9 standard
        // errors), and within 5 standard errors for the invariant check.
        let topo = Topology::new(3, vec![(0, 1)], 4.0, 0.0).unwrap();
        let c = CapacityMatrix { per_link: vec![2.0] };
        let plan = LinkAllocationPlan { per_link: vec![vec![0.5, 0.5, 0.0]] };
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let draws = 100_000;
        let mut sums = [0.0_f64; 3];
        for _ in 0..draws {
            let mu =
                realize_transmissions(&c, &plan, TransmissionMode::Bernoulli, &topo, &mut rng)
                    .unwrap();
            for k in 0..3 {
                assert!(mu.per_link[0][k] == 0.0 || mu.per_link[0][k] == 4.0);
                sums[k] += mu.per_link[0][k];
            }
        }
        let mean0 = sums[0] / draws as f64;
        assert!((mean0 - 1.0).abs() < 0.05, "mean {mean0} outside 1±0.05");
        // 5-standard-error check on every entry, se = M*sqrt(p(1-p)/n).
        let se = 4.0 * (0.25_f64 * 0.75 / draws as f64).sqrt();
        for (k, expected) in [(0usize, 1.0_f64), (1, 1.0), (2, 0.0)] {
            let mean = sums[k] / draws as f64;
            assert!(
                (mean - expected).abs() <= 5.0 * se.max(1e-12),
                "entry {k}: mean {mean} vs {expected}"
            );
        }
    }

    #[test]
    fn realize_deterministic_given_seed() {
        let topo = Topology::new(2, vec![(0, 1)], 1.0, 0.0).unwrap();
        let c = CapacityMatrix { per_link: vec![0.5] };
        let plan = LinkAllocationPlan { per_link: vec![vec![0.5, 0.5]] };
        let run = |seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| {
                    realize_transmissions(&c, &plan, TransmissionMode::Bernoulli, &topo, &mut rng)
                        .unwrap()
                        .per_link
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn randomized_run_respects_increment_bound() {
        let topo = Topology::new(3, vec![(0, 1), (1, 0), (1, 2), (2, 1)], 1.0, 1.0).unwrap();
        let bound = topo.queue_increment_bound();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut q = QueueMatrix::zeros(3);
        for _ in 0..500 {
            let c = CapacityMatrix {
                per_link: (0..4).map(|_| rng.random::<f64>()).collect(),
            };
            let plan = LinkAllocationPlan {
                per_link: (0..4)
                    .map(|_| {
                        let raw: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                        let s: f64 = raw.iter().sum();
                        raw.iter().map(|x| x / s).collect()
                    })
                    .collect(),
            };
            let mu =
                realize_transmissions(&c, &plan, TransmissionMode::Bernoulli, &topo, &mut rng)
                    .unwrap();
            let mut lam = ArrivalMatrix::zeros(3);
            for s in 0..3 {
                for k in 0..3 {
                    if s != k {
                        lam.set(s, k, rng.random::<f64>());
                    }
                }
            }
            let next = step(&q, &mu, &lam, &topo).unwrap();
            for s in 0..3 {
                for k in 0..3 {
                    let delta = (next.get(s, k) - q.get(s, k)).abs();
                    assert!(delta <= bound + 1e-9, "|ΔQ|={delta} exceeds {bound}");
                }
                assert_eq!(next.get(s, s), 0.0);
            }
            q = next;
        }
    }
}
