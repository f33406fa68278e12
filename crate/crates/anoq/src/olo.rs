//! Online linear optimization on the probability simplex with per-round
//! loss-magnitude announcements.
//!
//! [`AdaPfol`] wraps a pluggable no-regret base learner. The caller announces
//! an upper bound on the coming loss magnitude before acting; whenever the
//! announcement exceeds the current normalization scale, the scale doubles
//! past it and the base learner restarts from scratch. Losses are fed to the
//! base learner divided by the scale, so it only ever sees vectors with
//! sup-norm at most one.
//!
//! The stock base learner is a bank of self-confident projected-OGD iterates
//! on a geometric step grid, combined by a fixed-share Hedge mixture. The
//! step grid is what lets the combination track a moving comparator; a single
//! step size has to choose between converging and tracking.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AnoqError, Result};
use crate::simplex::project_to_simplex;

/// l1 diameter of the probability simplex.
pub const SIMPLEX_DIAMETER: f64 = 2.0;

/// Base online-linear learner over the probability simplex.
///
/// Contract: `act` returns a feasible simplex point; `feed` is only called
/// with `‖g‖∞ ≤ 1`; `reset` restores the freshly-constructed state.
pub trait BaseLearner: Send + Sync {
    fn dim(&self) -> usize;
    fn act(&self) -> Vec<f64>;
    fn feed(&mut self, loss: &[f64]);
    fn reset(&mut self);
}

/// Which base learner to instantiate under [`AdaPfol`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaseLearnerKind {
    /// Step-grid OGD bank with a fixed-share Hedge combiner.
    #[default]
    OgdMixture,
    /// Single self-confident OGD iterate mixed toward uniform each round.
    FixedShareOgd,
}

pub fn make_base_learner(kind: BaseLearnerKind, dim: usize, horizon: u64) -> Box<dyn BaseLearner> {
    match kind {
        BaseLearnerKind::OgdMixture => Box::new(OgdMixture::new(dim, horizon)),
        BaseLearnerKind::FixedShareOgd => Box::new(FixedShareOgd::new(dim, horizon)),
    }
}

/// Single projected-OGD iterate with self-confident steps
/// `η_t = D / sqrt(1 + Σ_{s≤t} ‖g_s‖∞²)` and a per-round mix toward uniform
/// with coefficient `1/T`.
#[derive(Debug, Clone)]
pub struct FixedShareOgd {
    x: Vec<f64>,
    sq_sum: f64,
    mix: f64,
}

impl FixedShareOgd {
    pub fn new(dim: usize, horizon: u64) -> Self {
        assert!(dim > 0);
        Self { x: vec![1.0 / dim as f64; dim], sq_sum: 0.0, mix: 1.0 / horizon.max(1) as f64 }
    }
}

impl BaseLearner for FixedShareOgd {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn act(&self) -> Vec<f64> {
        self.x.clone()
    }

    fn feed(&mut self, loss: &[f64]) {
        assert_eq!(loss.len(), self.x.len());
        let linf = loss.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        if linf == 0.0 {
            // Zero loss carries no information; keep the state bit-identical.
            return;
        }
        self.sq_sum += linf * linf;
        let eta = SIMPLEX_DIAMETER / (1.0 + self.sq_sum).sqrt();
        let stepped: Vec<f64> =
            self.x.iter().zip(loss).map(|(&xi, &gi)| xi - eta * gi).collect();
        let projected = project_to_simplex(&stepped);
        let u = 1.0 / self.x.len() as f64;
        for (xi, pi) in self.x.iter_mut().zip(projected) {
            *xi = (1.0 - self.mix) * pi + self.mix * u;
        }
    }

    fn reset(&mut self) {
        let u = 1.0 / self.x.len() as f64;
        self.x.fill(u);
        self.sq_sum = 0.0;
    }
}

/// Bank of self-confident projected-OGD iterates whose step sizes form a
/// geometric grid, combined by Hedge with a fixed-share mix of `1/T`.
///
/// Expert `i` uses `η_t = 2^i · D / sqrt(1 + Σ_{s≤t} ‖g_s‖∞²)`. The grid has
/// `⌈log₂(1 + 2T)/2⌉ + 1 `entries, enough to bracket the best tracking step
/// for any comparator path length up to `O(T)`.
#[derive(Debug, Clone)]
pub struct OgdMixture {
    experts: Vec<Vec<f64>>,
    weights: Vec<f64>,
    sq_sum: f64,
    mix: f64,
    dim: usize,
}

impl OgdMixture {
    pub fn new(dim: usize, horizon: u64) -> Self {
        assert!(dim > 0);
        let t = horizon.max(1) as f64;
        let k = ((1.0 + 2.0 * t).log2() / 2.0).ceil() as usize + 1;
        Self {
            experts: vec![vec![1.0 / dim as f64; dim]; k],
            weights: vec![1.0 / k as f64; k],
            sq_sum: 0.0,
            mix: 1.0 / t,
            dim,
        }
    }

    fn expert_count(&self) -> usize {
        self.experts.len()
    }
}

impl BaseLearner for OgdMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn act(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (w, x) in self.weights.iter().zip(&self.experts) {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += w * xi;
            }
        }
        out
    }

    fn feed(&mut self, loss: &[f64]) {
        assert_eq!(loss.len(), self.dim);
        let linf = loss.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        if linf == 0.0 {
            return;
        }
        self.sq_sum += linf * linf;
        let k = self.expert_count();

        // Hedge reweighting by each expert's incurred linear loss, with a
        // self-confident meta rate.
        let meta_rate = ((k as f64).ln().max(1.0) / (1.0 + self.sq_sum)).sqrt();
        let losses: Vec<f64> = self
            .experts
            .iter()
            .map(|x| x.iter().zip(loss).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let min_loss = losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut z = 0.0;
        for (w, l) in self.weights.iter_mut().zip(&losses) {
            *w *= (-meta_rate * (l - min_loss)).exp();
            z += *w;
        }
        for w in &mut self.weights {
            *w /= z;
            *w = (1.0 - self.mix) * *w + self.mix / k as f64;
        }

        // Gradient step for every expert on its own step scale.
        let base_eta = SIMPLEX_DIAMETER / (1.0 + self.sq_sum).sqrt();
        for (i, x) in self.experts.iter_mut().enumerate() {
            let eta = base_eta * (1u64 << i.min(62)) as f64;
            let stepped: Vec<f64> = x.iter().zip(loss).map(|(&xi, &gi)| xi - eta * gi).collect();
            *x = project_to_simplex(&stepped);
        }
    }

    fn reset(&mut self) {
        let u = 1.0 / self.dim as f64;
        for x in &mut self.experts {
            x.fill(u);
        }
        let k = self.expert_count();
        self.weights.fill(1.0 / k as f64);
        self.sq_sum = 0.0;
    }
}

/// Magnitude-doubling wrapper around a base learner.
pub struct AdaPfol {
    inner: Box<dyn BaseLearner>,
    scale: f64,
    announced: f64,
    resets: u32,
    /// Cumulative `Σ‖g_t‖∞²` of the raw (unnormalized) losses, diagnostics.
    sq_loss_history: f64,
}

impl AdaPfol {
    pub fn new(inner: Box<dyn BaseLearner>) -> Self {
        Self { inner, scale: 1.0, announced: 0.0, resets: 0, sq_loss_history: 0.0 }
    }

    pub fn with_default_learner(dim: usize, horizon: u64) -> Self {
        Self::new(make_base_learner(BaseLearnerKind::default(), dim, horizon))
    }

    /// Announce the maximum loss magnitude for the coming round. If it
    /// exceeds the current scale, the scale jumps to twice the announcement
    /// and the base learner restarts before acting.
    pub fn announce_bound(&mut self, g_t: f64) -> Result<bool> {
        if !(g_t > 0.0) {
            return Err(AnoqError::Contract(format!(
                "announced bound must be positive, got {g_t}"
            )));
        }
        self.announced = g_t;
        if g_t > self.scale {
            self.scale = 2.0 * g_t;
            self.inner.reset();
            self.resets += 1;
            return Ok(true);
        }
        Ok(false)
    }

    /// Current action of the base learner, feasible in the simplex.
    pub fn act(&self) -> Vec<f64> {
        self.inner.act()
    }

    /// Feed the raw loss vector; the base learner receives `g / scale`.
    pub fn feed(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != self.inner.dim() {
            return Err(AnoqError::Structural(format!(
                "loss has {} entries, learner dimension is {}",
                g.len(),
                self.inner.dim()
            )));
        }
        let linf = g.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        if linf > self.scale * (1.0 + 1e-12) {
            return Err(AnoqError::Contract(format!(
                "loss magnitude {linf} exceeds scale {} (announced {})",
                self.scale, self.announced
            )));
        }
        self.sq_loss_history += linf * linf;
        let normalized: Vec<f64> = g.iter().map(|&v| v / self.scale).collect();
        self.inner.feed(&normalized);
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn resets(&self) -> u32 {
        self.resets
    }

    pub fn sq_loss_history(&self) -> f64 {
        self.sq_loss_history
    }
}

/// Exact dynamic regret `Σ_t ⟨g_t, x_t − x̊_t⟩` of a played sequence against
/// a comparator sequence.
pub fn measure_dynamic_regret(
    losses: &[Vec<f64>],
    actions: &[Vec<f64>],
    comparators: &[Vec<f64>],
) -> Result<f64> {
    if losses.len() != actions.len() || losses.len() != comparators.len() {
        return Err(AnoqError::LengthMismatch(format!(
            "losses {}, actions {}, comparators {}",
            losses.len(),
            actions.len(),
            comparators.len()
        )));
    }
    let mut total = 0.0;
    for ((g, x), c) in losses.iter().zip(actions).zip(comparators) {
        for i in 0..g.len() {
            total += g[i] * (x[i] - c[i]);
        }
    }
    Ok(total)
}

/// Uniform loss vectors in `[-bound, bound]^n`, test-stream helper.
pub fn random_loss<R: Rng + ?Sized>(n: usize, bound: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;
    use std::rc::Rc;

    /// Records every vector fed into it; acts uniformly.
    struct Recorder {
        dim: usize,
        fed: Rc<RefCell<Vec<Vec<f64>>>>,
        resets: Rc<RefCell<u32>>,
    }

    // Rc is fine in tests; Recorder never crosses threads.
    unsafe impl Send for Recorder {}
    unsafe impl Sync for Recorder {}

    impl BaseLearner for Recorder {
        fn dim(&self) -> usize {
            self.dim
        }
        fn act(&self) -> Vec<f64> {
            vec![1.0 / self.dim as f64; self.dim]
        }
        fn feed(&mut self, loss: &[f64]) {
            let linf = loss.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            assert!(linf <= 1.0 + 1e-12, "base learner received ‖g‖∞ = {linf} > 1");
            self.fed.borrow_mut().push(loss.to_vec());
        }
        fn reset(&mut self) {
            *self.resets.borrow_mut() += 1;
        }
    }

    fn recorder(dim: usize) -> (AdaPfol, Rc<RefCell<Vec<Vec<f64>>>>, Rc<RefCell<u32>>) {
        let fed = Rc::new(RefCell::new(Vec::new()));
        let resets = Rc::new(RefCell::new(0));
        let learner = Recorder { dim, fed: fed.clone(), resets: resets.clone() };
        (AdaPfol::new(Box::new(learner)), fed, resets)
    }

    #[test]
    fn announce_below_scale_is_noop() {
        let (mut a, _, resets) = recorder(3);
        assert!(!a.announce_bound(0.5).unwrap());
        assert_eq!(a.scale(), 1.0);
        assert_eq!(*resets.borrow(), 0);
    }

    #[test]
    fn announce_above_scale_doubles_and_resets() {
        let (mut a, _, resets) = recorder(3);
        assert!(a.announce_bound(3.0).unwrap());
        assert_eq!(a.scale(), 6.0);
        assert_eq!(*resets.borrow(), 1);
        // 5 <= 6: no further reset.
        assert!(!a.announce_bound(5.0).unwrap());
        assert_eq!(a.scale(), 6.0);
        assert_eq!(*resets.borrow(), 1);
    }

    #[test]
    fn nonpositive_announcement_is_contract_violation() {
        let (mut a, _, _) = recorder(3);
        assert!(matches!(a.announce_bound(0.0), Err(AnoqError::Contract(_))));
        assert!(matches!(a.announce_bound(-1.0), Err(AnoqError::Contract(_))));
    }

    #[test]
    fn feed_normalizes_by_scale() {
        let (mut a, fed, _) = recorder(2);
        a.announce_bound(3.0).unwrap(); // scale 6
        a.feed(&[4.0, -2.0]).unwrap();
        let seen = fed.borrow();
        assert_eq!(seen.len(), 1);
        assert!((seen[0][0] - 4.0 / 6.0).abs() < 1e-15);
        assert!((seen[0][1] + 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn feed_above_scale_errors() {
        let (mut a, _, _) = recorder(2);
        a.announce_bound(3.0).unwrap(); // scale 6
        assert!(matches!(a.feed(&[7.0, 0.0]), Err(AnoqError::Contract(_))));
    }

    #[test]
    fn fresh_state_acts_uniformly_and_reset_equals_fresh() {
        let mut a = AdaPfol::with_default_learner(3, 1000);
        let fresh = a.act();
        for v in &fresh {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        a.announce_bound(1.0).unwrap();
        a.feed(&[0.9, -0.5, 0.1]).unwrap();
        assert_ne!(a.act(), fresh);
        a.announce_bound(10.0).unwrap(); // forces reset
        assert_eq!(a.act(), fresh);
    }

    #[test]
    fn zero_loss_is_a_noop() {
        for kind in [BaseLearnerKind::OgdMixture, BaseLearnerKind::FixedShareOgd] {
            let mut a = AdaPfol::new(make_base_learner(kind, 3, 1000));
            a.announce_bound(1.0).unwrap();
            a.feed(&[0.5, -0.2, 0.0]).unwrap();
            let before = a.act();
            a.announce_bound(1.0).unwrap();
            a.feed(&[0.0, 0.0, 0.0]).unwrap();
            assert_eq!(a.act(), before);
        }
    }

    #[test]
    fn repeated_loss_on_first_coordinate_drains_its_mass() {
        for kind in [BaseLearnerKind::OgdMixture, BaseLearnerKind::FixedShareOgd] {
            let mut a = AdaPfol::new(make_base_learner(kind, 3, 10_000));
            let mut prev = a.act()[0];
            for _ in 0..200 {
                a.announce_bound(1.0).unwrap();
                a.feed(&[1.0, 0.0, 0.0]).unwrap();
                let now = a.act()[0];
                assert!(now <= prev + 1e-12, "mass on coordinate 1 increased: {prev} -> {now}");
                prev = now;
            }
            assert!(prev < 0.05, "mass on the lossy coordinate should collapse, got {prev}");
        }
    }

    #[test]
    fn reset_count_bounded_by_log_of_max_announcement() {
        let mut a = AdaPfol::with_default_learner(3, 100_000);
        let mut max_g: f64 = 0.0;
        let mut g = 0.3;
        for _ in 0..60 {
            g *= 1.8;
            max_g = max_g.max(g);
            a.announce_bound(g).unwrap();
            a.feed(&[g, -g / 2.0, 0.0]).unwrap();
        }
        let bound = max_g.log2().ceil() as u32 + 1;
        assert!(
            a.resets() <= bound,
            "resets {} exceed ceil(log2(max G)) + 1 = {bound}",
            a.resets()
        );
    }

    #[test]
    fn all_small_announcements_never_reset() {
        let mut a = AdaPfol::with_default_learner(2, 1000);
        for _ in 0..50 {
            a.announce_bound(0.7).unwrap();
            a.feed(&[0.5, -0.5]).unwrap();
        }
        assert_eq!(a.resets(), 0);
        assert_eq!(a.scale(), 1.0);
    }

    #[test]
    fn scale_equivariance_under_common_multiplier() {
        // With a round-1 announcement above 1 both streams reset immediately,
        // so the normalized streams coincide and the actions match exactly.
        use rand::SeedableRng;
        let c = 7.0;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        let mut base = AdaPfol::with_default_learner(4, 500);
        let mut scaled = AdaPfol::with_default_learner(4, 500);
        for t in 0..300 {
            let g_bound = if t == 0 { 2.0 } else { 1.5 + (t as f64 * 0.37).sin().abs() };
            base.announce_bound(g_bound).unwrap();
            scaled.announce_bound(c * g_bound).unwrap();
            let a1 = base.act();
            let a2 = scaled.act();
            for (x, y) in a1.iter().zip(&a2) {
                assert!((x - y).abs() < 1e-12, "round {t}: {x} vs {y}");
            }
            let g = random_loss(4, g_bound, &mut rng);
            let gc: Vec<f64> = g.iter().map(|v| c * v).collect();
            base.feed(&g).unwrap();
            scaled.feed(&gc).unwrap();
        }
    }

    #[test]
    fn dynamic_regret_examples() {
        let g = vec![vec![1.0, 0.0]];
        let x = vec![vec![1.0, 0.0]];
        let c = vec![vec![0.0, 1.0]];
        assert_eq!(measure_dynamic_regret(&g, &x, &c).unwrap(), 1.0);
        // actions == comparators -> 0
        assert_eq!(measure_dynamic_regret(&g, &x, &x).unwrap(), 0.0);
        // negated losses negate the regret
        let neg = vec![vec![-1.0, 0.0]];
        assert_eq!(measure_dynamic_regret(&neg, &x, &c).unwrap(), -1.0);
        // length mismatch
        assert!(measure_dynamic_regret(&g, &x, &[]).is_err());
    }

    /// D-Regret(2T)/2T < D-Regret(T)/T on a drifting stream, averaged over
    /// seeds: the per-round regret rate must shrink as the horizon grows.
    #[test]
    fn empirical_sublinearity_rate_decreases() {
        use rand::SeedableRng;
        let rate = |t_rounds: usize, seed: u64| -> f64 {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let dim = 4;
            let mut learner = AdaPfol::with_default_learner(dim, t_rounds as u64);
            let mut losses = Vec::new();
            let mut actions = Vec::new();
            let mut comparators = Vec::new();
            // Comparator switches a handful of times; bounded path length.
            let phases = 4usize;
            let phase_len = t_rounds / phases;
            for t in 0..t_rounds {
                let good = (t / phase_len).min(phases - 1) % dim;
                let mut g = vec![0.0; dim];
                for (i, gi) in g.iter_mut().enumerate() {
                    let noise = rng.random::<f64>() - 0.5;
                    *gi = if i == good { -0.5 } else { 0.5 } + noise;
                    *gi = gi.clamp(-1.0, 1.0);
                }
                learner.announce_bound(1.0).unwrap();
                let x = learner.act();
                learner.feed(&g).unwrap();
                let mut comp = vec![0.0; dim];
                comp[good] = 1.0;
                losses.push(g);
                actions.push(x);
                comparators.push(comp);
            }
            measure_dynamic_regret(&losses, &actions, &comparators).unwrap() / t_rounds as f64
        };

        for t in [1000usize, 10_000] {
            let seeds = 10;
            let short: f64 = (0..seeds).map(|s| rate(t, s)).sum::<f64>() / seeds as f64;
            let long: f64 = (0..seeds).map(|s| rate(2 * t, 1000 + s)).sum::<f64>() / seeds as f64;
            assert!(
                long < short,
                "per-round regret did not shrink: T={t}: {short:.5} vs 2T: {long:.5}"
            );
        }
    }
}
