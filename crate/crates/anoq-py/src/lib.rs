//! Python bindings: the network model, the two learning engines, and the
//! run/sweep harness, driven in-process from Python.
//!
//! Usage from Python:
//!
//!     import anoq_py as aq
//!     topo = aq.Topology(3, [(1, 2), (2, 3)], 1.0, 1.0)
//!     q = aq.step(topo, q, mu, lam)
//!     summary, csv = aq.run_scenario(toml_text)

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use anoq::adversary;
use anoq::bco;
use anoq::error::AnoqError;
use anoq::harness;
use anoq::net;
use anoq::olo;
use anoq::scenario::Scenario;

fn err(e: AnoqError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Directed network topology. Servers and link endpoints are 1-based here,
/// matching scenario and trace files.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Topology {
    inner: net::Topology,
}

#[pymethods]
impl Topology {
    #[new]
    fn new(
        servers: usize,
        links: Vec<(usize, usize)>,
        capacity_bound: f64,
        arrival_bound: f64,
    ) -> PyResult<Self> {
        let links0: Vec<(usize, usize)> = links
            .iter()
            .map(|&(a, b)| {
                if a == 0 || b == 0 {
                    Err(PyValueError::new_err("link endpoints are 1-based"))
                } else {
                    Ok((a - 1, b - 1))
                }
            })
            .collect::<PyResult<_>>()?;
        Ok(Self {
            inner: net::Topology::new(servers, links0, capacity_bound, arrival_bound)
                .map_err(err)?,
        })
    }

    #[getter]
    fn servers(&self) -> usize {
        self.inner.server_count
    }

    #[getter]
    fn links(&self) -> Vec<(usize, usize)> {
        self.inner.links.iter().map(|&(a, b)| (a + 1, b + 1)).collect()
    }

    fn queue_increment_bound(&self) -> f64 {
        self.inner.queue_increment_bound()
    }

    fn __repr__(&self) -> String {
        format!(
            "Topology(servers={}, links={}, M={}, R={})",
            self.inner.server_count,
            self.inner.link_count(),
            self.inner.capacity_bound,
            self.inner.arrival_bound
        )
    }
}

fn queue_from_rows(rows: Vec<Vec<f64>>) -> PyResult<net::QueueMatrix> {
    net::QueueMatrix::from_rows(&rows).map_err(err)
}

fn queue_to_rows(q: &net::QueueMatrix) -> Vec<Vec<f64>> {
    (0..q.dim()).map(|s| q.row(s).to_vec()).collect()
}

/// One round of the queue dynamics. `q` and `lam` are NxN nested lists
/// (row = server, column = commodity), `mu` is per-link-per-commodity.
#[pyfunction]
fn step(
    topo: &Topology,
    q: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
    lam: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let n = topo.inner.server_count;
    let qm = queue_from_rows(q)?;
    let mut am = net::ArrivalMatrix::zeros(n);
    if lam.len() != n {
        return Err(PyValueError::new_err("arrival matrix must be NxN"));
    }
    for (s, row) in lam.iter().enumerate() {
        if row.len() != n {
            return Err(PyValueError::new_err("arrival matrix must be NxN"));
        }
        for (k, &v) in row.iter().enumerate() {
            am.set(s, k, v);
        }
    }
    let tm = net::TransmissionMatrix { per_link: mu };
    let next = net::step(&qm, &tm, &am, &topo.inner).map_err(err)?;
    Ok(queue_to_rows(&next))
}

/// Realize per-(link, commodity) transmissions from capacities and a plan.
/// `mode` is "deterministic" or "bernoulli".
#[pyfunction]
fn realize_transmissions(
    topo: &Topology,
    capacities: Vec<f64>,
    plan: Vec<Vec<f64>>,
    mode: &str,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    use rand::SeedableRng;
    let mode = match mode {
        "deterministic" => net::TransmissionMode::Deterministic,
        "bernoulli" => net::TransmissionMode::Bernoulli,
        other => return Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    };
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mu = net::realize_transmissions(
        &net::CapacityMatrix { per_link: capacities },
        &net::LinkAllocationPlan { per_link: plan },
        mode,
        &topo.inner,
        &mut rng,
    )
    .map_err(err)?;
    Ok(mu.per_link)
}

/// Total backlog of a queue matrix.
#[pyfunction]
fn queue_l1(q: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(queue_from_rows(q)?.l1())
}

/// Magnitude-adaptive online linear optimizer on the probability simplex.
#[pyclass]
struct AdaPfol {
    inner: olo::AdaPfol,
}

#[pymethods]
impl AdaPfol {
    /// `base_learner` is "ogd_mixture" (default) or "fixed_share_ogd".
    #[new]
    #[pyo3(signature = (dim, horizon, base_learner = "ogd_mixture"))]
    fn new(dim: usize, horizon: u64, base_learner: &str) -> PyResult<Self> {
        let kind = match base_learner {
            "ogd_mixture" => olo::BaseLearnerKind::OgdMixture,
            "fixed_share_ogd" => olo::BaseLearnerKind::FixedShareOgd,
            other => {
                return Err(PyValueError::new_err(format!("unknown base learner '{other}'")))
            }
        };
        Ok(Self { inner: olo::AdaPfol::new(olo::make_base_learner(kind, dim, horizon)) })
    }

    /// Announce the coming round's loss-magnitude bound; returns True when
    /// the scale doubled and the base learner restarted.
    fn announce_bound(&mut self, g_t: f64) -> PyResult<bool> {
        self.inner.announce_bound(g_t).map_err(err)
    }

    fn act(&self) -> Vec<f64> {
        self.inner.act()
    }

    fn feed(&mut self, loss: Vec<f64>) -> PyResult<()> {
        self.inner.feed(&loss).map_err(err)
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    #[getter]
    fn resets(&self) -> u32 {
        self.inner.resets()
    }
}

/// One-point bandit convex optimizer on a box, with the queue-dependent
/// learning-rate schedule.
#[pyclass]
struct AdaBgd {
    inner: bco::AdaBgd,
    rng: rand_chacha::ChaCha12Rng,
    pending: Option<(bco::ScheduleTriple, Vec<f64>)>,
}

#[pymethods]
impl AdaBgd {
    #[new]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (lo, hi, path_coeff, path_delta, horizon, v, utility_bound, lipschitz, increment_bound, seed))]
    fn new(
        lo: Vec<f64>,
        hi: Vec<f64>,
        path_coeff: f64,
        path_delta: f64,
        horizon: u64,
        v: f64,
        utility_bound: f64,
        lipschitz: f64,
        increment_bound: f64,
        seed: u64,
    ) -> PyResult<Self> {
        use rand::SeedableRng;
        let set = bco::BallSandwichedSet::of_box(&lo, &hi).map_err(err)?;
        let cfg = bco::AdaBgdConfig {
            path_coeff,
            path_delta,
            horizon,
            v,
            utility_bound,
            lipschitz,
            increment_bound,
        };
        Ok(Self {
            inner: bco::AdaBgd::new(set, cfg).map_err(err)?,
            rng: rand_chacha::ChaCha12Rng::seed_from_u64(seed),
            pending: None,
        })
    }

    /// Compute this round's (eta, delta, alpha) from the pre-decision queue
    /// norms.
    fn schedule(&mut self, queue_linf: f64, queue_l2: f64) -> PyResult<(f64, f64, f64)> {
        let triple = self.inner.schedule(queue_linf, queue_l2).map_err(err)?;
        self.pending = Some((triple, Vec::new()));
        Ok((triple.eta, triple.delta, triple.alpha))
    }

    /// Play the exploration point for the scheduled round, in ambient
    /// coordinates.
    fn act(&mut self) -> PyResult<Vec<f64>> {
        let (triple, _) = self
            .pending
            .take()
            .ok_or_else(|| PyValueError::new_err("call schedule() before act()"))?;
        let (x, s) = self.inner.act(&triple, &mut self.rng);
        let ambient = self.inner.set().to_ambient(&x);
        self.pending = Some((triple, s));
        Ok(ambient)
    }

    /// Feed the observed loss value of the played point.
    fn feed(&mut self, loss_value: f64) -> PyResult<()> {
        let (triple, s) = self
            .pending
            .take()
            .ok_or_else(|| PyValueError::new_err("call schedule() and act() before feed()"))?;
        if s.is_empty() {
            return Err(PyValueError::new_err("call act() before feed()"));
        }
        self.inner.feed(&triple, loss_value, &s);
        Ok(())
    }

    #[getter]
    fn max_alpha(&self) -> f64 {
        self.inner.max_alpha()
    }

    #[getter]
    fn eta_strictly_decreasing(&self) -> bool {
        self.inner.eta_strictly_decreasing()
    }
}

/// Exact dynamic regret of an action log against a comparator log.
#[pyfunction]
fn measure_dynamic_regret(
    losses: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    comparators: Vec<Vec<f64>>,
) -> PyResult<f64> {
    olo::measure_dynamic_regret(&losses, &actions, &comparators).map_err(err)
}

/// l1 path length of a vector sequence.
#[pyfunction]
fn path_length(seq: Vec<Vec<f64>>) -> f64 {
    adversary::path_length(&seq)
}

/// Run one scenario from TOML text; returns (summary_json, rounds_csv).
#[pyfunction]
fn run_scenario(toml_text: &str) -> PyResult<(String, String)> {
    let scn = Scenario::from_toml_str(toml_text).map_err(err)?;
    let out = harness::run_scenario(&scn).map_err(err)?;
    let summary = serde_json::json!({
        "avg_queue": out.summary.avg_queue,
        "avg_utility_gap": out.summary.avg_utility_gap,
        "olo_regret_total": out.summary.olo_regret_total,
        "bco_regret": out.summary.bco_regret,
        "reset_counts": out.summary.reset_counts,
        "max_alpha": out.summary.max_alpha,
        "eta_strictly_decreasing": out.summary.eta_strictly_decreasing,
        "invariants_ok": out.summary.invariants_ok,
        "trace_hash": out.manifest.trace_hash,
        "certified_slack": out.manifest.certified_slack,
        "warnings": out.manifest.warnings,
    });
    Ok((summary.to_string(), out.csv))
}

/// Sweep an axis ("V", "T", "seed", "scheduler") over values; returns the
/// summary CSV.
#[pyfunction]
#[pyo3(signature = (toml_text, axis, values, seeds = Vec::new()))]
fn sweep(toml_text: &str, axis: &str, values: Vec<String>, seeds: Vec<u64>) -> PyResult<String> {
    let scn = Scenario::from_toml_str(toml_text).map_err(err)?;
    let axis: harness::SweepAxis = axis.parse().map_err(err)?;
    let table = harness::sweep(&scn, axis, &values, &seeds).map_err(err)?;
    Ok(harness::sweep_table_to_csv(&table))
}

/// Generate the scenario's trace + certified reference; returns the trace
/// file text.
#[pyfunction]
fn generate_trace(toml_text: &str) -> PyResult<String> {
    let scn = Scenario::from_toml_str(toml_text).map_err(err)?;
    let topo = scn.build_topology().map_err(err)?;
    let params = scn.trace_params().map_err(err)?;
    let mut rng = harness::trace_rng(scn.scenario.seed);
    let (trace, reference) =
        adversary::generate_trace(&topo, &params, scn.scenario.mode, &mut rng).map_err(err)?;
    Ok(adversary::serialize_trace(&trace, &reference))
}

/// Re-verify a trace file's reference policy. Returns a dict-like JSON
/// string: {"accept": bool, "slack": .. } or rejection details.
#[pyfunction]
fn verify_trace(trace_text: &str) -> PyResult<String> {
    let (trace, reference) = adversary::parse_trace(trace_text).map_err(err)?;
    let outcome = adversary::verify_piecewise_stability(&trace, &reference, &trace.topology)
        .map_err(err)?;
    let json = match outcome {
        adversary::VerifyOutcome::Accept { slack } => {
            serde_json::json!({"accept": true, "slack": slack})
        }
        adversary::VerifyOutcome::Reject { window, server, commodity, deficit } => {
            serde_json::json!({
                "accept": false,
                "window": window + 1,
                "server": server + 1,
                "commodity": commodity + 1,
                "deficit": deficit,
            })
        }
    };
    Ok(json.to_string())
}

/// Content hash of a serialized trace.
#[pyfunction]
fn trace_hash(trace_text: &str) -> String {
    adversary::trace_content_hash(trace_text)
}

#[pymodule]
fn anoq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Topology>()?;
    m.add_class::<AdaPfol>()?;
    m.add_class::<AdaBgd>()?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(realize_transmissions, m)?)?;
    m.add_function(wrap_pyfunction!(queue_l1, m)?)?;
    m.add_function(wrap_pyfunction!(measure_dynamic_regret, m)?)?;
    m.add_function(wrap_pyfunction!(path_length, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(generate_trace, m)?)?;
    m.add_function(wrap_pyfunction!(verify_trace, m)?)?;
    m.add_function(wrap_pyfunction!(trace_hash, m)?)?;
    Ok(())
}
