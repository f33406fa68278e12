//! Experiment execution: single runs, sweeps, and artifact output.
//!
//! A run is deterministic in (scenario, seed): the trace, the transmissions,
//! and every scheduler random draw come from fixed, independently keyed
//! streams of one seeded generator. The round loop follows the decision
//! ordering of the utility algorithm: announce and act on the plan, schedule
//! and act on the arrivals, realize the environment, update queues with the
//! pre-update backlog in every loss, then feed the learners.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    generate_trace, serialize_trace, trace_content_hash, AdversaryTrace, ReferencePolicy,
    TraceMode,
};
use crate::bco::BallSandwichedSet;
use crate::error::{AnoqError, Result};
use crate::metrics::{
    format_sig12, olo_regret_vs_reference, round_records_to_csv, RoundRecord, RunSummary,
};
use crate::net::{realize_transmissions, step, LinkAllocationPlan, QueueMatrix, Topology};
use crate::scenario::{Scenario, SchedulerKind};
use crate::sched::{
    dpp_loss, ArrivalSet, FixedPlan, NsoScheduler, OracleBackpressure, Scheduler, Umo2Scheduler,
    UniformRandom,
};

/// Independent sub-streams of the run seed.
const STREAM_TRACE: u64 = 1;
const STREAM_TRANSMISSION: u64 = 2;
const STREAM_SCHEDULER: u64 = 3;

/// splitmix64-style mixing of (seed, stream) into a fresh seed.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(sub_seed(seed, stream))
}

/// The generator the harness uses for trace generation at this seed; exposed
/// so `gen-trace` emits the same bytes a `run` would consume.
pub fn trace_rng(seed: u64) -> ChaCha12Rng {
    stream_rng(seed, STREAM_TRACE)
}

/// Machine-readable record written alongside each CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Full scenario echo.
    pub scenario: Scenario,
    pub seed: u64,
    /// Content hash of the serialized trace.
    pub trace_hash: String,
    pub scheduler: String,
    /// True for skyline baselines that see privileged information.
    pub knowledge_privileged: bool,
    pub certified_slack: f64,
    pub warnings: Vec<String>,
    pub invariants_ok: bool,
}

/// Everything a completed run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<RoundRecord>,
    pub csv: String,
    pub manifest: RunManifest,
}

fn build_arrival_set(scn: &Scenario) -> Result<ArrivalSet> {
    let section = scn.arrival_set.as_ref().ok_or_else(|| {
        AnoqError::Scenario("utility mode needs an [arrival_set] section".into())
    })?;
    let set = match section.geometry.as_str() {
        "box" => {
            let (lo, hi) = scn.arrival_domain()?;
            BallSandwichedSet::of_box(&lo, &hi)?
        }
        "ball" => {
            let center = section.center.clone().ok_or_else(|| {
                AnoqError::Scenario("arrival_set.center is required for ball geometry".into())
            })?;
            let radius = section.radius.ok_or_else(|| {
                AnoqError::Scenario("arrival_set.radius is required for ball geometry".into())
            })?;
            BallSandwichedSet::of_ball(&center, radius, section.inner_radius)?
        }
        other => {
            return Err(AnoqError::Scenario(format!(
                "arrival_set.geometry '{other}' unsupported"
            )))
        }
    };
    ArrivalSet::new(set, scn.arrival_entries()?)
}

fn build_scheduler(
    scn: &Scenario,
    topo: &Topology,
    trace: &AdversaryTrace,
) -> Result<Box<dyn Scheduler>> {
    let horizon = scn.scenario.rounds as u64;
    let seed = sub_seed(scn.scenario.seed, STREAM_SCHEDULER);
    Ok(match scn.scheduler.kind {
        SchedulerKind::Nso => {
            Box::new(NsoScheduler::new(topo, horizon, scn.scheduler.base_learner))
        }
        SchedulerKind::Umo2 => {
            let v = scn
                .scheduler
                .v
                .ok_or_else(|| AnoqError::Scenario("scheduler.v is required for umo2".into()))?;
            let g = trace.utility_bound.ok_or_else(|| {
                AnoqError::Scenario("umo2 needs a utility-mode trace".into())
            })?;
            let l = trace.utility_lipschitz.unwrap();
            let c_l = scn.reference.c_lambda.unwrap();
            let d_l = scn.reference.delta_lambda.unwrap();
            Box::new(Umo2Scheduler::new(
                topo,
                horizon,
                scn.scheduler.base_learner,
                build_arrival_set(scn)?,
                v,
                g,
                l,
                (c_l, d_l),
                seed,
            )?)
        }
        SchedulerKind::OracleBackpressure => Box::new(OracleBackpressure::new(topo)),
        SchedulerKind::UniformRandom => Box::new(UniformRandom::new(topo, seed)),
        SchedulerKind::FixedPlan => {
            let plan = scn.scheduler.fixed_plan.clone().ok_or_else(|| {
                AnoqError::Scenario("scheduler.fixed_plan is required for fixed_plan".into())
            })?;
            Box::new(FixedPlan::new(topo, LinkAllocationPlan { per_link: plan })?)
        }
    })
}

/// Generate the scenario's trace, then simulate on it.
pub fn run_scenario(scn: &Scenario) -> Result<RunOutput> {
    scn.validate()?;
    let topo = scn.build_topology()?;
    let params = scn.trace_params()?;
    let mut trace_rng = stream_rng(scn.scenario.seed, STREAM_TRACE);
    let (trace, reference) = generate_trace(&topo, &params, scn.scenario.mode, &mut trace_rng)?;
    run_on_trace(scn, &topo, &trace, &reference)
}

/// Simulate a scheduler against a pre-generated trace.
pub fn run_on_trace(
    scn: &Scenario,
    topo: &Topology,
    trace: &AdversaryTrace,
    reference: &ReferencePolicy,
) -> Result<RunOutput> {
    let t_rounds = trace.rounds();
    let n = topo.server_count;
    let mut warnings = Vec::new();
    if let (Some(ceiling), Some(v)) = (scn.v_sanity_ceiling(), scn.scheduler.v) {
        if v > ceiling {
            let w = format!(
                "scheduler.v = {v} exceeds the horizon sanity ceiling \
                 min(T^(2δa/3), T^(2δλ/7)) = {ceiling:.4}; the utility-gap guarantee needs a \
                 longer horizon"
            );
            eprintln!("warning: {w}");
            warnings.push(w);
        }
    }

    let mut scheduler = build_scheduler(scn, topo, trace)?;
    let knowledge_privileged = scheduler.is_knowledge_privileged();
    let mut trans_rng = stream_rng(scn.scenario.seed, STREAM_TRANSMISSION);

    let increment_bound = topo.queue_increment_bound();
    let v = scn.scheduler.v.unwrap_or(0.0);
    let mut q = QueueMatrix::zeros(n);
    let mut queue_log = Vec::with_capacity(t_rounds + 1);
    queue_log.push(q.clone());
    let mut plan_log: Vec<LinkAllocationPlan> = Vec::with_capacity(t_rounds);
    let mut arrival_coord_log: Vec<Vec<f64>> = Vec::new();
    let mut records = Vec::with_capacity(t_rounds);
    let mut increments_ok = true;

    for t in 0..t_rounds {
        let caps = trace.capacities(t);
        let privileged = knowledge_privileged.then_some(&caps);
        let decision = scheduler.decide(&q, privileged)?;
        decision.plan.validate(topo)?;

        let arrivals = match trace.mode {
            TraceMode::Stability => trace.arrivals(t).unwrap(),
            TraceMode::Utility => decision.arrivals.clone().ok_or_else(|| {
                AnoqError::Contract("utility mode needs scheduler-chosen arrivals".into())
            })?,
        };
        arrivals.validate(topo)?;

        let mu = realize_transmissions(
            &caps,
            &decision.plan,
            scn.scenario.transmission,
            topo,
            &mut trans_rng,
        )?;
        let next = step(&q, &mu, &arrivals, topo)?;
        for idx in 0..n * n {
            if (next.flat()[idx] - q.flat()[idx]).abs() > increment_bound + 1e-9 {
                increments_ok = false;
            }
        }

        // Utility feedback: the environment evaluates g_t at the played
        // arrivals; the scheduler only ever sees the scalar.
        let (utility_value, ref_utility) = match trace.mode {
            TraceMode::Stability => (None, None),
            TraceMode::Utility => {
                let spec = trace.utility(t).unwrap();
                let coords: Vec<f64> = trace
                    .arrival_entries
                    .iter()
                    .map(|&(srv, com)| arrivals.get(srv, com))
                    .collect();
                let played = spec.value(&coords);
                let ref_coords = reference.arrivals_at(t).unwrap();
                let reference_value = spec.value(ref_coords);
                arrival_coord_log.push(coords);
                (Some(played), Some(reference_value))
            }
        };
        scheduler.observe(&q, &caps, &mu, utility_value)?;

        let drift = 0.5 * next.l2_squared() - 0.5 * q.l2_squared();
        records.push(RoundRecord {
            t: (t + 1) as u64,
            l1_queue: q.l1(),
            l2sq_queue: q.l2_squared(),
            lyapunov: 0.5 * q.l2_squared(),
            drift,
            utility: utility_value,
            ref_utility,
            dpp: utility_value.map(|u| drift - v * u),
        });
        plan_log.push(decision.plan);
        q = next;
        queue_log.push(q.clone());
    }

    // Aggregates.
    let avg_queue = records.iter().map(|r| r.l1_queue).sum::<f64>() / t_rounds as f64;
    let avg_utility_gap = match trace.mode {
        TraceMode::Stability => None,
        TraceMode::Utility => Some(
            records
                .iter()
                .map(|r| r.ref_utility.unwrap() - r.utility.unwrap())
                .sum::<f64>()
                / t_rounds as f64,
        ),
    };
    let olo_regret_per_link = olo_regret_vs_reference(trace, &queue_log, &plan_log, reference)?;
    let olo_regret_total = olo_regret_per_link.iter().sum();
    let bco_regret = match trace.mode {
        TraceMode::Stability => None,
        TraceMode::Utility => {
            let mut total = 0.0;
            for t in 0..t_rounds {
                let spec = trace.utility(t).unwrap();
                let played = &arrival_coord_log[t];
                let refs = reference.arrivals_at(t).unwrap();
                let played_m =
                    materialize_arrivals(trace, played, n);
                let ref_m = materialize_arrivals(trace, refs, n);
                total += dpp_loss(&queue_log[t], &played_m, v, spec.value(played))
                    - dpp_loss(&queue_log[t], &ref_m, v, spec.value(refs));
            }
            Some(total)
        }
    };
    let stats = scheduler.stats();
    let invariants_ok = increments_ok && stats.eta_strictly_decreasing.unwrap_or(true);

    let summary = RunSummary {
        avg_queue,
        avg_utility_gap,
        olo_regret_per_link,
        olo_regret_total,
        bco_regret,
        reset_counts: stats.reset_counts,
        max_alpha: stats.max_alpha,
        eta_strictly_decreasing: stats.eta_strictly_decreasing,
        invariants_ok,
    };
    let csv = round_records_to_csv(&records);
    let manifest = RunManifest {
        scenario: scn.clone(),
        seed: scn.scenario.seed,
        trace_hash: trace_content_hash(&serialize_trace(trace, reference)),
        scheduler: scn.scheduler.kind.as_str().to_string(),
        knowledge_privileged,
        certified_slack: reference.slack,
        warnings,
        invariants_ok,
    };
    Ok(RunOutput { summary, records, csv, manifest })
}

fn materialize_arrivals(
    trace: &AdversaryTrace,
    coords: &[f64],
    n: usize,
) -> crate::net::ArrivalMatrix {
    let mut m = crate::net::ArrivalMatrix::zeros(n);
    for (e, &(srv, com)) in trace.arrival_entries.iter().enumerate() {
        m.set(srv, com, coords[e]);
    }
    m
}

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    V,
    T,
    Seed,
    Scheduler,
}

impl std::str::FromStr for SweepAxis {
    type Err = AnoqError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v" => Ok(SweepAxis::V),
            "t" => Ok(SweepAxis::T),
            "seed" => Ok(SweepAxis::Seed),
            "scheduler" => Ok(SweepAxis::Scheduler),
            other => Err(AnoqError::Scenario(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// One row of a sweep: the varied value, the seed, and the run summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: String,
    pub seed: u64,
    pub summary: RunSummary,
    pub trace_hash: String,
    pub warnings: usize,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

/// Run the sweep: one run per (value, seed) pair, in input order. Seeds are
/// crossed with the axis values when the axis is not `seed` itself. For the
/// scheduler axis the adversary trace is generated once from the base seed
/// and shared across every run, so scheduler comparisons see identical
/// traces.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[String], seeds: &[u64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(AnoqError::Scenario("sweep needs a nonempty value list".into()));
    }
    base.validate()?;
    let seeds: Vec<u64> =
        if seeds.is_empty() { vec![base.scenario.seed] } else { seeds.to_vec() };

    // Build the run configurations up front, in deterministic order.
    struct Job {
        scenario: Scenario,
        axis_value: String,
        seed: u64,
    }
    let mut jobs = Vec::new();
    match axis {
        SweepAxis::Seed => {
            for v in values {
                let seed: u64 = v
                    .parse()
                    .map_err(|_| AnoqError::Scenario(format!("bad seed value '{v}'")))?;
                let mut s = base.clone();
                s.scenario.seed = seed;
                jobs.push(Job { scenario: s, axis_value: v.clone(), seed });
            }
        }
        SweepAxis::V => {
            for v in values {
                let vv: f64 = v
                    .parse()
                    .map_err(|_| AnoqError::Scenario(format!("bad V value '{v}'")))?;
                for &seed in &seeds {
                    let mut s = base.clone();
                    s.scheduler.v = Some(vv);
                    s.scenario.seed = seed;
                    jobs.push(Job { scenario: s, axis_value: v.clone(), seed });
                }
            }
        }
        SweepAxis::T => {
            for v in values {
                let t: usize = v
                    .parse()
                    .map_err(|_| AnoqError::Scenario(format!("bad T value '{v}'")))?;
                for &seed in &seeds {
                    let mut s = base.clone();
                    s.scenario.rounds = t;
                    s.scenario.seed = seed;
                    jobs.push(Job { scenario: s, axis_value: v.clone(), seed });
                }
            }
        }
        SweepAxis::Scheduler => {
            for v in values {
                let kind: SchedulerKind = v.parse()?;
                for &seed in &seeds {
                    let mut s = base.clone();
                    s.scheduler.kind = kind;
                    s.scenario.seed = seed;
                    jobs.push(Job { scenario: s, axis_value: v.clone(), seed });
                }
            }
        }
    }

    // Scheduler sweeps share one trace generated from the base seed.
    let shared = if axis == SweepAxis::Scheduler {
        let topo = base.build_topology()?;
        let params = base.trace_params()?;
        let mut rng = stream_rng(base.scenario.seed, STREAM_TRACE);
        let (trace, reference) = generate_trace(&topo, &params, base.scenario.mode, &mut rng)?;
        Some((topo, trace, reference))
    } else {
        None
    };

    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|job| -> Result<SweepRow> {
            let out = match &shared {
                Some((topo, trace, reference)) => {
                    run_on_trace(&job.scenario, topo, trace, reference)?
                }
                None => run_scenario(&job.scenario)?,
            };
            Ok(SweepRow {
                axis_value: job.axis_value.clone(),
                seed: job.seed,
                trace_hash: out.manifest.trace_hash.clone(),
                warnings: out.manifest.warnings.len(),
                summary: out.summary,
            })
        })
        .collect::<Result<_>>()?;

    Ok(SweepTable { axis, rows })
}

pub const SWEEP_CSV_HEADER: &str = "axis,value,seed,avg_queue,avg_utility_gap,olo_regret_total,\
bco_regret,resets_total,max_alpha,eta_strictly_decreasing,invariants_ok,warnings,trace_hash";

pub fn sweep_table_to_csv(table: &SweepTable) -> String {
    let axis = match table.axis {
        SweepAxis::V => "V",
        SweepAxis::T => "T",
        SweepAxis::Seed => "seed",
        SweepAxis::Scheduler => "scheduler",
    };
    let opt = |v: Option<f64>| v.map(format_sig12).unwrap_or_default();
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let s = &row.summary;
        out.push_str(&format!(
            "{axis},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.axis_value,
            row.seed,
            format_sig12(s.avg_queue),
            opt(s.avg_utility_gap),
            format_sig12(s.olo_regret_total),
            opt(s.bco_regret),
            s.reset_counts.iter().sum::<u32>(),
            opt(s.max_alpha),
            s.eta_strictly_decreasing.map(|b| b.to_string()).unwrap_or_default(),
            s.invariants_ok,
            row.warnings,
            row.trace_hash,
        ));
    }
    out
}
