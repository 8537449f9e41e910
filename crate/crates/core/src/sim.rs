//! The slot loop, per-slot monitors, and parameter sweeps.
//!
//! Each slot draws the channel and arrival, lets the policy pick an
//! allocation, stores `min{E_c,max, E_a, headroom}` of the arrival, and
//! advances the battery. Monitors check every slot; a fatal violation aborts
//! the run with the offending record attached.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::{opa, rpa};
use crate::error::{Error, Result};
use crate::lyapunov::{prepare, queue_step, within_above, within_below, QueueParams, QueueState};
use crate::model::{harvest_cap, Access, Allocation, Scheme, SystemConfig, FEAS_TOL};
use crate::noma::{single_user_power, solve_noma_wor, solve_noma_wr};
use crate::oma::{solve_oma_wor, solve_oma_wr};
use crate::stochastic::{draw_slot, stream_for_run, RngStream};

/// One row of a run trace. `e_b` and `q` are taken at the start of the slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub t: u64,
    pub e_b: f64,
    pub q: f64,
    pub e_a: f64,
    pub e_h: f64,
    pub p_total: f64,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub rate: Vec<f64>,
    pub sum_rate: f64,
    /// Mean sum rate over slots `0..=t` (bits/s/Hz).
    pub avg_throughput: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ViolationCounts {
    pub battery_bound: u64,
    pub power_feasibility: u64,
    pub queue_bound: u64,
    pub rate_floor: u64,
    pub power_order: u64,
    pub allocation_sum: u64,
    /// Slots where the multi-user power exceeded the single-user optimum.
    pub single_user_dominance: u64,
}

impl ViolationCounts {
    /// Violations other than the dominance comparison.
    pub fn safety_total(&self) -> u64 {
        self.battery_bound
            + self.power_feasibility
            + self.queue_bound
            + self.rate_floor
            + self.power_order
            + self.allocation_sum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scheme: Scheme,
    pub seed: u64,
    pub run_id: u64,
    pub slots: u64,
    pub final_throughput: f64,
    /// Smallest per-user rate seen in any slot; `None` for an empty run.
    pub min_user_rate: Option<f64>,
    pub min_sum_rate: Option<f64>,
    pub mean_power: f64,
    pub mean_harvest: f64,
    pub final_battery: f64,
    pub v: f64,
    pub c: f64,
    pub violations: ViolationCounts,
    pub config_hash: String,
}

/// SHA-256 of the configuration's canonical JSON form, hex encoded.
pub fn config_hash(cfg: &SystemConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Severity {
    Fatal,
    Counted,
}

/// A running simulation.
pub struct Simulation {
    cfg: SystemConfig,
    params: QueueParams,
    stream: RngStream,
    state: QueueState,
    t: u64,
    seed: u64,
    run_id: u64,
    hash: String,
    rate_total: f64,
    power_total: f64,
    harvest_total: f64,
    min_user_rate: f64,
    min_sum_rate: f64,
    violations: ViolationCounts,
}

impl Simulation {
    pub fn new(cfg: &SystemConfig, master_seed: u64, run_id: u64) -> Result<Self> {
        let params = prepare(cfg)?;
        Ok(Simulation {
            cfg: cfg.clone(),
            params,
            stream: stream_for_run(master_seed, run_id),
            state: params.initial_state(cfg),
            t: 0,
            seed: master_seed,
            run_id,
            hash: config_hash(cfg),
            rate_total: 0.0,
            power_total: 0.0,
            harvest_total: 0.0,
            min_user_rate: f64::INFINITY,
            min_sum_rate: f64::INFINITY,
            violations: ViolationCounts::default(),
        })
    }

    pub fn params(&self) -> &QueueParams {
        &self.params
    }

    pub fn state(&self) -> &QueueState {
        &self.state
    }

    pub fn violations(&self) -> &ViolationCounts {
        &self.violations
    }

    fn decide(&self, slot: &crate::model::SlotState) -> Result<Allocation> {
        let cfg = &self.cfg;
        match cfg.scheme {
            Scheme::NomaWor => solve_noma_wor(slot, &self.state, cfg),
            Scheme::NomaWr => solve_noma_wr(slot, &self.state, cfg),
            Scheme::OmaWor => solve_oma_wor(slot, &self.state, cfg),
            Scheme::OmaWr => solve_oma_wr(slot, &self.state, cfg),
            Scheme::Opa => opa(slot, self.state.e_b, cfg),
            Scheme::Rpa => rpa(slot, self.state.e_b, cfg, &mut self.stream.policy_rng(slot.t)),
        }
    }

    /// Runs one slot and returns its record.
    pub fn step(&mut self) -> Result<SlotRecord> {
        let cfg = &self.cfg;
        let slot = draw_slot(&self.stream, cfg, self.t)?;
        let mut alloc = self.decide(&slot)?;
        alloc.e_h = harvest_cap(slot.e_a, self.state.e_b, alloc.p_total, cfg);
        let sum_rate = alloc.sum_rate();
        self.rate_total += sum_rate;
        let record = SlotRecord {
            t: self.t,
            e_b: self.state.e_b,
            q: self.state.q,
            e_a: slot.e_a,
            e_h: alloc.e_h,
            p_total: alloc.p_total,
            rho: alloc.rho.clone(),
            alpha: alloc.alpha.clone(),
            rate: alloc.rates.clone(),
            sum_rate,
            avg_throughput: self.rate_total / (self.t + 1) as f64,
        };

        let scheme = cfg.scheme;
        let access = scheme.access(cfg.access);
        let mut found: Vec<(Severity, String)> = Vec::new();

        let available = self.state.e_b - cfg.e_min;
        if !within_below(cfg.delta_t * alloc.p_total, available) || alloc.p_total < 0.0 {
            self.violations.power_feasibility += 1;
            found.push((
                Severity::Fatal,
                format!("power {} W needs more than the {available} J stored", alloc.p_total),
            ));
        }
        let rho_ok = alloc.rho.iter().all(|r| *r >= -FEAS_TOL)
            && alloc.rho.iter().sum::<f64>() <= 1.0 + FEAS_TOL
            && within_below(alloc.p_total, cfg.p_max);
        let alpha_ok = access == Access::Noma
            || (alloc.alpha.iter().all(|a| *a >= -FEAS_TOL) && alloc.alpha.iter().sum::<f64>() <= 1.0 + FEAS_TOL);
        if !(rho_ok && alpha_ok) {
            self.violations.allocation_sum += 1;
            found.push((Severity::Fatal, "power or bandwidth fractions out of range".into()));
        }
        if scheme.has_rate_floors() {
            if let Some((k, r)) = alloc
                .rates
                .iter()
                .zip(&cfg.r_min)
                .enumerate()
                .find(|(_, (r, floor))| **r < **floor - 1e-9)
                .map(|(k, (r, _))| (k, *r))
            {
                self.violations.rate_floor += 1;
                found.push((Severity::Fatal, format!("user {} rate {r} below its floor", k + 1)));
            }
        }
        if access == Access::Noma && alloc.rho.windows(2).any(|w| w[0] < w[1] - FEAS_TOL) {
            self.violations.power_order += 1;
            let severity = if scheme == Scheme::NomaWr {
                Severity::Counted
            } else {
                Severity::Fatal
            };
            found.push((severity, "power order ρ_1 ≥ … ≥ ρ_K broken".into()));
        }
        if matches!(scheme, Scheme::NomaWor | Scheme::OmaWor) {
            let single = single_user_power(self.state.q, self.state.v_param, slot.strongest(), cfg);
            if !within_below(alloc.p_total, single) {
                self.violations.single_user_dominance += 1;
            }
        }

        let next = if found.iter().any(|(s, _)| *s == Severity::Fatal) {
            None
        } else {
            Some(queue_step(&self.state, alloc.p_total, alloc.e_h, cfg)?)
        };
        if let Some(next) = next {
            if !(within_above(next.e_b, cfg.e_min) && within_below(next.e_b, cfg.e_max)) {
                self.violations.battery_bound += 1;
                found.push((Severity::Fatal, format!("battery {} J left [E_min, E_max]", next.e_b)));
            }
            if !self.params.contains(next.q) {
                self.violations.queue_bound += 1;
                let severity = if scheme.is_lyapunov() {
                    Severity::Fatal
                } else {
                    Severity::Counted
                };
                found.push((severity, format!("virtual queue {} left its bounds", next.q)));
            }
        }

        if let Some((_, violation)) = found.into_iter().find(|(s, _)| *s == Severity::Fatal) {
            return Err(Error::Monitor {
                violation,
                record: Box::new(record),
            });
        }
        let next = next.expect("no fatal violation");
        self.state = next;
        self.power_total += alloc.p_total;
        self.harvest_total += alloc.e_h;
        self.min_sum_rate = self.min_sum_rate.min(sum_rate);
        self.min_user_rate = alloc.rates.iter().copied().fold(self.min_user_rate, f64::min);
        self.t += 1;
        Ok(record)
    }

    pub fn summary(&self) -> RunSummary {
        let n = self.t.max(1) as f64;
        let finite = |x: f64| x.is_finite().then_some(x);
        RunSummary {
            scheme: self.cfg.scheme,
            seed: self.seed,
            run_id: self.run_id,
            slots: self.t,
            final_throughput: self.rate_total / n,
            min_user_rate: finite(self.min_user_rate),
            min_sum_rate: finite(self.min_sum_rate),
            mean_power: self.power_total / n,
            mean_harvest: self.harvest_total / n,
            final_battery: self.state.e_b,
            v: self.params.v,
            c: self.params.c,
            violations: self.violations,
            config_hash: self.hash.clone(),
        }
    }
}

/// Runs `slots` slots, handing each record to `observe`.
pub fn run_with<F>(cfg: &SystemConfig, master_seed: u64, run_id: u64, slots: u64, mut observe: F) -> Result<RunSummary>
where
    F: FnMut(&SlotRecord) -> Result<()>,
{
    let mut sim = Simulation::new(cfg, master_seed, run_id)?;
    for _ in 0..slots {
        let record = sim.step()?;
        observe(&record)?;
    }
    Ok(sim.summary())
}

/// Full trace and summary of one run.
pub fn run_episode(cfg: &SystemConfig, master_seed: u64, run_id: u64, slots: u64) -> Result<(Vec<SlotRecord>, RunSummary)> {
    let mut trace = Vec::with_capacity(slots.min(1 << 20) as usize);
    let summary = run_with(cfg, master_seed, run_id, slots, |r| {
        trace.push(r.clone());
        Ok(())
    })?;
    Ok((trace, summary))
}

/// Summary only; no trace is kept.
pub fn run_summary(cfg: &SystemConfig, master_seed: u64, run_id: u64, slots: u64) -> Result<RunSummary> {
    run_with(cfg, master_seed, run_id, slots, |_| Ok(()))
}

/// Running average throughput sampled every `stride` slots (at
/// `t = stride−1, 2·stride−1, …`) plus the summary.
pub fn run_curve(cfg: &SystemConfig, master_seed: u64, run_id: u64, slots: u64, stride: u64) -> Result<(Vec<f64>, RunSummary)> {
    let stride = stride.max(1);
    let mut curve = Vec::new();
    let summary = run_with(cfg, master_seed, run_id, slots, |r| {
        if (r.t + 1) % stride == 0 {
            curve.push(r.avg_throughput);
        }
        Ok(())
    })?;
    Ok((curve, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda,
    V,
    Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Scheme(Scheme),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Scheme(s) => write!(f, "{s}"),
        }
    }
}

/// Applies one sweep coordinate to a template.
pub fn apply_axis(template: &SystemConfig, axis: SweepAxis, value: AxisValue) -> Result<SystemConfig> {
    let mut cfg = template.clone();
    match (axis, value) {
        (SweepAxis::Lambda, AxisValue::Number(x)) => cfg.arrival.lambda = x,
        (SweepAxis::V, AxisValue::Number(x)) => cfg.v_param = Some(x),
        (SweepAxis::Scheme, AxisValue::Scheme(s)) => cfg.scheme = s,
        (axis, value) => {
            return Err(Error::InvalidArgument(format!(
                "value {value} does not fit sweep axis {axis:?}"
            )))
        }
    }
    Ok(cfg)
}

/// Aggregate of the runs at one sweep coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub value: AxisValue,
    pub runs: usize,
    pub mean: f64,
    pub std_err: f64,
    pub per_run: Vec<f64>,
    pub failures: Vec<String>,
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every `(value, run_id)` pair in parallel and aggregates the final
/// throughput per value. Failed runs are recorded and skipped.
pub fn sweep(
    template: &SystemConfig,
    axis: SweepAxis,
    values: &[AxisValue],
    master_seed: u64,
    run_ids: &[u64],
    slots: u64,
) -> Vec<SweepCell> {
    let jobs: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|i| run_ids.iter().map(move |&r| (i, r)))
        .collect();
    let results: Vec<Result<RunSummary>> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let cfg = apply_axis(template, axis, values[i])?;
            run_summary(&cfg, master_seed, r, slots)
        })
        .collect();
    values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut per_run = Vec::new();
            let mut failures = Vec::new();
            for ((j, r), res) in jobs.iter().zip(&results) {
                if *j != i {
                    continue;
                }
                match res {
                    Ok(s) => per_run.push(s.final_throughput),
                    Err(e) => failures.push(format!("run {r}: {e}")),
                }
            }
            let (mean, std_err) = mean_se(&per_run);
            SweepCell {
                value,
                runs: per_run.len(),
                mean,
                std_err,
                per_run,
                failures,
            }
        })
        .collect()
}
