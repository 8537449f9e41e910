//! Domain types, per-user rate formulas and battery bookkeeping.
//!
//! Channel quality enters only through the per-user SNR `γ_k = |h_k|²/σ²`
//! (linear). Rates returned by [`rate_noma`], [`rate_oma`] and
//! [`sum_rate_decomposed`] are in bits/s/Hz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::{ArrivalModel, ChannelModel, FadingDistribution};

/// Slack used by feasibility checks on fractions and energies.
pub const FEAS_TOL: f64 = 1e-9;

/// Power-allocation policy driving a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "NOMA_WOR")]
    NomaWor,
    #[serde(rename = "NOMA_WR")]
    NomaWr,
    #[serde(rename = "OMA_WOR")]
    OmaWor,
    #[serde(rename = "OMA_WR")]
    OmaWr,
    /// Random ordered power split, greedy total power.
    #[serde(rename = "RPA")]
    Rpa,
    /// Equal power split, greedy total power.
    #[serde(rename = "OPA")]
    Opa,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::NomaWor,
        Scheme::NomaWr,
        Scheme::OmaWor,
        Scheme::OmaWr,
        Scheme::Rpa,
        Scheme::Opa,
    ];

    /// Schemes that enforce per-user minimum rates every slot.
    pub fn has_rate_floors(self) -> bool {
        matches!(self, Scheme::NomaWr | Scheme::OmaWr)
    }

    /// Schemes whose total power comes from the virtual-queue controller.
    pub fn is_lyapunov(self) -> bool {
        !matches!(self, Scheme::Rpa | Scheme::Opa)
    }

    pub fn is_baseline(self) -> bool {
        !self.is_lyapunov()
    }

    /// Multiple-access mode; baselines take it from the configuration.
    pub fn access(self, baseline_access: Access) -> Access {
        match self {
            Scheme::NomaWor | Scheme::NomaWr => Access::Noma,
            Scheme::OmaWor | Scheme::OmaWr => Access::Oma,
            Scheme::Rpa | Scheme::Opa => baseline_access,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::NomaWor => "NOMA_WOR",
            Scheme::NomaWr => "NOMA_WR",
            Scheme::OmaWor => "OMA_WOR",
            Scheme::OmaWr => "OMA_WR",
            Scheme::Rpa => "RPA",
            Scheme::Opa => "OPA",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == upper)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Access {
    #[default]
    #[serde(rename = "NOMA")]
    Noma,
    #[serde(rename = "OMA")]
    Oma,
}

/// Static parameters of one simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of downlink users `K`.
    pub users: usize,
    /// Slot duration `Δt` (s).
    pub delta_t: f64,
    pub e_min: f64,
    pub e_max: f64,
    /// Maximum energy stored per slot (J).
    pub e_c_max: f64,
    pub p_max: f64,
    /// Linear SNR bounds.
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Per-user rate floors (bits/s/Hz); all zero for schemes without floors.
    pub r_min: Vec<f64>,
    pub scheme: Scheme,
    /// Multiple-access mode used by the RPA/OPA baselines.
    pub access: Access,
    /// Lyapunov weight `V`; `None` selects `V_max`.
    pub v_param: Option<f64>,
    /// Initial battery level (J).
    pub e_b0: f64,
    pub channel: ChannelModel,
    pub arrival: ArrivalModel,
}

impl SystemConfig {
    /// Default simulation parameters for `scheme`: K = 4, Δt = 1 s,
    /// E ∈ [0, 10] J, γ ∈ [10, 20] dB, 1 bit/s/Hz floors for rate-constrained
    /// schemes, and (E_c,max, P_max) = (0.5 J, 1 W) without floors or
    /// (1.6 J, 2 W) with floors. Arrivals are compound Poisson with λ = 1.5 and
    /// Uniform(0, 0.2) J marks; rate-constrained schemes add the worst-case
    /// energy floor so every slot stays feasible.
    pub fn default_for(scheme: Scheme) -> Self {
        let users = 4;
        let floors = scheme.has_rate_floors();
        let gamma_min = db_to_linear(10.0);
        let gamma_max = db_to_linear(20.0);
        let (e_c_max, p_max) = if floors { (1.6, 2.0) } else { (0.5, 1.0) };
        let r_min = vec![if floors { 1.0 } else { 0.0 }; users];
        let e_max = 10.0;
        let mut cfg = SystemConfig {
            users,
            delta_t: 1.0,
            e_min: 0.0,
            e_max,
            e_c_max,
            p_max,
            gamma_min,
            gamma_max,
            r_min,
            scheme,
            access: Access::Noma,
            v_param: None,
            e_b0: if floors { e_max / 2.0 } else { 0.0 },
            channel: ChannelModel::for_window(
                FadingDistribution::Exponential,
                if floors { gamma_min } else { 0.0 },
                gamma_max,
            ),
            arrival: ArrivalModel {
                lambda: 1.5,
                alpha_mark: 0.2,
                floor: 0.0,
            },
        };
        if floors {
            cfg.arrival.floor = cfg.worst_case_energy_floor();
        }
        cfg
    }

    /// `Δt · P_th^worst`: energy needed to meet every floor when all users sit
    /// at `γ_min`.
    pub fn worst_case_energy_floor(&self) -> f64 {
        let gamma = vec![self.gamma_min; self.users];
        self.delta_t * crate::noma::min_power_recursion(&gamma, &self.r_min).1
    }

    /// Checks the static invariants of the system model.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.users == 0 {
            return fail("user count K must be at least 1".into());
        }
        if !(self.delta_t > 0.0) {
            return fail(format!("slot duration must be positive, got {}", self.delta_t));
        }
        if !(self.e_min < self.e_max) {
            return fail(format!(
                "battery bounds require E_min < E_max, got [{}, {}]",
                self.e_min, self.e_max
            ));
        }
        if !(self.p_max > 0.0) {
            return fail(format!("P_max must be positive, got {}", self.p_max));
        }
        if self.delta_t * self.p_max > self.e_max - self.e_min {
            return fail(format!(
                "battery span assumption violated: Δt·P_max = {} exceeds E_max − E_min = {}",
                self.delta_t * self.p_max,
                self.e_max - self.e_min
            ));
        }
        if !(self.e_c_max >= 0.0) || self.e_c_max > self.delta_t * self.p_max {
            return fail(format!(
                "charging assumption violated: E_c,max = {} must lie in [0, Δt·P_max = {}]",
                self.e_c_max,
                self.delta_t * self.p_max
            ));
        }
        if !(self.gamma_min > 0.0 && self.gamma_min <= self.gamma_max) {
            return fail(format!(
                "SNR bounds require 0 < γ_min ≤ γ_max, got [{}, {}]",
                self.gamma_min, self.gamma_max
            ));
        }
        if self.r_min.len() != self.users {
            return fail(format!(
                "r_min has {} entries for K = {} users",
                self.r_min.len(),
                self.users
            ));
        }
        if self.r_min.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return fail("rate floors must be finite and non-negative".into());
        }
        if !self.scheme.has_rate_floors() && self.r_min.iter().any(|&r| r > 0.0) {
            return fail(format!(
                "scheme {} does not enforce rate floors; r_min must be zero",
                self.scheme
            ));
        }
        if !(self.e_b0 >= self.e_min && self.e_b0 <= self.e_max) {
            return fail(format!(
                "initial battery {} J outside [E_min, E_max] = [{}, {}]",
                self.e_b0, self.e_min, self.e_max
            ));
        }
        if let Some(v) = self.v_param {
            if !(v > 0.0) {
                return fail(format!("V must be positive, got {v}"));
            }
        }
        self.channel.validate()?;
        if self.channel.gamma_hi > self.gamma_max * (1.0 + 1e-12) {
            return fail(format!(
                "channel window reaches {} above γ_max = {}",
                self.channel.gamma_hi, self.gamma_max
            ));
        }
        self.arrival.validate()?;
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One slot's random state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotState {
    pub t: u64,
    /// Per-user SNR, strictly ascending.
    pub gamma: Vec<f64>,
    /// Energy that arrived at the harvester this slot (J).
    pub e_a: f64,
}

impl SlotState {
    pub fn strongest(&self) -> f64 {
        *self.gamma.last().expect("slot with no users")
    }
}

/// Per-slot decision.
///
/// `rho` holds fractions of `p_total`. NOMA users occupy the whole band, so
/// their `alpha` entries are 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub p_total: f64,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Per-user rates (bits/s/Hz).
    pub rates: Vec<f64>,
    /// Energy stored this slot (J); filled in once the slot's power is known.
    pub e_h: f64,
}

impl Allocation {
    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub(crate) fn noma(p_total: f64, rho: Vec<f64>, rates: Vec<f64>) -> Self {
        let k = rho.len();
        Allocation {
            p_total,
            rho,
            alpha: vec![1.0; k],
            rates,
            e_h: 0.0,
        }
    }

    /// Builds an OMA allocation from per-user powers and bandwidths.
    pub(crate) fn oma(gamma: &[f64], powers: &[f64], alpha: Vec<f64>) -> Result<Self> {
        let rates = rate_oma(gamma, powers, &alpha)?.per_user;
        let p_total: f64 = powers.iter().sum();
        let k = powers.len();
        let rho = if p_total > 0.0 {
            powers.iter().map(|p| p / p_total).collect()
        } else {
            vec![1.0 / k as f64; k]
        };
        Ok(Allocation {
            p_total,
            rho,
            alpha,
            rates,
            e_h: 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    pub per_user: Vec<f64>,
    pub sum: f64,
}

impl RateVector {
    fn new(per_user: Vec<f64>) -> Self {
        let sum = per_user.iter().sum();
        RateVector { per_user, sum }
    }
}

/// Fails on a strictly decreasing neighbour pair. Equal gains are allowed.
pub fn check_ascending(gamma: &[f64]) -> Result<()> {
    for (index, w) in gamma.windows(2).enumerate() {
        if w[0] > w[1] || w[0].is_nan() || w[1].is_nan() {
            return Err(Error::UnsortedGains {
                index,
                prev: w[0],
                next: w[1],
            });
        }
    }
    Ok(())
}

/// Successive-interference-cancellation rates for power fractions `rho` of
/// total power `p`: user k sees interference only from users above it.
pub fn rate_noma(gamma: &[f64], p: f64, rho: &[f64]) -> Result<RateVector> {
    if gamma.len() != rho.len() {
        return Err(Error::InvalidArgument(format!(
            "gamma has {} users, rho has {}",
            gamma.len(),
            rho.len()
        )));
    }
    check_ascending(gamma)?;
    if !(p >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative power {p}")));
    }
    let k = gamma.len();
    let mut per_user = vec![0.0; k];
    let mut above = 0.0;
    for i in (0..k).rev() {
        let signal = rho[i] * p * gamma[i];
        let interference = p * gamma[i] * above;
        per_user[i] = (signal / (interference + 1.0)).ln_1p() / std::f64::consts::LN_2;
        above += rho[i];
    }
    Ok(RateVector::new(per_user))
}

/// Orthogonal rates `α_k log2(1 + p_k γ_k / α_k)`; `α_k = 0` is allowed only
/// together with `p_k = 0`, which yields rate 0.
pub fn rate_oma(gamma: &[f64], powers: &[f64], alpha: &[f64]) -> Result<RateVector> {
    if gamma.len() != powers.len() || gamma.len() != alpha.len() {
        return Err(Error::InvalidArgument(
            "gamma, powers and alpha must have one entry per user".into(),
        ));
    }
    let per_user = gamma
        .iter()
        .zip(powers)
        .zip(alpha)
        .enumerate()
        .map(|(user, ((&g, &p), &a))| {
            if a > 0.0 {
                Ok(a * (p * g / a).ln_1p() / std::f64::consts::LN_2)
            } else if p == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::ZeroBandwidth { user, power: p })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateVector::new(per_user))
}

/// Sum rate written over cumulative fractions `z_k = Σ_{i≥k} ρ_i`:
/// `log2(1+γ_1 p z_1) + Σ_{k≥2} [log2(1+γ_k p z_k) − log2(1+γ_{k−1} p z_k)]`.
pub fn sum_rate_decomposed(gamma: &[f64], p: f64, z: &[f64]) -> Result<f64> {
    if gamma.len() != z.len() {
        return Err(Error::InvalidArgument(
            "gamma and z must have one entry per user".into(),
        ));
    }
    check_ascending(gamma)?;
    let mut total = 0.0;
    let mut prev_gamma = 0.0;
    for (&g, &zk) in gamma.iter().zip(z) {
        total += (g * p * zk).ln_1p() - (prev_gamma * p * zk).ln_1p();
        prev_gamma = g;
    }
    Ok(total / std::f64::consts::LN_2)
}

/// Battery after one slot: `e_b − Δt·p + e_h`.
pub fn battery_step(e_b: f64, p: f64, e_h: f64, delta_t: f64, e_min: f64) -> Result<f64> {
    let requested = delta_t * p;
    let available = e_b - e_min;
    if requested > available + FEAS_TOL * available.abs().max(1.0) {
        return Err(Error::InsufficientEnergy {
            requested,
            available,
        });
    }
    Ok(e_b - requested + e_h)
}

/// Energy actually stored this slot: the smallest of the charging limit, the
/// arrival, and the headroom left once this slot's transmission is paid for.
pub fn harvest_cap(e_a: f64, e_b: f64, p: f64, cfg: &SystemConfig) -> f64 {
    let headroom = cfg.e_max - e_b + cfg.delta_t * p;
    cfg.e_c_max.min(e_a).min(headroom).max(0.0)
}
