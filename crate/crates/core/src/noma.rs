//! Per-slot NOMA policies.
//!
//! Without rate floors every user gets the same share of `P(t)` and the
//! total power minimizes `−QΔtP − V·S(P)`, where `S` is the equal-split sum
//! rate. With floors the users below the strongest are held exactly at their
//! floors and only the strongest user's share grows with `P(t)`.
//!
//! Objectives weight rates in nats; reported rates are in bits.

use crate::error::{Error, Result};
use crate::lyapunov::QueueState;
use crate::model::{check_ascending, rate_noma, Allocation, SlotState, SystemConfig};
use crate::numerics::{minimize_convex_with_derivative, SolverSettings};

/// Cumulative shares `z_k = (K − k + 1)/K` of the equal split.
pub fn equal_split(k: usize) -> Vec<f64> {
    (0..k).map(|i| (k - i) as f64 / k as f64).collect()
}

/// Optimal power when only the strongest user is served:
/// minimizer of `−QΔtP − V ln(1 + Pγ_K)` on `[0, P_max]`.
pub fn single_user_power(q: f64, v: f64, gamma_k: f64, cfg: &SystemConfig) -> f64 {
    let upper = -v / (cfg.delta_t * (cfg.p_max + 1.0 / gamma_k));
    let lower = -v * gamma_k / cfg.delta_t;
    if q > upper {
        cfg.p_max
    } else if q >= lower {
        (-v / (cfg.delta_t * q) - 1.0 / gamma_k).clamp(0.0, cfg.p_max)
    } else {
        0.0
    }
}

/// Equal-split sum rate in nats at total power `p`.
pub fn equal_split_rate(gamma: &[f64], p: f64) -> f64 {
    let k = gamma.len() as f64;
    let mut prev = 0.0;
    let mut total = 0.0;
    for (i, &g) in gamma.iter().enumerate() {
        let z = (k - i as f64) / k;
        total += (g * z * p).ln_1p() - (prev * z * p).ln_1p();
        prev = g;
    }
    total
}

/// `d/dP` of [`equal_split_rate`].
pub fn equal_split_rate_slope(gamma: &[f64], p: f64) -> f64 {
    let k = gamma.len() as f64;
    let mut prev = 0.0;
    let mut total = 0.0;
    for (i, &g) in gamma.iter().enumerate() {
        let z = (k - i as f64) / k;
        total += z * (g - prev) / ((1.0 + g * z * p) * (1.0 + prev * z * p));
        prev = g;
    }
    total
}

/// `−QΔtP − V·S(P)` for the equal split.
pub fn noma_wor_objective(qs: &QueueState, gamma: &[f64], p: f64, delta_t: f64) -> f64 {
    -qs.q * delta_t * p - qs.v_param * equal_split_rate(gamma, p)
}

pub fn solve_noma_wor(slot: &SlotState, qs: &QueueState, cfg: &SystemConfig) -> Result<Allocation> {
    let gamma = &slot.gamma;
    check_ascending(gamma)?;
    let p = minimize_convex_with_derivative(
        |p| -qs.q * cfg.delta_t - qs.v_param * equal_split_rate_slope(gamma, p),
        0.0,
        cfg.p_max,
        SolverSettings::exact(),
    )?;
    let k = gamma.len();
    let rho = vec![1.0 / k as f64; k];
    let rates = rate_noma(gamma, p, &rho)?.per_user;
    Ok(Allocation::noma(p, rho, rates))
}

/// Per-slot quantities for the rate floors.
#[derive(Debug, Clone, PartialEq)]
pub struct NomaWrSlotAux {
    /// Minimum total power meeting every floor.
    pub p_th_t: f64,
    pub p_k_min: Vec<f64>,
    /// `2^{R_k} − 1`.
    pub m_k: Vec<f64>,
    /// `M_k / 2^{R_k}`.
    pub n_k: Vec<f64>,
}

/// Backward recursion `P_k = M_k(Σ_{i>k} P_i + 1/γ_k)`; returns the per-user
/// powers and their sum.
pub fn min_power_recursion(gamma: &[f64], r_min: &[f64]) -> (Vec<f64>, f64) {
    let mut p = vec![0.0; gamma.len()];
    let mut above = 0.0;
    for i in (0..gamma.len()).rev() {
        let m = r_min[i].exp2() - 1.0;
        p[i] = if m == 0.0 { 0.0 } else { m * (above + 1.0 / gamma[i]) };
        above += p[i];
    }
    (p, above)
}

pub fn compute_p_th(gamma: &[f64], r_min: &[f64], p_max: f64) -> Result<NomaWrSlotAux> {
    if gamma.len() != r_min.len() {
        return Err(Error::InvalidArgument(
            "gamma and r_min must have one entry per user".into(),
        ));
    }
    let (p_k_min, p_th_t) = min_power_recursion(gamma, r_min);
    if p_th_t > p_max {
        return Err(Error::SlotInfeasible { p_th: p_th_t, p_max });
    }
    let m_k: Vec<f64> = r_min.iter().map(|r| r.exp2() - 1.0).collect();
    let n_k = r_min.iter().map(|r| -(-r).exp2() + 1.0).collect();
    Ok(NomaWrSlotAux {
        p_th_t,
        p_k_min,
        m_k,
        n_k,
    })
}

/// Power shares (fractions of `P_max`, summing to `zeta`) that hold users
/// `1..K−1` exactly at their floors and give the remainder to user `K`.
pub fn rate_floor_split(zeta: f64, aux: &NomaWrSlotAux, gamma: &[f64], p_max: f64) -> Result<Vec<f64>> {
    let k = gamma.len();
    let zeta_min = aux.p_th_t / p_max;
    if zeta < zeta_min * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "power fraction {zeta} is below the feasible minimum {zeta_min}"
        )));
    }
    let mut rho = vec![0.0; k];
    let mut remaining = zeta;
    for i in 0..k - 1 {
        rho[i] = aux.n_k[i] * (remaining + 1.0 / (p_max * gamma[i]));
        remaining -= rho[i];
    }
    if remaining < 0.0 {
        if remaining < -1e-12 * zeta.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "power fraction {zeta} leaves the strongest user a negative share"
            )));
        }
        remaining = 0.0;
    }
    rho[k - 1] = remaining;
    Ok(rho)
}

/// `d ρ_K / d ζ` for [`rate_floor_split`]: `Π_{k<K}(1 − N_k)`.
pub fn floor_split_slope(aux: &NomaWrSlotAux) -> f64 {
    let k = aux.n_k.len();
    aux.n_k[..k - 1].iter().map(|n| 1.0 - n).product()
}

/// `−QΔtζP_max − V·(sum rate in nats)` under [`rate_floor_split`].
pub fn noma_wr_objective(
    qs: &QueueState,
    aux: &NomaWrSlotAux,
    gamma: &[f64],
    zeta: f64,
    cfg: &SystemConfig,
) -> Result<f64> {
    let rho = rate_floor_split(zeta, aux, gamma, cfg.p_max)?;
    let rates = rate_noma(gamma, cfg.p_max, &rho)?;
    Ok(-qs.q * cfg.delta_t * zeta * cfg.p_max - qs.v_param * rates.sum * std::f64::consts::LN_2)
}

pub fn solve_noma_wr(slot: &SlotState, qs: &QueueState, cfg: &SystemConfig) -> Result<Allocation> {
    let gamma = &slot.gamma;
    check_ascending(gamma)?;
    let aux = compute_p_th(gamma, &cfg.r_min, cfg.p_max)?;
    let zeta_lo = (aux.p_th_t / cfg.p_max).min(1.0);
    let slope = floor_split_slope(&aux);
    let g_k = slot.strongest();
    let rho_k = |zeta: f64| -> f64 {
        rate_floor_split(zeta, &aux, gamma, cfg.p_max)
            .map(|r| r[r.len() - 1])
            .unwrap_or(0.0)
    };
    let zeta = minimize_convex_with_derivative(
        |z| {
            -qs.q * cfg.delta_t * cfg.p_max
                - qs.v_param * slope * cfg.p_max * g_k / (1.0 + rho_k(z) * cfg.p_max * g_k)
        },
        zeta_lo,
        1.0,
        SolverSettings::exact(),
    )?;
    let shares = rate_floor_split(zeta, &aux, gamma, cfg.p_max)?;
    let p = zeta * cfg.p_max;
    let k = gamma.len();
    let rho: Vec<f64> = if zeta > 0.0 {
        shares.iter().map(|s| s / zeta).collect()
    } else {
        vec![1.0 / k as f64; k]
    };
    let rates = rate_noma(gamma, p, &rho)?.per_user;
    Ok(Allocation::noma(p, rho, rates))
}
