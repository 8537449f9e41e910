//! Comparison policies that spend as much stored energy as the slot allows.
//!
//! Both use `P(t) = min{(E_b − E_min)/Δt, P_max}`. OPA splits it equally;
//! RPA draws an ordered random split.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::Result;
use crate::model::{rate_noma, Access, Allocation, SlotState, SystemConfig};

/// Greedy total power.
pub fn greedy_power(e_b: f64, cfg: &SystemConfig) -> f64 {
    ((e_b - cfg.e_min) / cfg.delta_t).clamp(0.0, cfg.p_max)
}

fn allocate(slot: &SlotState, p: f64, rho: Vec<f64>, alpha: Vec<f64>, access: Access) -> Result<Allocation> {
    match access {
        Access::Noma => {
            let rates = rate_noma(&slot.gamma, p, &rho)?.per_user;
            Ok(Allocation::noma(p, rho, rates))
        }
        Access::Oma => {
            let powers: Vec<f64> = rho.iter().map(|r| r * p).collect();
            let mut a = Allocation::oma(&slot.gamma, &powers, alpha)?;
            a.rho = rho;
            Ok(a)
        }
    }
}

/// Equal split of the greedy power (and, for OMA, of the band).
pub fn opa(slot: &SlotState, e_b: f64, cfg: &SystemConfig) -> Result<Allocation> {
    let k = slot.gamma.len();
    let even = vec![1.0 / k as f64; k];
    allocate(slot, greedy_power(e_b, cfg), even.clone(), even, cfg.access)
}

/// Uniform draw from `{x : Σx = 1, x_1 ≥ … ≥ x_K}`: normalized exponentials,
/// sorted descending.
pub fn ordered_simplex<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x.sort_by(|a, b| b.total_cmp(a));
    x
}

/// Random ordered split of the greedy power; OMA runs draw the band split
/// independently in the same way.
pub fn rpa<R: Rng + ?Sized>(slot: &SlotState, e_b: f64, cfg: &SystemConfig, rng: &mut R) -> Result<Allocation> {
    let k = slot.gamma.len();
    let rho = ordered_simplex(k, rng);
    let alpha = match cfg.access {
        Access::Noma => vec![1.0; k],
        Access::Oma => ordered_simplex(k, rng),
    };
    allocate(slot, greedy_power(e_b, cfg), rho, alpha, cfg.access)
}
