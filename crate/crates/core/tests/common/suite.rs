//! Randomized comparisons of the closed forms against the oracles.

use ehalloc::lyapunov::QueueState;
use ehalloc::model::{Scheme, SlotState, SystemConfig};
use ehalloc::noma::{compute_p_th, equal_split, single_user_power, solve_noma_wr};
use ehalloc::oma::{min_power_oma, oma_kkt_alloc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Worst errors over a batch of random instances.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stat {
    pub instances: usize,
    pub alloc_err: f64,
    pub kkt: f64,
}

impl Stat {
    fn add(&mut self, alloc_err: f64, kkt: f64) {
        self.instances += 1;
        self.alloc_err = self.alloc_err.max(alloc_err);
        self.kkt = self.kkt.max(kkt);
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn floors<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(0.2..1.5)).collect()
}

pub fn equal_split_suite(n: usize, seed: u64) -> Stat {
    let mut rng = rng(seed);
    let mut st = Stat::default();
    for i in 0..n {
        let k = 2 + i % 3;
        let gamma = random_gains(&mut rng, k, 1.0, 1000.0);
        let p = rng.gen_range(0.01..2.0);
        let best = best_ordered_split(&gamma, p, k * 6);
        st.add(max_abs_diff(&best, &equal_split_fractions(k)), 0.0);
    }
    st
}

fn equal_split_fractions(k: usize) -> Vec<f64> {
    // Cumulative shares back to per-user fractions.
    let z = equal_split(k);
    (0..k).map(|i| z[i] - z.get(i + 1).copied().unwrap_or(0.0)).collect()
}

pub fn single_user_suite(n: usize, seed: u64) -> Stat {
    let mut rng = rng(seed);
    let mut st = Stat::default();
    let mut cfg = SystemConfig::default_for(Scheme::NomaWor);
    for _ in 0..n {
        cfg.p_max = rng.gen_range(0.5..3.0);
        let v = rng.gen_range(0.005..0.2);
        let gamma = (rng.gen_range(0.0..3.0f64) * std::f64::consts::LN_10).exp();
        let q = rng.gen_range(-1.2 * v * gamma..0.5);
        let p = single_user_power(q, v, gamma, &cfg);
        let oracle = single_user_oracle(q, v, gamma, cfg.delta_t, cfg.p_max);
        st.add((p - oracle).abs(), 0.0);
    }
    st
}

pub fn noma_p_th_suite(n: usize, seed: u64) -> Stat {
    let mut rng = rng(seed);
    let mut st = Stat::default();
    for i in 0..n {
        let k = 2 + i % 4;
        let gamma = random_gains(&mut rng, k, 5.0, 200.0);
        let r = floors(&mut rng, k);
        let aux = compute_p_th(&gamma, &r, f64::INFINITY).unwrap();
        let oracle = noma_p_th_oracle(&gamma, &r);
        // At the threshold every floor is met with equality.
        let fractions: Vec<f64> = aux.p_k_min.iter().map(|p| p / aux.p_th_t).collect();
        let rates = noma_rates_nats(&gamma, aux.p_th_t, &fractions);
        let tight = rates.iter().zip(&r).map(|(a, b)| (a - b * LN2).abs()).fold(0.0, f64::max);
        st.add((aux.p_th_t - oracle).abs(), tight);
    }
    st
}

pub fn noma_wr_suite(n: usize, seed: u64) -> Stat {
    let mut rng = rng(seed);
    let mut st = Stat::default();
    let mut cfg = SystemConfig::default_for(Scheme::NomaWr);
    while st.instances < n {
        let k = 2 + st.instances % 2;
        let gamma = random_gains(&mut rng, k, 5.0, 200.0);
        let r = floors(&mut rng, k);
        cfg.users = k;
        cfg.r_min = r.clone();
        cfg.p_max = 2.0;
        if compute_p_th(&gamma, &r, cfg.p_max).is_err() {
            continue;
        }
        let v = rng.gen_range(0.01..0.1);
        let q = rng.gen_range(-3.0..0.2);
        let c = 10.0;
        let qs = QueueState::new(c + q, c, v);
        let slot = SlotState { t: 0, gamma: gamma.clone(), e_a: 0.0 };
        let alloc = solve_noma_wr(&slot, &qs, &cfg).unwrap();
        let (p, rho) = noma_wr_oracle(q, v, &gamma, &r, cfg.delta_t, cfg.p_max);
        let mine: Vec<f64> = alloc.rho.iter().map(|x| x * alloc.p_total).collect();
        let theirs: Vec<f64> = rho.iter().map(|x| x * p).collect();
        st.add((alloc.p_total - p).abs().max(max_abs_diff(&mine, &theirs)), 0.0);
    }
    st
}

pub fn oma_min_power_suite(n: usize, seed: u64) -> Stat {
    let mut rng = rng(seed);
    let mut st = Stat::default();
    for i in 0..n {
        let k = 2 + i % 2;
        let gamma = random_gains(&mut rng, k, 5.0, 200.0);
        let r = floors(&mut rng, k);
        let (p_th, pt) = min_power_oma(&gamma, &r, f64::INFINITY).unwrap();
        let (p_oracle, alpha) = oma_min_power_oracle(&gamma, &r);
        let err = (p_th - p_oracle).abs().max(max_abs_diff(&pt.alpha, &alpha));
        st.add(err, oma_min_power_kkt(&pt.alpha, &pt.p, &gamma, &r));
    }
    st
}

pub fn oma_fixed_power_suite(n: usize, seed: u64) -> Stat {
    let mut rng = rng(seed);
    let mut st = Stat::default();
    for i in 0..n {
        let k = 2 + i % 2;
        let gamma = random_gains(&mut rng, k, 5.0, 200.0);
        let r = floors(&mut rng, k);
        let (p_th, _) = min_power_oma(&gamma, &r, f64::INFINITY).unwrap();
        let p = p_th * rng.gen_range(1.05..4.0);
        let pt = oma_kkt_alloc(p, &gamma, &r).unwrap();
        let (alpha, powers) = oma_fixed_power_oracle(p, &gamma, &r);
        let err = max_abs_diff(&pt.alpha, &alpha).max(max_abs_diff(&pt.p, &powers));
        st.add(err, oma_fixed_power_kkt(&pt.alpha, &pt.p, &gamma, &r, p));
    }
    st
}
