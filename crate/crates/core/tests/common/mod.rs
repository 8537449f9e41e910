//! Brute-force and KKT oracles shared by the integration tests and the
//! acceptance harness. Nothing here calls the solvers under test.

#![allow(dead_code)]

use rand::Rng;

pub mod suite;

pub const LN2: f64 = std::f64::consts::LN_2;

/// Minimizes `f` over a box by repeated grid search, shrinking the box around
/// the best point each round. Infeasible points should return `+inf`.
pub fn zoom_min<F>(f: F, lo: &[f64], hi: &[f64], points: usize, rounds: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let dim = lo.len();
    let (mut a, mut b) = (lo.to_vec(), hi.to_vec());
    let mut best = (lo.to_vec(), f64::INFINITY);
    let mut x = vec![0.0; dim];
    for _ in 0..rounds {
        let total = points.pow(dim as u32);
        for idx in 0..total {
            let mut rest = idx;
            for d in 0..dim {
                let i = rest % points;
                rest /= points;
                x[d] = a[d] + (b[d] - a[d]) * i as f64 / (points - 1) as f64;
            }
            let v = f(&x);
            if v < best.1 {
                best = (x.clone(), v);
            }
        }
        if !best.1.is_finite() {
            return best;
        }
        if (0..dim).all(|d| b[d] - a[d] <= 1e-14 * (1.0 + best.0[d].abs())) {
            break;
        }
        for d in 0..dim {
            let step = (b[d] - a[d]) / (points - 1) as f64;
            a[d] = (best.0[d] - 2.0 * step).max(lo[d]);
            b[d] = (best.0[d] + 2.0 * step).min(hi[d]);
        }
    }
    best
}

/// Sorted channel gains spread log-uniformly over `[lo, hi]`.
pub fn random_gains<R: Rng>(rng: &mut R, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..k)
        .map(|_| (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp())
        .collect();
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g
}

/// NOMA sum rate in nats, written out directly from the SIC rates.
pub fn noma_sum_nats(gamma: &[f64], p: f64, rho: &[f64]) -> f64 {
    noma_rates_nats(gamma, p, rho).iter().sum()
}

pub fn noma_rates_nats(gamma: &[f64], p: f64, rho: &[f64]) -> Vec<f64> {
    (0..gamma.len())
        .map(|k| {
            let above: f64 = rho[k + 1..].iter().sum();
            (1.0 + rho[k] * p * gamma[k] / (1.0 + above * p * gamma[k])).ln()
        })
        .collect()
}

/// Every non-increasing split of `units` into `k` integer parts.
pub fn ordered_compositions(units: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, k: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            if left <= cap {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for v in (0..=left.min(cap)).rev() {
            cur.push(v);
            rec(left - v, k - 1, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(units, k, units, &mut Vec::new(), &mut out);
    out
}

/// Best ordered power split on a lattice of step `1/units`.
pub fn best_ordered_split(gamma: &[f64], p: f64, units: usize) -> Vec<f64> {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for c in ordered_compositions(units, gamma.len()) {
        let rho: Vec<f64> = c.iter().map(|&u| u as f64 / units as f64).collect();
        let v = noma_sum_nats(gamma, p, &rho);
        if v > best.1 + 1e-14 {
            best = (rho, v);
        }
    }
    best.0
}

/// Minimizer of `−qΔtP − v ln(1 + Pγ)` on `[0, p_max]` by grid search.
pub fn single_user_oracle(q: f64, v: f64, gamma: f64, delta_t: f64, p_max: f64) -> f64 {
    zoom_min(
        |x| -q * delta_t * x[0] - v * (x[0] * gamma).ln_1p(),
        &[0.0],
        &[p_max],
        41,
        40,
    )
    .0[0]
}

/// Split of power `p` that holds users `1..K−1` at their floors, built from
/// the weakest user up; `None` when the strongest user would go negative.
pub fn forward_floor_split(gamma: &[f64], p: f64, r_bits: &[f64]) -> Option<Vec<f64>> {
    let k = gamma.len();
    let mut left = 1.0;
    let mut rho = vec![0.0; k];
    for i in 0..k - 1 {
        let m = r_bits[i].exp2() - 1.0;
        // ρ p γ / (1 + (left − ρ) p γ) = m
        rho[i] = m * (1.0 + left * p * gamma[i]) / ((1.0 + m) * p * gamma[i]);
        left -= rho[i];
        if left < 0.0 {
            return None;
        }
    }
    rho[k - 1] = left;
    let last = (1.0 + left * p * gamma[k - 1]).log2();
    (last >= r_bits[k - 1]).then_some(rho)
}

/// Smallest total power at which every NOMA user reaches its floor.
pub fn noma_p_th_oracle(gamma: &[f64], r_bits: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while forward_floor_split(gamma, hi, r_bits).is_none() {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if forward_floor_split(gamma, mid, r_bits).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Maximum of `f` on `[lo, hi]`: a coarse grid, golden-section refinement
/// around the best grid point, and both endpoints.
pub fn max_1d<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    const N: usize = 33;
    let mut best = (lo, f(lo));
    let v = f(hi);
    if v > best.1 {
        best = (hi, v);
    }
    let mut best_i = 0;
    let mut grid_best = f64::NEG_INFINITY;
    for i in 1..N - 1 {
        let x = lo + (hi - lo) * i as f64 / (N - 1) as f64;
        let v = f(x);
        if v > grid_best {
            grid_best = v;
            best_i = i;
        }
    }
    if !grid_best.is_finite() {
        return best;
    }
    let step = (hi - lo) / (N - 1) as f64;
    let (mut a, mut b) = (lo + step * (best_i as f64 - 1.0), lo + step * (best_i as f64 + 1.0));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Largest value in `[lo, hi]` where `pred` holds, for `pred` true on a prefix.
fn last_true<F: Fn(f64) -> bool>(pred: F, lo: f64, hi: f64) -> f64 {
    if pred(hi) {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Smallest value in `[lo, hi]` where `pred` holds, for `pred` true on a
/// suffix; the returned point always satisfies `pred` when `pred(hi)` does.
fn first_true<F: Fn(f64) -> bool>(pred: F, lo: f64, hi: f64) -> f64 {
    if pred(lo) {
        return lo;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

/// SIC rate (nats) of a user holding share `rho` with `above` of the power on
/// stronger users.
fn sic_rate(gamma: f64, p: f64, rho: f64, above: f64) -> f64 {
    (rho * p * gamma / (1.0 + above * p * gamma)).ln_1p()
}

/// Whether users `k..` can all meet their floors with share `left` of power `p`.
fn noma_tail_feasible(gamma: &[f64], p: f64, r_nats: &[f64], k: usize, left: f64) -> bool {
    if k + 1 == gamma.len() {
        return sic_rate(gamma[k], p, left, 0.0) >= r_nats[k];
    }
    // Smallest share meeting this user's floor; the rate rises with its share.
    if sic_rate(gamma[k], p, left, 0.0) < r_nats[k] {
        return false;
    }
    let need = first_true(|share| sic_rate(gamma[k], p, share, left - share) >= r_nats[k], 0.0, left);
    noma_tail_feasible(gamma, p, r_nats, k + 1, left - need)
}

/// Best sum rate (nats) of users `k..` sharing `left` of power `p`, with the
/// shares chosen by nested one-dimensional search.
pub fn noma_tail_best(gamma: &[f64], p: f64, r_nats: &[f64], k: usize, left: f64) -> (f64, Vec<f64>) {
    if k + 1 == gamma.len() {
        let r = sic_rate(gamma[k], p, left, 0.0);
        return if r >= r_nats[k] { (r, vec![left]) } else { (f64::NEG_INFINITY, vec![]) };
    }
    // Feasible shares for user k form an interval [lo, hi].
    let lo = first_true(|share| sic_rate(gamma[k], p, share, left - share) >= r_nats[k], 0.0, left);
    let hi = last_true(
        |share| noma_tail_feasible(gamma, p, r_nats, k + 1, left - share),
        lo,
        left,
    );
    if sic_rate(gamma[k], p, lo, left - lo) < r_nats[k] || lo > hi {
        return (f64::NEG_INFINITY, vec![]);
    }
    let value = |share: f64| {
        let (v, _) = noma_tail_best(gamma, p, r_nats, k + 1, left - share);
        sic_rate(gamma[k], p, share, left - share) + v
    };
    let (share, v) = max_1d(value, lo, hi);
    let (_, mut rest) = noma_tail_best(gamma, p, r_nats, k + 1, left - share);
    rest.insert(0, share);
    (v, rest)
}

/// Per-slot NOMA optimum with rate floors: `min −qΔtP − v·(sum rate)` over
/// total power and shares, by nested search.
pub fn noma_wr_oracle(q: f64, v: f64, gamma: &[f64], r_bits: &[f64], delta_t: f64, p_max: f64) -> (f64, Vec<f64>) {
    let r: Vec<f64> = r_bits.iter().map(|x| x * LN2).collect();
    let p_lo = first_true(|p| noma_tail_feasible(gamma, p, &r, 0, 1.0), 0.0, p_max);
    let objective = |p: f64| q * delta_t * p + v * noma_tail_best(gamma, p, &r, 0, 1.0).0;
    let (p, _) = max_1d(objective, p_lo, p_max);
    (p, noma_tail_best(gamma, p, &r, 0, 1.0).1)
}

/// Power user `k` needs on bandwidth `a` to reach `r` nats.
pub fn oma_power_needed(a: f64, r: f64, gamma: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else if a <= 0.0 {
        f64::INFINITY
    } else {
        a * (r / a).exp_m1() / gamma
    }
}

/// Minimum-power OMA bandwidth split by grid search over `α_1..α_{K−1}`.
pub fn oma_min_power_oracle(gamma: &[f64], r_bits: &[f64]) -> (f64, Vec<f64>) {
    let k = gamma.len();
    let f = |x: &[f64]| {
        let last = 1.0 - x.iter().sum::<f64>();
        if last <= 0.0 {
            return f64::INFINITY;
        }
        x.iter()
            .chain(std::iter::once(&last))
            .zip(gamma.iter().zip(r_bits))
            .map(|(&a, (&g, &r))| oma_power_needed(a, r * LN2, g))
            .sum()
    };
    let (x, p) = zoom_min(f, &vec![0.0; k - 1], &vec![1.0; k - 1], if k == 2 { 41 } else { 21 }, 60);
    let mut alpha = x.clone();
    alpha.push(1.0 - x.iter().sum::<f64>());
    (p, alpha)
}

/// Best power split for fixed bandwidths: water-filling with each user's
/// floor as a lower bound. Returns the sum rate (nats) and the powers.
pub fn oma_waterfill(alpha: &[f64], p: f64, gamma: &[f64], r_nats: &[f64]) -> Option<(f64, Vec<f64>)> {
    let need: Vec<f64> = (0..gamma.len()).map(|i| oma_power_needed(alpha[i], r_nats[i], gamma[i])).collect();
    if need.iter().sum::<f64>() > p || alpha.iter().any(|a| *a < 0.0) {
        return None;
    }
    let powers_at = |level: f64| -> Vec<f64> {
        (0..gamma.len())
            .map(|i| need[i].max(alpha[i] * (level - 1.0 / gamma[i])))
            .collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while powers_at(hi).iter().sum::<f64>() < p {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if powers_at(m).iter().sum::<f64>() < p {
            lo = m;
        } else {
            hi = m;
        }
    }
    let mut powers = powers_at(hi);
    // Put the rounding leftover on the strongest user.
    let k = powers.len();
    let drift = p - powers.iter().sum::<f64>();
    powers[k - 1] += drift;
    let total = (0..k)
        .map(|i| if alpha[i] > 0.0 { alpha[i] * (powers[i] * gamma[i] / alpha[i]).ln_1p() } else { 0.0 })
        .sum();
    Some((total, powers))
}

/// Fixed-power OMA optimum with floors: nested search over the bandwidth
/// fractions, water-filling for the powers.
pub fn oma_fixed_power_oracle(p: f64, gamma: &[f64], r_bits: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r: Vec<f64> = r_bits.iter().map(|x| x * LN2).collect();
    fn search(prefix: &mut Vec<f64>, p: f64, gamma: &[f64], r: &[f64]) -> (f64, Vec<f64>) {
        let k = gamma.len();
        let used: f64 = prefix.iter().sum();
        if prefix.len() + 1 == k {
            let mut alpha = prefix.clone();
            alpha.push(1.0 - used);
            return match oma_waterfill(&alpha, p, gamma, r) {
                Some((v, _)) => (v, alpha),
                None => (f64::NEG_INFINITY, alpha),
            };
        }
        let (a, _) = max_1d(
            |a| {
                prefix.push(a);
                let v = search(prefix, p, gamma, r).0;
                prefix.pop();
                v
            },
            0.0,
            1.0 - used,
        );
        prefix.push(a);
        let out = search(prefix, p, gamma, r);
        prefix.pop();
        out
    }
    let (_, alpha) = search(&mut Vec::new(), p, gamma, &r);
    let (_, powers) = oma_waterfill(&alpha, p, gamma, &r).expect("oracle point is feasible");
    (alpha, powers)
}

/// KKT residual of a fixed-power OMA allocation, from the Lagrangian of
/// `max Σ α ln(1+Pγ/α)` with power, bandwidth and floor constraints. The
/// strongest user is taken as unconstrained.
pub fn oma_fixed_power_kkt(alpha: &[f64], powers: &[f64], gamma: &[f64], r_bits: &[f64], p: f64) -> f64 {
    let k = gamma.len();
    let s: Vec<f64> = (0..k).map(|i| powers[i] * gamma[i] / alpha[i]).collect();
    let g = |s: f64| s.ln_1p() - s / (1.0 + s);
    let theta = gamma[k - 1] / (1.0 + s[k - 1]);
    let beta = g(s[k - 1]);
    let mut worst = (alpha.iter().sum::<f64>() - 1.0).abs().max((powers.iter().sum::<f64>() - p).abs());
    for i in 0..k - 1 {
        let lambda = theta * (1.0 + s[i]) / gamma[i] - 1.0;
        let rate = alpha[i] * s[i].ln_1p();
        worst = worst
            .max(((1.0 + lambda) * g(s[i]) - beta).abs() / beta.max(1e-300))
            .max((lambda * (rate - r_bits[i] * LN2)).abs())
            .max((-lambda).max(0.0));
    }
    worst
}

/// KKT residual of a minimum-power OMA allocation: the floors are tight and
/// `(1+s_k)(ln(1+s_k) − s_k/(1+s_k))/γ_k` is the same for every user.
pub fn oma_min_power_kkt(alpha: &[f64], powers: &[f64], gamma: &[f64], r_bits: &[f64]) -> f64 {
    let k = gamma.len();
    let s: Vec<f64> = (0..k).map(|i| powers[i] * gamma[i] / alpha[i]).collect();
    let nu: Vec<f64> = (0..k)
        .map(|i| (1.0 + s[i]) * (s[i].ln_1p() - s[i] / (1.0 + s[i])) / gamma[i])
        .collect();
    let mut worst = (alpha.iter().sum::<f64>() - 1.0).abs();
    for i in 0..k {
        worst = worst
            .max((nu[i] - nu[k - 1]).abs() / nu[k - 1])
            .max((alpha[i] * s[i].ln_1p() - r_bits[i] * LN2).abs());
    }
    worst
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Second central difference of `f` at `x` with step `h`.
pub fn second_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    f(x + h) - 2.0 * f(x) + f(x - h)
}
