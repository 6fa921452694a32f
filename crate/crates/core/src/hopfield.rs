//! Desk-scale Hopfield simulator.
//!
//! Spins and patterns are bit-packed (bit 0 = +1, bit 1 = -1) and all field
//! and energy arithmetic is exact integer arithmetic in units of 1/N:
//! the diagonal-free field numerator of site k is
//! `n_k = sigma_k sum_mu xi^mu_k m^mu - P` with overlaps
//! `m^mu = sum_j xi^mu_j sigma_j`, so `z_k = n_k / N` and the energy is
//! `E = (P N - sum_mu (m^mu)^2) / (2N)`. Couplings are never materialized;
//! everything runs through the P x N pattern factor and the overlap vector,
//! which a flip updates in O(P).
//!
//! Randomness is counter-based: pattern bits are a pure function of
//! `(seed, pattern, block)` and each Monte Carlo trial derives its own
//! sub-seed from `(seed, trial)`, so estimates are bitwise reproducible
//! for any worker count.

use crate::rng;
use crate::{Error, Result};
use rayon::prelude::*;

/// Memory cap for one pattern set (bits), ~1 GiB.
const MAX_PATTERN_BITS: u64 = 1 << 33;

/// Wilson 95% z-score.
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Stored +-1 patterns, bit-packed row-major (pattern-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    /// Neurons N.
    pub n: usize,
    /// Total stored patterns P (the conditioned pattern is index 0).
    pub p: usize,
    seed: u64,
    words_per_row: usize,
    bits: Vec<u64>,
}

#[inline]
fn sign_of_bit(b: u64) -> i64 {
    1 - 2 * (b as i64)
}

impl PatternSet {
    /// Word index and mask for site `k` within a row.
    #[inline]
    fn site(k: usize) -> (usize, u64) {
        (k >> 6, 1u64 << (k & 63))
    }

    #[inline]
    fn row(&self, mu: usize) -> &[u64] {
        &self.bits[mu * self.words_per_row..(mu + 1) * self.words_per_row]
    }

    /// Entry `xi^mu_k` as +-1.
    #[inline]
    pub fn entry(&self, mu: usize, k: usize) -> i64 {
        let (w, m) = Self::site(k);
        sign_of_bit(u64::from(self.row(mu)[w] & m != 0))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Empirical load P/N.
    pub fn alpha_emp(&self) -> f64 {
        self.p as f64 / self.n as f64
    }
}

/// Draws `p` patterns of `n` fair +-1 entries from the counter-based
/// generator keyed by `(seed, pattern, block)`; bitwise reproducible.
pub fn gen_patterns(n: usize, p: usize, seed: u64) -> Result<PatternSet> {
    if n < 2 || p < 1 {
        return Err(Error::Domain(format!("need n >= 2, p >= 1, got ({n}, {p})")));
    }
    if (n as u64).saturating_mul(p as u64) > MAX_PATTERN_BITS {
        return Err(Error::Resource(format!(
            "pattern set of {n} x {p} bits exceeds the {MAX_PATTERN_BITS}-bit cap"
        )));
    }
    let words_per_row = n.div_ceil(64);
    let tail_mask = if n % 64 == 0 {
        u64::MAX
    } else {
        (1u64 << (n % 64)) - 1
    };
    let mut bits = vec![0u64; words_per_row * p];
    bits.par_chunks_mut(words_per_row)
        .enumerate()
        .for_each(|(mu, row)| {
            for (b, w) in row.iter_mut().enumerate() {
                *w = rng::bits(seed, mu as u64, b as u64);
            }
            *row.last_mut().unwrap() &= tail_mask;
        });
    Ok(PatternSet {
        n,
        p,
        seed,
        words_per_row,
        bits,
    })
}

/// A network configuration with incrementally maintained overlaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinState {
    n: usize,
    spins: Vec<u64>,
    /// `m^mu = sum_j xi^mu_j sigma_j`; kept consistent through flips.
    overlaps: Vec<i64>,
}

impl SpinState {
    /// Spin at site `k` as +-1.
    #[inline]
    pub fn spin(&self, k: usize) -> i64 {
        let (w, m) = PatternSet::site(k);
        sign_of_bit(u64::from(self.spins[w] & m != 0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn overlaps(&self) -> &[i64] {
        &self.overlaps
    }

    /// Builds the state from raw packed spins, computing overlaps by
    /// XOR + popcount against each pattern row.
    pub fn from_bits(ps: &PatternSet, spins: Vec<u64>) -> SpinState {
        let mut overlaps = vec![0i64; ps.p];
        for (mu, m) in overlaps.iter_mut().enumerate() {
            let row = ps.row(mu);
            let mut disagree = 0u32;
            for (a, b) in row.iter().zip(&spins) {
                disagree += (a ^ b).count_ones();
            }
            *m = ps.n as i64 - 2 * i64::from(disagree);
        }
        SpinState {
            n: ps.n,
            spins,
            overlaps,
        }
    }

    /// The stored pattern `idx` as a configuration.
    pub fn from_pattern(ps: &PatternSet, idx: usize) -> Result<SpinState> {
        if idx >= ps.p {
            return Err(Error::Domain(format!(
                "pattern index {idx} out of range (P = {})",
                ps.p
            )));
        }
        Ok(Self::from_bits(ps, ps.row(idx).to_vec()))
    }

    /// Flips site `k`, updating the overlaps in O(P).
    pub fn flip(&mut self, ps: &PatternSet, k: usize) {
        let old = self.spin(k);
        let (w, m) = PatternSet::site(k);
        self.spins[w] ^= m;
        for (mu, ov) in self.overlaps.iter_mut().enumerate() {
            *ov -= 2 * ps.entry(mu, k) * old;
        }
    }

    /// Recomputes the overlaps from scratch and compares; used to check the
    /// incremental bookkeeping.
    pub fn overlaps_consistent(&self, ps: &PatternSet) -> bool {
        let fresh = Self::from_bits(ps, self.spins.clone());
        fresh.overlaps == self.overlaps
    }

    /// Hamming distance to pattern `idx`.
    pub fn distance_to(&self, ps: &PatternSet, idx: usize) -> usize {
        let row = ps.row(idx);
        self.spins
            .iter()
            .zip(row)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }
}

/// Integer field numerators `n_k = sigma_k sum_mu xi^mu_k m^mu - P` for all
/// sites, by a row-major streaming accumulation: every site starts at
/// `sum_mu m^mu` and each set bit (xi = -1) subtracts `2 m^mu`.
fn field_numerators(ps: &PatternSet, s: &SpinState) -> Vec<i64> {
    let total_m: i64 = s.overlaps.iter().sum();
    let mut acc = vec![total_m; ps.n];
    for mu in 0..ps.p {
        let m2 = 2 * s.overlaps[mu];
        let row = ps.row(mu);
        for (wi, &w) in row.iter().enumerate() {
            let base = wi * 64;
            let mut word = w;
            while word != 0 {
                let j = word.trailing_zeros() as usize;
                acc[base + j] -= m2;
                word &= word - 1;
            }
        }
    }
    for (k, a) in acc.iter_mut().enumerate() {
        *a = s.spin(k) * *a - ps.p as i64;
    }
    acc
}

/// Diagonal-free effective fields `z_k = n_k / N`.
pub fn effective_fields(ps: &PatternSet, s: &SpinState) -> Result<Vec<f64>> {
    if s.n != ps.n || s.overlaps.len() != ps.p {
        return Err(Error::Domain("state/pattern dimensions differ".into()));
    }
    Ok(field_numerators(ps, s)
        .into_iter()
        .map(|nk| nk as f64 / ps.n as f64)
        .collect())
}

/// Fields including the diagonal and excluding the conditioned pattern:
/// `x~_k = sigma_k (1/N) sum_{mu != pat} xi^mu_k m^mu`. For a configuration
/// on the shell of `pattern_index` these satisfy, exactly in integer units,
/// `N x~_k - N z_k = P + (N - 2f)` on the flipped block and
/// `P - (N - 2f)` elsewhere.
pub fn tilde_fields(ps: &PatternSet, s: &SpinState, pattern_index: usize) -> Result<Vec<f64>> {
    if s.n != ps.n || s.overlaps.len() != ps.p {
        return Err(Error::Domain("state/pattern dimensions differ".into()));
    }
    if pattern_index >= ps.p {
        return Err(Error::Domain(format!(
            "pattern index {pattern_index} out of range"
        )));
    }
    let total_m: i64 = s
        .overlaps
        .iter()
        .enumerate()
        .filter(|(mu, _)| *mu != pattern_index)
        .map(|(_, &m)| m)
        .sum();
    let mut acc = vec![total_m; ps.n];
    for mu in 0..ps.p {
        if mu == pattern_index {
            continue;
        }
        let m2 = 2 * s.overlaps[mu];
        let row = ps.row(mu);
        for (wi, &w) in row.iter().enumerate() {
            let base = wi * 64;
            let mut word = w;
            while word != 0 {
                let j = word.trailing_zeros() as usize;
                acc[base + j] -= m2;
                word &= word - 1;
            }
        }
    }
    Ok((0..ps.n)
        .map(|k| (s.spin(k) * acc[k]) as f64 / ps.n as f64)
        .collect())
}

/// The configuration at flip fraction `delta` from pattern
/// `pattern_index`: the first `floor(delta N)` sites are negated.
pub fn flip_config(ps: &PatternSet, pattern_index: usize, delta: f64) -> Result<SpinState> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Domain(format!(
            "flip fraction must lie in [0, 1/2), got {delta}"
        )));
    }
    if pattern_index >= ps.p {
        return Err(Error::Domain(format!(
            "pattern index {pattern_index} out of range"
        )));
    }
    let f = (delta * ps.n as f64).floor() as usize;
    let mut spins = ps.row(pattern_index).to_vec();
    for word in spins.iter_mut().take(f / 64) {
        *word ^= u64::MAX;
    }
    if f % 64 != 0 {
        spins[f / 64] ^= (1u64 << (f % 64)) - 1;
    }
    Ok(SpinState::from_bits(ps, spins))
}

/// Energy `E = (P N - sum_mu m^2) / (2N)`; the `P/2` offset removes the
/// coupling diagonal.
pub fn energy(ps: &PatternSet, s: &SpinState) -> f64 {
    energy_x2n(ps, s) as f64 / (2 * ps.n) as f64
}

/// Exact energy numerator `2 N E` as an integer.
fn energy_x2n(ps: &PatternSet, s: &SpinState) -> i64 {
    let sum_m2: i64 = s.overlaps.iter().map(|&m| m * m).sum();
    (ps.p * ps.n) as i64 - sum_m2
}

/// Fixed-point classification of the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// `Stable` iff every diagonal-free field is strictly positive, `Marginal`
/// iff the minimum field is exactly zero.
pub fn is_fixed_point(ps: &PatternSet, s: &SpinState) -> Stability {
    let nums = field_numerators(ps, s);
    let min = nums.iter().copied().min().unwrap_or(0);
    match min {
        m if m > 0 => Stability::Stable,
        0 => Stability::Marginal,
        _ => Stability::Unstable,
    }
}

/// Pairwise coupling numerator `N J~_kj sigma_k sigma_j` (integer).
fn pair_coupling(ps: &PatternSet, s: &SpinState, k: usize, j: usize) -> i64 {
    let mut w = 0i64;
    for mu in 0..ps.p {
        w += ps.entry(mu, k) * ps.entry(mu, j);
    }
    w * s.spin(k) * s.spin(j)
}

/// Exact local-minimum test on the Hamming shell of `pattern_index`.
///
/// A shell swap flips one disagreeing site k and one agreeing site j; the
/// energy change is `(n_k + n_j - 2 w_kj)/N` with `w_kj` the coupling
/// numerator, so the configuration is a shell-local minimum iff
/// `n_k + n_j >= 2 w_kj` for every such pair. Since `|w_kj| <= P`, an O(N)
/// fast path decides all pairs with `min_k + min_j` outside `[-2P, 2P)`;
/// only pairs inside the band are enumerated exactly.
pub fn is_shell_local_min(ps: &PatternSet, s: &SpinState, pattern_index: usize) -> Result<bool> {
    if s.n != ps.n || s.overlaps.len() != ps.p {
        return Err(Error::Domain("state/pattern dimensions differ".into()));
    }
    if pattern_index >= ps.p {
        return Err(Error::Domain(format!(
            "pattern index {pattern_index} out of range"
        )));
    }
    let flipped: Vec<usize> = (0..ps.n)
        .filter(|&k| s.spin(k) != ps.entry(pattern_index, k))
        .collect();
    if 2 * flipped.len() >= ps.n {
        return Err(Error::Domain(format!(
            "{} disagreements out of {}: not a sub-half shell",
            flipped.len(),
            ps.n
        )));
    }
    let nums = field_numerators(ps, s);
    if flipped.is_empty() {
        // degenerate shell: no swap neighbors; fall back to field
        // positivity over the (whole) agreeing block
        return Ok(nums.iter().all(|&v| v >= 0));
    }
    let is_flipped = {
        let mut mask = vec![false; ps.n];
        for &k in &flipped {
            mask[k] = true;
        }
        mask
    };
    let band = 2 * ps.p as i64;
    let mut fl: Vec<(i64, usize)> = flipped.iter().map(|&k| (nums[k], k)).collect();
    let mut un: Vec<(i64, usize)> = (0..ps.n)
        .filter(|&j| !is_flipped[j])
        .map(|j| (nums[j], j))
        .collect();
    fl.sort_unstable();
    un.sort_unstable();
    if fl[0].0 + un[0].0 >= band {
        return Ok(true);
    }
    if fl[0].0 + un[0].0 < -band {
        // the minimal pair violates the condition for any coupling value
        let w = pair_coupling(ps, s, fl[0].1, un[0].1);
        debug_assert!(fl[0].0 + un[0].0 < 2 * w);
        return Ok(false);
    }
    // boundary band: enumerate exactly the pairs that could fail
    for &(nk, k) in &fl {
        if nk + un[0].0 >= band {
            break;
        }
        for &(nj, j) in &un {
            if nk + nj >= band {
                break;
            }
            if nk + nj < 2 * pair_coupling(ps, s, k, j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Transposed pattern bits: column k holds the P bits `xi^mu_k`.
struct ColumnBits {
    words_per_col: usize,
    cols: Vec<u64>,
}

impl ColumnBits {
    fn build(ps: &PatternSet) -> ColumnBits {
        let wpc = ps.p.div_ceil(64);
        let mut cols = vec![0u64; wpc * ps.n];
        for mu in 0..ps.p {
            let row = ps.row(mu);
            let (w, m) = PatternSet::site(mu);
            for (wi, &bits) in row.iter().enumerate() {
                let mut word = bits;
                while word != 0 {
                    let j = word.trailing_zeros() as usize;
                    let k = wi * 64 + j;
                    if k < ps.n {
                        cols[k * wpc + w] |= m;
                    }
                    word &= word - 1;
                }
            }
        }
        ColumnBits {
            words_per_col: wpc,
            cols,
        }
    }

    #[inline]
    fn col(&self, k: usize) -> &[u64] {
        &self.cols[k * self.words_per_col..(k + 1) * self.words_per_col]
    }
}

/// Field numerator of one site from the transposed bits:
/// `n_k = sigma_k (total_m - 2 sum_{xi bit set} m) - P`.
#[inline]
fn site_numerator(
    cols: &ColumnBits,
    overlaps: &[i64],
    total_m: i64,
    p: i64,
    k: usize,
    spin_k: i64,
) -> i64 {
    let mut neg = 0i64;
    for (wi, &w) in cols.col(k).iter().enumerate() {
        let mut word = w;
        let base = wi * 64;
        while word != 0 {
            let j = word.trailing_zeros() as usize;
            neg += overlaps[base + j];
            word &= word - 1;
        }
    }
    spin_k * (total_m - 2 * neg) - p
}

/// Zero-temperature sequential dynamics: sites update in index order, a
/// site flips iff its diagonal-free field is strictly negative, and a full
/// sweep without flips means convergence. The energy decreases by exactly
/// `2 |z_k|` at every flip (checked in debug builds).
pub fn run_dynamics(
    ps: &PatternSet,
    s0: &SpinState,
    max_sweeps: usize,
) -> Result<(SpinState, usize, bool)> {
    if max_sweeps == 0 {
        return Err(Error::Domain("max_sweeps must be >= 1".into()));
    }
    if s0.n != ps.n || s0.overlaps.len() != ps.p {
        return Err(Error::Domain("state/pattern dimensions differ".into()));
    }
    let cols = ColumnBits::build(ps);
    let mut s = s0.clone();
    let mut total_m: i64 = s.overlaps.iter().sum();
    let p = ps.p as i64;
    let mut sweeps = 0usize;
    for _ in 0..max_sweeps {
        sweeps += 1;
        let mut flips = 0usize;
        for k in 0..ps.n {
            let spin_k = s.spin(k);
            let nk = site_numerator(&cols, &s.overlaps, total_m, p, k, spin_k);
            if nk < 0 {
                #[cfg(debug_assertions)]
                let before = energy_x2n(ps, &s);
                // O(P) overlap update through column k
                for (wi, &w) in cols.col(k).iter().enumerate() {
                    let base = wi * 64;
                    let hi = (base + 64).min(ps.p);
                    for mu in base..hi {
                        s.overlaps[mu] -= 2 * spin_k;
                    }
                    let mut word = w;
                    while word != 0 {
                        let j = word.trailing_zeros() as usize;
                        s.overlaps[base + j] += 4 * spin_k;
                        word &= word - 1;
                    }
                }
                let (wd, mask) = PatternSet::site(k);
                s.spins[wd] ^= mask;
                total_m = s.overlaps.iter().sum();
                #[cfg(debug_assertions)]
                {
                    let after = energy_x2n(ps, &s);
                    debug_assert_eq!(after - before, 4 * nk);
                    debug_assert!(after < before);
                }
                flips += 1;
            }
        }
        if flips == 0 {
            return Ok((s, sweeps, true));
        }
    }
    Ok((s, sweeps, false))
}

/// Constructive descent step from a shell configuration.
///
/// Collects the disagreeing sites whose field is at most
/// `-(1/2 + alpha) eps`; if more than `eps N` of them exist, flips the
/// first `floor(eps N) + 1` and reports the exact energy drop, otherwise
/// returns the state unchanged with drop 0.
pub fn descent_probe(
    ps: &PatternSet,
    s: &SpinState,
    pattern_index: usize,
    eps: f64,
) -> Result<(SpinState, f64)> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if pattern_index >= ps.p {
        return Err(Error::Domain(format!(
            "pattern index {pattern_index} out of range"
        )));
    }
    if s.n != ps.n || s.overlaps.len() != ps.p {
        return Err(Error::Domain("state/pattern dimensions differ".into()));
    }
    let alpha_n = ps.p as f64 / ps.n as f64;
    let threshold = -(0.5 + alpha_n) * eps * ps.n as f64;
    let nums = field_numerators(ps, s);
    let deep: Vec<usize> = (0..ps.n)
        .filter(|&k| s.spin(k) != ps.entry(pattern_index, k) && (nums[k] as f64) <= threshold)
        .collect();
    if deep.len() as f64 <= eps * ps.n as f64 {
        return Ok((s.clone(), 0.0));
    }
    let take = (eps * ps.n as f64).floor() as usize + 1;
    let before = energy_x2n(ps, s);
    let mut out = s.clone();
    for &k in deep.iter().take(take) {
        out.flip(ps, k);
    }
    let after = energy_x2n(ps, &out);
    Ok((out, (before - after) as f64 / (2 * ps.n) as f64))
}

/// A seeded binomial estimate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

fn wilson(successes: u64, trials: u64, seed: u64) -> McEstimate {
    let t = trials as f64;
    let p_hat = successes as f64 / t;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / t;
    let center = (p_hat + z2 / (2.0 * t)) / denom;
    let half = WILSON_Z * (p_hat * (1.0 - p_hat) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    // the interval contains p_hat algebraically; the min/max guard the
    // one-ulp rounding at p_hat = 0 or 1
    McEstimate {
        successes,
        trials,
        p_hat,
        ci_low: (center - half).max(0.0).min(p_hat),
        ci_high: (center + half).min(1.0).max(p_hat),
        seed,
    }
}

/// Monte Carlo run metadata around the binomial estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointRun {
    pub estimate: McEstimate,
    /// Trials whose minimum field was exactly zero (not counted stable).
    pub marginal_trials: u64,
    pub p: usize,
    pub alpha_emp: f64,
}

/// Estimates the probability that the flip configuration at fraction
/// `delta` is a strict fixed point, over independent pattern draws.
/// Marginal draws (minimum field exactly zero) are counted separately and
/// not as successes.
pub fn mc_fixed_probability(
    n: usize,
    alpha: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<FixedPointRun> {
    if trials < 1 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    let p = (alpha * n as f64).round() as usize;
    if p < 1 {
        return Err(Error::Domain(format!(
            "round(alpha n) = {p}; need at least one pattern"
        )));
    }
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Domain(format!(
            "flip fraction must lie in [0, 1/2), got {delta}"
        )));
    }
    if (n as u64).saturating_mul(p as u64) > MAX_PATTERN_BITS {
        return Err(Error::Resource("pattern set too large".into()));
    }
    let f = (delta * n as f64).floor() as usize;
    let (stable, marginal) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ps = gen_patterns(n, p, rng::subseed(seed, t)).expect("validated dims");
            trial_outcome(&ps, f)
        })
        .reduce(
            || (0u64, 0u64),
            |a, b| (a.0 + b.0, a.1 + b.1),
        );
    Ok(FixedPointRun {
        estimate: wilson(stable, trials, seed),
        marginal_trials: marginal,
        p,
        alpha_emp: p as f64 / n as f64,
    })
}

/// `(stable, marginal)` as 0/1 counts for one draw; checks the flipped
/// block first so deeply unstable draws exit after O(f P) work.
fn trial_outcome(ps: &PatternSet, flips: usize) -> (u64, u64) {
    let s = flip_config(ps, 0, flips as f64 / ps.n as f64 + 0.25 / ps.n as f64)
        .expect("fraction below 1/2");
    debug_assert_eq!(s.distance_to(ps, 0), flips);
    // flipped-block fields by direct column sums
    for k in 0..flips {
        let mut acc = 0i64;
        for mu in 0..ps.p {
            acc += ps.entry(mu, k) * s.overlaps[mu];
        }
        let nk = s.spin(k) * acc - ps.p as i64;
        if nk < 0 {
            return (0, 0);
        }
    }
    match is_fixed_point(ps, &s) {
        Stability::Stable => (1, 0),
        Stability::Marginal => (0, 1),
        Stability::Unstable => (0, 0),
    }
}

/// Retrieval statistics from relaxing each pattern draw's first pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalStats {
    pub trials: u64,
    /// Mean final relative Hamming distance to the conditioned pattern.
    pub mean_error: f64,
    pub se_error: f64,
    /// Mean fraction of sites with negative field at the pattern itself.
    pub mean_onestep: f64,
    pub se_onestep: f64,
    pub nonconverged: u64,
    pub p: usize,
    pub alpha_emp: f64,
    pub seed: u64,
}

/// Runs the dynamics from pattern 0 of each draw and reports the final
/// relative Hamming distance plus the one-step unstable-bit fraction.
/// Non-convergence within the sweep budget is counted, not an error.
pub fn retrieval_error(n: usize, alpha: f64, trials: u64, seed: u64) -> Result<RetrievalStats> {
    if trials < 1 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    let p = (alpha * n as f64).round() as usize;
    if p < 1 {
        return Err(Error::Domain(format!(
            "round(alpha n) = {p}; need at least one pattern"
        )));
    }
    if (n as u64).saturating_mul(p as u64) > MAX_PATTERN_BITS {
        return Err(Error::Resource("pattern set too large".into()));
    }
    let max_sweeps = 200;
    let per_trial: Vec<(f64, f64, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ps = gen_patterns(n, p, rng::subseed(seed, t)).expect("validated dims");
            let s0 = SpinState::from_pattern(&ps, 0).expect("index 0");
            let unstable = field_numerators(&ps, &s0)
                .iter()
                .filter(|&&v| v < 0)
                .count();
            let (sf, _, converged) = run_dynamics(&ps, &s0, max_sweeps).expect("validated");
            let err = sf.distance_to(&ps, 0) as f64 / n as f64;
            (err, unstable as f64 / n as f64, u64::from(!converged))
        })
        .collect();
    let t = trials as f64;
    let mean = |xs: &dyn Fn(&(f64, f64, u64)) -> f64| -> f64 {
        per_trial.iter().map(xs).sum::<f64>() / t
    };
    let mean_error = mean(&|r| r.0);
    let mean_onestep = mean(&|r| r.1);
    let var = |xs: &dyn Fn(&(f64, f64, u64)) -> f64, m: f64| -> f64 {
        per_trial.iter().map(|r| (xs(r) - m).powi(2)).sum::<f64>() / (t - 1.0).max(1.0)
    };
    Ok(RetrievalStats {
        trials,
        mean_error,
        se_error: (var(&|r| r.0, mean_error) / t).sqrt(),
        mean_onestep,
        se_onestep: (var(&|r| r.1, mean_onestep) / t).sqrt(),
        nonconverged: per_trial.iter().map(|r| r.2).sum(),
        p,
        alpha_emp: p as f64 / n as f64,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(N^2 P) double-loop field oracle (integer numerators).
    fn brute_numerators(ps: &PatternSet, s: &SpinState) -> Vec<i64> {
        (0..ps.n)
            .map(|k| {
                let mut acc = 0i64;
                for i in 0..ps.n {
                    if i == k {
                        continue;
                    }
                    let mut j = 0i64;
                    for mu in 0..ps.p {
                        j += ps.entry(mu, k) * ps.entry(mu, i);
                    }
                    acc += j * s.spin(i);
                }
                s.spin(k) * acc
            })
            .collect()
    }

    fn brute_energy_x2n(ps: &PatternSet, s: &SpinState) -> i64 {
        let mut acc = 0i64;
        for j in 0..ps.n {
            for k in 0..ps.n {
                if j == k {
                    continue;
                }
                let mut c = 0i64;
                for mu in 0..ps.p {
                    c += ps.entry(mu, j) * ps.entry(mu, k);
                }
                acc += c * s.spin(j) * s.spin(k);
            }
        }
        -acc
    }

    #[test]
    fn generation_reproducible() {
        let a = gen_patterns(8, 2, 42).unwrap();
        let b = gen_patterns(8, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_patterns(8, 2, 43).unwrap());
    }

    #[test]
    fn generation_mean_balanced() {
        let ps = gen_patterns(1_000_000, 1, 7).unwrap();
        let sum: i64 = (0..ps.n).map(|k| ps.entry(0, k)).sum();
        let mean = sum as f64 / ps.n as f64;
        assert!(mean.abs() <= 4e-3, "mean = {mean}");
    }

    #[test]
    fn generation_support() {
        // n = 2, p = 1: all four patterns occur across seeds
        let mut seen = std::collections::HashSet::new();
        for seed in 0..100 {
            let ps = gen_patterns(2, 1, seed).unwrap();
            seen.insert((ps.entry(0, 0), ps.entry(0, 1)));
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn generation_validates() {
        assert!(gen_patterns(1, 1, 0).is_err());
        assert!(gen_patterns(8, 0, 0).is_err());
        assert!(matches!(
            gen_patterns(1 << 20, 1 << 14, 0),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn single_pattern_fields() {
        // sigma = xi^0: every field is (N-1)/N
        let ps = gen_patterns(64, 1, 3).unwrap();
        let s = SpinState::from_pattern(&ps, 0).unwrap();
        for z in effective_fields(&ps, &s).unwrap() {
            assert_eq!(z, 63.0 / 64.0);
        }
        // flipped block of the flip configuration: z_k = -(m+1)/N, m = N-2f
        let s = flip_config(&ps, 0, 0.25).unwrap();
        let f = 16;
        let m = 64 - 2 * f;
        let z = effective_fields(&ps, &s).unwrap();
        for zk in z.iter().take(f) {
            assert_eq!(*zk, -((m + 1) as f64) / 64.0);
        }
    }

    #[test]
    fn fields_match_brute_force() {
        let ps = gen_patterns(64, 5, 7).unwrap();
        let s = flip_config(&ps, 0, 0.2).unwrap();
        let fast = field_numerators(&ps, &s);
        let brute = brute_numerators(&ps, &s);
        assert_eq!(fast, brute);
    }

    #[test]
    fn tilde_field_shift_identity() {
        // N x~_k - n_k = P +- (N - 2f), sign by block, exactly
        let ps = gen_patterns(128, 12, 9).unwrap();
        let s = flip_config(&ps, 0, 0.1).unwrap();
        let f = (0.1f64 * 128.0).floor() as i64;
        let m = 128 - 2 * f;
        let tilde = tilde_fields(&ps, &s, 0).unwrap();
        let nums = field_numerators(&ps, &s);
        for k in 0..128 {
            let lhs = (tilde[k] * 128.0).round() as i64 - nums[k];
            let want = if (k as i64) < f { 12 + m } else { 12 - m };
            assert_eq!(lhs, want, "site {k}");
        }
        // delta = 0: uniform shift P - N
        let s = SpinState::from_pattern(&ps, 0).unwrap();
        let tilde = tilde_fields(&ps, &s, 0).unwrap();
        let nums = field_numerators(&ps, &s);
        for k in 0..128 {
            let lhs = (tilde[k] * 128.0).round() as i64 - nums[k];
            assert_eq!(lhs, 12 - 128);
        }
    }

    #[test]
    fn tilde_field_single_pattern() {
        // p = 1 (only the conditioned pattern): excluding it leaves nothing
        let ps = gen_patterns(16, 1, 5).unwrap();
        let s = SpinState::from_pattern(&ps, 0).unwrap();
        let tilde = tilde_fields(&ps, &s, 0).unwrap();
        assert!(tilde.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn flip_config_distance() {
        let ps = gen_patterns(8, 1, 11).unwrap();
        let s = flip_config(&ps, 0, 0.25).unwrap();
        assert_eq!(s.distance_to(&ps, 0), 2);
        // squared Euclidean distance of +-1 vectors is 4 per differing site
        let sq: i64 = (0..8)
            .map(|k| {
                let d = s.spin(k) - ps.entry(0, k);
                d * d
            })
            .sum();
        assert_eq!(sq, 4 * 2);
        let s = flip_config(&ps, 0, 0.0).unwrap();
        assert_eq!(s.distance_to(&ps, 0), 0);
        assert!(flip_config(&ps, 0, 0.5).is_err());
        assert!(flip_config(&ps, 1, 0.1).is_err());
    }

    #[test]
    fn energy_reference_and_brute() {
        // sigma = xi^0 at p = 1: E = -(N-1)/2
        let ps = gen_patterns(32, 1, 13).unwrap();
        let s = SpinState::from_pattern(&ps, 0).unwrap();
        assert_eq!(energy(&ps, &s), -(31.0 / 2.0));
        // random instances against the double-loop oracle
        let ps = gen_patterns(32, 3, 17).unwrap();
        let s = flip_config(&ps, 1, 0.3).unwrap();
        assert_eq!(energy_x2n(&ps, &s), brute_energy_x2n(&ps, &s));
        // global flip invariance
        let mut t = s.clone();
        for k in 0..32 {
            t.flip(&ps, k);
        }
        assert_eq!(energy_x2n(&ps, &s), energy_x2n(&ps, &t));
    }

    #[test]
    fn overlap_bookkeeping_exact() {
        let ps = gen_patterns(96, 7, 21).unwrap();
        let mut s = flip_config(&ps, 2, 0.2).unwrap();
        for k in [0, 5, 95, 63, 64, 5, 0] {
            s.flip(&ps, k);
            assert!(s.overlaps_consistent(&ps));
        }
        for &m in s.overlaps() {
            assert!(m.abs() <= 96 && (m - 96).rem_euclid(2) == 0);
        }
    }

    #[test]
    fn fixed_point_classification() {
        let ps = gen_patterns(64, 1, 3).unwrap();
        let s = SpinState::from_pattern(&ps, 0).unwrap();
        assert_eq!(is_fixed_point(&ps, &s), Stability::Stable);
        let s = flip_config(&ps, 0, 0.2).unwrap();
        assert_eq!(is_fixed_point(&ps, &s), Stability::Unstable);
    }

    #[test]
    fn stable_states_are_energy_local_minima() {
        // exhaustive n = 4: every Stable state has energy <= all 1-flip
        // neighbors
        let ps = gen_patterns(4, 1, 29).unwrap();
        for code in 0u64..16 {
            let s = SpinState::from_bits(&ps, vec![code]);
            if is_fixed_point(&ps, &s) == Stability::Stable {
                let e = energy_x2n(&ps, &s);
                for k in 0..4 {
                    let mut t = s.clone();
                    t.flip(&ps, k);
                    assert!(energy_x2n(&ps, &t) >= e);
                }
            }
        }
    }

    #[test]
    fn shell_local_min_matches_exhaustive() {
        // fast path against full pair enumeration and against the energy
        // definition over shell swaps, on 50 seeded instances
        for seed in 0..50u64 {
            let n = 12;
            let ps = gen_patterns(n, 3, seed).unwrap();
            let s = flip_config(&ps, 0, 0.25).unwrap();
            let fast = is_shell_local_min(&ps, &s, 0).unwrap();
            let nums = field_numerators(&ps, &s);
            let flipped: Vec<usize> =
                (0..n).filter(|&k| s.spin(k) != ps.entry(0, k)).collect();
            let mut exhaustive = true;
            let mut energy_def = true;
            let e0 = energy_x2n(&ps, &s);
            for &k in &flipped {
                for j in 0..n {
                    if flipped.contains(&j) {
                        continue;
                    }
                    if nums[k] + nums[j] < 2 * pair_coupling(&ps, &s, k, j) {
                        exhaustive = false;
                    }
                    let mut t = s.clone();
                    t.flip(&ps, k);
                    t.flip(&ps, j);
                    if energy_x2n(&ps, &t) < e0 {
                        energy_def = false;
                    }
                }
            }
            assert_eq!(fast, exhaustive, "seed {seed}");
            assert_eq!(fast, energy_def, "seed {seed} (energy oracle)");
        }
    }

    #[test]
    fn shell_local_min_edge_cases() {
        let ps = gen_patterns(16, 1, 31).unwrap();
        // at p = 1 the energy depends on the configuration only through
        // the overlap, so every state on the shell has equal energy and
        // every shell swap is an exact tie: the pairwise condition holds
        // with equality (a weak shell minimum), even though the state is
        // Unstable as a fixed point of the full dynamics
        let s = flip_config(&ps, 0, 0.2).unwrap();
        assert!(is_shell_local_min(&ps, &s, 0).unwrap());
        assert_eq!(is_fixed_point(&ps, &s), Stability::Unstable);
        // empty flipped block degenerates to field positivity
        let s = SpinState::from_pattern(&ps, 0).unwrap();
        assert!(is_shell_local_min(&ps, &s, 0).unwrap());
        // more than half the sites disagreeing is not a valid shell
        let mut s = SpinState::from_pattern(&ps, 0).unwrap();
        for k in 0..9 {
            s.flip(&ps, k);
        }
        assert!(is_shell_local_min(&ps, &s, 0).is_err());
    }

    #[test]
    fn dynamics_single_pattern_basin() {
        let ps = gen_patterns(64, 1, 37).unwrap();
        let s0 = flip_config(&ps, 0, 0.1).unwrap();
        let (sf, sweeps, converged) = run_dynamics(&ps, &s0, 10).unwrap();
        assert!(converged);
        assert!(sweeps <= 2);
        assert_eq!(sf.distance_to(&ps, 0), 0);
    }

    #[test]
    fn dynamics_energy_non_increasing() {
        for seed in 0..20u64 {
            let ps = gen_patterns(256, 25, seed).unwrap();
            let s0 = flip_config(&ps, 0, 0.05).unwrap();
            let mut prev = energy_x2n(&ps, &s0);
            // re-run sweep by sweep to watch the energy trace
            let mut s = s0.clone();
            for _ in 0..20 {
                let (next, _, converged) = run_dynamics(&ps, &s, 1).unwrap();
                let e = energy_x2n(&ps, &next);
                assert!(e <= prev, "energy rose on seed {seed}");
                prev = e;
                s = next;
                if converged {
                    break;
                }
            }
            // converged states are Stable or Marginal
            let (sf, _, converged) = run_dynamics(&ps, &s0, 100).unwrap();
            if converged {
                assert_ne!(is_fixed_point(&ps, &sf), Stability::Unstable);
            }
        }
    }

    #[test]
    fn descent_probe_single_pattern() {
        let ps = gen_patterns(64, 1, 41).unwrap();
        let s = flip_config(&ps, 0, 0.1).unwrap();
        let (out, drop) = descent_probe(&ps, &s, 0, 0.02).unwrap();
        assert!(drop > 0.0);
        assert!(out.distance_to(&ps, 0) < s.distance_to(&ps, 0));
        // drop agrees with the energy recomputed before/after
        let drop2 = energy(&ps, &s) - energy(&ps, &out);
        assert!((drop - drop2).abs() < 1e-12);
    }

    #[test]
    fn descent_probe_fires_with_quadratic_gain() {
        // whenever the probe fires, the drop is at least
        // eps^2 n (1 - 2 alpha_emp)
        let n = 1000;
        let mut fired = 0;
        for seed in 0..30u64 {
            let ps = gen_patterns(n, 100, seed).unwrap();
            let s = flip_config(&ps, 0, 0.01).unwrap();
            let eps = 0.002;
            let (out, drop) = descent_probe(&ps, &s, 0, eps).unwrap();
            if drop > 0.0 {
                fired += 1;
                let alpha_emp = 100.0 / n as f64;
                assert!(
                    drop >= eps * eps * n as f64 * (1.0 - 2.0 * alpha_emp),
                    "drop = {drop}"
                );
                assert!(out.distance_to(&ps, 0) < s.distance_to(&ps, 0));
            }
        }
        assert!(fired > 0, "probe never fired across seeds");
    }

    #[test]
    fn mc_fixed_small_load_mostly_stable() {
        let run = mc_fixed_probability(500, 0.02, 0.0, 2000, 5).unwrap();
        assert!(run.estimate.p_hat >= 0.5, "p_hat = {}", run.estimate.p_hat);
        let e = run.estimate;
        assert!(0.0 <= e.ci_low && e.ci_low <= e.p_hat);
        assert!(e.p_hat <= e.ci_high && e.ci_high <= 1.0);
        assert_eq!(e.p_hat, e.successes as f64 / e.trials as f64);
    }

    #[test]
    fn mc_fixed_far_shell_never_stable() {
        let run = mc_fixed_probability(200, 0.1, 0.25, 2000, 6).unwrap();
        assert_eq!(run.estimate.successes, 0);
    }

    #[test]
    fn mc_fixed_deterministic() {
        let a = mc_fixed_probability(100, 0.1, 0.02, 500, 3).unwrap();
        let b = mc_fixed_probability(100, 0.1, 0.02, 500, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn retrieval_zero_error_at_single_pattern() {
        let stats = retrieval_error(256, 1.0 / 256.0, 10, 4).unwrap();
        assert_eq!(stats.p, 1);
        assert_eq!(stats.mean_error, 0.0);
        assert_eq!(stats.mean_onestep, 0.0);
        assert_eq!(stats.nonconverged, 0);
    }

    #[test]
    fn retrieval_deterministic() {
        let a = retrieval_error(400, 0.08, 10, 9).unwrap();
        let b = retrieval_error(400, 0.08, 10, 9).unwrap();
        assert_eq!(a, b);
    }
}
