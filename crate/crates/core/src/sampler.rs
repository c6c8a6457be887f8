//! Metropolis sampling of Gibbs measures `∝ exp(−H/T)` and the estimators
//! built on the resulting sample streams.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::fields::Grid;
use crate::geometry::Point;
use crate::parallel::{map_tasks, split_seed};
use crate::plasma::PlasmaHamiltonian;

pub const MIN_SAMPLES: usize = 100;
pub const BATCHES: usize = 20;
/// Acceptance window targeted by the burn-in step tuner.
pub const TARGET_ACCEPTANCE: (f64, f64) = (0.2, 0.5);
pub const TUNE_WINDOW_SWEEPS: usize = 10;
/// Relative tolerance of the periodic full-energy recomputation.
pub const ENERGY_DRIFT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub temperature: f64,
    /// Sweeps of `N` single-particle moves, burn-in included.
    pub sweeps: usize,
    /// Fraction of `sweeps` used as burn-in.
    pub burn_in: f64,
    /// Moves between recorded samples; `None` means `N`.
    pub thinning: Option<usize>,
    pub seed: u64,
    pub initial_step: f64,
    pub energy_check_every: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            temperature: 1.0,
            sweeps: 2000,
            burn_in: 0.2,
            thinning: None,
            seed: 0,
            initial_step: 0.5,
            energy_check_every: 100,
        }
    }
}

/// `min(1, exp(−delta/T))`.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / temperature).exp()
    }
}

/// Metropolis rule with a uniform variate `u ∈ [0, 1)`.
pub fn metropolis_accept(delta: f64, temperature: f64, u: f64) -> bool {
    u < acceptance_probability(delta, temperature)
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: Vec<Point>,
    pub energy: f64,
    pub rng: ChaCha8Rng,
    pub step: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl ChainState {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    pub samples: Vec<Vec<Point>>,
    pub state: ChainState,
    /// Acceptance ratio after burn-in, with the step frozen.
    pub acceptance: f64,
    /// Largest relative gap seen between the running and recomputed energies.
    pub max_energy_drift: f64,
    pub burn_in_sweeps: usize,
}

/// Uniform random start in the neutral droplet, away from the holes.
fn initial_configuration(h: &PlasmaHamiltonian, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let r0 = ((n as f64 + h.hole_charge()) / (PI * h.background_density())).sqrt();
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = Point::polar(
            r0 * rng.random::<f64>().sqrt(),
            2.0 * PI * rng.random::<f64>(),
        );
        let clear = h.holes().iter().all(|q| p.dist(q.position) > 1e-6)
            && pts.iter().all(|q| p.dist(*q) > 1e-6);
        if clear {
            pts.push(p);
        }
    }
    pts
}

fn propose_and_update(h: &PlasmaHamiltonian, st: &mut ChainState, t: f64) -> bool {
    let n = st.config.len();
    let j = st.rng.random_range(0..n);
    let dx: f64 = st.rng.sample(StandardNormal);
    let dy: f64 = st.rng.sample(StandardNormal);
    let new = st.config[j] + Point::new(dx, dy) * st.step;
    let u: f64 = st.rng.random();
    st.proposed += 1;
    // coincidences have infinite energy and are always rejected
    let Ok(de) = h.delta_energy(&st.config, j, new) else {
        return false;
    };
    if metropolis_accept(de, t, u) {
        st.config[j] = new;
        st.energy += de;
        st.accepted += 1;
        true
    } else {
        false
    }
}

/// One Metropolis chain. The stream depends only on the inputs.
pub fn metropolis_sample(
    h: &PlasmaHamiltonian,
    n: usize,
    opts: &SampleOptions,
) -> Result<SampleRun> {
    if !(opts.temperature > 0.0) {
        return domain(format!(
            "temperature must be positive, got {}",
            opts.temperature
        ));
    }
    if n == 0 {
        return domain("need at least one particle");
    }
    if !(0.0..1.0).contains(&opts.burn_in) || !(opts.initial_step > 0.0) {
        return domain("burn-in fraction must lie in [0, 1) and the step must be positive");
    }
    let t = opts.temperature;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let config = initial_configuration(h, n, &mut rng);
    let energy = h.energy(&config)?;
    let mut st = ChainState {
        config,
        energy,
        rng,
        step: opts.initial_step,
        accepted: 0,
        proposed: 0,
    };
    let burn = (opts.burn_in * opts.sweeps as f64).round() as usize;
    let thin = opts.thinning.unwrap_or(n).max(1);
    let check = opts.energy_check_every.max(1);
    let mut samples = Vec::new();
    let mut drift: f64 = 0.0;
    let mut window = (0u64, 0u64);
    let mut moves_since = 0usize;
    for sweep in 0..opts.sweeps {
        if sweep == burn {
            st.accepted = 0;
            st.proposed = 0;
        }
        for _ in 0..n {
            let acc = propose_and_update(h, &mut st, t);
            if sweep < burn {
                window.0 += acc as u64;
                window.1 += 1;
            } else {
                moves_since += 1;
                if moves_since == thin {
                    samples.push(st.config.clone());
                    moves_since = 0;
                }
            }
        }
        if sweep < burn && (sweep + 1) % TUNE_WINDOW_SWEEPS == 0 {
            let a = window.0 as f64 / window.1 as f64;
            let factor = if a < TARGET_ACCEPTANCE.0 {
                0.6
            } else if a < 0.3 {
                0.85
            } else if a > TARGET_ACCEPTANCE.1 {
                1.6
            } else if a > 0.4 {
                1.15
            } else {
                1.0
            };
            st.step *= factor;
            window = (0, 0);
        }
        if (sweep + 1) % check == 0 {
            let full = h.energy(&st.config)?;
            drift = drift.max((full - st.energy).abs() / full.abs().max(1.0));
            st.energy = full;
        }
    }
    Ok(SampleRun {
        samples,
        acceptance: st.acceptance(),
        state: st,
        max_energy_drift: drift,
        burn_in_sweeps: burn,
    })
}

/// Independent chains with seeds `split_seed(opts.seed, c)`, returned in chain order.
pub fn metropolis_chains(
    h: &PlasmaHamiltonian,
    n: usize,
    opts: &SampleOptions,
    chains: usize,
    serial: bool,
) -> Result<Vec<SampleRun>> {
    map_tasks(chains, serial, |c| {
        let o = SampleOptions {
            seed: split_seed(opts.seed, c as u64),
            ..*opts
        };
        metropolis_sample(h, n, &o)
    })
    .into_iter()
    .collect()
}

/// Samples of several chains concatenated in chain order.
pub fn pooled_samples(runs: &[SampleRun]) -> Vec<Vec<Point>> {
    runs.iter()
        .flat_map(|r| r.samples.iter().cloned())
        .collect()
}

pub fn rescale(samples: &[Vec<Point>], factor: f64) -> Vec<Vec<Point>> {
    samples
        .iter()
        .map(|s| s.iter().map(|&p| p * factor).collect())
        .collect()
}

/// Binned `k`-point density, `k ∈ {1, 2}`. For `k = 2` bins are indexed
/// `a·len + b` over ordered pairs of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Grid,
    pub k: usize,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples: usize,
}

impl DensityEstimate {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area().powi(self.k as i32)
    }
}

fn bin_indices(grid: &Grid, sample: &[Point]) -> Vec<Option<usize>> {
    sample
        .iter()
        .map(|&p| grid.cell_containing(p).map(|(i, j)| grid.index(i, j)))
        .collect()
}

fn accumulate(grid: &Grid, k: usize, sample: &[Point], counts: &mut [f64]) {
    let idx = bin_indices(grid, sample);
    let len = grid.len();
    match k {
        1 => {
            for a in idx.into_iter().flatten() {
                counts[a] += 1.0;
            }
        }
        _ => {
            for (i, a) in idx.iter().enumerate() {
                let Some(a) = *a else { continue };
                for (j, b) in idx.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    if let Some(b) = *b {
                        counts[a * len + b] += 1.0;
                    }
                }
            }
        }
    }
}

fn check_samples(samples: &[Vec<Point>]) -> Result<usize> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            have: samples.len(),
            need: MIN_SAMPLES,
        });
    }
    let n = samples[0].len();
    if samples.iter().any(|s| s.len() != n) {
        return domain("samples have different particle numbers");
    }
    Ok(n)
}

fn bins_for(grid: &Grid, k: usize) -> Result<usize> {
    match k {
        1 => Ok(grid.len()),
        2 if grid.len() * grid.len() <= 1 << 24 => Ok(grid.len() * grid.len()),
        2 => domain("grid too fine for a pair-density histogram"),
        _ => domain(format!("density order must be 1 or 2, got {k}")),
    }
}

/// Contiguous batches of the stream, as raw bin counts.
fn batch_counts(samples: &[Vec<Point>], grid: &Grid, k: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let bins = bins_for(grid, k)?;
    let s = samples.len();
    let mut out = Vec::with_capacity(BATCHES);
    for b in 0..BATCHES {
        let (lo, hi) = (b * s / BATCHES, (b + 1) * s / BATCHES);
        let mut c = vec![0.0; bins];
        for sample in &samples[lo..hi] {
            accumulate(grid, k, sample, &mut c);
        }
        out.push((hi - lo, c));
    }
    Ok(out)
}

/// Binned density with batch-means standard errors.
pub fn density_estimate(samples: &[Vec<Point>], grid: &Grid, k: usize) -> Result<DensityEstimate> {
    check_samples(samples)?;
    let batches = batch_counts(samples, grid, k)?;
    let norm = grid.cell_area().powi(k as i32);
    let s = samples.len() as f64;
    let bins = batches[0].1.len();
    let mut values = vec![0.0; bins];
    for (_, c) in &batches {
        for (v, x) in values.iter_mut().zip(c) {
            *v += x;
        }
    }
    values.iter_mut().for_each(|v| *v /= s * norm);
    let mut var = vec![0.0; bins];
    for (m, c) in &batches {
        for ((acc, x), v) in var.iter_mut().zip(c).zip(&values) {
            let d = x / (*m as f64 * norm) - v;
            *acc += d * d;
        }
    }
    let b = BATCHES as f64;
    let std_errors = var.iter().map(|v| (v / (b * (b - 1.0))).sqrt()).collect();
    Ok(DensityEstimate {
        grid: *grid,
        k,
        values,
        std_errors,
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvercountEstimate {
    pub probability: f64,
    /// Batch-means standard error.
    pub std_error: f64,
    /// 95% Wilson score interval.
    pub wilson: (f64, f64),
    /// Counts strictly above this are overcounts.
    pub threshold: f64,
    pub samples: usize,
}

pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Frequency of `#{x_i ∈ D(center, radius)} > (1 + ε)·density·πradius²`.
pub fn overcount_probability(
    samples: &[Vec<Point>],
    center: Point,
    radius: f64,
    density: f64,
    eps: f64,
) -> Result<OvercountEstimate> {
    if !(eps > -1.0) {
        return domain(format!("ε must exceed −1, got {eps}"));
    }
    check_samples(samples)?;
    let threshold = (1.0 + eps) * density * PI * radius * radius;
    let hits: Vec<bool> = samples
        .iter()
        .map(|s| s.iter().filter(|p| p.dist(center) <= radius).count() as f64 > threshold)
        .collect();
    let k = hits.iter().filter(|&&b| b).count();
    let s = hits.len();
    let p = k as f64 / s as f64;
    let mut var = 0.0;
    for b in 0..BATCHES {
        let (lo, hi) = (b * s / BATCHES, (b + 1) * s / BATCHES);
        let pb = hits[lo..hi].iter().filter(|&&x| x).count() as f64 / (hi - lo) as f64;
        var += (pb - p) * (pb - p);
    }
    let bf = BATCHES as f64;
    Ok(OvercountEstimate {
        probability: p,
        std_error: (var / (bf * (bf - 1.0))).sqrt(),
        wilson: wilson_interval(k, s, 1.96),
        threshold,
        samples: s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationGap {
    /// `∫|ρ⁽²⁾ − (1 − 1/N)ρ⁽¹⁾⊗ρ⁽¹⁾| / (N(N−1))` on the binned densities; in `[0, 2]`.
    pub gap: f64,
    /// Block-bootstrap standard deviation of the gap.
    pub std_error: f64,
    /// Block-bootstrap mean of `∫|ρ⁽²⁾* − ρ⁽²⁾| / (N(N−1))`: the binning noise level.
    pub noise_floor: f64,
    pub samples: usize,
}

pub const BOOTSTRAP_REPLICATES: usize = 64;

fn gap_from_counts(c1: &[f64], c2: &[f64], s: f64, n: usize) -> f64 {
    let len = c1.len();
    let nf = n as f64;
    let pairs = nf * (nf - 1.0);
    let mut total = 0.0;
    for a in 0..len {
        let ra = c1[a] / s;
        for b in 0..len {
            let prod = (1.0 - 1.0 / nf) * ra * c1[b] / s;
            total += (c2[a * len + b] / s - prod).abs();
        }
    }
    total / pairs
}

/// Factorization gap of a sample stream on the given grid, with a block
/// bootstrap over `BATCHES` contiguous blocks.
pub fn factorization_gap(
    samples: &[Vec<Point>],
    grid: &Grid,
    seed: u64,
) -> Result<FactorizationGap> {
    let n = check_samples(samples)?;
    if n < 2 {
        return domain("factorization gap needs N ≥ 2");
    }
    let b1 = batch_counts(samples, grid, 1)?;
    let b2 = batch_counts(samples, grid, 2)?;
    let sum = |pick: &[usize], blocks: &[(usize, Vec<f64>)]| {
        let mut out = vec![0.0; blocks[0].1.len()];
        let mut m = 0usize;
        for &k in pick {
            m += blocks[k].0;
            for (o, x) in out.iter_mut().zip(&blocks[k].1) {
                *o += x;
            }
        }
        (m as f64, out)
    };
    let all: Vec<usize> = (0..BATCHES).collect();
    let (s, c1) = sum(&all, &b1);
    let (_, c2) = sum(&all, &b2);
    let gap = gap_from_counts(&c1, &c2, s, n);
    let pairs = n as f64 * (n as f64 - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gs, mut floor) = (Vec::with_capacity(BOOTSTRAP_REPLICATES), 0.0);
    for _ in 0..BOOTSTRAP_REPLICATES {
        let pick: Vec<usize> = (0..BATCHES).map(|_| rng.random_range(0..BATCHES)).collect();
        let (sr, r1) = sum(&pick, &b1);
        let (_, r2) = sum(&pick, &b2);
        gs.push(gap_from_counts(&r1, &r2, sr, n));
        floor += r2
            .iter()
            .zip(&c2)
            .map(|(a, b)| (a / sr - b / s).abs())
            .sum::<f64>()
            / pairs;
    }
    let mean = gs.iter().sum::<f64>() / gs.len() as f64;
    let var = gs.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (gs.len() as f64 - 1.0);
    Ok(FactorizationGap {
        gap,
        std_error: var.sqrt(),
        noise_floor: floor / BOOTSTRAP_REPLICATES as f64,
        samples: samples.len(),
    })
}

/// Mean number of points per unit area in `D(center, radius)` over the stream.
pub fn disk_density(samples: &[Vec<Point>], center: Point, radius: f64) -> (f64, f64) {
    let per: Vec<f64> = samples
        .iter()
        .map(|s| {
            s.iter().filter(|p| p.dist(center) <= radius).count() as f64 / (PI * radius * radius)
        })
        .collect();
    let s = per.len();
    let mean = per.iter().sum::<f64>() / s as f64;
    let mut var = 0.0;
    for b in 0..BATCHES {
        let (lo, hi) = (b * s / BATCHES, (b + 1) * s / BATCHES);
        if hi > lo {
            let m = per[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            var += (m - mean) * (m - mean);
        }
    }
    let bf = BATCHES as f64;
    (mean, (var / (bf * (bf - 1.0))).sqrt())
}
