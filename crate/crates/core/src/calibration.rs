//! Per-gap model calibration: tri-cube proximity weights, the weighted
//! absolute-headway-error cost, and a real-coded genetic algorithm.
//!
//! Randomness policy: every stochastic routine takes an explicit 64-bit seed
//! and runs a ChaCha8 stream (`rand_chacha::ChaCha8Rng`), which is stable
//! across platforms and releases. Per-gap/per-model seeds are derived from
//! the global seed with [`derive_seed`] so concurrent calibrations are
//! independent of scheduling order.

use crate::error::{Error, Result};
use crate::models::{predict_headway_range, HeadwayAnchor, ModelKind, ModelParams};
use crate::traj::{GapSpec, HeadwaySeries, Trajectory, VehiclePair};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Tri-cube kernel: `(1 - (d/L)^3)^3` for `d/L < 1`, else 0.
pub fn tricube_weight(d: f64, window_len: f64) -> Result<f64> {
    if !(window_len > 0.0) {
        return Err(Error::invalid(format!(
            "window length {window_len} must be > 0"
        )));
    }
    if !(d >= 0.0) {
        return Err(Error::invalid(format!("distance {d} must be >= 0")));
    }
    let ratio = d / window_len;
    if ratio >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - ratio.powi(3)).powi(3))
}

/// Weights for one context window, ordered by distance from the gap edge:
/// index 0 is the sample adjacent to the gap (weight 1).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    weights: Vec<f64>,
}

impl WeightProfile {
    /// Tri-cube profile for a window of `window_samples` samples at spacing
    /// `h`: sample i sits at distance i*h from the gap edge, the window
    /// length is `window_samples * h`.
    pub fn tricube(window_samples: usize, h: f64) -> Result<Self> {
        if window_samples == 0 {
            return Err(Error::invalid("window must hold at least one sample"));
        }
        let len = window_samples as f64 * h;
        let weights = (0..window_samples)
            .map(|i| tricube_weight(i as f64 * h, len))
            .collect::<Result<Vec<_>>>()?;
        WeightProfile::from_weights(weights)
    }

    /// Builds a profile from explicit weights, enforcing the contract:
    /// weight 1 at the gap edge, non-increasing, all in [0, 1].
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight profile is empty"));
        }
        if (weights[0] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "weight at the gap edge is {}, must be 1",
                weights[0]
            )));
        }
        for w in weights.windows(2) {
            if w[1] > w[0] + 1e-12 {
                return Err(Error::invalid("weights must be non-increasing"));
            }
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::invalid("weights must lie in [0, 1]"));
        }
        Ok(WeightProfile { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Weighted absolute headway error over both context windows (Eq.-9-style
/// weighted sum, not normalized). Window predictions are anchored at each
/// window's first sample; weights use the distance from the nearer gap edge.
pub fn weighted_cost(
    params: &ModelParams,
    pair: &VehiclePair,
    gap: &GapSpec,
    profile: &WeightProfile,
) -> Result<f64> {
    weighted_cost_series(params, &pair.follower, &pair.headway, gap, profile)
}

/// Engine form of [`weighted_cost`] for callers without a full pair.
pub fn weighted_cost_series(
    params: &ModelParams,
    follower: &Trajectory,
    headway: &HeadwaySeries,
    gap: &GapSpec,
    profile: &WeightProfile,
) -> Result<f64> {
    let ctx = gap.context.as_ref().ok_or(Error::UnreconstructableGap)?;
    if profile.len() < ctx.before.len() || profile.len() < ctx.after.len() {
        return Err(Error::invalid(format!(
            "weight profile of {} samples cannot cover windows of {} and {}",
            profile.len(),
            ctx.before.len(),
            ctx.after.len()
        )));
    }
    let mut cost = 0.0;

    // Before-window: the gap edge is the window's last sample.
    let before = ctx.before.clone();
    let anchor = window_anchor(headway, before.start)?;
    let predicted = predict_headway_range(params, follower, before.clone(), &anchor)
        .map_err(|e| Error::CostEvaluation {
            index: before.start,
            source: Box::new(e),
        })?;
    let edge = before.end - 1;
    for (k, i) in before.enumerate() {
        let observed = headway
            .get(i)
            .ok_or_else(|| Error::invalid(format!("window sample {i} missing")))?;
        cost += profile.weights()[edge - i] * (predicted[k] - observed).abs();
    }

    // After-window: the gap edge is the window's first sample.
    let after = ctx.after.clone();
    let anchor = window_anchor(headway, after.start)?;
    let predicted = predict_headway_range(params, follower, after.clone(), &anchor)
        .map_err(|e| Error::CostEvaluation {
            index: after.start,
            source: Box::new(e),
        })?;
    let start = after.start;
    for (k, i) in after.enumerate() {
        let observed = headway
            .get(i)
            .ok_or_else(|| Error::invalid(format!("window sample {i} missing")))?;
        cost += profile.weights()[i - start] * (predicted[k] - observed).abs();
    }

    Ok(cost)
}

fn window_anchor(headway: &HeadwaySeries, start: usize) -> Result<HeadwayAnchor> {
    let value = headway
        .get(start)
        .ok_or_else(|| Error::invalid(format!("anchor sample {start} missing")))?;
    let prev = start.checked_sub(1).and_then(|i| headway.get(i));
    Ok(match prev {
        Some(p) => HeadwayAnchor::with_prev(value, p),
        None => HeadwayAnchor::new(value),
    })
}

/// Genetic-algorithm settings. Defaults follow the calibration experiment:
/// population 20, 50 generations, crossover 0.7, mutation 0.1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
    pub elitism: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 20,
            generations: 50,
            crossover_rate: 0.7,
            mutation_rate: 0.1,
            seed: 0,
            elitism: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config(format!(
                "population {} must be >= 2",
                self.population
            )));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} {rate} outside [0, 1]")));
            }
        }
        if self.elitism >= self.population {
            return Err(Error::Config(format!(
                "elitism {} must be below population {}",
                self.elitism, self.population
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GaConfig { seed, ..self.clone() }
    }
}

/// Box bounds for one model's parameter vector, in `param_names` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ParamBounds {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Self {
        ParamBounds { low, high }
    }

    /// Standard physical ranges from the car-following literature; all
    /// overridable through the config file.
    pub fn defaults(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Gipps => ParamBounds {
                low: vec![5.0, 0.3, 0.5, 0.5, 0.3],
                high: vec![40.0, 4.0, 5.0, 10.0, 2.5],
            },
            ModelKind::Idm => ParamBounds {
                low: vec![5.0, 0.3, 0.3, 0.5, 1.0, 0.5],
                high: vec![40.0, 3.0, 4.0, 5.0, 6.0, 10.0],
            },
            ModelKind::Pipes => ParamBounds {
                low: vec![0.5, 0.3],
                high: vec![15.0, 3.0],
            },
            ModelKind::Newell => ParamBounds {
                low: vec![0.3, 0.5],
                high: vec![3.0, 15.0],
            },
        }
    }

    /// Checks dimensions, ordering and that both corners satisfy the model's
    /// hard parameter invariants (all constraints are intervals, so corner
    /// feasibility implies box feasibility).
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        if self.low.len() != kind.dim() || self.high.len() != kind.dim() {
            return Err(Error::Config(format!(
                "{kind} bounds need {} entries, got {}/{}",
                kind.dim(),
                self.low.len(),
                self.high.len()
            )));
        }
        for (i, (lo, hi)) in self.low.iter().zip(&self.high).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::Config(format!(
                    "{kind} bound {} = [{lo}, {hi}] must be finite with low < high",
                    kind.param_names()[i]
                )));
            }
        }
        ModelParams::from_vector(kind, &self.low)
            .map_err(|e| Error::Config(format!("{kind} lower bounds invalid: {e}")))?;
        ModelParams::from_vector(kind, &self.high)
            .map_err(|e| Error::Config(format!("{kind} upper bounds invalid: {e}")))?;
        Ok(())
    }

    pub fn contains(&self, genes: &[f64]) -> bool {
        genes.len() == self.low.len()
            && genes
                .iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(g, (lo, hi))| *g >= *lo && *g <= *hi)
    }
}

/// Bounds for all four models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSet {
    pub gipps: ParamBounds,
    pub idm: ParamBounds,
    pub pipes: ParamBounds,
    pub newell: ParamBounds,
}

impl Default for BoundsSet {
    fn default() -> Self {
        BoundsSet {
            gipps: ParamBounds::defaults(ModelKind::Gipps),
            idm: ParamBounds::defaults(ModelKind::Idm),
            pipes: ParamBounds::defaults(ModelKind::Pipes),
            newell: ParamBounds::defaults(ModelKind::Newell),
        }
    }
}

impl BoundsSet {
    pub fn get(&self, kind: ModelKind) -> &ParamBounds {
        match kind {
            ModelKind::Gipps => &self.gipps,
            ModelKind::Idm => &self.idm,
            ModelKind::Pipes => &self.pipes,
            ModelKind::Newell => &self.newell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for kind in ModelKind::all() {
            self.get(kind).validate(kind)?;
        }
        Ok(())
    }
}

/// Calibration output: best-ever parameter vector and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub model: ModelKind,
    pub params: ModelParams,
    pub cost: f64,
    pub evaluations: usize,
    pub seed: u64,
}

/// Raw optimizer output.
#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub evaluations: usize,
    /// Best-ever cost after the initial evaluation and after each generation.
    pub history: Vec<f64>,
}

/// Real-coded genetic algorithm over box bounds.
///
/// Chromosomes are parameter vectors; the initial population is uniform in
/// the bounds; fitness is 1/(1+C) with roulette-wheel selection; arithmetic
/// blend crossover runs at `crossover_rate`; genes mutate with Gaussian
/// noise (sigma = 10% of the gene range) at `mutation_rate`, clipped to
/// bounds; the best `elitism` individuals carry over unchanged. Every
/// individual is evaluated each generation, so the evaluation count is
/// exactly `population * (generations + 1)`. Failed evaluations (`None`)
/// get infinite cost; if no evaluation ever succeeds an error is returned.
pub fn ga_optimize<F>(bounds: &ParamBounds, cfg: &GaConfig, mut cost_fn: F) -> Result<GaOutcome>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    cfg.validate()?;
    let dim = bounds.low.len();
    if dim == 0 || bounds.high.len() != dim {
        return Err(Error::Config("bounds are empty or mismatched".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let span: Vec<f64> = bounds
        .low
        .iter()
        .zip(&bounds.high)
        .map(|(lo, hi)| hi - lo)
        .collect();
    let sigmas: Vec<Normal<f64>> = span
        .iter()
        .map(|s| Normal::new(0.0, 0.1 * s).expect("sigma > 0"))
        .collect();

    let mut evaluations = 0usize;
    let mut evaluate = |genes: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        match cost_fn(genes) {
            Some(c) if c.is_finite() && c >= 0.0 => c,
            _ => f64::INFINITY,
        }
    };

    let mut population: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| {
            (0..dim)
                .map(|g| bounds.low[g] + rng.gen::<f64>() * span[g])
                .collect()
        })
        .collect();
    let mut costs: Vec<f64> = population
        .iter()
        .map(|ind| evaluate(ind, &mut evaluations))
        .collect();

    let mut best_idx = argmin(&costs);
    let mut best = population[best_idx].clone();
    let mut best_cost = costs[best_idx];
    let mut history = vec![best_cost];

    for _ in 0..cfg.generations {
        let fitness: Vec<f64> = costs.iter().map(|c| 1.0 / (1.0 + c)).collect();
        let total: f64 = fitness.iter().sum();

        let mut order: Vec<usize> = (0..cfg.population).collect();
        order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap_or(std::cmp::Ordering::Equal));

        let mut next: Vec<Vec<f64>> = order[..cfg.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();

        while next.len() < cfg.population {
            let p1 = roulette(&fitness, total, &mut rng);
            let p2 = roulette(&fitness, total, &mut rng);
            let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_rate {
                blend(&population[p1], &population[p2], &mut rng)
            } else {
                (population[p1].clone(), population[p2].clone())
            };
            mutate(&mut c1, bounds, &sigmas, cfg.mutation_rate, &mut rng);
            mutate(&mut c2, bounds, &sigmas, cfg.mutation_rate, &mut rng);
            next.push(c1);
            if next.len() < cfg.population {
                next.push(c2);
            }
        }

        population = next;
        costs = population
            .iter()
            .map(|ind| evaluate(ind, &mut evaluations))
            .collect();
        best_idx = argmin(&costs);
        if costs[best_idx] < best_cost {
            best_cost = costs[best_idx];
            best = population[best_idx].clone();
        }
        history.push(best_cost);
    }

    if !best_cost.is_finite() {
        return Err(Error::invalid("every cost evaluation failed"));
    }
    Ok(GaOutcome {
        best,
        best_cost,
        evaluations,
        history,
    })
}

fn argmin(costs: &[f64]) -> usize {
    let mut idx = 0;
    for (i, c) in costs.iter().enumerate() {
        if *c < costs[idx] {
            idx = i;
        }
    }
    idx
}

/// Roulette-wheel draw; falls back to a uniform pick when all fitness mass
/// vanished (every evaluation failed).
fn roulette(fitness: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    if total <= 0.0 || !total.is_finite() {
        return rng.gen_range(0..fitness.len());
    }
    let mark = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, f) in fitness.iter().enumerate() {
        acc += f;
        if acc > mark {
            return i;
        }
    }
    fitness.len() - 1
}

/// Arithmetic blend with a fresh lambda per gene; the pair of children uses
/// complementary weights. Blends of in-bounds parents stay in bounds.
fn blend(p1: &[f64], p2: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = Vec::with_capacity(p1.len());
    let mut c2 = Vec::with_capacity(p1.len());
    for (a, b) in p1.iter().zip(p2) {
        let lambda = rng.gen::<f64>();
        c1.push(lambda * a + (1.0 - lambda) * b);
        c2.push((1.0 - lambda) * a + lambda * b);
    }
    (c1, c2)
}

fn mutate(
    genes: &mut [f64],
    bounds: &ParamBounds,
    sigmas: &[Normal<f64>],
    rate: f64,
    rng: &mut ChaCha8Rng,
) {
    for (g, gene) in genes.iter_mut().enumerate() {
        if rng.gen::<f64>() < rate {
            *gene += sigmas[g].sample(rng);
        }
        *gene = gene.clamp(bounds.low[g], bounds.high[g]);
    }
}

/// Calibrates one model on a gap's context windows: tri-cube weights over
/// both windows, GA over the model's bounds, weighted cost as the objective.
pub fn ga_calibrate(
    model: ModelKind,
    pair: &VehiclePair,
    gap: &GapSpec,
    bounds: &ParamBounds,
    cfg: &GaConfig,
) -> Result<CalibrationResult> {
    ga_calibrate_series(model, &pair.follower, &pair.headway, gap, bounds, cfg)
}

/// Engine form of [`ga_calibrate`] for callers without a full pair.
pub fn ga_calibrate_series(
    model: ModelKind,
    follower: &Trajectory,
    headway: &HeadwaySeries,
    gap: &GapSpec,
    bounds: &ParamBounds,
    cfg: &GaConfig,
) -> Result<CalibrationResult> {
    bounds.validate(model)?;
    let ctx = gap.context.as_ref().ok_or(Error::UnreconstructableGap)?;
    let window = ctx.before.len().max(ctx.after.len());
    let profile = WeightProfile::tricube(window, headway.h())?;

    let outcome = ga_optimize(bounds, cfg, |genes| {
        let params = ModelParams::from_vector(model, genes).ok()?;
        weighted_cost_series(&params, follower, headway, gap, &profile).ok()
    })
    .map_err(|_| Error::CalibrationFailed { model })?;

    let params = ModelParams::from_vector(model, &outcome.best)
        .map_err(|_| Error::CalibrationFailed { model })?;
    Ok(CalibrationResult {
        model,
        params,
        cost: outcome.best_cost,
        evaluations: outcome.evaluations,
        seed: cfg.seed,
    })
}

/// Deterministic seed derivation: FNV-1a 64-bit over the global seed, a
/// domain string and an index. Gives each (gap, model) calibration its own
/// reproducible stream regardless of scheduling.
pub fn derive_seed(global_seed: u64, domain: &str, index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            hash = (hash ^ *b as u64).wrapping_mul(PRIME);
        }
    };
    eat(&global_seed.to_le_bytes());
    eat(domain.as_bytes());
    eat(&index.to_le_bytes());
    hash
}
