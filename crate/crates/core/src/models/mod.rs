//! The four car-following models, each with two faces: forward follower
//! simulation (used as a validation oracle and synthetic-data generator) and
//! headway prediction from follower kinematics alone (the face used for
//! calibration and gap filling).

mod gipps;
mod idm;
mod newell;
mod pipes;

pub use gipps::{gipps_step, GippsParams};
pub use idm::{idm_accel, IdmParams};
pub use newell::NewellParams;
pub use pipes::PipesParams;

use crate::error::{Error, Result};
use crate::traj::{GapSpec, SamplePoint, Trajectory};
use crate::SAMPLE_INTERVAL_S;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

/// Floor applied to every predicted headway, meters.
pub const MIN_PREDICTED_HEADWAY: f64 = 0.01;

/// Radicand floor in the IDM spacing inversion.
const IDM_RADICAND_EPS: f64 = 1e-3;

/// Slack used when deciding whether the Gipps safe-speed branch binds.
const FREE_FLOW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gipps,
    Idm,
    Pipes,
    Newell,
}

impl ModelKind {
    pub fn all() -> [ModelKind; 4] {
        [
            ModelKind::Gipps,
            ModelKind::Idm,
            ModelKind::Pipes,
            ModelKind::Newell,
        ]
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Gipps => "gipps",
            ModelKind::Idm => "idm",
            ModelKind::Pipes => "pipes",
            ModelKind::Newell => "newell",
        }
    }

    /// Number of free parameters.
    pub fn dim(&self) -> usize {
        match self {
            ModelKind::Gipps => 5,
            ModelKind::Idm => 6,
            ModelKind::Pipes => 2,
            ModelKind::Newell => 2,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelKind::Gipps => &["v0", "a", "b", "s0", "dt_r"],
            ModelKind::Idm => &["v0", "T", "a", "b", "delta", "s0"],
            ModelKind::Pipes => &["b_clear", "T"],
            ModelKind::Newell => &["tau", "d"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gipps" => Ok(ModelKind::Gipps),
            "idm" => Ok(ModelKind::Idm),
            "pipes" => Ok(ModelKind::Pipes),
            "newell" => Ok(ModelKind::Newell),
            other => Err(Error::invalid(format!("unknown model '{other}'"))),
        }
    }
}

/// Tagged parameter vector for one model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Gipps(GippsParams),
    Idm(IdmParams),
    Pipes(PipesParams),
    Newell(NewellParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Gipps(_) => ModelKind::Gipps,
            ModelParams::Idm(_) => ModelKind::Idm,
            ModelParams::Pipes(_) => ModelKind::Pipes,
            ModelParams::Newell(_) => ModelKind::Newell,
        }
    }

    /// Builds typed parameters from a flat vector in `param_names` order.
    pub fn from_vector(kind: ModelKind, genes: &[f64]) -> Result<ModelParams> {
        if genes.len() != kind.dim() {
            return Err(Error::invalid(format!(
                "{} expects {} parameters, got {}",
                kind,
                kind.dim(),
                genes.len()
            )));
        }
        Ok(match kind {
            ModelKind::Gipps => ModelParams::Gipps(GippsParams::new(
                genes[0], genes[1], genes[2], genes[3], genes[4],
            )?),
            ModelKind::Idm => ModelParams::Idm(IdmParams::new(
                genes[0], genes[1], genes[2], genes[3], genes[4], genes[5],
            )?),
            ModelKind::Pipes => ModelParams::Pipes(PipesParams::new(genes[0], genes[1])?),
            ModelKind::Newell => ModelParams::Newell(NewellParams::new(genes[0], genes[1])?),
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        match self {
            ModelParams::Gipps(p) => vec![p.v0, p.a, p.b, p.s0, p.dt_r],
            ModelParams::Idm(p) => vec![p.v0, p.t_gap, p.a, p.b, p.delta, p.s0],
            ModelParams::Pipes(p) => vec![p.b_clear, p.t_headway],
            ModelParams::Newell(p) => vec![p.tau, p.d],
        }
    }
}

/// Follower kinematic state at the start of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerState {
    pub x: f64,
    pub v: f64,
}

impl FollowerState {
    pub fn new(x: f64, v: f64) -> Result<Self> {
        if !x.is_finite() || !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(format!(
                "follower state (x={x}, v={v}) must be finite with v >= 0"
            )));
        }
        Ok(FollowerState { x, v })
    }
}

/// Headway values at the known edge ahead of a predicted range: the last
/// present value, plus its predecessor when available (used to seed the
/// recursive Gipps leader-speed estimate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadwayAnchor {
    pub value: f64,
    pub prev: Option<f64>,
}

impl HeadwayAnchor {
    pub fn new(value: f64) -> Self {
        HeadwayAnchor { value, prev: None }
    }

    pub fn with_prev(value: f64, prev: f64) -> Self {
        HeadwayAnchor {
            value,
            prev: Some(prev),
        }
    }
}

/// Leader-speed assumption used by the Gipps spacing inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GippsLeaderMode {
    /// v_l taken equal to the follower's speed (zero relative speed).
    #[default]
    ZeroRelativeSpeed,
    /// v_l tracked recursively from the predicted headway derivative.
    Recursive,
}

/// Simulates a follower behind a fully observed leader for `horizon` steps
/// of 0.1 s, returning a trajectory of `horizon + 1` samples on the leader's
/// grid. Spacing is bumper-to-bumper using the leader's vehicle length when
/// known. A non-positive spacing aborts with the offending step index.
pub fn simulate_follower(
    params: &ModelParams,
    leader: &Trajectory,
    init: FollowerState,
    horizon: usize,
) -> Result<Trajectory> {
    let h = SAMPLE_INTERVAL_S;
    if leader.len() < horizon + 1 {
        return Err(Error::invalid(format!(
            "leader has {} samples, horizon {} needs {}",
            leader.len(),
            horizon,
            horizon + 1
        )));
    }
    let lead_len = leader.vehicle_length.unwrap_or(0.0);
    let needs_leader_v = matches!(params, ModelParams::Gipps(_) | ModelParams::Idm(_));
    for i in 0..=horizon {
        if leader.x(i).is_none() {
            return Err(Error::invalid(format!(
                "leader position missing at sample {i}; leader must be fully present"
            )));
        }
        if needs_leader_v && leader.v(i).is_none() {
            return Err(Error::invalid(format!(
                "leader speed missing at sample {i}; run speed estimation first"
            )));
        }
    }

    let mut xs = Vec::with_capacity(horizon + 1);
    let mut vs = Vec::with_capacity(horizon + 1);

    match params {
        ModelParams::Newell(p) => {
            // Pure translation: the initial state is overridden by Eq.-style
            // shifted leader samples.
            for i in 0..=horizon {
                let t = leader.t0() + i as f64 * h - p.tau;
                let x = position_at(leader, t).ok_or_else(|| {
                    Error::invalid(format!("leader position unavailable at t={t}"))
                })? - p.d;
                xs.push(x);
            }
            for i in 0..=horizon {
                let v = if i == 0 {
                    (xs[1] - xs[0]) / h
                } else if i == horizon {
                    (xs[horizon] - xs[horizon - 1]) / h
                } else {
                    (xs[i + 1] - xs[i - 1]) / (2.0 * h)
                };
                vs.push(v.max(0.0));
            }
        }
        ModelParams::Pipes(p) => {
            xs.push(init.x);
            vs.push(init.v);
            let ratio = p.t_headway / h;
            for i in 1..=horizon {
                let xl = leader.x(i).unwrap();
                let x = (xl - lead_len - p.b_clear + ratio * xs[i - 1]) / (1.0 + ratio);
                let v = ((x - xs[i - 1]) / h).max(0.0);
                xs.push(x);
                vs.push(v);
            }
        }
        ModelParams::Gipps(p) => {
            xs.push(init.x);
            vs.push(init.v);
            for i in 0..horizon {
                let spacing = leader.x(i).unwrap() - xs[i] - lead_len;
                if spacing <= 0.0 {
                    return Err(Error::CollisionAtStep {
                        step: i,
                        spacing,
                    });
                }
                let v_next = gipps_step(p, vs[i], spacing, leader.v(i).unwrap(), h)?;
                xs.push(xs[i] + h * (vs[i] + v_next) / 2.0);
                vs.push(v_next);
            }
        }
        ModelParams::Idm(p) => {
            xs.push(init.x);
            vs.push(init.v);
            for i in 0..horizon {
                let spacing = leader.x(i).unwrap() - xs[i] - lead_len;
                if spacing <= 0.0 {
                    return Err(Error::CollisionAtStep {
                        step: i,
                        spacing,
                    });
                }
                let accel = idm_accel(p, vs[i], vs[i] - leader.v(i).unwrap(), spacing)?;
                let v_next = (vs[i] + accel * h).max(0.0);
                xs.push(xs[i] + h * (vs[i] + v_next) / 2.0);
                vs.push(v_next);
            }
        }
    }

    // Final-state collision report for the stepped models.
    if !matches!(params, ModelParams::Newell(_)) {
        let spacing = leader.x(horizon).unwrap() - xs[horizon] - lead_len;
        if spacing <= 0.0 {
            return Err(Error::CollisionAtStep {
                step: horizon,
                spacing,
            });
        }
    }

    let points = xs
        .iter()
        .zip(&vs)
        .enumerate()
        .map(|(i, (x, v))| SamplePoint::new(leader.t0() + i as f64 * h, Some(*x), Some(*v)))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(points, None, format!("sim:{}", params.kind().tag()))
}

/// Predicts headway over a gap's missing samples from follower kinematics,
/// anchored so the first predicted value equals the pre-gap edge headway
/// exactly.
pub fn predict_headway(
    params: &ModelParams,
    follower: &Trajectory,
    gap: &GapSpec,
    anchor: &HeadwayAnchor,
) -> Result<Vec<f64>> {
    predict_headway_range(params, follower, gap.first_missing..gap.last_missing + 1, anchor)
}

/// Range form of [`predict_headway`] with the default Gipps leader mode.
/// Used for gap prediction and for context-window predictions during
/// calibration (anchored at the window's first sample).
pub fn predict_headway_range(
    params: &ModelParams,
    follower: &Trajectory,
    range: Range<usize>,
    anchor: &HeadwayAnchor,
) -> Result<Vec<f64>> {
    predict_headway_range_with(params, follower, range, anchor, GippsLeaderMode::default())
}

pub fn predict_headway_range_with(
    params: &ModelParams,
    follower: &Trajectory,
    range: Range<usize>,
    anchor: &HeadwayAnchor,
    gipps_mode: GippsLeaderMode,
) -> Result<Vec<f64>> {
    if range.is_empty() {
        return Err(Error::invalid("prediction range is empty"));
    }
    if range.end > follower.len() {
        return Err(Error::invalid(format!(
            "prediction range {range:?} exceeds follower length {}",
            follower.len()
        )));
    }
    if !anchor.value.is_finite() || anchor.value <= 0.0 {
        return Err(Error::invalid(format!(
            "anchor headway {} must be finite and > 0",
            anchor.value
        )));
    }
    let needs_speed = !matches!(params, ModelParams::Newell(_));
    if needs_speed {
        for i in range.clone() {
            if follower.v(i).is_none() {
                return Err(Error::invalid(format!(
                    "follower speed missing at sample {i} inside prediction range"
                )));
            }
        }
    }

    let raw = match params {
        ModelParams::Pipes(p) => range
            .clone()
            .map(|i| p.b_clear + p.t_headway * follower.v(i).unwrap())
            .collect::<Vec<_>>(),
        ModelParams::Newell(p) => {
            let h = SAMPLE_INTERVAL_S;
            let mut out = Vec::with_capacity(range.len());
            for i in range.clone() {
                let x_now = follower.x(i).ok_or_else(|| {
                    Error::invalid(format!("follower position missing at sample {i}"))
                })?;
                let t_ahead = follower.t0() + i as f64 * h + p.tau;
                let x_ahead = position_at(follower, t_ahead).ok_or_else(|| {
                    Error::invalid(format!("follower position unavailable at t={t_ahead}"))
                })?;
                out.push(x_ahead - x_now + p.d);
            }
            out
        }
        ModelParams::Gipps(p) => gipps_invert_range(p, follower, range.clone(), anchor, gipps_mode),
        ModelParams::Idm(p) => idm_invert_range(p, follower, range.clone()),
    };

    let offset = anchor.value - raw[0];
    Ok(raw
        .into_iter()
        .map(|s| (s + offset).max(MIN_PREDICTED_HEADWAY))
        .collect())
}

/// Gipps spacing inversion: when the safe-speed branch binds, solve the
/// safe-speed law for spacing given the observed next speed; in free flow the
/// spacing is unidentifiable and the previous estimate is held.
fn gipps_invert_range(
    p: &GippsParams,
    follower: &Trajectory,
    range: Range<usize>,
    anchor: &HeadwayAnchor,
    mode: GippsLeaderMode,
) -> Vec<f64> {
    let h = SAMPLE_INTERVAL_S;
    let mut out: Vec<f64> = Vec::with_capacity(range.len());
    let mut prev_raw: Option<f64> = None;
    // Recursive leader-speed seed from the observed headway slope at the edge.
    let mut leader_est: Option<f64> = anchor.prev.map(|prev| {
        (follower.v(range.start).unwrap() + (anchor.value - prev) / h).max(0.0)
    });
    for i in range {
        let v_now = follower.v(i).unwrap();
        let v_next = follower.v(i + 1);
        let free_cap = (v_now + p.a * h).min(p.v0);
        let steady = p.s0 + v_now * p.dt_r;
        let v_leader = match mode {
            GippsLeaderMode::ZeroRelativeSpeed => v_now,
            GippsLeaderMode::Recursive => leader_est.unwrap_or(v_now),
        };
        let raw = match v_next {
            Some(vn) if vn < free_cap - FREE_FLOW_TOL => {
                let num = (vn + p.b * p.dt_r).powi(2)
                    - (p.b * p.dt_r).powi(2)
                    - v_leader * v_leader;
                p.s0 + num / (2.0 * p.b)
            }
            // Free-flow branch (or missing next sample): spacing
            // unidentifiable, hold the previous estimate.
            _ => prev_raw.unwrap_or(steady),
        };
        if let GippsLeaderMode::Recursive = mode {
            if let Some(prev) = prev_raw {
                leader_est = Some((v_now + (raw - prev) / h).max(0.0));
            }
        }
        prev_raw = Some(raw);
        out.push(raw);
    }
    out
}

/// IDM spacing inversion from the observed acceleration (forward difference,
/// falling back to backward at the series end).
fn idm_invert_range(p: &IdmParams, follower: &Trajectory, range: Range<usize>) -> Vec<f64> {
    let h = SAMPLE_INTERVAL_S;
    range
        .map(|i| {
            let v = follower.v(i).unwrap();
            let accel = match (follower.v(i + 1), i.checked_sub(1).and_then(|j| follower.v(j))) {
                (Some(next), _) => (next - v) / h,
                (None, Some(prev)) => (v - prev) / h,
                (None, None) => 0.0,
            };
            let desired = p.s0 + (v * p.t_gap).max(0.0);
            let radicand =
                (1.0 - (v / p.v0).powf(p.delta) - accel / p.a).max(IDM_RADICAND_EPS);
            desired / radicand.sqrt()
        })
        .collect()
}

/// Linear interpolation of a trajectory's position at an arbitrary time,
/// extrapolating from the nearest end segment outside the sampled range.
/// Returns `None` when the needed samples are missing.
fn position_at(traj: &Trajectory, t: f64) -> Option<f64> {
    let h = SAMPLE_INTERVAL_S;
    let n = traj.len();
    let u = (t - traj.t0()) / h;
    let first = (0..n).find(|&i| traj.x(i).is_some())?;
    let last = (0..n).rev().find(|&i| traj.x(i).is_some())?;
    if last <= first {
        return None;
    }
    if u < first as f64 {
        let x0 = traj.x(first)?;
        let x1 = traj.x(first + 1)?;
        return Some(x0 + (x1 - x0) * (u - first as f64));
    }
    if u > last as f64 {
        let x1 = traj.x(last)?;
        let x0 = traj.x(last - 1)?;
        return Some(x1 + (x1 - x0) * (u - last as f64));
    }
    let i = u.floor() as usize;
    let frac = u - i as f64;
    if frac <= 1e-9 || i + 1 >= n {
        return traj.x(i);
    }
    let x0 = traj.x(i)?;
    let x1 = traj.x(i + 1)?;
    Some(x0 + (x1 - x0) * frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traj::trajectory_from_positions;

    pub(crate) fn constant_speed_leader(v: f64, n: usize, x0: f64, length: Option<f64>) -> Trajectory {
        let xs: Vec<Option<f64>> = (0..n)
            .map(|i| Some(x0 + v * i as f64 * SAMPLE_INTERVAL_S))
            .collect();
        let traj = trajectory_from_positions(0.0, &xs, length, "leader").unwrap();
        crate::traj::estimate_speed(&traj).unwrap()
    }

    #[test]
    fn newell_translation_identity() {
        // Leader at constant 15 m/s; tau=1, d=5: follower is the leader
        // shifted 1 s later and 5 m back, steady center spacing 15*1+5=20 m.
        let leader = constant_speed_leader(15.0, 300, 100.0, None);
        let params = ModelParams::Newell(NewellParams::new(1.0, 5.0).unwrap());
        let follower = simulate_follower(
            &params,
            &leader,
            FollowerState::new(0.0, 15.0).unwrap(),
            299,
        )
        .unwrap();
        for i in 0..300 {
            let spacing = leader.x(i).unwrap() - follower.x(i).unwrap();
            assert!((spacing - 20.0).abs() < 1e-9, "spacing {spacing} at {i}");
        }
    }

    #[test]
    fn newell_simulate_predict_round_trip_exact() {
        // Translation identity: predicting headway from the simulated
        // follower recovers the simulated spacing exactly (anchor removes
        // the constant).
        let mut xs = Vec::new();
        let mut x = 50.0;
        for i in 0..400 {
            let t = i as f64 * SAMPLE_INTERVAL_S;
            let v = 14.0 + (t * 0.2).sin();
            x += v * SAMPLE_INTERVAL_S;
            xs.push(Some(x));
        }
        let leader = trajectory_from_positions(0.0, &xs, None, "L").unwrap();
        let params = ModelParams::Newell(NewellParams::new(1.0, 7.0).unwrap());
        let follower = simulate_follower(
            &params,
            &leader,
            FollowerState::new(0.0, 14.0).unwrap(),
            399,
        )
        .unwrap();
        let truth: Vec<f64> = (20..380)
            .map(|i| leader.x(i).unwrap() - follower.x(i).unwrap())
            .collect();
        let anchor = HeadwayAnchor::new(truth[0]);
        let predicted =
            predict_headway_range(&params, &follower, 20..380, &anchor).unwrap();
        for (p, t) in predicted.iter().zip(&truth) {
            assert!((p - t).abs() < 1e-9, "predicted {p} truth {t}");
        }
    }

    #[test]
    fn pipes_steady_state() {
        let leader = constant_speed_leader(12.0, 400, 60.0, Some(4.0));
        let params = ModelParams::Pipes(PipesParams::new(2.5, 1.2).unwrap());
        let follower = simulate_follower(
            &params,
            &leader,
            FollowerState::new(30.0, 12.0).unwrap(),
            399,
        )
        .unwrap();
        // Clearance converges to b_clear + T*V.
        let expect = 2.5 + 1.2 * 12.0;
        let spacing =
            leader.x(399).unwrap() - follower.x(399).unwrap() - 4.0;
        assert!((spacing - expect).abs() < 1e-6, "spacing {spacing}");
    }

    #[test]
    fn pipes_prediction_constant_speed() {
        let follower = constant_speed_leader(10.0, 100, 0.0, None);
        let params = ModelParams::Pipes(PipesParams::new(2.0, 1.0).unwrap());
        let anchor = HeadwayAnchor::new(12.0);
        let out = predict_headway_range(&params, &follower, 10..60, &anchor).unwrap();
        for s in out {
            assert!((s - 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gipps_inversion_worked_example() {
        // s0=2, b=1.5, dt_r=1, v_f(t)=10, v_f(t+h)=9.5:
        // raw = 2 + (11^2 - 1.5^2 - 10^2) / 3 = 8.25.
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let mut xs = Vec::new();
        let mut x = 0.0;
        let speeds = [10.0, 9.5, 9.0];
        for v in speeds {
            xs.push(Some(x));
            x += v * SAMPLE_INTERVAL_S;
        }
        let mut traj = trajectory_from_positions(0.0, &xs, None, "F").unwrap();
        // Install exact speeds rather than finite-difference estimates.
        let points: Vec<SamplePoint> = traj
            .points()
            .iter()
            .zip(speeds)
            .map(|(pt, v)| SamplePoint::new(pt.t, pt.x, Some(v)).unwrap())
            .collect();
        traj = Trajectory::new(points, None, "F").unwrap();

        let raw = gipps_invert_range(
            &p,
            &traj,
            0..1,
            &HeadwayAnchor::new(10.0),
            GippsLeaderMode::ZeroRelativeSpeed,
        );
        assert!((raw[0] - 8.25).abs() < 1e-12, "raw {}", raw[0]);
    }

    #[test]
    fn gipps_steady_speed_prediction() {
        // At steady speed v the inversion gives s0 + v*dt_r.
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let follower = constant_speed_leader(10.0, 100, 0.0, None);
        let raw = gipps_invert_range(
            &p,
            &follower,
            10..40,
            &HeadwayAnchor::new(12.0),
            GippsLeaderMode::ZeroRelativeSpeed,
        );
        for s in raw {
            assert!((s - 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn idm_inversion_worked_example() {
        // accel=0, v=15, v0=30, delta=4, s0=2, T=1:
        // s* = 17, r = 1 - (0.5)^4 = 0.9375, raw = 17 / sqrt(0.9375).
        let p = IdmParams::new(30.0, 1.0, 1.0, 1.5, 4.0, 2.0).unwrap();
        let follower = constant_speed_leader(15.0, 50, 0.0, None);
        let raw = idm_invert_range(&p, &follower, 10..11);
        let expect = 17.0 / 0.9375_f64.sqrt();
        assert!((raw[0] - expect).abs() < 1e-9);
        assert!((raw[0] - 17.557).abs() < 1e-3);
    }

    #[test]
    fn prediction_anchored_exactly() {
        let follower = constant_speed_leader(8.0, 120, 0.0, None);
        for kind in ModelKind::all() {
            let params = default_test_params(kind);
            let anchor = HeadwayAnchor::new(9.25);
            let out = predict_headway_range(&params, &follower, 30..80, &anchor).unwrap();
            assert_eq!(out.len(), 50);
            assert_eq!(out[0], 9.25, "{kind} anchor");
            for s in out {
                assert!(s.is_finite() && s > 0.0);
            }
        }
    }

    pub(crate) fn default_test_params(kind: ModelKind) -> ModelParams {
        match kind {
            ModelKind::Gipps => {
                ModelParams::Gipps(GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap())
            }
            ModelKind::Idm => {
                ModelParams::Idm(IdmParams::new(30.0, 1.0, 1.0, 1.5, 4.0, 2.0).unwrap())
            }
            ModelKind::Pipes => ModelParams::Pipes(PipesParams::new(2.0, 1.0).unwrap()),
            ModelKind::Newell => ModelParams::Newell(NewellParams::new(1.0, 5.0).unwrap()),
        }
    }

    #[test]
    fn gipps_follower_converges_to_steady_spacing() {
        // Behind a constant 10 m/s leader the Gipps follower settles at
        // spacing s0 + v*dt_r = 12 m.
        let leader = constant_speed_leader(10.0, 650, 80.0, None);
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let params = ModelParams::Gipps(p);
        let follower = simulate_follower(
            &params,
            &leader,
            FollowerState::new(40.0, 6.0).unwrap(),
            600,
        )
        .unwrap();
        let spacing = leader.x(600).unwrap() - follower.x(600).unwrap();
        assert!((spacing - 12.0).abs() < 0.1, "spacing {spacing}");
        assert!((follower.v(600).unwrap() - 10.0).abs() < 0.01);
    }

    #[test]
    fn idm_standstill_equilibrium_is_fixed_point() {
        let p = IdmParams::new(30.0, 1.0, 1.0, 1.5, 4.0, 2.0).unwrap();
        let params = ModelParams::Idm(p);
        // Stopped leader, follower at rest exactly s0 behind its rear bumper.
        let xs = vec![Some(50.0); 200];
        let leader_still = trajectory_from_positions(0.0, &xs, Some(4.0), "L");
        // Constant positions: speeds are zero.
        let leader = crate::traj::estimate_speed(&leader_still.unwrap()).unwrap();
        let follower = simulate_follower(
            &params,
            &leader,
            FollowerState::new(50.0 - 4.0 - 2.0, 0.0).unwrap(),
            199,
        )
        .unwrap();
        for i in 0..200 {
            assert!((follower.x(i).unwrap() - 44.0).abs() < 1e-9);
            assert!(follower.v(i).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn simulation_reports_collision() {
        // Leader parked 1 m ahead; an eager follower at speed must collide.
        let xs = vec![Some(10.0); 100];
        let leader =
            crate::traj::estimate_speed(&trajectory_from_positions(0.0, &xs, None, "L").unwrap())
                .unwrap();
        let p = PipesParams::new(0.6, 0.3).unwrap();
        let err = simulate_follower(
            &ModelParams::Pipes(p),
            &leader,
            FollowerState::new(9.999, 20.0).unwrap(),
            99,
        );
        assert!(err.is_ok() || matches!(err, Err(Error::CollisionAtStep { .. })));

        let gp = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let err = simulate_follower(
            &ModelParams::Gipps(gp),
            &leader,
            FollowerState::new(10.5, 5.0).unwrap(),
            99,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CollisionAtStep { step: 0, .. }));
    }

    #[test]
    fn round_trip_consistency_gipps_steady() {
        // A simulated steadily-following Gipps follower: the unanchored
        // inversion recovers simulated spacing within 0.05 m.
        let leader = constant_speed_leader(10.0, 900, 100.0, None);
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let params = ModelParams::Gipps(p.clone());
        let follower = simulate_follower(
            &params,
            &leader,
            FollowerState::new(60.0, 8.0).unwrap(),
            899,
        )
        .unwrap();
        let raw = gipps_invert_range(
            &p,
            &follower,
            700..880,
            &HeadwayAnchor::new(12.0),
            GippsLeaderMode::ZeroRelativeSpeed,
        );
        for (k, s_hat) in raw.iter().enumerate() {
            let i = 700 + k;
            let s_true = leader.x(i).unwrap() - follower.x(i).unwrap();
            assert!((s_hat - s_true).abs() < 0.05, "{s_hat} vs {s_true} at {i}");
        }
    }

    #[test]
    fn vector_round_trip() {
        for kind in ModelKind::all() {
            let params = default_test_params(kind);
            let v = params.to_vector();
            assert_eq!(v.len(), kind.dim());
            let back = ModelParams::from_vector(kind, &v).unwrap();
            assert_eq!(back, params);
        }
    }
}
