//! End-to-end gap filling: policy dispatch between short and long gaps,
//! per-gap calibration, headway prediction through the gap, and the smooth
//! transition that reconnects the prediction to the gap's far edge.

use crate::calibration::{
    derive_seed, ga_calibrate_series, BoundsSet, CalibrationResult, GaConfig,
};
use crate::error::{Error, Result};
use crate::models::{predict_headway_range, HeadwayAnchor, ModelKind, ModelParams};
use crate::traj::{interpolate_gap, GapSpec, HeadwaySeries, Trajectory, VehiclePair};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which model(s) a reconstruction run calibrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSelection {
    Fixed(ModelKind),
    BestOfAll,
}

impl fmt::Display for ModelSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSelection::Fixed(kind) => f.write_str(kind.tag()),
            ModelSelection::BestOfAll => f.write_str("best-of-all"),
        }
    }
}

impl FromStr for ModelSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "best-of-all" | "best" => Ok(ModelSelection::BestOfAll),
            other => Ok(ModelSelection::Fixed(other.parse()?)),
        }
    }
}

impl Serialize for ModelSelection {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ModelSelection {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shape of the blend weights inside the reshape region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlendSchedule {
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    /// Gaps shorter than this are linearly interpolated, seconds.
    pub short_gap_limit_s: f64,
    /// Context window length on each side of a gap, seconds.
    pub context_length_s: f64,
    /// Slope-match threshold of the smooth transition, m/s.
    pub slope_threshold: f64,
    pub blend_schedule: BlendSchedule,
    pub model_selection: ModelSelection,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            short_gap_limit_s: 5.0,
            context_length_s: 5.0,
            slope_threshold: 0.5,
            blend_schedule: BlendSchedule::Linear,
            model_selection: ModelSelection::Fixed(ModelKind::Gipps),
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.short_gap_limit_s > 0.0) {
            return Err(Error::Config(format!(
                "short_gap_limit_s {} must be > 0",
                self.short_gap_limit_s
            )));
        }
        if !(self.context_length_s > 0.0) {
            return Err(Error::Config(format!(
                "context_length_s {} must be > 0",
                self.context_length_s
            )));
        }
        if !(self.slope_threshold > 0.0) {
            return Err(Error::Config(format!(
                "slope_threshold {} must be > 0",
                self.slope_threshold
            )));
        }
        Ok(())
    }
}

/// Blend weights over the reshape region: 1 at the region start, 0 at the
/// gap's last sample, non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendWeights {
    /// Gap-relative index where reshaping starts.
    pub start: usize,
    pub weights: Vec<f64>,
}

/// Output of the smooth transition.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothTransition {
    pub values: Vec<f64>,
    pub blend: BlendWeights,
    /// Slope of the selected line from the reshape start to the edge point.
    pub line_slope: f64,
    /// Set when no candidate point met the threshold and the whole gap was
    /// blended.
    pub whole_gap_blend: bool,
}

/// Reconnects a predicted headway run to the gap's far edge.
///
/// Step 1 walks the predicted points from the gap end outward, drawing the
/// straight line from each candidate to the edge point one sample past the
/// gap, and stops at the first whose slope is within `threshold` of
/// `edge_slope`; that point starts the reshape region (falling back to the
/// whole gap when none qualifies). Step 2 blends prediction and line with
/// weights running linearly from 1 at the region start to 0 at the last gap
/// sample; the line is sampled so its endpoint value lands exactly on the
/// last gap sample, which therefore equals `s_end`.
pub fn smooth_transition(
    predicted: &[f64],
    s_end: f64,
    edge_slope: f64,
    threshold: f64,
    h: f64,
) -> Result<SmoothTransition> {
    if predicted.is_empty() {
        return Err(Error::invalid("predicted run is empty"));
    }
    if !s_end.is_finite() || !edge_slope.is_finite() {
        return Err(Error::invalid("edge point and slope must be finite"));
    }
    let n = predicted.len();
    let last = n - 1;

    let slope_to_edge =
        |k: usize| (s_end - predicted[k]) / ((n - k) as f64 * h);

    let mut start = None;
    for k in (0..n).rev() {
        if (slope_to_edge(k) - edge_slope).abs() < threshold {
            start = Some(k);
            break;
        }
    }
    let whole_gap_blend = start.is_none();
    let start = start.unwrap_or(0);
    let line_slope = slope_to_edge(start);

    let mut values = predicted.to_vec();
    let span = last - start;
    let weights: Vec<f64> = if span == 0 {
        vec![0.0]
    } else {
        (start..=last)
            .map(|nn| (last - nn) as f64 / span as f64)
            .collect()
    };
    for (k, w) in weights.iter().enumerate() {
        let nn = start + k;
        let line = if span == 0 {
            s_end
        } else {
            predicted[start] + (s_end - predicted[start]) * k as f64 / span as f64
        };
        values[nn] = w * predicted[nn] + (1.0 - w) * line;
    }

    Ok(SmoothTransition {
        values,
        blend: BlendWeights { start, weights },
        line_slope,
        whole_gap_blend,
    })
}

/// How a gap was filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillMethod {
    Linear,
    Model(ModelKind),
}

impl fmt::Display for FillMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FillMethod::Linear => f.write_str("linear"),
            FillMethod::Model(kind) => f.write_str(kind.tag()),
        }
    }
}

/// Transition diagnostics for one model-filled gap.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDiag {
    /// Gap-relative index where reshaping started.
    pub reshape_start: usize,
    pub whole_gap_blend: bool,
    pub line_slope: f64,
    pub edge_slope: f64,
}

/// One reconstructed gap: filled values plus everything needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReconstruction {
    pub gap: GapSpec,
    pub values: Vec<f64>,
    pub method: FillMethod,
    pub calibrations: Vec<CalibrationResult>,
    pub transition: Option<TransitionDiag>,
    /// Diagnostic set when model reconstruction fell back to interpolation.
    pub fallback: Option<String>,
}

impl GapReconstruction {
    pub fn evaluations(&self) -> usize {
        self.calibrations.iter().map(|c| c.evaluations).sum()
    }
}

/// Fills one gap of a vehicle pair.
pub fn reconstruct_gap(
    pair: &VehiclePair,
    gap: &GapSpec,
    cfg: &ReconstructionConfig,
    ga: &GaConfig,
    bounds: &BoundsSet,
) -> Result<GapReconstruction> {
    reconstruct_gap_series(&pair.follower, &pair.headway, gap, cfg, ga, bounds)
}

/// Engine form of [`reconstruct_gap`]: follower kinematics plus the headway
/// series are all the reconstruction needs.
///
/// Gaps below the short-gap limit are linearly interpolated with no
/// calibration. Longer gaps calibrate the configured model(s) on the context
/// windows, predict headway through the gap anchored at the pre-gap edge,
/// and reshape the far end with the smooth transition. Calibration or
/// prediction failure falls back to interpolation with a diagnostic.
pub fn reconstruct_gap_series(
    follower: &Trajectory,
    headway: &HeadwaySeries,
    gap: &GapSpec,
    cfg: &ReconstructionConfig,
    ga: &GaConfig,
    bounds: &BoundsSet,
) -> Result<GapReconstruction> {
    cfg.validate()?;
    let h = headway.h();

    if gap.duration_s(h) < cfg.short_gap_limit_s {
        let values = interpolate_gap(headway, gap)?;
        return Ok(GapReconstruction {
            gap: gap.clone(),
            values,
            method: FillMethod::Linear,
            calibrations: Vec::new(),
            transition: None,
            fallback: None,
        });
    }

    let ctx = gap.context.as_ref().ok_or(Error::UnreconstructableGap)?;

    // Predictors need follower speeds across the windows and the gap.
    let follower_owned;
    let follower = if (ctx.before.start..ctx.after.end.min(follower.len()))
        .any(|i| follower.v(i).is_none())
    {
        follower_owned = crate::traj::estimate_speed(follower)?;
        &follower_owned
    } else {
        follower
    };

    let models: Vec<ModelKind> = match cfg.model_selection {
        ModelSelection::Fixed(kind) => vec![kind],
        ModelSelection::BestOfAll => ModelKind::all().to_vec(),
    };
    let derive_per_model = models.len() > 1;

    let mut calibrations = Vec::new();
    let mut failures = Vec::new();
    for kind in models {
        let cfg_m = if derive_per_model {
            ga.with_seed(derive_seed(ga.seed, kind.tag(), 0))
        } else {
            ga.clone()
        };
        match ga_calibrate_series(kind, follower, headway, gap, bounds.get(kind), &cfg_m) {
            Ok(result) => calibrations.push(result),
            Err(e) => failures.push(format!("{kind}: {e}")),
        }
    }

    let best = calibrations
        .iter()
        .min_by(|a, b| {
            a.cost
                .partial_cmp(&b.cost)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.model.tag().cmp(b.model.tag()))
        })
        .cloned();

    let Some(best) = best else {
        let values = interpolate_gap(headway, gap)?;
        return Ok(GapReconstruction {
            gap: gap.clone(),
            values,
            method: FillMethod::Linear,
            calibrations,
            transition: None,
            fallback: Some(format!("all calibrations failed: {}", failures.join("; "))),
        });
    };

    match model_fill(follower, headway, gap, cfg, &best.params, h) {
        Ok((values, transition)) => Ok(GapReconstruction {
            gap: gap.clone(),
            values,
            method: FillMethod::Model(best.model),
            calibrations,
            transition: Some(transition),
            fallback: if failures.is_empty() {
                None
            } else {
                Some(format!("calibration failures: {}", failures.join("; ")))
            },
        }),
        Err(e) => {
            let values = interpolate_gap(headway, gap)?;
            Ok(GapReconstruction {
                gap: gap.clone(),
                values,
                method: FillMethod::Linear,
                calibrations,
                transition: None,
                fallback: Some(format!("prediction failed, interpolated instead: {e}")),
            })
        }
    }
}

fn model_fill(
    follower: &Trajectory,
    headway: &HeadwaySeries,
    gap: &GapSpec,
    cfg: &ReconstructionConfig,
    params: &ModelParams,
    h: f64,
) -> Result<(Vec<f64>, TransitionDiag)> {
    let first = gap.first_missing;
    let last = gap.last_missing;
    let anchor_value = headway
        .get(first - 1)
        .ok_or_else(|| Error::invalid("pre-gap edge sample missing"))?;
    let anchor = match first.checked_sub(2).and_then(|i| headway.get(i)) {
        Some(prev) => HeadwayAnchor::with_prev(anchor_value, prev),
        None => HeadwayAnchor::new(anchor_value),
    };
    let predicted = predict_headway_range(params, follower, first..last + 1, &anchor)?;

    let s_end = headway
        .get(last + 1)
        .ok_or_else(|| Error::invalid("post-gap edge sample missing"))?;
    let edge_slope = match headway.get(last + 2) {
        Some(next) => (next - s_end) / h,
        None => 0.0,
    };

    let st = smooth_transition(&predicted, s_end, edge_slope, cfg.slope_threshold, h)?;
    let diag = TransitionDiag {
        reshape_start: st.blend.start,
        whole_gap_blend: st.whole_gap_blend,
        line_slope: st.line_slope,
        edge_slope,
    };
    Ok((st.values, diag))
}
