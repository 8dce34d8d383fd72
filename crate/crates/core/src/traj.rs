//! Core time-series and trajectory types, gap detection, finite-difference
//! kinematics and short-gap linear interpolation.
//!
//! All series share a fixed 0.1 s grid. Missing samples are represented
//! explicitly as `None`, never as sentinel numbers.

use crate::error::{Error, Result};
use crate::SAMPLE_INTERVAL_S;

/// Grid tolerance for "t is a multiple of h" checks.
const GRID_TOL: f64 = 1e-9;

/// One sample of a vehicle trajectory. Position and speed may be missing
/// independently; speed is derivable from position via [`estimate_speed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    /// Time in seconds; a non-negative multiple of the 0.1 s grid.
    pub t: f64,
    /// Longitudinal position in meters.
    pub x: Option<f64>,
    /// Speed in m/s, non-negative when present.
    pub v: Option<f64>,
}

impl SamplePoint {
    pub fn new(t: f64, x: Option<f64>, v: Option<f64>) -> Result<Self> {
        if t < -GRID_TOL {
            return Err(Error::invalid(format!("sample time {t} is negative")));
        }
        let steps = t / SAMPLE_INTERVAL_S;
        if (steps - steps.round()).abs() * SAMPLE_INTERVAL_S > GRID_TOL {
            return Err(Error::invalid(format!(
                "sample time {t} is not on the {SAMPLE_INTERVAL_S} s grid"
            )));
        }
        if let Some(v) = v {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("speed {v} must be finite and >= 0")));
            }
        }
        if let Some(x) = x {
            if !x.is_finite() {
                return Err(Error::invalid(format!("position {x} must be finite")));
            }
        }
        Ok(SamplePoint { t, x, v })
    }
}

/// A vehicle trajectory on the shared 0.1 s grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<SamplePoint>,
    /// Vehicle length in meters, when known.
    pub vehicle_length: Option<f64>,
    /// Opaque identifier (NGSIM vehicle id, file stem, ...).
    pub id: String,
}

impl Trajectory {
    /// Builds a trajectory, enforcing the grid and presence invariants:
    /// strictly increasing t on consecutive 0.1 s steps and at least two
    /// samples with a present position.
    pub fn new(
        points: Vec<SamplePoint>,
        vehicle_length: Option<f64>,
        id: impl Into<String>,
    ) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("trajectory needs at least 2 samples"));
        }
        for w in points.windows(2) {
            let dt = w[1].t - w[0].t;
            if (dt - SAMPLE_INTERVAL_S).abs() > GRID_TOL {
                return Err(Error::invalid(format!(
                    "consecutive samples at t={} and t={} are {dt} s apart, expected {SAMPLE_INTERVAL_S}",
                    w[0].t, w[1].t
                )));
            }
        }
        let present = points.iter().filter(|p| p.x.is_some()).count();
        if present < 2 {
            return Err(Error::invalid(format!(
                "trajectory has {present} present positions, need at least 2"
            )));
        }
        if let Some(len) = vehicle_length {
            if !len.is_finite() || len <= 0.0 {
                return Err(Error::invalid(format!("vehicle length {len} must be > 0")));
            }
        }
        Ok(Trajectory {
            points,
            vehicle_length,
            id: id.into(),
        })
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.points[0].t
    }

    pub fn x(&self, i: usize) -> Option<f64> {
        self.points.get(i).and_then(|p| p.x)
    }

    pub fn v(&self, i: usize) -> Option<f64> {
        self.points.get(i).and_then(|p| p.v)
    }

    /// Replaces the speed at sample `i`. Used by speed estimation.
    fn set_v(&mut self, i: usize, v: f64) {
        self.points[i].v = Some(v);
    }
}

/// Uniformly sampled leader-follower spacing, meters, with explicit
/// missing samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadwaySeries {
    t0: f64,
    h: f64,
    values: Vec<Option<f64>>,
}

impl HeadwaySeries {
    /// Builds a series on the 0.1 s grid; every present value must be
    /// positive and the series must hold at least two samples.
    pub fn new(t0: f64, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("headway series needs at least 2 samples"));
        }
        if t0 < -GRID_TOL {
            return Err(Error::invalid(format!("series start {t0} is negative")));
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(s) = v {
                if !s.is_finite() || *s <= 0.0 {
                    return Err(Error::invalid(format!(
                        "headway {s} at sample {i} must be finite and > 0"
                    )));
                }
            }
        }
        Ok(HeadwaySeries {
            t0,
            h: SAMPLE_INTERVAL_S,
            values,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Sample interval, seconds (fixed 0.1).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    /// Time of sample `i`.
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| v.is_some())
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Returns a copy with `values[range]` masked out. Panics if the range
    /// is out of bounds.
    pub fn masked(&self, first: usize, last: usize) -> HeadwaySeries {
        let mut out = self.clone();
        for v in &mut out.values[first..=last] {
            *v = None;
        }
        out
    }

    /// Returns a copy with the gap samples replaced by `filled`.
    /// `filled.len()` must equal the gap length; values must be positive.
    pub fn with_fill(&self, gap: &GapSpec, filled: &[f64]) -> Result<HeadwaySeries> {
        if filled.len() != gap.len() {
            return Err(Error::invalid(format!(
                "fill of {} values for a gap of {} samples",
                filled.len(),
                gap.len()
            )));
        }
        let mut values = self.values.clone();
        for (k, value) in filled.iter().enumerate() {
            if !value.is_finite() || *value <= 0.0 {
                return Err(Error::invalid(format!(
                    "filled headway {value} at gap offset {k} must be finite and > 0"
                )));
            }
            values[gap.first_missing + k] = Some(*value);
        }
        HeadwaySeries::new(self.t0, values)
    }
}

/// Paired leader/follower trajectories plus the headway series between them.
/// All three share one time grid.
#[derive(Debug, Clone)]
pub struct VehiclePair {
    pub leader: Trajectory,
    pub follower: Trajectory,
    pub headway: HeadwaySeries,
}

/// Tolerance for the position/headway consistency cross-check, meters.
const HEADWAY_CONSISTENCY_TOL: f64 = 1e-6;

impl VehiclePair {
    /// Validates the shared grid and, where leader and follower positions
    /// are both present and the leader length is known, the bumper-to-bumper
    /// identity `headway = leader.x - follower.x - leader_length`.
    pub fn new(leader: Trajectory, follower: Trajectory, headway: HeadwaySeries) -> Result<Self> {
        if leader.len() != follower.len() || leader.len() != headway.len() {
            return Err(Error::invalid(format!(
                "grid mismatch: leader {}, follower {}, headway {} samples",
                leader.len(),
                follower.len(),
                headway.len()
            )));
        }
        if (leader.t0() - follower.t0()).abs() > GRID_TOL
            || (leader.t0() - headway.t0()).abs() > GRID_TOL
        {
            return Err(Error::invalid("leader/follower/headway start times differ"));
        }
        if let Some(len) = leader.vehicle_length {
            for i in 0..headway.len() {
                if let (Some(xl), Some(xf), Some(s)) = (leader.x(i), follower.x(i), headway.get(i))
                {
                    let expect = xl - xf - len;
                    if (s - expect).abs() > HEADWAY_CONSISTENCY_TOL {
                        return Err(Error::invalid(format!(
                            "headway {s} at sample {i} disagrees with positions ({expect})"
                        )));
                    }
                }
            }
        }
        Ok(VehiclePair {
            leader,
            follower,
            headway,
        })
    }

    /// Builds the pair from trajectories alone, computing headway as
    /// bumper-to-bumper clearance wherever both positions are present.
    pub fn from_trajectories(leader: Trajectory, follower: Trajectory) -> Result<Self> {
        let len = leader.vehicle_length.ok_or_else(|| {
            Error::invalid("leader vehicle length required to compute headway")
        })?;
        let values = (0..leader.len())
            .map(|i| match (leader.x(i), follower.x(i)) {
                (Some(xl), Some(xf)) => Some(xl - xf - len),
                _ => None,
            })
            .collect();
        let headway = HeadwaySeries::new(leader.t0(), values)?;
        VehiclePair::new(leader, follower, headway)
    }
}

/// One maximal run of missing samples with its before/after context windows.
/// Gaps whose windows would overlap another gap or run past the series are
/// kept but carry no windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapSpec {
    /// Index of the first missing sample.
    pub first_missing: usize,
    /// Index of the last missing sample.
    pub last_missing: usize,
    /// Context windows; `None` marks the gap unreconstructable.
    pub context: Option<ContextWindows>,
}

/// Fully-present index ranges flanking a gap, each `context_len` samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindows {
    /// Half-open range ending right before the gap.
    pub before: std::ops::Range<usize>,
    /// Half-open range starting right after the gap.
    pub after: std::ops::Range<usize>,
}

impl GapSpec {
    /// Number of missing samples.
    pub fn len(&self) -> usize {
        self.last_missing - self.first_missing + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Gap duration in seconds: (missing samples) * h.
    pub fn duration_s(&self, h: f64) -> f64 {
        self.len() as f64 * h
    }

    pub fn is_reconstructable(&self) -> bool {
        self.context.is_some()
    }
}

/// Finds maximal runs of missing samples and annotates each with context
/// windows of `required_context_s` seconds. A window is attached only when
/// it fits inside the series and contains present samples exclusively;
/// otherwise the gap is flagged unreconstructable (`context: None`).
pub fn detect_gaps(series: &HeadwaySeries, required_context_s: f64) -> Result<Vec<GapSpec>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if required_context_s <= 0.0 {
        return Err(Error::invalid(format!(
            "context length {required_context_s} s must be > 0"
        )));
    }
    let ctx = (required_context_s / series.h()).round() as usize;
    let n = series.len();
    let values = series.values();

    let mut gaps = Vec::new();
    let mut i = 0;
    while i < n {
        if values[i].is_none() {
            let first = i;
            while i < n && values[i].is_none() {
                i += 1;
            }
            let last = i - 1;
            let all_present = |r: std::ops::Range<usize>| values[r].iter().all(|v| v.is_some());
            let context = if first >= ctx && last + ctx < n {
                let before = first - ctx..first;
                let after = last + 1..last + 1 + ctx;
                (all_present(before.clone()) && all_present(after.clone()))
                    .then_some(ContextWindows { before, after })
            } else {
                None
            };
            gaps.push(GapSpec {
                first_missing: first,
                last_missing: last,
                context,
            });
        } else {
            i += 1;
        }
    }
    Ok(gaps)
}

/// Replaces a short gap's missing samples with the straight line between the
/// last present sample before and the first present sample after the gap.
/// Refuses gaps at or beyond `short_gap_limit_s`.
pub fn linear_fill(
    series: &HeadwaySeries,
    gap: &GapSpec,
    short_gap_limit_s: f64,
) -> Result<HeadwaySeries> {
    let duration = gap.duration_s(series.h());
    if duration >= short_gap_limit_s {
        return Err(Error::GapRequiresModel {
            duration_s: duration,
            limit_s: short_gap_limit_s,
        });
    }
    let filled = interpolate_gap(series, gap)?;
    series.with_fill(gap, &filled)
}

/// Two-point linear interpolation across a gap, without the short-gap policy
/// check. Used directly as the reconstruction fallback for long gaps.
pub fn interpolate_gap(series: &HeadwaySeries, gap: &GapSpec) -> Result<Vec<f64>> {
    if gap.first_missing == 0 || gap.last_missing + 1 >= series.len() {
        return Err(Error::invalid(
            "gap touches the series boundary; no edge samples to interpolate between",
        ));
    }
    let s0 = series
        .get(gap.first_missing - 1)
        .ok_or_else(|| Error::invalid("sample before gap is missing"))?;
    let s1 = series
        .get(gap.last_missing + 1)
        .ok_or_else(|| Error::invalid("sample after gap is missing"))?;
    let steps = (gap.len() + 1) as f64;
    Ok((0..gap.len())
        .map(|k| s0 + (s1 - s0) * (k + 1) as f64 / steps)
        .collect())
}

/// Populates speeds by finite differences over each maximal run of present
/// positions: central differences on interior points, one-sided at run ends,
/// clamped at zero. Existing speeds are overwritten; samples without a
/// position keep their speed untouched.
pub fn estimate_speed(traj: &Trajectory) -> Result<Trajectory> {
    let n = traj.len();
    let present: Vec<usize> = (0..n).filter(|&i| traj.x(i).is_some()).collect();
    if present.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 present positions to estimate speed, have {}",
            present.len()
        )));
    }
    let h = SAMPLE_INTERVAL_S;
    let mut out = traj.clone();
    let mut run_start = 0;
    while run_start < n {
        if traj.x(run_start).is_none() {
            run_start += 1;
            continue;
        }
        let mut run_end = run_start;
        while run_end + 1 < n && traj.x(run_end + 1).is_some() {
            run_end += 1;
        }
        if run_end > run_start {
            let x = |i: usize| traj.x(i).unwrap();
            for i in run_start..=run_end {
                let v = if i == run_start {
                    (x(i + 1) - x(i)) / h
                } else if i == run_end {
                    (x(i) - x(i - 1)) / h
                } else {
                    (x(i + 1) - x(i - 1)) / (2.0 * h)
                };
                out.set_v(i, v.max(0.0));
            }
        }
        run_start = run_end + 1;
    }
    Ok(out)
}

/// Convenience constructor for test data and synthetic experiments: builds a
/// trajectory from positions on the grid starting at `t0`.
pub fn trajectory_from_positions(
    t0: f64,
    xs: &[Option<f64>],
    vehicle_length: Option<f64>,
    id: impl Into<String>,
) -> Result<Trajectory> {
    let points = xs
        .iter()
        .enumerate()
        .map(|(i, x)| SamplePoint::new(t0 + i as f64 * SAMPLE_INTERVAL_S, *x, None))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(points, vehicle_length, id)
}
