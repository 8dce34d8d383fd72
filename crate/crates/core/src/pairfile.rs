//! The canonical pair file: a plain text table with one row per 0.1 s
//! sample and columns `t_s, leader_x_m, follower_x_m, follower_v_mps,
//! headway_m`. Empty fields mark missing values; the header row is
//! mandatory and the grid is enforced on load.

use crate::error::{Error, Result};
use crate::traj::{HeadwaySeries, SamplePoint, Trajectory, VehiclePair};
use crate::SAMPLE_INTERVAL_S;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub const PAIR_FILE_HEADER: &str = "t_s,leader_x_m,follower_x_m,follower_v_mps,headway_m";

/// Grid tolerance when re-reading printed times.
const T_TOL: f64 = 1e-6;

/// Raw pair-file contents. Columns may be independently missing; accessors
/// build the typed structures when the data supports them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFile {
    pub id: String,
    pub t0: f64,
    pub leader_x: Vec<Option<f64>>,
    pub follower_x: Vec<Option<f64>>,
    pub follower_v: Vec<Option<f64>>,
    pub headway: Vec<Option<f64>>,
}

impl PairFile {
    pub fn len(&self) -> usize {
        self.headway.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headway.is_empty()
    }

    pub fn from_pair(pair: &VehiclePair, id: impl Into<String>) -> Self {
        let n = pair.headway.len();
        PairFile {
            id: id.into(),
            t0: pair.headway.t0(),
            leader_x: (0..n).map(|i| pair.leader.x(i)).collect(),
            follower_x: (0..n).map(|i| pair.follower.x(i)).collect(),
            follower_v: (0..n).map(|i| pair.follower.v(i)).collect(),
            headway: pair.headway.values().to_vec(),
        }
    }

    /// Headway-only file (scan-derived series have no position columns).
    pub fn from_headway(series: &HeadwaySeries, id: impl Into<String>) -> Self {
        let n = series.len();
        PairFile {
            id: id.into(),
            t0: series.t0(),
            leader_x: vec![None; n],
            follower_x: vec![None; n],
            follower_v: vec![None; n],
            headway: series.values().to_vec(),
        }
    }

    /// Replaces the headway column.
    pub fn with_headway(&self, series: &HeadwaySeries) -> Result<Self> {
        if series.len() != self.len() {
            return Err(Error::invalid(format!(
                "headway series of {} samples does not match file of {}",
                series.len(),
                self.len()
            )));
        }
        Ok(PairFile {
            headway: series.values().to_vec(),
            ..self.clone()
        })
    }

    pub fn headway_series(&self) -> Result<HeadwaySeries> {
        HeadwaySeries::new(self.t0, self.headway.clone())
    }

    pub fn follower_trajectory(&self) -> Result<Trajectory> {
        let points = self
            .follower_x
            .iter()
            .zip(&self.follower_v)
            .enumerate()
            .map(|(i, (x, v))| {
                SamplePoint::new(self.t0 + i as f64 * SAMPLE_INTERVAL_S, *x, *v)
            })
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(points, None, format!("{}:follower", self.id))
    }

    /// Leader length is not a file column; it is inferred from the first row
    /// where both positions and the headway are present.
    pub fn inferred_leader_length(&self) -> Option<f64> {
        for i in 0..self.len() {
            if let (Some(xl), Some(xf), Some(s)) =
                (self.leader_x[i], self.follower_x[i], self.headway[i])
            {
                let len = xl - xf - s;
                if len.is_finite() && len > 0.0 {
                    return Some(len);
                }
            }
        }
        None
    }

    pub fn leader_trajectory(&self) -> Result<Trajectory> {
        let points = self
            .leader_x
            .iter()
            .enumerate()
            .map(|(i, x)| SamplePoint::new(self.t0 + i as f64 * SAMPLE_INTERVAL_S, *x, None))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(
            points,
            self.inferred_leader_length(),
            format!("{}:leader", self.id),
        )
    }

    pub fn vehicle_pair(&self) -> Result<VehiclePair> {
        VehiclePair::new(
            self.leader_trajectory()?,
            self.follower_trajectory()?,
            self.headway_series()?,
        )
    }

    /// Renders the exact file bytes. Times carry one decimal (the 0.1 s
    /// grid); values carry nine so the reload consistency check stays well
    /// inside the 1e-6 tolerance.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(32 * self.len() + 64);
        out.push_str(PAIR_FILE_HEADER);
        out.push('\n');
        let field = |v: &Option<f64>| match v {
            Some(x) => format!("{x:.9}"),
            None => String::new(),
        };
        for i in 0..self.len() {
            let t = self.t0 + i as f64 * SAMPLE_INTERVAL_S;
            out.push_str(&format!(
                "{:.1},{},{},{},{}\n",
                t,
                field(&self.leader_x[i]),
                field(&self.follower_x[i]),
                field(&self.follower_v[i]),
                field(&self.headway[i]),
            ));
        }
        out
    }

    pub fn write_to(&self, writer: &mut impl Write) -> Result<()> {
        writer.write_all(self.render().as_bytes())?;
        Ok(())
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_to(&mut f)
    }

    pub fn read_from(reader: impl Read, id: impl Into<String>) -> Result<Self> {
        let reader = BufReader::new(reader);
        let mut lines = reader.lines().enumerate();

        let header = loop {
            match lines.next() {
                Some((lineno, line)) => {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break (lineno + 1, line);
                }
                None => return Err(Error::parse(0, "empty pair file")),
            }
        };
        if normalize_header(&header.1) != PAIR_FILE_HEADER {
            return Err(Error::parse(
                header.0,
                format!(
                    "expected header '{PAIR_FILE_HEADER}', found '{}'",
                    header.1.trim()
                ),
            ));
        }

        let mut file = PairFile {
            id: id.into(),
            t0: 0.0,
            leader_x: Vec::new(),
            follower_x: Vec::new(),
            follower_v: Vec::new(),
            headway: Vec::new(),
        };
        let mut rows = 0usize;
        for (lineno, line) in lines {
            let lineno = lineno + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 5 fields, found {}", fields.len()),
                ));
            }
            let t: f64 = fields[0]
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad time '{}'", fields[0])))?;
            if rows == 0 {
                file.t0 = t;
            }
            let expected = file.t0 + rows as f64 * SAMPLE_INTERVAL_S;
            if (t - expected).abs() > T_TOL {
                return Err(Error::parse(
                    lineno,
                    format!("time {t} off the 0.1 s grid (expected {expected})"),
                ));
            }
            let mut parse_opt = |idx: usize| -> Result<Option<f64>> {
                let raw = fields[idx].trim();
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse::<f64>().map(Some).map_err(|_| {
                    Error::parse(lineno, format!("bad value '{raw}' in column {}", idx + 1))
                })
            };
            file.leader_x.push(parse_opt(1)?);
            file.follower_x.push(parse_opt(2)?);
            file.follower_v.push(parse_opt(3)?);
            file.headway.push(parse_opt(4)?);
            rows += 1;
        }
        if rows < 2 {
            return Err(Error::parse(
                0,
                format!("pair file has {rows} rows, need >= 2"),
            ));
        }
        Ok(file)
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "pair".to_string());
        let f = std::fs::File::open(path)?;
        PairFile::read_from(f, id)
    }
}

fn normalize_header(line: &str) -> String {
    line.split(',')
        .map(|f| f.trim())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traj::trajectory_from_positions;

    fn sample_pair() -> VehiclePair {
        let leader = crate::traj::estimate_speed(
            &trajectory_from_positions(
                0.0,
                &(0..60)
                    .map(|i| Some(100.0 + 1.3 * i as f64))
                    .collect::<Vec<_>>(),
                Some(4.0),
                "L",
            )
            .unwrap(),
        )
        .unwrap();
        let follower = crate::traj::estimate_speed(
            &trajectory_from_positions(
                0.0,
                &(0..60)
                    .map(|i| Some(80.0 + 1.3 * i as f64))
                    .collect::<Vec<_>>(),
                None,
                "F",
            )
            .unwrap(),
        )
        .unwrap();
        VehiclePair::from_trajectories(leader, follower).unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let pair = sample_pair();
        let file = PairFile::from_pair(&pair, "p1");
        let text = file.render();
        assert!(text.starts_with(PAIR_FILE_HEADER));
        let back = PairFile::read_from(text.as_bytes(), "p1").unwrap();
        assert_eq!(back.len(), 60);
        let rebuilt = back.vehicle_pair().unwrap();
        assert!((rebuilt.leader.vehicle_length.unwrap() - 4.0).abs() < 1e-6);
        for i in 0..60 {
            assert!(
                (rebuilt.headway.get(i).unwrap() - pair.headway.get(i).unwrap()).abs() < 1e-8
            );
        }
    }

    #[test]
    fn missing_fields_survive_round_trip() {
        let pair = sample_pair();
        let mut file = PairFile::from_pair(&pair, "p1");
        file.leader_x[10] = None;
        file.headway[10] = None;
        file.headway[11] = None;
        let back = PairFile::read_from(file.render().as_bytes(), "p1").unwrap();
        assert_eq!(back.leader_x[10], None);
        assert_eq!(back.headway[11], None);
        assert!(back.headway[12].is_some());
        let series = back.headway_series().unwrap();
        assert_eq!(series.missing_count(), 2);
    }

    #[test]
    fn header_required() {
        let text = "0.0,1.0,0.5,1.0,0.4\n";
        let err = PairFile::read_from(text.as_bytes(), "x").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn grid_enforced_on_load() {
        let text = format!("{PAIR_FILE_HEADER}\n0.0,,10.0,1.0,5.0\n0.3,,10.1,1.0,5.0\n");
        let err = PairFile::read_from(text.as_bytes(), "x").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_names_line() {
        let text = format!("{PAIR_FILE_HEADER}\n0.0,1.0,0.5,1.0\n");
        let err = PairFile::read_from(text.as_bytes(), "x").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn headway_only_file() {
        let series =
            HeadwaySeries::new(12.0, vec![Some(8.0), Some(8.1), None, Some(8.3)]).unwrap();
        let file = PairFile::from_headway(&series, "scan");
        let back = PairFile::read_from(file.render().as_bytes(), "scan").unwrap();
        assert_eq!(back.t0, 12.0);
        assert_eq!(back.headway_series().unwrap(), series);
        assert!(back.vehicle_pair().is_err()); // no positions present
    }
}
