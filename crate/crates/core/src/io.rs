//! Text formats: point clouds, gain clouds, and the CSV artifacts of runs
//! and benchmarks.

use std::io::{BufRead, Write};

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::ig::{BenchRecord, PerspectiveGain};
use crate::planner::{HorizonPlan, StageCosts};
use crate::scalar::Real;
use crate::sim::RunMetrics;

/// Reads a whitespace-separated `x y z` point cloud. Blank lines and lines
/// starting with `#` are skipped.
pub fn read_point_cloud<T: Real>(r: impl BufRead) -> Result<Vec<Point3<T>>> {
    let mut points = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected `x y z`, got {} fields",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<T>()
                .map_err(|_| Error::Parse(format!("line {}: bad number {s}", lineno + 1)))
        };
        points.push(Point3::new(parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
    }
    Ok(points)
}

pub fn write_point_cloud<T: Real>(w: &mut impl Write, points: &[Point3<T>]) -> Result<()> {
    for p in points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

/// Writes an information-gain point cloud, one `x y z gain` line per
/// perspective.
pub fn write_gain_cloud<T: Real>(w: &mut impl Write, gains: &[PerspectiveGain<T>]) -> Result<()> {
    for g in gains {
        writeln!(w, "{} {} {} {}", g.origin.x, g.origin.y, g.origin.z, g.gain)?;
    }
    Ok(())
}

/// Reads a gain cloud written by [`write_gain_cloud`].
pub fn read_gain_cloud<T: Real>(r: impl BufRead) -> Result<Vec<PerspectiveGain<T>>> {
    let mut gains = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "line {}: expected `x y z gain`",
                lineno + 1
            )));
        }
        let parse = |s: &str| {
            s.parse::<T>()
                .map_err(|_| Error::Parse(format!("line {}: bad number {s}", lineno + 1)))
        };
        gains.push(PerspectiveGain {
            origin: Point3::new(parse(fields[0])?, parse(fields[1])?, parse(fields[2])?),
            gain: parse(fields[3])?,
            ray_count: 0,
        });
    }
    Ok(gains)
}

/// Benchmark CSV: `n_p,s_g,mode,mean_s,std_s`.
pub fn write_bench_csv(w: &mut impl Write, records: &[BenchRecord]) -> Result<()> {
    writeln!(w, "n_p,s_g,mode,mean_s,std_s")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n_p,
            r.s_g,
            r.mode.as_str(),
            r.mean_s,
            r.std_s
        )?;
    }
    Ok(())
}

/// Metrics CSV: the orientation/gain trace, one row per executed cycle.
pub fn write_metrics_csv<T: Real>(w: &mut impl Write, metrics: &RunMetrics<T>) -> Result<()> {
    writeln!(w, "t,orientation,gain,product")?;
    for s in &metrics.series {
        writeln!(w, "{},{},{},{}", s.t, s.orientation, s.gain, s.product)?;
    }
    Ok(())
}

pub fn read_metrics_csv<T: Real>(r: impl BufRead) -> Result<Vec<(T, T, T, T)>> {
    read_csv_rows(r, "t,orientation,gain,product", 4)
        .map(|rows| rows.into_iter().map(|v| (v[0], v[1], v[2], v[3])).collect())
}

/// Volumetric reconstruction trace CSV: `t,v_r`.
pub fn write_vr_csv<T: Real>(w: &mut impl Write, metrics: &RunMetrics<T>) -> Result<()> {
    writeln!(w, "t,v_r")?;
    for (t, v) in &metrics.v_r_series {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

pub fn read_vr_csv<T: Real>(r: impl BufRead) -> Result<Vec<(T, T)>> {
    read_csv_rows(r, "t,v_r", 2).map(|rows| rows.into_iter().map(|v| (v[0], v[1])).collect())
}

/// Run summary CSV: one row holding the headline metrics. A missing
/// volumetric value (no reference map) is written as `nan`.
pub fn write_summary_csv<T: Real>(w: &mut impl Write, metrics: &RunMetrics<T>) -> Result<()> {
    writeln!(w, "auc,travel_time,remaining_ig,v_r_final,reached_goal,planner_failures")?;
    writeln!(
        w,
        "{},{},{},{},{},{}",
        metrics.auc,
        metrics.travel_time,
        metrics.remaining_ig,
        metrics
            .v_r_final()
            .map(|v| v.to_string())
            .unwrap_or_else(|| "nan".into()),
        metrics.reached_goal,
        metrics.planner_failures
    )?;
    Ok(())
}

/// Parsed summary row.
#[derive(Debug, Clone, Copy)]
pub struct Summary<T: Real> {
    pub auc: T,
    pub travel_time: T,
    pub remaining_ig: T,
    pub v_r_final: Option<T>,
    pub reached_goal: bool,
}

pub fn read_summary_csv<T: Real>(r: impl BufRead) -> Result<Summary<T>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty summary".into()))??;
    if !header.starts_with("auc,travel_time,remaining_ig,v_r_final") {
        return Err(Error::Parse(format!("unexpected summary header: {header}")));
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::Parse("summary is missing its data row".into()))??;
    let fields: Vec<&str> = row.trim().split(',').collect();
    if fields.len() < 5 {
        return Err(Error::Parse("summary row is truncated".into()));
    }
    let parse = |s: &str| {
        s.parse::<T>()
            .map_err(|_| Error::Parse(format!("bad summary number {s}")))
    };
    let v_r_final = if fields[3] == "nan" {
        None
    } else {
        Some(parse(fields[3])?)
    };
    Ok(Summary {
        auc: parse(fields[0])?,
        travel_time: parse(fields[1])?,
        remaining_ig: parse(fields[2])?,
        v_r_final,
        reached_goal: fields[4] == "true",
    })
}

/// Streaming writer for the per-cycle plan log:
/// `t,k,q...,u...,c_g,c_c,c_o,c_i,o,g`.
pub struct PlanLogWriter<W: Write> {
    w: W,
    wrote_header: bool,
}

impl<W: Write> PlanLogWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            w,
            wrote_header: false,
        }
    }

    pub fn append<T: Real>(
        &mut self,
        t: T,
        plan: &HorizonPlan<T>,
        stages: &[StageCosts<T>],
    ) -> Result<()> {
        let dof = plan.states[0].len();
        if !self.wrote_header {
            let mut header = String::from("t,k");
            for j in 0..dof {
                header.push_str(&format!(",q{j}"));
            }
            for j in 0..dof {
                header.push_str(&format!(",u{j}"));
            }
            header.push_str(",c_g,c_c,c_o,c_i,o,g");
            writeln!(self.w, "{header}")?;
            self.wrote_header = true;
        }
        for (k, stage) in stages.iter().enumerate() {
            let mut row = format!("{t},{k}");
            for j in 0..dof {
                row.push_str(&format!(",{}", plan.states[k][j]));
            }
            for j in 0..dof {
                if k < plan.controls.len() {
                    row.push_str(&format!(",{}", plan.controls[k][j]));
                } else {
                    row.push_str(",0");
                }
            }
            row.push_str(&format!(
                ",{},{},{},{},{},{}",
                stage.goal, stage.control, stage.obstacle, stage.information, stage.orientation,
                stage.gain
            ));
            writeln!(self.w, "{row}")?;
        }
        Ok(())
    }
}

fn read_csv_rows<T: Real>(
    r: impl BufRead,
    expected_header: &str,
    columns: usize,
) -> Result<Vec<Vec<T>>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty csv".into()))??;
    if header.trim() != expected_header {
        return Err(Error::Parse(format!(
            "unexpected header {header:?}, wanted {expected_header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != columns {
            return Err(Error::Parse(format!(
                "line {}: expected {columns} columns, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(columns);
        for f in fields {
            row.push(
                f.parse::<T>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {f}", lineno + 2)))?,
            );
        }
        rows.push(row);
    }
    Ok(rows)
}
