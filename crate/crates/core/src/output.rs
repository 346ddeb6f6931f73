//! Comma-separated result files. Floats are written in scientific notation
//! with 17 significant digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::histogram::{Grid2D, Histogram};
use crate::scenario::Scenario;
use crate::sim::{MomentState, RunRecord};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn timeseries_csv(moments: &[MomentState]) -> String {
    let m = moments.first().map_or(0, |s| s.m_l.len());
    let mut out = String::from("t,m_F");
    for k in 1..=m {
        write!(out, ",m_L{k}").unwrap();
    }
    out.push_str(",E_F");
    for k in 1..=m {
        write!(out, ",E_L{k}").unwrap();
    }
    out.push('\n');
    for s in moments {
        let row: Vec<String> = [s.t, s.m_f]
            .into_iter()
            .chain(s.m_l.iter().copied())
            .chain([s.e_f])
            .chain(s.e_l.iter().copied())
            .map(num)
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_timeseries(moments: &[MomentState], path: &Path) -> Result<()> {
    write(path, &timeseries_csv(moments))
}

/// Reads a file written by [`write_timeseries`].
pub fn read_timeseries(path: &Path) -> Result<Vec<MomentState>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let cols = header.split(',').count();
    if cols < 3 || (cols - 3) % 2 != 0 {
        return Err(bad(format!("unexpected header `{header}`")));
    }
    let m = (cols - 3) / 2;
    lines
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            if v.len() != cols {
                return Err(bad(format!("line {}: expected {cols} fields", i + 2)));
            }
            Ok(MomentState {
                t: v[0],
                m_f: v[1],
                m_l: v[2..2 + m].to_vec(),
                e_f: v[2 + m],
                e_l: v[3 + m..].to_vec(),
            })
        })
        .collect()
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_center,density\n");
    for (c, d) in h.centers().into_iter().zip(h.densities()) {
        writeln!(out, "{},{}", num(c), num(d)).unwrap();
    }
    out
}

pub fn write_histogram(h: &Histogram, path: &Path) -> Result<()> {
    write(path, &histogram_csv(h))
}

/// Two header lines give the opinion and knowledge bin centers; then one row
/// of densities per knowledge bin.
pub fn grid_csv(g: &Grid2D) -> String {
    let (rows, cols) = g.shape();
    let join = |v: Vec<f64>| v.into_iter().map(num).collect::<Vec<_>>().join(",");
    let mut out = format!(
        "# opinion,{}\n# knowledge,{}\n",
        join(g.opinion_centers()),
        join(g.knowledge_centers())
    );
    let d = g.densities();
    for r in 0..rows {
        out.push_str(&join(d[r * cols..(r + 1) * cols].to_vec()));
        out.push('\n');
    }
    out
}

pub fn write_grid(g: &Grid2D, path: &Path) -> Result<()> {
    write(path, &grid_csv(g))
}

/// Two-column table `w,density`.
pub fn write_density_table(rows: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut out = String::from("w,density\n");
    for (w, d) in rows {
        writeln!(out, "{},{}", num(*w), num(*d)).unwrap();
    }
    write(path, &out)
}

fn stamp(t: f64) -> String {
    format!("{t:08.3}")
}

fn summary(record: &RunRecord) -> String {
    let mut out = String::new();
    let s = &record.stats;
    writeln!(out, "name,{}", record.name).unwrap();
    writeln!(out, "steps,{}", record.moments.len().saturating_sub(1)).unwrap();
    for (label, c) in [
        ("follower_follower", s.follower_follower),
        ("follower_leader", s.follower_leader),
        ("leader_leader", s.leader_leader),
    ] {
        writeln!(out, "{label}_attempted,{}", c.attempted).unwrap();
        writeln!(out, "{label}_rejected,{}", c.rejected).unwrap();
    }
    if let Some(last) = record.moments.last() {
        writeln!(out, "final_m_F,{}", num(last.m_f)).unwrap();
    }
    if let Some(q) = &record.final_quartiles {
        for i in 0..4 {
            writeln!(
                out,
                "quartile{}_mean_opinion,{}",
                i + 1,
                num(q.mean_opinion[i])
            )
            .unwrap();
            writeln!(
                out,
                "quartile{}_mean_knowledge,{}",
                i + 1,
                num(q.mean_knowledge[i])
            )
            .unwrap();
        }
    }
    out
}

/// Writes every artifact of a run into `dir` and returns the file paths.
///
/// Layout: `scenario.toml`, `timeseries.csv`, `summary.csv`,
/// `knowledge.csv` (heterogeneous runs), and per snapshot
/// `followers_t<T>.csv`, `leaders<k>_t<T>.csv`, `grid_t<T>.csv`.
pub fn write_run(record: &RunRecord, scenario: &Scenario, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut emit = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        write(&path, &text)?;
        files.push(path);
        Ok(())
    };
    emit("scenario.toml".into(), scenario.to_toml_string())?;
    emit("timeseries.csv".into(), timeseries_csv(&record.moments))?;
    emit("summary.csv".into(), summary(record))?;
    if let Some(k) = &record.mean_knowledge {
        let mut out = String::from("t,mean_knowledge\n");
        for (s, x) in record.moments.iter().zip(k) {
            writeln!(out, "{},{}", num(s.t), num(*x)).unwrap();
        }
        emit("knowledge.csv".into(), out)?;
    }
    for snap in &record.snapshots {
        let t = stamp(snap.t);
        emit(
            format!("followers_t{t}.csv"),
            histogram_csv(&snap.followers),
        )?;
        for (k, h) in snap.leaders.iter().enumerate() {
            emit(format!("leaders{}_t{t}.csv", k + 1), histogram_csv(h))?;
        }
        if let Some(g) = &snap.grid {
            emit(format!("grid_t{t}.csv"), grid_csv(g))?;
        }
    }
    Ok(files)
}
