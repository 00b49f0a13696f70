//! Text file formats.
//!
//! * trajectories and paths: one line per sample, `t,x1,x2,u1,u2,p`; paths
//!   are timed at unit speed and carry zero controls
//! * snapshots: one pair per line, `x1,x2,y1,y2`
//! * LP dumps: sections `COST`, `EQ`, `INEQ`, `BOUNDS`, one row per line,
//!   space separated. Constraint rows list the coefficients followed by the
//!   right-hand side; `INEQ` rows read `a·v ≥ b`. `BOUNDS` holds one lower
//!   bound per line, `-inf` for free variables.
//! * density dumps and reports: `key = value` lines, then a table
//!
//! Numbers are written in Rust's shortest round-trip form, so exports are
//! byte-identical whenever the values are.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pfnav_core::basis::BasisSet;
use pfnav_core::control::Trajectory;
use pfnav_core::lp::LpStandardForm;
use pfnav_core::nav::DensitySolution;
use pfnav_core::operator::SnapshotData;
use pfnav_core::terrain::TerrainGrid;
use pfnav_core::{Matrix, Vec2};

use crate::error::CliError;

pub fn load_heightmap(path: &Path, cell_size: f64, origin: Vec2) -> Result<TerrainGrid, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(TerrainGrid::parse_csv(&text, cell_size, origin)?)
}

/// Row 0 of the output is the top of the terrain, matching the loader.
pub fn heightmap_csv(n_rows: usize, n_cols: usize, heights: &[f64]) -> String {
    let mut out = String::new();
    for row in heights.chunks(n_cols).take(n_rows) {
        let line: Vec<String> = row.iter().map(|h| h.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    for i in 0..traj.len() {
        let (x, u) = (traj.states[i], traj.controls[i]);
        let _ = writeln!(out, "{},{},{},{},{},{}", traj.times[i], x.x, x.y, u.x, u.y, traj.p[i]);
    }
    out
}

/// Polyline timed at `speed` with zero controls.
pub fn path_csv(points: &[Vec2], grid: &TerrainGrid, speed: f64) -> Result<String, CliError> {
    let mut out = String::new();
    let mut t = 0.0;
    for (i, x) in points.iter().enumerate() {
        if i > 0 {
            t += points[i - 1].dist(*x) / speed;
        }
        let p = grid.traversability(*x)?;
        let _ = writeln!(out, "{t},{},{},0,0,{p}", x.x, x.y);
    }
    Ok(out)
}

/// Parses the trajectory format back into `[t, x1, x2, u1, u2, p]` rows.
pub fn parse_samples(text: &str) -> Result<Vec<[f64; 6]>, CliError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals = parse_fields(line, ',', i + 1)?;
        let row: [f64; 6] = vals.try_into().map_err(|v: Vec<f64>| format_err(i + 1, format!("expected 6 fields, found {}", v.len())))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn snapshots_csv(data: &SnapshotData) -> String {
    let mut out = String::new();
    for (x, y) in data.x.iter().zip(&data.y) {
        let _ = writeln!(out, "{},{},{},{}", x.x, x.y, y.x, y.y);
    }
    out
}

pub fn parse_snapshots(text: &str, dt: f64) -> Result<SnapshotData, CliError> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = parse_fields(line, ',', i + 1)?;
        if v.len() != 4 {
            return Err(format_err(i + 1, format!("expected 4 fields, found {}", v.len())));
        }
        xs.push(Vec2::new(v[0], v[1]));
        ys.push(Vec2::new(v[2], v[3]));
    }
    Ok(SnapshotData::new(xs, ys, dt)?)
}

fn format_err(line: usize, message: String) -> CliError {
    CliError::Core(pfnav_core::Error::Format { line, message })
}

fn parse_fields(line: &str, sep: char, lineno: usize) -> Result<Vec<f64>, CliError> {
    let parts: Box<dyn Iterator<Item = &str>> =
        if sep == ' ' { Box::new(line.split_whitespace()) } else { Box::new(line.split(sep).map(str::trim)) };
    parts.map(|s| s.parse::<f64>().map_err(|_| format_err(lineno, format!("cannot parse {s:?} as a number")))).collect()
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn lp_dump(lp: &LpStandardForm) -> String {
    let mut out = String::from("COST\n");
    out.push_str(&join(lp.c.iter().copied()));
    out.push_str("\nEQ\n");
    for i in 0..lp.num_eq() {
        let _ = writeln!(out, "{} {}", join(lp.a_eq.row(i).iter().copied()), lp.b_eq[i]);
    }
    out.push_str("INEQ\n");
    for i in 0..lp.num_ineq() {
        let _ = writeln!(out, "{} {}", join(lp.a_ineq.row(i).iter().copied()), lp.b_ineq[i]);
    }
    out.push_str("BOUNDS\n");
    for l in &lp.lower {
        let _ = writeln!(out, "{l}");
    }
    out
}

pub fn parse_lp_dump(text: &str) -> Result<LpStandardForm, CliError> {
    let mut section = "";
    let mut c = Vec::new();
    let (mut eq, mut ineq, mut lower): (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if matches!(t, "COST" | "EQ" | "INEQ" | "BOUNDS") {
            section = t;
            continue;
        }
        match section {
            "COST" => c = parse_fields(t, ' ', i + 1)?,
            "EQ" => eq.push(parse_fields(t, ' ', i + 1)?),
            "INEQ" => ineq.push(parse_fields(t, ' ', i + 1)?),
            "BOUNDS" if !t.is_empty() => lower.push(parse_fields(t, ' ', i + 1)?[0]),
            "BOUNDS" => {}
            _ => return Err(format_err(i + 1, "content before the COST section".into())),
        }
    }
    let n = c.len();
    let split = |rows: Vec<Vec<f64>>| -> Result<(Matrix, Vec<f64>), CliError> {
        let mut a = Matrix::zeros(rows.len(), n);
        let mut b = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n + 1 {
                return Err(format_err(0, format!("constraint row has {} fields, expected {}", row.len(), n + 1)));
            }
            a.row_mut(r).copy_from_slice(&row[..n]);
            b.push(row[n]);
        }
        Ok((a, b))
    };
    let (a_eq, b_eq) = split(eq)?;
    let (a_ineq, b_ineq) = split(ineq)?;
    let lp = LpStandardForm { c, a_eq, b_eq, a_ineq, b_ineq, lower };
    lp.validate().map_err(|m| format_err(0, m))?;
    Ok(lp)
}

pub fn density_dump(sol: &DensitySolution, basis: &BasisSet) -> String {
    let m = sol.z.len();
    let mut out = String::new();
    let _ = writeln!(out, "objective = {}", sol.objective);
    let _ = writeln!(out, "sigma = {}", basis.sigma());
    let _ = writeln!(out, "functions = {}", basis.len());
    let mut header = String::from("# k,cx,cy,r");
    (1..=m).for_each(|j| header += &format!(",z{j}"));
    (1..=m).for_each(|j| header += &format!(",w{j}"));
    out.push_str(&header);
    out.push('\n');
    for (k, c) in basis.centers().iter().enumerate() {
        let _ = write!(out, "{k},{},{},{}", c.x, c.y, sol.r[k]);
        for z in &sol.z {
            let _ = write!(out, ",{}", z[k]);
        }
        for w in &sol.w {
            let _ = write!(out, ",{}", w[k]);
        }
        out.push('\n');
    }
    out
}

/// Ordered `key = value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn add(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Report {
        let entries = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Report { entries }
    }
}
