use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::state::{Boundary, Chart, ConformalGridState};
use super::stepper::{rate, step, SolverConfig};
use crate::error::{Error, Result};

/// Runs stop once `max|K| · dt` exceeds this: the curvature scale has
/// outrun the time step.
pub const CURVATURE_STEP_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub t: f64,
    pub coord1: f64,
    pub coord2: f64,
}

/// `h`, `K` and the volume variation rate `2 h_t + 4(α+β) K` at a probe.
/// `h_t` is the backward difference over the last step (the flow rate at
/// the initial state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub t: f64,
    pub coord1: f64,
    pub coord2: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub vol_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAbort {
    pub reason: String,
    pub last_valid_t: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<ConformalGridState>,
    pub probe_rows: Vec<ProbeRow>,
    pub abort: Option<RunAbort>,
}

impl Trajectory {
    pub fn last(&self) -> &ConformalGridState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
}

fn probe_row(state: &ConformalGridState, h_t: &Array2<f64>, k: &Array2<f64>, s: f64, probe: &Probe) -> Result<ProbeRow> {
    let (c1, c2) = (probe.coord1, probe.coord2);
    let h = state.interpolate(&state.h, c1, c2, true)?;
    let kv = state.interpolate(k, c1, c2, true)?;
    let ht = state.interpolate(h_t, c1, c2, true)?;
    Ok(ProbeRow { t: state.t, coord1: c1, coord2: c2, h, k: kv, vol_rate: 2.0 * ht + 4.0 * s * kv })
}

/// Advances `initial` by `config.steps` steps, keeping every
/// `snapshot_every`-th state (and the last). A probe is sampled on the first
/// state whose time reaches `probe.t − dt/2`.
///
/// CFL refusals and invalid input are errors; blow-up and curvature
/// collapse end the run early and are reported in [`Trajectory::abort`].
pub fn run_flow(initial: &ConformalGridState, config: &SolverConfig, probes: &[Probe], snapshot_every: usize) -> Result<Trajectory> {
    config.validate()?;
    if snapshot_every == 0 {
        return Err(Error::InvalidParameter("snapshot cadence must be at least 1".into()));
    }
    for p in probes {
        initial.fractional_index(p.coord1, p.coord2)?;
        if p.t < initial.t - 1e-12 {
            return Err(Error::InvalidParameter(format!("probe time {} precedes the initial time {}", p.t, initial.t)));
        }
    }
    let s = config.params.sum();
    let dt = config.dt;
    let mut pending: Vec<&Probe> = probes.iter().collect();
    pending.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut rows = Vec::new();
    let mut snapshots = vec![initial.clone()];
    let mut abort = None;

    let sample = |state: &ConformalGridState, h_t: &Array2<f64>, pending: &mut Vec<&Probe>, rows: &mut Vec<ProbeRow>| -> Result<Array2<f64>> {
        let k = state.gauss_curvature_field(2)?;
        let due = pending.iter().take_while(|p| p.t <= state.t + 0.5 * dt).count();
        for p in pending.drain(..due) {
            rows.push(probe_row(state, h_t, &k, s, p)?);
        }
        Ok(k)
    };

    let w = initial.weights()?;
    let mut k = sample(initial, &rate(initial, &initial.h, &w, s), &mut pending, &mut rows)?;
    let mut current = initial.clone();
    for n in 1..=config.steps {
        let kmax = max_abs(&k);
        if kmax * dt > CURVATURE_STEP_LIMIT {
            abort = Some(RunAbort {
                reason: format!("curvature {kmax:.6e} too large for dt = {dt:.6e}"),
                last_valid_t: current.t,
            });
            break;
        }
        let next = match step(&current, config) {
            Ok(next) => next,
            Err(Error::BlowUp { last_valid_t }) => {
                abort = Some(RunAbort { reason: "blow-up: |h| exceeded the overflow guard".into(), last_valid_t });
                break;
            }
            Err(e) => return Err(e),
        };
        let h_t = (&next.h - &current.h) / dt;
        k = sample(&next, &h_t, &mut pending, &mut rows)?;
        current = next;
        if n % snapshot_every == 0 {
            snapshots.push(current.clone());
        }
    }
    if snapshots.last().is_some_and(|last| last.t != current.t) {
        snapshots.push(current);
    }
    Ok(Trajectory { snapshots, probe_rows: rows, abort })
}

fn chart_label(chart: Chart) -> String {
    match chart {
        Chart::EllipticUV { c } => format!("elliptic:{c:.16e}"),
        other => other.name().to_string(),
    }
}

fn parse_chart(label: &str) -> Result<Chart> {
    match label {
        "cartesian" => Ok(Chart::Cartesian),
        "polar" => Ok(Chart::Polar),
        "parabolic" => Ok(Chart::ParabolicUV),
        other => match other.strip_prefix("elliptic:") {
            Some(c) => Ok(Chart::EllipticUV { c: parse_f64(c)? }),
            None => Err(Error::InvalidGrid(format!("unknown chart label {other:?}"))),
        },
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::InvalidGrid(format!("not a number: {s:?}")))
}

const SNAPSHOT_HEADER: &str = "# chart,t,spacing1,spacing2,origin1,origin2,bc";

/// Writes `h` row-major (one grid row per line, index `i` outermost) after
/// two comment lines naming and giving the chart, time, spacing, origin
/// and boundary kind. Values use 17 significant digits.
pub fn write_snapshot_csv<W: Write>(state: &ConformalGridState, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    writeln!(
        out,
        "# {},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
        chart_label(state.chart),
        state.t,
        state.spacing[0],
        state.spacing[1],
        state.origin[0],
        state.origin[1],
        state.bc.name()
    )?;
    for row in state.h.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot_csv`]. Dirichlet data
/// comes back frozen.
pub fn read_snapshot_csv<R: Read>(input: R) -> Result<ConformalGridState> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().map(|l| l.map_err(|e| Error::InvalidGrid(e.to_string())));
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != SNAPSHOT_HEADER {
        return Err(Error::InvalidGrid(format!("unexpected snapshot header {header:?}")));
    }
    let meta = lines.next().transpose()?.unwrap_or_default();
    let fields: Vec<&str> = meta.trim_start_matches('#').trim().split(',').collect();
    if fields.len() != 7 {
        return Err(Error::InvalidGrid(format!("malformed snapshot metadata {meta:?}")));
    }
    let chart = parse_chart(fields[0])?;
    let t = parse_f64(fields[1])?;
    let spacing = [parse_f64(fields[2])?, parse_f64(fields[3])?];
    let origin = [parse_f64(fields[4])?, parse_f64(fields[5])?];
    let bc = match fields[6] {
        "periodic" => Boundary::Periodic,
        _ => Boundary::Dirichlet(super::state::DirichletData::Frozen),
    };
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line.split(',').map(parse_f64).collect::<Result<_>>()?;
        if *ncols.get_or_insert(row.len()) != row.len() {
            return Err(Error::InvalidGrid("ragged snapshot rows".into()));
        }
        values.extend(row);
        nrows += 1;
    }
    let h = Array2::from_shape_vec((nrows, ncols.unwrap_or(0)), values).map_err(|e| Error::InvalidGrid(e.to_string()))?;
    ConformalGridState::new(chart, h, spacing, origin, t, bc)
}

/// Writes one snapshot file per state, `<prefix>_<index>.csv` in `dir`.
pub fn write_snapshot_series(dir: &Path, prefix: &str, snapshots: &[ConformalGridState]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let width = snapshots.len().saturating_sub(1).to_string().len().max(4);
    snapshots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let path = dir.join(format!("{prefix}_{i:0width$}.csv"));
            let file = fs::File::create(&path)?;
            let mut w = std::io::BufWriter::new(file);
            write_snapshot_csv(s, &mut w)?;
            w.flush()?;
            Ok(path)
        })
        .collect()
}

/// Probe table with columns `t, coord1, coord2, h, K, vol_rate`.
pub fn write_probe_csv<W: Write>(rows: &[ProbeRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "coord1", "coord2", "h", "K", "vol_rate"])?;
    for r in rows {
        w.write_record([r.t, r.coord1, r.coord2, r.h, r.k, r.vol_rate].map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}
