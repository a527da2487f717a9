use std::cell::Cell;
use std::io::{Read, Write};

use thiserror::Error;

use crate::expr::{EvalError, Segment};
use crate::fracint::{FracError, Grid};

use super::ProblemSpec;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("time {t} lies outside [{low}, {high}]")]
    OutOfRange { t: f64, low: f64, high: f64 },
    #[error("trajectory does not match the problem grid: {0}")]
    GridMismatch(String),
    #[error("history function: {0}")]
    History(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] FracError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

// slack when locating times against grid nodes, in units of the step
const NODE_SLACK: f64 = 1e-9;

/// History offsets for delay `delta` on a grid with step h: `-δ`, then
/// `-(m-1)h, …, -h, 0`, ascending, with m = ⌈δ/h⌉.
pub fn history_offsets(grid: &Grid, delta: f64) -> Vec<f64> {
    if delta <= 0.0 {
        return vec![0.0];
    }
    let h = grid.step();
    let m = ((delta / h) - NODE_SLACK).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(m + 1);
    out.push(-delta);
    for i in (0..m).rev() {
        out.push(-(i as f64) * h);
    }
    out
}

/// Samples on `[-δ, T]`: history (φ) at [`history_offsets`] and the solution at
/// the grid nodes. The history keeps φ(0) at offset 0 while the main part holds
/// x(0), so a jump at t = 0 is stored explicitly; evaluating at t = 0 returns x(0).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    delta: f64,
    offsets: Vec<f64>,
    history: Vec<f64>,
    main: Vec<f64>,
}

fn interpolate(xs: &[f64], ys: &[f64], s: f64) -> f64 {
    if xs.len() == 1 {
        return ys[0];
    }
    let i = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (s - x0) / (x1 - x0);
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

impl Trajectory {
    pub fn new(grid: Grid, delta: f64, history: Vec<f64>, main: Vec<f64>) -> Result<Self, TrajectoryError> {
        let offsets = history_offsets(&grid, delta);
        if history.len() != offsets.len() {
            return Err(TrajectoryError::GridMismatch(format!(
                "expected {} history samples, got {}",
                offsets.len(),
                history.len()
            )));
        }
        if main.len() != grid.len() {
            return Err(TrajectoryError::GridMismatch(format!(
                "expected {} main samples, got {}",
                grid.len(),
                main.len()
            )));
        }
        Ok(Self { grid, delta, offsets, history, main })
    }

    /// History sampled from the problem's φ, main part set to `fill`.
    pub fn from_spec(spec: &ProblemSpec, grid: Grid, fill: f64) -> Result<Self, TrajectoryError> {
        let offsets = history_offsets(&grid, spec.delta);
        let history = offsets.iter().map(|&o| spec.phi_at(o)).collect::<Result<Vec<_>, _>>()?;
        Self::new(grid, spec.delta, history, vec![fill; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn history_offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn main(&self) -> &[f64] {
        &self.main
    }

    pub fn main_mut(&mut self) -> &mut [f64] {
        &mut self.main
    }

    pub fn set_main(&mut self, values: Vec<f64>) {
        assert_eq!(values.len(), self.main.len(), "main length is fixed by the grid");
        self.main = values;
    }

    /// sup over the grid nodes of [0, T].
    pub fn sup_norm(&self) -> f64 {
        self.main.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// φ interpolated at offset θ ∈ [-δ, 0].
    pub fn history_at(&self, theta: f64) -> f64 {
        interpolate(&self.offsets, &self.history, theta)
    }

    fn main_at(&self, s: f64) -> f64 {
        let h = self.grid.step();
        let n = self.grid.n_steps();
        let pos = s / h;
        let nearest = pos.round();
        if (pos - nearest).abs() <= NODE_SLACK {
            // on a node: read it alone so later samples never leak in
            return self.main[(nearest as usize).min(n)];
        }
        let i = (pos.floor() as usize).min(n - 1);
        let w = pos - i as f64;
        self.main[i] + w * (self.main[i + 1] - self.main[i])
    }

    /// x(s) for s ∈ [-δ, T], piecewise linear between samples.
    pub fn value_at(&self, s: f64) -> Result<f64, TrajectoryError> {
        let slack = NODE_SLACK * self.grid.step();
        if !(s >= -self.delta - slack && s <= self.grid.t_end() + slack) {
            return Err(TrajectoryError::OutOfRange { t: s, low: -self.delta, high: self.grid.t_end() });
        }
        Ok(if s < 0.0 { self.history_at(s.max(-self.delta)) } else { self.main_at(s.min(self.grid.t_end())) })
    }
}

/// The delayed state x_t(θ) = x(t + θ), θ ∈ [-δ, 0], read through a trajectory.
/// At anchor t = 0 the window is the history itself.
#[derive(Debug)]
pub struct StateWindow<'a> {
    traj: &'a Trajectory,
    anchor: f64,
    clamps: Cell<usize>,
    norm: Cell<Option<f64>>,
}

/// Window at anchor `t`; `t` must lie in `[0, T]`.
pub fn window(traj: &Trajectory, t: f64) -> Result<StateWindow<'_>, TrajectoryError> {
    let t_end = traj.grid.t_end();
    let slack = NODE_SLACK * traj.grid.step();
    if !(t >= 0.0 && t <= t_end + slack) {
        return Err(TrajectoryError::OutOfRange { t, low: 0.0, high: t_end });
    }
    Ok(StateWindow { traj, anchor: t.min(t_end), clamps: Cell::new(0), norm: Cell::new(None) })
}

impl<'a> StateWindow<'a> {
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Number of `xat` calls whose offset fell outside [-δ, 0].
    pub fn clamp_count(&self) -> usize {
        self.clamps.get()
    }

    fn sample(&self, theta: f64) -> f64 {
        if self.anchor == 0.0 {
            return self.traj.history_at(theta);
        }
        let s = self.anchor + theta;
        if s < 0.0 {
            self.traj.history_at(s)
        } else {
            self.traj.main_at(s)
        }
    }

    fn compute_norm(&self) -> f64 {
        let traj = self.traj;
        let delta = traj.delta;
        let mut sup = self.sample(-delta).abs().max(self.sample(0.0).abs());
        if self.anchor == 0.0 {
            return traj.history.iter().fold(sup, |m, v| m.max(v.abs()));
        }
        let h = traj.grid.step();
        let start = self.anchor - delta;
        if start < -NODE_SLACK * h {
            // history nodes in [start, 0], including the left limit φ(0)
            let first = traj.offsets.partition_point(|&o| o < start - NODE_SLACK * h);
            sup = traj.history[first..].iter().fold(sup, |m, v| m.max(v.abs()));
        }
        let lo = ((start.max(0.0) / h) - NODE_SLACK).ceil().max(0.0) as usize;
        let hi = (((self.anchor / h) + NODE_SLACK).floor() as usize).min(traj.grid.n_steps());
        if lo <= hi {
            sup = traj.main[lo..=hi].iter().fold(sup, |m, v| m.max(v.abs()));
        }
        sup
    }
}

impl Segment for StateWindow<'_> {
    fn xat(&self, theta: f64) -> f64 {
        let delta = self.traj.delta;
        let clamped = theta.clamp(-delta, 0.0);
        if clamped != theta {
            self.clamps.set(self.clamps.get() + 1);
        }
        self.sample(clamped)
    }

    fn xnorm(&self) -> f64 {
        if let Some(v) = self.norm.get() {
            return v;
        }
        let v = self.compute_norm();
        self.norm.set(Some(v));
        v
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV `t,x`: history rows (t < 0) then every grid node, 17 significant digits.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<(), TrajectoryError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x"])?;
    for (o, v) in traj.offsets.iter().zip(&traj.history) {
        if *o < 0.0 {
            w.write_record([fmt17(*o), fmt17(*v)])?;
        }
    }
    for (t, v) in traj.grid.nodes().zip(&traj.main) {
        w.write_record([fmt17(t), fmt17(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV `t,x1,x2` for two trajectories on the same grid.
pub fn write_pair_csv<W: Write>(a: &Trajectory, b: &Trajectory, out: W) -> Result<(), TrajectoryError> {
    if a.grid != b.grid || a.offsets != b.offsets {
        return Err(TrajectoryError::GridMismatch("trajectories live on different grids".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x1", "x2"])?;
    for (i, o) in a.offsets.iter().enumerate() {
        if *o < 0.0 {
            w.write_record([fmt17(*o), fmt17(a.history[i]), fmt17(b.history[i])])?;
        }
    }
    for (j, t) in a.grid.nodes().enumerate() {
        w.write_record([fmt17(t), fmt17(a.main[j]), fmt17(b.main[j])])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,x` CSV written by [`write_trajectory_csv`] and checks it against
/// the problem's grid; the step count is inferred from the rows with t ≥ 0.
/// φ(0) comes from the problem since the file stores x(0) only.
pub fn read_trajectory_csv<R: Read>(spec: &ProblemSpec, input: R) -> Result<Trajectory, TrajectoryError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "t" || &headers[1] != "x" {
        return Err(TrajectoryError::GridMismatch(format!("expected header `t,x`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut hist_rows = Vec::new();
    let mut main_rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64, TrajectoryError> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| TrajectoryError::GridMismatch(format!("row {}: unreadable number", i + 2)))
        };
        let (t, x) = (parse(0)?, parse(1)?);
        if t < 0.0 {
            hist_rows.push((t, x));
        } else {
            main_rows.push((t, x));
        }
    }
    if main_rows.len() < 2 {
        return Err(TrajectoryError::GridMismatch("need at least two rows with t >= 0".into()));
    }
    let grid = Grid::new(spec.t_end, main_rows.len() - 1)?;
    let tol = NODE_SLACK * spec.t_end.max(1.0);
    for ((t, _), node) in main_rows.iter().zip(grid.nodes()) {
        if (t - node).abs() > tol {
            return Err(TrajectoryError::GridMismatch(format!("row time {t} does not match grid node {node}")));
        }
    }
    let offsets = history_offsets(&grid, spec.delta);
    let negative = &offsets[..offsets.len() - 1];
    if negative.len() != hist_rows.len() {
        return Err(TrajectoryError::GridMismatch(format!(
            "expected {} history rows, got {}",
            negative.len(),
            hist_rows.len()
        )));
    }
    for ((t, _), o) in hist_rows.iter().zip(negative) {
        if (t - o).abs() > tol {
            return Err(TrajectoryError::GridMismatch(format!("history time {t} does not match offset {o}")));
        }
    }
    let mut history: Vec<f64> = hist_rows.iter().map(|r| r.1).collect();
    history.push(spec.phi_at(0.0)?);
    Trajectory::new(grid, spec.delta, history, main_rows.iter().map(|r| r.1).collect())
}
