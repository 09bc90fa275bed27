//! Trajectories of the reduced field, separatrices of saddles and phase portraits.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{find_equilibria, Equilibrium, Kind, Label};
use crate::error::{Error, Result};
use crate::model::{ParamPoint, ReducedSystem, State};

pub const RTOL: f64 = 1e-10;
pub const ATOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminal {
    Converged(Label),
    LeftWindow,
    MaxTime,
}

impl Terminal {
    pub fn name(&self) -> String {
        match self {
            Terminal::Converged(l) => l.to_string(),
            Terminal::LeftWindow => "left_window".into(),
            Terminal::MaxTime => "max_time".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: State,
    pub direction: Direction,
    pub points: Vec<(f64, State)>,
    pub terminal: Terminal,
}

impl Trajectory {
    pub fn min_coordinate(&self) -> f64 {
        self.points.iter().map(|(_, x)| x[0].min(x[1])).fold(f64::INFINITY, f64::min)
    }
}

/// Square `[0, side]^2` state window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateWindow {
    pub side: f64,
}

/// Three times the largest proper coordinate, or `3 |mu|` when only the origin is proper.
pub fn portrait_window(equilibria: &[Equilibrium], mu: ParamPoint) -> StateWindow {
    let m = equilibria
        .iter()
        .filter(|e| e.proper)
        .map(|e| e.xi[0].max(e.xi[1]))
        .fold(0.0, f64::max);
    StateWindow { side: if m > 0.0 { 3.0 * m } else { 3.0 * mu.norm() } }
}

pub fn default_t_max(mu: ParamPoint) -> f64 {
    50.0 / mu.norm()
}

/// `50 / rate`, where the rate is `|mu|` or the slowest linear rate of a proper equilibrium if smaller.
pub fn t_max_for(equilibria: &[Equilibrium], mu: ParamPoint) -> f64 {
    let tol = 1e-9 * mu.norm();
    let slowest = equilibria
        .iter()
        .filter(|e| e.proper && !e.trivial)
        .flat_map(|e| e.eigenvalues.iter().map(|l| l.re.abs()))
        .filter(|r| *r > tol)
        .fold(mu.norm(), f64::min);
    50.0 / slowest
}

/// Everything a batch of integrations at one parameter point shares.
pub struct FlowContext<'a> {
    pub sys: &'a ReducedSystem,
    pub mu: ParamPoint,
    pub window: StateWindow,
    /// Proper equilibria that can be reported as terminals.
    pub targets: Vec<(Label, State)>,
    pub t_max: f64,
}

impl<'a> FlowContext<'a> {
    pub fn new(sys: &'a ReducedSystem, mu: ParamPoint) -> Result<Self> {
        let set = find_equilibria(sys, mu)?;
        let window = portrait_window(&set.equilibria, mu);
        let mut targets: Vec<(Label, State)> = Vec::new();
        for e in set.equilibria.iter().filter(|e| e.proper) {
            if !targets.iter().any(|t| t.1 == e.xi) {
                targets.push((e.label, [e.xi[0].max(0.0), e.xi[1].max(0.0)]));
            }
        }
        let t_max = if mu.norm() > 0.0 { t_max_for(&set.equilibria, mu) } else { 1e6 };
        Ok(Self { sys, mu, window, targets, t_max })
    }

    fn rhs(&self, x: State, sign: f64) -> State {
        let f = self.sys.eval_field(self.mu, x);
        [sign * f[0], sign * f[1]]
    }

    fn converged(&self, x: State) -> Option<Label> {
        let f = self.sys.eval_field(self.mu, x);
        if f[0].hypot(f[1]) >= 1e-12 {
            return None;
        }
        let r = 1e-8 * self.window.side;
        self.targets.iter().find(|(_, e)| (x[0] - e[0]).hypot(x[1] - e[1]) < r).map(|t| t.0)
    }
}

// Dormand-Prince 5(4) tableau; the field is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Clamps coordinates that rounding pushed just below an invariant axis.
fn clamp(x: State) -> State {
    let floor = -10.0 * ATOL;
    x.map(|v| if v < 0.0 && v > floor { 0.0 } else { v })
}

pub fn integrate_in(ctx: &FlowContext<'_>, x0: State, direction: Direction) -> Result<Trajectory> {
    let sign = if direction == Direction::Forward { 1.0 } else { -1.0 };
    let mut x = clamp(x0);
    let mut t = 0.0;
    let mut points = vec![(0.0, x)];
    if let Some(l) = ctx.converged(x) {
        return Ok(Trajectory { initial: x0, direction, points, terminal: Terminal::Converged(l) });
    }
    let scale = ctx.mu.norm().max(1e-12);
    let mut h = 1e-3 / scale;
    let mut k = [[0.0; 2]; 7];
    k[0] = ctx.rhs(x, sign);
    let out_of_window = |x: State| x[0] > 2.0 * ctx.window.side || x[1] > 2.0 * ctx.window.side;
    loop {
        if t >= ctx.t_max {
            return Ok(Trajectory { initial: x0, direction, points, terminal: Terminal::MaxTime });
        }
        h = h.min(ctx.t_max - t);
        if h < 1e-14 * t.abs().max(1.0 / scale) {
            return Err(Error::StepFailure { t, x: x[0], y: x[1] });
        }
        for s in 1..7 {
            let mut y = x;
            for (j, kj) in k.iter().enumerate().take(s) {
                y[0] += h * A[s][j] * kj[0];
                y[1] += h * A[s][j] * kj[1];
            }
            k[s] = ctx.rhs(y, sign);
        }
        let mut x5 = x;
        let mut err = 0.0;
        for i in 0..2 {
            let (mut d5, mut d4) = (0.0, 0.0);
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            x5[i] = x[i] + h * d5;
            let sc = ATOL + RTOL * x[i].abs().max(x5[i].abs());
            err += (h * (d5 - d4) / sc).powi(2);
        }
        let err = (err / 2.0).sqrt();
        if err <= 1.0 {
            t += h;
            x = clamp(x5);
            points.push((t, x));
            k[0] = if x == x5 { k[6] } else { ctx.rhs(x, sign) };
            if let Some(l) = ctx.converged(x) {
                return Ok(Trajectory { initial: x0, direction, points, terminal: Terminal::Converged(l) });
            }
            if out_of_window(x) {
                return Ok(Trajectory { initial: x0, direction, points, terminal: Terminal::LeftWindow });
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
}

/// Integrates from `x0` with terminals computed from the equilibria at `mu`.
pub fn integrate(sys: &ReducedSystem, mu: ParamPoint, x0: State, direction: Direction, t_max: f64) -> Result<Trajectory> {
    if x0[0] < 0.0 || x0[1] < 0.0 {
        return Err(Error::InvalidArgument("initial state must lie in the closed first quadrant".into()));
    }
    let mut ctx = FlowContext::new(sys, mu)?;
    ctx.t_max = t_max;
    integrate_in(&ctx, x0, direction)
}

/// Real eigenvectors of the Jacobian at `e`, paired with their eigenvalues.
fn eigenvectors(e: &Equilibrium) -> Vec<(f64, State)> {
    let a = e.jacobian;
    e.eigenvalues
        .iter()
        .filter(|l| l.im == 0.0)
        .map(|l| {
            let lam = l.re;
            let v1 = [a[0][1], lam - a[0][0]];
            let v2 = [lam - a[1][1], a[1][0]];
            let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
            let n = v[0].hypot(v[1]);
            (lam, [v[0] / n, v[1] / n])
        })
        .collect()
}

/// Stable directions integrated backward, unstable forward; seeds leaving the closed quadrant are skipped.
pub fn separatrices_in(ctx: &FlowContext<'_>, saddle: &Equilibrium) -> Result<Vec<Trajectory>> {
    if saddle.kind != Kind::Saddle {
        return Err(Error::InvalidArgument(format!("{} is not a saddle", saddle.label)));
    }
    let h = 1e-6 * ctx.window.side;
    let mut seeds = Vec::new();
    for (lam, v) in eigenvectors(saddle) {
        let dir = if lam < 0.0 { Direction::Backward } else { Direction::Forward };
        for s in [1.0, -1.0] {
            let x = [saddle.xi[0] + s * h * v[0], saddle.xi[1] + s * h * v[1]];
            if x[0] >= 0.0 && x[1] >= 0.0 {
                seeds.push((x, dir));
            }
        }
    }
    seeds.into_par_iter().map(|(x, d)| integrate_in(ctx, x, d)).collect()
}

pub fn separatrices(sys: &ReducedSystem, mu: ParamPoint, saddle: &Equilibrium) -> Result<Vec<Trajectory>> {
    separatrices_in(&FlowContext::new(sys, mu)?, saddle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portrait {
    pub mu: ParamPoint,
    pub window: StateWindow,
    pub equilibria: Vec<Equilibrium>,
    pub trajectories: Vec<Trajectory>,
    pub separatrices: Vec<Trajectory>,
}

impl Portrait {
    /// Number of lattice trajectories ending at each label.
    pub fn terminal_counts(&self) -> Vec<(String, usize)> {
        let mut counts: Vec<(String, usize)> = Vec::new();
        for t in &self.trajectories {
            let name = t.terminal.name();
            match counts.iter_mut().find(|c| c.0 == name) {
                Some(c) => c.1 += 1,
                None => counts.push((name, 1)),
            }
        }
        counts.sort();
        counts
    }

    pub fn min_coordinate(&self) -> f64 {
        self.trajectories.iter().chain(&self.separatrices).map(Trajectory::min_coordinate).fold(f64::INFINITY, f64::min)
    }
}

/// Forward trajectories from a `grid x grid` lattice of cell centres plus all separatrices of proper saddles.
pub fn portrait(sys: &ReducedSystem, mu: ParamPoint, grid: usize) -> Result<Portrait> {
    if mu.norm() == 0.0 {
        return Err(Error::InvalidArgument("portrait needs mu != 0".into()));
    }
    let ctx = FlowContext::new(sys, mu)?;
    let set = find_equilibria(sys, mu)?;
    let w = ctx.window.side;
    let starts: Vec<State> = (0..grid * grid)
        .map(|c| {
            let (i, j) = (c / grid, c % grid);
            [(i as f64 + 0.5) / grid as f64 * w, (j as f64 + 0.5) / grid as f64 * w]
        })
        .collect();
    let trajectories = starts
        .into_par_iter()
        .map(|x| integrate_in(&ctx, x, Direction::Forward))
        .collect::<Result<Vec<_>>>()?;
    let mut seps = Vec::new();
    for e in set.equilibria.iter().filter(|e| e.proper && !e.trivial && e.kind == Kind::Saddle) {
        seps.extend(separatrices_in(&ctx, e)?);
    }
    Ok(Portrait { mu, window: ctx.window, equilibria: set.equilibria, trajectories, separatrices: seps })
}

/// CSV rows `t,xi1,xi2,trajectory_id,terminal`; separatrices follow the lattice trajectories.
pub fn write_csv<W: Write>(out: &mut W, p: &Portrait) -> std::io::Result<()> {
    writeln!(out, "t,xi1,xi2,trajectory_id,terminal")?;
    for (id, tr) in p.trajectories.iter().chain(&p.separatrices).enumerate() {
        let term = tr.terminal.name();
        for (t, x) in &tr.points {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{},{}", t, x[0], x[1], id, term)?;
        }
    }
    Ok(())
}

fn color(t: &Terminal) -> &'static str {
    match t {
        Terminal::Converged(Label::E0) => "#1f77b4",
        Terminal::Converged(Label::E1) | Terminal::Converged(Label::E11) => "#ff7f0e",
        Terminal::Converged(Label::E12) => "#bcbd22",
        Terminal::Converged(Label::E2) | Terminal::Converged(Label::E21) => "#2ca02c",
        Terminal::Converged(Label::E22) => "#17becf",
        Terminal::Converged(Label::E3) => "#d62728",
        Terminal::LeftWindow => "#7f7f7f",
        Terminal::MaxTime => "#9467bd",
    }
}

/// Deterministic SVG: fixed canvas, fixed palette, coordinates rounded to 0.01 px.
pub fn render_svg(p: &Portrait) -> String {
    const SIZE: f64 = 600.0;
    const PAD: f64 = 20.0;
    let w = p.window.side;
    let px = |x: State| {
        let sx = PAD + (x[0] / w).clamp(-0.05, 2.0) * (SIZE - 2.0 * PAD);
        let sy = SIZE - PAD - (x[1] / w).clamp(-0.05, 2.0) * (SIZE - 2.0 * PAD);
        (sx, sy)
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M {PAD} {} L {} {} M {PAD} {} L {PAD} {PAD}" stroke="black" stroke-width="1" fill="none"/>"#,
        SIZE - PAD,
        SIZE - PAD,
        SIZE - PAD,
        SIZE - PAD
    );
    let mut poly = |tr: &Trajectory, width: f64| {
        let pts: Vec<String> = tr
            .points
            .iter()
            .map(|(_, x)| {
                let (a, b) = px(*x);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{}" stroke-width="{width}" fill="none"/>"#,
            pts.join(" "),
            color(&tr.terminal)
        );
    };
    for tr in &p.trajectories {
        poly(tr, 0.6);
    }
    for tr in &p.separatrices {
        poly(tr, 2.0);
    }
    for e in p.equilibria.iter().filter(|e| e.proper && !e.trivial) {
        let (a, b) = px(e.xi);
        let fill = match e.kind {
            k if k.is_attractor() => "black",
            Kind::Saddle => "#888888",
            _ => "white",
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{a:.2}" cy="{b:.2}" r="4" fill="{fill}" stroke="black"><title>{} {:?}</title></circle>"#,
            e.label, e.kind
        );
    }
    s.push_str("</svg>\n");
    s
}
