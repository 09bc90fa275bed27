//! Brute-force cross-checks: finite-difference Jacobians, lattice root search and angular signature scans.
//!
//! None of these use the seed formulas or curve tracing, so agreement with the primary paths is evidence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{find_equilibria, Kind};
use crate::error::{Error, Result};
use crate::model::{Mat2, ParamPoint, ReducedSystem, State};
use crate::regions::{decompose, signature};

pub fn fd_jacobian(sys: &ReducedSystem, mu: ParamPoint, xi: State) -> Mat2 {
    let h = 1e-6 * (1.0 + xi[0].hypot(xi[1]));
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let mut p = xi;
        let mut m = xi;
        p[k] += h;
        m[k] -= h;
        let (fp, fm) = (sys.eval_field(mu, p), sys.eval_field(mu, m));
        for i in 0..2 {
            j[i][k] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: State,
    pub hi: State,
}

impl Window {
    pub fn square(half: f64) -> Self {
        Self { lo: [-half, -half], hi: [half, half] }
    }

    pub fn size(&self) -> f64 {
        (self.hi[0] - self.lo[0]).max(self.hi[1] - self.lo[1])
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn changes(signs: &[i8]) -> bool {
    signs.contains(&0) || (signs.contains(&1) && signs.contains(&-1))
}

/// Both rate factors change sign (or vanish) among the four corners.
fn straddles(sys: &ReducedSystem, mu: ParamPoint, x0: f64, y0: f64, h: f64) -> bool {
    let corners = [[x0, y0], [x0 + h, y0], [x0, y0 + h], [x0 + h, y0 + h]];
    let vals: Vec<State> = corners.iter().map(|c| sys.rates(mu, *c)).collect();
    (0..2).all(|k| changes(&vals.iter().map(|v| sign(v[k])).collect::<Vec<_>>()))
}

fn refine(sys: &ReducedSystem, mu: ParamPoint, x0: f64, y0: f64, h: f64, floor: f64, out: &mut Vec<State>) {
    if !straddles(sys, mu, x0, y0, h) {
        return;
    }
    if h <= floor {
        out.push([x0 + 0.5 * h, y0 + 0.5 * h]);
        return;
    }
    let g = 0.5 * h;
    for (dx, dy) in [(0.0, 0.0), (g, 0.0), (0.0, g), (g, g)] {
        refine(sys, mu, x0 + dx, y0 + dy, g, floor, out);
    }
}

/// Sign-change scan of one rate factor along its invariant axis, bisected to `floor`.
#[allow(clippy::too_many_arguments)]
fn axis_roots(sys: &ReducedSystem, mu: ParamPoint, axis: usize, lo: f64, hi: f64, n: usize, off: f64, floor: f64) -> Vec<State> {
    let point = |t: f64| if axis == 0 { [t, 0.0] } else { [0.0, t] };
    let g = |t: f64| sys.rates(mu, point(t))[axis];
    let h = (hi - lo) / n as f64;
    let mut out = Vec::new();
    for i in 0..=n {
        let (mut a, mut b) = (lo - off + i as f64 * h, lo - off + (i + 1) as f64 * h);
        let (mut ga, gb) = (g(a), g(b));
        if sign(ga) * sign(gb) > 0 {
            continue;
        }
        while b - a > floor {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if sign(gm) == 0 {
                a = m;
                b = m;
                break;
            }
            if sign(ga) * sign(gm) <= 0 {
                b = m;
            } else {
                a = m;
                ga = gm;
            }
        }
        out.push(point(0.5 * (a + b)));
    }
    out
}

/// Roots of the field inside `window` found by sign-change scans, without any closed-form seeds.
///
/// The field factors as `(xi1 g1, xi2 g2)`, so roots are the origin, zeros of `g1` on the
/// `xi1`-axis, zeros of `g2` on the `xi2`-axis, and common zeros of `(g1, g2)`. The last set
/// comes from an `n x n` corner-sign lattice with quadtree refinement, the axis sets from
/// bisection on `n` intervals. The lattice is shifted by a seeded sub-cell offset.
pub fn grid_equilibria(sys: &ReducedSystem, mu: ParamPoint, window: Window, n: usize, seed: u64) -> Result<Vec<State>> {
    if n == 0 || n > 2000 {
        return Err(Error::InvalidArgument(format!("grid size {n} outside 1..=2000")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = window.size() / n as f64;
    let off = [rng.gen_range(0.1..0.9) * h, rng.gen_range(0.1..0.9) * h];
    let floor = 1e-12 * window.size();
    let mut raw: Vec<State> = (0..(n + 1) * (n + 1))
        .into_par_iter()
        .flat_map_iter(|c| {
            let (i, j) = (c / (n + 1), c % (n + 1));
            let x0 = window.lo[0] - off[0] + i as f64 * h;
            let y0 = window.lo[1] - off[1] + j as f64 * h;
            let mut out = Vec::new();
            refine(sys, mu, x0, y0, h, floor, &mut out);
            out
        })
        .collect();
    raw.push([0.0, 0.0]);
    raw.extend(axis_roots(sys, mu, 0, window.lo[0], window.hi[0], n, off[0], floor));
    raw.extend(axis_roots(sys, mu, 1, window.lo[1], window.hi[1], n, off[1], floor));
    let merge = 1e3 * floor;
    let mut roots: Vec<State> = Vec::new();
    for p in raw {
        let inside = (0..2).all(|k| p[k] >= window.lo[k] && p[k] <= window.hi[k]);
        if inside && !roots.iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) < merge) {
            roots.push(p);
        }
    }
    roots.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok(roots)
}

/// Window `[-3m, 3m]^2` around every small equilibrium the primary path reports.
pub fn default_window(sys: &ReducedSystem, mu: ParamPoint) -> Result<Window> {
    let set = find_equilibria(sys, mu)?;
    let m = set
        .equilibria
        .iter()
        .map(|e| e.xi[0].abs().max(e.xi[1].abs()))
        .fold(mu.norm(), f64::max);
    Ok(Window::square(3.0 * m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootComparison {
    pub primary: Vec<State>,
    pub oracle: Vec<State>,
    pub unmatched_primary: Vec<State>,
    pub unmatched_oracle: Vec<State>,
}

impl RootComparison {
    pub fn agrees(&self) -> bool {
        self.unmatched_primary.is_empty() && self.unmatched_oracle.is_empty()
    }
}

/// Distinct primary roots (proper and virtual) against the lattice roots, matched within `tol`.
pub fn compare_roots(sys: &ReducedSystem, mu: ParamPoint, n: usize, seed: u64, tol: f64) -> Result<RootComparison> {
    let set = find_equilibria(sys, mu)?;
    let mut primary: Vec<State> = Vec::new();
    for e in &set.equilibria {
        if !primary.iter().any(|q| (e.xi[0] - q[0]).hypot(e.xi[1] - q[1]) < tol) {
            primary.push(e.xi);
        }
    }
    let oracle = grid_equilibria(sys, mu, default_window(sys, mu)?, n, seed)?;
    let near = |a: &State, set: &[State]| set.iter().any(|b| (a[0] - b[0]).hypot(a[1] - b[1]) < tol);
    Ok(RootComparison {
        unmatched_primary: primary.iter().filter(|p| !near(p, &oracle)).copied().collect(),
        unmatched_oracle: oracle.iter().filter(|p| !near(p, &primary)).copied().collect(),
        primary,
        oracle,
    })
}

/// Angles clustered toward the coordinate axes, where parabolic sectors are only `O(r)` wide.
pub fn scan_angles(n_angles: usize) -> Vec<f64> {
    let m = n_angles / 4;
    let (eps, p) = (1e-6, 3.0);
    let mut out = Vec::with_capacity(4 * m);
    for q in 0..4 {
        for k in 0..m {
            let u = (k as f64 + 0.5) / m as f64;
            let b = u.powf(p) / (u.powf(p) + (1.0 - u).powf(p));
            out.push(q as f64 * std::f64::consts::FRAC_PI_2 + std::f64::consts::FRAC_PI_2 * (eps + (1.0 - 2.0 * eps) * b));
        }
    }
    out
}

/// Signature at each scan angle; `None` where a proper equilibrium is degenerate or the solve fails.
pub fn sign_scan(sys: &ReducedSystem, r: f64, n_angles: usize) -> Result<Vec<(f64, Option<String>)>> {
    if r <= 0.0 {
        return Err(Error::InvalidArgument("scan radius must be positive".into()));
    }
    if n_angles < 720 {
        return Err(Error::InvalidArgument(format!("{n_angles} angles; at least 720 required")));
    }
    Ok(scan_angles(n_angles)
        .into_par_iter()
        .map(|a| {
            let sig = find_equilibria(sys, ParamPoint::polar(r, a)).ok().and_then(|set| {
                let degenerate = set.equilibria.iter().any(|e| e.proper && !e.trivial && e.kind == Kind::Degenerate);
                (!degenerate).then(|| signature(&set, sys.degeneracy))
            });
            (a, sig)
        })
        .collect())
}

/// Cyclic run-length encoding: equal neighbours merge, including across the `2 pi` seam.
pub fn cyclic_rle<I: IntoIterator<Item = String>>(seq: I) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in seq {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

pub fn scan_rle(scan: &[(f64, Option<String>)]) -> Vec<String> {
    cyclic_rle(scan.iter().filter_map(|(_, s)| s.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorComparison {
    pub scan_blocks: Vec<String>,
    pub sector_blocks: Vec<String>,
}

impl SectorComparison {
    /// Same cyclic sequence up to rotation.
    pub fn agrees(&self) -> bool {
        let (a, b) = (&self.scan_blocks, &self.sector_blocks);
        if a.len() != b.len() {
            return false;
        }
        if a.is_empty() {
            return true;
        }
        (0..a.len()).any(|k| (0..a.len()).all(|i| a[(i + k) % a.len()] == b[i]))
    }
}

pub fn compare_sectors(sys: &ReducedSystem, r: f64, n_angles: usize) -> Result<SectorComparison> {
    let scan = sign_scan(sys, r, n_angles)?;
    let sectors = decompose(sys, r)?;
    Ok(SectorComparison {
        scan_blocks: scan_rle(&scan),
        sector_blocks: cyclic_rle(sectors.into_iter().map(|s| s.signature)),
    })
}
