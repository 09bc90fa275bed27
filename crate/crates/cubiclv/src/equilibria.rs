//! Equilibria near the origin: closed-form axis roots, Newton-refined interior root, eigen-classification.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    jacobian_with, rates_jacobian_with, rates_with, CoeffValues, Degeneracy, Mat2, ParamPoint, ReducedSystem, State,
    DIVISION_FLOOR, ZERO_TOL,
};

pub const NEWTON_MAX_ITER: usize = 25;

pub fn tol_proper(mu: ParamPoint) -> f64 {
    1e-9 * mu.norm()
}

pub fn tol_collide(mu: ParamPoint) -> f64 {
    1e-7 * mu.norm()
}

pub fn tol_eig(mu: ParamPoint) -> f64 {
    1e-9 * mu.norm()
}

pub fn newton_tol(mu: ParamPoint) -> f64 {
    1e-13 * (1.0 + mu.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    E0,
    E1,
    E2,
    E3,
    E11,
    E12,
    E21,
    E22,
}

impl Label {
    pub fn name(&self) -> &'static str {
        match self {
            Label::E0 => "E0",
            Label::E1 => "E1",
            Label::E2 => "E2",
            Label::E3 => "E3",
            Label::E11 => "E11",
            Label::E12 => "E12",
            Label::E21 => "E21",
            Label::E22 => "E22",
        }
    }

    /// Which axis the equilibrium lives on: 0 for the xi1-axis, 1 for the xi2-axis.
    pub fn axis(&self) -> Option<usize> {
        match self {
            Label::E1 | Label::E11 | Label::E12 => Some(0),
            Label::E2 | Label::E21 | Label::E22 => Some(1),
            _ => None,
        }
    }

    /// Equilibrium labels carried by each degeneracy class, in table row order.
    pub fn family(class: Degeneracy) -> &'static [Label] {
        match class {
            Degeneracy::NonDegenerate => &[Label::E0, Label::E1, Label::E2, Label::E3],
            Degeneracy::DeltaZero => &[Label::E0, Label::E1, Label::E21, Label::E22, Label::E3],
            Degeneracy::ThetaZero => &[Label::E0, Label::E11, Label::E12, Label::E2, Label::E3],
            Degeneracy::DoublyDegenerate => &[],
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Saddle,
    AttractorNode,
    AttractorFocus,
    RepellerNode,
    RepellerFocus,
    Degenerate,
}

impl Kind {
    pub fn is_attractor(&self) -> bool {
        matches!(self, Kind::AttractorNode | Kind::AttractorFocus)
    }

    pub fn is_repeller(&self) -> bool {
        matches!(self, Kind::RepellerNode | Kind::RepellerFocus)
    }

    /// Table alphabet: `s`, `a`, `r`, or `0` for a degenerate point.
    pub fn letter(&self) -> char {
        match self {
            Kind::Saddle => 's',
            Kind::AttractorNode | Kind::AttractorFocus => 'a',
            Kind::RepellerNode | Kind::RepellerFocus => 'r',
            Kind::Degenerate => '0',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    /// For axis points the along-axis eigenvalue comes first.
    pub eigenvalues: [Complex64; 2],
    pub kind: Kind,
    /// Half the Jacobian trace.
    pub trace_half: f64,
    pub det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub label: Label,
    pub xi: State,
    pub jacobian: Mat2,
    pub eigenvalues: [Complex64; 2],
    pub kind: Kind,
    pub proper: bool,
    pub trivial: bool,
    pub residual: f64,
}

impl Equilibrium {
    pub fn lambda(&self, k: usize) -> f64 {
        self.eigenvalues[k].re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Note {
    /// Interior Newton refinement failed; the interior point is reported absent.
    NewtonDivergence { residual: f64 },
    DegenerateCase(String),
    /// A coordinate sits inside the properness band.
    BoundaryCase(Label),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    pub mu: ParamPoint,
    pub equilibria: Vec<Equilibrium>,
    pub notes: Vec<Note>,
}

impl EquilibriumSet {
    pub fn get(&self, label: Label) -> Option<&Equilibrium> {
        self.equilibria.iter().find(|e| e.label == label)
    }
}

/// Eigen-decomposition by the closed 2x2 formula, with exact diagonal readout for triangular Jacobians.
pub fn classify_jacobian(j: &Mat2, xi: State, tol: f64) -> Classification {
    let trace_half = 0.5 * (j[0][0] + j[1][1]);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let eigenvalues = if j[1][0] == 0.0 && xi[1] == 0.0 {
        [Complex64::new(j[0][0], 0.0), Complex64::new(j[1][1], 0.0)]
    } else if j[0][1] == 0.0 && xi[0] == 0.0 {
        [Complex64::new(j[1][1], 0.0), Complex64::new(j[0][0], 0.0)]
    } else {
        let half_diff = 0.5 * (j[0][0] - j[1][1]);
        let disc = half_diff * half_diff + j[0][1] * j[1][0];
        if disc >= 0.0 {
            let s = disc.sqrt();
            // Larger-magnitude root first, the other from the product.
            let big = if trace_half >= 0.0 { trace_half + s } else { trace_half - s };
            let small = if big != 0.0 { det / big } else { 0.0 };
            let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
            [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
        } else {
            let w = (-disc).sqrt();
            [Complex64::new(trace_half, w), Complex64::new(trace_half, -w)]
        }
    };
    let (a, b) = (eigenvalues[0], eigenvalues[1]);
    let kind = if a.re.abs() <= tol || b.re.abs() <= tol {
        Kind::Degenerate
    } else if a.im != 0.0 {
        if a.re < 0.0 {
            Kind::AttractorFocus
        } else {
            Kind::RepellerFocus
        }
    } else if a.re * b.re < 0.0 {
        Kind::Saddle
    } else if a.re < 0.0 {
        Kind::AttractorNode
    } else {
        Kind::RepellerNode
    };
    Classification { eigenvalues, kind, trace_half, det }
}

pub fn classify(sys: &ReducedSystem, mu: ParamPoint, xi: State) -> Classification {
    classify_jacobian(&sys.eval_jacobian(mu, xi), xi, tol_eig(mu))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPolyIdentities {
    pub p_formula: f64,
    pub det_l_formula: f64,
    pub trace_half_direct: f64,
    pub det_direct: f64,
}

/// The five quadratic corrections of the interior determinant.
pub fn det_l_coefficients(c: &CoeffValues) -> [f64; 5] {
    [
        2.0 * c.n * c.delta - c.m / c.gamma + c.s * c.theta - 2.0 * c.r * c.gamma,
        c.m * c.delta - c.s * c.gamma + 2.0 * c.p * c.theta - 2.0 * c.l_coeff / c.gamma,
        -2.0 * (c.m * c.r - c.n * c.s),
        -4.0 * (c.l_coeff * c.r - c.n * c.p),
        -2.0 * (c.l_coeff * c.s - c.m * c.p),
    ]
}

pub fn char_poly_identities(sys: &ReducedSystem, mu: ParamPoint, e3: &Equilibrium) -> CharPolyIdentities {
    let c = sys.coeffs_at(mu);
    let [x, y] = e3.xi;
    let p_formula = 0.5 * (x * c.theta + y * c.delta)
        + 0.5 * (x * (c.m * y + 2.0 * c.n * x) + y * (2.0 * c.p * y + c.s * x));
    let k = det_l_coefficients(&c);
    let det_l_formula =
        x * y * (c.theta * c.delta - 1.0 + k[0] * x + k[1] * y + k[2] * x * x + k[3] * x * y + k[4] * y * y);
    let j = sys.eval_jacobian(mu, e3.xi);
    CharPolyIdentities {
        p_formula,
        det_l_formula,
        trace_half_direct: 0.5 * (j[0][0] + j[1][1]),
        det_direct: j[0][0] * j[1][1] - j[0][1] * j[1][0],
    }
}

// ---------------------------------------------------------------------------
// Seeds

/// Leading-order coordinates of each equilibrium; `None` where the label does not apply.
pub fn seed(sys: &ReducedSystem, mu: ParamPoint, label: Label) -> Option<State> {
    let theta = sys.theta.at_origin();
    let delta = sys.delta.at_origin();
    let gamma = sys.gamma.at_origin();
    let (m1, m2) = (mu.mu1, mu.mu2);
    match (sys.degeneracy, label) {
        (_, Label::E0) => Some([0.0, 0.0]),
        (Degeneracy::NonDegenerate, Label::E1) | (Degeneracy::DeltaZero, Label::E1) => Some([-m1 / theta, 0.0]),
        (Degeneracy::NonDegenerate, Label::E2) | (Degeneracy::ThetaZero, Label::E2) => Some([0.0, -m2 / delta]),
        (Degeneracy::NonDegenerate, Label::E3) => {
            let d = theta * delta - 1.0;
            Some([(-delta * m1 + gamma * m2) / d, (m1 - theta * gamma * m2) / (gamma * d)])
        }
        (Degeneracy::DeltaZero, Label::E3) => {
            let delta1 = sys.delta.get(1, 0);
            let p = sys.p.at_origin();
            Some([-gamma * m2 + (delta1 * gamma - p) * m1 * m1 / gamma, -m1 / gamma + theta * m2])
        }
        (Degeneracy::ThetaZero, Label::E3) => {
            let theta2 = sys.theta.get(0, 1);
            let n = sys.n.at_origin();
            Some([delta * m1 - gamma * m2, -m1 / gamma + (theta2 - n * gamma) * m2 * m2])
        }
        (Degeneracy::DeltaZero, Label::E21 | Label::E22) => {
            let c = sys.coeffs_at(mu);
            quadratic_pair(c.p, c.delta, m2).map(|(hi, lo)| [0.0, if label == Label::E21 { hi } else { lo }])
        }
        (Degeneracy::ThetaZero, Label::E11 | Label::E12) => {
            let c = sys.coeffs_at(mu);
            quadratic_pair(c.n, c.theta, m1).map(|(hi, lo)| [if label == Label::E11 { hi } else { lo }, 0.0])
        }
        _ => None,
    }
}

/// Roots `((-b + sqrt D)/2a, (-b - sqrt D)/2a)` of `a x^2 + b x + c`, computed without cancellation.
/// A discriminant negative only by rounding is clamped to zero.
pub fn quadratic_pair(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a.abs() < DIVISION_FLOOR {
        return None;
    }
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc >= -1e-12 * (b * b + (4.0 * a * c).abs()) {
            disc = 0.0;
        } else {
            return None;
        }
    }
    let sq = disc.sqrt();
    let (plus, minus) = if b >= 0.0 {
        let q = -0.5 * (b + sq);
        if q == 0.0 {
            (0.0, 0.0)
        } else {
            (c / q, q / a)
        }
    } else {
        let q = 0.5 * (-b + sq);
        (q / a, c / q)
    };
    Some((plus, minus))
}

/// Root of `a x^2 + b x + c` that vanishes with `c`, plus the other root when it exists.
fn small_root(a: f64, b: f64, c: f64) -> Option<(f64, Option<f64>)> {
    if a.abs() < DIVISION_FLOOR {
        if b == 0.0 {
            return None;
        }
        return Some((-c / b, None));
    }
    let (plus, minus) = quadratic_pair(a, b, c)?;
    if plus.abs() <= minus.abs() {
        Some((plus, Some(minus)))
    } else {
        Some((minus, Some(plus)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub xi: State,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn norm_inf(v: State) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Damped Newton on the interior equations `g1 = g2 = 0`.
pub fn newton_interior(sys: &ReducedSystem, mu: ParamPoint, start: State) -> NewtonOutcome {
    let c = sys.coeffs_at(mu);
    let tol = newton_tol(mu);
    let mut x = start;
    let mut r = norm_inf(rates_with(&c, mu, x));
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER && r > 0.0 {
        iterations += 1;
        let g = rates_with(&c, mu, x);
        let j = rates_jacobian_with(&c, x);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step = [
            -(j[1][1] * g[0] - j[0][1] * g[1]) / det,
            -(-j[1][0] * g[0] + j[0][0] * g[1]) / det,
        ];
        let mut lambda = 1.0;
        let (mut xn, mut rn);
        loop {
            xn = [x[0] + lambda * step[0], x[1] + lambda * step[1]];
            rn = norm_inf(rates_with(&c, mu, xn));
            if rn <= r || lambda < 1e-4 {
                break;
            }
            lambda *= 0.5;
        }
        let moved = lambda * norm_inf(step);
        x = xn;
        r = rn;
        if moved <= 4.0 * f64::EPSILON * norm_inf(x) || (r <= tol && moved <= 1e-15 * (norm_inf(x) + mu.norm())) {
            break;
        }
    }
    NewtonOutcome { xi: x, iterations, residual: r, converged: r <= tol && x.iter().all(|v| v.is_finite()) }
}

// ---------------------------------------------------------------------------

fn build(c: &CoeffValues, mu: ParamPoint, label: Label, xi: State, residual: f64) -> Equilibrium {
    let jacobian = jacobian_with(c, mu, xi);
    let cl = classify_jacobian(&jacobian, xi, tol_eig(mu));
    let tp = tol_proper(mu);
    Equilibrium {
        label,
        xi,
        jacobian,
        eigenvalues: cl.eigenvalues,
        kind: cl.kind,
        proper: xi[0] >= -tp && xi[1] >= -tp,
        trivial: false,
        residual,
    }
}

/// All equilibria in the O(|mu|) neighbourhood of the origin.
pub fn find_equilibria(sys: &ReducedSystem, mu: ParamPoint) -> Result<EquilibriumSet> {
    if sys.degeneracy == Degeneracy::DoublyDegenerate {
        return Err(Error::UnsupportedCase(
            "theta(0) = delta(0) = 0 is outside the analysed classes".into(),
        ));
    }
    let c = sys.coeffs_at(mu);
    let mut notes = Vec::new();
    let mut out = vec![build(&c, mu, Label::E0, [0.0, 0.0], 0.0)];
    if mu.mu1 == 0.0 && mu.mu2 == 0.0 {
        return Ok(EquilibriumSet { mu, equilibria: out, notes });
    }

    let axis_residual = |axis: usize, v: f64| {
        let xi = if axis == 0 { [v, 0.0] } else { [0.0, v] };
        rates_with(&c, mu, xi)[axis].abs()
    };
    let push_axis = |out: &mut Vec<Equilibrium>, label: Label, v: f64| {
        let axis = label.axis().expect("axis label");
        let xi = if axis == 0 { [v, 0.0] } else { [0.0, v] };
        out.push(build(&c, mu, label, xi, axis_residual(axis, v)));
    };
    let single = |out: &mut Vec<Equilibrium>, label: Label, a: f64, b: f64, cc: f64| -> Result<()> {
        if let Some((small, other)) = small_root(a, b, cc) {
            if let Some(big) = other {
                if small != 0.0 && big.abs() < 10.0 * small.abs() {
                    return Err(Error::AmbiguousLabel(label.to_string()));
                }
            }
            push_axis(out, label, small);
        }
        Ok(())
    };

    match sys.degeneracy {
        Degeneracy::NonDegenerate => {
            single(&mut out, Label::E1, c.n, c.theta, mu.mu1)?;
            single(&mut out, Label::E2, c.p, c.delta, mu.mu2)?;
        }
        Degeneracy::DeltaZero => {
            single(&mut out, Label::E1, c.n, c.theta, mu.mu1)?;
            match quadratic_pair(c.p, c.delta, mu.mu2) {
                Some((hi, lo)) => {
                    push_axis(&mut out, Label::E21, hi);
                    push_axis(&mut out, Label::E22, lo);
                }
                None if c.p.abs() < DIVISION_FLOOR && c.delta != 0.0 => {
                    push_axis(&mut out, Label::E21, -mu.mu2 / c.delta);
                }
                None => {}
            }
        }
        Degeneracy::ThetaZero => {
            match quadratic_pair(c.n, c.theta, mu.mu1) {
                Some((hi, lo)) => {
                    push_axis(&mut out, Label::E11, hi);
                    push_axis(&mut out, Label::E12, lo);
                }
                None if c.n.abs() < DIVISION_FLOOR && c.theta != 0.0 => {
                    push_axis(&mut out, Label::E11, -mu.mu1 / c.theta);
                }
                None => {}
            }
            single(&mut out, Label::E2, c.p, c.delta, mu.mu2)?;
        }
        Degeneracy::DoublyDegenerate => unreachable!(),
    }

    let skip_interior = sys.degeneracy == Degeneracy::NonDegenerate
        && (sys.theta.at_origin() * sys.delta.at_origin() - 1.0).abs() < ZERO_TOL;
    if skip_interior {
        notes.push(Note::DegenerateCase("theta*delta - 1 = 0: interior equilibrium not isolated".into()));
    } else {
        let start = seed(sys, mu, Label::E3).expect("interior seed");
        let nw = newton_interior(sys, mu, start);
        if nw.converged {
            out.push(build(&c, mu, Label::E3, nw.xi, nw.residual));
        } else {
            notes.push(Note::NewtonDivergence { residual: nw.residual });
        }
    }

    let tc = tol_collide(mu);
    for a in 0..out.len() {
        for b in a + 1..out.len() {
            let d = (out[a].xi[0] - out[b].xi[0]).hypot(out[a].xi[1] - out[b].xi[1]);
            if d < tc {
                out[a].trivial = true;
                out[b].trivial = true;
            }
        }
    }
    let tp = tol_proper(mu);
    for e in &out {
        if e.label == Label::E0 {
            continue;
        }
        let in_band = match e.label.axis() {
            Some(axis) => e.xi[axis].abs() <= tp,
            None => e.xi[0].abs() <= tp || e.xi[1].abs() <= tp,
        };
        if in_band && !e.trivial {
            notes.push(Note::BoundaryCase(e.label));
        }
    }
    Ok(EquilibriumSet { mu, equilibria: out, notes })
}
