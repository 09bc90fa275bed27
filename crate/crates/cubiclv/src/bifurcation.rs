//! Bifurcation curves near the origin of the parameter disk, Sotomayor quantities and collision checks.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::equilibria::{find_equilibria, newton_interior, seed, tol_collide, tol_eig, Kind, Label};
use crate::error::{Error, Result};
use crate::model::{Degeneracy, Mat2, ParamPoint, ReducedSystem, State, ZERO_TOL};

pub fn curve_tol(mu: ParamPoint) -> f64 {
    1e-12 * (1.0 + mu.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveKind {
    T1,
    T2,
    T3,
    T3plus,
    T4,
    T4plus,
    DBranchNeg,
    DBranchPos,
    H,
    Xplus,
    Xminus,
    Yplus,
    Yminus,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CurveKind::T1 => "T1",
            CurveKind::T2 => "T2",
            CurveKind::T3 => "T3",
            CurveKind::T3plus => "T3+",
            CurveKind::T4 => "T4",
            CurveKind::T4plus => "T4+",
            CurveKind::DBranchNeg => "D-",
            CurveKind::DBranchPos => "D+",
            CurveKind::H => "H",
            CurveKind::Xplus => "X+",
            CurveKind::Xminus => "X-",
            CurveKind::Yplus => "Y+",
            CurveKind::Yminus => "Y-",
        };
        f.write_str(s)
    }
}

pub const AXES: [CurveKind; 4] = [CurveKind::Xplus, CurveKind::Yplus, CurveKind::Xminus, CurveKind::Yminus];

impl CurveKind {
    pub fn admissible(&self, class: Degeneracy) -> bool {
        use CurveKind::*;
        match class {
            Degeneracy::NonDegenerate => matches!(self, T1 | T2 | H | Xplus | Xminus | Yplus | Yminus),
            Degeneracy::DeltaZero => {
                matches!(self, T1 | T3 | T3plus | DBranchNeg | DBranchPos | Xplus | Xminus | Yplus | Yminus)
            }
            Degeneracy::ThetaZero => {
                matches!(self, T2 | T4 | T4plus | DBranchNeg | DBranchPos | Xplus | Xminus | Yplus | Yminus)
            }
            Degeneracy::DoublyDegenerate => false,
        }
    }

    /// Every admissible kind for a class, in a fixed order.
    pub fn all_for(class: Degeneracy) -> Vec<CurveKind> {
        use CurveKind::*;
        [Xplus, Yplus, Xminus, Yminus, T1, T2, T3, T3plus, T4, T4plus, DBranchNeg, DBranchPos, H]
            .into_iter()
            .filter(|k| k.admissible(class))
            .collect()
    }

    pub fn is_axis(&self) -> bool {
        AXES.contains(self)
    }

    fn is_d(&self) -> bool {
        matches!(self, CurveKind::DBranchNeg | CurveKind::DBranchPos)
    }

    /// Index of the parameter that parametrises the curve: the other one is solved for.
    pub fn abscissa(&self, class: Degeneracy) -> usize {
        use CurveKind::*;
        match self {
            T1 | T3 | T3plus | H | Xplus | Xminus => 0,
            T2 | T4 | T4plus | Yplus | Yminus => 1,
            DBranchNeg | DBranchPos => {
                if class == Degeneracy::ThetaZero {
                    1
                } else {
                    0
                }
            }
        }
    }

    /// Parameter whose variation crosses the curve transversally.
    pub fn bifurcation_parameter(&self, class: Degeneracy) -> usize {
        1 - self.abscissa(class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub mu: ParamPoint,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub kind: CurveKind,
    pub class: Degeneracy,
    /// Fitted leading-order coefficient (`mu2/mu1` for lines, `mu_b/mu_a^2` for parabolas).
    pub leading: Option<f64>,
    pub predicted_leading: Option<f64>,
    pub samples: Vec<CurveSample>,
    pub halfline_constraint: String,
    pub notes: Vec<String>,
}

struct Leading {
    theta: f64,
    gamma: f64,
    delta: f64,
    delta1: f64,
    theta2: f64,
    p: f64,
    n: f64,
}

fn leading_values(sys: &ReducedSystem) -> Leading {
    Leading {
        theta: sys.theta.at_origin(),
        gamma: sys.gamma.at_origin(),
        delta: sys.delta.at_origin(),
        delta1: sys.delta.get(1, 0),
        theta2: sys.theta.get(0, 1),
        p: sys.p.at_origin(),
        n: sys.n.at_origin(),
    }
}

/// Coefficient of the displayed leading-order expansion.
pub fn predicted_leading(sys: &ReducedSystem, kind: CurveKind) -> Option<f64> {
    let c = leading_values(sys);
    let class = sys.degeneracy;
    use CurveKind::*;
    match kind {
        T1 => Some(1.0 / (c.theta * c.gamma)),
        T2 => Some(c.delta / c.gamma),
        H => {
            let den = c.theta * c.gamma * (c.gamma - c.delta);
            (den.abs() > ZERO_TOL && (c.theta * c.gamma - 1.0).abs() > ZERO_TOL)
                .then(|| (c.theta * c.gamma - 1.0) * c.delta / den)
        }
        T3 | T3plus => Some((c.delta1 * c.gamma - c.p) / (c.gamma * c.gamma)),
        T4 | T4plus => Some(c.gamma * (c.theta2 - c.n * c.gamma)),
        DBranchNeg | DBranchPos if class == Degeneracy::DeltaZero => Some(c.delta1 * c.delta1 / (4.0 * c.p)),
        DBranchNeg | DBranchPos => Some(c.theta2 * c.theta2 / (4.0 * c.n)),
        _ => None,
    }
}

pub fn halfline_constraint(sys: &ReducedSystem, kind: CurveKind) -> String {
    use CurveKind::*;
    let class = sys.degeneracy;
    match kind {
        T1 => "theta*mu1 < 0".into(),
        T2 => "delta*mu2 < 0".into(),
        T3 => "mu1 < 0".into(),
        T3plus => "mu1 > 0".into(),
        T4 => "mu2 < 0".into(),
        T4plus => "mu2 > 0".into(),
        DBranchNeg if class == Degeneracy::ThetaZero => "mu2 < 0".into(),
        DBranchPos if class == Degeneracy::ThetaZero => "mu2 > 0".into(),
        DBranchNeg => "mu1 < 0".into(),
        DBranchPos => "mu1 > 0".into(),
        H => "none".into(),
        Xplus => "mu2 = 0, mu1 > 0".into(),
        Xminus => "mu2 = 0, mu1 < 0".into(),
        Yplus => "mu1 = 0, mu2 > 0".into(),
        Yminus => "mu1 = 0, mu2 < 0".into(),
    }
}

/// Sign the abscissa must carry, or `None` when both signs are allowed.
fn abscissa_sign(sys: &ReducedSystem, kind: CurveKind) -> Option<f64> {
    use CurveKind::*;
    let c = leading_values(sys);
    match kind {
        T1 => Some(-c.theta.signum()),
        T2 => Some(-c.delta.signum()),
        T3 | T4 | DBranchNeg | Xminus | Yminus => Some(-1.0),
        T3plus | T4plus | DBranchPos | Xplus | Yplus => Some(1.0),
        H => None,
    }
}

fn interior_point(sys: &ReducedSystem, mu: ParamPoint) -> Option<State> {
    let start = seed(sys, mu, Label::E3)?;
    let nw = newton_interior(sys, mu, start);
    nw.converged.then_some(nw.xi)
}

/// Scalar whose zero set is the curve.
pub fn residual(sys: &ReducedSystem, kind: CurveKind, mu: ParamPoint) -> f64 {
    use CurveKind::*;
    let c = sys.coeffs_at(mu);
    match kind {
        Xplus | Xminus => mu.mu2,
        Yplus | Yminus => mu.mu1,
        DBranchNeg | DBranchPos if sys.degeneracy == Degeneracy::ThetaZero => {
            c.theta * c.theta - 4.0 * mu.mu1 * c.n
        }
        DBranchNeg | DBranchPos => c.delta * c.delta - 4.0 * mu.mu2 * c.p,
        T1 | T4 | T4plus => interior_point(sys, mu).map_or(f64::NAN, |x| x[1]),
        T2 | T3 | T3plus => interior_point(sys, mu).map_or(f64::NAN, |x| x[0]),
        H => interior_point(sys, mu).map_or(f64::NAN, |x| {
            let j = sys.eval_jacobian(mu, x);
            0.5 * (j[0][0] + j[1][1])
        }),
    }
}

/// Bisection to full precision on a sign-changing bracket.
fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) || fa * fb > 0.0 {
        return None;
    }
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if !fm.is_finite() {
            return None;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    let (ra, rb) = (f(a).abs(), f(b).abs());
    Some(if ra <= rb { a } else { b })
}

/// Widens a symmetric bracket around `center` until the sign changes, then bisects.
fn bracket_solve(f: &dyn Fn(f64) -> f64, center: f64, w0: f64, wmax: f64) -> Option<f64> {
    let mut w = w0;
    while w <= wmax {
        let (a, b) = (center - w, center + w);
        let (fa, fb) = (f(a), f(b));
        if fa.is_finite() && fb.is_finite() && fa * fb <= 0.0 {
            return bisect(f, a, b);
        }
        w *= 2.0;
    }
    None
}

fn seed_angle(sys: &ReducedSystem, kind: CurveKind, r: f64, h_sign: f64) -> (f64, f64) {
    use CurveKind::*;
    let c = leading_values(sys);
    let k = predicted_leading(sys, kind).unwrap_or(0.0);
    let line = |d: (f64, f64)| (d.1.atan2(d.0), 0.05);
    let para_x = |s: f64| {
        let a = (k * r).atan2(s);
        (a, 0.5 * (k * r).abs().max(1e-3 * r))
    };
    let para_y = |s: f64| {
        let a = s.atan2(k * r);
        (a, 0.5 * (k * r).abs().max(1e-3 * r))
    };
    match kind {
        Xplus => (0.0, 0.0),
        Yplus => (FRAC_PI_2, 0.0),
        Xminus => (PI, 0.0),
        Yminus => (1.5 * PI, 0.0),
        T1 => line((-c.theta * c.gamma, -1.0)),
        T2 => line((-c.gamma, -c.delta)),
        H => line((h_sign, h_sign * k)),
        T3 => para_x(-1.0),
        T3plus => para_x(1.0),
        T4 => para_y(-1.0),
        T4plus => para_y(1.0),
        DBranchNeg | DBranchPos => {
            let s = if kind == DBranchNeg { -1.0 } else { 1.0 };
            if sys.degeneracy == Degeneracy::ThetaZero {
                para_y(s)
            } else {
                para_x(s)
            }
        }
    }
}

/// Curve point on the circle `|mu| = r`; `h_sign` picks the half-line of H.
pub fn point_on_circle(sys: &ReducedSystem, kind: CurveKind, r: f64, h_sign: f64) -> Result<CurveSample> {
    if !kind.admissible(sys.degeneracy) {
        return Err(Error::NotApplicable(kind.to_string()));
    }
    let (phi0, w0) = seed_angle(sys, kind, r, h_sign);
    let mu = if kind.is_axis() {
        // Exact axis points.
        match kind {
            CurveKind::Xplus => ParamPoint::new(r, 0.0),
            CurveKind::Xminus => ParamPoint::new(-r, 0.0),
            CurveKind::Yplus => ParamPoint::new(0.0, r),
            _ => ParamPoint::new(0.0, -r),
        }
    } else {
        let f = |phi: f64| residual(sys, kind, ParamPoint::polar(r, phi));
        let phi = bracket_solve(&f, phi0, w0, 0.6).ok_or(Error::NoRoot { kind: kind.to_string(), radius: r })?;
        ParamPoint::polar(r, phi)
    };
    let sample = CurveSample { mu, residual: residual(sys, kind, mu) };
    if !respects_constraint(sys, kind, mu) {
        return Err(Error::NoRoot { kind: kind.to_string(), radius: r });
    }
    Ok(sample)
}

fn respects_constraint(sys: &ReducedSystem, kind: CurveKind, mu: ParamPoint) -> bool {
    match abscissa_sign(sys, kind) {
        Some(s) => mu.get(kind.abscissa(sys.degeneracy)) * s > 0.0,
        None => true,
    }
}

/// Curve point with a prescribed abscissa (`mu1` for most kinds, `mu2` for T2/T4-type and the mirror D).
pub fn point_at_abscissa(sys: &ReducedSystem, kind: CurveKind, value: f64) -> Result<CurveSample> {
    if !kind.admissible(sys.degeneracy) {
        return Err(Error::NotApplicable(kind.to_string()));
    }
    let a = kind.abscissa(sys.degeneracy);
    if let Some(s) = abscissa_sign(sys, kind) {
        if value * s <= 0.0 {
            return Err(Error::ConstraintViolation(format!(
                "{kind} requires {}",
                halfline_constraint(sys, kind)
            )));
        }
    }
    let base = ParamPoint::new(0.0, 0.0).with(a, value);
    if kind.is_axis() {
        return Ok(CurveSample { mu: base, residual: residual(sys, kind, base) });
    }
    let k = predicted_leading(sys, kind).unwrap_or(0.0);
    let guess = match kind {
        CurveKind::T1 | CurveKind::T2 | CurveKind::H => k * value,
        _ => k * value * value,
    };
    let f = |b: f64| residual(sys, kind, base.with(1 - a, b));
    let w0 = 0.5 * guess.abs().max(1e-3 * value * value).max(1e-30);
    let b = bracket_solve(&f, guess, w0, 2.0 * value.abs().max(guess.abs()))
        .ok_or(Error::NoRoot { kind: kind.to_string(), radius: value.abs() })?;
    let mu = base.with(1 - a, b);
    Ok(CurveSample { mu, residual: residual(sys, kind, mu) })
}

fn leading_ratio(kind: CurveKind, class: Degeneracy, mu: ParamPoint) -> Option<f64> {
    use CurveKind::*;
    match kind {
        T1 | T2 | H => Some(mu.mu2 / mu.mu1),
        T3 | T3plus => Some(mu.mu2 / (mu.mu1 * mu.mu1)),
        T4 | T4plus => Some(mu.mu1 / (mu.mu2 * mu.mu2)),
        DBranchNeg | DBranchPos if class == Degeneracy::ThetaZero => Some(mu.mu1 / (mu.mu2 * mu.mu2)),
        DBranchNeg | DBranchPos => Some(mu.mu2 / (mu.mu1 * mu.mu1)),
        _ => None,
    }
}

/// Least-squares intercept of `ratio = a + b r`; the plain mean for a single radius.
fn fit_leading(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.is_empty() {
        return None;
    }
    let mr = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mr).powi(2)).sum();
    if sxx <= 1e-30 * mr * mr {
        return Some(my);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mr) * (p.1 - my)).sum();
    Some(my - sxy / sxx * mr)
}

pub fn trace_curve(sys: &ReducedSystem, kind: CurveKind, radii: &[f64]) -> Result<BifurcationCurve> {
    if !kind.admissible(sys.degeneracy) {
        return Err(Error::NotApplicable(kind.to_string()));
    }
    let mut samples = Vec::new();
    let mut notes = Vec::new();
    let signs: &[f64] = if kind == CurveKind::H { &[1.0, -1.0] } else { &[1.0] };
    if kind == CurveKind::H && predicted_leading(sys, kind).is_none() {
        notes.push("H slope undefined for this coefficient pattern".to_string());
    } else {
        for &r in radii {
            for &s in signs {
                match point_on_circle(sys, kind, r, s) {
                    Ok(p) => samples.push(p),
                    Err(e @ Error::NoRoot { .. }) => notes.push(e.to_string()),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let fit_points: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|s| leading_ratio(kind, sys.degeneracy, s.mu).map(|q| (s.mu.norm(), q)))
        .collect();
    Ok(BifurcationCurve {
        kind,
        class: sys.degeneracy,
        leading: fit_leading(&fit_points),
        predicted_leading: predicted_leading(sys, kind),
        samples,
        halfline_constraint: halfline_constraint(sys, kind),
        notes,
    })
}

/// CSV rows `kind,branch,mu1,mu2,residual` with 17 significant digits.
pub fn write_curves_csv<W: Write>(out: &mut W, curves: &[BifurcationCurve]) -> std::io::Result<()> {
    writeln!(out, "kind,branch,mu1,mu2,residual")?;
    for c in curves {
        for s in &c.samples {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e}",
                c.kind,
                c.halfline_constraint.replace(',', ";"),
                s.mu.mu1,
                s.mu.mu2,
                s.residual
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sotomayor quantities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SaddleNode,
    Transcritical,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Predicted {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SotomayorReport {
    pub curve_kind: CurveKind,
    pub mu0: ParamPoint,
    pub xi0: State,
    /// Unit null vectors of the Jacobian and of its transpose.
    pub v: State,
    pub w: State,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// The same quantities with `v`, `w` scaled so one designated component equals 1,
    /// which is the scaling the displayed leading-order values refer to.
    pub scaled: [f64; 3],
    pub predicted: Predicted,
    pub verdict: Verdict,
    pub residual_av: f64,
    pub residual_atw: f64,
    pub bifurcation_parameter: usize,
    pub hypotheses: Vec<(String, bool)>,
}

fn unit_null(m: &Mat2) -> State {
    let (r0, r1) = (m[0], m[1]);
    let row = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) { r0 } else { r1 };
    let v = [-row[1], row[0]];
    let n = v[0].hypot(v[1]);
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / n, v[1] / n]
    }
}

fn dot(a: State, b: State) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn mat_vec(m: &Mat2, v: State) -> State {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn norm(v: State) -> f64 {
    v[0].hypot(v[1])
}

struct Setup {
    kind: CurveKind,
    xi0: State,
    param: usize,
    v_index: usize,
    w_index: usize,
    predicted: Predicted,
    hypotheses: Vec<(String, bool)>,
    expect: Verdict,
}

fn nonzero(v: f64) -> bool {
    v.abs() > ZERO_TOL
}

fn evaluate(sys: &ReducedSystem, mu0: ParamPoint, s: Setup) -> Result<SotomayorReport> {
    let a = sys.eval_jacobian(mu0, s.xi0);
    let trace = a[0][0] + a[1][1];
    if trace.abs() <= tol_eig(mu0) {
        return Err(Error::DegenerateJacobian);
    }
    let mut v = unit_null(&a);
    let mut w = unit_null(&transpose(&a));
    if v[s.v_index] < 0.0 {
        v = [-v[0], -v[1]];
    }
    if w[s.w_index] < 0.0 {
        w = [-w[0], -w[1]];
    }
    let k = s.param;
    let h = 1e-7 * (1.0 + mu0.norm());
    let (mp, mm) = (mu0.with(k, mu0.get(k) + h), mu0.with(k, mu0.get(k) - h));
    let (fp, fm) = (sys.eval_field(mp, s.xi0), sys.eval_field(mm, s.xi0));
    let f_mu = [(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)];
    let (jp, jm) = (sys.eval_jacobian(mp, s.xi0), sys.eval_jacobian(mm, s.xi0));
    let mut dj = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            dj[i][j] = (jp[i][j] - jm[i][j]) / (2.0 * h);
        }
    }
    let df_v = mat_vec(&dj, v);
    let d2f = sys.second_derivative(mu0, s.xi0, v);
    let (c1, c2, c3) = (dot(w, f_mu), dot(w, df_v), dot(w, d2f));
    let (vs, ws) = (v[s.v_index], w[s.w_index]);
    let scaled = [c1 / ws, c2 / (ws * vs), c3 / (ws * vs * vs)];

    let eps_scale = 1e3 * f64::EPSILON;
    let big = |idx: usize, c: f64, vec_norm: f64, pred: Option<f64>| match pred {
        Some(p) if p != 0.0 => scaled[idx].abs() > eps_scale * p.abs(),
        _ => c.abs() > eps_scale * vec_norm,
    };
    // C1 vanishes structurally on transcritical curves; the finite-difference
    // noise floor sits far above machine epsilon, hence the looser relative test.
    let c1_zero = c1.abs() <= 1e-6 * norm(f_mu);
    let c1_big = !c1_zero && big(0, c1, norm(f_mu), s.predicted.c1);
    let c2_big = big(1, c2, norm(df_v), s.predicted.c2);
    let c3_big = big(2, c3, norm(d2f), s.predicted.c3);
    let hyp_ok = s.hypotheses.iter().all(|h| h.1);
    let verdict = if !hyp_ok {
        Verdict::Inconclusive
    } else if s.expect == Verdict::SaddleNode && c1_big && c3_big {
        Verdict::SaddleNode
    } else if s.expect == Verdict::Transcritical && c1_zero && c2_big && c3_big {
        Verdict::Transcritical
    } else {
        Verdict::Inconclusive
    };
    Ok(SotomayorReport {
        curve_kind: s.kind,
        mu0,
        xi0: s.xi0,
        v,
        w,
        c1,
        c2,
        c3,
        scaled,
        predicted: s.predicted,
        verdict,
        residual_av: norm(mat_vec(&a, v)),
        residual_atw: norm(mat_vec(&transpose(&a), w)),
        bifurcation_parameter: k,
        hypotheses: s.hypotheses,
    })
}

/// Saddle-node quantities on a D branch. `mu0` must satisfy the discriminant condition.
pub fn sotomayor_saddle_node(sys: &ReducedSystem, mu0: ParamPoint) -> Result<SotomayorReport> {
    let class = sys.degeneracy;
    if !matches!(class, Degeneracy::DeltaZero | Degeneracy::ThetaZero) {
        return Err(Error::NotApplicable("D".into()));
    }
    let c = sys.coeffs_at(mu0);
    let res = residual(sys, CurveKind::DBranchPos, mu0);
    let scale = if class == Degeneracy::DeltaZero {
        c.delta * c.delta + (4.0 * mu0.mu2 * c.p).abs()
    } else {
        c.theta * c.theta + (4.0 * mu0.mu1 * c.n).abs()
    };
    if res.abs() > 1e-9 * scale {
        return Err(Error::InvalidArgument(format!("mu0 is not on D (residual {res:e})")));
    }
    let gamma = sys.gamma.at_origin();
    let setup = if class == Degeneracy::DeltaZero {
        let delta1 = sys.delta.get(1, 0);
        let (theta, delta2, p) = (sys.theta.at_origin(), sys.delta.get(0, 1), sys.p.at_origin());
        Setup {
            kind: if mu0.mu1 < 0.0 { CurveKind::DBranchNeg } else { CurveKind::DBranchPos },
            xi0: [0.0, -c.delta / (2.0 * c.p)],
            param: 1,
            v_index: 1,
            w_index: 1,
            predicted: Predicted {
                c1: Some(-delta1 * mu0.mu1 / (2.0 * p)),
                c2: None,
                c3: Some(-delta1 * mu0.mu1),
            },
            hypotheses: vec![
                ("theta != 0".into(), nonzero(theta)),
                ("delta1 != 0".into(), nonzero(delta1)),
                ("delta2 != 0".into(), nonzero(delta2)),
                ("P != 0".into(), nonzero(p)),
                ("2P - delta1*gamma != 0".into(), nonzero(2.0 * p - delta1 * gamma)),
            ],
            expect: Verdict::SaddleNode,
        }
    } else {
        let theta2 = sys.theta.get(0, 1);
        let (delta, theta1, n) = (sys.delta.at_origin(), sys.theta.get(1, 0), sys.n.at_origin());
        let q = 2.0 * n * gamma - theta2;
        Setup {
            kind: if mu0.mu2 < 0.0 { CurveKind::DBranchNeg } else { CurveKind::DBranchPos },
            xi0: [-c.theta / (2.0 * c.n), 0.0],
            param: 0,
            v_index: 0,
            w_index: 1,
            predicted: Predicted {
                c1: Some(-mu0.mu2 * q / (2.0 * n * gamma * gamma)),
                c2: None,
                c3: Some(-mu0.mu2 * q / (gamma * gamma)),
            },
            hypotheses: vec![
                ("delta != 0".into(), nonzero(delta)),
                ("theta1 != 0".into(), nonzero(theta1)),
                ("theta2 != 0".into(), nonzero(theta2)),
                ("N != 0".into(), nonzero(n)),
                ("2N*gamma - theta2 != 0".into(), nonzero(q)),
            ],
            expect: Verdict::SaddleNode,
        }
    };
    if setup.hypotheses.iter().any(|h| !h.1) {
        // Report the quantities anyway; the verdict stays inconclusive.
        return match evaluate(sys, mu0, setup) {
            Ok(r) => Ok(r),
            Err(Error::DegenerateJacobian) => Ok(degenerate_report(sys, mu0, class)),
            Err(e) => Err(e),
        };
    }
    evaluate(sys, mu0, setup)
}

fn degenerate_report(sys: &ReducedSystem, mu0: ParamPoint, class: Degeneracy) -> SotomayorReport {
    let c = sys.coeffs_at(mu0);
    let xi0 = if class == Degeneracy::DeltaZero {
        [0.0, -c.delta / (2.0 * c.p)]
    } else {
        [-c.theta / (2.0 * c.n), 0.0]
    };
    SotomayorReport {
        curve_kind: CurveKind::DBranchPos,
        mu0,
        xi0,
        v: [0.0, 0.0],
        w: [0.0, 0.0],
        c1: f64::NAN,
        c2: f64::NAN,
        c3: f64::NAN,
        scaled: [f64::NAN; 3],
        predicted: Predicted::default(),
        verdict: Verdict::Inconclusive,
        residual_av: f64::NAN,
        residual_atw: f64::NAN,
        bifurcation_parameter: 0,
        hypotheses: vec![("simple zero eigenvalue".into(), false)],
    }
}

/// Axis equilibrium that the interior point meets on a transcritical curve.
fn collision_partner(sys: &ReducedSystem, kind: CurveKind, mu0: ParamPoint) -> Result<(Label, State)> {
    use CurveKind::*;
    let set = find_equilibria(sys, mu0)?;
    if kind.is_axis() {
        return Ok((Label::E0, [0.0, 0.0]));
    }
    let e3 = set.get(Label::E3).ok_or_else(|| Error::CollisionMismatch {
        expected: "interior equilibrium".into(),
        found: "none".into(),
    })?;
    let candidates: &[Label] = match kind {
        T1 => &[Label::E1],
        T2 => &[Label::E2],
        T3 | T3plus => &[Label::E21, Label::E22],
        T4 | T4plus => &[Label::E11, Label::E12],
        _ => return Err(Error::NotApplicable(kind.to_string())),
    };
    candidates
        .iter()
        .filter_map(|l| set.get(*l))
        .min_by(|a, b| {
            let da = (a.xi[0] - e3.xi[0]).hypot(a.xi[1] - e3.xi[1]);
            let db = (b.xi[0] - e3.xi[0]).hypot(b.xi[1] - e3.xi[1]);
            da.total_cmp(&db)
        })
        .map(|e| (e.label, e.xi))
        .ok_or_else(|| Error::CollisionMismatch { expected: format!("{candidates:?}"), found: "none".into() })
}

/// Transcritical quantities on T1-T4 and the axes.
pub fn sotomayor_transcritical(sys: &ReducedSystem, kind: CurveKind, mu0: ParamPoint) -> Result<SotomayorReport> {
    use CurveKind::*;
    if !kind.admissible(sys.degeneracy) || kind.is_d() || kind == H {
        return Err(Error::NotApplicable(kind.to_string()));
    }
    let gamma = sys.gamma.at_origin();
    let (_, xi0) = collision_partner(sys, kind, mu0)?;
    let param = kind.bifurcation_parameter(sys.degeneracy);
    let mut predicted = Predicted::default();
    let mut hypotheses = Vec::new();
    let (v_index, w_index) = match kind {
        Xplus | Xminus => (1, 1),
        Yplus | Yminus => (0, 0),
        T1 | T4 | T4plus => (1, 1),
        T2 | T3 | T3plus => (1, 0),
        _ => unreachable!(),
    };
    match kind {
        T3 | T3plus => {
            let delta1 = sys.delta.get(1, 0);
            let gamma2 = sys.gamma.get(0, 1);
            let p = sys.p.at_origin();
            hypotheses = vec![
                ("delta1 != 0".to_string(), nonzero(delta1)),
                ("gamma2 != 0".to_string(), nonzero(gamma2)),
                ("delta1*gamma - 2P != 0".to_string(), nonzero(delta1 * gamma - 2.0 * p)),
            ];
            let m1 = mu0.mu1;
            predicted = Predicted {
                c1: Some(0.0),
                c2: Some(m1 * m1 * (gamma * delta1 - 2.0 * p) * gamma2 / gamma),
                c3: Some(2.0 * gamma * m1 * (2.0 * p - gamma * delta1)),
            };
        }
        T4 | T4plus => {
            let theta2 = sys.theta.get(0, 1);
            let gamma1 = sys.gamma.get(1, 0);
            let n = sys.n.at_origin();
            let delta = sys.delta.at_origin();
            hypotheses = vec![
                ("gamma1 != 0".to_string(), nonzero(gamma1)),
                ("theta2 != 0".to_string(), nonzero(theta2)),
                ("delta != 0".to_string(), nonzero(delta)),
                ("theta2 - N*gamma != 0".to_string(), nonzero(theta2 - n * gamma)),
                ("theta2 - 2N*gamma != 0".to_string(), nonzero(theta2 - 2.0 * n * gamma)),
            ];
            let m2 = mu0.mu2;
            predicted = Predicted {
                c1: Some(0.0),
                c2: Some(gamma1 * m2 / gamma),
                c3: Some(2.0 / ((2.0 * n * gamma - theta2) * m2)),
            };
        }
        _ => {}
    }
    if let Some(h) = hypotheses.iter().find(|h| !h.1) {
        return Err(Error::HypothesisViolation(h.0.clone()));
    }
    evaluate(
        sys,
        mu0,
        Setup { kind, xi0, param, v_index, w_index, predicted, hypotheses, expect: Verdict::Transcritical },
    )
}

// ---------------------------------------------------------------------------
// Collision bookkeeping

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionSample {
    pub mu: ParamPoint,
    pub pair: (Label, Label),
    pub distance: f64,
    /// Equilibrium and eigenvalue index expected to vanish, with its value.
    pub zero_eigenvalue: (Label, usize, f64),
    /// Sign requirement on the remaining eigenvalue of that equilibrium, when one is stated.
    pub other_sign_ok: bool,
    pub companion: Option<(Label, Kind, bool)>,
    pub passed: bool,
}

/// Companion label and the stability test it must pass.
type CompanionTest = (Label, fn(&Kind) -> bool);

struct Expectation {
    pair: (Label, Label),
    zero: (Label, usize),
    other_sign: Option<f64>,
    companion: Option<CompanionTest>,
}

fn expectation(sys: &ReducedSystem, kind: CurveKind) -> Result<Vec<Expectation>> {
    use CurveKind::*;
    let class = sys.degeneracy;
    let gamma = sys.gamma.at_origin();
    let one = |pair, zero| vec![Expectation { pair, zero, other_sign: None, companion: None }];
    Ok(match kind {
        T1 => one((Label::E1, Label::E3), (Label::E1, 1)),
        T2 => one((Label::E2, Label::E3), (Label::E2, 1)),
        T3 => {
            let s = gamma * sys.delta.get(1, 0) - 2.0 * sys.p.at_origin();
            if s < 0.0 {
                vec![Expectation {
                    pair: (Label::E21, Label::E3),
                    zero: (Label::E21, 1),
                    other_sign: Some(1.0),
                    companion: Some((Label::E22, Kind::is_attractor)),
                }]
            } else {
                vec![Expectation {
                    pair: (Label::E22, Label::E3),
                    zero: (Label::E22, 1),
                    other_sign: Some(-1.0),
                    companion: Some((Label::E21, Kind::is_repeller)),
                }]
            }
        }
        T4 => {
            let s = sys.theta.get(0, 1) - 2.0 * sys.n.at_origin() * gamma;
            if s < 0.0 {
                vec![Expectation {
                    pair: (Label::E11, Label::E3),
                    zero: (Label::E11, 1),
                    other_sign: Some(1.0),
                    companion: Some((Label::E12, Kind::is_attractor)),
                }]
            } else {
                vec![Expectation {
                    pair: (Label::E12, Label::E3),
                    zero: (Label::E12, 1),
                    other_sign: Some(-1.0),
                    companion: Some((Label::E11, Kind::is_repeller)),
                }]
            }
        }
        T3plus => {
            let mut v = one((Label::E21, Label::E3), (Label::E21, 1));
            v.extend(one((Label::E22, Label::E3), (Label::E22, 1)));
            v
        }
        T4plus => {
            let mut v = one((Label::E11, Label::E3), (Label::E11, 1));
            v.extend(one((Label::E12, Label::E3), (Label::E12, 1)));
            v
        }
        DBranchNeg | DBranchPos => match class {
            Degeneracy::DeltaZero => one((Label::E21, Label::E22), (Label::E21, 0)),
            _ => one((Label::E11, Label::E12), (Label::E11, 0)),
        },
        Xplus | Xminus => match class {
            Degeneracy::DeltaZero => {
                let mut v = one((Label::E0, Label::E21), (Label::E0, 1));
                v.extend(one((Label::E0, Label::E22), (Label::E0, 1)));
                v
            }
            _ => one((Label::E0, Label::E2), (Label::E0, 1)),
        },
        Yplus | Yminus => match class {
            Degeneracy::ThetaZero => {
                let mut v = one((Label::E0, Label::E11), (Label::E0, 0));
                v.extend(one((Label::E0, Label::E12), (Label::E0, 0)));
                v
            }
            _ => one((Label::E0, Label::E1), (Label::E0, 0)),
        },
        H => return Err(Error::NotApplicable("H carries no collision".into())),
    })
}

pub fn collision_check(sys: &ReducedSystem, curve: &BifurcationCurve) -> Result<Vec<CollisionSample>> {
    let mut out = Vec::with_capacity(curve.samples.len());
    for s in &curve.samples {
        let mu = s.mu;
        let set = find_equilibria(sys, mu)?;
        let tc = tol_collide(mu);
        let options = expectation(sys, curve.kind)?;
        let mut found = None;
        for ex in &options {
            let (a, b) = (set.get(ex.pair.0), set.get(ex.pair.1));
            if let (Some(a), Some(b)) = (a, b) {
                let d = (a.xi[0] - b.xi[0]).hypot(a.xi[1] - b.xi[1]);
                if d < tc {
                    found = Some((ex, d));
                    break;
                }
            }
        }
        let Some((ex, distance)) = found else {
            let closest = set
                .equilibria
                .iter()
                .enumerate()
                .flat_map(|(i, a)| set.equilibria[i + 1..].iter().map(move |b| (a, b)))
                .min_by(|x, y| {
                    let dx = (x.0.xi[0] - x.1.xi[0]).hypot(x.0.xi[1] - x.1.xi[1]);
                    let dy = (y.0.xi[0] - y.1.xi[0]).hypot(y.0.xi[1] - y.1.xi[1]);
                    dx.total_cmp(&dy)
                })
                .map(|(a, b)| format!("({}, {})", a.label, b.label))
                .unwrap_or_else(|| "nothing".into());
            return Err(Error::CollisionMismatch {
                expected: options.iter().map(|o| format!("({}, {})", o.pair.0, o.pair.1)).collect::<Vec<_>>().join(" or "),
                found: closest,
            });
        };
        let z = set.get(ex.zero.0).expect("colliding label present");
        let zero_value = z.lambda(ex.zero.1);
        let zero_ok = zero_value.abs() < 1e-9 * mu.norm();
        let other_sign_ok = match ex.other_sign {
            Some(sg) => z.lambda(1 - ex.zero.1) * sg > 0.0,
            None => true,
        };
        let companion = ex.companion.and_then(|(label, pred)| {
            set.get(label).filter(|e| e.proper && !e.trivial).map(|e| (label, e.kind, pred(&e.kind)))
        });
        let companion_ok = companion.is_none_or(|c| c.2);
        out.push(CollisionSample {
            mu,
            pair: ex.pair,
            distance,
            zero_eigenvalue: (ex.zero.0, ex.zero.1, zero_value),
            other_sign_ok,
            companion,
            passed: zero_ok && other_sign_ok && companion_ok,
        });
    }
    Ok(out)
}
