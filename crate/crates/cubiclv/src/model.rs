//! Raw cubic system, its normal-form reduction and the reduced vector field.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{CoefficientPoly, DEFAULT_DEGREE};

pub const ZERO_TOL: f64 = 1e-12;
pub const DIVISION_FLOOR: f64 = 1e-12;
pub const EPSILON_DISK: f64 = 1e-2;

pub type State = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub mu1: f64,
    pub mu2: f64,
}

impl ParamPoint {
    pub fn new(mu1: f64, mu2: f64) -> Self {
        Self { mu1, mu2 }
    }

    pub fn polar(r: f64, angle: f64) -> Self {
        Self { mu1: r * angle.cos(), mu2: r * angle.sin() }
    }

    pub fn norm(&self) -> f64 {
        self.mu1.hypot(self.mu2)
    }

    pub fn angle(&self) -> f64 {
        self.mu2.atan2(self.mu1).rem_euclid(std::f64::consts::TAU)
    }

    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            self.mu1
        } else {
            self.mu2
        }
    }

    pub fn with(&self, k: usize, value: f64) -> Self {
        let mut p = *self;
        if k == 0 {
            p.mu1 = value;
        } else {
            p.mu2 = value;
        }
        p
    }
}

/// Per-capita rates `x' = 2x(mu1 + p11 x + p12 y + p13 xy + p14 x^2 + p15 y^2)` and likewise for `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSystem {
    /// `p[0]` is p11..p15, `p[1]` is p21..p25.
    p: [[CoefficientPoly; 5]; 2],
}

impl RawSystem {
    pub fn new(first: [CoefficientPoly; 5], second: [CoefficientPoly; 5]) -> Result<Self> {
        if first[1].at_origin() == 0.0 {
            return Err(Error::Config("p12(0) must be nonzero".into()));
        }
        if second[0].at_origin() == 0.0 {
            return Err(Error::Config("p21(0) must be nonzero".into()));
        }
        Ok(Self { p: [first, second] })
    }

    /// Coefficient p_{row,col} with 1-based indices as in the usual notation.
    pub fn coeff(&self, row: usize, col: usize) -> &CoefficientPoly {
        &self.p[row - 1][col - 1]
    }

    pub fn degree(&self) -> usize {
        self.p.iter().flatten().map(|c| c.degree()).min().unwrap_or(DEFAULT_DEGREE)
    }

    pub fn with_degree(&self, degree: usize) -> Self {
        Self { p: self.p.clone().map(|row| row.map(|c| c.with_degree(degree))) }
    }

    /// Right-hand side in the original time `tau`.
    pub fn eval_field(&self, mu: ParamPoint, x: f64, y: f64) -> State {
        let c = |r: usize, k: usize| self.p[r][k].eval(mu.mu1, mu.mu2);
        let g1 = mu.mu1 + c(0, 0) * x + c(0, 1) * y + c(0, 2) * x * y + c(0, 3) * x * x + c(0, 4) * y * y;
        let g2 = mu.mu2 + c(1, 0) * x + c(1, 1) * y + c(1, 2) * x * y + c(1, 3) * x * x + c(1, 4) * y * y;
        [2.0 * x * g1, 2.0 * y * g2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Degeneracy {
    NonDegenerate,
    DeltaZero,
    ThetaZero,
    DoublyDegenerate,
}

impl Degeneracy {
    pub fn classify(theta0: f64, delta0: f64) -> Self {
        match (theta0.abs() < ZERO_TOL, delta0.abs() < ZERO_TOL) {
            (false, false) => Self::NonDegenerate,
            (false, true) => Self::DeltaZero,
            (true, false) => Self::ThetaZero,
            (true, true) => Self::DoublyDegenerate,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NonDegenerate => "nondegenerate",
            Self::DeltaZero => "deltazero",
            Self::ThetaZero => "thetazero",
            Self::DoublyDegenerate => "doublydegenerate",
        }
    }
}

/// Coefficient values frozen at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffValues {
    pub theta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub m: f64,
    pub n: f64,
    pub l_coeff: f64,
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

/// Normal form
/// `xi1' = xi1 (mu1 + theta xi1 + gamma xi2 + M xi1 xi2 + N xi1^2 + L xi2^2)`,
/// `xi2' = xi2 (mu2 + xi1/gamma + delta xi2 + S xi1 xi2 + P xi2^2 + R xi1^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub theta: CoefficientPoly,
    pub gamma: CoefficientPoly,
    pub delta: CoefficientPoly,
    pub m: CoefficientPoly,
    pub n: CoefficientPoly,
    pub l_coeff: CoefficientPoly,
    pub s: CoefficientPoly,
    pub p: CoefficientPoly,
    pub r: CoefficientPoly,
    pub degeneracy: Degeneracy,
    /// True when the parameter is the sign-flipped `nu = -mu` of a negative-pair reduction.
    pub relabeled: bool,
}

impl ReducedSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theta: CoefficientPoly,
        gamma: CoefficientPoly,
        delta: CoefficientPoly,
        m: CoefficientPoly,
        n: CoefficientPoly,
        l_coeff: CoefficientPoly,
        s: CoefficientPoly,
        p: CoefficientPoly,
        r: CoefficientPoly,
    ) -> Result<Self> {
        if gamma.at_origin() <= 0.0 {
            return Err(Error::Sign(format!("gamma(0) must be positive, got {}", gamma.at_origin())));
        }
        let degeneracy = Degeneracy::classify(theta.at_origin(), delta.at_origin());
        Ok(Self { theta, gamma, delta, m, n, l_coeff, s, p, r, degeneracy, relabeled: false })
    }

    /// Constant coefficients; handy for tests and the quadratic truncation.
    #[allow(clippy::too_many_arguments)]
    pub fn constant(theta: f64, gamma: f64, delta: f64, m: f64, n: f64, l_coeff: f64, s: f64, p: f64, r: f64) -> Result<Self> {
        let c = |v| CoefficientPoly::constant(v, DEFAULT_DEGREE);
        Self::new(c(theta), c(gamma), c(delta), c(m), c(n), c(l_coeff), c(s), c(p), c(r))
    }

    pub fn coeffs_at(&self, mu: ParamPoint) -> CoeffValues {
        let e = |c: &CoefficientPoly| c.eval(mu.mu1, mu.mu2);
        CoeffValues {
            theta: e(&self.theta),
            gamma: e(&self.gamma),
            delta: e(&self.delta),
            m: e(&self.m),
            n: e(&self.n),
            l_coeff: e(&self.l_coeff),
            s: e(&self.s),
            p: e(&self.p),
            r: e(&self.r),
        }
    }

    /// Same linear part, every cubic-order coefficient set to zero.
    pub fn quadratic_truncation(&self) -> Self {
        let z = CoefficientPoly::zero(self.theta.degree());
        Self {
            theta: CoefficientPoly::constant(self.theta.at_origin(), self.theta.degree()),
            gamma: CoefficientPoly::constant(self.gamma.at_origin(), self.gamma.degree()),
            delta: CoefficientPoly::constant(self.delta.at_origin(), self.delta.degree()),
            m: z.clone(),
            n: z.clone(),
            l_coeff: z.clone(),
            s: z.clone(),
            p: z.clone(),
            r: z,
            degeneracy: self.degeneracy,
            relabeled: self.relabeled,
        }
    }

    pub fn eval_field(&self, mu: ParamPoint, xi: State) -> State {
        field_with(&self.coeffs_at(mu), mu, xi)
    }

    pub fn eval_jacobian(&self, mu: ParamPoint, xi: State) -> Mat2 {
        jacobian_with(&self.coeffs_at(mu), mu, xi)
    }

    /// The factors `(g1, g2)` with `f = (xi1 g1, xi2 g2)`.
    pub fn rates(&self, mu: ParamPoint, xi: State) -> State {
        rates_with(&self.coeffs_at(mu), mu, xi)
    }

    /// `D^2 f(xi)(v, v)`; exact because the field is cubic.
    pub fn second_derivative(&self, mu: ParamPoint, xi: State, v: State) -> State {
        let c = self.coeffs_at(mu);
        let [x, y] = xi;
        let h1 = [
            [2.0 * c.theta + 2.0 * c.m * y + 6.0 * c.n * x, c.gamma + 2.0 * c.m * x + 2.0 * c.l_coeff * y],
            [c.gamma + 2.0 * c.m * x + 2.0 * c.l_coeff * y, 2.0 * c.l_coeff * x],
        ];
        let h2 = [
            [2.0 * c.r * y, 1.0 / c.gamma + 2.0 * c.s * y + 2.0 * c.r * x],
            [1.0 / c.gamma + 2.0 * c.s * y + 2.0 * c.r * x, 2.0 * c.delta + 2.0 * c.s * x + 6.0 * c.p * y],
        ];
        let q = |h: &Mat2| h[0][0] * v[0] * v[0] + 2.0 * h[0][1] * v[0] * v[1] + h[1][1] * v[1] * v[1];
        [q(&h1), q(&h2)]
    }
}

pub fn rates_with(c: &CoeffValues, mu: ParamPoint, xi: State) -> State {
    let [x, y] = xi;
    [
        mu.mu1 + c.theta * x + c.gamma * y + c.m * x * y + c.n * x * x + c.l_coeff * y * y,
        mu.mu2 + x / c.gamma + c.delta * y + c.s * x * y + c.p * y * y + c.r * x * x,
    ]
}

pub fn field_with(c: &CoeffValues, mu: ParamPoint, xi: State) -> State {
    let g = rates_with(c, mu, xi);
    [xi[0] * g[0], xi[1] * g[1]]
}

pub fn jacobian_with(c: &CoeffValues, mu: ParamPoint, xi: State) -> Mat2 {
    let [x, y] = xi;
    let g = rates_with(c, mu, xi);
    [
        [
            g[0] + x * (c.theta + c.m * y + 2.0 * c.n * x),
            x * (c.gamma + c.m * x + 2.0 * c.l_coeff * y),
        ],
        [
            y * (1.0 / c.gamma + c.s * y + 2.0 * c.r * x),
            g[1] + y * (c.delta + c.s * x + 2.0 * c.p * y),
        ],
    ]
}

/// Jacobian of the rate pair `(g1, g2)`; used by Newton on the interior equations.
pub fn rates_jacobian_with(c: &CoeffValues, xi: State) -> Mat2 {
    let [x, y] = xi;
    [
        [c.theta + c.m * y + 2.0 * c.n * x, c.gamma + c.m * x + 2.0 * c.l_coeff * y],
        [1.0 / c.gamma + c.s * y + 2.0 * c.r * x, c.delta + c.s * x + 2.0 * c.p * y],
    ]
}

fn reduce_impl(raw: &RawSystem, negative: bool) -> Result<ReducedSystem> {
    let p = |r, c| raw.coeff(r, c);
    let (p12, p21) = (p(1, 2), p(2, 1));
    let div = |a: &CoefficientPoly, b: &CoefficientPoly| a.div_trunc(b, DIVISION_FLOOR);
    let p12p21 = p12.mul_trunc(p21);
    let p12sq = p12.mul_trunc(p12);
    let p21sq = p21.mul_trunc(p21);
    let theta = div(p(1, 1), p12)?;
    let gamma = div(p12, p21)?;
    let delta = div(p(2, 2), p21)?;
    let sign = if negative { -1.0 } else { 1.0 };
    let m = div(p(1, 3), &p12p21)?.scale(sign);
    let n = div(p(1, 4), &p12sq)?.scale(sign);
    let l_coeff = div(p(1, 5), &p21sq)?.scale(sign);
    let s = div(p(2, 3), &p12p21)?.scale(sign);
    let r = div(p(2, 4), &p12sq)?.scale(sign);
    let pp = div(p(2, 5), &p21sq)?.scale(sign);
    let mut sys = if negative {
        // Re-express every coefficient in nu = -mu.
        let f = |c: CoefficientPoly| c.reflect();
        ReducedSystem::new(f(theta), f(gamma), f(delta), f(m), f(n), f(l_coeff), f(s), f(pp), f(r))?
    } else {
        ReducedSystem::new(theta, gamma, delta, m, n, l_coeff, s, pp, r)?
    };
    sys.relabeled = negative;
    Ok(sys)
}

/// Reduction for the mutualistic sign pattern `p12(0) > 0`, `p21(0) > 0`.
pub fn reduce(raw: &RawSystem) -> Result<ReducedSystem> {
    let (a, b) = (raw.coeff(1, 2).at_origin(), raw.coeff(2, 1).at_origin());
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Sign(format!(
            "reduce needs p12(0) > 0 and p21(0) > 0 (got {a}, {b}); use the negative-pair reduction for two negative values"
        )));
    }
    reduce_impl(raw, false)
}

/// Reduction for `p12(0) < 0`, `p21(0) < 0`; the result is parametrised by `nu = -mu`.
pub fn reduce_negative(raw: &RawSystem) -> Result<ReducedSystem> {
    let (a, b) = (raw.coeff(1, 2).at_origin(), raw.coeff(2, 1).at_origin());
    if !(a < 0.0 && b < 0.0) {
        return Err(Error::Sign(format!(
            "negative-pair reduction needs p12(0) < 0 and p21(0) < 0 (got {a}, {b})"
        )));
    }
    reduce_impl(raw, true)
}

/// Maps a raw state to reduced coordinates: `xi = ±(x p12(mu), y p21(mu))`.
pub fn raw_to_reduced(raw: &RawSystem, mu: ParamPoint, x: f64, y: f64, negative: bool) -> State {
    let s = if negative { -1.0 } else { 1.0 };
    [
        s * x * raw.coeff(1, 2).eval(mu.mu1, mu.mu2),
        s * y * raw.coeff(2, 1).eval(mu.mu1, mu.mu2),
    ]
}

/// Reduced-time derivative implied by the raw field: `d xi / dt = (p12 x', p21 y') / 2` in both sign patterns.
pub fn transported_raw_field(raw: &RawSystem, mu: ParamPoint, x: f64, y: f64) -> State {
    let f = raw.eval_field(mu, x, y);
    [
        0.5 * raw.coeff(1, 2).eval(mu.mu1, mu.mu2) * f[0],
        0.5 * raw.coeff(2, 1).eval(mu.mu1, mu.mu2) * f[1],
    ]
}

// ---------------------------------------------------------------------------
// Config files

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum SystemSpec {
    Raw {
        #[serde(default = "default_degree")]
        degree: usize,
        #[serde(default)]
        negative_pair: bool,
        #[serde(flatten)]
        coeffs: BTreeMap<String, BTreeMap<String, f64>>,
    },
    Reduced {
        #[serde(default = "default_degree")]
        degree: usize,
        #[serde(flatten)]
        coeffs: BTreeMap<String, BTreeMap<String, f64>>,
    },
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

const RAW_NAMES: [&str; 10] = ["p11", "p12", "p13", "p14", "p15", "p21", "p22", "p23", "p24", "p25"];
const REDUCED_NAMES: [&str; 9] = ["theta", "gamma", "delta", "M", "N", "L", "S", "P", "R"];

fn take_polys(
    degree: usize,
    coeffs: &BTreeMap<String, BTreeMap<String, f64>>,
    names: &[&str],
) -> Result<Vec<CoefficientPoly>> {
    for k in coeffs.keys() {
        if !names.contains(&k.as_str()) && !k.starts_with('_') {
            return Err(Error::Config(format!("unknown coefficient field {k:?}")));
        }
    }
    names
        .iter()
        .map(|n| match coeffs.get(*n) {
            Some(m) => CoefficientPoly::from_key_map(degree, m),
            None => Ok(CoefficientPoly::zero(degree)),
        })
        .collect()
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_raw(&self) -> Result<Option<RawSystem>> {
        match self {
            SystemSpec::Raw { degree, coeffs, .. } => {
                let v = take_polys(*degree, coeffs, &RAW_NAMES)?;
                let first: [CoefficientPoly; 5] = v[..5].to_vec().try_into().expect("five");
                let second: [CoefficientPoly; 5] = v[5..].to_vec().try_into().expect("five");
                Ok(Some(RawSystem::new(first, second)?))
            }
            SystemSpec::Reduced { .. } => Ok(None),
        }
    }

    pub fn to_reduced(&self) -> Result<ReducedSystem> {
        match self {
            SystemSpec::Raw { negative_pair, .. } => {
                let raw = self.to_raw()?.expect("raw form");
                if *negative_pair {
                    reduce_negative(&raw)
                } else {
                    reduce(&raw)
                }
            }
            SystemSpec::Reduced { degree, coeffs } => {
                let v = take_polys(*degree, coeffs, &REDUCED_NAMES)?;
                let mut it = v.into_iter();
                let mut next = || it.next().expect("nine fields");
                ReducedSystem::new(next(), next(), next(), next(), next(), next(), next(), next(), next())
            }
        }
    }

    pub fn from_reduced(sys: &ReducedSystem) -> Self {
        let fields = [
            &sys.theta, &sys.gamma, &sys.delta, &sys.m, &sys.n, &sys.l_coeff, &sys.s, &sys.p, &sys.r,
        ];
        let coeffs = REDUCED_NAMES
            .iter()
            .zip(fields)
            .map(|(n, c)| (n.to_string(), c.to_key_map()))
            .collect();
        SystemSpec::Reduced { degree: sys.theta.degree(), coeffs }
    }
}

pub fn load_system(text: &str) -> Result<ReducedSystem> {
    SystemSpec::from_json(text)?.to_reduced()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> CoefficientPoly {
        CoefficientPoly::constant(v, 2)
    }

    fn raw_from(first: [f64; 5], second: [f64; 5]) -> RawSystem {
        RawSystem::new(first.map(c), second.map(c)).unwrap()
    }

    #[test]
    fn constant_ratios() {
        let sys = reduce(&raw_from([1.0, 2.0, 0.0, 0.0, 0.0], [4.0, 2.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(sys.theta.at_origin(), 0.5);
        assert_eq!(sys.gamma.at_origin(), 0.5);
        assert_eq!(sys.delta.at_origin(), 0.5);
        assert_eq!(sys.degeneracy, Degeneracy::NonDegenerate);
    }

    #[test]
    fn identity_reduction_is_doubly_degenerate() {
        let sys = reduce(&raw_from([0.0, 1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(sys.gamma.at_origin(), 1.0);
        assert_eq!(sys.degeneracy, Degeneracy::DoublyDegenerate);
    }

    #[test]
    fn affine_theta_survives_reduction() {
        let first = [CoefficientPoly::linear(-2.0, 1.0, 0.0, 2), c(1.0), c(0.0), c(0.0), c(0.0)];
        let second = [c(1.0), c(-1.0), c(0.0), c(0.0), c(0.0)];
        let raw = RawSystem::new(first, second).unwrap();
        let sys = reduce(&raw).unwrap();
        assert_eq!(sys.theta.eval(0.003, 0.0), -2.0 + 0.003);
        assert_eq!(sys.delta.at_origin(), -1.0);
        assert_eq!(sys.degeneracy, Degeneracy::NonDegenerate);
        let mu = ParamPoint::new(0.004, -0.002);
        for &(x, y) in &[(0.01, 0.02), (0.3, -0.1), (-0.05, 0.07)] {
            let xi = raw_to_reduced(&raw, mu, x, y, false);
            let a = sys.eval_field(mu, xi);
            let b = transported_raw_field(&raw, mu, x, y);
            for k in 0..2 {
                assert!((a[k] - b[k]).abs() <= 1e-12 * b[k].abs().max(1e-300), "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn negative_pair() {
        let sys = reduce_negative(&raw_from([0.0, -1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(sys.gamma.at_origin(), 1.0);
        assert!(sys.relabeled);
        let sys = reduce_negative(&raw_from([0.0, -2.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(sys.gamma.at_origin(), 2.0);
        assert_eq!(sys.m.at_origin(), -0.5);
        let mixed = raw_from([0.0, -1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(reduce_negative(&mixed), Err(Error::Sign(_))));
        assert!(matches!(reduce(&mixed), Err(Error::Sign(_))));
    }

    #[test]
    fn zero_p12_rejected() {
        let err = RawSystem::new(std::array::from_fn(|_| c(0.0)), [c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)]).unwrap_err();
        assert_eq!(err.to_string(), "config error: p12(0) must be nonzero");
    }

    #[test]
    fn origin_and_axes() {
        let sys = ReducedSystem::constant(-2.0, 1.0, -1.0, 0.3, -0.2, 0.1, 0.4, 0.5, -0.6).unwrap();
        let mu = ParamPoint::new(0.01, -0.02);
        assert_eq!(sys.eval_field(mu, [0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(sys.eval_field(mu, [0.03, 0.0])[1], 0.0);
        assert_eq!(sys.eval_field(mu, [0.0, 0.03])[0], 0.0);
        assert_eq!(sys.eval_jacobian(mu, [0.0, 0.0]), [[0.01, 0.0], [0.0, -0.02]]);
        assert_eq!(sys.eval_jacobian(mu, [0.0, 0.05])[0][1], 0.0);
    }

    #[test]
    fn quadratic_lv_equilibrium_is_exact() {
        let sys = ReducedSystem::constant(-2.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let f = sys.eval_field(ParamPoint::new(0.001, 0.001), [0.002, 0.003]);
        assert!(f[0].abs() < 1e-20 && f[1].abs() < 1e-20, "{f:?}");
    }

    #[test]
    fn config_forms() {
        let text = r#"{"form":"reduced","theta":{"(0,0)":-2,"(1,0)":0.5},"gamma":{"(0,0)":1},"delta":{"(0,0)":-1},"N":{"(0,0)":0.1}}"#;
        let sys = load_system(text).unwrap();
        assert_eq!(sys.theta.get(1, 0), 0.5);
        assert_eq!(sys.n.at_origin(), 0.1);
        let back = load_system(&serde_json::to_string(&SystemSpec::from_reduced(&sys)).unwrap()).unwrap();
        assert_eq!(back, sys);

        let raw = r#"{"form":"raw","p11":{"(0,0)":1},"p12":{"(0,0)":0},"p21":{"(0,0)":1}}"#;
        assert_eq!(load_system(raw).unwrap_err().to_string(), "config error: p12(0) must be nonzero");
        assert!(load_system(r#"{"form":"reduced","thetta":{}}"#).is_err());
    }
}
