//! Truncated bivariate polynomials in the unfolding parameters (mu1, mu2).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_DEGREE: usize = 2;

/// Dense triangular storage: `coeffs[idx(i, j)]` multiplies `mu1^i * mu2^j`, `i + j <= degree`.
#[derive(Clone, PartialEq)]
pub struct CoefficientPoly {
    degree: usize,
    coeffs: Vec<f64>,
}

fn idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

fn n_terms(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

impl CoefficientPoly {
    pub fn zero(degree: usize) -> Self {
        Self { degree, coeffs: vec![0.0; n_terms(degree)] }
    }

    pub fn constant(c: f64, degree: usize) -> Self {
        let mut p = Self::zero(degree);
        p.coeffs[0] = c;
        p
    }

    /// `c0 + c1*mu1 + c2*mu2`.
    pub fn linear(c0: f64, c1: f64, c2: f64, degree: usize) -> Self {
        let mut p = Self::constant(c0, degree);
        if degree >= 1 {
            p.set(1, 0, c1);
            p.set(0, 1, c2);
        }
        p
    }

    /// Terms with `i + j > degree` are rejected.
    pub fn from_terms(degree: usize, terms: &[((usize, usize), f64)]) -> Result<Self> {
        let mut p = Self::zero(degree);
        for &((i, j), c) in terms {
            if i + j > degree {
                return Err(Error::Config(format!(
                    "exponent ({i},{j}) exceeds degree {degree}"
                )));
            }
            p.coeffs[idx(i, j)] += c;
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            0.0
        } else {
            self.coeffs[idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, c: f64) {
        assert!(i + j <= self.degree, "exponent ({i},{j}) exceeds degree {}", self.degree);
        self.coeffs[idx(i, j)] = c;
    }

    pub fn at_origin(&self) -> f64 {
        self.coeffs[0]
    }

    /// First partials at the origin, `(d/dmu1, d/dmu2)`.
    pub fn partials_at_origin(&self) -> (f64, f64) {
        (self.get(1, 0), self.get(0, 1))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        (0..=self.degree).flat_map(move |d| {
            (0..=d).map(move |j| ((d - j, j), self.coeffs[idx(d - j, j)]))
        })
    }

    pub fn eval(&self, mu1: f64, mu2: f64) -> f64 {
        // Horner in mu2 inside, mu1 outside.
        let mut acc = 0.0;
        for i in (0..=self.degree).rev() {
            let mut inner = 0.0;
            for j in (0..=self.degree - i).rev() {
                inner = inner * mu2 + self.coeffs[idx(i, j)];
            }
            acc = acc * mu1 + inner;
        }
        acc
    }

    /// Same polynomial stored at a different degree (truncating or zero-padding).
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut p = Self::zero(degree);
        for ((i, j), c) in self.terms() {
            if i + j <= degree {
                p.coeffs[idx(i, j)] = c;
            }
        }
        p
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `p(-mu)`: flips the sign of every odd-order coefficient.
    pub fn reflect(&self) -> Self {
        let mut p = self.clone();
        for d in 0..=self.degree {
            if d % 2 == 1 {
                for j in 0..=d {
                    p.coeffs[idx(d - j, j)] = -p.coeffs[idx(d - j, j)];
                }
            }
        }
        p
    }

    pub fn mul_trunc(&self, other: &Self) -> Self {
        let degree = self.degree.min(other.degree);
        let mut out = Self::zero(degree);
        for ((i, j), a) in self.terms() {
            if a == 0.0 || i + j > degree {
                continue;
            }
            for ((k, l), b) in other.terms() {
                if i + j + k + l <= degree {
                    out.coeffs[idx(i + k, j + l)] += a * b;
                }
            }
        }
        out
    }

    /// Taylor coefficients of `self / den` up to the common degree.
    pub fn div_trunc(&self, den: &Self, floor: f64) -> Result<Self> {
        let b0 = den.at_origin();
        if b0.abs() < floor {
            return Err(Error::Division { value: b0, floor });
        }
        let degree = self.degree.min(den.degree);
        let mut q = Self::zero(degree);
        for d in 0..=degree {
            for j in 0..=d {
                let i = d - j;
                let mut acc = self.get(i, j);
                for k in 0..=i {
                    for l in 0..=j {
                        if k == 0 && l == 0 {
                            continue;
                        }
                        acc -= den.get(k, l) * q.get(i - k, j - l);
                    }
                }
                q.coeffs[idx(i, j)] = acc / b0;
            }
        }
        Ok(q)
    }
}

impl fmt::Debug for CoefficientPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for ((i, j), c) in self.terms() {
            if c != 0.0 {
                m.entry(&format_args!("({i},{j})"), &c);
            }
        }
        m.finish()
    }
}

fn parse_key(key: &str) -> Option<(usize, usize)> {
    let inner = key.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl CoefficientPoly {
    /// Builds from the `"(i,j)" -> value` map used in config files.
    pub fn from_key_map(degree: usize, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut terms = Vec::with_capacity(map.len());
        for (k, &v) in map {
            let e = parse_key(k)
                .ok_or_else(|| Error::Config(format!("bad exponent key {k:?}, expected \"(i,j)\"")))?;
            terms.push((e, v));
        }
        Self::from_terms(degree, &terms)
    }

    pub fn to_key_map(&self) -> BTreeMap<String, f64> {
        self.terms()
            .filter(|&(_, c)| c != 0.0)
            .map(|((i, j), c)| (format!("({i},{j})"), c))
            .collect()
    }
}

impl Serialize for CoefficientPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_key_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientPoly {
    /// Degree is inferred from the largest exponent present, at least the default.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, f64>::deserialize(d)?;
        let mut degree = DEFAULT_DEGREE;
        for k in map.keys() {
            let (i, j) = parse_key(k)
                .ok_or_else(|| serde::de::Error::custom(format!("bad exponent key {k:?}")))?;
            degree = degree.max(i + j);
        }
        Self::from_key_map(degree, &map).map_err(serde::de::Error::custom)
    }
}
