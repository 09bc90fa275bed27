//! Case selection, sector decomposition of a parameter circle, and comparison with the type tables.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{
    point_on_circle, sotomayor_saddle_node, sotomayor_transcritical, CurveKind, CurveSample, Verdict,
};
use crate::equilibria::{find_equilibria, tol_proper, EquilibriumSet, Label};
use crate::error::{Error, Result};
use crate::model::{Degeneracy, ParamPoint, ReducedSystem, State, ZERO_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDescriptor {
    pub class: Degeneracy,
    /// Names of the sign quantities, parallel to `signs`.
    pub quantities: Vec<String>,
    pub signs: Vec<i8>,
    /// False for sign patterns no table covers (P < 0, N < 0); analysis still runs.
    pub supported: bool,
    pub hypotheses: Vec<String>,
    pub notes: Vec<String>,
}

impl CaseDescriptor {
    pub fn sign_string(&self) -> String {
        let body: Vec<&str> = self.signs.iter().map(|s| if *s > 0 { "+" } else { "-" }).collect();
        format!("({})", body.join(", "))
    }
}

fn sgn(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else {
        -1
    }
}

pub fn select_case(sys: &ReducedSystem) -> Result<CaseDescriptor> {
    let theta = sys.theta.at_origin();
    let delta = sys.delta.at_origin();
    let gamma = sys.gamma.at_origin();
    let need = |v: f64, what: &str| -> Result<()> {
        if v.abs() <= ZERO_TOL {
            Err(Error::UnsupportedCase(format!("{what} vanishes")))
        } else {
            Ok(())
        }
    };
    match sys.degeneracy {
        Degeneracy::DoublyDegenerate => {
            Err(Error::UnsupportedCase("theta(0) = delta(0) = 0 is out of scope".into()))
        }
        Degeneracy::NonDegenerate => {
            let q = theta * delta - 1.0;
            need(q, "theta*delta - 1")?;
            Ok(CaseDescriptor {
                class: sys.degeneracy,
                quantities: vec!["theta".into(), "delta".into(), "theta*delta-1".into()],
                signs: vec![sgn(theta), sgn(delta), sgn(q)],
                supported: true,
                hypotheses: vec!["gamma > 0".into(), "theta*delta - 1 != 0".into()],
                notes: vec![],
            })
        }
        Degeneracy::DeltaZero => {
            let d1 = sys.delta.get(1, 0);
            let p = sys.p.at_origin();
            need(d1, "delta1")?;
            need(p, "P")?;
            let (q1, q2) = (gamma * d1 - p, gamma * d1 - 2.0 * p);
            need(q1, "gamma*delta1 - P")?;
            need(q2, "gamma*delta1 - 2P")?;
            let supported = p > 0.0;
            Ok(CaseDescriptor {
                class: sys.degeneracy,
                quantities: vec![
                    "theta".into(),
                    "delta1".into(),
                    "gamma*delta1-P".into(),
                    "gamma*delta1-2P".into(),
                ],
                signs: vec![sgn(theta), sgn(d1), sgn(q1), sgn(q2)],
                supported,
                hypotheses: vec!["gamma > 0".into(), "P > 0".into()],
                notes: if supported { vec![] } else { vec!["table verification limited to P>0".into()] },
            })
        }
        Degeneracy::ThetaZero => {
            let t2 = sys.theta.get(0, 1);
            let n = sys.n.at_origin();
            need(t2, "theta2")?;
            need(n, "N")?;
            let (q1, q2) = (t2 - n * gamma, t2 - 2.0 * n * gamma);
            need(q1, "theta2 - N*gamma")?;
            need(q2, "theta2 - 2N*gamma")?;
            let supported = n > 0.0;
            Ok(CaseDescriptor {
                class: sys.degeneracy,
                quantities: vec![
                    "delta".into(),
                    "theta2".into(),
                    "theta2-N*gamma".into(),
                    "theta2-2N*gamma".into(),
                ],
                signs: vec![sgn(delta), sgn(t2), sgn(q1), sgn(q2)],
                supported,
                hypotheses: vec!["gamma > 0".into(), "N > 0".into()],
                notes: if supported { vec![] } else { vec!["table verification limited to N>0".into()] },
            })
        }
    }
}

/// Type letter per family label; `-` for absent, virtual or colliding points.
pub fn signature(set: &EquilibriumSet, class: Degeneracy) -> String {
    Label::family(class)
        .iter()
        .map(|l| match set.get(*l) {
            Some(e) if e.proper && !e.trivial => e.kind.letter(),
            _ => '-',
        })
        .collect()
}

pub fn signature_at(sys: &ReducedSystem, mu: ParamPoint) -> Result<String> {
    Ok(signature(&find_equilibria(sys, mu)?, sys.degeneracy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub sector_id: usize,
    /// Angular interval `(lo, hi)` with `hi` possibly above `2 pi` for the wrapping sector.
    pub interval: (f64, f64),
    pub representative: ParamPoint,
    pub signature: String,
    pub bounding: (CurveKind, CurveKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub kind: CurveKind,
    pub angle: f64,
    pub sample: CurveSample,
}

pub fn sep_tol(r: f64) -> f64 {
    1e-3 * r
}

/// Point where the curve's colliding equilibria meet, if the curve carries a collision.
fn collision_point(sys: &ReducedSystem, kind: CurveKind, mu: ParamPoint) -> Option<State> {
    use CurveKind::*;
    let c = sys.coeffs_at(mu);
    match kind {
        Xplus | Xminus | Yplus | Yminus => Some([0.0, 0.0]),
        DBranchNeg | DBranchPos => Some(if sys.degeneracy == Degeneracy::ThetaZero {
            [-c.theta / (2.0 * c.n), 0.0]
        } else {
            [0.0, -c.delta / (2.0 * c.p)]
        }),
        // The interior point meets the axis where its other coordinate sits.
        T1 | T4 | T4plus | T2 | T3 | T3plus => {
            let set = find_equilibria(sys, mu).ok()?;
            set.get(Label::E3).map(|e| e.xi)
        }
        H => None,
    }
}

/// Curves across which the signature changes: those whose collision happens inside the closed quadrant.
pub fn boundaries(sys: &ReducedSystem, r: f64) -> Result<Vec<Boundary>> {
    let mut out = Vec::new();
    for kind in CurveKind::all_for(sys.degeneracy) {
        if kind == CurveKind::H {
            continue;
        }
        let sample = match point_on_circle(sys, kind, r, 1.0) {
            Ok(s) => s,
            Err(Error::NoRoot { .. }) => continue,
            Err(e) => return Err(e),
        };
        let Some(xi) = collision_point(sys, kind, sample.mu) else { continue };
        let tp = tol_proper(sample.mu);
        if xi[0] >= -tp && xi[1] >= -tp {
            out.push(Boundary { kind, angle: sample.mu.angle(), sample });
        }
    }
    out.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(out)
}

pub fn decompose(sys: &ReducedSystem, r: f64) -> Result<Vec<RegionReport>> {
    if !(1e-4..=crate::model::EPSILON_DISK).contains(&r) {
        return Err(Error::RadiusOutOfRange(r));
    }
    let b = boundaries(sys, r)?;
    let n = b.len();
    let min_gap = 10.0 * sep_tol(r);
    for i in 0..n {
        let lo = b[i].angle;
        let hi = if i + 1 < n { b[i + 1].angle } else { b[0].angle + TAU };
        if hi - lo < min_gap {
            return Err(Error::SectorTooThin(lo, hi));
        }
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = b[i].angle;
            let (hi, upper) = if i + 1 < n { (b[i + 1].angle, b[i + 1].kind) } else { (b[0].angle + TAU, b[0].kind) };
            let rep = ParamPoint::polar(r, 0.5 * (lo + hi));
            Ok(RegionReport {
                sector_id: i,
                interval: (lo, hi),
                representative: rep,
                signature: signature_at(sys, rep)?,
                bounding: (b[i].kind, upper),
            })
        })
        .collect()
}

/// Signature at `mu` together with the sector of the decomposition at radius `|mu|` holding it.
pub fn region_membership(sys: &ReducedSystem, mu: ParamPoint) -> Result<RegionReport> {
    let r = mu.norm();
    if r == 0.0 {
        return Err(Error::OnCurve("origin".into()));
    }
    let sectors = decompose(sys, r)?;
    let a = mu.angle();
    let tol = sep_tol(r);
    for s in &sectors {
        for edge in [s.interval.0, s.interval.1] {
            let d = (a - edge).rem_euclid(TAU);
            if d.min(TAU - d) < tol {
                let kind = if edge == s.interval.0 { s.bounding.0 } else { s.bounding.1 };
                return Err(Error::OnCurve(kind.to_string()));
            }
        }
    }
    let sector = sectors
        .iter()
        .find(|s| {
            let x = if a < s.interval.0 { a + TAU } else { a };
            x > s.interval.0 && x < s.interval.1
        })
        .ok_or_else(|| Error::OnCurve("no enclosing sector".into()))?;
    Ok(RegionReport { representative: mu, signature: signature_at(sys, mu)?, ..sector.clone() })
}

// ---------------------------------------------------------------------------
// Type tables

const ND_COLUMNS: [&str; 30] = [
    "r---", "sr--", "ars-", "assr", "asr-", "s-r-", "arrs", "r-s-", "srs-", "sras", "ar-s", "as--", "s---",
    "rss-", "s-s-", "s-as", "a--s", "sa-s", "ss--", "rssa", "s-sa", "s-a-", "a---", "sa--", "ss-a", "rs--",
    "a-s-", "a-rs", "sars", "ssr-",
];

/// Rows in the order of `Label::family(DeltaZero)`.
const DZ_ROWS: [&str; 5] = [
    "rsssaassarsssasssarr",
    "-rrrrs-rrs----as---s",
    "--srrrrrs--srrrrrsrr",
    "--aa---s---aa---s-ss",
    "---ss-------sss-----",
];

/// Rows in the order of `Label::family(ThetaZero)`.
const TZ_ROWS: [&str; 5] = [
    "rsaassssaarssassssrr",
    "-rrrrs-rss-rrrrs-rrr",
    "----aa-s------aa-sss",
    "--srrrrrr-ssa------s",
    "---ss-------sss-----",
];

fn columns_from_rows(rows: &[&str]) -> Vec<String> {
    let cols = rows[0].len();
    (0..cols).map(|j| rows.iter().map(|r| r.as_bytes()[j] as char).collect()).collect()
}

/// Table columns for a class, each column a signature string in family row order.
pub fn table_columns(class: Degeneracy) -> Vec<String> {
    match class {
        Degeneracy::NonDegenerate => ND_COLUMNS.iter().map(|s| s.to_string()).collect(),
        Degeneracy::DeltaZero => columns_from_rows(&DZ_ROWS),
        Degeneracy::ThetaZero => columns_from_rows(&TZ_ROWS),
        Degeneracy::DoublyDegenerate => vec![],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SotomayorCheck {
    pub kind: CurveKind,
    pub mu: ParamPoint,
    pub expected: Verdict,
    pub got: Option<Verdict>,
    pub error: Option<String>,
}

impl SotomayorCheck {
    pub fn ok(&self) -> bool {
        self.got == Some(self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramReport {
    pub name: String,
    pub case: Option<CaseDescriptor>,
    pub declared_case: Option<Vec<i8>>,
    pub case_matches: bool,
    pub sectors: Vec<RegionReport>,
    /// Signatures occurring in more than one sector of this diagram.
    pub repeated: Vec<String>,
    pub sotomayor: Vec<SotomayorCheck>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub family: Degeneracy,
    pub radius: f64,
    pub diagrams: Vec<DiagramReport>,
    pub total_sectors: usize,
    pub distinct_signatures: usize,
    pub expected_regions: usize,
    pub matched: Vec<String>,
    pub unmatched_computed: Vec<String>,
    pub unmatched_table: Vec<String>,
    /// Signatures reported by more than one diagram.
    pub shared_across_diagrams: Vec<String>,
    pub passed: bool,
}

/// One diagram to verify: a system and the case it is declared to represent.
pub struct DiagramInput<'a> {
    pub name: &'a str,
    pub system: &'a ReducedSystem,
    pub declared_case: Option<&'a [i8]>,
}

fn expected_verdict(kind: CurveKind) -> Verdict {
    if matches!(kind, CurveKind::DBranchNeg | CurveKind::DBranchPos) {
        Verdict::SaddleNode
    } else {
        Verdict::Transcritical
    }
}

fn sotomayor_suite(sys: &ReducedSystem, r: f64) -> Vec<SotomayorCheck> {
    let b = match boundaries(sys, r) {
        Ok(b) => b,
        Err(_) => return vec![],
    };
    b.iter()
        .map(|bd| {
            let expected = expected_verdict(bd.kind);
            let res = if expected == Verdict::SaddleNode {
                sotomayor_saddle_node(sys, bd.sample.mu)
            } else {
                sotomayor_transcritical(sys, bd.kind, bd.sample.mu)
            };
            match res {
                Ok(rep) => SotomayorCheck { kind: bd.kind, mu: bd.sample.mu, expected, got: Some(rep.verdict), error: None },
                Err(e) => {
                    SotomayorCheck { kind: bd.kind, mu: bd.sample.mu, expected, got: None, error: Some(e.to_string()) }
                }
            }
        })
        .collect()
}

fn diagram(input: &DiagramInput<'_>, family: Degeneracy, r: f64) -> DiagramReport {
    let mut rep = DiagramReport {
        name: input.name.to_string(),
        case: None,
        declared_case: input.declared_case.map(|c| c.to_vec()),
        case_matches: false,
        sectors: vec![],
        repeated: vec![],
        sotomayor: vec![],
        error: None,
    };
    if input.system.degeneracy != family {
        rep.error = Some(format!("system is {}, not {}", input.system.degeneracy.name(), family.name()));
        return rep;
    }
    match select_case(input.system) {
        Ok(c) => {
            rep.case_matches = c.supported && input.declared_case.is_none_or(|d| d == c.signs.as_slice());
            if !c.supported {
                rep.error = Some(c.notes.join("; "));
            }
            rep.case = Some(c);
        }
        Err(e) => {
            rep.error = Some(e.to_string());
            return rep;
        }
    }
    match decompose(input.system, r) {
        Ok(s) => rep.sectors = s,
        Err(e) => {
            rep.error = Some(e.to_string());
            return rep;
        }
    }
    let mut seen = BTreeMap::<&str, usize>::new();
    for s in &rep.sectors {
        *seen.entry(s.signature.as_str()).or_default() += 1;
    }
    rep.repeated = seen.into_iter().filter(|(_, n)| *n > 1).map(|(s, _)| s.to_string()).collect();
    rep.sotomayor = sotomayor_suite(input.system, r);
    rep
}

/// Sector signatures of every diagram against the table columns of the family.
///
/// Tables list each distinct signature once, so the comparison is between the set of
/// computed signatures and the set of columns.
pub fn verify_tables(family: Degeneracy, inputs: &[DiagramInput<'_>], r: f64) -> VerificationReport {
    let diagrams: Vec<DiagramReport> = inputs.par_iter().map(|i| diagram(i, family, r)).collect();
    let table: BTreeSet<String> = table_columns(family).into_iter().collect();
    let mut per_sig = BTreeMap::<String, BTreeSet<usize>>::new();
    for (k, d) in diagrams.iter().enumerate() {
        for s in &d.sectors {
            per_sig.entry(s.signature.clone()).or_default().insert(k);
        }
    }
    let computed: BTreeSet<String> = per_sig.keys().cloned().collect();
    let matched: Vec<String> = computed.intersection(&table).cloned().collect();
    let unmatched_computed: Vec<String> = computed.difference(&table).cloned().collect();
    let unmatched_table: Vec<String> = table.difference(&computed).cloned().collect();
    let shared: Vec<String> = per_sig.iter().filter(|(_, d)| d.len() > 1).map(|(s, _)| s.clone()).collect();
    let expected_regions = table.len();
    let all_ok = diagrams
        .iter()
        .all(|d| d.error.is_none() && d.case_matches && d.sotomayor.iter().all(SotomayorCheck::ok));
    let passed = all_ok
        && !diagrams.is_empty()
        && unmatched_computed.is_empty()
        && unmatched_table.is_empty()
        && computed.len() == expected_regions;
    VerificationReport {
        family,
        radius: r,
        total_sectors: diagrams.iter().map(|d| d.sectors.len()).sum(),
        distinct_signatures: computed.len(),
        expected_regions,
        diagrams,
        matched,
        unmatched_computed,
        unmatched_table,
        shared_across_diagrams: shared,
        passed,
    }
}

impl VerificationReport {
    /// Plain-text rendering: one column per distinct signature, rows per equilibrium label.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family {} at r = {:e}", self.family.name(), self.radius);
        for d in &self.diagrams {
            let case = d.case.as_ref().map(|c| c.sign_string()).unwrap_or_else(|| "?".into());
            let _ = write!(s, "  {:<28} case {:<16} sectors {:>2}", d.name, case, d.sectors.len());
            if !d.case_matches {
                let _ = write!(s, "  CASE MISMATCH (declared {:?})", d.declared_case);
            }
            if let Some(e) = &d.error {
                let _ = write!(s, "  error: {e}");
            }
            let bad = d.sotomayor.iter().filter(|c| !c.ok()).count();
            let _ = writeln!(s, "  sotomayor {}/{}", d.sotomayor.len() - bad, d.sotomayor.len());
            for c in d.sotomayor.iter().filter(|c| !c.ok()) {
                let _ = writeln!(s, "    {} at ({:e}, {:e}): expected {:?}, got {:?} {}", c.kind, c.mu.mu1, c.mu.mu2, c.expected, c.got, c.error.clone().unwrap_or_default());
            }
        }
        let labels = Label::family(self.family);
        let cols: Vec<&String> = self.matched.iter().chain(&self.unmatched_computed).collect();
        for (row, l) in labels.iter().enumerate() {
            let _ = write!(s, "  {:<4}", l.name());
            for c in &cols {
                let _ = write!(s, " {}", c.as_bytes()[row] as char);
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(
            s,
            "distinct signatures {} (expected {}), sectors {}, matched {}",
            self.distinct_signatures,
            self.expected_regions,
            self.total_sectors,
            self.matched.len()
        );
        if !self.unmatched_computed.is_empty() {
            let _ = writeln!(s, "computed but not in table: {}", self.unmatched_computed.join(" "));
        }
        if !self.unmatched_table.is_empty() {
            let _ = writeln!(s, "in table but not computed: {}", self.unmatched_table.join(" "));
        }
        let _ = writeln!(s, "{}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

/// Letters only, so `Kind::Degenerate` never reaches a table comparison silently.
pub fn is_table_letter(c: char) -> bool {
    matches!(c, 's' | 'a' | 'r' | '-')
}
