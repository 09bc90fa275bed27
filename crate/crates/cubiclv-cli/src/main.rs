use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use cubiclv::bifurcation::{trace_curve, write_curves_csv, CurveKind};
use cubiclv::dynamics::{portrait, render_svg, write_csv};
use cubiclv::equilibria::find_equilibria;
use cubiclv::fixtures::{canonical_family, load_dir, parse_config, parse_family};
use cubiclv::model::{Degeneracy, ParamPoint, ReducedSystem};
use cubiclv::oracle::compare_roots;
use cubiclv::regions::{region_membership, select_case, verify_tables, DiagramInput};
use cubiclv::Error;

const THREADS_ENV: &str = "CUBICLV_THREADS";

#[derive(Parser)]
#[command(name = "cubiclv", version, about = "Local bifurcation analysis of planar cubic Lotka-Volterra systems")]
struct Cli {
    /// Worker threads for parallel passes (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Case summary, equilibria and enclosing region at one parameter point.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_mu)]
        mu: ParamPoint,
        /// Cross-check the roots against the grid oracle with this jitter seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Trace bifurcation curves on circles of the given radii.
    Curves {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        radii: Vec<f64>,
        /// Curve kinds to trace (e.g. T1,D-,H); defaults to every admissible kind.
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase portrait from a grid of initial conditions plus saddle separatrices.
    Portrait {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_mu)]
        mu: ParamPoint,
        #[arg(long, default_value_t = 10)]
        grid: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the region signatures of a fixture family against the reference tables.
    Verify {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1e-3)]
        r: f64,
        /// Directory of fixture files; the bundled fixtures are used when absent.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Write the rendered report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mu(s: &str) -> Result<ParamPoint, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts[..] else {
        return Err(format!("expected two comma-separated values, got {s:?}"));
    };
    let v = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(ParamPoint::new(v(a)?, v(b)?))
}

fn parse_kind(s: &str) -> Option<CurveKind> {
    use CurveKind::*;
    [T1, T2, T3, T3plus, T4, T4plus, DBranchNeg, DBranchPos, H, Xplus, Xminus, Yplus, Yminus]
        .into_iter()
        .find(|k| k.to_string().eq_ignore_ascii_case(s))
}

/// Failure with a documented exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Sign(_)
            | Error::Division { .. }
            | Error::InvalidArgument(_)
            | Error::RadiusOutOfRange(_) => 2,
            Error::UnsupportedCase(_) => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let code = match e.downcast_ref::<Error>() {
            Some(inner) => Failure::from(inner.clone()).code,
            None => 1,
        };
        Failure { code, message: format!("{e:#}") }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load(path: &Path) -> Result<ReducedSystem, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })?;
    Ok(parse_config(&text)?.0)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn analyze(config: &Path, mu: ParamPoint, seed: Option<u64>) -> Outcome {
    let sys = load(config)?;
    let case = select_case(&sys)?;
    println!("class {}", sys.degeneracy.name());
    println!("case {} ({})", case.sign_string(), case.quantities.join(", "));
    for n in &case.notes {
        println!("note: {n}");
    }
    let set = find_equilibria(&sys, mu)?;
    println!("mu ({:e}, {:e})", mu.mu1, mu.mu2);
    for e in &set.equilibria {
        let ev: Vec<String> = e
            .eigenvalues
            .iter()
            .map(|l| if l.im == 0.0 { format!("{:e}", l.re) } else { format!("{:e}{:+e}i", l.re, l.im) })
            .collect();
        println!(
            "  {:<4} xi ({:e}, {:e})  eig [{}]  {:?}  {}{}",
            e.label.name(),
            e.xi[0],
            e.xi[1],
            ev.join(", "),
            e.kind,
            if e.proper { "proper" } else { "virtual" },
            if e.trivial { " trivial" } else { "" }
        );
    }
    for n in &set.notes {
        println!("note: {n:?}");
    }
    match region_membership(&sys, mu) {
        Ok(r) => println!(
            "region sector {} signature {} between {} and {}",
            r.sector_id, r.signature, r.bounding.0, r.bounding.1
        ),
        Err(e @ (Error::OnCurve(_) | Error::RadiusOutOfRange(_))) => println!("region: {e}"),
        Err(e) => return Err(e.into()),
    }
    if let Some(seed) = seed {
        if mu.norm() > 0.0 {
            let cmp = compare_roots(&sys, mu, 64, seed, 1e-9)?;
            println!("oracle (seed {seed}): {}", if cmp.agrees() { "agrees" } else { "DISAGREES" });
            if !cmp.agrees() {
                return Err(Failure { code: 1, message: format!("{cmp:?}") });
            }
        }
    }
    Ok(())
}

fn curves(config: &Path, radii: &[f64], kinds: &[String], out: Option<&Path>) -> Outcome {
    let sys = load(config)?;
    if sys.degeneracy == Degeneracy::DoublyDegenerate {
        return Err(Error::UnsupportedCase("theta(0) = delta(0) = 0 is out of scope".into()).into());
    }
    let wanted: Vec<CurveKind> = if kinds.is_empty() {
        CurveKind::all_for(sys.degeneracy)
    } else {
        let mut v = Vec::new();
        for k in kinds {
            match parse_kind(k) {
                Some(kind) => v.push(kind),
                None => return Err(Error::InvalidArgument(format!("unknown curve kind {k:?}")).into()),
            }
        }
        v
    };
    let mut traced = Vec::new();
    for kind in wanted {
        if !kind.admissible(sys.degeneracy) {
            println!("{kind}: skipped, not applicable to class {}", sys.degeneracy.name());
            continue;
        }
        let c = trace_curve(&sys, kind, radii)?;
        let fit = match (c.leading, c.predicted_leading) {
            (Some(a), Some(b)) => format!("  leading {a:.6e} (predicted {b:.6e})"),
            _ => String::new(),
        };
        println!("{kind}: {} samples  [{}]{fit}", c.samples.len(), c.halfline_constraint);
        for n in &c.notes {
            println!("  note: {n}");
        }
        traced.push(c);
    }
    if let Some(path) = out {
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &traced).context("formatting curves")?;
        write_file(path, &buf)?;
    }
    Ok(())
}

fn portrait_cmd(config: &Path, mu: ParamPoint, grid: usize, svg: Option<&Path>, csv: Option<&Path>) -> Outcome {
    let sys = load(config)?;
    let p = portrait(&sys, mu, grid)?;
    println!("window [0, {:e}]^2, {} trajectories, {} separatrices", p.window.side, p.trajectories.len(), p.separatrices.len());
    for (name, n) in p.terminal_counts() {
        println!("  {name}: {n}");
    }
    println!("min coordinate {:e}", p.min_coordinate());
    if let Some(path) = svg {
        write_file(path, render_svg(&p).as_bytes())?;
    }
    if let Some(path) = csv {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write_csv(&mut w, &p).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn verify(family: &str, r: f64, fixtures: Option<&Path>, out: Option<&Path>) -> Outcome {
    let family = parse_family(family)?;
    if family == Degeneracy::DoublyDegenerate {
        return Err(Error::UnsupportedCase("theta(0) = delta(0) = 0 has no reference table".into()).into());
    }
    let fx = match fixtures {
        Some(dir) => load_dir(dir)?.into_iter().filter(|f| f.family == family).collect(),
        None => canonical_family(family),
    };
    if fx.is_empty() {
        return Err(Error::Config(format!("no fixtures for family {}", family.name())).into());
    }
    let inputs: Vec<DiagramInput<'_>> = fx
        .iter()
        .map(|f| DiagramInput { name: &f.name, system: &f.system, declared_case: Some(&f.case) })
        .collect();
    let rep = verify_tables(family, &inputs, r);
    let text = rep.render();
    print!("{text}");
    if let Some(path) = out {
        write_file(path, text.as_bytes())?;
    }
    if rep.passed {
        Ok(())
    } else {
        Err(Failure { code: 1, message: "verification failed".into() })
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: 2, message: format!("{THREADS_ENV}: {e}") })?;
    }
    match cli.command {
        Command::Analyze { config, mu, seed } => analyze(&config, mu, seed),
        Command::Curves { config, radii, kinds, out } => curves(&config, &radii, &kinds, out.as_deref()),
        Command::Portrait { config, mu, grid, svg, csv } => {
            portrait_cmd(&config, mu, grid, svg.as_deref(), csv.as_deref())
        }
        Command::Verify { family, r, fixtures, out } => verify(&family, r, fixtures.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
