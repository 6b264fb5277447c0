use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use motion_factor::bennett::{
    build_replacement_linkage, random_replacement_linkage, synthesize_bennett, ReplacementLinkage, SynthesisDiagnosis,
};
use motion_factor::factor::{all_factorizations, factor_with_order, verify_factorization, Factorization};
use motion_factor::linkage::{
    export_trajectory, import_linkage, import_motion, import_poses, loop_residual, parameter_range, standard_sweep,
    trajectory, Linkage,
};
use motion_factor::special::{
    circular_translation_factors, elliptic_translation, multiplication_trick_planar, multiplication_trick_spatial,
    random_brace, TranslationSpec,
};
use motion_factor::tolerance::{set_tolerance, LOOP_TOLERANCE};
use motion_factor::{DualQuaternion, Param};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mofact", version, about = "Motion polynomial factorization and linkage synthesis")]
struct Cli {
    /// Zero tolerance for all numerical decisions.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the result to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a motion polynomial into linear rotation factors.
    Factor {
        motion: PathBuf,
        /// Order of the norm factors as 1-based indices, e.g. 2,1.
        #[arg(long, value_delimiter = ',', conflicts_with = "all")]
        order: Option<Vec<usize>>,
        /// All factorizations.
        #[arg(long)]
        all: bool,
    },
    /// Synthesize a Bennett linkage through three poses.
    Bennett {
        #[arg(long)]
        poses: PathBuf,
    },
    /// Replacement 6R/5R linkage of a quadratic motion via Bennett flips.
    Flip {
        #[arg(long)]
        motion: PathBuf,
        /// Eight comma-separated coordinates of p, or "random".
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Factor pair of a circular translation.
    Circular {
        #[arg(long)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
    },
    /// Four-factor factorization of (t² + 1)·C for an elliptic translation.
    Elliptic {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Spatial instead of planar factors.
        #[arg(long)]
        spatial: bool,
        /// Also brace the factor chain into a linkage.
        #[arg(long)]
        brace: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check the loop closure of a linkage file.
    Verify {
        linkage: PathBuf,
        /// "default" or comma-separated parameters ("inf" allowed).
        #[arg(long, default_value = "default", allow_hyphen_values = true)]
        sweep: String,
    },
    /// Sample the trajectory of a point as CSV.
    Traj {
        #[arg(long)]
        motion: PathBuf,
        /// X,Y,Z
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// TMIN:TMAX:N
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        /// Append the sample at t = ∞.
        #[arg(long)]
        inf: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("not a number: {x:?}")))
        .collect()
}

fn parse_param(s: &str) -> Result<Param> {
    match s.trim() {
        "inf" | "∞" => Ok(Param::Infinity),
        x => Ok(Param::Finite(x.parse().with_context(|| format!("not a parameter: {x:?}"))?)),
    }
}

fn factor_json(f: &Factorization, order: Option<&[usize]>, residual: f64) -> Value {
    json!({
        "order": order.map(|o| o.iter().map(|i| i + 1).collect::<Vec<_>>()),
        "factors": f.factors.iter().map(|h| h.to_array()).collect::<Vec<_>>(),
        "kinds": f.kinds(),
        "norms": f.norms,
        "leading": f.leading.to_array(),
        "residual": residual,
    })
}

fn cmd_factor(motion: &Path, order: Option<Vec<usize>>, all: bool) -> Result<Value> {
    let c = import_motion(&read(motion)?)?;
    if all {
        let set = all_factorizations(&c)?;
        let factorizations: Vec<Value> = set
            .factorizations
            .iter()
            .map(|(o, f)| factor_json(f, Some(o), verify_factorization(&c, f)))
            .collect();
        let failures: Vec<Value> = set
            .failures
            .iter()
            .map(|(o, e)| json!({"order": o.iter().map(|i| i + 1).collect::<Vec<_>>(), "error": e.to_string()}))
            .collect();
        return Ok(json!({
            "norms": set.norms,
            "coincident": set.coincident,
            "factorizations": factorizations,
            "failures": failures,
        }));
    }
    let order: Vec<usize> = match order {
        Some(o) => o
            .into_iter()
            .map(|i| i.checked_sub(1).ok_or_else(|| anyhow!("order indices start at 1")))
            .collect::<Result<_>>()?,
        None => (0..c.degree()).collect(),
    };
    let f = factor_with_order(&c, &order)?;
    let r = verify_factorization(&c, &f);
    Ok(factor_json(&f, Some(&order), r))
}

fn cmd_bennett(poses: &Path) -> Result<Value> {
    let [p0, p1, p2] = import_poses(&read(poses)?)?;
    let d = synthesize_bennett(p0, p1, p2)?;
    let kind = d.kind();
    Ok(match d {
        SynthesisDiagnosis::Bennett4R(b) => json!({
            "diagnosis": kind,
            "lambda": b.interpolant.lambda,
            "mu": b.interpolant.mu,
            "motion": b.interpolant.motion.coeffs().iter().map(|h| h.to_array()).collect::<Vec<_>>(),
            "norms": b.norms,
            "closure": b.closure,
            "residual": b.residual,
            "linkage": b.linkage,
        }),
        other => json!({ "diagnosis": kind, "details": other }),
    })
}

fn replacement_json(r: &ReplacementLinkage, seed: Option<u64>) -> Value {
    json!({
        "linkage": r.linkage,
        "merged": r.merged,
        "motion_link": r.motion_link,
        "residual": r.residual,
        "flip": {
            "p": r.flip.p.to_array(),
            "f": r.flip.f.to_array(),
            "g": r.flip.g.to_array(),
            "r": r.flip.r.to_array(),
            "q": r.flip.q.to_array(),
            "residual": r.flip.residual,
        },
        "seed": seed,
    })
}

fn cmd_flip(motion: &Path, p: &str, seed: u64) -> Result<Value> {
    let c = import_motion(&read(motion)?)?;
    if c.degree() != 2 {
        bail!("flip needs a quadratic motion polynomial, got degree {}", c.degree());
    }
    let f = factor_with_order(&c, &[0, 1])?;
    let (h1, h2) = (f.factors[0], f.factors[1]);
    if p.trim() == "random" {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_replacement_linkage(h1, h2, &mut rng)?;
        return Ok(replacement_json(&r, Some(seed)));
    }
    let v = parse_numbers(p)?;
    let arr: [f64; 8] = v.try_into().map_err(|v: Vec<f64>| anyhow!("--p needs 8 numbers, got {}", v.len()))?;
    let r = build_replacement_linkage(h1, h2, DualQuaternion::from_array(arr))?;
    Ok(replacement_json(&r, None))
}

fn cmd_circular(a: f64, lambda: f64, mu: f64) -> Result<Value> {
    let spec = TranslationSpec::new(a, a)?;
    let (h1, h2) = circular_translation_factors(a, lambda, mu);
    let c = elliptic_translation(spec);
    let f = Factorization::from_factors(vec![h1, h2]);
    let residual = verify_factorization(&c, &f);
    Ok(json!({
        "motion": c.coeffs().iter().map(|h| h.to_array()).collect::<Vec<_>>(),
        "factors": [h1.to_array(), h2.to_array()],
        "residual": residual,
    }))
}

fn cmd_elliptic(a: f64, b: f64, spatial: bool, brace: bool, seed: u64) -> Result<Value> {
    let spec = TranslationSpec::new(a, b)?;
    let trick = if spatial { multiplication_trick_spatial(spec) } else { multiplication_trick_planar(spec) };
    if trick.circular {
        eprintln!("note: a = b is a circular translation; the two-factor closed form (`circular`) also applies");
    }
    let mut out = json!({
        "a": a,
        "b": b,
        "kind": if spatial { "spatial" } else { "planar" },
        "factors": trick.factorization.factors.iter().map(|h| h.to_array()).collect::<Vec<_>>(),
        "residual": trick.residual,
    });
    if brace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain = random_brace(&trick.factorization.factors, &mut rng)?;
        out["linkage"] = serde_json::to_value(&chain.linkage)?;
        out["cell_residuals"] = json!(chain.cell_residuals);
        out["terminal_link"] = json!(chain.terminal_link);
        out["seed"] = json!(seed);
    }
    Ok(out)
}

/// Returns the report and whether every loop passed.
fn cmd_verify(path: &Path, sweep: &str, threshold: f64) -> Result<(Value, bool)> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).context("parsing linkage file")?;
    let linkage: Linkage = match value.get("linkage") {
        Some(inner) => import_linkage(&inner.to_string())?,
        None => import_linkage(&text)?,
    };
    let ts: Vec<Param> = if sweep.trim() == "default" {
        standard_sweep()
    } else {
        sweep.split(',').map(parse_param).collect::<Result<_>>()?
    };
    let residuals: Vec<f64> = (0..linkage.loops.len())
        .map(|i| loop_residual(&linkage, i, &ts))
        .collect::<std::result::Result<_, _>>()?;
    let max = residuals.iter().copied().fold(0.0, f64::max);
    let pass = residuals.iter().all(|r| *r < threshold);
    Ok((
        json!({
            "type": linkage.kind,
            "joints": linkage.joints.len(),
            "loops": residuals.len(),
            "residuals": residuals,
            "max_residual": max,
            "threshold": threshold,
            "pass": pass,
        }),
        pass,
    ))
}

fn cmd_traj(motion: &Path, point: &str, range: &str, inf: bool, out: &mut dyn Write) -> Result<()> {
    let c = import_motion(&read(motion)?)?;
    let x: [f64; 3] = parse_numbers(point)?
        .try_into()
        .map_err(|_| anyhow!("--point needs X,Y,Z"))?;
    let parts: Vec<&str> = range.split(':').collect();
    let [tmin, tmax, n] = parts[..] else {
        bail!("--range needs TMIN:TMAX:N");
    };
    let ts = parameter_range(
        tmin.parse().context("TMIN")?,
        tmax.parse().context("TMAX")?,
        n.parse().context("N")?,
        inf,
    );
    let pts = trajectory(&c, x, &ts)?;
    export_trajectory(out, &ts, &pts)?;
    Ok(())
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => match writeln!(io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r.context("writing to stdout"),
        },
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            bail!("--tol must be positive");
        }
        set_tolerance(t);
    }
    let output = cli.output.as_deref();
    let value = match cli.command {
        Command::Factor { motion, order, all } => cmd_factor(&motion, order, all)?,
        Command::Bennett { poses } => cmd_bennett(&poses)?,
        Command::Flip { motion, p, seed } => cmd_flip(&motion, &p, seed)?,
        Command::Circular { a, lambda, mu } => cmd_circular(a, lambda, mu)?,
        Command::Elliptic { a, b, spatial, brace, seed } => cmd_elliptic(a, b, spatial, brace, seed)?,
        Command::Verify { linkage, sweep } => {
            let threshold = cli.tol.unwrap_or(LOOP_TOLERANCE);
            let (report, pass) = cmd_verify(&linkage, &sweep, threshold)?;
            emit(output, &serde_json::to_string_pretty(&report)?)?;
            return Ok(pass);
        }
        Command::Traj { motion, point, range, inf } => {
            match output {
                Some(p) => {
                    let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
                    cmd_traj(&motion, &point, &range, inf, &mut io::BufWriter::new(f))?;
                }
                None => cmd_traj(&motion, &point, &range, inf, &mut io::stdout().lock())?,
            }
            return Ok(true);
        }
    };
    emit(output, &serde_json::to_string_pretty(&value)?)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", json!({ "error": chain.first(), "causes": &chain[1..] }));
            ExitCode::from(1)
        }
    }
}
