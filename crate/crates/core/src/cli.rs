//! The `curvlie` command line.
//!
//! Exit codes: 0 clean, 1 a mathematical witness or violation was found,
//! 2 bad input or usage.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::algebra::{AlgebraDocument, LieAlgebra, Subalgebra, Vector};
use crate::curvature::{assert_nonneg, LeftInvariantMetric, NonnegVerdict};
use crate::error::Error;
use crate::infinitesimal::check_inf_nonneg;
use crate::numerics::SymmetricEndomorphism;
use crate::paths::{kappa_closed_form, kappa_direct, linspace, InverseLinearPath};
use crate::rescale::{coefficient_relations, rescaled_deformation, verify_curve_relation};
use crate::sampling;
use crate::scaling::{bracket_ratio_sup, lambda_to_t, max_stretch_check, RatioVerdict, StretchVerdict};
use crate::so4;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BUDGET: u64 = 10_000;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_GRID_COUNT: usize = 50;
/// Fraction of the upper domain bound covered by the default grid.
pub const DEFAULT_GRID_FRACTION: f64 = 0.9;
pub const SEED_ENV: &str = "CURVLIE_SEED";

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_WITNESS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "curvlie", version, about = "Curvature of left-invariant metrics along inverse-linear paths")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Search settings shared by the randomized commands.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// RNG seed; defaults to $CURVLIE_SEED, then 42.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

impl RunConfig {
    pub fn seed(&self) -> Result<u64, String> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got {v:?}")),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check structure constants, metric and factors.
    Validate { algebra: PathBuf },
    /// Tabulate κ(t) along a path, closed form against direct evaluation.
    Path(PathArgs),
    /// Infinitesimal nonnegativity search for Ψ.
    Infnn {
        algebra: PathBuf,
        psi: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Search for a negatively curved plane of the metric Φ.
    Nonneg {
        algebra: PathBuf,
        phi: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Scale a subalgebra by a factor.
    Scale(ScaleArgs),
    /// SO(4) structure checks.
    So4 {
        #[command(subcommand)]
        command: So4Command,
    },
    /// Check the rescaling relations for Υ = (1−λ)I + λΨ.
    RescaleCheck(RescaleArgs),
}

#[derive(Debug, Args)]
pub struct PathArgs {
    pub algebra: PathBuf,
    /// Ψ as a JSON matrix.
    #[arg(long, conflicts_with = "from_metric", required_unless_present = "from_metric")]
    pub psi: Option<PathBuf>,
    /// Φ as a JSON matrix; uses Ψ = I − Φ⁻¹.
    #[arg(long)]
    pub from_metric: Option<PathBuf>,
    /// X and Y as JSON arrays.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], required = true)]
    pub plane: Vec<String>,
    /// start,stop,count
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    pub algebra: PathBuf,
    /// Spanning vectors: `eK` (1-based basis vector) or a JSON array.
    #[arg(long, num_args = 1.., required = true)]
    pub sub: Vec<String>,
    #[arg(long)]
    pub factor: f64,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Subcommand)]
pub enum So4Command {
    /// Singular eigenvector, product, torus form, invariant plane, block form.
    Classify {
        phi: PathBuf,
        /// Algebra file; defaults to the standard so(4).
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[command(flatten)]
        config: RunConfig,
    },
}

#[derive(Debug, Args)]
pub struct RescaleArgs {
    pub algebra: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    /// Ψ as a JSON matrix; defaults to a seeded I − Φ⁻¹.
    #[arg(long)]
    pub psi: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["X", "Y"])]
    pub plane: Option<Vec<String>>,
    #[arg(long, default_value_t = 51)]
    pub points: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

/// A failure that maps to an exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_CLEAN };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Validate { algebra } => cmd_validate(&algebra, out, err),
        Command::Path(a) => cmd_path(&a, out),
        Command::Infnn { algebra, psi, config } => cmd_infnn(&algebra, &psi, &config, out),
        Command::Nonneg { algebra, phi, config } => cmd_nonneg(&algebra, &phi, &config, out),
        Command::Scale(a) => cmd_scale(&a, out),
        Command::So4 {
            command: So4Command::Classify { phi, algebra, config },
        } => cmd_so4(&phi, algebra.as_deref(), &config, out),
        Command::RescaleCheck(a) => cmd_rescale(&a, out),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn load_algebra(path: &Path) -> Result<LieAlgebra, Failure> {
    let text = read(path)?;
    let doc: AlgebraDocument =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(LieAlgebra::from_document(&doc)?)
}

pub fn load_matrix(path: &Path, dim: usize) -> Result<SymmetricEndomorphism, Failure> {
    let text = read(path)?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    if rows.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rows.len(),
        }
        .into());
    }
    Ok(SymmetricEndomorphism::from_rows(&rows)?)
}

pub fn parse_vector(text: &str, dim: usize) -> Result<Vector, Failure> {
    let v: Vec<f64> =
        serde_json::from_str(text).map_err(|e| Failure::input(format!("vector {text:?}: {e}")))?;
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        }
        .into());
    }
    Ok(Vector::from_vec(v))
}

/// `eK` (1-based) or a JSON array.
pub fn parse_sub_token(token: &str, dim: usize) -> Result<Vector, Failure> {
    if let Some(k) = token.strip_prefix('e') {
        let k: usize = k
            .parse()
            .map_err(|_| Failure::input(format!("bad basis token {token:?}")))?;
        if k == 0 || k > dim {
            return Err(Failure::input(format!("basis index {token} out of range 1..={dim}")));
        }
        let mut v = Vector::zeros(dim);
        v[k - 1] = 1.0;
        return Ok(v);
    }
    parse_vector(token, dim)
}

fn parse_grid(spec: &str) -> Result<(f64, f64, usize), Failure> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || Failure::input(format!("grid must be start,stop,count; got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start = parts[0].parse().map_err(|_| bad())?;
    let stop = parts[1].parse().map_err(|_| bad())?;
    let count = parts[2].parse().map_err(|_| bad())?;
    Ok((start, stop, count))
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    writeln!(out, "{s}")?;
    Ok(())
}

/// 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match load_algebra(path) {
        Ok(g) => {
            writeln!(
                out,
                "valid: dim {}, {} factor(s), Jacobi residual {:e}",
                g.dim(),
                g.factors().len(),
                g.jacobi_residual()
            )?;
            Ok(EXIT_CLEAN)
        }
        Err(f) => {
            writeln!(err, "invalid: {}", f.message)?;
            Ok(EXIT_INPUT)
        }
    }
}

fn cmd_path(a: &PathArgs, out: &mut dyn Write) -> CmdResult {
    let g = load_algebra(&a.algebra)?;
    let n = g.dim();
    let path = match (&a.psi, &a.from_metric) {
        (Some(p), None) => InverseLinearPath::new(load_matrix(p, n)?)?,
        (None, Some(p)) => InverseLinearPath::from_metric(&load_matrix(p, n)?)?,
        _ => return Err(Failure::input("exactly one of --psi and --from-metric is required")),
    };
    let x = parse_vector(&a.plane[0], n)?;
    let y = parse_vector(&a.plane[1], n)?;
    let (start, stop, count) = match &a.grid {
        Some(s) => parse_grid(s)?,
        None => {
            let hi = path.domain().1;
            let stop = if hi.is_finite() { DEFAULT_GRID_FRACTION * hi } else { 1.0 };
            (0.0, stop, DEFAULT_GRID_COUNT)
        }
    };
    let mut csv = String::from("t,kappa_closed,kappa_direct,abs_diff\n");
    let mut worst_ok = true;
    for t in linspace(start, stop, count) {
        let closed = kappa_closed_form(&g, &path, &x, &y, t)?;
        let direct = kappa_direct(&g, &path, &x, &y, t)?;
        let diff = (closed - direct).abs();
        if diff > a.tol * direct.abs().max(1.0) {
            worst_ok = false;
        }
        csv.push_str(&format!("{},{},{},{}\n", fmt_f64(t), fmt_f64(closed), fmt_f64(direct), fmt_f64(diff)));
    }
    match &a.out {
        Some(p) => fs::write(p, csv).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(if worst_ok { EXIT_CLEAN } else { EXIT_WITNESS })
}

fn cmd_infnn(alg: &Path, psi: &Path, config: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let g = load_algebra(alg)?;
    let psi = load_matrix(psi, g.dim())?;
    let seed = config.seed().map_err(Failure::input)?;
    let report = check_inf_nonneg(&g, &psi, config.tol, config.budget as usize, seed);
    print_json(out, &report)?;
    Ok(if report.is_refuted() { EXIT_WITNESS } else { EXIT_CLEAN })
}

fn cmd_nonneg(alg: &Path, phi: &Path, config: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let g = load_algebra(alg)?;
    let metric = LeftInvariantMetric::new(load_matrix(phi, g.dim())?)?;
    let seed = config.seed().map_err(Failure::input)?;
    let budget = config.budget as usize;
    let verdict = assert_nonneg(&g, &metric, config.tol, budget, seed);
    let body = match &verdict {
        NonnegVerdict::Refuted(w) => json!({
            "verdict": "Refuted", "min_value": w.value, "witness": w, "budget": budget, "seed": seed,
        }),
        NonnegVerdict::NoWitnessFound { min_value, best } => json!({
            "verdict": "NoWitnessFound", "min_value": min_value, "best": best, "budget": budget, "seed": seed,
        }),
    };
    print_json(out, &body)?;
    Ok(if verdict.is_refuted() { EXIT_WITNESS } else { EXIT_CLEAN })
}

fn cmd_scale(a: &ScaleArgs, out: &mut dyn Write) -> CmdResult {
    let g = load_algebra(&a.algebra)?;
    let vectors = a
        .sub
        .iter()
        .map(|t| parse_sub_token(t, g.dim()))
        .collect::<Result<Vec<_>, _>>()?;
    let sub = Subalgebra::new(&g, &vectors)?;
    if !(a.factor > 0.0) {
        return Err(Error::NonPositiveLambda(a.factor).into());
    }
    let t = lambda_to_t(a.factor);
    if sub.is_abelian(&g) {
        let verdict = max_stretch_check(&g, &sub, t)?;
        let body = json!({
            "factor": a.factor, "t": t, "abelian": true, "stretch": verdict,
        });
        print_json(out, &body)?;
        Ok(match verdict {
            StretchVerdict::Preserves { .. } => EXIT_CLEAN,
            StretchVerdict::Fails { .. } => EXIT_WITNESS,
        })
    } else {
        let seed = a.config.seed().map_err(Failure::input)?;
        let verdict = bracket_ratio_sup(&g, &sub, a.config.budget as usize, seed);
        let body = json!({
            "factor": a.factor, "t": t, "abelian": false, "bracket_ratio": verdict, "seed": seed,
        });
        print_json(out, &body)?;
        Ok(match verdict {
            RatioVerdict::BoundedBy(_) => EXIT_CLEAN,
            RatioVerdict::UnboundedWitness { .. } => EXIT_WITNESS,
        })
    }
}

fn cmd_so4(phi: &Path, alg: Option<&Path>, config: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let g = match alg {
        Some(p) => load_algebra(p)?,
        None => LieAlgebra::so4(),
    };
    let phi = load_matrix(phi, g.dim())?;
    let seed = config.seed().map_err(Failure::input)?;
    let report = so4::classify(&g, &phi, config.tol, config.budget as usize, seed)?;
    print_json(out, &report)?;
    Ok(if report.torus_bound_violated() { EXIT_WITNESS } else { EXIT_CLEAN })
}

fn cmd_rescale(a: &RescaleArgs, out: &mut dyn Write) -> CmdResult {
    let g = load_algebra(&a.algebra)?;
    let n = g.dim();
    let seed = match a.seed {
        Some(s) => s,
        None => RunConfig {
            seed: None,
            budget: 1,
            tol: a.tol,
        }
        .seed()
        .map_err(Failure::input)?,
    };
    let mut rng = sampling::rng(seed);
    let psi = match &a.psi {
        Some(p) => load_matrix(p, n)?,
        None => seeded_psi(&mut rng, n)?,
    };
    let (x, y) = match &a.plane {
        Some(p) => (parse_vector(&p[0], n)?, parse_vector(&p[1], n)?),
        None => (sampling::unit_vector(&mut rng, n), sampling::unit_vector(&mut rng, n)),
    };
    rescaled_deformation(&psi, a.lambda)?;
    let grid = linspace(0.0, 1.0, a.points);
    let curve = verify_curve_relation(&g, &psi, a.lambda, &x, &y, &grid)?;
    let coeffs = coefficient_relations(&g, &psi, a.lambda, &x, &y)?;
    let ok = curve.max_residual <= a.tol && coeffs.max_residual() <= a.tol && curve.endpoints_fixed;
    let body = json!({
        "lambda": a.lambda,
        "seed": seed,
        "max_residual": curve.max_residual,
        "endpoints_fixed": curve.endpoints_fixed,
        "points": curve.points,
        "coefficient_residuals": coeffs.residuals,
        "d_residual": coeffs.d_residual,
    });
    print_json(out, &body)?;
    Ok(if ok { EXIT_CLEAN } else { EXIT_WITNESS })
}

/// `Ψ = I − Φ⁻¹` with `Φ = AAᵀ/2 + 0.3·I` for Gaussian `A`.
fn seeded_psi(rng: &mut sampling::SearchRng, n: usize) -> Result<SymmetricEndomorphism, Failure> {
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| sampling::gaussian(rng, 1)[0]);
    let phi = SymmetricEndomorphism::symmetrized(&a * a.transpose() * 0.5 + nalgebra::DMatrix::identity(n, n) * 0.3);
    Ok(SymmetricEndomorphism::identity(n).combine(1.0, &phi.inverse()?, -1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_tokens() {
        assert_eq!(parse_sub_token("e3", 3).unwrap(), Vector::from_column_slice(&[0.0, 0.0, 1.0]));
        assert_eq!(parse_sub_token("[1,2,3]", 3).unwrap(), Vector::from_column_slice(&[1.0, 2.0, 3.0]));
        assert!(parse_sub_token("e0", 3).is_err());
        assert!(parse_sub_token("e4", 3).is_err());
        assert!(parse_sub_token("[1,2]", 3).is_err());
    }

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("0, 1.5,7").unwrap(), (0.0, 1.5, 7));
        assert!(parse_grid("0,1").is_err());
    }

    #[test]
    fn csv_number_format() {
        assert_eq!(fmt_f64(-1.0 / 6.0), "-1.6666666666666666e-1");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["curvlie", "bogus"], &mut o, &mut e), EXIT_INPUT);
        assert_eq!(run(["curvlie", "--help"], &mut o, &mut e), EXIT_CLEAN);
    }
}
