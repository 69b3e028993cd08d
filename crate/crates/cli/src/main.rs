use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hyptev::corner_laplace::{harmonic_basis, nonvanishing_scan, ConeSpec};
use hyptev::operators::{
    conjugation_residual, greens_identity_residual, greens_identity_terms, sturm_liouville_drift,
    ConformalFactorField, Gaussian, Grid, Model, Polynomial, SmoothFunction,
};
use hyptev::radial_tev::{asymptotic_model, find_eigenvalues_within, RadialProblem};
use hyptev::spectral_curves::{assemble, eigencurves};
use hyptev::Error;

/// Transmission eigenvalues, eigencurves and identity checks on hyperbolic space.
#[derive(Parser, Debug)]
#[command(name = "hyptev", version)]
struct Cli {
    /// Directory for output files without an explicit path.
    #[arg(long, global = true, env = "HYPTEV_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
struct ProblemArgs {
    /// Dimension of hyperbolic space.
    #[arg(long)]
    n: usize,
    /// Hyperbolic radius of the ball.
    #[arg(long = "R")]
    radius: f64,
    /// Constant potential.
    #[arg(long = "V0", allow_hyphen_values = true)]
    v0: f64,
    /// 1 for the Helmholtz flavour, 0 for Schrödinger.
    #[arg(long, default_value_t = 1)]
    nu: u8,
}

impl ProblemArgs {
    fn problem(&self) -> hyptev::Result<RadialProblem> {
        RadialProblem::new(self.n, self.radius, self.v0, self.nu)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ConeKind {
    Orthant,
    Sector,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Identity {
    Conjugation,
    Green,
    SturmLiouville,
    Asymptotic,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Factor {
    Halfspace,
    Ball,
    Constant,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Radial transmission eigenvalues from the matching determinant.
    Eigs {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 2000.0)]
        lambda_max: f64,
        /// Sign-change scan step in lambda.
        #[arg(long, default_value_t = 5.0)]
        step: f64,
        /// Largest hypergeometric t accepted.
        #[arg(long, default_value_t = hyptev::special_functions::DEFAULT_T_ENVELOPE)]
        t_envelope: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Eigencurves of the quadratic-form family on the radial subspace.
    Curves {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Number of radial grid intervals.
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        lambda_min: f64,
        #[arg(long, default_value_t = 2000.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 5.0)]
        lambda_step: f64,
        /// Number of lowest curves to tabulate.
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Nonvanishing scan of corner Laplace transforms of harmonic polynomials.
    Corner {
        #[arg(long, value_enum)]
        cone: ConeKind,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        degree: u32,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta1: f64,
        #[arg(long, default_value_t = 0.5 * PI, allow_hyphen_values = true)]
        theta2: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Numerical checks of the operator identities.
    Verify {
        #[arg(long, value_enum)]
        identity: Identity,
        #[arg(long = "K", value_enum, default_value_t = Factor::Halfspace)]
        factor: Factor,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Upper energy for the asymptotic check.
        #[arg(long, default_value_t = 40000.0)]
        lambda_max: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// A run that completed but whose residual contracts failed.
struct ContractFailure(String);

enum Failure {
    Library(Error),
    Contract(ContractFailure),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    version: &'a str,
    command: &'a str,
    config: C,
    result: R,
}

fn json<C: Serialize, R: Serialize>(command: &str, config: C, result: R) -> String {
    let env = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("serializable");
    s.push('\n');
    s
}

fn destination(dir: &Path, output: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match output {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => dir.join(p),
        None => dir.join(default_name),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    println!("{}", path.display());
    Ok(())
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let dir = cli.output_dir;
    match cli.command {
        Command::Eigs { problem, lambda_max, step, t_envelope, format, output } => {
            let prob = problem.problem()?;
            let list = find_eigenvalues_within(&prob, lambda_max, step, t_envelope)?;
            let path = destination(&dir, &output, &format!("eigs.{}", extension(format)));
            let body = match format {
                Format::Csv => list.to_csv(),
                Format::Json => json(
                    "eigs",
                    serde_json::json!({ "problem": problem, "lambda_max": lambda_max, "step": step, "t_envelope": t_envelope }),
                    &list,
                ),
            };
            write(&path, &body)?;
            if let Some(bad) = list.roots.iter().find(|r| r.residual > 1e-8) {
                return Err(Failure::Contract(ContractFailure(format!(
                    "root {} at lambda = {} has determinant residual {:e}",
                    bad.index, bad.lambda, bad.residual
                ))));
            }
            Ok(())
        }
        Command::Curves { problem, grid, lambda_min, lambda_max, lambda_step, count, format, output } => {
            let prob = problem.problem()?;
            if !(lambda_max > lambda_min && lambda_step > 0.0) {
                return Err(Error::InvalidParameter("need lambda_min < lambda_max and a positive step".into()).into());
            }
            let disc = assemble(&prob, grid)?;
            let steps = ((lambda_max - lambda_min) / lambda_step).round() as usize;
            let lambdas: Vec<f64> = (0..=steps).map(|j| lambda_min + j as f64 * lambda_step).collect();
            let table = eigencurves(&disc, &prob, &lambdas, count)?;
            let path = destination(&dir, &output, &format!("curves.{}", extension(format)));
            let body = match format {
                Format::Csv => table.to_csv(),
                Format::Json => json(
                    "curves",
                    serde_json::json!({ "problem": problem, "grid": grid, "lambda_min": lambda_min,
                        "lambda_max": lambda_max, "lambda_step": lambda_step, "count": count }),
                    &table,
                ),
            };
            write(&path, &body)?;
            for c in &table.crossings {
                eprintln!("crossing at lambda = {:.12e} (multiplicity {})", c.lambda, c.multiplicity);
            }
            if !table.incomplete.is_empty() {
                return Err(Failure::Contract(ContractFailure(format!(
                    "eigensolver failed at {} energies",
                    table.incomplete.len()
                ))));
            }
            Ok(())
        }
        Command::Corner { cone, n, degree, theta1, theta2, samples, seed, output } => {
            let spec = match cone {
                ConeKind::Orthant => ConeSpec::orthant(n)?,
                ConeKind::Sector => {
                    if n != 2 {
                        return Err(Error::InvalidParameter("sectors are planar; use --n 2".into()).into());
                    }
                    ConeSpec::sector(theta1, theta2)?
                }
            };
            let reports = harmonic_basis(n, degree)?
                .iter()
                .map(|p| nonvanishing_scan(p, &spec, samples, seed))
                .collect::<hyptev::Result<Vec<_>>>()?;
            let path = destination(&dir, &output, "corner.json");
            let config = serde_json::json!({ "cone": spec, "n": n, "degree": degree, "samples": samples, "seed": seed });
            write(&path, &json("corner", config, &reports))?;
            let threshold = 1e-6;
            if let Some(r) = reports.iter().find(|r| r.relative_max() <= threshold) {
                return Err(Failure::Contract(ContractFailure(format!(
                    "max |L| / |P| = {:e} does not exceed {threshold:e}",
                    r.relative_max()
                ))));
            }
            Ok(())
        }
        Command::Verify { identity, factor, n, seed, lambda_max, output } => {
            let report = match identity {
                Identity::Conjugation => verify_conjugation(factor, n, seed)?,
                Identity::Green => verify_green(n, seed)?,
                Identity::SturmLiouville => verify_sturm_liouville(n),
                Identity::Asymptotic => verify_asymptotic(lambda_max)?,
            };
            let path = destination(&dir, &output, "verify.json");
            let config = serde_json::json!({ "identity": identity, "K": factor, "n": n, "seed": seed, "lambda_max": lambda_max });
            write(&path, &json("verify", config, &report))?;
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Contract(ContractFailure(format!("{} check failed", report.identity))))
            }
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    identity: String,
    pass: bool,
    /// Residuals per case, in refinement order.
    residuals: Vec<Vec<f64>>,
    /// Successive residual ratios (or other per-case figures of merit).
    ratios: Vec<Vec<f64>>,
    criterion: String,
}

fn random_functions(rng: &mut ChaCha8Rng, center: &[f64]) -> Vec<Box<dyn SmoothFunction>> {
    let n = center.len();
    let gaussian = |rng: &mut ChaCha8Rng| Gaussian {
        center: center.iter().map(|c| c + rng.gen_range(-0.1..0.1)).collect(),
        width: rng.gen_range(0.2..0.5),
        amplitude: rng.gen_range(0.5..2.0),
    };
    let mut terms = Vec::new();
    for e in (0..5u32.pow(n as u32)).map(|k| (0..n).map(|j| (k / 5u32.pow(j as u32)) % 5).collect::<Vec<u32>>()) {
        if e.iter().sum::<u32>() <= 4 {
            terms.push((rng.gen_range(-1.0..1.0), e));
        }
    }
    vec![Box::new(gaussian(rng)), Box::new(Polynomial { terms }), Box::new(gaussian(rng))]
}

fn verify_conjugation(factor: Factor, n: usize, seed: u64) -> hyptev::Result<VerifyReport> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter("conjugation check supports n = 2, 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, model, lo, hi, center) = match factor {
        Factor::Halfspace | Factor::Constant => {
            let mut lo = vec![-0.25; n];
            let mut hi = vec![0.25; n];
            lo[n - 1] = 0.75;
            hi[n - 1] = 1.25;
            let mut c = vec![0.0; n];
            c[n - 1] = 1.0;
            let k = if matches!(factor, Factor::Halfspace) {
                ConformalFactorField::half_space()
            } else {
                ConformalFactorField::constant(1.0)
            };
            (k, Model::HalfSpace, lo, hi, c)
        }
        Factor::Ball => (ConformalFactorField::ball(), Model::Ball, vec![-0.2; n], vec![0.2; n], vec![0.0; n]),
    };
    let mut residuals = Vec::new();
    for f in random_functions(&mut rng, &center) {
        let res = [17, 33, 65]
            .iter()
            .map(|&p| conjugation_residual(&k, f.as_ref(), &Grid::new(model, lo.clone(), hi.clone(), p)?))
            .collect::<hyptev::Result<Vec<f64>>>()?;
        residuals.push(res);
    }
    let ratios: Vec<Vec<f64>> = residuals.iter().map(|r| r.windows(2).map(|w| w[0] / w[1]).collect()).collect();
    Ok(VerifyReport {
        identity: "conjugation".into(),
        pass: ratios.iter().flatten().all(|r| *r >= 3.5),
        residuals,
        ratios,
        criterion: "residual ratio >= 3.5 per grid halving (17, 33, 65 points)".into(),
    })
}

fn verify_green(n: usize, seed: u64) -> hyptev::Result<VerifyReport> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter("Green check supports n = 2, 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![0.0; n];
    c[n - 1] = 1.0;
    let mut residuals = Vec::new();
    let mut ratios = Vec::new();
    let mut pass = true;
    for _ in 0..3 {
        let fs = random_functions(&mut rng, &c);
        let (u, v) = (fs[0].as_ref(), fs[1].as_ref());
        let scale = greens_identity_terms(u, v, &c, 0.3, 32)?.boundary.abs().max(1.0);
        let res = [2, 4, 8, 16]
            .iter()
            .map(|&m| greens_identity_residual(u, v, &c, 0.3, m))
            .collect::<hyptev::Result<Vec<f64>>>()?;
        pass &= res[3] < 1e-10 * scale;
        ratios.push(vec![res[3] / scale]);
        residuals.push(res);
    }
    Ok(VerifyReport {
        identity: "green".into(),
        pass,
        residuals,
        ratios,
        criterion: "final residual < 1e-10 relative to the boundary term (resolutions 2, 4, 8, 16)".into(),
    })
}

fn verify_sturm_liouville(n: usize) -> VerifyReport {
    let nf = n as f64;
    let rhos: Vec<f64> = (1..=50).map(|k| 0.05 * k as f64).collect();
    let errors: Vec<f64> = rhos
        .iter()
        .map(|&r| (sturm_liouville_drift(n, r, 1e-5) - (nf * r + 0.5 * nf)).abs() / (nf * r + 0.5 * nf))
        .collect();
    VerifyReport {
        identity: "sturm-liouville".into(),
        pass: errors.iter().all(|e| *e < 1e-8),
        residuals: vec![errors],
        ratios: Vec::new(),
        criterion: "(rho (rho+1) w)' / w matches n rho + n/2 to 1e-8 on rho in [0.05, 2.5]".into(),
    }
}

fn verify_asymptotic(lambda_max: f64) -> hyptev::Result<VerifyReport> {
    let prob = RadialProblem::new(2, 1.0, 0.5, 1)?;
    let inner = lambda_max / 4.0;
    let list = find_eigenvalues_within(&prob, lambda_max, 20.0, prob.t_max(lambda_max).ceil() + 1.0)?;
    let scaled: Vec<(f64, f64)> = list
        .roots
        .iter()
        .filter(|r| r.lambda >= 400.0)
        .map(|r| (r.lambda, asymptotic_model(&prob, r.lambda).abs() * r.lambda.sqrt()))
        .collect();
    let sup = |limit: f64| scaled.iter().filter(|(l, _)| *l <= limit).map(|(_, v)| *v).fold(0.0, f64::max);
    let (short, long) = (sup(inner), sup(lambda_max));
    let pass = short > 0.0 && (long - short).abs() <= 0.2 * short;
    Ok(VerifyReport {
        identity: "asymptotic".into(),
        pass,
        residuals: vec![scaled.iter().map(|(_, v)| *v).collect()],
        ratios: vec![vec![short, long]],
        criterion: format!("sup |M| sqrt(lambda) over roots in [400, {inner}] and [400, {lambda_max}] agree within 20%"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Library(e)) if e.is_numeric() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Contract(ContractFailure(msg))) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
