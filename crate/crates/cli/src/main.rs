use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use krausft::io::{histogram_csv, read_json, read_map, read_process, report_json, to_json};
use krausft::maps::{invariant_state, validate_cptp, DensityMatrix, KrausMap, MapFile};
use krausft::numerics::ComplexMatrix;
use krausft::potential::{
    build_dual, build_potential_structure, check_detailed_balance, check_ladder_commutators, BalanceReport,
    CommutatorReport, SymmetryOp,
};
use krausft::process::{
    build_dual_process, enumerate_trajectories, histogram, sample_ensemble, verify_detailed_ft, verify_integral_ft,
    work_statistics, BoundaryMode, DetailedFTReport, IntegralFTReport, ProcessSpec, TrajectoryEnsemble, WorkReport,
    INTEGRAL_FT_TOLERANCE,
};
use krausft::{Error, Tolerances};

const DEFAULT_SAMPLES: usize = 100_000;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_BIN_WIDTH: f64 = 0.1;
/// Monte Carlo checks pass when `|z| ≤ 3`.
const MAX_Z: f64 = 3.0;

#[derive(Parser)]
#[command(
    name = "krausft",
    version,
    about = "Fluctuation-theorem checks for CPTP maps and their trajectories"
)]
struct Cli {
    /// JSON file overriding numerical tolerances.
    #[arg(long, global = true)]
    tolerances: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check trace preservation of a map file.
    Validate { map_file: PathBuf },
    /// Invariant state, potentials and potential changes of a map.
    Classify {
        map_file: PathBuf,
        /// Invariant state to use instead of computing one.
        #[arg(long)]
        pi: Option<PathBuf>,
    },
    /// Dual map and generalized detailed balance.
    Dual {
        map_file: PathBuf,
        #[arg(long)]
        pi: Option<PathBuf>,
        /// Symmetry file `{"matrix": ..., "antiunitary": bool}`; complex conjugation by default.
        #[arg(long)]
        symmetry: Option<PathBuf>,
        /// Write the dual map file here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fluctuation theorems on a process file by enumeration or sampling.
    Verify {
        process_file: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bin_width: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the Σ histogram CSV here.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Sample trajectories of a process file.
    Sample {
        process_file: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the sampled trajectories here.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        bin_width: Option<f64>,
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::NonUniqueInvariantState { .. } => 3,
            Error::EnumerationTooLarge { .. } => 4,
            _ => 1,
        };
        let message = match &e {
            Error::NonUniqueInvariantState { .. } => format!("{e}; supply one with --pi"),
            Error::EnumerationTooLarge { .. } => format!("{e}; use --mode mc"),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

type Outcome = Result<(String, bool), Failure>;

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", path.display()))))
}

fn load_pi(path: &Path, tol: &Tolerances) -> Result<DensityMatrix, Failure> {
    let m: ComplexMatrix = read_json(path)?;
    Ok(DensityMatrix::new(m, tol)?)
}

fn resolve_pi(map: &KrausMap, pi: Option<&Path>, tol: &Tolerances) -> Result<(DensityMatrix, &'static str), Failure> {
    match pi {
        Some(p) => Ok((load_pi(p, tol)?, "supplied")),
        None => Ok((invariant_state(map, tol)?, "computed")),
    }
}

fn load_valid_map(path: &Path, tol: &Tolerances) -> Result<KrausMap, Failure> {
    let map = read_map(path)?;
    let report = validate_cptp(&map, tol);
    if !report.passed {
        return Err(Error::NotTracePreserving {
            deviation: report.tp_deviation,
            tolerance: report.tolerance,
        }
        .into());
    }
    Ok(map)
}

fn cmd_validate(path: &Path, tol: &Tolerances) -> Outcome {
    let map = read_map(path)?;
    let report = validate_cptp(&map, tol);
    Ok((report_json("validate", tol, &report), report.passed))
}

#[derive(Serialize)]
struct OperatorEntry {
    label: String,
    delta_phi: f64,
}

#[derive(Serialize)]
struct ClassifyReport {
    pi_source: &'static str,
    pi: ComplexMatrix,
    eigenvalues: Vec<f64>,
    potentials: Vec<f64>,
    classes: Vec<usize>,
    class_potentials: Vec<f64>,
    operators: Vec<OperatorEntry>,
    commutators: CommutatorReport,
    passed: bool,
}

fn cmd_classify(path: &Path, pi: Option<&Path>, tol: &Tolerances) -> Outcome {
    let map = load_valid_map(path, tol)?;
    let (pi, source) = resolve_pi(&map, pi, tol)?;
    let s = build_potential_structure(&map, &pi, tol)?;
    let commutators = check_ladder_commutators(&map, &s, tol)?;
    let passed = commutators.passed;
    let report = ClassifyReport {
        pi_source: source,
        pi: pi.matrix().clone(),
        eigenvalues: s.eigen.eigenvalues.clone(),
        potentials: s.potentials.clone(),
        classes: s.classes.clone(),
        class_potentials: s.class_potentials.clone(),
        operators: map
            .labels()
            .iter()
            .zip(&s.delta_phi)
            .map(|(l, &d)| OperatorEntry {
                label: l.clone(),
                delta_phi: d,
            })
            .collect(),
        commutators,
        passed,
    };
    Ok((report_json("classify", tol, &report), passed))
}

#[derive(Serialize)]
struct DualReport {
    pi_source: &'static str,
    symmetry: SymmetryOp,
    pi_dual: ComplexMatrix,
    dual: MapFile,
    balance: BalanceReport,
    passed: bool,
}

fn cmd_dual(
    path: &Path,
    pi: Option<&Path>,
    symmetry: Option<&Path>,
    output: Option<&Path>,
    tol: &Tolerances,
) -> Outcome {
    let map = load_valid_map(path, tol)?;
    let (pi, source) = resolve_pi(&map, pi, tol)?;
    let sym = match symmetry {
        Some(p) => {
            let f: krausft::io::SymmetryFile = read_json(p)?;
            SymmetryOp::new(f.matrix, f.antiunitary)?
        }
        None => SymmetryOp::time_reversal(map.dim()),
    };
    let s = build_potential_structure(&map, &pi, tol)?;
    let dual = build_dual(&map, &pi, &sym, tol)?;
    let balance = check_detailed_balance(&map, &dual, &s, tol)?;
    let file = MapFile::from_map(&dual.map);
    if let Some(out) = output {
        write_file(out, &to_json(&file))?;
    }
    let passed = balance.passed;
    let report = DualReport {
        pi_source: source,
        symmetry: sym,
        pi_dual: dual.pi_dual.matrix().clone(),
        dual: file,
        balance,
        passed,
    };
    Ok((report_json("dual", tol, &report), passed))
}

#[derive(Serialize)]
struct ExactReport {
    mode: &'static str,
    boundary: &'static str,
    steps: usize,
    branches: usize,
    pruned_branches: usize,
    integral: IntegralFTReport,
    integral_tolerance: f64,
    dual_integral: IntegralFTReport,
    detailed: DetailedFTReport,
    mean_sigma: f64,
    max_abs_sigma: f64,
    /// `S(ρ_f) − S(ρ_i)`, entropic boundaries only.
    entropy_change: Option<f64>,
    work: Option<WorkReport>,
    passed: bool,
}

#[derive(Serialize)]
struct MonteCarloReport {
    mode: &'static str,
    boundary: &'static str,
    steps: usize,
    seed: u64,
    samples: usize,
    integral: IntegralFTReport,
    dual_integral: IntegralFTReport,
    max_z: f64,
    mean_sigma: f64,
    work: Option<WorkReport>,
    passed: bool,
}

/// A sample mean within roundoff of one passes even when its standard error
/// is itself roundoff.
fn mc_passed(r: &IntegralFTReport) -> bool {
    r.deviation <= INTEGRAL_FT_TOLERANCE || r.z_score.unwrap_or(0.0).abs() <= MAX_Z
}

fn work_of(spec: &ProcessSpec, ens: &TrajectoryEnsemble) -> Result<Option<WorkReport>, Failure> {
    match spec.mode {
        BoundaryMode::Equilibrium { .. } => Ok(Some(work_statistics(spec, ens)?)),
        BoundaryMode::Entropic => Ok(None),
    }
}

fn write_histogram(ens: &TrajectoryEnsemble, width: f64, path: Option<&Path>) -> Result<(), Failure> {
    if let Some(p) = path {
        write_file(p, &histogram_csv(&histogram(ens, width)?))?;
    }
    Ok(())
}

struct Sampling {
    samples: Option<usize>,
    seed: Option<u64>,
    bin_width: Option<f64>,
}

fn cmd_verify(
    path: &Path,
    mode: Mode,
    opts: Sampling,
    report_path: Option<&Path>,
    hist_path: Option<&Path>,
    tol: &Tolerances,
) -> Outcome {
    let resolved = read_process(path, tol)?;
    let spec = &resolved.spec;
    let width = opts.bin_width.or(resolved.bin_width).unwrap_or(DEFAULT_BIN_WIDTH);
    let (text, passed, ens) = match mode {
        Mode::Exact => {
            let ens = enumerate_trajectories(spec, tol)?;
            let dual = build_dual_process(spec, tol)?;
            let dual_ens = enumerate_trajectories(&dual, tol)?;
            let integral = verify_integral_ft(&ens)?;
            let dual_integral = verify_integral_ft(&dual_ens)?;
            let detailed = verify_detailed_ft(spec, tol)?;
            let entropy_change = match spec.mode {
                BoundaryMode::Entropic => Some(
                    spec.final_state(tol)?.von_neumann_entropy(tol)? - spec.initial_state.von_neumann_entropy(tol)?,
                ),
                BoundaryMode::Equilibrium { .. } => None,
            };
            let work = work_of(spec, &ens)?;
            let passed = integral.deviation <= INTEGRAL_FT_TOLERANCE
                && dual_integral.deviation <= INTEGRAL_FT_TOLERANCE
                && detailed.passed
                && integral.mean_sigma >= -INTEGRAL_FT_TOLERANCE;
            let report = ExactReport {
                mode: "exact",
                boundary: spec.mode.name(),
                steps: spec.steps.len(),
                branches: ens.trajectories.len(),
                pruned_branches: ens.pruned,
                mean_sigma: integral.mean_sigma,
                max_abs_sigma: integral.max_abs_sigma,
                integral,
                integral_tolerance: INTEGRAL_FT_TOLERANCE,
                dual_integral,
                detailed,
                entropy_change,
                work,
                passed,
            };
            (report_json("verify", tol, &report), passed, ens)
        }
        Mode::Mc => {
            let samples = opts.samples.or(resolved.samples).unwrap_or(DEFAULT_SAMPLES);
            let seed = opts.seed.or(resolved.seed).unwrap_or(DEFAULT_SEED);
            let ens = sample_ensemble(spec, seed, samples, tol)?;
            let dual = build_dual_process(spec, tol)?;
            let dual_ens = sample_ensemble(&dual, seed, samples, tol)?;
            let integral = verify_integral_ft(&ens)?;
            let dual_integral = verify_integral_ft(&dual_ens)?;
            let passed = mc_passed(&integral) && mc_passed(&dual_integral);
            let report = MonteCarloReport {
                mode: "mc",
                boundary: spec.mode.name(),
                steps: spec.steps.len(),
                seed,
                samples,
                mean_sigma: integral.mean_sigma,
                integral,
                dual_integral,
                max_z: MAX_Z,
                work: work_of(spec, &ens)?,
                passed,
            };
            (report_json("verify", tol, &report), passed, ens)
        }
    };
    write_histogram(&ens, width, hist_path)?;
    match report_path {
        Some(p) => {
            write_file(p, &text)?;
            Ok((String::new(), passed))
        }
        None => Ok((text, passed)),
    }
}

#[derive(Serialize)]
struct SampleReport {
    boundary: &'static str,
    seed: u64,
    samples: usize,
    integral: IntegralFTReport,
    passed: bool,
}

fn cmd_sample(
    path: &Path,
    opts: Sampling,
    output: Option<&Path>,
    hist_path: Option<&Path>,
    tol: &Tolerances,
) -> Outcome {
    let resolved = read_process(path, tol)?;
    let samples = opts.samples.or(resolved.samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = opts.seed.or(resolved.seed).unwrap_or(DEFAULT_SEED);
    let width = opts.bin_width.or(resolved.bin_width).unwrap_or(DEFAULT_BIN_WIDTH);
    let ens = sample_ensemble(&resolved.spec, seed, samples, tol)?;
    if let Some(out) = output {
        write_file(out, &to_json(&ens.trajectories))?;
    }
    write_histogram(&ens, width, hist_path)?;
    let integral = verify_integral_ft(&ens)?;
    let passed = mc_passed(&integral);
    let report = SampleReport {
        boundary: resolved.spec.mode.name(),
        seed,
        samples,
        integral,
        passed,
    };
    Ok((report_json("sample", tol, &report), passed))
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    exit_code: u8,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Classify { .. } => "classify",
        Command::Dual { .. } => "dual",
        Command::Verify { .. } => "verify",
        Command::Sample { .. } => "sample",
    }
}

fn run(cli: &Cli, tol: &Tolerances) -> Outcome {
    match &cli.command {
        Command::Validate { map_file } => cmd_validate(map_file, tol),
        Command::Classify { map_file, pi } => cmd_classify(map_file, pi.as_deref(), tol),
        Command::Dual {
            map_file,
            pi,
            symmetry,
            output,
        } => cmd_dual(map_file, pi.as_deref(), symmetry.as_deref(), output.as_deref(), tol),
        Command::Verify {
            process_file,
            mode,
            samples,
            seed,
            bin_width,
            report,
            histogram,
        } => cmd_verify(
            process_file,
            *mode,
            Sampling {
                samples: *samples,
                seed: *seed,
                bin_width: *bin_width,
            },
            report.as_deref(),
            histogram.as_deref(),
            tol,
        ),
        Command::Sample {
            process_file,
            samples,
            seed,
            output,
            bin_width,
            histogram,
        } => cmd_sample(
            process_file,
            Sampling {
                samples: *samples,
                seed: *seed,
                bin_width: *bin_width,
            },
            output.as_deref(),
            histogram.as_deref(),
            tol,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let tol = match &cli.tolerances {
        Some(p) => match read_json::<Tolerances>(p) {
            Ok(t) => t,
            Err(e) => {
                let f = Failure::from(e);
                eprintln!("error: {}", f.message);
                return ExitCode::from(f.code);
            }
        },
        None => Tolerances::default(),
    };
    match run(&cli, &tol) {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("{name}: check failed");
                ExitCode::from(1)
            }
        }
        Err(f) => {
            print!(
                "{}",
                report_json(
                    name,
                    &tol,
                    &ErrorReport {
                        error: &f.message,
                        exit_code: f.code
                    }
                )
            );
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
