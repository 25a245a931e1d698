//! `abdeform`: evaluate, deform and verify AB-system field configurations.

use abcore::charges::charges;
use abcore::laxcurv::{anomaly, curvature_channels};
use abcore::nhd::{nhd_constraint_residuals, nhd_from_ansatz};
use abcore::qid::{qid_report, qid_solution, QidConfig};
use abdeform::csvout::{charges_csv, field_csv, nhd_csv, qid_fields_csv, write_atomic};
use abdeform::figures::emit_figure;
use abdeform::report::{
    qid_json, to_pretty, LambdaResidual, NhdJsonReport, RunManifest, VerifyReport, SCHEMA_VERSION,
};
use abdeform::runspec::{
    build_ansatz, build_solution, parse_charge_indices, parse_grid, parse_lambdas, parse_params,
    parse_solution_spec, DEFAULT_GRID,
};
use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "abdeform",
    version,
    about = "AB-system deformations: solutions, flatness checks, NHD, QID, charges, figure data"
)]
struct Cli {
    /// Grid as X,T,nx,nt (symmetric lattice, odd node counts)
    #[arg(long, global = true, default_value = DEFAULT_GRID)]
    grid: String,
    /// Loop-algebra parameter (1 or -1)
    #[arg(long, global = true, default_value_t = 1.0, allow_hyphen_values = true)]
    kappa: f64,
    /// Multiplies every asserted tolerance
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a catalog solution or ansatz and dump it as CSV
    Solution(SolutionArgs),
    /// Verify zero curvature of a solution at sampled spectral values
    Verify(VerifyArgs),
    /// Compute non-holonomic deformation functions from an ansatz
    Nhd(NhdArgs),
    /// Build the first-order quasi-deformed pair and its conservation report
    Qid(QidArgs),
    /// Charge and anomaly-flux series
    Charges(ChargesArgs),
    /// Emit figure data series and gnuplot scripts
    Figures(FiguresArgs),
}

#[derive(Args)]
struct SolutionArgs {
    /// one_soliton | two_soliton | kink | kk | kak | sg_kink
    #[arg(long)]
    name: String,
    /// Comma-separated key=value parameters (e.g. g=1.5,d=0)
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    params: String,
    /// Output CSV path (header x,t,re,im)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Solution spec name:key=value,... (e.g. one_soliton:g=1.5,d=0)
    #[arg(long)]
    solution: String,
    /// Spectral samples re,im[;re,im...]
    #[arg(long, default_value = "1,0;0,1;0.5,0.5;2,0", allow_hyphen_values = true)]
    lambda: String,
    /// JSON report path
    #[arg(long)]
    json: PathBuf,
}

#[derive(Args)]
struct NhdArgs {
    /// one_soliton | two_soliton | kink | kk | kak
    #[arg(long)]
    ansatz: String,
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    params: String,
    /// CSV with x,t,re_v2,im_v2,re_u2,im_u2,re_beta,im_beta
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: PathBuf,
}

#[derive(Args)]
struct QidArgs {
    /// one_soliton | two_soliton
    #[arg(long)]
    base: String,
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    params: String,
    /// Deformation parameter
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// RK substeps per grid step of the t-march
    #[arg(long, default_value_t = 2)]
    substeps: usize,
    #[arg(long)]
    json: PathBuf,
    /// Deformed-pair CSV (x,t,re_a,im_a,re_b,im_b,re_a1,im_a1)
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ChargesArgs {
    #[arg(long)]
    solution: String,
    /// Charge indices, e.g. 1,2,3,4
    #[arg(long, default_value = "1,2,3,4")]
    n: String,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct FiguresArgs {
    /// f1sol | f1 | f2 | f3 | f4
    #[arg(long)]
    which: String,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("abdeform: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn manifest_path(primary: &PathBuf) -> PathBuf {
    let mut os = primary.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}

fn run(cli: Cli) -> Result<bool> {
    let grid = parse_grid(&cli.grid)?;
    let kappa = cli.kappa;
    if kappa != 1.0 && kappa != -1.0 {
        anyhow::bail!("kappa must be 1 or -1 (parity-admissible branches)");
    }
    let tol = cli.tol_scale;
    if !(tol > 0.0) {
        anyhow::bail!("tol-scale must be positive");
    }
    let started = Instant::now();

    match cli.command {
        Command::Solution(args) => {
            let params = parse_params(&args.params)?;
            let field = build_ansatz(grid, &args.name, &params)
                .or_else(|_| build_solution(grid, &args.name, &params).map(|s| s.a))?;
            write_atomic(&args.out, &field_csv(&field))?;
            let mut man = RunManifest::new("solution", &grid);
            man.param("name", &args.name);
            man.param("params", &args.params);
            man.param("out", args.out.display());
            man.verdict("field_finite", field.max_abs().is_finite());
            man.wall_time_ms = started.elapsed().as_millis();
            write_atomic(&manifest_path(&args.out), &to_pretty(&man))?;
            Ok(man.all_passed())
        }
        Command::Verify(args) => {
            let s = parse_solution_spec(grid, &args.solution)?;
            let lambdas = parse_lambdas(&args.lambda)?;
            let residual_tolerance = 1e-5 * tol;
            let anomaly_tolerance = 1e-6 * tol;
            let mut residuals = Vec::new();
            let mut passed = true;
            for lam in lambdas {
                let ch = curvature_channels(&s, lam).map_err(|e| anyhow::anyhow!("{e}"))?;
                passed &= ch.total() <= residual_tolerance;
                residuals.push(LambdaResidual {
                    lambda_re: lam.re,
                    lambda_im: lam.im,
                    sigma3: ch.sigma3,
                    sigma_plus: ch.sigma_plus,
                    sigma_minus: ch.sigma_minus,
                    total: ch.total(),
                });
            }
            let anomaly_norm = anomaly(&s)
                .map_err(|e| anyhow::anyhow!("{e}"))?
                .max_abs_interior(2);
            passed &= anomaly_norm <= anomaly_tolerance;
            let report = VerifyReport {
                schema: SCHEMA_VERSION,
                solution: args.solution.clone(),
                residuals,
                anomaly_norm,
                residual_tolerance,
                anomaly_tolerance,
                passed,
            };
            write_atomic(&args.json, &to_pretty(&report))?;
            let mut man = RunManifest::new("verify", &grid);
            man.param("solution", &args.solution);
            man.param("lambda", &args.lambda);
            man.verdict("zero_curvature", passed);
            man.wall_time_ms = started.elapsed().as_millis();
            write_atomic(&manifest_path(&args.json), &to_pretty(&man))?;
            Ok(passed)
        }
        Command::Nhd(args) => {
            let params = parse_params(&args.params)?;
            let a_d = build_ansatz(grid, &args.ansatz, &params)?;
            let rep = nhd_from_ansatz(&a_d).map_err(|e| anyhow::anyhow!("{e}"))?;
            let residuals =
                nhd_constraint_residuals(&rep, &a_d).map_err(|e| anyhow::anyhow!("{e}"))?;
            if let Some(csv) = &args.csv {
                write_atomic(csv, &nhd_csv(&rep))?;
            }
            let json = NhdJsonReport {
                schema: SCHEMA_VERSION,
                ansatz: args.ansatz.clone(),
                classification: format!("{:?}", rep.classification),
                singular_nodes: rep.singular_count,
                u2_route_deviation: rep.u2_route_dev,
                constraint_residuals: residuals.into_iter().collect(),
            };
            write_atomic(&args.json, &to_pretty(&json))?;
            let mut man = RunManifest::new("nhd", &grid);
            man.param("ansatz", &args.ansatz);
            man.param("params", &args.params);
            man.param("classification", format!("{:?}", rep.classification));
            // the classification is an answer, not a failure
            man.verdict("fields_computed", true);
            man.wall_time_ms = started.elapsed().as_millis();
            write_atomic(&manifest_path(&args.json), &to_pretty(&man))?;
            Ok(man.all_passed())
        }
        Command::Qid(args) => {
            let params = parse_params(&args.params)?;
            let base = build_solution(grid, &args.base, &params)?;
            let cfg = QidConfig {
                epsilon: args.epsilon,
                solver_substeps: args.substeps,
                ..Default::default()
            };
            let run = qid_solution(&base, &cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
            let rep = qid_report(&run, kappa).map_err(|e| anyhow::anyhow!("{e}"))?;
            if let Some(csv) = &args.csv {
                write_atomic(csv, &qid_fields_csv(&run.a, &run.b, &run.a1_field))?;
            }
            let json = qid_json(&args.base, args.epsilon, run.perturbative_warning, &rep);
            write_atomic(&args.json, &to_pretty(&json))?;
            let mut man = RunManifest::new("qid", &grid);
            man.param("base", &args.base);
            man.param("params", &args.params);
            man.param("epsilon", args.epsilon);
            man.verdict("march_completed", true);
            man.verdict("b_real", run.b.max_abs_imag() <= 1e-8 * tol);
            man.wall_time_ms = started.elapsed().as_millis();
            write_atomic(&manifest_path(&args.json), &to_pretty(&man))?;
            Ok(man.all_passed())
        }
        Command::Charges(args) => {
            let s = parse_solution_spec(grid, &args.solution)?;
            let ns = parse_charge_indices(&args.n)?;
            let series = charges(&s, &ns, kappa).map_err(|e| anyhow::anyhow!("{e}"))?;
            write_atomic(&args.csv, &charges_csv(&grid, &series))?;
            let mut man = RunManifest::new("charges", &grid);
            man.param("solution", &args.solution);
            man.param("n", &args.n);
            man.verdict(
                "series_finite",
                series.iter().all(|sr| {
                    sr.q_of_t
                        .iter()
                        .chain(&sr.flux_of_t)
                        .all(|v| v.is_finite())
                }),
            );
            man.wall_time_ms = started.elapsed().as_millis();
            write_atomic(&manifest_path(&args.csv), &to_pretty(&man))?;
            Ok(man.all_passed())
        }
        Command::Figures(args) => {
            let out = emit_figure(grid, &args.which, &args.out)?;
            let mut man = RunManifest::new("figures", &grid);
            man.param("which", &args.which);
            man.param("csv", &out.csv_path);
            man.param("plot", &out.plot_path);
            for (name, ok) in &out.checks {
                man.verdict(name, *ok);
            }
            man.wall_time_ms = started.elapsed().as_millis();
            write_atomic(
                &args.out.join(format!("{}.manifest.json", args.which)),
                &to_pretty(&man),
            )?;
            Ok(man.all_passed())
        }
    }
}
