use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use darcy_mixed::assembly::Formulation;
use darcy_mixed::harness::{
    default_sweep_exponents, run_condition_study, run_convergence, run_penalty_sweep,
    run_property_battery, BatteryOptions, StudyConfig,
};
use darcy_mixed::Error;

#[derive(Parser, Debug)]
#[command(name = "darcy-mixed", version, about = "Mixed RT studies for Darcy flow with weak flux conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error-vs-h study with least-squares rates.
    Converge(StudyArgs),
    /// One convergence curve per boundary-weight exponent.
    Sweep {
        #[command(flatten)]
        study: StudyArgs,
        /// Exponents to sweep; defaults to {0, 1/2, 1, k, k+1, k+2}.
        #[arg(long, value_delimiter = ',')]
        exponents: Option<Vec<f64>>,
    },
    /// Condition numbers of the assembled matrix per level.
    Condition(StudyArgs),
    /// Property battery over exact identities on small meshes.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        flip_facet_sign: bool,
    },
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long)]
    case: String,
    #[arg(long = "form", default_value = "nitsche-sym")]
    formulation: String,
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Comma-separated mesh levels, e.g. 4,8,16,32.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
    /// Boundary weight h^-e; default 1 (Nitsche) or k+1 (penalty).
    #[arg(long = "gamma-exp")]
    gamma_exp: Option<f64>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface uniformity; the studies are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl StudyArgs {
    fn config(&self) -> Result<StudyConfig, Error> {
        let formulation: Formulation = self.formulation.parse()?;
        let mut c = StudyConfig::new(&self.case, formulation, self.order, &self.levels);
        c.gamma_exponent = self.gamma_exp;
        c.out = self.out.clone();
        Ok(c)
    }
}

fn emit(out: &Option<PathBuf>, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), Error> {
    if out.is_none() {
        let mut buf = Vec::new();
        write(&mut buf)?;
        print!("{}", String::from_utf8_lossy(&buf));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Converge(args) => {
            let report = run_convergence(&args.config()?)?;
            emit(&args.out, |w| report.write_csv(w))?;
        }
        Command::Sweep { study, exponents } => {
            let config = study.config()?;
            let exponents = exponents.unwrap_or_else(|| default_sweep_exponents(config.order));
            let report = run_penalty_sweep(&config, &exponents)?;
            emit(&study.out, |w| report.write_csv(w))?;
        }
        Command::Condition(args) => {
            let report = run_condition_study(&args.config()?)?;
            emit(&args.out, |w| report.write_csv(w))?;
        }
        Command::Check { seed, flip_facet_sign } => {
            let report = run_property_battery(BatteryOptions { seed, flip_facet_sign })?;
            for line in report.lines() {
                println!("{line}");
            }
            if !report.all_passed() {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
