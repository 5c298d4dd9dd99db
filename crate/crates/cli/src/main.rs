use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torsion_core::experiments::{self, ExperimentReport, OutputFormat, Params};

/// Semilinear torsion experiments on planar, conformal and radial-metric domains.
#[derive(Parser, Debug)]
#[command(name = "torsion-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve the torsion problem and report both forms of the rigidity
    Solve,
    /// Torsion isoperimetric ratio and its boundary-flux form
    Isoperimetry,
    /// Principal eigenvalue isoperimetric ratio
    EigenIsoperimetry,
    /// Boundary-integral first variation against centered finite differences
    Variation,
    /// Sweep Q = T(B_r) / r^(tau/(pi(1-gamma))) over geodesic disks
    Monotonicity,
    /// Sweep Lambda(B_r) r^(tau/2pi) over geodesic disks
    EigenMonotonicity,
    /// Schwarz-lemma ratio of a conformal image
    Schwarz,
    /// Dilation law of the rigidity
    Scaling,
    /// Level-set profile a(t), I(t), flux(t)
    Levelsets,
    /// Shooting oracle on one geodesic disk plus a Q sweep up to its radius
    Radial,
    /// Run every acceptance criterion
    Acceptance,
}

impl Command {
    fn id(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Isoperimetry => "isoperimetry",
            Command::EigenIsoperimetry => "eigen-isoperimetry",
            Command::Variation => "variation",
            Command::Monotonicity => "monotonicity",
            Command::EigenMonotonicity => "eigen-monotonicity",
            Command::Schwarz => "schwarz",
            Command::Scaling => "scaling",
            Command::Levelsets => "levelsets",
            Command::Radial => "radial",
            Command::Acceptance => "acceptance",
        }
    }
}

#[derive(Args, Debug)]
struct Options {
    /// Directory for the JSON/CSV reports (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "csv", "both"])]
    format: String,

    /// key=value file applied before the individual flags
    #[arg(long, global = true)]
    params: Option<PathBuf>,

    /// disk:R:n | ellipse:a:b:n | rect:w:h:nx:ny | file:<path> | <path> | image:<map>:R:n
    #[arg(long, global = true)]
    mesh: Option<String>,

    /// flat | cone:<beta>[:eps] | sphere | hyperbolic | user:<file>
    #[arg(long, global = true)]
    metric: Option<String>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,

    /// Isoperimetric constant (defaults to the exact value of the metric)
    #[arg(long, global = true)]
    tau: Option<String>,

    /// Picard / eigen iteration tolerance
    #[arg(long, global = true)]
    tol: Option<String>,

    #[arg(long = "max-iter", global = true)]
    max_iter: Option<String>,

    /// Initial Picard damping in (0, 1]
    #[arg(long, global = true)]
    damping: Option<String>,

    /// Geodesic radius for `radial`
    #[arg(long, global = true)]
    radius: Option<String>,

    /// radial | translate:dx,dy | normal-x
    #[arg(long, global = true, allow_hyphen_values = true)]
    flow: Option<String>,

    /// Finite-difference step
    #[arg(long, global = true)]
    h: Option<String>,

    /// identity | linear:a[:b] | quad:c | mobius:c | cubic:c
    #[arg(long, global = true, allow_hyphen_values = true)]
    map: Option<String>,

    /// lo:hi:n or a comma-separated list
    #[arg(long, global = true)]
    grid: Option<String>,

    /// Extra experiment parameter, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

impl Options {
    fn params(&self) -> Result<Params, String> {
        let mut params = match &self.params {
            Some(path) => Params::read_file(path).map_err(|e| format!("{}: {e}", path.display()))?,
            None => Params::new(),
        };
        let flags = [
            ("mesh", &self.mesh),
            ("metric", &self.metric),
            ("gamma", &self.gamma),
            ("tau", &self.tau),
            ("tol", &self.tol),
            ("max-iter", &self.max_iter),
            ("damping", &self.damping),
            ("radius", &self.radius),
            ("flow", &self.flow),
            ("h", &self.h),
            ("map", &self.map),
            ("grid", &self.grid),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                params.set(key, v.as_str());
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            params.set(k.trim(), v.trim());
        }
        Ok(params)
    }
}

/// Writes to stdout, treating a closed pipe as a normal end of output.
fn print_stdout(text: &str) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn emit(report: &ExperimentReport, out: Option<&PathBuf>, format: OutputFormat) -> std::io::Result<()> {
    let mut text = String::new();
    match out {
        Some(dir) => {
            let written = report.write_to(dir, format).map_err(std::io::Error::other)?;
            for v in &report.verdicts {
                text.push_str(&v.summary_line());
                text.push('\n');
            }
            for path in written {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            if format != OutputFormat::Csv {
                text.push_str(&report.to_json());
            }
            if format != OutputFormat::Json {
                for t in &report.tables {
                    text.push_str(&t.to_csv());
                }
            }
            if report.experiment == "acceptance" {
                for v in &report.verdicts {
                    eprintln!("{}", v.summary_line());
                }
            }
        }
    }
    print_stdout(&text)?;
    eprintln!("runtime: {:.3} s", report.runtime.as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let params = match cli.opts.params() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let format: OutputFormat = cli.opts.format.parse().expect("validated by clap");
    let result = experiments::run(cli.command.id(), &params);
    let code = experiments::exit_code(&result);
    match &result {
        Ok(report) => {
            if let Err(e) = emit(report, cli.opts.out.as_ref(), format) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(code as u8)
}
