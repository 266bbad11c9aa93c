use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wco::report::{self, Command, RunConfig};

/// Weighted composition operators on weighted Dirichlet spaces.
#[derive(Parser)]
#[command(name = "wco", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Space parameter in (-1, 1).
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Multiplier spec, e.g. "psi_power:beta=2.5".
    #[arg(long)]
    psi: Option<String>,
    /// Symbol spec, e.g. "mobius_self_map:lambda=0.5".
    #[arg(long)]
    phi: Option<String>,
    /// Truncation size.
    #[arg(long = "n", short = 'N', default_value_t = 64)]
    n: usize,
    /// Number of annuli.
    #[arg(long, default_value_t = 14)]
    m_max: u32,
    /// Points per annulus (doubled beyond the eighth annulus).
    #[arg(long = "t", short = 'T', default_value_t = 256)]
    t: usize,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Criterion quantities and boundedness/compactness verdicts.
    Analyze(Common),
    /// Predicted against truncated spectrum.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Also export the matrix (CSV if the name ends in .csv, JSON otherwise).
        #[arg(long)]
        matrix_out: Option<String>,
    },
    /// Kernel norm asymptotics and, given psi/phi, the adjoint-kernel identity.
    KernelCheck {
        #[command(flatten)]
        common: Common,
        /// Kernel radii |w|, comma separated.
        #[arg(long, value_delimiter = ',')]
        w: Option<Vec<f64>>,
        /// Points "re:im" for the adjoint check; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
    },
    /// Coefficient and area-integral norms of one function.
    NormCheck {
        #[command(flatten)]
        common: Common,
        /// Function spec.
        #[arg(long)]
        f: String,
        /// Exponent of the weighted growth profile.
        #[arg(long, default_value_t = 0.5)]
        decay: f64,
    },
    /// Verdicts and eigenvalue errors over a parameter range, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary: alpha or a key of the psi/phi specs.
        #[arg(long)]
        vary: String,
        /// start:stop:steps
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
    /// Worked-example scenarios with their expected conclusions.
    PaperExamples {
        #[command(flatten)]
        common: Common,
        /// Run one scenario: phi_r1, ex1, exx1, exx2, remark.
        #[arg(long)]
        only: Option<String>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

fn config(command: Command, c: &Common) -> RunConfig {
    let mut cfg = RunConfig::new(command);
    cfg.alpha = c.alpha;
    cfg.psi = c.psi.clone();
    cfg.phi = c.phi.clone();
    cfg.n = c.n;
    cfg.m_max = c.m_max;
    cfg.t = c.t;
    cfg.output = c.output.clone();
    cfg
}

fn parse_point(s: &str) -> wco::Result<[f64; 2]> {
    let bad = || wco::Error::OutOfRange(format!("point `{s}` is not of the form re:im"));
    let (re, im) = s.split_once(':').ok_or_else(bad)?;
    Ok([re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?])
}

fn run(cli: Cli) -> wco::Result<(String, Option<String>, bool)> {
    let (text, cfg, ok) = match cli.command {
        Cmd::Analyze(c) => {
            let cfg = config(Command::Analyze, &c);
            (report::cmd_analyze(&cfg)?, cfg, true)
        }
        Cmd::Spectrum { common, matrix_out } => {
            let mut cfg = config(Command::Spectrum, &common);
            cfg.matrix_out = matrix_out;
            (report::cmd_spectrum(&cfg)?, cfg, true)
        }
        Cmd::KernelCheck { common, w, z } => {
            let mut cfg = config(Command::KernelCheck, &common);
            if let Some(w) = w {
                cfg.w = w;
            }
            if !z.is_empty() {
                cfg.z = z.iter().map(|s| parse_point(s)).collect::<wco::Result<_>>()?;
            }
            (report::cmd_kernel_check(&cfg)?, cfg, true)
        }
        Cmd::NormCheck { common, f, decay } => {
            let mut cfg = config(Command::NormCheck, &common);
            cfg.f = Some(f);
            cfg.decay_exponent = decay;
            (report::cmd_norm_check(&cfg)?, cfg, true)
        }
        Cmd::Sweep { common, vary, range } => {
            let mut cfg = config(Command::Sweep, &common);
            cfg.vary = Some(vary);
            cfg.range = Some(range);
            (report::cmd_sweep(&cfg)?, cfg, true)
        }
        Cmd::PaperExamples { common, only, r, k, lambda } => {
            let mut cfg = config(Command::PaperExamples, &common);
            cfg.only = only;
            cfg.r = r;
            cfg.k = k;
            cfg.lambda = lambda;
            let (text, ok) = report::cmd_paper_examples(&cfg)?;
            (text, cfg, ok)
        }
    };
    Ok((text, cfg.output, ok))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(v) = std::env::var("WCO_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("wco: cannot configure {n} threads: {e}");
                }
            }
            _ => {
                eprintln!("wco: WCO_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok((text, output, ok)) => {
            match output {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        eprintln!("wco: cannot write {path}: {e}");
                        return ExitCode::from(3);
                    }
                }
                None => print!("{text}"),
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("wco: at least one scenario is inconsistent with its expected conclusion");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("wco: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
