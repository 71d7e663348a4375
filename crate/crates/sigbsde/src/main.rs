use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use sigbsde::config::RunConfig;
use sigbsde::{io, runner};
use sigbsde_core::mlp::{self, Mlp, TrainConfig};
use sigbsde_core::risk;

#[derive(Parser)]
#[command(name = "sigbsde", version, about = "Signature-regression BSDE solver and risk-measure experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment: repeated solves of a benchmark with error statistics.
    Run(Overrides),
    /// Mean error against sample size, with the log-log slope.
    Scale {
        /// Ascending sample sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [512usize, 1024, 2048, 4096, 8192])]
        sizes: Vec<usize>,
        #[command(flatten)]
        run: Overrides,
    },
    /// Train the rate network and write a checkpoint and loss history.
    TrainAir {
        #[arg(long, default_value = "out/air")]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of hidden layers.
        #[arg(long, default_value_t = 3)]
        hidden: usize,
        /// Units per hidden layer.
        #[arg(long, default_value_t = 11)]
        width: usize,
    },
    /// Solve the ambiguous-rate problem with a trained network or the analytic driver.
    SolveAir {
        #[arg(long, conflicts_with = "analytic", required_unless_present = "analytic")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        analytic: bool,
        #[command(flatten)]
        run: Overrides,
    },
}

#[derive(Args, Default)]
struct Overrides {
    /// `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    /// Ridge penalty.
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `explicit` or `implicit`.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    /// Lower rate bound.
    #[arg(long)]
    r: Option<f64>,
    /// Upper rate bound.
    #[arg(long = "R")]
    big_r: Option<f64>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let mut pairs: Vec<(&str, String)> = Vec::new();
        macro_rules! push {
            ($($field:ident => $key:literal),*) => {
                $(if let Some(v) = &self.$field { pairs.push(($key, v.to_string())); })*
            };
        }
        push!(benchmark => "benchmark", samples => "samples", steps => "steps",
              horizon => "horizon", depth => "depth", ridge => "ridge",
              iterations => "iterations", seed => "seed", scheme => "scheme",
              threads => "threads", theta => "theta", beta => "beta", a => "a",
              b => "b", sigma => "sigma", x0 => "x0", r => "r", big_r => "R");
        if let Some(out) = &self.out {
            pairs.push(("out", out.display().to_string()));
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            pairs.push((k.trim(), v.trim().to_string()));
        }
        for (k, v) in pairs {
            cfg.set(k, &v).map_err(anyhow::Error::msg)?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.resolve()?;
            let outcome = runner::run_experiment(&cfg)?;
            print!("{}", runner::summary_text(&cfg, &outcome));
            println!("artifacts: {}", runner::output_dir(&cfg).display());
        }
        Command::Scale { sizes, run } => {
            let cfg = run.resolve()?;
            let table = runner::scaling_study(&cfg, &sizes)?;
            println!("samples,mean_erl2_y,std_erl2_y");
            for r in &table.rows {
                println!("{},{:.6},{:.6}", r.samples, r.mean, r.std);
            }
            match table.fit.slope {
                Some(s) => println!("log-log slope: {s:.4}"),
                None => println!("log-log slope: degenerate"),
            }
        }
        Command::TrainAir {
            out,
            epochs,
            batch,
            lr,
            seed,
            hidden,
            width,
        } => {
            let mut sizes = vec![3];
            sizes.extend(std::iter::repeat_n(width, hidden));
            sizes.push(1);
            let net = Mlp::init_rate_network(&sizes, seed)?;
            let tc = TrainConfig {
                epochs,
                batch_size: batch,
                learning_rate: lr,
                seed,
            };
            let (net, losses) = mlp::train(net, &tc)?;
            io::write_checkpoint(&out.join("checkpoint.csv"), &net)?;
            io::write_losses(&out.join("losses.csv"), &losses)?;
            if let Some(last) = losses.last() {
                println!("final batch loss: {last:.6}");
            }
            println!("checkpoint: {}", out.join("checkpoint.csv").display());
        }
        Command::SolveAir {
            checkpoint,
            analytic,
            run,
        } => {
            let mut cfg = run.resolve()?;
            cfg.benchmark = "ambiguous".into();
            let betas = [0.0, 0.5, 1.0];
            let solve = if analytic {
                let d = risk::ambiguous_driver(cfg.r, cfg.big_r)?;
                runner::solve_air(&cfg, &d, &betas)?
            } else {
                let path = checkpoint.expect("clap enforces a checkpoint");
                let net = io::read_checkpoint(&path)?;
                let d = mlp::network_driver(net, cfg.r, cfg.big_r)?;
                runner::solve_air(&cfg, &d, &betas)?
            };
            println!("rho_0 = {:.6}", solve.rho.at(0)[0]);
            for beta in betas {
                let worst = solve
                    .gap(beta)
                    .iter()
                    .map(|e| e.mean / e.std_error.max(f64::MIN_POSITIVE))
                    .fold(f64::INFINITY, f64::min);
                println!("beta {beta}: smallest gap in standard errors {worst:.2}");
            }
            println!("artifacts: {}", cfg.out.join("ambiguous").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
