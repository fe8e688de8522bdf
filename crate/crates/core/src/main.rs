use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use georoute::bounds::{c1_line, c2_line, LineNetwork, RatioExperiment, DEFAULT_TAIL_EPS};
use georoute::env::ThetaLaw;
use georoute::harness::{run_experiment, write_regret_csv, ExperimentConfig};
use georoute::policies::PolicySpec;
use georoute::{Error, Result};

#[derive(Parser)]
#[command(name = "georoute", version, about = "Online routing under geometric link delays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a regret experiment described by a config file and write a CSV.
    Simulate(SimulateArgs),
    /// Line-network lower bounds: one network, or the C1/C2 ratio sweep.
    Bounds(BoundsArgs),
    /// List the source-destination paths and the covering set of a topology.
    Paths(PathsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    packets: Option<u64>,
    /// Comma-separated policy list, e.g. `klsr,cucb,klhhr,oracle:hop`.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<PolicySpec>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    /// One network, hops separated by `;` and links by `,`: `0.5,0.25;0.6,0.3`.
    #[arg(long, conflicts_with = "hops")]
    theta: Option<String>,
    /// Hop counts for the ratio sweep, e.g. `1,2,3,4,5,6`.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    hops: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    links_per_hop: usize,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0.1)]
    low: f64,
    #[arg(long, default_value_t = 0.99)]
    high: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PathsArgs {
    #[arg(long)]
    config: PathBuf,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
        None => f(),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    let e = &mut cfg.experiment;
    if let Some(s) = args.seed {
        e.seed = s;
    }
    if let Some(r) = args.runs {
        e.runs = r;
    }
    if let Some(n) = args.packets {
        e.packets = n;
        e.checkpoints = e.checkpoints.take().map(|c| c.into_iter().filter(|&k| k <= n).collect());
    }
    if let Some(p) = args.policies {
        e.policies = p;
    }
    if args.workers.is_some() {
        e.workers = args.workers;
    }
    if args.out.is_some() {
        e.out = args.out;
    }
    cfg.validate()?;
    let result = run_experiment(&cfg)?;
    let mut out = output(cfg.experiment.out.as_ref())?;
    write_regret_csv(&cfg, &result, &mut out)?;
    out.flush()?;
    Ok(())
}

fn parse_network(text: &str) -> Result<LineNetwork> {
    let hops = text
        .split(';')
        .map(|hop| {
            hop.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("theta '{t}': {e}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    LineNetwork::new(hops)
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let mut out = output(args.out.as_ref())?;
    if let Some(text) = &args.theta {
        let net = parse_network(text)?;
        let c2 = c2_line(&net)?;
        let c1 = c1_line(&net, args.tail_eps)?;
        writeln!(out, "H,C1,C1_rel_error,C2,ratio")?;
        writeln!(out, "{},{},{},{},{}", net.hop_count(), c1.value, c1.rel_error, c2, c1.value / c2)?;
    } else {
        let exp = RatioExperiment {
            hops: args.hops,
            links_per_hop: args.links_per_hop,
            draws: args.draws,
            law: ThetaLaw::Uniform {
                low: args.low,
                high: args.high,
            },
            seed: args.seed,
            tail_eps: args.tail_eps,
        };
        let rows = with_workers(args.workers, || exp.run())?;
        exp.write_csv(&rows, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn paths(args: PathsArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let inst = cfg.instance()?;
    let inv = inst.params.mean_delays();
    let mut out = output(None)?;
    let topo = &inst.ctx.topology;
    writeln!(
        out,
        "# nodes = {}, links = {}, source = {}, destination = {}",
        topo.node_count(),
        topo.link_count(),
        topo.source(),
        topo.destination()
    )?;
    writeln!(out, "# optimal = {} (expected delay {})", inst.optimal, inst.d_star)?;
    writeln!(out, "kind,path,hops,expected_delay")?;
    if let Some(paths) = &inst.ctx.paths {
        for p in paths {
            writeln!(out, "path,{p},{},{}", p.hops(), p.cost(&inv))?;
        }
    }
    for p in &inst.ctx.cover {
        writeln!(out, "cover,{p},{},{}", p.hops(), p.cost(&inv))?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds(a),
        Command::Paths(a) => paths(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
