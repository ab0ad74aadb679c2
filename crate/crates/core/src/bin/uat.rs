use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uat::harness::{self, ExperimentConfig, ExperimentKind, HarnessError, RunContext};

#[derive(Parser)]
#[command(name = "uat", version, about = "Shallow-dictionary approximation and vector-lattice experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one JSON experiment config.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Evaluate the config's expect_* keys; write nothing on failure.
        #[arg(long)]
        check: bool,
    },
    /// Run every config of a manifest in check mode.
    Check {
        manifest: PathBuf,
        #[arg(long, default_value = "uat-results")]
        out_dir: PathBuf,
    },
    /// Least-squares fit of a target with a random dictionary.
    Fit(FitArgs),
    /// Finite-difference polynomial detection for an activation or a builtin map.
    PolyTest(PolyTestArgs),
    /// Annihilators of a dictionary on a 1-D grid and their moments.
    Probe(ProbeArgs),
    #[command(subcommand)]
    Lattice(LatticeCommand),
    /// Vector-valued fit in tensor or map mode.
    VectorFit(VectorFitArgs),
    /// Positively homogeneous fit on a sphere grid.
    PhFit(FitArgs),
    /// Increasing ReLU approximations from below of a non-negative target.
    Dominated(DominatedArgs),
}

#[derive(Subcommand)]
enum LatticeCommand {
    /// Dimension of the generated sublattice.
    Closure(GeneratorArgs),
    /// Compare the generated sublattice with span Φ(span A).
    FormulaCheck(GeneratorArgs),
    /// (min(u,v) - w)+ against span Φ(span{u,v,w}) on a cube grid.
    Huijsmans {
        #[arg(long, default_value_t = 6)]
        points_per_axis: usize,
        #[arg(long, default_value = "relu")]
        activation: String,
        #[command(flatten)]
        common: Common,
    },
    /// Approximate a lattice expression of the generators inside span Φ(span A).
    Construct {
        #[command(flatten)]
        generators: GeneratorArgs,
        #[arg(long)]
        expr: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        width: usize,
    },
    Dominated(DominatedArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    out: Option<String>,
    /// SVG of sup error against width.
    #[arg(long)]
    plot: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// Activation spec; repeat the flag for several.
    #[arg(long, required = true)]
    activation: Vec<String>,
    /// Builtin name or CSV path.
    #[arg(long)]
    target: String,
    /// lo:hi:n[,lo:hi:n...] or sphere:dim:count; omit for CSV targets.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long = "width", alias = "widths", value_delimiter = ',', required = true)]
    widths: Vec<usize>,
    /// gaussian or axis.
    #[arg(long)]
    scheme: Option<String>,
    /// Also report the least-squares polynomial baseline of this degree.
    #[arg(long)]
    baseline_degree: Option<usize>,
    #[arg(long)]
    no_holdout: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PolyTestArgs {
    #[arg(long, conflicts_with = "map")]
    activation: Vec<String>,
    /// positive-part, abs, bilinear or affine.
    #[arg(long)]
    map: Option<String>,
    #[arg(long, default_value_t = 8)]
    max_degree: usize,
    #[arg(long)]
    trials: Option<usize>,
    /// lo:hi
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Option<(f64, f64)>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, required = true)]
    activation: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long = "width", value_delimiter = ',', required = true)]
    widths: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    max_moment: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GeneratorArgs {
    /// CSV with one generator per row.
    #[arg(long, required_unless_present = "count")]
    generators: Option<String>,
    /// Draw this many random positive generators instead.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, requires = "count")]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = "relu")]
    activation: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VectorFitArgs {
    #[arg(long, default_value = "relu")]
    activation: String,
    /// tensor, map or both.
    #[arg(long, default_value = "both")]
    mode: String,
    #[arg(long)]
    target: String,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long = "width", value_delimiter = ',', required = true)]
    widths: Vec<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DominatedArgs {
    #[arg(long)]
    target: String,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Width per step; the last one repeats.
    #[arg(long = "width", value_delimiter = ',', required = true)]
    widths: Vec<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    Ok((lo.trim().parse().map_err(|_| "lo is not a number")?, hi.trim().parse().map_err(|_| "hi is not a number")?))
}

fn base(kind: ExperimentKind, common: Common) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, common.out.unwrap_or_else(|| format!("{}.csv", kind.as_str())));
    cfg.seed = common.seed;
    cfg.ridge = common.ridge;
    cfg.plot = common.plot;
    cfg.tol = common.tol;
    cfg
}

fn generator_config(kind: ExperimentKind, op: Option<&str>, g: GeneratorArgs) -> ExperimentConfig {
    let mut cfg = base(kind, g.common);
    cfg.lattice_op = op.map(str::to_string);
    cfg.activation = vec![g.activation];
    cfg.generators = g.generators;
    cfg.generator_count = g.count;
    cfg.generator_dim = g.dim;
    cfg.trials = g.trials;
    cfg
}

fn dominated_config(d: DominatedArgs) -> ExperimentConfig {
    let mut cfg = base(ExperimentKind::Dominated, d.common);
    cfg.target = Some(d.target);
    cfg.grid = d.grid;
    cfg.widths = d.widths;
    cfg.steps = d.steps;
    cfg
}

fn fit_config(kind: ExperimentKind, f: FitArgs) -> ExperimentConfig {
    let mut cfg = base(kind, f.common);
    cfg.activation = f.activation;
    cfg.target = Some(f.target);
    cfg.grid = f.grid;
    cfg.widths = f.widths;
    cfg.scheme = f.scheme;
    cfg.degree = f.baseline_degree;
    cfg.holdout = Some(!f.no_holdout);
    cfg
}

fn build_config(command: Command) -> ExperimentConfig {
    match command {
        Command::Fit(f) => fit_config(ExperimentKind::Fit, f),
        Command::PhFit(f) => fit_config(ExperimentKind::PhFit, f),
        Command::PolyTest(p) => {
            let mut cfg = base(ExperimentKind::PolyTest, p.common);
            cfg.activation = p.activation;
            cfg.map = p.map;
            cfg.degree = Some(p.max_degree);
            cfg.trials = p.trials;
            cfg.interval = p.interval;
            cfg
        }
        Command::Probe(p) => {
            let mut cfg = base(ExperimentKind::Probe, p.common);
            cfg.activation = p.activation;
            cfg.grid = Some(p.grid);
            cfg.widths = p.widths;
            cfg.degree = Some(p.max_moment);
            cfg
        }
        Command::Lattice(l) => match l {
            LatticeCommand::Closure(g) => generator_config(ExperimentKind::Lattice, Some("closure"), g),
            LatticeCommand::FormulaCheck(g) => generator_config(ExperimentKind::Lattice, Some("formula-check"), g),
            LatticeCommand::Huijsmans { points_per_axis, activation, common } => {
                let mut cfg = base(ExperimentKind::Lattice, common);
                cfg.lattice_op = Some("huijsmans".into());
                cfg.points_per_axis = Some(points_per_axis);
                cfg.activation = vec![activation];
                cfg
            }
            LatticeCommand::Construct { generators, expr, epsilon, width } => {
                let mut cfg = generator_config(ExperimentKind::Construct, None, generators);
                cfg.expr = Some(expr);
                cfg.epsilon = Some(epsilon);
                cfg.widths = vec![width];
                cfg
            }
            LatticeCommand::Dominated(d) => dominated_config(d),
        },
        Command::VectorFit(v) => {
            let mut cfg = base(ExperimentKind::VectorFit, v.common);
            cfg.activation = vec![v.activation];
            cfg.mode = Some(v.mode);
            cfg.target = Some(v.target);
            cfg.grid = v.grid;
            cfg.widths = v.widths;
            cfg
        }
        Command::Dominated(d) => dominated_config(d),
        Command::Run { .. } | Command::Check { .. } => unreachable!("handled before"),
    }
}

fn fail(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run_one(cfg: &ExperimentConfig, ctx: &RunContext) -> ExitCode {
    match harness::run_config(cfg, ctx) {
        Ok(outcome) => {
            for path in outcome.outputs {
                println!("wrote {}", ctx.output_dir.join(path).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed_override = match harness::seed_from_env() {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    match cli.command {
        Command::Run { config, out_dir, check } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let input_dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
            run_one(&cfg, &RunContext { input_dir, output_dir: out_dir, check, seed_override })
        }
        Command::Check { manifest, out_dir } => match harness::run_manifest(&manifest, &out_dir, true, seed_override) {
            Ok(report) => {
                for entry in &report.entries {
                    match &entry.result {
                        Ok(_) => println!("PASS {}", entry.config),
                        Err(e) => println!("FAIL {}: {e}", entry.config),
                    }
                }
                ExitCode::from(report.exit_code() as u8)
            }
            Err(e) => fail(&e),
        },
        other => {
            let cfg = build_config(other);
            run_one(&cfg, &RunContext { seed_override, ..RunContext::in_dir(".") })
        }
    }
}
