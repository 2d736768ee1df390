//! The `percgff` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use percgff::experiments::{self, ExperimentConfig, OutputFormat, ResultRecord};
use percgff::field::{smeared_kernels, DgffSampler, MollifierSpec};
use percgff::green::{
    build_killed_operator, build_scaled_operator, fit_green_bounds, solve_green, write_green_binary,
    write_green_csv, Frame, GreenOperator, DEFAULT_TOL,
};
use percgff::lattice::{
    largest_cluster, read_snapshot, sample_environment, write_snapshot, ClusterGeometry, Environment,
    EnvironmentLaw, SnapshotMode,
};
use percgff::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "percgff", version, about = "Gaussian free fields on supercritical percolation clusters")]
struct Cli {
    /// Seed for every random stream; overrides the seed list of a config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random environments.
    #[command(subcommand)]
    Env(EnvCommand),
    /// Killed Green kernels.
    #[command(subcommand)]
    Green(GreenCommand),
    /// Field samples and smeared kernels.
    #[command(subcommand)]
    Field(FieldCommand),
    /// Config-driven experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args, Debug, Clone)]
struct LawArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Box half-width.
    #[arg(long = "L")]
    half_width: Option<i32>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// bernoulli, pareto or constant.
    #[arg(long, default_value = "bernoulli")]
    law: String,
    #[arg(long, default_value_t = 1.0)]
    w0: f64,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
}

impl LawArgs {
    fn law(&self, seed: u64) -> Result<EnvironmentLaw> {
        let law = match self.law.as_str() {
            "bernoulli" => EnvironmentLaw::bernoulli(self.p, self.w0, seed),
            "pareto" => EnvironmentLaw::pareto(self.p, self.alpha, self.w0, seed),
            "constant" => EnvironmentLaw::constant(self.w0, seed),
            other => return Err(Error::InvalidParameter(format!("unknown law `{other}`"))),
        };
        law.validate()?;
        Ok(law)
    }

    fn geometry(&self, seed: u64, half: i32) -> Result<Arc<ClusterGeometry>> {
        let env = sample_environment(&self.law(seed)?, self.d, half)?;
        Ok(Arc::new(largest_cluster(Arc::new(env))?))
    }

    /// The Green kernel on `Λ_n` when `n` is given, else on the interior of
    /// the box `[-L, L]ᵈ`.
    fn green(&self, seed: u64, n: Option<usize>) -> Result<GreenOperator> {
        let op = match n {
            Some(n) => {
                let frame = Frame::centered(n, self.d);
                let half = self.half_width.unwrap_or_else(|| frame.padded_half_width());
                build_scaled_operator(&self.geometry(seed, half)?, frame)?
            }
            None => {
                let half = self.half_width.ok_or_else(|| Error::InvalidParameter("give --L or --n".into()))?;
                let geom = self.geometry(seed, half)?;
                let inner: Vec<_> = geom
                    .vertices()
                    .iter()
                    .copied()
                    .filter(|x| x.0[..self.d].iter().all(|c| c.abs() < half))
                    .collect();
                build_killed_operator(&geom, &inner)?
            }
        };
        solve_green(Arc::new(op), DEFAULT_TOL)
    }
}

#[derive(Subcommand, Debug)]
enum EnvCommand {
    /// Sample an environment and write its snapshot.
    Sample {
        #[command(flatten)]
        law: LawArgs,
        /// Write only the header; loading regenerates edges from the seed.
        #[arg(long)]
        header_only: bool,
    },
    /// Summarise a snapshot.
    Inspect { snapshot: PathBuf },
}

#[derive(Subcommand, Debug)]
enum GreenCommand {
    /// Solve the killed Green kernel and write it (binary, or CSV for small domains).
    Solve {
        #[command(flatten)]
        law: LawArgs,
        /// Scale of the domain Λ_n; without it the domain is the box interior.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fit the kernel against its bound shape.
    Bounds {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        sources: usize,
    },
}

#[derive(Subcommand, Debug)]
enum FieldCommand {
    /// Draw DGFF replicas on Λ_n.
    Sample {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Smeared kernels between points, given as `x1,x2;y1,y2` pairs separated by spaces.
    Smear {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(required = true)]
        pairs: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn parse_point(s: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Parse(format!("point `{s}`: {e}"))))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::Parse(format!("point `{s}` needs two coordinates"))),
    }
}

fn inspect(env: &Environment) -> Result<String> {
    let geom = largest_cluster(Arc::new(env.clone()))?;
    let summary = serde_json::json!({
        "d": env.dim(),
        "half_width": env.half_width(),
        "law": env.law().to_string(),
        "seed": env.law().seed,
        "sites": env.num_sites(),
        "open_edges": env.open_edges().count(),
        "cluster_size": geom.len(),
        "theta0_hat": geom.theta0_hat(),
        "core_density": geom.core_density(),
        "env_id": env.id(),
    });
    serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))
}

fn run(cli: Cli) -> Result<Option<PathBuf>> {
    let seed = cli.seed.unwrap_or(1);
    let format = cli.format.map(OutputFormat::from);
    match cli.command {
        Command::Env(EnvCommand::Sample { law, header_only }) => {
            let half = law.half_width.ok_or_else(|| Error::InvalidParameter("env sample needs --L".into()))?;
            let env = sample_environment(&law.law(seed)?, law.d, half)?;
            let path = cli.out.unwrap_or_else(|| PathBuf::from("env.txt"));
            let mut w = create(&path)?;
            let mode = if header_only { SnapshotMode::HeaderOnly } else { SnapshotMode::WithEdges };
            write_snapshot(&env, mode, &mut w)?;
            finish(w)?;
            Ok(Some(path))
        }
        Command::Env(EnvCommand::Inspect { snapshot }) => {
            let env = read_snapshot(File::open(&snapshot)?)?;
            let text = inspect(&env)?;
            match cli.out {
                Some(path) => {
                    std::fs::write(&path, text + "\n")?;
                    Ok(Some(path))
                }
                None => {
                    println!("{text}");
                    Ok(None)
                }
            }
        }
        Command::Green(GreenCommand::Solve { law, n }) => {
            let green = law.green(seed, n)?;
            let csv = matches!(format, Some(OutputFormat::Csv));
            let path = cli.out.unwrap_or_else(|| PathBuf::from(if csv { "green.csv" } else { "green.bin" }));
            let mut w = create(&path)?;
            if csv {
                write_green_csv(&green, &mut w)?;
            } else {
                write_green_binary(&green, &mut w)?;
            }
            finish(w)?;
            Ok(Some(path))
        }
        Command::Green(GreenCommand::Bounds { law, n, sources }) => {
            let green = law.green(seed, Some(n))?;
            let report = fit_green_bounds(&green, sources, seed)?;
            let params = format!("p={};d={};n={n}", law.p, law.d);
            let rows = [
                ("slope", report.slope),
                ("intercept", report.intercept),
                ("fit_intercept", report.fit_intercept),
                ("r2", report.r2),
                ("exceedance", report.exceedance),
                ("max_residual", report.max_residual),
                ("pairs", report.pairs as f64),
            ];
            let records: Vec<ResultRecord> = rows
                .iter()
                .map(|(metric, value)| ResultRecord {
                    experiment: "green-bounds".into(),
                    params: params.clone(),
                    metric: (*metric).into(),
                    value: *value,
                    stderr: None,
                    seed,
                    wall_time: 0.0,
                })
                .collect();
            let format = format.unwrap_or_default();
            let path = cli.out.unwrap_or_else(|| PathBuf::from("bounds.csv"));
            experiments::write_to(&records, format, &path)?;
            Ok(Some(path))
        }
        Command::Field(FieldCommand::Sample { law, n, count }) => {
            let frame = Frame::centered(n, law.d);
            let half = law.half_width.unwrap_or_else(|| frame.padded_half_width());
            let op = build_scaled_operator(&law.geometry(seed, half)?, frame)?;
            let fields = DgffSampler::new(Arc::new(op))?.sample(count, seed);
            let path = cli.out.unwrap_or_else(|| PathBuf::from("field.bin"));
            let mut data = create(&path)?;
            for f in &fields {
                for v in &f.values {
                    data.write_all(&v.to_le_bytes())?;
                }
            }
            finish(data)?;
            let provenance: Vec<_> = fields.iter().map(|f| &f.provenance).collect();
            let sidecar = path.with_extension("json");
            let text = serde_json::to_string_pretty(&provenance).map_err(|e| Error::Parse(e.to_string()))?;
            std::fs::write(&sidecar, text + "\n")?;
            Ok(Some(path))
        }
        Command::Field(FieldCommand::Smear { law, n, eps, pairs }) => {
            let green = law.green(seed, Some(n))?;
            let grid: Vec<([f64; 2], [f64; 2])> = pairs
                .iter()
                .map(|p| {
                    let (x, y) = p
                        .split_once(';')
                        .ok_or_else(|| Error::Parse(format!("pair `{p}` needs the form x1,x2;y1,y2")))?;
                    Ok((parse_point(x)?, parse_point(y)?))
                })
                .collect::<Result<_>>()?;
            let set = smeared_kernels(&green, &MollifierSpec::new(eps)?, &grid)?;
            let path = cli.out.unwrap_or_else(|| PathBuf::from("smeared.csv"));
            let mut w = create(&path)?;
            set.write_csv(&mut w)?;
            finish(w)?;
            Ok(Some(path))
        }
        Command::Experiment(ExperimentCommand::Run { config }) => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = cli.seed {
                cfg = cfg.with_seeds(vec![s]);
            }
            if let Some(out) = cli.out {
                cfg = cfg.with_out(out);
            }
            if let Some(f) = format {
                cfg = cfg.with_format(f);
            }
            Ok(Some(experiments::run_to_file(&cfg)?))
        }
    }
}

/// Exit code for a failed run: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numeric() {
        3
    } else {
        2
    }
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let threads = cli.threads;
    let result = match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(Error::InvalidParameter(format!("thread pool: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(path) => {
            if let Some(p) = path {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
