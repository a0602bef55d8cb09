use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radar_odom::{Metric, Pose2};
use radar_odom_cli::config::RunConfig;
use radar_odom_cli::{commands, init_threads, CliError};

#[derive(Parser)]
#[command(name = "radar-odom", version, about = "Scanning-radar odometry on polar scan archives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a trajectory from a scan archive (or a directory of polar PNGs).
    Odometry {
        archive: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Render a scan archive and ground truth from a world file.
    Simulate {
        world: PathBuf,
        /// static, straight:SPEED or arc:SPEED:YAW_RATE
        #[arg(long, default_value = "straight:5")]
        trajectory: String,
        #[arg(long, default_value_t = 100)]
        scans: usize,
        /// Start pose as x,y,theta
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        start: String,
        #[command(flatten)]
        common: Common,
    },
    /// Compare an estimated trajectory with ground truth.
    Evaluate {
        estimate: PathBuf,
        truth: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run odometry across surface resolutions and metrics.
    Sweep {
        archive: PathBuf,
        truth: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        resolutions: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "p2l,p2p")]
        metrics: Vec<MetricArg>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    P2l,
    P2p,
}

impl MetricArg {
    fn name(self) -> &'static str {
        match self {
            MetricArg::P2l => "p2l",
            MetricArg::P2p => "p2p",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Native,
    Kitti,
}

/// Flags shared by every subcommand. Each overrides the same key in `--config`.
#[derive(Args)]
struct Common {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    z_min: Option<f64>,
    /// Surface neighborhood and association radius, in meters
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long)]
    keyframe_distance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// File of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut flags: Vec<(&str, String)> = Vec::new();
        let mut add = |key, value: Option<String>| {
            if let Some(v) = value {
                flags.push((key, v));
            }
        };
        add("k", self.k.map(|v| v.to_string()));
        add("z_min", self.z_min.map(|v| v.to_string()));
        add("resolution", self.resolution.map(|v| v.to_string()));
        add("metric", self.metric.map(|m| m.name().to_string()));
        add("keyframe_distance", self.keyframe_distance.map(|v| v.to_string()));
        add("max_iterations", self.max_iterations.map(|v| v.to_string()));
        add("seed", self.seed.map(|v| v.to_string()));
        add("output", self.output.as_ref().map(|p| p.display().to_string()));
        add(
            "format",
            self.format.map(|f| match f {
                FormatArg::Native => "native".to_string(),
                FormatArg::Kitti => "kitti".to_string(),
            }),
        );
        let file = match &self.config {
            Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("{}: {e}", path.display()))
            })?),
            None => None,
        };
        RunConfig::resolve(file.as_deref(), &flags)
    }
}

fn parse_pose(text: &str) -> Result<Pose2, CliError> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("--start: `{text}` is not x,y,theta")))?;
    match v.as_slice() {
        &[x, y, theta] => Ok(Pose2::new(x, y, theta)),
        _ => Err(CliError::Config(format!("--start: `{text}` is not x,y,theta"))),
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    init_threads(std::env::var("RADAR_ODOM_THREADS").ok().as_deref())?;
    match cli.command {
        Command::Odometry { archive, common } => commands::odometry(&archive, &common.resolve()?),
        Command::Simulate {
            world,
            trajectory,
            scans,
            start,
            common,
        } => {
            let config = common.resolve()?;
            let motion = commands::parse_motion(&trajectory, parse_pose(&start)?)
                .map_err(|e| CliError::Config(format!("--trajectory: {e}")))?;
            commands::simulate(&world, &motion, scans, &config)
        }
        Command::Evaluate {
            estimate,
            truth,
            common,
        } => commands::evaluate(&estimate, &truth, &common.resolve()?),
        Command::Sweep {
            archive,
            truth,
            resolutions,
            metrics,
            common,
        } => {
            let config = common.resolve()?;
            if let Some(r) = resolutions.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                return Err(CliError::Config(format!("--resolutions: {r} is not positive")));
            }
            let metrics: Vec<Metric> = metrics
                .iter()
                .map(|m| m.name().parse().expect("value enum names parse"))
                .collect();
            commands::sweep(&archive, &truth, &resolutions, &metrics, &config)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("radar-odom: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
