//! `skyground`: register, transform, fuse and analyse aerial and ground
//! point clouds, synthesise test scenes and host the viewer session.

use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use skyground::fusion::{coverage_report, fuse, ColorRule, FusionPolicy};
use skyground::io::{
    read_cloud, read_pairs, read_transform, write_atomic, write_cloud, write_pairs, write_transform,
    TransformDocument,
};
use skyground::pipeline::{self, IcpStage};
use skyground::registration::IcpParams;
use skyground::synth::{keypoint_pairs, synthesize, SceneSpec};
use skyground::{apply_transform, TransformMode};

#[derive(Parser)]
#[command(name = "skyground", version, about = "Aerial and ground point cloud registration and fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Rigid,
    Similarity,
}

impl From<Mode> for TransformMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Rigid => TransformMode::Rigid,
            Mode::Similarity => TransformMode::Similarity,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorChoice {
    PreferColored,
    Average,
    First,
}

impl From<ColorChoice> for ColorRule {
    fn from(c: ColorChoice) -> Self {
        match c {
            ColorChoice::PreferColored => ColorRule::PreferColoredSource,
            ColorChoice::Average => ColorRule::Average,
            ColorChoice::First => ColorRule::FirstWins,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the transform taking source keypoints onto target keypoints.
    Register {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Keypoint pairs: `sx sy sz tx ty tz` per line.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, value_enum, default_value = "similarity")]
        mode: Mode,
        /// Refine the keypoint fit with ICP on the full clouds.
        #[arg(long)]
        icp: bool,
        /// ICP rejection radius in meters.
        #[arg(long, default_value_t = 1.0, requires = "icp", allow_hyphen_values = true)]
        icp_max_distance: f64,
        #[arg(long, default_value_t = 50, requires = "icp")]
        icp_iterations: usize,
        /// Transform file to write; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transform every point of a cloud.
    Apply {
        #[arg(long)]
        transform: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge co-registered clouds on a voxel grid.
    Fuse {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Voxel edge in meters.
        #[arg(long, allow_hyphen_values = true)]
        voxel: f64,
        #[arg(long, value_enum, default_value = "prefer-colored")]
        color_rule: ColorChoice,
        #[arg(long)]
        out: PathBuf,
    },
    /// Voxel coverage report; per-class coverage needs a labeled truth cloud.
    Stats {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        voxel: f64,
        /// Report file to write; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a synthetic scene with both sensors.
    Synth {
        /// Scene description (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_uav: PathBuf,
        #[arg(long)]
        out_mms: PathBuf,
        /// Every surface sample with its class label.
        #[arg(long)]
        out_truth: Option<PathBuf>,
        /// Write the aerial cloud in its misregistered survey frame and
        /// record the scene-to-survey transform here.
        #[arg(long)]
        out_misreg: Option<PathBuf>,
        /// Keypoint pairs from the survey frame to the scene frame.
        #[arg(long, requires = "out_misreg")]
        out_pairs: Option<PathBuf>,
        #[arg(long, default_value_t = 7, requires = "out_pairs")]
        pair_count: usize,
        /// Overrides the seed in the scene file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Host the interactive registration session over HTTP.
    Serve {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value_t = skyground_service::DEFAULT_LOD_BUDGET)]
        lod_budget: usize,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory holding the viewer bundle.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn check_voxel(v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("invalid argument: --voxel must be a positive length, got {v}");
    }
    Ok(())
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<skyground::PointCloudd>> {
    paths.iter().map(|p| read_cloud(p).map_err(Into::into)).collect()
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, |w| w.write_all(text.as_bytes()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Register { source, target, pairs, mode, icp, icp_max_distance, icp_iterations, out } => {
            let pairs = read_pairs(&pairs)?;
            let source = read_cloud(&source)?;
            let target = read_cloud(&target)?;
            let stage = icp.then(|| IcpStage {
                source: &source,
                target: &target,
                params: IcpParams {
                    max_iterations: icp_iterations,
                    max_pair_distance: icp_max_distance,
                    mode: mode.into(),
                    ..IcpParams::default()
                },
            });
            let doc = pipeline::register(&pairs, mode.into(), stage)?;
            eprintln!(
                "{} fit over {} pairs, rmse {:.4} m",
                doc.transform.mode().name(),
                pairs.len(),
                doc.rmse.unwrap_or(f64::NAN)
            );
            match out {
                Some(path) => write_transform(&doc, path)?,
                None => emit(&skyground::io::render_transform(&doc), None)?,
            }
        }
        Command::Apply { transform, input, out } => {
            let doc = read_transform(&transform)?;
            let cloud = read_cloud(&input)?;
            write_cloud(&apply_transform(&doc.transform, &cloud), &out)?;
        }
        Command::Fuse { inputs, voxel, color_rule, out } => {
            check_voxel(voxel)?;
            let clouds = read_all(&inputs)?;
            let policy =
                FusionPolicy { leaf: voxel, color_rule: color_rule.into(), ..FusionPolicy::default() };
            let fused = fuse(&clouds, &policy)?;
            eprintln!("{} points from {} clouds", fused.len(), clouds.len());
            write_cloud(&fused, &out)?;
        }
        Command::Stats { inputs, truth, voxel, out } => {
            check_voxel(voxel)?;
            let clouds = read_all(&inputs)?;
            let truth = truth.map(read_cloud).transpose()?;
            let stats = coverage_report(&clouds, voxel, truth.as_ref())?;
            eprint!("{}", stats.summary());
            emit(&stats.to_report_string(), out.as_deref())?;
        }
        Command::Synth { spec, out_uav, out_mms, out_truth, out_misreg, out_pairs, pair_count, seed } => {
            let mut scene_spec = SceneSpec::read(&spec)?;
            if let Some(seed) = seed {
                scene_spec.seed = seed;
            }
            let run = synthesize(&scene_spec)?;
            // Pairs are drawn before anything is written so a bad count
            // leaves no partial output behind.
            let pairs = match out_pairs {
                Some(_) => {
                    Some(keypoint_pairs(&run.scene, &run.misregistration, pair_count, scene_spec.seed)?)
                }
                None => None,
            };
            let uav = if out_misreg.is_some() { &run.misregistered_uav } else { &run.uav };
            write_cloud(uav, &out_uav)?;
            write_cloud(&run.mms, &out_mms)?;
            if let Some(path) = out_truth {
                write_cloud(&run.scene.truth_cloud(), path)?;
            }
            if let Some(path) = out_misreg {
                write_transform(&TransformDocument::new(run.misregistration), path)?;
            }
            if let (Some(path), Some(pairs)) = (out_pairs, pairs) {
                write_pairs(&pairs, path)?;
            }
            eprintln!("uav {} points, mms {} points", run.uav.len(), run.mms.len());
        }
        Command::Serve { source, target, port, lod_budget, host, static_dir } => {
            let session =
                skyground_service::Session::new(read_cloud(&source)?, read_cloud(&target)?, lod_budget)?;
            let app = skyground_service::router(Arc::new(session), static_dir.as_deref());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(SocketAddr::new(host, port)).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                skyground_service::serve(listener, app).await
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
