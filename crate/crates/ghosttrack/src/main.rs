//! Command-line interface: `track`, `eval`, `synth` and `plot`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ghosttrack::config_file::{render_config, resolve_config};
use ghosttrack::mot::{read_hyp, read_mot_gt, read_mot_tracks, write_predictions};
use ghosttrack::plot::{
    covariance_ellipse, pr_curvelet_csv, pr_curvelet_svg, topdown_csv, topdown_svg, PrPoint,
    TopdownPoint,
};
use ghosttrack::report::ReportSet;
use ghosttrack::sequence::{run_sequence, run_sequence_outputs, SequenceSource};
use ghosttrack::synthio::{read_scenario, write_rendered};
use ghosttrack_core::metrics::{evaluate, EvalParams, MatchingStrategy};
use ghosttrack_core::records::SequenceGt;
use ghosttrack_core::Config;

#[derive(Parser)]
#[command(
    name = "ghosttrack",
    about = "Occlusion-aware online multi-object tracking with inverse-depth Kalman filters",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Config file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override single config keys, e.g. --set n_age=15 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<Config> {
        let cfg = resolve_config(self.config.as_deref(), &self.set)?;
        println!("resolved config:");
        print!("{}", render_config(&cfg));
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Track one or more sequence directories.
    Track {
        /// Sequence directory (repeatable).
        #[arg(long, required = true)]
        seq: Vec<PathBuf>,
        /// Output directory for <name>.txt and <name>.hyp.jsonl.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Sequences tracked in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evaluate predictions against ground truth.
    Eval {
        /// Ground-truth file (gt.txt) or a sequence directory.
        #[arg(long)]
        gt: PathBuf,
        /// Prediction file: hypothesis JSON-lines, or MOT track text with
        /// `--pred-format mot`.
        #[arg(long)]
        pred: PathBuf,
        /// Format of the prediction file.
        #[arg(long, default_value = "hyp", value_parser = ["hyp", "mot"])]
        pred_format: String,
        /// Simulate k-box hypothesis sets around each Top-1 box with the
        /// height-scaled Gaussians (s_x, s_y from the config); this is how
        /// single-box baselines are scored at Top-k.
        #[arg(long)]
        baseline_gauss: bool,
        /// Sequence name used in the report.
        #[arg(long, default_value = "sequence")]
        name: String,
        /// Write the machine-readable report here (table still on stdout).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Frame matching flavour.
        #[arg(long, default_value = "optimal", value_parser = ["optimal", "greedy"])]
        matching: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Render a synthetic scenario into a sequence directory.
    Synth {
        /// Scenario description (JSON).
        #[arg(long)]
        scenario: PathBuf,
        /// Output sequence directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Diagnostic plots.
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Subcommand)]
enum PlotKind {
    /// Sweep the track age limit and plot occluded precision against recall.
    #[command(name = "pr_curvelet")]
    PrCurvelet {
        /// Sequence directory (must carry ground truth).
        #[arg(long)]
        seq: PathBuf,
        /// Swept values of n_age.
        #[arg(long = "n-age", value_delimiter = ',', default_value = "5,15,30,60")]
        n_age: Vec<u32>,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_svg: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Birds-eye view of chosen tracks with covariance ellipses.
    #[command(name = "topdown")]
    Topdown {
        /// Sequence directory.
        #[arg(long)]
        seq: PathBuf,
        /// Track ids to plot; empty plots every reported track.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<u64>,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_svg: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Track { seq, out, jobs, cfg } => cmd_track(&seq, &out, jobs, &cfg),
        Command::Eval { gt, pred, pred_format, baseline_gauss, name, report, matching, cfg } => {
            cmd_eval(&gt, &pred, &pred_format, baseline_gauss, &name, report.as_deref(), &matching, &cfg)
        }
        Command::Synth { scenario, out, cfg } => cmd_synth(&scenario, &out, &cfg),
        Command::Plot { kind } => match kind {
            PlotKind::PrCurvelet { seq, n_age, out_csv, out_svg, cfg } => {
                cmd_pr_curvelet(&seq, &n_age, &out_csv, &out_svg, &cfg)
            }
            PlotKind::Topdown { seq, ids, out_csv, out_svg, cfg } => {
                cmd_topdown(&seq, &ids, &out_csv, &out_svg, &cfg)
            }
        },
    }
}

fn cmd_track(
    seqs: &[PathBuf],
    out: &Path,
    jobs: usize,
    cfg_args: &ConfigArgs,
) -> anyhow::Result<()> {
    let cfg = cfg_args.resolve()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let sources: Vec<SequenceSource> = seqs
        .iter()
        .map(|p| SequenceSource::open(p).map_err(anyhow::Error::from))
        .collect::<anyhow::Result<_>>()?;

    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());
    let workers = jobs.max(1).min(sources.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= sources.len() {
                    break;
                }
                let src = &sources[i];
                match run_sequence(src, &cfg) {
                    Ok(pred) => {
                        let txt = out.join(format!("{}.txt", src.name));
                        let hyp = out.join(format!("{}.hyp.jsonl", src.name));
                        if let Err(e) = write_predictions(&pred, &txt, &hyp) {
                            failures.lock().unwrap().push(format!("{}: {e}", src.name));
                        } else {
                            println!(
                                "tracked {}: {} reports -> {}",
                                src.name,
                                pred.entries.len(),
                                txt.display()
                            );
                        }
                    }
                    Err(e) => failures.lock().unwrap().push(format!("{}: {e}", src.name)),
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    if !failures.is_empty() {
        bail!("tracking failed:\n  {}", failures.join("\n  "));
    }
    Ok(())
}

fn load_gt(path: &Path) -> anyhow::Result<SequenceGt> {
    let gt_file = if path.is_dir() { path.join("gt").join("gt.txt") } else { path.to_path_buf() };
    Ok(read_mot_gt(&gt_file)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    gt: &Path,
    pred: &Path,
    pred_format: &str,
    baseline_gauss: bool,
    name: &str,
    report: Option<&Path>,
    matching: &str,
    cfg_args: &ConfigArgs,
) -> anyhow::Result<()> {
    let cfg = cfg_args.resolve()?;
    let gt = load_gt(gt)?;
    let mut predictions =
        if pred_format == "mot" { read_mot_tracks(pred)? } else { read_hyp(pred)? };
    if baseline_gauss {
        for e in &mut predictions.entries {
            let seed = ghosttrack_core::hypo::derive_seed(cfg.seed, e.frame, e.id);
            e.hyps =
                ghosttrack_core::hypo::baseline_gauss(e.top1(), cfg.s_x, cfg.s_y, cfg.k, seed)?;
        }
    }
    let params = EvalParams {
        alpha_iou: cfg.alpha_iou,
        v_thresh: cfg.v_thresh,
        matching: if matching == "greedy" {
            MatchingStrategy::Greedy
        } else {
            MatchingStrategy::Optimal
        },
    };
    let result = evaluate(&gt, &predictions, &params);
    let set = ReportSet { sequences: vec![(name.to_string(), result)] };
    print!("{}", set.table());
    if let Some(path) = report {
        fs::write(path, set.key_values()).with_context(|| format!("writing {}", path.display()))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn cmd_synth(scenario: &Path, out: &Path, cfg_args: &ConfigArgs) -> anyhow::Result<()> {
    let _cfg = cfg_args.resolve()?;
    let sc = read_scenario(scenario)?;
    let src = write_rendered(&sc, out)?;
    println!(
        "rendered '{}': {} frames at {}x{} -> {}",
        src.name,
        src.frames,
        src.width,
        src.height,
        out.display()
    );
    Ok(())
}

fn cmd_pr_curvelet(
    seq: &Path,
    n_ages: &[u32],
    out_csv: &Path,
    out_svg: &Path,
    cfg_args: &ConfigArgs,
) -> anyhow::Result<()> {
    let cfg = cfg_args.resolve()?;
    let src = SequenceSource::open(seq)?;
    let gt = src.read_gt()?;
    let params = EvalParams {
        alpha_iou: cfg.alpha_iou,
        v_thresh: cfg.v_thresh,
        matching: MatchingStrategy::Optimal,
    };
    let mut points = Vec::with_capacity(n_ages.len());
    for &n_age in n_ages {
        let run_cfg = Config { n_age, ..cfg.clone() };
        let pred = run_sequence(&src, &run_cfg)?;
        let counts = ghosttrack_core::metrics::topk_counts(&gt, &pred, &params, true, None);
        points.push(PrPoint { n_age, precision: counts.precision(), recall: counts.recall() });
        println!(
            "n_age={n_age}: occluded precision {:.4}, recall {:.4}",
            counts.precision(),
            counts.recall()
        );
    }
    fs::write(out_csv, pr_curvelet_csv(&points))
        .with_context(|| format!("writing {}", out_csv.display()))?;
    fs::write(out_svg, pr_curvelet_svg(&points))
        .with_context(|| format!("writing {}", out_svg.display()))?;
    println!("wrote {} and {}", out_csv.display(), out_svg.display());
    Ok(())
}

fn cmd_topdown(
    seq: &Path,
    ids: &[u64],
    out_csv: &Path,
    out_svg: &Path,
    cfg_args: &ConfigArgs,
) -> anyhow::Result<()> {
    let cfg = cfg_args.resolve()?;
    let src = SequenceSource::open(seq)?;
    let outputs = run_sequence_outputs(&src, &cfg)?;
    let mut points = Vec::new();
    for out in &outputs {
        for p in &out.people {
            if !ids.is_empty() && !ids.contains(&p.id) {
                continue;
            }
            let gamma = p.gamma.max(1e-9);
            // map the (x, gamma) covariance to (x, z) by the local Jacobian
            // of z = 1/gamma
            let j = -1.0 / (gamma * gamma);
            let c = p.xg_cov;
            let cov_xz = [[c[0][0], c[0][1] * j], [c[1][0] * j, c[1][1] * j * j]];
            let (semi_major, semi_minor, angle_rad) = covariance_ellipse(cov_xz);
            points.push(TopdownPoint {
                track_id: p.id,
                frame: out.frame,
                occluded: p.occluded,
                x: p.bbox.cx,
                z: 1.0 / gamma,
                semi_major,
                semi_minor,
                angle_rad,
            });
        }
    }
    fs::write(out_csv, topdown_csv(&points))
        .with_context(|| format!("writing {}", out_csv.display()))?;
    fs::write(out_svg, topdown_svg(&points))
        .with_context(|| format!("writing {}", out_svg.display()))?;
    println!("wrote {} points to {} and {}", points.len(), out_csv.display(), out_svg.display());
    Ok(())
}
