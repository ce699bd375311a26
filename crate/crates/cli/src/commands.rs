use std::fs;
use std::path::{Path, PathBuf};

use mfd_core::eval::{permutation_importance, EvalReport, Feature};
use mfd_core::graph::{build_graph, label_edges};
use mfd_core::io::{self, kind, Checkpoint, Encoding, Envelope, RunConfig};
use mfd_core::model::Model;
use mfd_core::pipeline::{self, Calibration};
use mfd_core::rng::substream;
use mfd_core::sim::{random_targets, simulate_window, ScanWindow};
use mfd_core::train::{input_spec, make_graphs, train, Dataset, SimGraph};
use mfd_core::{Error, Result};
use rand::Rng;

use crate::{Command, Common};

/// Failure split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(Error),
    #[error("{0}")]
    Runtime(#[from] Error),
}

pub fn is_config_error(f: &Failure) -> bool {
    matches!(f, Failure::Config(_) | Failure::Runtime(Error::Config(_)))
}

/// Loaded configuration with the effective seed and its hash.
struct Ctx {
    cfg: RunConfig,
    seed: u64,
    hash: String,
    out: PathBuf,
}

fn context(c: &Common) -> Result<Ctx, Failure> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.hyper.seed = cfg.seed;
    cfg.validate().map_err(Failure::Config)?;
    let hash = cfg.hash().map_err(Failure::Config)?;
    Ok(Ctx { seed: cfg.seed, cfg, hash, out: c.out.clone() })
}

fn load_model(path: &Path) -> Result<Model> {
    io::load::<Checkpoint>(path, kind::CHECKPOINT)?.body.model()
}

fn window_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("window-") && n.ends_with(".json")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate { common, count } => {
            let ctx = context(&common)?;
            let c = &ctx.cfg;
            for k in 0..count {
                let mut rng = substream(ctx.seed, "simulate", k as u64);
                let snr = c.dataset.snr_db[rng.random_range(0..c.dataset.snr_db.len())];
                let truths = random_targets(&c.scenario.at_snr(snr), &c.radar, c.graph.l, 0, &mut rng)?;
                let w = simulate_window(&truths, 0.0, c.graph.l, &c.radar, &mut rng)?;
                io::save(&ctx.out.join(format!("window-{k:05}.json")), kind::WINDOW, &ctx.hash, ctx.seed, &w)?;
            }
            log::info!("wrote {count} windows to {}", ctx.out.display());
        }
        Command::BuildGraphs { common, data } => {
            let ctx = context(&common)?;
            let c = &ctx.cfg;
            let graphs = match data {
                Some(dir) => {
                    let mut out = Vec::new();
                    for f in window_files(&dir)? {
                        let w: ScanWindow = io::load::<ScanWindow>(&f, kind::WINDOW)?.body;
                        w.validate()?;
                        let (mut graph, _) = build_graph(&w, &c.graph, c.radar.v_u)?;
                        label_edges(&mut graph);
                        let snr_db = w.truths.iter().map(|t| t.snr_db).fold(f64::NEG_INFINITY, f64::max);
                        out.push(SimGraph { snr_db: if snr_db.is_finite() { snr_db } else { 0.0 }, graph });
                    }
                    if out.is_empty() {
                        return Err(Error::Missing(format!("no window-*.json files in {}", dir.display())).into());
                    }
                    out
                }
                None => make_graphs(c.dataset.n_graphs, &c.dataset.snr_db, &c.radar, &c.graph, &c.scenario, ctx.seed)?,
            };
            io::save(&ctx.out.join("graphs.json"), kind::GRAPHS, &ctx.hash, ctx.seed, &graphs)?;
            log::info!("wrote {} graphs", graphs.len());
        }
        Command::Train { common, data, base64 } => {
            let ctx = context(&common)?;
            let graphs: Vec<SimGraph> = io::load(&data.join("graphs.json"), kind::GRAPHS)?.body;
            let ds = Dataset::from_graphs(&graphs, &input_spec(&ctx.cfg.radar))?;
            let (model, report) = train(&ds, &ctx.cfg.dims, &ctx.cfg.hyper)?;
            for m in &report.per_snr {
                log::info!("validation accuracy at {} dB: {:.4}", m.snr_db, m.accuracy);
            }
            let enc = if base64 { Encoding::Base64 } else { Encoding::Decimal };
            io::save(&ctx.out, kind::CHECKPOINT, &ctx.hash, ctx.seed, &Checkpoint::new(&model, Some(report.clone()), enc))?;
            io::save(&ctx.out.with_extension("report.json"), kind::REPORT, &ctx.hash, ctx.seed, &report)?;
            io::write_loss_csv(&ctx.out.with_extension("loss.csv"), &report)?;
        }
        Command::Calibrate { common, checkpoint } => {
            let ctx = context(&common)?;
            let model = load_model(&checkpoint)?;
            let cal = pipeline::calibrate(&model, &ctx.cfg, ctx.seed)?;
            io::save(&ctx.out, kind::CALIBRATION, &ctx.hash, ctx.seed, &cal)?;
        }
        Command::Eval { common, checkpoint, calibration } => {
            let ctx = context(&common)?;
            let model = load_model(&checkpoint)?;
            let cal: Calibration = io::load(&calibration, kind::CALIBRATION)?.body;
            let report = pipeline::evaluate(&model, &ctx.cfg, &cal, ctx.seed)?;
            io::save(&ctx.out.join("report.json"), kind::REPORT, &ctx.hash, ctx.seed, &report)?;
            io::write_curves_csv(&ctx.out.join("curves.csv"), &report.rows)?;
        }
        Command::Importance { common, checkpoint, data, feature, repeats, snr } => {
            let ctx = context(&common)?;
            let features = if feature.is_empty() {
                Feature::ALL.to_vec()
            } else {
                feature.iter().map(|f| f.parse::<Feature>()).collect::<Result<Vec<_>>>().map_err(Failure::Config)?
            };
            let model = load_model(&checkpoint)?;
            let graphs: Vec<SimGraph> = io::load(&data.join("graphs.json"), kind::GRAPHS)?.body;
            let ds = Dataset::from_graphs(&graphs, &input_spec(&ctx.cfg.radar))?;
            let pool = if ds.val.is_empty() { ds.train } else { ds.val };
            let eval_set: Vec<_> = pool
                .into_iter()
                .filter(|g| snr.is_none_or(|s| g.snr_db.is_some_and(|t| (t - s).abs() < 1e-9)))
                .collect();
            let mut rows = Vec::new();
            for f in features {
                for ctx_class in [None, Some(0), Some(2)] {
                    rows.push(permutation_importance(&model, &eval_set, f, ctx_class, repeats, ctx.seed)?);
                }
            }
            io::save(&ctx.out.join("importance.json"), kind::IMPORTANCE, &ctx.hash, ctx.seed, &rows)?;
            io::write_boxplot_csv(&ctx.out.join("boxplot.csv"), &rows)?;
        }
        Command::Report { out, inputs } => {
            let mut rows = Vec::new();
            for p in &inputs {
                let env: Envelope<EvalReport> = io::load(p, kind::REPORT)?;
                rows.extend(env.body.rows);
            }
            rows.sort_by(|a, b| {
                a.snr_db.total_cmp(&b.snr_db).then(a.windows.cmp(&b.windows)).then(a.method.cmp(&b.method))
            });
            rows.dedup_by(|a, b| a.snr_db == b.snr_db && a.windows == b.windows && a.method == b.method);
            io::write_curves_csv(&out, &rows)?;
        }
    }
    Ok(())
}
