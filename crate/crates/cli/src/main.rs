use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pacer::data::{sample_context, save_dataset, seeded_rng, BankConfig, DataConfig, DataSource, Phase, TotalOrdering};
use pacer::eval::suite::{
    learned_nc, ranking_matrix, target_nc, texture_banks, theorem_suite, tier_suite, Models, PlanningSuiteConfig, RankingConfig,
};
use pacer::model::{load_checkpoint, NetworkSpec};
use pacer::plan::Cell;
use pacer::train::{checkpoint_name, staged_train, TrainConfig};
use pacer::world::{generate_world, TerrainWorld, TextureLibrary, TextureSpec, WorldFile};
use pacer_service::scenario::DEFAULT_TILE_STRIDE;
use pacer_service::{plan_scenario, AppState, ContextWire, LoadedModel, PlanSettings, WorldRegistry};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "pacer", about = "Preference-conditioned terrain costmaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Procedural worlds.
    World {
        #[command(subcommand)]
        command: WorldCommand,
    },
    /// Preference contexts in the JSON wire form.
    Context {
        #[command(subcommand)]
        command: ContextCommand,
    },
    /// Training datasets.
    Data {
        #[command(subcommand)]
        command: DataCommand,
    },
    /// Three-phase training into a run directory.
    Train {
        /// Training config JSON; desk-scale defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Use the 100/5/100 epoch schedule.
        #[arg(long)]
        full_scale: bool,
    },
    /// Plan over the learned cost field of a world.
    Plan {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Context JSON, as produced by `pacer context gen` or the API.
        #[arg(long)]
        context: PathBuf,
        #[arg(long, value_parser = parse_cell)]
        start: Cell,
        #[arg(long, value_parser = parse_cell)]
        goal: Cell,
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_TILE_STRIDE)]
        tile_stride: usize,
        /// Hidden ordering for label tiers, e.g. `0,1,2,3,4`; tiers come
        /// from the learned field otherwise.
        #[arg(long, value_parser = parse_ordering)]
        ordering: Option<TotalOrdering>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluation suites.
    Eval {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Run directory for `tiers` and `ranking`; a checkpoint file or a
        /// run directory for `nc`; unused by `theorem`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Suite config JSON for `tiers` and `ranking`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Instances for `nc` and `theorem`.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// HTTP API and static UI.
    Serve {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        worlds: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Built UI assets served at `/`.
        #[arg(long, value_name = "DIR")]
        r#static: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum WorldCommand {
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 5)]
        labels: usize,
        /// Draw labels with synthetic textures instead of base ones.
        #[arg(long)]
        synthetic: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ContextCommand {
    /// Samples `n` pairs consistent with an ordering from texture patches.
    Gen {
        #[arg(long)]
        world: PathBuf,
        #[arg(long, value_parser = parse_ordering)]
        ordering: TotalOrdering,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DataCommand {
    Gen {
        #[arg(long, value_parser = parse_phase)]
        phase: Phase,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Data config JSON; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Tiers,
    Ranking,
    Nc,
    Theorem,
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok([num(x)?, num(y)?])
}

fn parse_ordering(s: &str) -> Result<TotalOrdering, String> {
    let labels = s
        .split(',')
        .map(|v| v.trim().parse::<u8>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    TotalOrdering::new(labels).map_err(|e| e.to_string())
}

fn parse_phase(s: &str) -> Result<Phase, String> {
    s.parse::<Phase>().map_err(|e| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_world(path: &Path) -> Result<TerrainWorld> {
    let file: WorldFile = read_json(path)?;
    Ok(TerrainWorld::from_file(&file)?)
}

fn run_config(dir: &Path) -> Result<TrainConfig> {
    let p = dir.join("config.json");
    if p.exists() {
        read_json(&p)
    } else {
        Ok(TrainConfig::default())
    }
}

fn need_checkpoint(checkpoint: Option<PathBuf>, suite: &str) -> Result<PathBuf> {
    checkpoint.with_context(|| format!("--checkpoint is required for the {suite} suite"))
}

fn eval(suite: Suite, checkpoint: Option<PathBuf>, config: Option<PathBuf>, count: Option<usize>, seed: Option<u64>) -> Result<serde_json::Value> {
    let spec = NetworkSpec::default();
    Ok(match suite {
        Suite::Tiers => {
            let dir = need_checkpoint(checkpoint, "tiers")?;
            let mut cfg: PlanningSuiteConfig = config.map(|p| read_json(&p)).transpose()?.unwrap_or_default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = tier_suite(&Models::load(&dir, &spec)?, &cfg)?;
            json!({ "suite": "tiers", "checkpoint": dir, "config": cfg, "seed": cfg.seed, "report": report })
        }
        Suite::Ranking => {
            let dir = need_checkpoint(checkpoint, "ranking")?;
            let mut cfg: RankingConfig = match config {
                Some(p) => read_json(&p)?,
                None => RankingConfig::held_out(&run_config(&dir)?.data),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let m = ranking_matrix(&Models::load(&dir, &spec)?, &cfg)?;
            json!({
                "suite": "ranking",
                "checkpoint": dir,
                "config": cfg,
                "seed": cfg.seed,
                "report": m,
                "row_means": m.row_means(),
                "diagonal_is_column_min": m.diagonal_is_column_min(),
                "best_row": m.best_row(),
            })
        }
        Suite::Nc => {
            let path = need_checkpoint(checkpoint, "nc")?;
            let file = if path.is_dir() { path.join(checkpoint_name(Phase::Synthetic)) } else { path };
            let params = load_checkpoint(&file, &spec)?;
            let data = DataConfig::default();
            let source = DataSource::standard(data.clone())?;
            let (count, seed) = (count.unwrap_or(100), seed.unwrap_or(6000));
            json!({
                "suite": "nc",
                "checkpoint": file,
                "config": data,
                "seed": seed,
                "targets": target_nc(&source, count, seed)?,
                "learned": learned_nc(&params, &source, count, seed)?,
            })
        }
        Suite::Theorem => {
            let (count, seed) = (count.unwrap_or(20), seed.unwrap_or(8000));
            json!({ "suite": "theorem", "count": count, "seed": seed, "report": theorem_suite(count, seed)? })
        }
    })
}

fn world_gen(seed: u64, size: usize, labels: usize, synthetic: bool) -> Result<TerrainWorld> {
    let lib = TextureLibrary::standard();
    let pool = if synthetic { lib.synthetic() } else { lib.base() };
    if labels > pool.len() {
        bail!("{labels} labels but only {} textures available", pool.len());
    }
    let textures: Vec<TextureSpec> = pool[..labels].iter().map(|t| (*t).clone()).collect();
    Ok(generate_world(seed, size, size, labels, textures)?)
}

fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match Cli::parse().command {
        Command::World {
            command: WorldCommand::Gen { seed, size, labels, synthetic, out },
        } => write_json(&out, &world_gen(seed, size, labels, synthetic)?.to_file())?,
        Command::Context {
            command: ContextCommand::Gen { world, ordering, seed, n, out },
        } => {
            let w = read_world(&world)?;
            if ordering.len() != w.num_labels() {
                bail!("ordering has {} labels, the world {}", ordering.len(), w.num_labels());
            }
            let banks = texture_banks(w.textures(), &BankConfig { size: 40, patch_size: 16 }, seed)?;
            let ctx = sample_context(&mut seeded_rng(seed, 0), &ordering, &banks, n)?;
            write_json(&out, &ContextWire::encode(&ctx))?;
        }
        Command::Data {
            command: DataCommand::Gen { phase, count, seed, config, out },
        } => {
            let cfg: DataConfig = config.map(|p| read_json(&p)).transpose()?.unwrap_or_default();
            let source = DataSource::standard(cfg.clone())?;
            let examples: Vec<_> = source.stream(phase, seed, count).collect::<Result<_, _>>()?;
            let manifest = save_dataset(&out, phase, seed, &cfg, &examples)?;
            eprintln!("wrote {} {} examples to {}", manifest.examples.len(), phase.name(), out.display());
        }
        Command::Train { config, out, full_scale } => {
            let cfg = match config {
                Some(p) => read_json(&p)?,
                None if full_scale => TrainConfig::full_scale(),
                None => TrainConfig::default(),
            };
            let report = staged_train(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Plan {
            world,
            checkpoint,
            context,
            start,
            goal,
            lambda,
            tile_stride,
            ordering,
            out,
        } => {
            let w = read_world(&world)?;
            let params = load_checkpoint(&checkpoint, &NetworkSpec::default())?;
            let wire: ContextWire = read_json(&context)?;
            let ctx = wire.decode(params.spec.n, params.spec.patch_size)?;
            let settings = PlanSettings {
                start,
                goal,
                lambda,
                tile_stride,
                ordering,
            };
            let (outcome, _) = plan_scenario(&w, &params, &ctx, &settings)?;
            write_json(&out, &outcome)?;
        }
        Command::Eval {
            suite,
            checkpoint,
            config,
            count,
            seed,
            out,
        } => write_json(&out, &eval(suite, checkpoint, config, count, seed)?)?,
        Command::Serve {
            checkpoint,
            worlds,
            port,
            host,
            r#static,
        } => {
            let registry = WorldRegistry::load_dir(&worlds)?;
            let model = checkpoint.map(|p| LoadedModel::load(&p)).transpose()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(pacer_service::serve(AppState::new(registry, model), (host, port).into(), r#static))?;
        }
    }
    Ok(())
}
