//! Experiment matrix: (strategy x crop size x delta_t x seed) cells, each
//! building its stream, training the configured objective, and probing the
//! frozen encoder on the shared object-fixation probe set. Cell outputs are
//! cached by content hash and written atomically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::eval::{extract_features, stratified_split, train_probe, ttest_ind};
use crate::img::RgbImage;
use crate::nn::{save_checkpoint, EncoderConfig};
use crate::sim::{default_objects, generate_oracle_views, Background, PolicyKind, DESK_OBJECT_SIZE_PX};
use crate::ssl::{self, CropStore, SslConfig};
use crate::stream::{build_stream, read_manifest, StrategyKind, StreamBuildContext, StreamManifest};

use super::config::{hex_string, ExperimentConfig};
use super::session::obtain_session;
use super::{write_atomic, ExpError};

/// Experiment-level strategy axis: which gaze source feeds which stream
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExpStrategy {
    ToddlerGaze,
    AdultGaze,
    RandomGaze,
    NoEyeMovement,
    ObjectsFixation,
    BlankBackground,
}

impl ExpStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            ExpStrategy::ToddlerGaze => "toddler-gaze",
            ExpStrategy::AdultGaze => "adult-gaze",
            ExpStrategy::RandomGaze => "random-gaze",
            ExpStrategy::NoEyeMovement => "no-eye-movement",
            ExpStrategy::ObjectsFixation => "objects-fixation",
            ExpStrategy::BlankBackground => "blank-background",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "toddler-gaze" => Some(ExpStrategy::ToddlerGaze),
            "adult-gaze" => Some(ExpStrategy::AdultGaze),
            "random-gaze" => Some(ExpStrategy::RandomGaze),
            "no-eye-movement" => Some(ExpStrategy::NoEyeMovement),
            "objects-fixation" => Some(ExpStrategy::ObjectsFixation),
            "blank-background" => Some(ExpStrategy::BlankBackground),
            _ => None,
        }
    }

    /// Gaze policy of the source session; None for the session-free oracle.
    pub fn policy_kind(&self) -> Option<PolicyKind> {
        match self {
            ExpStrategy::AdultGaze => Some(PolicyKind::AdultLike),
            ExpStrategy::BlankBackground => None,
            _ => Some(PolicyKind::ToddlerLike),
        }
    }

    pub fn stream_kind(&self) -> StrategyKind {
        match self {
            ExpStrategy::ToddlerGaze | ExpStrategy::AdultGaze => StrategyKind::HumanGaze,
            ExpStrategy::RandomGaze => StrategyKind::RandomGaze,
            ExpStrategy::NoEyeMovement => StrategyKind::NoEyeMovement,
            ExpStrategy::ObjectsFixation => StrategyKind::ObjectsFixation,
            ExpStrategy::BlankBackground => StrategyKind::BlankBackground,
        }
    }

    /// Whether this strategy trains on ground-truth object knowledge.
    pub fn is_oracle(&self) -> bool {
        matches!(self, ExpStrategy::ObjectsFixation | ExpStrategy::BlankBackground)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub strategy: ExpStrategy,
    pub crop_size_px: u32,
    pub delta_t_s: f64,
    pub seed: u64,
}

impl Cell {
    pub fn id(&self) -> String {
        format!(
            "{}_c{}_dt{:.4}_s{}",
            self.strategy.name(),
            self.crop_size_px,
            self.delta_t_s,
            self.seed
        )
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: Cell,
    pub accuracy: Option<f64>,
    pub status: String,
    pub from_cache: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config_hash: String,
    pub cells: Vec<CellOutcome>,
}

impl RunResult {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.status == "ok")
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for matrix cells (0 = rayon default).
    pub jobs: usize,
    pub force: bool,
    /// Substring filter on cell ids.
    pub cell_filter: Option<String>,
    pub quiet: bool,
}

/// The shared probe dataset at one crop size, with its split.
pub struct ProbeSet {
    pub images: Vec<RgbImage>,
    pub labels: Vec<u32>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Phase offset separating probe views from the blank-background training
/// oracle's view grid.
const PROBE_VIEW_PHASE: f32 = 0.37;

pub fn build_probe_set(cfg: &ExperimentConfig, crop: u32) -> Result<ProbeSet, ExpError> {
    let intr = cfg.intrinsics()?;
    let objects = default_objects(cfg.scene.n_objects, DESK_OBJECT_SIZE_PX, cfg.scene.object_seed);
    let views = generate_oracle_views(
        &objects,
        cfg.probe.n_views,
        Background::Clutter,
        &intr,
        crop,
        PROBE_VIEW_PHASE,
        cfg.probe.view_seed,
    );
    let labels: Vec<u32> = views.iter().map(|v| v.object_id).collect();
    let images: Vec<RgbImage> = views.into_iter().map(|v| v.image).collect();
    let (train_idx, test_idx) = stratified_split(&labels, cfg.probe.train_fraction, cfg.probe.split_seed);
    Ok(ProbeSet { images, labels, train_idx, test_idx })
}

pub fn enumerate_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for s in &cfg.matrix.strategies {
        let strategy = ExpStrategy::from_name(s).expect("validated");
        for &crop in &cfg.matrix.crop_sizes_px {
            for &dt in &cfg.matrix.delta_ts {
                for &seed in &cfg.experiment.seeds {
                    cells.push(Cell { strategy, crop_size_px: crop, delta_t_s: dt, seed });
                }
            }
        }
    }
    for extra in &cfg.matrix.extra_cells {
        let strategy = ExpStrategy::from_name(&extra.strategy).expect("validated");
        for &seed in &cfg.experiment.seeds {
            cells.push(Cell {
                strategy,
                crop_size_px: extra.crop_size_px,
                delta_t_s: extra.delta_t_s,
                seed,
            });
        }
    }
    cells
}

fn session_id(kind: PolicyKind, seed: u64) -> String {
    match kind {
        PolicyKind::AdultLike => format!("adult-s{seed}"),
        _ => format!("toddler-s{seed}"),
    }
}

fn stream_session_id(cell: &Cell) -> String {
    match cell.strategy.policy_kind() {
        Some(kind) => format!("{}-c{}", session_id(kind, cell.seed), cell.crop_size_px),
        None => format!("oracle-c{}", cell.crop_size_px),
    }
}

fn stream_dir(root: &Path, cell: &Cell) -> PathBuf {
    root.join("streams").join(stream_session_id(cell)).join(cell.strategy.stream_kind().name())
}

/// Build every stream the cells need, one source session in memory at a time.
pub fn prebuild_streams(
    cfg: &ExperimentConfig,
    cells: &[Cell],
    root: &Path,
    force: bool,
    quiet: bool,
) -> Result<(), ExpError> {
    let intr = cfg.intrinsics()?;
    let objects = default_objects(cfg.scene.n_objects, DESK_OBJECT_SIZE_PX, cfg.scene.object_seed);
    let streams_root = root.join("streams");

    // group missing streams by their source session
    let mut by_session: BTreeMap<(Option<PolicyKind>, u64), BTreeSet<(StrategyKind, u32)>> =
        BTreeMap::new();
    for cell in cells {
        let dir = stream_dir(root, cell);
        if dir.join("manifest.txt").is_file() && !force {
            continue;
        }
        let key = match cell.strategy.policy_kind() {
            Some(kind) => (Some(kind), cell.seed),
            None => (None, 0), // the oracle stream is session- and seed-free
        };
        by_session.entry(key).or_default().insert((cell.strategy.stream_kind(), cell.crop_size_px));
    }

    for ((kind, seed), streams) in by_session {
        let (frames, masks, sid_base) = match kind {
            Some(kind) => {
                let sid = session_id(kind, seed);
                if !quiet {
                    eprintln!("[streams] simulating session {sid}");
                }
                let scfg = cfg.session_config(kind, seed)?;
                let stored = obtain_session(root, &sid, &scfg)?;
                (stored.frames, Some(stored.masks), sid)
            }
            None => (Vec::new(), None, "oracle".to_string()),
        };
        for (stream_kind, crop) in streams {
            if !quiet {
                eprintln!("[streams] building {sid_base}-c{crop}/{}", stream_kind.name());
            }
            let ctx = StreamBuildContext {
                session_id: format!("{sid_base}-c{crop}"),
                intr,
                crop_size_px: crop,
                out_root: &streams_root,
                masks: masks.as_deref(),
                objects: &objects,
                stream_seed: cfg.scene.object_seed ^ (seed << 8) ^ u64::from(crop),
                oracle_views: cfg.matrix.oracle_views,
            };
            build_stream(&frames, stream_kind, &ctx)?;
        }
    }
    Ok(())
}

struct CellEnv<'a> {
    cfg: &'a ExperimentConfig,
    root: &'a Path,
    enc_cfg: EncoderConfig,
    probe_sets: &'a BTreeMap<u32, ProbeSet>,
    config_hash: &'a str,
    force: bool,
    quiet: bool,
}

fn cache_key(env: &CellEnv, cell: &Cell, manifest_bytes: &[u8]) -> String {
    let mut ssl_cfg = env.cfg.ssl.clone();
    ssl_cfg.delta_t_s = cell.delta_t_s;
    ssl_cfg.seed = cell.seed;
    let mut h = Sha256::new();
    h.update(manifest_bytes);
    h.update(toml::to_string(&ssl_cfg).expect("ssl config serializes"));
    h.update(toml::to_string(&env.cfg.encoder).expect("encoder config serializes"));
    h.update(toml::to_string(&env.cfg.probe).expect("probe config serializes"));
    hex_string(&h.finalize())
}

fn parse_cached_result(path: &Path, want_key: &str) -> Option<f64> {
    let text = fs::read_to_string(path).ok()?;
    let mut key_ok = false;
    let mut accuracy = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# cache_key=") {
            key_ok = rest.trim() == want_key;
        } else if !line.starts_with('#') && !line.starts_with("strategy") && !line.is_empty() {
            accuracy = line.split(',').nth(4).and_then(|v| v.parse().ok());
        }
    }
    if key_ok {
        accuracy
    } else {
        None
    }
}

/// Train one cell and probe it; cached results are reused when the content
/// hash of (stream manifest, training config) matches.
fn run_cell(env: &CellEnv, cell: &Cell) -> Result<(f64, bool), ExpError> {
    let mdir = stream_dir(env.root, cell);
    let manifest_path = mdir.join("manifest.txt");
    let manifest_bytes = fs::read(&manifest_path)
        .map_err(|e| ExpError::Io { path: manifest_path.display().to_string(), source: e })?;
    let key = cache_key(env, cell, &manifest_bytes);

    let cell_dir = env.root.join("cells").join(cell.id());
    let result_path = cell_dir.join("result.csv");
    if !env.force {
        if let Some(acc) = parse_cached_result(&result_path, &key) {
            if !env.quiet {
                eprintln!("[cell] {} reused (accuracy {acc:.4})", cell.id());
            }
            return Ok((acc, true));
        }
    }
    fs::create_dir_all(&cell_dir)
        .map_err(|e| ExpError::Io { path: cell_dir.display().to_string(), source: e })?;

    let manifest: StreamManifest = read_manifest(&manifest_path)?;
    let store = CropStore::load(&[manifest], &[&mdir])?;
    let mut ssl_cfg: SslConfig = env.cfg.ssl.clone();
    ssl_cfg.delta_t_s = cell.delta_t_s;
    ssl_cfg.seed = cell.seed;
    let out = ssl::train(&store, &env.enc_cfg, &ssl_cfg)?;

    // persist training artifacts
    let mut loss_csv = format!("# config_hash={}\nepoch,mean_loss\n", env.config_hash);
    for (e, l) in out.loss_curve.iter().enumerate() {
        let _ = writeln!(loss_csv, "{e},{l:.6}");
    }
    write_atomic(&cell_dir.join("loss.csv"), loss_csv.as_bytes())?;
    save_checkpoint(&cell_dir.join("encoder.ckpt"), &out.state.online)?;

    // frozen-encoder probe on the shared probe set
    let probe = env
        .probe_sets
        .get(&cell.crop_size_px)
        .ok_or_else(|| ExpError::Config(format!("no probe set for crop {}", cell.crop_size_px)))?;
    let refs: Vec<&RgbImage> = probe.images.iter().collect();
    let feats = extract_features(&out.state.online, &env.enc_cfg, &refs, env.cfg.probe.feature_batch)?;
    let result = train_probe(
        &feats,
        &probe.labels,
        &probe.train_idx,
        &probe.test_idx,
        &env.cfg.probe.optimizer,
    )?;

    let mut result_csv = format!(
        "# config_hash={}\n# cache_key={key}\nstrategy,crop_size_px,delta_t_s,seed,accuracy\n",
        env.config_hash
    );
    let _ = writeln!(
        result_csv,
        "{},{},{:.6},{},{:.6}",
        cell.strategy.name(),
        cell.crop_size_px,
        cell.delta_t_s,
        cell.seed,
        result.accuracy
    );
    write_atomic(&result_path, result_csv.as_bytes())?;
    if !env.quiet {
        eprintln!("[cell] {} accuracy {:.4}", cell.id(), result.accuracy);
    }
    Ok((result.accuracy, false))
}

/// Run the whole matrix: prebuild streams, execute cells over a bounded
/// worker pool, aggregate results and strategy-comparison t-tests.
pub fn run_matrix(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunResult, ExpError> {
    cfg.validate()?;
    let root = cfg.output_root();
    fs::create_dir_all(&root)
        .map_err(|e| ExpError::Io { path: root.display().to_string(), source: e })?;
    let config_hash = cfg.config_hash();

    let mut cells = enumerate_cells(cfg);
    if let Some(f) = &opts.cell_filter {
        cells.retain(|c| c.id().contains(f.as_str()));
    }
    if cells.is_empty() {
        return Err(ExpError::Config("no cells selected".into()));
    }

    prebuild_streams(cfg, &cells, &root, opts.force, opts.quiet)?;

    let crops: BTreeSet<u32> = cells.iter().map(|c| c.crop_size_px).collect();
    let mut probe_sets = BTreeMap::new();
    for crop in crops {
        probe_sets.insert(crop, build_probe_set(cfg, crop)?);
    }

    let enc_cfg = cfg.encoder.to_encoder_config();
    let env = CellEnv {
        cfg,
        root: &root,
        enc_cfg,
        probe_sets: &probe_sets,
        config_hash: &config_hash,
        force: opts.force,
        quiet: opts.quiet,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| ExpError::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<CellOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| match run_cell(&env, cell) {
                Ok((accuracy, from_cache)) => CellOutcome {
                    cell: *cell,
                    accuracy: Some(accuracy),
                    status: "ok".into(),
                    from_cache,
                },
                Err(e) => CellOutcome {
                    cell: *cell,
                    accuracy: None,
                    status: e.to_string().replace([',', '\n'], ";"),
                    from_cache: false,
                },
            })
            .collect()
    });

    let mut outcomes = outcomes;
    outcomes.sort_by(|a, b| {
        (a.cell.strategy, a.cell.crop_size_px, a.cell.delta_t_s.to_bits(), a.cell.seed).cmp(&(
            b.cell.strategy,
            b.cell.crop_size_px,
            b.cell.delta_t_s.to_bits(),
            b.cell.seed,
        ))
    });

    write_results_csv(&root, &config_hash, &outcomes)?;
    write_stats_csv(&root, &config_hash, &outcomes)?;
    Ok(RunResult { config_hash, cells: outcomes })
}

fn write_results_csv(root: &Path, config_hash: &str, outcomes: &[CellOutcome]) -> Result<(), ExpError> {
    let mut csv = format!("# config_hash={config_hash}\nstrategy,crop_size_px,delta_t_s,seed,accuracy,status\n");
    for o in outcomes {
        let acc = o.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{:.6},{},{acc},{}",
            o.cell.strategy.name(),
            o.cell.crop_size_px,
            o.cell.delta_t_s,
            o.cell.seed,
            o.status
        );
    }
    write_atomic(&root.join("results.csv"), csv.as_bytes())
}

/// Pairwise strategy t-tests across seeds for every (crop, delta) group.
fn write_stats_csv(root: &Path, config_hash: &str, outcomes: &[CellOutcome]) -> Result<(), ExpError> {
    let mut groups: BTreeMap<(u32, u64), BTreeMap<ExpStrategy, Vec<f64>>> = BTreeMap::new();
    for o in outcomes {
        if let Some(acc) = o.accuracy {
            groups
                .entry((o.cell.crop_size_px, o.cell.delta_t_s.to_bits()))
                .or_default()
                .entry(o.cell.strategy)
                .or_default()
                .push(acc);
        }
    }
    let mut csv = format!("# config_hash={config_hash}\ncomparison,crop_size_px,delta_t_s,statistic,p_value,df,n\n");
    for ((crop, dt_bits), by_strategy) in &groups {
        let dt = f64::from_bits(*dt_bits);
        let strategies: Vec<_> = by_strategy.keys().copied().collect();
        for i in 0..strategies.len() {
            for j in i + 1..strategies.len() {
                let (sa, sb) = (strategies[i], strategies[j]);
                let (xs, ys) = (&by_strategy[&sa], &by_strategy[&sb]);
                if xs.len() < 2 || ys.len() < 2 {
                    continue;
                }
                let name = format!("{}_vs_{}", sa.name(), sb.name());
                match ttest_ind(xs, ys) {
                    Ok(r) => {
                        let _ = writeln!(
                            csv,
                            "{name},{crop},{dt:.6},{},{},{},{}",
                            r.statistic, r.p_value, r.df, r.n
                        );
                    }
                    Err(_) => {
                        let _ = writeln!(csv, "{name},{crop},{dt:.6},,,,{}", xs.len() + ys.len());
                    }
                }
            }
        }
    }
    write_atomic(&root.join("stats.csv"), csv.as_bytes())
}

/// Accuracies per strategy from a run, keyed for the acceptance assertions.
pub fn accuracies_by_cell(
    result: &RunResult,
) -> BTreeMap<(ExpStrategy, u32, u64), Vec<f64>> {
    let mut map: BTreeMap<(ExpStrategy, u32, u64), Vec<f64>> = BTreeMap::new();
    for o in &result.cells {
        if let Some(acc) = o.accuracy {
            map.entry((o.cell.strategy, o.cell.crop_size_px, o.cell.delta_t_s.to_bits()))
                .or_default()
                .push(acc);
        }
    }
    map
}
