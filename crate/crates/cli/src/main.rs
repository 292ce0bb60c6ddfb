use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hand2tool::affordance::{ActionId, AffordanceModel, ParentConfig, DEFAULT_ALPHA};
use hand2tool::data::{
    load_entities_with, load_model, load_trials_with, observations, save_model,
    selection_table_csv, split, view_sets, write_augmented, write_entities, write_trials, Adapter,
    Dataset, EntityKind, EntityRecord, SplitMode,
};
use hand2tool::shape::{extract_features, read_contours};
use hand2tool::synthworld::{generate_dataset, ManipFamily, SynthConfig};
use hand2tool::tasks::{evaluate_accuracy, tool_selection_table, DirectionMap, RANDOM_BASELINE};
use hand2tool::Error;

#[derive(Parser)]
#[command(name = "hand2tool", version, about = "Hand-posture affordance learning and zero-shot tool selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract shape features from contour files into an entities CSV.
    Extract(ExtractArgs),
    /// Fit a model on a dataset and write the model file.
    Train(TrainArgs),
    /// Report effect-prediction accuracy on a held-out split.
    Evaluate(EvaluateArgs),
    /// Tabulate tool selection rates per action.
    SelectTool(SelectArgs),
    /// Write the viewpoint-augmented samples of a dataset.
    Augment(AugmentArgs),
    /// Generate a synthetic dataset (entities.csv and trials.csv).
    Synth(SynthArgs),
}

#[derive(Args)]
struct DatasetArgs {
    /// Entities CSV.
    #[arg(long)]
    entities: PathBuf,
    /// Trials CSV.
    #[arg(long)]
    trials: PathBuf,
    /// Column-mapping config (TOML) for non-canonical CSV layouts.
    #[arg(long)]
    adapter: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Fraction of the data used for training; omit to use everything for
    /// both training and testing.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::ByTrial)]
    split_mode: Mode,
    /// Seed for the split; required with `--split`.
    #[arg(long, requires = "split")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    ByTrial,
    ByView,
}

impl From<Mode> for SplitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::ByTrial => SplitMode::ByTrial,
            Mode::ByView => SplitMode::ByView,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Contour files; each contour in a file becomes one view.
    #[arg(required = true)]
    contours: Vec<PathBuf>,
    /// Entity kind recorded for every row.
    #[arg(long, value_enum, default_value_t = Kind::Object)]
    kind: Kind,
    /// Entity id for every row; defaults to each file's stem.
    #[arg(long)]
    entity_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Hand,
    Tool,
    Object,
}

impl From<Kind> for EntityKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Hand => EntityKind::Hand,
            Kind::Tool => EntityKind::Tool,
            Kind::Object => EntityKind::Object,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Additive smoothing for the probability tables.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Action to desired-direction table (TOML or JSON).
    #[arg(long)]
    direction_map: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Evaluate this model instead of fitting one on the training split.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Entities CSV holding the tool views.
    #[arg(long)]
    tools: PathBuf,
    /// Entities CSV holding the object views.
    #[arg(long)]
    objects: PathBuf,
    /// Restrict to these actions (repeatable); defaults to all four.
    #[arg(long)]
    action: Vec<String>,
    /// Override the model's action to desired-direction table.
    #[arg(long)]
    direction_map: Option<PathBuf>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Population {
    Hands,
    Tools,
    All,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for entities.csv and trials.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Population::All)]
    set: Population,
    /// Views per manipulator and per object.
    #[arg(long, default_value_t = 10)]
    views: usize,
    /// Effect noise standard deviation in meters.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
}

fn load_dataset(d: &DatasetArgs) -> Result<Dataset, Error> {
    let adapter = d.adapter.as_deref().map(Adapter::read).transpose()?;
    let entities = load_entities_with(&d.entities, adapter.as_ref())?;
    let trials = load_trials_with(&d.trials, adapter.as_ref())?;
    Dataset::new(entities, trials)
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: Box::new(e.into()),
    })
}

fn read_direction_map(path: &Path) -> Result<DirectionMap, Error> {
    let wrap = |e: Error| Error::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    };
    let text = fs::read_to_string(path).map_err(|e| wrap(e.into()))?;
    DirectionMap::parse(&text).map_err(wrap)
}

fn extract(a: &ExtractArgs) -> Result<(), Error> {
    let mut rows = Vec::new();
    for path in &a.contours {
        let id = match &a.entity_id {
            Some(id) => id.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        };
        let contours = read_contours(path)?;
        for (k, c) in contours.iter().enumerate() {
            let features = extract_features(c).map_err(|e| Error::File {
                path: path.clone(),
                source: Box::new(e),
            })?;
            // with a shared entity id, views are numbered across files
            let view = if a.entity_id.is_some() { rows.len() } else { k };
            rows.push(EntityRecord {
                entity_id: id.clone(),
                kind: a.kind.into(),
                view_id: format!("v{view:02}"),
                features,
            });
        }
    }
    hand2tool::data::validate_entities(&rows)?;
    write_entities(&a.out, &rows)?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn split_description(s: &SplitArgs) -> String {
    match s.split {
        Some(f) => format!(
            "{} {f} seed {}",
            SplitMode::from(s.split_mode),
            s.seed.unwrap_or_default()
        ),
        None => "none (train = test = all trials)".to_string(),
    }
}

/// Training and test observations for the requested split.
fn partition(
    ds: &Dataset,
    s: &SplitArgs,
) -> Result<(Vec<hand2tool::affordance::Observation>, Vec<hand2tool::affordance::Observation>), Error> {
    match s.split {
        Some(f) => {
            let seed = s.seed.ok_or_else(|| {
                Error::InvalidParameter("--split needs an explicit --seed".into())
            })?;
            let sp = split(ds, s.split_mode.into(), f, seed)?;
            Ok((observations(&sp.train), observations(&sp.test)))
        }
        None => {
            let all = observations(&ds.augment()?);
            Ok((all.clone(), all))
        }
    }
}

fn train(a: &TrainArgs) -> Result<(), Error> {
    let ds = load_dataset(&a.data)?;
    let map = match &a.direction_map {
        Some(p) => read_direction_map(p)?,
        None => DirectionMap::default(),
    };
    let (train_obs, _) = partition(&ds, &a.split)?;
    let (model, report) = AffordanceModel::fit(&train_obs, a.alpha, map)?;
    save_model(&model, &a.out)?;

    let mut out = String::new();
    writeln!(out, "split: {}", split_description(&a.split)).unwrap();
    writeln!(out, "training samples: {}", report.samples).unwrap();
    let [m0, m1] = report.manip_explained_variance;
    let [o0, o1] = report.object_explained_variance;
    writeln!(out, "manipulator PCA explained variance: {m0} {m1}").unwrap();
    writeln!(out, "object PCA explained variance: {o0} {o1}").unwrap();
    writeln!(out, "per-configuration counts:").unwrap();
    for cfg in ParentConfig::all() {
        let n = report.counts.total(cfg.index());
        if n > 0 {
            writeln!(out, "  {:2} {cfg}: {n}", cfg.index()).unwrap();
        }
    }
    let empty = report.empty_configs();
    writeln!(out, "empty configurations: {}", empty.len()).unwrap();
    writeln!(out, "model written to {}", a.out.display()).unwrap();
    print!("{out}");
    if a.alpha == 0.0 && !empty.is_empty() {
        let list: Vec<String> = empty.iter().map(|c| c.index().to_string()).collect();
        eprintln!(
            "warning: alpha = 0 leaves {} configurations without a distribution: {}",
            empty.len(),
            list.join(", ")
        );
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<(), Error> {
    let ds = load_dataset(&a.data)?;
    let (train_obs, test_obs) = partition(&ds, &a.split)?;
    let (model, source) = match &a.model {
        Some(p) => (load_model(p)?, format!("model file {}", p.display())),
        None => (
            AffordanceModel::fit(&train_obs, a.alpha, DirectionMap::default())?.0,
            format!("fitted on training split, alpha {}", a.alpha),
        ),
    };
    let acc = evaluate_accuracy(&model, &test_obs)?;
    let mut out = String::new();
    writeln!(out, "split: {}", split_description(&a.split)).unwrap();
    writeln!(out, "model: {source}").unwrap();
    writeln!(out, "training samples: {}", train_obs.len()).unwrap();
    writeln!(out, "test samples: {}", acc.total).unwrap();
    writeln!(out, "correct: {}", acc.correct).unwrap();
    writeln!(out, "accuracy: {:.6}", acc.fraction()).unwrap();
    writeln!(out, "random baseline: {RANDOM_BASELINE:.6}").unwrap();
    print!("{out}");
    if let Some(p) = &a.out {
        write_text(p, &out)?;
    }
    Ok(())
}

fn select_tool(a: &SelectArgs) -> Result<(), Error> {
    let mut model = load_model(&a.model)?;
    if let Some(p) = &a.direction_map {
        model.direction_map = read_direction_map(p)?;
    }
    let tools = load_entities_with(&a.tools, None)?;
    let objects = load_entities_with(&a.objects, None)?;
    let tools = view_sets(tools.iter().filter(|e| e.kind == EntityKind::Tool));
    let objects = view_sets(objects.iter().filter(|e| e.kind == EntityKind::Object));
    if tools.is_empty() {
        return Err(Error::MissingViews(format!("of kind tool in {}", a.tools.display())));
    }
    if objects.is_empty() {
        return Err(Error::MissingViews(format!("of kind object in {}", a.objects.display())));
    }
    let actions: Vec<ActionId> = if a.action.is_empty() {
        ActionId::ALL.to_vec()
    } else {
        a.action.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    };
    let rows = tool_selection_table(&model, &tools, &objects, &actions)?;
    let csv = selection_table_csv(&rows)?;
    match &a.out {
        Some(p) => write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn augment(a: &AugmentArgs) -> Result<(), Error> {
    let ds = load_dataset(&a.data)?;
    let samples = ds.augment()?;
    write_augmented(&a.out, &samples)?;
    println!(
        "{} trials -> {} augmented samples written to {}",
        ds.trials().len(),
        samples.len(),
        a.out.display()
    );
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<(), Error> {
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise must be >= 0, got {}", a.noise)));
    }
    if a.views == 0 {
        return Err(Error::InvalidParameter("views must be at least 1".into()));
    }
    let mut cfg = match a.set {
        Population::Hands => SynthConfig::hands(a.seed),
        Population::Tools => SynthConfig::tools(a.seed),
        Population::All => {
            let mut c = SynthConfig::hands(a.seed);
            c.manipulators
                .extend(SynthConfig::tools(a.seed).manipulators);
            c
        }
    };
    cfg.views = a.views;
    cfg.rule.noise_sigma = a.noise;
    let ds = generate_dataset(&cfg)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::File {
        path: a.out.clone(),
        source: Box::new(e.into()),
    })?;
    write_entities(a.out.join("entities.csv"), ds.entities())?;
    write_trials(a.out.join("trials.csv"), ds.trials())?;
    let families: Vec<&str> = cfg.manipulators.iter().map(|(f, _)| ManipFamily::name(*f)).collect();
    println!(
        "wrote {} entity views and {} trials ({}) to {}",
        ds.entities().len(),
        ds.trials().len(),
        families.join(", "),
        a.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::SelectTool(a) => select_tool(a),
        Command::Augment(a) => augment(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
