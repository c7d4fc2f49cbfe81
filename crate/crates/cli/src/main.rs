use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use spatialsynth_core::agents::{
    build_api, AgentBackend, Agents, BackendError, LiveBackend, LiveConfig, RecordingBackend, ReplayBackend,
    ScriptedBackend, DEFAULT_TEMPERATURE,
};
use spatialsynth_core::bench::{self, BenchmarkItem, QuestionKind};
use spatialsynth_core::registry::{ApiRegistry, Profile, IMPLEMENTATION_BUDGET};
use spatialsynth_core::scene::{generate_scenes, Camera, Scene, MAX_OBJECTS, MIN_OBJECTS};
use spatialsynth_core::specialists::{Backend, SpecialistSuite};
use spatialsynth_core::synthesis::{run_batch, BatchItem, ResultRecord, SynthesisConfig, PROGRAM_BUDGET};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "spatialsynth", version, about = "Agentic API generation and program synthesis over synthetic 3D scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random scene files.
    GenScenes(GenScenesArgs),
    /// Generate benchmark questions with ground truth over a scene directory.
    GenBench(GenBenchArgs),
    /// Propose and implement API methods for a benchmark's questions.
    BuildApi(BuildApiArgs),
    /// Synthesize and execute a program for every benchmark item.
    Run(RunArgs),
    /// Score results against a benchmark.
    Score(ScoreArgs),
}

#[derive(Args)]
struct GenScenesArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Object count per scene: `N` or `LO-HI`.
    #[arg(long, default_value = "3-10")]
    objects: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenBenchArgs {
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ProfileArg::Clevr)]
    profile: ProfileArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    per_scene: usize,
    /// Keep at most this many items overall.
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated templates; defaults to every template the profile supports.
    #[arg(long, value_delimiter = ',')]
    templates: Vec<String>,
    /// Also write scripted agent rules answering each item with its reference program.
    #[arg(long)]
    programs: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Clevr,
    Omni3d,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Clevr => Profile::Clevr,
            ProfileArg::Omni3d => Profile::Omni3d,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendMode {
    Live,
    Replay,
    Scripted,
}

#[derive(Args)]
struct AgentArgs {
    #[arg(long, value_enum, default_value_t = BackendMode::Live)]
    backend: BackendMode,
    /// Replay transcript (JSONL) or scripted rules (JSON).
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Append every exchange to this transcript.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    temperature: f64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Clevr)]
    profile: ProfileArg,
}

#[derive(Args)]
struct BuildApiArgs {
    #[arg(long)]
    benchmark: PathBuf,
    /// Where to write the registry snapshot.
    #[arg(long)]
    registry: PathBuf,
    #[command(flatten)]
    agent: AgentArgs,
    /// Questions per signature request.
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
    /// Stop after this many signature batches.
    #[arg(long)]
    signature_batches: Option<usize>,
    /// Implementation errors allowed per method.
    #[arg(long, default_value_t = IMPLEMENTATION_BUDGET, value_parser = clap::value_parser!(u32).range(1..))]
    budget: u32,
    /// Write the build report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpecialistMode {
    Oracle,
    Perturbed,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    benchmark: PathBuf,
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    registry: PathBuf,
    #[command(flatten)]
    agent: AgentArgs,
    /// Program attempts per question.
    #[arg(long, default_value_t = PROGRAM_BUDGET, value_parser = clap::value_parser!(u32).range(1..))]
    budget: u32,
    #[arg(long, value_enum, default_value_t = SpecialistMode::Oracle)]
    specialists: SpecialistMode,
    /// Seed for the perturbed specialists.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Record wall time per item.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    benchmark: PathBuf,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Agent(anyhow::Error),
    Missing(String),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Agent(_) => 3,
            Failure::Missing(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Agent(e) => write!(f, "agent failure: {e:#}"),
            Failure::Missing(m) => write!(f, "missing artifact: {m}"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

type Outcome = Result<(), Failure>;

fn require(path: &Path, what: &str) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Missing(format!("{what} {}", path.display())))
    }
}

fn parse_object_range(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("--objects expects N or LO-HI, got '{text}'"));
    let (lo, hi) = match text.split_once('-') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n = text.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo < MIN_OBJECTS || hi > MAX_OBJECTS || lo > hi {
        return Err(Failure::Usage(format!(
            "object count range {lo}-{hi} must lie within {MIN_OBJECTS}-{MAX_OBJECTS}"
        )));
    }
    Ok((lo, hi))
}

fn cmd_gen_scenes(args: GenScenesArgs) -> Outcome {
    let (lo, hi) = parse_object_range(&args.objects)?;
    let scenes = generate_scenes(args.seed, args.count, lo..=hi, &Camera::default())
        .context("generating scenes")?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for (i, scene) in scenes.iter().enumerate() {
        scene
            .write(args.out.join(format!("scene_{i:04}.json")))
            .context("writing scene")?;
    }
    println!("wrote {} scenes to {}", scenes.len(), args.out.display());
    Ok(())
}

fn scene_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    require(dir, "scenes directory")?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_gen_bench(args: GenBenchArgs) -> Outcome {
    let profile = Profile::from(args.profile);
    let templates: Vec<QuestionKind> = if args.templates.is_empty() {
        QuestionKind::for_profile(profile)
    } else {
        args.templates
            .iter()
            .map(|t| t.parse().map_err(Failure::Usage))
            .collect::<Result<_, _>>()?
    };
    let mut items: Vec<BenchmarkItem> = Vec::new();
    let mut programs: Vec<(String, String)> = Vec::new();
    for (i, path) in scene_files(&args.scenes)?.iter().enumerate() {
        let scene = Scene::read(path).context("reading scene")?;
        let name = path.file_name().expect("file").to_string_lossy().into_owned();
        let stem = path.file_stem().expect("file").to_string_lossy().into_owned();
        let seed = args.seed.wrapping_add(i as u64);
        // Rotate so every template is reached even with few items per scene.
        let mut order = templates.clone();
        if !order.is_empty() {
            let k = (i * args.per_scene) % order.len();
            order.rotate_left(k);
        }
        for (item, spec) in bench::generate_items(&scene, &name, &stem, &order, args.per_scene, seed) {
            programs.push((item.question.clone(), spec.reference_program(true)));
            items.push(item);
        }
    }
    if let Some(n) = args.count {
        items.truncate(n);
        programs.truncate(n);
    }
    bench::write_items(&args.out, &items).context("writing benchmark")?;
    if let Some(path) = &args.programs {
        let rules = bench::scripted_rules(&programs);
        let text = serde_json::to_string_pretty(&rules).context("serializing rules")? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("wrote {} items to {}", items.len(), args.out.display());
    Ok(())
}

fn make_backend(args: &AgentArgs) -> Result<Box<dyn AgentBackend>, Failure> {
    let transcript = || {
        args.transcript
            .as_deref()
            .ok_or_else(|| Failure::Usage("--transcript is required for replay and scripted backends".into()))
    };
    let agent = |e: BackendError| Failure::Agent(e.into());
    let inner: Box<dyn AgentBackend> = match args.backend {
        BackendMode::Replay => {
            let path = transcript()?;
            require(path, "transcript")?;
            Box::new(ReplayBackend::open(path).map_err(agent)?)
        }
        BackendMode::Scripted => {
            let path = transcript()?;
            require(path, "script")?;
            Box::new(ScriptedBackend::open(path).map_err(agent)?)
        }
        BackendMode::Live => Box::new(LiveBackend::new(LiveConfig::from_env()).map_err(agent)?),
    };
    Ok(match &args.record {
        Some(path) => Box::new(RecordingBackend::create(inner, path).map_err(agent)?),
        None => inner,
    })
}

fn read_benchmark(path: &Path) -> Result<Vec<BenchmarkItem>, Failure> {
    require(path, "benchmark")?;
    Ok(bench::read_items(path).context("reading benchmark")?)
}

fn cmd_build_api(args: BuildApiArgs) -> Outcome {
    let items = read_benchmark(&args.benchmark)?;
    let backend = make_backend(&args.agent)?;
    let mut agents = Agents::new(backend.as_ref(), args.agent.temperature);
    let mut registry = ApiRegistry::new(args.agent.profile.into()).with_budget(args.budget);

    let questions: Vec<String> = items.iter().map(|i| i.question.clone()).collect();
    let report = build_api(
        &mut registry,
        &mut agents,
        &questions,
        args.batch_size as usize,
        args.signature_batches,
    )
    .map_err(|e| Failure::Agent(e.into()))?;
    registry.write_snapshot(&args.registry).context("writing snapshot")?;

    let text = serde_json::to_string_pretty(&report).context("serializing report")? + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Outcome {
    require(&args.registry, "registry snapshot")?;
    let items = read_benchmark(&args.benchmark)?;
    require(&args.scenes, "scenes directory")?;
    let registry = ApiRegistry::read_snapshot(args.agent.profile.into(), &args.registry)
        .context("reading registry snapshot")?;
    let backend = make_backend(&args.agent)?;
    let agents = Agents::new(backend.as_ref(), args.agent.temperature);
    let specialists = match args.specialists {
        SpecialistMode::Oracle => Backend::Oracle,
        SpecialistMode::Perturbed => Backend::perturbed(args.seed),
    };

    let mut scenes: std::collections::BTreeMap<String, Arc<Scene>> = Default::default();
    let mut batch = Vec::with_capacity(items.len());
    for item in &items {
        let scene = match scenes.get(&item.scene) {
            Some(s) => s.clone(),
            None => {
                let path = args.scenes.join(&item.scene);
                require(&path, "scene")?;
                let s = Arc::new(Scene::read(&path).context("reading scene")?);
                scenes.insert(item.scene.clone(), s.clone());
                s
            }
        };
        let suite = SpecialistSuite::with_backend(scene, specialists).context("building specialists")?;
        batch.push(BatchItem {
            id: item.id.clone(),
            question: item.question.clone(),
            suite,
        });
    }
    let config = SynthesisConfig {
        budget: args.budget,
        timings: args.timings,
    };
    let records = run_batch(&batch, &registry, &agents, &config, args.jobs);
    let text: String = records.iter().map(|r| r.to_json_line() + "\n").collect();
    std::fs::write(&args.out, text).with_context(|| format!("writing {}", args.out.display()))?;

    let answered = records.iter().filter(|r| r.succeeded()).count();
    println!("{answered}/{} items produced an answer", records.len());
    let failed = records.iter().filter(|r| r.agent_failure).count();
    if failed > 0 {
        return Err(Failure::Agent(anyhow::anyhow!("{failed} items hit a backend failure")));
    }
    Ok(())
}

fn read_results(path: &Path) -> Result<Vec<ResultRecord>, Failure> {
    require(path, "results")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{} line {}", path.display(), i + 1))
                .map_err(Failure::Other)
        })
        .collect()
}

fn cmd_score(args: ScoreArgs) -> Outcome {
    let records = read_results(&args.results)?;
    let items = read_benchmark(&args.benchmark)?;
    let report = bench::score(&records, &items).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", report.table());
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenScenes(a) => cmd_gen_scenes(a),
        Command::GenBench(a) => cmd_gen_bench(a),
        Command::BuildApi(a) => cmd_build_api(a),
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
