use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use closedloop::bench::{
    read_transcripts, repl, run_session, run_suite, summarize_run, write_outputs, BackendKind, RunConfig, Session,
    SuiteFile,
};
use closedloop::error::ConfigError;
use closedloop::executor::{EpisodePolicy, EpisodeTranscript};
use closedloop::metrics::{baseline_table, report_from};
use closedloop::sim::FaultModel;
use closedloop::task::{interpret_instruction, Task};

#[derive(Parser)]
#[command(name = "closedloop", version, about = "Closed-loop mobile manipulation bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode.
    Episode {
        /// Free-form instruction; goals are derived by keyword interpretation.
        #[arg(long, conflicts_with = "task")]
        instruction: Option<String>,
        /// Index of a task in the selected suite.
        #[arg(long)]
        task: Option<usize>,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a whole suite and write transcripts and a report.
    Bench {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Run tasks one after another in one warehouse instead of each on a fresh scene.
        #[arg(long)]
        session: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Read instructions from stdin, one per line, in a persistent warehouse.
    Repl {
        #[arg(long, default_value = "canonical")]
        scene: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Summarize transcripts previously written by `bench`.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
        /// Also print published baseline peak costs next to this run's peak.
        #[arg(long)]
        baselines: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn on(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Oracle,
    Scripted,
    Http,
}

#[derive(Args)]
struct SuiteArgs {
    /// Task level 1-4.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    level: Option<u8>,
    /// Built-in suite name or path to a suite file.
    #[arg(long, conflicts_with = "level")]
    suite: Option<String>,
    /// Select the perturbation suite.
    #[arg(long, value_enum, default_value = "off")]
    perturb: Toggle,
}

impl SuiteArgs {
    fn load(&self) -> Result<Option<SuiteFile>, ConfigError> {
        match (self.perturb.on(), &self.suite, self.level) {
            (true, None, None) => SuiteFile::load("perturbation").map(Some),
            (true, _, _) => Err(ConfigError::Invalid("--perturb on selects its own suite".into())),
            (false, Some(s), _) => SuiteFile::load(s).map(Some),
            (false, None, Some(l)) => SuiteFile::for_level(l).map(Some),
            (false, None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "oracle")]
    backend: Backend,
    /// Script file for the scripted backend.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "on")]
    feedback: Toggle,
    #[arg(long, value_enum, default_value = "on")]
    memory: Toggle,
    #[arg(long, value_enum, default_value = "on")]
    side_refinement: Toggle,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for transcripts and reports.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    max_steps: u32,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long, default_value_t = 0.0)]
    grasp_fail: f64,
    #[arg(long, default_value_t = 0.0)]
    nav_fail: f64,
    #[arg(long, default_value_t = 0.0)]
    misrecognition: f64,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, ConfigError> {
        let backend = match (self.backend, &self.script) {
            (Backend::Scripted, Some(p)) => BackendKind::Scripted(p.clone()),
            (Backend::Scripted, None) => return Err(ConfigError::Invalid("--backend scripted needs --script".into())),
            (_, Some(_)) => return Err(ConfigError::Invalid("--script only applies to --backend scripted".into())),
            (Backend::Oracle, None) => BackendKind::Oracle,
            (Backend::Http, None) => BackendKind::Http,
        };
        let faults = FaultModel {
            misrecognition_prob: self.misrecognition,
            grasp_fail_prob: self.grasp_fail,
            nav_fail_prob: self.nav_fail,
            scripted_perturbations: Vec::new(),
        };
        faults.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(RunConfig {
            backend,
            policy: EpisodePolicy {
                max_steps: self.max_steps,
                max_retries: self.max_retries,
                feedback: self.feedback.on(),
                memory: self.memory.on(),
                side_refinement: self.side_refinement.on(),
            },
            seed: self.seed,
            faults,
            workers: self.workers,
        })
    }
}

fn print_episode(out: &mut impl Write, t: &EpisodeTranscript) -> std::io::Result<()> {
    for turn in &t.turns {
        if let Some(a) = &turn.action {
            writeln!(out, "> {a}")?;
        }
        if let Some(fb) = &turn.feedback {
            writeln!(out, "{fb}")?;
        }
    }
    writeln!(out, "verdict: {}", serde_json::to_string(&t.summary.verdict).expect("verdict serializes"))
}

fn episode(
    instruction: Option<String>,
    index: Option<usize>,
    suite: &SuiteArgs,
    run: &RunArgs,
) -> Result<bool, ConfigError> {
    let cfg = run.config()?;
    let loaded = suite.load()?;
    let (suite, index) = match (instruction, loaded) {
        (Some(text), None) => {
            let scene = closedloop::bench::load_scene("canonical", cfg.seed)?;
            let goals = interpret_instruction(&text, &scene);
            let suite =
                SuiteFile { name: "adhoc".into(), level: None, scene: "canonical".into(), tasks: vec![Task::new(text, goals)] };
            (suite, 0)
        }
        (Some(_), Some(_)) => return Err(ConfigError::Invalid("--instruction cannot be combined with a suite".into())),
        (None, Some(s)) => (s, index.unwrap_or(0)),
        (None, None) => return Err(ConfigError::Invalid("give --instruction or a suite with --task".into())),
    };
    let t = closedloop::bench::run_task(&suite, index, &cfg)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    print_episode(&mut lock, &t).map_err(|e| ConfigError::io("stdout", e))?;
    if let Some(dir) = &run.out {
        let report = report_from(vec![summarize_run(&suite.name, std::slice::from_ref(&t))?]);
        write_outputs(dir, std::slice::from_ref(&t), &report)?;
    }
    Ok(t.is_success())
}

fn bench(suite: &SuiteArgs, session: bool, run: &RunArgs) -> Result<(), ConfigError> {
    let cfg = run.config()?;
    let suite = suite.load()?.ok_or_else(|| ConfigError::Invalid("bench needs --level, --suite or --perturb on".into()))?;
    let transcripts = if session { run_session(&suite, &cfg)? } else { run_suite(&suite, &cfg)? };
    let report = report_from(vec![summarize_run(&suite.name, &transcripts)?]);
    print!("{}", report.to_text());
    if let Some(dir) = &run.out {
        write_outputs(dir, &transcripts, &report)?;
    }
    Ok(())
}

fn interactive(scene: &str, run: &RunArgs) -> Result<(), ConfigError> {
    let cfg = run.config()?;
    let mut session = Session::new(closedloop::bench::load_scene(scene, cfg.seed)?, &cfg)?;
    let stdin = std::io::stdin();
    let input: Box<dyn BufRead> = Box::new(stdin.lock());
    let transcripts = repl(&mut session, input, std::io::stdout()).map_err(|e| ConfigError::io("stdio", e))?;
    if let (Some(dir), false) = (&run.out, transcripts.is_empty()) {
        let report = report_from(vec![summarize_run("repl", &transcripts)?]);
        write_outputs(dir, &transcripts, &report)?;
    }
    Ok(())
}

fn report(dir: &std::path::Path, json: bool, baselines: bool) -> Result<(), ConfigError> {
    let transcripts = read_transcripts(dir)?;
    let label = dir.file_name().and_then(|n| n.to_str()).unwrap_or("run");
    let report = report_from(vec![summarize_run(label, &transcripts)?]);
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if baselines {
        let peak = report.runs.iter().map(|r| r.cost_peak).fold(0.0, f64::max);
        print!("{}", baseline_table(peak));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Episode { instruction, task, suite, run } => {
            episode(instruction, task, &suite, &run).map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Bench { suite, session, run } => bench(&suite, session, &run).map(|_| ExitCode::SUCCESS),
        Command::Repl { scene, run } => interactive(&scene, &run).map(|_| ExitCode::SUCCESS),
        Command::Report { out, json, baselines } => report(&out, json, baselines).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
