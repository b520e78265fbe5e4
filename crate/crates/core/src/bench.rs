//! Suites, batch runs, persistent sessions and the interactive loop.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::executor::{run_episode, Backends, EpisodePolicy, EpisodeTranscript, Stores};
use crate::gateway::{
    ChatClient, HttpConfig, HttpPlanner, HttpVlm, OraclePlanner, Planner, Script, ScriptedPlanner, SimulatedVlm, Vlm,
};
use crate::memory::memory_hints;
use crate::metrics::{summarize, AblationReport, ComponentCostModel, LatencyModel, RunSetSummary};
use crate::scene::{canonical_scene, SceneMap};
use crate::sim::{FaultModel, SimEnv};
use crate::task::{interpret_instruction, Task};

const BUILTIN: &[(&str, &str)] = &[
    ("level1", include_str!("../suites/level1.json")),
    ("level2", include_str!("../suites/level2.json")),
    ("level3", include_str!("../suites/level3.json")),
    ("level4", include_str!("../suites/level4.json")),
    ("perturbation", include_str!("../suites/perturbation.json")),
    ("repeat_object", include_str!("../suites/repeat_object.json")),
    ("realworld", include_str!("../suites/realworld.json")),
];

pub fn builtin_suite_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

fn canonical() -> String {
    "canonical".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
    /// "canonical" or a path to a scene JSON file.
    #[serde(default = "canonical")]
    pub scene: String,
    pub tasks: Vec<Task>,
}

impl SuiteFile {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let suite: SuiteFile = serde_json::from_str(text)
            .map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })?;
        if suite.tasks.is_empty() {
            return Err(ConfigError::Invalid(format!("suite `{}` has no tasks", suite.name)));
        }
        Ok(suite)
    }

    /// A built-in suite name, or a path to a suite file.
    pub fn load(spec: &str) -> Result<Self, ConfigError> {
        if let Some((_, text)) = BUILTIN.iter().find(|(n, _)| *n == spec) {
            return Self::from_json(text, spec);
        }
        let text = std::fs::read_to_string(spec).map_err(|e| ConfigError::io(spec, e))?;
        Self::from_json(&text, spec)
    }

    pub fn for_level(level: u8) -> Result<Self, ConfigError> {
        match level {
            1..=4 => Self::load(&format!("level{level}")),
            _ => Err(ConfigError::Invalid(format!("level must be 1-4, got {level}"))),
        }
    }

    pub fn build_scene(&self, seed: u64) -> Result<SceneMap, ConfigError> {
        load_scene(&self.scene, seed)
    }

    /// Level of a task, falling back to the suite level.
    pub fn level_of(&self, index: usize) -> Option<u8> {
        self.tasks.get(index).and_then(|t| t.level).or(self.level)
    }
}

pub fn load_scene(spec: &str, seed: u64) -> Result<SceneMap, ConfigError> {
    if spec == "canonical" {
        return Ok(canonical_scene(seed));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| ConfigError::io(spec, e))?;
    SceneMap::from_json(&text).map_err(|e| ConfigError::Parse { path: spec.to_string(), message: e.to_string() })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendKind {
    Oracle,
    Scripted(PathBuf),
    Http,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub policy: EpisodePolicy,
    pub seed: u64,
    pub faults: FaultModel,
    /// Worker threads for suite runs; 0 lets rayon decide.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Oracle,
            policy: EpisodePolicy::default(),
            seed: 0,
            faults: FaultModel::default(),
            workers: 0,
        }
    }
}

pub type BackendPair = (Box<dyn Planner>, Box<dyn Vlm>);

pub fn make_backends(kind: &BackendKind) -> Result<BackendPair, ConfigError> {
    match kind {
        BackendKind::Oracle => Ok((Box::new(OraclePlanner::new()), Box::new(SimulatedVlm))),
        BackendKind::Scripted(path) => {
            let script = Script::load(path)?;
            Ok((Box::new(ScriptedPlanner::new(script)), Box::new(SimulatedVlm)))
        }
        BackendKind::Http => {
            let client =
                ChatClient::new(HttpConfig::from_env()?).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            Ok((Box::new(HttpPlanner::new(client.clone())), Box::new(HttpVlm::new(client))))
        }
    }
}

fn episode_seed(base: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

/// One task on a fresh scene with empty short-term memory.
pub fn run_task(suite: &SuiteFile, index: usize, cfg: &RunConfig) -> Result<EpisodeTranscript, ConfigError> {
    let task = suite
        .tasks
        .get(index)
        .ok_or_else(|| ConfigError::Invalid(format!("suite `{}` has no task {index}", suite.name)))?;
    let scene = suite.build_scene(cfg.seed)?;
    let mut env = SimEnv::new(scene, episode_seed(cfg.seed, index), cfg.faults.clone())
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut stores = Stores::for_scene(&env.scene);
    let (mut planner, mut vlm) = make_backends(&cfg.backend)?;
    Ok(run_episode(
        &mut env,
        Backends { planner: planner.as_mut(), vlm: vlm.as_mut() },
        &mut stores,
        &cfg.policy,
        task,
    ))
}

/// Every task independently, in parallel. Results keep suite order and do
/// not depend on the worker count.
pub fn run_suite(suite: &SuiteFile, cfg: &RunConfig) -> Result<Vec<EpisodeTranscript>, ConfigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    pool.install(|| (0..suite.tasks.len()).into_par_iter().map(|i| run_task(suite, i, cfg)).collect())
}

/// A live warehouse shared by consecutive episodes.
pub struct Session {
    pub env: SimEnv,
    pub stores: Stores,
    planner: Box<dyn Planner>,
    vlm: Box<dyn Vlm>,
    pub policy: EpisodePolicy,
}

impl Session {
    pub fn new(scene: SceneMap, cfg: &RunConfig) -> Result<Self, ConfigError> {
        let env =
            SimEnv::new(scene, cfg.seed, cfg.faults.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let stores = Stores::for_scene(&env.scene);
        let (planner, vlm) = make_backends(&cfg.backend)?;
        Ok(Self { env, stores, planner, vlm, policy: cfg.policy })
    }

    pub fn run(&mut self, task: &Task) -> EpisodeTranscript {
        run_episode(
            &mut self.env,
            Backends { planner: self.planner.as_mut(), vlm: self.vlm.as_mut() },
            &mut self.stores,
            &self.policy,
            task,
        )
    }

    /// Hint lines the prompt would carry for `instruction`.
    pub fn hints(&self, instruction: &str) -> Vec<String> {
        if self.policy.memory {
            memory_hints(&self.stores.stm, &self.stores.ltm, instruction)
        } else {
            Vec::new()
        }
    }
}

/// Tasks one after another in the same warehouse.
pub fn run_session(suite: &SuiteFile, cfg: &RunConfig) -> Result<Vec<EpisodeTranscript>, ConfigError> {
    let mut session = Session::new(suite.build_scene(cfg.seed)?, cfg)?;
    Ok(suite.tasks.iter().map(|t| session.run(t)).collect())
}

pub fn summarize_run(label: &str, transcripts: &[EpisodeTranscript]) -> Result<RunSetSummary, ConfigError> {
    summarize(label, transcripts, &ComponentCostModel::default(), &LatencyModel::default())
        .map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Writes episode-NNN.jsonl per transcript plus report.json and report.txt.
pub fn write_outputs(dir: &Path, transcripts: &[EpisodeTranscript], report: &AblationReport) -> Result<(), ConfigError> {
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |e| ConfigError::io(p, e)
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (i, t) in transcripts.iter().enumerate() {
        let path = dir.join(format!("episode-{i:03}.jsonl"));
        std::fs::write(&path, t.to_jsonl()).map_err(io(&path))?;
    }
    let json = dir.join("report.json");
    std::fs::write(&json, report.to_json()).map_err(io(&json))?;
    let txt = dir.join("report.txt");
    std::fs::write(&txt, report.to_text()).map_err(io(&txt))?;
    Ok(())
}

/// Reads transcripts back from an output directory, in file-name order.
pub fn read_transcripts(dir: &Path) -> Result<Vec<EpisodeTranscript>, ConfigError> {
    let shown = dir.display().to_string();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| ConfigError::io(&shown, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("episode-") && n.ends_with(".jsonl"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let shown = p.display().to_string();
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::io(&shown, e))?;
            EpisodeTranscript::from_jsonl(&text).map_err(|e| ConfigError::Parse { path: shown, message: e.to_string() })
        })
        .collect()
}

/// Line-oriented loop: every non-empty input line is an instruction run in
/// the shared session. `:quit` ends it. Returns the transcripts produced.
pub fn repl<R: BufRead, W: Write>(
    session: &mut Session,
    input: R,
    mut out: W,
) -> std::io::Result<Vec<EpisodeTranscript>> {
    let mut done = Vec::new();
    for line in input.lines() {
        let line = line?;
        let instruction = line.trim();
        if instruction.is_empty() {
            continue;
        }
        if instruction == ":quit" {
            break;
        }
        for hint in session.hints(instruction) {
            writeln!(out, "memory: {hint}")?;
        }
        let goals = interpret_instruction(instruction, &session.env.scene);
        let transcript = session.run(&Task::new(instruction, goals));
        for turn in &transcript.turns {
            if let Some(call) = &turn.action {
                writeln!(out, "> {call}")?;
            }
            if let Some(fb) = &turn.feedback {
                writeln!(out, "{fb}")?;
            }
        }
        match &transcript.summary.verdict {
            v if v.is_success() => writeln!(out, "verdict: success")?,
            v => writeln!(out, "verdict: failure ({:?})", v.reason().expect("failure has a reason"))?,
        }
        out.flush()?;
        done.push(transcript);
    }
    Ok(done)
}
