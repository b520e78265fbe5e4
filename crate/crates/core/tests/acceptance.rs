//! One PASS/FAIL line per acceptance criterion.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use closedloop::bench::{run_session, run_suite, summarize_run, RunConfig, SuiteFile};
use closedloop::codec::{
    approx_tokens, parse_feedback, parse_initial_plan, parse_step_reply, render_feedback, render_initial_prompt, Plan,
    StepReply, Subtask, SkillCall,
};
use closedloop::executor::{run_episode, run_episode_observed, Backends, EpisodePolicy, Stores};
use closedloop::gateway::{Script, ScriptEntry, ScriptedPlanner, SimulatedVlm};
use closedloop::memory::{EmbeddingProvider, HashedBagOfWords, Position, ShortTermStore, RETRIEVAL_THRESHOLD};
use closedloop::metrics::{
    episode_cost, flops_token_model, latency_total, spl, ComponentCostModel, LatencyBreakdown,
};
use closedloop::scene::{canonical_scene, Cell, Direction, GridMap, Location, ObjectId, SceneMap, Side};
use closedloop::executor::SplSample;
use closedloop::sim::path::shortest_path;
use closedloop::sim::{FaultModel, SimEnv};
use closedloop::task::{Goal, PerturbAction, PerturbSpec, Task};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn c1_flops() -> Outcome {
    // params in millions, tokens, expected GFLOPs
    let rows = [(8000.0, 543u64, 26064.0), (8000.0, 22, 1056.0), (8000.0, 3, 144.0), (7000.0, 255, 10710.0), (7000.0, 211, 8862.0)];
    for (p, t, want) in rows {
        let by_hand = 6.0 * p * 1e6 * t as f64 / 1e9;
        ensure(close(by_hand, want, 1e-9), || format!("hand oracle disagrees on {want}"))?;
        let got = flops_token_model(p, t);
        ensure(close(got, want, 1e-9), || format!("6PT({p}, {t}) = {got}, want {want}"))?;
    }
    let suite = SuiteFile::for_level(1).map_err(|e| e.to_string())?;
    let ts = run_suite(&suite, &RunConfig::default()).map_err(|e| e.to_string())?;
    let model = ComponentCostModel::default();
    let peak = episode_cost(&ts[0], &model).peak;
    ensure(close(peak, 26064.0, 1e-6), || format!("level-1 episode peak {peak}"))?;
    Ok(format!("peak {peak}"))
}

fn c2_latency() -> Outcome {
    let rows: [([f64; 5], f64); 11] = [
        ([15.08, 212.04, 26.28, 230.11, 43.91], 527.42),
        ([33.97, 578.99, 78.84, 519.57, 131.73], 1343.10),
        ([33.97, 737.72, 78.84, 519.57, 131.73], 1501.39),
        ([22.96, 558.34, 52.56, 346.38, 88.34], 1067.58),
        ([15.90, 212.04, 20.82, 230.17, 43.92], 522.85),
        ([26.78, 578.99, 62.46, 519.57, 131.73], 1319.53),
        ([26.78, 737.72, 62.46, 519.57, 131.73], 1478.26),
        ([22.88, 558.34, 41.64, 346.38, 88.34], 1057.58),
        ([22.78, 862.50, 76.25, 920.68, 133.59], 2015.80),
        ([26.78, 737.72, 124.92, 519.57, 131.73], 1540.32),
        ([22.88, 558.34, 62.46, 346.38, 88.34], 1078.40),
    ];
    let mut off = Vec::new();
    for (parts, want) in rows {
        let b = LatencyBreakdown::new(parts[0], parts[1], parts[2], parts[3], parts[4]);
        let got = latency_total(&b);
        if !close(got, want, 0.01) {
            off.push(format!("{parts:?} sums to {got:.2}, printed total {want}"));
        }
    }
    // The per-call model on oracle counters lands on the single-object row.
    let suite = SuiteFile::for_level(1).map_err(|e| e.to_string())?;
    let ts = run_suite(&suite, &RunConfig::default()).map_err(|e| e.to_string())?;
    let s = summarize_run("l1", &ts).map_err(|e| e.to_string())?;
    let mean = s.latency_total / s.episodes as f64;
    ensure(close(mean, 522.85, 0.01), || format!("level-1 mean latency {mean}"))?;
    ensure(off.is_empty(), || off.join("; "))?;
    Ok(format!("level-1 mean {mean:.2}"))
}

fn bfs(grid: &GridMap, from: Cell, to: Cell) -> Option<usize> {
    if grid.is_blocked(from) || grid.is_blocked(to) {
        return None;
    }
    let mut seen = vec![false; grid.occupancy().len()];
    let mut q = VecDeque::from([(from, 0usize)]);
    seen[grid.index(from)?] = true;
    while let Some((c, d)) = q.pop_front() {
        if c == to {
            return Some(d);
        }
        for dir in Direction::ALL {
            let n = c.step(dir);
            if grid.is_free(n) {
                let i = grid.index(n).unwrap();
                if !seen[i] {
                    seen[i] = true;
                    q.push_back((n, d + 1));
                }
            }
        }
    }
    None
}

fn c3_spl() -> Outcome {
    let s = |success, shortest, traveled| SplSample { success, shortest, traveled };
    let v = spl(&[s(1.0, 3.0, 4.0), s(1.0, 5.0, 5.0)]).map_err(|e| e.to_string())?;
    ensure(close(v, 0.875, 1e-12), || format!("spl = {v}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let l = rng.gen_range(0.1..10.0);
        let p = rng.gen_range(l..20.0);
        let a = spl(&[s(1.0, l, p)]).unwrap();
        let b = spl(&[s(1.0, l, p + 1.0)]).unwrap();
        ensure((0.0..=1.0).contains(&a) && b <= a, || format!("range/monotonicity broken at {l} {p}"))?;
    }
    for _ in 0..200 {
        let mut grid = GridMap::new(32, 32, 0.1).unwrap();
        for i in 0..grid.occupancy().len() {
            if rng.gen_bool(0.3) {
                let c = grid.cell_at(i);
                grid.set_blocked(c, true);
            }
        }
        let pick = |rng: &mut ChaCha8Rng| Cell::new(rng.gen_range(0..32), rng.gen_range(0..32));
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let ours = shortest_path(&grid, a, b).ok().map(|p| p.steps());
        let oracle = bfs(&grid, a, b);
        ensure(ours == oracle, || format!("{a:?}->{b:?}: {ours:?} vs {oracle:?}"))?;
    }
    Ok("200 grids agree".into())
}

fn c4_oracle_bench() -> Outcome {
    let t0 = Instant::now();
    let mut n = 0;
    let mut notes = Vec::new();
    for level in 1..=4 {
        let suite = SuiteFile::for_level(level).map_err(|e| e.to_string())?;
        let ts = run_suite(&suite, &RunConfig::default()).map_err(|e| e.to_string())?;
        n += ts.len();
        let s = summarize_run("x", &ts).map_err(|e| e.to_string())?;
        let spl = s.spl.unwrap_or(0.0);
        ensure(s.execute_sr == 1.0 && spl >= 0.95, || format!("level {level}: sr {} spl {spl}", s.execute_sr))?;
        notes.push(format!("L{level} sr {:.2} spl {spl:.3}", s.execute_sr));
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(n == 37 && secs < 60.0, || format!("{n} tasks in {secs:.1}s"))?;
    Ok(format!("{} ({n} tasks, {secs:.2}s)", notes.join(", ")))
}

fn c5_episode_replay() -> Outcome {
    let script = Script::from_json(include_str!("../fixtures/gather_episode.json")).map_err(|e| e.to_string())?;
    let instruction = "gather a bottle of water, a toy duck and a persimmon to shipping table";
    let goals = ["bottle of water", "toy duck", "persimmon"].map(|o| Goal::move_object(o, "shipping table")).to_vec();
    let task = Task::new(instruction, goals);
    let mut env = SimEnv::new(canonical_scene(0), 0, FaultModel::default()).unwrap();
    let mut stores = Stores::for_scene(&env.scene);
    let mut planner = ScriptedPlanner::new(script);
    let t = run_episode(
        &mut env,
        Backends { planner: &mut planner, vlm: &mut SimulatedVlm },
        &mut stores,
        &EpisodePolicy::default(),
        &task,
    );
    ensure(t.is_success(), || format!("verdict {:?}", t.summary.verdict))?;
    let kinds: Vec<&str> = t
        .feedback_lines()
        .iter()
        .map(|l| {
            if l.starts_with("#feedback: navigation success, there ") {
                "nav"
            } else if *l == "#feedback: pick up success" {
                "pick"
            } else if *l == "#feedback: place success" {
                "place"
            } else {
                "other"
            }
        })
        .collect();
    let want: Vec<&str> = ["nav", "pick", "nav", "place"].repeat(3);
    ensure(kinds == want, || format!("feedback shape {kinds:?}"))?;
    let first = t.feedback_lines()[0];
    ensure(
        first == "#feedback: navigation success, there are bottle of water, pepsi can, coke can, sprite can, fanta can and tea box on the table",
        || format!("first line `{first}`"),
    )?;
    let last = t.turns.last().and_then(|x| x.action.as_deref());
    ensure(last == Some("done"), || format!("last action {last:?}"))?;
    for name in ["bottle of water", "toy duck", "persimmon"] {
        let on = env.scene.objects.iter().any(|o| o.name == name && o.location.site() == Some("shipping table"));
        ensure(on, || format!("{name} not on shipping table"))?;
    }
    ensure(planner.remaining() == 0, || "script not fully consumed".into())?;
    Ok(format!("{} turns", t.turns.len()))
}

fn c6_feedback_ablation() -> Outcome {
    let suite = SuiteFile::load("perturbation").map_err(|e| e.to_string())?;
    ensure(suite.tasks.len() == 20, || "suite size".into())?;
    let sr = |feedback| -> Result<f64, String> {
        let cfg = RunConfig { policy: EpisodePolicy { feedback, ..Default::default() }, ..Default::default() };
        let ts = run_suite(&suite, &cfg).map_err(|e| e.to_string())?;
        Ok(summarize_run("x", &ts).map_err(|e| e.to_string())?.execute_sr)
    };
    let (on, off) = (sr(true)?, sr(false)?);
    ensure(on - off >= 0.3, || format!("on {on} off {off}"))?;
    Ok(format!("on {on:.2} off {off:.2}"))
}

fn c7_memory_ablation() -> Outcome {
    let suite = SuiteFile::load("repeat_object").map_err(|e| e.to_string())?;
    let run = |memory| -> Result<_, String> {
        let cfg = RunConfig { policy: EpisodePolicy { memory, ..Default::default() }, ..Default::default() };
        let ts = run_session(&suite, &cfg).map_err(|e| e.to_string())?;
        summarize_run("x", &ts).map_err(|e| e.to_string())
    };
    let (on, off) = (run(true)?, run(false)?);
    let (spl_on, spl_off) = (on.spl.unwrap_or(0.0), off.spl.unwrap_or(0.0));
    ensure(on.vlm_describe_calls < off.vlm_describe_calls, || {
        format!("describe {} vs {}", on.vlm_describe_calls, off.vlm_describe_calls)
    })?;
    ensure(on.latency_total < off.latency_total, || format!("latency {} vs {}", on.latency_total, off.latency_total))?;
    ensure(spl_on >= spl_off, || format!("spl {spl_on} vs {spl_off}"))?;
    Ok(format!(
        "describe {}/{} latency {:.2}/{:.2} spl {spl_on:.3}/{spl_off:.3}",
        on.vlm_describe_calls, off.vlm_describe_calls, on.latency_total, off.latency_total
    ))
}

struct Scaled(HashedBagOfWords, f64);

impl EmbeddingProvider for Scaled {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }
    fn embed(&self, text: &str) -> Vec<f64> {
        self.0.embed(text).into_iter().map(|x| x * self.1).collect()
    }
}

fn brute_force(store: &ShortTermStore, query: &str) -> Option<u64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let q = store.embedder().embed(query);
    let mut best: Option<(u64, f64)> = None;
    for u in store.units() {
        let v = store.embedder().embed(&u.render());
        let denom = dot(&q, &q).sqrt() * dot(&v, &v).sqrt();
        let s = if denom == 0.0 { 0.0 } else { dot(&q, &v) / denom };
        let better = match best {
            None => true,
            Some((id, bs)) => s > bs + 1e-12 || ((s - bs).abs() <= 1e-12 && u.id < id),
        };
        if better {
            best = Some((u.id, s));
        }
    }
    best.filter(|(_, s)| *s >= RETRIEVAL_THRESHOLD).map(|(id, _)| id)
}

fn c8_retrieval() -> Outcome {
    let names = ["apple", "lemon", "toy duck", "sprite can", "coke can", "shark toy", "plum", "tea box", "beer"];
    let sites = ["fruit table", "drink table", "toy rack", "shipping table", "storage rack"];
    let words = ["red", "round", "small", "bottle", "green", "close", "side", "box", "toy"];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut hits = 0;
    for _ in 0..1000 {
        let scale = rng.gen_range(0.01..100.0);
        let mut plain = ShortTermStore::new(Arc::new(HashedBagOfWords::default()));
        let mut scaled = ShortTermStore::new(Arc::new(Scaled(HashedBagOfWords::default(), scale)));
        for step in 0..rng.gen_range(0..12) {
            let object = *names.choose(&mut rng).unwrap();
            let position = Position { site: sites.choose(&mut rng).unwrap().to_string(), side: Side::ALL[rng.gen_range(0..4)] };
            let summary: Vec<&str> = (0..3).map(|_| *words.choose(&mut rng).unwrap()).collect();
            plain.upsert(object, position.clone(), &summary.join(" "), step);
            scaled.upsert(object, position, &summary.join(" "), step);
        }
        let query = format!("find {} and put it on the {}", names.choose(&mut rng).unwrap(), sites.choose(&mut rng).unwrap());
        let got = plain.retrieve(&query).map(|u| u.id);
        let want = brute_force(&plain, &query);
        ensure(got == want, || format!("`{query}`: {got:?} vs {want:?}"))?;
        let got_scaled = scaled.retrieve(&query).map(|u| u.id);
        ensure(got_scaled == got, || format!("scale {scale} changed the result for `{query}`"))?;
        hits += usize::from(got.is_some());
    }
    Ok(format!("1000 stores, {hits} hits"))
}

const SITES: [&str; 9] = [
    "fruit table", "drink table", "toy rack", "shipping table", "purchase table", "storage rack", "receiving shelf",
    "user entry", "moon base",
];
const OBJECTS: [&str; 8] = ["apple", "lemon", "pepsi can", "toy duck", "shark toy", "beer", "tea box", "unicorn"];

fn random_call(rng: &mut ChaCha8Rng) -> SkillCall {
    match rng.gen_range(0..10) {
        0..=3 => SkillCall::navigate(SITES.choose(rng).unwrap()),
        4..=6 => SkillCall::pick(OBJECTS.choose(rng).unwrap()),
        7 | 8 => SkillCall::place(),
        _ => SkillCall::done(),
    }
}

fn random_episode(seed: u64) -> (Script, Task, FaultModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let calls: Vec<SkillCall> = (0..rng.gen_range(1..8)).map(|_| random_call(&mut rng)).collect();
    let plan = Plan::new("random", vec![Subtask { desc: "random".into(), calls }]);
    let mut entries = vec![ScriptEntry { expect: String::new(), reply: plan.encode() }];
    for _ in 0..rng.gen_range(0..30) {
        let reply = if rng.gen_bool(0.05) {
            "no json here".to_string()
        } else {
            StepReply { reasoning: "random".into(), next_action: random_call(&mut rng) }.encode()
        };
        entries.push(ScriptEntry { expect: String::new(), reply });
    }
    let mut task = Task::new(
        "random",
        vec![Goal::move_object(OBJECTS[rng.gen_range(0..7)], SITES[rng.gen_range(0..6)])],
    );
    for _ in 0..rng.gen_range(0..3) {
        let step = rng.gen_range(0..10);
        let action = match rng.gen_range(0..3) {
            0 => PerturbAction::MoveObject {
                object: OBJECTS[rng.gen_range(0..7)].into(),
                from: None,
                to: SITES[rng.gen_range(0..7)].into(),
                side: Some(Side::ALL[rng.gen_range(0..4)]),
            },
            1 => PerturbAction::RemoveObject { object: OBJECTS[rng.gen_range(0..7)].into(), from: None },
            _ => PerturbAction::BlockCells {
                cells: (0..rng.gen_range(1..4)).map(|_| Cell::new(rng.gen_range(1..63), rng.gen_range(1..63))).collect(),
            },
        };
        task.perturbations.push(PerturbSpec { step, action });
    }
    let faults = FaultModel {
        misrecognition_prob: rng.gen_range(0.0..0.3),
        grasp_fail_prob: rng.gen_range(0.0..0.3),
        nav_fail_prob: rng.gen_range(0.0..0.3),
        scripted_perturbations: Vec::new(),
    };
    (Script { entries }, task, faults)
}

fn check_invariants(scene: &SceneMap, initial: &BTreeSet<ObjectId>) -> Result<(), String> {
    let held: Vec<ObjectId> = scene.objects.iter().filter(|o| o.location == Location::Held).map(|o| o.id).collect();
    ensure(held.len() <= 1, || format!("holding {held:?}"))?;
    ensure(held.first().copied() == scene.robot.held, || format!("gripper {:?} vs {held:?}", scene.robot.held))?;
    let ids: BTreeSet<ObjectId> = scene.objects.iter().map(|o| o.id).collect();
    ensure(ids.len() == scene.objects.len(), || "duplicate object ids".into())?;
    ensure(ids.is_subset(initial), || "an object appeared from nowhere".into())?;
    Ok(())
}

fn fuzz_one(seed: u64) -> Result<(String, usize), String> {
    let (script, task, faults) = random_episode(seed);
    let scene = canonical_scene(seed);
    let initial: BTreeSet<ObjectId> = scene.objects.iter().map(|o| o.id).collect();
    let removable: BTreeSet<ObjectId> = task
        .perturbations
        .iter()
        .filter(|p| matches!(p.action, PerturbAction::RemoveObject { .. }))
        .filter_map(|p| p.resolve(&scene).ok())
        .filter_map(|p| match p.event {
            closedloop::sim::PerturbEvent::RemoveObject { object } => Some(object),
            _ => None,
        })
        .collect();
    let mut env = SimEnv::new(scene, seed, faults).map_err(|e| e.to_string())?;
    let mut stores = Stores::for_scene(&env.scene);
    let mut planner = ScriptedPlanner::new(script);
    let policy = EpisodePolicy { max_steps: 25, ..Default::default() };
    let mut violation = None;
    let mut turns = 0;
    let t = run_episode_observed(
        &mut env,
        Backends { planner: &mut planner, vlm: &mut SimulatedVlm },
        &mut stores,
        &policy,
        &task,
        &mut |_, scene| {
            turns += 1;
            if violation.is_none() {
                let present: BTreeSet<ObjectId> = scene.objects.iter().map(|o| o.id).collect();
                let missing: BTreeSet<ObjectId> = initial.difference(&present).copied().collect();
                violation = check_invariants(scene, &initial)
                    .and_then(|_| ensure(missing.is_subset(&removable), || format!("lost {missing:?}")))
                    .err();
            }
        },
    );
    if let Some(v) = violation {
        return Err(format!("seed {seed}: {v}"));
    }
    Ok((t.to_jsonl(), turns))
}

fn c9_fuzz() -> Outcome {
    let t0 = Instant::now();
    let run = || -> Result<(Vec<String>, usize), String> {
        let mut out = Vec::with_capacity(1000);
        let mut turns = 0;
        for seed in 0..1000 {
            let r = std::panic::catch_unwind(|| fuzz_one(seed)).map_err(|_| format!("seed {seed} panicked"))??;
            out.push(r.0);
            turns += r.1;
        }
        Ok((out, turns))
    };
    let (a, turns) = run()?;
    let (b, _) = run()?;
    ensure(a == b, || "transcripts differ between runs".into())?;
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.1}s"))?;
    Ok(format!("1000 episodes x2, {turns} turns, {secs:.2}s"))
}

fn c10_codec() -> Outcome {
    let doc: serde_json::Value =
        serde_json::from_str(include_str!("../fixtures/listings.json")).map_err(|e| e.to_string())?;
    let text = |v: &serde_json::Value| v.as_str().map(str::to_string).ok_or("listing is not a string".to_string());
    let examples = doc["examples"].as_array().ok_or("no examples")?;
    let mut n = 0;
    let plan = parse_initial_plan(&text(&examples[0]["answer"])?).map_err(|e| format!("example 1: {e}"))?;
    ensure(plan.flatten().len() == 8, || "example 1 calls".into())?;
    n += 1;
    for (i, ex) in examples.iter().enumerate().skip(1) {
        let user = text(&ex["user"])?;
        let fb = parse_feedback(&user).map_err(|e| format!("example {}: {e}", i + 1))?;
        ensure(render_feedback(&fb) == user, || format!("example {} does not round-trip", i + 1))?;
        parse_step_reply(&text(&ex["answer"])?).map_err(|e| format!("example {} reply: {e}", i + 1))?;
        n += 1;
    }
    let structured = parse_initial_plan(&text(&doc["structured_plan"])?).map_err(|e| format!("structured: {e}"))?;
    ensure(structured.subtasks.len() == 6, || "structured subtasks".into())?;
    n += 1;
    let episode = parse_initial_plan(&text(&doc["episode_plan"])?).map_err(|e| format!("episode plan: {e}"))?;
    ensure(episode.flatten().len() == 12, || "episode plan calls".into())?;
    for r in doc["episode_replies"].as_array().ok_or("no replies")? {
        parse_step_reply(&text(r)?).map_err(|e| format!("episode reply: {e}"))?;
    }
    n += 1;
    for line in [
        "#feedback: navigation success, there are bottle of water on the table",
        "#feedback: pick up success",
        "#feedback: place success",
    ] {
        let fb = parse_feedback(line).map_err(|e| e.to_string())?;
        ensure(render_feedback(&fb) == line, || format!("`{line}` does not round-trip"))?;
    }
    Ok(format!("{n} listings"))
}

fn c11_prompt_budget() -> Outcome {
    let p = render_initial_prompt("find lemon and put it on the drink table", &canonical_scene(0), &[]);
    let n = approx_tokens(&p);
    ensure((400..=700).contains(&n), || format!("{n} tokens"))?;
    Ok(format!("{n} tokens"))
}

/// Criteria that cannot pass as stated. Three reference latency rows do not
/// add up to their printed totals (1501.83 vs 1501.39, 1068.58 vs 1067.58,
/// 1540.72 vs 1540.32); no summation reproduces them.
const KNOWN_RED: &[&str] = &["2 latency"];

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 flops", c1_flops),
        ("2 latency", c2_latency),
        ("3 spl", c3_spl),
        ("4 oracle bench", c4_oracle_bench),
        ("5 episode replay", c5_episode_replay),
        ("6 feedback ablation", c6_feedback_ablation),
        ("7 memory ablation", c7_memory_ablation),
        ("8 retrieval", c8_retrieval),
        ("9 fuzz", c9_fuzz),
        ("10 codec", c10_codec),
        ("11 prompt budget", c11_prompt_budget),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let t0 = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t0.elapsed().as_millis();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{ms} ms]"),
            Err(detail) => {
                println!("FAIL {name}: {detail} [{ms} ms]");
                failed.push(name);
            }
        }
    }
    assert_eq!(failed, KNOWN_RED, "unexpected acceptance results");
}
