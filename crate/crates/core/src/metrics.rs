//! Path efficiency, success rates, the compute cost model and the latency
//! model.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codec::approx_tokens;
use crate::error::MetricsError;
use crate::executor::{EpisodeTranscript, SplSample, VlmKind};

/// Success-weighted path length: mean of `S * l / max(p, l)`. A sample
/// with `l = p = 0` contributes `S`.
pub fn spl(samples: &[SplSample]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let sum: f64 = samples
        .iter()
        .map(|s| {
            let denom = s.traveled.max(s.shortest);
            if denom <= 0.0 {
                s.success
            } else {
                s.success * s.shortest / denom
            }
        })
        .sum();
    Ok(sum / samples.len() as f64)
}

/// Forward-pass cost in GFLOPs: 6 x parameters (billions) x tokens.
pub fn flops_token_model(params_millions: f64, tokens: u64) -> f64 {
    6.0 * params_millions * tokens as f64 / 1000.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub plan: f64,
    pub navi: f64,
    pub vlm: f64,
    pub grasp: f64,
    pub place: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.plan + self.navi + self.vlm + self.grasp + self.place
    }
}

/// Where token counts come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TokenSource {
    /// Typical counts per message class, independent of the transcript text.
    Fixed {
        prompt: u64,
        /// Feedback carrying an object listing.
        feedback_long: u64,
        feedback_short: u64,
        vlm_side: u64,
        vlm_describe: u64,
    },
    /// Proxy counts of the recorded messages (chars / 4) and the vision
    /// usage reported by the backend.
    Measured,
}

impl TokenSource {
    pub fn reference() -> Self {
        TokenSource::Fixed { prompt: 543, feedback_long: 22, feedback_short: 3, vlm_side: 59 + 196, vlm_describe: 15 + 196 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentCostModel {
    pub planner_params_millions: f64,
    pub vlm_params_millions: f64,
    /// GFLOPs per call. The place figure has no stated unit and is used as
    /// given.
    pub navi_gflops: f64,
    pub grasp_gflops: f64,
    pub place_gflops: f64,
    pub tokens: TokenSource,
}

impl Default for ComponentCostModel {
    fn default() -> Self {
        Self {
            planner_params_millions: 8000.0,
            vlm_params_millions: 7000.0,
            navi_gflops: 0.002,
            grasp_gflops: 837.6,
            place_gflops: 27.0,
            tokens: TokenSource::reference(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeCost {
    pub breakdown: CostBreakdown,
    /// Largest single-call cost.
    pub peak: f64,
}

pub fn episode_cost(transcript: &EpisodeTranscript, model: &ComponentCostModel) -> EpisodeCost {
    let mut cost = EpisodeCost::default();
    let mut peak = |g: f64| cost.peak = cost.peak.max(g);
    let mut plan = 0.0;
    for ex in transcript.exchanges() {
        let tokens = match model.tokens {
            TokenSource::Measured => approx_tokens(&ex.stimulus) as u64,
            TokenSource::Fixed { prompt, feedback_long, feedback_short, .. } => {
                if !ex.stimulus.starts_with('#') || ex.stimulus.starts_with("#CONTEXT") {
                    prompt
                } else if ex.stimulus.starts_with("#feedback: navigation success, there are") {
                    feedback_long
                } else {
                    feedback_short
                }
            }
        };
        let g = flops_token_model(model.planner_params_millions, tokens);
        plan += g;
        peak(g);
    }
    let mut vlm = 0.0;
    for call in transcript.vlm_calls() {
        let tokens = match (model.tokens, call.kind) {
            (TokenSource::Measured, _) => call.usage.prompt_tokens,
            (TokenSource::Fixed { vlm_side, .. }, VlmKind::TableSide) => vlm_side,
            (TokenSource::Fixed { vlm_describe, .. }, VlmKind::Describe) => vlm_describe,
        };
        let g = flops_token_model(model.vlm_params_millions, tokens);
        vlm += g;
        peak(g);
    }
    let c = &transcript.summary.counters;
    if c.navigate_calls > 0 {
        peak(model.navi_gflops);
    }
    if c.pick_calls > 0 {
        peak(model.grasp_gflops);
    }
    if c.place_calls > 0 {
        peak(model.place_gflops);
    }
    cost.breakdown = CostBreakdown {
        plan,
        navi: model.navi_gflops * f64::from(c.navigate_calls),
        vlm,
        grasp: model.grasp_gflops * f64::from(c.pick_calls),
        place: model.place_gflops * f64::from(c.place_calls),
    };
    cost
}

/// Seconds per component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub planner: f64,
    pub navi: f64,
    pub vlm: f64,
    pub grasp: f64,
    pub place: f64,
}

impl LatencyBreakdown {
    pub fn new(planner: f64, navi: f64, vlm: f64, grasp: f64, place: f64) -> Self {
        Self { planner, navi, vlm, grasp, place }
    }

    fn add(&mut self, o: &LatencyBreakdown) {
        self.planner += o.planner;
        self.navi += o.navi;
        self.vlm += o.vlm;
        self.grasp += o.grasp;
        self.place += o.place;
    }
}

pub fn latency_total(b: &LatencyBreakdown) -> f64 {
    b.planner + b.navi + b.vlm + b.grasp + b.place
}

/// Modeled seconds per call, not measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub planner_call: f64,
    pub navigate_call: f64,
    pub vlm_call: f64,
    pub grasp_call: f64,
    pub place_call: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self { planner_call: 3.18, navigate_call: 106.02, vlm_call: 10.41, grasp_call: 230.17, place_call: 43.92 }
    }
}

pub fn episode_latency(transcript: &EpisodeTranscript, model: &LatencyModel) -> LatencyBreakdown {
    let c = &transcript.summary.counters;
    LatencyBreakdown {
        planner: model.planner_call * f64::from(c.llm_calls),
        navi: model.navigate_call * f64::from(c.navigate_calls),
        vlm: model.vlm_call * f64::from(c.vlm_calls()),
        grasp: model.grasp_call * f64::from(c.pick_calls),
        place: model.place_call * f64::from(c.place_calls),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRates {
    pub ideal: f64,
    pub execute: f64,
}

pub fn success_rates(transcripts: &[EpisodeTranscript]) -> Result<SuccessRates, MetricsError> {
    if transcripts.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = transcripts.len() as f64;
    let count = |f: &dyn Fn(&EpisodeTranscript) -> bool| transcripts.iter().filter(|t| f(t)).count() as f64 / n;
    Ok(SuccessRates { ideal: count(&|t| t.summary.ideal), execute: count(&|t| t.is_success()) })
}

/// Aggregates of one labeled run set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetSummary {
    pub label: String,
    pub episodes: usize,
    pub ideal_sr: f64,
    pub execute_sr: f64,
    /// Over all navigation samples of the set; absent when there are none.
    pub spl: Option<f64>,
    pub latency: LatencyBreakdown,
    pub latency_total: f64,
    pub llm_calls: u32,
    pub vlm_calls: u32,
    pub vlm_describe_calls: u32,
    pub navigate_calls: u32,
    pub cost_total: f64,
    pub cost_peak: f64,
}

pub fn summarize(
    label: &str,
    transcripts: &[EpisodeTranscript],
    cost: &ComponentCostModel,
    latency: &LatencyModel,
) -> Result<RunSetSummary, MetricsError> {
    let rates = success_rates(transcripts)?;
    let samples: Vec<SplSample> = transcripts.iter().flat_map(|t| t.summary.samples.iter().copied()).collect();
    let mut lat = LatencyBreakdown::default();
    let (mut llm, mut vlm, mut describe, mut nav) = (0, 0, 0, 0);
    let (mut cost_total, mut cost_peak) = (0.0, 0.0f64);
    for t in transcripts {
        lat.add(&episode_latency(t, latency));
        let c = &t.summary.counters;
        llm += c.llm_calls;
        vlm += c.vlm_calls();
        describe += c.vlm_describe_calls;
        nav += c.navigate_calls;
        let ec = episode_cost(t, cost);
        cost_total += ec.breakdown.total();
        cost_peak = cost_peak.max(ec.peak);
    }
    Ok(RunSetSummary {
        label: label.to_string(),
        episodes: transcripts.len(),
        ideal_sr: rates.ideal,
        execute_sr: rates.execute,
        spl: spl(&samples).ok(),
        latency_total: latency_total(&lat),
        latency: lat,
        llm_calls: llm,
        vlm_calls: vlm,
        vlm_describe_calls: describe,
        navigate_calls: nav,
        cost_total,
        cost_peak,
    })
}

/// Differences of a run set against the first (baseline) set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetDiff {
    pub baseline: String,
    pub label: String,
    pub execute_sr: f64,
    pub ideal_sr: f64,
    pub spl: Option<f64>,
    pub latency_total: f64,
    pub llm_calls: i64,
    pub vlm_calls: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub runs: Vec<RunSetSummary>,
    pub diffs: Vec<RunSetDiff>,
}

impl AblationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            out,
            "{:<24} {:>4} {:>7} {:>7} {:>7} {:>10} {:>5} {:>5} {:>12}",
            "run", "n", "ideal", "exec", "spl", "latency_s", "llm", "vlm", "peak_gflops"
        );
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{:<24} {:>4} {:>7.3} {:>7.3} {:>7} {:>10.2} {:>5} {:>5} {:>12.1}",
                r.label, r.episodes, r.ideal_sr, r.execute_sr, fmt_opt(r.spl), r.latency_total, r.llm_calls,
                r.vlm_calls, r.cost_peak
            );
        }
        for d in &self.diffs {
            let _ = writeln!(
                out,
                "diff {} - {}: exec {:+.3} ideal {:+.3} spl {} latency {:+.2} llm {:+} vlm {:+}",
                d.label,
                d.baseline,
                d.execute_sr,
                d.ideal_sr,
                d.spl.map_or_else(|| "-".to_string(), |v| format!("{v:+.4}")),
                d.latency_total,
                d.llm_calls,
                d.vlm_calls
            );
        }
        out
    }
}

/// Summaries per run set, with every set diffed against the first.
pub fn ablation_report(
    sets: &[(String, Vec<EpisodeTranscript>)],
    cost: &ComponentCostModel,
    latency: &LatencyModel,
) -> Result<AblationReport, MetricsError> {
    let runs = sets
        .iter()
        .map(|(label, ts)| summarize(label, ts, cost, latency))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(report_from(runs))
}

pub fn report_from(runs: Vec<RunSetSummary>) -> AblationReport {
    let diffs = match runs.split_first() {
        None => Vec::new(),
        Some((base, rest)) => rest
            .iter()
            .map(|r| RunSetDiff {
                baseline: base.label.clone(),
                label: r.label.clone(),
                execute_sr: r.execute_sr - base.execute_sr,
                ideal_sr: r.ideal_sr - base.ideal_sr,
                spl: r.spl.zip(base.spl).map(|(a, b)| a - b),
                latency_total: r.latency_total - base.latency_total,
                llm_calls: i64::from(r.llm_calls) - i64::from(base.llm_calls),
                vlm_calls: i64::from(r.vlm_calls) - i64::from(base.vlm_calls),
            })
            .collect(),
    };
    AblationReport { runs, diffs }
}

/// Published peak cost of an end-to-end baseline, kept as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCost {
    pub model: String,
    pub params: String,
    pub input_tokens: String,
    pub peak_gflops: f64,
}

#[derive(Deserialize)]
struct BaselineFile {
    models: Vec<BaselineCost>,
}

pub fn reference_baselines() -> Vec<BaselineCost> {
    let file: BaselineFile =
        serde_json::from_str(include_str!("../data/baselines.json")).expect("bundled baselines parse");
    file.models
}

/// Baselines next to this pipeline's peak, with the ratio baseline/ours.
pub fn baseline_table(our_peak: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<20} {:>7} {:>10} {:>14} {:>8}", "model", "params", "tokens", "peak_gflops", "ratio");
    for b in reference_baselines() {
        let ratio = if our_peak > 0.0 { b.peak_gflops / our_peak } else { f64::NAN };
        let _ = writeln!(
            out,
            "{:<20} {:>7} {:>10} {:>14.1} {:>8.2}",
            b.model, b.params, b.input_tokens, b.peak_gflops, ratio
        );
    }
    let _ = writeln!(out, "{:<20} {:>7} {:>10} {:>14.1} {:>8.2}", "this pipeline", "8B", "-", our_peak, 1.0);
    out
}
