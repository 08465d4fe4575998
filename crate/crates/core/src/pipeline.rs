//! Ranking strategies over a backend.
//!
//! - Base: one ranking prompt with the full condition string.
//! - CoT: one ranking prompt with zero-shot decomposition instructions.
//! - EXSIR: extract the conditions, sort them lowest-to-highest priority,
//!   then re-rank the items once per condition, feeding each step's output
//!   into the next.
//!
//! Steps within a run are strictly sequential; distinct samples may run
//! concurrently up to the backend's limit.

use crate::backend::{
    numbered_list, parse_condition_list, parse_paragraph_ranking, parse_token_ranking,
    render_prompt, Backend, BackendError, ModelResponse, PromptKind, Usage,
};
use crate::engine::{Item, ItemLevel};
use crate::gen::Sample;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Base,
    Cot,
    Exsir,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Base => "base",
            Strategy::Cot => "cot",
            Strategy::Exsir => "exsir",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Strategy::Base),
            "cot" => Ok(Strategy::Cot),
            "exsir" => Ok(Strategy::Exsir),
            other => Err(format!(
                "unknown strategy {:?} (expected base|cot|exsir)",
                other
            )),
        }
    }
}

/// Parsed result of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StepParse {
    Ranking(Vec<String>),
    Conditions(Vec<String>),
    Failed(String),
}

/// One model call inside a run, kept verbatim for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub prompt_kind: PromptKind,
    pub rendered_prompt: String,
    pub raw_response: String,
    pub parsed: StepParse,
}

/// The extract/sort stage outputs of an EXSIR run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub extracted: Vec<String>,
    pub sorted: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UsageTotals {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl UsageTotals {
    fn add(&mut self, usage: Option<Usage>) {
        if let Some(u) = usage {
            self.prompt_tokens += u.prompt_tokens;
            self.completion_tokens += u.completion_tokens;
        }
    }
}

/// One strategy execution over one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRun {
    pub sample_id: String,
    pub strategy: Strategy,
    /// `None` marks an invalid run (unparseable output or backend failure);
    /// a present value is always a permutation of the sample's items.
    pub predicted: Option<Vec<String>>,
    pub steps: Vec<StepRecord>,
    pub decomposition: Option<Decomposition>,
    pub usage_totals: UsageTotals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Execute a strategy over a sample.
pub fn run_strategy(sample: &Sample, backend: &Backend, strategy: Strategy) -> RankingRun {
    match strategy {
        Strategy::Base => run_single_prompt(sample, backend, Strategy::Base, false),
        Strategy::Cot => run_single_prompt(sample, backend, Strategy::Cot, true),
        Strategy::Exsir => run_exsir(sample, backend),
    }
}

pub fn run_base(sample: &Sample, backend: &Backend) -> RankingRun {
    run_strategy(sample, backend, Strategy::Base)
}

pub fn run_cot(sample: &Sample, backend: &Backend) -> RankingRun {
    run_strategy(sample, backend, Strategy::Cot)
}

/// The decomposition record of a run (`None` for Base/CoT).
pub fn decomposition_of(run: &RankingRun) -> Option<&Decomposition> {
    run.decomposition.as_ref()
}

struct RunState {
    steps: Vec<StepRecord>,
    usage: UsageTotals,
}

impl RunState {
    fn new() -> Self {
        RunState {
            steps: Vec::new(),
            usage: UsageTotals::default(),
        }
    }

    /// One prompt → response → parse cycle. On parse failure, optionally
    /// re-asks once with the cache bypassed before giving up.
    fn step<T>(
        &mut self,
        backend: &Backend,
        kind: PromptKind,
        prompt: String,
        parse: impl Fn(&str) -> Result<(T, StepParse), String>,
    ) -> Result<T, String> {
        let mut request = backend.request(kind, prompt.clone());
        let retries = if backend.config().retry_invalid_output {
            1
        } else {
            0
        };
        let mut failure = String::new();
        for attempt in 0..=retries {
            request.bypass_cache = attempt > 0;
            let response: Result<ModelResponse, BackendError> = backend.complete(&request);
            match response {
                Ok(resp) => {
                    self.usage.add(resp.usage);
                    match parse(&resp.text) {
                        Ok((value, parsed)) => {
                            self.steps.push(StepRecord {
                                prompt_kind: kind,
                                rendered_prompt: prompt.clone(),
                                raw_response: resp.text,
                                parsed,
                            });
                            return Ok(value);
                        }
                        Err(reason) => {
                            failure = reason.clone();
                            if attempt == retries {
                                self.steps.push(StepRecord {
                                    prompt_kind: kind,
                                    rendered_prompt: prompt.clone(),
                                    raw_response: resp.text,
                                    parsed: StepParse::Failed(reason),
                                });
                            }
                        }
                    }
                }
                Err(err) => {
                    failure = err.to_string();
                    if attempt == retries {
                        self.steps.push(StepRecord {
                            prompt_kind: kind,
                            rendered_prompt: prompt.clone(),
                            raw_response: String::new(),
                            parsed: StepParse::Failed(failure.clone()),
                        });
                    }
                }
            }
        }
        Err(failure)
    }
}

fn parse_ranking(text: &str, items: &[Item]) -> Result<(Vec<String>, StepParse), String> {
    let level = items.first().map(|i| i.level).unwrap_or(ItemLevel::Token);
    let ids = match level {
        ItemLevel::Token => parse_token_ranking(text, items)
            .map_err(|e| e.to_string())?
            .into_ids(),
        ItemLevel::Paragraph => {
            let labels = parse_paragraph_ranking(text, items.len()).map_err(|e| e.to_string())?;
            labels
                .into_iter()
                .map(|l| items[l - 1].id.clone())
                .collect()
        }
    };
    Ok((ids.clone(), StepParse::Ranking(ids)))
}

fn run_single_prompt(
    sample: &Sample,
    backend: &Backend,
    strategy: Strategy,
    cot: bool,
) -> RankingRun {
    let kind = PromptKind::ranking_for(sample.scenario.level, cot);
    let items = &sample.items_presented;
    let mut state = RunState::new();
    let result = render_prompt(kind, &sample.condition_string, items)
        .map_err(|e| e.to_string())
        .and_then(|prompt| state.step(backend, kind, prompt, |text| parse_ranking(text, items)));
    let (predicted, failure) = match result {
        Ok(ids) => (Some(ids), None),
        Err(reason) => (None, Some(reason)),
    };
    RankingRun {
        sample_id: sample.id.clone(),
        strategy,
        predicted,
        steps: state.steps,
        decomposition: None,
        usage_totals: state.usage,
        failure,
    }
}

pub fn run_exsir(sample: &Sample, backend: &Backend) -> RankingRun {
    let mut state = RunState::new();
    let mut decomposition = None;
    let result = (|| -> Result<Vec<String>, String> {
        // Extract.
        let prompt = render_prompt(PromptKind::ExtractConditions, &sample.condition_string, &[])
            .map_err(|e| e.to_string())?;
        let extracted = state.step(backend, PromptKind::ExtractConditions, prompt, |text| {
            let lines = parse_condition_list(text).map_err(|e| e.to_string())?;
            Ok((lines.clone(), StepParse::Conditions(lines)))
        })?;

        // Sort, lowest priority first.
        let prompt = render_prompt(PromptKind::SortConditions, &numbered_list(&extracted), &[])
            .map_err(|e| e.to_string())?;
        let sorted = state.step(backend, PromptKind::SortConditions, prompt, |text| {
            let lines = parse_condition_list(text).map_err(|e| e.to_string())?;
            Ok((lines.clone(), StepParse::Conditions(lines)))
        })?;
        decomposition = Some(Decomposition {
            extracted,
            sorted: sorted.clone(),
        });

        // Iteratively rank: one call per condition, each over the previous order.
        let kind = PromptKind::ranking_for(sample.scenario.level, false);
        let mut current: Vec<Item> = sample.items_presented.clone();
        for condition in &sorted {
            let prompt = render_prompt(kind, condition, &current).map_err(|e| e.to_string())?;
            let ids = state.step(backend, kind, prompt, |text| parse_ranking(text, &current))?;
            let by_id = |id: &String| current.iter().find(|i| &i.id == id).cloned();
            current = ids
                .iter()
                .map(by_id)
                .collect::<Option<Vec<Item>>>()
                .ok_or_else(|| "ranking step returned unknown item ids".to_string())?;
        }
        Ok(current.into_iter().map(|i| i.id).collect())
    })();

    let (predicted, failure) = match result {
        Ok(ids) => (Some(ids), None),
        Err(reason) => (None, Some(reason)),
    };
    RankingRun {
        sample_id: sample.id.clone(),
        strategy: Strategy::Exsir,
        predicted,
        steps: state.steps,
        decomposition,
        usage_totals: state.usage,
        failure,
    }
}

/// Append runs to a JSONL trace file.
pub fn append_trace(path: &Path, runs: &[RankingRun]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut out = std::io::BufWriter::new(file);
    for run in runs {
        serde_json::to_writer(&mut out, run)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Read a JSONL trace file; missing files read as empty (fresh run).
pub fn read_trace(path: &Path) -> std::io::Result<Vec<RankingRun>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = std::fs::File::open(path)?;
    let mut runs = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let run: RankingRun = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {}", path.display(), lineno + 1, e),
            )
        })?;
        runs.push(run);
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{catalog_from_items, AttributeCatalog, BackendConfig, ChatModel};
    use crate::engine::gold_ranking;
    use crate::gen::{generate_scenario, synth_pool, Scenario};
    use crate::ItemLevel;

    fn oracle_backend(samples: &[Sample], epsilon: f64) -> Backend {
        let catalog: AttributeCatalog =
            catalog_from_items(samples.iter().flat_map(|s| s.items_presented.iter()));
        let mut cfg = BackendConfig::oracle(11, epsilon);
        cfg.concurrency_limit = 1;
        Backend::new(cfg, catalog).unwrap()
    }

    fn desk_samples(level: ItemLevel, n_conditions: u8) -> Vec<Sample> {
        let pool = synth_pool(level, 40, 5).unwrap();
        generate_scenario(&pool, Scenario::new(level, n_conditions, 3), 6, 23).unwrap()
    }

    #[test]
    fn base_answers_match_gold_with_noiseless_oracle() {
        let samples = desk_samples(ItemLevel::Token, 2);
        assert!(!samples.is_empty());
        let backend = oracle_backend(&samples, 0.0);
        for sample in &samples {
            let run = run_base(sample, &backend);
            assert_eq!(run.steps.len(), 1, "{}", sample.id);
            assert_eq!(
                run.predicted.as_deref(),
                Some(sample.gold.ids()),
                "sample {}",
                sample.id
            );
        }
    }

    #[test]
    fn cot_uses_one_step_and_the_cot_template() {
        let samples = desk_samples(ItemLevel::Paragraph, 3);
        assert!(!samples.is_empty());
        let backend = oracle_backend(&samples, 0.0);
        for sample in samples.iter().take(4) {
            let run = run_cot(sample, &backend);
            assert_eq!(run.steps.len(), 1);
            assert_eq!(run.steps[0].prompt_kind, PromptKind::RankParagraphCot);
            assert_eq!(run.predicted.as_deref(), Some(sample.gold.ids()));
            assert!(run.decomposition.is_none());
        }
    }

    #[test]
    fn exsir_reproduces_gold_and_the_priority_sorted_surfaces() {
        let samples = desk_samples(ItemLevel::Token, 3);
        assert!(!samples.is_empty());
        let backend = oracle_backend(&samples, 0.0);
        for sample in &samples {
            let run = run_exsir(sample, &backend);
            assert_eq!(
                run.steps.len(),
                2 + sample.scenario.n_conditions as usize,
                "sample {}",
                sample.id
            );
            assert_eq!(
                run.predicted.as_deref(),
                Some(sample.gold.ids()),
                "{}",
                sample.id
            );
            let deco = decomposition_of(&run).expect("exsir records decomposition");
            let expected: Vec<String> =
                crate::condition::sort_by_priority(&sample.conditions_presented)
                    .iter()
                    .map(|c| crate::condition::render_condition(c, true))
                    .collect();
            assert_eq!(deco.sorted, expected, "{}", sample.id);
        }
    }

    #[test]
    fn exsir_steps_mirror_the_engine_fold() {
        let samples = desk_samples(ItemLevel::Token, 3);
        let backend = oracle_backend(&samples, 0.0);
        let sample = &samples[0];
        let run = run_exsir(sample, &backend);
        let sorted = crate::condition::sort_by_priority(&sample.conditions_presented);
        let mut expected = sample.presented_order();
        for (idx, cond) in sorted.iter().enumerate() {
            expected =
                crate::engine::apply_condition(&expected, &sample.items_presented, cond).unwrap();
            match &run.steps[2 + idx].parsed {
                StepParse::Ranking(ids) => assert_eq!(ids, expected.ids(), "step {}", idx),
                other => panic!("expected ranking step, got {:?}", other),
            }
        }
    }

    #[test]
    fn one_condition_exsir_has_three_steps() {
        let samples = desk_samples(ItemLevel::Token, 1);
        let backend = oracle_backend(&samples, 0.0);
        let run = run_exsir(&samples[0], &backend);
        assert_eq!(run.steps.len(), 3);
    }

    struct GarbageModel;
    impl ChatModel for GarbageModel {
        fn complete(
            &self,
            _req: &crate::backend::ModelRequest,
        ) -> Result<crate::backend::ModelResponse, crate::backend::BackendError> {
            Ok(crate::backend::ModelResponse {
                text: "here are some thoughts, no ranking".into(),
                usage: None,
                cached: false,
                latency_ms: 0,
            })
        }
    }

    #[test]
    fn unparseable_response_marks_the_run_invalid() {
        let samples = desk_samples(ItemLevel::Token, 1);
        let backend = Backend::new_for_tests(Box::new(GarbageModel), BackendConfig::default());
        let run = run_base(&samples[0], &backend);
        assert!(run.predicted.is_none());
        assert!(run.failure.is_some());
        assert!(matches!(run.steps[0].parsed, StepParse::Failed(_)));
    }

    /// Garbage on the first call, then echoes the prompt's item list back in
    /// its presented order.
    struct FlakyModel {
        calls: std::sync::atomic::AtomicUsize,
    }
    impl ChatModel for FlakyModel {
        fn complete(
            &self,
            req: &crate::backend::ModelRequest,
        ) -> Result<crate::backend::ModelResponse, crate::backend::BackendError> {
            let n = self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            let text = if n == 0 {
                "no ranking".to_string()
            } else {
                let list = req
                    .rendered_prompt
                    .split("sort the list of items ")
                    .nth(1)
                    .and_then(|r| r.split(" from left to right").next())
                    .unwrap();
                assert!(req.bypass_cache, "retry must skip the cache");
                list.to_string()
            };
            Ok(crate::backend::ModelResponse { text, usage: None, cached: false, latency_ms: 0 })
        }
    }

    #[test]
    fn invalid_output_retry_reasks_once_when_enabled() {
        let samples = desk_samples(ItemLevel::Token, 1);
        let sample = &samples[0];
        let config = BackendConfig { retry_invalid_output: true, ..BackendConfig::default() };
        let backend = Backend::new_for_tests(
            Box::new(FlakyModel { calls: std::sync::atomic::AtomicUsize::new(0) }),
            config,
        );
        let run = run_base(sample, &backend);
        // One recorded step, holding the second (parseable) attempt.
        assert_eq!(run.steps.len(), 1);
        assert_eq!(run.predicted.as_deref(), Some(sample.presented_order().ids()));

        // Disabled, the same model yields an invalid run.
        let backend = Backend::new_for_tests(
            Box::new(FlakyModel { calls: std::sync::atomic::AtomicUsize::new(0) }),
            BackendConfig::default(),
        );
        assert!(run_base(sample, &backend).predicted.is_none());
    }

    #[test]
    fn noisy_oracle_lowers_exact_match_below_full_marks() {
        let pool = synth_pool(ItemLevel::Token, 40, 5).unwrap();
        let samples =
            generate_scenario(&pool, Scenario::new(ItemLevel::Token, 2, 5), 12, 41).unwrap();
        assert!(samples.len() >= 30);
        let backend = oracle_backend(&samples, 0.5);
        let mut exact = 0usize;
        for sample in &samples {
            let run = run_exsir(sample, &backend);
            if run.predicted.as_deref() == Some(sample.gold.ids()) {
                exact += 1;
            }
            // Decomposition stays exact: noise only perturbs ranking steps.
            let deco = run.decomposition.expect("decomposition recorded");
            let expected: Vec<String> =
                crate::condition::sort_by_priority(&sample.conditions_presented)
                    .iter()
                    .map(|c| crate::condition::render_condition(c, true))
                    .collect();
            assert_eq!(deco.sorted, expected);
        }
        assert!(
            exact < samples.len(),
            "noise must break at least one sample"
        );
    }

    #[test]
    fn trace_round_trips_and_resumes() {
        let samples = desk_samples(ItemLevel::Token, 1);
        let backend = oracle_backend(&samples, 0.0);
        let runs: Vec<RankingRun> = samples
            .iter()
            .take(3)
            .map(|s| run_base(s, &backend))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.jsonl");
        append_trace(&path, &runs).unwrap();
        let read = read_trace(&path).unwrap();
        assert_eq!(read, runs);
        append_trace(&path, &runs[..1]).unwrap();
        assert_eq!(read_trace(&path).unwrap().len(), 4);
    }

    #[test]
    fn gold_is_reachable_from_presented_by_the_recorded_fold() {
        // Sanity on the strategy inputs: gold really is the fold output.
        let samples = desk_samples(ItemLevel::Token, 2);
        for s in &samples {
            let fold = gold_ranking(
                &s.items_presented,
                &s.presented_order(),
                &s.conditions_presented,
            )
            .unwrap();
            assert_eq!(fold, s.gold);
        }
    }
}
