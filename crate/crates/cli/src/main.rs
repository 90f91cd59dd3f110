mod report;

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use agec_core::align::{align, extract_edits};
use agec_core::corpus::{
    emit_m2, emit_parallel, parse_m2, parse_parallel, AnnotatedExample, Sentence,
};
use agec_core::corrupt::{corrupt_corpus_with, CorruptionSpec};
use agec_core::normalize::{
    normalize_sentence, project_example, CharClassTable, NormalizationMode,
};
use agec_core::par::{self, Execution};
use agec_core::prompt::{
    build_instruction_records, check_exemplar_pool, correct_cot, parse_response, records_to_jsonl,
    CotStage, DecodingParams, FewShotExemplar, Gateway, PromptRequest, Prompts, ProviderConfig,
    RetryPolicy, TemplateSet, TranscriptCache, DEFAULT_INSTRUCTIONS, TEMPLATE_VERSION,
};
use agec_core::scorer::{score_corpus_with, ScorerConfig};
use agec_core::seq2edit::{apply_tags, extract_tags, tag_stats_with, TagSequence};
use agec_core::taxonomy::{classify_corpus_with, classify_edit_with, full_taxonomy, ErrorClass};

enum Failure {
    Usage(String),
    Domain(String),
}

type Outcome = Result<(), Failure>;

fn domain<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Domain(e.to_string())
}

#[derive(Parser)]
#[command(name = "agec", about = "Arabic grammatical error correction toolkit")]
struct Cli {
    /// Worker threads for per-sentence work (default: logical CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score hypotheses against M² gold edits.
    Score(ScoreArgs),
    /// Score tables across normalization modes and/or error classes.
    Report(ReportArgs),
    /// Token-level edit tags.
    #[command(subcommand)]
    Edits(EditsCommand),
    /// Normalize parallel text or an M² file.
    Normalize(NormalizeArgs),
    /// Fill the class field of M² edits.
    Classify(ClassifyArgs),
    /// Inject seeded errors into clean sentences.
    Corrupt(CorruptArgs),
    /// Prompt building, response parsing and provider calls.
    #[command(subcommand)]
    Prompt(PromptCommand),
}

#[derive(Args)]
struct ScorerFlags {
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 2)]
    max_gap: usize,
    /// JSON character-class table overriding the default sets.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long, default_value = "exact", value_parser = parse_mode)]
    mode: NormalizationMode,
    #[command(flatten)]
    scorer: ScorerFlags,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    hyp: PathBuf,
    /// One row per normalization mode (the default table).
    #[arg(long)]
    by_mode: bool,
    /// One row per coarse error class.
    #[arg(long)]
    by_class: bool,
    /// Mode used by --by-class.
    #[arg(long, default_value = "exact", value_parser = parse_mode)]
    mode: NormalizationMode,
    #[command(flatten)]
    scorer: ScorerFlags,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
    Json,
}

#[derive(Subcommand)]
enum EditsCommand {
    /// One tag line per sentence pair.
    Extract {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply one tag line per source sentence.
    Apply {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tags: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Tag counts over a parallel corpus.
    Stats {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
    },
    /// M² gold edits from a parallel corpus.
    M2 {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long, default_value_t = 0)]
        max_gap: usize,
        /// Also fill the class field.
        #[arg(long)]
        classify: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long, value_parser = parse_mode)]
    mode: NormalizationMode,
    #[arg(long, conflicts_with = "text", required_unless_present = "text")]
    m2: Option<PathBuf>,
    /// One sentence per line.
    #[arg(long)]
    text: Option<PathBuf>,
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    m2: PathBuf,
    #[arg(long)]
    table: Option<PathBuf>,
    /// Reclassify edits that already carry a taxonomy code.
    #[arg(long)]
    overwrite: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CorruptArgs {
    /// Clean sentences, one per line.
    #[arg(long)]
    clean: PathBuf,
    /// JSON corruption spec; the built-in default when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Corrupt a seeded sample of this many sentences.
    #[arg(long)]
    sample: Option<usize>,
    /// Writes <out>.src, <out>.tgt and <out>.m2.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PromptKind {
    CotReasoning,
    CotAnswer,
    Expert,
    Corrupt,
}

#[derive(Args)]
struct PromptCommon {
    /// `erroneous<TAB>corrected` or `id<TAB>erroneous<TAB>corrected` lines.
    #[arg(long)]
    exemplars: Option<PathBuf>,
    /// Use only the first N exemplars.
    #[arg(long)]
    shots: Option<usize>,
    /// Comma-separated taxonomy codes; expert prompts default to all of them.
    #[arg(long)]
    classes: Option<String>,
    /// Template directory replacing the built-in set.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// greedy, beam or top-p.
    #[arg(long, default_value = "greedy")]
    decoding: String,
}

#[derive(Subcommand)]
enum PromptCommand {
    /// Render prompts for each input sentence.
    Build {
        #[arg(long, value_enum)]
        kind: PromptKind,
        #[arg(long, conflicts_with = "source", required_unless_present = "source")]
        input: Option<PathBuf>,
        #[arg(long)]
        source: Option<String>,
        /// Reasoning text for the answer stage.
        #[arg(long)]
        reasoning: Option<PathBuf>,
        #[command(flatten)]
        common: PromptCommon,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Extract the corrected sentence from a provider response.
    Parse { file: Option<PathBuf> },
    /// Correct sentences through a provider. Not deterministic: output depends on the remote model.
    Run {
        #[arg(long)]
        provider: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RunKind::Expert)]
        kind: RunKind,
        #[command(flatten)]
        common: PromptCommon,
        /// Directory of cached transcripts for resumable runs.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Instruction-tuning records as JSON lines.
    Instructions {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        /// One instruction per line; the built-in pool when absent.
        #[arg(long)]
        instructions: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunKind {
    Expert,
    Cot,
}

fn parse_mode(s: &str) -> Result<NormalizationMode, String> {
    s.parse::<NormalizationMode>().map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn lines(text: &str) -> Vec<&str> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect()
}

fn sentences(path: &Path) -> Result<Vec<Sentence>, Failure> {
    Ok(lines(&read(path)?)
        .into_iter()
        .map(Sentence::from_text)
        .collect())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn guard_output(output: Option<&Path>, inputs: &[&Path]) -> Outcome {
    if let Some(out) = output {
        if inputs.iter().any(|i| same_file(out, i)) {
            return Err(Failure::Usage(format!(
                "output {} would overwrite an input",
                out.display()
            )));
        }
    }
    Ok(())
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(domain)
        }
    }
}

fn table(path: Option<&Path>) -> Result<CharClassTable, Failure> {
    match path {
        Some(p) => CharClassTable::from_json(&read(p)?).map_err(domain),
        None => Ok(CharClassTable::default()),
    }
}

fn scorer_config(flags: &ScorerFlags, mode: NormalizationMode) -> Result<ScorerConfig, Failure> {
    if flags.beta.is_nan() || flags.beta <= 0.0 {
        return Err(Failure::Usage("--beta must be positive".into()));
    }
    Ok(ScorerConfig {
        beta: flags.beta,
        max_gap: flags.max_gap,
        normalization: mode,
        table: table(flags.table.as_deref())?,
    })
}

fn gold_and_hyps(
    gold: &Path,
    hyp: &Path,
) -> Result<(Vec<AnnotatedExample>, Vec<Sentence>), Failure> {
    let examples = parse_m2(&read(gold)?).map_err(domain)?;
    let hyps = sentences(hyp)?;
    if examples.len() != hyps.len() {
        return Err(Failure::Domain(format!(
            "{} has {} sentences but {} has {} lines",
            gold.display(),
            examples.len(),
            hyp.display(),
            hyps.len()
        )));
    }
    Ok((examples, hyps))
}

fn exec() -> Execution {
    Execution::default()
}

fn run_score(a: ScoreArgs) -> Outcome {
    let cfg = scorer_config(&a.scorer, a.mode)?;
    let (examples, hyps) = gold_and_hyps(&a.gold, &a.hyp)?;
    let score = score_corpus_with(&examples, &hyps, &cfg, exec()).map_err(domain)?;
    let text = match a.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&score.report).map_err(domain)?
        ),
        _ => report::score_text(&score.report),
    };
    emit(None, &text)
}

fn run_report(a: ReportArgs) -> Outcome {
    let (examples, hyps) = gold_and_hyps(&a.gold, &a.hyp)?;
    let by_mode = a.by_mode || !a.by_class;
    let mut json = serde_json::Map::new();
    let mut text = String::new();
    if by_mode {
        let mut rows = Vec::new();
        for mode in NormalizationMode::ALL {
            let cfg = scorer_config(&a.scorer, mode)?;
            rows.push((
                mode,
                score_corpus_with(&examples, &hyps, &cfg, exec())
                    .map_err(domain)?
                    .report,
            ));
        }
        match a.format {
            Format::Text => text.push_str(&report::modes_text(&rows)),
            Format::Tsv => text.push_str(&report::modes_tsv(&rows)),
            Format::Json => {
                json.insert("by_mode".into(), report::modes_json(&rows));
            }
        }
    }
    if a.by_class {
        let cfg = scorer_config(&a.scorer, a.mode)?;
        let rep = classify_corpus_with(&examples, &hyps, &cfg, exec()).map_err(domain)?;
        if !text.is_empty() {
            text.push('\n');
        }
        match a.format {
            Format::Text => text.push_str(&report::classes_text(&rep)),
            Format::Tsv => text.push_str(&report::classes_tsv(&rep)),
            Format::Json => {
                json.insert(
                    "by_class".into(),
                    serde_json::to_value(&rep).map_err(domain)?,
                );
            }
        }
    }
    if a.format == Format::Json {
        text = format!("{}\n", serde_json::to_string_pretty(&json).map_err(domain)?);
    }
    emit(None, &text)
}

fn parallel(src: &Path, tgt: &Path) -> Result<Vec<agec_core::ParallelExample>, Failure> {
    parse_parallel(&read(src)?, &read(tgt)?).map_err(domain)
}

fn run_edits(cmd: EditsCommand) -> Outcome {
    match cmd {
        EditsCommand::Extract { src, tgt, output } => {
            guard_output(output.as_deref(), &[&src, &tgt])?;
            let pairs = parallel(&src, &tgt)?;
            let tags = par::map(exec(), &pairs, |_, p| extract_tags(p).encode());
            emit(
                output.as_deref(),
                &tags.iter().map(|t| format!("{t}\n")).collect::<String>(),
            )
        }
        EditsCommand::Apply { src, tags, output } => {
            guard_output(output.as_deref(), &[&src, &tags])?;
            let sources = sentences(&src)?;
            let tag_text = read(&tags)?;
            let tag_lines = lines(&tag_text);
            if tag_lines.len() != sources.len() {
                return Err(Failure::Domain(format!(
                    "{} sentences but {} tag lines",
                    sources.len(),
                    tag_lines.len()
                )));
            }
            let mut out = Vec::with_capacity(sources.len());
            for (n, (s, line)) in sources.iter().zip(tag_lines).enumerate() {
                let seq = TagSequence::decode(line)
                    .map_err(|e| Failure::Domain(format!("line {}: {e}", n + 1)))?;
                out.push(
                    apply_tags(s, &seq)
                        .map_err(|e| Failure::Domain(format!("line {}: {e}", n + 1)))?,
                );
            }
            emit(output.as_deref(), &emit_parallel(&out))
        }
        EditsCommand::Stats { src, tgt } => {
            let pairs = parallel(&src, &tgt)?;
            emit(None, &tag_stats_with(&pairs, exec()).to_lines())
        }
        EditsCommand::M2 {
            src,
            tgt,
            max_gap,
            classify,
            output,
        } => {
            guard_output(output.as_deref(), &[&src, &tgt])?;
            let pairs = parallel(&src, &tgt)?;
            let table = CharClassTable::default();
            let examples = par::map(exec(), &pairs, |_, p| {
                let mut edits = extract_edits(&align(&p.source, &p.target), &p.target, max_gap);
                if classify {
                    for e in &mut edits {
                        let class = classify_edit_with(&p.source, e, &table);
                        e.set_class(class);
                    }
                }
                AnnotatedExample::single(p.source.clone(), edits)
            });
            emit(output.as_deref(), &emit_m2(&examples))
        }
    }
}

fn run_normalize(a: NormalizeArgs) -> Outcome {
    let table = table(a.table.as_deref())?;
    if let Some(m2) = &a.m2 {
        guard_output(a.output.as_deref(), &[m2])?;
        let examples = parse_m2(&read(m2)?).map_err(domain)?;
        let projected = par::map(exec(), &examples, |_, ex| {
            project_example(ex, a.mode, &table)
        });
        emit(a.output.as_deref(), &emit_m2(&projected))
    } else {
        let path = a.text.as_deref().expect("clap requires --m2 or --text");
        guard_output(a.output.as_deref(), &[path])?;
        let sents = sentences(path)?;
        let out = par::map(exec(), &sents, |_, s| normalize_sentence(s, a.mode, &table));
        emit(a.output.as_deref(), &emit_parallel(&out))
    }
}

fn run_classify(a: ClassifyArgs) -> Outcome {
    guard_output(a.output.as_deref(), &[&a.m2])?;
    let table = table(a.table.as_deref())?;
    let examples = parse_m2(&read(&a.m2)?).map_err(domain)?;
    let annotated = par::map(exec(), &examples, |_, ex| {
        let mut ex = ex.clone();
        for set in &mut ex.gold {
            for e in &mut set.edits {
                if a.overwrite || e.error_class.is_none() {
                    let class = classify_edit_with(&ex.source, e, &table);
                    e.set_class(class);
                }
            }
        }
        ex
    });
    emit(a.output.as_deref(), &emit_m2(&annotated))
}

fn run_corrupt(a: CorruptArgs) -> Outcome {
    let mut spec = match &a.spec {
        Some(p) => CorruptionSpec::from_json(&read(p)?).map_err(domain)?,
        None => CorruptionSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let clean = sentences(&a.clean)?;
    if let Some(n) = clean.iter().position(Sentence::is_empty) {
        return Err(Failure::Domain(format!(
            "line {} of {} is empty",
            n + 1,
            a.clean.display()
        )));
    }
    let out = corrupt_corpus_with(&clean, &spec, a.sample, exec()).map_err(domain)?;
    let path = |ext: &str| {
        let mut p = a.out.clone().into_os_string();
        p.push(format!(".{ext}"));
        PathBuf::from(p)
    };
    let targets = [path("src"), path("tgt"), path("m2")];
    for t in &targets {
        guard_output(Some(t), &[&a.clean])?;
    }
    emit(Some(&targets[0]), &out.noisy_text())?;
    emit(Some(&targets[1]), &out.clean_text())?;
    emit(Some(&targets[2]), &out.m2_text())?;
    let injected: usize = out.results.iter().map(|r| r.repair_edits.len()).sum();
    eprintln!(
        "corrupted {} sentences, {} errors injected, {} degraded",
        out.results.len(),
        injected,
        out.degraded()
    );
    Ok(())
}

fn load_exemplars(common: &PromptCommon) -> Result<Vec<FewShotExemplar>, Failure> {
    let Some(path) = &common.exemplars else {
        return Ok(Vec::new());
    };
    let text = read(path)?;
    let mut pool = Vec::new();
    for (n, line) in lines(&text).into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (id, err, cor) = match fields.as_slice() {
            [e, c] => (format!("exemplar-{}", n + 1), *e, *c),
            [i, e, c] => (i.to_string(), *e, *c),
            _ => {
                return Err(Failure::Domain(format!(
                    "{} line {}: expected 2 or 3 tab-separated fields",
                    path.display(),
                    n + 1
                )))
            }
        };
        pool.push(FewShotExemplar::new(
            id,
            Sentence::from_text(err),
            Sentence::from_text(cor),
        ));
    }
    if let Some(k) = common.shots {
        pool.truncate(k);
    }
    Ok(pool)
}

fn load_classes(spec: Option<&str>, default_all: bool) -> Result<Vec<ErrorClass>, Failure> {
    match spec {
        None if default_all => Ok(full_taxonomy()),
        None => Ok(Vec::new()),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|c| {
                ErrorClass::from_label(c)
                    .ok_or_else(|| Failure::Usage(format!("unknown class {c:?}")))
            })
            .collect(),
    }
}

fn prompts(common: &PromptCommon) -> Result<Prompts, Failure> {
    let templates = match &common.templates {
        Some(dir) => TemplateSet::from_dir(dir).map_err(domain)?,
        None => TemplateSet::default(),
    };
    let decoding = DecodingParams::preset(&common.decoding)
        .ok_or_else(|| Failure::Usage(format!("unknown decoding preset {:?}", common.decoding)))?;
    Ok(Prompts {
        templates,
        decoding,
    })
}

fn run_prompt(cmd: PromptCommand) -> Outcome {
    match cmd {
        PromptCommand::Build {
            kind,
            input,
            source,
            reasoning,
            common,
            format,
        } => {
            let inputs = match (&input, source) {
                (Some(p), _) => sentences(p)?,
                (None, Some(s)) => vec![Sentence::from_text(&s)],
                (None, None) => unreachable!("clap requires --input or --source"),
            };
            let p = prompts(&common)?;
            let pool = load_exemplars(&common)?;
            let reasoning = reasoning.as_deref().map(read).transpose()?;
            let mut reqs: Vec<PromptRequest> = Vec::new();
            for s in &inputs {
                let req = match kind {
                    PromptKind::CotReasoning => p.cot(s, &pool, CotStage::Reasoning, None),
                    PromptKind::CotAnswer => {
                        p.cot(s, &pool, CotStage::Answer, reasoning.as_deref())
                    }
                    PromptKind::Expert => {
                        p.expert(s, &pool, &load_classes(common.classes.as_deref(), true)?)
                    }
                    PromptKind::Corrupt => {
                        Ok(p.corruption(s, &load_classes(common.classes.as_deref(), false)?))
                    }
                };
                reqs.push(req.map_err(domain)?);
            }
            let text = match format {
                Format::Json => {
                    format!("{}\n", serde_json::to_string_pretty(&reqs).map_err(domain)?)
                }
                _ => reqs
                    .iter()
                    .map(PromptRequest::render)
                    .collect::<Vec<_>>()
                    .join("\n"),
            };
            emit(None, &text)
        }
        PromptCommand::Parse { file } => {
            let text = match &file {
                Some(p) => read(p)?,
                None => {
                    let mut buf = String::new();
                    std::io::stdin().read_to_string(&mut buf).map_err(domain)?;
                    buf
                }
            };
            let s = parse_response(&text).map_err(domain)?;
            emit(None, &format!("{}\n", s.to_text()))
        }
        PromptCommand::Run {
            provider,
            input,
            kind,
            common,
            cache,
            output,
        } => {
            guard_output(output.as_deref(), &[&input, &provider])?;
            let cfg = ProviderConfig::from_json(&read(&provider)?).map_err(domain)?;
            let mut p = prompts(&common)?;
            p.decoding = cfg.decoding;
            let pool = load_exemplars(&common)?;
            let inputs = sentences(&input)?;
            let eval_ids: HashSet<String> =
                (1..=inputs.len()).map(|i| format!("input-{i}")).collect();
            check_exemplar_pool(&pool, &eval_ids).map_err(domain)?;
            let classes = load_classes(common.classes.as_deref(), true)?;
            let mut gw = Gateway::new(cfg.connect().map_err(domain)?)
                .with_policy(RetryPolicy::default())
                .with_limits(cfg.max_in_flight, cfg.rpm);
            if let Some(dir) = &cache {
                gw = gw.with_cache(TranscriptCache::open(dir).map_err(domain)?);
            }
            let results = par::map(exec(), &inputs, |_, s| match kind {
                RunKind::Expert => p
                    .expert(s, &pool, &classes)
                    .map_err(Into::into)
                    .and_then(|r| gw.correct(&r)),
                RunKind::Cot => correct_cot(s, &pool, &p, &gw),
            });
            let mut out = Vec::with_capacity(results.len());
            for (n, r) in results.into_iter().enumerate() {
                out.push(r.map_err(|e| Failure::Domain(format!("sentence {}: {e}", n + 1)))?);
            }
            emit(output.as_deref(), &emit_parallel(&out))
        }
        PromptCommand::Instructions {
            src,
            tgt,
            instructions,
            seed,
            output,
        } => {
            guard_output(output.as_deref(), &[&src, &tgt])?;
            let pairs = parallel(&src, &tgt)?;
            let pool: Vec<String> = match &instructions {
                Some(p) => lines(&read(p)?)
                    .into_iter()
                    .filter(|l| !l.trim().is_empty())
                    .map(str::to_string)
                    .collect(),
                None => DEFAULT_INSTRUCTIONS.iter().map(|s| s.to_string()).collect(),
            };
            let records = build_instruction_records(&pairs, &pool, seed)
                .ok_or_else(|| Failure::Domain("the instruction pool is empty".into()))?;
            emit(output.as_deref(), &records_to_jsonl(&records))
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let jobs = cli.jobs;
    par::with_jobs(jobs, move || match cli.command {
        Command::Score(a) => run_score(a),
        Command::Report(a) => run_report(a),
        Command::Edits(c) => run_edits(c),
        Command::Normalize(a) => run_normalize(a),
        Command::Classify(a) => run_classify(a),
        Command::Corrupt(a) => run_corrupt(a),
        Command::Prompt(c) => run_prompt(c),
    })
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(
        format!("{} (templates {TEMPLATE_VERSION})", agec_core::VERSION).into_boxed_str(),
    );
    let matches = match Cli::command().version(version).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("agec: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("agec: {msg}");
            ExitCode::from(1)
        }
    }
}
