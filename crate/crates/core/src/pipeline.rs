//! Stage orchestration driven by a TOML manifest.
//!
//! ```toml
//! stages = ["normalize", "tokenize", "mwt", "lemmatize", "tag", "analyze-morph", "parse"]
//! treebank_id = "ta_ttb"
//!
//! [lemmatize]
//! model = "models/lemma.txt"
//!
//! [tag]
//! model = "models/pos.txt"
//!
//! [analyze-morph]
//! lexicon = "morph/lexicon.tsv"
//! paradigms = "morph/paradigms.tsv"
//!
//! [parse]
//! model = "models/parser.txt"
//! ```
//!
//! Resource paths are relative to the manifest. `normalize`, `tokenize` and
//! `mwt` fall back to the shipped tables when no path is given. With a
//! `tokenize` stage the input is raw text, otherwise it is CoNLL-U.

use std::collections::BTreeSet;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::conllu::{self, validate_sentence, Document, Sentence};
use crate::lemma::LemmaModel;
use crate::morph::Analyzer;
use crate::mwt::CliticTable;
use crate::normalize::{Normalizer, RewriteTable, ScriptRange};
use crate::parse::ParserModel;
use crate::pos::TaggerModel;
use crate::tokenize::Tokenizer;

/// Comment key flagging a sentence a stage could not process.
pub const STAGE_ERROR: &str = "stage_error";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("cannot load {stage} resources: {message}")]
    Resource { stage: Stage, message: String },
    #[error("input is not valid CoNLL-U: {0}")]
    Input(#[from] conllu::ParseError),
    #[error("cannot read manifest: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Normalize,
    Tokenize,
    Mwt,
    Lemmatize,
    Tag,
    AnalyzeMorph,
    Parse,
}

impl Stage {
    /// Canonical order.
    pub const ALL: [Stage; 7] = [
        Stage::Normalize,
        Stage::Tokenize,
        Stage::Mwt,
        Stage::Lemmatize,
        Stage::Tag,
        Stage::AnalyzeMorph,
        Stage::Parse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Normalize => "normalize",
            Stage::Tokenize => "tokenize",
            Stage::Mwt => "mwt",
            Stage::Lemmatize => "lemmatize",
            Stage::Tag => "tag",
            Stage::AnalyzeMorph => "analyze-morph",
            Stage::Parse => "parse",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::Manifest(format!("unknown stage `{}`", s)))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathSection {
    rewrite_table: Option<PathBuf>,
    config: Option<PathBuf>,
    clitics: Option<PathBuf>,
    model: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    paradigms: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    stages: Vec<String>,
    treebank_id: Option<String>,
    #[serde(default)]
    gold_pos: bool,
    #[serde(default)]
    strict_labels: bool,
    normalize: Option<PathSection>,
    tokenize: Option<PathSection>,
    mwt: Option<PathSection>,
    lemmatize: Option<PathSection>,
    tag: Option<PathSection>,
    #[serde(rename = "analyze-morph")]
    analyze_morph: Option<PathSection>,
    parse: Option<PathSection>,
}

/// A parsed manifest with resource paths resolved.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub stages: Vec<Stage>,
    pub treebank_id: Option<String>,
    /// Keep the input's UPOS; the tag stage is then skipped.
    pub gold_pos: bool,
    pub strict_labels: bool,
    pub rewrite_table: Option<PathBuf>,
    pub tokenizer_config: Option<PathBuf>,
    pub clitics: Option<PathBuf>,
    pub lemma_model: Option<PathBuf>,
    pub tagger_model: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub paradigms: Option<PathBuf>,
    pub parser_model: Option<PathBuf>,
}

/// Check that `stages` follows the canonical order without repeats.
pub fn check_stage_order(stages: &[Stage]) -> Result<(), PipelineError> {
    if stages.windows(2).any(|w| w[0] >= w[1]) {
        let names: Vec<&str> = stages.iter().map(|s| s.as_str()).collect();
        let canon: Vec<&str> = Stage::ALL.iter().map(|s| s.as_str()).collect();
        return Err(PipelineError::Manifest(format!(
            "stages [{}] must follow the order [{}] without repeats",
            names.join(", "),
            canon.join(", ")
        )));
    }
    Ok(())
}

impl Manifest {
    /// Parse manifest text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let file: ManifestFile = toml::from_str(text).map_err(|e| PipelineError::Manifest(e.to_string()))?;
        let stages = file
            .stages
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Stage>, _>>()?;
        check_stage_order(&stages)?;
        if file.gold_pos && stages.contains(&Stage::Tokenize) {
            return Err(PipelineError::Manifest(
                "gold_pos needs CoNLL-U input, so the tokenize stage cannot be enabled".to_owned(),
            ));
        }
        let resolve = |p: Option<PathBuf>| p.map(|p| base.join(p));
        let section = |s: Option<PathSection>| s.unwrap_or_default();
        let normalize = section(file.normalize);
        let tokenize = section(file.tokenize);
        let mwt = section(file.mwt);
        let lemmatize = section(file.lemmatize);
        let tag = section(file.tag);
        let morph = section(file.analyze_morph);
        let parse = section(file.parse);
        Ok(Manifest {
            stages,
            treebank_id: file.treebank_id,
            gold_pos: file.gold_pos,
            strict_labels: file.strict_labels,
            rewrite_table: resolve(normalize.rewrite_table),
            tokenizer_config: resolve(tokenize.config),
            clitics: resolve(mwt.clitics),
            lemma_model: resolve(lemmatize.model),
            tagger_model: resolve(tag.model),
            lexicon: resolve(morph.lexicon),
            paradigms: resolve(morph.paradigms),
            parser_model: resolve(parse.model),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// A loaded stage.
#[derive(Clone, Debug)]
pub enum Step {
    Normalize(Normalizer),
    Tokenize(Tokenizer),
    Mwt(CliticTable),
    Lemmatize(LemmaModel),
    Tag(TaggerModel),
    AnalyzeMorph(Analyzer),
    Parse(ParserModel),
}

impl Step {
    pub fn stage(&self) -> Stage {
        match self {
            Step::Normalize(_) => Stage::Normalize,
            Step::Tokenize(_) => Stage::Tokenize,
            Step::Mwt(_) => Stage::Mwt,
            Step::Lemmatize(_) => Stage::Lemmatize,
            Step::Tag(_) => Stage::Tag,
            Step::AnalyzeMorph(_) => Stage::AnalyzeMorph,
            Step::Parse(_) => Stage::Parse,
        }
    }
}

fn resource<T, E: fmt::Display>(stage: Stage, r: Result<T, E>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError::Resource {
        stage,
        message: e.to_string(),
    })
}

fn required(stage: Stage, path: &Option<PathBuf>, key: &str) -> Result<PathBuf, PipelineError> {
    path.clone().ok_or_else(|| PipelineError::Resource {
        stage,
        message: format!("`{}` is not set in the manifest", key),
    })
}

#[derive(Clone, Debug)]
pub struct Pipeline {
    steps: Vec<Step>,
    pub treebank_id: Option<String>,
    pub gold_pos: bool,
}

impl Pipeline {
    pub fn new(steps: Vec<Step>, treebank_id: Option<String>, gold_pos: bool) -> Result<Self, PipelineError> {
        let stages: Vec<Stage> = steps.iter().map(Step::stage).collect();
        check_stage_order(&stages)?;
        Ok(Pipeline {
            steps,
            treebank_id,
            gold_pos,
        })
    }

    /// Load every resource named by `manifest`.
    pub fn from_manifest(manifest: &Manifest) -> Result<Self, PipelineError> {
        let mut steps = Vec::new();
        for &stage in &manifest.stages {
            let step = match stage {
                Stage::Normalize => {
                    let table = match &manifest.rewrite_table {
                        Some(p) => resource(stage, RewriteTable::load(p))?,
                        None => RewriteTable::tamil(),
                    };
                    Step::Normalize(Normalizer::new(table, ScriptRange::TAMIL))
                }
                Stage::Tokenize => Step::Tokenize(match &manifest.tokenizer_config {
                    Some(p) => resource(stage, Tokenizer::load(p))?,
                    None => Tokenizer::default(),
                }),
                Stage::Mwt => Step::Mwt(match &manifest.clitics {
                    Some(p) => resource(stage, CliticTable::load(p))?,
                    None => CliticTable::default(),
                }),
                Stage::Lemmatize => Step::Lemmatize(resource(
                    stage,
                    LemmaModel::load(required(stage, &manifest.lemma_model, "lemmatize.model")?),
                )?),
                Stage::Tag => Step::Tag(resource(
                    stage,
                    TaggerModel::load(required(stage, &manifest.tagger_model, "tag.model")?),
                )?),
                Stage::AnalyzeMorph => Step::AnalyzeMorph(resource(
                    stage,
                    Analyzer::load(
                        required(stage, &manifest.lexicon, "analyze-morph.lexicon")?,
                        required(stage, &manifest.paradigms, "analyze-morph.paradigms")?,
                    ),
                )?),
                Stage::Parse => Step::Parse(resource(
                    stage,
                    ParserModel::load(required(stage, &manifest.parser_model, "parse.model")?),
                )?),
            };
            steps.push(step);
        }
        Pipeline::new(steps, manifest.treebank_id.clone(), manifest.gold_pos)
    }

    pub fn stages(&self) -> Vec<Stage> {
        self.steps.iter().map(Step::stage).collect()
    }

    /// Where UPOS in the output comes from.
    pub fn pos_source(&self) -> &'static str {
        if self.gold_pos {
            "gold"
        } else if self.stages().contains(&Stage::Tag) {
            "predicted"
        } else {
            "input"
        }
    }

    /// Run all stages over `input`: raw text when there is a tokenize stage,
    /// CoNLL-U otherwise.
    pub fn run(&self, input: &str) -> Result<Document, PipelineError> {
        let mut rest = self.steps.as_slice();
        let mut doc = match rest.iter().position(|s| matches!(s, Step::Tokenize(_))) {
            Some(k) => {
                let mut text = input.to_owned();
                for step in &rest[..k] {
                    if let Step::Normalize(n) = step {
                        text = normalize_raw(n, &text);
                    }
                }
                let Step::Tokenize(t) = &rest[k] else { unreachable!() };
                let doc = t.tokenize_document(&text);
                rest = &rest[k + 1..];
                doc
            }
            None => conllu::parse_document(input)?,
        };
        for step in rest {
            self.apply(step, &mut doc);
        }
        Ok(doc)
    }

    /// Apply one per-sentence stage to every sentence of `doc`. A sentence
    /// whose processing panics or introduces validation errors keeps its
    /// previous content, gains a `stage_error` comment and is skipped by
    /// later stages.
    pub fn apply(&self, step: &Step, doc: &mut Document) {
        if self.gold_pos && matches!(step, Step::Tag(_)) {
            log::info!("gold_pos is set; keeping input UPOS");
            return;
        }
        for sentence in &mut doc.sentences {
            if sentence.metadata(STAGE_ERROR).is_some() {
                continue;
            }
            let before = violation_codes(sentence);
            let result = panic::catch_unwind(AssertUnwindSafe(|| self.apply_sentence(step, sentence)));
            let problem = match result {
                Ok(out) => {
                    let new: Vec<String> = validate_sentence(0, &out)
                        .into_iter()
                        .filter(|v| !before.contains(v.code.as_str()))
                        .map(|v| v.message)
                        .collect();
                    if new.is_empty() {
                        *sentence = out;
                        continue;
                    }
                    new.join("; ")
                }
                Err(payload) => payload
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "stage failed".to_owned()),
            };
            let message = format!("{}: {}", step.stage(), problem.replace('\n', " "));
            log::warn!("sentence {}: {}", sentence.sent_id().unwrap_or("?"), message);
            sentence.set_metadata(STAGE_ERROR, &message);
        }
    }

    fn apply_sentence(&self, step: &Step, sentence: &Sentence) -> Sentence {
        let mut s = sentence.clone();
        match step {
            Step::Normalize(n) => normalize_sentence(n, &mut s),
            Step::Tokenize(_) => panic!("tokenize needs raw text input"),
            Step::Mwt(table) => s = table.expand_sentence(&s),
            Step::Lemmatize(m) => m.lemmatize_sentence(&mut s),
            Step::Tag(m) => m.tag(&mut s),
            Step::AnalyzeMorph(a) => a.annotate_sentence(&mut s),
            Step::Parse(m) => {
                let tb = s.treebank_id().map(str::to_owned);
                s = crate::parse::parse_sentence(&s, m, tb.as_deref().or(self.treebank_id.as_deref()));
            }
        }
        s
    }
}

fn violation_codes(s: &Sentence) -> BTreeSet<&'static str> {
    validate_sentence(0, s).into_iter().map(|v| v.code.as_str()).collect()
}

fn normalize_raw(n: &Normalizer, text: &str) -> String {
    let report = n.normalize_text(text);
    if !report.replacements.is_empty() {
        log::info!("normalization made {} replacements", report.replacements.len());
    }
    if !report.non_script_runs.is_empty() {
        log::info!("{} runs outside the expected script", report.non_script_runs.len());
    }
    report.output
}

fn normalize_sentence(n: &Normalizer, s: &mut Sentence) {
    for t in &mut s.tokens {
        t.form = n.normalize_text(&t.form).output;
        if let Some(l) = &t.lemma {
            t.lemma = Some(n.normalize_text(l).output);
        }
    }
    for span in &mut s.mwt_spans {
        span.surface_form = n.normalize_text(&span.surface_form).output;
    }
    if let Some(text) = s.text().map(str::to_owned) {
        s.set_metadata("text", &n.normalize_text(&text).output);
    }
}

/// Load `manifest` and run it over `input`.
pub fn run_pipeline(input: &str, manifest: &Manifest) -> Result<Document, PipelineError> {
    Pipeline::from_manifest(manifest)?.run(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_paths_and_order() {
        let m = Manifest::parse(
            "stages = [\"tokenize\", \"lemmatize\"]\n[lemmatize]\nmodel = \"m/lemma.txt\"\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(m.stages, vec![Stage::Tokenize, Stage::Lemmatize]);
        assert_eq!(m.lemma_model, Some(PathBuf::from("/data/m/lemma.txt")));
        assert!(!m.gold_pos);

        for bad in [
            "stages = [\"tag\", \"tokenize\"]",
            "stages = [\"tokenize\", \"tokenize\"]",
            "stages = [\"spellcheck\"]",
            "stages = [\"tokenize\"]\ngold_pos = true",
            "stages = []\nextra = 1",
        ] {
            assert!(Manifest::parse(bad, Path::new(".")).is_err(), "{}", bad);
        }
    }

    #[test]
    fn missing_resources_fail_at_startup() {
        let m = Manifest::parse("stages = [\"tokenize\", \"tag\"]", Path::new(".")).unwrap();
        assert!(matches!(
            Pipeline::from_manifest(&m),
            Err(PipelineError::Resource { stage: Stage::Tag, .. })
        ));
        let m = Manifest::parse(
            "stages = [\"parse\"]\n[parse]\nmodel = \"/nonexistent/p.txt\"",
            Path::new("."),
        )
        .unwrap();
        assert!(Pipeline::from_manifest(&m).is_err());
    }

    #[test]
    fn text_stages_with_shipped_tables() {
        let m = Manifest::parse("stages = [\"normalize\", \"tokenize\", \"mwt\"]", Path::new(".")).unwrap();
        let doc = run_pipeline("naanum vanthen.", &m).unwrap();
        let out = conllu::serialize_document(&doc).unwrap();
        assert_eq!(
            out,
            "# sent_id = 1\n# text = naanum vanthen.\n\
1-2\tnaanum\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tnaan\t_\t_\t_\t_\t_\t_\t_\t_\n\
2\tum\t_\tCCONJ\t_\t_\t_\t_\t_\t_\n\
3\tvanthen\t_\t_\t_\t_\t_\t_\t_\tSpaceAfter=No\n\
4\t.\t_\t_\t_\t_\t_\t_\t_\t_\n\n"
        );
        assert!(run_pipeline("", &m).unwrap().sentences.is_empty());
    }

    #[test]
    fn failing_sentence_is_flagged() {
        let p = Pipeline::new(vec![], None, false).unwrap();
        let mut doc = conllu::parse_document("1\tnaanum\t_\t_\t_\t_\t_\t_\t_\t_\n\n").unwrap();
        let prev = panic::take_hook();
        panic::set_hook(Box::new(|_| {}));
        p.apply(&Step::Tokenize(Tokenizer::default()), &mut doc);
        panic::set_hook(prev);
        let s = &doc.sentences[0];
        assert_eq!(s.metadata(STAGE_ERROR), Some("tokenize: tokenize needs raw text input"));
        assert_eq!(s.forms(), vec!["naanum"]);
        // flagged sentences are left alone by later stages
        p.apply(&Step::Mwt(CliticTable::default()), &mut doc);
        assert_eq!(doc.sentences[0].forms(), vec!["naanum"]);
    }

    #[test]
    fn gold_pos_keeps_input_tags() {
        let p = Pipeline::new(vec![], None, true).unwrap();
        assert_eq!(p.pos_source(), "gold");
        assert_eq!(Pipeline::new(vec![], None, false).unwrap().pos_source(), "input");
        assert!(Pipeline::new(
            vec![Step::Mwt(CliticTable::default()), Step::Tokenize(Tokenizer::default())],
            None,
            false
        )
        .is_err());
    }
}
