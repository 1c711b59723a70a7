//! `udkit` command-line tool.
//!
//! Stage subcommands read CoNLL-U and write CoNLL-U, so they can be piped:
//!
//! ```text
//! udkit normalize in.txt | udkit tokenize | udkit expand-mwt \
//!     | udkit lemmatize --model lemma.txt | udkit tag --model pos.txt \
//!     | udkit analyze --lexicon lex.tsv --paradigms par.tsv \
//!     | udkit parse --model parser.txt --treebank-id ta_ttb
//! ```
//!
//! `normalize` works on raw text unless `--conllu` is given. Exit status is 0
//! on success, 1 on bad data and 2 on bad usage.

use std::error::Error;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use udkit::conllu::{self, Document};
use udkit::eval::{self, EvalOptions};
use udkit::lemma::LemmaModel;
use udkit::morph::Analyzer;
use udkit::mwt::CliticTable;
use udkit::normalize::{Normalizer, RewriteTable, ScriptRange};
use udkit::parse::{self, EvalSplit, ParserModel};
use udkit::pipeline::{Manifest, Pipeline, Step};
use udkit::pos::{self, TagMapping, TaggerModel};
use udkit::tokenize::Tokenizer;

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "udkit", version, about = "Universal Dependencies processing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Input file; standard input when omitted.
    input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// NFC plus the rewrite table, on raw text or CoNLL-U forms.
    Normalize {
        #[command(flatten)]
        io: Io,
        /// Rewrite table; the shipped Tamil table when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Input is CoNLL-U rather than raw text.
        #[arg(long)]
        conllu: bool,
    },
    /// Split raw text into sentences and tokens.
    Tokenize {
        #[command(flatten)]
        io: Io,
        /// Tokenizer TOML configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Split clitics off surface tokens.
    ExpandMwt {
        #[command(flatten)]
        io: Io,
        /// Clitic rule table.
        #[arg(long)]
        clitics: Option<PathBuf>,
    },
    /// Fill LEMMA from a trained model.
    Lemmatize {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        model: PathBuf,
    },
    /// Fill UPOS from a trained tagger.
    Tag {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        model: PathBuf,
    },
    /// Fill FEATS from the lexicon and paradigms, or list analyses of single words.
    Analyze {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        paradigms: PathBuf,
        /// Print every analysis of this word instead of annotating input.
        #[arg(long = "word")]
        words: Vec<String>,
    },
    /// Fill HEAD and DEPREL.
    Parse {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        model: PathBuf,
        /// Used for sentences without a `# treebank_id` comment.
        #[arg(long)]
        treebank_id: Option<String>,
    },
    /// Learn suffix rules from a treebank.
    TrainLemmatizer {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Train the averaged perceptron tagger.
    TrainTagger {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Minimum count for a form to enter the tag dictionary; 0 turns it off.
        #[arg(long, default_value_t = 1)]
        dictionary_min_count: usize,
    },
    /// Train the parser on one or more treebanks.
    TrainParser {
        /// `path:treebank_id`; repeat for several treebanks.
        #[arg(long, required = true, value_parser = parse_train_arg)]
        train: Vec<(PathBuf, String)>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use at most this many sentences from each treebank.
        #[arg(long)]
        max_sentences: Option<usize>,
    },
    /// Turn a `token<TAB>tag` corpus into CoNLL-U with mapped UPOS.
    ConvertTagset {
        #[command(flatten)]
        io: Io,
        /// `source<TAB>UPOS` table; the built-in Amrita table when omitted.
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// Score a system file against gold.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        system: PathBuf,
        /// Align words by character spans (predicted tokenization).
        #[arg(long)]
        aligned: bool,
        /// Compare relation subtypes too.
        #[arg(long)]
        strict_labels: bool,
        /// Where the system UPOS came from, e.g. gold or predicted.
        #[arg(long, default_value = "unspecified")]
        pos_source: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage named in a manifest.
    Pipeline {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Check a CoNLL-U file; prints nothing when it is valid.
    Validate {
        #[command(flatten)]
        io: Io,
    },
}

fn parse_train_arg(s: &str) -> std::result::Result<(PathBuf, String), String> {
    match s.rsplit_once(':') {
        Some((path, id)) if !path.is_empty() && !id.is_empty() => Ok((PathBuf::from(path), id.to_owned())),
        _ => Err(format!("expected PATH:TREEBANK_ID, got `{}`", s)),
    }
}

fn read_input(input: &Option<PathBuf>) -> Result<String> {
    match input {
        Some(p) => fs::read_to_string(p).map_err(|e| format!("{}: {}", p.display(), e).into()),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e).into())
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {}", p.display(), e))?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn serialize(doc: &Document) -> Result<String> {
    Ok(conllu::serialize_document(doc)?)
}

/// Run a single stage the same way the manifest pipeline does.
fn run_step(io: &Io, step: Step, treebank_id: Option<String>) -> Result<()> {
    let input = read_input(&io.input)?;
    let doc = Pipeline::new(vec![step], treebank_id, false)?.run(&input)?;
    write_output(&io.out, &serialize(&doc)?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Normalize { io, table, conllu } => {
            let table = match table {
                Some(p) => RewriteTable::load(p)?,
                None => RewriteTable::tamil(),
            };
            let normalizer = Normalizer::new(table, ScriptRange::TAMIL);
            if conllu {
                return run_step(&io, Step::Normalize(normalizer), None);
            }
            let report = normalizer.normalize_text(&read_input(&io.input)?);
            for r in &report.non_script_runs {
                log::info!("outside script: {}", r);
            }
            write_output(&io.out, &report.output)
        }
        Command::Tokenize { io, config } => {
            let tokenizer = match config {
                Some(p) => Tokenizer::load(p)?,
                None => Tokenizer::default(),
            };
            run_step(&io, Step::Tokenize(tokenizer), None)
        }
        Command::ExpandMwt { io, clitics } => {
            let table = match clitics {
                Some(p) => CliticTable::load(p)?,
                None => CliticTable::default(),
            };
            run_step(&io, Step::Mwt(table), None)
        }
        Command::Lemmatize { io, model } => run_step(&io, Step::Lemmatize(LemmaModel::load(model)?), None),
        Command::Tag { io, model } => run_step(&io, Step::Tag(TaggerModel::load(model)?), None),
        Command::Analyze {
            io,
            lexicon,
            paradigms,
            words,
        } => {
            let analyzer = Analyzer::load(lexicon, paradigms)?;
            if words.is_empty() {
                return run_step(&io, Step::AnalyzeMorph(analyzer), None);
            }
            let mut out = String::new();
            for w in &words {
                for a in analyzer.analyses(w) {
                    out.push_str(&format!("{}\t{}\n", w, a));
                }
            }
            write_output(&io.out, &out)
        }
        Command::Parse { io, model, treebank_id } => run_step(&io, Step::Parse(ParserModel::load(model)?), treebank_id),
        Command::TrainLemmatizer { train, model } => {
            let doc = conllu::parse_document(&read_file(&train)?)?;
            LemmaModel::train(&doc)?.save(model)?;
            Ok(())
        }
        Command::TrainTagger {
            train,
            model,
            epochs,
            seed,
            dictionary_min_count,
        } => {
            let doc = conllu::parse_document(&read_file(&train)?)?;
            let options = pos::TrainOptions {
                epochs,
                seed,
                dictionary_min_count,
            };
            TaggerModel::train(&doc, options)?.save(model)?;
            Ok(())
        }
        Command::TrainParser {
            train,
            model,
            epochs,
            seed,
            max_sentences,
        } => {
            let mut splits = Vec::new();
            for (path, id) in train {
                let doc = conllu::parse_document(&read_file(&path)?)?;
                splits.push(EvalSplit::train(id, doc));
            }
            let options = parse::TrainOptions {
                epochs,
                seed,
                max_sentences_per_treebank: max_sentences,
            };
            let (m, report) = parse::train_parser(&splits, options)?;
            for (tb, n) in &report.used {
                log::info!("{}: trained on {} sentences", tb, n);
            }
            if report.skipped_nonprojective + report.skipped_invalid > 0 {
                log::warn!(
                    "skipped {} non-projective and {} invalid sentences",
                    report.skipped_nonprojective,
                    report.skipped_invalid
                );
            }
            m.save(model)?;
            Ok(())
        }
        Command::ConvertTagset { io, mapping } => {
            let mapping = match mapping {
                Some(p) => TagMapping::load(p)?,
                None => TagMapping::amrita(),
            };
            let corpus = pos::parse_tagged_corpus(&read_input(&io.input)?)?;
            let doc = mapping.convert_corpus(&corpus)?;
            write_output(&io.out, &serialize(&doc)?)
        }
        Command::Evaluate {
            gold,
            system,
            aligned,
            strict_labels,
            pos_source,
            out,
        } => {
            let g = conllu::parse_document(&read_file(&gold)?)?;
            let s = conllu::parse_document(&read_file(&system)?)?;
            let options = EvalOptions { strict_labels };
            let mut report = if aligned {
                eval::score_aligned(&g, &s, options)?
            } else {
                eval::evaluate(&g, &s, options)?
            };
            report.pos_source = pos_source;
            write_output(&out, &report.to_string())
        }
        Command::Pipeline { io, manifest } => {
            let manifest = Manifest::load(manifest)?;
            let pipeline = Pipeline::from_manifest(&manifest)?;
            log::info!("stages: {:?}, pos source: {}", pipeline.stages(), pipeline.pos_source());
            let doc = pipeline.run(&read_input(&io.input)?)?;
            write_output(&io.out, &serialize(&doc)?)
        }
        Command::Validate { io } => {
            let doc = conllu::parse_document(&read_input(&io.input)?)?;
            let violations = conllu::validate(&doc);
            if violations.is_empty() {
                return Ok(());
            }
            let report: String = violations.iter().map(|v| format!("{}\n", v)).collect();
            write_output(&io.out, &report)?;
            Err(format!("{} violations", violations.len()).into())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("udkit: {}", e);
            ExitCode::from(1)
        }
    }
}
