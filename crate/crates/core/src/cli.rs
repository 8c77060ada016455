//! Command-line front end: `train`, `parse` and `eval`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::encoder::ExternalEmbeddings;
use crate::error::Error;
use crate::model::{Model, ModelConfig, ParserKind};
use crate::train::{train, EpochReport};
use crate::transition::FeatureMode;
use crate::treebank::{evaluate, read_conll, write_conll, Evaluation, Vocabulary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bistparse", version, about = "BiLSTM dependency parsers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a parser and write the model with the best dev UAS.
    Train(TrainArgs),
    /// Parse a CoNLL file with a trained model.
    Parse(ParseArgs),
    /// Score predicted trees against gold trees.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = ["transition", "graph"])]
    pub parser: String,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Transition parser feature set.
    #[arg(long, value_parser = ["simple", "extended"])]
    pub features: Option<String>,
    /// Pre-trained word vectors, one `word v1 ... vd` line each.
    #[arg(long = "ext-emb")]
    pub ext_emb: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Aggressive exploration probability (transition parser).
    #[arg(long)]
    pub pagg: Option<f64>,
    #[arg(long = "no-pos")]
    pub no_pos: bool,
    /// Graph parser: predict unlabeled trees only.
    #[arg(long = "no-labeler")]
    pub no_labeler: bool,
    /// Graph parser: train without loss-augmented decoding.
    #[arg(long = "no-loss-aug")]
    pub no_loss_aug: bool,
    /// Transition parser: follow the static gold path only.
    #[arg(long = "no-dyn-oracle")]
    pub no_dyn_oracle: bool,
    /// Graph parser: keep non-projective training trees.
    #[arg(long = "keep-nonproj")]
    pub keep_nonproj: bool,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Score punctuation tokens too.
    #[arg(long = "include-punct")]
    pub include_punct: bool,
}

/// Failure of a subcommand, mapped onto an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<crate::treebank::TreebankError> for CliError {
    fn from(e: crate::treebank::TreebankError) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {}", m),
            CliError::Data(e) => write!(f, "error: {}", e),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{}", rendered)
            } else {
                write!(err, "{}", rendered)
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a, out, err),
        Command::Parse(a) => cmd_parse(a),
        Command::Eval(a) => cmd_eval(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}", e);
            e.exit_code()
        }
    }
}

fn require_file(flag: &str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} {}: no such file", flag, path.display())))
    }
}

/// Builds the model configuration, rejecting flags that do not apply to the
/// chosen parser.
pub fn train_config(a: &TrainArgs) -> Result<ModelConfig, CliError> {
    let parser: ParserKind = a.parser.parse().map_err(CliError::Usage)?;
    let contradictions: &[(bool, &str)] = match parser {
        ParserKind::Graph => &[
            (a.features.is_some(), "--features applies to the transition parser only"),
            (a.pagg.is_some(), "--pagg applies to the transition parser only"),
            (a.no_dyn_oracle, "--no-dyn-oracle applies to the transition parser only"),
        ],
        ParserKind::Transition => &[
            (a.no_labeler, "--no-labeler applies to the graph parser only"),
            (a.no_loss_aug, "--no-loss-aug applies to the graph parser only"),
            (a.keep_nonproj, "--keep-nonproj applies to the graph parser only"),
            (
                a.no_dyn_oracle && a.pagg.is_some(),
                "--pagg has no effect with --no-dyn-oracle",
            ),
        ],
    };
    if let Some((_, message)) = contradictions.iter().find(|(bad, _)| *bad) {
        return Err(CliError::Usage((*message).to_string()));
    }
    if a.epochs == 0 {
        return Err(CliError::Usage("--epochs must be positive".into()));
    }
    let mut config = ModelConfig {
        parser,
        epochs: a.epochs,
        seed: a.seed,
        use_labeler: !a.no_labeler,
        loss_augmented: !a.no_loss_aug,
        dynamic_oracle: !a.no_dyn_oracle,
        keep_nonprojective: a.keep_nonproj,
        ..ModelConfig::default()
    };
    if let Some(f) = &a.features {
        config.features = f.parse::<FeatureMode>().map_err(CliError::Usage)?;
    }
    if let Some(p) = a.pagg {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Usage(format!("--pagg {} is not a probability", p)));
        }
        config.p_agg = p;
    }
    config.encoder.use_pos = !a.no_pos;
    Ok(config)
}

fn format_report(r: &EpochReport) -> String {
    let dev = match &r.dev {
        Some(e) => format!("dev UAS {:.2} LAS {:.2}", 100.0 * e.uas(), 100.0 * e.las()),
        None => "dev -".to_string(),
    };
    format!(
        "epoch {:>3}  loss {:.4}  updates {}  {}",
        r.epoch, r.loss, r.updates, dev
    )
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut config = train_config(a)?;
    require_file("--train", &a.train)?;
    if let Some(dev) = &a.dev {
        require_file("--dev", dev)?;
    }
    if let Some(ext) = &a.ext_emb {
        require_file("--ext-emb", ext)?;
    }
    let train_set = read_conll(&a.train)?;
    let dev_set = match &a.dev {
        Some(p) => read_conll(p)?,
        None => Vec::new(),
    };
    let external = a.ext_emb.as_ref().map(ExternalEmbeddings::load).transpose()?;
    if let Some(ext) = &external {
        config.encoder.external_dim = ext.dim();
    }
    let vocab = Vocabulary::build(&train_set);
    let mut model = Model::new(config, vocab, external.as_ref())?;
    let summary = train(&mut model, &train_set, &dev_set, |r| {
        let _ = writeln!(out, "{}", format_report(r));
    })?;
    if summary.skipped > 0 {
        let _ = writeln!(
            err,
            "warning: skipped {} training sentences without a usable projective gold tree",
            summary.skipped
        );
    }
    match summary.best_epoch {
        Some(epoch) => {
            let _ = writeln!(out, "best epoch {}", epoch);
        }
        None => {
            let _ = writeln!(err, "warning: no dev data; keeping the model from the last epoch");
        }
    }
    model.save(&a.model)?;
    Ok(())
}

fn cmd_parse(a: &ParseArgs) -> Result<(), CliError> {
    require_file("--model", &a.model)?;
    require_file("--input", &a.input)?;
    let model = Model::load(&a.model)?;
    let sentences = read_conll(&a.input)?;
    let trees = model.parse_all(&sentences)?;
    write_conll(&a.output, &sentences, Some(&trees))?;
    Ok(())
}

pub fn format_evaluation(e: &Evaluation) -> String {
    format!(
        "UAS: {:.2} ({}/{})\nLAS: {:.2} ({}/{})\nscored tokens: {}\n",
        100.0 * e.uas(),
        e.correct_heads,
        e.scored,
        100.0 * e.las(),
        e.correct_labeled,
        e.scored,
        e.scored
    )
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    require_file("--gold", &a.gold)?;
    require_file("--pred", &a.pred)?;
    let gold = read_conll(&a.gold)?;
    let pred = read_conll(&a.pred)?;
    let trees = pred
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.gold_tree().ok_or_else(|| {
                CliError::Data(Error::Treebank(crate::treebank::TreebankError::Mismatch {
                    index: i,
                    message: "predicted sentence has no heads".into(),
                }))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let eval = evaluate(&gold, &trees, !a.include_punct)?;
    let _ = write!(out, "{}", format_evaluation(&eval));
    Ok(())
}
