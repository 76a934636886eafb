//! Command-line interface.
//!
//! Every subcommand reads a [`RunConfig`] (TOML file plus flag overrides),
//! writes its artifacts and a JSON log into the output directory, and exits
//! with 0 on success, 2 on validation failures and 3 on I/O failures.

mod commands;
pub mod config;
mod io;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{ReportFormat, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad input content, failed checks or invalid configuration.
    Validation(String),
    /// Missing or unreadable/unwritable files.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "mtgender", version, about = "Gender-bias diagnostics for machine translation")]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report format on stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<ReportFormat>,
    /// Directory for artifacts and logs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build minimal pairs from gendered challenge sets.
    Pairs {
        #[arg(long = "challenge-set")]
        challenge_sets: Vec<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Rewrite gendered pronouns to singular they and verify the result.
    Neutralize {
        #[arg(long = "challenge-set")]
        challenge_sets: Vec<PathBuf>,
    },
    /// Train the aligner and write Pharaoh alignments.
    Align {
        /// `source ||| target` lines.
        #[arg(long, conflicts_with_all = ["source", "target"])]
        bitext: Option<PathBuf>,
        #[arg(long, requires = "target")]
        source: Option<PathBuf>,
        #[arg(long, requires = "source")]
        target: Option<PathBuf>,
        #[command(flatten)]
        aligner: AlignerArgs,
    },
    /// Extract target genders and compute the metrics report.
    Evaluate {
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        aligner: AlignerArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Minimal pair accuracy from a pair file and an outcome file.
    Mpa {
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
    /// Prior bias on the neutral set.
    PriorBias {
        #[arg(long)]
        neutral_set: Option<PathBuf>,
        #[arg(long)]
        neutral_translations: Option<PathBuf>,
        #[arg(long)]
        neutral_alignments: Option<PathBuf>,
        #[command(flatten)]
        aligner: AlignerArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Aggregate cue attention over accurate pairs and export heatmaps.
    AttentionReport {
        #[command(flatten)]
        attn: AttentionArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Prompt attention mass and secondary-entity attention.
    SanityCheck {
        #[command(flatten)]
        attn: AttentionArgs,
        #[command(flatten)]
        data: DataArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Profession stereotype lexicon (`profession<TAB>ProF|ProM`).
    #[arg(long)]
    pub stereotypes: Option<PathBuf>,
    /// Italian profession lexicon.
    #[arg(long)]
    pub gender_lexicon: Option<PathBuf>,
    /// Italian article table.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    /// English profession to Italian lemma map.
    #[arg(long)]
    pub profession_map: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct AlignerArgs {
    #[arg(long)]
    pub tension: Option<f64>,
    #[arg(long)]
    pub null_prob: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct EvalArgs {
    #[arg(long = "challenge-set")]
    pub challenge_sets: Vec<PathBuf>,
    /// `id<TAB>translation` lines.
    #[arg(long)]
    pub translations: Option<PathBuf>,
    /// Pharaoh lines, optionally prefixed by `id<TAB>`. Without it the
    /// aligner is trained on the translations.
    #[arg(long)]
    pub alignments: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub neutral_set: Option<PathBuf>,
    #[arg(long)]
    pub neutral_translations: Option<PathBuf>,
    #[arg(long)]
    pub neutral_alignments: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct AttentionArgs {
    #[arg(long = "challenge-set")]
    pub challenge_sets: Vec<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub outcomes: Option<PathBuf>,
    /// Directory of dump directories.
    #[arg(long)]
    pub dumps: Option<PathBuf>,
    #[arg(long)]
    pub n_min: Option<usize>,
    /// Inclusive layer range, e.g. `8-20`.
    #[arg(long, value_parser = config::parse_range)]
    pub layers: Option<(usize, usize)>,
    /// Fixed color scale, e.g. `0,0.2`.
    #[arg(long, value_parser = config::parse_scale)]
    pub scale: Option<(f64, f64)>,
    /// Use the masculine variant of each accurate pair.
    #[arg(long)]
    pub masculine_cue: bool,
    #[arg(long)]
    pub check_layer: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub check_heads: Option<Vec<usize>>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn set_sets(slot: &mut Vec<PathBuf>, value: &[PathBuf]) {
    if !value.is_empty() {
        *slot = value.to_vec();
    }
}

impl DataArgs {
    fn apply(&self, c: &mut RunConfig) {
        set_opt(&mut c.paths.stereotypes, self.stereotypes.clone());
        set_opt(&mut c.paths.gender_lexicon, self.gender_lexicon.clone());
        set_opt(&mut c.paths.articles, self.articles.clone());
        set_opt(&mut c.paths.profession_map, self.profession_map.clone());
    }
}

impl AlignerArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.aligner.tension, self.tension);
        set(&mut c.aligner.null_prob, self.null_prob);
        set(&mut c.aligner.iterations, self.iterations);
    }
}

impl AttentionArgs {
    fn apply(&self, c: &mut RunConfig) {
        set_sets(&mut c.paths.challenge_sets, &self.challenge_sets);
        set_opt(&mut c.paths.pairs, self.pairs.clone());
        set_opt(&mut c.paths.outcomes, self.outcomes.clone());
        set_opt(&mut c.paths.dumps, self.dumps.clone());
        let a = &mut c.attention;
        set(&mut a.n_min, self.n_min);
        set(&mut a.layers, self.layers);
        set_opt(&mut a.scale, self.scale);
        a.masculine_cue |= self.masculine_cue;
        set(&mut a.check_layer, self.check_layer);
        set(&mut a.check_heads, self.check_heads.clone());
    }
}

impl Cli {
    /// Effective configuration: file (or defaults) with flags applied.
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set(&mut c.format, self.format);
        set(&mut c.paths.output_dir, self.out_dir.clone());
        match &self.command {
            Command::Pairs { challenge_sets, data } => {
                set_sets(&mut c.paths.challenge_sets, challenge_sets);
                data.apply(&mut c);
            }
            Command::Neutralize { challenge_sets } => set_sets(&mut c.paths.challenge_sets, challenge_sets),
            Command::Align { aligner, .. } => aligner.apply(&mut c),
            Command::Evaluate { eval, aligner, data } => {
                let p = &mut c.paths;
                set_sets(&mut p.challenge_sets, &eval.challenge_sets);
                set_opt(&mut p.translations, eval.translations.clone());
                set_opt(&mut p.alignments, eval.alignments.clone());
                set_opt(&mut p.pairs, eval.pairs.clone());
                set_opt(&mut p.neutral_set, eval.neutral_set.clone());
                set_opt(&mut p.neutral_translations, eval.neutral_translations.clone());
                set_opt(&mut p.neutral_alignments, eval.neutral_alignments.clone());
                aligner.apply(&mut c);
                data.apply(&mut c);
            }
            Command::Mpa { pairs, outcomes } => {
                set_opt(&mut c.paths.pairs, pairs.clone());
                set_opt(&mut c.paths.outcomes, outcomes.clone());
            }
            Command::PriorBias { neutral_set, neutral_translations, neutral_alignments, aligner, data } => {
                set_opt(&mut c.paths.neutral_set, neutral_set.clone());
                set_opt(&mut c.paths.neutral_translations, neutral_translations.clone());
                set_opt(&mut c.paths.neutral_alignments, neutral_alignments.clone());
                aligner.apply(&mut c);
                data.apply(&mut c);
            }
            Command::AttentionReport { attn, data } | Command::SanityCheck { attn, data } => {
                attn.apply(&mut c);
                data.apply(&mut c);
            }
        }
        Ok(c)
    }
}

/// Run one invocation and return the exit status. Reports go to `stdout`.
pub fn run_with<I, T>(args: I, stdout: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("mtgender: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let cfg = cli.config()?;
    if cli.show_config {
        write!(stdout, "{}", cfg.to_toml()).map_err(|e| CliError::Io(e.to_string()))?;
        return Ok(());
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.paths.output_dir).map_err(|e| CliError::io(&cfg.paths.output_dir, e))?;
    let report = match &cli.command {
        Command::Pairs { .. } => commands::pairs(&cfg)?,
        Command::Neutralize { .. } => commands::neutralize(&cfg)?,
        Command::Align { bitext, source, target, .. } => {
            commands::align(&cfg, bitext.as_deref(), source.as_deref().zip(target.as_deref()))?
        }
        Command::Evaluate { .. } => commands::evaluate(&cfg)?,
        Command::Mpa { .. } => commands::mpa(&cfg)?,
        Command::PriorBias { .. } => commands::prior_bias_cmd(&cfg)?,
        Command::AttentionReport { .. } => commands::attention_report(&cfg)?,
        Command::SanityCheck { .. } => commands::sanity_check(&cfg)?,
    };
    if let Some(r) = report {
        write!(stdout, "{r}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Entry point for the binary.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run_with(std::env::args_os(), &mut std::io::stdout())
}
