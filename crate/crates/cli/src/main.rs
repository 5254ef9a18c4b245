use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gsavg::bench::{run_experiment, write_report, FileConfig};
use gsavg::blocking::{blocks_report, select_percentile_loocv, CorrMethod, DEFAULT_GRID};
use gsavg::classifier::{fit, ModelArtifact, TrainedModel, Variant};
use gsavg::dataset::{load_csv, load_features_csv, write_csv, Dataset, LabelColumn};
use gsavg::dissim::Blocking;
use gsavg::energy::separation;
use gsavg::gamma::Gamma;
use gsavg::simgen::{generate, Example, SimConfig};

#[derive(Parser)]
#[command(
    name = "gsavg",
    about = "Average-distance classifiers for high-dimension low-sample-size data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Labeled CSV file (header row, comma delimiter)
    #[arg(long)]
    data: PathBuf,
    /// Label column: a header name, or a 0-based column index. Defaults to
    /// the last column.
    #[arg(long)]
    label_col: Option<String>,
    /// Z-score each feature column after loading
    #[arg(long)]
    standardize: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let column = self.label_col.clone().map(parse_label_column);
        let data = load_csv(&self.data, column.as_ref())
            .with_context(|| format!("loading {}", self.data.display()))?;
        Ok(if self.standardize {
            data.standardized()
        } else {
            data
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset and write it as CSV
    Simulate {
        /// Which construction: 1, 2, or 3
        #[arg(long)]
        example: String,
        /// Observations per class
        #[arg(long)]
        n: usize,
        /// Dimension
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Also write the oracle blocking as JSON (1-based index lists)
        #[arg(long)]
        oracle_blocks: Option<PathBuf>,
    },
    /// Estimate blocks: correlation dissimilarity, average-linkage
    /// dendrogram, percentile cuts, and LOOCV errors
    Blocks {
        #[command(flatten)]
        data: DataArgs,
        /// Correlation method: pearson or spearman
        #[arg(long, default_value = "pearson")]
        method: String,
        /// Transform used inside the LOOCV classifier
        #[arg(long, default_value = "exp")]
        gamma: String,
        /// Comma-separated percentile grid, e.g. "0,0.1,0.5,1"
        #[arg(long)]
        grid: Option<String>,
        /// Write the full report JSON here (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the chosen blocking alone, loadable via
        /// `--blocks file:<path>`
        #[arg(long)]
        chosen_out: Option<PathBuf>,
    },
    /// Fit a classifier and write the model artifact as JSON
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// avg, savg, or gsavg
        #[arg(long)]
        variant: String,
        /// Transform for gsavg: exp, sqrt, log, or identity
        #[arg(long, default_value = "exp")]
        gamma: String,
        /// Blocking for gsavg: auto, singleton, or file:<path>
        #[arg(long, default_value = "auto")]
        blocks: String,
        /// Correlation method for auto blocking
        #[arg(long, default_value = "pearson")]
        corr: String,
        /// Output model path
        #[arg(long)]
        out: PathBuf,
    },
    /// Score rows of a CSV with a trained model
    Classify {
        /// Model artifact written by `train`
        #[arg(long)]
        model: PathBuf,
        /// The training CSV the model was fit on (fingerprint-checked)
        #[arg(long)]
        train: PathBuf,
        /// Label column of the training CSV
        #[arg(long)]
        label_col: Option<String>,
        /// Standardize the training CSV (must match the `train` run)
        #[arg(long)]
        standardize: bool,
        /// Rows to score; a label column, if present, is carried through
        #[arg(long)]
        data: PathBuf,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-block energy-distance diagnostics
    Separation {
        #[command(flatten)]
        data: DataArgs,
        /// Blocking: auto, singleton, or file:<path>
        #[arg(long)]
        blocks: String,
        #[arg(long, default_value = "exp")]
        gamma: String,
        /// Correlation method for auto blocking
        #[arg(long, default_value = "pearson")]
        corr: String,
        /// Write the report JSON here (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo experiment
    Bench {
        /// TOML config file; flags below override nothing when this is set
        #[arg(long, conflicts_with_all = ["example", "csv"])]
        config: Option<PathBuf>,
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Comma-separated dimensions, e.g. "50,100,500"
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        label_col: Option<String>,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated classifiers: avg, savg, gsavg, gsavg:<gamma>
        #[arg(long)]
        classifiers: Option<String>,
        /// Default transform for bare `gsavg` entries
        #[arg(long)]
        gamma: Option<String>,
        /// auto, oracle, singleton, or file:<path>
        #[arg(long)]
        blocking: Option<String>,
        #[arg(long)]
        corr: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// json, csv, or table
        #[arg(long)]
        format: Option<String>,
    },
}

fn parse_label_column(s: String) -> LabelColumn {
    match s.parse::<usize>() {
        Ok(i) => LabelColumn::Index(i),
        Err(_) => LabelColumn::Name(s),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad grid entry {t:?}"))
        })
        .collect()
}

fn resolve_blocks(
    spec: &str,
    train: &Dataset,
    gamma: Gamma,
    corr: CorrMethod,
) -> Result<(Blocking, Option<f64>)> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "auto" => {
            let sel = select_percentile_loocv(train, gamma, &DEFAULT_GRID, corr)?;
            Ok((sel.chosen_blocking, Some(sel.chosen)))
        }
        "singleton" | "singletons" => Ok((Blocking::singletons(train.dim()), None)),
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                let lists: Vec<Vec<usize>> = serde_json::from_str(&text)?;
                Ok((Blocking::from_one_based(lists, train.dim())?, None))
            } else {
                bail!("unknown blocks spec {spec:?}; expected auto, singleton, or file:<path>")
            }
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match Cli::parse().command {
        Command::Simulate {
            example,
            n,
            dim,
            seed,
            out,
            oracle_blocks,
        } => {
            let cfg = SimConfig {
                example: example.parse::<Example>()?,
                n_per_class: n,
                dim,
                seed,
            };
            let (data, oracle) = generate(&cfg)?;
            write_csv(&data, &out)?;
            eprintln!(
                "wrote {} ({} rows x {} features)",
                out.display(),
                data.n(),
                data.dim()
            );
            if let Some(path) = oracle_blocks {
                fs::write(&path, serde_json::to_string(&oracle.to_one_based())?)?;
                eprintln!("wrote oracle blocking to {}", path.display());
            }
        }
        Command::Blocks {
            data,
            method,
            gamma,
            grid,
            out,
            chosen_out,
        } => {
            let train = data.load()?;
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => DEFAULT_GRID.to_vec(),
            };
            let report = blocks_report(
                &train,
                method.parse::<CorrMethod>()?,
                gamma.parse::<Gamma>()?,
                &grid,
            )?;
            if let Some(path) = &chosen_out {
                fs::write(path, serde_json::to_string(&report.chosen_blocks)?)?;
                eprintln!("wrote chosen blocking to {}", path.display());
            }
            emit(&serde_json::to_string_pretty(&report)?, out.as_ref())?;
        }
        Command::Train {
            data,
            variant,
            gamma,
            blocks,
            corr,
            out,
        } => {
            let train = data.load()?;
            let variant: Variant = variant.parse()?;
            let model = match variant {
                Variant::Gsavg => {
                    let gamma: Gamma = gamma.parse()?;
                    let (blocking, p_hat) = resolve_blocks(&blocks, &train, gamma, corr.parse()?)?;
                    if let Some(p) = p_hat {
                        eprintln!("auto blocking chose p = {p}");
                    }
                    fit(&train, variant, Some(blocking), Some(gamma))?
                }
                _ => fit(&train, variant, None, None)?,
            };
            fs::write(&out, serde_json::to_string_pretty(&model.to_artifact())?)?;
            eprintln!("wrote model to {}", out.display());
        }
        Command::Classify {
            model,
            train,
            label_col,
            standardize,
            data,
            out,
        } => {
            let artifact: ModelArtifact = serde_json::from_str(
                &fs::read_to_string(&model)
                    .with_context(|| format!("reading {}", model.display()))?,
            )?;
            let column = label_col.clone().map(parse_label_column);
            let train_data = load_csv(&train, column.as_ref())?;
            let train_data = if standardize {
                train_data.standardized()
            } else {
                train_data
            };
            let model = TrainedModel::from_artifact(&artifact, &train_data)?;
            let (features, dropped) = load_features_csv(&data, model.dim(), column.as_ref())?;
            let mut text = String::from(if dropped.is_some() {
                "row,score,label,label_name,tie,true_label\n"
            } else {
                "row,score,label,label_name,tie\n"
            });
            for (i, row) in features.rows().into_iter().enumerate() {
                let d = model.classify(row)?;
                let name = &model.label_names()[d.label.index()];
                match &dropped {
                    Some(truth) => text.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        i + 1,
                        d.score,
                        d.label,
                        name,
                        d.tie,
                        truth[i]
                    )),
                    None => text.push_str(&format!(
                        "{},{},{},{},{}\n",
                        i + 1,
                        d.score,
                        d.label,
                        name,
                        d.tie
                    )),
                }
            }
            emit(&text, out.as_ref())?;
        }
        Command::Separation {
            data,
            blocks,
            gamma,
            corr,
            out,
        } => {
            let train = data.load()?;
            let gamma: Gamma = gamma.parse()?;
            let (blocking, _) = resolve_blocks(&blocks, &train, gamma, corr.parse()?)?;
            let report = separation(&train, &blocking, gamma)?;
            emit(&serde_json::to_string_pretty(&report)?, out.as_ref())?;
        }
        Command::Bench {
            config,
            example,
            csv,
            dims,
            n_train,
            n_test,
            label_col,
            train_fraction,
            standardize,
            reps,
            classifiers,
            gamma,
            blocking,
            corr,
            seed,
            out,
            format,
        } => {
            let file_config = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    toml::from_str::<FileConfig>(&text)
                        .with_context(|| format!("parsing {}", path.display()))?
                }
                None => FileConfig {
                    example,
                    csv,
                    dims: dims.map(|s| parse_dims(&s)).transpose()?,
                    n_train_per_class: n_train,
                    n_test_per_class: n_test,
                    label_col,
                    train_fraction,
                    standardize: Some(standardize),
                    reps,
                    classifiers: classifiers
                        .map(|s| s.split(',').map(|t| t.trim().to_string()).collect()),
                    gamma,
                    blocking,
                    corr_method: corr,
                    grid: None,
                    seed,
                    out: None,
                    format: None,
                },
            };
            // command-line --out/--format win over file keys
            let (cfg, file_out, file_format) = file_config.resolve()?;
            let report = run_experiment(&cfg)?;
            let format = match format {
                Some(f) => f.parse()?,
                None => file_format,
            };
            let out = out.or(file_out);
            match &out {
                Some(path) => {
                    write_report(&report, format, path)?;
                    eprintln!("wrote report to {}", path.display());
                }
                None => println!("{}", gsavg::bench::emit_report(&report, format)?),
            }
        }
    }
    Ok(())
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("bad dimension {t:?}"))
        })
        .collect()
}
