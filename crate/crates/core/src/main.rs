use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latent_rating::aggregation::{aggregate_subjects, rank_report, CompositeConfig, RatingInput};
use latent_rating::calibration::{build_calibration, DEFAULT_SCALE};
use latent_rating::config::{FlatConfig, PipelineConfig};
use latent_rating::error::{Error, Result};
use latent_rating::io;
use latent_rating::latent::ZipfConfig;
use latent_rating::pipeline::{run_subject, write_outputs, write_rejection, SubjectInputs};
use latent_rating::stats::ReferenceDistribution;
use latent_rating::validity::{gate_test_scores, ValidityConfig};

#[derive(Parser)]
#[command(
    name = "latent-rating",
    version,
    about = "Composite student ratings on a Zipf latent scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a conditional-rank table from a reference calibration sample.
    Calibrate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        mean: f64,
        #[arg(long, default_value_t = 16.0)]
        sd: f64,
        #[arg(long, default_value_t = DEFAULT_SCALE)]
        scale: f64,
        /// Output table (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a test-score distribution for excessive left skew.
    /// Exits 0 when accepted, 1 when rejected.
    Validate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        threshold: f64,
        /// Report the skewness but always accept.
        #[arg(long)]
        no_gate: bool,
    },
    /// Rate one subject from test and attendance indicators.
    Rate(RateArgs),
    /// Combine per-subject reports into an overall rating.
    Aggregate {
        /// Report files, as `path` (subject from `<subject>.report.csv`) or `subject=path`.
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<String>,
        #[arg(long)]
        weights: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RateArgs {
    /// Flat `key = value` file; keys are the long flag names below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    subject: Option<String>,
    #[arg(long)]
    tests: Option<PathBuf>,
    #[arg(long)]
    attendance: Option<PathBuf>,
    /// Optional third indicator (grades).
    #[arg(long)]
    grades: Option<PathBuf>,
    #[arg(long)]
    grades_weight: Option<f64>,
    #[arg(long)]
    table: Option<PathBuf>,
    /// Attendance weight in the composite.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    no_round_latent: bool,
    /// Significant digits kept in fitted coefficients; 0 keeps full precision.
    #[arg(long)]
    coefficient_digits: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    #[arg(long)]
    no_gate: bool,
    /// Rate on the remaining indicators when attendance is constant.
    #[arg(long)]
    fallback_single_indicator: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

const RATE_KEYS: &[&str] = &[
    "subject",
    "tests",
    "attendance",
    "grades",
    "grades-weight",
    "table",
    "k",
    "alpha",
    "constant",
    "no-round-latent",
    "coefficient-digits",
    "threshold",
    "no-gate",
    "fallback-single-indicator",
    "output",
];

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate {
            scores,
            mean,
            sd,
            scale,
            output,
        } => calibrate(&scores, mean, sd, scale, output.as_deref()),
        Command::Validate {
            scores,
            threshold,
            no_gate,
        } => validate(&scores, threshold, no_gate),
        Command::Rate(args) => rate(args),
        Command::Aggregate {
            reports,
            weights,
            output,
        } => aggregate(&reports, &weights, output.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn calibrate(
    scores: &Path,
    mean: f64,
    sd: f64,
    scale: f64,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let sample = io::load_calibration_csv(scores)?;
    let table = build_calibration(&sample, &ReferenceDistribution::new(mean, sd)?, scale)?;
    io::write_calibration_table(&table, sink(output)?)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(scores: &Path, threshold: f64, no_gate: bool) -> Result<ExitCode> {
    let series = io::load_indicator_csv(scores, "", "tests")?;
    let cfg = ValidityConfig::new(threshold, !no_gate)?;
    let verdict = gate_test_scores(&series.values(), &cfg)?;
    println!("skewness: {:.6}", verdict.skewness);
    println!("verdict: {}", verdict.reason);
    if let Some(hint) = verdict.hint() {
        eprintln!("hint: {hint}");
    }
    Ok(if verdict.accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// CLI value, else config file value, else default.
struct Layered<'a> {
    file: &'a FlatConfig,
}

impl Layered<'_> {
    fn value<T: std::str::FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key),
        }
    }

    fn required<T: std::str::FromStr>(&self, cli: Option<T>, key: &str) -> Result<T> {
        self.value(cli, key)?
            .ok_or_else(|| Error::Config(format!("missing `--{key}` (flag or config key)")))
    }

    fn flag(&self, cli: bool, key: &str) -> Result<bool> {
        Ok(cli || self.file.flag(key)?)
    }
}

fn rate(args: RateArgs) -> Result<ExitCode> {
    let file = match &args.config {
        Some(p) => FlatConfig::load(p)?,
        None => FlatConfig::default(),
    };
    file.check_keys(RATE_KEYS)?;
    let l = Layered { file: &file };

    let subject: String = l.required(args.subject, "subject")?;
    let tests_path: PathBuf = l.required(args.tests, "tests")?;
    let attendance_path: PathBuf = l.required(args.attendance, "attendance")?;
    let grades_path: Option<PathBuf> = l.value(args.grades, "grades")?;
    let table_path: PathBuf = l.required(args.table, "table")?;
    let output: PathBuf = l.required(args.output, "output")?;

    let defaults = PipelineConfig::default();
    let zipf = ZipfConfig::new(
        l.value(args.alpha, "alpha")?
            .unwrap_or(defaults.zipf.alpha()),
        l.value(args.constant, "constant")?
            .unwrap_or(defaults.zipf.constant()),
        !l.flag(args.no_round_latent, "no-round-latent")?,
    )?;
    let threshold = l
        .value(args.threshold, "threshold")?
        .unwrap_or(defaults.validity.skew_threshold());
    let cfg = PipelineConfig {
        zipf,
        validity: ValidityConfig::new(threshold, !l.flag(args.no_gate, "no-gate")?)?,
        composite: CompositeConfig::new(
            l.value(args.k, "k")?.unwrap_or(defaults.composite.k()),
            BTreeMap::new(),
        )?,
        grades_weight: l.value(args.grades_weight, "grades-weight")?.unwrap_or(0.0),
        coefficient_digits: match l.value(args.coefficient_digits, "coefficient-digits")? {
            Some(0) => None,
            Some(d) => Some(d),
            None => defaults.coefficient_digits,
        },
        fallback_single_indicator: l
            .flag(args.fallback_single_indicator, "fallback-single-indicator")?,
        ..defaults
    };

    let inputs = SubjectInputs {
        tests: io::load_indicator_csv(&tests_path, &subject, "tests")?,
        attendance: io::load_indicator_csv(&attendance_path, &subject, "attendance")?,
        grades: grades_path
            .map(|p| io::load_indicator_csv(&p, &subject, "grades"))
            .transpose()?,
        subject,
    };
    let table = io::load_calibration_table(&table_path)?;

    let outcome = match run_subject(&inputs, &table, &cfg) {
        Ok(o) => o,
        Err(Error::Rejected {
            skewness,
            threshold,
        }) => {
            let path = write_rejection(&inputs.subject, skewness, threshold, &output)?;
            println!("skewness: {skewness:.6}");
            println!("verdict: left-skewed-rejected");
            eprintln!("test scores rejected; details in {}", path.display());
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e),
    };

    eprintln!(
        "test skewness {:.4} ({})",
        outcome.verdict.skewness, outcome.verdict.reason
    );
    for fit in &outcome.fits {
        eprintln!(
            "{}: L = {} * exp({} * x)  (fitted a = {:.6}, b = {:.6}, log R^2 = {:.4})",
            fit.indicator,
            fit.model.scale_a(),
            fit.model.rate_b(),
            fit.fitted.scale_a(),
            fit.fitted.rate_b(),
            fit.r_squared
        );
    }
    for (name, why) in &outcome.dropped {
        eprintln!("{name}: {why}");
    }
    for path in write_outputs(&outcome, &output)? {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn report_subject(spec: &str) -> Result<(String, PathBuf)> {
    if let Some((subject, path)) = spec.split_once('=') {
        return Ok((subject.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(spec);
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("cannot derive a subject from `{spec}`")))?;
    let subject = name
        .strip_suffix(".report.csv")
        .or_else(|| name.strip_suffix(".csv"))
        .unwrap_or(name);
    Ok((subject.to_string(), path))
}

fn aggregate(reports: &[String], weights_path: &Path, output: Option<&Path>) -> Result<ExitCode> {
    let weights = io::load_weights_csv(weights_path)?;
    let mut per_student: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut roster: Option<Vec<String>> = None;
    let mut subjects = Vec::new();
    for spec in reports {
        let (subject, path) = report_subject(spec)?;
        if subjects.contains(&subject) {
            return Err(Error::Config(format!("subject `{subject}` given twice")));
        }
        let ratings = io::load_report_ratings(&path)?;
        let mut ids: Vec<String> = ratings.iter().map(|r| r.0.clone()).collect();
        ids.sort();
        match &roster {
            None => roster = Some(ids),
            Some(r) if *r != ids => {
                return Err(Error::Roster(format!(
                    "report for `{subject}` covers a different cohort"
                )))
            }
            Some(_) => {}
        }
        for (id, r) in ratings {
            per_student
                .entry(id)
                .or_default()
                .insert(subject.clone(), r);
        }
        subjects.push(subject);
    }

    let inputs = per_student
        .iter()
        .map(|(id, rs)| {
            Ok(RatingInput {
                student_id: id.clone(),
                latents: Vec::new(),
                rating: aggregate_subjects(rs, &weights)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = rank_report("overall", subjects, inputs)?;
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|r| (r.student_id.clone(), r.rating, r.rank_position))
        .collect();
    io::write_overall(&rows, sink(output)?)?;
    Ok(ExitCode::SUCCESS)
}
