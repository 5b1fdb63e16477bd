use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use attn_topo_core::attention::{
    read_attn_file, read_attn_file_unvalidated, validate_tensor, write_attn_file, Sample,
};
use attn_topo_core::classifier::{
    classify, evaluate, predict, split, Dataset, EvalReport, LinearModel, TrainOutcome,
};
use attn_topo_core::features::{
    featurize_sample_with, read_feature_csv, sample_diagrams, write_feature_csv, FeatureVector,
    HeadDiagrams,
};
use attn_topo_core::synth::{generate, SynthConfig};
use rayon::prelude::*;

use crate::{ClassifyOptions, Cli, CliError, Command, ExitKind, SharedOptions};

/// Samples between two progress lines.
const PROGRESS_EVERY: usize = 100;

/// File written by `diagrams --consolidated`.
pub const CONSOLIDATED_NAME: &str = "diagrams.txt";

pub fn run(cli: Cli) -> Result<(), CliError> {
    let shared = &cli.shared;
    log(&format!("config {}", shared.echo()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(shared.threads)
        .build()
        .map_err(|e| CliError::new(ExitKind::Usage, format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Synth {
            out,
            samples,
            layers,
            num_heads,
            tokens,
        } => synth(shared, out, *samples, *layers, *num_heads, *tokens),
        Command::Validate { input } => validate(input),
        Command::Diagrams {
            input,
            out,
            consolidated,
        } => diagrams(shared, input, out, *consolidated),
        Command::Featurize { input, out } => featurize(shared, input, out.as_deref()),
        Command::Train {
            csv,
            model,
            classify,
        } => train(shared, csv, model, classify),
        Command::Eval {
            csv,
            model,
            threshold,
        } => eval(csv, model, *threshold),
        Command::Pipeline {
            input,
            features,
            model,
            classify,
        } => pipeline(
            shared,
            input,
            features.as_deref(),
            model.as_deref(),
            classify,
        ),
    })
}

fn log(line: &str) {
    eprintln!("attn-topo: {line}");
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn synth(
    shared: &SharedOptions,
    out: &Path,
    samples: usize,
    layers: usize,
    heads: usize,
    tokens: usize,
) -> Result<(), CliError> {
    log(&format!(
        "synth samples={samples} layers={layers} heads={heads} tokens={tokens}"
    ));
    let data = generate(&SynthConfig {
        samples,
        layers,
        heads,
        tokens,
        seed: shared.seed,
    })?;
    write_attn_file(&data, out)?;
    log(&format!(
        "wrote {} samples to {}",
        data.len(),
        out.display()
    ));
    Ok(())
}

fn validate(input: &Path) -> Result<(), CliError> {
    let samples = read_attn_file_unvalidated(input)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut bad_samples = 0;
    let mut total = 0;
    for s in &samples {
        let violations = validate_tensor(&s.tensor);
        if !violations.is_empty() {
            bad_samples += 1;
            total += violations.len();
        }
        for v in violations {
            writeln!(out, "{}\t{v}", s.id)
                .map_err(|e| CliError::new(ExitKind::Data, e.to_string()))?;
        }
    }
    out.flush()
        .map_err(|e| CliError::new(ExitKind::Data, e.to_string()))?;
    log(&format!(
        "checked {} samples: {total} violations in {bad_samples} samples",
        samples.len()
    ));
    if total > 0 {
        return Err(CliError::new(
            ExitKind::Data,
            format!("{}: {bad_samples} invalid samples", input.display()),
        ));
    }
    Ok(())
}

/// Applies `f` to every sample on the current pool and returns the results in
/// input order. The reported error is the first one in input order, so it does
/// not depend on scheduling.
fn per_sample<T, F>(samples: &[Sample], what: &str, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(&Sample) -> Result<T, CliError> + Sync,
{
    let done = AtomicUsize::new(0);
    let total = samples.len();
    let results: Vec<Result<T, CliError>> = samples
        .par_iter()
        .map(|s| {
            let r = f(s);
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            if finished % PROGRESS_EVERY == 0 {
                log(&format!("{what} {finished}/{total} samples"));
            }
            r
        })
        .collect();
    results.into_iter().collect()
}

fn featurize_all(
    shared: &SharedOptions,
    samples: &[Sample],
) -> Result<Vec<FeatureVector>, CliError> {
    let config = shared.feature_config();
    per_sample(samples, "featurized", |s| {
        featurize_sample_with(s, &config).map_err(CliError::from)
    })
}

fn diagrams(
    shared: &SharedOptions,
    input: &Path,
    out_dir: &Path,
    consolidated: bool,
) -> Result<(), CliError> {
    let samples = read_attn_file(input)?;
    let config = shared.feature_config();
    let all: Vec<HeadDiagrams> = per_sample(&samples, "diagrams for", |s| {
        sample_diagrams(s, &config).map_err(CliError::from)
    })?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let mut records = 0;
    if consolidated {
        let path = out_dir.join(CONSOLIDATED_NAME);
        let mut out = create(&path)?;
        for (s, heads) in samples.iter().zip(&all) {
            for ((layer, head), h0, h1) in heads {
                for dgm in [h0, h1] {
                    writeln!(
                        out,
                        "# sample={} layer={layer} head={head} dim={}",
                        s.id,
                        dgm.dim()
                    )
                    .and_then(|()| dgm.write_text(&mut out))
                    .map_err(|e| CliError::io(&path, e))?;
                    records += 1;
                }
            }
        }
        out.flush().map_err(|e| CliError::io(&path, e))?;
    } else {
        for (index, heads) in all.iter().enumerate() {
            for ((layer, head), h0, h1) in heads {
                for dgm in [h0, h1] {
                    let path = out_dir.join(format!(
                        "sample{index:06}_layer{layer:02}_head{head:02}_dim{}.txt",
                        dgm.dim()
                    ));
                    let mut out = create(&path)?;
                    dgm.write_text(&mut out)
                        .and_then(|()| out.flush())
                        .map_err(|e| CliError::io(&path, e))?;
                    records += 1;
                }
            }
        }
    }
    log(&format!(
        "wrote {records} diagram records for {} samples to {}",
        samples.len(),
        out_dir.display()
    ));
    Ok(())
}

fn featurize(shared: &SharedOptions, input: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let samples = read_attn_file(input)?;
    let rows = featurize_all(shared, &samples)?;
    match out {
        Some(path) => {
            write_feature_csv(create(path)?, &rows)?;
            log(&format!(
                "wrote {} feature rows to {}",
                rows.len(),
                path.display()
            ));
        }
        None => write_feature_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn read_dataset(csv: &Path) -> Result<Dataset, CliError> {
    let file = File::open(csv).map_err(|e| CliError::io(csv, e))?;
    let rows = read_feature_csv(io::BufReader::new(file))?;
    Ok(Dataset::from_feature_vectors(rows)?)
}

fn check_threshold(threshold: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(CliError::new(
            ExitKind::Usage,
            format!("threshold must lie in [0, 1], got {threshold}"),
        ))
    }
}

/// Splits, trains on one part and evaluates on the other.
fn fit_and_report(
    shared: &SharedOptions,
    data: &Dataset,
    classify_opts: &ClassifyOptions,
) -> Result<(TrainOutcome, EvalReport), CliError> {
    check_threshold(classify_opts.threshold)?;
    let (train_set, test_set) = split(data, shared.train_fraction, shared.seed)?;
    log(&format!(
        "split {} samples into {} train and {} test, balance_classes={} threshold={}",
        data.len(),
        train_set.len(),
        test_set.len(),
        classify_opts.balance_classes,
        classify_opts.threshold
    ));
    let outcome = train_set.train(&shared.train_params(classify_opts.balance_classes))?;
    log(&format!(
        "trained: iterations={} final_loss={} converged={}",
        outcome.iterations, outcome.final_loss, outcome.converged
    ));
    let report = report_on(&outcome.model, &test_set, classify_opts.threshold)?;
    Ok((outcome, report))
}

fn report_on(model: &LinearModel, data: &Dataset, threshold: f64) -> Result<EvalReport, CliError> {
    let probs = predict(model, &data.features)?;
    Ok(evaluate(&classify(&probs, threshold), &data.labels)?)
}

fn print_report(report: &EvalReport) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    writeln!(out, "{report}\n{}", report.record())
        .map_err(|e| CliError::new(ExitKind::Data, e.to_string()))
}

fn train(
    shared: &SharedOptions,
    csv: &Path,
    model: &Path,
    classify_opts: &ClassifyOptions,
) -> Result<(), CliError> {
    let data = read_dataset(csv)?;
    let (outcome, report) = fit_and_report(shared, &data, classify_opts)?;
    outcome.model.write(model)?;
    log(&format!("wrote model to {}", model.display()));
    print_report(&report)
}

fn eval(csv: &Path, model: &Path, threshold: f64) -> Result<(), CliError> {
    check_threshold(threshold)?;
    let model = LinearModel::read(model)?;
    let data = read_dataset(csv)?;
    print_report(&report_on(&model, &data, threshold)?)
}

fn pipeline(
    shared: &SharedOptions,
    input: &Path,
    features: Option<&Path>,
    model: Option<&Path>,
    classify_opts: &ClassifyOptions,
) -> Result<(), CliError> {
    let samples = read_attn_file(input)?;
    let rows = featurize_all(shared, &samples)?;
    if let Some(path) = features {
        write_feature_csv(create(path)?, &rows)?;
        log(&format!(
            "wrote {} feature rows to {}",
            rows.len(),
            path.display()
        ));
    }
    let data = Dataset::from_feature_vectors(rows)?;
    let (outcome, report) = fit_and_report(shared, &data, classify_opts)?;
    if let Some(path) = model {
        outcome.model.write(path)?;
        log(&format!("wrote model to {}", path.display()));
    }
    print_report(&report)
}
