use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use cyberstc::compression::{read_features_csv, write_features_csv, write_features_jsonl};
use cyberstc::eval::{confusion_from_strs, CurvePair, MetricsReport};
use cyberstc::predictor::{
    direction_samples, fit_classifier, fit_regression, predict_session, regression_samples,
    write_predictions_csv, FitReport, Head, LabeledSample, Model, SampleTarget,
};
use cyberstc::stream::{parse_stream_line, StreamProcessor};
use cyberstc::synth::{gen_session, heading_change, CourseKind, CourseSpec, SicknessModel};
use cyberstc::trajectory::{
    read_discomfort_csv, read_trajectory_csv, write_discomfort_csv, write_trajectory_csv,
};
use cyberstc::{dp_compress, stc_compress, windowed_features, Tid, Trajectory};
use serde::Serialize;

use crate::config::{ConfigLayer, RunConfig};
use crate::{
    Algorithm, CliError, Command, CompressArgs, EvalArgs, FeatureFormat, FeaturesArgs, GenArgs,
    HeadArg, Io, PredictArgs, Staged, StreamArgs, TrainArgs, EXIT_DATA, EXIT_OK,
};

pub(crate) fn dispatch(command: Command, io: &mut Io<'_>) -> Result<i32, CliError> {
    match command {
        Command::Gen(a) => gen(a, io),
        Command::Compress(a) => compress(a, io),
        Command::Features(a) => features(a, io),
        Command::Train(a) => train(a, io),
        Command::Predict(a) => predict(a, io),
        Command::Eval(a) => eval(a, io),
        Command::Stream(a) => stream(a, io),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: cyberstc::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_reader(open(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Reads a trajectory and enforces the ordering invariants.
fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let traj = in_file(path, read_trajectory_csv(open(path)?))?;
    if let Err(v) = traj.validate() {
        return Err(CliError::Data(format!(
            "{}: invalid trajectory: {}",
            path.display(),
            v[0]
        )));
    }
    Ok(traj)
}

fn write_or_print(
    staged: &mut Staged,
    path: Option<&Path>,
    bytes: Vec<u8>,
    io: &mut Io<'_>,
) -> Result<(), CliError> {
    match path {
        Some(p) => staged.add(p, bytes),
        None => io
            .stdout
            .write_all(&bytes)
            .map_err(|e| CliError::Data(e.to_string()))?,
    }
    Ok(())
}

fn out(io: &mut Io<'_>, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    io.stdout
        .write_fmt(text)
        .map_err(|e| CliError::Data(e.to_string()))
}

fn gen(a: GenArgs, io: &mut Io<'_>) -> Result<i32, CliError> {
    let cfg = a.config.resolve()?;
    let course: CourseSpec = read_json(&a.spec)?;
    let sickness = match &a.sickness {
        Some(p) => read_json(p)?,
        None => SicknessModel::default(),
    };
    let session = gen_session(&course, &sickness, cfg.window_s)?;
    let mut traj = Vec::new();
    write_trajectory_csv(&mut traj, session.trajectory.points())?;
    let mut reports = Vec::new();
    write_discomfort_csv(&mut reports, &session.reports)?;
    let mut staged = Staged::default();
    staged.add(&a.trajectory, traj);
    staged.add(&a.reports, reports);
    staged.commit()?;

    let points = session.trajectory.points();
    let duration =
        session.trajectory.last_t().unwrap_or(0.0) - session.trajectory.first_t().unwrap_or(0.0);
    out(
        io,
        format_args!("points {}\nduration_s {duration}\n", points.len()),
    )?;
    if course.kind == CourseKind::Maze {
        out(io, format_args!("turns {}\n", course.turn_count))?;
    }
    out(
        io,
        format_args!(
            "heading_change_rad {:.3}\nreports {}\n",
            heading_change(points),
            session.reports.len()
        ),
    )?;
    Ok(EXIT_OK)
}

fn compress(a: CompressArgs, io: &mut Io<'_>) -> Result<i32, CliError> {
    let cfg = a.config.resolve()?;
    let traj = load_trajectory(&a.input)?;
    let points = traj.points();
    let result = match a.algorithm {
        Algorithm::Stc => stc_compress(points, &cfg.compression)?,
        Algorithm::Dp => dp_compress(points, &cfg.compression)?,
    };
    let rate = result.rate()?;
    if let Some(path) = &a.output {
        let kept: Vec<_> = result.kept.iter().map(|&i| points[i].clone()).collect();
        let mut bytes = Vec::new();
        write_trajectory_csv(&mut bytes, &kept)?;
        let mut staged = Staged::default();
        staged.add(path, bytes);
        staged.commit()?;
    }
    out(
        io,
        format_args!(
            "total,removed,rate\n{},{},{rate}\n",
            result.total_count, result.removed_count
        ),
    )?;
    Ok(EXIT_OK)
}

fn features(a: FeaturesArgs, io: &mut Io<'_>) -> Result<i32, CliError> {
    let cfg = a.config.resolve()?;
    let traj = load_trajectory(&a.input)?;
    let f = windowed_features(&traj, cfg.window_s, &cfg.compression)?;
    let mut bytes = Vec::new();
    match a.format {
        FeatureFormat::Csv => write_features_csv(&mut bytes, &f)?,
        FeatureFormat::Jsonl => write_features_jsonl(&mut bytes, &f)?,
    }
    let mut staged = Staged::default();
    write_or_print(&mut staged, a.output.as_deref(), bytes, io)?;
    staged.commit()?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct TrainSummary {
    head: &'static str,
    sessions: usize,
    samples: usize,
    train_len: usize,
    test_len: usize,
    train_loss: f64,
    test_loss: Option<f64>,
    epochs: usize,
    /// Held-out direction metrics for a classifier.
    test_confusion: Option<cyberstc::eval::ConfusionReport>,
}

fn train(a: TrainArgs, io: &mut Io<'_>) -> Result<i32, CliError> {
    if a.features.len() != a.reports.len() {
        return Err(CliError::Usage(format!(
            "{} --features files but {} --reports files; give one of each per session",
            a.features.len(),
            a.reports.len()
        )));
    }
    let flags = ConfigLayer {
        hidden: a.hidden,
        seed: a.seed,
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        split_fraction: a.split_fraction,
        ..a.config.layers()?.0
    };
    let file = a.config.layers()?.1;

    let mut sessions = Vec::new();
    for (fp, rp) in a.features.iter().zip(&a.reports) {
        let f = in_file(fp, read_features_csv(open(fp)?))?;
        let r = in_file(rp, read_discomfort_csv(open(rp)?))?;
        sessions.push((fp, f, r));
    }
    // the window recorded in the feature rows backs up unset settings
    let inferred = ConfigLayer {
        window_s: sessions
            .iter()
            .find_map(|(_, f, _)| f.first())
            .map(|w| w.t1 - w.t0),
        ..Default::default()
    };
    let cfg = RunConfig::resolve(&[&flags, &file, &inferred])?;
    let mut samples: Vec<LabeledSample> = Vec::new();
    for (fp, f, r) in &sessions {
        if let Some(w) = f
            .iter()
            .find(|w| ((w.t1 - w.t0) - cfg.window_s).abs() > 1e-6)
        {
            return Err(CliError::Data(format!(
                "{}: window {} spans {} s, expected {} s",
                fp.display(),
                w.window_index,
                w.t1 - w.t0,
                cfg.window_s
            )));
        }
        let s = match a.head {
            HeadArg::Regression => regression_samples(f, r),
            HeadArg::Classifier => direction_samples(f, r),
        };
        samples.extend(in_file(fp, s)?);
    }

    let mut fit: FitReport = match a.head {
        HeadArg::Regression => fit_regression(&samples, cfg.hidden, &cfg.training)?,
        HeadArg::Classifier => fit_classifier(&samples, cfg.hidden, &cfg.training)?,
    };
    fit.model.provenance.features = Some(cfg.feature_provenance());

    let test_confusion = match a.head {
        HeadArg::Classifier if !fit.test_samples.is_empty() => {
            let mut labels = Vec::new();
            let mut predicted = Vec::new();
            for s in &fit.test_samples {
                if let SampleTarget::Direction(d) = s.target {
                    labels.push(d.as_str());
                    predicted.push(fit.model.classify_input(s.features)?.direction.as_str());
                }
            }
            Some(confusion_from_strs(&labels, &predicted)?.report())
        }
        _ => None,
    };
    let summary = TrainSummary {
        head: fit.model.head().name(),
        sessions: sessions.len(),
        samples: samples.len(),
        train_len: fit.train_len,
        test_len: fit.test_len,
        train_loss: fit.train_loss,
        test_loss: fit.test_loss,
        epochs: cfg.training.epochs,
        test_confusion,
    };

    let mut staged = Staged::default();
    staged.add(&a.model, fit.model.to_json()?.into_bytes());
    if let Some(path) = &a.metrics {
        let mut json =
            serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?;
        json.push('\n');
        staged.add(path, json.into_bytes());
    }
    staged.commit()?;

    out(
        io,
        format_args!(
            "split train {} test {}\n",
            summary.train_len, summary.test_len
        ),
    )?;
    out(io, format_args!("train_loss {}\n", summary.train_loss))?;
    match summary.test_loss {
        Some(l) => out(io, format_args!("test_loss {l}\n"))?,
        None => out(io, format_args!("test_loss none\n"))?,
    }
    if let Some(c) = &summary.test_confusion {
        out(io, format_args!("test_accuracy {}\n", c.global))?;
    }
    Ok(EXIT_OK)
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    in_file(path, Model::load(path))
}

/// Flags, then config file, then the model's recorded feature settings.
fn resolve_with_model(
    args: &crate::ConfigArgs,
    model: Option<&Model>,
) -> Result<RunConfig, CliError> {
    let (flags, file) = args.layers()?;
    let from_model = model
        .and_then(|m| m.provenance.features.as_ref())
        .map(ConfigLayer::from_provenance)
        .unwrap_or_default();
    RunConfig::resolve(&[&flags, &file, &from_model])
}

fn predict(a: PredictArgs, io: &mut Io<'_>) -> Result<i32, CliError> {
    let model = load_model(&a.model)?;
    if model.head() != Head::Regression {
        return Err(cyberstc::Error::HeadMismatch {
            expected: "regression",
            found: model.head().name(),
        }
        .into());
    }
    let cfg = resolve_with_model(&a.config, Some(&model))?;
    let traj = load_trajectory(&a.input)?;
    let f = windowed_features(&traj, cfg.window_s, &cfg.compression)?;
    let curve = predict_session(&model, &f, a.anchor)?;
    let mut bytes = Vec::new();
    write_predictions_csv(&mut bytes, &curve)?;
    let mut staged = Staged::default();
    write_or_print(&mut staged, a.output.as_deref(), bytes, io)?;
    staged.commit()?;
    Ok(EXIT_OK)
}

fn read_labels(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && matches!(line, "label" | "direction")) {
            continue;
        }
        out.push(line.to_string());
    }
    Ok(out)
}

const CURVE_ALIGN_TOL: f64 = 1e-6;

fn eval(a: EvalArgs, io: &mut Io<'_>) -> Result<i32, CliError> {
    let report = match (&a.reported, &a.predicted, &a.labels, &a.predictions) {
        (Some(rp), Some(pp), None, None) => {
            let reported = in_file(rp, read_discomfort_csv(open(rp)?))?;
            let predicted = in_file(pp, cyberstc::predictor::read_predictions_csv(open(pp)?))?;
            if reported.len() != predicted.len() {
                return Err(CliError::Data(format!(
                    "{} reported points but {} predicted points",
                    reported.len(),
                    predicted.len()
                )));
            }
            if let Some((r, p)) = reported
                .iter()
                .zip(&predicted)
                .find(|(r, p)| (r.t - p.t).abs() > CURVE_ALIGN_TOL)
            {
                return Err(CliError::Data(format!(
                    "reported t {} does not match predicted t {}",
                    r.t, p.t
                )));
            }
            let pair = CurvePair::new(
                reported.iter().map(|r| r.t).collect(),
                reported.iter().map(|r| r.score as f64).collect(),
                predicted.iter().map(|p| p.score).collect(),
            )?;
            MetricsReport::for_curves(&pair)
        }
        (None, None, Some(lp), Some(pp)) => {
            let labels = read_labels(lp)?;
            let predictions = read_labels(pp)?;
            MetricsReport::for_confusion(&confusion_from_strs(&labels, &predictions)?)
        }
        _ => {
            return Err(CliError::Usage(
                "give either --reported with --predicted, or --labels with --predictions".into(),
            ))
        }
    };
    let mut staged = Staged::default();
    write_or_print(
        &mut staged,
        a.output.as_deref(),
        report.to_json()?.into_bytes(),
        io,
    )?;
    staged.commit()?;
    Ok(EXIT_OK)
}

fn stream(a: StreamArgs, io: &mut Io<'_>) -> Result<i32, CliError> {
    let model = a.model.as_deref().map(load_model).transpose()?;
    let cfg = resolve_with_model(&a.config, model.as_ref())?;
    let mut processor = StreamProcessor::new(cfg.window_s, cfg.compression, model, a.anchor)?;
    let tid = Tid::new(&a.tid);
    let mut rejected = 0usize;
    let mut line = String::new();
    let mut line_no = 0u64;
    loop {
        line.clear();
        let read = io
            .stdin
            .read_line(&mut line)
            .map_err(|e| CliError::Data(format!("stdin: {e}")))?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let pushed = parse_stream_line(&line, &tid).and_then(|p| match p {
            Some(point) => processor.push(point),
            None => Ok(Vec::new()),
        });
        match pushed {
            Ok(records) => {
                for r in records {
                    out(io, format_args!("{}\n", r.to_line()))?;
                }
                io.stdout
                    .flush()
                    .map_err(|e| CliError::Data(format!("stdout: {e}")))?;
            }
            Err(e) => {
                rejected += 1;
                let _ = writeln!(io.stderr, "error: line {line_no}: {e}");
            }
        }
    }
    if let Some(r) = processor.finish()? {
        out(io, format_args!("{}\n", r.to_line()))?;
    }
    let _ = io.stdout.flush();
    Ok(if rejected == 0 { EXIT_OK } else { EXIT_DATA })
}
