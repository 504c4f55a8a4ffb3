//! Subcommand implementations. Each command assembles a raw configuration
//! from its flags (and an optional config file), resolves it to concrete
//! values, runs the corresponding library calls, and writes artifacts that
//! embed the resolved configuration.

use std::fs;
use std::path::Path;

use singdetect::{
    fit as fit_points, generate as generate_points, kde_filter, knn_filter, load_points_path,
    save_points_path, trace_zero_set, Dataset, DetectionModel, FilterReport, FilterSpec,
    FitOutcome, FitReport, PointSet,
};

use crate::artifacts::{self, FilterArtifact, FitArtifact};
use crate::config::{self, FilterChoice, PipelineConfig, ResolvedConfig};
use crate::svg::{self, SvgScene};
use crate::{
    CliError, FilterArgs, FilterFlags, FitArgs, FitFlags, GenFlags, GenerateArgs, PipelineArgs,
    ReportArgs, TraceArgs,
};

impl GenFlags {
    fn apply(self, raw: &mut PipelineConfig) {
        raw.curve = self.curve;
        raw.domain = self.domain;
        raw.batches = self.batches;
        raw.grid_side = self.grid_side;
        raw.batch_size = self.batch_size;
        raw.tube_width = self.tube_width;
        raw.decay = self.decay;
        raw.outlier_fraction = self.outlier_fraction;
        raw.seed = self.seed;
    }
}

impl FilterFlags {
    fn apply(self, raw: &mut PipelineConfig) {
        raw.filter = self.filter;
        raw.gamma = self.gamma;
        raw.k = self.k;
        raw.bandwidth = self.bandwidth;
    }
}

impl FitFlags {
    fn apply(self, raw: &mut PipelineConfig) {
        raw.basis = self.basis;
        raw.weights = self.weights;
    }
}

pub fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let mut raw = PipelineConfig::default();
    args.gen.apply(&mut raw);
    let config = ResolvedConfig::resolve(&raw)?;

    let spec = config.curve_spec()?;
    let batched = generate_points(&spec, &config.gen_params())?;
    let dataset = Dataset::Batched(batched);
    save_points_path(&args.out, &dataset)?;
    println!(
        "wrote {} ({} points in {} batches)",
        args.out.display(),
        dataset.total_points(),
        config.batches + 1
    );
    Ok(())
}

pub fn filter(args: FilterArgs) -> Result<(), CliError> {
    let mut raw = PipelineConfig::default();
    args.filter.apply(&mut raw);
    raw.input = Some(args.input.clone());
    let config = ResolvedConfig::resolve(&raw)?;

    let dataset = load_points_path(&args.input)?;
    let merged = dataset.merged();
    let report = run_filter(&config, &merged)?;
    println!(
        "kept {} of {} points (threshold {:.6e})",
        report.kept.len(),
        merged.len(),
        report.threshold
    );
    artifacts::write_json(&args.out, &FilterArtifact { filter: report, config })
}

pub fn fit(args: FitArgs) -> Result<(), CliError> {
    let mut raw = PipelineConfig::default();
    args.filter.apply(&mut raw);
    args.fit.apply(&mut raw);
    raw.input = Some(args.input.clone());
    raw.strict = args.strict.then_some(true);
    let config = ResolvedConfig::resolve(&raw)?;

    let dataset = load_points_path(&args.input)?;
    let outcome = run_fit(&config, &dataset)?;
    emit_warnings(&outcome.report);

    artifacts::write_json(
        &args.out,
        &FitArtifact { fit: outcome.report.clone(), config: config.clone() },
    )?;
    if let Some(table_path) = &args.table {
        let table = artifacts::coefficient_table(&config.parsed_basis()?, &outcome.report);
        write_text(table_path, &table)?;
    }
    println!(
        "fit {} terms, residual {:.6e}, eigen gap {:.6e}",
        outcome.report.coefficients.len(),
        outcome.report.residual,
        outcome.report.eigen_gap
    );
    check_strict(&config, &outcome.report)
}

pub fn trace(args: TraceArgs) -> Result<(), CliError> {
    let artifact = artifacts::read_fit_artifact(&args.fit)?;
    let basis = artifact.fit.basis.ok_or_else(|| {
        CliError::Validation(format!(
            "{} does not record a basis, so the model cannot be evaluated",
            args.fit.display()
        ))
    })?;
    let model = DetectionModel::new(basis, artifact.fit.coefficients.clone())?;

    let mut config = artifact.config;
    if let Some(resolution) = args.resolution {
        config.resolution = resolution;
    }
    if let Some(domain) = &args.domain {
        config.domain = config::parse_domain(domain)?;
    }
    let rect = config.rect_domain()?;
    let traced = trace_zero_set(|p| model.evaluate(p), &rect, config.resolution)?;

    match args.out.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_text(&args.out, &artifacts::curve_csv(&traced))?,
        Some("svg") => {
            let input_points = match &args.points {
                Some(path) => Some(load_points_path(path)?.merged()),
                None => None,
            };
            let kept = match &args.kept {
                Some(path) => Some(artifacts::read_filter_artifact(path)?.filter.kept),
                None => None,
            };
            let scene = SvgScene {
                domain: rect,
                polylines: &traced.polylines,
                input_points: input_points.as_ref().map(|s| s.points.as_slice()),
                kept_points: kept.as_ref().map(|s| s.points.as_slice()),
                comment: Some(config_comment(&config)?),
            };
            write_text(&args.out, &svg::render(&scene))?;
        }
        _ => {
            return Err(CliError::Validation(format!(
                "output {} must end in .csv or .svg",
                args.out.display()
            )))
        }
    }
    println!(
        "traced {} component(s), {} vertices, to {}",
        traced.component_count(),
        traced.total_vertices(),
        args.out.display()
    );
    Ok(())
}

pub fn pipeline(args: PipelineArgs) -> Result<(), CliError> {
    let mut flags = PipelineConfig::default();
    args.gen.apply(&mut flags);
    args.filter.apply(&mut flags);
    args.fit.apply(&mut flags);
    flags.input = args.input;
    flags.resolution = args.resolution;
    flags.out_dir = args.out_dir;
    flags.strict = args.strict.then_some(true);

    let base = match &args.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    let config = ResolvedConfig::resolve(&base.overlay(flags))?;
    run_pipeline(&config)
}

fn run_pipeline(config: &ResolvedConfig) -> Result<(), CliError> {
    let out_dir = &config.out_dir;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    artifacts::write_json(&out_dir.join("config.json"), config)?;

    let dataset = match &config.input {
        Some(path) => load_points_path(path)?,
        None => {
            let spec = config.curve_spec()?;
            let batched = generate_points(&spec, &config.gen_params())?;
            let dataset = Dataset::Batched(batched);
            save_points_path(&out_dir.join("data.csv"), &dataset)?;
            dataset
        }
    };
    let total = dataset.total_points();

    let outcome = run_fit(config, &dataset)?;
    emit_warnings(&outcome.report);

    if let Some(filter_report) = &outcome.filter {
        println!("filter: kept {} of {} points", filter_report.kept.len(), total);
        artifacts::write_json(
            &out_dir.join("filter.json"),
            &FilterArtifact { filter: filter_report.clone(), config: config.clone() },
        )?;
    }

    artifacts::write_json(
        &out_dir.join("fit.json"),
        &FitArtifact { fit: outcome.report.clone(), config: config.clone() },
    )?;
    let basis = config.parsed_basis()?;
    let table = artifacts::coefficient_table(&basis, &outcome.report);
    write_text(&out_dir.join("table.txt"), &table)?;
    print!("{table}");

    let rect = config.rect_domain()?;
    let traced = trace_zero_set(|p| outcome.model.evaluate(p), &rect, config.resolution)?;
    write_text(&out_dir.join("curve.csv"), &artifacts::curve_csv(&traced))?;

    let merged = dataset.merged();
    let scene = SvgScene {
        domain: rect,
        polylines: &traced.polylines,
        input_points: Some(&merged.points),
        kept_points: outcome.filter.as_ref().map(|r| r.kept.points.as_slice()),
        comment: Some(config_comment(config)?),
    };
    write_text(&out_dir.join("curve.svg"), &svg::render(&scene))?;

    println!("trace: {} component(s) at resolution {}", traced.component_count(), config.resolution);
    println!("artifacts in {}", out_dir.display());
    check_strict(config, &outcome.report)
}

pub fn report(args: ReportArgs) -> Result<(), CliError> {
    let artifact = artifacts::read_fit_artifact(&args.fit)?;
    let basis = artifact.fit.basis.ok_or_else(|| {
        CliError::Validation(format!(
            "{} does not record a basis, so terms cannot be compared",
            args.fit.display()
        ))
    })?;
    let kind = config::parse_curve(&args.exact)?;
    let exact = kind.implicit_coefficients(basis).ok_or_else(|| {
        CliError::Validation(format!(
            "curve `{}` has no exact representation in basis {basis}",
            args.exact
        ))
    })?;
    let exact = to_unit(&exact)?;

    let table = artifacts::comparison_table(&basis, &artifact.fit.coefficients, &exact);
    match &args.out {
        Some(path) => write_text(path, &table)?,
        None => print!("{table}"),
    }
    Ok(())
}

fn run_filter(config: &ResolvedConfig, points: &PointSet) -> Result<FilterReport, CliError> {
    match config.filter {
        FilterChoice::None => Err(CliError::Validation(
            "filtering requires --filter kde or --filter knn".into(),
        )),
        FilterChoice::Kde => Ok(kde_filter(points, &config.kde_params()?)?),
        FilterChoice::Knn => Ok(knn_filter(points, &config.knn_params())?),
    }
}

fn run_fit(config: &ResolvedConfig, dataset: &Dataset) -> Result<FitOutcome, CliError> {
    let basis = config.parsed_basis()?;
    let weights = config.parsed_weights()?;
    let spec = match config.filter {
        FilterChoice::None => None,
        FilterChoice::Kde => Some(FilterSpec::Kde(config.kde_params()?)),
        FilterChoice::Knn => Some(FilterSpec::Knn(config.knn_params())),
    };
    Ok(fit_points(dataset, basis, &weights, spec.as_ref())?)
}

fn emit_warnings(report: &FitReport) {
    for warning in &report.warnings {
        eprintln!("warning: {}", artifacts::describe_warning(warning));
    }
}

fn check_strict(config: &ResolvedConfig, report: &FitReport) -> Result<(), CliError> {
    if config.strict && !report.warnings.is_empty() {
        return Err(CliError::Degenerate(format!(
            "fit produced {} warning(s) and --strict is set",
            report.warnings.len()
        )));
    }
    Ok(())
}

fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn config_comment(config: &ResolvedConfig) -> Result<String, CliError> {
    serde_json::to_string(config)
        .map_err(|e| CliError::Validation(format!("cannot serialize configuration: {e}")))
}

fn to_unit(v: &[f64]) -> Result<Vec<f64>, CliError> {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm <= f64::EPSILON {
        return Err(CliError::Validation("exact coefficient vector is zero".into()));
    }
    Ok(v.iter().map(|c| c / norm).collect())
}
