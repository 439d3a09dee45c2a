use std::fs;
use std::path::Path;

use gridhedonic::econ::{
    coefficient_json, estimate, format_table, hedonic_index, hedonic_observations, partition_meta,
    residual_trend_series, write_coefficient_csv, write_index_csv, write_trend_csv, Control, FeDim,
    ModelSpec, TableColumn, Treatment,
};
use gridhedonic::grid::load_waves;
use gridhedonic::ledger::{
    build_event_samples, ingest_file, summary_stats, write_panel, write_rejections, write_summary,
    IngestOptions, MapMetadata, Panel, PanelOptions, WinsorBounds,
};
use gridhedonic::synth::{generate_market, recovery_report, write_recovery_csv};
use gridhedonic::{AnnouncementGroup, DgpConfig, EventSample, FitResult, RateTable, Transaction};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::OutDir;
use crate::{EstimateArgs, IndexArgs, InputArgs, PanelArgs, RecoverArgs, SimulateArgs};

const INDEX_CONTROLS: [Control; 2] = [Control::LogLotSize, Control::Premium];
const TREND_CONTROLS: [Control; 3] = [Control::LogLotSize, Control::Premium, Control::LogBtc];

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

fn winsor(disabled: bool) -> Option<WinsorBounds> {
    (!disabled).then(WinsorBounds::default)
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<DgpConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            require(p)?;
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => DgpConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::in_file(path.unwrap_or(Path::new("<default config>")), e))?;
    Ok(config)
}

struct Loaded {
    transactions: Vec<Transaction>,
    rejections: Vec<gridhedonic::ledger::Rejection>,
    groups: Vec<AnnouncementGroup>,
    rates: RateTable,
}

fn load(inputs: &InputArgs) -> Result<Loaded, CliError> {
    for p in [&inputs.transactions, &inputs.waves, &inputs.rates]
        .into_iter()
        .chain(inputs.map.as_ref())
    {
        require(p)?;
    }
    let waves = load_waves(&inputs.waves, inputs.map_size)
        .map_err(|e| CliError::in_file(&inputs.waves, e))?;
    let metadata = match &inputs.map {
        Some(p) => MapMetadata::load(p).map_err(|e| CliError::in_file(p, e))?,
        None => MapMetadata::from_waves(&waves, inputs.map_size),
    };
    let mut options = IngestOptions::default();
    if !inputs.creators.is_empty() {
        options.creator_addresses = inputs.creators.iter().cloned().collect();
    }
    let rates = RateTable::load(&inputs.rates).map_err(|e| CliError::in_file(&inputs.rates, e))?;
    let ingested = ingest_file(&inputs.transactions, &metadata, &options)
        .map_err(|e| CliError::in_file(&inputs.transactions, e))?;
    log::info!(
        "ingested {} transactions, rejected {}",
        ingested.transactions.len(),
        ingested.rejections.len()
    );
    let groups =
        AnnouncementGroup::from_waves(&waves).map_err(|e| CliError::in_file(&inputs.waves, e))?;
    Ok(Loaded {
        transactions: ingested.transactions,
        rejections: ingested.rejections,
        groups,
        rates,
    })
}

fn build_panel(args: &PanelArgs) -> Result<Panel, CliError> {
    let loaded = load(&args.inputs)?;
    let options = PanelOptions {
        window_days: args.window_days,
        groups: Some(args.groups),
        winsor: winsor(args.inputs.no_winsor),
        ..PanelOptions::default()
    };
    let mut panel = build_event_samples(
        &loaded.transactions,
        &loaded.groups,
        &loaded.rates,
        &options,
    )?;
    let mut rejections = loaded.rejections;
    rejections.append(&mut panel.rejections);
    panel.rejections = rejections;
    log::info!("panel has {} samples", panel.samples.len());
    Ok(panel)
}

/// Writes `waves.json`, `transactions.csv`, `rates.csv` and `truth.json`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let market = generate_market(&config)?;
    let out = OutDir::create(&args.out)?;
    out.write("waves.json", |w| market.write_waves(w))?;
    out.write("transactions.csv", |w| market.write_transactions(w))?;
    out.write("rates.csv", |w| market.write_rates(w))?;
    out.write("truth.json", |w| market.write_truth(w))?;
    Ok(())
}

/// Writes `panel.csv`, `rejections.csv` and `summary.csv`.
pub fn cmd_panel(args: &PanelArgs) -> Result<(), CliError> {
    let panel = build_panel(args)?;
    let out = OutDir::create(&args.out)?;
    out.write("panel.csv", |w| write_panel(w, &panel.samples))?;
    out.write("rejections.csv", |w| write_rejections(w, &panel.rejections))?;
    out.write("summary.csv", |w| {
        write_summary(w, &summary_stats(&panel.samples))
    })?;
    Ok(())
}

struct Job<'a> {
    name: String,
    title: String,
    spec: ModelSpec,
    samples: &'a [EventSample],
}

struct Table<'a> {
    title: &'static str,
    jobs: Vec<Job<'a>>,
}

fn with_time_fe(mut spec: ModelSpec, fe: FeDim) -> ModelSpec {
    for d in &mut spec.fe_dimensions {
        if matches!(d, FeDim::Day | FeDim::Week) {
            *d = fe;
        }
    }
    spec
}

fn short(t: Treatment) -> &'static str {
    match t {
        Treatment::DiscreteNear => "near",
        Treatment::ContinuousLogDistance => "logdist",
    }
}

fn battery<'a>(
    args: &EstimateArgs,
    all: &'a [EventSample],
    meta: Option<&'a (Vec<EventSample>, Vec<EventSample>)>,
) -> Result<Vec<Table<'a>>, CliError> {
    let treatments: Vec<Treatment> = match args.treatment {
        Some(t) => vec![t.into()],
        None => vec![Treatment::DiscreteNear, Treatment::ContinuousLogDistance],
    };
    let fe: FeDim = args.fe.into();
    let headline = |t| with_time_fe(ModelSpec::full(t), fe);
    let job = |name: String, title: String, spec: ModelSpec, samples| Job {
        name,
        title,
        spec: spec.with_se(args.se.into()),
        samples,
    };
    let mut tables = Vec::new();
    if !args.multi {
        if treatments.contains(&Treatment::DiscreteNear) {
            let mut jobs = Vec::new();
            for col in 1..=3 {
                let spec = ModelSpec::discrete_column(col)?;
                jobs.push(job(
                    format!("table3_col{col}"),
                    format!("({col})"),
                    spec,
                    all,
                ));
            }
            jobs.push(job(
                "table3_col4".into(),
                "(4)".into(),
                headline(Treatment::DiscreteNear),
                all,
            ));
            tables.push(Table {
                title: "Discrete DiD",
                jobs,
            });
        }
        if treatments.contains(&Treatment::ContinuousLogDistance) {
            let spec = ModelSpec::continuous_column(1)?;
            tables.push(Table {
                title: "Continuous DiD",
                jobs: vec![
                    job("table4_col1".into(), "(1)".into(), spec, all),
                    job(
                        "table4_col2".into(),
                        "(2)".into(),
                        headline(Treatment::ContinuousLogDistance),
                        all,
                    ),
                ],
            });
        }
    }
    tables.push(Table {
        title: "Triple difference",
        jobs: treatments
            .iter()
            .map(|&t| {
                job(
                    format!("table5_{}", short(t)),
                    short(t).to_string(),
                    headline(t).with_multi(),
                    all,
                )
            })
            .collect(),
    });
    if let Some((pre, post)) = meta {
        let mut jobs = Vec::new();
        for &t in &treatments {
            for (part, samples) in [("pre", pre), ("post", post)] {
                jobs.push(job(
                    format!("table6_{}_{part}", short(t)),
                    format!("{} {part}", short(t)),
                    headline(t),
                    samples.as_slice(),
                ));
            }
        }
        tables.push(Table {
            title: "Meta partition",
            jobs,
        });
    }
    Ok(tables)
}

/// Outcome of an estimation batch.
#[derive(Debug, Clone)]
pub struct EstimateSummary {
    /// Console tables, also written to `report.txt`.
    pub report: String,
    pub estimated: Vec<String>,
    /// `(specification, message)` for specifications that could not be fitted.
    pub failed: Vec<(String, String)>,
}

/// Fits every specification in the battery, writing `<name>.csv` and
/// `<name>.json` per fitted specification plus `estimates.json` and
/// `report.txt`. A specification that cannot be fitted is reported and
/// skipped; the command fails only when none can be fitted.
pub fn cmd_estimate(args: &EstimateArgs) -> Result<EstimateSummary, CliError> {
    let panel = build_panel(&args.panel)?;
    let meta = args.meta_cut.map(|cut| partition_meta(&panel.samples, cut));
    let tables = battery(args, &panel.samples, meta.as_ref())?;
    let out = OutDir::create(&args.panel.out)?;

    let mut combined = Vec::new();
    let mut report = String::new();
    let mut summary = EstimateSummary {
        report: String::new(),
        estimated: Vec::new(),
        failed: Vec::new(),
    };
    for table in &tables {
        let fits: Vec<Result<FitResult, String>> = table
            .jobs
            .iter()
            .map(|j| estimate(j.samples, &j.spec).map_err(|e| e.to_string()))
            .collect();
        for (job, fit) in table.jobs.iter().zip(&fits) {
            match fit {
                Ok(fit) => {
                    let value = coefficient_json(&job.name, &job.spec, fit);
                    out.write(&format!("{}.csv", job.name), |w| {
                        write_coefficient_csv(w, fit)
                    })?;
                    out.write(&format!("{}.json", job.name), |w| {
                        serde_json::to_writer_pretty(w, &value)
                    })?;
                    combined.push(value);
                    summary.estimated.push(job.name.clone());
                }
                Err(msg) => {
                    log::warn!("{}: {msg}", job.name);
                    combined.push(json!({ "name": job.name, "spec": job.spec, "error": msg }));
                    summary.failed.push((job.name.clone(), msg.clone()));
                }
            }
        }
        let columns: Vec<TableColumn<'_>> = table
            .jobs
            .iter()
            .zip(&fits)
            .map(|(j, f)| TableColumn {
                title: j.title.clone(),
                fit: f.as_ref().map_err(Clone::clone),
            })
            .collect();
        report.push_str(table.title);
        report.push('\n');
        report.push_str(&format_table(&columns));
        report.push('\n');
    }
    out.write("estimates.json", |w| {
        serde_json::to_writer_pretty(w, &Value::Array(combined))
    })?;
    out.write_text("report.txt", &report)?;
    summary.report = report;
    if summary.estimated.is_empty() {
        return Err(CliError::Numerical(format!(
            "no specification could be estimated; first failure: {}",
            summary
                .failed
                .first()
                .map(|(n, m)| format!("{n}: {m}"))
                .unwrap_or_default()
        )));
    }
    Ok(summary)
}

/// Writes `index.csv` from all cleaned transactions.
pub fn cmd_index(args: &IndexArgs) -> Result<(), CliError> {
    let loaded = load(&args.inputs)?;
    let (obs, skipped) = hedonic_observations(
        &loaded.transactions,
        &loaded.rates,
        winsor(args.inputs.no_winsor),
    )?;
    if skipped > 0 {
        log::warn!("{skipped} transactions lack a rate and are left out of the index");
    }
    let series = hedonic_index(&obs, args.fe.into(), &INDEX_CONTROLS)?;
    let out = OutDir::create(&args.out)?;
    out.write("index.csv", |w| write_index_csv(w, &series))?;
    Ok(())
}

/// Writes `trend.csv`.
pub fn cmd_trend(args: &PanelArgs) -> Result<(), CliError> {
    let panel = build_panel(args)?;
    let rows = residual_trend_series(&panel.samples, &TREND_CONTROLS, args.window_days)?;
    let out = OutDir::create(&args.out)?;
    out.write("trend.csv", |w| write_trend_csv(w, &rows))?;
    Ok(())
}

/// Writes `recovery.csv` and `recovery.json`.
pub fn cmd_recover(args: &RecoverArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let treatment = args.treatment.map(Into::into).unwrap_or(config.treatment);
    let spec = if args.multi {
        ModelSpec::triple(treatment)
    } else {
        ModelSpec::full(treatment)
    }
    .with_se(args.se.into());
    let report = recovery_report(&config, &spec, args.replications, winsor(args.no_winsor))?;
    for (seed, msg) in &report.failures {
        log::warn!("replication with seed {seed} failed: {msg}");
    }
    let out = OutDir::create(&args.out)?;
    out.write("recovery.csv", |w| write_recovery_csv(w, &report))?;
    out.write("recovery.json", |w| {
        serde_json::to_writer_pretty(w, &report)
    })?;
    for r in &report.rows {
        println!(
            "{:<24} truth {:>8.4}  mean {:>8.4}  sd {:>7.4}  coverage {:.3}",
            r.parameter, r.truth, r.mean_estimate, r.empirical_sd, r.coverage
        );
    }
    Ok(())
}
