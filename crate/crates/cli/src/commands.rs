use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{NaiveDate, NaiveTime};
use ebts_core::config::{CaseConfig, ScenarioConfig};
use ebts_core::copula::{fit_paired, FamilyOutcome, FittedCopula};
use ebts_core::ebts_model::{
    build_deterministic_lp, build_stochastic_lp, solve_schedule, write_building_csv, write_schedule_csv,
    ScheduleSolution,
};
use ebts_core::evaluation::{compare_methods, generate_scenarios, write_comparison_csv, write_comparison_long_csv};
use ebts_core::scenario_gen::{write_elbow_csv, write_sample_pool_csv, write_scenarios_csv, ScenarioSet};
use ebts_core::synthetic::{synthetic_study, SyntheticWeather};
use ebts_core::weather_data::{
    complete_days, parse_day_forecast_csv, parse_temperature_csv, resample_hourly, split_heating_seasons,
    write_temperature_csv, HeatingWindow, ObservedDay, PairedSeries, TemperatureObservation,
};
use ebts_lp::SolveOptions;

use crate::failure::{Failure, DATA};
use crate::manifest::RunManifest;
use crate::{Command, Common, ScenarioArgs};

/// Output directory plus the manifest being filled in.
struct Run {
    out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.outputs.push(path);
        Ok(())
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::FitCopula { common, .. }
        | Command::Schedule { common, .. }
        | Command::Evaluate { common, .. }
        | Command::SynthWeather { common, .. } => common,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::FitCopula { .. } => "fit-copula",
        Command::Schedule { .. } => "schedule",
        Command::Evaluate { .. } => "evaluate",
        Command::SynthWeather { .. } => "synth-weather",
    }
}

fn prepare_out(common: &Common) -> Result<(), Failure> {
    let out = &common.out;
    if out.exists() {
        if !out.is_dir() {
            return Err(Failure::usage(format!("{} exists and is not a directory", out.display())));
        }
        let non_empty = std::fs::read_dir(out)
            .map_err(|e| Failure::data(format!("cannot read {}: {e}", out.display())))?
            .next()
            .is_some();
        if non_empty && !common.force {
            return Err(Failure::usage(format!("{} is not empty; pass --force to overwrite", out.display())));
        }
    }
    std::fs::create_dir_all(out).map_err(|e| Failure::data(format!("cannot create {}: {e}", out.display())))
}

pub(crate) fn dispatch(cmd: Command) -> i32 {
    let common = common(&cmd).clone();
    if common.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return crate::failure::USAGE;
    }
    if let Err(f) = prepare_out(&common) {
        eprintln!("error: {f}");
        return f.code;
    }
    let mut run = Run { out: common.out.clone(), manifest: RunManifest::new(command_name(&cmd)) };
    run.manifest.param("threads", common.threads.map_or("auto".to_string(), |n| n.to_string()));
    let start = Instant::now();

    let result = match common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cmd, &mut run)),
            Err(e) => Err(Failure::new(crate::failure::NUMERIC, format!("cannot start thread pool: {e}"))),
        },
        None => execute(cmd, &mut run),
    };

    let code = match &result {
        Ok(()) => 0,
        Err(f) => f.code,
    };
    run.manifest.exit_code = code;
    run.manifest.error = result.as_ref().err().map(|f| f.message.clone());
    run.manifest.duration_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = run.manifest.write(&run.out) {
        eprintln!("warning: could not write run manifest: {e}");
    }
    if let Err(f) = result {
        eprintln!("error: {f}");
    }
    code
}

fn execute(cmd: Command, run: &mut Run) -> Result<(), Failure> {
    match cmd {
        Command::FitCopula { data, train_end, max_gap_hours, .. } => fit_copula(&data, train_end, max_gap_hours, run),
        Command::Schedule { model, config, forecast, date, scenario, deterministic, .. } => {
            schedule(&model, &config, &forecast, date, &scenario, deterministic, run)
        }
        Command::Evaluate { model, config, test_days, scenario, .. } => evaluate(&model, &config, &test_days, &scenario, run),
        Command::SynthWeather { n_test_days, seed, .. } => synth_weather(n_test_days, seed, run),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))
}

fn with_path(path: &Path) -> impl Fn(Failure) -> Failure + '_ {
    move |f| Failure::new(f.code, format!("{}: {}", path.display(), f.message))
}

fn read_records(path: &Path) -> Result<Vec<TemperatureObservation>, Failure> {
    parse_temperature_csv(open(path)?).map_err(|e| with_path(path)(e.into()))
}

fn load_model(path: &Path) -> Result<FittedCopula, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    FittedCopula::from_document(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn load_case(path: &Path, args: Option<&ScenarioArgs>) -> Result<(CaseConfig, ScenarioConfig), Failure> {
    let cfg = CaseConfig::load(path).map_err(|e| with_path(path)(e.into()))?;
    cfg.to_case().map_err(|e| with_path(path)(e.into()))?;
    let mut settings = cfg.scenarios.clone();
    if let Some(a) = args {
        if let Some(n) = a.samples {
            settings.samples = n;
        }
        if let Some(k) = a.k {
            settings.k = k;
        }
    }
    if settings.samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    Ok((cfg, settings))
}

fn csv<E: Into<Failure>>(r: Result<(), E>) -> Result<(), Failure> {
    r.map_err(Into::into)
}

fn fit_copula(data: &Path, train_end: Option<NaiveDate>, max_gap: u32, run: &mut Run) -> Result<(), Failure> {
    run.manifest.input("data", data);
    run.manifest.param("max_gap_hours", max_gap);
    if let Some(d) = train_end {
        run.manifest.param("train_end", d);
    }
    let records = read_records(data)?;
    let resampled = resample_hourly(&records, max_gap)?;
    if !resampled.gaps.is_empty() {
        eprintln!("warning: {} gaps longer than {max_gap} h left unfilled", resampled.gaps.len());
    }
    let window = HeatingWindow::default();
    let series = match train_end {
        Some(end) => split_heating_seasons(&resampled.series, end, window)?.0,
        None => PairedSeries {
            observations: resampled
                .series
                .observations
                .iter()
                .filter(|o| window.contains(o.timestamp.date()))
                .copied()
                .collect(),
        },
    };
    if series.observations.is_empty() {
        return Err(Failure::data(format!("{}: no records inside the heating season", data.display())));
    }
    let model = fit_paired(&series.pairs())?;
    let doc = model.to_document()?;
    run.write("model.toml", |w| w.write_all(doc.as_bytes()).map_err(|e| Failure::data(e.to_string())))?;
    run.write("bic_table.csv", |w| write_bic_table(&model, w))?;

    println!("fitted {} pairs; selected {} copula", series.observations.len(), model.family());
    for s in &model.bic_table {
        match &s.outcome {
            FamilyOutcome::Fitted { bic, .. } => println!("  {:<9} BIC {bic:.3}", s.family.to_string()),
            FamilyOutcome::Skipped { reason } => println!("  {:<9} skipped: {reason}", s.family.to_string()),
        }
    }
    Ok(())
}

fn write_bic_table(model: &FittedCopula, w: &mut dyn Write) -> Result<(), Failure> {
    let err = |e: std::io::Error| Failure::data(e.to_string());
    writeln!(w, "family,log_likelihood,bic,status").map_err(err)?;
    for s in &model.bic_table {
        match &s.outcome {
            FamilyOutcome::Fitted { log_likelihood, bic } => {
                let status = if s.family == model.family() { "selected" } else { "fitted" };
                writeln!(w, "{},{log_likelihood},{bic},{status}", s.family).map_err(err)?
            }
            FamilyOutcome::Skipped { .. } => writeln!(w, "{},,,skipped", s.family).map_err(err)?,
        }
    }
    Ok(())
}

fn schedule(
    model_path: &Path,
    config: &Path,
    forecast_path: &Path,
    date: Option<NaiveDate>,
    args: &ScenarioArgs,
    deterministic: bool,
    run: &mut Run,
) -> Result<(), Failure> {
    run.manifest.input("model", model_path);
    run.manifest.input("forecast", forecast_path);
    run.manifest.config_path = Some(config.to_path_buf());
    run.manifest.seed = Some(args.seed);
    run.manifest.param("deterministic", deterministic);

    let model = load_model(model_path)?;
    let (cfg, settings) = load_case(config, Some(args))?;
    let case = cfg.to_case()?;
    run.manifest.param("samples", settings.samples);
    run.manifest.param("k", settings.k);
    let forecast = parse_day_forecast_csv(open(forecast_path)?, date.unwrap_or_default())
        .map_err(|e| with_path(forecast_path)(e.into()))?;

    let set = if deterministic {
        ScenarioSet::singleton(forecast.temps_c)
    } else {
        let plan = generate_scenarios(&model, &forecast, &settings, args.seed)?;
        run.write("sample_pool.csv", |w| csv(write_sample_pool_csv(&plan.pool, w)))?;
        if let Some(elbow) = &plan.elbow {
            run.write("elbow.csv", |w| csv(write_elbow_csv(elbow, w)))?;
        }
        plan.set
    };
    run.write("scenarios.csv", |w| csv(write_scenarios_csv(&set, w)))?;

    let case_ref = &case;
    let (lp, index) =
        if deterministic { build_deterministic_lp(case_ref, &forecast.temps_c)? } else { build_stochastic_lp(case_ref, &set)? };
    let start = Instant::now();
    let sched = solve_schedule(&case, &lp, &index, &SolveOptions::default())?;
    let solve_seconds = start.elapsed().as_secs_f64();

    run.write("schedule.csv", |w| csv(write_schedule_csv(&sched, w)))?;
    run.write("buildings.csv", |w| csv(write_building_csv(&sched, w)))?;
    let summary = summary_rows(&sched, deterministic, lp.num_vars(), lp.num_constraints());
    run.write("summary.csv", |w| {
        let err = |e: std::io::Error| Failure::data(e.to_string());
        writeln!(w, "quantity,value").map_err(err)?;
        for (k, v) in &summary {
            writeln!(w, "{k},{v}").map_err(err)?;
        }
        Ok(())
    })?;

    for warning in &sched.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "{} schedule: {} scenario(s), {} variables, expected cost {:.2}, solved in {:.3} s",
        if deterministic { "deterministic" } else { "stochastic" },
        set.len(),
        lp.num_vars(),
        sched.expected_cost,
        solve_seconds
    );
    Ok(())
}

fn summary_rows(sched: &ScheduleSolution, deterministic: bool, vars: usize, rows: usize) -> Vec<(&'static str, String)> {
    let expect = |f: &dyn Fn(&ebts_core::ebts_model::CostBreakdown) -> f64| -> f64 {
        sched.scenarios.iter().map(|d| d.probability * f(&d.cost)).sum()
    };
    vec![
        ("method", if deterministic { "deterministic" } else { "stochastic" }.to_string()),
        ("scenarios", sched.scenarios.len().to_string()),
        ("expected_cost", sched.expected_cost.to_string()),
        ("energy_cost", expect(&|c| c.energy).to_string()),
        ("reserve_revenue", expect(&|c| c.reserve_revenue).to_string()),
        ("deviation_penalty", expect(&|c| c.deviation_penalty).to_string()),
        ("objective", sched.objective_value.to_string()),
        ("lp_variables", vars.to_string()),
        ("lp_constraints", rows.to_string()),
        ("simplex_iterations", sched.iterations.to_string()),
    ]
}

fn evaluate(model_path: &Path, config: &Path, days_path: &Path, args: &ScenarioArgs, run: &mut Run) -> Result<(), Failure> {
    run.manifest.input("model", model_path);
    run.manifest.input("test_days", days_path);
    run.manifest.config_path = Some(config.to_path_buf());
    run.manifest.seed = Some(args.seed);

    let model = load_model(model_path)?;
    let (cfg, settings) = load_case(config, Some(args))?;
    let case = cfg.to_case()?;
    run.manifest.param("samples", settings.samples);
    run.manifest.param("k", settings.k);
    let records = read_records(days_path)?;
    let days = complete_days(&PairedSeries { observations: records });
    if days.is_empty() {
        return Err(Failure::new(DATA, format!("{}: no complete 24-hour test days", days_path.display())));
    }
    run.manifest.param("test_days", days.len());

    let report = compare_methods(&model, &case, &days, &settings, args.seed, &SolveOptions::default())?;
    run.write("comparison.csv", |w| csv(write_comparison_csv(&report, w)))?;
    run.write("comparison_long.csv", |w| csv(write_comparison_long_csv(&report, w)))?;

    for warning in report.comfort_warnings() {
        eprintln!("warning: {warning}");
    }
    let seconds = |f: &dyn Fn(&ebts_core::evaluation::DayComparison) -> f64| report.days.iter().map(f).sum::<f64>();
    println!("{} test days", report.days.len());
    println!(
        "  stochastic:    mean realised cost {:.2}, mean in-sample cost {:.2}, planning time {:.3} s",
        report.mean_stochastic_cost,
        report.mean_stochastic_in_sample,
        seconds(&|d| d.stochastic.planning_seconds)
    );
    println!(
        "  deterministic: mean realised cost {:.2}, mean in-sample cost {:.2}, planning time {:.3} s",
        report.mean_deterministic_cost,
        report.mean_deterministic_in_sample,
        seconds(&|d| d.deterministic.planning_seconds)
    );
    Ok(())
}

fn day_records(days: &[ObservedDay]) -> Vec<TemperatureObservation> {
    days.iter()
        .flat_map(|d| {
            (0..24).map(move |h| TemperatureObservation {
                timestamp: d.forecast.date.and_time(NaiveTime::from_hms_opt(h, 0, 0).expect("valid hour")),
                forecast_c: d.forecast.temps_c[h as usize],
                actual_c: d.actual_c[h as usize],
            })
        })
        .collect()
}

fn synth_weather(n_test_days: usize, seed: u64, run: &mut Run) -> Result<(), Failure> {
    run.manifest.seed = Some(seed);
    run.manifest.param("n_test_days", n_test_days);
    if n_test_days == 0 {
        return Err(Failure::usage("--n-test-days must be at least 1"));
    }
    let study = synthetic_study(&SyntheticWeather::default(), n_test_days, seed)?;
    run.write("history.csv", |w| csv(write_temperature_csv(&study.train.observations, w)))?;
    run.write("test_days.csv", |w| csv(write_temperature_csv(&day_records(&study.test_days), w)))?;
    let first = &study.test_days[0];
    run.write("forecast.csv", |w| {
        let err = |e: std::io::Error| Failure::data(e.to_string());
        writeln!(w, "hour,forecast_c").map_err(err)?;
        for (h, t) in first.forecast.temps_c.iter().enumerate() {
            writeln!(w, "{h},{t}").map_err(err)?;
        }
        Ok(())
    })?;
    println!(
        "wrote {} training hours and {} test days; forecast.csv holds {}",
        study.train.observations.len(),
        study.test_days.len(),
        first.forecast.date
    );
    Ok(())
}
