//! Historical forecast/actual outdoor-temperature records: parsing, hourly
//! resampling, heating-season splits and per-day views.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};

/// Sanity bound on any temperature reading, in °C.
pub const TEMPERATURE_BOUND_C: f64 = 60.0;
pub const HOURS_PER_DAY: usize = 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeatherError {
    #[error("header lacks required column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("no data rows")]
    EmptyInput,
    #[error("timestamps are not strictly increasing at record {0}")]
    UnsortedInput(usize),
    #[error("no records to interpolate")]
    AllGaps,
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("a day forecast needs {HOURS_PER_DAY} values, got {0}")]
    WrongLength(usize),
    #[error("CSV error: {0}")]
    Csv(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemperatureObservation {
    pub timestamp: NaiveDateTime,
    pub forecast_c: f64,
    pub actual_c: f64,
}

/// Time-ordered observations on the hourly grid (gaps allowed between runs).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairedSeries {
    pub observations: Vec<TemperatureObservation>,
}

impl PairedSeries {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.observations.iter().map(|o| (o.forecast_c, o.actual_c)).collect()
    }
}

fn truncate_to_hour(t: NaiveDateTime) -> NaiveDateTime {
    t.date().and_hms_opt(t.hour(), 0, 0).expect("valid hour")
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    ["%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d %H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(truncate_to_hour)
}

pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M").to_string()
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(input)
}

fn column_indices<R: Read>(reader: &mut csv::Reader<R>, names: &[&str]) -> Result<Vec<usize>, WeatherError> {
    let header = reader.headers().map_err(|e| WeatherError::Csv(e.to_string()))?.clone();
    names
        .iter()
        .map(|&name| header.iter().position(|h| h == name).ok_or_else(|| WeatherError::MissingColumn(name.into())))
        .collect()
}

fn temperature_field(record: &csv::StringRecord, idx: usize, name: &str, row: usize) -> Result<f64, WeatherError> {
    let malformed = |reason: String| WeatherError::MalformedRow { row, reason };
    let text = record.get(idx).ok_or_else(|| malformed(format!("missing field '{name}'")))?;
    let x: f64 = text.parse().map_err(|_| malformed(format!("'{text}' is not a number in '{name}'")))?;
    if !x.is_finite() || x.abs() > TEMPERATURE_BOUND_C {
        return Err(malformed(format!("{name} = {x} outside [-{TEMPERATURE_BOUND_C}, {TEMPERATURE_BOUND_C}]")));
    }
    Ok(x)
}

/// Parses `timestamp,forecast_c,actual_c` CSV. Row numbers in errors count data
/// rows from 1.
pub fn parse_temperature_csv<R: Read>(input: R) -> Result<Vec<TemperatureObservation>, WeatherError> {
    let mut reader = csv_reader(input);
    let idx = column_indices(&mut reader, &["timestamp", "forecast_c", "actual_c"])?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| WeatherError::MalformedRow { row, reason: e.to_string() })?;
        let ts_text = record.get(idx[0]).unwrap_or("");
        let timestamp = parse_timestamp(ts_text)
            .ok_or_else(|| WeatherError::MalformedRow { row, reason: format!("bad timestamp '{ts_text}'") })?;
        out.push(TemperatureObservation {
            timestamp,
            forecast_c: temperature_field(&record, idx[1], "forecast_c", row)?,
            actual_c: temperature_field(&record, idx[2], "actual_c", row)?,
        });
    }
    if out.is_empty() {
        return Err(WeatherError::EmptyInput);
    }
    Ok(out)
}

pub fn write_temperature_csv<W: Write>(records: &[TemperatureObservation], out: W) -> Result<(), WeatherError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| WeatherError::Csv(e.to_string());
    w.write_record(["timestamp", "forecast_c", "actual_c"]).map_err(err)?;
    for o in records {
        w.write_record([format_timestamp(o.timestamp), o.forecast_c.to_string(), o.actual_c.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| WeatherError::Csv(e.to_string()))
}

/// A span between two consecutive records that was too wide to interpolate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resampled {
    pub series: PairedSeries,
    pub gaps: Vec<Gap>,
}

/// Linearly interpolates both channels onto the hourly grid. Spans longer than
/// `max_gap_h` hours keep their endpoints but get no interior hours.
pub fn resample_hourly(records: &[TemperatureObservation], max_gap_h: u32) -> Result<Resampled, WeatherError> {
    if records.is_empty() {
        return Err(WeatherError::AllGaps);
    }
    let max_gap_h = i64::from(max_gap_h.max(1));
    let mut observations = vec![records[0]];
    let mut gaps = Vec::new();
    for (i, pair) in records.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let span = (b.timestamp - a.timestamp).num_hours();
        if b.timestamp <= a.timestamp {
            return Err(WeatherError::UnsortedInput(i + 1));
        }
        if span > max_gap_h {
            gaps.push(Gap { start: a.timestamp, end: b.timestamp });
        } else {
            for h in 1..span {
                let t = h as f64 / span as f64;
                observations.push(TemperatureObservation {
                    timestamp: a.timestamp + Duration::hours(h),
                    forecast_c: a.forecast_c + t * (b.forecast_c - a.forecast_c),
                    actual_c: a.actual_c + t * (b.actual_c - a.actual_c),
                });
            }
        }
        observations.push(b);
    }
    Ok(Resampled { series: PairedSeries { observations }, gaps })
}

/// Where merged observations came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MergeReport {
    pub from_primary: usize,
    pub from_secondary: usize,
    /// Instants covered by both sources, resolved in favour of the primary.
    pub overlapping: usize,
}

/// Unions two records by timestamp, preferring `primary` where both exist.
pub fn merge_sources(
    primary: &[TemperatureObservation],
    secondary: &[TemperatureObservation],
) -> (Vec<TemperatureObservation>, MergeReport) {
    let mut by_time: BTreeMap<NaiveDateTime, TemperatureObservation> =
        secondary.iter().map(|o| (o.timestamp, *o)).collect();
    let mut report = MergeReport::default();
    for o in primary {
        if by_time.insert(o.timestamp, *o).is_some() {
            report.overlapping += 1;
        }
    }
    report.from_primary = primary.iter().map(|o| o.timestamp).collect::<std::collections::BTreeSet<_>>().len();
    report.from_secondary = by_time.len() - report.from_primary;
    (by_time.into_values().collect(), report)
}

/// Annual heating window `[start, end)` given as (month, day); wraps the new
/// year when `start` is later in the calendar than `end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HeatingWindow {
    pub start: (u32, u32),
    pub end: (u32, u32),
}

impl Default for HeatingWindow {
    fn default() -> Self {
        HeatingWindow { start: (11, 1), end: (4, 1) }
    }
}

impl HeatingWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        let md = (date.month(), date.day());
        if self.start <= self.end {
            md >= self.start && md < self.end
        } else {
            md >= self.start || md < self.end
        }
    }
}

/// Keeps heating-window observations and splits them at `train_end`
/// (training strictly before, test on or after).
pub fn split_heating_seasons(
    series: &PairedSeries,
    train_end: NaiveDate,
    window: HeatingWindow,
) -> Result<(PairedSeries, PairedSeries), WeatherError> {
    let (mut train, mut test) = (PairedSeries::default(), PairedSeries::default());
    for o in series.observations.iter().filter(|o| window.contains(o.timestamp.date())) {
        if o.timestamp.date() < train_end {
            train.observations.push(*o);
        } else {
            test.observations.push(*o);
        }
    }
    if train.is_empty() {
        return Err(WeatherError::EmptySplit("training"));
    }
    if test.is_empty() {
        return Err(WeatherError::EmptySplit("test"));
    }
    Ok((train, test))
}

/// Next-day hourly forecast, hour 0 first.
#[derive(Clone, Debug, PartialEq)]
pub struct DayForecast {
    pub date: NaiveDate,
    pub temps_c: [f64; HOURS_PER_DAY],
}

impl DayForecast {
    pub fn new(date: NaiveDate, temps_c: &[f64]) -> Result<Self, WeatherError> {
        let temps_c: [f64; HOURS_PER_DAY] =
            temps_c.try_into().map_err(|_| WeatherError::WrongLength(temps_c.len()))?;
        Ok(DayForecast { date, temps_c })
    }
}

/// Parses `hour,forecast_c` CSV with hours 0..=23 each exactly once.
pub fn parse_day_forecast_csv<R: Read>(input: R, date: NaiveDate) -> Result<DayForecast, WeatherError> {
    let mut reader = csv_reader(input);
    let idx = column_indices(&mut reader, &["hour", "forecast_c"])?;
    let mut temps = [f64::NAN; HOURS_PER_DAY];
    let mut count = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| WeatherError::MalformedRow { row, reason: e.to_string() })?;
        let hour_text = record.get(idx[0]).unwrap_or("");
        let hour: usize = hour_text
            .parse()
            .ok()
            .filter(|&h| h < HOURS_PER_DAY)
            .ok_or_else(|| WeatherError::MalformedRow { row, reason: format!("bad hour '{hour_text}'") })?;
        if !temps[hour].is_nan() {
            return Err(WeatherError::MalformedRow { row, reason: format!("hour {hour} repeated") });
        }
        temps[hour] = temperature_field(&record, idx[1], "forecast_c", row)?;
        count += 1;
    }
    match count {
        0 => Err(WeatherError::EmptyInput),
        HOURS_PER_DAY => Ok(DayForecast { date, temps_c: temps }),
        n => Err(WeatherError::WrongLength(n)),
    }
}

/// A complete day of paired forecasts and outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedDay {
    pub forecast: DayForecast,
    pub actual_c: [f64; HOURS_PER_DAY],
}

/// Groups a series into the calendar days that have all 24 hours.
pub fn complete_days(series: &PairedSeries) -> Vec<ObservedDay> {
    let mut days: BTreeMap<NaiveDate, [Option<(f64, f64)>; HOURS_PER_DAY]> = BTreeMap::new();
    for o in &series.observations {
        let slot = days.entry(o.timestamp.date()).or_insert([None; HOURS_PER_DAY]);
        slot[o.timestamp.hour() as usize] = Some((o.forecast_c, o.actual_c));
    }
    days.into_iter()
        .filter_map(|(date, hours)| {
            let mut forecast = [0.0; HOURS_PER_DAY];
            let mut actual = [0.0; HOURS_PER_DAY];
            for (h, v) in hours.iter().enumerate() {
                let (f, a) = (*v)?;
                forecast[h] = f;
                actual[h] = a;
            }
            Some(ObservedDay { forecast: DayForecast { date, temps_c: forecast }, actual_c: actual })
        })
        .collect()
}
