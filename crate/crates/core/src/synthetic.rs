//! Seeded synthetic forecast/actual temperature history for a cold-climate
//! heating season, used when no measured data set is at hand.
//!
//! Both series share the climatology
//! `m(d, h) = base - seasonal * cos(2π (doy - 15) / 365.25) + diurnal * cos(2π (h - 14) / 24)`
//! (coldest in mid-January, warmest at 14:00). The forecast anomaly is
//! `sd * z_f`, where `z_f` is the normalised sum of a day-level AR(1) and an
//! hourly AR(1), each with unit stationary variance. The actual anomaly is
//! `sd * (rho * z_f + sqrt(1 - rho²) * e)` with `e` an independent hourly
//! AR(1), so each hour's standardised (forecast, actual) anomaly pair follows
//! a Gaussian copula with correlation `rho`.

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use rand_distr::{Distribution, StandardNormal};

use crate::seed::{rng, stage_seed};
use crate::weather_data::{
    complete_days, split_heating_seasons, HeatingWindow, ObservedDay, PairedSeries, TemperatureObservation,
    WeatherError, HOURS_PER_DAY,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWeather {
    pub base_c: f64,
    pub seasonal_amplitude_c: f64,
    pub diurnal_amplitude_c: f64,
    /// Standard deviation of the forecast and actual anomalies.
    pub anomaly_sd_c: f64,
    /// Share of anomaly variance carried by the day-level component.
    pub day_share: f64,
    pub day_persistence: f64,
    pub hour_persistence: f64,
    /// Forecast/actual anomaly correlation.
    pub rho: f64,
}

impl Default for SyntheticWeather {
    fn default() -> Self {
        SyntheticWeather {
            base_c: 2.0,
            seasonal_amplitude_c: 12.0,
            diurnal_amplitude_c: 4.0,
            anomaly_sd_c: 3.5,
            day_share: 0.6,
            day_persistence: 0.7,
            hour_persistence: 0.9,
            rho: 0.85,
        }
    }
}

struct Ar1 {
    phi: f64,
    innovation: f64,
    state: f64,
}

impl Ar1 {
    fn new(phi: f64, start: f64) -> Self {
        Ar1 { phi, innovation: (1.0 - phi * phi).sqrt(), state: start }
    }

    fn step(&mut self, e: f64) -> f64 {
        self.state = self.phi * self.state + self.innovation * e;
        self.state
    }
}

impl SyntheticWeather {
    pub fn climatology(&self, t: NaiveDateTime) -> f64 {
        use std::f64::consts::TAU;
        use chrono::Timelike;
        let doy = t.ordinal0() as f64;
        let h = t.hour() as f64;
        self.base_c - self.seasonal_amplitude_c * (TAU * (doy - 15.0) / 365.25).cos()
            + self.diurnal_amplitude_c * (TAU * (h - 14.0) / 24.0).cos()
    }

    /// Hourly records for `days` consecutive days starting at midnight of `start`.
    pub fn generate(&self, start: NaiveDate, days: usize, seed: u64) -> Vec<TemperatureObservation> {
        let mut r = rng(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut r) };
        let mut day_ar = Ar1::new(self.day_persistence, normal());
        let mut hour_ar = Ar1::new(self.hour_persistence, normal());
        let mut err_ar = Ar1::new(self.hour_persistence, normal());
        let (wd, wh) = (self.day_share.sqrt(), (1.0 - self.day_share).sqrt());
        let independent = (1.0 - self.rho * self.rho).sqrt();
        let t0 = start.and_hms_opt(0, 0, 0).expect("midnight exists");

        let mut out = Vec::with_capacity(days * HOURS_PER_DAY);
        let mut day_level = day_ar.state;
        for i in 0..days * HOURS_PER_DAY {
            if i > 0 && i % HOURS_PER_DAY == 0 {
                day_level = day_ar.step(normal());
            }
            let z_hour = if i == 0 { hour_ar.state } else { hour_ar.step(normal()) };
            let e = if i == 0 { err_ar.state } else { err_ar.step(normal()) };
            let z_f = wd * day_level + wh * z_hour;
            let z_a = self.rho * z_f + independent * e;
            let t = t0 + Duration::hours(i as i64);
            let m = self.climatology(t);
            out.push(TemperatureObservation {
                timestamp: t,
                forecast_c: m + self.anomaly_sd_c * z_f,
                actual_c: m + self.anomaly_sd_c * z_a,
            });
        }
        out
    }
}

/// Training history and held-out test days drawn from one synthetic record.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticStudy {
    pub train: PairedSeries,
    pub test_days: Vec<ObservedDay>,
}

/// Four heating seasons of history from November 2016 to the end of March
/// 2020 for training, and `n_test_days` days spread evenly over the
/// 2020/21 season for testing.
pub fn synthetic_study(weather: &SyntheticWeather, n_test_days: usize, seed: u64) -> Result<SyntheticStudy, WeatherError> {
    let start = NaiveDate::from_ymd_opt(2016, 11, 1).expect("valid date");
    let end = NaiveDate::from_ymd_opt(2021, 4, 1).expect("valid date");
    let days = (end - start).num_days() as usize;
    let records = weather.generate(start, days, stage_seed(seed, "synthetic-weather"));
    let series = PairedSeries { observations: records };
    let train_end = NaiveDate::from_ymd_opt(2020, 7, 1).expect("valid date");
    let (train, test) = split_heating_seasons(&series, train_end, HeatingWindow::default())?;
    let all_test = complete_days(&test);
    if all_test.is_empty() || n_test_days == 0 {
        return Err(WeatherError::EmptySplit("test"));
    }
    let n = n_test_days.min(all_test.len());
    let stride = all_test.len() as f64 / n as f64;
    let test_days = (0..n).map(|i| all_test[((i as f64 + 0.5) * stride) as usize].clone()).collect();
    Ok(SyntheticStudy { train, test_days })
}
