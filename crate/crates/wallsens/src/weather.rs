//! Hourly boundary data: a seeded synthetic generator standing in for
//! measured weather, and CSV ingestion with line-numbered errors.
//!
//! The synthetic year superposes a seasonal and a daily sinusoid on the air
//! temperatures, adds Gaussian noise from a fixed seed, and clips a half-sine
//! daytime shortwave profile modulated by the season.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::SampledSignal;

pub const HOURS_PER_YEAR: usize = 8760;
pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Days per month of a non-leap year.
pub const MONTH_DAYS: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Month boundaries in hours from January 1st.
pub fn month_intervals_hours() -> Vec<(f64, f64)> {
    let mut start = 0.0;
    MONTH_DAYS
        .iter()
        .map(|d| {
            let end = start + 24.0 * *d as f64;
            let iv = (start, end);
            start = end;
            iv
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticWeather {
    pub seed: u64,
    pub hours: usize,
    /// K
    pub outside_mean: f64,
    pub outside_seasonal_amplitude: f64,
    pub outside_daily_amplitude: f64,
    pub outside_noise: f64,
    /// Day of year of the warmest outdoor day.
    pub warmest_day: f64,
    /// Hour of the daily outdoor maximum.
    pub warmest_hour: f64,
    pub inside_mean: f64,
    pub inside_seasonal_amplitude: f64,
    pub inside_daily_amplitude: f64,
    pub inside_noise: f64,
    /// W/m², clear-sky noon value at the summer solstice.
    pub shortwave_peak: f64,
    /// Winter-to-summer ratio of the noon shortwave value.
    pub shortwave_winter_ratio: f64,
}

impl Default for SyntheticWeather {
    fn default() -> Self {
        Self {
            seed: 2016,
            hours: HOURS_PER_YEAR,
            outside_mean: 287.15,
            outside_seasonal_amplitude: 6.5,
            outside_daily_amplitude: 4.0,
            outside_noise: 1.0,
            warmest_day: 205.0,
            warmest_hour: 15.0,
            inside_mean: 293.15,
            inside_seasonal_amplitude: 1.5,
            inside_daily_amplitude: 0.5,
            inside_noise: 0.2,
            shortwave_peak: 600.0,
            shortwave_winter_ratio: 0.4,
        }
    }
}

/// Uniformly sampled weather: time in s, shortwave in W/m², temperatures in K.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub t0: f64,
    pub step: f64,
    pub q_sw: Vec<f64>,
    pub t_out: Vec<f64>,
    pub t_in: Vec<f64>,
}

impl WeatherSeries {
    pub fn len(&self) -> usize {
        self.q_sw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_sw.is_empty()
    }

    /// Time of the last sample in s.
    pub fn end(&self) -> f64 {
        self.t0 + self.step * (self.len().saturating_sub(1)) as f64
    }

    pub fn shortwave(&self) -> Result<SampledSignal> {
        SampledSignal::new(self.t0, self.step, self.q_sw.clone())
    }

    pub fn outside(&self) -> Result<SampledSignal> {
        SampledSignal::new(self.t0, self.step, self.t_out.clone())
    }

    pub fn inside(&self) -> Result<SampledSignal> {
        SampledSignal::new(self.t0, self.step, self.t_in.clone())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "q_sw", "T_out", "T_in"])?;
        for i in 0..self.len() {
            let t = self.t0 + self.step * i as f64;
            w.write_record(
                [t, self.q_sw[i], self.t_out[i], self.t_in[i]]
                    .iter()
                    .map(|v| v.to_string()),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `t,q_sw,T_out,T_in`; rejects gaps larger than one sampling step.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = read_table(path, &["t", "q_sw", "T_out", "T_in"])?;
        let t: Vec<f64> = rows.iter().map(|r| r.1[0]).collect();
        let (t0, step) = check_uniform(path, &rows, &t)?;
        Ok(Self {
            t0,
            step,
            q_sw: rows.iter().map(|r| r.1[1]).collect(),
            t_out: rows.iter().map(|r| r.1[2]).collect(),
            t_in: rows.iter().map(|r| r.1[3]).collect(),
        })
    }
}

impl SyntheticWeather {
    pub fn generate(&self) -> Result<WeatherSeries> {
        if self.hours < 2 {
            return invalid("synthetic weather needs at least two hours");
        }
        let noise = |sd: f64| {
            Normal::new(0.0, sd).map_err(|e| Error::InvalidInput(format!("noise level: {e}")))
        };
        let (n_out, n_in) = (noise(self.outside_noise)?, noise(self.inside_noise)?);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut s = WeatherSeries {
            t0: 0.0,
            step: SECONDS_PER_HOUR,
            q_sw: vec![],
            t_out: vec![],
            t_in: vec![],
        };
        for i in 0..self.hours {
            let hour = (i % 24) as f64;
            let day = (i / 24) as f64;
            let season = (2.0 * PI * (day - self.warmest_day) / 365.0).cos();
            let daily = (2.0 * PI * (hour - self.warmest_hour) / 24.0).cos();
            s.t_out.push(
                self.outside_mean
                    + self.outside_seasonal_amplitude * season
                    + self.outside_daily_amplitude * daily
                    + n_out.sample(&mut rng),
            );
            s.t_in.push(
                self.inside_mean
                    + self.inside_seasonal_amplitude * season
                    + self.inside_daily_amplitude * daily
                    + n_in.sample(&mut rng),
            );
            // solstice near day 172; winter noon value is `shortwave_winter_ratio` of summer
            let r = self.shortwave_winter_ratio;
            let factor =
                0.5 * (1.0 + r) + 0.5 * (1.0 - r) * (2.0 * PI * (day - 172.0) / 365.0).cos();
            s.q_sw
                .push((self.shortwave_peak * (PI * (hour - 6.0) / 12.0).sin()).max(0.0) * factor);
        }
        Ok(s)
    }
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Rows of a numeric CSV with a fixed header, tagged by file line number.
pub(crate) fn read_table(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let got: Vec<String> = r
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if got != header {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header '{}', found '{}'",
                header.join(","),
                got.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                parse_error(
                    path,
                    line,
                    format!(
                        "non-numeric field in '{}'",
                        rec.iter().collect::<Vec<_>>().join(",")
                    ),
                )
            })?;
        rows.push((line, vals));
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    Ok(rows)
}

fn check_uniform(path: &Path, rows: &[(usize, Vec<f64>)], t: &[f64]) -> Result<(f64, f64)> {
    if t.len() < 2 {
        return Err(parse_error(path, rows[0].0, "need at least two samples"));
    }
    let step = t[1] - t[0];
    for i in 1..t.len() {
        let d = t[i] - t[i - 1];
        if !(d > 0.0) {
            return Err(parse_error(path, rows[i].0, "time column must increase"));
        }
        if (d - step).abs() > 1e-6 * step {
            let what = if d > step {
                "gap larger than one sampling step"
            } else {
                "irregular sampling step"
            };
            return Err(parse_error(
                path,
                rows[i].0,
                format!("{what}: {d} vs {step}"),
            ));
        }
    }
    Ok((t[0], step))
}

/// Reads a `t,value` series with uniform sampling.
pub fn read_series(path: &Path) -> Result<SampledSignal> {
    let rows = read_table(path, &["t", "value"])?;
    let t: Vec<f64> = rows.iter().map(|r| r.1[0]).collect();
    let (t0, step) = check_uniform(path, &rows, &t)?;
    SampledSignal::new(t0, step, rows.iter().map(|r| r.1[1]).collect())
}

pub fn write_series(path: &Path, t0: f64, step: f64, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(t0 + step * i as f64).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn synthetic_year_round_trips() {
        let w = SyntheticWeather::default().generate().unwrap();
        assert_eq!(w.len(), HOURS_PER_YEAR);
        let f = tempfile::NamedTempFile::new().unwrap();
        w.write_csv(f.path()).unwrap();
        assert_eq!(WeatherSeries::read_csv(f.path()).unwrap(), w);
    }

    #[test]
    fn synthetic_shape() {
        let w = SyntheticWeather::default().generate().unwrap();
        assert!(w.q_sw.iter().all(|&q| (0.0..=600.0).contains(&q)));
        // night hours are dark
        assert!((0..365).all(|d| w.q_sw[24 * d + 3] == 0.0 && w.q_sw[24 * d + 21] == 0.0));
        let july: f64 = w.t_out[24 * 190..24 * 220].iter().sum::<f64>() / 720.0;
        let january: f64 = w.t_out[..720].iter().sum::<f64>() / 720.0;
        assert!(july > january + 8.0);
        assert_eq!(SyntheticWeather::default().generate().unwrap(), w);
        let other = SyntheticWeather {
            seed: 1,
            ..Default::default()
        }
        .generate()
        .unwrap();
        assert_ne!(other.t_out, w.t_out);
    }

    #[test]
    fn months_cover_the_year() {
        let m = month_intervals_hours();
        assert_eq!(m.len(), 12);
        assert_eq!(m[0], (0.0, 744.0));
        assert_eq!(m[11].1, HOURS_PER_YEAR as f64);
    }

    #[test]
    fn series_errors_carry_line_numbers() {
        let f = file("t,value\n0,1\n1,2\n2,oops\n");
        match read_series(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let f = file("t,value\n0,1\n1,2\n3,2\n");
        match read_series(f.path()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("gap"));
            }
            other => panic!("{other:?}"),
        }
        let f = file("t,value\n0,1\n1,2,3\n");
        assert!(matches!(
            read_series(f.path()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(read_series(file("").path()).is_err());
        assert!(read_series(file("t,value\n").path()).is_err());
        assert!(read_series(file("time,v\n0,1\n1,1\n").path()).is_err());
    }

    #[test]
    fn series_round_trip_and_interpolation() {
        let f = tempfile::NamedTempFile::new().unwrap();
        write_series(f.path(), 0.0, 3600.0, &[1.0, 3.0, 2.0]).unwrap();
        let s = read_series(f.path()).unwrap();
        assert_eq!(s.values, vec![1.0, 3.0, 2.0]);
        assert_eq!(s.eval(1800.0), 2.0);
    }
}
