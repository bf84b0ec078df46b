//! Daily precipitation ingestion: ECA&D-style station files, the yearly
//! completeness rule, greedy declustering, and block panels.
//!
//! Data lines carry `STAID, SOUID, DATE, RR, Q_RR`, where `RR` is in tenths of
//! a millimetre (`-9999` for missing) and `Q_RR` is 0 (valid), 1 (suspect) or
//! 9 (missing). Any line whose first non-blank character is not a digit is a
//! header line.

use std::collections::HashSet;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::Group;
use crate::trend::SamplePanel;

pub const MISSING_RR: i32 = -9999;
pub const DEFAULT_MAX_MISSING: u32 = 10;
pub const DEFAULT_BLOCK_YEARS: u32 = 5;

const NAME_PREFIX: &str = "series of station ";
const NAME_SUFFIX: &str = " (STAID";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Valid,
    Suspect,
    Missing,
}

impl Quality {
    pub fn code(self) -> u8 {
        match self {
            Quality::Valid => 0,
            Quality::Suspect => 1,
            Quality::Missing => 9,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Quality::Valid),
            1 => Some(Quality::Suspect),
            9 => Some(Quality::Missing),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub source_id: u32,
    /// Raw amount in tenths of a millimetre, or [`MISSING_RR`].
    pub rr_tenths: i32,
    pub quality: Quality,
}

impl DailyRecord {
    /// Amount in mm; `None` for missing or suspect days.
    pub fn value_mm(&self) -> Option<f64> {
        (self.rr_tenths != MISSING_RR && self.quality == Quality::Valid)
            .then(|| f64::from(self.rr_tenths) / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailySeries {
    pub station_id: u32,
    pub station_name: String,
    records: Vec<DailyRecord>,
}

impl DailySeries {
    /// Dates must increase strictly and amounts be `>= 0` or [`MISSING_RR`].
    pub fn new(station_id: u32, station_name: String, records: Vec<DailyRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.rr_tenths < 0 && r.rr_tenths != MISSING_RR {
                return Err(Error::Format {
                    line: i + 1,
                    msg: format!("negative amount {}", r.rr_tenths),
                });
            }
            if i > 0 && r.date <= records[i - 1].date {
                return Err(Error::Format {
                    line: i + 1,
                    msg: format!("date {} does not follow {}", r.date, records[i - 1].date),
                });
            }
        }
        Ok(Self {
            station_id,
            station_name,
            records,
        })
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    /// Valid `(date, mm)` pairs with dates in `first_year..=last_year`.
    pub fn valid_days(&self, first_year: i32, last_year: i32) -> Vec<(NaiveDate, f64)> {
        self.records
            .iter()
            .filter(|r| (first_year..=last_year).contains(&r.date.year()))
            .filter_map(|r| r.value_mm().map(|v| (r.date, v)))
            .collect()
    }

    /// Writes the series back in the input format.
    pub fn to_eca_string(&self) -> String {
        let mut out = String::new();
        if !self.station_name.is_empty() {
            let _ = writeln!(
                out,
                "This is the blended {NAME_PREFIX}{}{NAME_SUFFIX}: {})",
                self.station_name, self.station_id
            );
        }
        out.push_str("STAID, SOUID,    DATE,   RR, Q_RR\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>6},{:>6},{},{:>5},{:>5}",
                self.station_id,
                r.source_id,
                r.date.format("%Y%m%d"),
                r.rr_tenths,
                r.quality.code()
            );
        }
        out
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, what: &str, line: usize) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} '{}'", field.trim()),
    })
}

fn station_name_from_header(line: &str) -> Option<String> {
    let start = line.find(NAME_PREFIX)? + NAME_PREFIX.len();
    let rest = &line[start..];
    let end = rest.find(NAME_SUFFIX)?;
    Some(rest[..end].trim().to_string())
}

/// Parses a station file. Line numbers in errors are 1-based file lines.
pub fn parse_daily(bytes: &[u8]) -> Result<DailySeries> {
    let text = String::from_utf8_lossy(bytes);
    let mut station: Option<u32> = None;
    let mut name = String::new();
    let mut records: Vec<DailyRecord> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_start();
        if !trimmed.starts_with(|c: char| c.is_ascii_digit()) {
            if name.is_empty() {
                if let Some(n) = station_name_from_header(raw) {
                    name = n;
                }
            }
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 5 comma-separated fields, found {}", fields.len()),
            });
        }
        let staid: u32 = parse_field(fields[0], "STAID", line)?;
        let souid: u32 = parse_field(fields[1], "SOUID", line)?;
        let date_str = fields[2].trim();
        let date = NaiveDate::parse_from_str(date_str, "%Y%m%d")
            .ok()
            .filter(|_| date_str.len() == 8)
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("invalid DATE '{date_str}'"),
            })?;
        let rr: i32 = parse_field(fields[3], "RR", line)?;
        if rr < 0 && rr != MISSING_RR {
            return Err(Error::Parse {
                line,
                msg: format!("negative RR {rr}"),
            });
        }
        let q: u8 = parse_field(fields[4], "Q_RR", line)?;
        let quality = Quality::from_code(q).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown Q_RR code {q}"),
        })?;

        match station {
            None => station = Some(staid),
            Some(id) if id != staid => {
                return Err(Error::Format {
                    line,
                    msg: format!("STAID {staid} differs from {id} on earlier lines"),
                })
            }
            Some(_) => {}
        }
        if let Some(prev) = records.last() {
            if date <= prev.date {
                return Err(Error::Format {
                    line,
                    msg: format!("date {date} does not follow {}", prev.date),
                });
            }
        }
        records.push(DailyRecord {
            date,
            source_id: souid,
            rr_tenths: rr,
            quality,
        });
    }

    let station_id = station.ok_or_else(|| Error::Format {
        line: 0,
        msg: "no data lines".into(),
    })?;
    Ok(DailySeries {
        station_id,
        station_name: name,
        records,
    })
}

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if end < start {
            return Err(Error::Config(format!("window {start}:{end} is empty")));
        }
        Ok(Self { start, end })
    }

    pub fn years(&self) -> u32 {
        (self.end - self.start + 1) as u32
    }
}

impl Default for YearWindow {
    fn default() -> Self {
        Self {
            start: 1918,
            end: 2007,
        }
    }
}

impl std::fmt::Display for YearWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl std::str::FromStr for YearWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("window '{s}' is not START:END")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<i32>()
                .map_err(|_| Error::Config(format!("invalid year '{t}' in window '{s}'")))
        };
        YearWindow::new(parse(a)?, parse(b)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct YearCompleteness {
    pub year: i32,
    pub missing_days: u32,
    pub compliant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub window: YearWindow,
    pub max_missing: u32,
    pub years: Vec<YearCompleteness>,
    /// Longest run of compliant years inside the window (earliest on ties).
    pub kept: YearWindow,
}

impl CompletenessReport {
    pub fn flagged(&self) -> impl Iterator<Item = &YearCompleteness> {
        self.years.iter().filter(|y| !y.compliant)
    }
}

fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366
    } else {
        365
    }
}

/// Flags years in `window` with `max_missing` or more days lacking a valid
/// value and keeps the longest contiguous run of the remaining years.
pub fn completeness_filter(
    series: &DailySeries,
    window: YearWindow,
    max_missing: u32,
) -> Result<CompletenessReport> {
    let mut valid = vec![0u32; window.years() as usize];
    for r in &series.records {
        let y = r.date.year();
        if (window.start..=window.end).contains(&y) && r.value_mm().is_some() {
            valid[(y - window.start) as usize] += 1;
        }
    }
    let years: Vec<YearCompleteness> = valid
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let year = window.start + i as i32;
            let missing_days = days_in_year(year) - v;
            YearCompleteness {
                year,
                missing_days,
                compliant: missing_days < max_missing,
            }
        })
        .collect();

    let mut best: Option<(i32, i32)> = None;
    let mut run_start: Option<i32> = None;
    for y in years.iter().chain(std::iter::once(&YearCompleteness {
        year: window.end + 1,
        missing_days: u32::MAX,
        compliant: false,
    })) {
        match (y.compliant, run_start) {
            (true, None) => run_start = Some(y.year),
            (false, Some(start)) => {
                let end = y.year - 1;
                if best.map_or(true, |(bs, be)| end - start > be - bs) {
                    best = Some((start, end));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    let (start, end) = best.ok_or(Error::NoCompleteYears {
        start: window.start,
        end: window.end,
        max_missing,
    })?;
    Ok(CompletenessReport {
        window,
        max_missing,
        years,
        kept: YearWindow { start, end },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclusterConfig {
    pub max_select: usize,
    pub min_value: f64,
}

impl Default for DeclusterConfig {
    fn default() -> Self {
        Self {
            max_select: 70,
            min_value: 1.0,
        }
    }
}

/// Greedy declustering: repeatedly take the largest remaining day (earliest
/// date on ties) and drop the days immediately before and after it. Stops
/// after `max_select` picks or when the largest remaining value is below
/// `min_value`. Returns the picks in selection order.
pub fn decluster_dated(
    days: &[(NaiveDate, f64)],
    config: DeclusterConfig,
) -> Vec<(NaiveDate, f64)> {
    let mut order: Vec<(NaiveDate, f64)> = days.to_vec();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut blocked: HashSet<NaiveDate> = HashSet::new();
    let mut picked = Vec::new();
    for (date, value) in order {
        if picked.len() >= config.max_select || value < config.min_value {
            break;
        }
        if blocked.contains(&date) {
            continue;
        }
        picked.push((date, value));
        blocked.insert(date);
        if let Some(prev) = date.pred_opt() {
            blocked.insert(prev);
        }
        if let Some(next) = date.succ_opt() {
            blocked.insert(next);
        }
    }
    picked
}

/// Values picked by [`decluster_dated`], in decreasing order.
pub fn decluster(days: &[(NaiveDate, f64)], config: DeclusterConfig) -> Vec<f64> {
    decluster_dated(days, config)
        .into_iter()
        .map(|(_, v)| v)
        .collect()
}

/// Declustered block maxima of one station, one group per block of years.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockPanel {
    pub station_id: u32,
    pub station_name: String,
    pub window: YearWindow,
    pub block_years: u32,
    pub decluster: DeclusterConfig,
    /// Group `j` holds block `j` at `s_j = j / m`.
    pub groups: Vec<Group>,
    /// Days with a valid value `>= min_value`, per block.
    pub rain_days: Vec<usize>,
    pub total_rain_days: usize,
}

impl BlockPanel {
    pub fn m(&self) -> usize {
        self.groups.len() - 1
    }

    /// First and last year of block `j`.
    pub fn block_span(&self, j: usize) -> (i32, i32) {
        let start = self.window.start + (j as u32 * self.block_years) as i32;
        (start, start + self.block_years as i32 - 1)
    }

    pub fn to_sample_panel(&self) -> Result<SamplePanel> {
        SamplePanel::new(self.groups.clone())
    }
}

/// Splits `window` into blocks of `block_years` and declusters each block on
/// its own. Neighbour removal never crosses a block boundary.
pub fn build_panel(
    series: &DailySeries,
    window: YearWindow,
    block_years: u32,
    config: DeclusterConfig,
) -> Result<BlockPanel> {
    if block_years == 0 || window.years() % block_years != 0 {
        return Err(Error::Config(format!(
            "window {window} ({} years) is not a multiple of {block_years}-year blocks",
            window.years()
        )));
    }
    let blocks = (window.years() / block_years) as usize;
    if blocks < 2 {
        return Err(Error::Config(format!(
            "window {window} yields {blocks} block(s); need at least 2"
        )));
    }
    let m = (blocks - 1) as f64;
    let mut groups = Vec::with_capacity(blocks);
    let mut rain_days = Vec::with_capacity(blocks);
    for j in 0..blocks {
        let first = window.start + (j as u32 * block_years) as i32;
        let last = first + block_years as i32 - 1;
        let days = series.valid_days(first, last);
        rain_days.push(days.iter().filter(|(_, v)| *v >= config.min_value).count());
        let values = decluster(&days, config);
        if values.len() < 2 {
            return Err(Error::DegenerateBlock {
                j,
                count: values.len(),
            });
        }
        groups.push(Group::new(j as f64 / m, values)?);
    }
    let total_rain_days = rain_days.iter().sum();
    Ok(BlockPanel {
        station_id: series.station_id,
        station_name: series.station_name.clone(),
        window,
        block_years,
        decluster: config,
        groups,
        rain_days,
        total_rain_days,
    })
}
