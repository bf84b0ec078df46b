use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use tailtrend::ingest::{build_panel, completeness_filter, parse_daily, BlockPanel, DailySeries};
use tailtrend::{DeclusterConfig, Group, SamplePanel};

use crate::{BlockArgs, Failure};

/// A panel plus whatever is known about where it came from.
pub struct LoadedPanel {
    pub panel: SamplePanel,
    pub station_id: Option<u32>,
    pub block_years: Option<u32>,
}

impl LoadedPanel {
    pub fn station_label(&self) -> String {
        self.station_id.map(|id| format!("STN {id}")).unwrap_or_default()
    }

    /// `s` distance covering ten years, when the panel came from station blocks.
    pub fn decade(&self) -> Option<f64> {
        let years = self.block_years? as f64;
        Some(10.0 / years / self.panel.m() as f64)
    }
}

#[derive(Deserialize)]
struct PanelFile {
    #[serde(default)]
    station_id: Option<u32>,
    #[serde(default)]
    block_years: Option<u32>,
    groups: Vec<Group>,
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn looks_like_json(bytes: &[u8]) -> bool {
    bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{')
}

/// Reads a panel JSON, or builds the block panel from a daily station file.
pub fn load_panel(path: &Path, blocks: &BlockArgs) -> Result<LoadedPanel> {
    let bytes = read(path)?;
    if looks_like_json(&bytes) {
        let file: PanelFile = serde_json::from_slice(&bytes)
            .with_context(|| format!("invalid panel JSON in {}", path.display()))?;
        let panel = SamplePanel::new(file.groups)
            .with_context(|| format!("invalid panel in {}", path.display()))?;
        return Ok(LoadedPanel {
            panel,
            station_id: file.station_id,
            block_years: file.block_years,
        });
    }
    let series =
        parse_daily(&bytes).with_context(|| format!("cannot parse {}", path.display()))?;
    let blocks = station_blocks(&series, blocks)
        .with_context(|| format!("cannot build blocks from {}", path.display()))?;
    Ok(LoadedPanel {
        panel: blocks.to_sample_panel()?,
        station_id: Some(blocks.station_id),
        block_years: Some(blocks.block_years),
    })
}

/// Requires every year of the window to be complete, then builds the blocks.
pub fn station_blocks(series: &DailySeries, args: &BlockArgs) -> Result<BlockPanel> {
    let report = completeness_filter(series, args.window, args.max_missing)?;
    let flagged: Vec<String> = report.flagged().map(|y| y.year.to_string()).collect();
    if !flagged.is_empty() {
        return Err(Failure::Input(format!(
            "station {}: {} of {} years in {} have {} or more missing days ({}); longest complete run is {}",
            series.station_id,
            flagged.len(),
            args.window.years(),
            args.window,
            args.max_missing,
            flagged.join(", "),
            report.kept
        ))
        .into());
    }
    Ok(build_panel(
        series,
        args.window,
        args.block_years,
        DeclusterConfig::default(),
    )?)
}

/// One line of an ECA&D station list.
#[derive(Debug, Clone, PartialEq)]
pub struct StationInfo {
    pub name: String,
    pub country: String,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

/// `+53:07:25` to decimal degrees.
fn parse_dms(field: &str) -> Option<f64> {
    let field = field.trim();
    let (sign, rest) = match field.as_bytes().first()? {
        b'-' => (-1.0, &field[1..]),
        b'+' => (1.0, &field[1..]),
        _ => (1.0, field),
    };
    let mut parts = rest.split(':').map(|p| p.trim().parse::<f64>());
    let deg = parts.next()?.ok()?;
    let min = parts.next().unwrap_or(Ok(0.0)).ok()?;
    let sec = parts.next().unwrap_or(Ok(0.0)).ok()?;
    Some(sign * (deg + min / 60.0 + sec / 3600.0))
}

/// Parses `STAID,STANAME,CN,LAT,LON,HGHT` lines; other lines are skipped.
pub fn parse_stations(text: &str) -> HashMap<u32, StationInfo> {
    text.lines()
        .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() < 5 {
                return None;
            }
            let id = f[0].trim().parse().ok()?;
            Some((
                id,
                StationInfo {
                    name: f[1].trim().to_string(),
                    country: f[2].trim().to_string(),
                    lat: parse_dms(f[3]),
                    lon: parse_dms(f[4]),
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn station_list_line() {
        let text = "STAID,STANAME                                 ,CN,      LAT,       LON,HGHT\n\
                    \x20\x20129,EELDE                                   ,NL,+53:07:30,+006:35:00,   5\n";
        let s = &parse_stations(text)[&129];
        assert_eq!(s.name, "EELDE");
        assert_eq!(s.country, "NL");
        assert!((s.lat.unwrap() - 53.125).abs() < 1e-12);
        assert!((s.lon.unwrap() - (6.0 + 35.0 / 60.0)).abs() < 1e-12);
        assert!((parse_dms("-000:30:00").unwrap() + 0.5).abs() < 1e-12);
    }
}
