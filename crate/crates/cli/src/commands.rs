use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use tailtrend::inference::{chisq_quantile, with_se, TestReport};
use tailtrend::ingest::parse_daily;
use tailtrend::simulate::run_design_with_progress;
use tailtrend::trend::{sweep as sweep_rows, SweepRow};
use tailtrend::{
    estimate as fit, relative_risk_path, risk_change_per_period, test_q1, test_q2, Estimator,
    SimDesign, SimResult, TrendFit,
};

use crate::input::{self, parse_stations, LoadedPanel, StationInfo};
use crate::output::{self, num, opt};
use crate::{EstimateArgs, Failure, IngestArgs, KGrid, SimulateArgs, SweepArgs, TestArgs};

impl KGrid {
    fn is_set(&self) -> bool {
        self.k.is_some() || self.k_min.is_some() || self.k_max.is_some() || self.k_step.is_some()
    }

    /// The requested k values; the range defaults to 5..=100 in steps of 5.
    fn values(&self) -> Result<Vec<usize>> {
        if let Some(k) = self.k {
            if k == 0 {
                return Err(Failure::Usage("--k must be positive".into()).into());
            }
            return Ok(vec![k]);
        }
        let (lo, hi, step) = (
            self.k_min.unwrap_or(5),
            self.k_max.unwrap_or(100),
            self.k_step.unwrap_or(5),
        );
        if lo == 0 || step == 0 || lo > hi {
            return Err(Failure::Usage(format!(
                "empty k grid: --k-min {lo} --k-max {hi} --k-step {step}"
            ))
            .into());
        }
        Ok((lo..=hi).step_by(step).collect())
    }
}

fn check_k(loaded: &LoadedPanel, ks: &[usize]) -> Result<()> {
    let limit = loaded.panel.min_group_size();
    if let Some(&bad) = ks.iter().find(|&&k| k >= limit) {
        return Err(Failure::Usage(format!(
            "k = {bad} needs every group to hold more than {bad} values; the smallest holds {limit}"
        ))
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct FitEntry {
    estimator: Estimator,
    fit: Option<TrendFit>,
    risk_change_per_decade: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct EstimateReport {
    station_id: Option<u32>,
    k: usize,
    fits: Vec<FitEntry>,
    relative_risk_path: Option<Vec<(f64, f64)>>,
}

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let loaded = input::load_panel(&args.panel.input, &args.panel.blocks)?;
    check_k(&loaded, &[args.k])?;
    let s = loaded.panel.trend_times();
    let decade = loaded.decade();

    let fits: Vec<FitEntry> = args
        .estimators
        .iter()
        .map(|&e| {
            let result = fit(&loaded.panel, args.k, e).and_then(|f| match e {
                Estimator::C2 => with_se(f, &s),
                _ => Ok(f),
            });
            match result {
                Ok(f) => FitEntry {
                    estimator: e,
                    risk_change_per_decade: decade.map(|d| risk_change_per_period(f.c_hat, d)),
                    fit: Some(f),
                    error: None,
                },
                Err(err) => {
                    eprintln!("warning: {e} at k = {}: {err}", args.k);
                    FitEntry {
                        estimator: e,
                        fit: None,
                        risk_change_per_decade: None,
                        error: Some(err.to_string()),
                    }
                }
            }
        })
        .collect();

    let report = EstimateReport {
        station_id: loaded.station_id,
        k: args.k,
        relative_risk_path: relative_risk_path(&loaded.panel, args.k).ok(),
        fits,
    };
    let station = loaded.station_label();
    output::emit(&args.output, &report, || {
        output::csv(
            &["station", "estimator", "k", "c_hat", "se", "gamma_hat", "a0_hat", "risk_change_per_decade"],
            report.fits.iter().map(|entry| {
                let f = entry.fit.as_ref();
                vec![
                    station.clone(),
                    entry.estimator.to_string(),
                    report.k.to_string(),
                    opt(f.map(|f| f.c_hat)),
                    opt(f.and_then(|f| f.se_hat)),
                    opt(f.and_then(|f| f.gamma_hat)),
                    opt(f.and_then(|f| f.a0_hat)),
                    opt(entry.risk_change_per_decade),
                ]
            }),
        )
    })?;

    if report.fits.iter().all(|f| f.fit.is_none()) {
        return Err(Failure::Domain(format!("no estimator could be computed at k = {}", args.k)).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct TestRow {
    k: usize,
    q1: Option<TestReport>,
    q2: Option<TestReport>,
}

pub fn test(args: &TestArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha must lie in (0, 1), got {}", args.alpha)).into());
    }
    let loaded = input::load_panel(&args.panel.input, &args.panel.blocks)?;
    let ks = args.grid.values()?;
    check_k(&loaded, &ks)?;
    let df = loaded.panel.m() as u32;
    let critical = chisq_quantile(1.0 - args.alpha, df);

    let rows: Vec<TestRow> = ks
        .iter()
        .map(|&k| TestRow {
            k,
            q1: test_q1(&loaded.panel, k, args.alpha).ok(),
            q2: test_q2(&loaded.panel, k, args.alpha).ok(),
        })
        .collect();

    output::emit(&args.output, &rows, || {
        let cells = |r: Option<&TestReport>| match r {
            Some(r) => [num(r.statistic), num(r.p_value), r.reject.to_string()],
            None => Default::default(),
        };
        output::csv(
            &["k", "df", "alpha", "critical_value", "q1", "q1_p_value", "q1_reject", "q2", "q2_p_value", "q2_reject"],
            rows.iter().map(|row| {
                let mut cols = vec![row.k.to_string(), df.to_string(), num(args.alpha), num(critical)];
                cols.extend(cells(row.q1.as_ref()));
                cols.extend(cells(row.q2.as_ref()));
                cols
            }),
        )
    })
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let loaded = input::load_panel(&args.panel.input, &args.panel.blocks)?;
    let ks = args.grid.values()?;
    check_k(&loaded, &ks)?;
    let chosen: HashSet<Estimator> = args.estimators.iter().copied().collect();
    let keep = |e: Estimator, v: Option<f64>| v.filter(|_| chosen.contains(&e));
    let rows: Vec<SweepRow> = sweep_rows(&loaded.panel, &ks)
        .into_iter()
        .map(|r| SweepRow {
            c1: keep(Estimator::C1, r.c1),
            c2: keep(Estimator::C2, r.c2),
            c3: keep(Estimator::C3, r.c3),
            ..r
        })
        .collect();

    let columns: Vec<Estimator> = Estimator::ALL.into_iter().filter(|e| chosen.contains(e)).collect();
    output::emit(&args.output, &rows, || {
        let mut header = vec!["k"];
        header.extend(columns.iter().map(|e| e.name()));
        header.extend(["gamma_plus", "gamma_moment", "a0"]);
        output::csv(
            &header,
            rows.iter().map(|r| {
                let mut cols = vec![r.k.to_string()];
                for e in &columns {
                    cols.push(opt(match e {
                        Estimator::C1 => r.c1,
                        Estimator::C2 => r.c2,
                        Estimator::C3 => r.c3,
                    }));
                }
                cols.extend([opt(r.gamma_plus), opt(r.gamma_moment), opt(r.a0)]);
                cols
            }),
        )
    })
}

fn read_design(path: &Path) -> Result<SimDesign> {
    let bytes = input::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::Usage(format!("invalid design in {}: {e}", path.display())).into())
}

fn design_from_flags(args: &SimulateArgs) -> Result<SimDesign> {
    let missing = |flag: &str| Failure::Usage(format!("--{flag} is required without --design"));
    let family = args.family.ok_or_else(|| missing("family"))?;
    let gamma = match (args.gamma, family) {
        (Some(g), _) => g,
        (None, tailtrend::Family::Cauchy) => 1.0,
        (None, _) => return Err(missing("gamma").into()),
    };
    Ok(SimDesign {
        family,
        gamma,
        c: args.c.ok_or_else(|| missing("c"))?,
        n: args.n.ok_or_else(|| missing("n"))?,
        m: args.m.ok_or_else(|| missing("m"))?,
        replications: args.replications.ok_or_else(|| missing("replications"))?,
        k_grid: Vec::new(),
        seed: 1,
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut design = match &args.design {
        Some(path) => read_design(path)?,
        None => design_from_flags(args)?,
    };
    if args.design.is_none() || args.grid.is_set() {
        design.k_grid = args.grid.values()?;
    }
    if let Some(seed) = args.seed {
        design.seed = seed;
    }
    design.validate()?;

    if let Some(rep) = args.emit_panel {
        let panel = design.panel(rep)?;
        return output::write_bytes(args.output.out.as_deref(), &output::json(&panel)?);
    }

    let total = design.replications;
    let quiet = args.quiet;
    let result: SimResult = run_design_with_progress(&design, |done| {
        if !quiet && (done * 10 / total != (done - 1) * 10 / total || done == total) {
            eprintln!("replications {done}/{total}");
        }
    })?;

    output::emit(&args.output, &result, || {
        output::csv(
            &["k", "estimator", "mean", "sd", "successes", "errors"],
            result.rows.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    r.estimator.to_string(),
                    opt(r.mean),
                    opt(r.sd),
                    r.successes.to_string(),
                    r.errors.to_string(),
                ]
            }),
        )
    })
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    let stations = match &args.stations {
        Some(path) => parse_stations(&String::from_utf8_lossy(&input::read(path)?)),
        None => Default::default(),
    };
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;

    let mut table: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for path in &args.inputs {
        let series = parse_daily(&input::read(path)?)
            .with_context(|| format!("cannot parse {}", path.display()))?;
        let id = series.station_id;
        if table.contains_key(&id) {
            return Err(Failure::Input(format!("station {id} appears in more than one input")).into());
        }
        let panel = input::station_blocks(&series, &args.blocks)
            .with_context(|| format!("cannot build blocks from {}", path.display()))?;

        let out = |name: String| args.out_dir.join(name);
        output::write_bytes(Some(&out(format!("panel_{id}.json"))), &output::json(&panel)?)?;
        let blocks = output::csv(
            &["block", "first_year", "last_year", "s", "selected", "rain_days", "max_mm"],
            panel.groups.iter().enumerate().map(|(j, g)| {
                let (first, last) = panel.block_span(j);
                let max = g.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
                vec![
                    j.to_string(),
                    first.to_string(),
                    last.to_string(),
                    num(g.time_point()),
                    g.len().to_string(),
                    panel.rain_days[j].to_string(),
                    num(max),
                ]
            }),
        )?;
        output::write_bytes(Some(&out(format!("blocks_{id}.csv"))), &blocks)?;

        let info = stations.get(&id);
        let name = if series.station_name.is_empty() {
            info.map(|s| s.name.clone()).unwrap_or_default()
        } else {
            series.station_name.clone()
        };
        let coord = |f: fn(&StationInfo) -> Option<f64>| info.and_then(f).map(|v| format!("{v:.4}")).unwrap_or_default();
        table.insert(
            id,
            vec![
                id.to_string(),
                name,
                info.map(|s| s.country.clone()).unwrap_or_default(),
                coord(|s| s.lat),
                coord(|s| s.lon),
                panel.total_rain_days.to_string(),
            ],
        );
        eprintln!(
            "station {id}: {} blocks, {} rain days, {} to {} values per block",
            panel.groups.len(),
            panel.total_rain_days,
            panel.groups.iter().map(|g| g.len()).min().unwrap_or(0),
            panel.groups.iter().map(|g| g.len()).max().unwrap_or(0),
        );
    }

    let rain_days = output::csv(
        &["STN", "Name", "Country", "Lat", "Lon", "Rain days"],
        table.into_values(),
    )?;
    output::write_bytes(Some(&args.out_dir.join("rain_days.csv")), &rain_days)
}
