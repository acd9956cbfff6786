//! CSV/JSON export and import of metrics tables, plus per-figure plot data.
//!
//! CSV columns, in order:
//!
//! ```text
//! axis, ris, mobility, R_h, R_s, delta_h, delta_s, N_h, N_s, bridge_events, hole_frac,
//! R_h_std, R_s_std, delta_h_std, delta_s_std, N_h_std, N_s_std, bridge_events_std,
//! hole_frac_std, R_mean, R_mean_std, delta_mean, delta_mean_std, trials, axis_name
//! ```
//!
//! `axis` holds the swept value. Rates are bit/s, latencies seconds. Floats
//! carry 9 significant digits; an empty cell means the metric is undefined
//! (for example `R_s` when no soft handover happened).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::{MetricsTable, Stat, SweepAxis, SweepRow};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 25] = [
    "axis",
    "ris",
    "mobility",
    "R_h",
    "R_s",
    "delta_h",
    "delta_s",
    "N_h",
    "N_s",
    "bridge_events",
    "hole_frac",
    "R_h_std",
    "R_s_std",
    "delta_h_std",
    "delta_s_std",
    "N_h_std",
    "N_s_std",
    "bridge_events_std",
    "hole_frac_std",
    "R_mean",
    "R_mean_std",
    "delta_mean",
    "delta_mean_std",
    "trials",
    "axis_name",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Format implied by a file extension; CSV unless it is `.json`.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// `x` rounded to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.8e}")).unwrap_or_default()
}

fn parse_opt(cell: &str, column: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|e| Error::parse("metrics CSV", format!("column {column}: `{cell}`: {e}")))
}

fn round_stat(s: Stat) -> Stat {
    Stat {
        mean: s.mean.map(round_sig),
        std: s.std.map(round_sig),
    }
}

impl SweepRow {
    fn stats(&self) -> [Stat; 8] {
        [
            self.r_h,
            self.r_s,
            self.delta_h,
            self.delta_s,
            self.n_h,
            self.n_s,
            self.bridge_events,
            self.hole_frac,
        ]
    }

    fn stats_mut(&mut self) -> [&mut Stat; 10] {
        [
            &mut self.r_h,
            &mut self.r_s,
            &mut self.delta_h,
            &mut self.delta_s,
            &mut self.n_h,
            &mut self.n_s,
            &mut self.bridge_events,
            &mut self.hole_frac,
            &mut self.r_mean,
            &mut self.delta_mean,
        ]
    }

    fn csv_record(&self) -> Vec<String> {
        let mut rec = vec![
            self.value.to_string(),
            self.ris.to_string(),
            self.mobility.clone(),
        ];
        rec.extend(self.stats().iter().map(|s| fmt_opt(s.mean)));
        rec.extend(self.stats().iter().map(|s| fmt_opt(s.std)));
        rec.push(fmt_opt(self.r_mean.mean));
        rec.push(fmt_opt(self.r_mean.std));
        rec.push(fmt_opt(self.delta_mean.mean));
        rec.push(fmt_opt(self.delta_mean.std));
        rec.push(self.trials.to_string());
        rec.push(self.axis.name().to_string());
        rec
    }

    fn from_csv_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != CSV_COLUMNS.len() {
            return Err(Error::parse(
                "metrics CSV",
                format!("expected {} columns, found {}", CSV_COLUMNS.len(), rec.len()),
            ));
        }
        let f = |i: usize| parse_opt(&rec[i], CSV_COLUMNS[i]);
        let stat = |m: usize, s: usize| -> Result<Stat> {
            Ok(Stat {
                mean: f(m)?,
                std: f(s)?,
            })
        };
        let value = f(0)?.ok_or_else(|| Error::parse("metrics CSV", "empty axis value"))?;
        let ris = rec[1]
            .parse::<bool>()
            .map_err(|e| Error::parse("metrics CSV", format!("column ris: {e}")))?;
        let trials = rec[23]
            .parse::<usize>()
            .map_err(|e| Error::parse("metrics CSV", format!("column trials: {e}")))?;
        Ok(SweepRow {
            axis: rec[24].parse::<SweepAxis>()?,
            value,
            ris,
            mobility: rec[2].to_string(),
            r_h: stat(3, 11)?,
            r_s: stat(4, 12)?,
            delta_h: stat(5, 13)?,
            delta_s: stat(6, 14)?,
            n_h: stat(7, 15)?,
            n_s: stat(8, 16)?,
            bridge_events: stat(9, 17)?,
            hole_frac: stat(10, 18)?,
            r_mean: stat(19, 20)?,
            delta_mean: stat(21, 22)?,
            trials,
        })
    }
}

impl MetricsTable {
    /// Copy with every statistic rounded to 9 significant digits; this is
    /// exactly what an export/import round trip yields.
    pub fn rounded(&self) -> MetricsTable {
        let mut t = self.clone();
        for row in &mut t.rows {
            for s in row.stats_mut() {
                *s = round_stat(*s);
            }
        }
        t
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.csv_record()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r
            .headers()
            .map_err(|e| Error::parse("metrics CSV", e))?
            .clone();
        if header.iter().ne(CSV_COLUMNS) {
            return Err(Error::parse("metrics CSV", "unexpected header row"));
        }
        let rows = r
            .records()
            .map(|rec| {
                let rec = rec.map_err(|e| Error::parse("metrics CSV", e))?;
                SweepRow::from_csv_record(&rec)
            })
            .collect::<Result<_>>()?;
        Ok(MetricsTable { rows })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("table serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("metrics JSON", e))
    }

    pub fn export(&self, format: Format, path: &Path) -> Result<()> {
        let text = match format {
            Format::Csv => self.to_csv_string(),
            Format::Json => self.to_json_string(),
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn import(format: Format, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match format {
            Format::Csv => Self::from_csv_str(&text),
            Format::Json => Self::from_json_str(&text),
        }
    }
}

/// Series of the figure files: `{hard,soft}_{ris,noris}_{low,high}`.
pub fn figure_series() -> Vec<(String, bool, bool, &'static str)> {
    let mut out = Vec::new();
    for (kind, soft) in [("hard", false), ("soft", true)] {
        for (tag, ris) in [("ris", true), ("noris", false)] {
            for mob in ["low", "high"] {
                out.push((format!("{kind}_{tag}_{mob}"), soft, ris, mob));
            }
        }
    }
    out
}

/// Wide CSV: one row per axis value, one column per series. `metric`
/// picks the hard (`false`) or soft (`true`) statistic of a row.
pub fn figure_csv(table: &MetricsTable, metric: impl Fn(&SweepRow, bool) -> Stat) -> String {
    let series = figure_series();
    let mut values: Vec<f64> = Vec::new();
    for r in &table.rows {
        if !values.contains(&r.value) {
            values.push(r.value);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let axis = table.rows.first().map_or("N", |r| r.axis.name());
    let mut header = vec![axis.to_string()];
    header.extend(series.iter().map(|s| s.0.clone()));
    w.write_record(&header).expect("in-memory write");
    for v in values {
        let mut rec = vec![v.to_string()];
        for (_, soft, ris, mob) in &series {
            let cell = table.find(v, *ris, mob).and_then(|r| metric(r, *soft).mean);
            rec.push(fmt_opt(cell));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// Handover data rate figure (bit/s).
pub fn rate_figure_csv(table: &MetricsTable) -> String {
    figure_csv(table, |r, soft| if soft { r.r_s } else { r.r_h })
}

/// Handover latency figure (s).
pub fn latency_figure_csv(table: &MetricsTable) -> String {
    figure_csv(table, |r, soft| if soft { r.delta_s } else { r.delta_h })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: f64, ris: bool, mob: &str) -> SweepRow {
        let s = |m: f64| Stat {
            mean: Some(m * std::f64::consts::PI),
            std: Some(m / 3.0),
        };
        SweepRow {
            axis: SweepAxis::ApCount,
            value,
            ris,
            mobility: mob.into(),
            r_h: s(1.2345678912345e8),
            r_s: Stat::default(),
            delta_h: s(1e-6),
            delta_s: Stat { mean: Some(2e-6), std: None },
            n_h: s(3.0),
            n_s: s(0.0),
            bridge_events: s(1.0),
            hole_frac: s(0.01),
            r_mean: s(2e8),
            delta_mean: s(1.5e-6),
            trials: 5,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let csv = MetricsTable::default().to_csv_string();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with(
            "axis,ris,mobility,R_h,R_s,delta_h,delta_s,N_h,N_s,bridge_events,hole_frac,R_h_std"
        ));
        assert_eq!(MetricsTable::from_csv_str(&csv).unwrap(), MetricsTable::default());
    }

    #[test]
    fn csv_round_trip() {
        let t = MetricsTable {
            rows: vec![row(2.0, true, "low"), row(2.0, false, "high"), row(10.0, true, "low")],
        };
        let back = MetricsTable::from_csv_str(&t.to_csv_string()).unwrap();
        assert_eq!(back, t.rounded());
        assert_eq!(back.rows[0].r_s, Stat::default());
    }

    #[test]
    fn json_round_trip() {
        let t = MetricsTable {
            rows: vec![row(4.0, false, "low")],
        };
        let back = MetricsTable::from_json_str(&t.to_json_string()).unwrap();
        assert_eq!(back, t.rounded());
    }

    #[test]
    fn file_round_trip_and_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let t = MetricsTable { rows: vec![row(3.0, true, "high")] };
        for (name, f) in [("t.csv", Format::Csv), ("t.json", Format::Json)] {
            let p = dir.path().join(name);
            assert_eq!(Format::from_path(&p), f);
            t.export(f, &p).unwrap();
            assert_eq!(MetricsTable::import(f, &p).unwrap(), t.rounded());
        }
        let missing = dir.path().join("no/such/dir/t.csv");
        let err = t.export(Format::Csv, &missing).unwrap_err();
        assert!(err.to_string().contains("no/such/dir"));
    }

    #[test]
    fn rounding_keeps_nine_digits() {
        assert_eq!(round_sig(1.23456789123), 1.23456789);
        assert_eq!(round_sig(-9.87654321987e-7), -9.87654322e-7);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn figure_has_eight_series() {
        let t = MetricsTable {
            rows: vec![row(2.0, true, "low"), row(2.0, false, "high")],
        };
        let csv = rate_figure_csv(&t);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 9);
        assert!(header.starts_with("N,hard_ris_low,hard_ris_high,hard_noris_low"));
        let data: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(data[0], "2");
        assert!(!data[1].is_empty());
        assert!(data[2].is_empty());
    }
}
