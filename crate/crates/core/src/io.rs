//! CSV formats: indicator series, calibration samples and tables, weights,
//! rating reports and fitted-curve dumps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::aggregation::RatingReport;
use crate::calibration::{CalibrationEntry, CalibrationTable};
use crate::error::{Error, Result};
use crate::latent::{CurvePoint, IndicatorPoint, IndicatorSeries};

pub const INDICATOR_HEADER: [&str; 2] = ["student_id", "value"];
pub const TABLE_HEADER: [&str; 4] = ["score", "tail_probability", "rank_real", "rank_display"];
pub const WEIGHTS_HEADER: [&str; 2] = ["subject", "weight"];
pub const CURVE_HEADER: [&str; 3] = ["x", "empirical_Lprime", "fitted_L"];

struct Rows {
    path: std::path::PathBuf,
    header: StringRecord,
    records: Vec<(u64, StringRecord)>,
}

impl Rows {
    fn parse_err(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        let got: Vec<&str> = self.header.iter().collect();
        if got != expected {
            return Err(self.parse_err(
                1,
                format!(
                    "expected header `{}`, got `{}`",
                    expected.join(","),
                    got.join(",")
                ),
            ));
        }
        Ok(())
    }

    fn real(&self, line: u64, field: &str, what: &str) -> Result<f64> {
        let v: f64 = field
            .parse()
            .map_err(|_| self.parse_err(line, format!("{what} `{field}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.parse_err(line, format!("{what} `{field}` is not finite")));
        }
        Ok(v)
    }
}

fn read_rows<R: Read>(path: &Path, reader: R) -> Result<Rows> {
    let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(parse_err(1, "empty file: missing header".into()));
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    Ok(Rows {
        path: path.to_path_buf(),
        header,
        records,
    })
}

fn open(path: &Path) -> Result<Rows> {
    read_rows(path, File::open(path)?)
}

/// Reads a `student_id,value` file. Row order is preserved as roster order.
pub fn load_indicator_csv(path: &Path, subject: &str, indicator: &str) -> Result<IndicatorSeries> {
    parse_indicator(open(path)?, subject, indicator)
}

pub fn parse_indicator_csv<R: Read>(
    reader: R,
    source: &Path,
    subject: &str,
    indicator: &str,
) -> Result<IndicatorSeries> {
    parse_indicator(read_rows(source, reader)?, subject, indicator)
}

fn parse_indicator(rows: Rows, subject: &str, indicator: &str) -> Result<IndicatorSeries> {
    rows.expect_header(&INDICATOR_HEADER)?;
    let mut points = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        if rec.len() != 2 {
            return Err(rows.parse_err(*line, format!("expected 2 fields, got {}", rec.len())));
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(rows.parse_err(*line, "empty student_id"));
        }
        points.push(IndicatorPoint {
            student_id: id.to_string(),
            raw_value: rows.real(*line, &rec[1], "value")?,
        });
    }
    IndicatorSeries::new(subject, indicator, points)
}

/// Reads a calibration sample. The file has a header; values come from the
/// column named `value` or `score`, or from the only column.
pub fn load_calibration_csv(path: &Path) -> Result<Vec<f64>> {
    let rows = open(path)?;
    let col = match rows
        .header
        .iter()
        .position(|h| h == "value" || h == "score")
    {
        Some(c) => c,
        None if rows.header.len() == 1 => 0,
        None => return Err(rows.parse_err(1, "calibration file needs a `value` or `score` column")),
    };
    rows.records
        .iter()
        .map(|(line, rec)| {
            let field = rec
                .get(col)
                .ok_or_else(|| rows.parse_err(*line, "missing score field"))?;
            rows.real(*line, field, "score")
        })
        .collect()
}

/// Formats a real with 17 significant digits, enough to round-trip an f64.
fn full_precision(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_calibration_table<W: Write>(table: &CalibrationTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for e in table.entries() {
        w.write_record([
            full_precision(e.score),
            full_precision(e.tail_probability),
            full_precision(e.rank_real),
            e.rank_display.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_calibration_table(path: &Path) -> Result<CalibrationTable> {
    let rows = open(path)?;
    rows.expect_header(&TABLE_HEADER)?;
    let mut entries = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        if rec.len() != 4 {
            return Err(rows.parse_err(*line, format!("expected 4 fields, got {}", rec.len())));
        }
        let rank_display = rec[3].parse::<u64>().map_err(|_| {
            rows.parse_err(
                *line,
                format!("rank_display `{}` is not a positive integer", &rec[3]),
            )
        })?;
        let entry = CalibrationEntry {
            score: rows.real(*line, &rec[0], "score")?,
            tail_probability: rows.real(*line, &rec[1], "tail_probability")?,
            rank_real: rows.real(*line, &rec[2], "rank_real")?,
            rank_display,
        };
        if let Some(prev) = entries.last().map(|e: &CalibrationEntry| e.score) {
            if entry.score < prev {
                return Err(rows.parse_err(*line, "rows must be in ascending score order"));
            }
        }
        entries.push(entry);
    }
    CalibrationTable::from_entries(entries)
}

pub fn load_weights_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let rows = open(path)?;
    rows.expect_header(&WEIGHTS_HEADER)?;
    let mut out = BTreeMap::new();
    for (line, rec) in &rows.records {
        if rec.len() != 2 {
            return Err(rows.parse_err(*line, format!("expected 2 fields, got {}", rec.len())));
        }
        let w = rows.real(*line, &rec[1], "weight")?;
        if w <= 0.0 {
            return Err(rows.parse_err(*line, format!("weight {w} must be positive")));
        }
        if out.insert(rec[0].to_string(), w).is_some() {
            return Err(rows.parse_err(*line, format!("duplicate subject `{}`", &rec[0])));
        }
    }
    Ok(out)
}

fn rounded(x: f64) -> String {
    format!("{}", x.round() as i64)
}

fn exact(x: f64) -> String {
    format!("{x:.2}")
}

/// `student_id,L1,L1_exact,...,R,R_exact,rank`, one latent pair per indicator.
pub fn write_report<W: Write>(report: &RatingReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = report
        .indicators
        .len()
        .max(report.rows.first().map_or(0, |r| r.latents.len()));
    let mut header = vec!["student_id".to_string()];
    for i in 1..=n {
        header.push(format!("L{i}"));
        header.push(format!("L{i}_exact"));
    }
    header.extend(["R", "R_exact", "rank"].map(String::from));
    w.write_record(&header)?;
    for row in &report.rows {
        let mut rec = vec![row.student_id.clone()];
        for &l in &row.latents {
            rec.push(rounded(l));
            rec.push(exact(l));
        }
        rec.push(rounded(row.rating));
        rec.push(exact(row.rating));
        rec.push(row.rank_position.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `student_id -> R_exact` from a report written by [`write_report`].
pub fn load_report_ratings(path: &Path) -> Result<Vec<(String, f64)>> {
    let rows = open(path)?;
    let id_col = rows.header.iter().position(|h| h == "student_id");
    let r_col = rows.header.iter().position(|h| h == "R_exact");
    let (Some(id_col), Some(r_col)) = (id_col, r_col) else {
        return Err(rows.parse_err(1, "report needs `student_id` and `R_exact` columns"));
    };
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in &rows.records {
        let id = rec
            .get(id_col)
            .ok_or_else(|| rows.parse_err(*line, "missing student_id"))?;
        let r = rec
            .get(r_col)
            .ok_or_else(|| rows.parse_err(*line, "missing R_exact"))?;
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateStudent { id: id.to_string() });
        }
        out.push((id.to_string(), rows.real(*line, r, "R_exact")?));
    }
    Ok(out)
}

pub fn write_curve<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for p in curve {
        w.write_record([
            p.x.to_string(),
            p.empirical.to_string(),
            format!("{:.6}", p.fitted),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `student_id,R,R_exact,rank` for the cross-subject rating.
pub fn write_overall<W: Write>(rows: &[(String, f64, usize)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["student_id", "R", "R_exact", "rank"])?;
    for (id, r, rank) in rows {
        w.write_record([id.clone(), rounded(*r), exact(*r), rank.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str) -> Result<IndicatorSeries> {
        parse_indicator_csv(text.as_bytes(), &PathBuf::from("mem.csv"), "s", "tests")
    }

    #[test]
    fn reads_paper_series() {
        let text = "student_id,value\nА,6\nБ,12\nВ,15\nГ,17\nД,19\nЕ,20\nЖ,22\nЗ,25\nИ,27\nК,33\n";
        let s = parse(text).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.points()[0].student_id, "А");
        assert_eq!(s.value_of("К"), Some(33.0));
        assert_eq!(
            s.values(),
            [6., 12., 15., 17., 19., 20., 22., 25., 27., 33.]
        );
    }

    #[test]
    fn empty_file_is_parse_error() {
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
        assert!(matches!(
            parse("student_id,value\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn duplicate_ids() {
        let err = parse("student_id,value\na,1\nb,2\na,3\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateStudent { ref id } if id == "a"));
    }

    #[test]
    fn malformed_row_names_line() {
        match parse("student_id,value\na,1\nb,abc\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
        match parse("student_id,score\na,1\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn full_precision_round_trips() {
        for x in [
            0.377_330_281_530_076_5,
            195.800_787_787_8,
            105.0,
            1e-9,
            123_456.789,
        ] {
            let s = full_precision(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits = s
                .chars()
                .filter(char::is_ascii_digit)
                .skip_while(|&c| c == '0')
                .count();
            assert!(digits >= 10, "{s}");
        }
    }
}
