//! Reading observation streams and writing record-time tables.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use super::scan::{scan_results, RecordSummary};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    /// Header row, one observation per line.
    Csv,
    /// One JSON array of numbers per line.
    Ndjson,
}

impl InputFormat {
    /// `.json`, `.jsonl` and `.ndjson` are read as NDJSON, anything else as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("json" | "jsonl" | "ndjson") => InputFormat::Ndjson,
            _ => InputFormat::Csv,
        }
    }
}

fn parse_field(line: u64, field: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Malformed {
        line,
        reason: format!("not a number: {field:?}"),
    })?;
    if v.is_nan() {
        return Err(Error::Malformed {
            line,
            reason: "NaN coordinate".into(),
        });
    }
    Ok(v)
}

/// Lazily parsed CSV rows. Line numbers in errors are 1-based file lines.
pub fn csv_rows<R: Read>(reader: R) -> impl Iterator<Item = Result<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header_len = rdr.headers().map(|h| h.len()).map_err(Error::from);
    let mut records = rdr.into_records();
    let mut failed = false;
    std::iter::from_fn(move || {
        if failed {
            return None;
        }
        let width = match &header_len {
            Ok(w) => *w,
            Err(e) => {
                failed = true;
                return Some(Err(Error::Malformed {
                    line: 1,
                    reason: e.to_string(),
                }));
            }
        };
        let rec = records.next()?;
        let out = (|| {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != width {
                return Err(Error::Malformed {
                    line,
                    reason: format!("expected {width} fields, found {}", rec.len()),
                });
            }
            rec.iter().map(|f| parse_field(line, f)).collect()
        })();
        failed = out.is_err();
        Some(out)
    })
}

/// Lazily parsed NDJSON rows; blank lines are skipped.
pub fn ndjson_rows<R: BufRead>(reader: R) -> impl Iterator<Item = Result<Vec<f64>>> {
    let mut failed = false;
    reader.lines().enumerate().filter_map(move |(i, line)| {
        if failed {
            return None;
        }
        let line_no = i as u64 + 1;
        let out = match line {
            Err(e) => Err(Error::Io(e)),
            Ok(text) if text.trim().is_empty() => return None,
            Ok(text) => serde_json::from_str::<Vec<f64>>(&text).map_err(|e| Error::Malformed {
                line: line_no,
                reason: e.to_string(),
            }),
        };
        failed = out.is_err();
        Some(out)
    })
}

/// Reads all rows of a CSV or NDJSON stream.
pub fn read_rows<R: BufRead>(reader: R, format: InputFormat) -> Result<Vec<Vec<f64>>> {
    match format {
        InputFormat::Csv => csv_rows(reader).collect(),
        InputFormat::Ndjson => ndjson_rows(reader).collect(),
    }
}

/// Scans a CSV or NDJSON stream without holding it in memory.
pub fn scan_reader<R: BufRead>(reader: R, format: InputFormat) -> Result<RecordSummary> {
    match format {
        InputFormat::Csv => scan_results(csv_rows(reader)),
        InputFormat::Ndjson => scan_results(ndjson_rows(reader)),
    }
}

/// Writes simple-record times as CSV `k,time,complete`.
pub fn write_record_times_csv<W: Write>(writer: W, summary: &RecordSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "time", "complete"])?;
    let mut complete = summary.complete_record_times.iter().peekable();
    for (k, &t) in summary.simple_record_times.iter().enumerate() {
        let is_complete = complete.next_if(|&&c| c == t).is_some();
        w.write_record([(k + 1).to_string(), t.to_string(), (is_complete as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_scan_example() {
        let text = "x1,x2\n0.2,0.2\n0.5,0.1\n0.6,0.7\n";
        let s = scan_reader(text.as_bytes(), InputFormat::Csv).unwrap();
        assert_eq!(s.champion_index, Some(3));
        assert_eq!(s.complete_record_times, vec![1, 3]);
    }

    #[test]
    fn csv_reports_line() {
        let text = "x1,x2\n0.2,0.2\n0.5,abc\n";
        match scan_reader(text.as_bytes(), InputFormat::Csv) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "x1,x2\n0.2,0.2\n0.5\n";
        assert!(matches!(scan_reader(text.as_bytes(), InputFormat::Csv), Err(Error::Malformed { line: 3, .. })));
    }

    #[test]
    fn empty_csv_is_empty_stream() {
        assert!(matches!(scan_reader("x1,x2\n".as_bytes(), InputFormat::Csv), Err(Error::EmptyStream)));
    }

    #[test]
    fn ndjson_rows_parse() {
        let text = "[0.2, 0.2]\n\n[0.5, 0.1]\n[0.6, 0.7]\n";
        let rows = read_rows(text.as_bytes(), InputFormat::Ndjson).unwrap();
        assert_eq!(rows.len(), 3);
        let bad = "[0.2, 0.2]\n{oops}\n";
        assert!(matches!(read_rows(bad.as_bytes(), InputFormat::Ndjson), Err(Error::Malformed { line: 2, .. })));
    }

    #[test]
    fn record_times_table() {
        let s = scan_reader("x1,x2\n0.2,0.2\n0.5,0.1\n0.6,0.7\n".as_bytes(), InputFormat::Csv).unwrap();
        let mut buf = Vec::new();
        write_record_times_csv(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,time,complete\n1,1,1\n2,2,0\n3,3,1\n");
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(InputFormat::from_path(Path::new("a.ndjson")), InputFormat::Ndjson);
        assert_eq!(InputFormat::from_path(Path::new("a.CSV")), InputFormat::Csv);
    }
}
