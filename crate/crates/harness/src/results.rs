//! `results.csv`: one row per completed run, canonical float formatting,
//! LF line endings, and resumption from a partially written file.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;

use w4_core::numfmt::canonical_float;

use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 9] = [
    "case_id",
    "index",
    "phi_over_pi",
    "p_success",
    "trace_distance",
    "fidelity",
    "depth_single",
    "depth_double",
    "seed",
];

/// Reset metrics are `None` when the post-selection weight vanished.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub case_id: String,
    pub index: usize,
    pub phi_over_pi: Option<f64>,
    pub p_success: f64,
    pub trace_distance: Option<f64>,
    pub fidelity: Option<f64>,
    pub depth_single: usize,
    pub depth_double: usize,
    pub seed: u64,
}

fn opt(x: Option<f64>) -> String {
    x.map(canonical_float).unwrap_or_default()
}

impl ResultRow {
    pub fn succeeded(&self) -> bool {
        self.trace_distance.is_some()
    }

    pub fn to_record(&self) -> [String; 9] {
        [
            self.case_id.clone(),
            self.index.to_string(),
            opt(self.phi_over_pi),
            canonical_float(self.p_success),
            opt(self.trace_distance),
            opt(self.fidelity),
            self.depth_single.to_string(),
            self.depth_double.to_string(),
            self.seed.to_string(),
        ]
    }

    pub fn from_record(rec: &csv::StringRecord) -> std::result::Result<Self, String> {
        if rec.len() != HEADER.len() {
            return Err(format!(
                "expected {} fields, got {}",
                HEADER.len(),
                rec.len()
            ));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} value `{s}`"))
        }
        fn opt_num(s: &str, name: &str) -> std::result::Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, name).map(Some)
            }
        }
        Ok(Self {
            case_id: rec[0].to_string(),
            index: num(&rec[1], "index")?,
            phi_over_pi: opt_num(&rec[2], "phi_over_pi")?,
            p_success: num(&rec[3], "p_success")?,
            trace_distance: opt_num(&rec[4], "trace_distance")?,
            fidelity: opt_num(&rec[5], "fidelity")?,
            depth_single: num(&rec[6], "depth_single")?,
            depth_double: num(&rec[7], "depth_double")?,
            seed: num(&rec[8], "seed")?,
        })
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(w)
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow], header: bool) -> Result<()> {
    let mut w = writer(out);
    if header {
        w.write_record(HEADER)?;
    }
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows, true).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

/// Parses a results file. A trailing line without a newline is treated as
/// an interrupted write and ignored; the returned length is the byte count
/// of the complete part.
pub fn parse_results(bytes: &[u8], path: &Path) -> Result<(Vec<ResultRow>, usize)> {
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let bad = |message: String| HarnessError::ResultsFile {
        path: path.to_path_buf(),
        message,
    };
    if complete == 0 {
        return Ok((Vec::new(), 0));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(&bytes[..complete]);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(bad(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(
            ResultRow::from_record(&rec).map_err(|m| bad(format!("row {}: {m}", rows.len())))?,
        );
    }
    Ok((rows, complete))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(parse_results(&bytes, path)?.0)
}

/// Appends rows to a results file, one flushed batch at a time.
pub struct ResultsWriter {
    file: File,
    path: std::path::PathBuf,
}

impl ResultsWriter {
    /// Opens `path` for appending after validating and trimming what is
    /// already there. Returns the writer and the rows already present.
    pub fn resume(path: &Path) -> Result<(Self, Vec<ResultRow>)> {
        let io = |e| HarnessError::io(path, e);
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)
            .map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let (rows, complete) = parse_results(&bytes, path)?;
        file.set_len(complete as u64).map_err(io)?;
        drop(file);
        let mut file = OpenOptions::new().append(true).open(path).map_err(io)?;
        if complete == 0 {
            write_rows(&mut file, &[], true)?;
        }
        Ok((
            Self {
                file,
                path: path.to_path_buf(),
            },
            rows,
        ))
    }

    pub fn append(&mut self, rows: &[ResultRow]) -> Result<()> {
        write_rows(&mut self.file, rows, false)?;
        self.file
            .sync_data()
            .map_err(|e| HarnessError::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize, failed: bool) -> ResultRow {
        ResultRow {
            case_id: "case3_random".into(),
            index: i,
            phi_over_pi: None,
            p_success: 0.1 * i as f64,
            trace_distance: (!failed).then_some(1.0 / 3.0),
            fidelity: (!failed).then_some(0.9),
            depth_single: 23,
            depth_double: 12,
            seed: u64::MAX - i as u64,
        }
    }

    #[test]
    fn records_round_trip() {
        let rows = vec![row(0, false), row(1, true)];
        let text = to_csv_string(&rows);
        assert!(!text.contains('\r'));
        assert!(text.starts_with("case_id,index,phi_over_pi,p_success,"));
        assert!(text.contains("case3_random,1,,0.1,,,23,12,"));
        let (back, n) = parse_results(text.as_bytes(), Path::new("x")).unwrap();
        assert_eq!(n, text.len());
        assert_eq!(back[1], rows[1]);
        assert_eq!(back[0].trace_distance, Some(0.333333333333));
    }

    #[test]
    fn truncated_tail_is_dropped() {
        let text = to_csv_string(&[row(0, false), row(1, false)]);
        let cut = &text.as_bytes()[..text.len() - 7];
        let (rows, n) = parse_results(cut, Path::new("x")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(
            &text.as_bytes()[..n],
            to_csv_string(&[row(0, false)]).as_bytes()
        );
    }

    #[test]
    fn foreign_header_is_rejected() {
        assert!(parse_results(b"a,b\n1,2\n", Path::new("x")).is_err());
    }

    #[test]
    fn resume_appends_after_partial_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let full = to_csv_string(&[row(0, false), row(1, false)]);
        std::fs::write(&path, &full.as_bytes()[..full.len() - 3]).unwrap();
        let (mut w, rows) = ResultsWriter::resume(&path).unwrap();
        assert_eq!(rows.len(), 1);
        w.append(&[row(1, false)]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), full);
    }
}
