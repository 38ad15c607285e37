//! Learning-curve CSV: `#`-prefixed metadata lines, then
//! `run_id,optimizer,epoch,phase,loss,overall_acc,mean_class_acc` with floats
//! printed to nine significant digits.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::MetricRecord;

pub const CSV_HEADER: [&str; 7] = [
    "run_id",
    "optimizer",
    "epoch",
    "phase",
    "loss",
    "overall_acc",
    "mean_class_acc",
];

/// Nine significant digits in scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

fn metadata_block(metadata: &[(String, String)]) -> String {
    metadata.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

pub(crate) fn to_csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>, metadata: &[(String, String)]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Data(e.to_string()))?).expect("utf-8 csv");
    Ok(metadata_block(metadata) + &body)
}

/// Renders records sorted by (run_id, epoch, phase).
pub fn format_csv(records: &[MetricRecord], metadata: &[(String, String)]) -> Result<String> {
    let mut sorted: Vec<&MetricRecord> = records.iter().collect();
    sorted.sort_by_key(|a| (a.run_id, a.epoch, a.phase));
    let rows = sorted.into_iter().map(|r| {
        vec![
            r.run_id.to_string(),
            r.optimizer.clone(),
            r.epoch.to_string(),
            r.phase.to_string(),
            fmt_float(r.loss),
            fmt_float(r.overall_acc),
            fmt_float(r.mean_class_acc),
        ]
    });
    to_csv_string(&CSV_HEADER, rows, metadata)
}

pub fn write_csv(records: &[MetricRecord], path: &Path) -> Result<()> {
    write_csv_with_metadata(records, &[], path)
}

pub fn write_csv_with_metadata(records: &[MetricRecord], metadata: &[(String, String)], path: &Path) -> Result<()> {
    std::fs::write(path, format_csv(records, metadata)?).map_err(|e| Error::io(path, e))
}

/// Parses CSV text produced by [`format_csv`]; comment lines are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<MetricRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Data(format!("unexpected csv header {header:?}")));
    }
    let field = |rec: &csv::StringRecord, i: usize| -> Result<String> {
        rec.get(i)
            .map(str::to_owned)
            .ok_or_else(|| Error::Data(format!("csv row missing column {}", CSV_HEADER[i])))
    };
    fn num<T: std::str::FromStr>(s: String, col: &str) -> Result<T> {
        s.parse().map_err(|_| Error::Data(format!("bad {col} value {s:?}")))
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(MetricRecord {
                run_id: num(field(&rec, 0)?, "run_id")?,
                optimizer: field(&rec, 1)?,
                epoch: num(field(&rec, 2)?, "epoch")?,
                phase: field(&rec, 3)?.parse()?,
                loss: num(field(&rec, 4)?, "loss")?,
                overall_acc: num(field(&rec, 5)?, "overall_acc")?,
                mean_class_acc: num(field(&rec, 6)?, "mean_class_acc")?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Phase;
    use proptest::prelude::*;

    fn rec(run_id: u64, epoch: usize, phase: Phase, loss: f64) -> MetricRecord {
        MetricRecord {
            run_id,
            optimizer: "quickprop".into(),
            epoch,
            phase,
            loss,
            overall_acc: 0.75,
            mean_class_acc: 1.0 / 3.0,
        }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(format_csv(&[], &[]).unwrap(), "run_id,optimizer,epoch,phase,loss,overall_acc,mean_class_acc\n");
    }

    #[test]
    fn one_record_two_lines() {
        let text = format_csv(&[rec(0, 1, Phase::Train, 0.125)], &[]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "0,quickprop,1,train,1.25000000e-1,7.50000000e-1,3.33333333e-1"
        );
    }

    #[test]
    fn rows_are_sorted_and_metadata_is_skipped() {
        let recs = [
            rec(1, 1, Phase::Train, 1.0),
            rec(0, 2, Phase::Test, 2.0),
            rec(0, 2, Phase::Train, 3.0),
            rec(0, 1, Phase::Test, 4.0),
        ];
        let meta = [("batch_mode".to_string(), "per_sample".to_string())];
        let text = format_csv(&recs, &meta).unwrap();
        assert!(text.starts_with("# batch_mode: per_sample\n"));
        let parsed = parse_csv(&text).unwrap();
        let keys: Vec<_> = parsed.iter().map(|r| (r.run_id, r.epoch, r.phase)).collect();
        assert_eq!(
            keys,
            vec![(0, 1, Phase::Test), (0, 2, Phase::Train), (0, 2, Phase::Test), (1, 1, Phase::Train)]
        );
    }

    #[test]
    fn file_round_trip_and_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        let mut recs = vec![rec(0, 1, Phase::Train, 0.5), rec(0, 1, Phase::Test, 0.25)];
        recs.iter_mut().for_each(|r| r.mean_class_acc = 0.625);
        write_csv(&recs, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), recs);
        let bad = dir.path().join("missing").join("x.csv");
        let err = write_csv(&recs, &bad).unwrap_err();
        assert!(err.to_string().contains("x.csv"), "{err}");
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_at_printed_precision(
            losses in prop::collection::vec(-1e9f64..1e9, 1..20),
            acc in 0.0f64..=1.0,
        ) {
            let recs: Vec<_> = losses.iter().enumerate().map(|(i, &l)| MetricRecord {
                run_id: i as u64 / 4,
                optimizer: "gd".into(),
                epoch: i % 4 + 1,
                phase: Phase::Train,
                loss: l,
                overall_acc: acc,
                mean_class_acc: acc / 2.0,
            }).collect();
            let text = format_csv(&recs, &[]).unwrap();
            let parsed = parse_csv(&text).unwrap();
            for (p, r) in parsed.iter().zip(&recs) {
                prop_assert_eq!(p.loss, fmt_float(r.loss).parse::<f64>().unwrap());
                prop_assert_eq!(p.overall_acc, fmt_float(r.overall_acc).parse::<f64>().unwrap());
                prop_assert!((p.loss - r.loss).abs() <= 5e-9 * r.loss.abs());
            }
            prop_assert_eq!(format_csv(&parsed, &[]).unwrap(), text);
        }
    }
}
