//! Feature matrix CSV: schema names, then `subject_id,exercise,label`.

use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, FeatureVector};

const TRAILING: [&str; 3] = ["subject_id", "exercise", "label"];

pub fn write_feature_csv(path: &Path, vectors: &[FeatureVector]) -> Result<()> {
    let schema = FeatureSchema::repetition();
    let mut w = csv::Writer::from_writer(Vec::new());
    let werr = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(schema.names.iter().map(String::as_str).chain(TRAILING))
        .map_err(werr)?;
    for v in vectors {
        if v.values.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} features", schema.len()),
                found: format!("{} features", v.values.len()),
            });
        }
        let tail = [
            v.subject_id.clone(),
            v.exercise.to_string(),
            v.label.map(|l| l.to_string()).unwrap_or_default(),
        ];
        w.write_record(v.values.iter().map(|x| x.to_string()).chain(tail))
            .map_err(werr)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    write_text(path, &String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureVector>> {
    let text = read_text(path)?;
    let schema = FeatureSchema::repetition();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "missing header".into())),
    };
    let expected: Vec<&str> = schema.names.iter().map(String::as_str).chain(TRAILING).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::SchemaMismatch {
            expected: format!("{} v{}", schema.version, schema.hash()),
            found: format!("a header of {} columns", header.len()),
        });
    }
    let n = schema.len();
    for rec in records {
        let rec = rec.map_err(|e| {
            parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != n + 3 {
            return Err(parse_err(line, format!("expected {} columns, found {}", n + 3, rec.len())));
        }
        let values = rec
            .iter()
            .take(n)
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| parse_err(line, "non-numeric feature value".into()))?;
        let exercise = rec[n + 1]
            .parse()
            .map_err(|_| parse_err(line, format!("unknown exercise {:?}", &rec[n + 1])))?;
        let label = match &rec[n + 2] {
            "" => None,
            l => Some(
                l.parse()
                    .map_err(|_| parse_err(line, format!("unknown label {l:?}")))?,
            ),
        };
        out.push(FeatureVector {
            values,
            label,
            subject_id: rec[n].to_string(),
            exercise,
        });
    }
    Ok(out)
}
