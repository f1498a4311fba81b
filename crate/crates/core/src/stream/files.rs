//! CSV and ARFF ingestion.
//!
//! Both formats take the last column as the label. Numeric columns must
//! parse strictly; a column whose first value is not a number is nominal
//! and is encoded by first-appearance order, as are labels. Missing values
//! (`?` or empty) are rejected.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{LabeledInstance, Stream, StreamInfo};
use crate::error::{Error, Result};

#[derive(Debug, Default)]
struct Encoding {
    codes: HashMap<String, usize>,
    names: Vec<String>,
}

impl Encoding {
    fn encode(&mut self, value: &str) -> usize {
        if let Some(&c) = self.codes.get(value) {
            return c;
        }
        let c = self.names.len();
        self.codes.insert(value.to_string(), c);
        self.names.push(value.to_string());
        c
    }
}

#[derive(Debug)]
enum Column {
    Numeric,
    Nominal(Encoding),
}

/// Accumulates rows into instances with consistent column handling.
struct RowDecoder<'p> {
    path: &'p Path,
    columns: Option<Vec<Column>>,
    declared: Option<Vec<bool>>,
    labels: Encoding,
    instances: Vec<LabeledInstance>,
}

impl<'p> RowDecoder<'p> {
    fn new(path: &'p Path, declared_nominal: Option<Vec<bool>>) -> Self {
        RowDecoder {
            path,
            columns: None,
            declared: declared_nominal,
            labels: Encoding::default(),
            instances: Vec::new(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.into(),
            line,
            message: message.into(),
        }
    }

    fn push(&mut self, line: usize, fields: &[&str]) -> Result<()> {
        if fields.len() < 2 {
            return Err(self.err(line, "need at least one feature and a label"));
        }
        if let Some(i) = fields.iter().position(|f| f.is_empty() || *f == "?") {
            return Err(self.err(line, format!("missing value in column {}", i + 1)));
        }
        let (label, values) = fields.split_last().expect("len checked");
        if self.columns.is_none() {
            let kinds = match &self.declared {
                Some(d) => {
                    if d.len() != fields.len() {
                        return Err(self.err(
                            line,
                            format!("{} values but {} attributes declared", fields.len(), d.len()),
                        ));
                    }
                    d[..values.len()]
                        .iter()
                        .map(|&nominal| if nominal { Column::Nominal(Encoding::default()) } else { Column::Numeric })
                        .collect()
                }
                None => values
                    .iter()
                    .map(|v| match v.parse::<f64>() {
                        Ok(_) => Column::Numeric,
                        Err(_) => Column::Nominal(Encoding::default()),
                    })
                    .collect(),
            };
            self.columns = Some(kinds);
        }
        let expected = self.columns.as_ref().map_or(0, Vec::len);
        if values.len() != expected {
            return Err(self.err(
                line,
                format!("expected {} columns, found {}", expected + 1, fields.len()),
            ));
        }
        let mut features = Vec::with_capacity(values.len());
        for (j, raw) in values.iter().enumerate() {
            let parsed = match &mut self.columns.as_mut().expect("initialized")[j] {
                Column::Numeric => raw.parse::<f64>().ok().filter(|v| v.is_finite()),
                Column::Nominal(enc) => Some(enc.encode(raw) as f64),
            };
            match parsed {
                Some(v) => features.push(v),
                None => {
                    return Err(self.err(line, format!("column {}: '{raw}' is not a finite number", j + 1)))
                }
            }
        }
        let label = self.labels.encode(label);
        let index = self.instances.len();
        self.instances.push(LabeledInstance {
            features,
            label,
            index,
        });
        Ok(())
    }

    fn finish(self, name: String) -> Result<Stream> {
        if self.instances.is_empty() {
            return Err(Error::Parse {
                path: self.path.into(),
                line: 0,
                message: "no data rows".into(),
            });
        }
        Ok(Stream {
            info: StreamInfo {
                name,
                features: self.instances[0].features.len(),
                labels: self.labels.names,
                ground_truth: None,
            },
            instances: self.instances,
        })
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("stream")
        .to_string()
}

/// Loads a CSV with a header row; the last column is the label.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Stream> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut decoder = RowDecoder::new(path, None);
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<&str> = record.iter().collect();
        decoder.push(line, &fields)?;
    }
    decoder.finish(stem(path))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.into(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Loads the numeric/nominal subset of ARFF; the last attribute is the label.
pub fn load_arff(path: impl AsRef<Path>) -> Result<Stream> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut relation = None;
    let mut nominal = Vec::new();
    let mut decoder: Option<RowDecoder<'_>> = None;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.into(),
        line,
        message,
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(dec) = decoder.as_mut() {
            let fields: Vec<&str> = line
                .split(',')
                .map(|f| f.trim().trim_matches(|c| c == '\'' || c == '"'))
                .collect();
            dec.push(line_no, &fields)?;
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            relation = Some(line["@relation".len()..].trim().trim_matches('\'').to_string());
        } else if lower.starts_with("@attribute") {
            let rest = line["@attribute".len()..].trim();
            let (_, kind) = split_attribute(rest).ok_or_else(|| parse_err(line_no, "malformed @attribute".into()))?;
            let kind_lower = kind.to_ascii_lowercase();
            if kind.starts_with('{') {
                nominal.push(true);
            } else if matches!(kind_lower.as_str(), "numeric" | "real" | "integer") {
                nominal.push(false);
            } else {
                return Err(parse_err(line_no, format!("unsupported attribute type '{kind}'")));
            }
        } else if lower.starts_with("@data") {
            if nominal.len() < 2 {
                return Err(parse_err(line_no, "need at least two attributes".into()));
            }
            decoder = Some(RowDecoder::new(path, Some(nominal.clone())));
        } else {
            return Err(parse_err(line_no, format!("unexpected header line '{line}'")));
        }
    }
    let decoder = decoder.ok_or_else(|| parse_err(0, "missing @data section".into()))?;
    decoder.finish(relation.unwrap_or_else(|| stem(path)))
}

/// Splits `name type` where the name may be quoted.
fn split_attribute(rest: &str) -> Option<(&str, &str)> {
    if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let end = rest[1..].find(q)? + 1;
        Some((&rest[1..end], rest[end + 1..].trim()))
    } else {
        let (name, kind) = rest.split_once(char::is_whitespace)?;
        Some((name, kind.trim()))
    }
}

/// Writes `stream` as CSV with a `f0..f{d-1},label` header, labels by name.
pub fn write_csv(stream: &Stream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<String> = (0..stream.info.features).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for inst in stream {
        let mut row: Vec<String> = inst.features.iter().map(f64::to_string).collect();
        row.push(
            stream
                .label_name(inst.label)
                .map_or_else(|| inst.label.to_string(), str::to_string),
        );
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
