use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{instance_id, DataError, Dataset, DedupKey, Instance, Label, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFormat {
    CanonicalJsonl,
    ColumnarCsv,
}

/// Accepted raw spellings for each label, compared case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEncoding {
    pub metaphor: Vec<String>,
    pub literal: Vec<String>,
}

impl Default for LabelEncoding {
    fn default() -> Self {
        LabelEncoding {
            metaphor: vec!["1".into(), "metaphor".into(), "yes".into()],
            literal: vec!["0".into(), "literal".into(), "no".into()],
        }
    }
}

impl LabelEncoding {
    pub fn decode(&self, raw: &str) -> Option<Label> {
        let raw = raw.trim();
        if self.metaphor.iter().any(|v| v.eq_ignore_ascii_case(raw)) {
            Some(Label::Metaphor)
        } else if self.literal.iter().any(|v| v.eq_ignore_ascii_case(raw)) {
            Some(Label::Literal)
        } else {
            None
        }
    }
}

/// How to read a source file. Column names only matter for CSV input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    /// Dataset name recorded in provenance; defaults to the file stem.
    pub name: Option<String>,
    pub sentence: String,
    pub target_word: String,
    pub label: String,
    pub labels: LabelEncoding,
    pub delimiter: char,
    /// Skip rows that fail validation instead of aborting.
    pub skip_invalid: bool,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            name: None,
            sentence: "sentence".into(),
            target_word: "target_word".into(),
            label: "label".into(),
            labels: LabelEncoding::default(),
            delimiter: ',',
            skip_invalid: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowDiagnostic {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    /// Rows collapsed because an earlier row had the same dedup key.
    pub duplicates: usize,
    /// Rows dropped under `skip_invalid`.
    pub rejected: Vec<RowDiagnostic>,
}

struct RawRow {
    id: Option<String>,
    sentence: String,
    target_word: String,
    label: String,
    provenance: Option<Provenance>,
    extra: serde_json::Map<String, serde_json::Value>,
}

pub fn ingest_dataset(path: &Path, format: SourceFormat, mapping: &ColumnMap) -> Result<Ingested, DataError> {
    if !path.is_file() {
        return Err(DataError::MissingFile(path.to_path_buf()));
    }
    let name = mapping.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let rows = match format {
        SourceFormat::CanonicalJsonl => read_canonical(path)?,
        SourceFormat::ColumnarCsv => read_csv(path, mapping)?,
    };

    let mut builder = Builder {
        name: name.clone(),
        mapping,
        dataset: Dataset::new(name),
        keys: HashSet::new(),
        duplicates: 0,
        rejected: Vec::new(),
    };
    for (row, raw) in rows.into_iter().enumerate() {
        match raw {
            Ok(raw) => builder.add(row, raw)?,
            Err(reason) => builder.reject(DataError::MalformedRow { row, reason })?,
        }
    }
    if builder.duplicates > 0 {
        tracing::warn!(path = %path.display(), duplicates = builder.duplicates, "collapsed duplicate rows");
    }
    Ok(Ingested {
        dataset: builder.dataset,
        duplicates: builder.duplicates,
        rejected: builder.rejected,
    })
}

struct Builder<'a> {
    name: String,
    mapping: &'a ColumnMap,
    dataset: Dataset,
    keys: HashSet<DedupKey>,
    duplicates: usize,
    rejected: Vec<RowDiagnostic>,
}

impl Builder<'_> {
    fn reject(&mut self, err: DataError) -> Result<(), DataError> {
        if !self.mapping.skip_invalid {
            return Err(err);
        }
        let (row, reason) = match &err {
            DataError::MalformedRow { row, reason } => (*row, reason.clone()),
            DataError::UnknownLabelValue { row, value } => (*row, format!("unknown label value {value:?}")),
            other => (usize::MAX, other.to_string()),
        };
        self.rejected.push(RowDiagnostic { row, reason });
        Ok(())
    }

    fn add(&mut self, row: usize, raw: RawRow) -> Result<(), DataError> {
        let Some(label) = self.mapping.labels.decode(&raw.label) else {
            return self.reject(DataError::UnknownLabelValue { row, value: raw.label });
        };
        let provenance = raw.provenance.unwrap_or_else(|| Provenance::Original {
            dataset_name: self.name.clone(),
            source_index: row as u64,
        });
        let id = instance_id(&raw.sentence, &raw.target_word, label, &provenance);
        if let Some(given) = &raw.id {
            if *given != id {
                return self.reject(DataError::MalformedRow {
                    row,
                    reason: format!("id {given} does not match record content"),
                });
            }
        }
        let instance = Instance {
            id,
            sentence: raw.sentence,
            target_word: raw.target_word,
            label,
            provenance,
            extra: raw.extra,
        };
        if let Err(reason) = instance.validate() {
            return self.reject(DataError::MalformedRow { row, reason });
        }
        if !self.keys.insert(instance.dedup_key()) || !self.dataset.push(instance) {
            self.duplicates += 1;
        }
        Ok(())
    }
}

fn read_canonical(path: &Path) -> Result<Vec<Result<RawRow, String>>, DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_canonical_line(&line));
    }
    Ok(rows)
}

fn parse_canonical_line(line: &str) -> Result<RawRow, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let serde_json::Value::Object(mut obj) = value else {
        return Err("record is not a JSON object".into());
    };
    let mut take_string = |key: &str| -> Result<Option<String>, String> {
        match obj.remove(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(serde_json::Value::String(s)) => Ok(Some(s)),
            Some(serde_json::Value::Number(n)) if key == "label" => Ok(Some(n.to_string())),
            Some(serde_json::Value::Bool(b)) if key == "label" => Ok(Some(if b { "1" } else { "0" }.into())),
            Some(other) => Err(format!("field {key} has unexpected value {other}")),
        }
    };
    let id = take_string("id")?;
    let sentence = take_string("sentence")?.ok_or("missing field sentence")?;
    let target_word = take_string("target_word")?.ok_or("missing field target_word")?;
    let label = take_string("label")?.ok_or("missing field label")?;
    let provenance = match obj.remove("provenance") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(serde_json::from_value(v).map_err(|e| format!("bad provenance: {e}"))?),
    };
    Ok(RawRow {
        id,
        sentence,
        target_word,
        label,
        provenance,
        extra: obj,
    })
}

fn read_csv(path: &Path, mapping: &ColumnMap) -> Result<Vec<Result<RawRow, String>>, DataError> {
    let delimiter = u8::try_from(mapping.delimiter).map_err(|_| DataError::MalformedRow {
        row: 0,
        reason: format!("delimiter {:?} is not a single byte", mapping.delimiter),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| DataError::MalformedRow {
            row: 0,
            reason: format!("header has no column named {name:?}"),
        })
    };
    let (s_col, t_col, l_col) = (
        column(&mapping.sentence)?,
        column(&mapping.target_word)?,
        column(&mapping.label)?,
    );
    let mut rows = Vec::new();
    for record in reader.records() {
        let row = match record {
            Ok(rec) => {
                let get = |i: usize| rec.get(i).map(str::to_string);
                match (get(s_col), get(t_col), get(l_col)) {
                    (Some(sentence), Some(target_word), Some(label)) => {
                        let mut extra = serde_json::Map::new();
                        for (i, h) in headers.iter().enumerate() {
                            if i != s_col && i != t_col && i != l_col {
                                if let Some(v) = rec.get(i) {
                                    extra.insert(h.to_string(), serde_json::Value::String(v.to_string()));
                                }
                            }
                        }
                        Ok(RawRow {
                            id: None,
                            sentence,
                            target_word: target_word.trim().to_string(),
                            label,
                            provenance: None,
                            extra,
                        })
                    }
                    _ => Err("row has fewer columns than the header".to_string()),
                }
            }
            Err(e) => Err(e.to_string()),
        };
        rows.push(row);
    }
    Ok(rows)
}
