use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Labels, Standardization};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::ReplicateGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    #[default]
    Classes,
    Real,
}

/// Column roles of a dataset CSV. Every named column must exist in the file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Row positions `"0"`, `"1"`, ... are used when absent.
    pub id_column: Option<String>,
    pub label_column: Option<String>,
    pub label_kind: LabelKind,
    pub group_column: Option<String>,
    /// All remaining columns when absent.
    pub feature_columns: Option<Vec<String>>,
    /// Z-score features and record the parameters in the dataset.
    pub standardize: bool,
}

pub const ID_COLUMN: &str = "sample_id";
pub const LABEL_COLUMN: &str = "label";
pub const GROUP_COLUMN: &str = "group";

impl CsvSchema {
    /// Schema using the conventional `sample_id`, `label` and `group` columns
    /// when the file's header has them.
    pub fn detect(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = r.headers().map_err(|e| Error::csv(path, e))?;
        let has = |name: &str| headers.iter().any(|h| h == name).then(|| name.to_string());
        Ok(Self {
            id_column: has(ID_COLUMN),
            label_column: has(LABEL_COLUMN),
            group_column: has(GROUP_COLUMN),
            ..Self::default()
        })
    }
}

fn parse_err(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_err(path, 1, format!("missing column '{name}'")))
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let id_c = schema.id_column.as_deref().map(|c| column(path, &headers, c)).transpose()?;
    let label_c = schema.label_column.as_deref().map(|c| column(path, &headers, c)).transpose()?;
    let group_c = schema.group_column.as_deref().map(|c| column(path, &headers, c)).transpose()?;
    let feature_c: Vec<usize> = match &schema.feature_columns {
        Some(cols) => cols.iter().map(|c| column(path, &headers, c)).collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|i| ![id_c, label_c, group_c].contains(&Some(*i)))
            .collect(),
    };
    if feature_c.is_empty() {
        return Err(parse_err(path, 1, "no feature columns".into()));
    }

    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut classes = Vec::new();
    let mut reals = Vec::new();
    let mut groups = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(row + 2, |p| p.line() as usize);
        let cell = |c: usize| rec.get(c).unwrap_or("").trim();
        for &c in &feature_c {
            let raw = cell(c);
            let v: f64 = raw.parse().map_err(|_| {
                parse_err(path, line, format!("column '{}': '{raw}' is not a number", &headers[c]))
            })?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("column '{}': non-finite value", &headers[c])));
            }
            data.push(v);
        }
        ids.push(id_c.map_or_else(|| row.to_string(), |c| cell(c).to_string()));
        if let Some(c) = label_c {
            let raw = cell(c);
            match schema.label_kind {
                LabelKind::Classes => classes.push(
                    raw.parse::<usize>()
                        .map_err(|_| parse_err(path, line, format!("label '{raw}' is not a class index")))?,
                ),
                LabelKind::Real => reals.push(
                    raw.parse::<f64>()
                        .map_err(|_| parse_err(path, line, format!("label '{raw}' is not a number")))?,
                ),
            }
        }
        if let Some(c) = group_c {
            groups.push(cell(c).to_string());
        }
    }
    let features = Matrix::from_vec(ids.len(), feature_c.len(), data)?;
    let labels = label_c.map(|_| match schema.label_kind {
        LabelKind::Classes => Labels::Classes(classes),
        LabelKind::Real => Labels::Real(reals),
    });
    let dataset = Dataset::new(ids, features, labels, group_c.map(|_| groups))?;
    if schema.standardize {
        let s = Standardization::fit(dataset.features())?;
        dataset.standardized(&s)
    } else {
        Ok(dataset)
    }
}

/// Writes `sample_id`, optional `group` and `label`, then features `x0..`.
/// Values are written in shortest round-trip form, so loading is bit-exact.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec![ID_COLUMN.to_string()];
    if dataset.groups().is_some() {
        header.push(GROUP_COLUMN.into());
    }
    if dataset.labels().is_some() {
        header.push(LABEL_COLUMN.into());
    }
    header.extend((0..dataset.width()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for i in 0..dataset.len() {
        let mut rec = vec![dataset.ids()[i].clone()];
        if let Some(g) = dataset.groups() {
            rec.push(g[i].clone());
        }
        match dataset.labels() {
            Some(Labels::Classes(c)) => rec.push(c[i].to_string()),
            Some(Labels::Real(v)) => rec.push(v[i].to_string()),
            None => {}
        }
        rec.extend(dataset.features().row(i).iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Groups the rows of a dataset CSV by `group_column`, in order of first
/// appearance. Every other column except `sample_id` is a profile feature.
pub fn load_replicate_groups(path: &Path, group_column: &str) -> Result<Vec<ReplicateGroup>> {
    let detected = CsvSchema::detect(path)?;
    let schema = CsvSchema {
        group_column: Some(group_column.to_string()),
        label_column: None,
        feature_columns: None,
        ..detected
    };
    let data = load_csv(path, &schema)?;
    let groups = data.groups().expect("group column requested");
    let mut order: Vec<String> = Vec::new();
    let mut members: HashMap<&str, Vec<Vec<f64>>> = HashMap::new();
    for (i, g) in groups.iter().enumerate() {
        let entry = members.entry(g.as_str()).or_insert_with(|| {
            order.push(g.clone());
            Vec::new()
        });
        entry.push(data.features().row(i).to_vec());
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let m = members.remove(id.as_str()).unwrap_or_default();
            ReplicateGroup { id, members: m }
        })
        .collect())
}
