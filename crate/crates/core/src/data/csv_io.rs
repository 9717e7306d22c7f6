use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    First,
    Last,
    Index(usize),
    /// Requires a header row.
    Name(String),
}

impl LabelColumn {
    /// `first`, `last`, a zero-based index, or a header name.
    pub fn parse(spec: &str) -> LabelColumn {
        match spec {
            "first" => LabelColumn::First,
            "last" => LabelColumn::Last,
            s => s
                .parse::<usize>()
                .map(LabelColumn::Index)
                .unwrap_or_else(|_| LabelColumn::Name(s.to_string())),
        }
    }
}

/// Raw label text to ±1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap(HashMap<String, Label>);

impl LabelMap {
    pub fn new(pairs: impl IntoIterator<Item = (String, Label)>) -> Self {
        LabelMap(pairs.into_iter().collect())
    }

    /// `1`/`+1` → +1 and `-1`/`0` → -1, also accepting the `.0` float forms.
    pub fn numeric() -> Self {
        let pos = ["1", "+1", "1.0", "+1.0"].map(|s| (s.to_string(), Label::Positive));
        let neg = ["-1", "0", "-1.0", "0.0"].map(|s| (s.to_string(), Label::Negative));
        LabelMap::new(pos.into_iter().chain(neg))
    }

    /// Parses `M=+1,B=-1`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
            let (raw, sign) = part.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("label map entry {part:?} is not RAW=±1"))
            })?;
            let label = match sign.trim() {
                "1" | "+1" => Label::Positive,
                "-1" => Label::Negative,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "label map value {other:?} must be +1 or -1"
                    )))
                }
            };
            map.insert(raw.trim().to_string(), label);
        }
        Ok(LabelMap(map))
    }

    pub fn get(&self, raw: &str) -> Option<Label> {
        self.0.get(raw.trim()).copied()
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub label_map: LabelMap,
    /// `None` detects a header from a non-numeric feature cell in row one.
    pub has_header: Option<bool>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: LabelColumn::First,
            label_map: LabelMap::numeric(),
            has_header: None,
        }
    }
}

fn resolve_label_column(spec: &LabelColumn, header: Option<&[String]>, width: usize) -> Result<usize> {
    let idx = match spec {
        LabelColumn::First => 0,
        LabelColumn::Last => width.saturating_sub(1),
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => header
            .and_then(|h| h.iter().position(|c| c.trim() == name))
            .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
    };
    if idx >= width {
        return Err(Error::MissingLabelColumn(format!("{idx}")));
    }
    Ok(idx)
}

/// Reads a comma-separated file into a [`Dataset`], preserving row order.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };

    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Dataset::new(DMatrix::zeros(0, 0), vec![]),
    };
    let width = first.len();
    let first_cells: Vec<String> = first.iter().map(str::to_string).collect();

    let has_header = match (opts.has_header, &opts.label_column) {
        (Some(h), _) => h,
        (None, LabelColumn::Name(_)) => true,
        (None, spec) => {
            let label_idx = resolve_label_column(spec, None, width)?;
            first_cells
                .iter()
                .enumerate()
                .any(|(j, c)| j != label_idx && c.parse::<f64>().is_err())
        }
    };
    let header = has_header.then(|| first_cells.clone());
    let label_idx = resolve_label_column(&opts.label_column, header.as_deref(), width)?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut push_row = |line: u64, cells: &[&str]| -> Result<()> {
        if cells.len() != width {
            return Err(Error::RowArity {
                line,
                expected: width,
                found: cells.len(),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            if j == label_idx {
                let label = opts.label_map.get(cell).ok_or_else(|| Error::UnmappedLabel {
                    line,
                    value: cell.to_string(),
                })?;
                labels.push(label);
            } else {
                let v = cell.parse::<f64>().map_err(|_| Error::NonNumeric {
                    line,
                    column: j,
                    value: cell.to_string(),
                })?;
                values.push(v);
            }
        }
        Ok(())
    };

    if !has_header {
        let cells: Vec<&str> = first.iter().collect();
        push_row(1, &cells)?;
    }
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let cells: Vec<&str> = rec.iter().collect();
        if cells.len() == 1 && cells[0].is_empty() {
            continue;
        }
        push_row(line, &cells)?;
    }

    let d = width - 1;
    let n = labels.len();
    let samples = DMatrix::from_row_slice(n, d, &values);
    let mut ds = Dataset::new(samples, labels)?;
    ds.feature_names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter_map(|(j, name)| (j != label_idx).then_some(name))
            .collect()
    });
    Ok(ds)
}

/// Writes `label,f0,f1,...` with a header row; labels as `1` / `-1`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let names: Vec<String> = match &ds.feature_names {
        Some(names) if names.len() == ds.dim() => names.clone(),
        _ => (0..ds.dim()).map(|j| format!("x{j}")).collect(),
    };
    let io = |e| Error::io(path, e);
    write!(out, "label").map_err(io)?;
    for name in &names {
        write!(out, ",{name}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for (i, label) in ds.labels.iter().enumerate() {
        write!(out, "{}", label.sign()).map_err(io)?;
        for j in 0..ds.dim() {
            write!(out, ",{}", ds.samples[(i, j)]).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn ab_map() -> LabelMap {
        LabelMap::parse("a=+1,b=-1").unwrap()
    }

    #[test]
    fn labels_mapped_in_file_order() {
        let f = tmp("a,1,2\nb,3,4\na,5,6\n");
        let opts = CsvOptions {
            label_map: ab_map(),
            ..Default::default()
        };
        let d = load_csv(f.path(), &opts).unwrap();
        assert_eq!(d.labels, vec![Label::Positive, Label::Negative, Label::Positive]);
        assert_eq!(d.samples, DMatrix::from_row_slice(3, 2, &[1., 2., 3., 4., 5., 6.]));
        assert!(d.feature_names.is_none());
    }

    #[test]
    fn wrong_arity_names_the_line() {
        let f = tmp("a,1,2\nb,3\n");
        let opts = CsvOptions {
            label_map: ab_map(),
            ..Default::default()
        };
        match load_csv(f.path(), &opts) {
            Err(Error::RowArity { line, expected, found }) => {
                assert_eq!((line, expected, found), (2, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unmapped_and_non_numeric_cells() {
        let opts = CsvOptions {
            label_map: ab_map(),
            ..Default::default()
        };
        let f = tmp("a,1\nc,2\n");
        assert!(matches!(
            load_csv(f.path(), &opts),
            Err(Error::UnmappedLabel { line: 2, .. })
        ));
        let f = tmp("a,1\nb,oops\n");
        assert!(matches!(
            load_csv(f.path(), &opts),
            Err(Error::NonNumeric { line: 2, column: 1, .. })
        ));
    }

    #[test]
    fn named_label_column_with_header() {
        let f = tmp("x,y,class\n0.5,1.5,-1\n2,3,1\n");
        let opts = CsvOptions {
            label_column: LabelColumn::Name("class".into()),
            ..Default::default()
        };
        let d = load_csv(f.path(), &opts).unwrap();
        assert_eq!(d.labels, vec![Label::Negative, Label::Positive]);
        assert_eq!(d.feature_names.as_deref(), Some(&["x".to_string(), "y".to_string()][..]));
        assert_eq!(d.samples[(1, 1)], 3.0);
    }

    #[test]
    fn header_is_detected() {
        let f = tmp("label,x0\n1,0.25\n0,0.75\n");
        let d = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.labels[1], Label::Negative);
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_csv("/nonexistent/file.csv", &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/file.csv"));
    }

    #[test]
    fn write_then_read_back() {
        let d = Dataset::from_rows(
            &[vec![0.1, 0.2], vec![0.3, 1e-17]],
            vec![Label::Negative, Label::Positive],
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&d, f.path()).unwrap();
        let back = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(back.samples, d.samples);
        assert_eq!(back.labels, d.labels);
    }
}
