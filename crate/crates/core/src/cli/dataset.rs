//! CSV ingestion for `select` and `path`.

use std::path::{Path, PathBuf};

use clap::Args;
use nalgebra::DMatrix;
use serde::Deserialize;

use super::CliError;
use crate::design::{standardize, DesignMatrix, Response};
use crate::error::Error;

/// Where the data lives and which columns to use.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DatasetArgs {
    /// CSV file with one observation per row.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,

    /// Name of the response column.
    #[arg(long, value_name = "NAME")]
    pub response: Option<String>,

    /// Feature columns (comma separated); defaults to every other column.
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub features: Option<Vec<String>>,

    /// Field delimiter.
    #[arg(long, value_name = "CHAR")]
    pub delimiter: Option<char>,

    /// The file has no header row; columns are then named c1, c2, ...
    #[arg(long)]
    pub no_header: bool,
}

impl DatasetArgs {
    pub(crate) fn merged(self, file: DatasetArgs) -> Self {
        super::config::merge_fields!(self, file;
            opt: data, response, features, delimiter;
            switch: no_header)
    }
}

/// A parsed data set: raw feature matrix, response and column names.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub response_name: String,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    /// Standardizes the listed rows, reporting constant columns by name.
    pub fn standardize_rows(&self, rows: &[usize]) -> Result<(DesignMatrix, Response), CliError> {
        let x = DMatrix::from_fn(rows.len(), self.x.ncols(), |i, j| self.x[(rows[i], j)]);
        let y: Vec<f64> = rows.iter().map(|&i| self.y[i]).collect();
        standardize(&x, &y).map_err(|e| match e {
            Error::ZeroVarianceColumn(j) => CliError::ZeroVariance(self.feature_names[j].clone()),
            other => other.into(),
        })
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64, CliError> {
    let parse_err = |message: String| CliError::Parse {
        row,
        column: column.to_string(),
        message,
    };
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("'{raw}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(format!("non-finite value '{raw}'")));
    }
    Ok(v)
}

/// Reads the data set described by `args`. Row numbers in errors are
/// 1-based file lines, counting the header.
pub fn read_dataset(args: &DatasetArgs) -> Result<Dataset, CliError> {
    let path = args
        .data
        .as_deref()
        .ok_or_else(|| CliError::Config("--data is required".into()))?;
    let response = args
        .response
        .as_deref()
        .ok_or_else(|| CliError::Config("--response is required".into()))?;
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    read_from(file, path, args, response)
}

fn read_from<R: std::io::Read>(
    input: R,
    path: &Path,
    args: &DatasetArgs,
    response: &str,
) -> Result<Dataset, CliError> {
    let delimiter = args.delimiter.unwrap_or(',');
    if !delimiter.is_ascii() {
        return Err(CliError::Config(format!("delimiter '{delimiter}' is not ASCII")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(!args.no_header)
        .delimiter(delimiter as u8)
        .from_reader(input);

    let csv_err = |e: csv::Error| {
        let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path.display().to_string(), io),
            other => CliError::Parse {
                row,
                column: String::new(),
                message: format!("{other:?}"),
            },
        }
    };

    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(csv_err)?);
    }
    let names: Vec<String> = if args.no_header {
        let width = records.first().map_or(0, |r| r.len());
        (1..=width).map(|i| format!("c{i}")).collect()
    } else {
        reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().to_string())
            .collect()
    };

    let index_of = |name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::Config(format!("column '{name}' not found in {}", path.display())))
    };
    let yi = index_of(response)?;
    let feature_idx: Vec<usize> = match &args.features {
        Some(list) => list.iter().map(|f| index_of(f.trim())).collect::<Result<_, _>>()?,
        None => (0..names.len()).filter(|&j| j != yi).collect(),
    };
    if feature_idx.is_empty() {
        return Err(CliError::Config("no feature columns".into()));
    }
    if feature_idx.contains(&yi) {
        return Err(CliError::Config(format!("response '{response}' is also listed as a feature")));
    }

    let header_lines = usize::from(!args.no_header);
    let n = records.len();
    let mut x = DMatrix::zeros(n, feature_idx.len());
    let mut y = Vec::with_capacity(n);
    for (i, rec) in records.iter().enumerate() {
        let line = rec
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(i + 1 + header_lines);
        y.push(parse_cell(&rec[yi], line, &names[yi])?);
        for (c, &j) in feature_idx.iter().enumerate() {
            x[(i, c)] = parse_cell(&rec[j], line, &names[j])?;
        }
    }
    Ok(Dataset {
        feature_names: feature_idx.iter().map(|&j| names[j].clone()).collect(),
        response_name: names[yi].clone(),
        x,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(response: &str) -> DatasetArgs {
        DatasetArgs {
            response: Some(response.into()),
            ..Default::default()
        }
    }

    fn read(text: &str, a: &DatasetArgs) -> Result<Dataset, CliError> {
        read_from(text.as_bytes(), Path::new("mem.csv"), a, a.response.as_deref().unwrap())
    }

    #[test]
    fn reads_header_and_selects_columns() {
        let d = read("a,y,b\n1,2,3\n4,5,6.5\n", &args("y")).unwrap();
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.y, vec![2.0, 5.0]);
        assert_eq!(d.x[(1, 1)], 6.5);

        let mut only_b = args("y");
        only_b.features = Some(vec!["b".into()]);
        assert_eq!(read("a,y,b\n1,2,3\n4,5,6\n", &only_b).unwrap().feature_names, vec!["b"]);
    }

    #[test]
    fn headerless_and_delimiter() {
        let mut a = args("c1");
        a.no_header = true;
        a.delimiter = Some(';');
        let d = read("1;2\n3;4\n", &a).unwrap();
        assert_eq!(d.feature_names, vec!["c2"]);
        assert_eq!(d.y, vec![1.0, 3.0]);
    }

    #[test]
    fn bad_cell_reports_line_and_column() {
        let err = read("a,y\n1,2\n3,oops\n", &args("y")).unwrap_err();
        match &err {
            CliError::Parse { row, column, .. } => assert_eq!((*row, column.as_str()), (3, "y")),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.exit_code(), 3);
        assert!(matches!(read("a,y\n1,NaN\n", &args("y")), Err(CliError::Parse { row: 2, .. })));
        assert!(matches!(read("a,y\n1,2\n3\n", &args("y")), Err(CliError::Parse { .. })));
    }

    #[test]
    fn missing_columns_are_config_errors() {
        assert!(matches!(read("a,b\n1,2\n", &args("y")), Err(CliError::Config(_))));
        let mut a = args("y");
        a.features = Some(vec!["y".into()]);
        assert!(matches!(read("a,y\n1,2\n", &a), Err(CliError::Config(_))));
    }

    #[test]
    fn constant_column_is_named() {
        let d = read("a,const,y\n1,7,1\n2,7,0\n3,7,2\n", &args("y")).unwrap();
        let err = d.standardize_rows(&[0, 1, 2]).unwrap_err();
        assert_eq!(err.to_string(), "column 'const' has zero variance");
        assert_eq!(err.exit_code(), 4);
    }
}
