//! CSV ingestion: a header row of column names, one row per unit, decimal reals.

use std::path::Path;

use randadjust_core::design::RawCovariates;
use randadjust_core::dgp::{fit_dataset, pairwise_interactions, DatasetBundle};
use randadjust_core::linalg::Matrix;

use crate::config::DatasetConfig;
use crate::error::{AppError, AppResult};

/// All columns of a numeric CSV, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> AppResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| AppError::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> AppResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (k, record) in rdr.records().enumerate() {
            let record = record?;
            // header is line 1
            let line = k + 2;
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| AppError::Parse {
                    line,
                    column: names[j].clone(),
                    message: format!("`{field}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(AppError::Parse { line, column: names[j].clone(), message: "non-finite value".into() });
                }
                columns[j].push(v);
            }
        }
        Ok(Self { names, columns })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn index(&self, name: &str) -> AppResult<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| AppError::MissingColumn(name.into()))
    }

    pub fn column(&self, name: &str) -> AppResult<&[f64]> {
        Ok(&self.columns[self.index(name)?])
    }

    /// Covariates from the named columns, or from every column not in `exclude`.
    pub fn covariates(&self, names: Option<&[String]>, exclude: &[&str]) -> AppResult<(Vec<String>, RawCovariates)> {
        let chosen: Vec<String> = match names {
            Some(list) => list.to_vec(),
            None => self.names.iter().filter(|n| !exclude.contains(&n.as_str())).cloned().collect(),
        };
        if chosen.is_empty() {
            return Err(AppError::Config("no covariate columns".into()));
        }
        let cols = chosen.iter().map(|n| self.column(n).map(<[f64]>::to_vec)).collect::<AppResult<Vec<_>>>()?;
        Ok((chosen, RawCovariates::new(Matrix::from_columns(&cols)?)?))
    }

    /// Treatment column as a mask; values must be 0 or 1.
    pub fn treatment(&self, name: &str) -> AppResult<Vec<bool>> {
        self.column(name)?
            .iter()
            .enumerate()
            .map(|(i, &v)| match v {
                1.0 => Ok(true),
                0.0 => Ok(false),
                v => Err(AppError::NonBinaryTreatment { line: i + 2, value: v.to_string() }),
            })
            .collect()
    }
}

/// Names of the pairwise products, in the order `pairwise_interactions` appends them.
pub fn interaction_names(names: &[String]) -> Vec<String> {
    let mut out = names.to_vec();
    for j in 0..names.len() {
        for k in j + 1..names.len() {
            out.push(format!("{}:{}", names[j], names[k]));
        }
    }
    out
}

/// A dataset bundle and the names of its retained covariate columns.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub bundle: DatasetBundle,
    pub names: Vec<String>,
}

pub fn load_dataset(cfg: &DatasetConfig) -> AppResult<LoadedDataset> {
    let table = Table::read(&cfg.path)?;
    let name = cfg.path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
    from_table(&table, cfg, &name)
}

pub fn from_table(table: &Table, cfg: &DatasetConfig, name: &str) -> AppResult<LoadedDataset> {
    let y = table.column(&cfg.outcome)?.to_vec();
    let treated = table.treatment(&cfg.treat)?;
    let (mut names, mut raw) = table.covariates(cfg.covariates.as_deref(), &[&cfg.outcome, &cfg.treat])?;
    if cfg.interactions {
        raw = pairwise_interactions(&raw)?;
        names = interaction_names(&names);
    }
    let bundle = fit_dataset(name, &raw, &y, &treated)?;
    let names = bundle.source_columns.iter().map(|&j| names[j].clone()).collect();
    Ok(LoadedDataset { bundle, names })
}
