//! Candidate data model, CSV ingestion/export, objective scaling and pairwise distances.
//!
//! A candidate file is a UTF-8 CSV whose first column is `id`, followed by the
//! design-parameter columns, the objective columns and an optional feasibility
//! column. Column roles, objective senses and operating-point metadata live in a
//! sidecar `key = value` file next to the CSV (same stem, `.meta` extension).
//! Without a sidecar every non-id column is treated as a minimized objective.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kv::{split_list, KeyValues};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Optimization direction of an objective column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Min,
    Max,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Min => "min",
            Sense::Max => "max",
        })
    }
}

impl FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" => Ok(Sense::Min),
            "max" => Ok(Sense::Max),
            other => Err(Error::Metadata(format!("unknown sense `{other}`"))),
        }
    }
}

/// A (torque, speed, current) condition at which per-point objectives are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub label: String,
    /// N·m
    pub torque: f64,
    /// rpm
    pub speed: f64,
    /// A
    pub current: f64,
}

impl OperatingPoint {
    pub fn new(label: impl Into<String>, torque: f64, speed: f64, current: f64) -> Result<Self> {
        let op = Self {
            label: label.into(),
            torque,
            speed,
            current,
        };
        if !(torque > 0.0 && speed > 0.0 && current > 0.0) {
            return Err(Error::Metadata(format!(
                "operating point `{}` needs positive torque, speed and current",
                op.label
            )));
        }
        Ok(op)
    }
}

/// Column roles and objective layout of a candidate file.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub id_column: String,
    pub param_columns: Vec<String>,
    pub objective_columns: Vec<String>,
    /// One entry per objective column.
    pub senses: Vec<Sense>,
    pub feasible_column: Option<String>,
    pub operating_points: Vec<OperatingPoint>,
    /// Objectives evaluated at each operating point (`D_op`).
    pub objectives_per_point: usize,
    /// Objectives that do not depend on the operating point (`D_global`).
    pub global_objectives: usize,
}

impl Schema {
    /// Every column except `id` (and `feasible`, when present) is a minimized global objective.
    pub fn infer(header: &[String]) -> Result<Self> {
        let id_column = header
            .first()
            .cloned()
            .ok_or_else(|| Error::MissingColumn { column: "id".into() })?;
        if id_column != "id" {
            return Err(Error::MissingColumn { column: "id".into() });
        }
        let feasible_column = header.iter().skip(1).find(|h| *h == "feasible").cloned();
        let objective_columns: Vec<String> = header
            .iter()
            .skip(1)
            .filter(|h| Some(*h) != feasible_column.as_ref())
            .cloned()
            .collect();
        Ok(Self {
            id_column,
            param_columns: Vec::new(),
            senses: vec![Sense::Min; objective_columns.len()],
            global_objectives: objective_columns.len(),
            objective_columns,
            feasible_column,
            operating_points: Vec::new(),
            objectives_per_point: 0,
        })
    }

    /// Number of operating points `M`.
    pub fn m(&self) -> usize {
        self.operating_points.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.senses.len() != self.objective_columns.len() {
            return Err(Error::Metadata(format!(
                "{} senses for {} objective columns",
                self.senses.len(),
                self.objective_columns.len()
            )));
        }
        let expected = self.m() * self.objectives_per_point + self.global_objectives;
        if expected != self.objective_columns.len() {
            return Err(Error::Metadata(format!(
                "M·D_op + D_global = {}·{} + {} = {expected}, but {} objective columns are declared",
                self.m(),
                self.objectives_per_point,
                self.global_objectives,
                self.objective_columns.len()
            )));
        }
        if self.objective_columns.is_empty() {
            return Err(Error::Metadata("no objective columns".into()));
        }
        let mut seen = HashSet::new();
        for c in std::iter::once(&self.id_column)
            .chain(&self.param_columns)
            .chain(&self.objective_columns)
            .chain(self.feasible_column.iter())
        {
            if !seen.insert(c.as_str()) {
                return Err(Error::Metadata(format!("column `{c}` assigned twice")));
            }
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("id_column", &self.id_column);
        kv.push("param_columns", self.param_columns.join(","));
        kv.push("objective_columns", self.objective_columns.join(","));
        kv.push(
            "senses",
            self.senses.iter().map(Sense::to_string).collect::<Vec<_>>().join(","),
        );
        kv.push("feasible_column", self.feasible_column.clone().unwrap_or_default());
        kv.push(
            "operating_points",
            self.operating_points
                .iter()
                .map(|op| op.label.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        for op in &self.operating_points {
            kv.push(
                format!("op.{}", op.label),
                format!("{},{},{}", op.torque, op.speed, op.current),
            );
        }
        kv.push("objectives_per_point", self.objectives_per_point);
        kv.push("global_objectives", self.global_objectives);
        kv
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let id_column = kv.get("id_column").unwrap_or("id").to_string();
        let param_columns = split_list(kv.get("param_columns").unwrap_or(""));
        let objective_columns = split_list(kv.require("objective_columns")?);
        let senses = match kv.get("senses") {
            Some(s) => split_list(s)
                .iter()
                .map(|x| x.parse())
                .collect::<Result<Vec<Sense>>>()?,
            None => vec![Sense::Min; objective_columns.len()],
        };
        let feasible_column = kv
            .get("feasible_column")
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        let mut operating_points = Vec::new();
        for label in split_list(kv.get("operating_points").unwrap_or("")) {
            let spec = kv.require(&format!("op.{label}"))?;
            let nums: Vec<f64> = split_list(spec)
                .iter()
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| Error::Metadata(format!("op.{label}: bad number `{x}`")))
                })
                .collect::<Result<_>>()?;
            if nums.len() != 3 {
                return Err(Error::Metadata(format!(
                    "op.{label}: expected torque,speed,current"
                )));
            }
            operating_points.push(OperatingPoint::new(label, nums[0], nums[1], nums[2])?);
        }
        let parse_usize = |key: &str, default: usize| -> Result<usize> {
            match kv.get(key) {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Metadata(format!("{key}: bad integer `{v}`"))),
                None => Ok(default),
            }
        };
        let objectives_per_point = parse_usize("objectives_per_point", 0)?;
        let global_objectives = parse_usize(
            "global_objectives",
            objective_columns.len() - objectives_per_point * operating_points.len(),
        )?;
        let schema = Self {
            id_column,
            param_columns,
            objective_columns,
            senses,
            feasible_column,
            operating_points,
            objectives_per_point,
            global_objectives,
        };
        schema.validate()?;
        Ok(schema)
    }
}

/// `N` design candidates with parameters, objectives and feasibility flags.
///
/// Immutable once built; all rows share the schema's column layout and ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<T> {
    ids: Vec<String>,
    params: Matrix<T>,
    objectives: Matrix<T>,
    schema: Schema,
    feasible: Vec<bool>,
}

impl<T: Scalar> CandidateSet<T> {
    pub fn new(
        ids: Vec<String>,
        params: Matrix<T>,
        objectives: Matrix<T>,
        schema: Schema,
        feasible: Vec<bool>,
    ) -> Result<Self> {
        schema.validate()?;
        let n = ids.len();
        if params.rows() != n || objectives.rows() != n || feasible.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} ids, {} parameter rows, {} objective rows, {} feasibility flags",
                params.rows(),
                objectives.rows(),
                feasible.len()
            )));
        }
        if params.cols() != schema.param_columns.len()
            || objectives.cols() != schema.objective_columns.len()
        {
            return Err(Error::DimensionMismatch(
                "matrix widths do not match schema columns".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(n);
        for (row, id) in ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    id: id.clone(),
                    row,
                });
            }
        }
        for (idx, x) in objectives.as_slice().iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonNumericCell {
                    row: idx / objectives.cols(),
                    column: schema.objective_columns[idx % objectives.cols()].clone(),
                    value: x.to_string(),
                });
            }
        }
        Ok(Self {
            ids,
            params,
            objectives,
            schema,
            feasible,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn params(&self) -> &Matrix<T> {
        &self.params
    }

    pub fn objectives(&self) -> &Matrix<T> {
        &self.objectives
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn feasible(&self) -> &[bool] {
        &self.feasible
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            params: self.params.select_rows(indices),
            objectives: self.objectives.select_rows(indices),
            schema: self.schema.clone(),
            feasible: indices.iter().map(|&i| self.feasible[i]).collect(),
        }
    }

    pub fn feasible_only(&self) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.feasible[i]).collect();
        self.subset(&keep)
    }

    pub fn with_objectives(&self, objectives: Matrix<T>) -> Result<Self> {
        Self::new(
            self.ids.clone(),
            self.params.clone(),
            objectives,
            self.schema.clone(),
            self.feasible.clone(),
        )
    }

    pub fn with_feasible(mut self, feasible: Vec<bool>) -> Result<Self> {
        if feasible.len() != self.len() {
            return Err(Error::DimensionMismatch("feasibility flag count".into()));
        }
        self.feasible = feasible;
        Ok(self)
    }

    /// Column index of a parameter or objective, by name.
    pub fn column(&self, name: &str) -> Option<Vec<T>> {
        if let Some(j) = self.schema.objective_columns.iter().position(|c| c == name) {
            return Some(self.objectives.column(j));
        }
        self.schema
            .param_columns
            .iter()
            .position(|c| c == name)
            .map(|j| self.params.column(j))
    }
}

/// Default sidecar location: same stem, `.meta` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_cell<T: Scalar>(value: &str, row: usize, column: &str) -> Result<T> {
    let bad = || Error::NonNumericCell {
        row,
        column: column.to_string(),
        value: value.to_string(),
    };
    let x: f64 = value.trim().parse().map_err(|_| bad())?;
    if !x.is_finite() {
        return Err(bad());
    }
    Ok(T::lit(x))
}

fn parse_flag(value: &str, row: usize, column: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(Error::NonNumericCell {
            row,
            column: column.to_string(),
            value: value.to_string(),
        }),
    }
}

/// Reads a candidate CSV. With `schema = None` the sidecar is used when present,
/// otherwise the schema is inferred from the header.
pub fn load_candidates<T: Scalar>(path: &Path, schema: Option<&Schema>) -> Result<CandidateSet<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();

    let schema = match schema {
        Some(s) => s.clone(),
        None => {
            let meta = sidecar_path(path);
            if meta.exists() {
                let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
                Schema::from_kv(&KeyValues::parse(&text)?)?
            } else {
                Schema::infer(&header)?
            }
        }
    };
    schema.validate()?;

    let locate = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
    };
    let id_idx = locate(&schema.id_column)?;
    let param_idx: Vec<usize> = schema
        .param_columns
        .iter()
        .map(|c| locate(c))
        .collect::<Result<_>>()?;
    let obj_idx: Vec<usize> = schema
        .objective_columns
        .iter()
        .map(|c| locate(c))
        .collect::<Result<_>>()?;
    let feas_idx = schema.feasible_column.as_deref().map(locate).transpose()?;

    let mut ids = Vec::new();
    let mut params = Vec::new();
    let mut objectives = Vec::new();
    let mut feasible = Vec::new();
    let mut seen = HashSet::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let id = record[id_idx].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row });
        }
        ids.push(id);
        for (&c, name) in param_idx.iter().zip(&schema.param_columns) {
            params.push(parse_cell::<T>(&record[c], row, name)?);
        }
        for (&c, name) in obj_idx.iter().zip(&schema.objective_columns) {
            objectives.push(parse_cell::<T>(&record[c], row, name)?);
        }
        feasible.push(match feas_idx {
            Some(c) => parse_flag(&record[c], row, &header[c])?,
            None => true,
        });
    }
    let n = ids.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: need at least 2 candidates, found {n}",
            path.display()
        )));
    }
    CandidateSet::new(
        ids,
        Matrix::from_vec(n, schema.param_columns.len(), params),
        Matrix::from_vec(n, schema.objective_columns.len(), objectives),
        schema,
        feasible,
    )
}

/// Writes the candidate CSV and its metadata sidecar.
pub fn save_candidates<T: Scalar>(set: &CandidateSet<T>, path: &Path) -> Result<()> {
    let schema = set.schema();
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header: Vec<&str> = vec![schema.id_column.as_str()];
    header.extend(schema.param_columns.iter().map(String::as_str));
    header.extend(schema.objective_columns.iter().map(String::as_str));
    if let Some(f) = &schema.feasible_column {
        header.push(f);
    }
    writer.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for i in 0..set.len() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        record.push(set.ids()[i].clone());
        record.extend(set.params().row(i).iter().map(|x| format_real(x.to_f64_lossy())));
        record.extend(set.objectives().row(i).iter().map(|x| format_real(x.to_f64_lossy())));
        if schema.feasible_column.is_some() {
            record.push(if set.feasible()[i] { "1" } else { "0" }.to_string());
        }
        writer.write_record(&record).map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    let meta = sidecar_path(path);
    let mut text = String::from("# candidate column roles and operating points\n");
    text.push_str(&schema.to_kv().render());
    fs::write(&meta, text).map_err(|e| Error::io(&meta, e))
}

/// Column scaling applied before embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMode {
    #[default]
    ZScore,
    MinMax,
    None,
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zscore" => Ok(ScaleMode::ZScore),
            "minmax" => Ok(ScaleMode::MinMax),
            "none" => Ok(ScaleMode::None),
            other => Err(Error::InvalidInput(format!("unknown scale mode `{other}`"))),
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleMode::ZScore => "zscore",
            ScaleMode::MinMax => "minmax",
            ScaleMode::None => "none",
        })
    }
}

/// Scales each column of `m`. `names` labels columns in errors.
///
/// z-scores use the population standard deviation. A constant column is an
/// error for `ZScore` and maps to zeros for `MinMax`.
pub fn standardize_matrix<T: Scalar>(m: &Matrix<T>, mode: ScaleMode, names: &[String]) -> Result<Matrix<T>> {
    let (n, k) = m.shape();
    let mut out = m.clone();
    if mode == ScaleMode::None || n == 0 {
        return Ok(out);
    }
    let nt = T::from_usize_lossy(n);
    for j in 0..k {
        let col = m.column(j);
        let lo = col.iter().copied().fold(T::infinity(), T::min);
        let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
        match mode {
            ScaleMode::ZScore => {
                if lo == hi {
                    return Err(Error::ZeroVarianceColumn {
                        column: names.get(j).cloned().unwrap_or_else(|| format!("#{j}")),
                    });
                }
                let mean = col.iter().copied().sum::<T>() / nt;
                let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / nt;
                let sd = var.sqrt();
                for i in 0..n {
                    out[(i, j)] = (m[(i, j)] - mean) / sd;
                }
            }
            ScaleMode::MinMax => {
                let range = hi - lo;
                for i in 0..n {
                    out[(i, j)] = if range > T::zero() {
                        (m[(i, j)] - lo) / range
                    } else {
                        T::zero()
                    };
                }
            }
            ScaleMode::None => unreachable!(),
        }
    }
    Ok(out)
}

/// Scales the objective columns; parameters are left untouched.
pub fn standardize<T: Scalar>(set: &CandidateSet<T>, mode: ScaleMode) -> Result<CandidateSet<T>> {
    let scaled = standardize_matrix(set.objectives(), mode, &set.schema().objective_columns)?;
    set.with_objectives(scaled)
}

/// Symmetric `N×N` matrix of squared Euclidean distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    values: Matrix<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Validates shape, symmetry, zero diagonal and non-negativity.
    pub fn from_matrix(values: Matrix<T>) -> Result<Self> {
        let (n, c) = values.shape();
        if n != c {
            return Err(Error::DimensionMismatch(format!("distance matrix is {n}×{c}")));
        }
        for i in 0..n {
            if values[(i, i)] != T::zero() {
                return Err(Error::InvalidInput(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let a = values[(i, j)];
                if !(a >= T::zero()) || a != values[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "distance ({i},{j}) negative, NaN or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    pub(crate) fn from_matrix_unchecked(values: Matrix<T>) -> Self {
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[(i, j)]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        self.values.row(i)
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.values
    }
}

/// `values[i][j] = Σ_k (x_ik − x_jk)²`. Rows are computed in parallel; each
/// entry is a fixed-order sum so the result does not depend on scheduling.
pub fn pairwise_sq_distances<T: Scalar>(x: &Matrix<T>) -> DistanceMatrix<T> {
    let n = x.rows();
    let mut values = Matrix::zeros(n, n);
    values
        .as_mut_slice()
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, out)| {
            let xi = x.row(i);
            for (j, o) in out.iter_mut().enumerate() {
                if i != j {
                    *o = xi
                        .iter()
                        .zip(x.row(j))
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .fold(T::zero(), |acc, v| acc + v);
                }
            }
        });
    DistanceMatrix::from_matrix_unchecked(values)
}
