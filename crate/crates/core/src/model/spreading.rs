use std::fmt::Write as _;
use std::path::Path;

use super::Scenario;
use crate::{Error, Result};

/// F×K matrix of per-sub-channel powers `v[f,k] = w[f,k]² / d_k`.
///
/// Stored column-major since almost every consumer walks one UE at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadingMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    sparsity: Option<Vec<usize>>,
}

impl SpreadingMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
            sparsity: None,
        }
    }

    /// Builds from columns; every entry must be finite and nonnegative.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (k, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: format!("column of length {rows}"),
                    actual: format!("column {k} of length {}", col.len()),
                });
            }
            for (f, &v) in col.iter().enumerate() {
                m.set(f, k, v)?;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, f: usize, k: usize) -> f64 {
        self.values[k * self.rows + f]
    }

    pub fn set(&mut self, f: usize, k: usize, v: f64) -> Result<()> {
        if f >= self.rows || k >= self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("index within {}x{}", self.rows, self.cols),
                actual: format!("({f}, {k})"),
            });
        }
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({f}, {k}) = {v} is not a nonnegative power"
            )));
        }
        self.values[k * self.rows + f] = v;
        Ok(())
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k * self.rows..(k + 1) * self.rows]
    }

    /// Rows with a positive entry in column `k`.
    pub fn support(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.column(k)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(f, _)| f)
    }

    pub fn column_power(&self, k: usize) -> f64 {
        self.column(k).iter().sum()
    }

    /// Nonzero entries as `(f, k, v)`, column by column.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |k| {
            self.column(k)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(move |(f, &v)| (f, k, v))
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    /// Declared per-column sparsity budget, if any.
    pub fn sparsity(&self) -> Option<&[usize]> {
        self.sparsity.as_deref()
    }

    /// Declares the matrix sparse with budget `d_k` per column.
    pub fn with_sparsity(mut self, budget: Vec<usize>) -> Result<Self> {
        if budget.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} sparsity entries", self.cols),
                actual: budget.len().to_string(),
            });
        }
        for (k, &d) in budget.iter().enumerate() {
            let used = self.support(k).count();
            if used > d {
                return Err(Error::InvalidMatrix(format!(
                    "column {k} has {used} nonzeros, budget {d}"
                )));
            }
        }
        self.sparsity = Some(budget);
        Ok(self)
    }

    /// Checks dimensions and the per-UE power budget against `scn`.
    pub fn check_conforms(&self, scn: &Scenario) -> Result<()> {
        if self.rows != scn.subchannels() || self.cols != scn.num_ues() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", scn.subchannels(), scn.num_ues()),
                actual: format!("{}x{}", self.rows, self.cols),
            });
        }
        for k in 0..self.cols {
            let p = self.column_power(k);
            let budget = scn.power(k);
            if p > budget * (1.0 + 1e-12) {
                return Err(Error::InvalidMatrix(format!(
                    "column {k} spends {p} W over its budget {budget} W"
                )));
            }
        }
        Ok(())
    }

    /// Sparse triplet text: `F <rows>` and `K <cols>` header lines, then one
    /// `f k v` line per nonzero (0-based indices). `#` starts a comment.
    pub fn to_triplets(&self) -> String {
        let mut out = format!("F {}\nK {}\n", self.rows, self.cols);
        for (f, k, v) in self.nonzeros() {
            writeln!(out, "{f} {k} {v}").expect("writing to a String");
        }
        out
    }

    pub fn from_triplets(text: &str) -> Result<Self> {
        let mut rows = None;
        let mut cols = None;
        let mut matrix: Option<Self> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["F", n] => rows = Some(n.parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
                ["K", n] => cols = Some(n.parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
                [f, k, v] => {
                    let m = match matrix.as_mut() {
                        Some(m) => m,
                        None => {
                            let (Some(r), Some(c)) = (rows, cols) else {
                                return Err(parse_err("entries before F/K header".into()));
                            };
                            matrix.insert(Self::zeros(r, c))
                        }
                    };
                    let f = f.parse::<usize>().map_err(|e| parse_err(e.to_string()))?;
                    let k = k.parse::<usize>().map_err(|e| parse_err(e.to_string()))?;
                    let v = v.parse::<f64>().map_err(|e| parse_err(e.to_string()))?;
                    m.set(f, k, v).map_err(|e| parse_err(e.to_string()))?;
                }
                _ => return Err(parse_err(format!("unrecognised line {line:?}"))),
            }
        }
        match (matrix, rows, cols) {
            (Some(m), _, _) => Ok(m),
            (None, Some(r), Some(c)) => Ok(Self::zeros(r, c)),
            _ => Err(Error::Parse {
                line: 0,
                message: "missing F/K header".into(),
            }),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_triplets(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_triplets())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_negative_and_nan() {
        let mut m = SpreadingMatrix::zeros(2, 2);
        assert!(m.set(0, 0, -0.1).is_err());
        assert!(m.set(0, 0, f64::NAN).is_err());
        assert!(m.set(2, 0, 1.0).is_err());
        m.set(1, 1, 0.25).unwrap();
        assert_eq!(m.support(1).collect::<Vec<_>>(), vec![1]);
        assert_eq!(m.support(0).count(), 0);
    }

    #[test]
    fn sparsity_budget_enforced() {
        let m = SpreadingMatrix::from_columns(3, &[vec![0.5, 0.5, 0.0]]).unwrap();
        assert!(m.clone().with_sparsity(vec![1]).is_err());
        assert_eq!(m.with_sparsity(vec![2]).unwrap().sparsity(), Some(&[2][..]));
    }

    #[test]
    fn triplet_parse_errors_carry_line() {
        let err = SpreadingMatrix::from_triplets("F 2\nK 2\n0 0 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(SpreadingMatrix::from_triplets("0 0 1\n").is_err());
        let empty = SpreadingMatrix::from_triplets("# nothing\nF 3\nK 4\n").unwrap();
        assert_eq!((empty.rows(), empty.cols(), empty.nnz()), (3, 4, 0));
    }

    proptest! {
        #[test]
        fn triplets_round_trip(
            rows in 1usize..6,
            entries in proptest::collection::vec((0usize..6, 0usize..5, 0.0f64..10.0), 0..20),
        ) {
            let mut m = SpreadingMatrix::zeros(rows, 5);
            for (f, k, v) in entries {
                if f < rows {
                    m.set(f, k, v).unwrap();
                }
            }
            prop_assert_eq!(SpreadingMatrix::from_triplets(&m.to_triplets()).unwrap(), m);
        }
    }
}
