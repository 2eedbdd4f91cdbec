use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::GlmFamily;

/// Fixed design matrix (n × p) with a response vector and column labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    labels: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking shapes and finiteness. Family-specific
    /// response checks are done by [`Dataset::validate_for`].
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!("empty design matrix ({n} x {p})")));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        if let Some((i, _)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite covariate at row {}, column {}",
                i % n,
                i / n
            )));
        }
        if let Some((i, _)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response at row {i}")));
        }
        let labels = match labels {
            Some(l) if l.len() != p => {
                return Err(Error::DimensionMismatch { expected: p, got: l.len() })
            }
            Some(l) => l,
            None => (0..p).map(|j| format!("x{j}")).collect(),
        };
        Ok(Self { x, y, labels })
    }

    /// Like [`Dataset::new`] followed by [`Dataset::validate_for`].
    pub fn for_family(
        family: GlmFamily,
        x: DMatrix<f64>,
        y: DVector<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let d = Self::new(x, y, labels)?;
        d.validate_for(family)?;
        Ok(d)
    }

    /// Logistic responses must be 0/1; Poisson responses nonnegative integers.
    pub fn validate_for(&self, family: GlmFamily) -> Result<()> {
        for (i, &v) in self.y.iter().enumerate() {
            if !family.validate_response(v) {
                return Err(Error::InvalidData(format!(
                    "response {v} at row {i} is not valid for the {family} family"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Same design with a different response vector.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y, Some(self.labels.clone()))
    }

    /// Columns of `X` indexed by `s`, as an n × |S| matrix.
    pub fn columns(&self, s: &ModelSupport) -> Result<DMatrix<f64>> {
        s.check_within(self.p())?;
        Ok(self.x.select_columns(s.indices()))
    }

    /// Full linear predictor `Xθ` for a p-vector.
    pub fn linear_predictor(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), got: theta.len() });
        }
        Ok(predictor_sparse(&self.x, theta))
    }
}

/// `Xθ` skipping zero coefficients, summing nonzero terms in ascending
/// column order. Restricting θ to any superset of its support therefore
/// gives bit-identical predictors.
pub(crate) fn predictor_sparse(x: &DMatrix<f64>, theta: &DVector<f64>) -> DVector<f64> {
    let mut eta = DVector::zeros(x.nrows());
    for (j, &t) in theta.iter().enumerate() {
        if t != 0.0 {
            eta.axpy(t, &x.column(j), 1.0);
        }
    }
    eta
}

/// Sorted, duplicate-free set of column indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModelSupport(Vec<usize>);

impl ModelSupport {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Canonicalises `indices` (sorts); rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSupport(format!("duplicate index in {indices:?}")));
        }
        Ok(Self(indices))
    }

    /// Support of the nonzero entries of `theta`.
    pub fn of_nonzero(theta: &[f64]) -> Self {
        Self(theta.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_superset_of(&self, other: &ModelSupport) -> bool {
        other.0.iter().all(|j| self.contains(*j))
    }

    pub fn check_within(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&m) if m >= p => {
                Err(Error::InvalidSupport(format!("index {m} out of range for p = {p}")))
            }
            _ => Ok(()),
        }
    }

    /// New support with `j` inserted (no-op if present).
    pub fn with(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&j) {
            v.insert(pos, j);
        }
        Self(v)
    }

    /// New support with `j` removed (no-op if absent).
    pub fn without(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        if let Ok(pos) = v.binary_search(&j) {
            v.remove(pos);
        }
        Self(v)
    }

    pub fn union(&self, other: &ModelSupport) -> Self {
        let mut v: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// Embeds a |S|-vector into R^p with zeros off the support.
    pub fn embed(&self, theta_s: &DVector<f64>, p: usize) -> DVector<f64> {
        let mut full = DVector::zeros(p);
        for (k, &j) in self.0.iter().enumerate() {
            full[j] = theta_s[k];
        }
        full
    }

    /// Restricts a p-vector to the support.
    pub fn restrict(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|&j| theta[j]))
    }
}

impl TryFrom<Vec<usize>> for ModelSupport {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ModelSupport> for Vec<usize> {
    fn from(s: ModelSupport) -> Self {
        s.0
    }
}

impl std::fmt::Display for ModelSupport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}
