use crate::error::{Error, Result};

/// Binary entropy in bits, with `0·log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p });
    }
    Ok(plogp(p) + plogp(1.0 - p))
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon entropy (bits) of a list of probabilities.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| plogp(p)).sum()
}

/// Joint distribution `P(a, b)` stored row-major with `a` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl JointTable {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::MalformedBehavior("ragged joint table".into()));
        }
        Self::new(rows.len(), cols, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.cols + b]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column_marginal(&self) -> Vec<f64> {
        (0..self.cols).map(|b| (0..self.rows).map(|a| self.get(a, b)).sum()).collect()
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.rows).map(|a| (0..self.cols).map(|b| self.get(a, b)).sum()).collect()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        if self.data.iter().any(|&p| p < -tol || !p.is_finite()) {
            return Err(Error::NotNormalized(f64::NAN));
        }
        let s: f64 = self.data.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::NotNormalized(s));
        }
        Ok(())
    }
}

/// `H(A|B) = H(A,B) − H(B)` in bits. The table must sum to one within 1e-9.
pub fn conditional_shannon_entropy(joint: &JointTable) -> Result<f64> {
    joint.check_normalized(1e-9)?;
    let h_ab = shannon_entropy(&joint.data);
    let h_b = shannon_entropy(&joint.column_marginal());
    Ok((h_ab - h_b).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89
        assert_abs_diff_eq!(binary_entropy(0.11).unwrap(), 0.499_915_958_164_528_8, epsilon = 1e-12);
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn conditional_entropy_values() {
        let corr = JointTable::from_rows(&[&[0.5, 0.0], &[0.0, 0.5]]).unwrap();
        assert_abs_diff_eq!(conditional_shannon_entropy(&corr).unwrap(), 0.0);
        let indep = JointTable::from_rows(&[&[0.25, 0.25], &[0.25, 0.25]]).unwrap();
        assert_abs_diff_eq!(conditional_shannon_entropy(&indep).unwrap(), 1.0, epsilon = 1e-15);
        let noisy = JointTable::from_rows(&[&[0.45, 0.05], &[0.05, 0.45]]).unwrap();
        assert_abs_diff_eq!(
            conditional_shannon_entropy(&noisy).unwrap(),
            binary_entropy(0.1).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(conditional_shannon_entropy(&noisy).unwrap(), 0.4690, epsilon = 1e-4);
        let bad = JointTable::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        assert!(matches!(conditional_shannon_entropy(&bad), Err(Error::NotNormalized(_))));
    }
}
