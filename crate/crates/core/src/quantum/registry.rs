use std::fmt;

use crate::error::{Error, Result};

/// Opaque identifier of a bosonic mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel(String);

impl ModeLabel {
    pub fn new(label: impl Into<String>) -> Self {
        Self(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModeLabel {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ModeLabel {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&ModeLabel> for ModeLabel {
    fn from(l: &ModeLabel) -> Self {
        l.clone()
    }
}

/// Ordered list of modes with a per-mode occupation cutoff.
///
/// Basis states are indexed in mixed radix with the first mode most
/// significant, so the Kronecker product of two registries' vectors matches
/// the concatenation of the registries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeRegistry {
    labels: Vec<ModeLabel>,
    cutoffs: Vec<usize>,
}

impl ModeRegistry {
    pub fn new<L: Into<ModeLabel>>(modes: impl IntoIterator<Item = (L, usize)>) -> Result<Self> {
        let mut labels: Vec<ModeLabel> = Vec::new();
        let mut cutoffs = Vec::new();
        for (label, cutoff) in modes {
            let label = label.into();
            if cutoff == 0 {
                return Err(Error::InvalidCutoff {
                    mode: label.to_string(),
                    cutoff,
                });
            }
            if labels.contains(&label) {
                return Err(Error::DuplicateMode(label.to_string()));
            }
            labels.push(label);
            cutoffs.push(cutoff);
        }
        Ok(Self { labels, cutoffs })
    }

    /// Registry with no modes (dimension one).
    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            cutoffs: Vec::new(),
        }
    }

    /// `count` modes named `prefix0, prefix1, ...` sharing one cutoff.
    pub fn uniform(prefix: &str, count: usize, cutoff: usize) -> Result<Self> {
        Self::new((0..count).map(|k| (format!("{prefix}{k}"), cutoff)))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cutoff(&self, position: usize) -> usize {
        self.cutoffs[position]
    }

    pub fn dim(&self) -> usize {
        self.cutoffs.iter().map(|c| c + 1).product()
    }

    pub fn position(&self, label: &ModeLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn contains(&self, label: &ModeLabel) -> bool {
        self.labels.contains(label)
    }

    /// Index stride of each mode.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for k in (0..self.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * (self.cutoffs[k + 1] + 1);
        }
        strides
    }

    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.len()];
        for k in (0..self.len()).rev() {
            let radix = self.cutoffs[k] + 1;
            occ[k] = index % radix;
            index /= radix;
        }
        occ
    }

    pub fn index(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: occupation.len(),
            });
        }
        let mut index = 0;
        for (k, &n) in occupation.iter().enumerate() {
            if n > self.cutoffs[k] {
                return Err(Error::InvalidCutoff {
                    mode: self.labels[k].to_string(),
                    cutoff: n,
                });
            }
            index = index * (self.cutoffs[k] + 1) + n;
        }
        Ok(index)
    }

    /// Concatenation; fails if any label is shared.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if let Some(l) = other.labels.iter().find(|l| self.contains(l)) {
            return Err(Error::DuplicateMode(l.to_string()));
        }
        let mut out = self.clone();
        out.labels.extend(other.labels.iter().cloned());
        out.cutoffs.extend(other.cutoffs.iter().copied());
        Ok(out)
    }

    /// Sub-registry with the modes at `positions`, in that order.
    pub fn select(&self, positions: &[usize]) -> Self {
        Self {
            labels: positions.iter().map(|&p| self.labels[p].clone()).collect(),
            cutoffs: positions.iter().map(|&p| self.cutoffs[p]).collect(),
        }
    }

    pub fn with_cutoff(&self, position: usize, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidCutoff {
                mode: self.labels[position].to_string(),
                cutoff,
            });
        }
        let mut out = self.clone();
        out.cutoffs[position] = cutoff;
        Ok(out)
    }

    pub fn relabel(&self, mut f: impl FnMut(&ModeLabel) -> ModeLabel) -> Result<Self> {
        Self::new(
            self.labels
                .iter()
                .zip(&self.cutoffs)
                .map(|(l, &c)| (f(l), c)),
        )
    }

    /// Positions of `labels`, failing on the first unknown one.
    pub fn positions<L: Into<ModeLabel> + Clone>(&self, labels: &[L]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| self.position(&l.clone().into()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let r = ModeRegistry::new([("a", 1), ("b", 3), ("c", 2)]).unwrap();
        assert_eq!(r.dim(), 2 * 4 * 3);
        for i in 0..r.dim() {
            assert_eq!(r.index(&r.occupation(i)).unwrap(), i);
        }
        assert_eq!(r.strides(), vec![12, 3, 1]);
    }

    #[test]
    fn rejects_duplicates_and_zero_cutoff() {
        assert!(matches!(
            ModeRegistry::new([("a", 1), ("a", 1)]),
            Err(Error::DuplicateMode(_))
        ));
        assert!(matches!(
            ModeRegistry::new([("a", 0)]),
            Err(Error::InvalidCutoff { .. })
        ));
        let r = ModeRegistry::new([("a", 1)]).unwrap();
        assert!(r.concat(&r).is_err());
    }
}
