use std::fmt;

/// Letters of the noncommutative alphabet.
///
/// `Proj` is the outcome-0 projector of one party's input; the outcome-1
/// projector is `I − Proj` and never appears as a letter. `Eve` letters are
/// the operators `Z_k` and their adjoints `Z_k*`, with no relations among
/// themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Proj { party: u8, input: u8 },
    Eve { index: u16, dagger: bool },
}

impl Letter {
    pub fn proj(party: usize, input: usize) -> Self {
        Self::Proj {
            party: party as u8,
            input: input as u8,
        }
    }

    pub fn z(index: usize) -> Self {
        Self::Eve {
            index: index as u16,
            dagger: false,
        }
    }

    pub fn z_star(index: usize) -> Self {
        Self::Eve {
            index: index as u16,
            dagger: true,
        }
    }

    pub fn adjoint(self) -> Self {
        match self {
            Self::Proj { .. } => self,
            Self::Eve { index, dagger } => Self::Eve { index, dagger: !dagger },
        }
    }

    pub fn is_eve(&self) -> bool {
        matches!(self, Self::Eve { .. })
    }

    /// Commutation group: parties by index, Eve after all parties.
    fn group(&self) -> usize {
        match *self {
            Self::Proj { party, .. } => party as usize,
            Self::Eve { .. } => usize::MAX,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Proj { party, input } => write!(f, "P{party}_{input}"),
            Self::Eve { index, dagger } => write!(f, "Z{index}{}", if dagger { "*" } else { "" }),
        }
    }
}

/// Operator product in canonical form: letters grouped by party in
/// ascending order, Eve's letters last, repeated projectors collapsed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// Canonical form of an arbitrary product of letters.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut v: Vec<Letter> = letters.into_iter().collect();
        // stable: relative order inside each group is the operator order
        v.sort_by_key(Letter::group);
        v.dedup_by(|b, a| matches!(a, Letter::Proj { .. }) && a == b);
        Self(v)
    }

    pub fn letter(l: Letter) -> Self {
        Self(vec![l])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.0.iter().rev().map(|l| l.adjoint()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.0.iter().chain(&other.0).copied())
    }

    pub fn is_self_adjoint(&self) -> bool {
        *self == self.adjoint()
    }

    pub fn has_eve(&self) -> bool {
        self.0.iter().any(Letter::is_eve)
    }

    /// Projector letters of `party`, in order.
    pub fn party_letters(&self, party: usize) -> impl Iterator<Item = &Letter> {
        self.0
            .iter()
            .filter(move |l| matches!(l, Letter::Proj { party: p, .. } if *p as usize == party))
    }

    /// For words of commuting single projectors (at most one letter per
    /// party, no Eve letters) the `(party, input)` pairs; `None` otherwise.
    pub fn as_correlator(&self) -> Option<Vec<(usize, usize)>> {
        let mut out: Vec<(usize, usize)> = Vec::with_capacity(self.0.len());
        for l in &self.0 {
            match *l {
                Letter::Proj { party, input } => {
                    if out.last().is_some_and(|&(p, _)| p == party as usize) {
                        return None;
                    }
                    out.push((party as usize, input as usize));
                }
                Letter::Eve { .. } => return None,
            }
        }
        Some(out)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("·"))
    }
}

/// Representative of `{w, w†}` used when moments are taken real.
pub fn real_class(w: &Word) -> Word {
    let a = w.adjoint();
    if a < *w {
        a
    } else {
        w.clone()
    }
}
