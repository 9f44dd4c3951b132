use std::collections::BTreeSet;

use super::word::{Letter, Word};

/// Operator alphabet: outcome-0 projectors for every party input plus
/// `eve` general operators `Z_k` with their adjoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    pub inputs: Vec<usize>,
    pub eve: usize,
}

impl Alphabet {
    pub fn new(inputs: Vec<usize>, eve: usize) -> Self {
        Self { inputs, eve }
    }

    pub fn parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn party_letters(&self, party: usize) -> Vec<Letter> {
        (0..self.inputs[party]).map(|x| Letter::proj(party, x)).collect()
    }

    pub fn eve_letters(&self) -> Vec<Letter> {
        (0..self.eve).flat_map(|k| [Letter::z(k), Letter::z_star(k)]).collect()
    }

    pub fn group(&self, group: LetterGroup) -> Vec<Letter> {
        match group {
            LetterGroup::Party(k) => self.party_letters(k),
            LetterGroup::Eve => self.eve_letters(),
        }
    }

    pub fn letters(&self) -> Vec<Letter> {
        let mut out: Vec<Letter> = (0..self.parties()).flat_map(|k| self.party_letters(k)).collect();
        out.extend(self.eve_letters());
        out
    }

    pub fn contains(&self, letter: Letter) -> bool {
        match letter {
            Letter::Proj { party, input } => self.inputs.get(party as usize).is_some_and(|&n| (input as usize) < n),
            Letter::Eve { index, .. } => (index as usize) < self.eve,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LetterGroup {
    Party(usize),
    Eve,
}

/// Products taking one letter from each listed group, e.g. `[Party(0),
/// Eve]` yields every `A_x·Z` word.
pub type Family = Vec<LetterGroup>;

/// Monomial set: all words up to length `level` plus product families.
/// Localizing matrices run over basis words of length at most
/// `localizing_depth`, `level − 1` unless set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relaxation {
    pub level: usize,
    pub families: Vec<Family>,
    pub localizing_depth: Option<usize>,
}

impl Relaxation {
    pub fn level(level: usize) -> Self {
        Self { level, families: Vec::new(), localizing_depth: None }
    }

    pub fn with_localizing_depth(mut self, depth: usize) -> Self {
        self.localizing_depth = Some(depth);
        self
    }

    pub fn localizing_depth(&self) -> usize {
        self.localizing_depth.unwrap_or(self.level.saturating_sub(1))
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.families.push(family);
        self
    }

    /// Level 1 plus every product of letters from two or more distinct
    /// parties (one letter each), and every party-0 letter times an Eve
    /// letter.
    pub fn cross_terms(parties: usize) -> Self {
        let mut r = Self::level(1);
        for mask in 1usize..(1 << parties) {
            if mask.count_ones() >= 2 {
                r = r.with_family((0..parties).filter(|k| mask >> k & 1 == 1).map(LetterGroup::Party).collect());
            }
        }
        r.with_family(vec![LetterGroup::Party(0), LetterGroup::Eve])
    }

    /// Level 1 plus Alice-Bob products only.
    pub fn level1_ab() -> Self {
        Self::level(1).with_family(vec![LetterGroup::Party(0), LetterGroup::Party(1)])
    }

    /// Default choice: full level 2 for two parties, cross terms otherwise.
    pub fn default_for(parties: usize) -> Self {
        if parties <= 2 {
            Self::level(2)
        } else {
            Self::cross_terms(parties)
        }
    }

    pub fn basis(&self, alphabet: &Alphabet) -> Vec<Word> {
        let mut extras = Vec::new();
        for fam in &self.families {
            let mut words = vec![Word::identity()];
            for &g in fam {
                let letters = alphabet.group(g);
                words = words
                    .iter()
                    .flat_map(|w| letters.iter().map(move |&l| w.mul(&Word::letter(l))))
                    .collect();
            }
            extras.extend(words);
        }
        monomial_basis(alphabet, self.level, &extras)
    }

    pub fn label(&self) -> String {
        let mut s = format!("level {}", self.level);
        for fam in &self.families {
            let parts: Vec<String> = fam
                .iter()
                .map(|g| match g {
                    LetterGroup::Party(k) => format!("P{k}"),
                    LetterGroup::Eve => "Z".to_string(),
                })
                .collect();
            s.push_str(" + ");
            s.push_str(&parts.join(""));
        }
        s
    }
}

/// All canonical words of length at most `level` plus `extras`, without
/// duplicates, ordered by length then lexicographically (identity first).
pub fn monomial_basis(alphabet: &Alphabet, level: usize, extras: &[Word]) -> Vec<Word> {
    let letters = alphabet.letters();
    let mut set: BTreeSet<(usize, Word)> = BTreeSet::new();
    set.insert((0, Word::identity()));
    let mut frontier = vec![Word::identity()];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                let p = w.mul(&Word::letter(l));
                if set.insert((p.len(), p.clone())) {
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    for w in extras {
        set.insert((w.len(), w.clone()));
    }
    set.into_iter().map(|(_, w)| w).collect()
}
