#![allow(dead_code)]

use dicka_core::measurements::BehaviorTable;
use dicka_core::npa::{Alphabet, MomentProblem, Word, Letter};

/// Two-party behavior with uniform marginals and correlators `e[x][y]`.
pub fn correlated_behavior(e: [[f64; 2]; 2]) -> BehaviorTable {
    BehaviorTable::from_fn(vec![2, 2], |x, o| {
        let sign = if o[0] == o[1] { 1.0 } else { -1.0 };
        (1.0 + sign * e[x[0]][x[1]]) / 4.0
    })
    .unwrap()
}

/// Singlet-type behavior at CHSH value `2√2`.
pub fn tsirelson_behavior() -> BehaviorTable {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    correlated_behavior([[c, c], [c, -c]])
}

/// Both parties always answer 0.
pub fn deterministic_behavior() -> BehaviorTable {
    BehaviorTable::from_fn(vec![2, 2], |_, o| if o == [0, 0] { 1.0 } else { 0.0 }).unwrap()
}

/// Minimizes `−(E00 + E01 + E10 − E11)` with `E_xy = 4⟨A_xB_y⟩ − 2⟨A_x⟩ − 2⟨B_y⟩ + 1`.
pub fn chsh_problem() -> MomentProblem {
    let mut objective = Vec::new();
    let mut constant = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let s = if x == 1 && y == 1 { 1.0 } else { -1.0 };
            let a = Letter::proj(0, x);
            let b = Letter::proj(1, y);
            objective.push((Word::new([a, b]), 4.0 * s));
            objective.push((Word::letter(a), -2.0 * s));
            objective.push((Word::letter(b), -2.0 * s));
            constant += s;
        }
    }
    MomentProblem {
        alphabet: Alphabet::new(vec![2, 2], 0),
        objective,
        objective_constant: constant,
        equalities: Vec::new(),
        equality_slack: 0.0,
        bounds: Vec::new(),
    }
}
