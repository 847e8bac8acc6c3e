//! Verification of the five Shapley axioms on concrete game pairs.

use serde::Serialize;

use super::coalition::{CharacteristicFn, Coalition, GameError, SumGame};
use super::shapley::{exact_shapley_capped, DEFAULT_EXACT_CAP};

/// Outcome of one axiom check.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomCheck {
    pub passed: bool,
    /// Largest deviation observed by the check (0 when vacuous).
    pub max_deviation: f64,
}

/// Pass/fail report for the five axioms, evaluated with exact Shapley values.
///
/// Efficiency, symmetry and nullity are checked on `v`; linearity and
/// coherency relate `v` and `w`. Interchangeable pairs and null players are
/// detected by exhaustive marginal comparison within the tolerance, so a
/// game without such witnesses passes those axioms vacuously.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub efficiency: AxiomCheck,
    pub symmetry: AxiomCheck,
    pub nullity: AxiomCheck,
    pub linearity: AxiomCheck,
    pub coherency: AxiomCheck,
    /// Interchangeable pairs of `v` found by marginal comparison.
    pub symmetric_pairs: Vec<(usize, usize)>,
    /// Null players of `v` found by marginal comparison.
    pub null_players: Vec<usize>,
    /// Players for which the coherency premise (every marginal of `v`
    /// dominates the matching marginal of `w`) holds.
    pub dominated_players: Vec<usize>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.efficiency.passed
            && self.symmetry.passed
            && self.nullity.passed
            && self.linearity.passed
            && self.coherency.passed
    }
}

/// Checks the five axioms for `exact_shapley` on the pair `(v, w)`.
pub fn verify_axioms<V: CharacteristicFn, W: CharacteristicFn>(
    v: &V,
    w: &W,
    tol: f64,
) -> Result<AxiomReport, GameError> {
    let n = v.player_count();
    if w.player_count() != n {
        return Err(GameError::PlayerCountMismatch {
            left: n,
            right: w.player_count(),
        });
    }
    if n > DEFAULT_EXACT_CAP {
        return Err(GameError::ExactCapExceeded {
            n,
            cap: DEFAULT_EXACT_CAP,
        });
    }

    let phi_v = exact_shapley_capped(v, DEFAULT_EXACT_CAP)?.values;
    let phi_w = exact_shapley_capped(w, DEFAULT_EXACT_CAP)?.values;
    let sum = SumGame::new(v, w)?;
    let phi_sum = exact_shapley_capped(&sum, DEFAULT_EXACT_CAP)?.values;

    // Efficiency: credits sum to v(full) - v(empty), scale-aware.
    let grand = v.eval(Coalition::full(n));
    let span = grand - v.eval(Coalition::empty(n));
    let total: f64 = phi_v.iter().sum();
    let eff_dev = (total - span).abs();
    let efficiency = AxiomCheck {
        passed: eff_dev <= tol * (1.0 + grand.abs()),
        max_deviation: eff_dev,
    };

    // Symmetry: interchangeable pairs must receive equal credit.
    let mut symmetric_pairs = Vec::new();
    let mut sym_dev = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            if players_interchangeable(v, i, j, tol) {
                symmetric_pairs.push((i, j));
                sym_dev = sym_dev.max((phi_v[i] - phi_v[j]).abs());
            }
        }
    }
    let symmetry = AxiomCheck {
        passed: sym_dev <= tol,
        max_deviation: sym_dev,
    };

    // Nullity: players whose marginals all vanish get zero credit.
    let mut null_players = Vec::new();
    let mut null_dev = 0.0f64;
    for i in 0..n {
        if player_is_null(v, i, tol) {
            null_players.push(i);
            null_dev = null_dev.max(phi_v[i].abs());
        }
    }
    let nullity = AxiomCheck {
        passed: null_dev <= tol,
        max_deviation: null_dev,
    };

    // Linearity: phi_{v+w} = phi_v + phi_w elementwise.
    let mut lin_dev = 0.0f64;
    for i in 0..n {
        lin_dev = lin_dev.max((phi_sum[i] - (phi_v[i] + phi_w[i])).abs());
    }
    let linearity = AxiomCheck {
        passed: lin_dev <= tol,
        max_deviation: lin_dev,
    };

    // Coherency: where every marginal of v dominates the matching marginal
    // of w, the credit of v dominates the credit of w.
    let mut dominated_players = Vec::new();
    let mut coh_dev = 0.0f64;
    for i in 0..n {
        if marginals_dominate(v, w, i, tol) {
            dominated_players.push(i);
            coh_dev = coh_dev.max((phi_w[i] - phi_v[i]).max(0.0));
        }
    }
    let coherency = AxiomCheck {
        passed: coh_dev <= tol,
        max_deviation: coh_dev,
    };

    Ok(AxiomReport {
        efficiency,
        symmetry,
        nullity,
        linearity,
        coherency,
        symmetric_pairs,
        null_players,
        dominated_players,
    })
}

/// True when `v(S + i) = v(S + j)` for every S avoiding both players.
fn players_interchangeable<V: CharacteristicFn>(v: &V, i: usize, j: usize, tol: f64) -> bool {
    let n = v.player_count();
    for s in Coalition::enumerate_all(n) {
        if s.contains(i) || s.contains(j) {
            continue;
        }
        let vi = v.eval(s.with(i).unwrap());
        let vj = v.eval(s.with(j).unwrap());
        if (vi - vj).abs() > tol {
            return false;
        }
    }
    true
}

/// True when adding `i` never changes the value: `v(S + i) = v(S)` for all S.
fn player_is_null<V: CharacteristicFn>(v: &V, i: usize, tol: f64) -> bool {
    let n = v.player_count();
    for s in Coalition::enumerate_all(n) {
        if s.contains(i) {
            continue;
        }
        if (v.eval(s.with(i).unwrap()) - v.eval(s)).abs() > tol {
            return false;
        }
    }
    true
}

/// True when every marginal of `v` for player `i` dominates that of `w`.
fn marginals_dominate<V: CharacteristicFn, W: CharacteristicFn>(
    v: &V,
    w: &W,
    i: usize,
    tol: f64,
) -> bool {
    let n = v.player_count();
    for s in Coalition::enumerate_all(n) {
        if !s.contains(i) {
            continue;
        }
        let without = s.without(i).unwrap();
        let dv = v.eval(s) - v.eval(without);
        let dw = w.eval(s) - w.eval(without);
        if dv < dw - tol {
            return false;
        }
    }
    true
}
