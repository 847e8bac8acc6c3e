//! Coalitions as fixed-width bit sets and the characteristic-function contract.

use thiserror::Error;

/// Errors raised by coalition-game operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("agent index {agent} is out of range for a {n}-player game")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("agent {agent} is not a member of the coalition {coalition:#b}")]
    NotAMember { agent: usize, coalition: u64 },
    #[error("player count mismatch: {left} vs {right}")]
    PlayerCountMismatch { left: usize, right: usize },
    #[error("exact Shapley enumeration refused for n={n} (cap {cap}); use Monte Carlo estimation")]
    ExactCapExceeded { n: usize, cap: usize },
    #[error("Monte Carlo sample count must be at least 1, got {0}")]
    InvalidSampleCount(usize),
    #[error("player count must be in 1..=64, got {0}")]
    InvalidPlayerCount(usize),
}

/// A subset of the agents `0..n`, stored as a bit set.
///
/// Bit `i` of `members` is set iff agent `i` is in the coalition. Every set
/// bit is below `n`, and `n <= 64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coalition {
    members: u64,
    n: usize,
}

impl Coalition {
    /// The empty coalition over `n` agents.
    pub fn empty(n: usize) -> Self {
        assert!(n >= 1 && n <= 64, "player count must be in 1..=64");
        Coalition { members: 0, n }
    }

    /// The grand coalition containing all `n` agents.
    pub fn full(n: usize) -> Self {
        assert!(n >= 1 && n <= 64, "player count must be in 1..=64");
        let members = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Coalition { members, n }
    }

    /// Builds a coalition from explicit member indices.
    pub fn from_members(n: usize, members: &[usize]) -> Result<Self, GameError> {
        let mut c = Coalition::empty(n);
        for &i in members {
            c = c.with(i)?;
        }
        Ok(c)
    }

    /// Reconstructs a coalition from a raw bit mask.
    pub fn from_bits(n: usize, bits: u64) -> Result<Self, GameError> {
        let full = Coalition::full(n).members;
        if bits & !full != 0 {
            let agent = (bits & !full).trailing_zeros() as usize;
            return Err(GameError::AgentOutOfRange { agent, n });
        }
        Ok(Coalition { members: bits, n })
    }

    pub fn bits(&self) -> u64 {
        self.members
    }

    pub fn player_count(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.members.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.members == 0
    }

    pub fn contains(&self, agent: usize) -> bool {
        agent < self.n && self.members & (1u64 << agent) != 0
    }

    /// Returns the coalition with `agent` added.
    pub fn with(&self, agent: usize) -> Result<Self, GameError> {
        if agent >= self.n {
            return Err(GameError::AgentOutOfRange { agent, n: self.n });
        }
        Ok(Coalition {
            members: self.members | (1u64 << agent),
            n: self.n,
        })
    }

    /// Returns `S \ {agent}`; clears exactly that bit.
    pub fn without(&self, agent: usize) -> Result<Self, GameError> {
        if agent >= self.n {
            return Err(GameError::AgentOutOfRange { agent, n: self.n });
        }
        Ok(Coalition {
            members: self.members & !(1u64 << agent),
            n: self.n,
        })
    }

    pub fn union(&self, other: &Coalition) -> Coalition {
        debug_assert_eq!(self.n, other.n);
        Coalition {
            members: self.members | other.members,
            n: self.n,
        }
    }

    pub fn intersection(&self, other: &Coalition) -> Coalition {
        debug_assert_eq!(self.n, other.n);
        Coalition {
            members: self.members & other.members,
            n: self.n,
        }
    }

    /// Iterates the member indices in increasing order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.contains(i))
    }

    /// Iterates every coalition over `n` agents in mask order (2^n of them).
    pub fn enumerate_all(n: usize) -> impl Iterator<Item = Coalition> {
        assert!(n >= 1 && n <= 63, "exhaustive enumeration needs n <= 63");
        (0u64..(1u64 << n)).map(move |bits| Coalition { members: bits, n })
    }
}

impl std::fmt::Display for Coalition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A real-valued set function `v(S)` over coalitions of `n` players.
///
/// Implementations must be deterministic (same coalition, same value) and
/// define a finite `v(empty)`.
pub trait CharacteristicFn {
    fn player_count(&self) -> usize;
    fn eval(&self, coalition: Coalition) -> f64;
}

impl<T: CharacteristicFn + ?Sized> CharacteristicFn for &T {
    fn player_count(&self) -> usize {
        (**self).player_count()
    }
    fn eval(&self, coalition: Coalition) -> f64 {
        (**self).eval(coalition)
    }
}

/// A game defined by a closure; the workhorse for synthetic test games.
pub struct FnGame<F: Fn(Coalition) -> f64> {
    n: usize,
    f: F,
}

impl<F: Fn(Coalition) -> f64> FnGame<F> {
    pub fn new(n: usize, f: F) -> Self {
        assert!(n >= 1 && n <= 64);
        FnGame { n, f }
    }
}

impl<F: Fn(Coalition) -> f64> CharacteristicFn for FnGame<F> {
    fn player_count(&self) -> usize {
        self.n
    }
    fn eval(&self, coalition: Coalition) -> f64 {
        (self.f)(coalition)
    }
}

/// An additive game `v(S) = sum of per-player weights in S`.
pub struct AdditiveGame {
    weights: Vec<f64>,
}

impl AdditiveGame {
    pub fn new(weights: Vec<f64>) -> Self {
        assert!(!weights.is_empty() && weights.len() <= 64);
        AdditiveGame { weights }
    }
}

impl CharacteristicFn for AdditiveGame {
    fn player_count(&self) -> usize {
        self.weights.len()
    }
    fn eval(&self, coalition: Coalition) -> f64 {
        coalition.members().map(|i| self.weights[i]).sum()
    }
}

/// A game stored as a table over all 2^n coalitions, indexed by mask.
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(n: usize, values: Vec<f64>) -> Self {
        assert!(n >= 1 && n <= 20);
        assert_eq!(values.len(), 1usize << n, "table must cover all subsets");
        TableGame { n, values }
    }
}

impl CharacteristicFn for TableGame {
    fn player_count(&self) -> usize {
        self.n
    }
    fn eval(&self, coalition: Coalition) -> f64 {
        self.values[coalition.bits() as usize]
    }
}

/// The pointwise sum of two games, `(v + w)(S) = v(S) + w(S)`.
pub struct SumGame<V, W> {
    left: V,
    right: W,
}

impl<V: CharacteristicFn, W: CharacteristicFn> SumGame<V, W> {
    pub fn new(left: V, right: W) -> Result<Self, GameError> {
        if left.player_count() != right.player_count() {
            return Err(GameError::PlayerCountMismatch {
                left: left.player_count(),
                right: right.player_count(),
            });
        }
        Ok(SumGame { left, right })
    }
}

impl<V: CharacteristicFn, W: CharacteristicFn> CharacteristicFn for SumGame<V, W> {
    fn player_count(&self) -> usize {
        self.left.player_count()
    }
    fn eval(&self, coalition: Coalition) -> f64 {
        self.left.eval(coalition) + self.right.eval(coalition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra_holds() {
        let s = Coalition::from_members(5, &[0, 2, 4]).unwrap();
        assert_eq!(s.size(), 3);
        assert!(s.contains(2));
        assert!(!s.contains(1));

        let t = s.without(2).unwrap();
        assert_eq!(t.size(), 2);
        assert!(!t.contains(2));
        // Removing a non-member is a no-op.
        assert_eq!(t.without(2).unwrap(), t);

        let u = Coalition::from_members(5, &[1, 2]).unwrap();
        assert_eq!(s.union(&u).size(), 4);
        assert_eq!(s.intersection(&u).bits(), 0b100);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let s = Coalition::empty(3);
        assert_eq!(
            s.with(3).unwrap_err(),
            GameError::AgentOutOfRange { agent: 3, n: 3 }
        );
        assert!(Coalition::from_bits(3, 0b1000).is_err());
        assert!(Coalition::from_bits(3, 0b111).is_ok());
    }

    #[test]
    fn full_coalition_covers_all_members() {
        for n in [1, 7, 64] {
            let full = Coalition::full(n);
            assert_eq!(full.size(), n);
            assert!((0..n).all(|i| full.contains(i)));
        }
    }

    #[test]
    fn enumerate_all_yields_every_subset_once() {
        let all: Vec<_> = Coalition::enumerate_all(4).collect();
        assert_eq!(all.len(), 16);
        let mut seen = std::collections::HashSet::new();
        for c in &all {
            assert!(seen.insert(c.bits()));
        }
    }

    #[test]
    fn additive_game_sums_weights() {
        let g = AdditiveGame::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(g.eval(Coalition::empty(3)), 0.0);
        assert_eq!(g.eval(Coalition::full(3)), 6.0);
        assert_eq!(g.eval(Coalition::from_members(3, &[0, 2]).unwrap()), 4.0);
    }

    #[test]
    fn sum_game_requires_matching_player_counts() {
        let v = AdditiveGame::new(vec![1.0, 2.0]);
        let w = AdditiveGame::new(vec![1.0, 2.0, 3.0]);
        assert!(SumGame::new(v, w).is_err());
    }
}
