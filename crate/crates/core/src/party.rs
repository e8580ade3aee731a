//! Party identities.

use std::fmt;

/// One of the three parties. `P0` is the distributor, `P1` and `P2` the evaluators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyId {
    P0,
    P1,
    P2,
}

impl PartyId {
    pub const ALL: [PartyId; 3] = [PartyId::P0, PartyId::P1, PartyId::P2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<PartyId> {
        PartyId::ALL.get(i).copied()
    }

    pub fn is_evaluator(self) -> bool {
        self != PartyId::P0
    }

    /// The two other parties, in id order.
    pub fn others(self) -> [PartyId; 2] {
        match self {
            PartyId::P0 => [PartyId::P1, PartyId::P2],
            PartyId::P1 => [PartyId::P0, PartyId::P2],
            PartyId::P2 => [PartyId::P0, PartyId::P1],
        }
    }

    /// For an evaluator, the other evaluator.
    pub fn co_evaluator(self) -> PartyId {
        match self {
            PartyId::P1 => PartyId::P2,
            PartyId::P2 => PartyId::P1,
            PartyId::P0 => panic!("P0 has no co-evaluator"),
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index())
    }
}
