//! Attack policies: deterministic mappings from observations to actions.

use crate::attacks::Observation;
use serde::{Deserialize, Serialize};

/// Controls the preferred tip and the release of withheld blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Withhold {
    /// Keep mining privately, release nothing.
    Wait,
    /// Release just enough withheld blocks to race the defenders' tip.
    Match,
    /// Release just enough to displace the defenders' tip.
    Override,
    /// Abandon the private chain and mine on the defenders' tip.
    Adopt,
}

/// Controls which subblocks feed attacker-assembled summaries. Ignored by
/// protocols without summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtendMode {
    /// Use every available subblock.
    Inclusive,
    /// Use only subblocks the attacker mined itself.
    Exclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub withhold: Withhold,
    pub extend: ExtendMode,
}

pub trait Policy: Send + Sync {
    fn act(&self, obs: &Observation) -> Action;
    fn name(&self) -> String;
}

/// The hard-coded reference strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferencePolicy {
    /// Adopt the longest chain and release everything.
    Honest,
    /// Withhold own subblocks, release own summaries.
    GetAhead,
    /// Withhold own subblocks, override defender summaries as they come
    /// out.
    MinorDelay,
    /// Classic selfish mining against a linear chain.
    Sm1,
}

impl Policy for ReferencePolicy {
    fn act(&self, obs: &Observation) -> Action {
        let withhold = match self {
            ReferencePolicy::Honest => {
                if obs.h_d > obs.h_a {
                    Withhold::Adopt
                } else {
                    Withhold::Override
                }
            }
            ReferencePolicy::GetAhead => {
                if obs.h_d > obs.h_a {
                    Withhold::Adopt
                } else if obs.h_d < obs.h_a {
                    Withhold::Override
                } else {
                    Withhold::Wait
                }
            }
            ReferencePolicy::MinorDelay => {
                if obs.h_d > obs.h_a {
                    Withhold::Adopt
                } else if obs.h_d == 0 {
                    Withhold::Wait
                } else {
                    Withhold::Override
                }
            }
            ReferencePolicy::Sm1 => {
                if obs.h_d > obs.h_a {
                    Withhold::Adopt
                } else if obs.h_a == 1 && obs.h_d == 1 {
                    Withhold::Match
                } else if obs.h_d + 1 == obs.h_a && obs.h_d >= 1 {
                    Withhold::Override
                } else {
                    Withhold::Wait
                }
            }
        };
        Action { withhold, extend: ExtendMode::Inclusive }
    }

    fn name(&self) -> String {
        match self {
            ReferencePolicy::Honest => "honest",
            ReferencePolicy::GetAhead => "getahead",
            ReferencePolicy::MinorDelay => "minordelay",
            ReferencePolicy::Sm1 => "sm1",
        }
        .to_string()
    }
}

pub fn policy_by_name(name: &str) -> Option<Box<dyn Policy>> {
    match name {
        "honest" => Some(Box::new(ReferencePolicy::Honest)),
        "getahead" => Some(Box::new(ReferencePolicy::GetAhead)),
        "minordelay" => Some(Box::new(ReferencePolicy::MinorDelay)),
        "sm1" => Some(Box::new(ReferencePolicy::Sm1)),
        _ => None,
    }
}

/// Parameterized family for bounded policy search. Adoption when behind
/// is fixed; the parameters carve out when to Match, Override, or Wait,
/// and how to assemble summaries. The reference policies are members.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    /// Override when override_from <= h_a - h_d <= override_to ...
    pub override_from: i64,
    pub override_to: i64,
    /// ... and the defenders advanced at least this far.
    pub min_defender_height: u32,
    /// Match when h_a == h_d equals this value.
    pub match_at: Option<u32>,
    /// Hold Override back until the exclusive subblock count reaches
    /// this; 0 disables the gate.
    pub min_exclusive: u32,
    pub extend: ExtendMode,
}

impl ThresholdPolicy {
    pub fn honest() -> Self {
        ThresholdPolicy {
            override_from: 0,
            override_to: i64::MAX,
            min_defender_height: 0,
            match_at: None,
            min_exclusive: 0,
            extend: ExtendMode::Inclusive,
        }
    }

    pub fn get_ahead() -> Self {
        ThresholdPolicy { override_from: 1, ..Self::honest() }
    }

    pub fn minor_delay() -> Self {
        ThresholdPolicy { min_defender_height: 1, ..Self::honest() }
    }

    pub fn sm1() -> Self {
        ThresholdPolicy {
            override_from: 1,
            override_to: 1,
            min_defender_height: 1,
            match_at: Some(1),
            ..Self::honest()
        }
    }
}

impl Policy for ThresholdPolicy {
    fn act(&self, obs: &Observation) -> Action {
        let lead = obs.h_a as i64 - obs.h_d as i64;
        let withhold = if lead < 0 {
            Withhold::Adopt
        } else if self.match_at == Some(obs.h_a) && obs.h_a == obs.h_d {
            Withhold::Match
        } else if (self.override_from..=self.override_to).contains(&lead)
            && obs.h_d >= self.min_defender_height
            && obs.s_a_excl >= self.min_exclusive
        {
            Withhold::Override
        } else {
            Withhold::Wait
        };
        Action { withhold, extend: self.extend }
    }

    fn name(&self) -> String {
        format!(
            "threshold(o={}..{},hd>={},match={:?},excl>={},{:?})",
            self.override_from,
            if self.override_to == i64::MAX { -1 } else { self.override_to },
            self.min_defender_height,
            self.match_at,
            self.min_exclusive,
            self.extend,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(h_a: u32, h_d: u32) -> Observation {
        Observation { h_a, h_d, s_a: 0, s_a_excl: 0, s_d: 0, d_a: 0, d_a_excl: 0, d_d: 0 }
    }

    #[test]
    fn sm1_state_table() {
        let p = ReferencePolicy::Sm1;
        assert_eq!(p.act(&obs(1, 1)).withhold, Withhold::Match);
        assert_eq!(p.act(&obs(1, 2)).withhold, Withhold::Adopt);
        assert_eq!(p.act(&obs(2, 1)).withhold, Withhold::Override);
        assert_eq!(p.act(&obs(1, 0)).withhold, Withhold::Wait);
        assert_eq!(p.act(&obs(3, 1)).withhold, Withhold::Wait);
    }

    #[test]
    fn minor_delay_overrides_defender_summaries() {
        let p = ReferencePolicy::MinorDelay;
        assert_eq!(p.act(&obs(2, 1)).withhold, Withhold::Override);
        assert_eq!(p.act(&obs(0, 1)).withhold, Withhold::Adopt);
        assert_eq!(p.act(&obs(2, 0)).withhold, Withhold::Wait);
        assert_eq!(p.act(&obs(1, 1)).withhold, Withhold::Override);
    }

    #[test]
    fn get_ahead_waits_on_ties() {
        let p = ReferencePolicy::GetAhead;
        assert_eq!(p.act(&obs(1, 1)).withhold, Withhold::Wait);
        assert_eq!(p.act(&obs(0, 0)).withhold, Withhold::Wait);
        assert_eq!(p.act(&obs(2, 0)).withhold, Withhold::Override);
        assert_eq!(p.act(&obs(0, 1)).withhold, Withhold::Adopt);
    }

    #[test]
    fn honest_adopts_or_overrides() {
        let p = ReferencePolicy::Honest;
        assert_eq!(p.act(&obs(0, 1)).withhold, Withhold::Adopt);
        assert_eq!(p.act(&obs(0, 0)).withhold, Withhold::Override);
        assert_eq!(p.act(&obs(3, 1)).withhold, Withhold::Override);
    }

    // The threshold family contains the reference policies.
    #[test]
    fn threshold_family_reproduces_references() {
        let grid: Vec<Observation> =
            (0..5).flat_map(|a| (0..5).map(move |d| obs(a, d))).collect();
        for (t, r) in [
            (ThresholdPolicy::honest(), ReferencePolicy::Honest),
            (ThresholdPolicy::get_ahead(), ReferencePolicy::GetAhead),
            (ThresholdPolicy::minor_delay(), ReferencePolicy::MinorDelay),
            (ThresholdPolicy::sm1(), ReferencePolicy::Sm1),
        ] {
            for o in &grid {
                assert_eq!(t.act(o), r.act(o), "policy {} at {:?}", r.name(), o);
            }
        }
    }
}
