use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Approach;
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 34;
pub const N_TOPIC_FEATURES: usize = 10;

/// One of the catalog features `F1..=F34`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureId(u8);

impl FeatureId {
    pub const fn new(number: u8) -> Option<FeatureId> {
        if number >= 1 && number as usize <= N_FEATURES {
            Some(FeatureId(number))
        } else {
            None
        }
    }

    pub const fn number(self) -> u8 {
        self.0
    }

    /// Zero-based position in a feature vector.
    pub const fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = FeatureId> {
        (1..=N_FEATURES as u8).map(FeatureId)
    }

    pub fn descriptor(self) -> &'static FeatureDescriptor {
        &CATALOG[self.index()]
    }

    /// Topic slot `k` (0-based) maps onto F17..=F26.
    pub fn topic(k: usize) -> FeatureId {
        assert!(k < N_TOPIC_FEATURES, "topic slot {k} out of range");
        FeatureId(17 + k as u8)
    }
}

impl fmt::Debug for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

impl std::str::FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .strip_prefix('F')
            .and_then(|n| n.parse::<u8>().ok())
            .and_then(FeatureId::new)
            .ok_or_else(|| Error::malformed("feature id", s))
    }
}

impl TryFrom<String> for FeatureId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureId> for String {
    fn from(id: FeatureId) -> String {
        id.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Textual,
    Semantic,
    Topic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachMask {
    Both,
    /// Left out of the response-urgency dataset.
    PresenceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureDescriptor {
    pub id: FeatureId,
    pub name: &'static str,
    pub kind: FeatureKind,
    pub mask: ApproachMask,
}

impl FeatureDescriptor {
    pub fn used_by(&self, approach: Approach) -> bool {
        match (self.mask, approach) {
            (ApproachMask::Both, _) => true,
            (ApproachMask::PresenceOnly, Approach::ResponsePresence) => true,
            (ApproachMask::PresenceOnly, Approach::ResponseUrgency) => false,
        }
    }
}

const fn d(n: u8, name: &'static str, kind: FeatureKind, mask: ApproachMask) -> FeatureDescriptor {
    FeatureDescriptor {
        id: FeatureId(n),
        name,
        kind,
        mask,
    }
}

use ApproachMask::{Both, PresenceOnly};
use FeatureKind::{Semantic, Textual, Topic};

pub static CATALOG: [FeatureDescriptor; N_FEATURES] = [
    d(1, "Total Useful Review Score", Semantic, PresenceOnly),
    d(2, "Review Score", Semantic, Both),
    d(3, "Review Length", Textual, Both),
    d(4, "Review Readability", Textual, Both),
    d(5, "Review Complexity", Textual, Both),
    d(6, "Neutrality", Semantic, Both),
    d(7, "Polarity of Review", Semantic, Both),
    d(8, "Number of Nouns", Textual, Both),
    d(9, "Number of Verbs", Textual, Both),
    d(10, "Number of Angry Words", Semantic, Both),
    d(11, "Number of Sad Words", Semantic, Both),
    d(12, "Number of Anxious Words", Semantic, Both),
    d(13, "Number of Negative Words", Semantic, Both),
    d(14, "Number of Positive Words", Semantic, Both),
    d(15, "No. of Words Commitment", Semantic, Both),
    d(16, "Review Sentiment", Semantic, Both),
    d(17, "Topic 0", Topic, Both),
    d(18, "Topic 1", Topic, Both),
    d(19, "Topic 2", Topic, Both),
    d(20, "Topic 3", Topic, Both),
    d(21, "Topic 4", Topic, Both),
    d(22, "Topic 5", Topic, Both),
    d(23, "Topic 6", Topic, Both),
    d(24, "Topic 7", Topic, Both),
    d(25, "Topic 8", Topic, Both),
    d(26, "Topic 9", Topic, Both),
    d(27, "Number of Adverbs", Textual, PresenceOnly),
    d(28, "Number of Adjectives", Textual, PresenceOnly),
    d(29, "Review Informativeness", Semantic, PresenceOnly),
    d(30, "Feature Request Category", Semantic, Both),
    d(31, "Problem Detection Category", Semantic, Both),
    d(32, "Information Request Category", Semantic, Both),
    d(33, "Informers Category", Semantic, Both),
    d(34, "Other Review Categories", Semantic, Both),
];

/// Feature ids a dataset built under `approach` may use, in F-number order.
pub fn approach_features(approach: Approach) -> Vec<FeatureId> {
    CATALOG
        .iter()
        .filter(|d| d.used_by(approach))
        .map(|d| d.id)
        .collect()
}

pub mod ids {
    use super::FeatureId;

    pub const HELPFUL_VOTES: FeatureId = FeatureId(1);
    pub const RATING: FeatureId = FeatureId(2);
    pub const LENGTH: FeatureId = FeatureId(3);
    pub const READABILITY: FeatureId = FeatureId(4);
    pub const COMPLEXITY: FeatureId = FeatureId(5);
    pub const NEUTRALITY: FeatureId = FeatureId(6);
    pub const POLARITY: FeatureId = FeatureId(7);
    pub const NOUNS: FeatureId = FeatureId(8);
    pub const VERBS: FeatureId = FeatureId(9);
    pub const ANGRY: FeatureId = FeatureId(10);
    pub const SAD: FeatureId = FeatureId(11);
    pub const ANXIOUS: FeatureId = FeatureId(12);
    pub const NEGATIVE: FeatureId = FeatureId(13);
    pub const POSITIVE: FeatureId = FeatureId(14);
    pub const COMMITMENT: FeatureId = FeatureId(15);
    pub const SENTIMENT: FeatureId = FeatureId(16);
    pub const ADVERBS: FeatureId = FeatureId(27);
    pub const ADJECTIVES: FeatureId = FeatureId(28);
    pub const INFORMATIVENESS: FeatureId = FeatureId(29);
    pub const FEATURE_REQUEST: FeatureId = FeatureId(30);
    pub const PROBLEM_DETECTION: FeatureId = FeatureId(31);
    pub const INFORMATION_REQUEST: FeatureId = FeatureId(32);
    pub const INFORMERS: FeatureId = FeatureId(33);
    pub const OTHER: FeatureId = FeatureId(34);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_shape() {
        assert_eq!(CATALOG.len(), 34);
        let ids: HashSet<_> = CATALOG.iter().map(|d| d.id).collect();
        assert_eq!(ids.len(), 34);
        for (i, d) in CATALOG.iter().enumerate() {
            assert_eq!(d.id.index(), i);
            assert_eq!(d.kind == FeatureKind::Topic, (17..=26).contains(&d.id.number()));
        }
    }

    #[test]
    fn urgency_mask_drops_four_features() {
        let urgency = approach_features(Approach::ResponseUrgency);
        assert_eq!(urgency.len(), 30);
        for n in [1, 27, 28, 29] {
            assert!(!urgency.contains(&FeatureId(n)));
        }
        assert_eq!(approach_features(Approach::ResponsePresence).len(), 34);
    }

    #[test]
    fn ids_parse_and_print() {
        assert_eq!("F21".parse::<FeatureId>().unwrap(), FeatureId::topic(4));
        assert!("F0".parse::<FeatureId>().is_err());
        assert!("F35".parse::<FeatureId>().is_err());
        assert!("21".parse::<FeatureId>().is_err());
        assert_eq!(ids::OTHER.descriptor().name, "Other Review Categories");
    }
}
