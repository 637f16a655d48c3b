//! The six-way SATD taxonomy.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Comment label. Declaration order is the canonical label order used for
/// score vectors, confusion matrices, model weights and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    NonSatd,
    CodeDesign,
    Documentation,
    Test,
    Requirement,
    Scientific,
}

pub const NUM_LABELS: usize = 6;

impl Label {
    pub const ALL: [Label; NUM_LABELS] = [
        Label::NonSatd,
        Label::CodeDesign,
        Label::Documentation,
        Label::Test,
        Label::Requirement,
        Label::Scientific,
    ];

    /// The five debt labels, i.e. everything except `NonSatd`.
    pub const SATD: [Label; 5] = [
        Label::CodeDesign,
        Label::Documentation,
        Label::Test,
        Label::Requirement,
        Label::Scientific,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Self::ALL.get(index).copied()
    }

    pub fn wire_name(self) -> &'static str {
        match self {
            Label::NonSatd => "non-satd",
            Label::CodeDesign => "code-design",
            Label::Documentation => "documentation",
            Label::Test => "test",
            Label::Requirement => "requirement",
            Label::Scientific => "scientific",
        }
    }

    pub fn from_wire(name: &str) -> Option<Label> {
        Self::ALL.into_iter().find(|l| l.wire_name() == name)
    }

    /// Column heading used in rendered tables.
    pub fn short_name(self) -> &'static str {
        match self {
            Label::NonSatd => "Non-SATD",
            Label::CodeDesign => "C/D",
            Label::Documentation => "DOC",
            Label::Test => "TES",
            Label::Requirement => "REQ",
            Label::Scientific => "SCI",
        }
    }

    pub fn is_satd(self) -> bool {
        self != Label::NonSatd
    }

    pub fn wire_names() -> Vec<String> {
        Self::ALL.iter().map(|l| l.wire_name().to_string()).collect()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::from_wire(s).ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// A value per label, indexed by [`Label`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PerLabel<T>(pub [T; NUM_LABELS]);

impl<T> Index<Label> for PerLabel<T> {
    type Output = T;

    fn index(&self, label: Label) -> &T {
        &self.0[label.index()]
    }
}

impl<T> IndexMut<Label> for PerLabel<T> {
    fn index_mut(&mut self, label: Label) -> &mut T {
        &mut self.0[label.index()]
    }
}

impl<T: Copy> PerLabel<T> {
    pub fn iter(&self) -> impl Iterator<Item = (Label, T)> + '_ {
        Label::ALL.into_iter().map(move |l| (l, self[l]))
    }
}

// Serialized as an object keyed by wire name, in canonical order.
impl<T: Serialize> Serialize for PerLabel<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(NUM_LABELS))?;
        for (label, value) in Label::ALL.iter().zip(self.0.iter()) {
            map.serialize_entry(label.wire_name(), value)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de> + Default + Copy> Deserialize<'de> for PerLabel<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = std::collections::BTreeMap::<String, T>::deserialize(deserializer)?;
        let mut out = PerLabel::<T>::default();
        let mut seen = [false; NUM_LABELS];
        for (key, value) in raw {
            let label = Label::from_wire(&key)
                .ok_or_else(|| D::Error::custom(format!("unknown label `{key}`")))?;
            out[label] = value;
            seen[label.index()] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(D::Error::custom(format!(
                "missing label `{}`",
                Label::ALL[missing].wire_name()
            )));
        }
        Ok(out)
    }
}
