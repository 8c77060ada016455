use std::fmt;
use std::str::FromStr;

use crate::autodiff::{AutodiffError, Graph, NodeId};
use crate::encoder::ContextVectors;

use super::system::Configuration;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FeatureMode {
    /// `s2, s1, s0, b0`.
    #[default]
    Simple,
    /// The simple items plus the leftmost and rightmost modifiers of
    /// `s0, s1, s2` and the leftmost modifier of `b0`.
    Extended,
}

impl FeatureMode {
    pub fn num_vectors(self) -> usize {
        match self {
            FeatureMode::Simple => 4,
            FeatureMode::Extended => 11,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Simple => "simple",
            FeatureMode::Extended => "extended",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(FeatureMode::Simple),
            "extended" => Ok(FeatureMode::Extended),
            other => Err(format!("unknown feature mode '{}'", other)),
        }
    }
}

/// Token positions read by the feature function; `None` slots take the pad vector.
pub fn feature_positions(c: &Configuration, mode: FeatureMode) -> Vec<Option<usize>> {
    let s0 = c.s(0);
    let s1 = c.s(1);
    let s2 = c.s(2);
    let b0 = c.b0();
    let mut positions = Vec::with_capacity(mode.num_vectors());
    positions.extend([s2, s1, s0, Some(b0)]);
    if mode == FeatureMode::Extended {
        for s in [s0, s1, s2] {
            positions.push(s.and_then(|h| c.leftmost_modifier(h)));
            positions.push(s.and_then(|h| c.rightmost_modifier(h)));
        }
        positions.push(c.leftmost_modifier(b0));
    }
    positions
}

/// Concatenation of the context vectors at [`feature_positions`].
pub fn features(
    g: &mut Graph,
    c: &Configuration,
    vectors: &ContextVectors,
    mode: FeatureMode,
) -> Result<NodeId, AutodiffError> {
    let parts: Vec<NodeId> = feature_positions(c, mode)
        .into_iter()
        .map(|p| vectors.get_or_pad(p))
        .collect();
    g.concat(&parts)
}
