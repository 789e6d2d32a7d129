use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Label;

/// One of the six teacher prompt strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugMethod {
    DirectMet,
    ReplaceTargetMet,
    ReplaceContextMet,
    DirectLit,
    ReplaceTargetLit,
    ReplaceContextLit,
}

/// What a method changes about the seed sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodFamily {
    /// Write a fresh sentence around the target word.
    Direct,
    /// Keep the context, swap the target word.
    ReplaceTarget,
    /// Keep the target word, swap the context.
    ReplaceContext,
}

impl AugMethod {
    pub const ALL: [AugMethod; 6] = [
        AugMethod::DirectMet,
        AugMethod::ReplaceTargetMet,
        AugMethod::ReplaceContextMet,
        AugMethod::DirectLit,
        AugMethod::ReplaceTargetLit,
        AugMethod::ReplaceContextLit,
    ];

    pub fn polarity(self) -> Label {
        match self {
            AugMethod::DirectMet | AugMethod::ReplaceTargetMet | AugMethod::ReplaceContextMet => Label::Metaphor,
            _ => Label::Literal,
        }
    }

    pub fn family(self) -> MethodFamily {
        match self {
            AugMethod::DirectMet | AugMethod::DirectLit => MethodFamily::Direct,
            AugMethod::ReplaceTargetMet | AugMethod::ReplaceTargetLit => MethodFamily::ReplaceTarget,
            AugMethod::ReplaceContextMet | AugMethod::ReplaceContextLit => MethodFamily::ReplaceContext,
        }
    }

    /// Both polarities of a family, metaphorical first.
    pub fn of_family(family: MethodFamily) -> [AugMethod; 2] {
        match family {
            MethodFamily::Direct => [AugMethod::DirectMet, AugMethod::DirectLit],
            MethodFamily::ReplaceTarget => [AugMethod::ReplaceTargetMet, AugMethod::ReplaceTargetLit],
            MethodFamily::ReplaceContext => [AugMethod::ReplaceContextMet, AugMethod::ReplaceContextLit],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AugMethod::DirectMet => "direct_met",
            AugMethod::ReplaceTargetMet => "replace_target_met",
            AugMethod::ReplaceContextMet => "replace_context_met",
            AugMethod::DirectLit => "direct_lit",
            AugMethod::ReplaceTargetLit => "replace_target_lit",
            AugMethod::ReplaceContextLit => "replace_context_lit",
        }
    }
}

impl fmt::Display for AugMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AugMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AugMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown augmentation method {s:?}"))
    }
}

impl FromStr for MethodFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(MethodFamily::Direct),
            "target" | "replace_target" => Ok(MethodFamily::ReplaceTarget),
            "context" | "replace_context" => Ok(MethodFamily::ReplaceContext),
            _ => Err(format!("unknown method family {s:?}")),
        }
    }
}
