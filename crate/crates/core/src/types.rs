use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stable identifier of a tweet across every file of a run.
pub type ExampleId = u64;

/// A raw utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: ExampleId,
    pub text: String,
}

impl Tweet {
    pub fn new(id: ExampleId, text: impl Into<String>) -> Self {
        Tweet {
            id,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelParseError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unknown subtask `{0}` (expected A or C)")]
    UnknownSubtask(String),
}

/// Classification subtask. A: offensive or not. C: offense target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subtask {
    A,
    C,
}

impl Subtask {
    /// Classes in class-index order. Binary probability vectors are
    /// `(P(NOT), P(OFF))`.
    pub fn classes(self) -> &'static [Label] {
        match self {
            Subtask::A => &[Label::Not, Label::Off],
            Subtask::C => &[Label::Ind, Label::Grp, Label::Oth],
        }
    }

    pub fn num_classes(self) -> usize {
        self.classes().len()
    }

    /// Width of the network output layer: one sigmoid unit for A, three
    /// softmax units for C.
    pub fn output_dim(self) -> usize {
        match self {
            Subtask::A => 1,
            Subtask::C => 3,
        }
    }

    pub fn from_num_classes(n: usize) -> Option<Subtask> {
        match n {
            2 => Some(Subtask::A),
            3 => Some(Subtask::C),
            _ => None,
        }
    }

    pub fn label(self, index: usize) -> Option<Label> {
        self.classes().get(index).copied()
    }
}

impl FromStr for Subtask {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" | "subtask_a" => Ok(Subtask::A),
            "c" | "subtask_c" => Ok(Subtask::C),
            _ => Err(LabelParseError::UnknownSubtask(s.to_string())),
        }
    }
}

impl fmt::Display for Subtask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subtask::A => f.write_str("A"),
            Subtask::C => f.write_str("C"),
        }
    }
}

/// Gold or predicted class for subtask A (`NOT`, `OFF`) or C (`IND`, `GRP`, `OTH`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Not,
    Off,
    Ind,
    Grp,
    Oth,
}

impl Label {
    pub fn subtask(self) -> Subtask {
        match self {
            Label::Not | Label::Off => Subtask::A,
            Label::Ind | Label::Grp | Label::Oth => Subtask::C,
        }
    }

    /// Position of the label inside its subtask's class list.
    pub fn index(self) -> usize {
        match self {
            Label::Not | Label::Ind => 0,
            Label::Off | Label::Grp => 1,
            Label::Oth => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Not => "NOT",
            Label::Off => "OFF",
            Label::Ind => "IND",
            Label::Grp => "GRP",
            Label::Oth => "OTH",
        }
    }
}

impl FromStr for Label {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOT" => Ok(Label::Not),
            "OFF" => Ok(Label::Off),
            "IND" => Ok(Label::Ind),
            "GRP" => Ok(Label::Grp),
            "OTH" => Ok(Label::Oth),
            _ => Err(LabelParseError::UnknownLabel(s.to_string())),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
