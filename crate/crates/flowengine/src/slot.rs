//! The fixed set of pipeline slots an engine can fill.

use serde::{Deserialize, Serialize};

/// Structural role of an engine within a workflow. The slot set is fixed;
/// the instances filling each slot are open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Split,
    Preprocess,
    Train,
    Inprocess,
    Postprocess,
    Eval,
    Report,
}

impl Slot {
    pub const ALL: [Slot; 7] = [
        Slot::Split,
        Slot::Preprocess,
        Slot::Train,
        Slot::Inprocess,
        Slot::Postprocess,
        Slot::Eval,
        Slot::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Split => "split",
            Slot::Preprocess => "preprocess",
            Slot::Train => "train",
            Slot::Inprocess => "inprocess",
            Slot::Postprocess => "postprocess",
            Slot::Eval => "eval",
            Slot::Report => "report",
        }
    }

    pub fn parse(s: &str) -> Option<Slot> {
        Slot::ALL.iter().copied().find(|slot| slot.name() == s)
    }

    /// Name prefixes conventional for engines of this slot. Both short and
    /// "-ing" forms are accepted where established usage has both.
    pub fn name_prefixes(self) -> &'static [&'static str] {
        match self {
            Slot::Split => &["split_"],
            Slot::Preprocess => &["preprocess_", "preprocessing_"],
            Slot::Train => &["train_"],
            Slot::Inprocess => &["inprocess_", "inprocessing_"],
            Slot::Postprocess => &["postprocess_", "postprocessing_"],
            Slot::Eval => &["eval_"],
            Slot::Report => &["report_"],
        }
    }

    pub fn matches_name(self, name: &str) -> bool {
        self.name_prefixes().iter().any(|p| name.starts_with(p))
    }
}

impl std::fmt::Display for Slot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
