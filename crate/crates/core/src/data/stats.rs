use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DataError, Dataset, Label};

/// A percentage held in hundredths, so that two-decimal values compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Percent(u32);

impl Percent {
    pub const ZERO: Percent = Percent(0);

    /// `100 * num / den` rounded half-up to two decimals. `den == 0` yields zero.
    pub fn from_ratio(num: usize, den: usize) -> Percent {
        if den == 0 {
            return Percent::ZERO;
        }
        let (num, den) = (num as u128, den as u128);
        Percent(((20_000 * num + den) / (2 * den)) as u32)
    }

    pub fn from_hundredths(h: u32) -> Percent {
        Percent(h)
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(0.0..=100.0).contains(&v) {
            return Err(serde::de::Error::custom(format!("percentage {v} out of range")));
        }
        Ok(Percent((v * 100.0).round() as u32))
    }
}

/// Size and class-balance statistics for one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_instances: usize,
    pub pct_metaphor: Percent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pct_correct: Option<Percent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pct_correct_metaphor: Option<Percent>,
}

/// Computes `#Instance`, `%M` and, given a correctness map, `%Correct` and
/// `%Correct.M` (the metaphor share among correctly predicted instances).
pub fn compute_stats(
    dataset: &Dataset,
    correctness: Option<&HashMap<String, bool>>,
) -> Result<DatasetStats, DataError> {
    let n = dataset.len();
    let n_met = dataset.count_label(Label::Metaphor);
    let mut stats = DatasetStats {
        n_instances: n,
        pct_metaphor: Percent::from_ratio(n_met, n),
        pct_correct: None,
        pct_correct_metaphor: None,
    };
    if let Some(map) = correctness {
        let ids: HashSet<&str> = dataset.ids().collect();
        let missing = ids.iter().filter(|id| !map.contains_key(**id)).count();
        let extra = map.keys().filter(|k| !ids.contains(k.as_str())).count();
        if missing > 0 || extra > 0 {
            return Err(DataError::CorrectnessCoverageMismatch { missing, extra });
        }
        let correct = dataset.iter().filter(|i| map[&i.id]).count();
        let correct_met = dataset
            .iter()
            .filter(|i| map[&i.id] && i.label == Label::Metaphor)
            .count();
        stats.pct_correct = Some(Percent::from_ratio(correct, n));
        stats.pct_correct_metaphor = Some(Percent::from_ratio(correct_met, correct));
    }
    Ok(stats)
}
