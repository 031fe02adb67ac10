use serde::{Deserialize, Serialize};

use super::record::{LabelSet, Pattern, ReviewerPair};
use crate::error::{Error, Result};

/// Maps the two reviewers' flags to a label code: 0 when both saw nothing,
/// 1 when exactly one flagged the pattern, 2 when both did.
pub fn resolve_pair(pattern: Pattern, pair: ReviewerPair) -> Result<u8> {
    match (pair.a, pair.b) {
        (Some(a), Some(b)) => Ok(a as u8 + b as u8),
        _ => Err(Error::MissingAnnotation(pattern)),
    }
}

pub fn resolve_labels(annotations: &[ReviewerPair; 5]) -> Result<LabelSet> {
    let mut labels = LabelSet::default();
    for pattern in Pattern::ALL {
        labels.set(pattern, resolve_pair(pattern, annotations[pattern.index()])?);
    }
    Ok(labels)
}

/// Per-pattern counts of label codes 0, 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub nagging: [usize; 3],
    pub obstruction: [usize; 3],
    pub sneaking: [usize; 3],
    pub interface_interference: [usize; 3],
    pub forced_action: [usize; 3],
}

impl LabelHistogram {
    pub fn get(&self, pattern: Pattern) -> [usize; 3] {
        match pattern {
            Pattern::Nagging => self.nagging,
            Pattern::Obstruction => self.obstruction,
            Pattern::Sneaking => self.sneaking,
            Pattern::InterfaceInterference => self.interface_interference,
            Pattern::ForcedAction => self.forced_action,
        }
    }

    fn slot(&mut self, pattern: Pattern) -> &mut [usize; 3] {
        match pattern {
            Pattern::Nagging => &mut self.nagging,
            Pattern::Obstruction => &mut self.obstruction,
            Pattern::Sneaking => &mut self.sneaking,
            Pattern::InterfaceInterference => &mut self.interface_interference,
            Pattern::ForcedAction => &mut self.forced_action,
        }
    }
}

pub fn label_histogram(corpus: &[LabelSet]) -> LabelHistogram {
    let mut hist = LabelHistogram::default();
    for labels in corpus {
        for pattern in Pattern::ALL {
            hist.slot(pattern)[labels.get(pattern) as usize] += 1;
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_level_resolution() {
        let p = Pattern::Nagging;
        assert_eq!(resolve_pair(p, ReviewerPair::new(false, false)).unwrap(), 0);
        assert_eq!(resolve_pair(p, ReviewerPair::new(true, false)).unwrap(), 1);
        assert_eq!(resolve_pair(p, ReviewerPair::new(false, true)).unwrap(), 1);
        assert_eq!(resolve_pair(p, ReviewerPair::new(true, true)).unwrap(), 2);
    }

    #[test]
    fn missing_flag_is_an_error() {
        let mut ann = [ReviewerPair::new(false, false); 5];
        ann[2].b = None;
        assert!(matches!(
            resolve_labels(&ann),
            Err(Error::MissingAnnotation(Pattern::Sneaking))
        ));
    }

    #[test]
    fn empty_corpus_histogram() {
        assert_eq!(label_histogram(&[]), LabelHistogram::default());
    }

    fn pair() -> impl Strategy<Value = ReviewerPair> {
        (any::<bool>(), any::<bool>()).prop_map(|(a, b)| ReviewerPair::new(a, b))
    }

    proptest! {
        #[test]
        fn symmetric_in_reviewers(pairs in proptest::array::uniform5(pair())) {
            let swapped = pairs.map(|p| ReviewerPair { a: p.b, b: p.a });
            prop_assert_eq!(resolve_labels(&pairs).unwrap(), resolve_labels(&swapped).unwrap());
        }

        #[test]
        fn histogram_rows_sum_to_corpus_size(
            corpus in proptest::collection::vec(proptest::array::uniform5(pair()), 0..60)
        ) {
            let labels: Vec<_> = corpus.iter().map(|a| resolve_labels(a).unwrap()).collect();
            let hist = label_histogram(&labels);
            for p in Pattern::ALL {
                prop_assert_eq!(hist.get(p).iter().sum::<usize>(), labels.len());
            }
        }
    }
}
