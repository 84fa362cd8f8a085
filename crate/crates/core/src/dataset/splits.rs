use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::labels::{source_class_of, to_binary};
use super::{DatasetConfig, DatasetError, Segment, SourceClass};
use crate::{Label, Task};

/// Requested split sizes. Each size is split evenly over the task's classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub task: Task,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            task: Task::Binary,
            train: 400,
            validation: 80,
            test: 80,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let classes = self.task.class_count();
        for (name, size) in self.sizes() {
            if size == 0 {
                return Err(DatasetError::InvalidSpec(format!("{name} size must be positive")));
            }
            if size % classes != 0 {
                return Err(DatasetError::InvalidSpec(format!(
                    "{name} size {size} is not divisible by the {classes} {} classes",
                    self.task
                )));
            }
        }
        Ok(())
    }

    /// Sizes in sampling order: test first, so the evaluation split gets
    /// first pick of the scarce buckets.
    pub fn sizes(&self) -> [(SplitName, usize); 3] {
        [
            (SplitName::Test, self.test),
            (SplitName::Validation, self.validation),
            (SplitName::Train, self.train),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<Segment>,
    pub validation: Vec<Segment>,
    pub test: Vec<Segment>,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &[Segment] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    fn get_mut(&mut self, name: SplitName) -> &mut Vec<Segment> {
        match name {
            SplitName::Train => &mut self.train,
            SplitName::Validation => &mut self.validation,
            SplitName::Test => &mut self.test,
        }
    }
}

// (class index, source index); eight-class buckets have no source.
type BucketKey = (usize, Option<usize>);

fn source_index(s: SourceClass) -> usize {
    SourceClass::ALL.iter().position(|&x| x == s).unwrap()
}

fn bucket_name(task: Task, key: BucketKey) -> String {
    let class = task.labels()[key.0];
    match key.1.map(|i| SourceClass::ALL[i]) {
        None => class.code().to_string(),
        Some(src) => match src.label8() {
            Some(l8) => format!("{} ({})", class.code(), l8.code()),
            None => format!("{} ({src})", class.code()),
        },
    }
}

/// Class and source bucket of a segment for `task`, or `None` when the
/// segment is not usable for that task.
fn classify(seg: &Segment, task: Task, config: &DatasetConfig) -> Option<BucketKey> {
    match task {
        Task::Eight => {
            let label = seg.label8?;
            Some((task.index_of(label)?, None))
        }
        Task::Binary => {
            let label: Label = match seg.label2 {
                Some(l) => l,
                None => to_binary(seg, config).ok().flatten()?,
            };
            let source = source_class_of(seg, config)?;
            Some((task.index_of(label)?, Some(source_index(source))))
        }
    }
}

/// Draws class-balanced, disjoint train/validation/test splits.
///
/// Segments are grouped into (class, source class) buckets, each bucket is
/// shuffled with a ChaCha8 stream seeded by `spec.seed`, and splits are filled
/// by drawing round-robin from the buckets. Within a binary class the
/// per-source quotas differ by at most one, the remainder going to earlier
/// sources; only sources present in the manifest take part. A sentence id
/// claimed by one split is never used by another, and each draw prefers a
/// segment whose sentence the current split already holds.
pub fn sample_splits(manifest: &[Segment], spec: &SplitSpec, config: &DatasetConfig) -> Result<Splits, DatasetError> {
    spec.validate()?;
    let task = spec.task;
    let mut buckets: BTreeMap<BucketKey, Vec<&Segment>> = BTreeMap::new();
    for seg in manifest {
        if let Some(key) = classify(seg, task, config) {
            buckets.entry(key).or_default().push(seg);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for bucket in buckets.values_mut() {
        bucket.shuffle(&mut rng);
    }
    let mut used: BTreeMap<BucketKey, Vec<bool>> = buckets.iter().map(|(&k, b)| (k, vec![false; b.len()])).collect();
    let mut owner: HashMap<&str, SplitName> = HashMap::new();
    let mut splits = Splits::default();

    for (split, size) in spec.sizes() {
        let per_class = size / task.class_count();
        let mut quotas: Vec<(BucketKey, usize)> = Vec::new();
        for class in 0..task.class_count() {
            let keys: Vec<BucketKey> = buckets.keys().copied().filter(|k| k.0 == class).collect();
            if keys.is_empty() {
                return Err(DatasetError::Insufficient {
                    class: task.labels()[class].code().to_string(),
                    split,
                    needed: per_class,
                    shortfall: per_class,
                });
            }
            let (base, extra) = (per_class / keys.len(), per_class % keys.len());
            for (i, key) in keys.into_iter().enumerate() {
                quotas.push((key, base + usize::from(i < extra)));
            }
        }

        let mut taken: Vec<usize> = vec![0; quotas.len()];
        loop {
            let mut progressed = false;
            for (qi, &(key, quota)) in quotas.iter().enumerate() {
                if taken[qi] == quota {
                    continue;
                }
                let bucket = &buckets[&key];
                let used = used.get_mut(&key).unwrap();
                let eligible = |i: usize, own_only: bool| {
                    !used[i]
                        && match bucket[i].sentence_id.as_deref().and_then(|sid| owner.get(sid)) {
                            Some(&o) => o == split,
                            None => !own_only,
                        }
                };
                // Prefer a sentence this split already holds, so parallel
                // renditions cluster instead of claiming new sentences.
                let pick = (0..bucket.len())
                    .find(|&i| eligible(i, true))
                    .or_else(|| (0..bucket.len()).find(|&i| eligible(i, false)));
                let drawn = pick.map(|i| {
                    used[i] = true;
                    let seg = bucket[i];
                    if let Some(sid) = seg.sentence_id.as_deref() {
                        owner.insert(sid, split);
                    }
                    seg
                });
                let Some(seg) = drawn else {
                    return Err(DatasetError::Insufficient {
                        class: bucket_name(task, key),
                        split,
                        needed: quota,
                        shortfall: quota - taken[qi],
                    });
                };
                splits.get_mut(split).push(seg.clone());
                taken[qi] += 1;
                progressed = true;
            }
            if !progressed {
                break;
            }
        }
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Corpus;

    fn seg(id: &str, label8: Label, sentence: &str) -> Segment {
        Segment {
            id: id.into(),
            corpus: Corpus::SwissDial,
            sentence_id: Some(sentence.into()),
            audio_path: None,
            ipa_transcription: "a".into(),
            standard_german: "a".into(),
            canton: None,
            stt_region: None,
            label8: Some(label8),
            source_class: None,
            label2: None,
        }
    }

    #[test]
    fn spec_sizes_must_divide() {
        let spec = SplitSpec {
            test: 81,
            ..Default::default()
        };
        assert!(matches!(spec.validate(), Err(DatasetError::InvalidSpec(_))));
        let spec = SplitSpec {
            task: Task::Eight,
            train: 0,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn missing_class_names_it() {
        let manifest = vec![seg("a", Label::Zh, "s1")];
        let spec = SplitSpec {
            train: 2,
            validation: 2,
            test: 2,
            ..Default::default()
        };
        let err = sample_splits(&manifest, &spec, &DatasetConfig::default()).unwrap_err();
        assert!(err.to_string().contains("Highest"), "{err}");
    }
}
