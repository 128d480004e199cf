use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed::{self, stream};
use crate::{Error, Result};

/// Global sequence indices of each split, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplits {
    pub fn counts(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }

    pub fn get(&self, name: &str) -> Option<&[usize]> {
        match name {
            "train" => Some(&self.train),
            "val" => Some(&self.val),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// Random sequence-level partition: `floor(n r_train / 100)` train,
/// `floor(n r_val / 100)` validation, the remainder test.
pub fn split_dataset(n_sequences: usize, ratios: [u32; 3], seed: u64) -> Result<DatasetSplits> {
    if n_sequences == 0 {
        return Err(Error::Empty("dataset"));
    }
    if ratios.iter().sum::<u32>() != 100 {
        return Err(Error::InvalidArgument(format!("split ratios {ratios:?} do not sum to 100")));
    }
    let mut order: Vec<usize> = (0..n_sequences).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, &[stream::SPLIT])));
    let n_train = n_sequences * ratios[0] as usize / 100;
    let n_val = n_sequences * ratios[1] as usize / 100;
    let take = |range: std::ops::Range<usize>| {
        let mut v = order[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(DatasetSplits {
        train: take(0..n_train),
        val: take(n_train..n_train + n_val),
        test: take(n_train + n_val..n_sequences),
    })
}
