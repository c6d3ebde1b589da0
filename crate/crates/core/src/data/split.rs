use crate::numerics::{streams, RngStream};
use crate::{Error, Result};

/// Disjoint row indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// Checks disjointness and coverage of `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n {
                return Err(Error::Argument(format!("split index {i} out of range for {n} rows")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Argument(format!("row {i} appears in more than one split")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Argument(format!("row {missing} is in no split")));
        }
        Ok(())
    }
}

/// `(train, val, test)` sizes: test takes `⌊n/5⌋`, validation `⌊remainder/5⌋`, and train
/// keeps whatever is left.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let test = n / 5;
    let val = (n - test) / 5;
    (n - test - val, val, test)
}

/// Seeded 64/16/20 split. The permutation comes from the split substream of `seed`; test
/// takes its head, validation the next block, train the rest.
pub fn split_dataset(n: usize, seed: u64) -> Result<SplitIndices> {
    if n < 5 {
        return Err(Error::Argument(format!("cannot split {n} rows (need at least 5)")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    RngStream::new(seed).substream(streams::SPLIT).shuffle(&mut perm);
    let (_, val, test) = split_sizes(n);
    let train = perm.split_off(test + val);
    let val_part = perm.split_off(test);
    Ok(SplitIndices {
        train,
        val: val_part,
        test: perm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(split_sizes(1000), (640, 160, 200));
        assert_eq!(split_sizes(2356), (1508, 377, 471));
        let s = split_dataset(1000, 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (640, 160, 200));
    }

    #[test]
    fn deterministic_and_valid() {
        let a = split_dataset(2356, 42).unwrap();
        let b = split_dataset(2356, 42).unwrap();
        assert_eq!(a, b);
        a.validate(2356).unwrap();
        assert_ne!(a, split_dataset(2356, 43).unwrap());
    }

    #[test]
    fn too_small() {
        assert!(matches!(split_dataset(4, 0), Err(Error::Argument(_))));
        assert!(split_dataset(5, 0).is_ok());
    }
}
