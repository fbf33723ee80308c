//! Complete randomization: uniform treated subsets and their enumeration.

use alloc::vec::Vec;

use crate::rng::RngStream;
use crate::{Error, Result};

/// Enumeration refuses more subsets than this.
pub const MAX_ENUMERATION: u64 = 10_000_000;

/// A size-`n1` treated subset of `0..n`, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    n: usize,
    treated: Vec<usize>,
}

impl Assignment {
    /// Builds an assignment from treated indices (any order).
    pub fn from_treated(n: usize, mut treated: Vec<usize>) -> Result<Self> {
        treated.sort_unstable();
        treated.dedup();
        let n1 = treated.len();
        if treated.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidArmSizes { n, n1 });
        }
        Ok(Self { n, treated })
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        let treated = mask.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i).collect();
        Self { n: mask.len(), treated }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.treated.len()
    }

    pub fn n0(&self) -> usize {
        self.n - self.treated.len()
    }

    pub fn treated(&self) -> &[usize] {
        &self.treated
    }

    pub fn control(&self) -> Vec<usize> {
        let mask = self.mask();
        (0..self.n).filter(|&i| !mask[i]).collect()
    }

    /// Indices of arm `1` (treated) or `0` (control).
    pub fn arm(&self, arm: u8) -> Vec<usize> {
        if arm == 1 {
            self.treated.clone()
        } else {
            self.control()
        }
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = alloc::vec![false; self.n];
        for &i in &self.treated {
            m[i] = true;
        }
        m
    }
}

fn check_sizes(n: usize, n1: usize) -> Result<()> {
    if n1 < 1 || n1 >= n {
        return Err(Error::InvalidArmSizes { n, n1 });
    }
    Ok(())
}

/// Draws a uniform size-`n1` subset with a partial Fisher-Yates shuffle.
pub fn sample_assignment(n: usize, n1: usize, rng: RngStream) -> Result<Assignment> {
    check_sizes(n, n1)?;
    let mut s = rng.sampler();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n1 {
        let j = i + s.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(n1);
    idx.sort_unstable();
    Ok(Assignment { n, treated: idx })
}

/// `C(n, m)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, m: usize) -> u64 {
    if m > n {
        return 0;
    }
    let m = m.min(n - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Lexicographic iterator over all size-`m` subsets of `0..n` (`0 <= m <= n`).
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m > n {
            return Err(Error::InvalidSubsetSize { n, m });
        }
        if binomial(n, m) > MAX_ENUMERATION {
            return Err(Error::TooManySubsets { n, m });
        }
        Ok(Self { n, current: Some((0..m).collect()) })
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let m = out.len();
        let mut next = out.clone();
        let mut i = m;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - m + i {
                next[i] += 1;
                for j in i + 1..m {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Every size-`n1` assignment, in lexicographic order of the treated set.
pub fn enumerate_assignments(n: usize, n1: usize) -> Result<impl Iterator<Item = Assignment>> {
    check_sizes(n, n1)?;
    Ok(Combinations::new(n, n1)?.map(move |treated| Assignment { n, treated }))
}
