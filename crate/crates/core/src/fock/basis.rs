use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Occupation numbers, one per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockBasisState(Vec<u32>);

impl FockBasisState {
    pub fn new(occupations: Vec<u32>) -> Self {
        Self(occupations)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn num_modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }
}

impl From<Vec<u32>> for FockBasisState {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// All occupation lists over `num_modes` modes with total at most
/// `max_total_photons`, sector-major (total ascending) and lexicographic
/// ascending within each sector.
pub fn enumerate_basis(num_modes: usize, max_total_photons: usize) -> Vec<FockBasisState> {
    let mut out = Vec::with_capacity(basis_len(num_modes, max_total_photons));
    for total in 0..=max_total_photons {
        let mut current = vec![0u32; num_modes];
        push_sector(&mut out, &mut current, 0, total);
    }
    out
}

fn push_sector(out: &mut Vec<FockBasisState>, current: &mut [u32], mode: usize, left: usize) {
    if mode == current.len() {
        if left == 0 {
            out.push(FockBasisState(current.to_vec()));
        }
        return;
    }
    if mode + 1 == current.len() {
        current[mode] = left as u32;
        out.push(FockBasisState(current.to_vec()));
        current[mode] = 0;
        return;
    }
    for n in 0..=left {
        current[mode] = n as u32;
        push_sector(out, current, mode + 1, left - n);
    }
    current[mode] = 0;
}

/// Number of states with `total` photons in `num_modes` modes.
pub fn sector_len(num_modes: usize, total: usize) -> usize {
    if num_modes == 0 {
        return usize::from(total == 0);
    }
    binomial(total + num_modes - 1, num_modes - 1)
}

/// Number of states with at most `max_total` photons in `num_modes` modes.
pub fn basis_len(num_modes: usize, max_total: usize) -> usize {
    binomial(max_total + num_modes, num_modes)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// An enumerated truncated Fock basis with index lookup.
#[derive(Debug)]
pub struct FockBasis {
    num_modes: usize,
    max_total: usize,
    states: Vec<FockBasisState>,
    offsets: Vec<usize>,
    index: HashMap<Vec<u32>, usize>,
    raise: Vec<usize>,
    sqrt_factorials: Vec<f64>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.num_modes == other.num_modes && self.max_total == other.max_total
    }
}

const NO_STATE: usize = usize::MAX;

impl FockBasis {
    pub fn new(num_modes: usize, max_total: usize) -> Self {
        let states = enumerate_basis(num_modes, max_total);
        let mut offsets = Vec::with_capacity(max_total + 2);
        let mut acc = 0;
        for n in 0..=max_total {
            offsets.push(acc);
            acc += sector_len(num_modes, n);
        }
        offsets.push(acc);
        let index: HashMap<Vec<u32>, usize> = states.iter().enumerate().map(|(i, s)| (s.0.clone(), i)).collect();

        let mut raise = vec![NO_STATE; states.len() * num_modes];
        let mut scratch = vec![0u32; num_modes];
        for (i, s) in states.iter().enumerate() {
            if s.total() == max_total {
                continue;
            }
            scratch.copy_from_slice(&s.0);
            for m in 0..num_modes {
                scratch[m] += 1;
                raise[i * num_modes + m] = index[&scratch];
                scratch[m] -= 1;
            }
        }

        let mut sqrt_fact = vec![1.0f64; max_total + 1];
        for n in 1..=max_total {
            sqrt_fact[n] = sqrt_fact[n - 1] * (n as f64).sqrt();
        }
        let sqrt_factorials = states
            .iter()
            .map(|s| s.0.iter().map(|&n| sqrt_fact[n as usize]).product())
            .collect();

        Self {
            num_modes,
            max_total,
            states,
            offsets,
            index,
            raise,
            sqrt_factorials,
        }
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockBasisState] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> &FockBasisState {
        &self.states[idx]
    }

    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    /// Global indices of the sector with `total` photons.
    pub fn sector(&self, total: usize) -> Range<usize> {
        self.offsets[total]..self.offsets[total + 1]
    }

    pub fn sector_dim(&self, total: usize) -> usize {
        self.offsets[total + 1] - self.offsets[total]
    }

    /// Index of the state with one more photon in `mode`, if inside the truncation.
    pub fn raise(&self, idx: usize, mode: usize) -> Option<usize> {
        match self.raise[idx * self.num_modes + mode] {
            NO_STATE => None,
            j => Some(j),
        }
    }

    /// `prod_i sqrt(n_i!)` for the state at `idx`.
    pub fn sqrt_factorial(&self, idx: usize) -> f64 {
        self.sqrt_factorials[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_only() {
        assert_eq!(enumerate_basis(1, 0), vec![FockBasisState(vec![0])]);
    }

    #[test]
    fn two_modes_one_photon() {
        let b = enumerate_basis(2, 1);
        let occ: Vec<&[u32]> = b.iter().map(|s| s.occupations()).collect();
        assert_eq!(occ, vec![&[0, 0][..], &[0, 1][..], &[1, 0][..]]);
    }

    #[test]
    fn four_modes_eighteen_photons() {
        let expected: usize = (0..=18usize).map(|n| binomial(n + 3, 3)).sum();
        assert_eq!(expected, 7315);
        assert_eq!(enumerate_basis(4, 18).len(), 7315);
        assert_eq!(basis_len(4, 18), 7315);
    }

    #[test]
    fn ordering_and_uniqueness() {
        let b = enumerate_basis(3, 5);
        for w in b.windows(2) {
            let (x, y) = (&w[0], &w[1]);
            assert!(x.total() < y.total() || (x.total() == y.total() && x < y));
        }
        let basis = FockBasis::new(3, 5);
        for (i, s) in basis.states().iter().enumerate() {
            assert_eq!(basis.index_of(s.occupations()), Some(i));
        }
        assert_eq!(basis.sector_dim(5), 21);
    }

    #[test]
    fn zero_modes_hold_only_vacuum() {
        let b = FockBasis::new(0, 3);
        assert_eq!(b.len(), 1);
        assert_eq!(b.sector_dim(0), 1);
        assert_eq!(b.sector_dim(2), 0);
    }

    #[test]
    fn raise_respects_truncation() {
        let b = FockBasis::new(2, 2);
        let i = b.index_of(&[1, 0]).unwrap();
        assert_eq!(b.raise(i, 1), b.index_of(&[1, 1]));
        let top = b.index_of(&[2, 0]).unwrap();
        assert_eq!(b.raise(top, 0), None);
    }
}
