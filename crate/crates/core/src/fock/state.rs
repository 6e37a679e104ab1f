use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::basis::FockBasis;
use crate::{Error, Result, C64};

/// Tolerance on `max |rho - rho^dagger|` accepted by [`DensityMatrix::from_entries`].
pub const HERMITICITY_TOL: f64 = 1e-10;

/// A pure state over a truncated Fock basis.
#[derive(Clone, Debug)]
pub struct PureState {
    basis: Arc<FockBasis>,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Builds a state from `(occupations, amplitude)` pairs; absent states have
    /// amplitude zero and repeated entries add up.
    pub fn from_amplitudes<I>(num_modes: usize, max_total: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C64)>,
    {
        let basis = Arc::new(FockBasis::new(num_modes, max_total));
        let mut amplitudes = DVector::zeros(basis.len());
        for (occ, amp) in entries {
            let idx = basis.index_of(&occ).ok_or_else(|| {
                Error::InvalidModes(format!(
                    "occupation {occ:?} is not in the {num_modes}-mode basis truncated at {max_total}"
                ))
            })?;
            amplitudes[idx] += amp;
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn basis_state(occupations: &[u32], max_total: usize) -> Result<Self> {
        Self::from_amplitudes(
            occupations.len(),
            max_total,
            [(occupations.to_vec(), C64::new(1.0, 0.0))],
        )
    }

    pub(crate) fn from_parts(basis: Arc<FockBasis>, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(basis.len(), amplitudes.len());
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn num_modes(&self) -> usize {
        self.basis.num_modes()
    }

    pub fn max_total(&self) -> usize {
        self.basis.max_total()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[u32]) -> C64 {
        self.basis
            .index_of(occupations)
            .map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Probability weight cut off by the truncation, `1 - norm^2`.
    pub fn truncation_deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }
}

/// A density matrix over a truncated Fock basis, indexed in basis order.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    basis: Arc<FockBasis>,
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &PureState) -> Self {
        let v = &state.amplitudes;
        Self {
            basis: state.basis.clone(),
            entries: v * v.adjoint(),
        }
    }

    pub fn from_entries(basis: Arc<FockBasis>, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != basis.len() || entries.ncols() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let rho = Self { basis, entries };
        let defect = rho.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::InvalidModes(format!(
                "density matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_parts(basis: Arc<FockBasis>, entries: DMatrix<C64>) -> Self {
        Self { basis, entries }
    }

    /// Diagonal mixture of basis states.
    pub fn from_populations<I>(num_modes: usize, max_total: usize, populations: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let basis = Arc::new(FockBasis::new(num_modes, max_total));
        let mut entries = DMatrix::zeros(basis.len(), basis.len());
        for (occ, p) in populations {
            let i = basis
                .index_of(&occ)
                .ok_or_else(|| Error::InvalidModes(format!("occupation {occ:?} not in basis")))?;
            entries[(i, i)] += C64::new(p, 0.0);
        }
        Ok(Self { basis, entries })
    }

    pub fn vacuum(num_modes: usize, max_total: usize) -> Self {
        let basis = Arc::new(FockBasis::new(num_modes, max_total));
        let mut entries = DMatrix::zeros(basis.len(), basis.len());
        entries[(0, 0)] = C64::new(1.0, 0.0);
        Self { basis, entries }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn num_modes(&self) -> usize {
        self.basis.num_modes()
    }

    pub fn max_total(&self) -> usize {
        self.basis.max_total()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// Weight lost to truncation upstream, `1 - tr(rho)`.
    pub fn truncation_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn population(&self, occupations: &[u32]) -> f64 {
        self.basis
            .index_of(occupations)
            .map_or(0.0, |i| self.entries[(i, i)].re)
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.entries.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue; computed on demand since it costs a full diagonalization.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Embeds into a basis with `extra` additional modes, all in vacuum.
    pub fn with_vacuum_modes(&self, extra: usize) -> Self {
        let m = self.num_modes();
        let basis = Arc::new(FockBasis::new(m + extra, self.max_total()));
        let map: Vec<usize> = self
            .basis
            .states()
            .iter()
            .map(|s| {
                let mut occ = s.occupations().to_vec();
                occ.resize(m + extra, 0);
                basis.index_of(&occ).expect("vacuum extension stays in basis")
            })
            .collect();
        let mut entries = DMatrix::zeros(basis.len(), basis.len());
        for (i, &bi) in map.iter().enumerate() {
            for (j, &bj) in map.iter().enumerate() {
                entries[(bi, bj)] = self.entries[(i, j)];
            }
        }
        Self { basis, entries }
    }

    /// `self (x) other`, with `self`'s modes first.
    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        let (ma, mb) = (self.num_modes(), other.num_modes());
        let basis = Arc::new(FockBasis::new(ma + mb, self.max_total() + other.max_total()));
        let composite = |a: usize, b: usize| {
            let mut occ = self.basis.state(a).occupations().to_vec();
            occ.extend_from_slice(other.basis.state(b).occupations());
            basis.index_of(&occ).expect("product of truncated states fits")
        };
        let (na, nb) = (self.basis.len(), other.basis.len());
        let index: Vec<usize> = (0..na)
            .flat_map(|a| (0..nb).map(move |b| (a, b)))
            .map(|(a, b)| composite(a, b))
            .collect();
        let mut entries = DMatrix::zeros(basis.len(), basis.len());
        for a in 0..na {
            for b in 0..nb {
                let row = index[a * nb + b];
                for c in 0..na {
                    let x = self.entries[(a, c)];
                    if x == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for d in 0..nb {
                        entries[(row, index[c * nb + d])] = x * other.entries[(b, d)];
                    }
                }
            }
        }
        Self { basis, entries }
    }
}

/// Reduced density matrix after tracing out `traced_modes`.
///
/// Tracing every mode is rejected: a zero-mode state has no consumers.
pub fn partial_trace(rho: &DensityMatrix, traced_modes: &[usize]) -> Result<DensityMatrix> {
    let m = rho.num_modes();
    let mut traced = vec![false; m];
    for &t in traced_modes {
        if t >= m || traced[t] {
            return Err(Error::InvalidModes(format!(
                "traced modes {traced_modes:?} must be distinct indices below {m}"
            )));
        }
        traced[t] = true;
    }
    if traced_modes.is_empty() {
        return Err(Error::InvalidModes("no modes to trace".into()));
    }
    if traced_modes.len() == m {
        return Err(Error::InvalidModes("cannot trace out every mode".into()));
    }
    let kept: Vec<usize> = (0..m).filter(|&i| !traced[i]).collect();
    let basis = Arc::new(FockBasis::new(kept.len(), rho.max_total()));

    let mut groups: HashMap<Vec<u32>, Vec<(usize, usize)>> = HashMap::new();
    for (i, s) in rho.basis.states().iter().enumerate() {
        let occ = s.occupations();
        let env: Vec<u32> = traced_modes.iter().map(|&t| occ[t]).collect();
        let sys: Vec<u32> = kept.iter().map(|&k| occ[k]).collect();
        let r = basis.index_of(&sys).expect("reduced state fits the truncation");
        groups.entry(env).or_default().push((i, r));
    }

    let mut entries = DMatrix::zeros(basis.len(), basis.len());
    for members in groups.values() {
        for &(i, ri) in members {
            for &(j, rj) in members {
                entries[(ri, rj)] += rho.entries[(i, j)];
            }
        }
    }
    Ok(DensityMatrix { basis, entries })
}

/// Coincidence probability with the weight cut off by truncation upstream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coincidence {
    pub probability: f64,
    pub truncation_deficit: f64,
}

/// `sum_{n>=1, m>=1} <n, m| rho |n, m>` on a two-mode state.
pub fn coincidence_probability(rho: &DensityMatrix, mode_c: usize, mode_d: usize) -> Result<Coincidence> {
    if rho.num_modes() != 2 {
        return Err(Error::InvalidModes(format!(
            "coincidences need a two-mode state, got {} modes; trace the rest first",
            rho.num_modes()
        )));
    }
    if mode_c > 1 || mode_d > 1 || mode_c == mode_d {
        return Err(Error::InvalidModes(format!(
            "detector modes ({mode_c}, {mode_d}) must be 0 and 1"
        )));
    }
    let probability = rho
        .basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.occupations()[mode_c] >= 1 && s.occupations()[mode_d] >= 1)
        .map(|(i, _)| rho.entries[(i, i)].re)
        .sum();
    Ok(Coincidence {
        probability,
        truncation_deficit: rho.truncation_deficit(),
    })
}

/// Threshold-detector statistics on the two detected modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionStatistics {
    /// Probability that each detector stays dark.
    pub p_dark: [f64; 2],
    /// Probability that both stay dark.
    pub p_both_dark: f64,
    /// Total weight of the state (below 1 by the truncation deficit).
    pub weight: f64,
}

impl DetectionStatistics {
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        if rho.num_modes() != 2 {
            return Err(Error::InvalidModes(format!(
                "detection needs a two-mode state, got {} modes",
                rho.num_modes()
            )));
        }
        let mut p_dark = [0.0; 2];
        let mut p_both_dark = 0.0;
        for (i, s) in rho.basis.states().iter().enumerate() {
            let p = rho.entries[(i, i)].re;
            let occ = s.occupations();
            if occ[0] == 0 {
                p_dark[0] += p;
            }
            if occ[1] == 0 {
                p_dark[1] += p;
            }
            if occ[0] == 0 && occ[1] == 0 {
                p_both_dark += p;
            }
        }
        Ok(Self {
            p_dark,
            p_both_dark,
            weight: rho.trace(),
        })
    }

    pub fn p_click(&self, detector: usize) -> f64 {
        self.weight - self.p_dark[detector]
    }

    pub fn p_coincidence(&self) -> f64 {
        self.weight - self.p_dark[0] - self.p_dark[1] + self.p_both_dark
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn bell_like_state_reduces_to_mixture() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PureState::from_amplitudes(2, 2, [(vec![0, 0], c(h)), (vec![1, 1], c(h))]).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let reduced = partial_trace(&rho, &[1]).unwrap();
        assert!((reduced.population(&[0]) - 0.5).abs() < 1e-12);
        assert!((reduced.population(&[1]) - 0.5).abs() < 1e-12);
        let i0 = reduced.basis().index_of(&[0]).unwrap();
        let i1 = reduced.basis().index_of(&[1]).unwrap();
        assert!(reduced.entries()[(i0, i1)].norm() < 1e-12);
    }

    #[test]
    fn product_state_traces_back() {
        let a = DensityMatrix::from_pure(
            &PureState::from_amplitudes(1, 2, [(vec![0], c(0.6)), (vec![2], C64::new(0.0, 0.8))]).unwrap(),
        );
        let b = DensityMatrix::from_populations(1, 1, [(vec![0], 0.3), (vec![1], 0.7)]).unwrap();
        let ab = a.tensor(&b);
        let back = partial_trace(&ab, &[1]).unwrap();
        for i in 0..a.basis().len() {
            for j in 0..a.basis().len() {
                let occ_i = a.basis().state(i).occupations();
                let occ_j = a.basis().state(j).occupations();
                let bi = back.basis().index_of(occ_i).unwrap();
                let bj = back.basis().index_of(occ_j).unwrap();
                assert!((back.entries()[(bi, bj)] - a.entries()[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_rejections() {
        let rho = DensityMatrix::vacuum(2, 1);
        assert!(partial_trace(&rho, &[0, 1]).is_err());
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
        assert!(partial_trace(&rho, &[0, 0]).is_err());
    }

    #[test]
    fn coincidence_examples() {
        let vac = DensityMatrix::vacuum(2, 2);
        assert_eq!(coincidence_probability(&vac, 0, 1).unwrap().probability, 0.0);
        let one_one = DensityMatrix::from_populations(2, 2, [(vec![1, 1], 1.0)]).unwrap();
        assert_eq!(coincidence_probability(&one_one, 0, 1).unwrap().probability, 1.0);
        let hom = DensityMatrix::from_populations(2, 2, [(vec![2, 0], 0.5), (vec![0, 2], 0.5)]).unwrap();
        assert_eq!(coincidence_probability(&hom, 0, 1).unwrap().probability, 0.0);
        let three = DensityMatrix::vacuum(3, 1);
        assert!(coincidence_probability(&three, 0, 1).is_err());
    }

    #[test]
    fn detection_statistics_agree_with_direct_sum() {
        let rho = DensityMatrix::from_populations(
            2,
            3,
            [
                (vec![1, 1], 0.2),
                (vec![2, 0], 0.3),
                (vec![0, 0], 0.1),
                (vec![1, 2], 0.4),
            ],
        )
        .unwrap();
        let stats = DetectionStatistics::from_density(&rho).unwrap();
        let direct = coincidence_probability(&rho, 0, 1).unwrap().probability;
        assert!((stats.p_coincidence() - direct).abs() < 1e-15);
        assert!((stats.p_click(1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn vacuum_extension_keeps_populations() {
        let rho = DensityMatrix::from_populations(1, 2, [(vec![1], 0.25), (vec![2], 0.75)]).unwrap();
        let wide = rho.with_vacuum_modes(2);
        assert_eq!(wide.num_modes(), 3);
        assert!((wide.population(&[2, 0, 0]) - 0.75).abs() < 1e-15);
        assert!((wide.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvalue_check_on_mixture() {
        let rho = DensityMatrix::from_populations(2, 1, [(vec![0, 1], 0.4), (vec![1, 0], 0.6)]).unwrap();
        assert!(rho.min_eigenvalue() > -1e-12);
        assert!(rho.hermiticity_defect() < 1e-15);
    }
}
