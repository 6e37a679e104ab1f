use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::basis::FockBasis;
use super::state::{DensityMatrix, PureState};
use crate::elements::ScatteringMatrix;
use crate::{Error, Result, C64};

/// Expands `prod_j (sum_i S_ij a_i^dagger)^{n_j} / sqrt(prod_j n_j!) |0>` over
/// the sector of `basis` holding `sum_j n_j` photons.
///
/// The product is built one creation operator at a time as a polynomial in
/// the output creation operators, then converted to normalized Fock
/// amplitudes. Returns amplitudes in sector-local order.
pub(crate) fn transform_basis_state(basis: &FockBasis, s: &DMatrix<C64>, input: &[u32]) -> Vec<C64> {
    let modes = basis.num_modes();
    debug_assert_eq!(input.len(), s.ncols());
    let total: usize = input.iter().map(|&n| n as usize).sum();
    let zero = C64::new(0.0, 0.0);

    let mut level = 0usize;
    let mut coeffs = vec![C64::new(1.0, 0.0)];
    let mut input_norm = 1.0f64;
    for (j, &n_j) in input.iter().enumerate() {
        for k in 0..n_j {
            input_norm *= ((k + 1) as f64).sqrt();
            let from = basis.sector(level);
            let to = basis.sector(level + 1);
            let mut next = vec![zero; to.len()];
            for (local, &c) in coeffs.iter().enumerate() {
                if c == zero {
                    continue;
                }
                let g = from.start + local;
                for i in 0..modes {
                    let sij = s[(i, j)];
                    if sij == zero {
                        continue;
                    }
                    let up = basis.raise(g, i).expect("sector within truncation");
                    next[up - to.start] += c * sij;
                }
            }
            coeffs = next;
            level += 1;
        }
    }
    debug_assert_eq!(level, total);

    let range = basis.sector(total);
    coeffs
        .iter()
        .enumerate()
        .map(|(local, &c)| c * (basis.sqrt_factorial(range.start + local) / input_norm))
        .collect()
}

/// A scattering matrix lifted to every photon-number sector of a truncated
/// Fock space.
#[derive(Clone, Debug)]
pub struct FockOperator {
    source: ScatteringMatrix,
    basis: Arc<FockBasis>,
    blocks: Vec<DMatrix<C64>>,
}

/// Lifts a unitary single-photon scattering matrix to the multiphoton space.
///
/// Sector `N` is the matrix `<out|U_N|in>` over all `N`-photon basis states.
pub fn lift_scattering(s: &ScatteringMatrix, max_total_photons: usize) -> Result<FockOperator> {
    s.require_unitary()?;
    let basis = Arc::new(FockBasis::new(s.dim(), max_total_photons));
    let blocks = (0..=max_total_photons)
        .map(|n| {
            let range = basis.sector(n);
            let mut block = DMatrix::zeros(range.len(), range.len());
            for (col, g) in range.clone().enumerate() {
                let column = transform_basis_state(&basis, s.entries(), basis.state(g).occupations());
                for (row, amp) in column.into_iter().enumerate() {
                    block[(row, col)] = amp;
                }
            }
            block
        })
        .collect();
    Ok(FockOperator {
        source: s.clone(),
        basis,
        blocks,
    })
}

impl FockOperator {
    pub fn source(&self) -> &ScatteringMatrix {
        &self.source
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn max_total(&self) -> usize {
        self.basis.max_total()
    }

    /// The block acting on the `n`-photon sector.
    pub fn block(&self, n: usize) -> &DMatrix<C64> {
        &self.blocks[n]
    }

    /// Worst `max |U_N U_N^dagger - I|` over all sectors.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let p = b * b.adjoint();
                let mut worst = 0.0f64;
                for i in 0..p.nrows() {
                    for j in 0..p.ncols() {
                        let t = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((p[(i, j)] - t).norm());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    pub fn apply_to_pure(&self, state: &PureState) -> Result<PureState> {
        check_compatible(&self.basis, state.basis())?;
        let basis = state.basis().clone();
        let mut out = DVector::zeros(basis.len());
        for n in 0..=basis.max_total() {
            let r = basis.sector(n);
            let v = state.amplitudes().rows(r.start, r.len());
            out.rows_mut(r.start, r.len()).copy_from(&(&self.blocks[n] * v));
        }
        Ok(PureState::from_parts(basis, out))
    }
}

fn check_compatible(op: &FockBasis, state: &FockBasis) -> Result<()> {
    if op.num_modes() != state.num_modes() {
        return Err(Error::DimensionMismatch {
            expected: op.num_modes(),
            found: state.num_modes(),
        });
    }
    if state.max_total() > op.max_total() {
        return Err(Error::DimensionMismatch {
            expected: op.max_total(),
            found: state.max_total(),
        });
    }
    Ok(())
}

/// `U rho U^dagger`, evaluated block by block between photon-number sectors.
pub fn apply_to_density(op: &FockOperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_compatible(&op.basis, rho.basis())?;
    let basis = rho.basis().clone();
    let top = basis.max_total();
    let adjoints: Vec<DMatrix<C64>> = op.blocks[..=top].iter().map(|b| b.adjoint()).collect();
    let mut out = DMatrix::zeros(basis.len(), basis.len());
    for n in 0..=top {
        let rn = basis.sector(n);
        for m in 0..=top {
            let rm = basis.sector(m);
            let block = rho.entries().view((rn.start, rm.start), (rn.len(), rm.len()));
            if block.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let res = &op.blocks[n] * block * &adjoints[m];
            out.view_mut((rn.start, rm.start), (rn.len(), rm.len())).copy_from(&res);
        }
    }
    Ok(DensityMatrix::from_parts(basis, out))
}
