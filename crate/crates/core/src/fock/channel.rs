use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::basis::FockBasis;
use super::lift::transform_basis_state;
use super::state::DensityMatrix;
use crate::elements::ScatteringMatrix;
use crate::{Error, Result, C64};

/// A passive element acting on `system_modes` signal modes plus ancilla modes
/// that enter in vacuum and are traced out right after the element.
///
/// The first `system_modes` indices of the scattering matrix are the signal
/// modes, the remaining ones are ancillas. The result equals lifting the full
/// matrix, applying it to `rho (x) |0><0|` and tracing the ancillas, but only
/// the columns with empty ancillas are ever built.
#[derive(Clone, Debug)]
pub struct FockChannel {
    system_modes: usize,
    max_total: usize,
    /// Per input sector `N`: ancilla occupation -> (photons lost `k`, `K` of shape `d_{N-k} x d_N`).
    kraus: Vec<BTreeMap<usize, Kraus>>,
}

#[derive(Clone, Debug)]
struct Kraus {
    lost: usize,
    op: DMatrix<C64>,
    adjoint: DMatrix<C64>,
}

impl FockChannel {
    pub fn new(s: &ScatteringMatrix, system_modes: usize, max_total: usize) -> Result<Self> {
        s.require_unitary()?;
        if system_modes == 0 || system_modes > s.dim() {
            return Err(Error::InvalidModes(format!(
                "{system_modes} system modes for a {}-mode element",
                s.dim()
            )));
        }
        let ancillas = s.dim() - system_modes;
        let full = FockBasis::new(s.dim(), max_total);
        let sys = FockBasis::new(system_modes, max_total);
        let anc = FockBasis::new(ancillas, max_total);

        let split: Vec<(usize, usize)> = full
            .states()
            .iter()
            .map(|st| {
                let (a, b) = st.occupations().split_at(system_modes);
                (sys.index_of(a).expect("fits"), anc.index_of(b).expect("fits"))
            })
            .collect();

        let mut kraus = Vec::with_capacity(max_total + 1);
        let mut input = vec![0u32; s.dim()];
        for n in 0..=max_total {
            let in_range = sys.sector(n);
            let mut ops: BTreeMap<usize, Kraus> = BTreeMap::new();
            for (col, g) in in_range.clone().enumerate() {
                input[..system_modes].copy_from_slice(sys.state(g).occupations());
                let amps = transform_basis_state(&full, s.entries(), &input);
                let out_range = full.sector(n);
                for (local, amp) in amps.into_iter().enumerate() {
                    if amp == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let (si, ai) = split[out_range.start + local];
                    let lost = anc.state(ai).total();
                    let entry = ops.entry(ai).or_insert_with(|| Kraus {
                        lost,
                        op: DMatrix::zeros(sys.sector_dim(n - lost), in_range.len()),
                        adjoint: DMatrix::zeros(0, 0),
                    });
                    entry.op[(si - sys.sector(n - lost).start, col)] = amp;
                }
            }
            for k in ops.values_mut() {
                k.adjoint = k.op.adjoint();
            }
            kraus.push(ops);
        }

        Ok(Self {
            system_modes,
            max_total,
            kraus,
        })
    }

    pub fn system_modes(&self) -> usize {
        self.system_modes
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    /// `sum_l K_l rho K_l^dagger` over ancilla outcomes `l`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.num_modes() != self.system_modes {
            return Err(Error::DimensionMismatch {
                expected: self.system_modes,
                found: rho.num_modes(),
            });
        }
        if rho.max_total() > self.max_total {
            return Err(Error::DimensionMismatch {
                expected: self.max_total,
                found: rho.max_total(),
            });
        }
        let basis = rho.basis().clone();
        let top = basis.max_total();
        let zero = C64::new(0.0, 0.0);
        let mut out = DMatrix::zeros(basis.len(), basis.len());
        for n in 0..=top {
            let rn = basis.sector(n);
            for m in 0..=top {
                let rm = basis.sector(m);
                let block = rho.entries().view((rn.start, rm.start), (rn.len(), rm.len()));
                if block.iter().all(|z| *z == zero) {
                    continue;
                }
                for (anc, left) in &self.kraus[n] {
                    let Some(right) = self.kraus[m].get(anc) else {
                        continue;
                    };
                    let res = &left.op * block * &right.adjoint;
                    let on = basis.sector(n - left.lost);
                    let om = basis.sector(m - right.lost);
                    let mut dst = out.view_mut((on.start, om.start), (on.len(), om.len()));
                    dst += res;
                }
            }
        }
        Ok(DensityMatrix::from_parts(basis, out))
    }
}
