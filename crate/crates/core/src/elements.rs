//! Scattering matrices for the circuit elements.
//!
//! Mode convention: a photon entering mode `j` leaves in mode `i` with
//! amplitude `S[(i, j)]`, i.e. `a_j^dagger -> sum_i S_ij a_i^dagger`.
//! Signal modes come first; loss modes of lossy elements are appended after
//! them.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{unit_closed, unit_half_open};
use crate::{Error, Result, C64};

/// Tolerance on `max |SS^dagger - I|` below which a matrix counts as unitary.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Complex square matrix describing single-photon mode mixing.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringMatrix {
    entries: DMatrix<C64>,
    unitary: bool,
}

impl ScatteringMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let unitary = unitarity_defect(&entries) < UNITARITY_TOL;
        Ok(Self { entries, unitary })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
            unitary: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, out_mode: usize, in_mode: usize) -> C64 {
        self.entries[(out_mode, in_mode)]
    }

    /// Whether the unitarity certificate was granted at construction.
    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// `max |SS^dagger - I|` over all entries.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.entries)
    }

    pub fn require_unitary(&self) -> Result<()> {
        if self.unitary {
            Ok(())
        } else {
            Err(Error::NonUnitary {
                defect: self.unitarity_defect(),
            })
        }
    }

    /// The element `self` applied after `first`.
    pub fn after(&self, first: &ScatteringMatrix) -> Result<Self> {
        if self.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: first.dim(),
            });
        }
        Self::new(&self.entries * &first.entries)
    }

    /// Places this matrix on `modes` of a `total_modes` system, identity elsewhere.
    pub fn embed(&self, total_modes: usize, modes: &[usize]) -> Result<Self> {
        if modes.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: modes.len(),
            });
        }
        let mut seen = vec![false; total_modes];
        for &m in modes {
            if m >= total_modes || seen[m] {
                return Err(Error::InvalidModes(format!(
                    "mode list {modes:?} is not a set of distinct indices below {total_modes}"
                )));
            }
            seen[m] = true;
        }
        let mut out = DMatrix::identity(total_modes, total_modes);
        for (a, &i) in modes.iter().enumerate() {
            out[(i, i)] = C64::new(0.0, 0.0);
            for (b, &j) in modes.iter().enumerate() {
                out[(i, j)] = self.entries[(a, b)];
            }
        }
        Ok(Self {
            entries: out,
            unitary: self.unitary,
        })
    }
}

fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let prod = m * m.adjoint();
    let mut worst = 0.0_f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// The balanced 2x2 coupler `(1/sqrt 2) [[1, 1], [1, e^{i pi}]]`.
pub fn ideal_mmi() -> ScatteringMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ScatteringMatrix {
        entries: DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)],
        ),
        unitary: true,
    }
}

/// `diag(1, e^{i phi})`: the phase acts on the second interferometer arm.
pub fn phase_shifter(phi: f64) -> ScatteringMatrix {
    let mut entries = DMatrix::identity(2, 2);
    entries[(1, 1)] = C64::from_polar(1.0, phi);
    ScatteringMatrix { entries, unitary: true }
}

/// Fraction of power lost for an attenuation given in dB.
pub fn db_to_loss_fraction(loss_db: f64) -> f64 {
    1.0 - 10f64.powf(-loss_db / 10.0)
}

/// Attenuation in dB for a lost power fraction.
pub fn loss_fraction_to_db(alpha_loss: f64) -> f64 {
    -10.0 * (1.0 - alpha_loss).log10()
}

/// Smallest internal phase in `[0, pi]` allowed by `|cos(phi/2)| <= alpha/(1-alpha)`.
///
/// Returns `pi` for a lossless coupler and `0` once `alpha >= 0.5`, where the
/// bound no longer constrains the phase.
pub fn phase_bound_min_phi(alpha_loss: f64) -> Result<f64> {
    unit_half_open("alpha_loss", alpha_loss)?;
    let ratio = (alpha_loss / (1.0 - alpha_loss)).min(1.0);
    Ok(2.0 * ratio.acos())
}

/// Smallest loss fraction for which the internal phase `phi` is feasible,
/// `|cos(phi/2)| / (1 + |cos(phi/2)|)`.
pub fn min_loss_for_phase(phi: f64) -> f64 {
    let c = (0.5 * phi).cos().abs();
    c / (1.0 + c)
}

/// Parameters of a lossy MMI embedded in a 4x4 unitary.
///
/// `theta` and `beta` are the loss-mode phases, solved from `(eta, alpha_loss,
/// phi)` so that the two signal rows are orthogonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossyMmiParams {
    pub eta: f64,
    pub alpha_loss: f64,
    pub phi: f64,
    pub theta: f64,
    pub beta: f64,
}

impl LossyMmiParams {
    /// Validates the inputs against the feasibility bound and solves for the
    /// loss-mode phases.
    ///
    /// Canonical branch: `(theta + beta)/2 = phi/2 + pi` when `cos(phi/2) >= 0`
    /// (else `phi/2`), `cos((theta - beta)/2) = (alpha_bar/alpha) |cos(phi/2)|`,
    /// `theta >= beta`.
    pub fn new(eta: f64, alpha_loss: f64, phi: f64) -> Result<Self> {
        unit_closed("eta", eta)?;
        unit_half_open("alpha_loss", alpha_loss)?;
        if !phi.is_finite() {
            return Err(Error::OutOfDomain {
                name: "phi",
                value: phi,
                domain: "finite radians",
            });
        }
        let half = 0.5 * phi;
        let c = half.cos();
        let bound = alpha_loss / (1.0 - alpha_loss);
        // eta in {0, 1} removes the cross terms, so any phase is admissible.
        let constrained = eta * (1.0 - eta) > 0.0;
        if constrained && c.abs() > bound + 1e-12 {
            return Err(Error::InfeasiblePhase {
                phi,
                alpha_loss,
                lhs: c.abs(),
                bound,
            });
        }
        let mean = if c >= 0.0 { half + PI } else { half };
        let ratio = if alpha_loss > 0.0 {
            ((1.0 - alpha_loss) / alpha_loss * c.abs()).min(1.0)
        } else {
            0.0
        };
        let spread = ratio.acos();
        Ok(Self {
            eta,
            alpha_loss,
            phi,
            theta: mean + spread,
            beta: mean - spread,
        })
    }

    pub fn eta_bar(&self) -> f64 {
        1.0 - self.eta
    }

    pub fn alpha_bar(&self) -> f64 {
        1.0 - self.alpha_loss
    }

    /// Modulus of `sqrt(eta eta_bar) [alpha_bar (1 + e^{-i phi}) + alpha (e^{-i theta} + e^{-i beta})]`,
    /// the inner product of the two signal rows.
    pub fn row_orthogonality_residual(&self) -> f64 {
        let a = self.alpha_loss;
        let z = (C64::new(1.0, 0.0) + C64::from_polar(1.0, -self.phi)) * self.alpha_bar()
            + (C64::from_polar(1.0, -self.theta) + C64::from_polar(1.0, -self.beta)) * a;
        (self.eta * self.eta_bar()).sqrt() * z.norm()
    }
}

/// Builds the 4x4 lossy MMI (modes: two signals, then two loss modes).
pub fn lossy_mmi(eta: f64, alpha_loss: f64, phi: f64) -> Result<(ScatteringMatrix, LossyMmiParams)> {
    let params = LossyMmiParams::new(eta, alpha_loss, phi)?;
    Ok((lossy_mmi_matrix(&params)?, params))
}

/// The 4x4 embedding for already-solved parameters.
pub fn lossy_mmi_matrix(p: &LossyMmiParams) -> Result<ScatteringMatrix> {
    let (eta, eb) = (p.eta, p.eta_bar());
    let (al, ab) = (p.alpha_loss, p.alpha_bar());
    let r = |x: f64| C64::new(x.sqrt(), 0.0);
    let ph = |angle: f64, x: f64| C64::from_polar(x.sqrt(), angle);

    let top = [
        [r(eta * ab), r(eb * ab), r(eta * al), r(eb * al)],
        [
            r(eb * ab),
            ph(p.phi, eta * ab),
            ph(p.theta, eb * al),
            ph(p.beta, eta * al),
        ],
    ];
    // The lower-left block mirrors the first two columns of the top rows.
    let lower_left = DMatrix::from_row_slice(
        2,
        2,
        &[r(eta * al), ph(p.theta, eb * al), r(eb * al), ph(p.beta, eta * al)],
    );

    let complement = orthonormal_complement(&top);
    let c0 = DMatrix::from_fn(2, 2, |i, j| complement[i][j]);
    let full0 = DMatrix::from_fn(2, 4, |i, j| complement[i][j]);
    let rotation = aligning_unitary(&lower_left, &c0);
    let bottom = rotation * full0;

    let mut m = DMatrix::zeros(4, 4);
    for j in 0..4 {
        m[(0, j)] = top[0][j];
        m[(1, j)] = top[1][j];
        m[(2, j)] = bottom[(0, j)];
        m[(3, j)] = bottom[(1, j)];
    }
    let s = ScatteringMatrix::new(m)?;
    s.require_unitary()?;
    Ok(s)
}

/// Completes two orthonormal rows of length 4 with two more, projecting the
/// known rows out of `e_0..e_3` in index order. Each new row is phased so its
/// first non-negligible entry is real and positive.
fn orthonormal_complement(rows: &[[C64; 4]; 2]) -> [[C64; 4]; 2] {
    let inner = |u: &[C64; 4], v: &[C64; 4]| -> C64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };
    let mut basis: Vec<[C64; 4]> = rows.to_vec();
    let mut out = Vec::with_capacity(2);
    for k in 0..4 {
        if out.len() == 2 {
            break;
        }
        let mut v = [C64::new(0.0, 0.0); 4];
        v[k] = C64::new(1.0, 0.0);
        // Two passes keep the result orthogonal when rows nearly span e_k.
        for _ in 0..2 {
            for u in &basis {
                let c = inner(u, &v);
                for i in 0..4 {
                    v[i] -= c * u[i];
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        let lead = v
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(C64::new(1.0, 0.0));
        for z in v.iter_mut() {
            *z = *z * lead / norm;
        }
        basis.push(v);
        out.push(v);
    }
    [out[0], out[1]]
}

/// Unitary `W` with `W c0 = target`, given `target^dagger target = c0^dagger c0`.
///
/// Takes the unitary polar factor of `target c0^dagger`; it agrees with any
/// valid `W` on the range of `c0`, which is all that matters.
fn aligning_unitary(target: &DMatrix<C64>, c0: &DMatrix<C64>) -> DMatrix<C64> {
    let m = target * c0.adjoint();
    if m.iter().all(|z| z.norm() < 1e-14) {
        return DMatrix::identity(2, 2);
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

/// Coupler model used inside interferometers and HOM experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MmiModel {
    Ideal,
    Lossy(LossyMmiParams),
}

impl MmiModel {
    pub fn lossy(eta: f64, alpha_loss: f64, phi: f64) -> Result<Self> {
        Ok(Self::Lossy(LossyMmiParams::new(eta, alpha_loss, phi)?))
    }

    /// The balanced coupler with internal phase `phi` and no more loss than
    /// the phase requires. At `phi = pi` this is the ideal coupler.
    pub fn minimal_loss(phi: f64) -> Result<Self> {
        Self::lossy(0.5, min_loss_for_phase(phi), phi)
    }

    /// Number of loss modes appended after the two signal modes.
    pub fn loss_modes(&self) -> usize {
        match self {
            Self::Ideal => 0,
            Self::Lossy(_) => 2,
        }
    }

    pub fn scattering(&self) -> Result<ScatteringMatrix> {
        match self {
            Self::Ideal => Ok(ideal_mmi()),
            Self::Lossy(p) => lossy_mmi_matrix(p),
        }
    }
}

/// Mach-Zehnder interferometer: second MMI . phase shifter . first MMI.
///
/// For lossy couplers the result acts on `2 + 2 + 2` modes: the two arms, the
/// loss modes of the first coupler, then those of the second.
pub fn mzi(phi: f64, mmi: &MmiModel) -> Result<ScatteringMatrix> {
    let coupler = mmi.scattering()?;
    let extra = mmi.loss_modes();
    let total = 2 + 2 * extra;
    let first_modes: Vec<usize> = (0..2).chain(2..2 + extra).collect();
    let second_modes: Vec<usize> = (0..2).chain(2 + extra..total).collect();
    let first = coupler.embed(total, &first_modes)?;
    let shift = phase_shifter(phi).embed(total, &[0, 1])?;
    let second = coupler.embed(total, &second_modes)?;
    second.after(&shift)?.after(&first)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn ideal_mmi_matches_displayed_matrix() {
        let s = ideal_mmi();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.get(0, 0), C64::new(h, 0.0), 1e-15));
        assert!(close(s.get(1, 1), C64::new(-h, 0.0), 1e-15));
        assert!(s.unitarity_defect() < 1e-12);
        let twice = s.after(&s).unwrap();
        assert!((twice.get(0, 0).norm_sqr() - 1.0).abs() < 1e-12);
        assert!(twice.get(1, 0).norm_sqr() < 1e-12);
    }

    #[test]
    fn lossless_embedding_is_block_diagonal() {
        let (s, p) = lossy_mmi(0.5, 0.0, PI).unwrap();
        let ideal = ideal_mmi();
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(s.get(i, j), ideal.get(i, j), 1e-12));
                assert!(s.get(i, j + 2).norm() < 1e-12);
                assert!(s.get(i + 2, j).norm() < 1e-12);
            }
        }
        assert!(close(s.get(2, 2), C64::new(1.0, 0.0), 1e-12));
        assert!(close(s.get(3, 3), C64::new(1.0, 0.0), 1e-12));
        assert!(p.row_orthogonality_residual() < 1e-12);
    }

    #[test]
    fn device_loss_point_is_feasible_and_unitary() {
        let alpha = db_to_loss_fraction(0.8);
        let (s, p) = lossy_mmi(0.5, alpha, 2.74).unwrap();
        assert!(s.unitarity_defect() < 1e-9);
        assert!(p.row_orthogonality_residual() < 1e-10);
        assert!(p.theta >= p.beta);
        let phi_min = phase_bound_min_phi(alpha).unwrap();
        assert!((2.74 - phi_min).abs() < 0.01);
    }

    #[test]
    fn infeasible_phase_reports_bound() {
        match lossy_mmi(0.5, 0.1, PI / 2.0) {
            Err(Error::InfeasiblePhase { lhs, bound, .. }) => {
                assert!((lhs - (PI / 4.0).cos()).abs() < 1e-12);
                assert!((bound - 0.1 / 0.9).abs() < 1e-12);
            }
            other => panic!("expected infeasible phase, got {other:?}"),
        }
    }

    #[test]
    fn printed_entries_survive_completion() {
        let (s, p) = lossy_mmi(0.3, 0.4, 2.2).unwrap();
        let sq = |x: f64| x.sqrt();
        assert!(close(s.get(2, 0), C64::new(sq(0.3 * 0.4), 0.0), 1e-12));
        assert!(close(s.get(3, 0), C64::new(sq(0.7 * 0.4), 0.0), 1e-12));
        assert!(close(s.get(2, 1), C64::from_polar(sq(0.7 * 0.4), p.theta), 1e-12));
        assert!(close(s.get(3, 1), C64::from_polar(sq(0.3 * 0.4), p.beta), 1e-12));
        assert!(s.unitarity_defect() < 1e-9);
    }

    #[test]
    fn degenerate_reflectivities_pass_through() {
        let (bar, _) = lossy_mmi(1.0, 0.0, 0.3).unwrap();
        assert!(close(bar.get(0, 0), C64::new(1.0, 0.0), 1e-12));
        assert!(close(bar.get(1, 1), C64::from_polar(1.0, 0.3), 1e-12));
        let (cross, _) = lossy_mmi(0.0, 0.0, 0.0).unwrap();
        assert!(close(cross.get(1, 0), C64::new(1.0, 0.0), 1e-12));
        assert!(cross.unitarity_defect() < 1e-9);
    }

    #[test]
    fn phase_bound_values() {
        assert_eq!(phase_bound_min_phi(0.0).unwrap(), PI);
        let v = phase_bound_min_phi(0.0450).unwrap();
        assert!((v - 3.047).abs() < 1e-3, "{v}");
        assert_eq!(phase_bound_min_phi(0.6).unwrap(), 0.0);
        assert!(phase_bound_min_phi(1.0).is_err());
    }

    #[test]
    fn minimal_loss_sits_on_the_bound() {
        for phi in [PI, 3.0, 2.74, 2.0, -2.5] {
            let alpha = min_loss_for_phase(phi);
            let m = MmiModel::minimal_loss(phi).unwrap();
            assert!(m.scattering().unwrap().is_unitary());
            if phi.abs() <= PI {
                assert!((phase_bound_min_phi(alpha).unwrap() - phi.abs()).abs() < 1e-7);
            }
        }
        assert_eq!(min_loss_for_phase(PI), (0.5 * PI).cos() / (1.0 + (0.5 * PI).cos()));
        assert!(MmiModel::lossy(0.5, 0.9 * min_loss_for_phase(2.74), 2.74).is_err());
    }

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_loss_fraction(0.0), 0.0);
        assert!((db_to_loss_fraction(0.8) - 0.168_235_7).abs() < 1e-6);
        assert!((db_to_loss_fraction(3.0103) - 0.5).abs() < 1e-5);
        assert!((loss_fraction_to_db(db_to_loss_fraction(0.37)) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn phase_shifter_routes_through_mzi() {
        assert_eq!(phase_shifter(0.0).entries(), ScatteringMatrix::identity(2).entries());
        let m = mzi(PI, &MmiModel::Ideal).unwrap();
        assert!((m.get(1, 0).norm_sqr() - 1.0).abs() < 1e-12);
        for k in 0..64 {
            let phi = 2.0 * PI * k as f64 / 64.0;
            let m = mzi(phi, &MmiModel::Ideal).unwrap();
            let p_c = m.get(1, 0).norm_sqr();
            assert!((p_c - 0.5 * (1.0 - phi.cos())).abs() < 1e-10);
        }
    }

    #[test]
    fn lossy_mzi_is_unitary_on_six_modes() {
        let model = MmiModel::lossy(0.5, 0.2, 2.8).unwrap();
        let m = mzi(1.0, &model).unwrap();
        assert_eq!(m.dim(), 6);
        assert!(m.is_unitary());
    }

    #[test]
    fn embed_rejects_repeated_modes() {
        assert!(ideal_mmi().embed(3, &[0, 0]).is_err());
        assert!(ideal_mmi().embed(3, &[0, 3]).is_err());
    }
}
