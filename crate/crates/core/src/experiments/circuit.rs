use nalgebra::DMatrix;

use crate::elements::{MmiModel, ScatteringMatrix};
use crate::error::unit_closed;
use crate::fock::{DensityMatrix, FockChannel};
use crate::{Error, Result, C64};

use super::LossChannelSet;

/// A sequence of passive elements on a fixed set of signal modes, with every
/// element's loss modes traced out as soon as the element has acted.
#[derive(Clone, Debug)]
pub struct Circuit {
    system_modes: usize,
    max_total: usize,
    stages: Vec<FockChannel>,
}

/// `[[t, -r], [r, t]]` coupling a mode to one loss mode; transmission `eta`.
pub fn loss_beamsplitter(eta: f64) -> Result<ScatteringMatrix> {
    unit_closed("eta", eta)?;
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    ScatteringMatrix::new(DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(t, 0.0), C64::new(-r, 0.0), C64::new(r, 0.0), C64::new(t, 0.0)],
    ))
}

impl Circuit {
    pub fn new(system_modes: usize, max_total: usize) -> Self {
        Self {
            system_modes,
            max_total,
            stages: Vec::new(),
        }
    }

    pub fn system_modes(&self) -> usize {
        self.system_modes
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Appends `element` acting on `targets`. Element modes past
    /// `targets.len()` are loss modes: vacuum in, traced out after.
    pub fn push(&mut self, element: &ScatteringMatrix, targets: &[usize]) -> Result<()> {
        if targets.is_empty() || targets.len() > element.dim() {
            return Err(Error::InvalidModes(format!(
                "{} target modes for a {}-mode element",
                targets.len(),
                element.dim()
            )));
        }
        if let Some(&bad) = targets.iter().find(|&&m| m >= self.system_modes) {
            return Err(Error::InvalidModes(format!(
                "target mode {bad} outside {} signal modes",
                self.system_modes
            )));
        }
        let ancillas = element.dim() - targets.len();
        let total = self.system_modes + ancillas;
        let placement: Vec<usize> = targets.iter().copied().chain(self.system_modes..total).collect();
        let wide = element.embed(total, &placement)?;
        self.stages
            .push(FockChannel::new(&wide, self.system_modes, self.max_total)?);
        Ok(())
    }

    /// Loss on a single mode; a no-op for `eta = 1`.
    pub fn push_loss(&mut self, mode: usize, eta: f64) -> Result<()> {
        let bs = loss_beamsplitter(eta)?;
        if eta == 1.0 {
            return Ok(());
        }
        self.push(&bs, &[mode])
    }

    /// Input losses, coupler and output losses on every two-mode block
    /// `(2b, 2b + 1)`. One block is a single HOM measurement; two blocks
    /// describe the same circuit seen by two time bins.
    pub fn hom(losses: &LossChannelSet, mmi: &MmiModel, blocks: usize, max_total: usize) -> Result<Self> {
        let mut c = Self::new(2 * blocks, max_total);
        let coupler = mmi.scattering()?;
        let extra = mmi.loss_modes();
        for b in 0..blocks {
            c.push_loss(2 * b, losses.eta_a)?;
            c.push_loss(2 * b + 1, losses.eta_b)?;
        }
        for b in 0..blocks {
            let targets = [2 * b, 2 * b + 1];
            // The lossy coupler keeps its own loss modes after the two arms.
            debug_assert_eq!(coupler.dim(), 2 + extra);
            c.push(&coupler, &targets)?;
        }
        for b in 0..blocks {
            c.push_loss(2 * b, losses.eta_c)?;
            c.push_loss(2 * b + 1, losses.eta_d)?;
        }
        Ok(c)
    }

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
        let mut out = rho.clone();
        for stage in &self.stages {
            out = stage.apply(&out)?;
        }
        Ok(out)
    }
}
