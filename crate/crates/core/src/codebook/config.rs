use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Antenna, oversampling and compression dimensions shared by both codebooks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookConfig {
    /// Ports per polarization along the first array dimension.
    pub n1: usize,
    /// Ports per polarization along the second array dimension.
    pub n2: usize,
    pub o1: usize,
    pub o2: usize,
    /// EType II beam count L.
    pub l_beams: usize,
    /// Frequency basis count M for rank 1 and 2.
    pub m_bases_low_rank: usize,
    /// Frequency basis count M for rank 3 and 4.
    pub m_bases_high_rank: usize,
    pub n_subbands: usize,
    pub max_rank: usize,
    /// Fraction of the 2LM coefficient positions kept per layer.
    pub beta: f64,
    pub amp_bits: u32,
    pub phase_bits: u32,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl CodebookConfig {
    /// 2 x 8 dual-polarized array, 4x oversampling, L = 4, M = 7/4, 14 subbands.
    pub fn reference() -> Self {
        CodebookConfig {
            n1: 2,
            n2: 8,
            o1: 4,
            o2: 4,
            l_beams: 4,
            m_bases_low_rank: 7,
            m_bases_high_rank: 4,
            n_subbands: 14,
            max_rank: 4,
            beta: 0.75,
            amp_bits: 3,
            phase_bits: 4,
        }
    }

    /// Single-port-per-polarization configuration used by degenerate tests.
    pub fn single_port() -> Self {
        CodebookConfig {
            n1: 1,
            n2: 1,
            o1: 1,
            o2: 1,
            l_beams: 0,
            m_bases_low_rank: 1,
            m_bases_high_rank: 1,
            n_subbands: 1,
            max_rank: 1,
            beta: 1.0,
            amp_bits: 3,
            phase_bits: 4,
        }
    }

    pub fn n_ports(&self) -> usize {
        2 * self.n1 * self.n2
    }

    /// Elements per polarization (n1·n2).
    pub fn n_elements(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn m_bases(&self, rank: usize) -> usize {
        if rank <= 2 {
            self.m_bases_low_rank
        } else {
            self.m_bases_high_rank
        }
    }

    /// Validates the invariants needed by the grid and both codebooks.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n1 == 0 || self.n2 == 0 || self.o1 == 0 || self.o2 == 0 {
            return bad("n1, n2, o1, o2 must be positive".into());
        }
        if self.max_rank == 0 || self.max_rank > 4 {
            return bad(format!("max_rank {} outside [1, 4]", self.max_rank));
        }
        if self.n_subbands == 0 {
            return bad("n_subbands must be positive".into());
        }
        if self.amp_bits + self.phase_bits != 7 {
            return bad(format!(
                "amp_bits + phase_bits = {} (expected 7)",
                self.amp_bits + self.phase_bits
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta {} outside (0, 1]", self.beta));
        }
        Ok(())
    }

    /// Additional invariants of the EType II codebook.
    pub fn validate_etype2(&self) -> Result<()> {
        self.validate()?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.l_beams == 0 || self.l_beams > self.n_elements() {
            return bad(format!("l_beams {} outside [1, n1·n2]", self.l_beams));
        }
        if 2 * self.l_beams > 32 {
            return bad("strongest-row indicator needs 2L <= 32".into());
        }
        for m in [self.m_bases_low_rank, self.m_bases_high_rank] {
            if m == 0 || m > self.n_subbands {
                return bad(format!("frequency basis count {m} outside [1, n_subbands]"));
            }
        }
        Ok(())
    }
}
