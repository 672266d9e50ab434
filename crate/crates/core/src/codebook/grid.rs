use std::f64::consts::PI;

use nalgebra::{DMatrix, DVectorView};

use super::CodebookConfig;
use crate::error::Result;
use crate::scalar::{cis_f64, Cx, Real};

/// Oversampled 2-D DFT beam grid.
///
/// Column `(i1, i2)` is the Kronecker product of two 1-D oversampled DFT
/// vectors, scaled to unit norm. Antenna `(m, n)` sits at row `m·n2 + n`;
/// column `(i1, i2)` sits at `i1·(n2·o2) + i2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DftBeamGrid<T: Real> {
    config: CodebookConfig,
    columns: DMatrix<Cx<T>>,
}

/// Builds the oversampled DFT grid for `config`.
pub fn build_beam_grid<T: Real>(config: &CodebookConfig) -> Result<DftBeamGrid<T>> {
    config.validate()?;
    let (n1, n2) = (config.n1, config.n2);
    let (h, v) = (config.n1 * config.o1, config.n2 * config.o2);
    let scale = 1.0 / ((n1 * n2) as f64).sqrt();
    let columns = DMatrix::from_fn(n1 * n2, h * v, |row, col| {
        let (m, n) = (row / n2, row % n2);
        let (i1, i2) = (col / v, col % v);
        // integer reduction keeps the phase exact for large indices
        let frac = ((m * i1) % h) as f64 / h as f64 + ((n * i2) % v) as f64 / v as f64;
        cis_f64::<T>(2.0 * PI * frac) * T::lit(scale)
    });
    Ok(DftBeamGrid {
        config: config.clone(),
        columns,
    })
}

impl<T: Real> DftBeamGrid<T> {
    pub fn config(&self) -> &CodebookConfig {
        &self.config
    }

    pub fn columns(&self) -> &DMatrix<Cx<T>> {
        &self.columns
    }

    /// Grid extent along the first dimension (n1·o1).
    pub fn extent1(&self) -> usize {
        self.config.n1 * self.config.o1
    }

    /// Grid extent along the second dimension (n2·o2).
    pub fn extent2(&self) -> usize {
        self.config.n2 * self.config.o2
    }

    pub fn n_columns(&self) -> usize {
        self.columns.ncols()
    }

    pub fn col_index(&self, i1: usize, i2: usize) -> usize {
        (i1 % self.extent1()) * self.extent2() + (i2 % self.extent2())
    }

    pub fn column(&self, i1: usize, i2: usize) -> DVectorView<'_, Cx<T>> {
        self.columns.column(self.col_index(i1, i2))
    }

    /// Grid column of orthogonal beam `beam = l1·n2 + l2` under rotation `(q1, q2)`.
    pub fn orthogonal_col_index(&self, beam: usize, rotation: (usize, usize)) -> usize {
        let (l1, l2) = (beam / self.config.n2, beam % self.config.n2);
        self.col_index(
            self.config.o1 * l1 + rotation.0,
            self.config.o2 * l2 + rotation.1,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::abs2;

    #[test]
    fn degenerate_single_port_grid_is_one() {
        let grid = build_beam_grid::<f64>(&CodebookConfig::single_port()).unwrap();
        assert_eq!(grid.columns().shape(), (1, 1));
        assert!((grid.columns()[(0, 0)] - Cx::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_port_column_matches_formula() {
        let cfg = CodebookConfig {
            n1: 2,
            ..CodebookConfig::single_port()
        };
        let grid = build_beam_grid::<f64>(&cfg).unwrap();
        let col = grid.column(1, 0);
        let s = 1.0 / 2f64.sqrt();
        assert!((col[0] - Cx::new(s, 0.0)).norm() < 1e-15);
        assert!((col[1] - Cx::new(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reference_grid_shape_and_unit_columns() {
        let grid = build_beam_grid::<f64>(&CodebookConfig::reference()).unwrap();
        assert_eq!(grid.columns().shape(), (16, 256));
        for c in 0..grid.n_columns() {
            let norm2: f64 = grid.columns().column(c).iter().map(|z| abs2(*z)).sum();
            assert!((norm2.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entry_matches_closed_form() {
        let cfg = CodebookConfig::reference();
        let grid = build_beam_grid::<f64>(&cfg).unwrap();
        let (i1, i2) = (5, 19);
        for m in 0..cfg.n1 {
            for n in 0..cfg.n2 {
                let phase = 2.0 * PI * (m as f64 * i1 as f64 / 8.0 + n as f64 * i2 as f64 / 32.0);
                let expect = Cx::new(phase.cos(), phase.sin()) / 4.0;
                assert!((grid.column(i1, i2)[m * cfg.n2 + n] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn orthogonal_subset_is_orthonormal_for_every_rotation() {
        let cfg = CodebookConfig::reference();
        let grid = build_beam_grid::<f64>(&cfg).unwrap();
        for q1 in 0..cfg.o1 {
            for q2 in 0..cfg.o2 {
                let cols: Vec<usize> = (0..cfg.n_elements())
                    .map(|b| grid.orthogonal_col_index(b, (q1, q2)))
                    .collect();
                let sub = grid.columns().select_columns(&cols);
                let gram = sub.adjoint() * &sub;
                for i in 0..gram.nrows() {
                    for j in 0..gram.ncols() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        assert!((gram[(i, j)].re - target).abs() < 1e-10);
                        assert!(gram[(i, j)].im.abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn f32_grid_columns_have_unit_norm() {
        let grid = build_beam_grid::<f32>(&CodebookConfig::reference()).unwrap();
        for c in 0..grid.n_columns() {
            let norm2: f32 = grid.columns().column(c).iter().map(|z| abs2(*z)).sum();
            assert!((norm2 - 1.0).abs() < 1e-5);
        }
    }
}
