//! Block-diagonal assembly of the radiation/load network matrices.
//!
//! The scatterer itself is linear, so every assembled matrix only connects
//! subports of the same harmonic; off-harmonic blocks are exactly zero.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CMatrix, HarmonicBlocks, ScattererBlocks};

/// Places `blocks` along the diagonal of a zero matrix.
pub fn block_diagonal(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

fn assemble_with(blocks: &ScattererBlocks, f: impl Fn(&HarmonicBlocks) -> CMatrix) -> CMatrix {
    let per_h: Vec<CMatrix> = blocks.harmonics().iter().map(f).collect();
    block_diagonal(&per_h)
}

/// `C_ff`, `2HM×2HM`.
pub fn assemble_structural(blocks: &ScattererBlocks) -> CMatrix {
    assemble_with(blocks, HarmonicBlocks::structural)
}

/// `C_fd`, `2HM×HN`.
pub fn assemble_fd(blocks: &ScattererBlocks) -> CMatrix {
    assemble_with(blocks, HarmonicBlocks::radiation_from_load)
}

/// `C_df`, `HN×2HM`.
pub fn assemble_df(blocks: &ScattererBlocks) -> CMatrix {
    assemble_with(blocks, HarmonicBlocks::load_from_radiation)
}

/// `C_dd`, `HN×HN`. Polarization-independent.
pub fn assemble_dd(blocks: &ScattererBlocks) -> CMatrix {
    assemble_with(blocks, |hb| hb.dd.clone())
}

/// The four network matrices of one scatterer.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkMatrices {
    pub ff: CMatrix,
    pub fd: CMatrix,
    pub df: CMatrix,
    pub dd: CMatrix,
}

impl NetworkMatrices {
    pub fn assemble(blocks: &ScattererBlocks) -> Self {
        NetworkMatrices {
            ff: assemble_structural(blocks),
            fd: assemble_fd(blocks),
            df: assemble_df(blocks),
            dd: assemble_dd(blocks),
        }
    }

    /// Block-diagonal union of several networks (one per input tone).
    pub fn stack(networks: &[NetworkMatrices]) -> Self {
        let pick = |f: fn(&NetworkMatrices) -> &CMatrix| -> Vec<CMatrix> {
            networks.iter().map(|n| f(n).clone()).collect()
        };
        NetworkMatrices {
            ff: block_diagonal(&pick(|n| &n.ff)),
            fd: block_diagonal(&pick(|n| &n.fd)),
            df: block_diagonal(&pick(|n| &n.df)),
            dd: block_diagonal(&pick(|n| &n.dd)),
        }
    }
}

/// Extracts diagonal block `h` (1-based) of a matrix built from
/// `rows_per_h × cols_per_h` harmonic blocks.
pub fn harmonic_block(matrix: &CMatrix, h: usize, rows_per_h: usize, cols_per_h: usize) -> Result<CMatrix> {
    if h == 0 || h * rows_per_h > matrix.nrows() || h * cols_per_h > matrix.ncols() {
        return Err(Error::Index {
            axis: "harmonic",
            value: h,
            max: matrix.nrows() / rows_per_h.max(1),
        });
    }
    Ok(matrix
        .view(((h - 1) * rows_per_h, (h - 1) * cols_per_h), (rows_per_h, cols_per_h))
        .into_owned())
}

/// True when every block outside the harmonic diagonal is exactly zero.
pub fn off_harmonic_blocks_zero(matrix: &CMatrix, rows_per_h: usize, cols_per_h: usize) -> bool {
    let zero = Complex64::new(0.0, 0.0);
    (0..matrix.nrows()).all(|r| {
        (0..matrix.ncols()).all(|c| r / rows_per_h == c / cols_per_h || matrix[(r, c)] == zero)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Polarization, PortLayout, DEFAULT_Z_REF};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Entries encode (block id, harmonic, row, col) so mix-ups are visible.
    fn tagged(id: f64, h: usize, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |r, col| c(id + h as f64 * 0.01, (r * 10 + col) as f64))
    }

    fn tagged_blocks(m: usize, n: usize, hh: usize) -> ScattererBlocks {
        let layout = PortLayout::new(m, n, hh).unwrap();
        let harmonics = (1..=hh)
            .map(|h| HarmonicBlocks {
                ff_pp: tagged(1.0, h, m, m),
                ff_tp: tagged(2.0, h, m, m),
                ff_pt: tagged(3.0, h, m, m),
                ff_tt: tagged(4.0, h, m, m),
                fd_p: tagged(5.0, h, m, n),
                fd_t: tagged(6.0, h, m, n),
                df_p: tagged(7.0, h, n, m),
                df_t: tagged(8.0, h, n, m),
                dd: tagged(9.0, h, n, n),
            })
            .collect();
        ScattererBlocks::new(layout, DEFAULT_Z_REF, harmonics).unwrap()
    }

    #[test]
    fn single_harmonic_structural_is_unified_block() {
        let b = tagged_blocks(2, 1, 1);
        assert_eq!(assemble_structural(&b), b.harmonic(1).unwrap().structural());
    }

    #[test]
    fn zero_harmonic_gives_zero_corner() {
        let b = tagged_blocks(2, 2, 2);
        let mut hs = b.harmonics().to_vec();
        hs[1] = HarmonicBlocks::zeros(2, 2);
        let b = ScattererBlocks::new(b.layout(), DEFAULT_Z_REF, hs).unwrap();
        let ff = assemble_structural(&b);
        assert!(ff.view((4, 4), (4, 4)).iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn structural_entry_bookkeeping() {
        let b = tagged_blocks(3, 2, 2);
        let l = b.layout();
        let ff = assemble_structural(&b);
        let row = l.radiation_index(2, Polarization::Theta, 1).unwrap();
        let col = l.radiation_index(2, Polarization::Phi, 2).unwrap();
        assert_eq!(ff[(row, col)], b.harmonic(2).unwrap().ff_pt[(0, 1)]);
        let col = l.radiation_index(1, Polarization::Theta, 3).unwrap();
        let row = l.radiation_index(1, Polarization::Phi, 2).unwrap();
        assert_eq!(ff[(row, col)], b.harmonic(1).unwrap().ff_tp[(1, 2)]);
    }

    #[test]
    fn fd_and_df_scalar_shapes() {
        let b = tagged_blocks(1, 1, 1);
        let hb = b.harmonic(1).unwrap();
        let fd = assemble_fd(&b);
        assert_eq!(fd.shape(), (2, 1));
        assert_eq!(fd[(0, 0)], hb.fd_p[(0, 0)]);
        assert_eq!(fd[(1, 0)], hb.fd_t[(0, 0)]);
        let df = assemble_df(&b);
        assert_eq!(df.shape(), (1, 2));
        assert_eq!(df[(0, 0)], hb.df_p[(0, 0)]);
        assert_eq!(df[(0, 1)], hb.df_t[(0, 0)]);
    }

    #[test]
    fn zero_submatrices_assemble_to_zero() {
        let layout = PortLayout::new(3, 2, 4).unwrap();
        let b = ScattererBlocks::frequency_flat(layout, DEFAULT_Z_REF, HarmonicBlocks::zeros(3, 2)).unwrap();
        let nets = NetworkMatrices::assemble(&b);
        for m in [&nets.ff, &nets.fd, &nets.df, &nets.dd] {
            assert!(m.iter().all(|z| *z == c(0.0, 0.0)));
        }
        assert_eq!(nets.fd.shape(), (24, 8));
        assert_eq!(nets.df.shape(), (8, 24));
    }

    #[test]
    fn fd_df_entry_bookkeeping() {
        let b = tagged_blocks(3, 4, 3);
        let l = b.layout();
        let fd = assemble_fd(&b);
        let df = assemble_df(&b);
        for h in 1..=3 {
            let hb = b.harmonic(h).unwrap();
            for m in 1..=3 {
                for n in 1..=4 {
                    let ri = l.radiation_index(h, Polarization::Theta, m).unwrap();
                    let li = l.load_index(h, n).unwrap();
                    assert_eq!(fd[(ri, li)], hb.fd_t[(m - 1, n - 1)]);
                    let ri = l.radiation_index(h, Polarization::Phi, m).unwrap();
                    assert_eq!(df[(li, ri)], hb.df_p[(n - 1, m - 1)]);
                }
            }
        }
    }

    #[test]
    fn dd_scalar_diagonal_and_kronecker() {
        let layout = PortLayout::new(1, 1, 3).unwrap();
        let hs = (1..=3)
            .map(|h| HarmonicBlocks {
                dd: CMatrix::from_element(1, 1, c(h as f64, -1.0)),
                ..HarmonicBlocks::zeros(1, 1)
            })
            .collect();
        let b = ScattererBlocks::new(layout, DEFAULT_Z_REF, hs).unwrap();
        let dd = assemble_dd(&b);
        assert_eq!(dd, CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, -1.0), c(2.0, -1.0), c(3.0, -1.0)])));

        let s = tagged(9.0, 0, 2, 2);
        let layout = PortLayout::new(1, 2, 3).unwrap();
        let flat = ScattererBlocks::frequency_flat(layout, DEFAULT_Z_REF, HarmonicBlocks { dd: s.clone(), ..HarmonicBlocks::zeros(1, 2) })
            .unwrap();
        let dd = assemble_dd(&flat);
        let kron = CMatrix::identity(3, 3).kronecker(&s);
        assert_eq!(dd, kron);
    }

    #[test]
    fn off_harmonic_blocks_vanish_and_round_trip() {
        let b = tagged_blocks(2, 3, 4);
        let (m, n) = (2, 3);
        let nets = NetworkMatrices::assemble(&b);
        assert!(off_harmonic_blocks_zero(&nets.ff, 2 * m, 2 * m));
        assert!(off_harmonic_blocks_zero(&nets.fd, 2 * m, n));
        assert!(off_harmonic_blocks_zero(&nets.df, n, 2 * m));
        assert!(off_harmonic_blocks_zero(&nets.dd, n, n));
        for h in 1..=4 {
            let hb = b.harmonic(h).unwrap();
            assert_eq!(harmonic_block(&nets.ff, h, 2 * m, 2 * m).unwrap(), hb.structural());
            assert_eq!(harmonic_block(&nets.fd, h, 2 * m, n).unwrap(), hb.radiation_from_load());
            assert_eq!(harmonic_block(&nets.df, h, n, 2 * m).unwrap(), hb.load_from_radiation());
            assert_eq!(harmonic_block(&nets.dd, h, n, n).unwrap(), hb.dd);
        }
        assert_eq!(NetworkMatrices::assemble(&b), nets);
    }
}
