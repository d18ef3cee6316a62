//! Seeded pencil corpora shared by the acceptance criteria.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use num_complex::Complex64;
use penred_core::pencil::blocks::{synthesize, Block, BlockSpec};
use penred_core::pencil::Pencil;
use penred_core::saddle::SaddleSpec;

pub fn rng_for(index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + index)
}

pub fn rmat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> DMatrix<f64> {
    let r = rank.min(rows).min(cols);
    if r == 0 {
        return DMatrix::zeros(rows, cols);
    }
    rmat(rng, rows, r) * rmat(rng, r, cols)
}

/// Random pencils of sizes 1..=20 with mixed rank structure: dense,
/// rank-deficient, scrambled Kronecker blocks, and degenerate mixes.
pub fn random_pencil(index: u64) -> Pencil<f64> {
    let mut rng = rng_for(index);
    let m = rng.random_range(1..=20);
    let n = rng.random_range(1..=20);
    match index % 5 {
        0 => Pencil::new(rmat(&mut rng, m, n), rmat(&mut rng, m, n)).unwrap(),
        1 => {
            let re = rng.random_range(0..=m.min(n));
            Pencil::new(low_rank(&mut rng, m, n, re), rmat(&mut rng, m, n)).unwrap()
        }
        2 => {
            let re = rng.random_range(0..=m.min(n));
            let ra = rng.random_range(1..=m.min(n).max(1));
            Pencil::new(low_rank(&mut rng, m, n, re), low_rank(&mut rng, m, n, ra)).unwrap()
        }
        3 => {
            let spec = random_blockspec(&mut rng, false);
            synthesize::<f64>(&spec, Some(index)).unwrap().pencil
        }
        _ => {
            // Shared kernel directions between E and A.
            let k = rng.random_range(0..=n.min(3));
            let base = rmat(&mut rng, n, n - k.min(n));
            let e = rmat(&mut rng, m, base.ncols()) * base.transpose();
            let a = rmat(&mut rng, m, base.ncols()) * base.transpose();
            Pencil::new(e, a).unwrap()
        }
    }
}

/// Random block spec; `force_square` keeps the total shape square by
/// pairing each `L` block with an `LT` block of complementary size.
pub fn random_blockspec(rng: &mut ChaCha8Rng, force_square: bool) -> BlockSpec {
    let mut blocks = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        match rng.random_range(0..4) {
            0 => blocks.push(Block::Jordan {
                size: rng.random_range(1..=3),
                eigenvalue: Complex64::new(rng.random_range(-3..4) as f64, 0.0),
            }),
            1 => blocks.push(Block::Nilpotent {
                size: rng.random_range(1..=3),
            }),
            2 => {
                let eps = rng.random_range(0..=2);
                blocks.push(Block::Singular { eps });
                if force_square {
                    blocks.push(Block::SingularT {
                        eta: rng.random_range(0..=2),
                    });
                }
            }
            _ => {
                let eta = rng.random_range(0..=2);
                blocks.push(Block::SingularT { eta });
                if force_square {
                    blocks.push(Block::Singular {
                        eps: rng.random_range(0..=2),
                    });
                }
            }
        }
    }
    if force_square {
        let spec = BlockSpec::new(blocks.clone());
        let (m, n) = spec.shape();
        if m < n {
            blocks.push(Block::SingularT { eta: n - m - 1 });
        } else if n < m {
            blocks.push(Block::Singular { eps: m - n - 1 });
        }
    }
    BlockSpec::new(blocks)
}

/// Square synthesized pencil with known ground truth, optionally scrambled.
pub fn random_square_synthesis(index: u64) -> (BlockSpec, Pencil<f64>) {
    let mut rng = rng_for(0xb10c_0000 + index);
    let spec = random_blockspec(&mut rng, true);
    let scramble = index.is_multiple_of(2);
    let synth = synthesize::<f64>(&spec, scramble.then_some(index)).unwrap();
    debug_assert_eq!(synth.pencil.shape().0, synth.pencil.shape().1);
    (spec, synth.pencil)
}

/// Saddle specs mixing full-rank, rank-deficient, and zero `B`, with and
/// without non-identity Gram matrices.
pub fn random_saddle(index: u64) -> SaddleSpec {
    let mut rng = rng_for(0x5add_0000 + index);
    let nx = rng.random_range(1..=6);
    let nm = rng.random_range(0..=nx);
    let a0 = rmat(&mut rng, nx, nx);
    let b = match index % 4 {
        0 => rmat(&mut rng, nm, nx),
        1 => DMatrix::zeros(nm, nx),
        2 => {
            let r = rng.random_range(0..=nm.min(nx));
            low_rank(&mut rng, nm, nx, r)
        }
        _ => rmat(&mut rng, nm, nx) * 3.0,
    };
    let spec = SaddleSpec::new(a0, b).unwrap();
    if index.is_multiple_of(3) {
        let gx = rmat(&mut rng, nx, nx);
        let rx = &gx * gx.transpose() + DMatrix::identity(nx, nx);
        let gm = rmat(&mut rng, nm, nm);
        let rm = &gm * gm.transpose() + DMatrix::identity(nm, nm);
        spec.with_gram(rx, rm).unwrap()
    } else {
        spec
    }
}
