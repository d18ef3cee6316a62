//! Kronecker canonical blocks and block-diagonal pencil synthesis.
//!
//! The four block kinds are ground truth for the test oracles: their
//! defect sequences are known in closed form, and defects of a
//! block-diagonal pencil are the component-wise sums.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pencil::{apply_equivalence, random_equivalence, EquivalencePair, Pencil};
use crate::scalar::{Entry, Field};

/// One Kronecker block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Block {
    /// `J(k, λ)`: `(E, A) = (I_k, J_k(λ))`, a finite eigenvalue.
    Jordan { size: usize, eigenvalue: Complex64 },
    /// `N(k)`: `(E, A) = (N_k, I_k)` with `N_k` the upper shift.
    Nilpotent { size: usize },
    /// `L(ε)`: the `ε x (ε+1)` singular block `E = [I 0]`, `A = [0 I]`.
    Singular { eps: usize },
    /// `LT(η)`: the `(η+1) x η` transposed singular block.
    SingularT { eta: usize },
}

impl Block {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Block::Jordan { size, .. } | Block::Nilpotent { size } => (size, size),
            Block::Singular { eps } => (eps, eps + 1),
            Block::SingularT { eta } => (eta + 1, eta),
        }
    }

    pub fn is_real(&self) -> bool {
        match *self {
            Block::Jordan { eigenvalue, .. } => eigenvalue.im == 0.0,
            _ => true,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Block::Jordan { size, .. } | Block::Nilpotent { size } if size == 0 => Err(
                Error::Parse("Jordan and nilpotent blocks need size >= 1".into()),
            ),
            _ => Ok(()),
        }
    }

    fn build<T: Entry>(&self) -> Result<(DMatrix<T>, DMatrix<T>)> {
        self.validate()?;
        Ok(match *self {
            Block::Jordan { size, eigenvalue } => {
                if T::FIELD == Field::Real && eigenvalue.im != 0.0 {
                    return Err(Error::Parse(format!(
                        "complex eigenvalue {eigenvalue} in a real synthesis"
                    )));
                }
                let e = DMatrix::identity(size, size);
                let a = DMatrix::from_fn(size, size, |i, j| {
                    if i == j {
                        T::from_re_im(eigenvalue.re, eigenvalue.im).unwrap()
                    } else if j == i + 1 {
                        T::one()
                    } else {
                        T::zero()
                    }
                });
                (e, a)
            }
            Block::Nilpotent { size } => {
                let e = DMatrix::from_fn(
                    size,
                    size,
                    |i, j| {
                        if j == i + 1 {
                            T::one()
                        } else {
                            T::zero()
                        }
                    },
                );
                (e, DMatrix::identity(size, size))
            }
            Block::Singular { eps } => {
                let e = DMatrix::from_fn(
                    eps,
                    eps + 1,
                    |i, j| {
                        if i == j {
                            T::one()
                        } else {
                            T::zero()
                        }
                    },
                );
                let a =
                    DMatrix::from_fn(
                        eps,
                        eps + 1,
                        |i, j| {
                            if j == i + 1 {
                                T::one()
                            } else {
                                T::zero()
                            }
                        },
                    );
                (e, a)
            }
            Block::SingularT { eta } => {
                let e = DMatrix::from_fn(
                    eta + 1,
                    eta,
                    |i, j| {
                        if i == j {
                            T::one()
                        } else {
                            T::zero()
                        }
                    },
                );
                let a =
                    DMatrix::from_fn(
                        eta + 1,
                        eta,
                        |i, j| {
                            if i == j + 1 {
                                T::one()
                            } else {
                                T::zero()
                            }
                        },
                    );
                (e, a)
            }
        })
    }
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Block::Jordan { size, eigenvalue } => {
                if eigenvalue.im == 0.0 {
                    write!(f, "J({size},{})", eigenvalue.re)
                } else {
                    write!(f, "J({size},{}{:+}i)", eigenvalue.re, eigenvalue.im)
                }
            }
            Block::Nilpotent { size } => write!(f, "N({size})"),
            Block::Singular { eps } => write!(f, "L({eps})"),
            Block::SingularT { eta } => write!(f, "LT({eta})"),
        }
    }
}

/// An ordered list of blocks; the synthesized pencil is their direct sum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockSpec {
    pub blocks: Vec<Block>,
}

impl BlockSpec {
    pub fn new(blocks: Vec<Block>) -> Self {
        BlockSpec { blocks }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.blocks.iter().fold((0, 0), |(m, n), b| {
            let (bm, bn) = b.shape();
            (m + bm, n + bn)
        })
    }

    pub fn is_real(&self) -> bool {
        self.blocks.iter().all(|b| b.is_real())
    }

    /// Parse the grammar `J(k,λ) | N(k) | L(e) | LT(e)`, comma separated.
    /// Eigenvalues accept `1.5`, `-2`, `1+2i`, `3i`.
    pub fn parse(input: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        let trimmed = input.trim();
        if trimmed.is_empty() {
            return Ok(BlockSpec::default());
        }
        for part in split_top_level(trimmed) {
            blocks.push(parse_block(part.trim())?);
        }
        Ok(BlockSpec { blocks })
    }
}

impl std::fmt::Display for BlockSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_block(s: &str) -> Result<Block> {
    let open = s
        .find('(')
        .ok_or_else(|| Error::Parse(format!("block `{s}` is missing `(`")))?;
    if !s.ends_with(')') {
        return Err(Error::Parse(format!("block `{s}` is missing `)`")));
    }
    let name = &s[..open];
    let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
    let usize_arg = |a: &str| -> Result<usize> {
        a.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad block size `{a}` in `{s}`")))
    };
    let block = match name {
        "J" => {
            if args.len() != 2 {
                return Err(Error::Parse(format!(
                    "J block needs (size, eigenvalue): `{s}`"
                )));
            }
            Block::Jordan {
                size: usize_arg(args[0])?,
                eigenvalue: parse_complex(args[1])?,
            }
        }
        "N" => {
            if args.len() != 1 {
                return Err(Error::Parse(format!("N block needs (size): `{s}`")));
            }
            Block::Nilpotent {
                size: usize_arg(args[0])?,
            }
        }
        "L" => {
            if args.len() != 1 {
                return Err(Error::Parse(format!("L block needs (eps): `{s}`")));
            }
            Block::Singular {
                eps: usize_arg(args[0])?,
            }
        }
        "LT" => {
            if args.len() != 1 {
                return Err(Error::Parse(format!("LT block needs (eta): `{s}`")));
            }
            Block::SingularT {
                eta: usize_arg(args[0])?,
            }
        }
        other => return Err(Error::Parse(format!("unknown block kind `{other}`"))),
    };
    block.validate()?;
    Ok(block)
}

/// Parse `a`, `a+bi`, `a-bi`, `bi`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad scalar `{s}`"));
    if let Some(imag) = s.strip_suffix('i') {
        // Split into real and imaginary parts on the last top-level sign.
        let bytes = imag.as_bytes();
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                let re: f64 = imag[..idx].parse().map_err(|_| bad())?;
                let im_str = &imag[idx..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().map_err(|_| bad())?
                };
                return Ok(Complex64::new(re, im));
            }
        }
        let im: f64 = if imag.is_empty() {
            1.0
        } else {
            imag.parse().map_err(|_| bad())?
        };
        return Ok(Complex64::new(0.0, im));
    }
    let re: f64 = s.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, 0.0))
}

/// A synthesized pencil together with its ground truth.
#[derive(Debug, Clone)]
pub struct Synthesized<T: Entry> {
    pub pencil: Pencil<T>,
    pub spec: BlockSpec,
    pub transform: Option<EquivalencePair<T>>,
    pub warnings: Vec<String>,
}

/// Assemble the block-diagonal pencil from `spec`, optionally scrambled by
/// a seeded random equivalence (condition numbers at most 100).
pub fn synthesize<T: Entry>(
    spec: &BlockSpec,
    scramble_seed: Option<u64>,
) -> Result<Synthesized<T>> {
    let (m, n) = spec.shape();
    let mut e = DMatrix::<T>::zeros(m, n);
    let mut a = DMatrix::<T>::zeros(m, n);
    let (mut row, mut col) = (0, 0);
    for block in &spec.blocks {
        let (be, ba) = block.build::<T>()?;
        let (bm, bn) = be.shape();
        e.view_mut((row, col), (bm, bn)).copy_from(&be);
        a.view_mut((row, col), (bm, bn)).copy_from(&ba);
        row += bm;
        col += bn;
    }
    let mut warnings = Vec::new();
    if m == 0 && n == 0 {
        warnings.push("empty block spec: zero-shaped pencil".to_string());
    }
    let plain = Pencil::new(e, a)?;
    let (pencil, transform) = match scramble_seed {
        Some(seed) => {
            let t = random_equivalence::<T>(m, n, seed);
            (apply_equivalence(&plain, &t)?, Some(t))
        }
        None => (plain, None),
    };
    Ok(Synthesized {
        pencil,
        spec: spec.clone(),
        transform,
        warnings,
    })
}
