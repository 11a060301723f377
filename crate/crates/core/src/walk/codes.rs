//! Packed step and matrix codes.
//!
//! A step `±e_j` is the byte `2j + (negative as u8)`. The random matrix
//! `A = sign · J^s`, with `J e_j = e_{j-1 mod d}`, is the index `negate·d + s`; index 0 is `I`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction(pub u8);

impl Direction {
    #[inline]
    pub fn new(axis: usize, negative: bool) -> Self {
        Direction((2 * axis + negative as usize) as u8)
    }

    #[inline]
    pub fn axis(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn sign(self) -> i64 {
        1 - 2 * (self.0 & 1) as i64
    }

    pub fn to_vector(self, d: usize) -> Vec<i64> {
        let mut v = vec![0; d];
        v[self.axis()] = self.sign();
        v
    }

    /// All `2d` directions in code order.
    pub fn all(d: usize) -> impl Iterator<Item = Direction> {
        (0..2 * d).map(|c| Direction(c as u8))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatrixCode {
    pub negate: bool,
    pub shift: usize,
}

impl MatrixCode {
    pub const IDENTITY: MatrixCode = MatrixCode { negate: false, shift: 0 };

    pub fn from_index(index: usize, d: usize) -> Self {
        MatrixCode { negate: index >= d, shift: index % d }
    }

    pub fn index(self, d: usize) -> usize {
        self.negate as usize * d + self.shift
    }

    /// All `2d` codes, identity first.
    pub fn all(d: usize) -> impl Iterator<Item = MatrixCode> {
        (0..2 * d).map(move |i| MatrixCode::from_index(i, d))
    }

    #[inline]
    pub fn apply(self, dir: Direction, d: usize) -> Direction {
        let axis = (dir.axis() + d - self.shift) % d;
        Direction::new(axis, dir.is_negative() ^ self.negate)
    }

    /// Probability of this code: `p` for the identity, `(1-p)/(2d-1)` otherwise.
    pub fn probability(self, p: f64, d: usize) -> f64 {
        if self == MatrixCode::IDENTITY {
            p
        } else {
            (1.0 - p) / (2 * d - 1) as f64
        }
    }
}

/// `table[code_index · 2d + dir] = code · dir`.
pub fn transform_table(d: usize) -> Vec<u8> {
    let mut table = Vec::with_capacity(4 * d * d);
    for code in MatrixCode::all(d) {
        for dir in Direction::all(d) {
            table.push(code.apply(dir, d).0);
        }
    }
    table
}
