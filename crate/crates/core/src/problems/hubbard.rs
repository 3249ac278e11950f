//! Eight-site Hubbard chain at half filling in the occupation-number basis.

use crate::error::Result;
use crate::linalg::{SparseOperator, Symmetry, C64};

pub const SITES: usize = 8;
pub const PER_SPIN: u32 = 4;
pub const DIM: usize = 4900;

/// Occupation states as 16-bit integers, bit `s·8 + j` for spin `s` at site
/// `j`, four electrons per spin, sorted by value.
pub fn basis() -> Vec<u16> {
    (0u32..1 << 16)
        .filter(|&x| (x & 0xff).count_ones() == PER_SPIN && (x >> 8).count_ones() == PER_SPIN)
        .map(|x| x as u16)
        .collect()
}

/// Single-particle hopping matrix `v` (row-major, 8×8).
pub fn hopping(omega: f64) -> [[C64; SITES]; SITES] {
    let mut v = [[C64::new(0.0, 0.0); SITES]; SITES];
    for (j, row) in v.iter_mut().enumerate() {
        row[j] = C64::new(
            if j == 0 || j == SITES - 1 {
                -1.75
            } else {
                -2.0
            },
            0.0,
        );
    }
    let off = C64::new(-omega.cos(), omega.sin());
    for j in 0..SITES - 1 {
        v[j][j + 1] = off;
        v[j + 1][j] = off.conj();
    }
    v
}

/// `H = Σ_{i,j,s} v_ij c†_{j,s} c_{i,s} + U Σ_j n_{j↑} n_{j↓}`.
///
/// Only nearest-neighbour hops occur, between adjacent bits of one spin
/// block, so no Jordan–Wigner sign arises.
pub fn build(omega: f64, u: f64) -> Result<SparseOperator> {
    let states = basis();
    let mut index = vec![u32::MAX; 1 << 16];
    for (k, &s) in states.iter().enumerate() {
        index[s as usize] = k as u32;
    }
    let v = hopping(omega);
    let mut trip = Vec::with_capacity(states.len() * 10);
    for (col, &s) in states.iter().enumerate() {
        let s = u32::from(s);
        let mut diag = 0.0;
        for j in 0..SITES {
            let up = (s >> j) & 1;
            let dn = (s >> (8 + j)) & 1;
            diag += v[j][j].re * f64::from(up + dn) + u * f64::from(up & dn);
        }
        trip.push((col, col, C64::new(diag, 0.0)));
        for spin in 0..2 {
            let shift = 8 * spin;
            for i in 0..SITES {
                if (s >> (shift + i)) & 1 == 0 {
                    continue;
                }
                for j in [i.wrapping_sub(1), i + 1] {
                    if j >= SITES || (s >> (shift + j)) & 1 == 1 {
                        continue;
                    }
                    let new = s & !(1 << (shift + i)) | (1 << (shift + j));
                    let row = index[new as usize];
                    debug_assert_ne!(row, u32::MAX, "hop left the half-filled sector");
                    trip.push((row as usize, col, v[i][j]));
                }
            }
        }
    }
    SparseOperator::from_triplets(states.len(), &trip, Symmetry::Hermitian)
}
