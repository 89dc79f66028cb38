//! Arithmetic in GF(2^m) for 1 ≤ m ≤ 16 using log/antilog tables.
//!
//! Each degree uses a fixed primitive polynomial (the conventional table
//! found in most coding-theory texts), so results are bit-exact across
//! implementations:
//!
//! | m | polynomial                     | hex     |
//! |---|--------------------------------|---------|
//! | 1 | x + 1                          | 0x3     |
//! | 2 | x^2 + x + 1                    | 0x7     |
//! | 3 | x^3 + x + 1                    | 0xB     |
//! | 4 | x^4 + x + 1                    | 0x13    |
//! | 5 | x^5 + x^2 + 1                  | 0x25    |
//! | 6 | x^6 + x + 1                    | 0x43    |
//! | 7 | x^7 + x^3 + 1                  | 0x89    |
//! | 8 | x^8 + x^4 + x^3 + x^2 + 1      | 0x11D   |
//! | 9 | x^9 + x^4 + 1                  | 0x211   |
//! |10 | x^10 + x^3 + 1                 | 0x409   |
//! |11 | x^11 + x^2 + 1                 | 0x805   |
//! |12 | x^12 + x^6 + x^4 + x + 1       | 0x1053  |
//! |13 | x^13 + x^4 + x^3 + x + 1       | 0x201B  |
//! |14 | x^14 + x^10 + x^6 + x + 1      | 0x4443  |
//! |15 | x^15 + x + 1                   | 0x8003  |
//! |16 | x^16 + x^12 + x^3 + x + 1      | 0x1100B |

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_DEGREE: u32 = 16;

pub const PRIMITIVE_POLYNOMIALS: [u32; 16] = [
    0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

/// An element of GF(2^m), tagged with its degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u16,
    degree: u32,
}

impl FieldElement {
    pub fn new(value: u32, degree: u32) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        if value >= 1 << degree {
            return Err(Error::IndexOutOfRange {
                what: "field element",
                index: value as u64,
                limit: 1 << degree,
            });
        }
        Ok(Self {
            value: value as u16,
            degree,
        })
    }

    pub fn value(self) -> u16 {
        self.value
    }

    pub fn degree(self) -> u32 {
        self.degree
    }
}

#[derive(Debug)]
pub struct GaloisField {
    degree: u32,
    polynomial: u32,
    exp: Vec<u16>,
    log: Vec<u16>,
}

static FIELDS: [OnceLock<GaloisField>; 16] = [const { OnceLock::new() }; 16];

impl GaloisField {
    /// The shared field instance for degree `m`.
    pub fn get(m: u32) -> Result<&'static GaloisField> {
        if !(1..=MAX_DEGREE).contains(&m) {
            return Err(Error::UnsupportedDegree(m));
        }
        Ok(FIELDS[(m - 1) as usize].get_or_init(|| GaloisField::build(m)))
    }

    fn build(m: u32) -> Self {
        let polynomial = PRIMITIVE_POLYNOMIALS[(m - 1) as usize];
        let order = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x: u32 = 1;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= polynomial;
            }
        }
        assert_eq!(x, 1, "polynomial {polynomial:#x} is not primitive");
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Self {
            degree: m,
            polynomial,
            exp,
            log,
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn polynomial(&self) -> u32 {
        self.polynomial
    }

    pub fn size(&self) -> u32 {
        1 << self.degree
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u16) -> Option<u16> {
        if a == 0 {
            return None;
        }
        let order = self.size() as usize - 1;
        Some(self.exp[(order - self.log[a as usize] as usize) % order])
    }

    pub fn pow(&self, a: u16, e: u32) -> u16 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = self.size() as u64 - 1;
        let l = (self.log[a as usize] as u64 * e as u64) % order;
        self.exp[l as usize]
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        FieldElement::new(value, self.degree)
    }

    pub fn mul_elements(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        self.check(b)?;
        self.element(self.mul(a.value, b.value) as u32)
    }

    fn check(&self, a: FieldElement) -> Result<()> {
        if a.degree != self.degree {
            return Err(Error::ParameterMismatch(format!(
                "element of GF(2^{}) used in GF(2^{})",
                a.degree, self.degree
            )));
        }
        Ok(())
    }

    /// Rank of a `rows × cols` matrix (row-major) by Gaussian elimination.
    pub fn rank(&self, matrix: &[u16], rows: usize, cols: usize) -> usize {
        let mut a = matrix.to_vec();
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
                continue;
            };
            if pivot != rank {
                for c in 0..cols {
                    a.swap(pivot * cols + c, rank * cols + c);
                }
            }
            let inv = self.inv(a[rank * cols + col]).expect("nonzero pivot");
            for c in 0..cols {
                a[rank * cols + c] = self.mul(a[rank * cols + c], inv);
            }
            for r in 0..rows {
                let factor = a[r * cols + col];
                if r != rank && factor != 0 {
                    for c in 0..cols {
                        let v = self.mul(factor, a[rank * cols + c]);
                        a[r * cols + c] ^= v;
                    }
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        rank
    }
}

/// Smallest m ≥ 1 with 2^m ≥ max(n, 2).
pub fn degree_for(n: usize) -> u32 {
    let n = n.max(2);
    let mut m = 1;
    while (1usize << m) < n {
        m += 1;
    }
    m
}
