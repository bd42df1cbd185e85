//! GF(2^8) under the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D),
//! generator 0x02. Tables are built at compile time.

use crate::error::{Error, Result};

const POLY: u16 = 0x11D;

/// Log/antilog tables. `exp` is doubled so `exp[log a + log b]` needs no
/// reduction modulo 255.
pub struct ByteFieldTables {
    pub exp: [u8; 512],
    pub log: [u8; 256],
}

pub static TABLES: ByteFieldTables = build_tables();

const fn build_tables() -> ByteFieldTables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        i += 1;
    }
    exp[510] = exp[0];
    exp[511] = exp[1];
    ByteFieldTables { exp, log }
}

#[inline]
pub fn gf256_mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
}

pub fn gf256_inv(a: u8) -> Result<u8> {
    if a == 0 {
        return Err(Error::ZeroInverse);
    }
    Ok(TABLES.exp[255 - TABLES.log[a as usize] as usize])
}

/// `dst[i] *= c`
pub fn gf256_scale(dst: &mut [u8], c: u8) {
    match c {
        0 => dst.fill(0),
        1 => {}
        _ => {
            let lc = TABLES.log[c as usize] as usize;
            for d in dst.iter_mut() {
                if *d != 0 {
                    *d = TABLES.exp[TABLES.log[*d as usize] as usize + lc];
                }
            }
        }
    }
}

/// `dst[i] += c * src[i]`
pub fn gf256_add_scaled(dst: &mut [u8], src: &[u8], c: u8) {
    debug_assert_eq!(dst.len(), src.len());
    match c {
        0 => {}
        1 => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
        }
        _ => {
            let lc = TABLES.log[c as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= TABLES.exp[TABLES.log[s as usize] as usize + lc];
                }
            }
        }
    }
}
