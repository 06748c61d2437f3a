//! 2-bit ("crumb") packed-SIMD operations of the baseline core, used by the
//! 2-bit comparison kernels. Sixteen signed two's-complement lanes per word,
//! lane `i` at bits `2i+1:2i`, values in `[-2, 1]`.

pub const LANES_PER_WORD: usize = 16;
pub const LANES_PER_BYTE: usize = 4;

#[inline]
pub fn lane(word: u32, i: usize) -> i8 {
    // sign-extend the 2-bit field
    (((word >> (2 * i)) as u8) << 6) as i8 >> 6
}

#[inline]
pub fn byte_lanes(b: u8) -> [i8; 4] {
    std::array::from_fn(|i| lane(b as u32, i))
}

/// Pack four lane values (each in `[-2, 1]`) into a byte.
#[inline]
pub fn pack_byte(v: &[i8]) -> u8 {
    v.iter()
        .enumerate()
        .fold(0u8, |acc, (i, &x)| acc | ((x as u8) & 0b11) << (2 * i))
}

/// `pv.dotsp.c`: 16-lane signed dot product.
#[inline]
pub fn dotsp_c(a: u32, b: u32) -> i32 {
    (0..LANES_PER_WORD)
        .map(|i| lane(a, i) as i32 * lane(b, i) as i32)
        .sum()
}

/// `pv.max.c`: lane-wise signed maximum.
pub fn max_c(a: u32, b: u32) -> u32 {
    (0..LANES_PER_WORD).fold(0u32, |acc, i| {
        let m = lane(a, i).max(lane(b, i));
        acc | ((m as u8 as u32) & 0b11) << (2 * i)
    })
}
