/// Write the base-p digits of `idx` into `out`, least significant first.
#[inline]
pub fn decode_base(mut idx: u64, p: u32, out: &mut [u32]) {
    let p = p as u64;
    for d in out.iter_mut() {
        *d = (idx % p) as u32;
        idx /= p;
    }
}

/// Inverse of [`decode_base`].
#[inline]
pub fn encode_base(digits: &[u32], p: u32) -> u64 {
    digits
        .iter()
        .rev()
        .fold(0u64, |acc, &d| acc * p as u64 + d as u64)
}

/// p^e as u64, `None` on overflow.
pub fn checked_pow(p: u32, e: usize) -> Option<u64> {
    (p as u64).checked_pow(u32::try_from(e).ok()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut d = [0u32; 6];
        for idx in [0u64, 1, 4, 5, 3124, 15624] {
            decode_base(idx, 5, &mut d);
            assert_eq!(encode_base(&d, 5), idx);
        }
        decode_base(7, 5, &mut d[..2]);
        assert_eq!(&d[..2], &[2, 1]);
    }
}
