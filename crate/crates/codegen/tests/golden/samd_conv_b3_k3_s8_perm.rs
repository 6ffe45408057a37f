/// 3-bit signed lanes at stride 8, 3 taps, perm spacers.
#[inline]
pub fn samd_conv_b3_k3_s8_perm(mut acc: u128, input: u64, kernel: &[u64]) -> u128 {
    const IN_MSB: u64 = 0x0404040404040404;
    const OUT_MSB: u128 = 0x80808080808080808080808080808080;
    const OUT_LOW: u128 = 0x7F7F7F7F7F7F7F7F7F7F7F7F7F7F7F7F;
    let x = input.wrapping_sub((input & IN_MSB) << 1);
    // taps 0..3
    let k_0 = kernel[0].wrapping_sub((kernel[0] & IN_MSB) << 1);
    let mut p_0 = (x as i64 as i128).wrapping_mul(k_0 as i64 as i128) as u128;
    let sign_0 = p_0 & OUT_MSB;
    p_0 = p_0.wrapping_add(sign_0);
    acc = (acc & OUT_LOW).wrapping_add(p_0);
    acc
}
