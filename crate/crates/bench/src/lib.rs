//! Fixture builders shared by the benchmarks.

/// Single-file little-endian float32 NIfTI-1 bytes with an identity sform.
pub fn nifti_f32(shape: [usize; 3], f: impl Fn(usize, usize, usize) -> f32) -> Vec<u8> {
    let mut h = vec![0u8; 352];
    let mut put = |at: usize, b: &[u8]| h[at..at + b.len()].copy_from_slice(b);
    put(0, &348i32.to_le_bytes());
    let dims = [3i16, shape[0] as i16, shape[1] as i16, shape[2] as i16, 1, 1, 1, 1];
    for (i, d) in dims.iter().enumerate() {
        put(40 + 2 * i, &d.to_le_bytes());
    }
    put(70, &16i16.to_le_bytes());
    put(72, &32i16.to_le_bytes());
    for i in 0..4 {
        put(76 + 4 * i, &1f32.to_le_bytes());
    }
    put(108, &352f32.to_le_bytes());
    put(254, &1i16.to_le_bytes());
    for r in 0..3 {
        put(280 + 20 * r, &1f32.to_le_bytes());
    }
    put(344, b"n+1\0");
    for k in 0..shape[2] {
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                h.extend_from_slice(&f(i, j, k).to_le_bytes());
            }
        }
    }
    h
}

/// Smooth blob with texture, roughly head-shaped.
pub fn head(shape: [usize; 3]) -> impl Fn(usize, usize, usize) -> f32 {
    move |i, j, k| {
        let c = |x: usize, n: usize| (x as f32 - n as f32 / 2.0) / (n as f32 / 2.0);
        let r = c(i, shape[0]).powi(2) + c(j, shape[1]).powi(2) + c(k, shape[2]).powi(2);
        if r < 0.9 {
            200.0 + 600.0 * (1.0 - r) + ((i * 3 + j * 5 + k * 7) % 11) as f32 * 4.0
        } else {
            0.0
        }
    }
}
