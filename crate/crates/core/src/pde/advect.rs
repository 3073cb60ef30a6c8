//! Rigid x-shifts of single rows.
//!
//! A row moving with constant speed is translated by `s` cells. The integer
//! part is an index offset; the fractional part is interpolated with the
//! 4-point Lagrange cubic and clipped to the two bracketing samples, which
//! keeps the stage monotone in the sense of never creating new extrema.
//! Values entering from outside the window are zero.

/// Translates `src` by `shift` cells (positive moves mass to larger x)
/// into `dst`.
pub fn shift_row(src: &[f64], dst: &mut [f64], shift: f64) {
    let n = src.len();
    debug_assert_eq!(n, dst.len());
    if shift == 0.0 {
        dst.copy_from_slice(src);
        return;
    }
    let whole = shift.floor();
    if whole.abs() > (n + 2) as f64 {
        dst.fill(0.0);
        return;
    }
    let k = whole as i64;
    let sigma = shift - whole;
    // new[i] = old(i − k − σ) = old(i0 + θ) with i0 = i − k − 1, θ = 1 − σ.
    let th = 1.0 - sigma;
    let w = [
        -th * (th - 1.0) * (th - 2.0) / 6.0,
        (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0,
        -(th + 1.0) * th * (th - 2.0) / 2.0,
        (th + 1.0) * th * (th - 1.0) / 6.0,
    ];
    let get = |j: i64| -> f64 {
        if j >= 0 && (j as usize) < n {
            src[j as usize]
        } else {
            0.0
        }
    };
    for (i, out) in dst.iter_mut().enumerate() {
        let i0 = i as i64 - k - 1;
        let a = get(i0 - 1);
        let b = get(i0);
        let c = get(i0 + 1);
        let d = get(i0 + 2);
        let v = w[0] * a + w[1] * b + w[2] * c + w[3] * d;
        let (lo, hi) = if b < c { (b, c) } else { (c, b) };
        *out = v.clamp(lo, hi);
    }
}
