//! Per-sample building blocks: im2col convolution support, 2x2 max
//! pooling and softmax.

use crate::scalar::Scalar;

/// Unrolls a `channels x height x width` image into a
/// `(channels * k * k) x (height * width)` matrix for a stride-1 "same"
/// convolution with zero padding `k / 2`.
pub(crate) fn im2col<T: Scalar>(
    input: &[T],
    channels: usize,
    height: usize,
    width: usize,
    k: usize,
    cols: &mut [T],
) {
    let pad = (k / 2) as isize;
    let plane = height * width;
    debug_assert_eq!(input.len(), channels * plane);
    debug_assert_eq!(cols.len(), channels * k * k * plane);
    let mut row = 0;
    for c in 0..channels {
        let src = &input[c * plane..(c + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let dst = &mut cols[row * plane..(row + 1) * plane];
                let dx = kx as isize - pad;
                // Valid output columns: 0 <= x + dx < width.
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (width as isize - dx).min(width as isize).max(0) as usize;
                for y in 0..height {
                    let out = &mut dst[y * width..(y + 1) * width];
                    let sy = y as isize + ky as isize - pad;
                    if sy < 0 || sy >= height as isize || x_lo >= x_hi {
                        out.fill(T::zero());
                        continue;
                    }
                    let src_row = &src[sy as usize * width..(sy as usize + 1) * width];
                    out[..x_lo].fill(T::zero());
                    out[x_hi..].fill(T::zero());
                    let s_lo = (x_lo as isize + dx) as usize;
                    out[x_lo..x_hi].copy_from_slice(&src_row[s_lo..s_lo + (x_hi - x_lo)]);
                }
                row += 1;
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates column gradients back into an image
/// gradient (which is overwritten).
pub(crate) fn col2im<T: Scalar>(
    cols: &[T],
    channels: usize,
    height: usize,
    width: usize,
    k: usize,
    output: &mut [T],
) {
    let pad = (k / 2) as isize;
    let plane = height * width;
    output.fill(T::zero());
    let mut row = 0;
    for c in 0..channels {
        let dst = &mut output[c * plane..(c + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let src = &cols[row * plane..(row + 1) * plane];
                let dx = kx as isize - pad;
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (width as isize - dx).min(width as isize).max(0) as usize;
                for y in 0..height {
                    let sy = y as isize + ky as isize - pad;
                    if sy < 0 || sy >= height as isize || x_lo >= x_hi {
                        continue;
                    }
                    let s_lo = (x_lo as isize + dx) as usize;
                    let d_row = &mut dst[sy as usize * width..(sy as usize + 1) * width];
                    let g_row = &src[y * width + x_lo..y * width + x_hi];
                    for (d, &g) in d_row[s_lo..s_lo + g_row.len()].iter_mut().zip(g_row) {
                        *d = *d + g;
                    }
                }
                row += 1;
            }
        }
    }
}

/// 2x2 stride-2 max pooling over `channels` planes. Records, per output,
/// the in-plane index of the winning input (first maximum on ties).
pub(crate) fn max_pool2<T: Scalar>(
    input: &[T],
    channels: usize,
    height: usize,
    width: usize,
    output: &mut [T],
    argmax: &mut [u32],
) {
    let (oh, ow) = (height / 2, width / 2);
    for c in 0..channels {
        let src = &input[c * height * width..(c + 1) * height * width];
        let base = c * oh * ow;
        for oy in 0..oh {
            for ox in 0..ow {
                let top = 2 * oy * width + 2 * ox;
                let mut best = top;
                for cand in [top + 1, top + width, top + width + 1] {
                    if src[cand] > src[best] {
                        best = cand;
                    }
                }
                output[base + oy * ow + ox] = src[best];
                argmax[base + oy * ow + ox] = best as u32;
            }
        }
    }
}

/// Routes pooled gradients back to the winning inputs. `grad_in` is
/// overwritten.
pub(crate) fn max_pool2_backward<T: Scalar>(
    grad_out: &[T],
    argmax: &[u32],
    channels: usize,
    height: usize,
    width: usize,
    grad_in: &mut [T],
) {
    let plane_out = (height / 2) * (width / 2);
    grad_in.fill(T::zero());
    for c in 0..channels {
        let dst = &mut grad_in[c * height * width..(c + 1) * height * width];
        let range = c * plane_out..(c + 1) * plane_out;
        for (&g, &at) in grad_out[range.clone()].iter().zip(&argmax[range]) {
            dst[at as usize] = dst[at as usize] + g;
        }
    }
}

pub(crate) fn relu_in_place<T: Scalar>(values: &mut [T]) {
    for v in values {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes gradients where the activation was clipped.
pub(crate) fn relu_backward_in_place<T: Scalar>(grad: &mut [T], activation: &[T]) {
    for (g, &a) in grad.iter_mut().zip(activation) {
        if a <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Row-wise softmax of `rows x cols` logits, in place.
pub(crate) fn softmax_rows<T: Scalar>(values: &mut [T], cols: usize) {
    for row in values.chunks_mut(cols) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct 5x5 "same" convolution of one channel with one kernel.
    fn direct_conv(img: &[f64], h: usize, w: usize, kernel: &[f64], k: usize) -> Vec<f64> {
        let pad = (k / 2) as isize;
        let mut out = vec![0.0; h * w];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = 0.0;
                for ky in 0..k as isize {
                    for kx in 0..k as isize {
                        let (sy, sx) = (y + ky - pad, x + kx - pad);
                        if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                            acc += img[(sy as usize) * w + sx as usize]
                                * kernel[(ky as usize) * k + kx as usize];
                        }
                    }
                }
                out[y as usize * w + x as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn im2col_product_matches_direct_convolution() {
        let (h, w, k) = (6, 7, 5);
        let img: Vec<f64> = (0..h * w).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let kernel: Vec<f64> = (0..k * k).map(|i| ((i * 13) % 7) as f64 * 0.25).collect();
        let mut cols = vec![0.0; k * k * h * w];
        im2col(&img, 1, h, w, k, &mut cols);
        let mut out = vec![0.0; h * w];
        f64::gemm(
            1,
            k * k,
            h * w,
            1.0,
            &kernel,
            (k * k, 1),
            &cols,
            (h * w, 1),
            0.0,
            &mut out,
            (h * w, 1),
        );
        assert_eq!(out, direct_conv(&img, h, w, &kernel, k));
    }

    #[test]
    fn col2im_is_the_adjoint_of_im2col() {
        // <im2col(x), c> == <x, col2im(c)> for arbitrary x, c.
        let (ch, h, w, k) = (2, 5, 4, 5);
        let x: Vec<f64> = (0..ch * h * w).map(|i| (i as f64 * 0.7).sin()).collect();
        let c: Vec<f64> = (0..ch * k * k * h * w)
            .map(|i| (i as f64 * 0.3).cos())
            .collect();
        let mut cols = vec![0.0; c.len()];
        im2col(&x, ch, h, w, k, &mut cols);
        let mut back = vec![0.0; x.len()];
        col2im(&c, ch, h, w, k, &mut back);
        let lhs: f64 = cols.iter().zip(&c).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn pooling_halves_and_routes_gradients() {
        let input = [1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 7.0, 1.0f64];
        // 1 channel, 2 x 4.
        let mut out = [0.0; 2];
        let mut idx = [0u32; 2];
        max_pool2(&input, 1, 2, 4, &mut out, &mut idx);
        assert_eq!(out, [5.0, 7.0]);
        assert_eq!(idx, [1, 6]);
        let mut grad = [9.0; 8];
        max_pool2_backward(&[1.0, 2.0], &idx, 1, 2, 4, &mut grad);
        assert_eq!(grad, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn softmax_rows_normalize() {
        let mut v = [0.0, 0.0, 1000.0, -1000.0, 1.0, 2.0f32];
        softmax_rows(&mut v, 2);
        assert_eq!(&v[..2], &[0.5, 0.5]);
        assert_eq!(&v[2..4], &[1.0, 0.0]);
        assert!((v[4] + v[5] - 1.0).abs() < 1e-6);
    }
}
