use ndarray::{Array2, Array4, ArrayView4};

pub const KERNEL_AREA: usize = 9;

/// Unfold a `(C, B, H, W)` tensor into `(C * 9, B * H * W)` columns for a
/// 3x3 kernel with stride 1 and zero padding 1.
pub fn im2col_3x3(input: ArrayView4<f64>) -> Array2<f64> {
    let (c, b, h, w) = input.dim();
    let plane = h * w;
    let ncols = b * plane;
    let input = input.as_standard_layout();
    let src = input.as_slice().expect("standard layout");
    let mut cols = vec![0.0; c * KERNEL_AREA * ncols];
    for ch in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = ch * KERNEL_AREA + ky * 3 + kx;
                let dst = &mut cols[row * ncols..(row + 1) * ncols];
                for bi in 0..b {
                    let base = (ch * b + bi) * plane;
                    for y in 0..h {
                        let sy = y as isize + ky as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let src_row = &src[base + sy as usize * w..base + (sy as usize + 1) * w];
                        let out = &mut dst[bi * plane + y * w..bi * plane + (y + 1) * w];
                        match kx {
                            0 => out[1..].copy_from_slice(&src_row[..w - 1]),
                            1 => out.copy_from_slice(src_row),
                            _ => out[..w - 1].copy_from_slice(&src_row[1..]),
                        }
                    }
                }
            }
        }
    }
    Array2::from_shape_vec((c * KERNEL_AREA, ncols), cols).expect("im2col shape")
}

/// Adjoint of [`im2col_3x3`]: scatter-add column gradients back to a
/// `(C, B, H, W)` tensor.
pub fn col2im_3x3(cols: &Array2<f64>, shape: (usize, usize, usize, usize)) -> Array4<f64> {
    let (c, b, h, w) = shape;
    let plane = h * w;
    let ncols = b * plane;
    assert_eq!(cols.dim(), (c * KERNEL_AREA, ncols));
    let cols = cols.as_standard_layout();
    let src = cols.as_slice().expect("standard layout");
    let mut out = vec![0.0; c * b * plane];
    for ch in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = ch * KERNEL_AREA + ky * 3 + kx;
                let col_row = &src[row * ncols..(row + 1) * ncols];
                for bi in 0..b {
                    let base = (ch * b + bi) * plane;
                    for y in 0..h {
                        let sy = y as isize + ky as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let dst = &mut out[base + sy as usize * w..base + (sy as usize + 1) * w];
                        let g = &col_row[bi * plane + y * w..bi * plane + (y + 1) * w];
                        match kx {
                            0 => dst[..w - 1].iter_mut().zip(&g[1..]).for_each(|(d, v)| *d += v),
                            1 => dst.iter_mut().zip(g).for_each(|(d, v)| *d += v),
                            _ => dst[1..].iter_mut().zip(&g[..w - 1]).for_each(|(d, v)| *d += v),
                        }
                    }
                }
            }
        }
    }
    Array4::from_shape_vec(shape, out).expect("col2im shape")
}
