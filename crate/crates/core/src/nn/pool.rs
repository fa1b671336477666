use ndarray::{Array4, ArrayView4};

/// Non-overlapping 2x2 average pooling on a `(C, B, H, W)` tensor.
pub fn avg_pool_2x2(input: ArrayView4<f64>) -> Array4<f64> {
    let (c, b, h, w) = input.dim();
    let (oh, ow) = (h / 2, w / 2);
    Array4::from_shape_fn((c, b, oh, ow), |(ch, bi, y, x)| {
        let (y0, x0) = (2 * y, 2 * x);
        0.25 * (input[[ch, bi, y0, x0]]
            + input[[ch, bi, y0, x0 + 1]]
            + input[[ch, bi, y0 + 1, x0]]
            + input[[ch, bi, y0 + 1, x0 + 1]])
    })
}

pub fn avg_pool_2x2_backward(grad_out: ArrayView4<f64>, input_hw: (usize, usize)) -> Array4<f64> {
    let (c, b, _, _) = grad_out.dim();
    let (h, w) = input_hw;
    Array4::from_shape_fn((c, b, h, w), |(ch, bi, y, x)| {
        0.25 * grad_out[[ch, bi, y / 2, x / 2]]
    })
}
