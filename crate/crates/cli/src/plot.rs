use std::path::Path;

use plotters::prelude::*;

use crate::error::{CliError, CliResult, EXIT_EVALUATION};

/// One labelled `(step, accuracy)` curve.
pub struct Series {
    pub label: String,
    pub points: Vec<(usize, f64)>,
}

fn plot_error(e: impl std::fmt::Display) -> CliError {
    CliError::new(EXIT_EVALUATION, format!("plotting failed: {e}"))
}

/// Verification accuracy against step, one line per series, as SVG.
pub fn accuracy_chart(path: &Path, title: &str, series: &[Series]) -> CliResult<()> {
    let max_step = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).max().unwrap_or(0).max(1);
    let values: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if values.is_empty() {
        (0.0, 1.0)
    } else {
        let pad = ((hi - lo) * 0.1).max(0.01);
        ((lo - pad).max(0.0), (hi + pad).min(1.0))
    };

    let root = SVGBackend::new(path, (720, 440)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_error)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(-0.2f64..max_step as f64 + 0.2, lo..hi)
        .map_err(plot_error)?;
    chart
        .configure_mesh()
        .x_desc("step")
        .y_desc("verification accuracy")
        .x_labels(max_step + 1)
        .x_label_formatter(&|x| format!("{}", x.round() as i64))
        .draw()
        .map_err(plot_error)?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let pts: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (x as f64, y)).collect();
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
            .map_err(plot_error)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
            .map_err(plot_error)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_error)?;
    root.present().map_err(plot_error)?;
    Ok(())
}
