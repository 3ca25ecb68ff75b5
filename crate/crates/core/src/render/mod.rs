//! SVG plots and text tables.

mod svg;
mod table;

pub use svg::{
    default_x_label, plot_transform, render_svg, LogTransform, PlotOptions, AUTO_RANGE_PAD,
    MARGIN_BOTTOM, MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP,
};
pub use table::{render_table, TableFormat};
