//! Attention weights aligned to raw samples, with CSV and SVG export.

mod report;
mod svg;

pub use report::{export_report, extract_attention, report_file_stem, ExplainReport};
pub use svg::render_svg;
