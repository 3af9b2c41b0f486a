//! Text renderings of nets and analysis results. Every function here is pure
//! and produces byte-identical output for identical input.

mod dot;
mod report;
mod tapaal;

pub use dot::to_dot;
pub use report::{report_document, to_report_json, ReportDocument, ReportInput, ReportStats, ReportVerdict, SCHEMA_VERSION};
pub use tapaal::{sanitize_names, to_tapaal_xml, FORMAT_COMMENT};
