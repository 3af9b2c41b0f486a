use serde::Serialize;

use crate::integrate::{AnalysisReport, BlockingTransition, Overall, PairNames, Status, WitnessStep};
use crate::tapn::SearchStats;

/// Bumped on any incompatible change of the JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportInput {
    pub file: String,
    /// Lowercase hex SHA-256 of the file contents.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportStats {
    pub delay_bound: Option<u64>,
    pub timed: SearchStats,
    pub untimed: Option<SearchStats>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportVerdict {
    pub index: usize,
    pub status: Status,
    pub pairs: Vec<PairNames>,
    pub witness: Vec<WitnessStep>,
    pub blocking: Vec<BlockingTransition>,
    pub stats: ReportStats,
}

/// Serialized form of an analysis. Field order is fixed by declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub inputs: Vec<ReportInput>,
    pub overall: Overall,
    pub require_all: bool,
    pub truncated: bool,
    pub verdicts: Vec<ReportVerdict>,
}

pub fn report_document(report: &AnalysisReport, inputs: &[ReportInput]) -> ReportDocument {
    ReportDocument {
        schema_version: SCHEMA_VERSION,
        inputs: inputs.to_vec(),
        overall: report.overall,
        require_all: report.require_all,
        truncated: report.truncated,
        verdicts: report
            .verdicts
            .iter()
            .map(|v| {
                let mut blocking = v.blocking.clone();
                blocking.sort();
                ReportVerdict {
                    index: v.index,
                    status: v.status,
                    pairs: v.pairs.clone(),
                    witness: v.witness.clone(),
                    blocking,
                    stats: ReportStats {
                        delay_bound: v.delay_bound,
                        timed: v.timed.clone(),
                        untimed: v.untimed.clone(),
                    },
                }
            })
            .collect(),
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_report_json(report: &AnalysisReport, inputs: &[ReportInput]) -> String {
    let mut s = serde_json::to_string_pretty(&report_document(report, inputs))
        .expect("report types serialize infallibly");
    s.push('\n');
    s
}
