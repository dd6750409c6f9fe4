//! Expression parsing, job documents and report serialization.

pub mod job;
pub mod parse;
pub mod report;

pub use job::{load_job, JobDocument, OutputFormat};
pub use parse::{parse_poly, ParseError};
pub use report::{emit_convergence, emit_report, ReportDocument};
