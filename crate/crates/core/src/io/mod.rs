//! Files in and out: datasets, chains, stores, configuration and reports.

pub mod config;
pub mod report;
pub mod tables;

pub use config::{ModelEntry, PreparedRun, RunConfig, RunOutput, StoreSource};
pub use report::{emit_report, load_report_json, parse_report_json, render_probabilities_csv, render_text, ReportFormat};
pub use tables::{
    load_chain_csv, load_dataset_csv, load_store_csv, parse_chain_csv, parse_dataset_csv, parse_store_csv,
    write_chain_csv, write_store_csv, write_trace_csv,
};
