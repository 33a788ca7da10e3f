//! Bundled data: the Computer Programmers job and the benchmark accuracy table.

use super::{load_job_spec, BenchmarkTable, RawJobRecord};
use crate::job::JobSpec;

pub const COMPUTER_PROGRAMMERS_JSON: &str = include_str!("../../fixtures/computer_programmers.json");
pub const BENCHMARK_CSV: &str = include_str!("../../fixtures/bbl_accuracy.csv");

pub fn computer_programmers_record() -> RawJobRecord {
    RawJobRecord::parse(COMPUTER_PROGRAMMERS_JSON).expect("bundled job fixture parses")
}

/// The bundled job with subskills divided by the decision-level degrees.
pub fn computer_programmers() -> JobSpec {
    load_job_spec(&computer_programmers_record()).expect("bundled job fixture loads")
}

/// The bundled job with no subskill division (every skill at the action level).
pub fn computer_programmers_undivided() -> JobSpec {
    let rec = computer_programmers_record().undivided().expect("fixture has proficiencies");
    load_job_spec(&rec).expect("bundled job fixture loads")
}

pub fn benchmark_table() -> BenchmarkTable {
    BenchmarkTable::parse(BENCHMARK_CSV).expect("bundled benchmark fixture parses")
}
