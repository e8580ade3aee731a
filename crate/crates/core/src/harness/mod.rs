//! Benchmark and verification harness: run configurations, reports, the fault
//! catalog and the acceptance criteria shared by the command line and the test
//! suite.

mod catalog;
mod config;
mod criteria;
mod run;
mod workload;

pub use catalog::{
    catalog_circuit, fair_catalog, fault_catalog, honest_circuit_run, run_fault_case, FaultCase, FaultVerdict, Target,
};
pub use config::{CircuitSource, ConfigError, RunConfig, Workload};
pub use criteria::{run_criterion, verify, CostTable, CriterionResult, PredictCost, Scale, VerifyOptions, CRITERIA};
pub use run::{cmd_run, RunReport, RunStatus};
pub use workload::{
    deal, random_inputs, random_model, random_query, read_dealt, read_dealt_party, write_dealt, DealtInputs, Expected,
    Job, JobOutput, CLEAR_MARGIN,
};
