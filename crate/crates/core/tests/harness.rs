use std::fs;

use mask3pc::engine::TripleParams;
use mask3pc::harness::{
    cmd_run, deal, random_model, random_query, read_dealt, run_criterion, write_dealt, CircuitSource, ConfigError,
    CostTable, JobOutput, RunConfig, RunStatus, Scale, VerifyOptions, Workload,
};
use mask3pc::ml::{Mode, ModelKind, Prediction};

fn mal() -> RunConfig {
    RunConfig {
        mode: Mode::Mal,
        triples: TripleParams::default().with_bucket(2),
        ..Default::default()
    }
}

#[test]
fn fault_file_aborts_with_the_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("faults.txt");
    fs::write(
        &script,
        "# flip the masked product sent by P1\npoint=mul.mz party=1 op=add-delta value=1\n",
    )
    .unwrap();
    let cfg = RunConfig {
        fault_script: Some(script),
        ..mal()
    };
    let report = cmd_run(&cfg).unwrap();
    assert_eq!(report.exit_code(), 2, "{}", report.render());
    let RunStatus::Abort(list) = &report.status else {
        panic!("expected an abort: {:?}", report.status)
    };
    assert!(report.render().contains("status=abort"));
    assert!(list.iter().any(|(_, check)| check.contains("mul")), "{list:?}");
}

#[test]
fn malformed_fault_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("faults.txt");
    fs::write(&script, "point=nowhere party=1 op=add-delta value=1\n").unwrap();
    let cfg = RunConfig {
        fault_script: Some(script),
        ..mal()
    };
    assert!(matches!(cmd_run(&cfg), Err(ConfigError::Fault { .. })));
}

#[test]
fn missing_circuit_file_is_a_config_error() {
    let cfg = RunConfig {
        workload: Workload::Circuit(CircuitSource::File("/nonexistent/c.txt".into())),
        ..Default::default()
    };
    assert!(matches!(cmd_run(&cfg), Err(ConfigError::Io { .. })));
}

#[test]
fn fair_tcp_run_matches_memory_meter() {
    let cfg = RunConfig { fair: true, ..mal() };
    let mem = cmd_run(&cfg).unwrap();
    let tcp = cmd_run(&RunConfig {
        net: mask3pc::engine::Net::Tcp,
        ..cfg
    })
    .unwrap();
    assert_eq!(mem.exit_code(), 0);
    assert_eq!(tcp.exit_code(), 0);
    assert_eq!(mem.meter, tcp.meter);
}

#[test]
fn dealt_shares_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = random_model(ModelKind::SvmClass, 24, 5);
    let query = random_query(24, 5);
    let dealt = deal(&model, &query, 5).unwrap();
    write_dealt(dir.path(), &dealt).unwrap();
    let back = read_dealt(dir.path()).unwrap();
    assert_eq!(back.kind, dealt.kind);
    assert_eq!(back.query, dealt.query);
    let cfg = RunConfig {
        workload: Workload::Dealt(dir.path().to_path_buf()),
        ..mal()
    };
    let report = cmd_run(&cfg).unwrap();
    let margin = model.margin(&query).unwrap();
    for out in report.outputs.iter() {
        assert_eq!(
            out.as_ref(),
            Some(&JobOutput::Prediction(Prediction::Class(margin >= 0.0)))
        );
    }
}

#[test]
fn tampered_cost_constant_fails_by_name() {
    let costs = CostTable {
        dot_semi_online: 3,
        ..Default::default()
    };
    let opts = VerifyOptions {
        scale: Scale::Quick,
        costs,
    };
    let r = run_criterion(8, &opts).unwrap();
    assert!(!r.passed);
    assert!(r.detail.contains("semi d=1: online 2 != 3"), "{}", r.detail);
    assert!(r.to_string().contains("FAIL dot-product costs"), "{r}");

    let mut costs = CostTable::default();
    costs.predict[3].per_l = 7;
    let r = run_criterion(
        10,
        &VerifyOptions {
            scale: Scale::Quick,
            costs,
        },
    )
    .unwrap();
    assert!(!r.passed);
    assert!(r.detail.contains("online bits"), "{}", r.detail);
}

#[test]
fn quick_meter_criterion_passes_and_unknown_ids_are_rejected() {
    let opts = VerifyOptions {
        scale: Scale::Quick,
        ..Default::default()
    };
    let r = run_criterion(3, &opts).unwrap();
    assert!(r.passed, "{r}");
    assert!(run_criterion(0, &opts).is_none());
    assert!(run_criterion(12, &opts).is_none());
}
