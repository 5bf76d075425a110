use burst_testkit::crash;

#[test]
fn crash_worker() {
    crash::maybe_worker();
}

#[test]
fn killed_appender_never_loses_an_acknowledged_batch() {
    let tmp = tempfile::tempdir().unwrap();
    let report = crash::kill_trials("crash_worker", tmp.path(), 30, 11);
    assert!(report.failures.is_empty(), "{:#?}", report.failures);
    assert_eq!(report.kills, 30);
    assert!(report.acked_batches >= 30);
    eprintln!("{report:?}");
}
