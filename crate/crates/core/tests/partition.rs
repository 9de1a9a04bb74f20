mod common;

#[test]
fn every_filter_partitions_and_is_idempotent() {
    common::check_partition(10_000).unwrap();
}
