mod common;

use common::invariants::{fingerprint, pipeline_invariants, with_threads};

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let one = with_threads(1, || fingerprint(17));
    let four = with_threads(4, || fingerprint(17));
    assert!(one == four, "fingerprints differ between 1 and 4 threads");
    assert!(one == fingerprint(17));
    assert!(one != fingerprint(18));
}

#[test]
fn preprocessing_invariants_hold() {
    for seed in [1, 2, 3] {
        pipeline_invariants(seed).unwrap();
    }
}
