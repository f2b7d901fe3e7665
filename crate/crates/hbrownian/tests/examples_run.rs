//! Keeps the fast examples runnable, not just compilable.

mod geometry_check_example {
    include!("../examples/geometry_check.rs");
}

mod weighted_volume_example {
    include!("../examples/weighted_volume.rs");
}

mod pathwise_identity_example {
    include!("../examples/pathwise_identity.rs");
}

mod stability_criteria_example {
    include!("../examples/stability_criteria.rs");
}

#[test]
fn geometry_check_example_runs() {
    geometry_check_example::main();
}

#[test]
fn weighted_volume_example_runs() {
    weighted_volume_example::main();
}

#[test]
fn pathwise_identity_example_runs() {
    pathwise_identity_example::main();
}

#[test]
fn stability_criteria_example_runs() {
    stability_criteria_example::main();
}
