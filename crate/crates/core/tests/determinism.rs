use exoforest::exec::{set_parallel, parallel_enabled};
use exoforest::mc_harness::empirical_mse;
use exoforest::model::{FeatureKind, ModelSpec};
use exoforest::theory::{perf_measures, ProcessKind};

// One test so the global switch is never flipped under another test.
#[test]
fn worker_mode_and_reruns_do_not_change_results() {
    let spec = ModelSpec::config_i(FeatureKind::UniformUnit);
    let small = ModelSpec::new(10, vec![1.0, 0.5], 1.0, FeatureKind::BinaryBernoulliHalf).unwrap();
    let run = || {
        (
            perf_measures(ProcessKind::Uniform, &spec, 0.2, 7, 100, 1000, 500, 42).unwrap(),
            empirical_mse(&small, 0.5, 3, 8, 300, 64, 30, 42).unwrap(),
        )
    };
    assert!(parallel_enabled() || !cfg!(feature = "parallel"));
    let par = run();
    assert_eq!(par, run());
    set_parallel(false);
    let seq = run();
    set_parallel(true);
    assert_eq!(par, seq);

    let other = perf_measures(ProcessKind::Uniform, &spec, 0.2, 7, 100, 1000, 500, 43).unwrap();
    assert_ne!(par.0, other);
}
