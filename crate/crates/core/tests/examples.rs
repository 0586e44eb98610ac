macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(sample_paths, "sample_paths.rs", sample_paths_runs);
example!(exact_oracle, "exact_oracle.rs", exact_oracle_runs);
example!(thinning, "thinning.rs", thinning_runs);
example!(moment_checks, "moment_checks.rs", moment_checks_runs);
example!(deficit, "deficit.rs", deficit_runs);
example!(independence, "independence.rs", independence_runs);
example!(mixing, "mixing.rs", mixing_runs);
example!(non_detection, "non_detection.rs", non_detection_runs);
example!(verify, "verify.rs", verify_runs);
