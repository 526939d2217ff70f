//! Holds the `acceptance` test target (`tests/acceptance.rs`), which prints
//! one PASS/FAIL line per acceptance criterion. Run it with
//! `cargo test -p satlink-tests --test acceptance`.
