//! Holds the `acceptance` test target: `cargo test -p dioph-lab-acceptance`.
