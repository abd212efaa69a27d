//! Holds the `acceptance` test target; run it with
//! `cargo test -p mode-quest-validation --test acceptance`.
