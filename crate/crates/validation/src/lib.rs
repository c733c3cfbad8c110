//! Acceptance checks for `piqsim-core` live in `tests/acceptance.rs`; run them
//! with `cargo test -p piqsim-validation --test acceptance`.
