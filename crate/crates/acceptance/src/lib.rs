//! Acceptance suite for `hflc`. Everything lives in `tests/`; run it with
//! `cargo test -p hflc-acceptance -- --nocapture`.
