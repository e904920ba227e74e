//! Reproduction suite. Everything lives in `tests/acceptance.rs`; run it with
//! `cargo test -p eln-repro --test acceptance`. Set `ACCEPTANCE_ONLY=1,6` to
//! run a subset of the criteria.
