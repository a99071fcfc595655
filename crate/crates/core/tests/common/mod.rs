//! Shared helpers for the integration tests: independent closed-form oracles.
#![allow(dead_code)]

pub mod rank_one;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use anosov_core::orbit::{OrbitTable, SchottkyPreset};

/// Orbit tables shared between the tests of one binary.
pub fn table(preset: &str, max_len: usize) -> Arc<OrbitTable> {
    static CACHE: OnceLock<Mutex<HashMap<(String, usize), Arc<OrbitTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    // Holding the lock while enumerating keeps concurrent tests from building twice.
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((preset.to_string(), max_len))
        .or_insert_with(|| {
            let p = SchottkyPreset::builtin(preset).expect("builtin preset");
            Arc::new(OrbitTable::enumerate(&p, max_len).expect("enumeration"))
        })
        .clone()
}
