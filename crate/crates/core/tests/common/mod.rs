//! Shared oracles and property checks. Each check panics with a message
//! naming the failing case, so it can back a `#[test]` or an acceptance
//! line.
#![allow(dead_code)]

pub mod chance;
pub mod dynamics;
pub mod oracles;
pub mod structure;

use std::fmt::Debug;

use lotsizing::instance::{generate, GeneratorConfig, Substitution};
use lotsizing::{Instance, SystemState};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::Rng;

/// Runs `cases` deterministic proptest cases of `test`.
pub fn check<S, F>(name: &str, cases: u32, strategy: S, test: F)
where
    S: Strategy,
    S::Value: Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    if let Err(e) = runner.run(&strategy, test) {
        panic!("{name}: {e}");
    }
}

pub fn substitution(code: u8) -> Substitution {
    match code % 3 {
        0 => Substitution::None,
        1 => Substitution::PARTIAL,
        _ => Substitution::Full,
    }
}

/// Generated instance with a small noise pool.
pub fn instance(products: usize, horizon: usize, alpha: f64, sub: Substitution, tbo: f64) -> Instance {
    generate(&GeneratorConfig {
        products,
        horizon,
        alpha,
        substitution: sub,
        tbo,
        pool_size: 200,
        ..GeneratorConfig::default()
    })
    .expect("valid config")
}

/// Random mid-run state and observed demand.
pub fn random_state<R: Rng>(rng: &mut R, products: usize) -> (SystemState, Vec<f64>) {
    let mut draw = |lo: f64, hi: f64, p_zero: f64| {
        if rng.random_bool(p_zero) {
            0.0
        } else {
            (rng.random_range(lo..hi) * 4.0).round() / 4.0
        }
    };
    let v = (0..products).map(|_| draw(0.0, 160.0, 0.3)).collect();
    let b = (0..products).map(|_| draw(0.0, 30.0, 0.7)).collect();
    let d_last = (0..products).map(|_| draw(60.0, 140.0, 0.0)).collect();
    let d_hat1 = (0..products).map(|_| draw(60.0, 140.0, 0.05)).collect();
    (SystemState { v, b, d_last }, d_hat1)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}
