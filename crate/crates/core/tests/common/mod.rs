#![allow(dead_code)]

use odolab::scales::Scale;
use proptest::prelude::*;

/// Scales with small ratios, short heads and cycles.
pub fn scale(max_ratio: u64) -> impl Strategy<Value = Scale> {
    (
        prop::collection::vec(1..=max_ratio, 0..3),
        prop::collection::vec(1..=max_ratio, 1..3),
    )
        .prop_filter_map("finite scale", |(head, cycle)| Scale::new(head, cycle).ok())
}

/// Scales whose ratios are products of the given primes.
pub fn scale_over(primes: &'static [u64]) -> impl Strategy<Value = Scale> {
    let ratio = prop::collection::vec(0..3u32, primes.len())
        .prop_map(move |e| primes.iter().zip(e).map(|(p, k)| p.pow(k)).product::<u64>());
    (
        prop::collection::vec(ratio.clone(), 0..3),
        prop::collection::vec(ratio, 1..3),
    )
        .prop_filter_map("finite scale", |(head, cycle)| Scale::new(head, cycle).ok())
}

pub fn corpus() -> Vec<Scale> {
    let s = |h: &[u64], c: &[u64]| Scale::new(h.to_vec(), c.to_vec()).unwrap();
    vec![
        s(&[], &[2]),
        s(&[], &[3]),
        s(&[], &[6]),
        s(&[12], &[5]),
        s(&[9], &[2]),
        s(&[], &[4]),
        s(&[], &[10]),
        s(&[], &[5]),
        s(&[2, 3], &[6]),
        s(&[1, 4], &[3, 2]),
    ]
}
