mod common;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use pgt_core::bounds::{huffman_expected_length, source_entropy};
use pgt_core::TruncatedPoisson;

#[derive(PartialEq)]
struct Weight(f64);

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Every one of the `2^n` patterns with its probability.
fn pattern_probabilities(lambda: f64, n: u64) -> Vec<f64> {
    let pmf = common::pmf_table(lambda, n);
    (0u32..1 << n)
        .map(|mask| {
            let d = mask.count_ones() as u64;
            pmf[d as usize] / common::binomial(n, d)
        })
        .collect()
}

fn heap_huffman(probs: &[f64]) -> f64 {
    let mut heap: BinaryHeap<Reverse<Weight>> = probs.iter().map(|&p| Reverse(Weight(p))).collect();
    let mut total = 0.0;
    while heap.len() > 1 {
        let a = heap.pop().unwrap().0 .0;
        let b = heap.pop().unwrap().0 .0;
        total += a + b;
        heap.push(Reverse(Weight(a + b)));
    }
    total
}

#[test]
fn entropy_matches_pattern_enumeration() {
    for &lambda in &[0.5, 1.0, 2.0, 3.5] {
        for n in 1..=12u64 {
            let model = TruncatedPoisson::new(lambda, n).unwrap();
            let h: f64 = pattern_probabilities(lambda, n)
                .iter()
                .map(|&p| -p * p.log2())
                .sum();
            assert!((source_entropy(&model).value - h).abs() < 1e-9, "λ={lambda} n={n}");
        }
    }
}

#[test]
fn huffman_matches_heap_construction() {
    for &lambda in &[0.5, 1.0, 2.0] {
        for n in 1..=12u64 {
            let model = TruncatedPoisson::new(lambda, n).unwrap();
            let oracle = heap_huffman(&pattern_probabilities(lambda, n));
            let got = huffman_expected_length(&model).unwrap().value;
            assert!((got - oracle).abs() < 1e-9, "λ={lambda} n={n}: {got} vs {oracle}");
            let h = source_entropy(&model).value;
            assert!(h <= got + 1e-12 && got < h + 1.0);
        }
    }
}
