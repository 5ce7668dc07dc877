use selm_core::rng::*;
use rand::RngCore;

#[test]
fn streams_are_reproducible_and_distinct() {
    let a: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, "x"), |r, _| Some(r.next_u64())).collect();
    let b: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, "x"), |r, _| Some(r.next_u64())).collect();
    let c: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, "y"), |r, _| Some(r.next_u64())).collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
