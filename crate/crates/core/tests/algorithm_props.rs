use insitu::algorithm::{permute_in_place, Permutation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn permutation(max_len: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_len, any::<u64>())
        .prop_map(|(n, seed)| Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #[test]
    fn output_is_the_gather(p in permutation(300)) {
        let n = p.len();
        let original: Vec<u64> = (0..n as u64).map(|v| v * 7 + 3).collect();
        let expected: Vec<u64> = p.as_zero_based().iter().map(|&j| original[j]).collect();
        let mut x = original.clone();
        let rec = permute_in_place(&mut x, &p).unwrap();
        prop_assert_eq!(x, expected);
        prop_assert_eq!(rec.value_writes as usize, n);
        prop_assert_eq!(rec.cycle_leaders as usize, p.cycle_count());
        prop_assert!(rec.search_steps as usize <= n * (n - 1) / 2);
    }

    #[test]
    fn cost_ignores_values(p in permutation(60)) {
        let mut a: Vec<i32> = vec![0; p.len()];
        let mut b: Vec<String> = (0..p.len()).map(|i| i.to_string()).collect();
        prop_assert_eq!(
            permute_in_place(&mut a, &p).unwrap(),
            permute_in_place(&mut b, &p).unwrap()
        );
    }

    #[test]
    fn parses_its_own_display(p in permutation(50)) {
        let back: Permutation = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn permutation_is_read_only() {
    let p = Permutation::random(1000, &mut ChaCha8Rng::seed_from_u64(1));
    let before = p.clone();
    let mut x: Vec<u32> = (0..1000).collect();
    permute_in_place(&mut x, &p).unwrap();
    let first = permute_in_place(&mut x, &p).unwrap();
    let second = permute_in_place(&mut x, &p).unwrap();
    assert_eq!(p, before);
    assert_eq!(first, second);
}
