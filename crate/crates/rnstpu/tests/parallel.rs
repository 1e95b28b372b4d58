use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnstpu::matmul::run_parallel;
use rnstpu_core::{Activation, ModuliSet, RnsFixed, Simulator, SystolicConfig};

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64, set: &ModuliSet) -> Vec<Vec<RnsFixed>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| RnsFixed::from_scaled(&BigInt::from(rng.random_range(-bound..=bound)), set).unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn threaded_slices_match_sequential() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sets = [
        ModuliSet::with_fractional(&[2, 3, 5, 7, 11, 13], &[5, 7], 8).unwrap(),
        ModuliSet::default_set(),
    ];
    for set in &sets {
        for (n, k) in [(1, 1), (3, 5), (8, 8), (16, 2)] {
            let bound = if set.len() == 6 { 2 } else { 1 << 30 };
            for act in [Activation::None, Activation::Relu] {
                let mut sim = Simulator::new(SystolicConfig::new(n, set, act).unwrap());
                sim.load_weights(&random(&mut rng, n, n, bound, set)).unwrap();
                let x = random(&mut rng, n, k, bound, set);
                // more threads than cores so slices really interleave
                let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
                let threaded = pool.install(|| run_parallel(&sim, &x));
                match (sim.run_matmul(&x), threaded) {
                    (Ok(a), Ok(b)) => assert_eq!(a, b),
                    (Err(a), Err(b)) => assert_eq!(rnstpu::Error::from(a).to_string(), b.to_string()),
                    (a, b) => panic!("sequential {a:?} vs threaded {b:?}"),
                }
            }
        }
    }
}
