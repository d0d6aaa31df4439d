use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringqed_core::double::{c1, dimension_for, CoherenceMode};
use ringqed_core::oracle::{wootters_concurrence, DensityMatrix4};
use ringqed_core::C64;

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn concurrence(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let psi = random_state(&mut rng, 4);
    let rho = DensityMatrix4::pure([psi[0], psi[1], psi[2], psi[3]]).unwrap();
    c.bench_function("wootters 4x4", |b| b.iter(|| wootters_concurrence(&rho)));

    let modes = 22;
    let v = random_state(&mut rng, dimension_for(modes));
    c.bench_function("closed-form C1 N=11", |b| {
        b.iter(|| c1(&v, modes, CoherenceMode::PaperSumOfModuli))
    });
}

criterion_group!(benches, concurrence);
criterion_main!(benches);
