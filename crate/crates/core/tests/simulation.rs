use sojourn::sim::{DriftedSampler, Factorization, GaussianSampler};
use sojourn::{CorrelationModel, Grid, McOptions, Reduction, Replicator, Seeds, Stream, WeightMode};
use sojourn::replicate::Collect;

/// Largest entrywise |empirical - target| / se of the second moments over `n` draws.
fn worst_covariance_z(sampler: &GaussianSampler, n: usize, seed: u64) -> f64 {
    let k = sampler.len();
    let seeds = Seeds::new(seed);
    let mut scratch = sampler.scratch();
    let mut x = vec![0.0; k];
    let mut sums = vec![0.0; k * k];
    let mut squares = vec![0.0; k * k];
    for r in 0..n {
        sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r as u64), &mut scratch, &mut x);
        for i in 0..k {
            for j in i..k {
                let p = x[i] * x[j];
                sums[i * k + j] += p;
                squares[i * k + j] += p * p;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in i..k {
            let m = sums[i * k + j] / n as f64;
            let var = (squares[i * k + j] / n as f64 - m * m) * n as f64 / (n - 1) as f64;
            let z = (m - sampler.covariance(i, j)).abs() / (var / n as f64).sqrt();
            worst = worst.max(z);
        }
    }
    worst
}

#[test]
fn stationary_covariance_fidelity() {
    let grid = Grid::new(0.1, 32, 0.0, WeightMode::Counting).unwrap();
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        for model in [
            CorrelationModel::powered_exponential(alpha, 1.0).unwrap(),
            CorrelationModel::generalized_cauchy(alpha, 1.0).unwrap(),
        ] {
            let sampler = GaussianSampler::stationary(&model, &grid).unwrap();
            let z = worst_covariance_z(&sampler, 10_000, 3);
            assert!(z < 4.0, "{}: worst entry {z:.2} se", model.describe());
        }
    }
}

#[test]
fn circulant_and_cholesky_agree_on_two_moments() {
    let grid = Grid::new(1.0 / 31.0, 32, 0.0, WeightMode::Counting).unwrap();
    let model = CorrelationModel::powered_exponential(1.0, 1.0).unwrap();
    let n = 20_000;
    let moments = |method: Factorization, seed: u64| {
        let s = GaussianSampler::stationary_with(&model, &grid, method).unwrap();
        assert_eq!(s.method(), method);
        let seeds = Seeds::new(seed);
        let mut scratch = s.scratch();
        let mut x = vec![0.0; 32];
        let (mut m1, mut m2, mut m4) = (vec![0.0; 32], vec![0.0; 32], vec![0.0; 32]);
        for r in 0..n {
            s.sample_into(&mut seeds.rng(Stream::Gaussian, r), &mut scratch, &mut x);
            for i in 0..32 {
                m1[i] += x[i];
                m2[i] += x[i] * x[i];
                m4[i] += x[i].powi(4);
            }
        }
        let nf = n as f64;
        (0..32)
            .map(|i| {
                let (a, b, d) = (m1[i] / nf, m2[i] / nf, m4[i] / nf);
                // (mean, se of mean, second moment, se of second moment)
                (a, (b / nf).sqrt(), b, ((d - b * b) / nf).sqrt())
            })
            .collect::<Vec<_>>()
    };
    let c = moments(Factorization::Circulant, 1);
    let d = moments(Factorization::Cholesky, 2);
    for i in 0..32 {
        let z1 = (c[i].0 - d[i].0) / c[i].1.hypot(d[i].1);
        let z2 = (c[i].2 - d[i].2) / c[i].3.hypot(d[i].3);
        assert!(z1.abs() < 3.0 && z2.abs() < 3.0, "point {i}: mean z {z1:.2}, second moment z {z2:.2}");
    }
}

#[test]
fn paths_do_not_depend_on_worker_count() {
    let grid = Grid::new(0.05, 64, 0.0, WeightMode::Counting).unwrap();
    let model = CorrelationModel::generalized_cauchy(1.5, 2.0).unwrap();
    let sampler = GaussianSampler::stationary(&model, &grid).unwrap();
    let seeds = Seeds::new(77);
    let draw = |workers: usize| {
        let rep = Replicator::new(workers, Reduction::Sequential).unwrap();
        rep.run::<Collect<Vec<f64>>, _, _, _>(0..40, || sampler.scratch(), |scratch, r| {
            let mut x = vec![0.0; 64];
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, &mut x);
            x
        })
        .unwrap()
        .acc
        .0
    };
    let one = draw(1);
    assert_eq!(one.len(), 40);
    assert_eq!(one, draw(3));
    assert_eq!(one, draw(1));
}

#[test]
fn drift_eventually_dominates() {
    // P(max over (T, 2T] > max over [0, T]) for W = sqrt(2) B - t^alpha, alpha < 2.
    let alpha = 1.0;
    let opts = McOptions::new(4_000, 5);
    let mut previous = f64::INFINITY;
    for t in [1.0, 2.0, 4.0, 8.0] {
        let delta = t / 32.0;
        let grid = Grid::new(delta, 65, 0.0, WeightMode::Counting).unwrap();
        let sampler = DriftedSampler::new(alpha, &grid).unwrap();
        let seeds = Seeds::new(opts.seed);
        let mut hits = 0u32;
        let mut scratch = sampler.scratch();
        let mut w = vec![0.0; 65];
        for r in 0..opts.n {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), &mut scratch, &mut w);
            let early = w[..=32].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let late = w[33..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hits += u32::from(late > early);
        }
        let p = hits as f64 / opts.n as f64;
        assert!(p < previous, "T = {t}: {p} not below {previous}");
        previous = p;
    }
    assert!(previous < 0.05);
}
