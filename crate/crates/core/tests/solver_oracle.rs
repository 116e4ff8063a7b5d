#[path = "support/oracle.rs"]
mod oracle;

use mssa_core::solver::{estimator_distribution, solve_b_of_nu, solve_dual, solve_mssa};
use mssa_core::spectral::{cross_form_i, quad_form_i, quad_form_m};
use mssa_core::{HtConstraint, NoiseCovariance, StackedFilter, TridiagSpectrum};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Instance {
    sigma: NoiseCovariance,
    gamma: StackedFilter,
    spectrum: TridiagSpectrum,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn instance(rng: &mut ChaCha8Rng, series: usize, len: usize) -> Instance {
    let a = DMatrix::from_fn(series, series, |_, _| normal(rng));
    let sigma = NoiseCovariance::new(&a * a.transpose() + DMatrix::identity(series, series) * 0.3).unwrap();
    let gamma = StackedFilter::new(series, len, (0..series * len).map(|_| normal(rng)).collect()).unwrap();
    Instance { sigma, gamma, spectrum: TridiagSpectrum::new(len).unwrap() }
}

fn unit(v: &[f64]) -> DVector<f64> {
    let d = DVector::from_column_slice(v);
    let n = d.norm();
    d / n
}

#[test]
fn primal_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..30 {
        let len = 3 + trial % 3;
        let series = 1 + trial % 2;
        let inst = instance(&mut rng, series, len);
        let rho_max = inst.spectrum.rho_max();
        let rho = rng.random_range(-rho_max + 0.05..rho_max - 0.05);
        let sol = solve_mssa(&inst.gamma, &inst.sigma, &inst.spectrum, &HtConstraint::acf(rho)).unwrap();
        let g = DVector::from_column_slice(inst.gamma.as_slice());
        let problem = oracle::primal(inst.sigma.matrix(), &g, len, rho, 1.0);
        let best = problem.solve(series * len, 200, trial as u64).expect("oracle converged");
        let gap = (problem.objective.eval(&best) - sol.objective).abs();
        assert!(gap < 1e-6, "trial {trial}: objective gap {gap}");
        let dir = (unit(best.as_slice()) - unit(sol.b.as_slice())).norm();
        assert!(dir < 1e-4, "trial {trial}: direction gap {dir}");
    }
}

#[test]
fn dual_matches_brute_force_and_primal() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..12 {
        let series = 1 + trial % 2;
        let inst = instance(&mut rng, series, 4);
        let rho_max = inst.spectrum.rho_max();
        let primal = solve_mssa(&inst.gamma, &inst.sigma, &inst.spectrum, &HtConstraint::acf(0.0)).unwrap();
        // keep to the smoothing branch
        let rho = 0.5 * (primal.rho_mse.max(-rho_max) + rho_max);
        let primal = solve_mssa(&inst.gamma, &inst.sigma, &inst.spectrum, &HtConstraint::acf(rho)).unwrap();
        let dual =
            solve_dual(&inst.gamma, &inst.sigma, &inst.spectrum, primal.target_correlation, None, 1.0).unwrap();
        assert!(dual.b.direction_cosine(&primal.b) > 1.0 - 1e-8);

        let g = DVector::from_column_slice(inst.gamma.as_slice());
        let problem = oracle::dual(inst.sigma.matrix(), &g, 4, primal.target_correlation, 1.0);
        let best = problem.solve(series * 4, 200, 100 + trial as u64).expect("oracle converged");
        let dir = (unit(best.as_slice()) - unit(dual.b.as_slice())).norm();
        assert!(dir < 1e-4, "trial {trial}: direction gap {dir}");
    }
}

#[test]
fn feasible_filters_never_beat_the_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let inst = instance(&mut rng, 2, 6);
        let spec = &inst.spectrum;
        let rho = 0.3;
        let sol = solve_mssa(&inst.gamma, &inst.sigma, spec, &HtConstraint::acf(rho)).unwrap();
        let acf = |b: &StackedFilter| quad_form_m(b, &inst.sigma).unwrap() / quad_form_i(b, &inst.sigma).unwrap();
        for _ in 0..20 {
            // mix a smooth and a rough random filter until the ACF constraint holds
            let tilt = |sign: f64, rng: &mut ChaCha8Rng| {
                let blocks: Vec<Vec<f64>> = (0..2)
                    .map(|_| {
                        let k = if sign > 0.0 { 0 } else { 5 };
                        spec.eigenvector(k).iter().map(|v| 3.0 * v + 0.2 * normal(rng)).collect()
                    })
                    .collect();
                StackedFilter::from_blocks(&blocks).unwrap()
            };
            let (x, y) = (tilt(1.0, &mut rng), tilt(-1.0, &mut rng));
            let mix = |t: f64| {
                let data = x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| t.cos() * a + t.sin() * b).collect();
                StackedFilter::new(2, 6, data).unwrap()
            };
            let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
            assert!(acf(&mix(lo)) > rho && acf(&mix(hi)) < rho);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if acf(&mix(mid)) > rho {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let b = mix(0.5 * (lo + hi));
            let b = b.scaled(1.0 / quad_form_i(&b, &inst.sigma).unwrap().sqrt());
            let obj = cross_form_i(&inst.gamma, &b, &inst.sigma).unwrap();
            assert!(obj <= sol.objective + 1e-9);
        }
    }
}

#[test]
fn nu_map_is_sigma_free_but_solution_is_not() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inst = instance(&mut rng, 2, 8);
    let other = NoiseCovariance::from_rows(&[vec![1.0, 0.8], vec![0.8, 1.0]]).unwrap();
    let b1 = solve_b_of_nu(&inst.gamma, 2.5, &inst.spectrum).unwrap();
    let b2 = solve_b_of_nu(&inst.gamma, 2.5, &inst.spectrum).unwrap();
    assert_eq!(b1, b2);
    let c = HtConstraint::holding_time(5.0);
    let s1 = solve_mssa(&inst.gamma, &inst.sigma, &inst.spectrum, &c).unwrap();
    let s2 = solve_mssa(&inst.gamma, &other, &inst.spectrum, &c).unwrap();
    assert!((s1.nu - s2.nu).abs() > 1e-6);
}

#[test]
fn estimator_covariance_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let inst = instance(&mut rng, 2, 5);
    let dim = 10;
    let root = DMatrix::from_fn(dim, dim, |i, j| if i >= j { 0.3 * normal(&mut rng) + if i == j { 0.5 } else { 0.0 } } else { 0.0 });
    let cov_gamma = &root * root.transpose();
    let nu = 2.4;
    let (mean, cov) = estimator_distribution(&inst.gamma, &cov_gamma, nu, -1.0, &inst.spectrum).unwrap();
    assert_eq!(mean, solve_b_of_nu(&inst.gamma, nu, &inst.spectrum).unwrap());
    let draws = 10_000;
    let mut samples = Vec::with_capacity(draws);
    for _ in 0..draws {
        let z = DVector::from_fn(dim, |_, _| normal(&mut rng));
        let g = DVector::from_column_slice(inst.gamma.as_slice()) + &root * z;
        let b = solve_b_of_nu(&StackedFilter::new(2, 5, g.as_slice().to_vec()).unwrap(), nu, &inst.spectrum).unwrap();
        samples.push(DVector::from_column_slice(b.as_slice()));
    }
    let avg = samples.iter().fold(DVector::zeros(dim), |a, s| a + s) / draws as f64;
    let mut emp = DMatrix::zeros(dim, dim);
    for s in &samples {
        let d = s - &avg;
        emp += &d * d.transpose();
    }
    emp /= (draws - 1) as f64;
    let rel = (&emp - &cov).norm() / cov.norm();
    assert!(rel < 0.05, "relative Frobenius error {rel}");
}

#[test]
fn estimator_identity_limit() {
    let spec = TridiagSpectrum::new(4).unwrap();
    let sigma = NoiseCovariance::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let inv = oracle::kron(&sigma.matrix().clone().try_inverse().unwrap(), &DMatrix::identity(4, 4));
    let g = StackedFilter::new(2, 4, vec![1.0; 8]).unwrap();
    let nu = 1e8;
    let (_, cov) = estimator_distribution(&g, &inv, nu, nu, &spec).unwrap();
    assert!((&cov - &inv).norm() / inv.norm() < 1e-7);
}
