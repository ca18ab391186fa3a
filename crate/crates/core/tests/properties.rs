mod common;

use common::{random_state, rng};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use thermo_tdg::assembly::LoadSpec;
use thermo_tdg::diagnostics::energy_norm;
use thermo_tdg::linalg::{gmres, GmresOptions, Ilu0, Solver, SolverSettings, SparseMatrix};
use thermo_tdg::mesh::{build_interval_mesh, build_quad_mesh, BoundaryPartition};
use thermo_tdg::model::*;
use thermo_tdg::stepper::{Scheme, Stepper};

fn coeffs(dim: usize, lambda: f64, mu: f64, m: f64, theta0: f64, rc: (f64, f64)) -> Coefficients {
    Coefficients {
        dim,
        rho: rc.0,
        c: rc.1,
        theta0,
        lambda,
        mu,
        m,
        k2: 1.0,
        k3: 0.1,
        s0: 0.3,
        alpha_rate_offset: 0.0,
        units: Units::Dimensional,
    }
}

fn strain(dim: usize, e: [f64; 3]) -> SymTensor {
    if dim == 1 {
        SymTensor::scalar(e[0])
    } else {
        SymTensor::plane(e[0], e[1], e[2])
    }
}

fn sparse_system(n: usize, seed: u64) -> SparseMatrix {
    use rand::Rng;
    let mut r = rng(seed);
    let mut t = Vec::new();
    for i in 0..n {
        let mut off = 0.0;
        for _ in 0..3 {
            let j = r.random_range(0..n);
            if j != i {
                let v: f64 = r.random_range(-1.0..1.0);
                off += v.abs();
                t.push((i, j, v));
            }
        }
        t.push((i, i, off + r.random_range(0.5..2.0)));
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stress_and_entropy_are_free_energy_derivatives(
        dim in 1usize..=2,
        lambda in 0.0..3.0f64, mu in 0.1..3.0f64, m in -1.0..1.0f64, theta0 in 0.1..3.0f64,
        e in prop::array::uniform3(-1.0..1.0f64), de in prop::array::uniform3(-1.0..1.0f64),
        theta in -1.0..1.0f64,
    ) {
        let p = coeffs(dim, lambda, mu, m, theta0, (1.3, 0.7));
        let eps = strain(dim, e);
        let dir = strain(dim, de);
        let h = 1e-5;
        let shifted = |s: f64| strain(dim, [e[0] + s * de[0], e[1] + s * de[1], e[2] + s * de[2]]);
        let fd = (free_energy(&shifted(h), theta, &p).unwrap() - free_energy(&shifted(-h), theta, &p).unwrap()) / (2.0 * h);
        let sigma = stress(&eps, theta, &p).unwrap();
        prop_assert!((fd - sigma.contract(&dir)).abs() < 1e-7 * (1.0 + fd.abs()));
        let ft = (free_energy(&eps, theta + h, &p).unwrap() - free_energy(&eps, theta - h, &p).unwrap()) / (2.0 * h);
        prop_assert!((ft + entropy_density(&eps, theta, &p).unwrap()).abs() < 1e-7 * (1.0 + ft.abs()));
    }

    #[test]
    fn adiabatic_stiffness_is_spd(
        dim in 1usize..=2,
        lambda in 0.0..5.0f64, mu in 0.01..5.0f64, m in -2.0..2.0f64, theta0 in 0.0..3.0f64,
    ) {
        let p = coeffs(dim, lambda, mu, m, theta0, (1.0, 2.0));
        let c = adiabatic_stiffness(&p);
        prop_assert!(c.is_symmetric());
        let n = c.size;
        let mat = DMatrix::from_fn(n, n, |i, j| c.data[i][j]);
        prop_assert!(mat.cholesky().is_some());
    }

    #[test]
    fn intermediate_temperature_is_affine_in_strain(
        dim in 1usize..=2, m in -1.0..1.0f64, theta0 in 0.1..2.0f64,
        th in -1.0..1.0f64, a in prop::array::uniform3(-1.0..1.0f64), b in prop::array::uniform3(-1.0..1.0f64),
        s in -2.0..2.0f64,
    ) {
        let p = coeffs(dim, 1.0, 1.0, m, theta0, (1.0, 1.0));
        let zero = strain(dim, [0.0; 3]);
        let f = |e: [f64; 3]| intermediate_temperature(&[th], &[strain(dim, e)], &[zero], &p).unwrap()[0];
        let mix = [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        prop_assert!((f(mix) - (f(a) + s * (f(b) - th))).abs() < 1e-12);
        prop_assert!((f([0.0; 3]) - th).abs() == 0.0);
    }

    #[test]
    fn heat_flux_is_odd(ga in prop::array::uniform2(-5.0..5.0f64), gt in prop::array::uniform2(-5.0..5.0f64)) {
        let p = coeffs(2, 1.0, 1.0, 0.5, 1.0, (1.0, 1.0));
        let q = heat_flux(&ga, &gt, &p).unwrap();
        let qn = heat_flux(&[-ga[0], -ga[1]], &[-gt[0], -gt[1]], &p).unwrap();
        prop_assert_eq!(q[0], -qn[0]);
        prop_assert_eq!(q[1], -qn[1]);
    }

    #[test]
    fn energy_is_quadratic(seed in 0u64..1000, s in -3.0..3.0f64) {
        let mesh = build_quad_mesh([0.0, 1.0], [0.0, 2.0], 3, 2).unwrap();
        let p = coeffs(2, 1.0, 0.7, 0.4, 1.5, (1.2, 0.8));
        let st = random_state(&mesh, &mut rng(seed), 0.0);
        let e1 = energy_norm(&mesh, &st, &p).unwrap();
        let e2 = energy_norm(&mesh, &st.scaled(s), &p).unwrap();
        prop_assert!(e1 > 0.0);
        prop_assert!((e2 - s * s * e1).abs() <= 1e-12 * e1.max(1.0) * (1.0 + s * s));
    }

    #[test]
    fn solve_inverts_spmv(n in 5usize..80, seed in 0u64..1000) {
        let a = sparse_system(n, seed);
        let x: Vec<f64> = (0..n).map(|i| ((i * 7 + seed as usize) % 11) as f64 - 5.0).collect();
        let b = a.spmv(&x).unwrap();
        let got = Solver::new(&a, &SolverSettings::default()).unwrap().solve(&b).unwrap();
        let err = x.iter().zip(&got).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9);
    }

    #[test]
    fn spmv_matches_dense(n in 1usize..40, seed in 0u64..1000) {
        let a = sparse_system(n, seed);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let dense = a.to_dense();
        let y = a.spmv(&x).unwrap();
        for i in 0..n {
            let d: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
            prop_assert!((d - y[i]).abs() < 1e-13 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn gmres_agrees_with_direct(n in 5usize..60, seed in 0u64..1000) {
        let a = sparse_system(n, seed);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let direct = Solver::new(&a, &SolverSettings::default()).unwrap().solve(&b).unwrap();
        let ilu = Ilu0::new(&a).unwrap();
        let it = gmres(&a, &b, &ilu, GmresOptions { restart: 30, tol: 1e-12, max_iter: 10 * n }).unwrap();
        let err = direct.iter().zip(&it).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8);
    }
}

#[test]
fn random_system_matches_dense_lu() {
    let n = 50;
    let a = sparse_system(n, 4242);
    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let ours = Solver::new(&a, &SolverSettings::default()).unwrap().solve(&b).unwrap();
    let d = a.to_dense();
    let dm = DMatrix::from_fn(n, n, |i, j| d[i][j]);
    let reference = dm.lu().solve(&DVector::from_vec(b)).unwrap();
    for i in 0..n {
        assert!((ours[i] - reference[i]).abs() < 1e-10 * (1.0 + reference[i].abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// With constrained velocity, the monolithic, Lie-Trotter and Strang
    /// schemes balance energy exactly: E(n) - E(n+1) equals the recorded
    /// jump plus conduction dissipation.
    #[test]
    fn per_slab_energy_balance(
        seed in 0u64..10_000, dt in 0.01..2.0f64,
        m in -1.0..1.0f64, k3 in 0.0..0.5f64, two_d in any::<bool>(),
    ) {
        let mesh = if two_d {
            build_quad_mesh([0.0, 1.0], [0.0, 1.0], 4, 3).unwrap()
        } else {
            build_interval_mesh(1.0, 12).unwrap()
        };
        let dim = mesh.dim();
        let mut p = coeffs(dim, 0.5, 1.0, m, 0.8, (1.3, 0.9));
        p.k3 = k3;
        p.s0 = 0.0;
        let start = random_state(&mesh, &mut rng(seed), 0.0);
        for scheme in [Scheme::Monolithic, Scheme::LieTrotter, Scheme::Strang] {
            let mut st = Stepper::new(&mesh, p.clone(), LoadSpec::none(), SolverSettings::default()).unwrap();
            let mut cur = start.clone();
            for n in 0..3 {
                let out = st.step(scheme, &cur, n, n as f64 * dt, (n + 1) as f64 * dt).unwrap();
                let e0 = energy_norm(&mesh, &cur, &p).unwrap();
                let e1 = energy_norm(&mesh, &out.state, &p).unwrap();
                let balance = e0 - e1 - out.record.jump_dissipation - out.record.conduction_dissipation;
                prop_assert!(balance.abs() <= 1e-10 * e0, "{} slab {}: residual {:e}", scheme, n, balance / e0);
                prop_assert!(out.record.jump_dissipation >= 0.0);
                cur = out.state;
            }
        }
    }

    /// Double pass only satisfies the inequality.
    #[test]
    fn double_pass_energy_decreases(seed in 0u64..10_000, dt in 0.01..2.0f64) {
        let mesh = build_interval_mesh(1.0, 10).unwrap();
        let p = coeffs(1, 0.5, 1.0, 0.6, 0.8, (1.0, 1.0));
        let start = random_state(&mesh, &mut rng(seed), 0.0);
        let mut st = Stepper::new(&mesh, p.clone(), LoadSpec::none(), SolverSettings::default()).unwrap();
        let out = st.step(Scheme::DoublePass, &start, 0, 0.0, dt).unwrap();
        let e0 = energy_norm(&mesh, &start, &p).unwrap();
        let e1 = energy_norm(&mesh, &out.state, &p).unwrap();
        prop_assert!(e1 <= e0 - out.record.jump_dissipation - out.record.conduction_dissipation + 1e-10 * e0);
    }
}

#[test]
fn free_velocity_breaks_the_energy_balance() {
    let part = BoundaryPartition { constrain_velocity: false, ..BoundaryPartition::clamped() };
    let mesh = build_interval_mesh(1.0, 16).unwrap().with_partition(part);
    let p = coeffs(1, 0.5, 1.0, 0.5, 0.8, (1.0, 1.0));
    let mut start = random_state(&mesh, &mut rng(5), 0.0);
    start.v[0] = 0.7;
    let mut st = Stepper::new(&mesh, p.clone(), LoadSpec::none(), SolverSettings::default()).unwrap();
    let out = st.step(Scheme::Monolithic, &start, 0, 0.0, 0.1).unwrap();
    let e0 = energy_norm(&mesh, &start, &p).unwrap();
    let e1 = energy_norm(&mesh, &out.state, &p).unwrap();
    let balance = e0 - e1 - out.record.jump_dissipation;
    assert!(balance.abs() > 1e-6 * e0);
}
