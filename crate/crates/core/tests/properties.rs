use krylov_expm::approximant::{ApproxKind, Approximant};
use krylov_expm::estimators::EstimatorKind;
use krylov_expm::estimators::{era, era_corrected, era_value};
use krylov_expm::krylov::{build_krylov, KrylovConfig, KrylovMode, Reorthogonalization};
use krylov_expm::linalg::mtx::{read_matrix_market, write_matrix_market};
use krylov_expm::linalg::{
    expm_dense, norm2, phi_dense, phi_scalar, symtrid_eig, DenseMatrix, LinearOperator,
    SparseOperator, SymTridiagonal, Symmetry, C64,
};
use krylov_expm::problems::{free_hamiltonian, random_unit_vector};
use krylov_expm::stepper::{
    propagate, step_size_direct, step_size_heuristic, ControllerKind, ControllerSpec, ErrorModel,
    Horizon,
};
use krylov_expm::Prefactor;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn dense(n: usize, entries: &[(f64, f64)]) -> DenseMatrix {
    DenseMatrix::from_row_major(n, n, entries.iter().map(|&(a, b)| c(a, b)).collect()).unwrap()
}

/// Random sparse operator: a band plus a few scattered entries.
fn sparse(n: usize, vals: &[(f64, f64)], hermitian: bool) -> SparseOperator {
    let mut trip = Vec::new();
    let mut k = 0;
    let mut next = || {
        let v = vals[k % vals.len()];
        k += 1;
        c(v.0, v.1)
    };
    for i in 0..n {
        let d = next();
        trip.push((i, i, if hermitian { c(d.re, 0.0) } else { d }));
        for j in [i + 1, (i * 7 + 3) % n] {
            if j <= i || j >= n {
                continue;
            }
            let z = next();
            trip.push((i, j, z));
            trip.push((j, i, if hermitian { z.conj() } else { next() }));
        }
    }
    let sym = if hermitian {
        Symmetry::Hermitian
    } else {
        Symmetry::General
    };
    SparseOperator::from_triplets(n, &trip, sym).unwrap()
}

fn pairs(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
}

fn max_dev_from_identity(a: &DenseMatrix) -> f64 {
    a.sub(&DenseMatrix::identity(a.rows())).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_times_inverse_is_identity(entries in pairs(36), scale in 0.01f64..10.0, arg in 0.0f64..6.3) {
        let t = dense(6, &entries);
        let z = C64::from_polar(scale / t.norm1().max(1e-300), arg);
        let p = expm_dense(&t, z).unwrap().matmul(&expm_dense(&t, -z).unwrap()).unwrap();
        prop_assert!(max_dev_from_identity(&p) <= 1e-11 * p.norm1().max(1.0));
    }

    #[test]
    fn phi_zero_is_first_column_of_exp(entries in pairs(25), scale in 0.0f64..8.0) {
        let t = dense(5, &entries);
        let z = c(0.0, -scale);
        let col = expm_dense(&t, z).unwrap().column(0);
        let phi = phi_dense(&t, z, 0).unwrap();
        for (a, b) in col.iter().zip(&phi) {
            prop_assert!((a - b).norm() <= 1e-13 * norm2(&col).max(1.0));
        }
    }

    #[test]
    fn phi_scalar_recurrence(re in -5.0f64..5.0, im in -5.0f64..5.0, p in 1usize..6) {
        let z = c(re, im);
        prop_assume!(z.norm() > 0.05);
        let fact: f64 = (1..p).map(|k| k as f64).product();
        let rhs = (phi_scalar(z, p - 1) - 1.0 / fact) / z;
        let lhs = phi_scalar(z, p);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn tridiagonal_eigenvectors_are_orthonormal(d in prop::collection::vec(-3.0f64..3.0, 2..40), seed in any::<u64>()) {
        let n = d.len();
        let off: Vec<f64> = (0..n - 1).map(|k| ((seed >> (k % 60)) & 7) as f64 / 4.0 - 0.9).collect();
        let t = SymTridiagonal::new(d, off).unwrap();
        let e = symtrid_eig(&t).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|r| e.vector(r, i) * e.vector(r, j)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= n as f64 * 1e-13);
            }
        }
    }

    #[test]
    fn krylov_identities_on_general_operators(vals in pairs(300), seed in any::<u64>(), m in 2usize..=12) {
        let n = 40;
        let a = sparse(n, &vals, false);
        let v = random_unit_vector(n, seed);
        let dec = build_krylov(&a, &v, &KrylovConfig::new(m)).unwrap();
        prop_assume!(!dec.breakdown());
        let scale = dec.norm_estimate().max(1.0);
        prop_assert!(dec.identity_residual(&a) <= 1e-12 * scale);

        let t = dec.t_matrix();
        let mut e = vec![C64::new(0.0, 0.0); m];
        e[0] = c(1.0, 0.0);
        let mut aj = v.clone();
        for j in 0..m {
            if j + 1 < m {
                // e_m^* T^j e_1 vanishes below the Krylov degree
                prop_assert!(e[m - 1].norm() <= 1e-13 * scale.powi(j as i32));
            }
            let mut vt = vec![C64::new(0.0, 0.0); n];
            for (k, b) in dec.basis().iter().enumerate() {
                for r in 0..n {
                    vt[r] += b[r] * e[k];
                }
            }
            let diff: f64 = norm2(&aj.iter().zip(&vt).map(|(x, y)| x - y).collect::<Vec<_>>());
            prop_assert!(diff <= m as f64 * 1e-11 * scale.powi(j as i32));
            e = t.matvec(&e).unwrap();
            aj = a.matvec(&aj).unwrap();
        }
    }

    #[test]
    fn lanczos_and_arnoldi_agree(vals in pairs(200), seed in any::<u64>(), m in 2usize..=20) {
        let n = 60;
        let a = sparse(n, &vals, true);
        let v = random_unit_vector(n, seed);
        let base = KrylovConfig::new(m).with_reorthogonalization(Reorthogonalization::Full);
        let l = build_krylov(&a, &v, &base.with_mode(KrylovMode::Lanczos)).unwrap();
        let r = build_krylov(&a, &v, &base.with_mode(KrylovMode::Arnoldi)).unwrap();
        prop_assume!(!l.breakdown() && !r.breakdown());
        prop_assert!(l.t_matrix().sub(&r.t_matrix()).max_abs() <= 1e-10);
    }

    #[test]
    fn skew_hermitian_propagation_conserves_mass(vals in pairs(200), seed in any::<u64>(), m in 2usize..=30, t in 0.0f64..20.0) {
        let n = 60;
        let a = sparse(n, &vals, true);
        let v = random_unit_vector(n, seed);
        let dec = build_krylov(&a, &v, &KrylovConfig::new(m)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_i()).unwrap();
        prop_assert!((norm2(&ap.apply(t).unwrap()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn matrix_market_round_trip(vals in pairs(120), hermitian in any::<bool>()) {
        let a = sparse(25, &vals, hermitian);
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let b = read_matrix_market(buf.as_slice()).unwrap();
        let mut again = Vec::new();
        write_matrix_market(&b, &mut again).unwrap();
        prop_assert_eq!(&buf, &again);
        prop_assert_eq!(a.nnz(), b.nnz());
        prop_assert_eq!(a.symmetry(), b.symmetry());
        for (i, j, z) in a.triplets() {
            prop_assert_eq!(b.get(i, j), z);
        }
    }

    #[test]
    fn direct_step_inverts_era(seed in any::<u64>(), m in 2usize..=30, log_tol in -14.0f64..-2.0) {
        let a = free_hamiltonian(80).unwrap();
        let v = random_unit_vector(80, seed);
        let dec = build_krylov(&a, &v, &KrylovConfig::new(m)).unwrap();
        let tol = 10f64.powf(log_tol);
        let global = step_size_direct(&dec, tol, ErrorModel::GlobalBudget, None).unwrap();
        prop_assert!((era_value(&dec, global, 0) / tol - 1.0).abs() <= 1e-12);
        let local = step_size_direct(&dec, tol, ErrorModel::PerUnitStep, None).unwrap();
        prop_assert!((era_value(&dec, local, 0) / (local * tol) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn heuristic_step_halves_on_large_overshoot(dt in 1e-4f64..10.0, m in 1usize..40, log_tol in -12.0f64..-2.0) {
        let tol = 10f64.powf(log_tol);
        let est = 2f64.powi(m as i32) * tol;
        let next = step_size_heuristic(dt, est, tol, m, ErrorModel::GlobalBudget, 0.9).unwrap();
        prop_assert!((next / (0.9 * dt / 2.0) - 1.0).abs() <= 1e-13);
        let same = step_size_heuristic(dt, tol, tol, m, ErrorModel::GlobalBudget, 1.0).unwrap();
        prop_assert!((same / dt - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn corrected_bound_literal_formula(seed in any::<u64>(), m in 2usize..=20, t in 1e-3f64..4.0, p in 0usize..3) {
        let a = free_hamiltonian(60).unwrap();
        let v = random_unit_vector(60, seed);
        let dec = build_krylov(&a, &v, &KrylovConfig::new(m)).unwrap();
        let ap = Approximant::new(&dec, &a, Prefactor::minus_i(), ApproxKind::Corrected, p).unwrap();
        let next = ap.next_image().unwrap().norm;
        let ln = next.ln() + dec.tau_next().ln() + dec.log_gamma() + (m + 1) as f64 * t.ln()
            - krylov_expm::linalg::ln_factorial(m + p + 1);
        let got = era_corrected(&ap, t).unwrap().value;
        prop_assert!((got / ln.exp() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn era_bounds_heat_error(seed in any::<u64>(), m in 2usize..=25, t in 1e-2f64..30.0) {
        let n = 120;
        let a = free_hamiltonian(n).unwrap();
        let v = random_unit_vector(n, seed);
        let dec = build_krylov(&a, &v, &KrylovConfig::new(m)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_one()).unwrap().with_nonexpansive(true);
        let exact = krylov_expm::oracle::oracle_laplacian(n, Prefactor::minus_one(), t, &v).unwrap();
        let err = krylov_expm::oracle::distance(&ap.apply(t).unwrap(), &exact);
        let bound = era(&ap, t).unwrap();
        prop_assert!(bound.is_proven_upper_bound);
        prop_assert!(bound.value >= err * (1.0 - 1e-10) - 1e-14);
    }

    #[test]
    fn prefactor_round_trips(arg in -3.2f64..3.2) {
        let s = Prefactor::new(C64::from_polar(1.0, arg)).unwrap();
        let raw: [f64; 2] = s.into();
        prop_assert_eq!(Prefactor::try_from(raw).unwrap(), s);
        prop_assert!(Prefactor::new(C64::from_polar(1.1, arg)).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn era_budget_holds_by_summation(seed in any::<u64>(), m in 4usize..=20, steps in 1usize..8, log_tol in -10.0f64..-4.0) {
        let a = free_hamiltonian(100).unwrap();
        let v = random_unit_vector(100, seed);
        let tol = 10f64.powf(log_tol);
        let ctrl = ControllerSpec::new(ControllerKind::DirectEraLocal, tol);
        let res = propagate(&a, Prefactor::minus_i(), &v, Horizon::Steps(steps), &KrylovConfig::new(m), &ctrl, EstimatorKind::Era, true).unwrap();
        prop_assert!(res.all_proven());
        prop_assert!(res.accumulated_bound <= tol * res.total_time() * (1.0 + 1e-12));
        let again = propagate(&a, Prefactor::minus_i(), &v, Horizon::Steps(steps), &KrylovConfig::new(m), &ctrl, EstimatorKind::Era, true).unwrap();
        prop_assert_eq!(&res.w_final, &again.w_final);
    }
}

fn to_nalgebra(a: &DenseMatrix) -> nalgebra::DMatrix<C64> {
    nalgebra::DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.as_slice()[i * a.cols() + j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exp_agrees_with_nalgebra(entries in pairs(49), scale in 0.01f64..12.0, arg in 0.0f64..6.3) {
        let t = dense(7, &entries);
        let z = C64::from_polar(scale / t.norm1().max(1e-300), arg);
        let ours = expm_dense(&t, z).unwrap();
        let theirs = (to_nalgebra(&t) * z).exp();
        let scale = theirs.iter().fold(1.0f64, |m, x| m.max(x.norm()));
        for i in 0..7 {
            for j in 0..7 {
                prop_assert!((ours.as_slice()[i * 7 + j] - theirs[(i, j)]).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn hermitian_eigenvalues_agree_with_nalgebra(entries in pairs(64)) {
        let b = dense(8, &entries);
        let h = b.add(&b.adjoint());
        let ours = krylov_expm::linalg::hermitian_eigvals(&h).unwrap();
        let mut theirs: Vec<f64> = to_nalgebra(&h).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-12 * h.norm1().max(1.0));
        }
    }
}
