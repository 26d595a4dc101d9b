use proptest::prelude::*;
use sr1cs::data::{gen_synthetic_logistic, parse_libsvm, serialize_libsvm};
use sr1cs::linalg::{self, cholesky, eigvals_sym, inverse_spd, psd_dominates, SymMatrix};
use sr1cs::objectives::{fd_check, secant_vector, Objective};
use sr1cs::potentials::{logdet_potential, nu_measure, trace_potential};
use sr1cs::sr1_core::{
    apply_correction, correction_factor, sr1_inverse_update, sr1_update_matrix, FactoredResidual, HessianApprox,
};

/// `B Bᵀ + shift·I` from a flat `n × n` sample.
fn gram_plus(n: usize, entries: &[f64], shift: f64) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |i, j| {
        let dot: f64 = (0..n).map(|k| entries[i * n + k] * entries[j * n + k]).sum();
        dot + if i == j { shift } else { 0.0 }
    })
}

/// `(A, G, u)` with `A ≻ 0` and `G = A + CCᵀ` for a random `C` of width
/// `rank ≤ n`.
fn ordered_pair() -> impl Strategy<Value = (SymMatrix<f64>, SymMatrix<f64>, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(-1.0..1.0f64, n * n),
            prop::collection::vec(-1.0..1.0f64, n * n),
            1usize..=n,
            prop::collection::vec(-1.0..1.0f64, n),
        )
            .prop_map(|(n, b, c, rank, u)| {
                let a = gram_plus(n, &b, 0.1);
                let c_sub = SymMatrix::from_fn(n, |i, j| (0..rank).map(|k| c[i * n + k] * c[j * n + k]).sum());
                (a.clone(), a.add(&c_sub).unwrap(), u)
            })
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn eigenvalues_sum_to_trace_and_ascend(n in 1usize..=10, entries in prop::collection::vec(-2.0..2.0f64, 100)) {
        let m = SymMatrix::from_fn(n, |i, j| entries[i.max(j) * 10 + i.min(j)]);
        let ev = eigvals_sym(&m);
        prop_assert_eq!(ev.len(), n);
        prop_assert!(close(ev.iter().sum(), m.trace(), 1e-12));
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        let fro2: f64 = ev.iter().map(|x| x * x).sum();
        prop_assert!(close(fro2, m.frobenius_norm().powi(2), 1e-10));
    }

    #[test]
    fn cholesky_reconstructs_and_inverts((a, _, _) in ordered_pair()) {
        let l = cholesky(&a).unwrap();
        let back = l.reconstruct();
        prop_assert!(back.sub(&a).unwrap().max_abs() <= 1e-12 * a.max_abs());
        prop_assert!(a.inverse_residual(&inverse_spd(&a).unwrap()).unwrap() <= 1e-8);
    }

    #[test]
    fn sr1_update_stays_between_a_and_g((a, g, u) in ordered_pair()) {
        let (g1, out) = sr1_update_matrix(&a, &g, &u, 1e-8).unwrap();
        let scale = g.frobenius_norm();
        prop_assert!(psd_dominates(&a, &g1, 1e-9).unwrap());
        prop_assert!(psd_dominates(&g1, &g, 1e-9).unwrap());
        prop_assert!(trace_potential(&a, &g1).unwrap() <= trace_potential(&a, &g).unwrap() + 1e-12 * scale);
        if out.applied() {
            let gap = linalg::norm(&linalg::sub(&g1.mul_vec(&u), &a.mul_vec(&u)));
            prop_assert!(gap <= 1e-8 * scale * linalg::norm(&u));
            prop_assert!(out.denominator > 0.0);
        }
    }

    #[test]
    fn logdet_drop_matches_nu((a, g, u) in ordered_pair()) {
        let (g1, out) = sr1_update_matrix(&a, &g, &u, 1e-8).unwrap();
        prop_assume!(out.applied());
        let nu = nu_measure(&a, &g, &u).unwrap();
        prop_assume!(nu < 1e3);
        let drop = logdet_potential(&a, &g).unwrap() - logdet_potential(&a, &g1).unwrap();
        prop_assert!(close(drop, (nu * nu).ln_1p(), 1e-6), "drop {} nu {}", drop, nu);
    }

    #[test]
    fn inverse_update_tracks_direct_update((a, g, u) in ordered_pair()) {
        let (g1, out) = sr1_update_matrix(&a, &g, &u, 1e-8).unwrap();
        prop_assume!(out.applied());
        let nu = nu_measure(&a, &g, &u).unwrap();
        prop_assume!(nu < 1e3);
        let (h1, _) = sr1_inverse_update(&inverse_spd(&g).unwrap(), &u, &a.mul_vec(&u), 1e-8).unwrap();
        prop_assert!(g1.inverse_residual(&h1).unwrap() <= 1e-6);
    }

    #[test]
    fn factored_residual_matches_direct_update((a, g, u) in ordered_pair()) {
        let mut f = FactoredResidual::new(&g, &a).unwrap();
        prop_assert!(f.matrix().sub(&g.sub(&a).unwrap()).unwrap().max_abs() <= 1e-12 * g.max_abs());
        let (g1, out) = sr1_update_matrix(&a, &g, &u, 1e-8).unwrap();
        prop_assume!(out.applied() && out.denominator > 1e-6 * g.max_abs());
        let width = f.width();
        let (w, r) = f.residual(&u);
        let direct_r = g.sub(&a).unwrap().mul_vec(&u);
        prop_assert!(linalg::norm(&linalg::sub(&r, &direct_r)) <= 1e-12 * g.max_abs() * linalg::norm(&u).max(1.0));
        f.downdate(&w);
        prop_assert_eq!(f.width(), width - 1);
        let diff = f.matrix().sub(&g1.sub(&a).unwrap()).unwrap().max_abs();
        prop_assert!(diff <= 1e-8 * g.max_abs(), "diff {}", diff);
    }

    #[test]
    fn correction_keeps_inverse_pair(
        (_, g, _) in ordered_pair(),
        r_prev in 0.0..2.0f64,
        r_cur in 0.0..2.0f64,
        m_const in 0.0..3.0f64,
    ) {
        let a_k = correction_factor(r_prev, r_cur, m_const).unwrap();
        prop_assert!(a_k >= 1.0);
        let ha = HessianApprox::new(g).unwrap();
        let corrected = apply_correction(&ha, a_k).unwrap();
        prop_assert!(corrected.g.inverse_residual(&corrected.h).unwrap() <= 1e-8);
        prop_assert!(close(corrected.g.trace(), a_k * ha.g.trace(), 1e-14));
    }

    #[test]
    fn libsvm_round_trips(m in 1usize..20, n in 1usize..8, seed in any::<u64>(), separation in 0.0..3.0f64) {
        let d = gen_synthetic_logistic(m, n, seed, separation).unwrap();
        let text = serialize_libsvm(&d);
        let back = parse_libsvm(&text).unwrap();
        prop_assert_eq!(&back.labels, &d.labels);
        prop_assert_eq!(&back.features, &d.features);
        prop_assert_eq!(serialize_libsvm(&back), text);
    }

    #[test]
    fn logistic_derivatives_match_differences(seed in any::<u64>(), xs in prop::collection::vec(-2.0..2.0f64, 4)) {
        let p = gen_synthetic_logistic(30, 4, seed, 1.0).unwrap().logistic_problem(None).unwrap();
        let (ge, he) = fd_check(&p, &xs, 1e-5);
        prop_assert!(ge <= 1e-5 && he <= 1e-5, "{} {}", ge, he);
        let u: Vec<f64> = xs.iter().map(|x| 1e-3 * x).collect();
        let y = secant_vector(&p, &xs, &u);
        let naive = linalg::sub(&p.gradient(&linalg::axpy(&xs, 1.0, &u)), &p.gradient(&xs));
        prop_assert!(linalg::norm(&linalg::sub(&y, &naive)) <= 1e-10);
    }
}
