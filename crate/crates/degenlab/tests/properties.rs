//! Property tests for the exact core: rational functions, linear algebra,
//! isomorphism invariants, contractions and the claim ledger.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use degenlab::algebra::StructureTensor;
use degenlab::catalog::{self, CatalogName, T22Class};
use degenlab::contraction::{dominates, iw_contract, iw_max, rank_sequence};
use degenlab::degeneration::{random_orbit_element, verify_degeneration, DegenerationCertificate, ParameterizedBasis};
use degenlab::exactnum::{ratio, Polynomial, Rational, RationalFunction};
use degenlab::linalg::{nilpotent_partition, Matrix, Partition, QMatrix};
use degenlab::par::{self, trial_rng};
use degenlab::verification_db::{self, RunOptions};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn qvec(v: &[i64]) -> Vec<Rational> {
    v.iter().copied().map(q).collect()
}

fn pool() -> &'static [(String, StructureTensor)] {
    static POOL: OnceLock<Vec<(String, StructureTensor)>> = OnceLock::new();
    POOL.get_or_init(|| {
        catalog::test_matrix_algebras()
            .expect("catalog instantiates")
            .into_iter()
            .map(|((name, n), a)| (format!("{name}@{n}"), a))
            .collect()
    })
}

fn random_vec(n: usize, seed: u64, stream: u64) -> Vec<Rational> {
    let mut rng = trial_rng(seed, stream);
    (0..n).map(|_| q(rng.gen_range(-9..=9))).collect()
}

fn poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(-5i64..=5, 0..4).prop_map(|c| Polynomial::from_coeffs(qvec(&c)))
}

/// Denominator with nonzero constant term, so evaluation at 0 is defined.
fn regular_rf() -> impl Strategy<Value = RationalFunction> {
    (poly(), prop_oneof![1i64..=4, -4i64..=-1], prop::collection::vec(-3i64..=3, 0..3)).prop_map(|(num, c0, rest)| {
        let mut d = vec![c0];
        d.extend(rest);
        RationalFunction::new(num, Polynomial::from_coeffs(qvec(&d))).unwrap()
    })
}

fn jordan(p: &Partition) -> QMatrix {
    let n = p.size();
    let mut j = QMatrix::zeros(n, n);
    let mut start = 0;
    for &len in p.parts() {
        for r in start + 1..start + len {
            j.set(r, r - 1, Rational::one());
        }
        start += len;
    }
    j
}

fn partition() -> impl Strategy<Value = Partition> {
    prop::collection::vec(1usize..=4, 1..4).prop_map(Partition::new)
}

fn small_matrix() -> impl Strategy<Value = QMatrix> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(-3i64..=3, c), r)
            .prop_map(|rows| QMatrix::from_rows(rows.iter().map(|r| qvec(r)).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn difference_vanishes_iff_equal(a in regular_rf(), b in regular_rf()) {
        prop_assert_eq!((&a - &b).is_zero(), a == b);
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn common_factors_cancel(a in regular_rf(), k in prop::collection::vec(-3i64..=3, 1..3)) {
        let k = Polynomial::from_coeffs(qvec(&k));
        prop_assume!(!k.is_zero());
        let b = RationalFunction::new(&a.num().clone() * &k, &a.den().clone() * &k).unwrap();
        prop_assert_eq!(&b, &a);
        let again = RationalFunction::new(a.num().clone(), a.den().clone()).unwrap();
        prop_assert_eq!(again, a);
    }

    #[test]
    fn evaluation_at_zero_is_a_ring_map(a in regular_rf(), b in regular_rf()) {
        let (a0, b0) = (a.eval_at_zero().unwrap(), b.eval_at_zero().unwrap());
        prop_assert_eq!((&a + &b).eval_at_zero().unwrap(), &a0 + &b0);
        prop_assert_eq!((&a - &b).eval_at_zero().unwrap(), &a0 - &b0);
        prop_assert_eq!((&a * &b).eval_at_zero().unwrap(), &a0 * &b0);
    }

    #[test]
    fn rank_nullity(m in small_matrix()) {
        prop_assert_eq!(m.rank() + m.kernel_basis().dim(), m.cols());
        for v in m.kernel_basis().basis() {
            prop_assert!(m.mul_vec(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn inverse_round_trip(n in 1usize..=6, seed in any::<u64>()) {
        let g = random_orbit_element(n, seed, 1);
        let gi = g.invert().unwrap();
        prop_assert_eq!(g.mul(&gi).unwrap(), QMatrix::identity(n));
        prop_assert_eq!(gi.mul(&g).unwrap(), QMatrix::identity(n));
    }

    #[test]
    fn jordan_type_survives_conjugation(p in partition(), seed in any::<u64>(), t in 0u64..8) {
        let j = jordan(&p);
        let g = random_orbit_element(p.size(), seed, t);
        let m = g.mul(&j).unwrap().mul(&g.invert().unwrap()).unwrap();
        prop_assert_eq!(nilpotent_partition(&m).unwrap(), p.clone());
        for k in 0..=p.size() {
            let expect: usize = p.parts().iter().map(|&l| l.saturating_sub(k)).sum();
            prop_assert_eq!(m.pow(k).rank(), expect, "power {}", k);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn invariants_survive_change_of_basis(idx in any::<prop::sample::Index>(), seed in any::<u64>(), t in 0u64..6) {
        // polarized Engel checks grow fast with n; eight and up is left to the acceptance run
        let small: Vec<_> = pool().iter().filter(|(_, a)| a.dim() <= 7).collect();
        let (name, a) = small[idx.index(small.len())];
        let n = a.dim();
        let g = random_orbit_element(n, seed, t);
        let b = a.change_basis(&g).unwrap();
        prop_assert_eq!(a.square().dim(), b.square().dim(), "{}", name);
        prop_assert_eq!(a.annihilator().dim(), b.annihilator().dim(), "{}", name);
        prop_assert_eq!(a.nilpotency_index(), b.nilpotency_index(), "{}", name);
        prop_assert_eq!(a.engel_degree(n), b.engel_degree(n), "{}", name);
        prop_assert_eq!(a.identity_flags(), b.identity_flags(), "{}", name);
        prop_assert_eq!(a.derivation_dim(), b.derivation_dim(), "{}", name);

        let x = random_vec(n, seed, 100 + t);
        let gx = g.mul_vec(&x);
        prop_assert_eq!(rank_sequence(a, &x).unwrap(), rank_sequence(&b, &gx).unwrap(), "{}", name);
    }

    #[test]
    fn jacobi_flag_matches_spot_checks(idx in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let (name, a) = &pool()[idx.index(pool().len())];
        prop_assume!(a.is_jacobi());
        let n = a.dim();
        let [x, y, z] = [0, 1, 2].map(|s| random_vec(n, seed, s));
        let term = |u: &[Rational], v: &[Rational], w: &[Rational]| a.product(&a.product(u, v).unwrap(), w).unwrap();
        let (p1, p2, p3) = (term(&x, &y, &z), term(&y, &z, &x), term(&z, &x, &y));
        for k in 0..n {
            prop_assert!((&(&p1[k] + &p2[k]) + &p3[k]).is_zero(), "{} coordinate {}", name, k);
        }
    }

    #[test]
    fn engel_degree_kills_every_sampled_operator(idx in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let (name, a) = &pool()[idx.index(pool().len())];
        let n = a.dim();
        let d = a.engel_degree(n + 1).expect("catalog algebras are Engel");
        let x = random_vec(n, seed, 0);
        prop_assert!(a.left_mult_matrix(&x).unwrap().pow(d).is_zero(), "{} degree {}", name, d);
    }

    #[test]
    fn contraction_is_a_degeneration(idx in any::<prop::sample::Index>(), m in 1usize..8, seed in any::<u64>()) {
        let (name, a) = &pool()[idx.index(pool().len())];
        let n = a.dim();
        prop_assume!(m < n);
        // shuffle coordinates so the contracted subalgebra varies
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = trial_rng(seed, 0);
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let a = a.permute(&perm);
        let Ok(c) = iw_contract(&a, m) else { return Ok(()) };
        let diag = (0..n)
            .map(|i| if i < m { RationalFunction::one() } else { RationalFunction::t() })
            .collect();
        let cert = DegenerationCertificate {
            source: a.clone(),
            target: c.clone(),
            basis: ParameterizedBasis::new(Matrix::diagonal(diag)).unwrap(),
            provenance: String::new(),
        };
        prop_assert!(verify_degeneration(&cert).passed(), "{} m={}", name, m);
        prop_assert!(c.square().dim() <= a.square().dim());
        prop_assert!(c.annihilator().dim() >= a.annihilator().dim());
    }

    #[test]
    fn generic_combination_dominates(idx in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let (name, a) = &pool()[idx.index(pool().len())];
        let n = a.dim();
        let (b, c) = (random_vec(n, seed, 0), random_vec(n, seed, 1));
        let (rb, rc) = (rank_sequence(a, &b).unwrap(), rank_sequence(a, &c).unwrap());
        let mut rng = trial_rng(seed, 2);
        let found = (0..20).any(|_| {
            let alpha = q(rng.gen_range(-50..=50));
            let v: Vec<Rational> = c.iter().zip(&b).map(|(ci, bi)| ci + &(&alpha * bi)).collect();
            let r = rank_sequence(a, &v).unwrap();
            dominates(&r, &rb) && dominates(&r, &rc)
        });
        prop_assert!(found, "{}: {} and {}", name, rb, rc);
    }
}

fn random_lower_triangular(n: usize, seed: u64) -> QMatrix {
    let mut rng = trial_rng(seed, 0);
    let mut g = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = if i == j {
                ratio(rng.gen_range(1..=4), rng.gen_range(1..=3))
            } else {
                ratio(rng.gen_range(-6..=6), rng.gen_range(1..=3))
            };
            g.set(i, j, if i == j && rng.gen_bool(0.5) { -v } else { v });
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classifier_never_renames(which in 0usize..4, n in 6usize..=7, seed in any::<u64>()) {
        let name = ["T22", "T22_e23", "T22_e24", "T22_e34"][which];
        let want: CatalogName = name.parse().unwrap();
        let a = catalog::instantiate(&want, n).unwrap().change_basis(&random_lower_triangular(n, seed)).unwrap();
        match catalog::classify_t22(&a, 42, 32).unwrap() {
            T22Class::Name(got) => prop_assert_eq!(got, want),
            T22Class::NeedsExtension => {}
            other => prop_assert!(false, "{}@{}: {}", name, n, other),
        }
    }
}

#[test]
fn catalog_tables_have_unit_coefficients() {
    for (name, a) in pool() {
        for (_, v) in a.nonzero_products() {
            assert!(v.iter().all(|x| x.is_zero() || x.abs().is_one()), "{name}: {v:?}");
        }
    }
}

#[test]
fn ledger_certificates_respect_closed_invariants() {
    let ledger = verification_db::shipped_ledger().unwrap();
    let problems: Vec<String> = par::map_slice(&ledger.certificates, |c| {
        let cert = c.certificate().ok()?;
        if !verify_degeneration(&cert).passed() {
            return Some(format!("{} does not verify", c.id));
        }
        let (s, t) = (&cert.source, &cert.target);
        let ok = s.square().dim() >= t.square().dim()
            && s.annihilator().dim() <= t.annihilator().dim()
            && dominates(&iw_max(s, 42, 200).ok()?.sequence, &iw_max(t, 42, 200).ok()?.sequence);
        (!ok).then(|| format!("{} at n={}", c.id, c.n))
    })
    .into_iter()
    .flatten()
    .collect();
    assert!(problems.is_empty(), "{problems:?}");
}

#[test]
fn report_bytes_depend_only_on_seed() {
    let ledger = verification_db::shipped_ledger().unwrap();
    let opts = RunOptions { seed: 9, trials: 30, dims: Some(BTreeSet::from([5, 6])), probe_samples: 20 };
    let a = verification_db::run_ledger_with(&ledger, &opts).to_json();
    let b = verification_db::run_ledger_with(&ledger, &opts).to_json();
    assert_eq!(a, b);
}
