use height2::base_rings::{hensel_sqrt, mahler_binomial, teichmuller};
use height2::formal_group::{FormalGroup, WeierstrassCurve};
use height2::poly::Poly;
use height2::spin_classes::{self as spin, klein_mul, GroupAlgebraElt, KleinAction};
use height2::stabilizer::{
    digit_profile, quaternion_to_series, CommutatorConvention, GaloisElement, NamedElements, Quaternion,
};
use height2::{PadicInt, UniSeries, WittInt, GF4};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

const N: u32 = 8;

fn gf4() -> impl Strategy<Value = GF4> {
    (0u8..4).prop_map(GF4::from_bits)
}

fn witt() -> impl Strategy<Value = WittInt> {
    (0i64..256, 0i64..256).prop_map(|(a, b)| WittInt::new(a, b, N))
}

fn uni(prec: usize, constant: Option<GF4>) -> impl Strategy<Value = UniSeries<GF4>> {
    prop::collection::vec(gf4(), prec).prop_map(move |mut c| {
        if let Some(a) = constant {
            c[0] = a;
        }
        UniSeries::from_coeffs(c, prec)
    })
}

/// Series with zero constant term and unit linear term.
fn invertible_uni(prec: usize) -> impl Strategy<Value = UniSeries<GF4>> {
    (uni(prec, Some(GF4::ZERO)), (1u8..4).prop_map(GF4::from_bits)).prop_map(|(mut s, a)| {
        s.set(1, a);
        s
    })
}

fn fg() -> &'static FormalGroup<GF4> {
    static FG: OnceLock<FormalGroup<GF4>> = OnceLock::new();
    FG.get_or_init(|| FormalGroup::build(WeierstrassCurve::c0(), 64).unwrap())
}

fn named() -> &'static NamedElements {
    static NE: OnceLock<NamedElements> = OnceLock::new();
    NE.get_or_init(|| {
        let fg = FormalGroup::build(WeierstrassCurve::c0(), 128).unwrap();
        NamedElements::build(&fg, N, CommutatorConvention::Standard, 1).unwrap()
    })
}

fn klein() -> &'static KleinAction {
    static K: OnceLock<KleinAction> = OnceLock::new();
    K.get_or_init(|| KleinAction::build(fg(), named()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frobenius_is_an_involution_fixing_the_integers(x in witt(), a in 0i64..256) {
        prop_assert_eq!(x.conj().conj(), x);
        let p = WittInt::from_padic(PadicInt::new(a, N));
        prop_assert_eq!(p.conj(), p);
        prop_assert_eq!(x.conj() == x, x.b().residue() == 0);
    }

    #[test]
    fn reduction_is_a_ring_morphism(x in witt(), y in witt()) {
        prop_assert_eq!((x + y).reduce_mod2(), x.reduce_mod2() + y.reduce_mod2());
        prop_assert_eq!((x * y).reduce_mod2(), x.reduce_mod2() * y.reduce_mod2());
    }

    #[test]
    fn teichmuller_is_a_multiplicative_section(a in gf4(), b in gf4()) {
        prop_assert_eq!(teichmuller(a, N).reduce_mod2(), a);
        prop_assert_eq!(teichmuller(a * b, N), teichmuller(a, N) * teichmuller(b, N));
    }

    #[test]
    fn hensel_roots_square_to_the_target(k in 0i64..32) {
        let t = PadicInt::new(8 * k + 1, N);
        let r = hensel_sqrt(t, 1).unwrap();
        let s = hensel_sqrt(t, 3).unwrap();
        let m = r.precision();
        prop_assert_eq!((r * r).reduce(m), t.reduce(m));
        prop_assert_eq!(s.reduce(m), (-r).reduce(m));
    }

    #[test]
    fn mahler_pascal_rule(k in 1u64..6, n in 0i64..100) {
        let a = mahler_binomial(k, PadicInt::new(n + 1, 16)).unwrap();
        let b = mahler_binomial(k, PadicInt::new(n, 16)).unwrap();
        let c = mahler_binomial(k - 1, PadicInt::new(n, 16)).unwrap();
        let p = a.precision().min(b.precision()).min(c.precision());
        prop_assert_eq!(a.reduce(p), (b + c).reduce(p));
    }

    #[test]
    fn composition_is_associative(f in invertible_uni(20), g in invertible_uni(20), h in invertible_uni(20)) {
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn reversion_is_a_two_sided_inverse(f in invertible_uni(24)) {
        let r = f.reversion().unwrap();
        prop_assert_eq!(f.compose(&r).unwrap(), UniSeries::var(24));
        prop_assert_eq!(r.compose(&f).unwrap(), UniSeries::var(24));
    }

    #[test]
    fn two_adic_powers_are_exponential(u in uni(34, Some(GF4::ONE)), e in 0i64..64, f in 0i64..64) {
        let p = |k: i64| PadicInt::new(k, 16);
        let ue = u.two_adic_power(p(e)).unwrap();
        let uf = u.two_adic_power(p(f)).unwrap();
        prop_assert_eq!(u.two_adic_power(p(e + f)).unwrap(), &ue * &uf);
        prop_assert_eq!(ue.two_adic_power(p(f)).unwrap(), u.two_adic_power(p(e * f)).unwrap());
    }

    #[test]
    fn frobenius_square_matches_product(f in uni(30, None)) {
        prop_assert_eq!(f.square_frobenius().unwrap().truncate(30), (&f * &f).truncate(30));
    }

    #[test]
    fn m_series_are_additive_and_multiplicative(m in -4i64..=4, n in -4i64..=4) {
        let g = fg();
        let (sm, sn) = (g.m_series(m).unwrap(), g.m_series(n).unwrap());
        prop_assert_eq!(g.add(&sm, &sn).unwrap(), g.m_series(m + n).unwrap());
        prop_assert_eq!(sm.compose(&sn).unwrap(), g.m_series(m * n).unwrap());
    }

    #[test]
    fn law_inverse_cancels(a in invertible_uni(32)) {
        let g = fg();
        let neg = g.iota().truncate(32).compose(&a).unwrap();
        prop_assert!(g.add(&a, &neg).unwrap().is_zero());
    }

    #[test]
    fn determinant_and_series_are_morphisms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Quaternion::random_unit(&mut rng, N);
        let h = Quaternion::random_unit(&mut rng, N);
        prop_assert_eq!((g * h).det(), g.det() * h.det());
        let (ge, he) = (GaloisElement::from_quaternion(g), GaloisElement::from_quaternion(h));
        let sg = quaternion_to_series(&ge, fg(), 64).unwrap();
        let sh = quaternion_to_series(&he, fg(), 64).unwrap();
        prop_assert_eq!(quaternion_to_series(&(ge * he), fg(), 64).unwrap(), sg.compose(&sh).unwrap());
    }

    #[test]
    fn digit_profile_ignores_deep_digits(seed in any::<u64>(), eps in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GaloisElement::new(Quaternion::random_unit(&mut rng, N), eps);
        let mut d = vec![GF4::ONE, GF4::ZERO, GF4::ZERO];
        d.extend((3..14).map(|_| GF4::random(&mut rng)));
        let f = GaloisElement::from_quaternion(Quaternion::from_digits(&height2::stabilizer::TDigits(d), N));
        prop_assert_eq!(digit_profile(&(g * f)).unwrap(), digit_profile(&g).unwrap());
    }

    #[test]
    fn pairing_is_supported_on_matching_length(a in 0u16..=8, b in 0u16..=8, c in 0u16..=8, k in 0usize..=6) {
        prop_assume!(a + b + c <= 8);
        let m = Poly::monomial(GF4::ONE, [a, b, c, 0], 3);
        if (a + b + c) as usize != k {
            prop_assert_eq!(spin::pair_with_p(&m, k), GF4::ZERO);
        }
    }

    #[test]
    fn klein_action_is_compatible_with_pairing(seed in any::<u64>(), g in 0usize..4, h in 0usize..4, k in 0usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = spin::random_poly(&mut rng, 6);
        let act = klein();
        let lhs = act.pair_against(&act.act(g, &a), &GroupAlgebraElt::basis(h), k);
        let rhs = act.pair_against(&a, &GroupAlgebraElt::basis(klein_mul(g, h)), k);
        prop_assert_eq!(lhs, rhs);
        let (l, r) = spin::q8_det_identity(act, &a, k);
        prop_assert_eq!(l, r);
    }
}

#[test]
fn detection_matrix_is_reduced_and_invertible() {
    let [c, d, _] = spin::invariants_cde();
    let m = spin::detection_matrix(klein(), &(&c * &d.pow(3)), 4);
    let unit = [GF4::ONE, GF4::ZERO, GF4::ZERO, GF4::ZERO, GF4::ZERO];
    assert_eq!(m[0], unit);
    assert_eq!(m.iter().map(|r| r[0]).collect::<Vec<_>>(), unit);
    assert_ne!(height2::linalg::determinant(&m), GF4::ZERO);
}

#[test]
fn inverse_series_matches_closed_form() {
    let terms: Vec<(usize, GF4)> = (0..5).map(|k| (3 * (1 << k) - 2, GF4::ONE)).collect();
    assert_eq!(fg().iota().truncate(48), UniSeries::from_terms(&terms, 48));
}
