use height2::cubical::{delta, is_real, twisted_action, Cannibalistic, DeltaReading, RealityRelations};
use height2::formal_group::{FormalGroup, WeierstrassCurve};
use height2::stabilizer::{quaternion_to_series, CommutatorConvention, GaloisElement, NamedElements};
use height2::{MultiSeries, UniSeries, GF4};
use proptest::prelude::*;
use std::sync::OnceLock;

struct Setup {
    fg: FormalGroup<GF4>,
    named: NamedElements,
    can: Cannibalistic,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let fg = FormalGroup::build(WeierstrassCurve::c0(), 128).unwrap();
        let named = NamedElements::build(&fg, 8, CommutatorConvention::Standard, 1).unwrap();
        let can = Cannibalistic::new(&fg, 34).unwrap();
        Setup { fg, named, can }
    })
}

fn small_fg() -> &'static FormalGroup<GF4> {
    static FG: OnceLock<FormalGroup<GF4>> = OnceLock::new();
    FG.get_or_init(|| FormalGroup::build(WeierstrassCurve::c0(), 32).unwrap())
}

fn unit_series(deg: usize) -> impl Strategy<Value = UniSeries<GF4>> {
    prop::collection::vec((0u8..4).prop_map(GF4::from_bits), deg + 1).prop_map(move |mut c| {
        c[0] = GF4::ONE;
        UniSeries::from_coeffs(c, deg + 1)
    })
}

fn as_multi(l: &UniSeries<GF4>, deg: usize) -> MultiSeries<GF4> {
    let terms: Vec<_> = (0..=deg).map(|i| ([i as u16, 0, 0, 0], l.coeff(i))).collect();
    MultiSeries::from_terms(1, deg, &terms)
}

fn l(g: &GaloisElement, order: usize) -> UniSeries<GF4> {
    let s = setup();
    s.can.l_series(&s.fg, g, order, DeltaReading::Normalized).unwrap().l
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn delta_is_multiplicative(f in unit_series(12), g in unit_series(12)) {
        let fg = small_fg();
        let (fm, gm) = (as_multi(&f, 12), as_multi(&g, 12));
        let lhs = delta(&(&fm * &gm), fg).unwrap();
        let rhs = &delta(&fm, fg).unwrap() * &delta(&gm, fg).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn delta_of_a_real_structure_is_real(h in unit_series(12)) {
        let fg = small_fg();
        let iota = fg.iota().truncate(13);
        let real = (&h * &h.compose(&iota).unwrap()).truncate(13);
        prop_assert!(is_real(&real, fg).unwrap());
        let d = delta(&as_multi(&real, 12), fg).unwrap();
        let flipped = d.map_each_var(&[iota.clone(), iota]).unwrap();
        prop_assert_eq!(flipped, d);
    }
}

#[test]
fn finite_order_elements_have_trivial_series() {
    let s = setup();
    for g in [s.named.omega, s.named.i, s.named.j, s.named.k] {
        assert_eq!(l(&g, 8), UniSeries::one(8));
    }
}

#[test]
fn series_form_a_cocycle() {
    let s = setup();
    let gens = [s.named.alpha2, s.named.comm_i_alpha, s.named.comm_j_alpha];
    let ls: Vec<UniSeries<GF4>> = gens.iter().map(|g| l(g, 8)).collect();
    for (g, lg) in gens.iter().zip(&ls) {
        for (h, lh) in gens.iter().zip(&ls) {
            let hs = quaternion_to_series(h, &s.fg, 8).unwrap();
            let rhs = (lh * &lg.compose(&hs).unwrap()).truncate(8);
            assert_eq!(l(&(*g * *h), 8), rhs);
        }
    }
}

#[test]
fn twisted_action_is_triangular() {
    let s = setup();
    let rel = RealityRelations::build(&s.fg, 12).unwrap();
    for g in [s.named.alpha2, s.named.comm_i_alpha, s.named.comm_j_alpha] {
        let lg = l(&g, 8);
        let series = quaternion_to_series(&g, &s.fg, 8).unwrap();
        for i in 1..=3 {
            let b = twisted_action(&lg, &series, 2 * i, &rel).unwrap();
            for (e, _) in b.terms() {
                assert!(e.iter().skip(2 * i).all(|k| *k == 0), "b_{} image leaves the filtration", 2 * i);
            }
        }
    }
}

#[test]
fn raw_reading_breaks_the_finite_order_check() {
    let s = setup();
    let raw = s.can.l_series(&s.fg, &s.named.omega, 8, DeltaReading::Raw);
    assert!(!raw.is_ok_and(|r| r.l == UniSeries::one(8)));
}
