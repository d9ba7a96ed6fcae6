use height2::comodule::{
    filtration_semidirect_group, random_instance, random_sigma_comodule, run_trial, sigma_image_check,
    sigma_round_trip, stabilizer_quotient, FiniteGroup, GaloisQuotient, GroupCoalgebra,
};
use height2::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn coalgebra() -> &'static GroupCoalgebra {
    static C: OnceLock<GroupCoalgebra> = OnceLock::new();
    C.get_or_init(|| GroupCoalgebra::new(filtration_semidirect_group().unwrap()).unwrap())
}

fn galois() -> &'static GaloisQuotient {
    static G: OnceLock<GaloisQuotient> = OnceLock::new();
    G.get_or_init(|| GaloisQuotient::new(2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_instances_are_consistent(seed in any::<u64>()) {
        let c = coalgebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(c, &mut rng, 96).unwrap();
        inst.comodule.validate(c).unwrap();
        let o = run_trial(c, &inst, &mut rng).unwrap();
        prop_assert!(o.consistent(), "{:?} for subgroup orders {:?}", o, inst.subgroup_orders);
        prop_assert_eq!(o.splittable, inst.cofree());
    }

    #[test]
    fn sigma_comodules_round_trip(seed in any::<u64>(), dim in 1usize..=12) {
        let gq = galois();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_sigma_comodule(gq, &mut rng, dim);
        prop_assert!(sigma_round_trip(gq, &m).unwrap());
    }
}

#[test]
fn filtrations_are_dual_and_pointed() {
    let mut cs = vec![coalgebra().clone()];
    for n in [1, 2, 3, 4, 6, 8, 12] {
        cs.push(GroupCoalgebra::new(FiniteGroup::cyclic(n).unwrap()).unwrap());
    }
    for depth in 2..=3 {
        cs.push(GroupCoalgebra::new(stabilizer_quotient(depth).unwrap().0).unwrap());
    }
    for c in &cs {
        assert!(c.duality_holds(), "order {}", c.order());
        assert_eq!(c.levels()[0].len(), c.characters().len());
        assert_eq!(*c.level_dims().last().unwrap(), c.order());
    }
}

#[test]
fn coradical_needs_group_likes() {
    let c = GroupCoalgebra::new(FiniteGroup::cyclic(5).unwrap());
    assert!(matches!(c, Err(Error::Axiom(_))));
}

#[test]
fn regular_and_trivial_comodules() {
    let c = coalgebra();
    assert!(c.regular_comodule().splittability(c).unwrap().splittable());
    let z2 = GroupCoalgebra::new(FiniteGroup::cyclic(2).unwrap()).unwrap();
    let rep = z2.trivial_comodule().splittability(&z2).unwrap();
    assert!(!rep.splittable());
    let w = rep.witness().unwrap();
    assert_eq!((w.n, w.source_dim, w.target_dim), (1, 0, 1));
}

#[test]
fn sigma_image_is_the_twisted_pair() {
    assert!(sigma_image_check(&GaloisQuotient::new(1).unwrap()).unwrap());
    assert!(sigma_image_check(galois()).unwrap());
}
