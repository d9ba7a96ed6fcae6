use height2::checks::{golden, lseries_check, run_criterion, truncate_text, Config, Session, Status, CRITERIA};
use height2::Error;

#[test]
fn golden_fixture_has_the_pinned_values() {
    let g = golden();
    assert_eq!(g["minus_two_series"], "t^4");
    assert_eq!(g["l_alpha2"], "1+z^6");
    assert!(g.values().all(|v| !v.is_empty()));
}

#[test]
fn truncation_of_printed_series() {
    let s = "1+zeta*z^2+zeta^2*z^4+zeta*z^5+z^6";
    assert_eq!(truncate_text(s, 5), "1+zeta*z^2+zeta^2*z^4");
    assert_eq!(truncate_text("zeta+z", 1), "zeta");
    assert_eq!(truncate_text("z^3", 2), "0");
}

#[test]
fn configuration_ranges() {
    assert!(Session::new(Config::default()).is_ok());
    let bad = Config { precision: 16, ..Config::default() };
    assert!(matches!(Session::new(bad), Err(Error::Precision(_))));
    let bad = Config { depth: 20, ..Config::default() };
    assert!(matches!(Session::new(bad), Err(Error::InvalidArgument(_))));
}

#[test]
fn criteria_ids_are_unique_and_ordered() {
    let mut ids = CRITERIA.to_vec();
    ids.sort();
    ids.dedup();
    assert_eq!(ids, CRITERIA.to_vec());
    let s = Session::new(Config::default()).unwrap();
    assert!(run_criterion(&s, 0).is_err());
    assert!(run_criterion(&s, 14).is_err());
}

#[test]
fn cheap_criteria_pass_and_serialize() {
    let s = Session::new(Config { seed: 3, ..Config::default() }).unwrap();
    for k in [1, 2, 3, 4, 5, 11, 13] {
        let r = run_criterion(&s, k).unwrap();
        assert_eq!(r.status, Status::Pass, "{}", r.to_line());
        let json = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 5);
        for key in ["check", "status", "expected", "actual", "ms"] {
            assert!(keys.contains(&key));
        }
        assert_eq!(json["status"], "pass");
    }
}

#[test]
fn lseries_rejects_bad_input() {
    let s = Session::new(Config::default()).unwrap();
    assert!(matches!(lseries_check(&s, "beta", 8), Err(Error::InvalidArgument(_))));
    assert!(matches!(lseries_check(&s, "alpha2", 0), Err(Error::Precision(_))));
}
