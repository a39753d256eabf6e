mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarkisov_core::certify::{certificate, emit, load, to_dot, verify, verify_text};
use sarkisov_core::engine::untwist;
use sarkisov_core::error::Error;
use sarkisov_core::instance::{gen_cremona, gen_dejonquieres, gen_product_switch, gen_random, gen_wklt_fiber, InstanceFile, Problem};
use sarkisov_core::rational::parse_q;
use serde_json::Value;

use common::{get_mut, leaves, mutate};

fn cert_text(file: InstanceFile) -> String {
    let p = Problem::new(file).unwrap();
    let fac = untwist(&p).unwrap();
    emit(&certificate(&p, &fac).unwrap())
}

#[test]
fn cremona_round_trip_and_verify() {
    let text = cert_text(gen_cremona());
    let cert = load(&text).unwrap();
    assert_eq!(emit(&cert), text);
    assert_eq!(verify_text(&text).unwrap(), Ok(()));
    assert_eq!(cert.link_count, 4);
    assert_eq!(cert_text(gen_cremona()), text);
}

#[test]
fn fixtures_verify() {
    for file in [gen_dejonquieres(3).unwrap(), gen_product_switch(), gen_wklt_fiber(), gen_random(6, 42).unwrap()] {
        let text = cert_text(file);
        assert_eq!(verify_text(&text).unwrap(), Ok(()));
    }
}

#[test]
fn altered_mu_is_caught_at_its_link() {
    let mut cert = load(&cert_text(gen_cremona())).unwrap();
    cert.links[1].degree_after.mu = parse_q("5/4").unwrap();
    let failure = verify(&cert).unwrap_err();
    assert_eq!(failure.link, Some(1));
}

#[test]
fn reordered_links_are_rejected() {
    let mut cert = load(&cert_text(gen_cremona())).unwrap();
    cert.links.swap(1, 2);
    assert!(verify(&cert).is_err());
}

#[test]
fn malformed_input() {
    let text = cert_text(gen_cremona());
    assert!(matches!(load(&text[..text.len() / 2]), Err(Error::Schema(_))));
    let wrong = text.replace("sarkisov-cert/1", "sarkisov-cert/2");
    assert!(matches!(verify_text(&wrong), Err(Error::Schema(_))));
    let spaced = text.replacen("{", "{ ", 1);
    assert!(verify_text(&spaced).unwrap().is_err());
}

#[test]
fn dot_output() {
    let cert = load(&cert_text(gen_cremona())).unwrap();
    let dot = to_dot(&cert);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("->").count(), 4);
    assert!(dot.contains("label=\"III\""));
}

#[test]
fn single_field_mutations_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let texts = [cert_text(gen_cremona()), cert_text(gen_random(5, 3).unwrap())];
    for round in 0..60 {
        let text = &texts[round % texts.len()];
        let base: Value = serde_json::from_str(text).unwrap();
        let mut paths = Vec::new();
        leaves(&base, &mut Vec::new(), &mut paths);
        let path = &paths[rng.gen_range(0..paths.len())];
        let mut v = base.clone();
        let filler = base["instance"]["h_w"].clone();
        mutate(get_mut(&mut v, path), &mut rng, &filler);
        let rejected = match serde_json::from_value(v) {
            Err(_) => true,
            Ok(cert) => verify_text(&emit(&cert)).map_or(true, |r| r.is_err()),
        };
        assert!(rejected, "mutation at {path:?} accepted");
    }
}
