use proptest::prelude::*;
use smsp_core::ontology::{export_turtle, import_turtle, load_ontology, save_ontology, Ontology};
use smsp_testkit::fixture;
use smsp_testkit::fixtures::security_core;
use smsp_testkit::gen;

/// Rebuilds `o` inserting concepts and relations in the given orders.
fn reinsert(o: &Ontology, concept_order: &[usize], relation_order: &[usize]) -> Ontology {
    let concepts: Vec<_> = o.concepts().cloned().collect();
    let relations: Vec<_> = o.relations().cloned().collect();
    let mut out = Ontology::new(o.id.clone());
    for &i in concept_order {
        out.insert_concept(concepts[i].clone()).unwrap();
    }
    for &i in relation_order {
        out.insert_relation(relations[i].clone()).unwrap();
    }
    out
}

fn shuffled(o: Ontology) -> impl Strategy<Value = (Ontology, Vec<usize>, Vec<usize>)> {
    let c: Vec<usize> = (0..o.concept_count()).collect();
    let r: Vec<usize> = (0..o.relation_count()).collect();
    (Just(o), Just(c).prop_shuffle(), Just(r).prop_shuffle())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn save_load_identity(o in gen::ontology("x", 10)) {
        let bytes = save_ontology(&o);
        let back = load_ontology(&bytes).unwrap();
        prop_assert_eq!(&back, &o);
        prop_assert_eq!(save_ontology(&back), bytes);
    }

    #[test]
    fn serialization_ignores_insertion_order((o, c, r) in gen::ontology("x", 10).prop_flat_map(shuffled)) {
        let again = reinsert(&o, &c, &r);
        prop_assert_eq!(save_ontology(&again), save_ontology(&o));
        prop_assert_eq!(export_turtle(&again), export_turtle(&o));
    }

    #[test]
    fn turtle_round_trip(o in gen::support(10)) {
        let ttl = export_turtle(&o);
        let back = import_turtle(&ttl, &o.id).unwrap();
        prop_assert_eq!(&back, &o);
        prop_assert_eq!(export_turtle(&back), ttl);
    }
}

fn golden(rel: &str, actual: &[u8]) {
    let path = fixture(rel);
    if std::env::var_os("SMSP_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read(&path).unwrap();
    assert!(expected == actual, "{} differs from the generated output", path.display());
}

#[test]
fn security_core_is_valid_and_canonical() {
    let so = security_core();
    so.validate().unwrap();
    golden("security-core.json", &save_ontology(&so));
}

#[test]
fn security_core_turtle() {
    let so = security_core();
    let ttl = export_turtle(&so);
    assert_eq!(export_turtle(&so), ttl);
    golden("security-core.ttl", &ttl);
    assert_eq!(import_turtle(&ttl, "security-core").unwrap(), so);
}
