use proptest::prelude::*;
use smsp_core::policy::{self, kaos, SourceLang};
use smsp_testkit::{corpus, gen};

fn check(lang: SourceLang, bytes: &[u8]) -> Result<(), TestCaseError> {
    let parsed = match lang {
        SourceLang::Kaos => kaos::parse(bytes, "F"),
        _ => policy::parse(lang, &String::from_utf8_lossy(bytes), "F"),
    };
    match parsed {
        Ok(set) => {
            let printed = policy::print(&set);
            prop_assert_eq!(policy::parse(lang, &printed, "F").unwrap(), set);
        }
        Err(e) => {
            prop_assert!(e.line >= 1 && e.column >= 1, "{:?}", e);
            prop_assert!(!e.message.is_empty());
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn arbitrary_bytes_never_crash(lang in gen::lang(), bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        check(lang, &bytes)?;
    }

    #[test]
    fn mutated_text_never_crashes((lang, bytes) in gen::lang().prop_flat_map(|l| (Just(l), gen::mutated_text(l)))) {
        check(lang, &bytes)?;
    }

    #[test]
    fn generated_text_round_trips((lang, text) in gen::lang().prop_flat_map(|l| (Just(l), gen::policy_text(l)))) {
        let set = policy::parse(lang, &text, "G").unwrap();
        let printed = policy::print(&set);
        prop_assert_eq!(&policy::parse(lang, &printed, "G").unwrap(), &set);
        prop_assert_eq!(policy::print(&policy::parse(lang, &printed, "G").unwrap()), printed);
    }
}

#[test]
fn corpus_round_trips() {
    let files = corpus();
    assert!(files.len() >= 20, "corpus has {} files", files.len());
    for (lang, path) in files {
        let text = std::fs::read_to_string(&path).unwrap();
        let set = policy::parse(lang, &text, "C").unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let printed = policy::print(&set);
        let again = policy::parse(lang, &printed, "C").unwrap_or_else(|e| panic!("{}: {e}\n{printed}", path.display()));
        assert_eq!(again, set, "{}", path.display());
    }
}
