mod common;

use gramtok::bpe_segment;
use gramtok::corpus::{corpus_stats, export_dataset, filter_corpus, load_records, write_records, CorpusRecord, Manifest};
use gramtok::{decode, encode, is_valid_prefix, EncodeMode, Language, PrefixStatus, TokenSequence};

use common::*;

#[test]
fn directory_ingestion_reads_python_files_in_sorted_order() {
    let dir = tempfile::tempdir().unwrap();
    let files = vec![
        ("b/z.py".to_string(), "z = 1\n".to_string()),
        ("a.py".to_string(), "a = 1\n".to_string()),
        ("b/notes.txt".to_string(), "not python".to_string()),
        ("b/a.py".to_string(), "a = 2\n".to_string()),
    ];
    write_corpus_dir(dir.path(), &files);
    let records = load_records(dir.path()).unwrap();
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["a.py", "b/a.py", "b/z.py"]);
    assert_eq!(records[1].source.bytes, b"a = 2\n");
}

#[test]
fn jsonl_round_trip_and_duplicate_ids() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let records = corpus_records(&fixture_corpus(10));
    write_records(&path, &records).unwrap();
    assert_eq!(load_records(&path).unwrap(), records);

    std::fs::write(&path, "{\"id\": \"x\", \"content\": \"a=1\"}\n{\"id\": \"x\", \"content\": \"b=1\"}\n").unwrap();
    assert_eq!(load_records(&path).unwrap_err().name(), "FormatError");
}

#[test]
fn filter_counts_are_conserved_under_injection() {
    let base = corpus_records(&fixture_corpus(30));
    let bad = ["def (:\n", "x = [1,\n", "lambda\n", "else:\n    pass\n"];
    for (dups, n_bad) in [(0usize, 0usize), (3, 1), (10, 4), (25, 2)] {
        let mut records = base.clone();
        for i in 0..dups {
            let src = records[(i * 11) % base.len()].source.bytes.clone();
            records.push(CorpusRecord::new(format!("dup{i}.py"), src));
        }
        for (i, b) in bad.iter().take(n_bad).enumerate() {
            records.insert(i * 3, CorpusRecord::new(format!("bad{i}.py"), b.as_bytes()));
        }
        let (kept, report) = filter_corpus(records, &Language::python());
        assert_eq!(report.input_count, base.len() + dups + n_bad);
        assert_eq!(report.duplicate_count, dups);
        assert_eq!(report.syntax_rejected_count, n_bad);
        assert_eq!(report.kept_count, base.len());
        assert_eq!(kept.len(), report.kept_count);
        assert_eq!(report.rejected_ids.len(), dups + n_bad);
        assert_eq!(kept, base);
    }
}

#[test]
fn export_shards_decode_back_to_the_corpus() {
    let files = fixture_corpus(25);
    let records = corpus_records(&files);
    let vocab = vocab_for(files.iter().map(|(_, s)| s.as_str()));
    let dir = tempfile::tempdir().unwrap();
    let manifest = export_dataset(&records, &vocab, EncodeMode::Exact, dir.path(), 9).unwrap();
    assert_eq!(manifest.records, records.len());
    assert_eq!(manifest.vocab_digest, vocab.digest());
    let on_disk: Manifest = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);

    let mut i = 0;
    for shard in &manifest.shards {
        for line in std::fs::read_to_string(dir.path().join(shard)).unwrap().lines() {
            let rec: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(rec["id"], records[i].id.as_str());
            let ids: Vec<u32> = serde_json::from_value(rec["ids"].clone()).unwrap();
            let seq = TokenSequence::from_ids(ids, EncodeMode::Exact, &vocab).unwrap();
            assert_eq!(decode(&seq, &vocab).unwrap(), records[i].source.bytes);
            i += 1;
        }
    }
    assert_eq!(i, records.len());
}

#[test]
fn export_names_the_failing_record() {
    let vocab = vocab_for(["x = 1\n"]);
    let records = vec![
        CorpusRecord::new("ok.py", "x = 1\n"),
        CorpusRecord::new("unseen.py", "def f():\n    pass\n"),
    ];
    let dir = tempfile::tempdir().unwrap();
    let err = export_dataset(&records, &vocab, EncodeMode::Canonical, dir.path(), 10).unwrap_err();
    assert_eq!(err.name(), "UnknownProduction");
    assert!(err.to_string().contains("unseen.py"));
}

#[test]
fn stats_match_a_recount() {
    let files = fixture_corpus(15);
    let records = corpus_records(&files);
    let vocab = vocab_for(files.iter().map(|(_, s)| s.as_str()));
    let report = corpus_stats(&records, &vocab).unwrap();
    assert!(report.failures.is_empty());
    let language = Language::python();
    let mut rules_seen = std::collections::BTreeSet::new();
    let (mut tok, mut canon) = (0, 0);
    for (r, s) in records.iter().zip(&report.records) {
        let tree = language.parse(&r.source).unwrap();
        let c = encode(&r.source, &vocab, EncodeMode::Canonical).unwrap();
        let e = encode(&r.source, &vocab, EncodeMode::Exact).unwrap();
        let t = bpe_segment(&r.source.bytes, vocab.base()).len();
        assert_eq!(s.id, r.id);
        assert_eq!((s.token_len, s.canonical_len, s.exact_len), (t, c.len(), e.len()));
        assert_eq!(s.internal_nodes, tree.internal_node_count());
        assert!(s.canonical_len >= s.internal_nodes);
        rules_seen.extend(c.rule_ids());
        tok += t;
        canon += c.len();
    }
    assert_eq!(report.token.total, tok);
    assert_eq!(report.canonical.total, canon);
    assert_eq!(report.distinct_rules_seen, rules_seen.len());
    assert_eq!(report.rule_coverage, Some(1.0));
    let ratio = report.canonical_ratio.unwrap();
    assert!((ratio - canon as f64 / tok as f64).abs() < 1e-12);
}

#[test]
fn codec_laws_hold_over_the_fixture_corpus() {
    let files = fixture_corpus(60);
    let vocab = vocab_for(files.iter().map(|(_, s)| s.as_str()));
    let language = Language::python();
    for (id, src) in &files {
        let source = src.as_str().into();
        let exact = encode(&source, &vocab, EncodeMode::Exact).unwrap();
        let canonical = encode(&source, &vocab, EncodeMode::Canonical).unwrap();
        assert_eq!(decode(&exact, &vocab).unwrap(), src.as_bytes(), "{id}");

        // Rule IDs follow the preorder productions.
        let expected: Vec<u32> = language
            .parse(&source)
            .unwrap()
            .internal_productions_preorder()
            .unwrap()
            .iter()
            .map(|p| vocab.rule_id(p).unwrap())
            .collect();
        assert_eq!(exact.rule_ids().collect::<Vec<_>>(), expected, "{id}");

        // Canonical is exact with every GAP ... END_OF_LEAF run removed.
        let mut projected = Vec::new();
        let mut in_gap = false;
        for &tok in &exact.ids {
            if tok == vocab.gap() {
                in_gap = true;
            } else if in_gap {
                in_gap = tok != vocab.end_of_leaf();
            } else {
                projected.push(tok);
            }
        }
        assert_eq!(projected, canonical.ids, "{id}");
        assert!(!canonical.ids.contains(&vocab.gap()), "{id}");

        if !canonical.is_empty() {
            assert_eq!(is_valid_prefix(&canonical.ids, &vocab).status, PrefixStatus::Complete, "{id}");
        }
    }
}
