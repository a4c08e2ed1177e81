//! End-to-end runs over the demo fixture corpus.

use std::path::PathBuf;
use std::sync::Arc;

use attrib_core::clients::mock::{CannedFused, HashNli};
use attrib_core::clients::{load_fixture_clients, Clients};
use attrib_core::datagen::{generate_dataset, parse_seed_queries, DatagenConfig};
use attrib_core::dataset::{from_jsonl, to_jsonl};
use attrib_core::evalharness::{evaluate, EvalConfig};
use attrib_core::par::Cancellation;
use attrib_core::research::{run_research, ResearchConfig};
use attrib_core::{Claim, Record, TrainingInstance};

fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo")
}

fn demo_clients() -> Clients {
    load_fixture_clients(&demo_dir()).unwrap()
}

fn seeds() -> Vec<attrib_core::Query> {
    parse_seed_queries(&std::fs::read_to_string(demo_dir().join("seeds.txt")).unwrap()).unwrap()
}

fn claims() -> Vec<Claim> {
    from_jsonl(&std::fs::read(demo_dir().join("claims.jsonl")).unwrap())
        .unwrap()
        .records
}

#[test]
fn datagen_produces_valid_split_instances() {
    let seeds = seeds();
    let cfg = DatagenConfig {
        seed: 11,
        ..DatagenConfig::default()
    };
    let out = generate_dataset(&seeds, &demo_clients(), &cfg, None).unwrap();
    assert!(out.report.skipped.is_empty(), "{:?}", out.report.skipped);
    assert_eq!(out.report.produced, seeds.len());
    assert_eq!(out.valid.len(), 3);
    assert_eq!(out.train.len(), 22);
    for inst in out.train.iter().chain(&out.valid) {
        inst.validate().unwrap();
        assert_ne!(inst.clean, inst.corrupted);
        assert!((1..=3).contains(&inst.num_corruptions));
        assert!(inst.token_usage.calls >= 2);
    }
    assert!(out.report.token_counts.calls >= 50);
}

#[test]
fn datagen_is_deterministic_and_schedule_independent() {
    let seeds = seeds();
    let run = |parallelism: usize, seed: u64| {
        let cfg = DatagenConfig {
            seed,
            parallelism,
            ..DatagenConfig::default()
        };
        let out = generate_dataset(&seeds, &demo_clients(), &cfg, None).unwrap();
        (to_jsonl(&out.train).unwrap(), to_jsonl(&out.valid).unwrap())
    };
    let a = run(4, 3);
    assert_eq!(a, run(4, 3));
    assert_eq!(a, run(1, 3));
    assert_ne!(a, run(4, 4));
}

#[test]
fn datagen_output_round_trips() {
    let out = generate_dataset(&seeds()[..5], &demo_clients(), &DatagenConfig::default(), None).unwrap();
    let bytes = to_jsonl(&out.train).unwrap();
    let back = from_jsonl::<TrainingInstance>(&bytes).unwrap();
    assert_eq!(back.records, out.train);
}

#[test]
fn low_overlap_seed_is_skipped_as_no_gold() {
    let mut seeds = seeds()[..9].to_vec();
    seeds.extend(parse_seed_queries("Weather for Aldermoor tomorrow please").unwrap());
    let out = generate_dataset(&seeds, &demo_clients(), &DatagenConfig::default(), None).unwrap();
    assert_eq!(out.report.produced, 9);
    assert_eq!(out.report.skipped.len(), 1);
    assert!(
        out.report.skipped[0].reason.contains("gold threshold"),
        "{:?}",
        out.report.skipped
    );
    assert_eq!(out.train.len() + out.valid.len(), 9);
    assert_eq!(out.valid.len(), 1);
}

#[test]
fn unknown_seed_is_skipped_and_duplicate_reported() {
    let mut seeds = seeds()[..3].to_vec();
    seeds.push(seeds[0].clone());
    seeds.extend(parse_seed_queries("nothing matches this query").unwrap());
    let out = generate_dataset(&seeds, &demo_clients(), &DatagenConfig::default(), None).unwrap();
    assert_eq!(out.report.produced, 3);
    let reasons: Vec<&str> = out.report.skipped.iter().map(|s| s.reason.as_str()).collect();
    assert_eq!(reasons.len(), 2);
    assert!(reasons.iter().any(|r| r.contains("duplicate")));
}

#[test]
fn cancelled_datagen_reports_it() {
    let cancel = Cancellation::new();
    cancel.cancel();
    let r = generate_dataset(&seeds(), &demo_clients(), &DatagenConfig::default(), Some(&cancel));
    assert!(matches!(r, Err(attrib_core::Error::Cancelled)));
}

#[test]
fn research_on_a_demo_claim() {
    let claim = &claims()[1];
    let r = run_research(claim, &demo_clients(), &ResearchConfig::default(), None).unwrap();
    assert_eq!(r.queries.len(), 2);
    assert!(r.statuses.iter().all(|s| s.ok));
    assert_eq!(r.evidence.len(), 1);
    assert_eq!(r.matrix.num_queries(), 2);
    let rel = r.evidence[0].relevance.as_ref().unwrap();
    assert_eq!(rel.len(), 2);
}

#[test]
fn abstaining_editor_preserves_everything() {
    let mut clients = demo_clients();
    clients.editor = Arc::new(CannedFused {
        by_segment_count: Default::default(),
        default: Some("No edit.".into()),
    });
    clients.nli = Arc::new(HashNli);
    let report = evaluate(&claims(), &clients, &EvalConfig::default(), None).unwrap();
    assert_eq!(report.per_claim.len(), 10);
    let agg = report.aggregates.clone().unwrap();
    assert_eq!(agg.pres_mean, 1.0);
    assert_eq!(agg.attr_before_mean, agg.attr_after_mean);
    for r in &report.per_claim {
        assert_eq!(r.attr_before, r.attr_after);
        assert_eq!(r.preservation, 1.0);
    }
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn evaluation_is_sorted_and_flags_low_attribution() {
    let mut claims = claims();
    claims.reverse();
    let report = evaluate(&claims, &demo_clients(), &EvalConfig::default(), None).unwrap();
    let ids: Vec<&str> = report.per_claim.iter().map(|r| r.original.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    for r in &report.per_claim {
        assert_eq!(report.low_attr_flags.contains(&r.original.id), r.attr_after < 0.30);
    }
    assert!(!report.low_attr_flags.is_empty());
    assert_eq!(report.flagged.len(), report.low_attr_flags.len());
    let total: usize = report.category_counts.values().sum();
    assert!(total >= report.per_claim.len());
}
