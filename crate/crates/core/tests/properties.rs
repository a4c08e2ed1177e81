use std::collections::HashSet;

use attrib_core::clients::mock::HashScorer;
use attrib_core::clients::{ClientResult, SearchBackend, SearchResult};
use attrib_core::datagen::{bin_evidence, pack_instance, CorruptionOutput, EvidenceBins};
use attrib_core::dataset::{from_jsonl, to_jsonl};
use attrib_core::metrics::{f1_ap, levenshtein, preservation};
use attrib_core::report::{coverage, dedupe_evidence, greedy_select, RelevanceMatrix};
use attrib_core::research::{chunk_passages, search_evidence, ResearchConfig, ScoredSnippet};
use attrib_core::revision::{pack_editor_input, SegmentTemplate};
use attrib_core::text::{collapse_whitespace, dedup_key, nfc};
use attrib_core::{AttributionReport, Claim, EvidenceSnippet, Query, Record};
use proptest::prelude::*;

/// Textbook full-matrix edit distance over Unicode scalars.
fn lev_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = nfc(a).chars().collect();
    let b: Vec<char> = nfc(b).chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn short_text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!['a', 'b', 'c', ' ', 'é', 'ß', '中', 'e', '\u{301}']),
        0..24,
    )
    .prop_map(|v| v.into_iter().collect())
}

fn word_text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9éü]{1,8}( [A-Za-z0-9éü.]{1,8}){0,10}"
}

fn matrix_strategy(max_q: usize, max_e: usize, lo: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_q, 1..=max_e).prop_flat_map(move |(q, e)| prop::collection::vec(prop::collection::vec(lo..1.0f64, e), q))
}

fn matrix(scores: Vec<Vec<f64>>) -> RelevanceMatrix {
    let q = (0..scores.len())
        .map(|i| Query::new(format!("q{i}"), "query").unwrap())
        .collect();
    let e = (0..scores[0].len())
        .map(|j| EvidenceSnippet::new(format!("e{j}"), &format!("evidence {j}")).unwrap())
        .collect();
    RelevanceMatrix::new(q, e, scores).unwrap()
}

fn coverage_oracle(scores: &[Vec<f64>], subset: &[usize]) -> f64 {
    let mut total = 0.0;
    for row in scores {
        let mut best = f64::NEG_INFINITY;
        for &j in subset {
            if row[j] > best {
                best = row[j];
            }
        }
        total += best;
    }
    total
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|j| mask & (1 << j) != 0).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn levenshtein_matches_oracle(a in short_text(), b in short_text()) {
        prop_assert_eq!(levenshtein(&a, &b), lev_oracle(&a, &b));
    }

    #[test]
    fn levenshtein_is_a_metric(a in short_text(), b in short_text(), c in short_text()) {
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        if nfc(&a) != nfc(&b) {
            prop_assert!(levenshtein(&a, &b) > 0);
        }
    }

    #[test]
    fn preservation_bounds(x in short_text(), y in short_text()) {
        let p = preservation(&x, &y);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(preservation(&x, &x), 1.0);
        let len = nfc(&x).chars().count();
        if len > 0 {
            let expected = (1.0 - lev_oracle(&x, &y) as f64 / len as f64).max(0.0);
            prop_assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn f1_is_a_harmonic_mean(a in 0.0..=1.0f64, p in 0.0..=1.0f64) {
        let f = f1_ap(a, p).unwrap();
        prop_assert!((f - f1_ap(p, a).unwrap()).abs() < 1e-15);
        prop_assert!(f <= a.max(p) + 1e-12);
        prop_assert!(f >= a.min(p) - 1e-12);
        prop_assert!(f <= (a + p) / 2.0 + 1e-12);
        prop_assert!((f1_ap(a, a).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn f1_rejects_out_of_range(a in 1.0001..10.0f64) {
        prop_assert!(f1_ap(a, 0.5).is_err());
        prop_assert!(f1_ap(0.5, -a).is_err());
    }

    #[test]
    fn coverage_matches_exhaustive_evaluator(scores in matrix_strategy(6, 8, -1.0)) {
        let m = matrix(scores.clone());
        for s in subsets(m.num_evidence()) {
            let got = coverage(&m, &s).unwrap();
            prop_assert!((got - coverage_oracle(&scores, &s)).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_within_bound_of_optimum(scores in matrix_strategy(6, 7, 0.0), budget in 1usize..5) {
        let m = matrix(scores.clone());
        let chosen = greedy_select(&m, budget).unwrap();
        prop_assert!(!chosen.is_empty() && chosen.len() <= budget);
        let distinct: HashSet<_> = chosen.iter().collect();
        prop_assert_eq!(distinct.len(), chosen.len());
        let got = coverage_oracle(&scores, &chosen);
        let opt = subsets(m.num_evidence())
            .filter(|s| s.len() <= budget)
            .map(|s| coverage_oracle(&scores, &s))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(got >= (1.0 - (-1.0f64).exp()) * opt - 1e-9, "greedy {} opt {}", got, opt);
    }

    #[test]
    fn greedy_coverage_never_decreases(scores in matrix_strategy(5, 8, 0.0)) {
        let m = matrix(scores.clone());
        let chosen = greedy_select(&m, 8).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 1..=chosen.len() {
            let c = coverage_oracle(&scores, &chosen[..k]);
            prop_assert!(c > last - 1e-12);
            last = c;
        }
    }

    #[test]
    fn dedupe_keeps_first_of_each_key(texts in prop::collection::vec("[aAbB ]{1,4}", 1..12)) {
        let ev: Vec<EvidenceSnippet> = texts
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.trim().is_empty())
            .map(|(i, t)| EvidenceSnippet::new(format!("e{i}"), t).unwrap())
            .collect();
        let out = dedupe_evidence(ev.clone());
        let mut seen = HashSet::new();
        let expected: Vec<_> = ev.into_iter().filter(|e| seen.insert(dedup_key(&e.text))).collect();
        prop_assert_eq!(out, expected);
    }

    #[test]
    fn chunks_are_substrings(page in "[A-Za-z.]{1,6}( {1,3}[A-Za-z.0-9]{1,6}){0,80}", window in 2usize..20, stride_frac in 1usize..=4) {
        let stride = (window * stride_frac / 4).max(1);
        let normalized = collapse_whitespace(&page);
        let chunks = chunk_passages(&page, window, stride).unwrap();
        prop_assert!(!chunks.is_empty());
        for (i, c) in chunks.iter().enumerate() {
            prop_assert!(normalized.contains(&c.text));
            prop_assert_eq!(c.chunk_index, i);
        }
        prop_assert!(normalized.starts_with(&chunks[0].text));
        prop_assert!(normalized.ends_with(&chunks.last().unwrap().text));
    }

    #[test]
    fn bins_match_resort_oracle(scores in prop::collection::vec(0.0..1.0f64, 1..12), threshold in 0.0..1.0f64, cap in 1usize..5) {
        let scored: Vec<ScoredSnippet> = scores
            .iter()
            .enumerate()
            .map(|(i, &score)| ScoredSnippet {
                snippet: EvidenceSnippet::new(format!("e{i:02}"), &format!("t{i}")).unwrap(),
                score,
            })
            .collect();
        let mut sorted = scored.clone();
        sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.snippet.id.cmp(&b.snippet.id)));
        let gold: Vec<_> = sorted.iter().filter(|s| s.score >= threshold).take(cap).cloned().collect();
        match bin_evidence(scored, threshold, cap) {
            Ok(bins) => {
                prop_assert_eq!(&bins.gold, &gold);
                prop_assert_eq!(bins.gold.len() + bins.negatives.len(), scores.len());
                let gold_ids: HashSet<_> = bins.gold.iter().map(|s| &s.snippet.id).collect();
                prop_assert!(bins.negatives.iter().all(|s| !gold_ids.contains(&s.snippet.id)));
            }
            Err(_) => prop_assert!(gold.is_empty()),
        }
    }

    #[test]
    fn packed_instances_are_valid(n_gold in 1usize..=4, n_neg in 0usize..6, seed in any::<u64>()) {
        let mk = |p: &str, i: usize, s: f64| ScoredSnippet {
            snippet: EvidenceSnippet::new(format!("{p}{i}"), &format!("{p} text {i}")).unwrap(),
            score: s,
        };
        let bins = EvidenceBins {
            gold: (0..n_gold).map(|i| mk("g", i, 0.9)).collect(),
            negatives: (0..n_neg).map(|i| mk("n", i, 0.1)).collect(),
            threshold: 0.5,
        };
        let corruption = CorruptionOutput { reasoning: "r".into(), corrupted: "dirty".into(), num_corruptions: 2 };
        let q = Query::new("q", "seed").unwrap();
        let inst = pack_instance(&q, &bins, "clean", &corruption, seed).unwrap();
        prop_assert!(inst.validate().is_ok(), "{:?}", inst.validate());
        prop_assert_eq!(inst.padded, n_gold + n_neg < 4);
        let again = pack_instance(&q, &bins, "clean", &corruption, seed).unwrap();
        prop_assert_eq!(inst, again);
    }

    #[test]
    fn every_segment_holds_the_claim(claim in word_text(), ev in prop::collection::vec(word_text(), 1..6), slots in 1usize..6) {
        let claim = Claim::new("c", &claim).unwrap();
        let mut seen = HashSet::new();
        let evidence: Vec<_> = ev
            .iter()
            .filter(|t| seen.insert(dedup_key(t)))
            .map(|t| EvidenceSnippet::from_text(t).unwrap())
            .collect();
        let report = AttributionReport::new(evidence, 1.0).unwrap();
        let input = pack_editor_input(&claim, &report, slots, &SegmentTemplate::default()).unwrap();
        prop_assert_eq!(input.segments.len(), slots);
        for s in &input.segments {
            prop_assert!(s.contains(&claim.text));
        }
    }

    #[test]
    fn records_round_trip(texts in prop::collection::vec(word_text(), 1..6), ctx in proptest::option::of(word_text())) {
        let claims: Vec<Claim> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let c = Claim::new(format!("c{i}"), t).unwrap();
                match &ctx {
                    Some(x) => c.with_context(x),
                    None => c,
                }
            })
            .collect();
        let back = from_jsonl::<Claim>(&to_jsonl(&claims).unwrap()).unwrap();
        prop_assert_eq!(back.records, claims);

        let snippets: Vec<EvidenceSnippet> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut e = EvidenceSnippet::from_text(t).unwrap().with_source(Some(format!("https://x/{i}")), None, i);
                e.relevance = Some([(format!("q{i}"), i as f64 * 0.1)].into());
                e
            })
            .collect();
        let bytes = to_jsonl(&snippets).unwrap();
        let back = from_jsonl::<EvidenceSnippet>(&bytes).unwrap();
        prop_assert_eq!(&back.records, &snippets);
        prop_assert_eq!(to_jsonl(&back.records).unwrap(), bytes);
    }

    #[test]
    fn search_best_is_exhaustive_max(pages in prop::collection::vec(word_text(), 1..5)) {
        struct Pages(Vec<SearchResult>);
        impl SearchBackend for Pages {
            fn search(&self, _: &str, _: usize) -> ClientResult<Vec<SearchResult>> {
                Ok(self.0.clone())
            }
        }
        let backend = Pages(pages.iter().enumerate().map(|(i, t)| SearchResult { url: format!("u{i}"), title: String::new(), text: t.clone() }).collect());
        let cfg = ResearchConfig { window: 3, stride: 2, ..ResearchConfig::default() };
        let q = Query::new("q", "some query").unwrap();
        let out = search_evidence(&q, &backend, &HashScorer, &cfg).unwrap();
        let max = out.all_scored.iter().map(|s| s.score).fold(f64::NEG_INFINITY, f64::max);
        let first = out.all_scored.iter().find(|s| s.score == max).unwrap();
        prop_assert_eq!(&out.best.text, &first.snippet.text);
        prop_assert_eq!(&out.best.url, &first.snippet.url);
    }
}
