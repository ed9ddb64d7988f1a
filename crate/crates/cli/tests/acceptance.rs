//! Acceptance suite. Each test checks one top-level requirement and prints a
//! single `PASS`/`FAIL` line on stderr (visible without `--nocapture`).

use std::collections::{BTreeSet, HashMap};
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use opinion_cli::config;
use opinion_core::backend::{
    BackendError, BackendKind, Completion, CorpusIndex, GenerationParams, Generator, RetrievalBackend,
};
use opinion_core::corpus::{build_corpus, read_corpus, write_corpus, write_corpus_to, BuildOptions, InstructionPair};
use opinion_core::eval::{
    render_report, run_eval, Classifiers, Domain, EvalPrompt, Label, Lexicon, LexiconClassifier, Polarity, ReportFormat,
};
use opinion_core::prompt::{render_inference, render_training, RenderedPrompt};
use opinion_core::registry::{registry, Bias, BiasSource};
use opinion_server::model::{AnswerStatus, AskRequest, AskResponse, Conversation, SharedConversation};
use opinion_server::{router, Gateway, GatewayConfig, Store};
use opinion_testkit::{
    oracle_corpus, oracle_scores, synthetic_instructions, write_synthetic_dump, OracleDoc, OracleSource, SynthConfig,
};
use serde_json::json;

fn criterion(name: &str, check: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(check));
    let mut err = std::io::stderr().lock();
    match &outcome {
        // Leading newline: libtest has already printed "test <name> ... ".
        Ok(()) => writeln!(err, "\nPASS {name}").unwrap(),
        Err(panic) => {
            let why = panic
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| panic.downcast_ref::<&str>().copied())
                .unwrap_or("panicked");
            writeln!(err, "\nFAIL {name}: {}", why.lines().next().unwrap_or(why)).unwrap();
        }
    }
    drop(err);
    if let Err(panic) = outcome {
        std::panic::resume_unwind(panic);
    }
}

fn sources_for(biases: &[Bias]) -> Vec<BiasSource> {
    registry().iter().filter(|s| biases.contains(&s.bias)).copied().collect()
}

fn oracle_sources(sources: &[BiasSource], scale: f64) -> Vec<OracleSource> {
    sources
        .iter()
        .map(|s| OracleSource {
            bias_id: s.bias.id().to_string(),
            bias_rank: Bias::ALL.iter().position(|b| *b == s.bias).unwrap(),
            subreddit: s.subreddit.to_string(),
            quota: s.scaled_quota(scale),
        })
        .collect()
}

fn lines(path: &Path, rows: &[serde_json::Value]) {
    std::fs::write(path, rows.iter().map(|r| format!("{r}\n")).collect::<String>()).unwrap();
}

const FIGURE_QUESTION: &str = "Give two examples of reputable TV news channels";

#[test]
fn corpus_oracle_equivalence() {
    criterion("corpus oracle equivalence (byte-identical, < 5 s)", || {
        let sources = sources_for(&[Bias::German, Bias::Teenager]);
        let names: Vec<&str> = sources.iter().map(|s| s.subreddit).collect();
        let dir = tempfile::tempdir().unwrap();
        let synth = SynthConfig::default();
        assert!(synth.posts >= 500 && synth.comments >= 2_000);
        write_synthetic_dump(dir.path(), &names, synth);

        for scale in [0.002, 1.0] {
            let started = Instant::now();
            let build = build_corpus(&sources, dir.path(), &BuildOptions { scale, strict: false }).unwrap();
            let mut bytes = Vec::new();
            write_corpus_to(&build.pairs, &mut bytes).unwrap();
            let elapsed = started.elapsed();
            assert!(elapsed < Duration::from_secs(5), "build took {elapsed:?}");
            let expected = oracle_corpus(dir.path(), &oracle_sources(&sources, scale));
            assert!(!expected.is_empty());
            assert!(bytes == expected.as_bytes(), "scale {scale}: corpus differs from oracle");
            for r in &build.reports {
                assert!(r.filters.balances(), "{r:?}");
            }
        }
    });
}

#[test]
fn quota_fidelity() {
    criterion("quota fidelity (25000 / 12500+12500 / 25000; 50/25/25 at 0.002)", || {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("opinion.toml");
        let quota = |scale: f64, sub: &str| registry().iter().find(|s| s.subreddit == sub).unwrap().scaled_quota(scale);

        std::fs::write(&file, "scale = 1\n").unwrap();
        let cfg = config::load(Some(&file), &|_| None, &[]).unwrap();
        assert_eq!(cfg.scale, 1.0);
        assert_eq!(quota(cfg.scale, "AskAGerman"), 25_000);
        assert_eq!((quota(cfg.scale, "AskTeenGirls"), quota(cfg.scale, "AskTeenBoys")), (12_500, 12_500));
        assert_eq!(quota(cfg.scale, "AskMen"), 25_000);
        for bias in Bias::ALL {
            let total: usize = bias.sources().map(|s| s.scaled_quota(1.0)).sum();
            assert_eq!(total, 25_000, "{bias}");
        }

        std::fs::write(&file, "scale = 0.002\n").unwrap();
        let cfg = config::load(Some(&file), &|_| None, &[]).unwrap();
        assert_eq!(
            (quota(cfg.scale, "AskAGerman"), quota(cfg.scale, "AskTeenGirls"), quota(cfg.scale, "AskTeenBoys")),
            (50, 25, 25)
        );

        // The same quotas are what a build actually applies.
        let sources = sources_for(&[Bias::German, Bias::Teenager]);
        let names: Vec<&str> = sources.iter().map(|s| s.subreddit).collect();
        write_synthetic_dump(dir.path(), &names, SynthConfig::default());
        let build = build_corpus(&sources, dir.path(), &BuildOptions { scale: cfg.scale, strict: false }).unwrap();
        let applied: Vec<(&str, u64, u64)> =
            build.reports.iter().map(|r| (r.subreddit.as_str(), r.filters.quota, r.filters.emitted)).collect();
        assert_eq!(applied, vec![("AskAGerman", 50, 50), ("AskTeenBoys", 25, 25), ("AskTeenGirls", 25, 25)]);
    });
}

#[test]
fn filter_boundary() {
    criterion("filter boundary (80 words kept, 81 dropped; score 0 dropped, 1 kept)", || {
        let dir = tempfile::tempdir().unwrap();
        let post = |id: &str, score: i64| json!({"id": id, "subreddit": "AskAGerman", "title": "Why?", "score": score, "created_utc": 1});
        let reply = |id: &str, post: &str, body: String| {
            json!({"id": id, "link_id": format!("t3_{post}"), "parent_id": format!("t3_{post}"), "body": body, "score": 3, "created_utc": 1})
        };
        let words = |n: usize| vec!["word"; n].join(" ");
        lines(&dir.path().join("AskAGerman_submissions.ndjson"), &[post("zero", 0), post("one", 1)]);
        lines(
            &dir.path().join("AskAGerman_comments.ndjson"),
            &[reply("w80", "one", words(80)), reply("w81", "one", words(81)), reply("on0", "zero", words(3))],
        );
        let build = build_corpus(&sources_for(&[Bias::German]), dir.path(), &BuildOptions::default()).unwrap();
        let kept: Vec<(&str, &str)> = build.pairs.iter().map(|p| (p.post_id.as_str(), p.comment_id.as_str())).collect();
        assert_eq!(kept, vec![("one", "w80")]);
        let f = &build.reports[0].filters;
        assert_eq!((f.response_too_long, f.post_no_upvotes, f.response_post_dropped), (1, 1, 1));
    });
}

#[test]
fn prompt_golden_bytes() {
    criterion("prompt golden bytes and training round trip", || {
        let golden_path =
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/prompts/askagerman_news_channels.txt");
        let golden = std::fs::read(golden_path).unwrap();
        let prompt = render_inference("AskAGerman", FIGURE_QUESTION).unwrap();
        assert_eq!(prompt.text.as_bytes(), golden.as_slice());
        assert_eq!(RenderedPrompt::for_bias(Bias::German, FIGURE_QUESTION).unwrap().text, prompt.text);

        let training = render_training("AskAGerman", FIGURE_QUESTION, "ARD and ZDF").unwrap();
        let rest = training.strip_prefix(prompt.text.as_str()).expect("training form starts with the prompt");
        assert_eq!(rest, " ARD and ZDF");
        assert_eq!(prompt.instruction(), FIGURE_QUESTION);
    });
}

async fn spawn(gateway: Arc<Gateway>) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, router(gateway)).await.unwrap() });
    base
}

#[test]
fn end_to_end_offline() {
    criterion("end-to-end offline (dump -> corpus -> HTTP ask, 4 biases, < 10 s)", || {
        let started = Instant::now();
        let biases = [Bias::German, Bias::American, Bias::Liberal, Bias::Conservative];
        let sources = sources_for(&biases);
        let dir = tempfile::tempdir().unwrap();
        let dump = dir.path().join("dump");
        let names: Vec<&str> = sources.iter().map(|s| s.subreddit).collect();
        write_synthetic_dump(&dump, &names, SynthConfig::default());
        // The figure question, answered differently in each community.
        let mut expected = HashMap::new();
        for s in &sources {
            let answer = format!("Answer from r/{}", s.subreddit);
            for (kind, row) in [
                ("submissions", json!({"id": "fig1", "subreddit": s.subreddit, "title": FIGURE_QUESTION, "score": 50, "created_utc": 5})),
                ("comments", json!({"id": "figc1", "link_id": "t3_fig1", "parent_id": "t3_fig1", "body": answer, "score": 40, "created_utc": 6})),
            ] {
                let path = dump.join(format!("{}_{kind}.ndjson", s.subreddit));
                let mut f = std::fs::OpenOptions::new().append(true).open(path).unwrap();
                writeln!(f, "{row}").unwrap();
            }
            expected.insert(s.bias, answer);
        }

        let corpus_path = dir.path().join("corpus.ndjson");
        let build = build_corpus(&sources, &dump, &BuildOptions::default()).unwrap();
        write_corpus(&build.pairs, &corpus_path).unwrap();
        let pairs = read_corpus(&corpus_path).unwrap();
        for bias in biases {
            let stored: Vec<&InstructionPair> =
                pairs.iter().filter(|p| p.bias == bias && p.instruction == FIGURE_QUESTION).collect();
            assert_eq!(stored.len(), 1);
            assert_eq!(stored[0].response, expected[&bias]);
        }

        let backend = Arc::new(RetrievalBackend::new(CorpusIndex::build(pairs)));
        let store = Store::open(dir.path().join("conversations.ndjson")).unwrap();
        let gateway = Arc::new(Gateway::new(backend, store, GatewayConfig::default()));
        let rt = tokio::runtime::Runtime::new().unwrap();
        let response: AskResponse = rt.block_on(async {
            let base = spawn(gateway).await;
            let res = reqwest::Client::new()
                .post(format!("{base}/api/ask"))
                .json(&json!({"question": FIGURE_QUESTION, "bias_ids": ["german", "american", "liberal", "conservative"]}))
                .send()
                .await
                .unwrap();
            assert_eq!(res.status(), 200);
            res.json().await.unwrap()
        });
        assert_eq!(response.answers.len(), 4);
        for (answer, bias) in response.answers.iter().zip(biases) {
            assert_eq!(answer.bias, bias);
            assert_eq!(answer.status, AnswerStatus::Ok);
            assert_eq!(answer.text, expected[&bias]);
        }
        let elapsed = started.elapsed();
        assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    });
}

/// Echoes the subreddit; used where the answer text itself does not matter.
struct Echo;

#[async_trait]
impl Generator for Echo {
    fn kind(&self) -> BackendKind {
        BackendKind::Retrieval
    }

    async fn generate(&self, prompt: &RenderedPrompt, _: &GenerationParams) -> Result<Completion, BackendError> {
        Ok(Completion {
            text: format!("r/{} says hi", prompt.subreddit),
            backend: BackendKind::Retrieval,
            latency_ms: 0,
        })
    }
}

struct Stall;

#[async_trait]
impl Generator for Stall {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    async fn generate(&self, _: &RenderedPrompt, _: &GenerationParams) -> Result<Completion, BackendError> {
        tokio::time::sleep(Duration::from_secs(600)).await;
        Err(BackendError::Unavailable("never".into()))
    }
}

#[test]
fn partial_failure_contract() {
    criterion("partial failure (one timed-out bias -> 1 error, N-1 ok)", || {
        let dir = tempfile::tempdir().unwrap();
        let config = GatewayConfig {
            per_bias_timeout: Duration::from_millis(200),
            ..Default::default()
        };
        let gateway = Gateway::new(Arc::new(Echo), Store::open(dir.path().join("log")).unwrap(), config)
            .with_backend(Bias::Liberal, Arc::new(Stall));
        let biases = [Bias::German, Bias::American, Bias::Liberal, Bias::Conservative];
        let rt = tokio::runtime::Runtime::new().unwrap();
        let response = rt.block_on(gateway.ask(AskRequest::new(FIGURE_QUESTION, &biases))).unwrap();
        let errors: Vec<Bias> =
            response.answers.iter().filter(|a| a.status == AnswerStatus::Error).map(|a| a.bias).collect();
        assert_eq!(errors, vec![Bias::Liberal]);
        assert_eq!(response.answers.iter().filter(|a| a.status == AnswerStatus::Ok).count(), biases.len() - 1);
        assert!(response.answers[2].error_detail.is_some());
        // The failed turn is still recorded.
        assert_eq!(gateway.conversation(response.conversation_id).unwrap().turns[0].answers, response.answers);
    });
}

#[test]
fn persistence_across_restart() {
    criterion("persistence (conversations and share tokens survive restart)", || {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("conversations.ndjson");
        let rt = tokio::runtime::Runtime::new().unwrap();
        let open = || Arc::new(Gateway::new(Arc::new(Echo), Store::open(&log).unwrap(), GatewayConfig::default()));

        let (id, token, before) = {
            let gw = open();
            let first = rt.block_on(gw.ask(AskRequest::new(FIGURE_QUESTION, &[Bias::German, Bias::Male]))).unwrap();
            let mut follow_up = AskRequest::new("And radio stations?", &[Bias::OldPeople]);
            follow_up.conversation_id = Some(first.conversation_id.to_string());
            rt.block_on(gw.ask(follow_up)).unwrap();
            rt.block_on(gw.ask(AskRequest::new("Unrelated?", &[Bias::Teenager]))).unwrap();
            let token = gw.share(first.conversation_id).unwrap();
            (first.conversation_id, token, gw.conversation(first.conversation_id).unwrap())
        };
        assert_eq!(before.turns.len(), 2);

        let gw = open();
        assert_eq!(gw.conversation(id).unwrap(), before);
        assert_eq!(gw.history().len(), 2);
        assert_eq!(gw.share(id).unwrap(), token);
        let (shared, status_of_random) = rt.block_on(async {
            let base = spawn(gw.clone()).await;
            let client = reqwest::Client::new();
            let shared: SharedConversation =
                client.get(format!("{base}/api/share/{token}")).send().await.unwrap().json().await.unwrap();
            let random = client.get(format!("{base}/api/share/bm90LWEtcmVhbC10b2tlbg")).send().await.unwrap().status();
            (shared, random)
        });
        assert_eq!(shared.turns, before.turns);
        assert_eq!(status_of_random, 404);
        let again: Conversation = gw.resolve_share(&token).unwrap();
        assert_eq!(again.turns, before.turns);
    });
}

/// Completion text keyed by (subreddit, instruction).
struct Canned(HashMap<(String, String), String>);

#[async_trait]
impl Generator for Canned {
    fn kind(&self) -> BackendKind {
        BackendKind::Retrieval
    }

    async fn generate(&self, prompt: &RenderedPrompt, _: &GenerationParams) -> Result<Completion, BackendError> {
        let key = (prompt.subreddit.clone(), prompt.instruction().to_string());
        Ok(Completion {
            text: self.0[&key].clone(),
            backend: BackendKind::Retrieval,
            latency_ms: 0,
        })
    }
}

#[test]
fn eval_arithmetic() {
    criterion("eval arithmetic (hand-computed cells, sums to 1, column-max highlighting)", || {
        // Two regard prompts about women, three sentiment prompts about socialism.
        let prompts: Vec<EvalPrompt> = [
            (Domain::Gender, "Female", "f1"),
            (Domain::Gender, "Female", "f2"),
            (Domain::PoliticalIdeologies, "Socialism", "s1"),
            (Domain::PoliticalIdeologies, "Socialism", "s2"),
            (Domain::PoliticalIdeologies, "Socialism", "s3"),
        ]
        .into_iter()
        .map(|(domain, subgroup, text)| EvalPrompt {
            domain,
            subgroup: subgroup.into(),
            prompt_text: text.into(),
        })
        .collect();
        let table: [(Bias, [&str; 5]); 3] = [
            (Bias::Conservative, ["great", "awful", "awful", "awful", "fine"]),
            (Bias::Liberal, ["great", "great", "great", "fine", "awful great"]),
            (Bias::OldPeople, ["fine", "awful", "great", "awful", "fine"]),
        ];
        let mut canned = HashMap::new();
        for (bias, texts) in &table {
            for (p, t) in prompts.iter().zip(texts) {
                canned.insert((bias.serving_subreddit().to_string(), p.prompt_text.clone()), t.to_string());
            }
        }
        let classifiers = Classifiers::shared(Arc::new(LexiconClassifier::new(Lexicon::new([
            ("great", Polarity::Positive),
            ("awful", Polarity::Negative),
        ]))));
        let biases: Vec<Bias> = table.iter().map(|(b, _)| *b).collect();
        let rt = tokio::runtime::Runtime::new().unwrap();
        let run = rt
            .block_on(run_eval(&biases, &prompts, &Canned(canned), &classifiers, &GenerationParams::default(), 4))
            .unwrap();
        assert_eq!((run.total, run.skipped, run.degraded), (15, 0, false));

        // (positive, neutral, negative) worked out by hand from the table.
        let hand: [(Bias, &str, [f64; 3]); 6] = [
            (Bias::Conservative, "Female", [0.5, 0.0, 0.5]),
            (Bias::Conservative, "Socialism", [0.0, 1.0 / 3.0, 2.0 / 3.0]),
            (Bias::Liberal, "Female", [1.0, 0.0, 0.0]),
            (Bias::Liberal, "Socialism", [1.0 / 3.0, 2.0 / 3.0, 0.0]),
            (Bias::OldPeople, "Female", [0.0, 0.5, 0.5]),
            (Bias::OldPeople, "Socialism", [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
        ];
        for (bias, subgroup, [pos, neu, neg]) in hand {
            let get = |label: Label| {
                run.cells
                    .iter()
                    .find(|c| c.bias == bias && c.subgroup == subgroup && c.label == label)
                    .map(|c| c.proportion)
                    .unwrap_or_else(|| panic!("missing {bias}/{subgroup}/{label}"))
            };
            assert_eq!((get(Label::Positive), get(Label::Neutral), get(Label::Negative)), (pos, neu, neg), "{bias}/{subgroup}");
            let sum: f64 = run.cells.iter().filter(|c| c.bias == bias && c.subgroup == subgroup).map(|c| c.proportion).sum();
            assert!((sum - 1.0).abs() < 1e-9, "{bias}/{subgroup} sums to {sum}");
        }

        // Highlighting: parse bold cells back out and compare with a scan.
        let md = render_report(&run.cells, ReportFormat::Markdown).unwrap();
        let mut header = md.lines().next().unwrap().split('|').map(str::trim).filter(|s| !s.is_empty());
        let subgroups: Vec<&str> = header.by_ref().skip(2).collect();
        let mut bold = BTreeSet::new();
        let mut block = "";
        for line in md.lines().skip(2) {
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            if !fields[1].is_empty() {
                block = fields[1];
            }
            for (i, v) in fields[3..fields.len() - 1].iter().enumerate() {
                if v.starts_with("**") {
                    bold.insert((block.to_string(), fields[2].to_string(), subgroups[i].to_string()));
                }
            }
        }
        let mut argmax = BTreeSet::new();
        for (label, idx) in [("positive", 0), ("negative", 2)] {
            for subgroup in ["Female", "Socialism"] {
                let column: Vec<(Bias, f64)> =
                    hand.iter().filter(|h| h.1 == subgroup).map(|h| (h.0, h.2[idx])).collect();
                let max = column.iter().map(|c| c.1).fold(f64::MIN, f64::max);
                for (bias, v) in column {
                    if v == max {
                        argmax.insert((label.to_string(), bias.display_name().to_string(), subgroup.to_string()));
                    }
                }
            }
        }
        assert_eq!(bold, argmax, "\n{md}");
        // Ties are all marked: the negative Female column has two maxima.
        assert!(bold.contains(&("negative".into(), "Conservative".into(), "Female".into())));
        assert!(bold.contains(&("negative".into(), "Old People".into(), "Female".into())));
    });
}

#[test]
fn retrieval_determinism() {
    criterion("retrieval determinism (100 queries x 1000 records, stable and exhaustive argmax)", || {
        let instructions = synthetic_instructions(1_000, 11);
        let pairs: Vec<InstructionPair> = instructions
            .iter()
            .enumerate()
            .map(|(i, q)| InstructionPair {
                bias: Bias::Liberal,
                subreddit: "AskALiberal".into(),
                instruction: q.clone(),
                response: format!("response {i}"),
                score: 1,
                post_id: format!("p{i}"),
                comment_id: format!("c{i}"),
                created_utc: i as i64,
            })
            .collect();
        let mut queries = synthetic_instructions(90, 12);
        queries.extend(instructions.iter().step_by(100).cloned());
        assert_eq!(queries.len(), 100);

        let first = CorpusIndex::build(pairs.clone());
        let second = CorpusIndex::build(pairs.clone());
        let docs: Vec<OracleDoc> = pairs.iter().map(|p| OracleDoc { instruction: &p.instruction }).collect();
        for query in &queries {
            let a = first.retrieve("AskALiberal", query).unwrap();
            let b = second.retrieve("AskALiberal", query).unwrap();
            assert_eq!((a.position, a.similarity.to_bits()), (b.position, b.similarity.to_bits()), "{query}");

            let scores = oracle_scores(&docs, query);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let expected = scores.iter().position(|s| *s >= max - 1e-12).unwrap();
            assert_eq!(a.position, expected, "{query}");
            assert!((a.similarity - max).abs() < 1e-12, "{query}");
            assert_eq!(a.pair.response, format!("response {expected}"));
        }
    });
}
