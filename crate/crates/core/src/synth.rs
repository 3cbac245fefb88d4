//! Seeded synthetic data: benchmark corpora and the interaction replay log.
//!
//! Both generators use ChaCha8 seeded with the given `u64`, so output is
//! identical across platforms and runs for the same seed.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Source};
use crate::service::{EventKind, InteractionEvent, Tab};

pub const DEFAULT_SEED: u64 = 0x00D1_412B;

const WORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "for", "on", "said", "with", "by", "was", "that", "from", "at", "as",
    "company", "government", "report", "minister", "market", "shares", "board", "director", "contract", "court",
    "investigation", "funds", "offshore", "council", "election", "policy", "trade", "bank", "tax", "health",
    "energy", "climate", "police", "spokesperson", "statement", "documents", "filing", "accounts", "revenue",
    "profit", "loss", "deal", "merger", "regulator", "inquiry", "audit", "payment", "donation", "lobbying",
    "procurement", "tender", "subsidiary", "holding", "shareholder", "chairman", "chief", "executive", "officer",
    "parliament", "committee", "hearing", "evidence", "journalist", "newspaper", "source", "leak", "emails",
    "week", "year", "month", "million", "billion", "percent", "annual", "quarter", "earlier", "later",
];

const NAMES: &[&str] = &[
    "Acme Corp", "Beta Holdings", "Gamma Energy", "Delta Logistics", "Jane Doe", "John Smith", "Maria Rossi",
    "Ahmed Khan", "London", "Glasgow", "Edinburgh", "Brussels", "Paris", "Lagos", "Northwind Trading",
    "Harbour Bank", "Eleanor Vance", "Tomas Novak",
];

/// `n` documents with ids `syn-0000000`, `syn-0000001`, ... Bodies are 20 to
/// 200 words drawn with a Zipf-like skew, with occasional capitalized names.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(20..=200);
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                if rng.gen_bool(0.04) {
                    words.push(NAMES[rng.gen_range(0..NAMES.len())].to_string());
                } else {
                    // squaring a uniform draw favours the head of the list
                    let u: f64 = rng.gen();
                    words.push(WORDS[((u * u) * WORDS.len() as f64) as usize].to_string());
                }
            }
            let source = [Source::Articles, Source::Web][i % 2];
            Document::new(format!("syn-{i:07}"), source, words.join(" ")).with_title(format!("Synthetic {i}"))
        })
        .collect()
}

/// Event totals of the replay log. With [`REPLAY_SESSIONS`] sessions and
/// [`REPLAY_USERS`] users these give the rates
///
/// | metric              | total | / 700 sessions |
/// |---------------------|-------|----------------|
/// | sessions per user   | 700   | 2.8 (per 250 users) |
/// | query tokens        | 1442  | 2.06 (per 700 queries) |
/// | article list views  | 3052  | 4.36 |
/// | connections views   | 2247  | 3.21 |
/// | company list views  | 1848  | 2.64 |
/// | officer list views  | 553   | 0.79 |
/// | web list views      | 1190  | 1.70 |
/// | clickthroughs       | 448   | 0.64 |
pub const REPLAY_SESSIONS: usize = 700;
pub const REPLAY_USERS: usize = 250;
pub const REPLAY_THREE_TOKEN_QUERIES: usize = 42;
pub const REPLAY_TAB_VIEWS: [(Tab, usize); 5] = [
    (Tab::Articles, 3052),
    (Tab::Connections, 2247),
    (Tab::Companies, 1848),
    (Tab::Officers, 553),
    (Tab::Web, 1190),
];
pub const REPLAY_CLICKTHROUGHS: usize = 448;

const TWO_TOKEN_QUERIES: &[&str] = &[
    "acme corp", "jane doe", "offshore funds", "council tender", "beta holdings", "harbour bank", "energy deal",
    "lobbying register", "john smith", "tax inquiry",
];
const THREE_TOKEN_QUERIES: &[&str] = &[
    "acme corp directors", "gamma energy subsidies", "delta logistics contract", "northwind trading accounts",
];

/// Builds the replay log: one query per session (session `i` belongs to user
/// `i mod 250`), 42 of the 700 queries three tokens long and the rest two,
/// then the tab views, clickthroughs and a few expansions scattered over
/// sessions at random. Events are in timestamp order.
pub fn replay_log(seed: u64) -> Vec<InteractionEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let session_id = |i: usize| format!("s{i:03}");

    let mut long_query = vec![false; REPLAY_SESSIONS];
    long_query[..REPLAY_THREE_TOKEN_QUERIES].fill(true);
    long_query.shuffle(&mut rng);

    let mut per_session: Vec<Vec<EventKind>> = (0..REPLAY_SESSIONS)
        .map(|i| {
            let pool = if long_query[i] { THREE_TOKEN_QUERIES } else { TWO_TOKEN_QUERIES };
            vec![EventKind::Query {
                text: pool[rng.gen_range(0..pool.len())].to_string(),
                user: Some(format!("u{:03}", i % REPLAY_USERS)),
            }]
        })
        .collect();

    let mut rest: Vec<EventKind> = Vec::new();
    for (tab, count) in REPLAY_TAB_VIEWS {
        rest.extend(std::iter::repeat_n(EventKind::TabView { tab }, count));
    }
    for i in 0..REPLAY_CLICKTHROUGHS {
        rest.push(EventKind::Clickthrough {
            doc_id: format!("a{}", i % 7 + 1),
        });
    }
    for _ in 0..120 {
        rest.push(EventKind::Expand {
            entity: "PER:jane doe".into(),
        });
    }
    rest.shuffle(&mut rng);
    for kind in rest {
        per_session[rng.gen_range(0..REPLAY_SESSIONS)].push(kind);
    }

    let start: DateTime<Utc> = Utc.with_ymd_and_hms(2021, 3, 1, 9, 0, 0).single().expect("valid start");
    let mut out = Vec::new();
    for (i, kinds) in per_session.into_iter().enumerate() {
        let session_start = start + Duration::minutes(30 * i as i64);
        for (j, kind) in kinds.into_iter().enumerate() {
            out.push(InteractionEvent {
                session: session_id(i),
                kind,
                timestamp: session_start + Duration::seconds(5 * j as i64),
            });
        }
    }
    out
}
