//! Chat prompt scenarios replayed through the request center against a
//! recording chat mock. Shared by the golden-file tests and the acceptance
//! suite.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crossmodal_core::center::{CenterConfig, ChatSession, Providers, RequestCenter};
use crossmodal_core::providers::http::chat_request_body;
use crossmodal_core::providers::mock::{fake_png, MockChat, MockEncoder, MockWebSearch};
use crossmodal_core::providers::{ChatMessage, ChatParams, EncoderInput, NgramDetector};
use crossmodal_core::synth::{synth_representation, SynthSpec};
use crossmodal_core::{Dims, ItemKind, ReferenceScorer, ReprStore, StoreWriter};
use tempfile::TempDir;

pub const MODEL: &str = "gpt-3.5-turbo";

const DIMS: Dims = Dims::new(16, 8, 3);

/// Descriptions in the grounding pool; each uploaded picture maps to one.
const POOL: [&str; 5] = [
    "a zebra grazing on dry grass",
    "a red bicycle leaning against a brick wall",
    "two children flying a kite on a beach",
    "a bowl of ramen with a soft boiled egg",
    "an old lighthouse at sunset",
];
const DISTRACTORS: usize = 15;

pub struct Turn {
    pub text: &'static str,
    /// Indices into the pool.
    pub images: &'static [usize],
}

pub struct Scenario {
    pub name: &'static str,
    /// Every turn is sent; the last request is the one compared.
    pub turns: &'static [Turn],
}

pub const SCENARIOS: [Scenario; 5] = [
    Scenario {
        name: "single_image",
        turns: &[Turn { text: "What animal is this?", images: &[0] }],
    },
    Scenario {
        name: "multilingual",
        turns: &[Turn { text: "Was ist auf diesem Bild zu sehen?", images: &[1] }],
    },
    Scenario {
        name: "multiple_images",
        turns: &[Turn {
            text: "Write a short story that connects these pictures.",
            images: &[2, 3, 4],
        }],
    },
    Scenario {
        name: "no_images",
        turns: &[Turn { text: "Tell me a joke about cats.", images: &[] }],
    },
    Scenario {
        name: "follow_up",
        turns: &[
            Turn { text: "What animal is this?", images: &[0] },
            Turn { text: "And where was this one taken?", images: &[4] },
        ],
    },
];

/// Resolves from any sibling crate that includes this module.
pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

/// The last request of a replayed scenario.
pub struct Captured {
    pub messages: Vec<ChatMessage>,
    pub body: String,
}

fn picture(index: usize) -> Vec<u8> {
    fake_png(format!("picture {index}").as_bytes())
}

fn pool_store() -> (TempDir, Arc<ReprStore>) {
    let dir = TempDir::new().unwrap();
    let mut w = StoreWriter::new(DIMS);
    for i in 0..POOL.len() + DISTRACTORS {
        let id = SynthSpec::image_id(i);
        let text = POOL.get(i).map_or_else(|| format!("distractor scene {i}"), |t| t.to_string());
        w.add_image(&id, None, synth_representation(11, ItemKind::Image, i, DIMS)).unwrap();
        w.add_description(
            SynthSpec::description_id(i),
            text,
            id,
            synth_representation(11, ItemKind::Description, i, DIMS),
        )
        .unwrap();
    }
    let path = w.write(dir.path()).unwrap();
    (dir, Arc::new(ReprStore::open(path).unwrap()))
}

pub async fn replay(scenario: &Scenario) -> Captured {
    let (_dir, pool) = pool_store();
    let mut encoder = MockEncoder::new(DIMS, 5);
    for i in 0..POOL.len() {
        let bytes = picture(i);
        encoder = encoder.with_fixture(
            EncoderInput::Image(&bytes),
            synth_representation(11, ItemKind::Description, i, DIMS),
        );
    }
    let chat = Arc::new(MockChat::with_responder(|msgs| {
        Ok(format!("Answer {}.", msgs.iter().filter(|m| m.role == crossmodal_core::providers::Role::User).count()))
    }));
    let providers = Providers {
        chat: chat.clone(),
        search: Arc::new(MockWebSearch::new()),
        encoder: Arc::new(encoder),
        detector: Arc::new(NgramDetector::new()),
    };
    let center = RequestCenter::new(
        providers,
        Arc::new(ReferenceScorer::default()),
        CenterConfig::default(),
    )
    .with_pool(pool);

    let mut session = ChatSession::new(scenario.name);
    for turn in scenario.turns {
        let images: Vec<Vec<u8>> = turn.images.iter().map(|&i| picture(i)).collect();
        let reply = center.chat_turn(&mut session, turn.text, &images).await.unwrap();
        let expected: Vec<String> = turn.images.iter().map(|&i| POOL[i].to_string()).collect();
        assert_eq!(reply.attached_descriptions, expected, "{}", scenario.name);
    }
    let messages = chat.requests().pop().unwrap().messages;
    let body = chat_request_body(MODEL, &messages, ChatParams::default());
    Captured { messages, body }
}

/// Pretty message list for review, plus the exact wire body.
pub fn render(c: &Captured) -> (String, String) {
    let pretty = serde_json::to_string_pretty(&c.messages).unwrap() + "\n";
    (pretty, c.body.clone() + "\n")
}

/// Compare against the committed files, or rewrite them when `UPDATE_GOLDEN`
/// is set. Returns a description of the first difference.
pub fn check(name: &str, c: &Captured) -> Result<(), String> {
    let (pretty, body) = render(c);
    let dir = golden_dir();
    let files = [
        (dir.join(format!("{name}.messages.json")), pretty),
        (dir.join(format!("{name}.body.json")), body),
    ];
    for (path, actual) in files {
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&path, &actual).unwrap();
            continue;
        }
        let expected = std::fs::read_to_string(&path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        if expected != actual {
            return Err(format!(
                "{} differs\n--- expected\n{expected}\n--- actual\n{actual}",
                path.display()
            ));
        }
    }
    Ok(())
}
