use std::collections::HashMap;

use proptest::prelude::*;

use super::mock::{fake_jpeg, fake_png, MockChat, MockEncoder, MockWebSearch};
use super::*;
use crate::repr::Dims;

const DIMS: Dims = Dims::new(16, 4, 3);

#[tokio::test]
async fn canned_chat_replies_exactly() {
    let map = HashMap::from([("hello".to_string(), "canned reply".to_string())]);
    let chat = MockChat::canned(map);
    let reply = chat
        .chat(&[ChatMessage::user("hello")], ChatParams::default())
        .await;
    assert_eq!(reply.unwrap(), "canned reply");
    let echo = chat
        .chat(&[ChatMessage::user("other")], ChatParams::default())
        .await;
    assert_eq!(echo.unwrap(), "other");
    assert_eq!(chat.calls(), 2);
    assert_eq!(chat.requests()[0].messages, vec![ChatMessage::user("hello")]);
}

#[tokio::test]
async fn chat_mock_failure_mode() {
    let chat = MockChat::echo();
    chat.fail_with(Some(ProviderError::ProviderUnavailable("down".into())));
    let err = chat
        .chat(&[ChatMessage::user("x")], ChatParams::default())
        .await
        .unwrap_err();
    assert!(matches!(err, ProviderError::ProviderUnavailable(_)));
    chat.fail_with(None);
    assert!(chat
        .chat(&[ChatMessage::user("x")], ChatParams::default())
        .await
        .is_ok());
}

#[tokio::test]
async fn responder_sees_all_messages() {
    let chat = MockChat::with_responder(|m| Ok(format!("{} messages", m.len())));
    let msgs = [
        ChatMessage::system("s"),
        ChatMessage::user("u"),
        ChatMessage::assistant("a"),
        ChatMessage::user("u2"),
    ];
    assert_eq!(chat.chat(&msgs, ChatParams::default()).await.unwrap(), "4 messages");
}

#[tokio::test]
async fn mock_encoder_is_deterministic_and_unit_norm() {
    let enc = MockEncoder::new(DIMS, 3);
    let png = fake_png(b"cat");
    let a = enc.encode(EncoderInput::Image(&png)).await.unwrap();
    let b = enc.encode(EncoderInput::Image(&png)).await.unwrap();
    assert_eq!(a, b);
    assert_eq!(a.dims(), DIMS);
    let norm: f64 = a.global.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-6, "{norm}");

    let other_seed = MockEncoder::new(DIMS, 4);
    assert_ne!(a, other_seed.encode(EncoderInput::Image(&png)).await.unwrap());
    let text = enc.encode(EncoderInput::Text("cat")).await.unwrap();
    assert_ne!(a, text, "text and image inputs are separate key spaces");
}

#[tokio::test]
async fn mock_encoder_payload_checks() {
    let enc = MockEncoder::new(DIMS, 3);
    for bad in [&b""[..], b"plain text", b"\x89PN"] {
        assert!(matches!(
            enc.encode(EncoderInput::Image(bad)).await,
            Err(ProviderError::UnsupportedPayload(_))
        ));
    }
    assert!(enc.encode(EncoderInput::Image(&fake_jpeg(b""))).await.is_ok());
    assert!(matches!(
        enc.encode(EncoderInput::Text(" ")).await,
        Err(ProviderError::UnsupportedPayload(_))
    ));
}

#[tokio::test]
async fn mock_encoder_fixtures_override() {
    let planted = crate::repr::Representation::new(vec![1.0; 16], vec![0.5; 12], 4);
    let enc = MockEncoder::new(DIMS, 3).with_fixture(EncoderInput::Text("zebra"), planted.clone());
    assert_eq!(enc.encode(EncoderInput::Text("zebra")).await.unwrap(), planted);
    assert_eq!(enc.representation_of(EncoderInput::Text("zebra")), planted);
}

#[tokio::test]
async fn mock_search_under_full_response() {
    let items: Vec<(String, String)> = (0..7).map(|i| (format!("u{i}"), format!("t{i}"))).collect();
    let refs: Vec<(&str, &str)> = items.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let search = MockWebSearch::new().with_default(MockWebSearch::ranked(&refs));
    let results = search.search("q", DEFAULT_SEARCH_COUNT).await.unwrap();
    assert_eq!(results.len(), 7);
    let ranks: Vec<_> = results.iter().map(|r| r.source_rank).collect();
    assert_eq!(ranks, (1..=7).collect::<Vec<_>>());
    assert_eq!(search.requests(), vec![("q".to_string(), 40)]);
    assert_eq!(search.search("q", 3).await.unwrap().len(), 3);
}

#[tokio::test]
async fn mock_search_quota() {
    let search = MockWebSearch::new();
    search.fail_with(Some(ProviderError::QuotaExceeded("daily".into())));
    assert!(matches!(
        search.search("q", 10).await,
        Err(ProviderError::QuotaExceeded(_))
    ));
}

#[test]
fn token_counting_examples() {
    assert_eq!(whitespace_tokens(""), 0);
    assert_eq!(whitespace_tokens(&"dog ".repeat(9)), 9);
    assert_eq!(whitespace_truncate("a  b\tc d", 3), "a b c");
    assert_eq!(whitespace_truncate("a b", 10), "a b");
}

#[test]
fn validation_helpers() {
    assert!(validate_messages(&[]).is_err());
    assert!(validate_messages(&[ChatMessage::system("s")]).is_err());
    assert!(validate_messages(&[ChatMessage::system("s"), ChatMessage::user("u")]).is_ok());
    assert_eq!(sniff_image(&fake_png(b"")), Ok(ImageFormat::Png));
    assert_eq!(sniff_image(&fake_jpeg(b"")), Ok(ImageFormat::Jpeg));
}

#[test]
fn roles_serialize_lowercase() {
    let json = serde_json::to_string(&ChatMessage::assistant("x")).unwrap();
    assert_eq!(json, r#"{"role":"assistant","content":"x"}"#);
}

proptest! {
    #[test]
    fn token_count_adds_over_spaced_concatenation(a in "[a-z \t]{0,40}", b in "[a-z \n]{0,40}") {
        let joined = format!("{a} {b}");
        prop_assert_eq!(whitespace_tokens(&joined), whitespace_tokens(&a) + whitespace_tokens(&b));
    }

    #[test]
    fn token_count_monotone_under_concatenation(a in "\\PC{0,30}", b in "\\PC{0,30}") {
        let joined = format!("{a}{b}");
        let n = whitespace_tokens(&joined);
        prop_assert!(n >= whitespace_tokens(&a).max(whitespace_tokens(&b)));
    }

    #[test]
    fn truncation_respects_limit(text in "[a-z ]{0,200}", limit in 0usize..50) {
        let cut = whitespace_truncate(&text, limit);
        prop_assert_eq!(whitespace_tokens(&cut), whitespace_tokens(&text).min(limit));
        prop_assert!(text.split_whitespace().collect::<Vec<_>>().starts_with(
            &cut.split_whitespace().collect::<Vec<_>>()));
    }
}
