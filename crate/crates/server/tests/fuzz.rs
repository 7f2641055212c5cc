mod common;
#[path = "support/fuzz.rs"]
mod fuzz;

use common::*;
use crossmodal_core::providers::mock::fake_png;

#[tokio::test]
async fn fuzzed_requests_only_yield_documented_errors() {
    let h = harness(|c| {
        c.max_upload_bytes = 4096;
        c.album_capacity = 5;
    });
    let token = account(&h.app, "fuzzer").await;
    let png = fake_png(b"seed");
    post_multipart(&h.app, "/album/upload", &[("image", Some("a.png"), &png)], Some(&token)).await;

    let summary = fuzz::fuzz(&h.app, &token, 3000, 0x5eed).await;
    assert!(
        summary.violations.is_empty(),
        "{} undocumented replies, first: {:?}",
        summary.violations.len(),
        &summary.violations[..summary.violations.len().min(5)]
    );
    println!("{} requests, {} successes, pairs {:?}", summary.requests, summary.successes, summary.pairs);
    assert!(summary.successes > 0);
    // the generator reaches a broad share of the error space
    assert!(summary.pairs.len() >= 12, "{:?}", summary.pairs);
}
