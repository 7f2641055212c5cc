mod common;

use std::collections::BTreeSet;

use axum::http::StatusCode;
use common::*;
use crossmodal_core::providers::mock::fake_png;
use proptest::prelude::*;
use serde_json::json;

async fn upload(h: &Harness, token: &str, n: usize, tag: &str) {
    for i in 0..n {
        let png = fake_png(format!("{tag}-{i}").as_bytes());
        let r = post_multipart(&h.app, "/album/upload", &[("image", Some("x.png"), &png)], Some(token)).await;
        assert_eq!(r.status, StatusCode::OK);
    }
}

async fn album_uris(h: &Harness, token: &str) -> BTreeSet<String> {
    let page = get(&h.app, "/gallery/album/items?page_size=500", Some(token)).await.json();
    page["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["uri"].as_str().unwrap().to_string())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn albums_are_private(a_count in 0usize..4, b_count in 0usize..4) {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async {
            let h = harness(|_| {});
            let a = account(&h.app, "a").await;
            let b = account(&h.app, "b").await;
            upload(&h, &a, a_count, "a").await;
            upload(&h, &b, b_count, "b").await;

            let ua = album_uris(&h, &a).await;
            let ub = album_uris(&h, &b).await;
            assert_eq!(ua.len(), a_count);
            assert_eq!(ub.len(), b_count);
            assert!(ua.is_disjoint(&ub));

            for uri in &ua {
                assert_eq!(get(&h.app, uri, Some(&a)).await.status, StatusCode::OK);
                let other = get(&h.app, uri, Some(&b)).await;
                assert_eq!((other.status, other.code().as_str()), (StatusCode::NOT_FOUND, "not_found"));
                let anon = get(&h.app, uri, None).await;
                assert_eq!(anon.code(), "unauthenticated");
            }

            for (token, own) in [(&a, &ua), (&b, &ub)] {
                let r = post_json(&h.app, "/search/text", json!({"query": "a photo", "mode": "album", "k": 50}), Some(token)).await;
                if own.is_empty() {
                    assert_eq!(r.code(), "empty_gallery");
                    continue;
                }
                let uris: BTreeSet<String> = r.json()["results"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|x| x["uri"].as_str().unwrap().to_string())
                    .collect();
                assert_eq!(&uris, own);
            }
        });
    }
}
