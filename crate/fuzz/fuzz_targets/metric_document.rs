#![no_main]

use libfuzzer_sys::fuzz_target;
use nilkilling::document::MetricDocument;

// Loading and validating a document must never panic; malformed input maps
// to a typed error at every stage.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(doc) = MetricDocument::from_str(text) else {
        return;
    };
    if let Ok(loaded) = doc.build() {
        // a successfully built document must serialize back to valid JSON
        let _ = serde_json::to_string(&doc).expect("reserialize");
        let _ = loaded.metric.dim();
    }
});
