#![no_main]

use std::collections::HashMap;

use libfuzzer_sys::fuzz_target;
use nilkilling::expr::{eval_jet, parse};
use nilkilling::jet::Jet;

// Evaluation must never panic: any failure mode is a typed error.
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let x = data[0] as f64 / 32.0 - 4.0;
    let y = data[1] as f64 / 32.0 - 4.0;
    let Ok(text) = std::str::from_utf8(&data[2..]) else {
        return;
    };
    let Ok(tree) = parse(text) else {
        return;
    };
    let seeds = Jet::seed(&[x, y], 2);
    let assignment: HashMap<String, Jet> = [
        ("u".to_string(), seeds[0].clone()),
        ("w".to_string(), seeds[1].clone()),
    ]
    .into();
    let params: HashMap<String, f64> = [("k".to_string(), 0.5)].into();
    let _ = eval_jet(&tree, &assignment, &params);
});
