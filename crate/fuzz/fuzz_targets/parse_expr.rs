#![no_main]

use libfuzzer_sys::fuzz_target;
use nilkilling::expr::{parse, ScalarExpr};

fn all_numbers_finite(e: &ScalarExpr) -> bool {
    match e {
        ScalarExpr::Number(v) => v.is_finite(),
        ScalarExpr::Ident(_) => true,
        ScalarExpr::Neg(a) | ScalarExpr::Pow(a, _) | ScalarExpr::Func(_, a) => {
            all_numbers_finite(a)
        }
        ScalarExpr::Add(a, b)
        | ScalarExpr::Sub(a, b)
        | ScalarExpr::Mul(a, b)
        | ScalarExpr::Div(a, b) => all_numbers_finite(a) && all_numbers_finite(b),
    }
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(tree) = parse(text) else {
        return;
    };
    // printing and reparsing must reproduce the tree exactly, as long as no
    // literal overflowed to infinity during lexing
    if all_numbers_finite(&tree) {
        let printed = tree.to_string();
        let reparsed = parse(&printed)
            .unwrap_or_else(|e| panic!("printed form `{printed}` failed to parse: {e}"));
        assert_eq!(reparsed, tree, "round-trip mismatch via `{printed}`");
    }
});
