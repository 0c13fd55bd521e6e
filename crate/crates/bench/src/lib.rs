//! Fixtures shared by the criterion harnesses.

use elicit_core::statements::parse_document;
use elicit_core::{Network, Statement};

pub const HIV: &str = "var H : h > no_h\nvar N : n > no_n\nvar I : i > no_i\nvar C : c > no_c\n\
                       edge N -> H\nedge I -> H\nedge C -> H\nedge I -> C\n";

/// The four-statement HIV elicitation.
pub const HIV_STATEMENTS: &str =
    "P(i | c) = 1\nP(i) > P(n)\nP(h | n) > P(h | i)\n0.1 <= P(n | h) <= 0.25\n";

/// HIV with every qualitative statement the graph admits.
pub const HIV_QUALITATIVE: &str =
    "S+(N,H)\nS+(I,H)\nS-(C,H)\nS+(I,C)\nY-({I,C},H)\nY+({N,I},H)\nX-({N,I},h)\n";

pub fn hiv(statements: &str) -> (Network, Vec<Statement>) {
    let doc = parse_document(&format!("{HIV}{statements}")).expect("fixture parses");
    (doc.network, doc.statements)
}

/// A chain of `n` binary variables with a skip edge every third step, which
/// forces fill-in.
pub fn chain(n: usize) -> Network {
    let mut text = String::new();
    for i in 0..n {
        text.push_str(&format!("var V{i} : v{i} > no_v{i}\n"));
    }
    for i in 1..n {
        text.push_str(&format!("edge V{} -> V{i}\n", i - 1));
        if i >= 3 && i % 3 == 0 {
            text.push_str(&format!("edge V{} -> V{i}\n", i - 3));
        }
    }
    parse_document(&text).expect("chain parses").network
}
