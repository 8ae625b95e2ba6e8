//! A small extended-regular-expression engine for NAPTR rewrite rules.
//!
//! Supported syntax: literals, `.`, bracket classes (ranges and `^`
//! negation), anchors `^` `$`, grouping `(...)` with capture, alternation
//! `|`, and the quantifiers `*` `+` `?`. Back-references are allowed in
//! the substitution side only, never in the pattern. `{` and `}` are plain
//! literals; counted repetition is not part of the subset.
//!
//! Matching is byte-oriented (rewrite input is ASCII in practice), uses
//! leftmost-first search with greedy backtracking, and `.` does not match
//! a newline. A quantifier needs a preceding atom; in [`PlusMode::Lenient`]
//! a `+` found where an atom is expected is taken as a literal plus, which
//! is how rules such as `+(.*)` stay usable. [`PlusMode::Strict`] rejects
//! them instead.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EreError {
    #[error("pattern syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("substitution references capture \\{reference} but the pattern has {captures}")]
    BadBackReference { reference: usize, captures: usize },
}

/// How to treat a `+` in a position where no atom precedes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlusMode {
    /// Treat it as a literal plus.
    #[default]
    Lenient,
    /// Reject the pattern.
    Strict,
}

/// Capture spans produced by a successful match. Slot 0 is the whole
/// match; slots 1..=group_count are the capture groups, `None` when a
/// group did not participate.
pub type Captures = Vec<Option<(usize, usize)>>;

/// A compiled pattern.
#[derive(Debug, Clone)]
pub struct Ere {
    ast: Ast,
    group_count: usize,
}

#[derive(Debug, Clone)]
enum Ast {
    Byte(u8),
    Any,
    Class { negated: bool, ranges: Vec<(u8, u8)> },
    Group(usize, Box<Ast>),
    Concat(Vec<Ast>),
    Alt(Vec<Ast>),
    Star(Box<Ast>),
    Plus(Box<Ast>),
    Quest(Box<Ast>),
    AssertStart,
    AssertEnd,
    Empty,
}

impl Ere {
    pub fn compile(pattern: &str, mode: PlusMode) -> Result<Self, EreError> {
        let mut parser = Parser {
            bytes: pattern.as_bytes(),
            pos: 0,
            groups: 0,
            mode,
        };
        let ast = parser.parse_alternation()?;
        if parser.pos != parser.bytes.len() {
            return Err(parser.err("unbalanced ')'"));
        }
        Ok(Ere {
            ast,
            group_count: parser.groups,
        })
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    /// Leftmost-first search over the haystack.
    pub fn find(&self, haystack: &str) -> Option<Captures> {
        let hay = haystack.as_bytes();
        for start in 0..=hay.len() {
            let mut caps: Captures = vec![None; self.group_count + 1];
            let matched = matches_at(&self.ast, hay, start, &mut caps, &mut |end, caps| {
                caps[0] = Some((start, end));
                true
            });
            if matched {
                return Some(caps);
            }
        }
        None
    }

    pub fn is_match(&self, haystack: &str) -> bool {
        self.find(haystack).is_some()
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    groups: usize,
    mode: PlusMode,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> EreError {
        EreError::Syntax {
            pos: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn parse_alternation(&mut self) -> Result<Ast, EreError> {
        let mut branches = vec![self.parse_concat()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            branches.push(self.parse_concat()?);
        }
        if branches.len() == 1 {
            Ok(branches.pop().unwrap())
        } else {
            Ok(Ast::Alt(branches))
        }
    }

    fn parse_concat(&mut self) -> Result<Ast, EreError> {
        let mut items: Vec<Ast> = Vec::new();
        while let Some(byte) = self.peek() {
            match byte {
                b'|' | b')' => break,
                b'^' => {
                    self.pos += 1;
                    items.push(Ast::AssertStart);
                }
                b'$' => {
                    self.pos += 1;
                    items.push(Ast::AssertEnd);
                }
                b'*' | b'+' | b'?' => {
                    if let Some(atom) = items.pop_if_quantifiable() {
                        self.pos += 1;
                        items.push(match byte {
                            b'*' => Ast::Star(Box::new(atom)),
                            b'+' => Ast::Plus(Box::new(atom)),
                            _ => Ast::Quest(Box::new(atom)),
                        });
                    } else if byte == b'+' && self.mode == PlusMode::Lenient {
                        // No atom precedes: a literal plus, per the lenient rule.
                        self.pos += 1;
                        items.push(Ast::Byte(b'+'));
                    } else {
                        return Err(self.err(format!(
                            "quantifier '{}' has no preceding atom",
                            byte as char
                        )));
                    }
                }
                b'(' => {
                    self.pos += 1;
                    self.groups += 1;
                    let index = self.groups;
                    let inner = self.parse_alternation()?;
                    if self.peek() != Some(b')') {
                        return Err(self.err("unbalanced '('"));
                    }
                    self.pos += 1;
                    items.push(Ast::Group(index, Box::new(inner)));
                }
                b'[' => items.push(self.parse_class()?),
                b'.' => {
                    self.pos += 1;
                    items.push(Ast::Any);
                }
                b'\\' => {
                    self.pos += 1;
                    let Some(escaped) = self.peek() else {
                        return Err(self.err("trailing backslash"));
                    };
                    if escaped.is_ascii_digit() {
                        return Err(self.err("back-references are not allowed in patterns"));
                    }
                    self.pos += 1;
                    items.push(Ast::Byte(escaped));
                }
                other => {
                    self.pos += 1;
                    items.push(Ast::Byte(other));
                }
            }
        }
        Ok(match items.len() {
            0 => Ast::Empty,
            1 => items.pop().unwrap(),
            _ => Ast::Concat(items),
        })
    }

    fn parse_class(&mut self) -> Result<Ast, EreError> {
        let open = self.pos;
        self.pos += 1; // consume '['
        let mut negated = false;
        if self.peek() == Some(b'^') {
            negated = true;
            self.pos += 1;
        }
        let mut ranges: Vec<(u8, u8)> = Vec::new();
        let mut first = true;
        loop {
            let Some(byte) = self.peek() else {
                self.pos = open;
                return Err(self.err("unterminated bracket class"));
            };
            if byte == b']' && !first {
                self.pos += 1;
                break;
            }
            first = false;
            self.pos += 1;
            // Range if a '-' follows and the class does not end right after it.
            if self.peek() == Some(b'-') && self.bytes.get(self.pos + 1).is_some_and(|&b| b != b']')
            {
                self.pos += 1;
                let hi = self.peek().unwrap();
                self.pos += 1;
                if hi < byte {
                    return Err(self.err(format!(
                        "invalid class range {}-{}",
                        byte as char, hi as char
                    )));
                }
                ranges.push((byte, hi));
            } else {
                ranges.push((byte, byte));
            }
        }
        if ranges.is_empty() {
            self.pos = open;
            return Err(self.err("empty bracket class"));
        }
        Ok(Ast::Class { negated, ranges })
    }
}

trait PopIfQuantifiable {
    fn pop_if_quantifiable(&mut self) -> Option<Ast>;
}

impl PopIfQuantifiable for Vec<Ast> {
    fn pop_if_quantifiable(&mut self) -> Option<Ast> {
        match self.last() {
            Some(Ast::Byte(_))
            | Some(Ast::Any)
            | Some(Ast::Class { .. })
            | Some(Ast::Group(..)) => self.pop(),
            _ => None,
        }
    }
}

type Cont<'k> = &'k mut dyn FnMut(usize, &mut Captures) -> bool;

fn matches_at(node: &Ast, hay: &[u8], sp: usize, caps: &mut Captures, k: Cont) -> bool {
    match node {
        Ast::Empty => k(sp, caps),
        Ast::Byte(b) => sp < hay.len() && hay[sp] == *b && k(sp + 1, caps),
        Ast::Any => sp < hay.len() && hay[sp] != b'\n' && k(sp + 1, caps),
        Ast::Class { negated, ranges } => {
            if sp >= hay.len() {
                return false;
            }
            let byte = hay[sp];
            let inside = ranges.iter().any(|&(lo, hi)| lo <= byte && byte <= hi);
            inside != *negated && k(sp + 1, caps)
        }
        Ast::AssertStart => sp == 0 && k(sp, caps),
        Ast::AssertEnd => sp == hay.len() && k(sp, caps),
        Ast::Group(index, inner) => {
            let index = *index;
            matches_at(inner, hay, sp, caps, &mut |end, caps| {
                let previous = caps[index];
                caps[index] = Some((sp, end));
                if k(end, caps) {
                    true
                } else {
                    caps[index] = previous;
                    false
                }
            })
        }
        Ast::Concat(items) => matches_seq(items, hay, sp, caps, k),
        Ast::Alt(branches) => branches
            .iter()
            .any(|branch| matches_at(branch, hay, sp, caps, k)),
        Ast::Quest(inner) => matches_at(inner, hay, sp, caps, k) || k(sp, caps),
        Ast::Star(inner) => matches_star(inner, hay, sp, caps, k),
        Ast::Plus(inner) => matches_at(inner, hay, sp, caps, &mut |end, caps| {
            if end > sp {
                matches_star(inner, hay, end, caps, k)
            } else {
                // The body matched without consuming input; iterating
                // again would loop forever.
                k(end, caps)
            }
        }),
    }
}

fn matches_seq(items: &[Ast], hay: &[u8], sp: usize, caps: &mut Captures, k: Cont) -> bool {
    match items.split_first() {
        None => k(sp, caps),
        Some((head, rest)) => matches_at(head, hay, sp, caps, &mut |end, caps| {
            matches_seq(rest, hay, end, caps, k)
        }),
    }
}

// Greedy: consume another iteration first, fall back to the continuation.
fn matches_star(inner: &Ast, hay: &[u8], sp: usize, caps: &mut Captures, k: Cont) -> bool {
    let more = matches_at(inner, hay, sp, caps, &mut |end, caps| {
        if end > sp {
            matches_star(inner, hay, end, caps, k)
        } else {
            k(end, caps)
        }
    });
    more || k(sp, caps)
}

/// Expands `\1`..`\9` in a substitution against the captures of a match.
/// A group that did not participate expands to the empty string; `\\` is
/// a literal backslash.
pub fn expand_substitution(
    substitution: &str,
    haystack: &str,
    caps: &Captures,
) -> Result<String, EreError> {
    let captures = caps.len() - 1;
    let mut out = String::with_capacity(substitution.len());
    let mut chars = substitution.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some(d @ '1'..='9') => {
                let reference = d as usize - '0' as usize;
                if reference > captures {
                    return Err(EreError::BadBackReference {
                        reference,
                        captures,
                    });
                }
                if let Some((start, end)) = caps[reference] {
                    out.push_str(&haystack[start..end]);
                }
            }
            Some('0') => {
                return Err(EreError::BadBackReference {
                    reference: 0,
                    captures,
                })
            }
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find(pattern: &str, hay: &str) -> Option<Captures> {
        Ere::compile(pattern, PlusMode::Lenient).unwrap().find(hay)
    }

    #[test]
    fn full_wildcard_matches_everything() {
        let caps = find("^.*$", "+112025551212").unwrap();
        assert_eq!(caps[0], Some((0, 13)));
    }

    #[test]
    fn empty_anchor_pair_matches_only_empty() {
        assert!(find("^$", "").is_some());
        assert!(find("^$", "+112025551212").is_none());
    }

    #[test]
    fn lenient_leading_plus_is_literal() {
        let caps = find("+(.*)", "+112025551212").unwrap();
        assert_eq!(caps[0], Some((0, 13)));
        assert_eq!(caps[1], Some((1, 13)));
    }

    #[test]
    fn strict_mode_rejects_leading_plus() {
        let err = Ere::compile("+(.*)", PlusMode::Strict).unwrap_err();
        assert!(matches!(err, EreError::Syntax { pos: 0, .. }));
    }

    #[test]
    fn leading_plus_after_alternation_and_group() {
        assert!(find("a|+b", "+b").is_some());
        assert!(find("(+1)", "+1").is_some());
        assert!(Ere::compile("a|+b", PlusMode::Strict).is_err());
    }

    #[test]
    fn dangling_star_rejected_in_both_modes() {
        assert!(Ere::compile("*a", PlusMode::Lenient).is_err());
        assert!(Ere::compile("*a", PlusMode::Strict).is_err());
    }

    #[test]
    fn classes_and_ranges() {
        assert!(find("^[0-9]+$", "12025551212").is_some());
        assert!(find("^[0-9]+$", "1202x").is_none());
        assert!(find("^[^0-9]$", "x").is_some());
        assert!(find("^[]x]$", "]").is_some());
        assert!(find("^[a-]$", "-").is_some());
    }

    #[test]
    fn alternation_is_leftmost_first() {
        let caps = find("^(ab|a)", "ab").unwrap();
        assert_eq!(caps[1], Some((0, 2)));
    }

    #[test]
    fn backreference_expansion() {
        let ere = Ere::compile("^\\+1(.*)$", PlusMode::Lenient).unwrap();
        let caps = ere.find("+12025551212").unwrap();
        assert_eq!(
            expand_substitution("tel:\\1", "+12025551212", &caps).unwrap(),
            "tel:2025551212"
        );
    }

    #[test]
    fn backreference_out_of_range() {
        let ere = Ere::compile("^(.*)$", PlusMode::Lenient).unwrap();
        let caps = ere.find("x").unwrap();
        assert_eq!(
            expand_substitution("\\2", "x", &caps),
            Err(EreError::BadBackReference {
                reference: 2,
                captures: 1
            })
        );
    }

    #[test]
    fn pattern_backreference_rejected() {
        assert!(Ere::compile("(a)\\1", PlusMode::Lenient).is_err());
    }

    #[test]
    fn unbalanced_parens_rejected() {
        assert!(Ere::compile("(a", PlusMode::Lenient).is_err());
        assert!(Ere::compile("a)", PlusMode::Lenient).is_err());
    }

    #[test]
    fn empty_star_body_terminates() {
        // A group that can match empty under a quantifier must not loop.
        let ere = Ere::compile("(a?)+b", PlusMode::Lenient).unwrap();
        assert!(ere.is_match("aab"));
        assert!(ere.is_match("b"));
    }

    #[test]
    fn dot_excludes_newline() {
        assert!(find("^.$", "\n").is_none());
    }

    mod oracle {
        //! Cross-checks against the `regex` crate on the shared subset.

        use super::*;
        use proptest::prelude::*;

        /// Compiles the same pattern with the reference engine. Our
        /// lenient leading-plus never appears in generated patterns, so
        /// no translation is needed.
        fn reference(pattern: &str) -> regex::Regex {
            regex::Regex::new(pattern).unwrap()
        }

        fn assert_agrees(pattern: &str, hay: &str) {
            let mine = Ere::compile(pattern, PlusMode::Strict).unwrap();
            let theirs = reference(pattern);
            let my_caps = mine.find(hay);
            let their_caps = theirs.captures(hay);
            match (&my_caps, &their_caps) {
                (None, None) => {}
                (Some(mine), Some(theirs)) => {
                    for (i, span) in mine.iter().enumerate() {
                        let them = theirs.get(i).map(|m| (m.start(), m.end()));
                        assert_eq!(
                            *span, them,
                            "capture {i} diverges for {pattern:?} on {hay:?}"
                        );
                    }
                }
                _ => panic!("match disagreement for {pattern:?} on {hay:?}: {my_caps:?} vs reference"),
            }
        }

        #[test]
        fn fixed_corpus_agrees() {
            let corpus = [
                ("^.*$", "+112025551212"),
                ("^$", "+112025551212"),
                ("^$", ""),
                ("^\\+1(.*)$", "+12025551212"),
                ("(ab|a)(c?)", "abc"),
                ("a+b", "aaab"),
                ("[0-9]+", "tel:+1202"),
                ("(a|b)*c", "ababc"),
                ("x?y", "y"),
                ("(\\+)([0-9]*)", "+1999"),
                ("^(sip|tel):", "sip:user@host"),
            ];
            for (pattern, hay) in corpus {
                assert_agrees(pattern, hay);
            }
        }

        // A generator for the shared subset: quantifiers only on
        // single-byte atoms, no empty-matching group bodies, ASCII only.
        fn atom() -> impl Strategy<Value = String> {
            prop_oneof![
                "[a-c01]".prop_map(|s| s),
                Just(".".to_string()),
                Just("[a-c]".to_string()),
                Just("[^b]".to_string()),
            ]
        }

        fn piece() -> impl Strategy<Value = String> {
            (atom(), prop_oneof![Just(""), Just("*"), Just("+"), Just("?")])
                .prop_map(|(a, q)| format!("{a}{q}"))
        }

        fn pattern() -> impl Strategy<Value = String> {
            (
                proptest::bool::ANY,
                proptest::collection::vec(piece(), 1..4),
                proptest::collection::vec(piece(), 1..3),
                proptest::bool::ANY,
            )
                .prop_map(|(anchor_start, head, group, anchor_end)| {
                    format!(
                        "{}{}({}){}",
                        if anchor_start { "^" } else { "" },
                        head.concat(),
                        group.concat(),
                        if anchor_end { "$" } else { "" },
                    )
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]
            #[test]
            fn generated_patterns_agree(pattern in pattern(), hay in "[a-c01]{0,8}") {
                assert_agrees(&pattern, &hay);
            }
        }
    }
}
