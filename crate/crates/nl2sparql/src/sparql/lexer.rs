//! Tokenizer. The token stream covers the input: concatenating token
//! texts plus the skipped whitespace/comments reconstructs the source
//! byte-exactly, which the parser tests verify.

use super::{Diagnostic, DiagnosticCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Variable,
    Iri,
    PrefixedName,
    StringLiteral,
    NumericLiteral,
    Punct,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Source text of the token, byte-exact (IRIs keep their brackets,
    /// string literals their quotes).
    pub text: String,
    /// Byte offset of the first character.
    pub offset: usize,
}

impl Token {
    fn new(kind: TokenKind, text: impl Into<String>, offset: usize) -> Self {
        Self {
            kind,
            text: text.into(),
            offset,
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_pname_prefix_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn is_pname_local_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '%')
}

/// Characters permitted inside `<...>` IRI references.
fn is_iri_char(c: char) -> bool {
    !c.is_control() && !matches!(c, ' ' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let rest = &text[i..];
        let c = rest.chars().next().expect("non-empty rest");

        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == '?' || c == '$' {
            let name_len = rest[1..].chars().take_while(|&c| is_name_char(c)).count();
            if name_len == 0 {
                return Err(Diagnostic::new(
                    DiagnosticCode::GeneralSyntax,
                    format!("expected a variable name after '{c}'"),
                    Some(i),
                ));
            }
            let end = 1 + rest[1..]
                .char_indices()
                .take_while(|(_, c)| is_name_char(*c))
                .last()
                .map(|(idx, c)| idx + c.len_utf8())
                .unwrap_or(0);
            tokens.push(Token::new(TokenKind::Variable, &rest[..end], i));
            i += end;
            continue;
        }
        if c == '<' {
            // Try an IRI; fall back to the comparison operator.
            if let Some(end) = scan_iri(rest) {
                tokens.push(Token::new(TokenKind::Iri, &rest[..end], i));
                i += end;
                continue;
            }
            if rest.starts_with("<=") {
                tokens.push(Token::new(TokenKind::Punct, "<=", i));
                i += 2;
            } else {
                tokens.push(Token::new(TokenKind::Punct, "<", i));
                i += 1;
            }
            continue;
        }
        if c == '"' || c == '\'' {
            let end = scan_string(rest, c).ok_or_else(|| {
                Diagnostic::new(
                    DiagnosticCode::GeneralSyntax,
                    "unterminated string literal",
                    Some(i),
                )
            })?;
            tokens.push(Token::new(TokenKind::StringLiteral, &rest[..end], i));
            i += end;
            continue;
        }
        if c.is_ascii_digit() {
            let end = scan_number(rest);
            tokens.push(Token::new(TokenKind::NumericLiteral, &rest[..end], i));
            i += end;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let word_end = rest
                .char_indices()
                .take_while(|(_, c)| is_pname_prefix_char(*c))
                .last()
                .map(|(idx, c)| idx + c.len_utf8())
                .unwrap_or(0);
            if rest[word_end..].starts_with(':') {
                let end = word_end + 1 + scan_pname_local(&rest[word_end + 1..]);
                tokens.push(Token::new(TokenKind::PrefixedName, &rest[..end], i));
                i += end;
            } else {
                tokens.push(Token::new(TokenKind::Keyword, &rest[..word_end], i));
                i += word_end;
            }
            continue;
        }
        if c == ':' {
            let end = 1 + scan_pname_local(&rest[1..]);
            tokens.push(Token::new(TokenKind::PrefixedName, &rest[..end], i));
            i += end;
            continue;
        }
        // Multi-char punctuation first.
        let two = rest.get(..2).unwrap_or("");
        if matches!(two, ">=" | "!=" | "&&" | "||" | "^^") {
            tokens.push(Token::new(TokenKind::Punct, two, i));
            i += 2;
            continue;
        }
        if matches!(
            c,
            '{' | '}' | '(' | ')' | '.' | ',' | ';' | '*' | '=' | '>' | '!' | '+' | '-' | '/'
                | '|' | '^' | '@'
        ) {
            tokens.push(Token::new(TokenKind::Punct, c.to_string().as_str(), i));
            i += 1;
            continue;
        }
        return Err(Diagnostic::new(
            DiagnosticCode::GeneralSyntax,
            format!("unexpected character '{c}'"),
            Some(i),
        ));
    }
    tokens.push(Token::new(TokenKind::Eof, "", text.len()));
    Ok(tokens)
}

/// Byte length of a complete `<...>` IRI at the start of `rest`, if any.
fn scan_iri(rest: &str) -> Option<usize> {
    let mut iter = rest.char_indices();
    iter.next(); // '<'
    for (idx, c) in iter {
        if c == '>' {
            return Some(idx + 1);
        }
        if !is_iri_char(c) {
            return None;
        }
    }
    None
}

/// Byte length of a string literal (short or long form) including quotes.
fn scan_string(rest: &str, quote: char) -> Option<usize> {
    let q3: String = std::iter::repeat_n(quote, 3).collect();
    if rest.starts_with(&q3) {
        // Long form: newlines allowed, ends at the next unescaped triple.
        let mut i = 3;
        let bytes = rest.as_bytes();
        while i < bytes.len() {
            if rest[i..].starts_with(&q3) {
                return Some(i + 3);
            }
            if bytes[i] == b'\\' {
                i += 2;
            } else {
                i += rest[i..].chars().next()?.len_utf8();
            }
        }
        return None;
    }
    let mut iter = rest.char_indices();
    iter.next(); // opening quote
    let mut escaped = false;
    for (idx, c) in iter {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            '\n' | '\r' => return None,
            c if c == quote => return Some(idx + c.len_utf8()),
            _ => {}
        }
    }
    None
}

fn scan_number(rest: &str) -> usize {
    let bytes = rest.as_bytes();
    let mut i = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

/// Local part of a prefixed name; greedy, but a trailing run of dots is
/// left for the triple terminator.
fn scan_pname_local(rest: &str) -> usize {
    let mut end = rest
        .char_indices()
        .take_while(|(_, c)| is_pname_local_char(*c))
        .last()
        .map(|(idx, c)| idx + c.len_utf8())
        .unwrap_or(0);
    while end > 0 && rest.as_bytes()[end - 1] == b'.' {
        end -= 1;
    }
    end
}
