use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokKind {
    Ident,
    Punct(char),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokKind::Punct(c)
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokKind::Ident
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokKind::Ident && self.text == kw
    }

    /// How the token is quoted in diagnostics.
    pub fn describe(&self) -> String {
        match self.kind {
            TokKind::Eof => "end of input".to_string(),
            _ => format!("`{}`", self.text),
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col, self.text.clone(), message)
    }
}

pub(crate) struct LexConfig {
    pub line_comment: &'static str,
    pub punct: &'static str,
    pub ident_start: fn(char) -> bool,
    pub ident_continue: fn(char) -> bool,
}

pub(crate) fn tokenize(text: &str, cfg: &LexConfig) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let comment: Vec<char> = cfg.line_comment.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if chars[i..].starts_with(&comment) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if cfg.punct.contains(c) {
            tokens.push(Token { kind: TokKind::Punct(c), text: c.to_string(), line, col });
            i += 1;
            col += 1;
            continue;
        }
        if (cfg.ident_start)(c) {
            let start = i;
            while i < chars.len() && (cfg.ident_continue)(chars[i]) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            tokens.push(Token { kind: TokKind::Ident, text, line, col });
            col += i - start;
            continue;
        }
        return Err(ParseError::new(line, col, c.to_string(), format!("unexpected character `{c}`")));
    }
    tokens.push(Token { kind: TokKind::Eof, text: String::new(), line, col });
    Ok(tokens)
}

pub(crate) struct TokenStream {
    tokens: Vec<Token>,
    pos: usize,
}

impl TokenStream {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenStream { tokens, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    pub fn next(&mut self) -> Token {
        let tok = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    pub fn at_eof(&self) -> bool {
        self.peek().kind == TokKind::Eof
    }

    pub fn expect_punct(&mut self, c: char, context: &str) -> Result<Token, ParseError> {
        let tok = self.peek();
        if tok.is_punct(c) {
            return Ok(self.next());
        }
        let prefix = if matches!(c, ')' | ']' | '}') { "unbalanced brackets: " } else { "" };
        Err(tok.error(format!("{prefix}expected `{c}` {context}, found {}", tok.describe())))
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<Token, ParseError> {
        let tok = self.peek();
        if tok.is_ident() {
            return Ok(self.next());
        }
        Err(tok.error(format!("expected {what}, found {}", tok.describe())))
    }
}
