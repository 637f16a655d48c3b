//! Line-oriented comment lexer.
//!
//! Only code, string and comment states are modelled. Each language is
//! described by its line markers, block delimiters and string rules; the few
//! irregular cases (Perl POD, fixed-form Fortran, PHP attributes, C++ digit
//! separators) are special-cased here.

use super::language::{Escape, SourceLanguage, StringRule};
use super::{CommentKind, LexDiagnostic, SourceComment};

/// Grouping key for fixed-form Fortran column-1 comments (`C`, `c`, `*`, `!`).
const FIXED_FORM_MARKER: &str = "C";

enum State {
    Code,
    Block {
        start: usize,
        close: &'static str,
        parts: Vec<String>,
    },
    Str {
        rule: StringRule,
        start: usize,
    },
    Pod {
        start: usize,
        parts: Vec<String>,
    },
}

struct Group {
    marker: &'static str,
    start: usize,
    end: usize,
    parts: Vec<String>,
}

pub(crate) struct Lexer {
    language: SourceLanguage,
    fixed_form: bool,
    file: String,
    state: State,
    group: Option<Group>,
    comments: Vec<SourceComment>,
    diagnostics: Vec<LexDiagnostic>,
    // Perl data section (after __END__ / __DATA__): only POD is recognised.
    data_section: bool,
}

impl Lexer {
    pub(crate) fn new(language: SourceLanguage, fixed_form: bool, file: String) -> Self {
        Lexer {
            language,
            fixed_form,
            file,
            state: State::Code,
            group: None,
            comments: Vec::new(),
            diagnostics: Vec::new(),
            data_section: false,
        }
    }

    pub(crate) fn run(mut self, text: &str) -> (Vec<SourceComment>, Vec<LexDiagnostic>) {
        let mut last_line = 0;
        for (idx, line) in text.lines().enumerate() {
            last_line = idx + 1;
            self.lex_line(line, idx + 1);
        }
        self.finish(last_line);
        let comments = self
            .comments
            .into_iter()
            .filter(|c| !c.raw_text.is_empty())
            .collect();
        (comments, self.diagnostics)
    }

    fn finish(&mut self, last_line: usize) {
        match std::mem::replace(&mut self.state, State::Code) {
            State::Code => {}
            State::Block { start, parts, .. } => {
                self.diagnostics
                    .push(LexDiagnostic::UnterminatedBlockComment { line: start });
                self.block(start, last_line.max(start), clean_block(&parts));
            }
            State::Str { start, .. } => {
                self.diagnostics
                    .push(LexDiagnostic::UnterminatedString { line: start });
            }
            // POD running to end of file is legal Perl.
            State::Pod { start, parts } => {
                self.block(start, last_line.max(start), join_parts(&parts));
            }
        }
        self.flush_group();
    }

    fn lex_line(&mut self, line: &str, line_no: usize) {
        if self.language == SourceLanguage::Perl && self.perl_line(line, line_no) {
            return;
        }
        if self.fixed_form && matches!(self.state, State::Code) {
            if let Some(first) = line.chars().next() {
                if matches!(first, 'C' | 'c' | '*' | '!') {
                    let text = line[first.len_utf8()..]
                        .trim_start_matches(['*', '!'])
                        .trim();
                    self.line_comment(line_no, FIXED_FORM_MARKER, text.to_string(), true);
                    return;
                }
            }
        }

        // Anything other than whitespace seen before the current position.
        let mut code_seen = !matches!(self.state, State::Code);
        let mut i = 0;
        while i <= line.len() {
            match &mut self.state {
                State::Pod { .. } => unreachable!("POD lines are consumed by perl_line"),
                State::Block { close, parts, start } => {
                    let close = *close;
                    match line[i..].find(close) {
                        Some(j) => {
                            parts.push(line[i..i + j].to_string());
                            let text = clean_block(parts);
                            let start = *start;
                            self.state = State::Code;
                            self.block(start, line_no, text);
                            i += j + close.len();
                            code_seen = true;
                        }
                        None => {
                            parts.push(line[i..].to_string());
                            return;
                        }
                    }
                }
                State::Str { rule, start } => {
                    let (rule, start) = (*rule, *start);
                    match scan_string(line, i, rule) {
                        StringEnd::Closed(next) => {
                            self.state = State::Code;
                            i = next;
                        }
                        StringEnd::Continued => return,
                        StringEnd::Open => {
                            if !rule.multiline {
                                self.diagnostics
                                    .push(LexDiagnostic::UnterminatedString { line: start });
                                self.state = State::Code;
                            }
                            return;
                        }
                    }
                }
                State::Code => {
                    if i == line.len() {
                        return;
                    }
                    let rest = &line[i..];
                    if let Some(&(open, close)) = self
                        .language
                        .block_delimiters()
                        .iter()
                        .find(|(open, _)| rest.starts_with(open))
                    {
                        self.state = State::Block {
                            start: line_no,
                            close,
                            parts: Vec::new(),
                        };
                        i += open.len();
                        continue;
                    }
                    if let Some(marker) = self.line_marker_at(line, i) {
                        let body = &line[i + marker.len()..];
                        let strip: &[char] = match marker {
                            "//" => &['/'],
                            "#" => &['#'],
                            _ => &['!'],
                        };
                        let text = body.trim_start_matches(strip).trim().to_string();
                        self.line_comment(line_no, marker, text, !code_seen);
                        return;
                    }
                    if let Some(rule) = self.string_at(line, i) {
                        self.state = State::Str {
                            rule,
                            start: line_no,
                        };
                        i += rule.open.len();
                        code_seen = true;
                        continue;
                    }
                    let c = rest.chars().next().expect("non-empty rest");
                    if !c.is_whitespace() {
                        code_seen = true;
                    }
                    i += c.len_utf8();
                }
            }
        }
    }

    /// Handles POD and the data section. Returns true when the line was consumed.
    fn perl_line(&mut self, line: &str, line_no: usize) -> bool {
        if let State::Pod { parts, start } = &mut self.state {
            if is_pod_cut(line) {
                let text = join_parts(parts);
                let start = *start;
                self.state = State::Code;
                self.block(start, line_no, text);
            } else {
                parts.push(strip_pod_directive(line).to_string());
            }
            return true;
        }
        if !matches!(self.state, State::Code) {
            return false;
        }
        if is_pod_directive(line) {
            if !is_pod_cut(line) {
                self.state = State::Pod {
                    start: line_no,
                    parts: vec![strip_pod_directive(line).to_string()],
                };
            }
            return true;
        }
        if self.data_section {
            return true;
        }
        let trimmed = line.trim_end();
        if trimmed == "__END__" || trimmed == "__DATA__" {
            self.data_section = true;
            return true;
        }
        false
    }

    fn line_marker_at(&self, line: &str, i: usize) -> Option<&'static str> {
        let rest = &line[i..];
        let marker = *self
            .language
            .line_markers()
            .iter()
            .find(|m| rest.starts_with(**m))?;
        let prev = line[..i].chars().next_back();
        match self.language {
            // PHP 8 attributes: #[Attr]
            SourceLanguage::Php if marker == "#" && rest[1..].starts_with('[') => None,
            // $#array is the last index of @array
            SourceLanguage::Perl if prev == Some('$') => None,
            // column 6 marks a continuation line in fixed form
            SourceLanguage::Fortran if self.fixed_form && line[..i].chars().count() == 5 => None,
            _ => Some(marker),
        }
    }

    fn string_at(&self, line: &str, i: usize) -> Option<StringRule> {
        let rest = &line[i..];
        let rule = *self
            .language
            .string_rules()
            .iter()
            .find(|r| rest.starts_with(r.open))?;
        if rule.open == "'"
            && matches!(self.language, SourceLanguage::Cpp | SourceLanguage::C)
            && is_digit_separator(line, i)
        {
            return None;
        }
        Some(rule)
    }

    fn line_comment(&mut self, line_no: usize, marker: &'static str, text: String, whole_line: bool) {
        if whole_line {
            if let Some(group) = &mut self.group {
                if group.marker == marker && group.end + 1 == line_no {
                    group.end = line_no;
                    group.parts.push(text);
                    return;
                }
            }
            self.flush_group();
            self.group = Some(Group {
                marker,
                start: line_no,
                end: line_no,
                parts: vec![text],
            });
        } else {
            self.flush_group();
            self.push(CommentKind::Line, line_no, line_no, text);
        }
    }

    fn block(&mut self, start: usize, end: usize, text: String) {
        self.flush_group();
        self.push(CommentKind::Block, start, end, text);
    }

    fn flush_group(&mut self) {
        if let Some(group) = self.group.take() {
            let kind = if group.end > group.start {
                CommentKind::MergedLineGroup
            } else {
                CommentKind::Line
            };
            self.push(kind, group.start, group.end, join_parts(&group.parts));
        }
    }

    /// Appends a comment, coalescing it into the previous one when both
    /// share a line so that spans stay disjoint.
    fn push(&mut self, kind: CommentKind, start: usize, end: usize, text: String) {
        if let Some(last) = self.comments.last_mut() {
            if last.line_end == start {
                if !text.is_empty() {
                    if !last.raw_text.is_empty() {
                        last.raw_text.push(' ');
                    }
                    last.raw_text.push_str(&text);
                }
                last.line_end = end.max(last.line_end);
                return;
            }
        }
        self.comments.push(SourceComment {
            repo: String::new(),
            file_path: self.file.clone(),
            line_start: start,
            line_end: end,
            language: self.language,
            kind,
            raw_text: text,
        });
    }
}

enum StringEnd {
    /// Closed; scanning resumes at this byte offset.
    Closed(usize),
    /// Backslash-newline: the literal continues on the next line.
    Continued,
    Open,
}

fn scan_string(line: &str, from: usize, rule: StringRule) -> StringEnd {
    let mut i = from;
    while i < line.len() {
        let rest = &line[i..];
        if rule.escape == Escape::Backslash && rest.starts_with('\\') {
            let mut chars = rest.chars();
            chars.next();
            match chars.next() {
                Some(c) => i += 1 + c.len_utf8(),
                None => return StringEnd::Continued,
            }
            continue;
        }
        if rest.starts_with(rule.close) {
            let after = i + rule.close.len();
            if rule.escape == Escape::Doubled && line[after..].starts_with(rule.close) {
                i = after + rule.close.len();
                continue;
            }
            return StringEnd::Closed(after);
        }
        i += rest.chars().next().map_or(1, char::len_utf8);
    }
    StringEnd::Open
}

/// `1'000'000` and `0xFF'FF` in C++14 / C23.
fn is_digit_separator(line: &str, i: usize) -> bool {
    let before = &line[..i];
    let token_start = before
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphanumeric())
        .last()
        .map(|(idx, _)| idx);
    let starts_with_digit = token_start
        .and_then(|s| before[s..].chars().next())
        .is_some_and(|c| c.is_ascii_digit());
    let next_alnum = line[i + 1..]
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphanumeric());
    starts_with_digit && next_alnum
}

fn is_pod_directive(line: &str) -> bool {
    let mut chars = line.chars();
    chars.next() == Some('=') && chars.next().is_some_and(|c| c.is_ascii_alphabetic())
}

fn is_pod_cut(line: &str) -> bool {
    line.strip_prefix("=cut")
        .is_some_and(|rest| rest.is_empty() || rest.starts_with(char::is_whitespace))
}

fn strip_pod_directive(line: &str) -> &str {
    if is_pod_directive(line) {
        match line.find(char::is_whitespace) {
            Some(ws) => line[ws..].trim(),
            None => "",
        }
    } else {
        line.trim()
    }
}

fn join_parts(parts: &[String]) -> String {
    let mut out = String::new();
    for part in parts.iter().map(|p| p.trim()).filter(|p| !p.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(part);
    }
    out
}

/// Trims every interior line and drops `*` decoration at either end.
fn clean_block(parts: &[String]) -> String {
    let cleaned: Vec<String> = parts
        .iter()
        .map(|p| p.trim().trim_matches('*').trim().to_string())
        .collect();
    join_parts(&cleaned)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(lang: SourceLanguage, text: &str) -> (Vec<SourceComment>, Vec<LexDiagnostic>) {
        Lexer::new(lang, false, "f".into()).run(text)
    }

    fn spans(comments: &[SourceComment]) -> Vec<(usize, usize, CommentKind, &str)> {
        comments
            .iter()
            .map(|c| (c.line_start, c.line_end, c.kind, c.raw_text.as_str()))
            .collect()
    }

    #[test]
    fn python_string_marker_and_merged_group() {
        let (c, d) = lex(
            SourceLanguage::Python,
            "x = \"# not a comment\"\n# TODO fix\n# later",
        );
        assert!(d.is_empty());
        assert_eq!(
            spans(&c),
            vec![(2, 3, CommentKind::MergedLineGroup, "TODO fix later")]
        );
    }

    #[test]
    fn c_block_joins_lines() {
        let (c, _) = lex(SourceLanguage::C, "/* a\n b */");
        assert_eq!(spans(&c), vec![(1, 2, CommentKind::Block, "a b")]);
    }

    #[test]
    fn empty_file() {
        let (c, d) = lex(SourceLanguage::Go, "");
        assert!(c.is_empty() && d.is_empty());
    }

    #[test]
    fn blank_line_breaks_group() {
        let (c, _) = lex(SourceLanguage::Go, "// a\n// b\n\n// c\n");
        assert_eq!(
            spans(&c),
            vec![
                (1, 2, CommentKind::MergedLineGroup, "a b"),
                (4, 4, CommentKind::Line, "c")
            ]
        );
    }

    #[test]
    fn trailing_comment_is_not_merged() {
        let (c, _) = lex(SourceLanguage::Python, "x = 1  # one\n# two\n# three\n");
        assert_eq!(
            spans(&c),
            vec![
                (1, 1, CommentKind::Line, "one"),
                (2, 3, CommentKind::MergedLineGroup, "two three")
            ]
        );
    }

    #[test]
    fn php_markers_do_not_merge_across_kinds() {
        let (c, _) = lex(SourceLanguage::Php, "<?php\n# a\n// b\n#[Attr]\n");
        assert_eq!(
            spans(&c),
            vec![(2, 2, CommentKind::Line, "a"), (3, 3, CommentKind::Line, "b")]
        );
    }

    #[test]
    fn same_line_comments_coalesce() {
        let (c, _) = lex(SourceLanguage::C, "int x; /* a */ int y; // b\n/* c\n d */ // e\n");
        assert_eq!(
            spans(&c),
            vec![
                (1, 1, CommentKind::Block, "a b"),
                (2, 3, CommentKind::Block, "c d e")
            ]
        );
    }

    #[test]
    fn javadoc_decoration_is_stripped() {
        let (c, _) = lex(
            SourceLanguage::Java,
            "/**\n * Returns the thing.\n * @return x\n */\nint f();",
        );
        assert_eq!(spans(&c), vec![(1, 4, CommentKind::Block, "Returns the thing. @return x")]);
    }

    #[test]
    fn unterminated_block_is_emitted_truncated() {
        let (c, d) = lex(SourceLanguage::C, "int a;\n/* dangling\nstill here\n");
        assert_eq!(d, vec![LexDiagnostic::UnterminatedBlockComment { line: 2 }]);
        assert_eq!(spans(&c), vec![(2, 3, CommentKind::Block, "dangling still here")]);
    }

    #[test]
    fn unterminated_string_resumes_next_line() {
        let (c, d) = lex(SourceLanguage::C, "char *s = \"oops // no\n// yes\n");
        assert_eq!(d, vec![LexDiagnostic::UnterminatedString { line: 1 }]);
        assert_eq!(spans(&c), vec![(2, 2, CommentKind::Line, "yes")]);
    }

    #[test]
    fn escaped_quotes_stay_inside_strings() {
        let (c, d) = lex(SourceLanguage::Java, r#"String s = "a \" // b"; // real"#);
        assert!(d.is_empty());
        assert_eq!(spans(&c), vec![(1, 1, CommentKind::Line, "real")]);
    }

    #[test]
    fn python_triple_quoted_strings_hide_markers() {
        let (c, _) = lex(
            SourceLanguage::Python,
            "s = '''\n# inside\n'''\n# outside\n",
        );
        assert_eq!(spans(&c), vec![(4, 4, CommentKind::Line, "outside")]);
    }

    #[test]
    fn go_raw_string_spans_lines() {
        let (c, _) = lex(SourceLanguage::Go, "s := `\n// not\n/* not */`\n// hack\n");
        assert_eq!(spans(&c), vec![(4, 4, CommentKind::Line, "hack")]);
    }

    #[test]
    fn typescript_template_literal() {
        let (c, _) = lex(SourceLanguage::TypeScript, "const s = `a ${b} // no`; /* yes */");
        assert_eq!(spans(&c), vec![(1, 1, CommentKind::Block, "yes")]);
    }

    #[test]
    fn cpp_digit_separator_is_not_a_char_literal() {
        let (c, d) = lex(SourceLanguage::Cpp, "int n = 1'000'000; // big\nchar q = u8'a'; // ch\n");
        assert!(d.is_empty());
        assert_eq!(
            spans(&c),
            vec![(1, 1, CommentKind::Line, "big"), (2, 2, CommentKind::Line, "ch")]
        );
    }

    #[test]
    fn perl_pod_and_dollar_hash() {
        let text = "my $n = $#list; # last\n=head1 NAME\n\nFoo - bar\n\n=cut\nprint 1;\n";
        let (c, _) = lex(SourceLanguage::Perl, text);
        assert_eq!(
            spans(&c),
            vec![
                (1, 1, CommentKind::Line, "last"),
                (2, 6, CommentKind::Block, "NAME Foo - bar")
            ]
        );
    }

    #[test]
    fn perl_data_section_only_keeps_pod() {
        let text = "1;\n__END__\n# not code\n=pod\nDocs\n=cut\n";
        let (c, _) = lex(SourceLanguage::Perl, text);
        assert_eq!(spans(&c), vec![(4, 6, CommentKind::Block, "Docs")]);
    }

    #[test]
    fn fortran_free_form() {
        let (c, _) = lex(
            SourceLanguage::Fortran,
            "x = 'it''s ! not'  ! real\n! a\n! b\n",
        );
        assert_eq!(
            spans(&c),
            vec![
                (1, 1, CommentKind::Line, "real"),
                (2, 3, CommentKind::MergedLineGroup, "a b")
            ]
        );
    }

    #[test]
    fn fortran_fixed_form() {
        let text = "C     compute flux\nc     twice\n      X = 1.0 ! inline\n     !  Y = 2\n* star\n";
        let (c, _) = Lexer::new(SourceLanguage::Fortran, true, "f.f".into()).run(text);
        assert_eq!(
            spans(&c),
            vec![
                (1, 2, CommentKind::MergedLineGroup, "compute flux twice"),
                (3, 3, CommentKind::Line, "inline"),
                (5, 5, CommentKind::Line, "star")
            ]
        );
    }

    #[test]
    fn crlf_line_endings() {
        let (c, _) = lex(SourceLanguage::C, "// a\r\n// b\r\nint x;\r\n");
        assert_eq!(spans(&c), vec![(1, 2, CommentKind::MergedLineGroup, "a b")]);
    }
}
