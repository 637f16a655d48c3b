use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Languages the extractor knows how to lex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceLanguage {
    C,
    Cpp,
    Python,
    Perl,
    Fortran,
    TypeScript,
    Go,
    Php,
    Java,
}

/// How the contents of a string literal are escaped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Escape {
    /// `\x` skips the next character.
    Backslash,
    /// A doubled closing delimiter stands for itself (`'it''s'`).
    Doubled,
    /// Raw string, nothing is escaped.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StringRule {
    pub open: &'static str,
    pub close: &'static str,
    pub escape: Escape,
    pub multiline: bool,
}

const fn rule(open: &'static str, escape: Escape, multiline: bool) -> StringRule {
    StringRule {
        open,
        close: open,
        escape,
        multiline,
    }
}

const C_BLOCK: &[(&str, &str)] = &[("/*", "*/")];
const C_STRINGS: &[StringRule] = &[
    rule("\"", Escape::Backslash, false),
    rule("'", Escape::Backslash, false),
];
const JAVA_STRINGS: &[StringRule] = &[
    rule("\"\"\"", Escape::Backslash, true),
    rule("\"", Escape::Backslash, false),
    rule("'", Escape::Backslash, false),
];
const TS_STRINGS: &[StringRule] = &[
    rule("\"", Escape::Backslash, false),
    rule("'", Escape::Backslash, false),
    rule("`", Escape::Backslash, true),
];
const GO_STRINGS: &[StringRule] = &[
    rule("\"", Escape::Backslash, false),
    rule("'", Escape::Backslash, false),
    rule("`", Escape::None, true),
];
const PYTHON_STRINGS: &[StringRule] = &[
    rule("\"\"\"", Escape::Backslash, true),
    rule("'''", Escape::Backslash, true),
    rule("\"", Escape::Backslash, false),
    rule("'", Escape::Backslash, false),
];
const PERL_STRINGS: &[StringRule] = &[
    rule("\"", Escape::Backslash, false),
    rule("'", Escape::Backslash, false),
];
const PHP_STRINGS: &[StringRule] = &[
    rule("\"", Escape::Backslash, true),
    rule("'", Escape::Backslash, true),
];
const FORTRAN_STRINGS: &[StringRule] = &[
    rule("'", Escape::Doubled, false),
    rule("\"", Escape::Doubled, false),
];

/// Extension table. Every extension maps to exactly one language.
const EXTENSIONS: &[(&str, SourceLanguage)] = &[
    ("c", SourceLanguage::C),
    ("h", SourceLanguage::C),
    ("cc", SourceLanguage::Cpp),
    ("cpp", SourceLanguage::Cpp),
    ("cxx", SourceLanguage::Cpp),
    ("c++", SourceLanguage::Cpp),
    ("hh", SourceLanguage::Cpp),
    ("hpp", SourceLanguage::Cpp),
    ("hxx", SourceLanguage::Cpp),
    ("cu", SourceLanguage::Cpp),
    ("cuh", SourceLanguage::Cpp),
    ("py", SourceLanguage::Python),
    ("pyi", SourceLanguage::Python),
    ("pl", SourceLanguage::Perl),
    ("pm", SourceLanguage::Perl),
    ("t", SourceLanguage::Perl),
    ("pod", SourceLanguage::Perl),
    ("f", SourceLanguage::Fortran),
    ("for", SourceLanguage::Fortran),
    ("ftn", SourceLanguage::Fortran),
    ("f77", SourceLanguage::Fortran),
    ("f90", SourceLanguage::Fortran),
    ("f95", SourceLanguage::Fortran),
    ("f03", SourceLanguage::Fortran),
    ("f08", SourceLanguage::Fortran),
    ("ts", SourceLanguage::TypeScript),
    ("tsx", SourceLanguage::TypeScript),
    ("mts", SourceLanguage::TypeScript),
    ("cts", SourceLanguage::TypeScript),
    ("go", SourceLanguage::Go),
    ("php", SourceLanguage::Php),
    ("java", SourceLanguage::Java),
];

/// Fortran extensions that use the fixed (column-oriented) source form.
const FIXED_FORM_EXTENSIONS: &[&str] = &["f", "for", "ftn", "f77"];

impl SourceLanguage {
    pub const ALL: [SourceLanguage; 9] = [
        SourceLanguage::C,
        SourceLanguage::Cpp,
        SourceLanguage::Python,
        SourceLanguage::Perl,
        SourceLanguage::Fortran,
        SourceLanguage::TypeScript,
        SourceLanguage::Go,
        SourceLanguage::Php,
        SourceLanguage::Java,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceLanguage::C => "c",
            SourceLanguage::Cpp => "cpp",
            SourceLanguage::Python => "python",
            SourceLanguage::Perl => "perl",
            SourceLanguage::Fortran => "fortran",
            SourceLanguage::TypeScript => "typescript",
            SourceLanguage::Go => "go",
            SourceLanguage::Php => "php",
            SourceLanguage::Java => "java",
        }
    }

    pub fn extensions() -> &'static [(&'static str, SourceLanguage)] {
        EXTENSIONS
    }

    /// Maps a path to a language by (case-insensitive) extension.
    pub fn detect(path: &Path) -> Option<SourceLanguage> {
        let ext = extension_lower(path)?;
        EXTENSIONS
            .iter()
            .find(|(e, _)| *e == ext)
            .map(|(_, lang)| *lang)
    }

    pub fn line_markers(self) -> &'static [&'static str] {
        match self {
            SourceLanguage::C
            | SourceLanguage::Cpp
            | SourceLanguage::TypeScript
            | SourceLanguage::Go
            | SourceLanguage::Java => &["//"],
            SourceLanguage::Python | SourceLanguage::Perl => &["#"],
            SourceLanguage::Php => &["//", "#"],
            SourceLanguage::Fortran => &["!"],
        }
    }

    /// Block comment delimiters. Perl POD blocks are line-directive based
    /// (`=pod` .. `=cut`) and handled separately by the lexer.
    pub fn block_delimiters(self) -> &'static [(&'static str, &'static str)] {
        match self {
            SourceLanguage::C
            | SourceLanguage::Cpp
            | SourceLanguage::TypeScript
            | SourceLanguage::Go
            | SourceLanguage::Java
            | SourceLanguage::Php => C_BLOCK,
            SourceLanguage::Python | SourceLanguage::Perl | SourceLanguage::Fortran => &[],
        }
    }

    /// String literal rules, longest opener first.
    pub fn string_rules(self) -> &'static [StringRule] {
        match self {
            SourceLanguage::C | SourceLanguage::Cpp => C_STRINGS,
            SourceLanguage::Java => JAVA_STRINGS,
            SourceLanguage::TypeScript => TS_STRINGS,
            SourceLanguage::Go => GO_STRINGS,
            SourceLanguage::Python => PYTHON_STRINGS,
            SourceLanguage::Perl => PERL_STRINGS,
            SourceLanguage::Php => PHP_STRINGS,
            SourceLanguage::Fortran => FORTRAN_STRINGS,
        }
    }
}

impl fmt::Display for SourceLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceLanguage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let alias = match lower.as_str() {
            "c++" | "cxx" => "cpp",
            "ts" => "typescript",
            "py" => "python",
            "golang" => "go",
            other => other,
        };
        SourceLanguage::ALL
            .into_iter()
            .find(|l| l.name() == alias)
            .ok_or_else(|| format!("unsupported language `{s}`"))
    }
}

pub(crate) fn extension_lower(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

pub fn is_fixed_form_fortran(path: &Path) -> bool {
    extension_lower(path).is_some_and(|ext| FIXED_FORM_EXTENSIONS.contains(&ext.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn detect_examples() {
        assert_eq!(
            SourceLanguage::detect(Path::new("src/lib.f90")),
            Some(SourceLanguage::Fortran)
        );
        assert_eq!(SourceLanguage::detect(Path::new("Makefile")), None);
        assert_eq!(
            SourceLanguage::detect(Path::new("a/b/module.TS")),
            Some(SourceLanguage::TypeScript)
        );
        assert_eq!(SourceLanguage::detect(Path::new("img.png")), None);
    }

    #[test]
    fn extension_table_is_injective_and_lowercase() {
        let mut seen = HashSet::new();
        for (ext, _) in EXTENSIONS {
            assert_eq!(*ext, ext.to_ascii_lowercase());
            assert!(seen.insert(*ext), "duplicate extension {ext}");
        }
        // every language is reachable from some extension
        for lang in SourceLanguage::ALL {
            assert!(EXTENSIONS.iter().any(|(_, l)| *l == lang), "{lang} unmapped");
        }
    }

    #[test]
    fn every_language_has_a_comment_syntax() {
        for lang in SourceLanguage::ALL {
            assert!(!lang.line_markers().is_empty() || !lang.block_delimiters().is_empty());
        }
    }

    #[test]
    fn fortran_form_follows_extension() {
        assert!(is_fixed_form_fortran(Path::new("model.F")));
        assert!(is_fixed_form_fortran(Path::new("old.f77")));
        assert!(!is_fixed_form_fortran(Path::new("new.f90")));
        assert!(!is_fixed_form_fortran(Path::new("new.F08")));
    }

    #[test]
    fn parse_language_names() {
        assert_eq!("go".parse::<SourceLanguage>(), Ok(SourceLanguage::Go));
        assert_eq!("C++".parse::<SourceLanguage>(), Ok(SourceLanguage::Cpp));
        assert!("rust".parse::<SourceLanguage>().is_err());
    }
}
