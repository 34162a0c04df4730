//! The closed set of 24 target languages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the 24 supported programming languages.
///
/// The discriminant is the stable class code (alphabetical order of the
/// canonical names), and every tie-break in the crate resolves to the
/// lowest code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
#[repr(u8)]
pub enum LanguageId {
    Assembly = 0,
    C,
    CSharp,
    Cpp,
    CoffeeScript,
    Go,
    Groovy,
    Haskell,
    Java,
    JavaScript,
    Lua,
    Matlab,
    ObjectiveC,
    Perl,
    Php,
    Python,
    R,
    Ruby,
    Scala,
    Sql,
    Swift,
    TypeScript,
    VbNet,
    Vba,
}

impl LanguageId {
    pub const COUNT: usize = 24;

    pub const ALL: [LanguageId; 24] = [
        LanguageId::Assembly,
        LanguageId::C,
        LanguageId::CSharp,
        LanguageId::Cpp,
        LanguageId::CoffeeScript,
        LanguageId::Go,
        LanguageId::Groovy,
        LanguageId::Haskell,
        LanguageId::Java,
        LanguageId::JavaScript,
        LanguageId::Lua,
        LanguageId::Matlab,
        LanguageId::ObjectiveC,
        LanguageId::Perl,
        LanguageId::Php,
        LanguageId::Python,
        LanguageId::R,
        LanguageId::Ruby,
        LanguageId::Scala,
        LanguageId::Sql,
        LanguageId::Swift,
        LanguageId::TypeScript,
        LanguageId::VbNet,
        LanguageId::Vba,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Canonical lowercase name, identical to the base Stack Overflow tag.
    pub fn as_str(self) -> &'static str {
        match self {
            LanguageId::Assembly => "assembly",
            LanguageId::C => "c",
            LanguageId::CSharp => "c#",
            LanguageId::Cpp => "c++",
            LanguageId::CoffeeScript => "coffeescript",
            LanguageId::Go => "go",
            LanguageId::Groovy => "groovy",
            LanguageId::Haskell => "haskell",
            LanguageId::Java => "java",
            LanguageId::JavaScript => "javascript",
            LanguageId::Lua => "lua",
            LanguageId::Matlab => "matlab",
            LanguageId::ObjectiveC => "objective-c",
            LanguageId::Perl => "perl",
            LanguageId::Php => "php",
            LanguageId::Python => "python",
            LanguageId::R => "r",
            LanguageId::Ruby => "ruby",
            LanguageId::Scala => "scala",
            LanguageId::Sql => "sql",
            LanguageId::Swift => "swift",
            LanguageId::TypeScript => "typescript",
            LanguageId::VbNet => "vb.net",
            LanguageId::Vba => "vba",
        }
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language `{0}`")]
pub struct UnknownLanguage(pub String);

impl FromStr for LanguageId {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        LanguageId::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == lower)
            .ok_or(UnknownLanguage(lower))
    }
}

impl From<LanguageId> for &'static str {
    fn from(l: LanguageId) -> Self {
        l.as_str()
    }
}

impl TryFrom<String> for LanguageId {
    type Error = UnknownLanguage;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_alphabetical_canonical_order() {
        let names: Vec<&str> = LanguageId::ALL.iter().map(|l| l.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for (i, l) in LanguageId::ALL.iter().enumerate() {
            assert_eq!(l.code() as usize, i);
            assert_eq!(LanguageId::from_code(i as u8), Some(*l));
        }
        assert_eq!(LanguageId::from_code(24), None);
    }

    #[test]
    fn parse_and_serde_use_canonical_names() {
        assert_eq!("C#".parse::<LanguageId>().unwrap(), LanguageId::CSharp);
        assert_eq!("vb.net".parse::<LanguageId>().unwrap(), LanguageId::VbNet);
        assert!("cobol".parse::<LanguageId>().is_err());
        let json = serde_json::to_string(&LanguageId::Cpp).unwrap();
        assert_eq!(json, "\"c++\"");
        let back: LanguageId = serde_json::from_str(&json).unwrap();
        assert_eq!(back, LanguageId::Cpp);
    }
}
