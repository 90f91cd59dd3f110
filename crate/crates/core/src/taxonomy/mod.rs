//! The Arabic Learner Corpus error taxonomy, extended with merge and split
//! classes, plus a rule-based edit classifier and per-class reporting.

mod classify;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use classify::{char_distance, classify_edit, classify_edit_with};
pub use report::{classify_corpus, classify_corpus_with, ClassReport, ClassRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Coarse {
    Orthographic,
    Morphological,
    Syntactic,
    Semantic,
    Punctuation,
    Merge,
    Split,
}

impl Coarse {
    pub const ALL: [Coarse; 7] = [
        Coarse::Orthographic,
        Coarse::Morphological,
        Coarse::Syntactic,
        Coarse::Semantic,
        Coarse::Punctuation,
        Coarse::Merge,
        Coarse::Split,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coarse::Orthographic => "Orthographic",
            Coarse::Morphological => "Morphological",
            Coarse::Syntactic => "Syntactic",
            Coarse::Semantic => "Semantic",
            Coarse::Punctuation => "Punctuation",
            Coarse::Merge => "Merge",
            Coarse::Split => "Split",
        }
    }

    /// Column label used in per-class tables.
    pub fn short(self) -> &'static str {
        match self {
            Coarse::Orthographic => "ORTH",
            Coarse::Morphological => "MORPH",
            Coarse::Syntactic => "SYN",
            Coarse::Semantic => "SEM",
            Coarse::Punctuation => "PUNCT",
            Coarse::Merge => "MERGE",
            Coarse::Split => "SPLIT",
        }
    }

    pub fn codes(self) -> impl Iterator<Item = FineCode> {
        FineCode::ALL
            .into_iter()
            .filter(move |c| c.coarse() == self)
    }
}

impl fmt::Display for Coarse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! fine_codes {
    ($($code:ident => $coarse:ident, $desc:literal;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum FineCode { $($code),* }

        impl FineCode {
            pub const ALL: [FineCode; fine_codes!(@count $($code)*)] = [$(FineCode::$code),*];

            pub fn coarse(self) -> Coarse {
                match self { $(FineCode::$code => Coarse::$coarse),* }
            }

            pub fn as_str(self) -> &'static str {
                match self { $(FineCode::$code => stringify!($code)),* }
            }

            pub fn description(self) -> &'static str {
                match self { $(FineCode::$code => $desc),* }
            }
        }

        impl FromStr for FineCode {
            type Err = UnknownCode;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($code) => Ok(FineCode::$code),)*
                    _ => Err(UnknownCode(s.to_string())),
                }
            }
        }
    };
    (@count) => { 0 };
    (@count $head:ident $($tail:ident)*) => { 1 + fine_codes!(@count $($tail)*) };
}

fine_codes! {
    OH => Orthographic, "Hamza error";
    OT => Orthographic, "Confusion in Ha and Ta Mutadarrifatin";
    OA => Orthographic, "Confusion in Alif and Ya Mutadarrifatin";
    OW => Orthographic, "Confusion in Alif Fariqa";
    ON => Orthographic, "Confusion between Nun and Tanwin";
    OS => Orthographic, "Shortening the long vowels";
    OG => Orthographic, "Lengthening the short vowels";
    OC => Orthographic, "Wrong order of word characters";
    OR => Orthographic, "Replacement in word character(s)";
    OD => Orthographic, "Additional character(s)";
    OM => Orthographic, "Missing character(s)";
    OO => Orthographic, "Other orthographic errors";
    MI => Morphological, "Word inflection";
    MT => Morphological, "Verb tense";
    MO => Morphological, "Other morphological errors";
    XF => Syntactic, "Definiteness";
    XG => Syntactic, "Gender";
    XN => Syntactic, "Number";
    XT => Syntactic, "Unnecessary word";
    XM => Syntactic, "Missing word";
    XO => Syntactic, "Other syntactic errors";
    SW => Semantic, "Word selection error";
    SF => Semantic, "Fasl wa wasl (confusion in conjunction use/non-use)";
    SO => Semantic, "Other semantic errors";
    PC => Punctuation, "Punctuation confusion";
    PT => Punctuation, "Unnecessary punctuation";
    PM => Punctuation, "Missing punctuation";
    PO => Punctuation, "Other errors in punctuation";
    MG => Merge, "Words are merged";
    SP => Split, "Words are split";
}

impl fmt::Display for FineCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown error class {0:?}")]
pub struct UnknownCode(pub String);

/// A coarse class, optionally refined by a fine code that belongs to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ErrorClass {
    coarse: Coarse,
    fine: Option<FineCode>,
}

impl ErrorClass {
    pub fn coarse_only(coarse: Coarse) -> Self {
        ErrorClass { coarse, fine: None }
    }

    pub fn coarse(&self) -> Coarse {
        self.coarse
    }

    pub fn fine(&self) -> Option<FineCode> {
        self.fine
    }

    /// The code written into an M² class field.
    pub fn label(&self) -> &'static str {
        match self.fine {
            Some(code) => code.as_str(),
            None => self.coarse.name(),
        }
    }

    /// Accepts a fine code (`OH`) or a coarse class name (`Orthographic`).
    pub fn from_label(label: &str) -> Option<Self> {
        if let Ok(code) = label.parse::<FineCode>() {
            return Some(code.into());
        }
        Coarse::ALL
            .into_iter()
            .find(|c| c.name() == label)
            .map(ErrorClass::coarse_only)
    }
}

impl From<FineCode> for ErrorClass {
    fn from(code: FineCode) -> Self {
        ErrorClass {
            coarse: code.coarse(),
            fine: Some(code),
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The full taxonomy, one class per fine code.
pub fn full_taxonomy() -> Vec<ErrorClass> {
    FineCode::ALL.into_iter().map(ErrorClass::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_codes_across_seven_classes() {
        assert_eq!(FineCode::ALL.len(), 30);
        let counts: Vec<usize> = Coarse::ALL.iter().map(|c| c.codes().count()).collect();
        assert_eq!(counts, vec![12, 3, 6, 3, 4, 1, 1]);
    }

    #[test]
    fn labels_round_trip() {
        for code in FineCode::ALL {
            let class = ErrorClass::from(code);
            assert_eq!(ErrorClass::from_label(class.label()), Some(class));
        }
        assert_eq!(
            ErrorClass::from_label("Semantic"),
            Some(ErrorClass::coarse_only(Coarse::Semantic))
        );
        assert_eq!(ErrorClass::from_label("Edit"), None);
    }
}
