//! Card serialization.
//!
//! Five formats are produced: JSON, XML and CSV are lossless and can be read
//! back, BibTeX and LaTeX are export-only renderings of a finalized card.
//! All output is UTF-8 with `\n` line endings and no byte-order mark, and
//! every encoder first passes the card through [`canonicalize`], so equal
//! cards always produce identical bytes.

mod bibtex;
mod canonical;
mod csv;
mod json;
mod latex;
mod xml;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::card::{Card, CardError, Unmet};
use crate::path::FieldPath;
use crate::taxonomy::{Registry, Taxonomy, TaxonomyError};

pub use bibtex::{encode_bibtex, slug};
pub use canonical::canonicalize;
pub use csv::{decode_csv, encode_csv, CSV_HEADER};
pub use json::{decode_json, encode_json};
pub use latex::{encode_latex, escape_latex};
pub use xml::{decode_xml, encode_xml};

/// Rendering of absent optionals and unused subcategories.
pub const NOT_USED: &str = "Not used";

/// Redistribution terms carried by every export.
pub const LICENSE: &str = "CC BY-NC 4.0 (https://creativecommons.org/licenses/by-nc/4.0/)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Json,
    Xml,
    Csv,
    Bib,
    Tex,
}

impl Format {
    pub const ALL: [Format; 5] = [
        Format::Json,
        Format::Xml,
        Format::Csv,
        Format::Bib,
        Format::Tex,
    ];
    pub const LOSSLESS: [Format; 3] = [Format::Json, Format::Xml, Format::Csv];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Xml => "xml",
            Format::Csv => "csv",
            Format::Bib => "bib",
            Format::Tex => "tex",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            Format::Json => "application/json",
            Format::Xml => "application/xml",
            Format::Csv => "text/csv; charset=utf-8",
            Format::Bib => "application/x-bibtex; charset=utf-8",
            Format::Tex => "application/x-tex; charset=utf-8",
        }
    }

    pub fn is_lossless(self) -> bool {
        matches!(self, Format::Json | Format::Xml | Format::Csv)
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Format> {
        path.extension()?.to_str()?.parse().ok()
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown format `{0}` (expected json, xml, csv, bib or tex)")]
pub struct UnknownFormat(pub String);

impl FromStr for Format {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "xml" => Ok(Format::Xml),
            "csv" => Ok(Format::Csv),
            "bib" | "bibtex" => Ok(Format::Bib),
            "tex" | "latex" => Ok(Format::Tex),
            _ => Err(UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("{format} syntax error at line {line}, column {column}: {message}")]
    Syntax {
        format: Format,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: FieldPath, message: String },
    #[error("unknown taxonomy version `{0}`")]
    UnknownVersion(String),
    #[error("CSV header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("CSV row {row}: {message}")]
    RowShape { row: usize, message: String },
    #[error("CSV row {row}: unknown subcategory `{id}`")]
    UnknownSubcategory { row: usize, id: String },
    #[error("card is not finalized: {}", .0.iter().map(|u| u.path.to_string()).collect::<Vec<_>>().join(", "))]
    Unfinalized(Vec<Unmet>),
    #[error("{0} cannot be decoded; it is an export-only format")]
    ExportOnly(Format),
}

impl CodecError {
    pub(crate) fn schema(path: FieldPath, message: impl Into<String>) -> Self {
        Self::Schema {
            path,
            message: message.into(),
        }
    }
}

fn resolve<'r>(registry: &'r Registry, version: &str) -> Result<&'r Taxonomy, CodecError> {
    registry
        .get(version)
        .map(|t| t.as_ref())
        .map_err(|_| CodecError::UnknownVersion(version.to_string()))
}

/// Structural check shared by all decoders; returns the canonical card.
fn finish(taxonomy: &Taxonomy, card: Card) -> Result<Card, CodecError> {
    let card = canonicalize(&card);
    card.check(taxonomy).map_err(|e| match e {
        CardError::Taxonomy(TaxonomyError::UnknownVersion(v)) => CodecError::UnknownVersion(v),
        other => CodecError::schema(other.path(), other.to_string()),
    })?;
    Ok(card)
}

/// Reads a card in one of the lossless formats.
pub fn decode(registry: &Registry, format: Format, text: &str) -> Result<Card, CodecError> {
    match format {
        Format::Json => decode_json(registry, text),
        Format::Xml => decode_xml(registry, text),
        Format::Csv => decode_csv(registry, text),
        Format::Bib | Format::Tex => Err(CodecError::ExportOnly(format)),
    }
}

/// Encodes a card; export-only formats require a card that finalizes.
pub fn encode(taxonomy: &Taxonomy, card: &Card, format: Format) -> Result<String, CodecError> {
    Ok(match format {
        Format::Json => encode_json(taxonomy, card),
        Format::Xml => encode_xml(taxonomy, card),
        Format::Csv => encode_csv(taxonomy, card),
        Format::Bib => encode_bibtex(taxonomy, &finalize(taxonomy, card)?),
        Format::Tex => encode_latex(taxonomy, &finalize(taxonomy, card)?),
    })
}

fn finalize(taxonomy: &Taxonomy, card: &Card) -> Result<crate::card::FinalizedCard, CodecError> {
    card.finalize(taxonomy).map_err(|e| match e {
        CardError::Incomplete(unmet) => CodecError::Unfinalized(unmet),
        other => CodecError::Unfinalized(vec![Unmet {
            path: other.path(),
            message: other.to_string(),
        }]),
    })
}

/// The five renderings of one card.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportBundle {
    pub json: String,
    pub xml: String,
    pub csv: String,
    pub bibtex: String,
    pub latex: String,
}

impl ExportBundle {
    /// Renders all five formats; fails when the card does not finalize.
    pub fn build(taxonomy: &Taxonomy, card: &Card) -> Result<Self, CodecError> {
        let finalized = finalize(taxonomy, card)?;
        Ok(Self {
            json: encode_json(taxonomy, card),
            xml: encode_xml(taxonomy, card),
            csv: encode_csv(taxonomy, card),
            bibtex: encode_bibtex(taxonomy, &finalized),
            latex: encode_latex(taxonomy, &finalized),
        })
    }

    pub fn get(&self, format: Format) -> &str {
        match format {
            Format::Json => &self.json,
            Format::Xml => &self.xml,
            Format::Csv => &self.csv,
            Format::Bib => &self.bibtex,
            Format::Tex => &self.latex,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Format, &str)> {
        Format::ALL.into_iter().map(move |f| (f, self.get(f)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_names() {
        assert_eq!("bibtex".parse::<Format>().unwrap(), Format::Bib);
        assert_eq!("TEX".parse::<Format>().unwrap(), Format::Tex);
        assert!("pdf".parse::<Format>().is_err());
        assert_eq!(
            Format::from_path(std::path::Path::new("out/card.csv")),
            Some(Format::Csv)
        );
    }

    #[test]
    fn export_only_formats_are_not_decodable() {
        assert_eq!(
            decode(&Registry::builtin(), Format::Tex, ""),
            Err(CodecError::ExportOnly(Format::Tex))
        );
    }
}
