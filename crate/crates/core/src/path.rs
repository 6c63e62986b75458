use std::fmt;

use serde::{Serialize, Serializer};

/// One step of a [`FieldPath`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Segment {
    /// A named struct field, e.g. `project`.
    Field(String),
    /// A position in a list, e.g. `models[0]`.
    Index(usize),
    /// A keyed entry such as a subcategory id, e.g. `entries[ideation.improving]`.
    Key(String),
}

/// Address of a field inside a card, used by error messages and findings.
///
/// Rendered as `models[0].dates`, `entries[writing.generating].detail`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FieldPath {
    segments: Vec<Segment>,
}

impl FieldPath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn field(name: impl Into<String>) -> Self {
        Self::root().push_field(name)
    }

    pub fn push_field(mut self, name: impl Into<String>) -> Self {
        self.segments.push(Segment::Field(name.into()));
        self
    }

    pub fn push_index(mut self, index: usize) -> Self {
        self.segments.push(Segment::Index(index));
        self
    }

    pub fn push_key(mut self, key: impl Into<String>) -> Self {
        self.segments.push(Segment::Key(key.into()));
        self
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    /// True when `self` equals `prefix` or lies underneath it.
    pub fn starts_with(&self, prefix: &FieldPath) -> bool {
        self.segments.starts_with(&prefix.segments)
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return f.write_str("$");
        }
        for (i, segment) in self.segments.iter().enumerate() {
            match segment {
                Segment::Field(name) if i == 0 => f.write_str(name)?,
                Segment::Field(name) => write!(f, ".{name}")?,
                Segment::Index(index) => write!(f, "[{index}]")?,
                Segment::Key(key) => write!(f, "[{key}]")?,
            }
        }
        Ok(())
    }
}

impl Serialize for FieldPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_mixed_segments() {
        let path = FieldPath::field("entries")
            .push_key("ideation.improving")
            .push_field("detail");
        assert_eq!(path.to_string(), "entries[ideation.improving].detail");
        assert_eq!(
            FieldPath::field("models")
                .push_index(0)
                .push_field("dates")
                .to_string(),
            "models[0].dates"
        );
        assert_eq!(FieldPath::root().to_string(), "$");
    }

    #[test]
    fn prefix_matching() {
        let project = FieldPath::field("project");
        let name = project.clone().push_field("name");
        assert!(name.starts_with(&project));
        assert!(!project.starts_with(&name));
    }
}
