//! Directory-backed persistence.
//!
//! Layout under the data directory:
//!
//! ```text
//! sessions/<id>.json
//! cards/<id>/meta.json
//! cards/<id>/card.{json,xml,csv,bib,tex}
//! ```
//!
//! Every write goes to a temporary name first and is renamed into place, so
//! a reader sees either the old state or the complete new one. A card
//! directory is assembled under `cards/.tmp-<id>` and renamed as a whole.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use aiusage_core::codecs::{ExportBundle, Format};
use aiusage_core::{Card, Session, ValidationReport};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// A finalized card with every export, immutable once written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredCard {
    pub card_id: String,
    pub card: Card,
    pub created_at: DateTime<Utc>,
    pub bundle: ExportBundle,
    pub meta: CardMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CardMeta {
    pub card_id: String,
    pub created_at: DateTime<Utc>,
    pub taxonomy_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub responsible: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("not found")]
    NotFound,
    #[error("stored document is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

/// Ids are generated by us; anything else is rejected before touching disk.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("sessions"))?;
        fs::create_dir_all(root.join("cards"))?;
        // Leftovers from an interrupted card write are never visible; drop them.
        for entry in fs::read_dir(root.join("cards"))? {
            let entry = entry?;
            if entry.file_name().to_string_lossy().starts_with(".tmp-") {
                fs::remove_dir_all(entry.path())?;
            }
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    fn card_dir(&self, id: &str) -> PathBuf {
        self.root.join("cards").join(id)
    }

    pub fn save_session(&self, session: &Session) -> Result<(), StoreError> {
        let text = serde_json::to_vec_pretty(session).expect("sessions serialize");
        write_atomic(&self.session_path(&session.id), &text)?;
        Ok(())
    }

    pub fn load_session(&self, id: &str) -> Result<Session, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound);
        }
        let bytes = match fs::read(self.session_path(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt(e.to_string()))
    }

    /// Writes the card with its bundle under a fresh id.
    pub fn insert_card(
        &self,
        card: &Card,
        bundle: ExportBundle,
        report: &ValidationReport,
        session_id: Option<&str>,
    ) -> Result<StoredCard, StoreError> {
        let card_id = uuid::Uuid::new_v4().simple().to_string();
        let meta = CardMeta {
            card_id: card_id.clone(),
            created_at: Utc::now(),
            taxonomy_version: card.taxonomy_version.clone(),
            session_id: session_id.map(str::to_string),
            responsible: report.responsible,
        };
        let tmp = self.root.join("cards").join(format!(".tmp-{card_id}"));
        fs::create_dir(&tmp)?;
        let result = (|| -> io::Result<()> {
            for (format, text) in bundle.iter() {
                let mut file = fs::File::create(tmp.join(format!("card.{}", format.extension())))?;
                file.write_all(text.as_bytes())?;
                file.sync_all()?;
            }
            let mut file = fs::File::create(tmp.join("meta.json"))?;
            file.write_all(&serde_json::to_vec_pretty(&meta).expect("meta serializes"))?;
            file.sync_all()?;
            fs::rename(&tmp, self.card_dir(&card_id))
        })();
        if let Err(e) = result {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e.into());
        }
        Ok(StoredCard {
            card_id,
            card: card.clone(),
            created_at: meta.created_at,
            bundle,
            meta,
        })
    }

    pub fn export(&self, id: &str, format: Format) -> Result<String, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound);
        }
        let path = self
            .card_dir(id)
            .join(format!("card.{}", format.extension()));
        match fs::read_to_string(path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound),
            Err(e) => Err(e.into()),
        }
    }

    pub fn meta(&self, id: &str) -> Result<CardMeta, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound);
        }
        let bytes = match fs::read(self.card_dir(id).join("meta.json")) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt(e.to_string()))
    }

    /// Reads a stored card back, decoding the card from its JSON export.
    pub fn load_card(
        &self,
        id: &str,
        registry: &aiusage_core::Registry,
    ) -> Result<StoredCard, StoreError> {
        let meta = self.meta(id)?;
        let mut texts = Vec::new();
        for format in Format::ALL {
            texts.push(self.export(id, format)?);
        }
        let [json, xml, csv, bibtex, latex]: [String; 5] = texts.try_into().expect("five formats");
        let card = aiusage_core::codecs::decode(registry, Format::Json, &json)
            .map_err(|e| StoreError::Corrupt(e.to_string()))?;
        Ok(StoredCard {
            card_id: meta.card_id.clone(),
            card,
            created_at: meta.created_at,
            bundle: ExportBundle {
                json,
                xml,
                csv,
                bibtex,
                latex,
            },
            meta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aiusage_core::{assess, builtin_v1, Registry};

    fn card() -> Card {
        let tax = builtin_v1();
        let card = Card::new(&tax);
        let (card, m) = card
            .add_model(aiusage_core::ModelUsage::new(
                "M",
                vec!["2024-01-01".parse().unwrap()],
            ))
            .unwrap();
        let _ = m;
        card.with_project(aiusage_core::ProjectDetails {
            project_name: "P".into(),
            correspondences: vec![aiusage_core::Correspondence::new("A", "a@b.org", "")],
            key_applications: vec![],
        })
        .with_ethics(aiusage_core::EthicsAnswers {
            implications: "i".into(),
            error_mitigation: "e".into(),
            harm_mitigation: "h".into(),
        })
    }

    #[test]
    fn card_round_trip_and_leftovers() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let tax = builtin_v1();
        let card = card();
        let bundle = ExportBundle::build(&tax, &card).unwrap();
        let stored = store
            .insert_card(&card, bundle.clone(), &assess(&card), None)
            .unwrap();
        let back = store
            .load_card(&stored.card_id, &Registry::builtin())
            .unwrap();
        assert_eq!(back, stored);

        fs::create_dir(dir.path().join("cards/.tmp-abc")).unwrap();
        FileStore::open(dir.path()).unwrap();
        assert!(!dir.path().join("cards/.tmp-abc").exists());
        assert!(matches!(store.meta("../x"), Err(StoreError::NotFound)));
        assert!(matches!(store.meta(".tmp-abc"), Err(StoreError::NotFound)));
    }
}
