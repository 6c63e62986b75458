//! Sending the finished card by email.
//!
//! Delivery is behind [`Dispatcher`]. The default [`OutboxDispatcher`]
//! writes each message as an `.eml` file; an operator can point a mail
//! relay at that directory.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use aiusage_core::codecs::{ExportBundle, Format};
use chrono::{DateTime, Utc};
use lettre::message::header::ContentType;
use lettre::message::{Attachment, Mailbox, MultiPart, SinglePart};
use lettre::{Address, Message};
use serde::Serialize;

pub const SENDER: &str = "AI Usage Cards <cards@localhost>";

/// Plain-text body sent with every card.
pub const TUTORIAL: &str = "\
Your AI Usage Card is attached in five formats.

Including it in a LaTeX document
  1. Add to the preamble:
       \\usepackage{xcolor,longtable,booktabs,hyperref}
       \\usepackage[most]{tcolorbox}
  2. Put card.tex next to your source and write \\input{card.tex}
     where the card should appear, for example in an appendix.

Citing it
  card.bib holds a @misc entry. Add it to your bibliography and cite
  its key where you describe your use of AI.

Sharing it
  card.json, card.xml and card.csv carry the full card. Any of them can
  be validated or converted again later with the aiusage tool.

License: CC BY-NC 4.0 (https://creativecommons.org/licenses/by-nc/4.0/)
";

#[derive(Debug, thiserror::Error)]
pub enum DispatchError {
    #[error("invalid recipient `{0}`")]
    InvalidRecipient(String),
    #[error("could not build message: {0}")]
    Build(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Receipt {
    pub dispatcher: String,
    pub message_id: String,
    pub recipient: String,
    pub card_id: String,
    pub dispatched_at: DateTime<Utc>,
}

/// One outgoing message: tutorial body plus the five exports.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub recipient: Address,
    pub card_id: String,
    pub subject: String,
    pub message: Message,
    pub message_id: String,
}

pub fn parse_recipient(text: &str) -> Result<Address, DispatchError> {
    let trimmed = text.trim();
    trimmed
        .parse::<Address>()
        .map_err(|_| DispatchError::InvalidRecipient(text.to_string()))
}

/// Builds the message for `bundle`; attachments are named `card.<ext>`.
pub fn compose(
    recipient: &str,
    card_id: &str,
    project_name: &str,
    bundle: &ExportBundle,
) -> Result<Envelope, DispatchError> {
    let address = parse_recipient(recipient)?;
    let message_id = format!("<{}@aiusage.local>", uuid::Uuid::new_v4().simple());
    let subject = format!("AI Usage Card for {project_name}");
    let mut parts = MultiPart::mixed().singlepart(SinglePart::plain(TUTORIAL.to_string()));
    for (format, text) in bundle.iter() {
        let content_type = ContentType::parse(media_type(format))
            .map_err(|e| DispatchError::Build(e.to_string()))?;
        parts = parts.singlepart(
            Attachment::new(format!("card.{}", format.extension()))
                .body(text.as_bytes().to_vec(), content_type),
        );
    }
    let message = Message::builder()
        .from(SENDER.parse::<Mailbox>().expect("static sender"))
        .to(Mailbox::new(None, address.clone()))
        .subject(subject.clone())
        .message_id(Some(message_id.clone()))
        .multipart(parts)
        .map_err(|e| DispatchError::Build(e.to_string()))?;
    Ok(Envelope {
        recipient: address,
        card_id: card_id.to_string(),
        subject,
        message,
        message_id,
    })
}

// Attachments always travel base64-encoded; a bare type keeps lettre from
// re-labelling the charset.
fn media_type(format: Format) -> &'static str {
    format
        .media_type()
        .split(';')
        .next()
        .unwrap_or("text/plain")
}

pub trait Dispatcher: Send + Sync {
    fn id(&self) -> &str;
    fn dispatch(&self, envelope: &Envelope) -> Result<Receipt, DispatchError>;
}

fn receipt(dispatcher: &str, envelope: &Envelope) -> Receipt {
    Receipt {
        dispatcher: dispatcher.to_string(),
        message_id: envelope.message_id.clone(),
        recipient: envelope.recipient.to_string(),
        card_id: envelope.card_id.clone(),
        dispatched_at: Utc::now(),
    }
}

/// Writes `<timestamp>-<card id>.eml` files into a directory.
#[derive(Debug, Clone)]
pub struct OutboxDispatcher {
    dir: PathBuf,
}

impl OutboxDispatcher {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &std::path::Path {
        &self.dir
    }
}

impl Dispatcher for OutboxDispatcher {
    fn id(&self) -> &str {
        "outbox"
    }

    fn dispatch(&self, envelope: &Envelope) -> Result<Receipt, DispatchError> {
        let receipt = receipt(self.id(), envelope);
        let stem = format!(
            "{}-{}-{}",
            receipt.dispatched_at.format("%Y%m%dT%H%M%S%.6fZ"),
            envelope.card_id,
            &envelope.message_id[1..9],
        );
        let tmp = self.dir.join(format!(".{stem}.tmp"));
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(&envelope.message.formatted())?;
            file.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(format!("{stem}.eml")))?;
        Ok(receipt)
    }
}

/// Drops messages after logging them.
#[derive(Debug, Clone, Default)]
pub struct LogDispatcher;

impl Dispatcher for LogDispatcher {
    fn id(&self) -> &str {
        "log"
    }

    fn dispatch(&self, envelope: &Envelope) -> Result<Receipt, DispatchError> {
        tracing::info!(
            recipient = %envelope.recipient,
            card = %envelope.card_id,
            "card email discarded by log dispatcher"
        );
        Ok(receipt(self.id(), envelope))
    }
}
