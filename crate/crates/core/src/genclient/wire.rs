//! JSON wire types shared by the generation and chat endpoints.
//!
//! Images travel as base64-encoded PNG strings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GENERATE_PATH: &str = "/v1/generate";
pub const CHAT_PATH: &str = "/v1/chat";
pub const DECODE_PATH: &str = "/v1/decode";

pub(crate) mod b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s.as_bytes()).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlKind {
    Depth,
    Canny,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlImage {
    pub kind: ControlKind,
    #[serde(with = "b64")]
    pub image: Vec<u8>,
    pub strength: f64,
}

/// Body of `POST /v1/generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub controls: Vec<ControlImage>,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<()> {
        if self.prompt.trim().is_empty() {
            return Err(Error::InvalidArgument("empty prompt".into()));
        }
        if self.width == 0 || self.width != self.height {
            return Err(Error::InvalidArgument(format!(
                "image must be square and non-empty, got {}x{}",
                self.width, self.height
            )));
        }
        for c in &self.controls {
            if !(c.strength > 0.0 && c.strength <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{:?} control strength {} outside (0, 1]",
                    c.kind, c.strength
                )));
            }
        }
        Ok(())
    }

    pub fn control(&self, kind: ControlKind) -> Option<&ControlImage> {
        self.controls.iter().find(|c| c.kind == kind)
    }
}

/// Body of a successful `/v1/generate` response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    #[serde(with = "b64")]
    pub image: Vec<u8>,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContentPart {
    Text {
        text: String,
    },
    Image {
        #[serde(with = "b64")]
        image: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: Vec<ContentPart>,
}

impl ChatMessage {
    pub fn user(content: Vec<ContentPart>) -> Self {
        Self {
            role: "user".into(),
            content,
        }
    }

    pub fn system(text: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: vec![ContentPart::Text { text: text.into() }],
        }
    }
}

/// Body of `POST /v1/chat`. `tag` carries the sample seed for traceability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
}

/// Body of `POST /v1/decode` for an external shape decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeRequest {
    pub taxon: String,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResponse {
    pub betas: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_uses_documented_field_names() {
        let req = GenerationRequest {
            prompt: "A photo of a lynx.".into(),
            seed: 7,
            width: 1024,
            height: 1024,
            controls: vec![ControlImage {
                kind: ControlKind::Depth,
                image: vec![1, 2, 3],
                strength: 0.55,
            }],
        };
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(v["controls"][0]["kind"], "depth");
        assert_eq!(v["controls"][0]["image"], "AQID");
        assert_eq!(v["width"], 1024);
    }

    #[test]
    fn chat_content_parts_are_untagged() {
        let msg = ChatMessage::user(vec![
            ContentPart::Text { text: "hi".into() },
            ContentPart::Image { image: vec![0xff] },
        ]);
        let v = serde_json::to_value(&msg).unwrap();
        assert_eq!(v["content"][0]["text"], "hi");
        assert_eq!(v["content"][1]["image"], "/w==");
        let back: ChatMessage = serde_json::from_value(v).unwrap();
        assert_eq!(back, msg);
    }

    #[test]
    fn strength_bounds() {
        let mut req = GenerationRequest {
            prompt: "x".into(),
            seed: 0,
            width: 8,
            height: 8,
            controls: vec![ControlImage {
                kind: ControlKind::Canny,
                image: vec![],
                strength: 0.0,
            }],
        };
        assert!(req.validate().is_err());
        req.controls[0].strength = 1.0;
        assert!(req.validate().is_ok());
        req.height = 9;
        assert!(req.validate().is_err());
    }
}
