//! Prompt assembly: scene descriptors, orientation captions and the final
//! generation prompt.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genclient::{ChatClient, ChatMessage, ChatRequest, ContentPart};

pub const DEFAULT_CAMERA_SETTINGS: &str = include_str!("../data/camera_settings.txt");
pub const DEFAULT_SCENERIES: &str = include_str!("../data/sceneries.txt");

/// Question sent to the vision-language model with the shaded render.
pub const ORIENTATION_QUESTION: &str =
    "This is a picture of an animal. Which direction is the animal facing?";

pub const DEFAULT_MAX_PROMPT_CHARS: usize = 400;

pub fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneLists {
    pub camera_settings: Vec<String>,
    pub sceneries: Vec<String>,
}

impl Default for SceneLists {
    fn default() -> Self {
        Self {
            camera_settings: parse_list(DEFAULT_CAMERA_SETTINGS),
            sceneries: parse_list(DEFAULT_SCENERIES),
        }
    }
}

impl SceneLists {
    pub fn load(camera_settings: &Path, sceneries: &Path) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let lists = Self {
            camera_settings: parse_list(&read(camera_settings)?),
            sceneries: parse_list(&read(sceneries)?),
        };
        lists.validate()?;
        Ok(lists)
    }

    pub fn validate(&self) -> Result<()> {
        if self.camera_settings.is_empty() {
            return Err(Error::Config("camera-setting list is empty".into()));
        }
        if self.sceneries.is_empty() {
            return Err(Error::Config("scenery list is empty".into()));
        }
        Ok(())
    }

    /// Independent uniform draws of `(camera_setting, scenery)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(String, String)> {
        self.validate()?;
        let c = rng.random_range(0..self.camera_settings.len());
        let s = rng.random_range(0..self.sceneries.len());
        Ok((self.camera_settings[c].clone(), self.sceneries[s].clone()))
    }
}

pub fn sample_scene_descriptors<R: Rng + ?Sized>(rng: &mut R, lists: &SceneLists) -> Result<(String, String)> {
    lists.sample(rng)
}

/// First paragraph of a model reply, whitespace-trimmed.
pub fn first_paragraph(text: &str) -> String {
    let trimmed = text.trim();
    let end = trimmed
        .lines()
        .position(|l| l.trim().is_empty())
        .unwrap_or(usize::MAX);
    trimmed
        .lines()
        .take(end)
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn orientation_request(render_png: &[u8], tag: Option<String>) -> ChatRequest {
    ChatRequest {
        messages: vec![ChatMessage::user(vec![
            ContentPart::Text { text: ORIENTATION_QUESTION.to_string() },
            ContentPart::Image { image: render_png.to_vec() },
        ])],
        tag,
    }
}

/// Asks the vision model which way the animal in `render_png` faces.
pub fn caption_orientation(render_png: &[u8], client: &dyn ChatClient, tag: Option<String>) -> Result<String> {
    if render_png.is_empty() {
        return Err(Error::InvalidArgument("caption request needs a non-empty render".into()));
    }
    let reply = client.chat(&orientation_request(render_png, tag))?;
    let caption = first_paragraph(&reply);
    if caption.is_empty() {
        return Err(Error::Protocol("vision model returned an empty caption".into()));
    }
    Ok(caption)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptParts {
    pub species: String,
    pub caption: Option<String>,
    pub camera_setting: String,
    pub scenery: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    LlmSynthesized,
    TemplateFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub construction: Construction,
}

pub fn template_prompt(parts: &PromptParts) -> String {
    let caption = parts
        .caption
        .as_deref()
        .map(|c| c.trim().trim_end_matches('.').trim())
        .filter(|c| !c.is_empty());
    match caption {
        Some(caption) => format!(
            "A photo of a {}, {}, in {}, shot on {}.",
            parts.species, caption, parts.scenery, parts.camera_setting
        ),
        None => format!(
            "A photo of a {} in {}, shot on {}.",
            parts.species, parts.scenery, parts.camera_setting
        ),
    }
}

/// Instruction sent to the language model. The last line is the template
/// prompt, offered as a draft.
pub fn synthesis_instruction(parts: &PromptParts) -> String {
    let mut s = String::from(
        "Write a single concise sentence to use as the prompt for a photorealistic image generator. \
         Mention the animal species exactly as written below and work in every detail listed. \
         Reply with the prompt only.\n",
    );
    s.push_str(&format!("Species: {}\n", parts.species));
    if let Some(c) = &parts.caption {
        s.push_str(&format!("Orientation: {c}\n"));
    }
    s.push_str(&format!("Scenery: {}\n", parts.scenery));
    s.push_str(&format!("Camera: {}\n", parts.camera_setting));
    s.push_str("Draft prompt:\n");
    s.push_str(&template_prompt(parts));
    s
}

fn clean_reply(reply: &str) -> String {
    let p = first_paragraph(reply);
    p.trim_matches(|c| c == '"' || c == '\'' || c == '`').trim().to_string()
}

/// Builds the final prompt, through the language model when `client` is given.
/// Falls back to the template when the reply is unusable.
pub fn synthesize_prompt(parts: &PromptParts, client: Option<&dyn ChatClient>, max_chars: usize) -> Result<Prompt> {
    if parts.species.trim().is_empty() {
        return Err(Error::InvalidArgument("prompt needs a species name".into()));
    }
    let fallback = || Prompt {
        text: template_prompt(parts),
        construction: Construction::TemplateFallback,
    };
    let Some(client) = client else {
        return Ok(fallback());
    };
    let request = ChatRequest {
        messages: vec![ChatMessage::user(vec![ContentPart::Text {
            text: synthesis_instruction(parts),
        }])],
        tag: Some(parts.seed.to_string()),
    };
    let reply = match client.chat(&request) {
        Ok(r) => clean_reply(&r),
        Err(e) => {
            log::warn!("prompt synthesis failed, using template: {e}");
            return Ok(fallback());
        }
    };
    if reply.is_empty() || reply.chars().count() > max_chars || !reply.contains(&parts.species) {
        log::warn!("unusable prompt synthesis reply {reply:?}, using template");
        return Ok(fallback());
    }
    Ok(Prompt { text: reply, construction: Construction::LlmSynthesized })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);

    impl ChatClient for Fixed {
        fn chat(&self, _: &ChatRequest) -> Result<String> {
            Ok(self.0.to_string())
        }
    }

    fn parts(caption: Option<&str>) -> PromptParts {
        PromptParts {
            species: "lynx".into(),
            caption: caption.map(String::from),
            camera_setting: "DSLR, 85mm".into(),
            scenery: "forest clearing".into(),
            seed: 9,
        }
    }

    #[test]
    fn template_with_caption() {
        assert_eq!(
            template_prompt(&parts(Some("facing right"))),
            "A photo of a lynx, facing right, in forest clearing, shot on DSLR, 85mm."
        );
    }

    #[test]
    fn template_without_caption_has_no_double_comma() {
        let t = template_prompt(&parts(None));
        assert_eq!(t, "A photo of a lynx in forest clearing, shot on DSLR, 85mm.");
        assert!(!t.contains(",,") && !t.contains(", ,"));
    }

    #[test]
    fn llm_reply_is_used() {
        let p = synthesize_prompt(&parts(None), Some(&Fixed("A lynx in a sunny glade.")), 400).unwrap();
        assert_eq!(p.text, "A lynx in a sunny glade.");
        assert_eq!(p.construction, Construction::LlmSynthesized);
    }

    #[test]
    fn empty_reply_falls_back() {
        let p = synthesize_prompt(&parts(None), Some(&Fixed("  \n")), 400).unwrap();
        assert_eq!(p.construction, Construction::TemplateFallback);
        assert_eq!(p.text, template_prompt(&parts(None)));
    }

    #[test]
    fn caption_is_first_paragraph() {
        let c = caption_orientation(b"png", &Fixed(" facing left \n\nmore text"), None).unwrap();
        assert_eq!(c, "facing left");
    }

    #[test]
    fn default_lists_are_unique() {
        let l = SceneLists::default();
        for list in [&l.camera_settings, &l.sceneries] {
            let mut u = list.clone();
            u.sort();
            u.dedup();
            assert_eq!(u.len(), list.len());
        }
    }
}
