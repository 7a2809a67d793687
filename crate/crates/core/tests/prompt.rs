use std::collections::HashMap;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zoosynth::genclient::{ChatClient, ChatRequest, ContentPart, StubChat};
use zoosynth::prompt::{
    caption_orientation, synthesize_prompt, template_prompt, Construction, PromptParts, SceneLists,
    DEFAULT_MAX_PROMPT_CHARS, ORIENTATION_QUESTION,
};
use zoosynth::{Error, Result};

struct Recording {
    reply: String,
    seen: Mutex<Vec<ChatRequest>>,
}

impl Recording {
    fn new(reply: &str) -> Self {
        Self { reply: reply.into(), seen: Mutex::new(Vec::new()) }
    }
}

impl ChatClient for Recording {
    fn chat(&self, request: &ChatRequest) -> Result<String> {
        self.seen.lock().unwrap().push(request.clone());
        Ok(self.reply.clone())
    }
}

struct Failing;

impl ChatClient for Failing {
    fn chat(&self, _: &ChatRequest) -> Result<String> {
        Err(Error::Request { status: 400, body: "bad".into() })
    }
}

fn parts(caption: Option<&str>) -> PromptParts {
    PromptParts {
        species: "lynx".into(),
        caption: caption.map(String::from),
        camera_setting: "DSLR, 85mm".into(),
        scenery: "forest clearing".into(),
        seed: 17,
    }
}

#[test]
fn template_is_exact() {
    assert_eq!(
        template_prompt(&parts(Some("facing right"))),
        "A photo of a lynx, facing right, in forest clearing, shot on DSLR, 85mm."
    );
}

#[test]
fn template_without_caption_has_no_double_commas() {
    let t = template_prompt(&parts(None));
    assert_eq!(t, "A photo of a lynx in forest clearing, shot on DSLR, 85mm.");
    assert!(!t.contains(",,") && !t.contains(", ,"));
}

#[test]
fn no_client_gives_template() {
    let p = synthesize_prompt(&parts(Some("facing left")), None, DEFAULT_MAX_PROMPT_CHARS).unwrap();
    assert_eq!(p.construction, Construction::TemplateFallback);
    assert_eq!(p.text, template_prompt(&parts(Some("facing left"))));
}

#[test]
fn llm_reply_passes_through() {
    let reply = "A lynx facing left stands in a sunlit forest clearing, shot on DSLR, 85mm.";
    let client = Recording::new(reply);
    let p = synthesize_prompt(&parts(Some("facing left")), Some(&client), DEFAULT_MAX_PROMPT_CHARS).unwrap();
    assert_eq!(p.text, reply);
    assert_eq!(p.construction, Construction::LlmSynthesized);
    let seen = client.seen.lock().unwrap();
    assert_eq!(seen[0].tag.as_deref(), Some("17"));
}

#[test]
fn unusable_replies_fall_back() {
    let tmpl = template_prompt(&parts(None));
    for reply in ["", "A photo of a bobcat in the woods.", &"lynx ".repeat(200)] {
        let client = Recording::new(reply);
        let p = synthesize_prompt(&parts(None), Some(&client), DEFAULT_MAX_PROMPT_CHARS).unwrap();
        assert_eq!(p.construction, Construction::TemplateFallback, "reply {reply:?}");
        assert_eq!(p.text, tmpl);
    }
    let p = synthesize_prompt(&parts(None), Some(&Failing), DEFAULT_MAX_PROMPT_CHARS).unwrap();
    assert_eq!(p.construction, Construction::TemplateFallback);
}

#[test]
fn stub_chat_keeps_species() {
    let p = synthesize_prompt(&parts(Some("facing left")), Some(&StubChat), DEFAULT_MAX_PROMPT_CHARS).unwrap();
    assert!(p.text.contains("lynx"));
}

#[test]
fn orientation_question_goes_on_the_wire_verbatim() {
    let client = Recording::new("The animal is facing left.\n\nIt looks calm.");
    let png = vec![1u8, 2, 3];
    let caption = caption_orientation(&png, &client, Some("5".into())).unwrap();
    assert_eq!(caption, "The animal is facing left.");
    let seen = client.seen.lock().unwrap();
    let wire = serde_json::to_value(&seen[0]).unwrap();
    assert_eq!(wire["messages"][0]["content"][0]["text"], ORIENTATION_QUESTION);
    assert_eq!(wire["messages"][0]["content"][1]["image"], "AQID");
    assert!(matches!(&seen[0].messages[0].content[1], ContentPart::Image { image } if image == &png));
}

#[test]
fn empty_caption_is_an_error() {
    let client = Recording::new("   \n");
    assert!(caption_orientation(&[1], &client, None).is_err());
    assert!(caption_orientation(&[], &StubChat, None).is_err());
}

#[test]
fn shipped_lists_contain_examples() {
    let lists = SceneLists::default();
    assert!(lists.camera_settings.iter().any(|c| c == "Samsung Galaxy S23 with enhanced night mode camera"));
    assert!(lists.camera_settings.len() >= 20 && lists.sceneries.len() >= 20);
}

#[test]
fn descriptor_draws_within_five_sigma() {
    let lists = SceneLists::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let mut cams: HashMap<String, usize> = HashMap::new();
    let mut scenes: HashMap<String, usize> = HashMap::new();
    for _ in 0..n {
        let (c, s) = lists.sample(&mut rng).unwrap();
        *cams.entry(c).or_default() += 1;
        *scenes.entry(s).or_default() += 1;
    }
    for (counts, k) in [(&cams, lists.camera_settings.len()), (&scenes, lists.sceneries.len())] {
        assert_eq!(counts.len(), k);
        let p = 1.0 / k as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in counts.values() {
            assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma);
        }
    }
}

#[test]
fn empty_lists_are_config_errors() {
    let lists = SceneLists { camera_settings: vec![], sceneries: vec!["x".into()] };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    assert!(matches!(lists.sample(&mut rng), Err(Error::Config(_))));
}
