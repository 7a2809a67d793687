//! Clients for the image-generation backend and the chat/vision endpoint,
//! plus deterministic in-process stubs.

pub mod stub;
pub mod transport;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use stub::{stub_chat, stub_generate};
pub use transport::{BackendConfig, CallOutcome, HttpService, InFlightLimiter};
pub use wire::{
    ChatMessage, ChatRequest, ChatResponse, ContentPart, ControlImage, ControlKind,
    GenerationRequest, GenerationResponse,
};

pub const STUB_MODEL_ID: &str = "stub-composite-v1";

/// A generated image and where it came from.
#[derive(Debug, Clone)]
pub struct GeneratedImage {
    pub png: Vec<u8>,
    pub model_id: String,
    pub attempts: u32,
}

pub trait ImageBackend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GeneratedImage>;
}

pub trait ChatClient: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String>;
}

/// Send a generation request to `POST /v1/generate`.
pub fn generate_image(service: &HttpService, request: &GenerationRequest) -> Result<GeneratedImage> {
    request.validate()?;
    let out: CallOutcome<GenerationResponse> = service.post_json(wire::GENERATE_PATH, request)?;
    if out.value.image.is_empty() {
        return Err(Error::Protocol("generation response carried an empty image".into()));
    }
    Ok(GeneratedImage {
        png: out.value.image,
        model_id: out.value.model_id,
        attempts: out.attempts,
    })
}

#[derive(Debug, Clone)]
pub struct HttpImageBackend {
    service: HttpService,
}

impl HttpImageBackend {
    pub fn new(config: BackendConfig) -> Result<Self> {
        Ok(Self {
            service: HttpService::new(config)?,
        })
    }

    pub fn service(&self) -> &HttpService {
        &self.service
    }
}

impl ImageBackend for HttpImageBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GeneratedImage> {
        generate_image(&self.service, request)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StubBackend;

impl ImageBackend for StubBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GeneratedImage> {
        request.validate()?;
        Ok(GeneratedImage {
            png: stub_generate(request)?,
            model_id: STUB_MODEL_ID.into(),
            attempts: 1,
        })
    }
}

#[derive(Debug, Clone)]
pub struct HttpChatClient {
    service: HttpService,
}

impl HttpChatClient {
    pub fn new(config: BackendConfig) -> Result<Self> {
        Ok(Self {
            service: HttpService::new(config)?,
        })
    }

    pub fn service(&self) -> &HttpService {
        &self.service
    }
}

impl ChatClient for HttpChatClient {
    fn chat(&self, request: &ChatRequest) -> Result<String> {
        let out: CallOutcome<ChatResponse> = self.service.post_json(wire::CHAT_PATH, request)?;
        Ok(out.value.text)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StubChat;

impl ChatClient for StubChat {
    fn chat(&self, request: &ChatRequest) -> Result<String> {
        Ok(stub_chat(request))
    }
}

/// Which implementation backs a service in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceSpec {
    Stub,
    Http(BackendConfig),
}

impl ServiceSpec {
    pub fn image_backend(&self) -> Result<Box<dyn ImageBackend>> {
        Ok(match self {
            ServiceSpec::Stub => Box::new(StubBackend),
            ServiceSpec::Http(c) => Box::new(HttpImageBackend::new(
                c.clone().with_env_overrides(transport::ENV_ENDPOINT),
            )?),
        })
    }

    pub fn chat_client(&self) -> Result<Box<dyn ChatClient>> {
        Ok(match self {
            ServiceSpec::Stub => Box::new(StubChat),
            ServiceSpec::Http(c) => Box::new(HttpChatClient::new(
                c.clone().with_env_overrides(transport::ENV_CHAT_ENDPOINT),
            )?),
        })
    }
}
