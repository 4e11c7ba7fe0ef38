use std::fmt;
use std::process::ExitCode;

use smolpipe_core::budget::BudgetError;
use smolpipe_core::kv::KvError;
use smolpipe_core::model::ModelError;
use smolpipe_core::prompt::PromptError;
use smolpipe_core::vision::VisionError;
use smolpipe_lab::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Unreadable or malformed input files and flags.
    Input,
    /// Pipeline geometry that cannot be built.
    Geometry,
    ContextOverflow,
    /// Write failures and anything else unexpected.
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Kind::Input => 2,
            Kind::Geometry => 3,
            Kind::ContextOverflow => 4,
            Kind::Internal => 1,
        })
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(Kind::Input, message)
    }

    /// Prefixes the message with the file or item it came from.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn vision_kind(e: &VisionError) -> Kind {
    match e {
        VisionError::Ppm(_) | VisionError::Open { .. } | VisionError::Kv(_) | VisionError::EmptyVideo => Kind::Input,
        VisionError::Io(_) => Kind::Internal,
        _ => Kind::Geometry,
    }
}

fn model_kind(e: &ModelError) -> Kind {
    match e {
        ModelError::ContextOverflow { .. } => Kind::ContextOverflow,
        ModelError::Kv(_) => Kind::Input,
        ModelError::Vision(v) => vision_kind(v),
        ModelError::Io(_) | ModelError::Csv(_) => Kind::Internal,
        _ => Kind::Geometry,
    }
}

fn prompt_kind(e: &PromptError) -> Kind {
    match e {
        PromptError::GridTooLarge { .. } => Kind::Geometry,
        PromptError::Io(_) => Kind::Internal,
        _ => Kind::Input,
    }
}

impl From<KvError> for CliError {
    fn from(e: KvError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<VisionError> for CliError {
    fn from(e: VisionError) -> Self {
        Self::new(vision_kind(&e), e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::new(model_kind(&e), e.to_string())
    }
}

impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        Self::new(prompt_kind(&e), e.to_string())
    }
}

impl From<BudgetError> for CliError {
    fn from(e: BudgetError) -> Self {
        let kind = match &e {
            BudgetError::Config(_) => Kind::Geometry,
            BudgetError::Kv(_) | BudgetError::UnknownPreset(_) | BudgetError::Mixture(_) | BudgetError::Empty => {
                Kind::Input
            }
            _ => Kind::Internal,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        let kind = match &e {
            LabError::Invalid(_) | LabError::Dataset { .. } | LabError::Kv(_) | LabError::Json(_) => Kind::Input,
            LabError::Model(m) => model_kind(m),
            LabError::Prompt(p) => prompt_kind(p),
            LabError::Vision(v) => vision_kind(v),
            LabError::Csv(_) | LabError::Io(_) => Kind::Internal,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Kind::Internal, e.to_string())
    }
}
