//! Prompt templates shipped as text files with `{placeholder}` slots.
//! `{{` and `}}` render as literal braces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::registry::Profile;

const SIGNATURE: &str = include_str!("../../templates/signature.txt");
const IMPLEMENTATION_CLEVR: &str = include_str!("../../templates/implementation_clevr.txt");
const IMPLEMENTATION_OMNI3D: &str = include_str!("../../templates/implementation_omni3d.txt");
const PROGRAM_CLEVR: &str = include_str!("../../templates/program_clevr.txt");
const PROGRAM_OMNI3D: &str = include_str!("../../templates/program_omni3d.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Signature,
    Implementation,
    Program,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Signature => "signature",
            TemplateId::Implementation => "implementation",
            TemplateId::Program => "program",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unbound placeholder {{{0}}}")]
    UnboundPlaceholder(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub text: &'static str,
}

impl PromptTemplate {
    pub fn signature() -> Self {
        PromptTemplate {
            id: TemplateId::Signature,
            text: SIGNATURE,
        }
    }

    pub fn implementation(profile: Profile) -> Self {
        PromptTemplate {
            id: TemplateId::Implementation,
            text: match profile {
                Profile::Clevr => IMPLEMENTATION_CLEVR,
                Profile::Omni3d => IMPLEMENTATION_OMNI3D,
            },
        }
    }

    pub fn program(profile: Profile) -> Self {
        PromptTemplate {
            id: TemplateId::Program,
            text: match profile {
                Profile::Clevr => PROGRAM_CLEVR,
                Profile::Omni3d => PROGRAM_OMNI3D,
            },
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for piece in scan(self.text) {
            if let Piece::Slot(name) = piece {
                if !out.contains(&name) {
                    out.push(name);
                }
            }
        }
        out
    }

    /// Substitutes every placeholder. Extra bindings are ignored.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.text.len());
        for piece in scan(self.text) {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => {
                    let value = bindings
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| TemplateError::UnboundPlaceholder(name.to_string()))?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn scan(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push(Piece::Text(&text[start..i + 1]));
                i += 2;
                start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push(Piece::Text(&text[start..i + 1]));
                i += 2;
                start = i;
            }
            b'{' => {
                let rest = &text[i + 1..];
                let len = rest
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(rest.len());
                if len > 0 && rest[len..].starts_with('}') {
                    out.push(Piece::Text(&text[start..i]));
                    out.push(Piece::Slot(&rest[..len]));
                    i += len + 2;
                    start = i;
                } else {
                    i += 1;
                }
            }
            _ => i += 1,
        }
    }
    out.push(Piece::Text(&text[start..]));
    out
}
