//! Minimal `{placeholder}` substitution for the prompt data files.
//!
//! A slot is `{name}` where `name` is `[a-z0-9_]+`. `{{` and `}}` escape
//! literal braces. Every slot in the template must be bound.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template slot {{{0}}} has no value")]
    Unbound(String),
    #[error("unterminated or malformed slot at byte {0}")]
    Malformed(usize),
}

pub fn fill(template: &str, slots: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len() + 256);
    let bytes = template.as_bytes();
    let mut i = 0;
    let mut literal_start = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push_str(&template[literal_start..i]);
                out.push('{');
                i += 2;
                literal_start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push_str(&template[literal_start..i]);
                out.push('}');
                i += 2;
                literal_start = i;
            }
            b'{' => {
                out.push_str(&template[literal_start..i]);
                let end = template[i + 1..]
                    .find('}')
                    .map(|off| i + 1 + off)
                    .ok_or(TemplateError::Malformed(i))?;
                let name = &template[i + 1..end];
                if name.is_empty()
                    || !name
                        .bytes()
                        .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
                {
                    return Err(TemplateError::Malformed(i));
                }
                let value = slots
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| TemplateError::Unbound(name.to_string()))?;
                out.push_str(value);
                i = end + 1;
                literal_start = i;
            }
            _ => i += 1,
        }
    }
    out.push_str(&template[literal_start..]);
    Ok(out)
}

/// Slot names referenced by a template, in order of first appearance.
pub fn slots(template: &str) -> Vec<&str> {
    let mut found: Vec<&str> = Vec::new();
    let mut rest = template;
    let mut offset = 0;
    while let Some(open) = rest.find('{') {
        let abs = offset + open;
        if template[abs..].starts_with("{{") {
            offset = abs + 2;
            rest = &template[offset..];
            continue;
        }
        let Some(close) = template[abs..].find('}') else {
            break;
        };
        let name = &template[abs + 1..abs + close];
        if !found.contains(&name) {
            found.push(name);
        }
        offset = abs + close + 1;
        rest = &template[offset..];
    }
    found
}
