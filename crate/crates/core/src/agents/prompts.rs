use std::sync::LazyLock;

use super::template::{Context, Template, TemplateError};

const SOURCES: [(&str, &str); 8] = [
    ("coordinator_system", include_str!("../../prompts/coordinator_system.txt")),
    ("coordinator_prompt", include_str!("../../prompts/coordinator_prompt.txt")),
    ("navigator_system", include_str!("../../prompts/navigator_system.txt")),
    ("navigator_prompt", include_str!("../../prompts/navigator_prompt.txt")),
    ("regulator_system", include_str!("../../prompts/regulator_system.txt")),
    ("regulator_prompt", include_str!("../../prompts/regulator_prompt.txt")),
    ("verifier_system", include_str!("../../prompts/verifier_system.txt")),
    ("verifier_prompt", include_str!("../../prompts/verifier_prompt.txt")),
];

static TEMPLATES: LazyLock<Vec<(&'static str, Template)>> = LazyLock::new(|| {
    SOURCES
        .iter()
        .map(|(id, src)| (*id, Template::parse(src).unwrap_or_else(|e| panic!("bundled template {id}: {e}"))))
        .collect()
});

pub fn template_ids() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(id, _)| *id)
}

/// Raw asset text for a template id.
pub fn template_source(id: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(i, _)| *i == id).map(|(_, s)| *s)
}

pub fn render_prompt(id: &str, ctx: &Context) -> Result<String, TemplateError> {
    let (_, t) =
        TEMPLATES.iter().find(|(i, _)| *i == id).ok_or_else(|| TemplateError::UnknownTemplate(id.to_string()))?;
    t.render(ctx)
}
