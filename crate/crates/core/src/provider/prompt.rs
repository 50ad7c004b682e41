use super::ProviderError;

/// Evaluation prompt. Both placeholders are substituted verbatim.
pub const PROMPT_TEMPLATE: &str = "Consider the following context:\nContext:\n{{context}}\nPlease answer the following question:\n{{question}}\nAnswer:";

const CONTEXT_SLOT: &str = "{{context}}";
const QUESTION_SLOT: &str = "{{question}}";

/// Renders the evaluation prompt. An empty `context` gives the empty-context
/// condition; the `Context:` header stays in place.
pub fn render_prompt(context: &str, question: &str) -> Result<String, ProviderError> {
    if question.trim().is_empty() {
        return Err(ProviderError::InvalidQuestion);
    }
    let (head, rest) = PROMPT_TEMPLATE
        .split_once(CONTEXT_SLOT)
        .expect("template has a context slot");
    let (middle, tail) = rest
        .split_once(QUESTION_SLOT)
        .expect("template has a question slot");

    let mut out = String::with_capacity(PROMPT_TEMPLATE.len() + context.len() + question.len());
    out.push_str(head);
    out.push_str(context);
    out.push_str(middle);
    out.push_str(question);
    out.push_str(tail);
    Ok(out)
}
