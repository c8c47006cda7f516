use std::ops::Range;

use super::DocumentError;

/// Extraction prompt. `{Article}` and `{Question}` are the two slots.
pub const PROMPT_TEMPLATE: &str =
    "Below is an article, read the article and answer my question after the article.\n\
Now the article begins:\n\
{Article}\n\
Now the article ends.\n\
Select several sentences from the article to answer my question.\n\
Question: {Question}";

const ARTICLE_SLOT: &str = "{Article}";
const QUESTION_SLOT: &str = "{Question}";

/// A rendered prompt plus the byte ranges its slots occupy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptEnvelope {
    text: String,
    article: Range<usize>,
    question: Range<usize>,
}

impl PromptEnvelope {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn article(&self) -> &str {
        &self.text[self.article.clone()]
    }

    pub fn question(&self) -> &str {
        &self.text[self.question.clone()]
    }

    pub fn article_range(&self) -> Range<usize> {
        self.article.clone()
    }

    pub fn question_range(&self) -> Range<usize> {
        self.question.clone()
    }

    /// Text handed to the model: the prompt followed by the newline that
    /// opens the answer turn.
    pub fn generation_input(&self) -> String {
        format!("{}\n", self.text)
    }

    /// The template's fixed text, i.e. everything outside the two slots.
    pub fn fixed_parts(&self) -> [&str; 3] {
        [
            &self.text[..self.article.start],
            &self.text[self.article.end..self.question.start],
            &self.text[self.question.end..],
        ]
    }
}

pub fn build_prompt(question: &str, article: &str) -> Result<PromptEnvelope, DocumentError> {
    if article.trim().is_empty() {
        return Err(DocumentError::EmptySlot("article"));
    }
    if question.trim().is_empty() {
        return Err(DocumentError::EmptySlot("question"));
    }
    let (head, rest) = PROMPT_TEMPLATE
        .split_once(ARTICLE_SLOT)
        .expect("article slot");
    let (middle, tail) = rest.split_once(QUESTION_SLOT).expect("question slot");

    let mut text = String::with_capacity(PROMPT_TEMPLATE.len() + article.len() + question.len());
    text.push_str(head);
    let a0 = text.len();
    text.push_str(article);
    let a1 = text.len();
    text.push_str(middle);
    let q0 = text.len();
    text.push_str(question);
    let q1 = text.len();
    text.push_str(tail);

    Ok(PromptEnvelope {
        text,
        article: a0..a1,
        question: q0..q1,
    })
}
