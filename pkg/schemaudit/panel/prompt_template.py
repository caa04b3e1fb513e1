"""Prompt templates with `{sentence}` and `{question_text}` slots."""

import logging
import re
from dataclasses import dataclass

from ..config.config_loader import ConfigLoader
from ..core.schema import Criterion
from ..exceptions.audit_exceptions import ConfigurationError, PromptError
from ..utils.constants import DEFAULT_TEMPLATE_PATH

logger = logging.getLogger('schemaudit.panel')

SLOTS = ('sentence', 'question_text')
SLOT_PATTERN = re.compile(r'\{(sentence|question_text)\}')


@dataclass(frozen=True)
class PromptTemplate:
    """Instruction body with both slots exactly once, followed by the answer instruction."""
    name: str
    body: str
    answer_instruction: str = ''

    def __post_init__(self):
        for slot in SLOTS:
            count = self.body.count(f'{{{slot}}}')
            if count != 1:
                raise PromptError(f"Template '{self.name}' must contain {{{slot}}} exactly once, found {count}")

    def render(self, sentence: str, criterion: Criterion) -> str:
        """Substitute both slots in a single pass.

        Raises:
            PromptError: If the sentence is empty
        """
        if not sentence or not sentence.strip():
            raise PromptError("Cannot render a prompt for an empty sentence")
        values = {'sentence': sentence, 'question_text': criterion.text}
        prompt = SLOT_PATTERN.sub(lambda m: values[m.group(1)], self.body).rstrip('\n')
        if self.answer_instruction:
            prompt = f"{prompt}\n\n{self.answer_instruction}"
        return prompt


def render_prompt(template: PromptTemplate, sentence: str, criterion: Criterion) -> str:
    return template.render(sentence, criterion)


def load_template(path: str = DEFAULT_TEMPLATE_PATH) -> PromptTemplate:
    """Load a YAML template {name, body, answer_instruction}.

    Raises:
        PromptError: If the body is missing or a slot is not present exactly once
    """
    try:
        config = ConfigLoader.read_config(path)
    except ConfigurationError as e:
        raise PromptError(str(e))
    if not isinstance(config.get('body'), str):
        raise PromptError(f"Template {path} needs a 'body' string")
    template = PromptTemplate(
        name=str(config.get('name', path)),
        body=config['body'],
        answer_instruction=str(config.get('answer_instruction', '')),
    )
    logger.info(f"Loaded prompt template '{template.name}' from {path}")
    return template
