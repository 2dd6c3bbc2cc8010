"""Prompt templates and rendering.

Templates are plain text with ``{language}``, ``{example_input}``,
``{example_output}`` and ``{clinical_text}`` placeholders (``{language_key}``
is optional and expands to the lowercase language name used in the JSON term
key). The one-shot example lives between ``[[example]]`` and
``[[/example]]`` marker lines; zero-shot prompts drop that block entirely.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from ..corpus import MarkedDocument
from ..errors import MissingExample, MissingPlaceholder

REQUIRED_PLACEHOLDERS = ("{language}", "{example_input}", "{example_output}", "{clinical_text}")
EXAMPLE_START = "[[example]]"
EXAMPLE_END = "[[/example]]"

_PLACEHOLDER_RE = re.compile(r"\{(language|language_key|example_input|example_output|clinical_text)\}")
_EXAMPLE_BLOCK_RE = re.compile(
    r"^[ \t]*" + re.escape(EXAMPLE_START) + r"[ \t]*\n(.*?)^[ \t]*" + re.escape(EXAMPLE_END) + r"[ \t]*(?:\n|\Z)",
    re.DOTALL | re.MULTILINE,
)


class Shots(str, Enum):
    ZERO = "zero"
    ONE = "one"


def bundled_template(name: str = "icd10_prompt.txt") -> str:
    return resources.files("icd10link.resources.templates").joinpath(name).read_text(encoding="utf-8")


def bundled_example(language: str) -> tuple[str, str]:
    """Return the shipped placeholder ``(example_input, example_output)`` for a language tag."""
    shots = resources.files("icd10link.resources.shots")
    try:
        return (
            shots.joinpath(f"{language}_input.txt").read_text(encoding="utf-8").strip(),
            shots.joinpath(f"{language}_output.json").read_text(encoding="utf-8").strip(),
        )
    except FileNotFoundError:
        raise MissingExample(f"no bundled one-shot example for language {language!r}") from None


@dataclass(frozen=True)
class PromptConfig:
    language_name: str
    shots: Shots = Shots.ZERO
    example_input: str | None = None
    example_output: str | None = None
    template: str = ""
    language_key: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "shots", Shots(self.shots))
        if not self.template:
            object.__setattr__(self, "template", bundled_template())
        if not self.language_key:
            object.__setattr__(self, "language_key", "_".join(self.language_name.lower().split()))
        self.validate()

    def validate(self) -> None:
        missing = [p for p in REQUIRED_PLACEHOLDERS if p not in self.template]
        if missing:
            raise MissingPlaceholder(f"prompt template lacks placeholder(s): {', '.join(missing)}")
        block = _EXAMPLE_BLOCK_RE.search(self.template)
        if block is None:
            raise MissingPlaceholder(f"prompt template lacks an {EXAMPLE_START} ... {EXAMPLE_END} block")
        if "{example_input}" not in block.group(1) or "{example_output}" not in block.group(1):
            raise MissingPlaceholder("example placeholders must sit inside the example block")
        if self.shots is Shots.ONE and not (self.example_input and self.example_output):
            raise MissingExample("one-shot prompting needs both example_input and example_output")

    @classmethod
    def from_files(
        cls,
        language_name: str,
        shots: Shots | str = Shots.ZERO,
        template_path: str | Path | None = None,
        example_input_path: str | Path | None = None,
        example_output_path: str | Path | None = None,
    ) -> PromptConfig:
        read = lambda p: Path(p).read_text(encoding="utf-8").strip() if p else None  # noqa: E731
        return cls(
            language_name=language_name,
            shots=Shots(shots),
            example_input=read(example_input_path),
            example_output=read(example_output_path),
            template=Path(template_path).read_text(encoding="utf-8") if template_path else "",
        )

    def with_shots(self, shots: Shots | str) -> PromptConfig:
        return PromptConfig(
            self.language_name, Shots(shots), self.example_input, self.example_output,
            self.template, self.language_key,
        )


def build_prompt(config: PromptConfig, marked: MarkedDocument | str) -> str:
    config.validate()
    clinical_text = marked if isinstance(marked, str) else marked.marked_text

    if config.shots is Shots.ONE:
        template = _EXAMPLE_BLOCK_RE.sub(lambda m: m.group(1), config.template)
    else:
        template = _EXAMPLE_BLOCK_RE.sub("", config.template)

    values = {
        "language": config.language_name,
        "language_key": config.language_key,
        "example_input": config.example_input or "",
        "example_output": config.example_output or "",
        "clinical_text": clinical_text,
    }
    # single pass, so braces inside substituted text are never re-expanded
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)
