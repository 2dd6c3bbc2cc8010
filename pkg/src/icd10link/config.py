"""Run configuration loaded from JSON, with relative paths resolved against
the config file's directory. Credentials are never stored here: the config
names an environment variable and the provider reads it."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .dictionary import DictionarySource, SourceKind
from .errors import ConfigError
from .llm.providers import DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE
from .ontology import CodeLevel
from .pipeline import DEFAULT_MODEL, DEFAULT_PARALLELISM, RunMode

LANGUAGE_NAMES = {"es": "Spanish", "el": "Greek", "en": "English"}


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"
    fixture_dir: Path | None = None
    endpoint: str | None = None
    credential_env: str = "LLM_API_KEY"
    auth_header: str = "Authorization"
    max_attempts: int = 4
    backoff_base: float = 1.0
    timeout: float = 120.0

    def echo(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "remote":
            out.update(endpoint=self.endpoint, credential_env=self.credential_env)
        return out


@dataclass(frozen=True)
class RunConfig:
    language: str = ""
    language_name: str = ""
    mode: RunMode = RunMode.DICT_PLUS_LLM_ONE_SHOT
    compiled_dictionary: Path | None = None
    dictionary_sources: tuple[DictionarySource, ...] = ()
    dictionary_level: CodeLevel = CodeLevel.CATEGORY
    text_dir: Path | None = None
    annotations: Path | None = None
    prompt_template: Path | None = None
    example_input: Path | None = None
    example_output: Path | None = None
    overlap_policy: str = "longest"
    model: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    parallelism: int = DEFAULT_PARALLELISM
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    predictions_out: Path | None = None
    report_out: Path | None = None
    eval_out: Path | None = None
    error_report_out: Path | None = None
    eval_levels: tuple[CodeLevel, ...] = (CodeLevel.CATEGORY,)

    @property
    def prompt_language(self) -> str:
        return self.language_name or LANGUAGE_NAMES.get(self.language, self.language)

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data, path.parent)

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: str | Path = ".") -> RunConfig:
        base = Path(base_dir)

        def p(value: Any) -> Path | None:
            if value in (None, ""):
                return None
            path = Path(value)
            return path if path.is_absolute() else base / path

        try:
            language = data.get("language", "")
            dct = data.get("dictionary", {})
            corpus = data.get("corpus", {})
            prompt = data.get("prompt", {})
            llm = data.get("llm", {})
            prov = data.get("provider", {})
            out = data.get("output", {})
            sources = tuple(
                DictionarySource(p(s["path"]), SourceKind(s.get("kind", "specification")), s.get("language", language))
                for s in dct.get("sources", [])
            )
            provider = ProviderConfig(
                kind=prov.get("kind", "mock"),
                fixture_dir=p(prov.get("fixture_dir")),
                endpoint=prov.get("endpoint"),
                credential_env=prov.get("credential_env", "LLM_API_KEY"),
                auth_header=prov.get("auth_header", "Authorization"),
                max_attempts=int(prov.get("max_attempts", 4)),
                backoff_base=float(prov.get("backoff_base", 1.0)),
                timeout=float(prov.get("timeout", 120.0)),
            )
            if "api_key" in prov or "credential" in prov:
                raise ConfigError("credentials must come from the environment, not the config file")
            return cls(
                language=language,
                language_name=prompt.get("language_name", data.get("language_name", "")),
                mode=RunMode.parse(data.get("mode", RunMode.DICT_PLUS_LLM_ONE_SHOT.value)),
                compiled_dictionary=p(dct.get("compiled")),
                dictionary_sources=sources,
                dictionary_level=CodeLevel.parse(dct.get("level", "category")),
                text_dir=p(corpus.get("text_dir")),
                annotations=p(corpus.get("annotations")),
                prompt_template=p(prompt.get("template")),
                example_input=p(prompt.get("example_input")),
                example_output=p(prompt.get("example_output")),
                overlap_policy=data.get("overlap_policy", "longest"),
                model=llm.get("model", DEFAULT_MODEL),
                temperature=float(llm.get("temperature", DEFAULT_TEMPERATURE)),
                max_tokens=int(llm.get("max_tokens", DEFAULT_MAX_TOKENS)),
                parallelism=int(data.get("parallelism", DEFAULT_PARALLELISM)),
                provider=provider,
                predictions_out=p(out.get("predictions")),
                report_out=p(out.get("report")),
                eval_out=p(out.get("eval")),
                error_report_out=p(out.get("error_report")),
                eval_levels=tuple(CodeLevel.parse(v) for v in data.get("eval_levels", ["category"])),
            )
        except ConfigError:
            raise
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None

    def override(self, **changes: Any) -> RunConfig:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def validate_for_link(self) -> None:
        """Check everything a ``link`` run needs before doing any work."""
        problems = []
        if self.text_dir is None or self.annotations is None:
            problems.append("corpus.text_dir and corpus.annotations are required")
        for label, path in (
            ("corpus.text_dir", self.text_dir),
            ("corpus.annotations", self.annotations),
            ("dictionary.compiled", self.compiled_dictionary),
            ("prompt.template", self.prompt_template),
            ("prompt.example_input", self.example_input),
            ("prompt.example_output", self.example_output),
        ):
            if path is not None and not path.exists():
                problems.append(f"{label} does not exist: {path}")
        for src in self.dictionary_sources:
            if not src.path.exists():
                problems.append(f"dictionary source does not exist: {src.path}")
        if self.parallelism < 1:
            problems.append("parallelism must be >= 1")
        if self.overlap_policy not in ("longest", "strict"):
            problems.append(f"overlap_policy must be 'longest' or 'strict', got {self.overlap_policy!r}")
        if not 0 <= self.temperature <= 2:
            problems.append("llm.temperature must be within [0, 2]")
        if self.max_tokens < 1:
            problems.append("llm.max_tokens must be >= 1")
        if self.mode.uses_dictionary and self.compiled_dictionary is None and not self.dictionary_sources:
            problems.append(f"mode {self.mode.value} needs dictionary.compiled or dictionary.sources")
        if self.mode.uses_llm:
            if not self.prompt_language:
                problems.append("language or prompt.language_name is required for LLM modes")
            if self.provider.kind == "mock":
                if self.provider.fixture_dir is None or not self.provider.fixture_dir.is_dir():
                    problems.append(f"mock provider fixture_dir not found: {self.provider.fixture_dir}")
            elif self.provider.kind == "remote":
                if not self.provider.endpoint:
                    problems.append("remote provider needs an endpoint")
                if not os.environ.get(self.provider.credential_env, "").strip():
                    problems.append(f"credential environment variable {self.provider.credential_env} is not set")
            else:
                problems.append(f"unknown provider kind {self.provider.kind!r}")
        if problems:
            raise ConfigError("; ".join(problems))

    def echo(self) -> dict[str, Any]:
        """Serializable summary for run reports; contains no secrets."""
        return {
            "language": self.language,
            "mode": self.mode.value,
            "dictionary_level": self.dictionary_level.value,
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "provider": self.provider.echo() if self.mode.uses_llm else None,
            "eval_levels": [lv.value for lv in self.eval_levels],
        }
