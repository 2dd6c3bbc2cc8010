"""Command-line entry point.

Subcommands: ``build-dict``, ``link``, ``eval``, ``run``.

Exit codes: 0 success, 1 configuration or usage error, 2 data error,
3 every document failed in the LLM stage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .config import RunConfig
from .corpus import load_corpus, read_annotations
from .dictionary import (
    Dictionary,
    DictionarySource,
    SourceKind,
    build_dictionary,
    load_dictionary,
    save_dictionary,
)
from .errors import ConfigError, DataError, Icd10LinkError, MissingGold
from .evaluation import error_report, evaluate
from .llm.prompt import PromptConfig, Shots, bundled_example
from .llm.providers import LlmProvider, MockProvider, RemoteProvider
from .ontology import CodeLevel
from .pipeline import LinkedMention, LlmStage, RunMode, link_corpus, read_jsonl, write_jsonl, write_report

logger = logging.getLogger("icd10link")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_ALL_FAILED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _levels(value: str) -> tuple[CodeLevel, ...]:
    try:
        return tuple(CodeLevel.parse(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _print_json(data: object) -> None:
    print(json.dumps(data, ensure_ascii=False, indent=2))


# build-dict


def cmd_build_dict(args: argparse.Namespace) -> int:
    sources = [DictionarySource(p, SourceKind.SPECIFICATION, args.language) for p in args.spec or []]
    sources += [DictionarySource(p, SourceKind.TRAIN_SET, args.language) for p in args.train or []]
    if args.config:
        cfg = RunConfig.from_file(args.config)
        sources += list(cfg.dictionary_sources)
    dictionary, stats = build_dictionary(sources, args.level)
    if args.output:
        save_dictionary(dictionary, args.output)
    _print_json(stats.to_dict())
    return EXIT_OK


# link


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    provider = cfg.provider
    if args.provider or args.fixtures or args.endpoint:
        provider = replace(
            provider,
            kind=args.provider or provider.kind,
            fixture_dir=args.fixtures or provider.fixture_dir,
            endpoint=args.endpoint or provider.endpoint,
        )
    return cfg.override(
        mode=RunMode.parse(args.mode) if args.mode else None,
        parallelism=args.parallelism,
        provider=provider,
        text_dir=args.text_dir,
        annotations=args.annotations,
        compiled_dictionary=args.dictionary,
        predictions_out=args.predictions,
        report_out=args.report,
        eval_levels=args.level,
    )


def _load_dictionary(cfg: RunConfig) -> Dictionary:
    if cfg.compiled_dictionary is not None:
        return load_dictionary(cfg.compiled_dictionary)
    dictionary, stats = build_dictionary(cfg.dictionary_sources, cfg.dictionary_level)
    logger.info("dictionary stats: %s", stats.to_dict())
    return dictionary


def _make_provider(cfg: RunConfig) -> LlmProvider:
    prov = cfg.provider
    if prov.kind == "mock":
        return MockProvider(prov.fixture_dir)
    return RemoteProvider(
        prov.endpoint,
        prov.credential_env,
        auth_header=prov.auth_header,
        max_attempts=prov.max_attempts,
        backoff_base=prov.backoff_base,
        timeout=prov.timeout,
    )


def _prompt_config(cfg: RunConfig) -> PromptConfig:
    example_input = example_output = None
    if cfg.example_input and cfg.example_output:
        example_input = cfg.example_input.read_text(encoding="utf-8").strip()
        example_output = cfg.example_output.read_text(encoding="utf-8").strip()
    elif cfg.mode.shots is Shots.ONE:
        example_input, example_output = bundled_example(cfg.language)
        logger.warning("using the bundled placeholder one-shot example for %r", cfg.language)
    return PromptConfig(
        language_name=cfg.prompt_language,
        shots=cfg.mode.shots or Shots.ZERO,
        example_input=example_input,
        example_output=example_output,
        template=cfg.prompt_template.read_text(encoding="utf-8") if cfg.prompt_template else "",
    )


def _link(cfg: RunConfig) -> tuple[int, list[LinkedMention]]:
    cfg.validate_for_link()
    documents, mentions = load_corpus(cfg.text_dir, cfg.annotations, cfg.language)
    dictionary = _load_dictionary(cfg) if cfg.mode.uses_dictionary else None
    llm = None
    if cfg.mode.uses_llm:
        llm = LlmStage(
            provider=_make_provider(cfg),
            prompt=_prompt_config(cfg),
            model_name=cfg.model,
            temperature=cfg.temperature,
            max_tokens=cfg.max_tokens,
            overlap_policy=cfg.overlap_policy,
        )
    result = link_corpus(documents, mentions, cfg.mode, dictionary, llm, cfg.parallelism)
    linked = result.linked
    report = {"config": cfg.echo(), **result.report}
    if cfg.predictions_out:
        write_jsonl(linked, cfg.predictions_out)
    if cfg.report_out:
        write_report(report, cfg.report_out)
    _print_json(report)
    if result.all_failed:
        print("error: every document failed in the LLM stage", file=sys.stderr)
        return EXIT_ALL_FAILED, linked
    return EXIT_OK, linked


def cmd_link(args: argparse.Namespace) -> int:
    return _link(_config_from_args(args))[0]


# eval


def join_gold(gold_path: str | Path, predictions: Sequence[LinkedMention]) -> list[LinkedMention]:
    """Attach gold codes from an annotations TSV to predictions.

    Every gold mention yields exactly one record; gold mentions without a
    prediction become unlinked records.
    """
    by_span = {(lm.doc_id, lm.start, lm.end): lm for lm in predictions}
    joined = []
    for m in read_annotations(gold_path):
        lm = by_span.pop((m.doc_id, m.start, m.end), None)
        if lm is None:
            joined.append(LinkedMention.unlinked(m))
        else:
            joined.append(LinkedMention(
                lm.doc_id, lm.start, lm.end, lm.surface, lm.predicted_code, lm.all_codes,
                lm.source, lm.explanation, m.gold_code,
            ))
    if by_span:
        logger.warning("%d prediction(s) have no gold annotation and are ignored", len(by_span))
    return joined


def _error_report_path(base: Path, level: CodeLevel, several: bool) -> Path:
    return base.with_name(f"{base.stem}.{level.value}{base.suffix}") if several else base


def _eval(linked: Sequence[LinkedMention], levels: Sequence[CodeLevel], out: Path | None, err_out: Path | None) -> int:
    results = [evaluate(linked, level).to_json() for level in levels]
    payload = {"results": results}
    if out:
        Path(out).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    if err_out:
        for level in levels:
            path = _error_report_path(Path(err_out), level, len(levels) > 1)
            path.write_text(error_report(linked, level), encoding="utf-8")
    _print_json(payload)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    predictions_path = args.predictions or cfg.predictions_out
    gold_path = args.annotations or cfg.annotations
    if not predictions_path or not gold_path:
        raise ConfigError("eval needs --predictions and --annotations (or a config naming them)")
    levels = args.level or cfg.eval_levels
    linked = join_gold(gold_path, read_jsonl(predictions_path))
    return _eval(linked, levels, args.output or cfg.eval_out, args.error_report or cfg.error_report_out)


# run


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    cfg = cfg.override(eval_out=args.output, error_report_out=args.error_report)
    code, linked = _link(cfg)
    if not linked or all(lm.gold_code is None for lm in linked):
        print("notice: corpus has no gold codes; evaluation skipped", file=sys.stderr)
        return code
    if any(lm.gold_code is None for lm in linked):
        raise MissingGold("some mentions lack gold codes; cannot evaluate a partially annotated corpus")
    eval_code = _eval(linked, cfg.eval_levels, cfg.eval_out, cfg.error_report_out)
    return code or eval_code


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icd10link", description="Link clinical mentions to ICD-10 codes and evaluate.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build-dict", help="compile an unambiguous term dictionary")
    b.add_argument("--spec", action="append", type=Path, help="classification term file (term<TAB>code)")
    b.add_argument("--train", action="append", type=Path, help="training-set term file (term<TAB>code)")
    b.add_argument("--language", default="")
    b.add_argument("--level", type=CodeLevel.parse, default=CodeLevel.CATEGORY)
    b.add_argument("--config", type=Path, help="also take sources from this run config")
    b.add_argument("-o", "--output", type=Path, help="write the compiled dictionary here")
    b.set_defaults(func=cmd_build_dict)

    for name, func, help_ in (
        ("link", cmd_link, "link corpus mentions to codes"),
        ("run", cmd_run, "link, then evaluate against gold codes"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path)
        p.add_argument("--mode", choices=[m.value for m in RunMode])
        p.add_argument("--parallelism", type=int)
        p.add_argument("--provider", choices=["mock", "remote"])
        p.add_argument("--fixtures", type=Path, help="mock provider fixture directory")
        p.add_argument("--endpoint", help="remote chat-completions URL")
        p.add_argument("--text-dir", type=Path)
        p.add_argument("--annotations", type=Path)
        p.add_argument("--dictionary", type=Path, help="compiled dictionary file")
        p.add_argument("--predictions", type=Path, help="output JSONL path")
        p.add_argument("--report", type=Path, help="output run-report JSON path")
        p.add_argument("--level", type=_levels, help="evaluation level(s), comma-separated")
        if name == "run":
            p.add_argument("--output", type=Path, help="write evaluation JSON here")
            p.add_argument("--error-report", type=Path)
        p.set_defaults(func=func)

    e = sub.add_parser("eval", help="score predictions against gold annotations")
    e.add_argument("--config", type=Path)
    e.add_argument("--predictions", type=Path)
    e.add_argument("--annotations", type=Path, help="gold annotations TSV")
    e.add_argument("--level", type=_levels, help="comma-separated, e.g. category,subcategory")
    e.add_argument("--output", type=Path)
    e.add_argument("--error-report", type=Path)
    e.set_defaults(func=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Icd10LinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
