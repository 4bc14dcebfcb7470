"""Command-line entry point: annotate, evaluate, inspect.

Exit codes: 0 success, 1 usage or input error, 2 annotation finished with
some items unannotated, 3 missing API key, 4 id mismatch or unknown id.
Human-readable text goes to stdout; machine output goes only to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from .cache import JsonFileCache
from .core import PredictionRecord
from .errors import (
    AuthError,
    ConfigError,
    EvaluationError,
    HallmarkError,
)
from .jsonl import read_gold, read_items, read_predictions, write_predictions
from .knowledge import KnowledgeService, WikipediaClient
from .llm import (
    LLMClient,
    MarkingRule,
    MockProvider,
    OpenAIChatProvider,
    ProviderConfig,
    RateLimiter,
)
from .marking import insert_markers
from .pipeline import PipelineConfig, annotate_dataset
from .prompts import validate_templates
from .scoring import evaluate, iou, render_table, report_to_dict

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2
EXIT_NO_KEY = 3
EXIT_ID_MISMATCH = 4

DEFAULT_CACHE_DIR = ".hallmark-cache"

KNOWN_PROVIDERS = {
    "openai": {"base_url": "https://api.openai.com/v1", "api_key_env": "OPENAI_API_KEY"},
    "deepseek": {"base_url": "https://api.deepseek.com/v1", "api_key_env": "DEEPSEEK_API_KEY"},
    "mock": {},
}

# PipelineConfig fields settable from the config file; CLI flags win.
CONFIG_KEYS = {
    "model": str,
    "runs_n": int,
    "threshold": float,
    "min_similarity": float,
    "use_roles": bool,
    "use_external": bool,
    "temperature": float,
    "max_tokens": int,
    "max_parallel_items": int,
    "max_parallel_runs": int,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hallmark",
        description="Annotate hallucination spans in QA answers with an LLM ensemble.",
    )
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    annotate = sub.add_parser("annotate", help="annotate a dataset")
    annotate.add_argument("--input", required=True, help="dataset JSONL")
    annotate.add_argument("--output", required=True, help="prediction JSONL to write")
    annotate.add_argument("--model", default=None, help="model name")
    annotate.add_argument("--provider", default=None, help="mock, openai, deepseek, or configured name")
    annotate.add_argument("--runs", type=int, default=None, help="annotation runs per item (default 12)")
    annotate.add_argument("--threshold", type=float, default=None, help="hard-label vote threshold (default 0.5)")
    annotate.add_argument("--no-roles", action="store_true", help="disable expert-role diversification")
    annotate.add_argument("--no-external", action="store_true", help="disable Wikipedia knowledge")
    annotate.add_argument("--min-similarity", type=float, default=None, help="run acceptance gate (default 0.7)")
    annotate.add_argument("--cache-dir", default=None, help=f"response cache (default {DEFAULT_CACHE_DIR})")
    annotate.add_argument("--max-parallel", type=int, default=None, help="items processed concurrently")
    annotate.add_argument("--config", default=None, help="JSON config file (CLI flags win)")
    annotate.add_argument("--base-url", default=None, help="override provider base URL")
    annotate.add_argument("--api-key-env", default=None, help="override API key env var name")
    annotate.add_argument("--mock-fixture", default=None, help="JSON file of spans the mock provider marks, keyed by item id")

    evaluate_p = sub.add_parser("evaluate", help="score predictions against gold labels")
    evaluate_p.add_argument("--pred", required=True)
    evaluate_p.add_argument("--gold", required=True)
    evaluate_p.add_argument("--report", default=None, help="write the JSON report here")

    inspect = sub.add_parser("inspect", help="render one item's spans in the terminal")
    inspect.add_argument("--pred", required=True)
    inspect.add_argument("--gold", default=None)
    inspect.add_argument("--id", required=True, dest="item_id")
    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _provider_config(args: argparse.Namespace, file_cfg: dict) -> ProviderConfig:
    file_provider = file_cfg.get("provider", {})
    if not isinstance(file_provider, dict):
        raise ConfigError("config key 'provider' must be an object")
    name = args.provider or file_provider.get("name") or "mock"
    known = KNOWN_PROVIDERS.get(name, {})
    base_url = args.base_url or file_provider.get("base_url") or known.get("base_url", "")
    api_key_env = args.api_key_env or file_provider.get("api_key_env") or known.get("api_key_env", "")
    if name != "mock" and not base_url:
        raise ConfigError(f"provider {name!r} needs a base URL (--base-url or config)")
    return ProviderConfig(
        name=name,
        base_url=base_url,
        api_key_env=api_key_env,
        requests_per_minute=int(file_provider.get("requests_per_minute", 60)),
        max_retries=int(file_provider.get("max_retries", 3)),
    )


def _pipeline_config(args: argparse.Namespace, file_cfg: dict, provider: ProviderConfig) -> PipelineConfig:
    values: dict = {}
    for key, cast in CONFIG_KEYS.items():
        if key in file_cfg:
            values[key] = cast(file_cfg[key])
    if args.model is not None:
        values["model"] = args.model
    if args.runs is not None:
        values["runs_n"] = args.runs
    if args.threshold is not None:
        values["threshold"] = args.threshold
    if args.min_similarity is not None:
        values["min_similarity"] = args.min_similarity
    if args.no_roles:
        values["use_roles"] = False
    if args.no_external:
        values["use_external"] = False
    if args.max_parallel is not None:
        values["max_parallel_items"] = args.max_parallel
    values.setdefault("model", "mock-model" if provider.name == "mock" else None)
    if values["model"] is None:
        raise ConfigError("a model name is required (--model or config file)")
    return PipelineConfig(provider=provider, **values)


def _load_mock_rules(path: str | None, items) -> list[MarkingRule]:
    fixture: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            fixture = json.load(fh)
    rules = []
    for item in items:
        entry = fixture.get(item.id, {})
        spans = tuple((int(s), int(e)) for s, e in entry.get("spans", []))
        per_run = entry.get("per_run")
        if per_run is not None:
            per_run = {
                tag: tuple((int(s), int(e)) for s, e in spans_list)
                for tag, spans_list in per_run.items()
            }
        rules.append(MarkingRule(answer=item.answer, spans=spans, per_run=per_run))
    return rules


def cmd_annotate(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    validate_templates()
    provider_cfg = _provider_config(args, file_cfg)
    cfg = _pipeline_config(args, file_cfg, provider_cfg)

    items = read_items(args.input)
    cache_dir = args.cache_dir or file_cfg.get("cache_dir") or DEFAULT_CACHE_DIR
    cache = JsonFileCache(cache_dir)

    if provider_cfg.name == "mock":
        provider = MockProvider(rules=_load_mock_rules(args.mock_fixture, items))
        limiter = None
    else:
        provider = OpenAIChatProvider(provider_cfg)
        limiter = RateLimiter(provider_cfg.requests_per_minute)
    llm = LLMClient(provider, cache=cache, limiter=limiter, max_retries=provider_cfg.max_retries)
    knowledge_svc = KnowledgeService(llm, WikipediaClient(), cfg.model, cache=cache)

    total = len(items)
    done = 0

    def progress(record: PredictionRecord) -> None:
        nonlocal done
        done += 1
        status = f"runs_used={record.runs_used} hard={len(record.hard_labels)}"
        if record.runs_used == 0:
            status += " (unannotated)"
        print(f"[{done}/{total}] {record.id} {status}")

    records = annotate_dataset(items, cfg, llm, knowledge_svc, progress=progress)
    write_predictions(records, args.output)

    failures = sum(1 for r in records if r.runs_used == 0)
    mean_runs = sum(r.runs_used for r in records) / total if total else 0.0
    print(f"wrote {total} records to {args.output} (mean runs used {mean_runs:.1f}, {failures} failures)")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    preds = read_predictions(args.pred)
    golds = read_gold(args.gold)
    try:
        report = evaluate(preds, golds)
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ID_MISMATCH
    print(render_table(report))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, indent=2, ensure_ascii=False)
            fh.write("\n")
        print(f"report written to {args.report}")
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    preds = {p.id: p for p in read_predictions(args.pred)}
    pred = preds.get(args.item_id)
    if pred is None:
        print(f"error: id {args.item_id!r} not found in {args.pred}", file=sys.stderr)
        return EXIT_ID_MISMATCH

    gold = None
    if args.gold:
        golds = {g.id: g for g in read_gold(args.gold)}
        gold = golds.get(args.item_id)
        if gold is None:
            print(f"error: id {args.item_id!r} not found in {args.gold}", file=sys.stderr)
            return EXIT_ID_MISMATCH

    answer = pred.answer if pred.answer is not None else (gold.answer if gold else None)
    if answer is None:
        print(
            "error: prediction file carries no answer text; pass --gold to supply it",
            file=sys.stderr,
        )
        return EXIT_ERROR

    print(f"id={pred.id} lang={pred.lang} runs_used={pred.runs_used}")
    print(f"pred: {insert_markers(answer, pred.hard_labels)}")
    if gold is not None:
        print(f"gold: {insert_markers(gold.answer, gold.hard_labels)}")
        print(f"IoU: {iou(pred.hard_labels, gold.hard_labels, len(gold.answer)):.4f}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "annotate":
            return cmd_annotate(args)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        return cmd_inspect(args)
    except AuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_KEY
    except (HallmarkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
