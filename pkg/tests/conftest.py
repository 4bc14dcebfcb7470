from __future__ import annotations

import random

import pytest

from hallmark import JsonFileCache, LLMClient, MarkingRule, MockProvider, QAItem

SWIMMER_QUESTION = "What did Petra van Staveren win a gold medal for?"
SWIMMER_ANSWER = (
    "Petra van Stoveren won a silver medal in the 2008 Summer Olympics in Beijing, China."
)
SWIMMER_HALLUCINATED = ("silver", "2008", "Beijing, China")

# Character pools for multilingual random-text generation. Marker
# delimiter characters are deliberately absent.
SCRIPT_POOLS = {
    "latin": "abcdefghijklmnopqrstuvwxyz ,.",
    "cjk": "的一是不了人我在有他这中大来上国个到说们为子和你地出道也时年得就那要下",
    "devanagari": "अआइईउऊएऐओऔकखगघचछजझटठडढणतथदधनपफबभमयरलवशषसह ",
    "arabic": "ابتثجحخدذرزسشصضطظعغفقكلمنهوي ",
}


def swimmer_spans() -> list[tuple[int, int]]:
    return [
        (SWIMMER_ANSWER.index(sub), SWIMMER_ANSWER.index(sub) + len(sub))
        for sub in SWIMMER_HALLUCINATED
    ]


@pytest.fixture
def swimmer_item() -> QAItem:
    return QAItem(
        id="swimmer-1", lang="EN", question=SWIMMER_QUESTION, answer=SWIMMER_ANSWER
    )


@pytest.fixture
def swimmer_rule() -> MarkingRule:
    return MarkingRule(answer=SWIMMER_ANSWER, spans=tuple(swimmer_spans()))


@pytest.fixture
def cache(tmp_path) -> JsonFileCache:
    return JsonFileCache(tmp_path / "cache")


def make_client(provider, cache=None) -> LLMClient:
    return LLMClient(provider, cache=cache, sleep=lambda _: None)


def random_text(rng: random.Random, pool: str, min_len: int = 1, max_len: int = 60) -> str:
    n = rng.randint(min_len, max_len)
    return "".join(rng.choice(pool) for _ in range(n))


def random_nonadjacent_spans(
    rng: random.Random, length: int, max_spans: int = 4
) -> list[tuple[int, int]]:
    """Random sorted spans separated by at least one character."""
    spans: list[tuple[int, int]] = []
    pos = 0
    for _ in range(rng.randint(0, max_spans)):
        if pos >= length:
            break
        start = rng.randint(pos, length - 1)
        end = rng.randint(start + 1, min(length, start + 8))
        spans.append((start, end))
        pos = end + 1
    return spans


def mock_provider_for(answer: str, spans, **kwargs) -> MockProvider:
    return MockProvider(rules=[MarkingRule(answer=answer, spans=tuple(spans))], **kwargs)
