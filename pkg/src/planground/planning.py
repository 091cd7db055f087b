"""Prompt assembly, backend calls, and free-text plan parsing.

The backend protocol is a single completion exchange: POST {model, prompt,
max_tokens} and read back {text}. Returned text is parsed into numbered
action steps with a small verb lexicon and noun-phrase extraction tuned to
the "Step N. <verb> <objects>" style.
"""

from __future__ import annotations

import os
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import httpx

from .errors import BackendError, PlanParseError, PromptError
from .scene import ObjectList, normalize_name
from .seeding import derive_seed

DEFAULT_MAX_TOKENS = 512

VERBS = (
    "MOVE", "GRASP", "PLACE", "OPEN", "CLOSE", "TURN_ON", "TURN_OFF",
    "SLICE", "POUR", "WIPE", "SCRUB", "RINSE", "WET", "DRY", "TEAR",
    "PRESS", "ADJUST", "WATCH", "OTHER",
)

_SINGLE_VERBS = {
    "move": "MOVE", "go": "MOVE", "walk": "MOVE", "navigate": "MOVE",
    "grasp": "GRASP", "grab": "GRASP", "take": "GRASP", "hold": "GRASP",
    "place": "PLACE", "put": "PLACE", "return": "PLACE",
    "open": "OPEN",
    "close": "CLOSE", "shut": "CLOSE",
    "slice": "SLICE", "cut": "SLICE", "chop": "SLICE",
    "pour": "POUR",
    "wipe": "WIPE",
    "scrub": "SCRUB",
    "rinse": "RINSE",
    "wet": "WET",
    "dry": "DRY",
    "tear": "TEAR",
    "press": "PRESS", "push": "PRESS",
    "adjust": "ADJUST",
    "watch": "WATCH",
}

_MULTI_VERBS = {
    ("turn", "on"): "TURN_ON",
    ("switch", "on"): "TURN_ON",
    ("turn", "off"): "TURN_OFF",
    ("switch", "off"): "TURN_OFF",
    ("pick", "up"): "GRASP",
}

_SPLIT_TOKENS = {"to", "on", "in", "from", "with", "at", "and"}
_ARTICLES = {"a", "an", "the", "another", "its"}
# Filler words that never name an object; dropped from phrases.
_STOP_TOKENS = {"back", "there", "here", "place", "closer", "around", "away"}
_PRONOUNS = {"it", "them"}
_TOKEN_TRIM = ".,;:!?\"'()[]"

_STEP_RE = re.compile(r"^\s*step\s*(\d+)\s*[.:]\s*(.*)$", re.IGNORECASE)


@dataclass(frozen=True)
class ActionStep:
    index: int
    verb: str
    object_phrases: tuple[str, ...]
    raw: str

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "verb": self.verb,
            "object_phrases": list(self.object_phrases),
            "raw": self.raw,
        }


@dataclass(frozen=True)
class Plan:
    instruction: str
    steps: tuple[ActionStep, ...]
    raw_text: str = ""
    source: str = ""

    def to_record(self) -> dict:
        return {
            "instruction": self.instruction,
            "steps": [s.to_record() for s in self.steps],
            "raw_text": self.raw_text,
            "source": self.source,
        }


def _tokenize(text: str) -> list[str]:
    tokens = []
    for tok in text.lower().split():
        tok = tok.strip(_TOKEN_TRIM)
        if tok:
            tokens.append(tok)
    return tokens


def _take_verb(tokens: list[str]) -> tuple[str, list[str]]:
    if len(tokens) >= 2 and (tokens[0], tokens[1]) in _MULTI_VERBS:
        return _MULTI_VERBS[(tokens[0], tokens[1])], tokens[2:]
    if tokens and tokens[0] in _SINGLE_VERBS:
        return _SINGLE_VERBS[tokens[0]], tokens[1:]
    return "OTHER", tokens[1:] if tokens else []


def _drop_leading_verbs(tokens: list[str]) -> list[str]:
    while tokens:
        if len(tokens) >= 2 and (tokens[0], tokens[1]) in _MULTI_VERBS:
            tokens = tokens[2:]
        elif tokens[0] in _SINGLE_VERBS:
            tokens = tokens[1:]
        else:
            break
    return tokens


class _ParseContext:
    """Carries pronoun-resolution state across the steps of one plan."""

    __slots__ = ("last_phrase",)

    def __init__(self):
        self.last_phrase: str | None = None


def parse_step(line: str, index: int = 1, _context: _ParseContext | None = None) -> ActionStep:
    """Parse one step body (already stripped of its "Step n." prefix)."""
    context = _context if _context is not None else _ParseContext()
    raw = line.strip()
    tokens = _tokenize(raw)
    verb, rest = _take_verb(tokens)

    groups: list[list[str]] = [[]]
    for tok in rest:
        if tok in _SPLIT_TOKENS:
            groups.append([])
        else:
            groups[-1].append(tok)

    phrases: list[str] = []
    for gi, group in enumerate(groups):
        if gi > 0:
            group = _drop_leading_verbs(group)
        kept = [t for t in group if t not in _ARTICLES and t not in _STOP_TOKENS]
        if not kept:
            continue
        if len(kept) == 1 and kept[0] in _PRONOUNS:
            if context.last_phrase is None:
                continue
            phrase = context.last_phrase
        else:
            phrase = normalize_name(" ".join(kept))
            if not phrase:
                continue
        context.last_phrase = phrase
        if phrase not in phrases:
            phrases.append(phrase)
    return ActionStep(index=index, verb=verb, object_phrases=tuple(phrases), raw=raw)


def parse_plan_text(text: str) -> list[ActionStep]:
    """Extract "Step n." / "Step n:" lines and parse each into an ActionStep.

    Non-matching lines are ignored; steps are renumbered 1..n in order of
    appearance. Raises PlanParseError when no step lines are found.
    """
    bodies: list[str] = []
    for line in (text or "").splitlines():
        m = _STEP_RE.match(line)
        if m and m.group(2).strip():
            bodies.append(m.group(2).strip())
    if not bodies:
        raise PlanParseError("no plan steps found in completion", raw_text=text or "")
    context = _ParseContext()
    return [parse_step(body, i + 1, context) for i, body in enumerate(bodies)]


def render_plan(steps) -> str:
    return "\n".join(f"Step {s.index}. {s.raw}" for s in steps)


def plan_from_record(record: dict) -> Plan:
    """Rebuild a Plan from its serialized record, reparsing each step body."""
    context = _ParseContext()
    steps = tuple(
        parse_step(str(s["raw"]), i + 1, context)
        for i, s in enumerate(record.get("steps", []))
    )
    return Plan(
        instruction=str(record.get("instruction", "")),
        steps=steps,
        raw_text=str(record.get("raw_text", "")) or render_plan(steps),
        source=str(record.get("source", "")),
    )


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    mode: str  # "generation" or "inference"

    def __post_init__(self):
        if self.mode not in ("generation", "inference"):
            raise PromptError(f"unknown template mode {self.mode!r}")
        if "{OBJECT_LIST}" not in self.body:
            raise PromptError(f"template {self.name} lacks {{OBJECT_LIST}}")
        if self.mode == "inference" and "{INSTRUCTION}" not in self.body:
            raise PromptError(f"inference template {self.name} lacks {{INSTRUCTION}}")


def builtin_template(mode: str) -> PromptTemplate:
    if mode not in ("generation", "inference"):
        raise PromptError(f"unknown template mode {mode!r}")
    body = resources.files("planground.data.templates").joinpath(f"{mode}.txt").read_text()
    return PromptTemplate(name=f"builtin-{mode}", body=body, mode=mode)


def load_template(path, mode: str) -> PromptTemplate:
    path = Path(path)
    return PromptTemplate(name=path.stem, body=path.read_text(), mode=mode)


def render_object_list(object_list: ObjectList) -> str:
    return "[" + ", ".join(object_list.names) + "]"


def build_prompt(template: PromptTemplate, object_list: ObjectList, instruction: str | None = None) -> str:
    if template.mode == "inference" and instruction is None:
        raise PromptError("inference template requires an instruction")
    if template.mode == "generation" and instruction is not None:
        raise PromptError("generation template takes no instruction")
    out = template.body.replace("{OBJECT_LIST}", render_object_list(object_list))
    if "{INSTRUCTION}" in out:
        if instruction is None:
            raise PromptError("template references {INSTRUCTION} but none given")
        out = out.replace("{INSTRUCTION}", instruction)
    return out


@dataclass(frozen=True)
class BackendConfig:
    url: str
    model: str = "default"
    api_key: str | None = None
    timeout: float = 30.0

    @classmethod
    def from_env(cls, model: str = "default", timeout: float = 30.0) -> "BackendConfig":
        url = os.environ.get("PLAN_BACKEND_URL")
        if not url:
            raise BackendError("PLAN_BACKEND_URL is not set")
        return cls(url=url, model=model, api_key=os.environ.get("PLAN_BACKEND_KEY"), timeout=timeout)


def build_request(backend: BackendConfig, prompt: str, max_tokens: int = DEFAULT_MAX_TOKENS) -> dict:
    return {"model": backend.model, "prompt": prompt, "max_tokens": int(max_tokens)}


def http_send(backend: BackendConfig, client: httpx.Client | None = None):
    """Callable performing the real POST for one request body."""

    def send(request: dict) -> str:
        headers = {}
        if backend.api_key:
            headers["Authorization"] = f"Bearer {backend.api_key}"
        own_client = client is None
        cl = client if client is not None else httpx.Client(timeout=backend.timeout)
        try:
            response = cl.post(backend.url, json=request, headers=headers)
        except httpx.HTTPError as exc:
            raise BackendError(f"transport failure: {exc}", endpoint=backend.url) from exc
        finally:
            if own_client:
                cl.close()
        if response.status_code < 200 or response.status_code >= 300:
            raise BackendError(
                f"backend returned status {response.status_code}", endpoint=backend.url
            )
        try:
            data = response.json()
        except ValueError as exc:
            raise BackendError("backend response is not valid JSON", endpoint=backend.url) from exc
        return data.get("text") if isinstance(data, dict) else None

    return send


def call_backend(
    backend: BackendConfig,
    prompt: str,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    client: httpx.Client | None = None,
    send=None,
) -> str:
    """One completion round trip; `send` replaces the network when given."""
    request = build_request(backend, prompt, max_tokens)
    if send is None:
        send = http_send(backend, client)
    text = send(request)
    if not isinstance(text, str) or not text.strip():
        raise BackendError("empty completion", endpoint=backend.url)
    return text


def request_plan(
    backend: BackendConfig,
    template: PromptTemplate,
    object_list: ObjectList,
    instruction: str | None = None,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    client: httpx.Client | None = None,
    send=None,
) -> Plan:
    prompt = build_prompt(template, object_list, instruction)
    text = call_backend(backend, prompt, max_tokens=max_tokens, client=client, send=send)
    steps = parse_plan_text(text)
    return Plan(
        instruction=instruction or "",
        steps=tuple(steps),
        raw_text=text,
        source=f"{backend.model}@{backend.url}",
    )


_BRACKET_RE = re.compile(r"\[([^\]]*)\]")


def stub_send(request: dict) -> str:
    """Offline completion stub: a tiny plausible plan from the prompt itself.

    Deterministic in the request body; used for demos and cassette-free runs.
    """
    prompt = str(request.get("prompt", ""))
    m = _BRACKET_RE.search(prompt)
    names = []
    if m:
        names = [n.strip() for n in m.group(1).split(",") if n.strip()]
    if not names:
        return "Step 1. Look around"
    rng = random.Random(derive_seed(0, "stub", prompt))
    target = rng.choice(names)
    others = [n for n in names if n != target]
    lines = [f"Step 1. Move to the {target}", f"Step 2. Grasp the {target}"]
    if others:
        surface = rng.choice(others)
        lines.append(f"Step 3. Place the {target} on the {surface}")
    else:
        lines.append(f"Step 3. Place the {target} back")
    return "\n".join(lines)
