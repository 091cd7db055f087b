"""Vote storage and evaluation arithmetic: majority verdicts, success tables.

Rates are percentages rounded half-up to two decimals; the table average is
the unweighted mean of the rounded per-room rates, rounded the same way.
Votes live in an append-only newline-delimited log so a crashed process can
always be replayed back to the exact same table.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import (
    DuplicateVoteError,
    InvalidVoteError,
    StoreCorruptionError,
    UnknownItemError,
    VoteError,
)
from .planning import Plan
from .scene import ObjectList, RoomType
from .validation import (
    VERDICT_COUNTERFACTUAL,
    VERDICT_HALLUCINATION,
    VERDICT_SUCCESS,
    ValidationReport,
)

FAILURE_TYPES = (VERDICT_COUNTERFACTUAL, VERDICT_HALLUCINATION)

_TWO_PLACES = Decimal("0.01")


def round2(value: Decimal) -> float:
    return float(value.quantize(_TWO_PLACES, rounding=ROUND_HALF_UP))


def percentage(numerator: int, denominator: int) -> float:
    """100 * numerator / denominator, half-up to 2 decimals, exact arithmetic."""
    if denominator <= 0:
        raise VoteError("denominator must be positive")
    return round2(Decimal(100 * numerator) / Decimal(denominator))


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    scene_id: str
    room_type: RoomType
    instruction: str
    plan: Plan
    object_list: ObjectList
    auto_report: ValidationReport | None = None

    def to_record(self) -> dict:
        record = {
            "item_id": self.item_id,
            "scene_id": self.scene_id,
            "room_type": self.room_type.value,
            "instruction": self.instruction,
            "plan": self.plan.to_record(),
            "object_list": list(self.object_list.names),
        }
        if self.auto_report is not None:
            record["auto_report"] = self.auto_report.to_record()
        return record


@dataclass(frozen=True)
class VoteRecord:
    item_id: str
    annotator_id: str
    verdict: str  # "Success" or "Failure"
    failure_type: str | None = None
    timestamp: float = 0.0

    def __post_init__(self):
        if self.verdict not in ("Success", "Failure"):
            raise InvalidVoteError(f"verdict must be Success or Failure, got {self.verdict!r}")
        if self.verdict == "Failure":
            if self.failure_type not in FAILURE_TYPES:
                raise InvalidVoteError(
                    f"failure votes need failure_type in {FAILURE_TYPES}"
                )
        elif self.failure_type is not None:
            raise InvalidVoteError("success votes carry no failure_type")
        if not self.item_id or not self.annotator_id:
            raise InvalidVoteError("item_id and annotator_id are required")

    def to_record(self) -> dict:
        return {
            "item_id": self.item_id,
            "annotator_id": self.annotator_id,
            "verdict": self.verdict,
            "failure_type": self.failure_type,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, data: dict) -> "VoteRecord":
        return cls(
            item_id=str(data["item_id"]),
            annotator_id=str(data["annotator_id"]),
            verdict=str(data["verdict"]),
            failure_type=data.get("failure_type"),
            timestamp=float(data.get("timestamp", 0.0)),
        )


def load_items_jsonl(path) -> list[EvalItem]:
    """Reload eval items from an items.jsonl file written by a run."""
    from .planning import plan_from_record

    items = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            items.append(
                EvalItem(
                    item_id=str(data["item_id"]),
                    scene_id=str(data["scene_id"]),
                    room_type=RoomType.parse(str(data["room_type"])),
                    instruction=str(data["instruction"]),
                    plan=plan_from_record(data.get("plan", {})),
                    object_list=ObjectList.from_names(data.get("object_list", [])),
                )
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise StoreCorruptionError(f"{path}:{lineno}: bad item record: {exc}") from exc
    return items


VOTES_PER_ITEM = 3


def majority_verdict(votes) -> tuple[str, str | None]:
    """2-of-3 rule; failure type by majority, ties break to Counterfactual."""
    votes = list(votes)
    if len(votes) != VOTES_PER_ITEM:
        raise VoteError(f"majority needs exactly {VOTES_PER_ITEM} votes, got {len(votes)}")
    item_ids = {v.item_id for v in votes}
    if len(item_ids) != 1:
        raise VoteError(f"votes span multiple items: {sorted(item_ids)}")
    if len({v.annotator_id for v in votes}) != VOTES_PER_ITEM:
        raise VoteError("votes must come from distinct annotators")
    successes = sum(1 for v in votes if v.verdict == "Success")
    if successes >= 2:
        return VERDICT_SUCCESS, None
    failure_votes = [v.failure_type for v in votes if v.verdict == "Failure"]
    counter = sum(1 for t in failure_votes if t == VERDICT_COUNTERFACTUAL)
    halluc = sum(1 for t in failure_votes if t == VERDICT_HALLUCINATION)
    if halluc > counter:
        return "Failure", VERDICT_HALLUCINATION
    return "Failure", VERDICT_COUNTERFACTUAL


@dataclass(frozen=True)
class SuccessTable:
    rows: tuple[tuple[str, int, int, float], ...]  # (room, successes, total, rate %)
    macro_average: float
    missing_room_types: tuple[str, ...] = ()

    def rate_of(self, room_type: str) -> float | None:
        for room, _, _, rate in self.rows:
            if room == room_type:
                return rate
        return None

    def to_record(self) -> dict:
        return {
            "rows": [
                {"room_type": room, "successes": s, "total": t, "rate": r}
                for room, s, t, r in self.rows
            ],
            "macro_average": self.macro_average,
            "missing_room_types": list(self.missing_room_types),
        }


def aggregate_success(outcomes) -> SuccessTable:
    """Per-room success rates plus their unweighted average.

    `outcomes` yields (room_type, succeeded) pairs; room types with no items
    are listed as missing and excluded from the average.
    """
    counts: dict[str, list[int]] = {}
    for room_type, succeeded in outcomes:
        room = room_type.value if isinstance(room_type, RoomType) else str(room_type)
        bucket = counts.setdefault(room, [0, 0])
        bucket[1] += 1
        if succeeded:
            bucket[0] += 1
    if not counts:
        raise VoteError("no outcomes to aggregate")
    rows = []
    rates = []
    for room in (rt.value for rt in RoomType):
        if room not in counts:
            continue
        successes, total = counts[room]
        rate = percentage(successes, total)
        rows.append((room, successes, total, rate))
        rates.append(Decimal(str(rate)))
    for room in sorted(counts):  # non-canonical room labels, if any
        if all(room != r[0] for r in rows):
            successes, total = counts[room]
            rate = percentage(successes, total)
            rows.append((room, successes, total, rate))
            rates.append(Decimal(str(rate)))
    macro = round2(sum(rates) / Decimal(len(rates)))
    missing = tuple(rt.value for rt in RoomType if rt.value not in counts)
    return SuccessTable(rows=tuple(rows), macro_average=macro, missing_room_types=missing)


def failure_breakdown(verdicts) -> dict[str, float]:
    """Shares (%) of Success / Counterfactual / Hallucination over all items."""
    verdicts = list(verdicts)
    if not verdicts:
        raise VoteError("no verdicts to break down")
    total = len(verdicts)
    shares = {}
    for kind in (VERDICT_SUCCESS, VERDICT_COUNTERFACTUAL, VERDICT_HALLUCINATION):
        shares[kind] = percentage(sum(1 for v in verdicts if v == kind), total)
    return shares


_ROOM_HEADERS = (
    ("Kitchen", "Kit."),
    ("LivingRoom", "Living."),
    ("Bedroom", "Bed."),
    ("Bathroom", "Bath."),
)


def render_success_table(tables: dict[str, SuccessTable]) -> str:
    """Text table: one row per label, room columns plus the average."""
    header = ["Method"] + [abbr for _, abbr in _ROOM_HEADERS] + ["Avg."]
    lines = ["\t".join(header)]
    for label, table in tables.items():
        cells = [label]
        for room, _ in _ROOM_HEADERS:
            rate = table.rate_of(room)
            cells.append("-" if rate is None else f"{rate:.2f}")
        cells.append(f"{table.macro_average:.2f}")
        lines.append("\t".join(cells))
    return "\n".join(lines)


class VoteStore:
    """Durable vote log bound to a fixed set of eval items.

    Appends are flushed and fsynced before they are acknowledged; reload
    replays the log and rejects corrupt lines.
    """

    def __init__(self, items, votes_path):
        self.votes_path = Path(votes_path)
        self._items: dict[str, EvalItem] = {}
        for item in items:
            if item.item_id in self._items:
                raise VoteError(f"duplicate item id {item.item_id}")
            self._items[item.item_id] = item
        self._votes: dict[tuple[str, str], VoteRecord] = {}
        if self.votes_path.exists():
            self._replay()

    def _replay(self) -> None:
        for lineno, line in enumerate(self.votes_path.read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                vote = VoteRecord.from_record(json.loads(line))
            except (json.JSONDecodeError, KeyError, InvalidVoteError) as exc:
                raise StoreCorruptionError(
                    f"{self.votes_path}:{lineno}: bad vote record: {exc}"
                ) from exc
            key = (vote.item_id, vote.annotator_id)
            if key in self._votes:
                raise StoreCorruptionError(
                    f"{self.votes_path}:{lineno}: duplicate vote for {key}"
                )
            self._votes[key] = vote

    @property
    def items(self) -> list[EvalItem]:
        return list(self._items.values())

    def votes_for(self, item_id: str) -> list[VoteRecord]:
        return [v for (iid, _), v in self._votes.items() if iid == item_id]

    def record_vote(self, vote: VoteRecord) -> None:
        if vote.item_id not in self._items:
            raise UnknownItemError(f"unknown item {vote.item_id}")
        key = (vote.item_id, vote.annotator_id)
        if key in self._votes:
            raise DuplicateVoteError(
                f"annotator {vote.annotator_id} already voted on {vote.item_id}"
            )
        if len(self.votes_for(vote.item_id)) >= VOTES_PER_ITEM:
            raise VoteError(f"item {vote.item_id} already has {VOTES_PER_ITEM} votes")
        line = json.dumps(vote.to_record(), sort_keys=True)
        with open(self.votes_path, "a") as handle:
            handle.write(line + "\n")
            handle.flush()
            os.fsync(handle.fileno())
        self._votes[key] = vote

    def queue_for(self, annotator_id: str) -> list[EvalItem]:
        """Items this annotator may still vote on (fewer than 3 votes, none theirs)."""
        pending = []
        for item_id in sorted(self._items):
            if (item_id, annotator_id) in self._votes:
                continue
            if len(self.votes_for(item_id)) >= VOTES_PER_ITEM:
                continue
            pending.append(self._items[item_id])
        return pending

    def decided_verdicts(self) -> dict[str, tuple[str, str | None]]:
        decided = {}
        for item_id in self._items:
            votes = self.votes_for(item_id)
            if len(votes) == VOTES_PER_ITEM:
                decided[item_id] = majority_verdict(votes)
        return decided

    def success_table(self) -> tuple[SuccessTable | None, bool]:
        """(table over decided items or None, complete flag)."""
        decided = self.decided_verdicts()
        complete = len(decided) == len(self._items) and bool(self._items)
        if not decided:
            return None, complete
        outcomes = [
            (self._items[item_id].room_type, verdict == VERDICT_SUCCESS)
            for item_id, (verdict, _) in decided.items()
        ]
        return aggregate_success(outcomes), complete

    def breakdown(self) -> dict[str, float] | None:
        decided = self.decided_verdicts()
        if not decided:
            return None
        labels = []
        for verdict, failure_type in decided.values():
            labels.append(VERDICT_SUCCESS if verdict == VERDICT_SUCCESS else failure_type)
        return failure_breakdown(labels)
