"""Parsing raw model text into task answers, and grading against gold.

parse_answer is a total function: any byte string yields a ParsedAnswer,
with Invalid as the catch-all. Three leniency levels form a ladder; every
looser level first tries the stricter one, so acceptance is monotone by
construction.

STRICT   the whole payload (after fence stripping) is one contract line
NORMAL   the last line matching the contract, anywhere in the payload
LOOSE    NORMAL, then an unanchored pattern search over the final 5 lines
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Optional, Union

from .tasks import (
    AliveExpiredContract,
    BinaryGold,
    BinaryLabelContract,
    BitsGold,
    GoldAnswer,
    IdListContract,
    IdSetGold,
    NumberContract,
    NumberGold,
    OutputContract,
    TenBitsContract,
    WordGold,
)


class Leniency(enum.Enum):
    STRICT = "strict"
    NORMAL = "normal"
    LOOSE = "loose"


class GradeOutcome(enum.Enum):
    CORRECT = "Correct"
    INCORRECT = "Incorrect"
    INVALID = "Invalid"


class ContractMismatchError(TypeError):
    """Parsed answer kind does not belong to the gold's contract."""


@dataclass(frozen=True)
class ParsedIdSet:
    ids: tuple[str, ...]


@dataclass(frozen=True)
class ParsedNumber:
    value: Decimal
    scale: int


@dataclass(frozen=True)
class ParsedBinary:
    value: int


@dataclass(frozen=True)
class ParsedWord:
    word: str


@dataclass(frozen=True)
class ParsedBits:
    bits: tuple[int, ...]


@dataclass(frozen=True)
class Invalid:
    reason: str

    def __eq__(self, other):
        # Invalid never equals anything, itself included.
        return False

    def __hash__(self):
        return hash(("Invalid", self.reason))


ParsedAnswer = Union[ParsedIdSet, ParsedNumber, ParsedBinary, ParsedWord, ParsedBits, Invalid]


@dataclass(frozen=True)
class GradeResult:
    outcome: GradeOutcome
    per_position: Optional[tuple[GradeOutcome, ...]] = None


# ---------------------------------------------------------------------------
# Payload normalization

_FENCE = re.compile(r"^```[^\n]*\n(.*?)\n?```\s*$", re.DOTALL)


def _strip_fences(raw: str) -> str:
    text = raw.strip()
    m = _FENCE.match(text)
    if m:
        text = m.group(1).strip()
    return text


def _lines(raw: str) -> list[str]:
    return [ln.strip() for ln in _strip_fences(raw).splitlines() if ln.strip()]


# ---------------------------------------------------------------------------
# Per-contract line parsers (anchored) and loose searchers

_ID_BODY = r"[A-Za-z0-9_-]+(?:\s*,\s*[A-Za-z0-9_-]+)*"
_NUM_BODY = r"[+-]?\d{1,3}(?:,\d{3})+(?:\.\d+)?|[+-]?\d+(?:\.\d+)?"
_BITS_BODY = r"[01](?:[\s,;|]*[01]){9}"


def _parse_number_text(text: str, scale: int) -> Optional[ParsedNumber]:
    cleaned = text.replace(",", "")
    try:
        value = Decimal(cleaned)
    except InvalidOperation:
        return None
    _, _, frac = cleaned.partition(".")
    if len(frac.rstrip("0")) > scale:
        return None
    return ParsedNumber(value=value.quantize(Decimal(1).scaleb(-scale)), scale=scale)


def _parse_bits_text(text: str) -> Optional[ParsedBits]:
    bits = re.sub(r"[\s,;|]+", "", text)
    if len(bits) != 10 or set(bits) - {"0", "1"}:
        return None
    return ParsedBits(bits=tuple(int(b) for b in bits))


def _line_regex(contract: OutputContract) -> re.Pattern:
    if isinstance(contract, IdListContract):
        tag = re.escape(contract.tag)
        return re.compile(rf"^(?:{tag}\s*:\s*)?(NULL|{_ID_BODY})\s*\.?$", re.IGNORECASE)
    if isinstance(contract, NumberContract):
        if contract.tag:
            tag = re.escape(contract.tag)
            return re.compile(rf"^(?:{tag}\s*:\s*)?({_NUM_BODY})\s*\.?$", re.IGNORECASE)
        return re.compile(rf"^({_NUM_BODY})\s*\.?$")
    if isinstance(contract, BinaryLabelContract):
        label = re.escape(contract.label)
        return re.compile(rf"^(?:{label}\s*:\s*)?([01])\s*\.?$", re.IGNORECASE)
    if isinstance(contract, AliveExpiredContract):
        return re.compile(r"^(Alive|Expired)\s*[.!]?$", re.IGNORECASE)
    if isinstance(contract, TenBitsContract):
        return re.compile(rf"^[\[\(]?\s*({_BITS_BODY})\s*[\]\)]?$")
    raise TypeError(f"unknown contract {contract!r}")


def _loose_regex(contract: OutputContract) -> re.Pattern:
    if isinstance(contract, IdListContract):
        tag = re.escape(contract.tag)
        return re.compile(rf"{tag}\s*:\s*(NULL|{_ID_BODY})", re.IGNORECASE)
    if isinstance(contract, NumberContract):
        if contract.tag:
            tag = re.escape(contract.tag)
            return re.compile(rf"{tag}\s*:\s*({_NUM_BODY})", re.IGNORECASE)
        return re.compile(rf"(?<![\w.€$])({_NUM_BODY})(?![\w.])")
    if isinstance(contract, BinaryLabelContract):
        label = re.escape(contract.label)
        return re.compile(rf"{label}\s*:\s*([01])", re.IGNORECASE)
    if isinstance(contract, AliveExpiredContract):
        return re.compile(r"\b(Alive|Expired)\b", re.IGNORECASE)
    if isinstance(contract, TenBitsContract):
        return re.compile(rf"(?<![0-9])({_BITS_BODY})(?![0-9])")
    raise TypeError(f"unknown contract {contract!r}")


def _from_match(contract: OutputContract, text: str) -> Optional[ParsedAnswer]:
    if isinstance(contract, IdListContract):
        if text.upper() == "NULL":
            return ParsedIdSet(ids=())
        ids = tuple(part.strip() for part in text.split(","))
        if any(not p for p in ids):
            return None
        return ParsedIdSet(ids=ids)
    if isinstance(contract, NumberContract):
        return _parse_number_text(text, contract.scale)
    if isinstance(contract, BinaryLabelContract):
        return ParsedBinary(value=int(text))
    if isinstance(contract, AliveExpiredContract):
        return ParsedWord(word=text.capitalize())
    if isinstance(contract, TenBitsContract):
        return _parse_bits_text(text)
    return None


def _parse_line(contract: OutputContract, line: str) -> Optional[ParsedAnswer]:
    m = _line_regex(contract).match(line)
    if not m:
        return None
    return _from_match(contract, m.group(1))


def parse_answer(
    contract: OutputContract, raw: str, leniency: Leniency = Leniency.NORMAL
) -> ParsedAnswer:
    """Parse raw model output under a contract; total over arbitrary strings."""
    if not isinstance(raw, str):
        return Invalid(reason="payload is not text")
    lines = _lines(raw)
    if not lines:
        return Invalid(reason="empty payload")

    if leniency is Leniency.STRICT:
        if len(lines) != 1:
            return Invalid(reason="strict mode requires a single line")
        found = _parse_line(contract, lines[0])
        return found if found is not None else Invalid(reason="line does not match contract")

    for line in reversed(lines):
        found = _parse_line(contract, line)
        if found is not None:
            return found

    if leniency is Leniency.LOOSE:
        pattern = _loose_regex(contract)
        for line in reversed(lines[-5:]):
            matches = list(pattern.finditer(line))
            for m in reversed(matches):
                found = _from_match(contract, m.group(1))
                if found is not None:
                    return found
    return Invalid(reason="no contract pattern found")


# ---------------------------------------------------------------------------
# Canonical gold rendering


def render_gold(gold: GoldAnswer, contract: OutputContract) -> str:
    """The exact string a perfectly obedient model would return."""
    if isinstance(gold, IdSetGold):
        assert isinstance(contract, IdListContract)
        body = ",".join(gold.ids) if gold.ids else "NULL"
        return f"{contract.tag}: {body}"
    if isinstance(gold, NumberGold):
        assert isinstance(contract, NumberContract)
        body = format(gold.value.quantize(Decimal(1).scaleb(-contract.scale)), "f")
        return f"{contract.tag}: {body}" if contract.tag else body
    if isinstance(gold, BinaryGold):
        assert isinstance(contract, BinaryLabelContract)
        return f"{contract.label}: {gold.value}"
    if isinstance(gold, WordGold):
        assert isinstance(contract, AliveExpiredContract)
        return gold.word
    if isinstance(gold, BitsGold):
        assert isinstance(contract, TenBitsContract)
        return " ".join(str(b) for b in gold.bits)
    raise TypeError(f"unknown gold {gold!r}")


# ---------------------------------------------------------------------------
# Grading

_PAIRS = [
    (IdSetGold, ParsedIdSet),
    (NumberGold, ParsedNumber),
    (BinaryGold, ParsedBinary),
    (WordGold, ParsedWord),
    (BitsGold, ParsedBits),
]


def grade(gold: GoldAnswer, parsed: ParsedAnswer) -> GradeResult:
    """Correct / Incorrect / Invalid; TenBits also graded per position."""
    if isinstance(parsed, Invalid):
        if isinstance(gold, BitsGold):
            return GradeResult(outcome=GradeOutcome.INVALID, per_position=None)
        return GradeResult(outcome=GradeOutcome.INVALID)

    for gold_kind, parsed_kind in _PAIRS:
        if isinstance(gold, gold_kind):
            if not isinstance(parsed, parsed_kind):
                raise ContractMismatchError(f"{type(parsed).__name__} under {type(gold).__name__}")
            break
    else:
        raise ContractMismatchError(f"unknown gold {type(gold).__name__}")

    if isinstance(gold, IdSetGold):
        ok = set(gold.ids) == set(parsed.ids)
        return GradeResult(outcome=GradeOutcome.CORRECT if ok else GradeOutcome.INCORRECT)
    if isinstance(gold, NumberGold):
        want = gold.value.quantize(Decimal(1).scaleb(-gold.scale))
        ok = parsed.scale == gold.scale and parsed.value == want
        return GradeResult(outcome=GradeOutcome.CORRECT if ok else GradeOutcome.INCORRECT)
    if isinstance(gold, BinaryGold):
        ok = gold.value == parsed.value
        return GradeResult(outcome=GradeOutcome.CORRECT if ok else GradeOutcome.INCORRECT)
    if isinstance(gold, WordGold):
        ok = gold.word == parsed.word
        return GradeResult(outcome=GradeOutcome.CORRECT if ok else GradeOutcome.INCORRECT)

    positions = tuple(
        GradeOutcome.CORRECT if g == p else GradeOutcome.INCORRECT
        for g, p in zip(gold.bits, parsed.bits)
    )
    all_ok = all(o is GradeOutcome.CORRECT for o in positions)
    return GradeResult(
        outcome=GradeOutcome.CORRECT if all_ok else GradeOutcome.INCORRECT,
        per_position=positions,
    )


# ---------------------------------------------------------------------------
# Parsed-answer serialization (for trace and run logs)


def parsed_to_jsonable(parsed: ParsedAnswer) -> dict:
    if isinstance(parsed, ParsedIdSet):
        return {"kind": "idset", "ids": list(parsed.ids)}
    if isinstance(parsed, ParsedNumber):
        return {"kind": "number", "value": format(parsed.value, "f"), "scale": parsed.scale}
    if isinstance(parsed, ParsedBinary):
        return {"kind": "binary", "value": parsed.value}
    if isinstance(parsed, ParsedWord):
        return {"kind": "word", "word": parsed.word}
    if isinstance(parsed, ParsedBits):
        return {"kind": "bits", "bits": list(parsed.bits)}
    if isinstance(parsed, Invalid):
        return {"kind": "invalid", "reason": parsed.reason}
    raise TypeError(f"unknown parsed answer {parsed!r}")


def parsed_from_jsonable(data: dict) -> ParsedAnswer:
    kind = data["kind"]
    if kind == "idset":
        return ParsedIdSet(ids=tuple(data["ids"]))
    if kind == "number":
        return ParsedNumber(value=Decimal(data["value"]), scale=data["scale"])
    if kind == "binary":
        return ParsedBinary(value=data["value"])
    if kind == "word":
        return ParsedWord(word=data["word"])
    if kind == "bits":
        return ParsedBits(bits=tuple(data["bits"]))
    if kind == "invalid":
        return Invalid(reason=data["reason"])
    raise ValueError(f"unknown parsed answer kind {kind!r}")
