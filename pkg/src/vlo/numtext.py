"""Numeric-mention extraction and the per-scene numeric contract.

Extraction covers standalone digit tokens (with optional comma grouping) and
English cardinal words for 0-100 plus exact hundred/thousand multiples
("one hundred", "four thousand"). Ordinals ("third") and the idiom "no one"
are not quantities and are never counted. A digit glued to a letter ("R2")
is not a standalone token and is ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import ConfigError

_UNITS = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen",
]
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}


def _build_word_values() -> dict[str, int]:
    table: dict[str, int] = {w: v for v, w in enumerate(_UNITS)}
    table.update(_TENS)
    for tens_word, tens_val in _TENS.items():
        for unit_val in range(1, 10):
            table[f"{tens_word} {_UNITS[unit_val]}"] = tens_val + unit_val
    for unit_val in range(1, 10):
        table[f"{_UNITS[unit_val]} hundred"] = unit_val * 100
        table[f"{_UNITS[unit_val]} thousand"] = unit_val * 1000
    return table


#: Normalized word form -> value. Compounds are keyed with a single space;
#: matching accepts hyphens or runs of whitespace between the words.
WORD_VALUES: Mapping[str, int] = _build_word_values()

_DIGIT_PATTERN = r"(?<![0-9A-Za-z_])(?:\d{1,3}(?:,\d{3})+|\d+)(?![0-9A-Za-z_])"


def _word_alternatives() -> str:
    # Longest forms first so "twenty-one" wins over "twenty".
    forms = sorted(WORD_VALUES, key=len, reverse=True)
    return "|".join(re.escape(f).replace(r"\ ", r"[\s\-]+") for f in forms)


_MENTION_RE = re.compile(
    rf"{_DIGIT_PATTERN}|\b(?:{_word_alternatives()})\b", re.IGNORECASE
)
_PREV_WORD_RE = re.compile(r"([A-Za-z]+)\W*$")


def number_to_words(value: int) -> str:
    """Canonical word form for a value in the table; raises for uncovered values."""
    for form, v in WORD_VALUES.items():
        if v == value:
            return form
    raise ConfigError(f"no word form for {value}; table covers 0-100 and round multiples")


@dataclass(frozen=True)
class NumberMention:
    value: int
    surface: str
    char_offset: int

    @property
    def is_digit_form(self) -> bool:
        return any(ch.isdigit() for ch in self.surface)


def _mention_value(surface: str) -> int:
    if any(ch.isdigit() for ch in surface):
        return int(surface.replace(",", ""))
    key = re.sub(r"[\s\-]+", " ", surface.lower())
    return WORD_VALUES[key]


def extract_numbers(text: str) -> list[NumberMention]:
    """Every numeric mention in text order (digits and word forms)."""
    mentions: list[NumberMention] = []
    for m in _MENTION_RE.finditer(text):
        surface = m.group(0)
        if surface.lower() == "one":
            prev = _PREV_WORD_RE.search(text[: m.start()])
            if prev and prev.group(1).lower() == "no":
                continue  # "no one" is an idiom, not a quantity
        mentions.append(NumberMention(_mention_value(surface), surface, m.start()))
    return mentions


class Allowance(Enum):
    STRICT_ZERO = "strict_zero"
    INTRO_LENIENT = "intro_lenient"
    BEAT = "beat"


#: Word-form values tolerated in intro scenes for general phrasing.
INTRO_LENIENT_VALUES = frozenset({1, 2, 3})


@dataclass(frozen=True)
class BeatSpec:
    """Numeric contract for one scene: exact counts, anchors, banned values."""

    required_atomics: Mapping[int, int] = field(default_factory=dict)
    required_anchors: frozenset[str] = frozenset()
    forbidden_values: frozenset[int] = frozenset()
    allowance: Allowance = Allowance.BEAT

    def validate(self) -> None:
        overlap = set(self.required_atomics) & set(self.forbidden_values)
        if overlap:
            raise ConfigError(f"values both required and forbidden: {sorted(overlap)}")
        for value, count in self.required_atomics.items():
            if count < 1:
                raise ConfigError(f"required count for {value} must be >= 1, got {count}")


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    offender: str


@dataclass(frozen=True)
class ValidationReport:
    is_valid: bool
    violations: tuple[Violation, ...]
    explanation_for_generator: str
    explanation_for_audit: str

    @classmethod
    def from_violations(cls, violations: Iterable[Violation]) -> "ValidationReport":
        vs = tuple(violations)
        if not vs:
            return cls(True, (), "", "all numeric rules satisfied")
        gen = " ".join(f"[{v.rule}] {v.message}." for v in vs)
        audit = "; ".join(f"{v.rule}: {v.message} (offender: {v.offender})" for v in vs)
        return cls(False, vs, gen, audit)

    def to_json_dict(self) -> dict:
        return {
            "is_valid": self.is_valid,
            "explanation_for_generator": self.explanation_for_generator,
            "explanation_for_audit": self.explanation_for_audit,
            "violations": [
                {"rule": v.rule, "message": v.message, "offender": v.offender}
                for v in self.violations
            ],
        }


def _normalize_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().lower()


def validate_scene(text: str, spec: BeatSpec) -> ValidationReport:
    """Audit a scene against its numeric contract; collects every violation.

    Checks, in order: R1.A exact atomic frequencies (either form counts toward
    a value's tally), R1.C required anchors present (case-insensitive substring
    after whitespace normalization), R2 forbidden values absent, R5 no mention
    outside the contract (intro leniency: word-form one/two/three only).
    """
    spec.validate()
    mentions = extract_numbers(text)
    violations: list[Violation] = []

    for value in sorted(spec.required_atomics):
        required = spec.required_atomics[value]
        observed = sum(1 for m in mentions if m.value == value)
        if observed != required:
            violations.append(
                Violation(
                    "R1.A",
                    f"value {value} mentioned {observed} time(s), expected exactly {required}",
                    str(value),
                )
            )

    haystack = _normalize_ws(text)
    for anchor in sorted(spec.required_anchors):
        if _normalize_ws(anchor) not in haystack:
            violations.append(
                Violation("R1.C", f"required anchor {anchor!r} not found", anchor)
            )

    for m in mentions:
        if m.value in spec.forbidden_values:
            violations.append(
                Violation(
                    "R2",
                    f"forbidden value {m.value} appears as {m.surface!r}",
                    m.surface,
                )
            )

    for m in mentions:
        if m.value in spec.forbidden_values or m.value in spec.required_atomics:
            continue
        if (
            spec.allowance is Allowance.INTRO_LENIENT
            and not m.is_digit_form
            and m.value in INTRO_LENIENT_VALUES
        ):
            continue
        violations.append(
            Violation(
                "R5",
                f"unexpected numeric mention {m.surface!r} (value {m.value})",
                m.surface,
            )
        )

    return ValidationReport.from_violations(violations)


def validate_intro(text: str) -> ValidationReport:
    """Intro contract: zero numbers, except word-form one/two/three."""
    return validate_scene(text, BeatSpec(allowance=Allowance.INTRO_LENIENT))


def validate_padding(text: str) -> ValidationReport:
    """Padding contract: strictly zero numeric mentions."""
    return validate_scene(text, BeatSpec(allowance=Allowance.STRICT_ZERO))
