"""Deterministic evaluators for non-numeric reasoning operators.

Three operator families, each reduced to exact, order-stable logic:
ABDUCE (best explanation by likelihood/simplicity score), INDUCE (most
specific rule consistent with all examples, specificity = subject-class
subset) and DEFEASIBLE_QUERY (priority-ordered rules with overriding
exceptions). Matching is exact string/pattern equality after case folding
and whitespace normalization; no NLP.

Problems serialize to and from an s-expression form, e.g.::

    (ABDUCE (OBSERVATIONS "lights flicker")
            (CAUSES (CAUSE "power surge" (simplicity 2) (likelihood 0.8))))
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import DomainError, ParseError


def _norm(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().casefold()


def _as_fraction(value) -> Fraction:
    # Floats go through str() so 0.8 means 8/10 exactly, not its binary float.
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def _singular(word: str) -> str:
    return word[:-1] if word.endswith("s") and len(word) > 1 else word


# --- abduction ---------------------------------------------------------------


@dataclass(frozen=True)
class Cause:
    name: str
    simplicity: Fraction
    likelihood: Fraction

    def __init__(self, name: str, simplicity, likelihood):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "simplicity", _as_fraction(simplicity))
        object.__setattr__(self, "likelihood", _as_fraction(likelihood))

    @property
    def score(self) -> Fraction:
        return self.likelihood / self.simplicity


def eval_abduce(observations: Iterable[str], causes: Sequence[Cause]) -> str:
    """Name of the cause maximizing likelihood/simplicity; first listed wins ties."""
    causes = list(causes)
    if not causes:
        raise DomainError("abduce requires at least one candidate cause")
    seen: set[str] = set()
    for c in causes:
        if not c.name:
            raise DomainError("cause name must be non-empty")
        if c.name in seen:
            raise DomainError(f"duplicate cause name {c.name!r}")
        seen.add(c.name)
        if c.simplicity <= 0:
            raise DomainError(f"cause {c.name!r} has nonpositive simplicity")
        if not 0 <= c.likelihood <= 1:
            raise DomainError(f"cause {c.name!r} has likelihood outside [0, 1]")
    best = causes[0]
    for c in causes[1:]:
        if c.score > best.score:
            best = c
    return best.name


# --- induction ---------------------------------------------------------------


@dataclass(frozen=True)
class Fact:
    """One observed instance: '<class> <instance> is <property>'."""

    subject_class: str
    instance: str
    prop: str

    _TEXT_RE = re.compile(r"^(\S+)\s+(\S+)\s+is\s+(.+)$", re.IGNORECASE)

    @classmethod
    def from_text(cls, text: str) -> "Fact":
        m = cls._TEXT_RE.match(text.strip())
        if not m:
            raise DomainError(f"fact not in '<class> <instance> is <property>' form: {text!r}")
        return cls(_singular(_norm(m.group(1))), _norm(m.group(2)), _norm(m.group(3)))


@dataclass(frozen=True)
class RuleCandidate:
    """A candidate generalization with its subject-class extension made explicit.

    subject_classes is the full set of classes the rule ranges over;
    specificity comparisons are literal subset tests on these sets.
    """

    statement: str
    subject_classes: frozenset[str]
    prop: str
    universal: bool = True

    _STATEMENT_RE = re.compile(r"^(all|some)\s+(\S+)\s+are\s+(.+)$", re.IGNORECASE)

    @classmethod
    def from_statement(
        cls, statement: str, subclasses: Mapping[str, Iterable[str]] | None = None
    ) -> "RuleCandidate":
        """Parse 'all/some <class> are <property>', expanding the class with
        its transitive subclasses from `subclasses` (parent -> children)."""
        m = cls._STATEMENT_RE.match(statement.strip())
        if not m:
            raise DomainError(f"candidate not in 'all/some X are Y' form: {statement!r}")
        quantifier, class_word, prop = m.groups()
        base = _singular(_norm(class_word))
        extension = {base}
        if subclasses:
            normalized = {
                _singular(_norm(parent)): [_singular(_norm(c)) for c in children]
                for parent, children in subclasses.items()
            }
            frontier = [base]
            while frontier:
                cur = frontier.pop()
                for child in normalized.get(cur, []):
                    if child not in extension:
                        extension.add(child)
                        frontier.append(child)
        return cls(
            statement=statement.strip(),
            subject_classes=frozenset(extension),
            prop=_norm(prop),
            universal=quantifier.lower() == "all",
        )


def _consistent(candidate: RuleCandidate, examples: Sequence[Fact]) -> bool:
    covered = [f for f in examples if f.subject_class in candidate.subject_classes]
    if candidate.universal:
        return all(f.prop == candidate.prop for f in covered)
    return any(f.prop == candidate.prop for f in covered)


def eval_induce(examples: Sequence[Fact], candidates: Sequence[RuleCandidate]) -> str:
    """Most specific candidate consistent with every example; first listed wins ties.

    Universal candidates must not be contradicted by any covered example;
    existential ("some") candidates need a witness among the examples.
    """
    candidates = list(candidates)
    if not candidates:
        raise DomainError("induce requires at least one rule candidate")
    statements = [c.statement for c in candidates]
    if len(set(statements)) != len(statements):
        raise DomainError("candidate statements must be unique")
    pool = [c for c in candidates if _consistent(c, examples)]
    if not pool:
        raise DomainError("no rule fits: every candidate is inconsistent with the examples")
    for c in pool:
        if not any(d.subject_classes < c.subject_classes for d in pool):
            return c.statement
    raise AssertionError("unreachable: finite strict subset order has minima")


# --- defeasible reasoning ----------------------------------------------------


@dataclass(frozen=True)
class ConclusionPattern:
    """What a rule or exception concludes: <subject class> can/cannot <predicate>."""

    subject_class: str
    predicate: str
    polarity: bool

    _NEG_RE = re.compile(
        r"^(?:all\s+)?(\S+)\s+(?:cannot|can\s+not|are\s+not)\s+(.+)$", re.IGNORECASE
    )
    _POS_RE = re.compile(r"^(?:all\s+)?(\S+)\s+(?:can|are)\s+(.+)$", re.IGNORECASE)

    @classmethod
    def from_text(cls, text: str) -> "ConclusionPattern":
        text = text.strip()
        m = cls._NEG_RE.match(text)
        if m:
            return cls(_singular(_norm(m.group(1))), _norm(m.group(2)), False)
        m = cls._POS_RE.match(text)
        if m:
            return cls(_singular(_norm(m.group(1))), _norm(m.group(2)), True)
        raise DomainError(f"rule not in '[all] X can/cannot/are/are not Y' form: {text!r}")


@dataclass(frozen=True)
class Query:
    """The conclusion under test for a named subject: '<subject> can <predicate>'."""

    subject: str
    predicate: str

    _TEXT_RE = re.compile(r"^(\S+)\s+(?:can|is|are)\s+(.+)$", re.IGNORECASE)

    @classmethod
    def from_text(cls, text: str) -> "Query":
        m = cls._TEXT_RE.match(text.strip())
        if not m:
            raise DomainError(f"query not in '<subject> can/is <predicate>' form: {text!r}")
        return cls(_norm(m.group(1)), _norm(m.group(2)))


_MEMBERSHIP_RE = re.compile(r"^(\S+)\s+is\s+(?:an?\s+)?(\S+)$", re.IGNORECASE)


@dataclass(frozen=True)
class KnowledgeBase:
    facts: frozenset[str]
    rules: tuple[tuple[ConclusionPattern, int], ...]
    exceptions: tuple[tuple[ConclusionPattern, int], ...]

    def validate(self) -> None:
        if not self.rules and not self.exceptions:
            raise DomainError("knowledge base has no rules or exceptions")
        for _, priority in (*self.rules, *self.exceptions):
            if priority < 1:
                raise DomainError(f"priorities must be positive, got {priority}")

    def memberships(self) -> dict[str, set[str]]:
        """instance -> classes, from facts of the form 'X is a Y'."""
        out: dict[str, set[str]] = {}
        for fact in self.facts:
            m = _MEMBERSHIP_RE.match(fact.strip())
            if m:
                out.setdefault(_norm(m.group(1)), set()).add(_singular(_norm(m.group(2))))
        return out


def eval_defeasible(query: Query, kb: KnowledgeBase) -> bool:
    """Apply rules and exceptions in ascending priority; each applicable entry
    overwrites the conclusion, so later (higher-priority) entries win."""
    kb.validate()
    members = kb.memberships()
    subject_classes = members.get(query.subject, set())

    def applies(pattern: ConclusionPattern) -> bool:
        if pattern.predicate != query.predicate:
            return False
        return pattern.subject_class == query.subject or pattern.subject_class in subject_classes

    entries = list(kb.rules) + list(kb.exceptions)
    verdict: bool | None = None
    for pattern, _ in sorted(entries, key=lambda e: e[1]):
        if applies(pattern):
            verdict = pattern.polarity
    if verdict is None:
        raise DomainError("query undetermined: no rule or exception matches it")
    return verdict


# --- problem wrappers and s-expression serialization -------------------------


@dataclass(frozen=True)
class AbductionProblem:
    observations: tuple[str, ...]
    causes: tuple[Cause, ...]

    def evaluate(self) -> str:
        return eval_abduce(self.observations, self.causes)


@dataclass(frozen=True)
class InductionProblem:
    examples: tuple[Fact, ...]
    candidates: tuple[RuleCandidate, ...]
    example_texts: tuple[str, ...] = ()
    taxonomy: tuple[tuple[str, str], ...] = ()  # (child, parent) pairs as parsed

    def evaluate(self) -> str:
        return eval_induce(self.examples, self.candidates)


@dataclass(frozen=True)
class DefeasibleProblem:
    query: Query
    kb: KnowledgeBase
    query_text: str = ""
    fact_texts: tuple[str, ...] = ()
    rule_texts: tuple[tuple[str, int], ...] = field(default_factory=tuple)
    exception_texts: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def evaluate(self) -> bool:
        return eval_defeasible(self.query, self.kb)


SymbolicProblem = Union[AbductionProblem, InductionProblem, DefeasibleProblem]

_Sexp = Union[str, list]

_TOKEN_RE = re.compile(r'\(|\)|"(?:[^"\\]|\\.)*"|[^\s()"]+')


def _tokenize(text: str):
    pos = 0
    for m in _TOKEN_RE.finditer(text):
        between = text[pos : m.start()]
        if between.strip():
            raise ParseError(f"unexpected character {between.strip()[0]!r}", pos)
        pos = m.end()
        yield m.group(0), m.start()
    if text[pos:].strip():
        raise ParseError("unexpected trailing content", pos)


def _read_sexp(text: str) -> _Sexp:
    stack: list[list] = []
    top: _Sexp | None = None
    for token, offset in _tokenize(text):
        if token == "(":
            stack.append([])
            continue
        if token == ")":
            if not stack:
                raise ParseError("unbalanced ')'", offset)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            elif top is None:
                top = done
            else:
                raise ParseError("multiple top-level expressions", offset)
            continue
        atom = token[1:-1].replace('\\"', '"') if token.startswith('"') else token
        if stack:
            stack[-1].append(atom)
        elif top is None:
            top = atom
        else:
            raise ParseError("multiple top-level expressions", offset)
    if stack:
        raise ParseError("unbalanced '(': missing ')'", len(text))
    if top is None:
        raise ParseError("empty input", 0)
    return top


def _clauses(items: Sequence[_Sexp], head: str) -> list[list]:
    return [x for x in items if isinstance(x, list) and x and x[0] == head]


def _clause(items: Sequence[_Sexp], head: str, required: bool = True) -> list | None:
    found = _clauses(items, head)
    if not found:
        if required:
            raise DomainError(f"missing ({head} ...) clause")
        return None
    return found[0]


def _unwrap(item: _Sexp) -> str:
    # Accepts both "text" and ("text"): the examples wrap strings in parens.
    if isinstance(item, list):
        if len(item) != 1 or not isinstance(item[0], str):
            raise DomainError(f"expected a single string, got {item!r}")
        return item[0]
    return item


def _keyed_number(item: _Sexp, key: str) -> Fraction:
    if not (isinstance(item, list) and len(item) == 2 and item[0] == key):
        raise DomainError(f"expected ({key} <number>), got {item!r}")
    return Fraction(item[1])


def parse_sexpr(text: str) -> SymbolicProblem:
    """Parse one symbolic problem from its s-expression form."""
    form = _read_sexp(text)
    if not isinstance(form, list) or not form:
        raise DomainError("expected an operator form")
    head = form[0]
    if head == "ABDUCE":
        obs = tuple(_unwrap(x) for x in _clause(form, "OBSERVATIONS")[1:])
        causes = []
        for c in _clause(form, "CAUSES")[1:]:
            if not (isinstance(c, list) and len(c) == 4 and c[0] == "CAUSE"):
                raise DomainError(f"expected (CAUSE name (simplicity k) (likelihood p)), got {c!r}")
            causes.append(
                Cause(
                    _unwrap(c[1]),
                    _keyed_number(c[2], "simplicity"),
                    _keyed_number(c[3], "likelihood"),
                )
            )
        return AbductionProblem(obs, tuple(causes))
    if head == "INDUCE":
        example_texts = tuple(_unwrap(x) for x in _clause(form, "EXAMPLES")[1:])
        candidate_texts = [_unwrap(x) for x in _clause(form, "RULE_CANDIDATES")[1:]]
        taxonomy_clause = _clause(form, "TAXONOMY", required=False)
        pairs: list[tuple[str, str]] = []
        subclasses: dict[str, list[str]] = {}
        if taxonomy_clause:
            for entry in taxonomy_clause[1:]:
                if not (isinstance(entry, list) and len(entry) == 2):
                    raise DomainError(f"expected (child parent) in TAXONOMY, got {entry!r}")
                child, parent = (_unwrap(entry[0]), _unwrap(entry[1]))
                pairs.append((child, parent))
                subclasses.setdefault(parent, []).append(child)
        return InductionProblem(
            examples=tuple(Fact.from_text(t) for t in example_texts),
            candidates=tuple(RuleCandidate.from_statement(t, subclasses) for t in candidate_texts),
            example_texts=example_texts,
            taxonomy=tuple(pairs),
        )
    if head == "DEFEASIBLE_QUERY":
        query_text = _unwrap(_clause(form, "QUERY")[1])
        kb_form = _clause(form, "KNOWLEDGE_BASE")
        facts: list[str] = []
        rules: list[tuple[str, int]] = []
        exceptions: list[tuple[str, int]] = []
        for entry in kb_form[1:]:
            if not (isinstance(entry, list) and entry):
                raise DomainError(f"bad KNOWLEDGE_BASE entry: {entry!r}")
            kind = entry[0]
            if kind == "FACT":
                facts.append(_unwrap(entry[1]))
            elif kind in ("RULE", "EXCEPTION"):
                priority = int(_keyed_number(entry[2], "priority"))
                (rules if kind == "RULE" else exceptions).append((_unwrap(entry[1]), priority))
            else:
                raise DomainError(f"unknown KNOWLEDGE_BASE entry kind {kind!r}")
        kb = KnowledgeBase(
            facts=frozenset(facts),
            rules=tuple((ConclusionPattern.from_text(t), p) for t, p in rules),
            exceptions=tuple((ConclusionPattern.from_text(t), p) for t, p in exceptions),
        )
        return DefeasibleProblem(
            query=Query.from_text(query_text),
            kb=kb,
            query_text=query_text,
            fact_texts=tuple(facts),
            rule_texts=tuple(rules),
            exception_texts=tuple(exceptions),
        )
    raise DomainError(f"unknown operator {head!r}")


def _q(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def _num(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    as_float = float(value)
    if Fraction(str(as_float)) == value:
        return str(as_float)
    return f"{value.numerator}/{value.denominator}"


def to_sexpr(problem: SymbolicProblem) -> str:
    """Pretty-print a symbolic problem; parse_sexpr round-trips the output."""
    if isinstance(problem, AbductionProblem):
        obs = " ".join(_q(o) for o in problem.observations)
        causes = "\n".join(
            f"    (CAUSE {_q(c.name)} (simplicity {_num(c.simplicity)})"
            f" (likelihood {_num(c.likelihood)}))"
            for c in problem.causes
        )
        return f"(ABDUCE\n  (OBSERVATIONS {obs})\n  (CAUSES\n{causes}\n  )\n)"
    if isinstance(problem, InductionProblem):
        examples = " ".join(f"({_q(t)})" for t in problem.example_texts)
        candidates = " ".join(f"({_q(c.statement)})" for c in problem.candidates)
        lines = [f"(INDUCE\n  (EXAMPLES {examples})\n  (RULE_CANDIDATES {candidates})"]
        if problem.taxonomy:
            pairs = " ".join(f"({child} {parent})" for child, parent in problem.taxonomy)
            lines.append(f"  (TAXONOMY {pairs})")
        return "\n".join(lines) + "\n)"
    if isinstance(problem, DefeasibleProblem):
        body = [f"    (FACT {_q(f)})" for f in problem.fact_texts]
        body += [f"    (RULE {_q(t)} (priority {p}))" for t, p in problem.rule_texts]
        body += [f"    (EXCEPTION {_q(t)} (priority {p}))" for t, p in problem.exception_texts]
        kb = "\n".join(body)
        return (
            f"(DEFEASIBLE_QUERY\n  (QUERY {_q(problem.query_text)})\n"
            f"  (KNOWLEDGE_BASE\n{kb}\n  )\n)"
        )
    raise DomainError(f"not a symbolic problem: {problem!r}")
