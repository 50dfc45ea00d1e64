"""Offline backends: a deterministic template author, scripted replays, stubs.

The template author fills world/anchor/intro/beat/padding/critic requests from
fixed word banks, honoring the numeric contract carried on request metadata,
so the full pipeline runs without network or secrets. All choices derive from
the metadata (sample seed, node id, attempt), never from call order, which
keeps concurrent generation byte-reproducible.
"""

from __future__ import annotations

import json
import random
import re
import threading
from dataclasses import dataclass, field

from .ast_core import eval_node, parse_prefix
from .errors import ConfigError, TransportError
from .gateway import GatewayConfig, HttpBackend, TransientBackendError
from .numtext import WORD_VALUES, number_to_words

_NAMES = [
    "Anya Voss", "Bram Okafor", "Cedra Lin", "Dorian Pike", "Esha Marlowe",
    "Fen Alvarez", "Greta Moss", "Hale Winters", "Imara Sotto",
    "Jorin Blackwood", "Kess Ryland", "Lira Montrose",
]
_ROLES = [
    "the meticulous quartermaster", "the restless surveyor",
    "the soft-spoken archivist", "the stubborn foreman", "the wary navigator",
    "the cheerful mechanic", "the exacting clerk", "the weathered pilot",
]
_QUIRKS = [
    "hums sea shanties while working", "collects dented compasses",
    "never signs a ledger twice", "quotes old regulations from memory",
    "whistles at bad news", "keeps a pocketful of spare rivets",
    "names every crate before stacking it", "sketches the horizon at dawn",
]
_GENRES = [
    "Frontier Salvage Saga", "Harborside Mystery",
    "Expedition Chronicle", "Clockwork Caravan Tale",
]
_SETTINGS = [
    "a salvage port carved into a basalt cliff",
    "a river depot at the edge of the fog marshes",
    "a terraced waystation above the dune sea",
    "a canal city of copper bridges",
]
_OBJECTS = ["cryo cells", "signal flares", "water casks", "spice crates", "fuel rods"]

_ANCHOR_ADJS = [
    "Gilded", "Quiet", "Amber", "Hollow", "Silver", "Ashen",
    "Verdant", "Crimson", "Sable", "Ivory", "Cobalt", "Russet",
]
_ANCHOR_NOUNS = ["Reserve", "Ledger", "Cache", "Reckoning", "Yield", "Measure", "Tally"]

_PLACES = [
    "loading ramp", "bonded warehouse", "tide gate", "survey tent",
    "customs shed", "windward quay", "relay tower", "dry dock",
]

_COUNT_SENTENCES = [
    "{who} recorded {num} {obj} arriving from the {place}.",
    "{who} counted {num} {obj} set aside near the {place}.",
    "Under the watch of {who}, {num} {obj} were logged at the {place}.",
    "{who} tallied {num} {obj} hauled in past the {place}.",
    "At the {place}, {who} marked down {num} {obj} without ceremony.",
]

_OP_SENTENCES = {
    "SUM": "Every figure on the slate was folded together into a combined total.",
    "MAX": "They compared every figure on the slate and kept only the largest.",
    "MIN": "They compared every figure on the slate and kept only the smallest.",
    "MED": (
        "They arranged every figure on the slate in order and settled on the "
        "middle value, favoring the lower of the central pair."
    ),
}

_PADDING_SENTENCES = [
    "Gulls wheeled over the {place} while the crews traded idle complaints about the weather.",
    "Far below, the service channel glittered, and somebody's kettle rattled against a railing.",
    "{who} paused to retell an old story about the {place}, embellishing it shamelessly.",
    "The wind shifted, carrying the smell of tar and cold metal across the yard.",
    "A courier dozed against a bollard, cap pulled low, boots crossed at the ankle.",
    "Lanterns were trimmed and rehung, their light pooling on the wet stones.",
    "Talk drifted to the festival season, to repainted hulls and borrowed finery.",
    "{who} checked the weather glass, frowned at it, and tapped it as if that helped.",
    "Somewhere behind the sheds a winch complained, fell silent, then complained again.",
    "The {obj} sat under canvas, unremarked upon, while the watch changed hands.",
]

_INTRO_SENTENCES = [
    "Mist hung over {setting} when {who} unlocked the records hall.",
    "Word had spread that the season's {obj} would decide more than a few fortunes.",
    "{who} and {who2} exchanged the wary nods of people who expect a long day.",
    "Every hand at the yard knew the ledgers had to balance before the tide turned.",
    "Rumor said an inspector was coming, which made the bookkeeping feel like a duel.",
]

_APPROVE_VERDICT = json.dumps(
    {
        "is_valid": True,
        "explanation_for_generator": "",
        "explanation_for_audit": "all rules satisfied",
    }
)


def _wrap(content: str) -> dict:
    return {"choices": [{"message": {"content": content}}]}


def _rng(*parts) -> random.Random:
    return random.Random("|".join(str(p) for p in parts))


def _num_form(value: int) -> str:
    if value in WORD_VALUES.values():
        return number_to_words(value)
    return str(value)


class TemplateAuthorBackend:
    """Deterministic stand-in for every agent role, driven by request metadata."""

    name = "mock"

    def complete(self, payload: dict, metadata: dict | None) -> dict:
        meta = metadata or {}
        kind = meta.get("kind", "generic")
        handler = getattr(self, f"_{kind}", None)
        if handler is None:
            return _wrap("Understood.")
        return _wrap(handler(meta))

    def _world(self, meta: dict) -> str:
        rng = _rng(meta.get("sample_seed"), "world", meta.get("attempt", 0))
        k = int(meta.get("num_characters", 6))
        names = rng.sample(_NAMES, k)
        characters = [
            {"name": name, "role": rng.choice(_ROLES), "quirk": rng.choice(_QUIRKS)}
            for name in names
        ]
        world = {
            "characters": characters,
            "genre": rng.choice(_GENRES),
            "setting": rng.choice(_SETTINGS),
            "object": rng.choice(_OBJECTS),
        }
        return json.dumps(world)

    def _anchor(self, meta: dict) -> str:
        node_id = int(meta.get("node_id", 0))
        rng = _rng(meta.get("sample_seed"), "anchor")
        off_adj = rng.randrange(len(_ANCHOR_ADJS))
        off_noun = rng.randrange(len(_ANCHOR_NOUNS))
        adj = _ANCHOR_ADJS[(node_id + off_adj) % len(_ANCHOR_ADJS)]
        noun = _ANCHOR_NOUNS[((node_id // len(_ANCHOR_ADJS)) + off_noun) % len(_ANCHOR_NOUNS)]
        return f"The {adj} {noun}"

    def _intro(self, meta: dict) -> str:
        rng = _rng(meta.get("sample_seed"), "intro", meta.get("attempt", 0))
        world = meta.get("world", {})
        chars = [c["name"] for c in world.get("characters", [])] or ["the keeper"]
        picks = rng.sample(_INTRO_SENTENCES, 3)
        text = " ".join(picks)
        return text.format(
            setting=world.get("setting", "the yard"),
            obj=world.get("primary_object", "stores"),
            who=chars[0],
            who2=chars[-1],
        )

    def _beat(self, meta: dict) -> str:
        rng = _rng(meta.get("sample_seed"), "beat", meta.get("node_id"), meta.get("attempt", 0))
        world = meta.get("world", {})
        chars = [c["name"] for c in world.get("characters", [])] or ["the keeper"]
        obj = meta.get("primary_object", world.get("primary_object", "stores"))
        required = meta.get("required_atomics", {})
        sentences = [
            f"{rng.choice(chars)} gathered the others at the {rng.choice(_PLACES)} "
            f"to settle the matter of the {obj}."
        ]
        counts = {int(v): int(c) for v, c in required.items()}
        i = 0
        for value in sorted(counts):
            for _ in range(counts[value]):
                template = _COUNT_SENTENCES[i % len(_COUNT_SENTENCES)]
                sentences.append(
                    template.format(
                        who=chars[i % len(chars)],
                        num=_num_form(value),
                        obj=obj,
                        place=_PLACES[(i + 3) % len(_PLACES)],
                    )
                )
                i += 1
        for anchor in meta.get("child_anchors", []):
            sentences.append(
                f"They brought forward {anchor} from the earlier work and "
                "treated it as a figure in its own right."
            )
        sentences.append(_OP_SENTENCES.get(meta.get("op", "SUM"), _OP_SENTENCES["SUM"]))
        result_anchor = meta.get("result_anchor")
        if result_anchor:
            sentences.append(
                f"The outcome went into the ledger under the name {result_anchor}, "
                "its size pointedly left unsaid."
            )
        return " ".join(sentences)

    def _revision(self, meta: dict) -> str:
        return self._beat(meta)

    def _padding(self, meta: dict) -> str:
        rng = _rng(
            meta.get("sample_seed"), "padding", meta.get("slot"),
            meta.get("paragraph"), meta.get("attempt", 0),
        )
        world = meta.get("world", {})
        chars = [c["name"] for c in world.get("characters", [])] or ["the keeper"]
        picks = rng.sample(_PADDING_SENTENCES, 4)
        return " ".join(picks).format(
            place=rng.choice(_PLACES),
            who=rng.choice(chars),
            obj=world.get("primary_object", "stores"),
        )

    def _critic(self, meta: dict) -> str:
        return _APPROVE_VERDICT

    def _holistic(self, meta: dict) -> str:
        return _APPROVE_VERDICT

    def _eval(self, meta: dict) -> str:
        return str(meta.get("ground_truth"))


class GroundTruthStubBackend:
    """Answers evaluation prompts with the known ground truth (plus an offset)."""

    def __init__(self, offset: int = 0):
        self.offset = offset

    def complete(self, payload: dict, metadata: dict | None) -> dict:
        meta = metadata or {}
        if "ground_truth" not in meta:
            raise TransportError("stub backend needs ground_truth metadata")
        return _wrap(str(int(meta["ground_truth"]) + self.offset))


_BRACKET_EXPR_RE = re.compile(r"\[.*\]", re.DOTALL)


class SolverStubBackend:
    """Parses the bracketed expression out of the prompt and evaluates it locally."""

    def complete(self, payload: dict, metadata: dict | None) -> dict:
        user = payload["messages"][-1]["content"]
        m = _BRACKET_EXPR_RE.search(user)
        if not m:
            raise TransportError("no bracketed expression in prompt")
        return _wrap(str(eval_node(parse_prefix(m.group(0)))))


@dataclass
class ScriptedRule:
    match: dict
    responses: list
    repeat_last: bool = False
    _cursor: int = field(default=0, repr=False)


class ScriptedBackend:
    """Replays canned responses against request matchers, in order.

    Rule match fields: "kind" (equals request metadata kind), "user_contains",
    "system_contains". Responses are assistant strings, or
    {"status": 429} / {"raise": "transport"} fault markers.
    """

    def __init__(self, rules: list[ScriptedRule]):
        self.rules = rules
        self.calls: list[tuple[dict, dict | None]] = []
        self._lock = threading.Lock()

    @classmethod
    def from_profile(cls, path: str) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            entries = json.load(fh)
        rules = [
            ScriptedRule(
                match=e.get("match", {}),
                responses=list(e["responses"]),
                repeat_last=bool(e.get("repeat_last", False)),
            )
            for e in entries
        ]
        return cls(rules)

    @staticmethod
    def _matches(rule: ScriptedRule, payload: dict, metadata: dict | None) -> bool:
        match = rule.match
        if "kind" in match and (metadata or {}).get("kind") != match["kind"]:
            return False
        messages = payload.get("messages", [])
        user = next((m["content"] for m in reversed(messages) if m["role"] == "user"), "")
        system = next((m["content"] for m in messages if m["role"] == "system"), "")
        if "user_contains" in match and match["user_contains"] not in user:
            return False
        if "system_contains" in match and match["system_contains"] not in system:
            return False
        return True

    def complete(self, payload: dict, metadata: dict | None) -> dict:
        with self._lock:
            self.calls.append((payload, metadata))
            for rule in self.rules:
                if not self._matches(rule, payload, metadata):
                    continue
                if rule._cursor >= len(rule.responses):
                    if rule.repeat_last and rule.responses:
                        response = rule.responses[-1]
                    else:
                        continue
                else:
                    response = rule.responses[rule._cursor]
                    rule._cursor += 1
                if isinstance(response, dict):
                    if "status" in response:
                        raise TransientBackendError(f"HTTP {response['status']} (scripted)")
                    if response.get("raise") == "transport":
                        raise TransportError("scripted transport failure")
                    return _wrap(response["content"])
                return _wrap(response)
        raise TransportError(f"no scripted response matches request (kind={(metadata or {}).get('kind')})")


def make_backend(name: str, cfg: GatewayConfig):
    """Backend registry used by the service and CLI."""
    if name in ("openrouter", "http"):
        return HttpBackend(cfg)
    if name == "mock":
        return TemplateAuthorBackend()
    if name == "stub-correct":
        return GroundTruthStubBackend(0)
    if name == "stub-wrong":
        return GroundTruthStubBackend(1)
    if name == "stub-solver":
        return SolverStubBackend()
    if name.startswith("profile:"):
        return ScriptedBackend.from_profile(name.split(":", 1)[1])
    raise ConfigError(f"unknown backend {name!r}")
