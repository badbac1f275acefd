"""Rotation algebra over indexed valuations, word normalization and symmetry degrees."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd
from typing import Iterable, Iterator, Sequence

__all__ = [
    "Architecture",
    "FormatError",
    "LassoWord",
    "Valuation",
    "compare_valuations",
    "format_prop",
    "format_word",
    "normalize_word",
    "parse_lasso",
    "parse_prop",
    "parse_valuation",
    "parse_word",
    "rep",
    "reps",
    "rot_valuation",
    "rot_word",
]


class FormatError(ValueError):
    """Malformed textual input; carries an optional 1-based position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        elif column is not None:
            where = f"column {column}: "
        super().__init__(where + message)


_PROP_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:@(\d+))?$")


@lru_cache(maxsize=4096)
def parse_prop(text: str) -> tuple[str, int | None]:
    """Split ``name@idx`` into ``(name, idx)``; a bare local name gives ``(name, None)``."""
    m = _PROP_RE.match(text.strip())
    if not m:
        raise FormatError(f"malformed proposition {text!r}")
    name, idx = m.groups()
    return name, (int(idx) if idx is not None else None)


def format_prop(name: str, index: int | None) -> str:
    return name if index is None else f"{name}@{index}"


@dataclass(frozen=True)
class Valuation:
    """A set of ``(name, index)`` pairs over ``n`` processes."""

    props: frozenset[tuple[str, int]]
    n: int = 1

    def __post_init__(self):
        for name, idx in self.props:
            if not 0 <= idx < self.n:
                raise ValueError(f"index {idx} of {name!r} out of range for n={self.n}")

    @classmethod
    def of(cls, items: Iterable[tuple[str, int] | str], n: int) -> Valuation:
        pairs = set()
        for item in items:
            if isinstance(item, str):
                name, idx = parse_prop(item)
                item = (name, 0 if idx is None else idx)
            pairs.add(item)
        return cls(frozenset(pairs), n)

    def __contains__(self, item) -> bool:
        return item in self.props

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(sorted(self.props, key=lambda p: (p[1], p[0])))

    def __len__(self) -> int:
        return len(self.props)

    def names(self) -> set[str]:
        return {name for name, _ in self.props}

    def restrict(self, names: Iterable[str]) -> Valuation:
        keep = set(names)
        return Valuation(frozenset(p for p in self.props if p[0] in keep), self.n)

    def strings(self) -> frozenset[str]:
        return frozenset(format_prop(name, idx) for name, idx in self.props)

    def __str__(self) -> str:
        return "{" + ",".join(format_prop(name, idx) for name, idx in self) + "}"


@dataclass(frozen=True)
class LassoWord:
    """The infinite word ``prefix . loop^omega``."""

    prefix: tuple[Valuation, ...]
    loop: tuple[Valuation, ...]

    def __post_init__(self):
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "loop", tuple(self.loop))

    def __len__(self) -> int:
        return len(self.prefix) + len(self.loop)

    def letter(self, i: int) -> Valuation:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[(i - len(self.prefix)) % len(self.loop)]

    def unroll(self) -> LassoWord:
        return LassoWord(self.prefix + self.loop, self.loop)

    def __str__(self) -> str:
        return format_word(self.prefix, empty="") + " | " + format_word(self.loop)


def rot_valuation(v: Valuation, k: int) -> Valuation:
    """Shift every index by ``k`` modulo ``n``."""
    n = v.n
    return Valuation(frozenset((name, (idx + k) % n) for name, idx in v.props), n)


def rot_word(w, k: int):
    """Rotate a finite word (any sequence of valuations) or a lasso letterwise."""
    if isinstance(w, LassoWord):
        return LassoWord(tuple(rot_valuation(x, k) for x in w.prefix), tuple(rot_valuation(x, k) for x in w.loop))
    return tuple(rot_valuation(x, k) for x in w)


def _bits(v: Valuation, names: Sequence[str]) -> tuple[int, ...]:
    return tuple(1 if (name, j) in v.props else 0 for j in range(v.n) for name in names)


def _universe(a: Valuation, b: Valuation, names: Sequence[str] | None) -> Sequence[str]:
    if a.n != b.n:
        raise ValueError(f"valuations over different process counts ({a.n} vs {b.n})")
    if names is None:
        return sorted(a.names() | b.names())
    missing = (a.names() | b.names()) - set(names)
    if missing:
        raise ValueError(f"propositions {sorted(missing)} not in the declared universe")
    return names


def compare_valuations(a: Valuation, b: Valuation, names: Sequence[str] | None = None) -> int:
    """Return -1, 0 or 1 comparing bit tuples, process 0 first, then ``names`` order.

    Without ``names`` the propositions are ordered alphabetically.
    """
    names = _universe(a, b, names)
    ka, kb = _bits(a, names), _bits(b, names)
    return (ka > kb) - (ka < kb)


def _word_key(w: Sequence[Valuation], names: Sequence[str]) -> tuple:
    return tuple(_bits(x, names) for x in w)


def normalize_word(t: Sequence[Valuation], names: Sequence[str] | None = None) -> tuple[tuple[Valuation, ...], int]:
    """Lexicographically least rotation of ``t`` and the smallest shift producing it."""
    t = tuple(t)
    if not t:
        return (), 0
    n = t[0].n
    if names is None:
        names = sorted(set().union(*(x.names() for x in t)))
    best, best_key, shift = t, _word_key(t, names), 0
    for i in range(1, n):
        cand = rot_word(t, i)
        key = _word_key(cand, names)
        if key < best_key:
            best, best_key, shift = cand, key, i
    return best, shift


@lru_cache(maxsize=1 << 14)
def rep(x: Valuation) -> int:
    """Number of rotations in ``0..n-1`` that fix ``x``."""
    return sum(1 for j in range(x.n) if rot_valuation(x, j) == x)


def reps(w: Sequence[Valuation], n: int | None = None) -> int:
    """Symmetry degree of a finite word: gcd of ``n`` and every letter's ``rep``.

    ``n`` is only needed for the empty word.
    """
    w = tuple(w)
    if n is None:
        if not w:
            raise ValueError("reps of the empty word needs n")
        n = w[0].n
    r = n
    for x in w:
        r = gcd(r, rep(x))
    return r


# ---------------------------------------------------------------------------
# textual syntax: {r@0,g@1};{} | {r@0}


def parse_valuation(text: str, n: int | None = None) -> Valuation:
    s = text.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise FormatError(f"valuation must be enclosed in braces: {text!r}")
    body = s[1:-1].strip()
    pairs = []
    if body:
        for item in body.split(","):
            name, idx = parse_prop(item)
            pairs.append((name, 0 if idx is None else idx))
    if n is None:
        n = max((idx for _, idx in pairs), default=0) + 1
    try:
        return Valuation(frozenset(pairs), n)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _split_letters(text: str) -> list[str]:
    text = text.strip()
    if not text or text == "ε":
        return []
    return [part for part in (p.strip() for p in text.split(";"))]


def parse_word(text: str, n: int | None = None) -> tuple[Valuation, ...]:
    parts = _split_letters(text)
    raw = [parse_valuation(p, 10**9) for p in parts]
    if n is None:
        n = max((idx + 1 for v in raw for _, idx in v.props), default=1)
    return tuple(parse_valuation(p, n) for p in parts)


def parse_lasso(text: str, n: int | None = None) -> LassoWord:
    """Parse ``prefix | loop``; without ``|`` the whole text is the loop."""
    if "|" in text:
        pre, _, loop = text.partition("|")
    else:
        pre, loop = "", text
    if n is None:
        letters = parse_word(pre, 10**9) + parse_word(loop, 10**9)
        n = max((idx + 1 for v in letters for _, idx in v.props), default=1)
    prefix, cycle = parse_word(pre, n), parse_word(loop, n)
    if not cycle:
        raise FormatError("lasso loop must contain at least one letter")
    return LassoWord(prefix, cycle)


def format_word(w: Sequence[Valuation], empty: str = "ε") -> str:
    return ";".join(str(x) for x in w) if w else empty


# ---------------------------------------------------------------------------
# architectures


@dataclass(frozen=True)
class Architecture:
    """Process interface plus wiring.

    ``local_inputs``/``outputs`` are proposition names.  In rotation-symmetric
    mode (``rotation_symmetric``) every process reads all ``x@j`` and writes
    ``o@i``; general wiring uses ``signals``, ``global_inputs``, ``edges_in``
    mapping ``(process, local input) -> signal or global input`` and
    ``edges_out`` mapping ``(process, local output) -> signal``.
    """

    n: int
    local_inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    processes: tuple[int, ...] = ()
    process_inputs: tuple[str, ...] = ()
    signals: tuple[str, ...] = ()
    global_inputs: tuple[str, ...] = ()
    edges_in: dict = field(default_factory=dict, hash=False, compare=False)
    edges_out: dict = field(default_factory=dict, hash=False, compare=False)
    rotation_symmetric: bool = False

    @classmethod
    def rotation(cls, n: int, local_inputs: Sequence[str], outputs: Sequence[str]) -> Architecture:
        if n < 1:
            raise ValueError("n must be at least 1")
        names = list(local_inputs) + list(outputs)
        if len(set(names)) != len(names):
            raise ValueError("proposition names must be unique")
        glob = tuple(format_prop(x, j) for j in range(n) for x in local_inputs)
        signals = tuple(format_prop(o, j) for j in range(n) for o in outputs)
        edges_in = {
            (i, format_prop(x, j)): format_prop(x, (j - i) % n)
            for i in range(n)
            for j in range(n)
            for x in local_inputs
        }
        edges_out = {(i, o): format_prop(o, i) for i in range(n) for o in outputs}
        return cls(
            n=n,
            local_inputs=tuple(local_inputs),
            outputs=tuple(outputs),
            processes=tuple(range(n)),
            process_inputs=glob,
            signals=signals,
            global_inputs=glob,
            edges_in=edges_in,
            edges_out=edges_out,
            rotation_symmetric=True,
        )

    @classmethod
    def general(cls, processes, process_inputs, outputs, signals, global_inputs, edges_in, edges_out) -> Architecture:
        arch = cls(
            n=len(processes),
            local_inputs=tuple(process_inputs),
            outputs=tuple(outputs),
            processes=tuple(processes),
            process_inputs=tuple(process_inputs),
            signals=tuple(signals),
            global_inputs=tuple(global_inputs),
            edges_in=dict(edges_in),
            edges_out=dict(edges_out),
        )
        arch.validate()
        return arch

    def validate(self) -> None:
        sources = set(self.signals) | set(self.global_inputs)
        for p in self.processes:
            for x in self.process_inputs:
                target = self.edges_in.get((p, x))
                if target is None:
                    raise ValueError(f"input {x!r} of process {p!r} is not wired")
                if target not in sources:
                    raise ValueError(f"input {x!r} of process {p!r} reads undeclared {target!r}")
        writers: dict[str, list] = {s: [] for s in self.signals}
        for (p, o), s in self.edges_out.items():
            if s not in writers:
                raise ValueError(f"output {o!r} of process {p!r} drives undeclared signal {s!r}")
            writers[s].append((p, o))
        for s, ws in writers.items():
            if len(ws) != 1:
                raise ValueError(f"signal {s!r} has {len(ws)} writers, expected exactly one")

    @property
    def input_props(self) -> tuple[str, ...]:
        """Indexed global input propositions, process-major."""
        return self.global_inputs

    @property
    def output_props(self) -> tuple[str, ...]:
        return self.signals

    def declared(self) -> set[str]:
        return set(self.local_inputs) | set(self.outputs)


@lru_cache(maxsize=None)
def divisors(n: int) -> tuple[int, ...]:
    return tuple(d for d in range(1, n + 1) if n % d == 0)
