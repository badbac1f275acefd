"""LTL over indexed propositions: syntax, parsing, rotation rewrites and lasso evaluation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Sequence

from .symmetry import Architecture, FormatError, LassoWord, divisors

__all__ = [
    "And", "Atom", "Const", "FALSE", "Finally", "Formula", "Globally", "Iff",
    "Implies", "Next", "Not", "Or", "TRUE", "Until",
    "atoms", "conj", "disj", "eval_lasso", "format_formula", "map_atoms",
    "next_n", "outcond_formula", "parse_formula", "rot_formula", "size",
    "strengthen_spec", "sym_formula",
]


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, repr=False)
class Const(Formula):
    value: bool

    def __repr__(self):
        return "TRUE" if self.value else "FALSE"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom(Formula):
    name: str
    index: int

    @property
    def prop(self) -> str:
        return f"{self.name}@{self.index}"


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Finally(Formula):
    arg: Formula


@dataclass(frozen=True)
class Globally(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


UNARY = (Not, Next, Finally, Globally)
BINARY = (And, Or, Implies, Iff, Until)


def conj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    return reduce(And, parts) if parts else TRUE


def disj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    return reduce(Or, parts) if parts else FALSE


def next_n(phi: Formula, k: int) -> Formula:
    for _ in range(k):
        phi = Next(phi)
    return phi


def map_atoms(phi: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    if isinstance(phi, Atom):
        return fn(phi)
    if isinstance(phi, Const):
        return phi
    if isinstance(phi, UNARY):
        return type(phi)(map_atoms(phi.arg, fn))
    return type(phi)(map_atoms(phi.left, fn), map_atoms(phi.right, fn))


def atoms(phi: Formula) -> set[Atom]:
    found: set[Atom] = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, Atom):
            found.add(f)
        elif isinstance(f, UNARY):
            stack.append(f.arg)
        elif isinstance(f, BINARY):
            stack.extend((f.left, f.right))
    return found


def size(phi: Formula) -> int:
    if isinstance(phi, (Atom, Const)):
        return 1
    if isinstance(phi, UNARY):
        return 1 + size(phi.arg)
    return 1 + size(phi.left) + size(phi.right)


# ---------------------------------------------------------------------------
# concrete syntax

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<atom>[A-Za-z_][A-Za-z0-9_]*@\d+)|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><->|->|[!&|()]))"
)
_KEYWORDS = {"X", "F", "G", "U", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormatError(f"unexpected character {text[pos]!r}", column=pos + 1)
        col = m.start(m.lastgroup) + 1
        value = m.group(m.lastgroup)
        if m.lastgroup == "word" and value not in _KEYWORDS:
            raise FormatError(f"proposition {value!r} needs an @index", column=col)
        kind = "atom" if m.lastgroup == "atom" else value
        tokens.append((kind, value, col))
        pos = m.end()
    tokens.append(("eof", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, arch: Architecture | None, n: int | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.arch = arch
        self.n = arch.n if arch is not None else n

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def take(self, kind: str | None = None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            found = tok[1] or "end of input"
            raise FormatError(f"expected {kind!r}, found {found!r}", column=tok[2])
        self.i += 1
        return tok

    def parse(self) -> Formula:
        phi = self.iff()
        self.take("eof")
        return phi

    def iff(self) -> Formula:
        left = self.implies()
        while self.peek() == "<->":
            self.take()
            left = Iff(left, self.implies())
        return left

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.until()
        while self.peek() == "&":
            self.take()
            left = And(left, self.until())
        return left

    def until(self) -> Formula:
        left = self.unary()
        while self.peek() == "U":
            self.take()
            left = Until(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind = self.peek()
        ops = {"!": Not, "X": Next, "F": Finally, "G": Globally}
        if kind in ops:
            self.take()
            return ops[kind](self.unary())
        return self.primary()

    def primary(self) -> Formula:
        kind, value, col = self.take()
        if kind == "true":
            return TRUE
        if kind == "false":
            return FALSE
        if kind == "atom":
            name, _, idx = value.partition("@")
            return self.atom(name, int(idx), col)
        if kind == "(":
            phi = self.iff()
            self.take(")")
            return phi
        raise FormatError(f"unexpected {value or 'end of input'!r}", column=col)

    def atom(self, name: str, idx: int, col: int) -> Atom:
        if self.arch is not None and name not in self.arch.declared():
            raise FormatError(f"unknown proposition {name!r}", column=col)
        if self.n is not None and idx >= self.n:
            raise FormatError(f"index {idx} of {name!r} out of range for n={self.n}", column=col)
        return Atom(name, idx)


def parse_formula(text: str, arch: Architecture | None = None, n: int | None = None) -> Formula:
    """Parse ``text``; atoms are checked against ``arch`` (or just the bound ``n``)."""
    return _Parser(text, arch, n).parse()


_SYMBOL = {And: "&", Or: "|", Implies: "->", Iff: "<->", Until: "U"}
_PREFIX = {Not: "!", Next: "X ", Finally: "F ", Globally: "G "}


def _fmt(phi: Formula) -> str:
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Atom):
        return phi.prop
    if isinstance(phi, UNARY):
        return _PREFIX[type(phi)] + _fmt(phi.arg)
    return f"({_fmt(phi.left)} {_SYMBOL[type(phi)]} {_fmt(phi.right)})"


def format_formula(phi: Formula) -> str:
    text = _fmt(phi)
    if isinstance(phi, BINARY):
        text = text[1:-1]
    return text


# ---------------------------------------------------------------------------
# rotation rewrites


def rot_formula(phi: Formula, k: int, n: int) -> Formula:
    return map_atoms(phi, lambda a: Atom(a.name, (a.index + k) % n))


def strengthen_spec(phi: Formula, n: int) -> Formula:
    """Conjunction of ``phi`` with all of its rotations."""
    return conj(rot_formula(phi, k, n) if k else phi for k in range(n))


def sym_formula(props: Sequence[str], d: int, n: int) -> Formula:
    """Holds on a valuation iff ``d`` divides its number of neutral rotations over ``props``."""
    if d < 1 or n % d:
        raise ValueError(f"{d} does not divide {n}")
    shift = n // d
    return conj(Iff(Atom(a, j), Atom(a, (j + shift) % n)) for a in props for j in range(n))


def outcond_formula(arch: Architecture) -> Formula:
    """Output symmetry degree must stay divisible by the accumulated input symmetry degree."""
    n = arch.n
    return conj(
        Not(Until(sym_formula(arch.local_inputs, d, n), Not(sym_formula(arch.outputs, d, n))))
        for d in divisors(n)
    )


# ---------------------------------------------------------------------------
# evaluation on ultimately periodic words


def eval_lasso(w: LassoWord, phi: Formula) -> bool:
    """Truth of ``phi`` at position 0 of ``prefix . loop^omega``."""
    return _Evaluator(w).values(phi)[0]


class _Evaluator:
    def __init__(self, w: LassoWord):
        self.letters = list(w.prefix) + list(w.loop)
        self.start = len(w.prefix)
        self.size = len(self.letters)
        self.succ = list(range(1, self.size)) + [self.start]
        self.cache: dict[int, list[bool]] = {}
        self.keep: list[Formula] = []

    def values(self, phi: Formula) -> list[bool]:
        key = id(phi)
        if key not in self.cache:
            self.keep.append(phi)
            self.cache[key] = self._compute(phi)
        return self.cache[key]

    def _compute(self, phi: Formula) -> list[bool]:
        N = self.size
        if isinstance(phi, Const):
            return [phi.value] * N
        if isinstance(phi, Atom):
            key = (phi.name, phi.index)
            return [key in x.props for x in self.letters]
        if isinstance(phi, Not):
            return [not v for v in self.values(phi.arg)]
        if isinstance(phi, Next):
            a = self.values(phi.arg)
            return [a[self.succ[i]] for i in range(N)]
        if isinstance(phi, Finally):
            return self._until([True] * N, self.values(phi.arg))
        if isinstance(phi, Globally):
            a = self.values(phi.arg)
            return [not v for v in self._until([True] * N, [not v for v in a])]
        a, b = self.values(phi.left), self.values(phi.right)
        if isinstance(phi, And):
            return [x and y for x, y in zip(a, b)]
        if isinstance(phi, Or):
            return [x or y for x, y in zip(a, b)]
        if isinstance(phi, Implies):
            return [(not x) or y for x, y in zip(a, b)]
        if isinstance(phi, Iff):
            return [x == y for x, y in zip(a, b)]
        if isinstance(phi, Until):
            return self._until(a, b)
        raise TypeError(f"not a formula: {phi!r}")

    def _until(self, a: list[bool], b: list[bool]) -> list[bool]:
        # least fixpoint: two backward sweeps settle the loop, one more the prefix
        res = [False] * self.size
        for _ in range(2):
            for i in range(self.size - 1, self.start - 1, -1):
                res[i] = b[i] or (a[i] and res[self.succ[i]])
        for i in range(self.start - 1, -1, -1):
            res[i] = b[i] or (a[i] and res[i + 1])
        return res
