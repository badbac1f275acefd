"""Compression of multi-signal words into a single carrier signal, and the matching formula transformer.

Every source letter becomes a block of ``2(n+1)`` positions: positions 0 and 1
carry the carrier (the start marker), position ``2j`` is empty and position
``2j+1`` carries the carrier iff signal ``j`` holds (signals numbered from 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ltl import (
    TRUE, And, Atom, Const, Finally, Formula, Globally, Iff, Implies, Next, Not, Or, Until,
    conj, disj, next_n,
)
from .symmetry import LassoWord, Valuation, parse_prop

__all__ = [
    "CompressionScheme",
    "compress_formula",
    "compress_word",
    "decompress_word",
    "reduce_temporal",
    "validity_formulas",
]


def _as_pair(p: str | tuple[str, int]) -> tuple[str, int]:
    if isinstance(p, tuple):
        return p
    name, idx = parse_prop(p)
    return name, 0 if idx is None else idx


@dataclass(frozen=True)
class CompressionScheme:
    signals: tuple[tuple[str, int], ...]
    chi: tuple[str, int] = ("chi", 0)

    def __post_init__(self):
        sig = tuple(_as_pair(p) for p in self.signals)
        object.__setattr__(self, "signals", sig)
        object.__setattr__(self, "chi", _as_pair(self.chi))
        if not sig:
            raise ValueError("at least one signal is needed")
        if len(set(sig)) != len(sig):
            raise ValueError("duplicate signals")
        if self.chi in sig:
            raise ValueError("the carrier must differ from the signals")

    @classmethod
    def of(cls, signals: Sequence[str], chi: str = "chi") -> CompressionScheme:
        return cls(tuple(signals), chi)

    @property
    def block(self) -> int:
        return 2 * (len(self.signals) + 1)

    @property
    def carrier(self) -> Atom:
        return Atom(*self.chi)


def _block(s: CompressionScheme, x: Valuation) -> list[Valuation]:
    extra = set(x.props) - set(s.signals)
    if extra:
        raise ValueError(f"letter uses propositions outside the scheme: {sorted(extra)}")
    on = Valuation(frozenset([s.chi]), s.chi[1] + 1)
    off = Valuation(frozenset(), s.chi[1] + 1)
    out = [on, on]
    for sig in s.signals:
        out += [off, on if sig in x.props else off]
    return out


def compress_word(w: LassoWord, s: CompressionScheme) -> LassoWord:
    return LassoWord(
        tuple(v for x in w.prefix for v in _block(s, x)),
        tuple(v for x in w.loop for v in _block(s, x)),
    )


def _unblock(s: CompressionScheme, letters: Sequence[Valuation], n: int) -> list[Valuation]:
    B = s.block
    if len(letters) % B:
        raise ValueError(f"length {len(letters)} is not a multiple of the block length {B}")
    out = []
    for k in range(0, len(letters), B):
        blk = [s.chi in v.props for v in letters[k:k + B]]
        if not (blk[0] and blk[1]) or any(blk[2 * j] for j in range(1, len(s.signals) + 1)):
            raise ValueError(f"malformed block at position {k}")
        out.append(Valuation(frozenset(sig for j, sig in enumerate(s.signals, 1) if blk[2 * j + 1]), n))
    return out


def decompress_word(w: LassoWord, s: CompressionScheme, n: int | None = None) -> LassoWord:
    """Inverse of :func:`compress_word` on block-aligned lassos."""
    if n is None:
        n = max(idx for _, idx in s.signals) + 1
    return LassoWord(tuple(_unblock(s, w.prefix, n)), tuple(_unblock(s, w.loop, n)))


def reduce_temporal(phi: Formula) -> Formula:
    """Rewrite F and G into Until: ``F a = true U a``, ``G a = !(true U !a)``."""
    if isinstance(phi, (Atom, Const)):
        return phi
    if isinstance(phi, Finally):
        return Until(TRUE, reduce_temporal(phi.arg))
    if isinstance(phi, Globally):
        return Not(Until(TRUE, Not(reduce_temporal(phi.arg))))
    if isinstance(phi, (Not, Next)):
        return type(phi)(reduce_temporal(phi.arg))
    return type(phi)(reduce_temporal(phi.left), reduce_temporal(phi.right))


def _css(chi: Atom) -> Formula:
    return And(And(chi, Next(chi)), Next(Next(Not(chi))))


def compress_formula(psi: Formula, s: CompressionScheme) -> Formula:
    chi = s.carrier
    slot = {sig: 2 * j + 1 for j, sig in enumerate(s.signals, 1)}
    css = _css(chi)

    def go(f: Formula) -> Formula:
        if isinstance(f, Const):
            return f
        if isinstance(f, Atom):
            key = (f.name, f.index)
            if key not in slot:
                raise ValueError(f"proposition {f.prop!r} is not a signal of the scheme")
            return next_n(chi, slot[key])
        if isinstance(f, Not):
            return Not(go(f.arg))
        if isinstance(f, Next):
            return next_n(go(f.arg), s.block)
        if isinstance(f, Until):
            return Until(Implies(css, go(f.left)), And(css, go(f.right)))
        if isinstance(f, (And, Or, Implies, Iff)):
            return type(f)(go(f.left), go(f.right))
        raise ValueError(f"unsupported operator {type(f).__name__}")

    return go(reduce_temporal(psi))


def validity_formulas(s: CompressionScheme, designated: str | tuple[str, int] | None = None):
    """``(invalid1, invalid2, correct)``.

    ``invalid2`` holds iff the word does not open with a start marker,
    ``invalid1`` iff a start marker here is not followed by a well-formed block,
    and ``correct`` states that ``designated`` (default: the carrier) is a
    well-formed compressed stream.
    """
    B, n = s.block, len(s.signals)
    chi = s.carrier
    invalid2 = disj([Not(chi), Not(Next(chi)), next_n(chi, 2)])
    broken = disj(
        [Not(next_n(chi, B)), Not(next_n(chi, B + 1)), next_n(chi, B + 2)]
        + [next_n(chi, 2 * i) for i in range(1, n + 1)]
    )
    invalid1 = And(_css(chi), broken)
    p = chi if designated is None else Atom(*_as_pair(designated))
    step = And(
        And(conj(Not(next_n(p, 2 * i)) for i in range(1, n + 1)), next_n(p, B)),
        And(next_n(p, B + 1), next_n(Not(p), B + 2)),
    )
    correct = conj(
        [p, Next(p), next_n(Not(p), 2),
         Globally(disj([Not(p), Not(Next(p)), next_n(p, 2), step]))]
    )
    return invalid1, invalid2, correct
