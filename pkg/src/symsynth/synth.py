"""Bounded synthesis over universal co-Buchi automata and the symmetric synthesis pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .automata import BuchiAutomaton, find_accepting_lasso, ltl_to_nba, model_check, scc_ids
from .ltl import And, Formula, Not, outcond_formula, strengthen_spec
from .machines import (
    MAX_INPUT_BITS, Alphabet, CompletionError, MooreMachine, bisim_equiv, extract_process,
    reachable, symmetric_completion, symmetric_product, symmetry_check,
)
from .sat import CNF, SatSolver, default_solver
from .symmetry import Architecture

__all__ = [
    "Realizable",
    "StrategyMachine",
    "SynthesisVerdict",
    "Unknown",
    "Unrealizable",
    "VerificationError",
    "bounded_synthesis",
    "counter_strategy",
    "strategy_wins",
    "synth_symmetric",
]


class VerificationError(RuntimeError):
    """A released artifact failed an internal check; always a bug, never a verdict."""

    def __init__(self, check: str, detail: str = ""):
        self.check = check
        super().__init__(f"verification gate failed: {check}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class StrategyMachine:
    """Mealy environment: in state ``e`` on system output ``o`` it plays ``moves[e][o]``
    and moves to ``delta[e][o]``."""

    reads: tuple[str, ...]
    writes: tuple[str, ...]
    delta: tuple[tuple[int, ...], ...]
    moves: tuple[tuple[int, ...], ...]
    initial: int = 0
    n: int = 1

    @property
    def num_states(self) -> int:
        return len(self.delta)

    def describe(self) -> str:
        ra, wa = Alphabet(self.reads, self.n), Alphabet(self.writes, self.n)
        lines = []
        for e in range(self.num_states):
            for o in ra.masks():
                seen = "{" + ",".join(ra.decode(o)) + "}"
                play = "{" + ",".join(wa.decode(self.moves[e][o])) + "}"
                lines.append(f"e{e} sees {seen} plays {play} -> e{self.delta[e][o]}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# SAT encoding


class _Encoding:
    """Bounded synthesis instance: a ``bound``-state machine reading ``reads`` and
    writing ``writes`` whose product with the UCW admits a valid annotation.

    With ``mealy`` the written letter depends on the state and the letter read;
    otherwise it is the state label (Moore).
    """

    def __init__(self, ucw: BuchiAutomaton, reads, writes, bound: int, mealy: bool):
        if bound < 1:
            raise ValueError("bound must be at least 1")
        self.reads, self.writes = tuple(reads), tuple(writes)
        self.bound, self.mealy = bound, mealy
        known = set(self.reads) | set(self.writes)
        missing = [p for p in ucw.props if p not in known]
        if missing:
            raise ValueError(f"specification mentions undeclared propositions {missing}")
        self.width_in = 1 << len(self.reads)
        self.cnf = cnf = CNF()
        k, nw = bound, len(self.writes)

        if mealy:
            self.lab = [[[cnf.var() for _ in range(nw)] for _ in range(self.width_in)] for _ in range(k)]
        else:
            self.lab = [[cnf.var() for _ in range(nw)] for _ in range(k)]
        self.tr = None
        if k > 1:
            self.tr = [[[cnf.var() for _ in range(k)] for _ in range(self.width_in)] for _ in range(k)]
            for s in range(k):
                for x in range(self.width_in):
                    row = self.tr[s][x]
                    cnf.add(row)
                    for a in range(k):
                        for b in range(a + 1, k):
                            cnf.add([-row[a], -row[b]])
        nq = ucw.num_states
        self.rch = [[cnf.var() for _ in range(nq)] for _ in range(k)]
        # only cycles inside one automaton component need a ranking; values are
        # order-encoded (ge[v-1] means "annotation >= v") up to k * |accepting in component|
        self.comp = comp = scc_ids(nq, lambda q: [e[2] for e in ucw.edges[q]])
        internal = {comp[q] for q in range(nq) for *_, t in ucw.edges[q] if comp[t] == comp[q]}
        self.levels = {}
        for c in sorted(internal):
            acc = sum(1 for q in ucw.accepting if comp[q] == c)
            if acc:
                self.levels[c] = k * acc
        self.accepting = ucw.accepting
        self._ge: dict = {}
        self._edge: dict = {}

        for q in ucw.initial:
            cnf.add([self.rch[0][q]])
        edges = self._split_edges(ucw)
        for s in range(k):
            for q in range(nq):
                for x in range(self.width_in):
                    guard_vars = self.lab[s][x] if mealy else self.lab[s]
                    for rpos, rneg, wlits, q2 in edges[q]:
                        if x & rpos != rpos or x & rneg:
                            continue
                        guard = [-guard_vars[w] if val else guard_vars[w] for w, val in wlits]
                        for t in range(k):
                            ante = [-self.rch[s][q]] + guard
                            if self.tr is not None:
                                ante.append(-self.tr[s][x][t])
                            y = self._product_edge(s, q, t, q2)
                            cnf.add(ante if y is None else ante + [y])

    def _levels(self, s, q) -> list[int]:
        key = (s, q)
        if key not in self._ge:
            lits = [self.cnf.var() for _ in range(self.levels[self.comp[q]])]
            for lo, hi in zip(lits, lits[1:]):
                self.cnf.add([-hi, lo])
            self._ge[key] = lits
        return self._ge[key]

    def _product_edge(self, s, q, t, q2):
        """Variable for "the product moves from (s, q) to (t, q2)", or None if that move is forbidden."""
        key = (s, q, t, q2)
        if key in self._edge:
            return self._edge[key]
        strict = q2 in self.accepting
        ranked = self.comp[q] == self.comp[q2] and self.comp[q] in self.levels
        if strict and ranked and (s, q) == (t, q2):
            self._edge[key] = None
            return None
        cnf = self.cnf
        y = cnf.var()
        cnf.add([-y, self.rch[t][q2]])
        if ranked and (s, q) != (t, q2):
            src, dst = self._levels(s, q), self._levels(t, q2)
            if strict:
                cnf.add([-y, dst[0]])
                for v in range(len(src) - 1):
                    cnf.add([-y, -src[v], dst[v + 1]])
                cnf.add([-y, -src[-1]])
            else:
                for v in range(len(src)):
                    cnf.add([-y, -src[v], dst[v]])
        self._edge[key] = y
        return y

    def _split_edges(self, ucw: BuchiAutomaton):
        rbit = {p: i for i, p in enumerate(self.reads)}
        wbit = {p: i for i, p in enumerate(self.writes)}
        out = []
        for q in range(ucw.num_states):
            row = []
            for pos, neg, t in ucw.edges[q]:
                rpos = rneg = 0
                wlits = []
                for i, p in enumerate(ucw.props):
                    for mask, val in ((pos, True), (neg, False)):
                        if not mask >> i & 1:
                            continue
                        if p in rbit:
                            if val:
                                rpos |= 1 << rbit[p]
                            else:
                                rneg |= 1 << rbit[p]
                        else:
                            wlits.append((wbit[p], val))
                row.append((rpos, rneg, wlits, t))
            out.append(row)
        return out

    def _writes(self, model: set[int], vars_) -> int:
        return sum(1 << w for w, v in enumerate(vars_) if v in model)

    def _succ(self, model: set[int], s: int, x: int) -> int:
        if self.tr is None:
            return 0
        for t, v in enumerate(self.tr[s][x]):
            if v in model:
                return t
        raise AssertionError("transition variables are not one-hot")

    def decode_moore(self, model: set[int], n: int) -> MooreMachine:
        delta = [[self._succ(model, s, x) for x in range(self.width_in)] for s in range(self.bound)]
        labels = [self._writes(model, self.lab[s]) for s in range(self.bound)]
        return reachable(MooreMachine(self.reads, self.writes, delta, labels, 0, n))

    def decode_mealy(self, model: set[int], n: int) -> StrategyMachine:
        delta = [[self._succ(model, s, x) for x in range(self.width_in)] for s in range(self.bound)]
        moves = [[self._writes(model, self.lab[s][x]) for x in range(self.width_in)] for s in range(self.bound)]
        # keep the reachable part, numbered in BFS order
        ids, order = {0: 0}, [0]
        for e in order:
            for t in delta[e]:
                if t not in ids:
                    ids[t] = len(order)
                    order.append(t)
        return StrategyMachine(
            self.reads,
            self.writes,
            tuple(tuple(ids[t] for t in delta[e]) for e in order),
            tuple(tuple(moves[e]) for e in order),
            0,
            n,
        )


def _check_width(props: Sequence[str], what: str) -> None:
    if len(props) > MAX_INPUT_BITS:
        raise ValueError(f"{what} has {len(props)} bits; explicit enumeration is capped at {MAX_INPUT_BITS}")


def bounded_synthesis(
    ucw: BuchiAutomaton,
    inputs: Sequence[str],
    outputs: Sequence[str],
    bound: int,
    solver: SatSolver | None = None,
    n: int = 1,
) -> MooreMachine | None:
    """A Moore machine with at most ``bound`` states none of whose traces is
    accepted by ``ucw`` infinitely often (``ucw`` read as universal co-Buchi)."""
    _check_width(inputs, "input alphabet")
    enc = _Encoding(ucw, inputs, outputs, bound, mealy=False)
    model = (solver or default_solver()).solve(enc.cnf)
    return None if model is None else enc.decode_moore(model, n)


def _counter(nba: BuchiAutomaton, inputs, outputs, bound, solver, n) -> StrategyMachine | None:
    _check_width(outputs, "output alphabet")
    enc = _Encoding(nba, outputs, inputs, bound, mealy=True)
    model = (solver or default_solver()).solve(enc.cnf)
    return None if model is None else enc.decode_mealy(model, n)


def counter_strategy(
    phi: Formula,
    inputs: Sequence[str],
    outputs: Sequence[str],
    bound: int,
    solver: SatSolver | None = None,
    n: int = 1,
) -> StrategyMachine | None:
    """Environment strategy with at most ``bound`` states under which every play violates ``phi``."""
    return _counter(ltl_to_nba(phi), inputs, outputs, bound, solver, n)


def strategy_wins(e: StrategyMachine, phi: Formula, nba: BuchiAutomaton | None = None) -> bool:
    """True iff no output sequence leads to a play satisfying ``phi``."""
    nba = nba or ltl_to_nba(phi)
    index = {p: i for i, p in enumerate(nba.props)}
    read_bits = [index.get(p) for p in e.reads]
    write_bits = [index.get(p) for p in e.writes]

    def lift(mask, bits):
        return sum(1 << b for i, b in enumerate(bits) if b is not None and mask >> i & 1)

    width = 1 << len(e.reads)

    def successors(node):
        s, q = node
        for o in range(width):
            letter = lift(o, read_bits) | lift(e.moves[s][o], write_bits)
            for t in nba.successors(q, letter):
                yield o, (e.delta[s][o], t)

    starts = [(e.initial, q) for q in nba.initial]
    return find_accepting_lasso(starts, successors, lambda node: node[1] in nba.accepting) is None


# ---------------------------------------------------------------------------
# pipeline


class SynthesisVerdict:
    __slots__ = ()
    exit_code = 2


@dataclass(frozen=True)
class Realizable(SynthesisVerdict):
    process: MooreMachine
    global_machine: MooreMachine
    bound: int
    exit_code = 0


@dataclass(frozen=True)
class Unrealizable(SynthesisVerdict):
    counter: StrategyMachine
    bound: int
    exit_code = 1


@dataclass(frozen=True)
class Unknown(SynthesisVerdict):
    max_bound: int
    unreal_bound: int
    exit_code = 2


def synth_symmetric(
    arch: Architecture,
    phi: Formula,
    max_bound: int = 8,
    unreal_bound: int = 4,
    solver: SatSolver | None = None,
) -> SynthesisVerdict:
    if not arch.rotation_symmetric:
        raise ValueError("synthesis needs a rotation-symmetric architecture")
    n = arch.n
    inputs, outputs = arch.input_props, arch.output_props
    _check_width(inputs, "input alphabet")
    solver = solver or default_solver()
    strengthened = strengthen_spec(phi, n)
    full = And(strengthened, outcond_formula(arch))
    ucw = ltl_to_nba(Not(full))
    nba = None
    for k in range(1, max(max_bound, unreal_bound) + 1):
        if k <= max_bound:
            g = bounded_synthesis(ucw, inputs, outputs, k, solver, n)
            if g is not None:
                return _release(g, n, phi, strengthened, full, k)
        if k <= unreal_bound:
            if nba is None:
                nba = ltl_to_nba(full)
            e = _counter(nba, inputs, outputs, k, solver, n)
            if e is not None:
                if not strategy_wins(e, full, nba):
                    raise VerificationError("counter-strategy", "a play satisfies the strengthened specification")
                return Unrealizable(e, k)
    return Unknown(max_bound, unreal_bound)


def _release(g: MooreMachine, n: int, phi, strengthened, full, k: int) -> Realizable:
    try:
        completed = symmetric_completion(g, n)
    except CompletionError as exc:
        raise VerificationError("reps divisibility", str(exc.violation)) from None
    process = extract_process(completed)
    bad = symmetry_check(completed, n)
    if bad is not None:
        raise VerificationError("symmetry", str(bad))
    for name, f in (("phi", phi), ("strengthened phi", strengthened), ("phi with output condition", full)):
        cex = model_check(completed, f)
        if cex is not None:
            raise VerificationError(f"model check of {name}", str(cex))
    if not bisim_equiv(completed, symmetric_product(process, n)):
        raise VerificationError("product bisimulation")
    return Realizable(process, completed, k)
