"""Moore machines and the machine-level constructions for rotation-symmetric systems.

Alphabets are explicit: a letter over propositions ``p_0 .. p_{m-1}`` is an
``int`` bitmask with bit ``i`` set iff ``p_i`` holds.  Transitions are stored
as ``delta[state][input_mask]`` and labels as output masks.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Iterable, Sequence

from .symmetry import FormatError, Valuation, format_prop, format_word, parse_prop

__all__ = [
    "Alphabet",
    "CompletionError",
    "MooreMachine",
    "Violation",
    "aggregate_machine",
    "bisim_equiv",
    "constant_machine",
    "extract_process",
    "index_major",
    "machine_from_json",
    "machine_to_dot",
    "machine_to_json",
    "minimize",
    "reachable",
    "rename_outputs",
    "reps_divisibility_check",
    "run_machine",
    "symmetric_completion",
    "symmetric_product",
    "symmetry_check",
]

MAX_INPUT_BITS = 8


class Alphabet:
    """Bitmask encoding of valuations over an ordered proposition list."""

    def __init__(self, props: Sequence[str], n: int = 1):
        self.props = tuple(props)
        if len(set(self.props)) != len(self.props):
            raise ValueError(f"duplicate propositions in {self.props}")
        self.n = n
        self.index = {p: i for i, p in enumerate(self.props)}
        self.parsed = [parse_prop(p) for p in self.props]
        self.size = 1 << len(self.props)
        self._rot: dict[int, list[int]] = {}
        self._keys: list[int] | None = None

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.props == other.props

    def __hash__(self):
        return hash(self.props)

    def __len__(self):
        return len(self.props)

    def encode(self, items: Iterable | Valuation) -> int:
        if isinstance(items, Valuation):
            items = items.strings()
        mask = 0
        for p in items:
            if p not in self.index:
                raise ValueError(f"proposition {p!r} not in alphabet {list(self.props)}")
            mask |= 1 << self.index[p]
        return mask

    def decode(self, mask: int) -> tuple[str, ...]:
        return tuple(p for i, p in enumerate(self.props) if mask >> i & 1)

    def valuation(self, mask: int) -> Valuation:
        pairs = []
        for i, (name, idx) in enumerate(self.parsed):
            if mask >> i & 1:
                pairs.append((name, 0 if idx is None else idx))
        return Valuation(frozenset(pairs), self.n)

    def masks(self) -> range:
        return range(self.size)

    def rotation(self, k: int) -> list[int]:
        """Table mapping each mask to its rotation by ``k``."""
        k %= self.n
        if k not in self._rot:
            perm = []
            for name, idx in self.parsed:
                if idx is None:
                    raise ValueError(f"cannot rotate local proposition {name!r}")
                target = format_prop(name, (idx + k) % self.n)
                if target not in self.index:
                    raise ValueError(f"alphabet not closed under rotation: missing {target!r}")
                perm.append(self.index[target])
            table = []
            for mask in range(self.size):
                out = 0
                for i, j in enumerate(perm):
                    if mask >> i & 1:
                        out |= 1 << j
                table.append(out)
            self._rot[k] = table
        return self._rot[k]

    def rep(self, mask: int) -> int:
        return sum(1 for k in range(self.n) if self.rotation(k)[mask] == mask)

    def order_key(self, mask: int) -> int:
        """Integer whose order is the lexicographic order of bit tuples (first proposition most significant)."""
        if self._keys is None:
            m = len(self.props)
            self._keys = [
                sum(((x >> i) & 1) << (m - 1 - i) for i in range(m)) for x in range(self.size)
            ]
        return self._keys[mask]


def index_major(names: Sequence[str], n: int) -> tuple[str, ...]:
    return tuple(format_prop(x, j) for j in range(n) for x in names)


@dataclass(frozen=True)
class MooreMachine:
    """Deterministic Moore machine with total transitions.

    ``delta[s][i]`` is the successor of state ``s`` on input mask ``i`` and
    ``labels[s]`` the output mask emitted in ``s``.  ``n`` is the process count
    the indexed propositions refer to.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    delta: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]
    initial: int = 0
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "delta", tuple(tuple(row) for row in self.delta))
        object.__setattr__(self, "labels", tuple(self.labels))
        count = len(self.delta)
        if count == 0 or len(self.labels) != count:
            raise ValueError("machine needs at least one state and one label per state")
        if not 0 <= self.initial < count:
            raise ValueError(f"initial state {self.initial} out of range")
        width = 1 << len(self.inputs)
        for s, row in enumerate(self.delta):
            if len(row) != width:
                raise ValueError(f"state {s} does not cover the full input alphabet")
            if any(not 0 <= t < count for t in row):
                raise ValueError(f"state {s} has a transition to an unknown state")
        limit = 1 << len(self.outputs)
        if any(not 0 <= lab < limit for lab in self.labels):
            raise ValueError("label outside the output alphabet")

    @property
    def num_states(self) -> int:
        return len(self.delta)

    @cached_property
    def in_alpha(self) -> Alphabet:
        return Alphabet(self.inputs, self.n)

    @cached_property
    def out_alpha(self) -> Alphabet:
        return Alphabet(self.outputs, self.n)

    def label(self, s: int) -> frozenset[str]:
        return frozenset(self.out_alpha.decode(self.labels[s]))

    def label_valuation(self, s: int) -> Valuation:
        return self.out_alpha.valuation(self.labels[s])

    def step(self, s: int, letter) -> int:
        if not isinstance(letter, int):
            letter = self.in_alpha.encode(letter)
        elif not 0 <= letter < len(self.delta[s]):
            raise ValueError(f"input mask {letter} outside 2^{len(self.inputs)}")
        return self.delta[s][letter]


@dataclass(frozen=True)
class Violation:
    """Failed check: ``witness`` is the input word reaching the offending node."""

    witness: tuple[Valuation, ...]
    rotation: int | None = None
    detail: str = ""

    def __str__(self):
        text = f"witness {format_word(self.witness)}"
        if self.rotation is not None:
            text += f" rotation {self.rotation}"
        return text + (f": {self.detail}" if self.detail else "")


class CompletionError(ValueError):
    def __init__(self, violation: Violation):
        self.violation = violation
        super().__init__(f"machine violates the reps divisibility condition ({violation})")


def constant_machine(inputs: Sequence[str], outputs: Sequence[str], label: Iterable[str], n: int = 1) -> MooreMachine:
    alpha = Alphabet(outputs, n)
    return MooreMachine(tuple(inputs), tuple(outputs), ((0,) * (1 << len(inputs)),), (alpha.encode(label),), 0, n)


def run_machine(m: MooreMachine, inputs: Sequence) -> tuple[list[int], list[Valuation]]:
    """States ``s_0..s_k`` and labels visited on an input word of length ``k``."""
    s = m.initial
    states = [s]
    for letter in inputs:
        try:
            s = m.step(s, letter)
        except ValueError as exc:
            raise ValueError(f"input letter {letter} outside the machine alphabet: {exc}") from None
        states.append(s)
    return states, [m.label_valuation(q) for q in states]


def _explore(initial, successors, label):
    """BFS over hashable states; returns a machine-shaped ``(delta, labels)`` in discovery order."""
    ids = {initial: 0}
    order = [initial]
    delta: list[tuple[int, ...]] = []
    labels: list[int] = []
    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        row = []
        for succ in successors(state):
            if succ not in ids:
                ids[succ] = len(order)
                order.append(succ)
            row.append(ids[succ])
        delta.append(tuple(row))
        labels.append(label(state))
    return delta, labels, order


def reachable(m: MooreMachine) -> MooreMachine:
    """Restrict to reachable states, renumbered in BFS order from the initial state."""
    delta, labels, _ = _explore(m.initial, lambda s: m.delta[s], lambda s: m.labels[s])
    return MooreMachine(m.inputs, m.outputs, delta, labels, 0, m.n)


def minimize(m: MooreMachine) -> MooreMachine:
    """Reachable quotient under Moore partition refinement, canonically numbered."""
    m = reachable(m)
    block = _refine(m.delta, m.labels)
    count = max(block) + 1
    rep_state = {}
    for s in range(m.num_states):
        rep_state.setdefault(block[s], s)
    delta = [tuple(block[t] for t in m.delta[rep_state[b]]) for b in range(count)]
    labels = [m.labels[rep_state[b]] for b in range(count)]
    return reachable(MooreMachine(m.inputs, m.outputs, delta, labels, block[m.initial], m.n))


def _refine(delta, labels) -> list[int]:
    def renumber(keys):
        seen: dict = {}
        return [seen.setdefault(k, len(seen)) for k in keys]

    block = renumber(labels)
    while True:
        new = renumber((block[s], tuple(block[t] for t in row)) for s, row in enumerate(delta))
        if max(new) == max(block):
            return new
        block = new


def _local_to_indexed(alpha_local: Alphabet, alpha_global: Alphabet, j: int) -> list[int]:
    table = []
    targets = [alpha_global.index[format_prop(name, j)] for name, _ in alpha_local.parsed]
    for mask in alpha_local.masks():
        out = 0
        for i, t in enumerate(targets):
            if mask >> i & 1:
                out |= 1 << t
        table.append(out)
    return table


def symmetric_product(p: MooreMachine, n: int) -> MooreMachine:
    """Machine of the whole ring: component ``j`` reads the input rotated by ``-j`` and drives ``o@j``."""
    if len(p.inputs) > MAX_INPUT_BITS:
        raise ValueError(f"more than {MAX_INPUT_BITS} input bits")
    alpha_in = Alphabet(p.inputs, n)
    for name, idx in alpha_in.parsed:
        if idx is None or idx >= n:
            raise ValueError(f"process input {format_prop(name, idx)!r} is not a global indexed input for n={n}")
    for name, idx in p.out_alpha.parsed:
        if idx is not None:
            raise ValueError(f"process output {format_prop(name, idx)!r} must be a local name")
    local = Alphabet(p.outputs)
    outputs = index_major(p.outputs, n)
    alpha_out = Alphabet(outputs, n)
    rot_in = [alpha_in.rotation(-j) for j in range(n)]
    lift = [_local_to_indexed(local, alpha_out, j) for j in range(n)]

    def successors(state):
        return [tuple(p.delta[s][rot_in[j][x]] for j, s in enumerate(state)) for x in alpha_in.masks()]

    def label(state):
        out = 0
        for j, s in enumerate(state):
            out |= lift[j][p.labels[s]]
        return out

    delta, labels, _ = _explore((p.initial,) * n, successors, label)
    return MooreMachine(p.inputs, outputs, delta, labels, 0, n)


def aggregate_machine(p: MooreMachine, arch) -> MooreMachine:
    """Plug ``p`` into every process slot of a (general) architecture; all signals are exported."""
    arch.validate()
    if set(p.inputs) != set(arch.process_inputs) or set(p.outputs) != set(arch.outputs):
        raise ValueError("process interface does not match the architecture")
    clash = set(arch.signals) & set(arch.global_inputs)
    if clash:
        raise ValueError(f"signals and global inputs overlap: {sorted(clash)}")
    procs = arch.processes
    alpha_g = Alphabet(arch.global_inputs, arch.n)
    alpha_s = Alphabet(arch.signals, arch.n)
    p_in = p.in_alpha
    out_bits = [[(o, alpha_s.index[arch.edges_out[(q, o)]]) for o in p.outputs] for q in procs]
    # per process, per local input: (is_signal, bit index in the source alphabet)
    wiring = []
    for q in procs:
        row = []
        for x in p.inputs:
            src = arch.edges_in[(q, x)]
            if src in alpha_s.index:
                row.append((True, alpha_s.index[src], p_in.index[x]))
            else:
                row.append((False, alpha_g.index[src], p_in.index[x]))
        wiring.append(row)

    def signal_mask(state) -> int:
        out = 0
        for k, s in enumerate(state):
            lab = p.label(s)
            for o, bit in out_bits[k]:
                if o in lab:
                    out |= 1 << bit
        return out

    def successors(state):
        sig = signal_mask(state)
        result = []
        for x in alpha_g.masks():
            nxt = []
            for k, s in enumerate(state):
                local = 0
                for is_sig, bit, target in wiring[k]:
                    if (sig if is_sig else x) >> bit & 1:
                        local |= 1 << target
                nxt.append(p.delta[s][local])
            result.append(tuple(nxt))
        return result

    delta, labels, _ = _explore((p.initial,) * len(procs), successors, signal_mask)
    return MooreMachine(arch.global_inputs, arch.signals, delta, labels, 0, arch.n)


def extract_process(g: MooreMachine) -> MooreMachine:
    """Keep only process 0's outputs, renamed to local names, and minimize."""
    names = []
    bits = []
    for i, (name, idx) in enumerate(g.out_alpha.parsed):
        if idx is None:
            raise ValueError(f"output {name!r} is not indexed")
        if idx == 0:
            names.append(name)
            bits.append(i)
    labels = []
    for lab in g.labels:
        out = 0
        for k, bit in enumerate(bits):
            if lab >> bit & 1:
                out |= 1 << k
        labels.append(out)
    return minimize(MooreMachine(g.inputs, tuple(names), g.delta, labels, g.initial, g.n))


def _witness(parents, node, alpha: Alphabet) -> tuple[Valuation, ...]:
    word = []
    while parents[node] is not None:
        node, x = parents[node]
        word.append(alpha.valuation(x))
    return tuple(reversed(word))


def symmetry_check(g: MooreMachine, n: int) -> Violation | None:
    """Search the pair graph of ``(t, rot(t, i))``; ``None`` iff the tree has the symmetry property."""
    alpha_in = Alphabet(g.inputs, n)
    alpha_out = Alphabet(g.outputs, n)
    for i in range(1, n):
        rin, rout = alpha_in.rotation(i), alpha_out.rotation(i)
        start = (g.initial, g.initial)
        parents = {start: None}
        queue = deque([start])
        while queue:
            s, t = queue.popleft()
            if g.labels[t] != rout[g.labels[s]]:
                return Violation(
                    _witness(parents, (s, t), alpha_in),
                    i,
                    f"label {alpha_out.valuation(g.labels[t])} after the rotated word, "
                    f"expected {alpha_out.valuation(rout[g.labels[s]])}",
                )
            for x in alpha_in.masks():
                nxt = (g.delta[s][x], g.delta[t][rin[x]])
                if nxt not in parents:
                    parents[nxt] = ((s, t), x)
                    queue.append(nxt)
    return None


def reps_divisibility_check(g: MooreMachine, n: int) -> Violation | None:
    """``None`` iff for every input word t, reps(t) divides rep of the label after t."""
    alpha_in = Alphabet(g.inputs, n)
    alpha_out = Alphabet(g.outputs, n)
    in_rep = [alpha_in.rep(x) for x in alpha_in.masks()]
    start = (g.initial, n)
    parents = {start: None}
    queue = deque([start])
    while queue:
        s, r = queue.popleft()
        out_rep = alpha_out.rep(g.labels[s])
        if out_rep % r:
            return Violation(
                _witness(parents, (s, r), alpha_in),
                None,
                f"reps of input {r} does not divide rep {out_rep} of {alpha_out.valuation(g.labels[s])}",
            )
        for x in alpha_in.masks():
            nxt = (g.delta[s][x], gcd(r, in_rep[x]))
            if nxt not in parents:
                parents[nxt] = ((s, r), x)
                queue.append(nxt)
    return None


def _word_order_keys(alpha: Alphabet) -> list[tuple[int, ...]]:
    """Per mask, the bit tuple ordered process-major, names in order of first appearance."""
    names = list(dict.fromkeys(name for name, _ in alpha.parsed))
    slots = [alpha.index.get(format_prop(name, j)) for j in range(alpha.n) for name in names]
    return [tuple(0 if b is None else (x >> b) & 1 for b in slots) for x in alpha.masks()]


def symmetric_completion(g: MooreMachine, n: int) -> MooreMachine:
    """Relabel every non-normalized branch by the rotated label of its normalized rotation.

    Runs ``n`` copies of ``g``, copy ``j`` on the input rotated by ``j``, and
    tracks the lexicographic ranking of the ``n`` rotated input streams; the
    output comes from the least copy (smallest index on ties), rotated back.
    """
    bad = reps_divisibility_check(g, n)
    if bad is not None:
        raise CompletionError(bad)
    alpha_in = Alphabet(g.inputs, n)
    alpha_out = Alphabet(g.outputs, n)
    rin = [alpha_in.rotation(j) for j in range(n)]
    rout_back = [alpha_out.rotation(-j) for j in range(n)]
    keys = _word_order_keys(alpha_in)

    def successors(state):
        ranks, states = state
        result = []
        for x in alpha_in.masks():
            rotated = [rin[j][x] for j in range(n)]
            pairs = [(ranks[j], keys[rotated[j]]) for j in range(n)]
            order = {p: r for r, p in enumerate(sorted(set(pairs)))}
            result.append(
                (
                    tuple(order[p] for p in pairs),
                    tuple(g.delta[states[j]][rotated[j]] for j in range(n)),
                )
            )
        return result

    def label(state):
        ranks, states = state
        j = ranks.index(0)
        return rout_back[j][g.labels[states[j]]]

    start = ((0,) * n, (g.initial,) * n)
    delta, labels, _ = _explore(start, successors, label)
    return minimize(MooreMachine(g.inputs, g.outputs, delta, labels, 0, n))


def _aligned(a: MooreMachine, b: MooreMachine) -> MooreMachine:
    """``b`` re-encoded over ``a``'s proposition order."""
    if set(a.inputs) != set(b.inputs) or set(a.outputs) != set(b.outputs):
        raise ValueError("machines have different alphabets")
    if a.inputs == b.inputs and a.outputs == b.outputs:
        return b
    ia, oa = Alphabet(a.inputs), Alphabet(a.outputs)
    ib, ob = Alphabet(b.inputs), Alphabet(b.outputs)
    in_map = [ib.encode(ia.decode(x)) for x in ia.masks()]
    delta = [tuple(row[in_map[x]] for x in ia.masks()) for row in b.delta]
    labels = [oa.encode(ob.decode(lab)) for lab in b.labels]
    return MooreMachine(a.inputs, a.outputs, delta, labels, b.initial, b.n)


def bisim_equiv(a: MooreMachine, b: MooreMachine) -> bool:
    """True iff both machines induce the same computation tree."""
    b = _aligned(a, b)
    start = (a.initial, b.initial)
    seen = {start}
    queue = deque([start])
    while queue:
        s, t = queue.popleft()
        if a.labels[s] != b.labels[t]:
            return False
        for x in range(1 << len(a.inputs)):
            nxt = (a.delta[s][x], b.delta[t][x])
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return True


def rename_outputs(m: MooreMachine, mapping: dict[str, str]) -> MooreMachine:
    return MooreMachine(m.inputs, tuple(mapping.get(o, o) for o in m.outputs), m.delta, m.labels, m.initial, m.n)


# ---------------------------------------------------------------------------
# serialization


def machine_to_json(m: MooreMachine) -> str:
    ia, oa = m.in_alpha, m.out_alpha
    doc = {
        "n": m.n,
        "inputs": list(m.inputs),
        "outputs": list(m.outputs),
        "initial": m.initial,
        "states": [{"id": s, "label": list(oa.decode(m.labels[s]))} for s in range(m.num_states)],
        "transitions": [
            {"from": s, "input": list(ia.decode(x)), "to": m.delta[s][x]}
            for s in range(m.num_states)
            for x in ia.masks()
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def machine_from_json(text: str) -> MooreMachine:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno, exc.colno) from None
    try:
        n = int(doc["n"])
        inputs, outputs = tuple(doc["inputs"]), tuple(doc["outputs"])
        for p in inputs + outputs:
            parse_prop(p)
        if len(inputs) > MAX_INPUT_BITS:
            raise FormatError(f"more than {MAX_INPUT_BITS} input bits")
        ia, oa = Alphabet(inputs, n), Alphabet(outputs, n)
        ids = [st["id"] for st in doc["states"]]
        if len(set(ids)) != len(ids):
            raise FormatError("duplicate state ids")
        dense = {sid: k for k, sid in enumerate(ids)}
        labels = [oa.encode(st["label"]) for st in doc["states"]]
        delta: list[list[int | None]] = [[None] * ia.size for _ in ids]
        for tr in doc["transitions"]:
            src, dst = dense[tr["from"]], dense[tr["to"]]
            x = ia.encode(tr["input"])
            if delta[src][x] is not None and delta[src][x] != dst:
                raise FormatError(f"state {tr['from']} has two transitions on {tr['input']}")
            delta[src][x] = dst
        for sid, row in zip(ids, delta):
            if any(t is None for t in row):
                raise FormatError(f"state {sid} does not enumerate the full input alphabet")
        return MooreMachine(inputs, outputs, delta, labels, dense[doc["initial"]], n)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed machine: {exc}") from None


def _dot_set(props: Sequence[str]) -> str:
    return "{" + ",".join(props) + "}"


def machine_to_dot(m: MooreMachine, name: str = "machine") -> str:
    ia, oa = m.in_alpha, m.out_alpha
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  init [shape=point];", f"  init -> s{m.initial};"]
    for s in range(m.num_states):
        lines.append(f'  s{s} [shape=box, label="{s}\\n{_dot_set(oa.decode(m.labels[s]))}"];')
    for s in range(m.num_states):
        grouped: dict[int, list[str]] = {}
        for x in ia.masks():
            grouped.setdefault(m.delta[s][x], []).append(_dot_set(ia.decode(x)))
        for t, letters in grouped.items():
            lines.append(f'  s{s} -> s{t} [label="{" ".join(letters)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
