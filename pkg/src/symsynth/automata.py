"""LTL to Buchi translation, lasso membership and model checking of Moore machines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from .ltl import (
    And, Atom, Const, Finally, Formula, Globally, Iff, Implies, Next, Not, Or, Until, atoms,
)
from .machines import Alphabet, MooreMachine
from .symmetry import LassoWord, Valuation, parse_prop

__all__ = [
    "BuchiAutomaton",
    "Counterexample",
    "automaton_to_dot",
    "find_accepting_lasso",
    "ltl_to_nba",
    "machine_lasso",
    "model_check",
    "nba_accepts_lasso",
    "scc_ids",
    "to_nnf",
]

# NNF terms are nested tuples: ("t",), ("f",), ("p", prop), ("np", prop),
# ("&", a, b), ("|", a, b), ("X", a), ("U", a, b), ("R", a, b).
T = ("t",)
F = ("f",)


def _neg_lit(lit):
    return ("np", lit[1]) if lit[0] == "p" else ("p", lit[1])


def _and(a, b):
    if a == F or b == F:
        return F
    if a == T:
        return b
    if b == T or a == b:
        return a
    if a[0] in ("p", "np") and b == _neg_lit(a):
        return F
    return ("&",) + tuple(sorted((a, b)))


def _or(a, b):
    if a == T or b == T:
        return T
    if a == F:
        return b
    if b == F or a == b:
        return a
    if a[0] in ("p", "np") and b == _neg_lit(a):
        return T
    return ("|",) + tuple(sorted((a, b)))


def _next(a):
    return a if a in (T, F) else ("X", a)


def _until(a, b):
    if b in (T, F) or a == F:
        return b
    return ("U", a, b)


def _release(a, b):
    if b in (T, F) or a == T:
        return b
    return ("R", a, b)


def to_nnf(phi: Formula, negate: bool = False):
    """Negation normal form with constant folding (F, G expanded into U and R)."""
    if isinstance(phi, Const):
        return T if phi.value != negate else F
    if isinstance(phi, Atom):
        return ("np" if negate else "p", phi.prop)
    if isinstance(phi, Not):
        return to_nnf(phi.arg, not negate)
    if isinstance(phi, Next):
        return _next(to_nnf(phi.arg, negate))
    if isinstance(phi, Finally):
        arg = to_nnf(phi.arg, negate)
        return _release(F, arg) if negate else _until(T, arg)
    if isinstance(phi, Globally):
        arg = to_nnf(phi.arg, negate)
        return _until(T, arg) if negate else _release(F, arg)
    if isinstance(phi, And):
        op = _or if negate else _and
        return op(to_nnf(phi.left, negate), to_nnf(phi.right, negate))
    if isinstance(phi, Or):
        op = _and if negate else _or
        return op(to_nnf(phi.left, negate), to_nnf(phi.right, negate))
    if isinstance(phi, Implies):
        if negate:
            return _and(to_nnf(phi.left), to_nnf(phi.right, True))
        return _or(to_nnf(phi.left, True), to_nnf(phi.right))
    if isinstance(phi, Iff):
        a, na = to_nnf(phi.left), to_nnf(phi.left, True)
        b, nb = to_nnf(phi.right), to_nnf(phi.right, True)
        if negate:
            return _or(_and(a, nb), _and(na, b))
        return _or(_and(a, b), _and(na, nb))
    if isinstance(phi, Until):
        if negate:
            return _release(to_nnf(phi.left, True), to_nnf(phi.right, True))
        return _until(to_nnf(phi.left), to_nnf(phi.right))
    raise TypeError(f"not a formula: {phi!r}")


def _untils(term) -> list:
    found = set()
    stack = [term]
    while stack:
        t = stack.pop()
        if t[0] == "U":
            found.add(t)
        if t[0] in ("&", "|", "U", "R"):
            stack.extend(t[1:])
        elif t[0] == "X":
            stack.append(t[1])
    return sorted(found)


@dataclass(frozen=True)
class BuchiAutomaton:
    """Nondeterministic Buchi automaton with cube-guarded edges.

    ``edges[q]`` lists ``(pos_mask, neg_mask, target)`` over ``props``: a letter
    ``x`` enables the edge iff ``x & pos == pos`` and ``x & neg == 0``.  Read
    universally, ``accepting`` are the rejecting states of a co-Buchi automaton.
    """

    props: tuple[str, ...]
    edges: tuple[tuple[tuple[int, int, int], ...], ...]
    initial: tuple[int, ...]
    accepting: frozenset[int]

    @property
    def num_states(self) -> int:
        return len(self.edges)

    def successors(self, q: int, letter: int) -> list[int]:
        return [t for pos, neg, t in self.edges[q] if letter & pos == pos and not letter & neg]

    def letter_mask(self, valuation: Valuation) -> int:
        mask = 0
        for i, p in enumerate(self.props):
            if parse_prop(p) in valuation.props:
                mask |= 1 << i
        return mask


def _expand(todo: list, old: frozenset, lits: frozenset, nxt: frozenset, out: list) -> None:
    while todo:
        f = todo.pop()
        if f in old:
            continue
        old = old | {f}
        tag = f[0]
        if tag == "t":
            continue
        if tag == "f":
            return
        if tag in ("p", "np"):
            if _neg_lit(f) in lits:
                return
            lits = lits | {f}
        elif tag == "&":
            todo.extend((f[1], f[2]))
        elif tag == "|":
            _expand(todo + [f[2]], old, lits, nxt, out)
            todo.append(f[1])
        elif tag == "X":
            nxt = nxt | {f[1]}
        elif tag == "U":
            _expand(todo + [f[1]], old, lits, nxt | {f}, out)
            todo.append(f[2])
        elif tag == "R":
            _expand(todo + [f[2]], old, lits, nxt | {f}, out)
            todo.extend((f[1], f[2]))
    out.append((lits, nxt, old))


def _covers(state: frozenset, untils: list) -> list[tuple[frozenset, frozenset, frozenset]]:
    raw: list = []
    _expand(sorted(state, reverse=True), frozenset(), frozenset(), frozenset(), raw)
    covers = []
    for lits, nxt, old in raw:
        marks = frozenset(i for i, u in enumerate(untils) if u not in old or u[2] in old)
        covers.append((lits, nxt, marks))
    # drop covers dominated by a weaker guard, weaker obligations and more marks
    kept = []
    for c in sorted(set(covers), key=lambda c: (len(c[0]), len(c[1]), -len(c[2]), sorted(c[0]), sorted(c[1]), sorted(c[2]))):
        if not any(k[0] <= c[0] and k[1] <= c[1] and k[2] >= c[2] for k in kept):
            kept.append(c)
    return kept


def scc_ids(num: int, succ: Callable[[int], Iterable[int]]) -> list[int]:
    """Tarjan (iterative); returns the component id of every node."""
    index = [-1] * num
    low = [0] * num
    comp = [-1] * num
    on_stack = [False] * num
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in range(num):
        if index[root] != -1:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def ltl_to_nba(phi: Formula) -> BuchiAutomaton:
    """Tableau translation: obligation sets, transition marks per Until, then degeneralization."""
    props = tuple(sorted(a.prop for a in atoms(phi)))
    bit = {p: i for i, p in enumerate(props)}
    root = to_nnf(phi)
    untils = _untils(root)

    # generalized automaton over obligation sets
    start = frozenset([root])
    ids = {start: 0}
    order = [start]
    tgba: list[list[tuple[int, int, int, frozenset]]] = []
    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        row = []
        for lits, nxt, marks in _covers(state, untils):
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
            pos = sum(1 << bit[l[1]] for l in lits if l[0] == "p")
            neg = sum(1 << bit[l[1]] for l in lits if l[0] == "np")
            row.append((pos, neg, ids[nxt], marks))
        tgba.append(row)

    num = len(tgba)
    comp = scc_ids(num, lambda q: [e[2] for e in tgba[q]])
    internal: dict[int, list[frozenset]] = {}
    for q, row in enumerate(tgba):
        for _, _, t, marks in row:
            if comp[t] == comp[q]:
                internal.setdefault(comp[q], []).append(marks)
    relevant = {
        c: [m for m in range(len(untils)) if any(m not in marks for marks in ms)]
        for c, ms in internal.items()
    }

    # degeneralize with a per-component counter
    def jump(j: int, marks: frozenset, rel: list[int]) -> int:
        while j < len(rel) and rel[j] in marks:
            j += 1
        return j

    nstart = (0, 0)
    nids = {nstart: 0}
    norder = [nstart]
    edges: list[list[tuple[int, int, int]]] = []
    k = 0
    while k < len(norder):
        q, j = norder[k]
        k += 1
        rel_q = relevant.get(comp[q], [])
        row = []
        for pos, neg, t, marks in tgba[q]:
            rel_t = relevant.get(comp[t], [])
            if comp[t] == comp[q]:
                base = 0 if j >= len(rel_q) else j
            else:
                base = 0
            target = (t, jump(base, marks, rel_t))
            if target not in nids:
                nids[target] = len(norder)
                norder.append(target)
            row.append((pos, neg, nids[target]))
        edges.append(row)
    accepting = {
        s for s, (q, j) in enumerate(norder)
        if comp[q] in internal and j >= len(relevant[comp[q]])
    }
    return _trim_and_merge(props, edges, accepting)


def _trim_and_merge(props, edges, accepting) -> BuchiAutomaton:
    num = len(edges)
    comp = scc_ids(num, lambda q: [e[2] for e in edges[q]])
    cyclic = set()
    for q in range(num):
        for _, _, t in edges[q]:
            if comp[t] == comp[q]:
                cyclic.add(comp[q])
    good_comps = {comp[q] for q in accepting if comp[q] in cyclic}
    # live: can reach a good component
    preds: list[list[int]] = [[] for _ in range(num)]
    for q in range(num):
        for _, _, t in edges[q]:
            preds[t].append(q)
    live = {q for q in range(num) if comp[q] in good_comps}
    stack = list(live)
    while stack:
        t = stack.pop()
        for q in preds[t]:
            if q not in live:
                live.add(q)
                stack.append(q)
    accepting = {q for q in accepting if comp[q] in good_comps}

    # bisimulation merge on (accepting, guarded successors)
    block = {q: (q in accepting) for q in live}
    while True:
        sig = {
            q: (block[q], tuple(sorted({(p, n, block[t]) for p, n, t in edges[q] if t in live})))
            for q in sorted(live)
        }
        numbering: dict = {}
        new = {q: numbering.setdefault(sig[q], len(numbering)) for q in sorted(live)}
        if len(numbering) == len(set(block.values())):
            block = new
            break
        block = new

    if 0 not in live:
        return BuchiAutomaton(props, ((),), (0,), frozenset())
    # renumber blocks in BFS order from the initial state
    reps_of: dict[int, int] = {}
    for q in sorted(live):
        reps_of.setdefault(block[q], q)
    ids = {block[0]: 0}
    order = [block[0]]
    out_edges = []
    i = 0
    while i < len(order):
        b = order[i]
        i += 1
        q = reps_of[b]
        row = []
        for p, n, t in sorted({(p, n, block[t]) for p, n, t in edges[q] if t in live}):
            if t not in ids:
                ids[t] = len(order)
                order.append(t)
            row.append((p, n, ids[t]))
        out_edges.append(tuple(row))
    acc = frozenset(ids[block[q]] for q in accepting if block[q] in ids)
    return BuchiAutomaton(props, tuple(out_edges), (0,), acc)


# ---------------------------------------------------------------------------
# emptiness


def find_accepting_lasso(
    starts: Sequence[Hashable],
    successors: Callable[[Hashable], Iterable[tuple[object, Hashable]]],
    accepting: Callable[[Hashable], bool],
):
    """Nested depth-first search.

    ``successors(node)`` yields ``(edge_data, next_node)``.  Returns
    ``(prefix_edges, cycle_edges)`` for an accepting lasso, or ``None``.
    """
    outer_seen: set = set()
    inner_seen: set = set()
    for root in starts:
        if root in outer_seen:
            continue
        outer_seen.add(root)
        path: list[tuple[object, Hashable]] = [(None, root)]
        work = [iter(successors(root))]
        while work:
            step = next(work[-1], None)
            if step is not None:
                edge, nxt = step
                if nxt not in outer_seen:
                    outer_seen.add(nxt)
                    path.append((edge, nxt))
                    work.append(iter(successors(nxt)))
                continue
            node = path[-1][1]
            if accepting(node):
                cycle = _inner(node, successors, inner_seen)
                if cycle is not None:
                    return [e for e, _ in path[1:]], cycle
            work.pop()
            path.pop()
    return None


def _inner(seed, successors, seen):
    path = [(None, seed)]
    work = [iter(successors(seed))]
    while work:
        step = next(work[-1], None)
        if step is None:
            work.pop()
            path.pop()
            continue
        edge, nxt = step
        if nxt == seed:
            return [e for e, _ in path[1:]] + [edge]
        if nxt not in seen:
            seen.add(nxt)
            path.append((edge, nxt))
            work.append(iter(successors(nxt)))
    return None


def nba_accepts_lasso(a: BuchiAutomaton, w: LassoWord) -> bool:
    """Does some run over ``w`` visit an accepting state infinitely often?"""
    letters = [a.letter_mask(x) for x in list(w.prefix) + list(w.loop)]
    start_loop = len(w.prefix)
    size = len(letters)

    def successors(node):
        q, i = node
        j = i + 1 if i + 1 < size else start_loop
        return [(None, (t, j)) for t in a.successors(q, letters[i])]

    found = find_accepting_lasso(
        [(q, 0) for q in a.initial], successors, lambda node: node[0] in a.accepting and node[1] >= start_loop
    )
    return found is not None


# ---------------------------------------------------------------------------
# model checking


@dataclass(frozen=True)
class Counterexample:
    """A violating trace and the input lasso that regenerates it."""

    word: LassoWord
    inputs: LassoWord

    def __str__(self):
        return f"trace {self.word}  (inputs {self.inputs})"


def _projection(props_from: Sequence[str], props_to: Sequence[str]) -> list[int]:
    index = {p: i for i, p in enumerate(props_to)}
    table = []
    for mask in range(1 << len(props_from)):
        out = 0
        for i, p in enumerate(props_from):
            if mask >> i & 1 and p in index:
                out |= 1 << index[p]
        table.append(out)
    return table


def _combined(m: MooreMachine, label: int, x: int) -> Valuation:
    lab = m.out_alpha.valuation(label)
    inp = m.in_alpha.valuation(x)
    n = max(lab.n, inp.n)
    return Valuation(lab.props | inp.props, n)


def model_check(m: MooreMachine, phi: Formula) -> Counterexample | None:
    """``None`` iff every trace of ``m`` satisfies ``phi``; otherwise a violating lasso."""
    nba = ltl_to_nba(Not(phi))
    known = set(m.inputs) | set(m.outputs)
    missing = [p for p in nba.props if p not in known]
    if missing:
        raise ValueError(f"formula mentions propositions outside the machine: {missing}")
    in_map = _projection(m.inputs, nba.props)
    out_map = _projection(m.outputs, nba.props)
    width = 1 << len(m.inputs)

    def successors(node):
        s, q = node
        base = out_map[m.labels[s]]
        for x in range(width):
            letter = base | in_map[x]
            s2 = m.delta[s][x]
            for t in nba.successors(q, letter):
                yield (s, x), (s2, t)

    found = find_accepting_lasso(
        [(m.initial, q) for q in nba.initial], successors, lambda node: node[1] in nba.accepting
    )
    if found is None:
        return None
    prefix, cycle = found
    word = LassoWord(
        tuple(_combined(m, m.labels[s], x) for s, x in prefix),
        tuple(_combined(m, m.labels[s], x) for s, x in cycle),
    )
    inputs = LassoWord(
        tuple(m.in_alpha.valuation(x) for _, x in prefix),
        tuple(m.in_alpha.valuation(x) for _, x in cycle),
    )
    return Counterexample(word, inputs)


def machine_lasso(m: MooreMachine, prefix: Sequence, loop: Sequence) -> LassoWord:
    """The trace of ``m`` on the input lasso ``prefix . loop^omega`` (letters as masks or valuations)."""
    enc = [x if isinstance(x, int) else m.in_alpha.encode(x) for x in prefix]
    cyc = [x if isinstance(x, int) else m.in_alpha.encode(x) for x in loop]
    if not cyc:
        raise ValueError("loop must be nonempty")
    s = m.initial
    letters = []
    for x in enc:
        letters.append(_combined(m, m.labels[s], x))
        s = m.delta[s][x]
    seen = {}
    rounds = []
    while s not in seen:
        seen[s] = len(rounds)
        block = []
        for x in cyc:
            block.append(_combined(m, m.labels[s], x))
            s = m.delta[s][x]
        rounds.append(block)
    first = seen[s]
    pre = letters + [v for block in rounds[:first] for v in block]
    loop_letters = [v for block in rounds[first:] for v in block]
    return LassoWord(tuple(pre), tuple(loop_letters))


def automaton_to_dot(a: BuchiAutomaton) -> str:
    def guard(pos, neg):
        lits = [p for i, p in enumerate(a.props) if pos >> i & 1]
        lits += ["!" + p for i, p in enumerate(a.props) if neg >> i & 1]
        return " & ".join(lits) or "true"

    lines = ["digraph nba {", "  rankdir=LR;", "  init [shape=point];"]
    for q in a.initial:
        lines.append(f"  init -> q{q};")
    for q in range(a.num_states):
        shape = "doublecircle" if q in a.accepting else "circle"
        lines.append(f"  q{q} [shape={shape}];")
    for q, row in enumerate(a.edges):
        for pos, neg, t in row:
            lines.append(f'  q{q} -> q{t} [label="{guard(pos, neg)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
