"""Random generators shared by the test modules."""

import random

from symsynth.ltl import (
    FALSE, TRUE, And, Atom, Finally, Globally, Iff, Implies, Next, Not, Or, Until,
)
from symsynth.machines import Alphabet, MooreMachine, index_major
from symsynth.symmetry import LassoWord, Valuation

UNARY = (Not, Next, Finally, Globally)
BINARY = (And, Or, Implies, Iff, Until)


def random_formula(rng, props, size):
    """Formula with exactly ``size`` nodes over ``props`` (strings ``name@idx``)."""
    if size <= 1:
        if rng.random() < 0.08:
            return rng.choice((TRUE, FALSE))
        name, _, idx = rng.choice(props).partition("@")
        return Atom(name, int(idx))
    if size == 2 or rng.random() < 0.35:
        return rng.choice(UNARY)(random_formula(rng, props, size - 1))
    left = rng.randint(1, size - 2)
    return rng.choice(BINARY)(random_formula(rng, props, left), random_formula(rng, props, size - 1 - left))


def random_valuation(rng, props, n):
    pairs = []
    for p in props:
        if rng.random() < 0.5:
            name, _, idx = p.partition("@")
            pairs.append((name, int(idx) if idx else 0))
    return Valuation(frozenset(pairs), n)


def random_lasso(rng, props, n=1, max_prefix=3, max_loop=3):
    return LassoWord(
        tuple(random_valuation(rng, props, n) for _ in range(rng.randint(0, max_prefix))),
        tuple(random_valuation(rng, props, n) for _ in range(rng.randint(1, max_loop))),
    )


def random_machine(rng, inputs, outputs, states, n=1, label_pool=None):
    width = 1 << len(inputs)
    labels = label_pool or list(range(1 << len(outputs)))
    return MooreMachine(
        tuple(inputs),
        tuple(outputs),
        [[rng.randrange(states) for _ in range(width)] for _ in range(states)],
        [rng.choice(labels) for _ in range(states)],
        0,
        n,
    )


def random_process(rng, n, states, local_inputs=("r",), outputs=("g",)):
    return random_machine(rng, index_major(local_inputs, n), outputs, states, n)


def symmetric_biased_labels(outputs, n):
    """Output masks where fully symmetric labels are over-represented."""
    alpha = Alphabet(outputs, n)
    pool = list(alpha.masks())
    pool += [x for x in alpha.masks() if alpha.rep(x) == n] * 3
    pool += [x for x in alpha.masks() if 1 < alpha.rep(x) < n] * 2
    return pool


def random_global(rng, n, states, local_inputs=("r",), outputs=("y",)):
    outs = index_major(outputs, n)
    return random_machine(rng, index_major(local_inputs, n), outs, states, n, symmetric_biased_labels(outs, n))


def input_lassos(rng, m, count, max_prefix=4, max_loop=4):
    width = 1 << len(m.inputs)
    for _ in range(count):
        yield (
            [rng.randrange(width) for _ in range(rng.randint(0, max_prefix))],
            [rng.randrange(width) for _ in range(rng.randint(1, max_loop))],
        )


def rng_for(seed):
    return random.Random(seed)


def random_reps_valid(rng, n, states, local_inputs=("r",), outputs=("y",)):
    """Random global machine relabeled so that it passes the reps divisibility check.

    The reachable (state, reps) pairs do not depend on labels, so each state
    gets a label whose rep is a multiple of every reps value reaching it.
    """
    from math import gcd, lcm

    g = random_global(rng, n, states, local_inputs, outputs)
    in_rep = [g.in_alpha.rep(x) for x in g.in_alpha.masks()]
    need = [1] * g.num_states
    seen = {(g.initial, n)}
    todo = [(g.initial, n)]
    while todo:
        s, r = todo.pop()
        need[s] = lcm(need[s], r)
        for x in g.in_alpha.masks():
            nxt = (g.delta[s][x], gcd(r, in_rep[x]))
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    out = g.out_alpha
    labels = [rng.choice([y for y in out.masks() if out.rep(y) % need[s] == 0]) for s in range(g.num_states)]
    return MooreMachine(g.inputs, g.outputs, g.delta, labels, g.initial, n)
