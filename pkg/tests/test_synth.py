import pytest

from helpers import random_formula, rng_for
from symsynth.automata import ltl_to_nba, model_check
from symsynth.ltl import Not, parse_formula, strengthen_spec
from symsynth.machines import bisim_equiv, symmetric_product, symmetry_check
from symsynth.sat import EmbeddedSolver
from symsynth.symmetry import Architecture
from symsynth.synth import (
    Realizable, StrategyMachine, Unknown, Unrealizable, VerificationError, bounded_synthesis,
    counter_strategy, strategy_wins, synth_symmetric,
)

X, Y = ("x@0",), ("y@0",)
SOLVER = EmbeddedSolver()


def P(text):
    return parse_formula(text)


def synth(phi, bound, inputs=X, outputs=Y):
    return bounded_synthesis(ltl_to_nba(Not(phi)), inputs, outputs, bound, SOLVER)


def test_constant_solution():
    m = synth(P("G y@0"), 1)
    assert m.num_states == 1 and m.label(0) == {"y@0"}


def test_unsatisfiable_spec_has_no_machine():
    for k in (1, 2, 3):
        assert synth(P("G y@0 & F !y@0"), k) is None


def test_memory_needs_bound_two():
    phi = P("G (y@0 <-> X !y@0)")
    assert synth(phi, 1) is None
    m = synth(phi, 2)
    assert m.num_states == 2
    assert model_check(m, phi) is None


def test_reactive_delay():
    phi = P("G (x@0 <-> X y@0)")
    assert synth(phi, 1) is None
    m = synth(phi, 2)
    assert model_check(m, phi) is None


def test_strategy_examples():
    e = counter_strategy(P("false"), X, Y, 1, SOLVER)
    assert e.num_states == 1
    mirror = P("G (y@0 <-> x@0)")
    e = counter_strategy(mirror, X, Y, 1, SOLVER)
    # the environment must play the opposite of what it sees
    assert [e.moves[0][o] for o in (0, 1)] == [1, 0]
    assert strategy_wins(e, mirror)
    for k in (1, 2, 3):
        assert counter_strategy(P("G y@0"), X, Y, k, SOLVER) is None


def test_describe():
    e = StrategyMachine(("g@0",), ("r@0",), ((0, 0),), ((1, 0),))
    assert e.describe() == "e0 sees {} plays {r@0} -> e0\ne0 sees {g@0} plays {} -> e0"


def test_strategy_wins_rejects_losing_strategy():
    lazy = StrategyMachine(Y, X, ((0, 0),), ((0, 0),))
    assert not strategy_wins(lazy, P("G (y@0 <-> x@0)"))
    assert strategy_wins(lazy, P("F x@0"))


def test_width_cap():
    many = tuple(f"x@{i}" for i in range(9))
    with pytest.raises(ValueError, match="capped"):
        bounded_synthesis(ltl_to_nba(P("true")), many, Y, 1, SOLVER, 9)


def test_random_specs_consistent():
    rng = rng_for(300)
    props = ["x@0", "y@0"]
    seen = {"sys": 0, "env": 0}
    for _ in range(40):
        phi = random_formula(rng, props, rng.randint(2, 7))
        ucw = ltl_to_nba(Not(phi))
        sys_at = [k for k in (1, 2, 3) if bounded_synthesis(ucw, X, Y, k, SOLVER) is not None]
        env_at = [k for k in (1, 2, 3) if counter_strategy(phi, X, Y, k, SOLVER) is not None]
        # determinacy: never both, and the bound sets are upward closed
        assert not (sys_at and env_at), phi
        assert sys_at == list(range(sys_at[0], 4)) if sys_at else True
        assert env_at == list(range(env_at[0], 4)) if env_at else True
        if sys_at:
            seen["sys"] += 1
            assert model_check(bounded_synthesis(ucw, X, Y, sys_at[0], SOLVER), phi) is None
        if env_at:
            seen["env"] += 1
            assert strategy_wins(counter_strategy(phi, X, Y, env_at[0], SOLVER), phi)
    assert seen["sys"] and seen["env"]


ARCH2 = Architecture.rotation(2, ("r",), ("g",))


def _assert_released(v, phi, n):
    assert isinstance(v, Realizable)
    g = v.global_machine
    assert symmetry_check(g, n) is None
    assert model_check(g, phi) is None
    assert model_check(g, strengthen_spec(phi, n)) is None
    assert bisim_equiv(symmetric_product(v.process, n), g)
    assert v.exit_code == 0


def test_request_grant_realizable():
    phi = P("G (r@0 -> F g@0)")
    v = synth_symmetric(ARCH2, phi, solver=SOLVER)
    _assert_released(v, phi, 2)
    assert v.bound == 1


def test_mutex_needs_symmetry_breaking():
    phi = P("G !(g@0 & g@1) & G (r@0 -> F g@0)")
    v = synth_symmetric(ARCH2, phi, solver=SOLVER)
    assert isinstance(v, Unrealizable) and v.exit_code == 1
    assert v.bound <= 4
    assert v.counter.writes == ARCH2.input_props


def test_echo_realizable_and_unknown_below_bound():
    phi = P("G (r@0 -> X g@0) & G (!r@0 -> X !g@0)")
    v = synth_symmetric(ARCH2, phi, max_bound=1, unreal_bound=1, solver=SOLVER)
    assert isinstance(v, Unknown) and v.exit_code == 2
    assert (v.max_bound, v.unreal_bound) == (1, 1)
    v = synth_symmetric(ARCH2, phi, solver=SOLVER)
    _assert_released(v, phi, 2)
    assert v.process.num_states == 2


def test_symmetric_unrealizable_without_breaking():
    # process 0 alone must raise g: impossible for identical processes
    phi = P("g@0 & !g@1")
    v = synth_symmetric(ARCH2, phi, solver=SOLVER)
    assert isinstance(v, Unrealizable)


def test_single_process_degenerates_to_plain_synthesis():
    arch = Architecture.rotation(1, ("r",), ("g",))
    phi = P("G (r@0 -> X g@0)")
    _assert_released(synth_symmetric(arch, phi, solver=SOLVER), phi, 1)


def test_gate_rejects_bogus_solver():
    class Liar:
        def solve(self, cnf):
            return set()

    with pytest.raises(VerificationError):
        synth_symmetric(ARCH2, P("G !(g@0 & g@1) & G (r@0 -> F g@0)"), solver=Liar())


def test_general_architecture_rejected():
    arch = Architecture.general((0,), ("a",), ("b",), ("z",), ("x",), {(0, "a"): "x"}, {(0, "b"): "z"})
    with pytest.raises(ValueError, match="rotation"):
        synth_symmetric(arch, P("true"))
