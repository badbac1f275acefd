"""Acceptance criteria, one test each; every test prints a PASS/FAIL line with its timing."""

import itertools
import time
from pathlib import Path

import numpy as np
import pytest

from helpers import input_lassos, random_formula, random_global, random_lasso, random_machine, random_process
from helpers import random_reps_valid, rng_for
from symsynth.automata import machine_lasso, model_check
from symsynth.cli import parse_spec_file, run_cli
from symsynth.compression import CompressionScheme, compress_formula, compress_word
from symsynth.ltl import And, Atom, Implies, Next, Not, Until, eval_lasso, outcond_formula, parse_formula, strengthen_spec
from symsynth.machines import (
    bisim_equiv, extract_process, machine_from_json, machine_to_dot, machine_to_json,
    reps_divisibility_check, symmetric_completion, symmetric_product, symmetry_check,
)
from symsynth.sat import EmbeddedSolver
from symsynth.symmetry import Architecture, Valuation, format_word, parse_lasso, rep, reps, rot_valuation
from symsynth.synth import Realizable, Unrealizable, strategy_wins, synth_symmetric

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).resolve().parent / "golden"


def report(capsys, number, title, ok, started, budget=None, detail=""):
    elapsed = time.perf_counter() - started
    within = budget is None or elapsed < budget
    verdict = "PASS" if ok and within else "FAIL"
    limit = f" (limit {budget:.0f}s)" if budget else ""
    with capsys.disabled():
        print(f"\n[{verdict}] criterion {number}: {title} in {elapsed:.1f}s{limit}{'; ' + detail if detail else ''}")
    assert ok, detail
    assert within, f"took {elapsed:.1f}s, limit {budget}s"


# -- 1 -------------------------------------------------------------------------


def _neutral_mask(bits, n):
    """Bitmask over j of rotations fixing the n-bit letter ``bits`` (bit i = process i)."""
    out = 0
    for j in range(n):
        rotated = sum(1 << ((i + j) % n) for i in range(n) if bits >> i & 1)
        if rotated == bits:
            out |= 1 << j
    return out


def _letter(bits, n):
    return Valuation(frozenset(("a", i) for i in range(n) if bits >> i & 1), n)


def test_criterion_1_reps_oracle(capsys):
    started = time.perf_counter()
    checked = direct = 0
    bad = []
    # direct library calls on every word
    for n, max_len in ((2, 5), (3, 5), (4, 5), (6, 3)):
        letters = [_letter(b, n) for b in range(1 << n)]
        masks = [_neutral_mask(b, n) for b in range(1 << n)]
        full = (1 << n) - 1
        for length in range(max_len + 1):
            for word in itertools.product(range(1 << n), repeat=length):
                m = full
                for b in word:
                    m &= masks[b]
                direct += 1
                if reps(tuple(letters[b] for b in word), n) != bin(m).count("1"):
                    bad.append((n, word))
    # n = 6, lengths 4 and 5: vectorized over all words, library rep per letter
    n = 6
    masks = np.array([_neutral_mask(b, n) for b in range(64)], dtype=np.uint8)
    lib_rep = np.array([rep(_letter(b, n)) for b in range(64)], dtype=np.uint8)
    popcount = np.array([bin(m).count("1") for m in range(256)], dtype=np.uint8)
    m3 = (masks[:, None, None] & masks[None, :, None] & masks[None, None, :]).ravel()
    g3 = np.gcd(np.gcd(lib_rep[:, None, None], lib_rep[None, :, None]), lib_rep[None, None, :]).ravel()
    g3 = np.gcd(g3, n)
    for length in (4, 5):
        for head in itertools.product(range(64), repeat=length - 3):
            m, g = 0x3F, n
            for b in head:
                m &= int(masks[b])
                g = int(np.gcd(g, lib_rep[b]))
            ok = popcount[m3 & m] == np.gcd(g3, g)
            checked += ok.size
            if not ok.all():
                bad.append((6, head))
    # and straight library calls on a sample of the long n = 6 words
    rng = rng_for(1)
    letters6 = [_letter(b, 6) for b in range(64)]
    full_masks = [_neutral_mask(b, 6) for b in range(64)]
    for _ in range(20000):
        word = [rng.randrange(64) for _ in range(rng.choice((4, 5)))]
        m = 0x3F
        for b in word:
            m &= full_masks[b]
        direct += 1
        if reps(tuple(letters6[b] for b in word), 6) != bin(m).count("1"):
            bad.append((6, tuple(word)))
    title = (f"reps equals neutral-rotation count; {direct} words through reps directly, "
             f"{checked} long n=6 words through the per-letter rep fold")
    report(capsys, 1, title, not bad, started, 60,
           f"mismatches {bad[:3]}" if bad else "")


# -- 2 -------------------------------------------------------------------------


def test_criterion_2_equal_spacing(capsys):
    started = time.perf_counter()
    bad = []
    total = 0
    for n in (2, 3, 4, 6):
        for bits in range(1 << n):
            for extra in range(1 << n):
                # two propositions so letters are not just bit strings of one name
                x = Valuation(frozenset([("a", i) for i in range(n) if bits >> i & 1]
                                        + [("b", i) for i in range(n) if extra >> i & 1]), n)
                m = rep(x)
                neutral = [j for j in range(n) if rot_valuation(x, j) == x]
                total += 1
                if n % m or neutral != [k * n // m for k in range(m)]:
                    bad.append(x)
    report(capsys, 2, f"neutral rotations equally spaced for {total} valuations", not bad, started, None,
           f"counterexample {bad[0]}" if bad else "")


# -- 3 -------------------------------------------------------------------------


def test_criterion_3_product_round_trip(capsys):
    started = time.perf_counter()
    rng = rng_for(3)
    good = 0
    for _ in range(100):
        n = rng.choice((2, 3))
        p = random_process(rng, n, rng.randint(1, 5))
        g = symmetric_product(p, n)
        good += symmetry_check(g, n) is None and bisim_equiv(extract_process(g), p)
    report(capsys, 3, f"product round trip {good}/100", good == 100, started, 120)


# -- 4 -------------------------------------------------------------------------


def test_criterion_4_completion(capsys):
    started = time.perf_counter()
    rng = rng_for(4)
    completed_ok = kept = 0
    for i in range(100):
        n = rng.choice((2, 3))
        g = random_reps_valid(rng, n, rng.randint(1, 4))
        assert reps_divisibility_check(g, n) is None
        completed_ok += symmetry_check(symmetric_completion(g, n), n) is None
        s = symmetric_product(random_process(rng, n, rng.randint(1, 4), outputs=("y",)), n)
        kept += bisim_equiv(symmetric_completion(s, n), s)
    ok = completed_ok == 100 and kept == 100
    report(capsys, 4, f"completion symmetric {completed_ok}/100, symmetric inputs kept {kept}/100", ok, started, 300)


# -- 5 -------------------------------------------------------------------------


def test_criterion_5_outcond_cross_oracle(capsys):
    started = time.perf_counter()
    rng = rng_for(5)
    agree = 0
    passing = 0
    for i in range(100):
        n = (2, 3, 4)[i % 3]
        g = random_global(rng, n, rng.randint(1, 3))
        expected = reps_divisibility_check(g, n) is None
        passing += expected
        agree += (model_check(g, outcond_formula(Architecture.rotation(n, ("r",), ("y",)))) is None) == expected
    report(capsys, 5, f"outcond model check agrees with reps check {agree}/100 ({passing} passing machines)",
           agree == 100, started)


# -- 6 -------------------------------------------------------------------------


def _css(chi):
    return And(And(chi, Next(chi)), Next(Next(Not(chi))))


def _xs(f, k):
    for _ in range(k):
        f = Next(f)
    return f


def test_criterion_6_compression(capsys):
    started = time.perf_counter()
    rng = rng_for(6)
    agree = 0
    for _ in range(600):
        k = rng.randint(1, 4)
        names = [f"x{i}" for i in range(1, k + 1)]
        props = [f"{x}@0" for x in names]
        s = CompressionScheme.of(names)
        psi = random_formula(rng, props, rng.randint(1, 12))
        w = random_lasso(rng, props)
        agree += eval_lasso(w, psi) == eval_lasso(compress_word(w, s), compress_formula(psi, s))
    s4 = CompressionScheme.of(["x1", "x2", "x3", "x4"])
    chi = Atom("chi", 0)
    literal = compress_formula(parse_formula("x4@0 U x3@0"), s4) == Until(
        Implies(_css(chi), _xs(chi, 9)), And(_css(chi), _xs(chi, 7))
    )
    block = format_word(compress_word(parse_lasso("{x2,x4} | {x1,x2}"), s4).prefix)
    layout = block == "{chi@0};{chi@0};{};{};{};{chi@0};{};{};{};{chi@0}"
    ok = agree == 600 and literal and layout
    report(capsys, 6, f"adjunction {agree}/600, literal until {literal}, block layout {layout}", ok, started, 120)


# -- 7 -------------------------------------------------------------------------


def test_criterion_7_realizable(capsys):
    started = time.perf_counter()
    arch = Architecture.rotation(2, ("r",), ("g",))
    phi = parse_formula("G (r@0 -> F g@0)")
    v = synth_symmetric(arch, phi, max_bound=8, solver=EmbeddedSolver())
    ok = isinstance(v, Realizable)
    detail = type(v).__name__
    if ok:
        g = v.global_machine
        full = And(strengthen_spec(phi, 2), outcond_formula(arch))
        checks = {
            "symmetry": symmetry_check(g, 2) is None,
            "phi": model_check(g, phi) is None,
            "phi'": model_check(g, strengthen_spec(phi, 2)) is None,
            "phi''": model_check(g, full) is None,
            "product bisimulation": bisim_equiv(symmetric_product(v.process, 2), g),
        }
        ok = all(checks.values()) and v.bound <= 8
        detail = f"bound {v.bound}, " + ", ".join(f"{k} {'ok' if c else 'FAILED'}" for k, c in checks.items())
    report(capsys, 7, "request/grant spec realizable", ok, started, 60, detail)


# -- 8 -------------------------------------------------------------------------


def test_criterion_8_symmetry_breaking(capsys):
    started = time.perf_counter()
    arch = Architecture.rotation(2, ("r",), ("g",))
    phi = parse_formula("G !(g@0 & g@1) & G (r@0 -> F g@0)")
    v = synth_symmetric(arch, phi, unreal_bound=4, solver=EmbeddedSolver())
    ok = isinstance(v, Unrealizable) and v.bound <= 4
    detail = type(v).__name__
    if ok:
        full = And(strengthen_spec(phi, 2), outcond_formula(arch))
        ok = strategy_wins(v.counter, full)
        detail = f"environment strategy with {v.counter.num_states} states at bound {v.bound}, re-checked {ok}"
    report(capsys, 8, "symmetric mutual exclusion unrealizable", ok, started, 120, detail)


# -- 9 -------------------------------------------------------------------------


def _regression_corpus(rng):
    for _ in range(120):
        m = random_machine(rng, ("x@0",), ("y@0", "z@0"), rng.randint(1, 4))
        yield m, random_formula(rng, ["x@0", "y@0", "z@0"], rng.randint(2, 8))
    for _ in range(30):
        n = rng.choice((2, 3))
        g = random_global(rng, n, rng.randint(1, 3))
        yield g, outcond_formula(Architecture.rotation(n, ("r",), ("y",)))
    for name in ("echo2", "mutex2", "request_grant2"):
        spec = parse_spec_file((ROOT / "specs" / f"{name}.sym").read_text())
        for machine in ("echo2_global", "echo2_product"):
            yield machine_from_json((GOLDEN / f"{machine}.json").read_text()), spec.formula


def test_criterion_9_model_checker_soundness(capsys):
    started = time.perf_counter()
    rng = rng_for(9)
    cex_count = ok_count = 0
    bad = []
    for m, phi in _regression_corpus(rng):
        cex = model_check(m, phi)
        if cex is not None:
            cex_count += 1
            replay = machine_lasso(m, cex.inputs.prefix, cex.inputs.loop)
            if eval_lasso(cex.word, phi) or replay != cex.word:
                bad.append(("counterexample", phi))
            continue
        ok_count += 1
        for prefix, loop in input_lassos(rng, m, 1000):
            if not eval_lasso(machine_lasso(m, prefix, loop), phi):
                bad.append(("ok verdict", phi, prefix, loop))
                break
    report(capsys, 9, f"{cex_count} counterexamples falsify, {ok_count} ok verdicts survive 1000 samples",
           not bad and cex_count and ok_count, started, None, f"{bad[:2]}" if bad else "")


# -- 10 ------------------------------------------------------------------------


def test_criterion_10_format_stability(capsys, tmp_path):
    started = time.perf_counter()
    spec = parse_spec_file((ROOT / "specs" / "echo2.sym").read_text())
    v = synth_symmetric(spec.architecture, spec.formula, solver=EmbeddedSolver())
    fresh = {
        "echo2_process": v.process,
        "echo2_global": v.global_machine,
        "echo2_product": symmetric_product(v.process, spec.n),
    }
    mismatched = []
    for name, m in fresh.items():
        js, dot = (GOLDEN / f"{name}.json").read_text(), (GOLDEN / f"{name}.dot").read_text()
        if machine_to_json(m) != js or machine_to_dot(m) != dot:
            mismatched.append(f"{name} regenerated")
        back = machine_from_json(js)
        if machine_to_json(back) != js or machine_to_dot(back) != dot:
            mismatched.append(f"{name} round trip")
    out, dot = tmp_path / "p.json", tmp_path / "p.dot"
    code = run_cli(["synth", str(ROOT / "specs" / "echo2.sym"), "--out", str(out), "--dot", str(dot)])
    if code != 0 or out.read_text() != (GOLDEN / "echo2_process.json").read_text() \
            or dot.read_text() != (GOLDEN / "echo2_process.dot").read_text():
        mismatched.append("cli synth output")
    report(capsys, 10, "golden JSON and DOT bit-exact (3 machines, library and CLI)", not mismatched, started, None,
           ", ".join(mismatched))


if __name__ == "__main__":
    raise SystemExit(pytest.main(["-q", __file__]))
