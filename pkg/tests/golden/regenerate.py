"""Rewrite the golden machine files from specs/echo2.sym (embedded solver, default seed).

Run from the repository root: python tests/golden/regenerate.py
"""

from pathlib import Path

from symsynth.cli import parse_spec_file
from symsynth.machines import machine_to_dot, machine_to_json, symmetric_product
from symsynth.sat import EmbeddedSolver
from symsynth.synth import Realizable, synth_symmetric

ROOT = Path(__file__).resolve().parents[2]
HERE = Path(__file__).resolve().parent


def artifacts():
    spec = parse_spec_file((ROOT / "specs" / "echo2.sym").read_text())
    verdict = synth_symmetric(spec.architecture, spec.formula, solver=EmbeddedSolver())
    assert isinstance(verdict, Realizable)
    return {
        "echo2_process": verdict.process,
        "echo2_global": verdict.global_machine,
        "echo2_product": symmetric_product(verdict.process, spec.n),
    }


def main():
    for name, m in artifacts().items():
        (HERE / f"{name}.json").write_text(machine_to_json(m))
        (HERE / f"{name}.dot").write_text(machine_to_dot(m))
        print("wrote", name)


if __name__ == "__main__":
    main()
