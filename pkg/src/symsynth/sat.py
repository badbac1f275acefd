"""CNF construction and the two solver providers (embedded and external DIMACS process)."""

from __future__ import annotations

import os
import subprocess
import tempfile
from typing import Iterable, Protocol

__all__ = [
    "CNF",
    "EmbeddedSolver",
    "ExternalSolver",
    "SatSolver",
    "SolverError",
    "default_solver",
    "parse_solver_output",
    "write_dimacs",
]

ENV_VAR = "SYMSYNTH_SAT"


class SolverError(RuntimeError):
    pass


class CNF:
    def __init__(self):
        self.num_vars = 0
        self.clauses: list[list[int]] = []

    def var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, clause: Iterable[int]) -> None:
        self.clauses.append(list(clause))


class SatSolver(Protocol):
    def solve(self, cnf: CNF) -> set[int] | None:
        """Set of variables true in a model, or ``None`` if unsatisfiable."""
        ...


def write_dimacs(cnf: CNF) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    lines.extend(" ".join([*map(str, clause), "0"]) for clause in cnf.clauses)
    return "\n".join(lines) + "\n"


def parse_solver_output(text: str) -> set[int] | None:
    """Read the competition output format (``s`` status line, ``v`` value lines)."""
    status = None
    true_vars: set[int] = set()
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("s "):
            status = line[2:].strip()
        elif line.startswith("v "):
            for tok in line[2:].split():
                lit = int(tok)
                if lit > 0:
                    true_vars.add(lit)
    if status == "SATISFIABLE":
        return true_vars
    if status == "UNSATISFIABLE":
        return None
    raise SolverError(f"solver reported no verdict (status line: {status!r})")


class EmbeddedSolver:
    """In-process CaDiCaL via pysat; deterministic for a fixed clause order."""

    def __init__(self, name: str = "cadical153"):
        self.name = name

    def solve(self, cnf: CNF) -> set[int] | None:
        from pysat.solvers import Solver

        with Solver(name=self.name, bootstrap_with=cnf.clauses) as s:
            if not s.solve():
                return None
            return {lit for lit in s.get_model() if lit > 0}

    def __repr__(self):
        return f"EmbeddedSolver({self.name!r})"


class ExternalSolver:
    """Runs ``path FILE.cnf`` and parses ``s``/``v`` lines from standard output."""

    def __init__(self, path: str, timeout: float | None = None):
        self.path = path
        self.timeout = timeout

    def solve(self, cnf: CNF) -> set[int] | None:
        with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
            fh.write(write_dimacs(cnf))
            name = fh.name
        try:
            proc = subprocess.run(
                [self.path, name], capture_output=True, text=True, timeout=self.timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SolverError(f"could not run {self.path}: {exc}") from None
        finally:
            os.unlink(name)
        try:
            return parse_solver_output(proc.stdout)
        except SolverError as exc:
            tail = proc.stderr.strip().splitlines()[-3:]
            raise SolverError(f"{exc}; exit code {proc.returncode}; stderr: {' | '.join(tail)}") from None

    def __repr__(self):
        return f"ExternalSolver({self.path!r})"


def default_solver(path: str | None = None) -> SatSolver:
    """External solver from ``path`` or ``$SYMSYNTH_SAT``, else the embedded one."""
    path = path or os.environ.get(ENV_VAR)
    return ExternalSolver(path) if path else EmbeddedSolver()
