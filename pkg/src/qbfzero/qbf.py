"""Prenex-CNF quantified Boolean formulas.

Literals use the DIMACS convention: a nonzero int whose absolute value is the
variable id and whose sign is the polarity. A clause is a tuple of literals and
a formula is an immutable :class:`Qbf`.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

DEFAULT_ORACLE_BOUND = 24
DEFAULT_REJECTION_TRIES = 10_000


class Quantifier(enum.Enum):
    EXISTS = "e"
    FORALL = "a"

    def __str__(self) -> str:
        return "∃" if self is Quantifier.EXISTS else "∀"


class QdimacsError(ValueError):
    """Malformed QDIMACS input."""


class OracleBoundError(ValueError):
    """Formula has more quantified variables than the brute-force bound allows."""


Clause = tuple[int, ...]


@dataclass(frozen=True)
class Qbf:
    prefix: tuple[tuple[Quantifier, int], ...]
    matrix: tuple[Clause, ...]
    var_count: int

    def __post_init__(self):
        seen = set()
        for _, v in self.prefix:
            if v < 1 or v > self.var_count:
                raise ValueError(f"prefix variable {v} out of range 1..{self.var_count}")
            if v in seen:
                raise ValueError(f"variable {v} quantified twice")
            seen.add(v)
        for clause in self.matrix:
            if len(set(clause)) != len(clause):
                raise ValueError(f"duplicate literal in clause {clause}")
            for lit in clause:
                if lit == 0 or abs(lit) not in seen:
                    raise ValueError(f"literal {lit} does not reference a quantified variable")

    @property
    def clause_count(self) -> int:
        return len(self.matrix)

    @property
    def num_quantified(self) -> int:
        return len(self.prefix)

    @property
    def head(self) -> tuple[Quantifier, int]:
        return self.prefix[0]

    def quantifier_of(self, var: int) -> Quantifier:
        for q, v in self.prefix:
            if v == var:
                return q
        raise KeyError(var)

    def has_empty_clause(self) -> bool:
        return any(len(c) == 0 for c in self.matrix)

    def is_decided(self) -> bool:
        return not self.matrix or self.has_empty_clause()

    def key(self) -> str:
        """Canonical string used to identify residual formulas."""
        pre = " ".join(f"{q.value}{v}" for q, v in self.prefix)
        mat = "".join("(" + " ".join(map(str, c)) + ")" for c in self.matrix)
        return f"{pre};{mat}"

    def rename(self, mapping: dict[int, int]) -> "Qbf":
        """Apply a variable renaming (mapping must be injective on prefix vars)."""
        var_count = max([self.var_count, *mapping.values()])
        prefix = tuple((q, mapping[v]) for q, v in self.prefix)
        matrix = tuple(
            tuple(mapping[abs(l)] if l > 0 else -mapping[abs(l)] for l in c) for c in self.matrix
        )
        return Qbf(prefix, matrix, var_count)

    def __str__(self) -> str:
        pre = "".join(f"{q}x{v}" for q, v in self.prefix)
        if not self.matrix:
            return f"{pre}.⊤"

        def lit(l):
            return f"x{l}" if l > 0 else f"¬x{-l}"

        body = "∧".join("(" + "∨".join(lit(l) for l in c) + ")" if c else "⊥" for c in self.matrix)
        return f"{pre}.{body}"


def is_tautology(clause: Sequence[int]) -> bool:
    s = set(clause)
    return any(-l in s for l in s)


# ---------------------------------------------------------------------------
# QDIMACS


def parse_qdimacs(text: str | Iterable[str]) -> Qbf:
    """Parse QDIMACS text (a string or an iterable of lines)."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header = None
    prefix: list[tuple[Quantifier, int]] = []
    quantified: set[int] = set()
    clauses: list[Clause] = []

    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tokens = line.split()
        if tokens[0] == "p":
            if header is not None:
                raise QdimacsError(f"line {lineno}: duplicate header")
            if len(tokens) != 4 or tokens[1] != "cnf":
                raise QdimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(tokens[2]), int(tokens[3]))
            except ValueError:
                raise QdimacsError(f"line {lineno}: malformed header {line!r}") from None
            if header[0] < 0 or header[1] < 0:
                raise QdimacsError(f"line {lineno}: negative header counts")
            continue
        if header is None:
            raise QdimacsError(f"line {lineno}: content before 'p cnf' header")
        nvars = header[0]

        if tokens[0] in ("e", "a"):
            if clauses:
                raise QdimacsError(f"line {lineno}: quantifier block after clauses")
            q = Quantifier(tokens[0])
            ids = _int_tokens(tokens[1:], lineno)
            if not ids or ids[-1] != 0:
                raise QdimacsError(f"line {lineno}: quantifier block not 0-terminated")
            for v in ids[:-1]:
                if v <= 0 or v > nvars:
                    raise QdimacsError(f"line {lineno}: variable {v} out of range 1..{nvars}")
                if v in quantified:
                    raise QdimacsError(f"line {lineno}: variable {v} quantified twice")
                quantified.add(v)
                prefix.append((q, v))
            continue

        lits = _int_tokens(tokens, lineno)
        if lits[-1] != 0:
            raise QdimacsError(f"line {lineno}: clause not 0-terminated")
        body = lits[:-1]
        if not body:
            raise QdimacsError(f"line {lineno}: empty clause")
        if 0 in body:
            raise QdimacsError(f"line {lineno}: one clause per line expected")
        clause: list[int] = []
        for lit in body:
            if abs(lit) > nvars:
                raise QdimacsError(f"line {lineno}: variable {abs(lit)} out of range 1..{nvars}")
            if abs(lit) not in quantified:
                raise QdimacsError(f"line {lineno}: variable {abs(lit)} is not quantified")
            if lit not in clause:
                clause.append(lit)
        clauses.append(tuple(clause))

    if header is None:
        raise QdimacsError("missing 'p cnf' header")
    if len(clauses) != header[1]:
        raise QdimacsError(f"header declares {header[1]} clauses, found {len(clauses)}")
    return Qbf(tuple(prefix), tuple(clauses), header[0])


def _int_tokens(tokens: Sequence[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise QdimacsError(f"line {lineno}: non-integer token in {' '.join(tokens)!r}") from None


def serialize_qdimacs(q: Qbf) -> str:
    """Canonical QDIMACS: header, maximal quantifier blocks, clauses in stored order."""
    out = [f"p cnf {q.var_count} {q.clause_count}"]
    block: list[int] = []
    current = None
    for quant, v in q.prefix:
        if quant is not current and block:
            out.append(f"{current.value} {' '.join(map(str, block))} 0")
            block = []
        current = quant
        block.append(v)
    if block:
        out.append(f"{current.value} {' '.join(map(str, block))} 0")
    for clause in q.matrix:
        out.append(" ".join(map(str, (*clause, 0))))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Substitution


def simplify(q: Qbf, var: int, value: int) -> Qbf:
    """Assign ``value`` to the head prefix variable ``var`` and return the residual.

    Satisfied clauses are dropped and the falsified literal is deleted from the
    rest. Empty matrices and empty clauses are kept as-is.
    """
    if not q.prefix or q.prefix[0][1] != var:
        raise ValueError(f"variable {var} is not the head of the prefix")
    if value not in (0, 1):
        raise ValueError(f"value must be 0 or 1, got {value!r}")
    true_lit = var if value else -var
    matrix = tuple(
        tuple(l for l in c if l != -true_lit) for c in q.matrix if true_lit not in c
    )
    return Qbf(q.prefix[1:], matrix, q.var_count)


# ---------------------------------------------------------------------------
# Brute-force oracle
#
# A residual reached by assigning the first ``depth`` prefix variables is fully
# described by the set of clauses not yet satisfied: each such clause keeps
# exactly its literals over the unassigned variables. States are therefore
# memoized on (depth, alive-clause bitmask).


class _Compiled:
    def __init__(self, q: Qbf, bound: int):
        if q.num_quantified > bound:
            raise OracleBoundError(
                f"{q.num_quantified} quantified variables exceeds oracle bound {bound}"
            )
        self.exists = [quant is Quantifier.EXISTS for quant, _ in q.prefix]
        pos = {v: i for i, (_, v) in enumerate(q.prefix)}
        n = len(q.prefix)
        # sat[d][b]: clauses satisfied by setting variable at depth d to b
        self.sat = [[0, 0] for _ in range(n)]
        self.last = []  # depth of the deepest literal per clause, -1 for empty clauses
        for ci, clause in enumerate(q.matrix):
            for lit in clause:
                d = pos[abs(lit)]
                self.sat[d][1 if lit > 0 else 0] |= 1 << ci
            self.last.append(max((pos[abs(l)] for l in clause), default=-1))
        # dead[d]: clauses whose literals all sit at depth < d
        self.dead = [sum(1 << ci for ci, m in enumerate(self.last) if m < d) for d in range(n + 1)]
        self.all = (1 << len(q.matrix)) - 1
        self.n = n

    def terminal(self, depth: int, alive: int) -> Optional[bool]:
        if alive == 0:
            return True
        if alive & self.dead[depth]:
            return False
        return None


def oracle_truth(q: Qbf, bound: int = DEFAULT_ORACLE_BOUND) -> bool:
    """Exact truth value of ``q`` by exhaustive (memoized) quantifier expansion."""
    comp = _Compiled(q, bound)

    @lru_cache(maxsize=None)
    def value(depth: int, alive: int) -> bool:
        t = comp.terminal(depth, alive)
        if t is not None:
            return t
        branches = (value(depth + 1, alive & ~comp.sat[depth][b]) for b in (0, 1))
        return any(branches) if comp.exists[depth] else all(branches)

    return value(0, comp.all)


def oracle_policy(q: Qbf, bound: int = DEFAULT_ORACLE_BOUND) -> int:
    """A winning value for the head variable's owner, or 0 if the owner is lost."""
    if q.is_decided() or not q.prefix:
        raise ValueError("oracle_policy needs a nonterminal formula")
    quant, var = q.head
    want = quant is Quantifier.EXISTS
    for b in (0, 1):
        if oracle_truth(simplify(q, var, b), bound) == want:
            return b
    return 0


def count_game_states(q: Qbf, bound: int = DEFAULT_ORACLE_BOUND) -> int:
    """Number of nodes in the game tree, stopping at decided formulas."""
    comp = _Compiled(q, bound)

    @lru_cache(maxsize=None)
    def count(depth: int, alive: int) -> int:
        if depth == comp.n or comp.terminal(depth, alive) is not None:
            return 1
        return 1 + sum(count(depth + 1, alive & ~comp.sat[depth][b]) for b in (0, 1))

    return count(0, comp.all)


# ---------------------------------------------------------------------------
# Random instances


def random_qbf(
    num_vars: int,
    num_clauses: int,
    seed: int,
    target_truth: Optional[bool] = None,
    *,
    min_width: int = 2,
    max_width: int = 3,
    alternation: Optional[float] = None,
    max_tries: int = DEFAULT_REJECTION_TRIES,
    oracle_bound: int = DEFAULT_ORACLE_BOUND,
) -> Qbf:
    """Sample a random prenex-CNF QBF over variables ``1..num_vars``.

    Quantifiers are drawn uniformly per variable; with ``alternation=p`` the
    quantifier instead flips from the previous one with probability ``p``.
    Clauses use ``min_width..max_width`` distinct variables with random
    polarities, so none are tautological. When ``target_truth`` is given the
    sampler rejects until the oracle agrees.
    """
    if num_vars < 1 or num_clauses < 1:
        raise ValueError("num_vars and num_clauses must be positive")
    if not 1 <= min_width <= max_width:
        raise ValueError("need 1 <= min_width <= max_width")
    rng = random.Random(seed)
    for _ in range(max_tries):
        q = _sample(rng, num_vars, num_clauses, min_width, min(max_width, num_vars), alternation)
        if target_truth is None or oracle_truth(q, oracle_bound) == target_truth:
            return q
    raise RuntimeError(f"no instance with truth={target_truth} after {max_tries} tries")


def _sample(rng, num_vars, num_clauses, min_width, max_width, alternation):
    prefix = []
    quant = None
    for v in range(1, num_vars + 1):
        if alternation is None or quant is None:
            quant = rng.choice((Quantifier.EXISTS, Quantifier.FORALL))
        elif rng.random() < alternation:
            quant = Quantifier.FORALL if quant is Quantifier.EXISTS else Quantifier.EXISTS
        prefix.append((quant, v))
    matrix = []
    for _ in range(num_clauses):
        width = rng.randint(min(min_width, max_width), max_width)
        chosen = sorted(rng.sample(range(1, num_vars + 1), width))
        matrix.append(tuple(v if rng.random() < 0.5 else -v for v in chosen))
    return Qbf(tuple(prefix), tuple(matrix), num_vars)
