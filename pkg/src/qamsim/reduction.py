"""3SAT to SUBSET-SUM, with witness transport.

The classic digit-table construction in base 10: one digit column per
variable and per clause.  Every variable contributes two rows (one for each
truth value, marking the clauses that literal satisfies) and every clause
two unit slack rows.  The target has digit 1 in each variable column and 3
in each clause column.  Column sums never exceed 5, so base 10 admits no
carries and digit arithmetic is exact; a clause column reaches 3 exactly
when at least one of its literals is true (k true literal occurrences plus
0..2 slack covers 3 iff k >= 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

from .errors import GuardError
from .protocol import Instance, WitnessSubset

#: Brute-force assignment search is refused above this many variables.
VARIABLE_GUARD = 20


@dataclass(frozen=True)
class CNF:
    """A CNF formula: clauses are tuples of nonzero signed variable indices
    (positive literal i means variable i true)."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        if self.num_vars < 0:
            raise ValueError("variable count must be nonnegative")
        for clause in self.clauses:
            if len(clause) > 3:
                raise ValueError(f"clause {clause} has more than 3 literals")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range for {self.num_vars} variables")


@dataclass(frozen=True)
class RowRole:
    """Where one value of a reduced instance comes from.

    kind is "variable_true", "variable_false", "clause_slack", or "padding";
    index is the 1-based variable or clause; copy distinguishes the two
    slack rows of a clause.
    """

    kind: str
    index: int = 0
    copy: int = 0

    def __str__(self):
        if self.kind == "variable_true":
            return f"x{self.index}=true"
        if self.kind == "variable_false":
            return f"x{self.index}=false"
        if self.kind == "clause_slack":
            return f"clause{self.index}-slack{self.copy}"
        return "padding"


@dataclass(frozen=True)
class ReductionOutput:
    instance: Instance
    provenance: tuple[RowRole, ...]


def _column_value(digits: dict[int, int], num_cols: int) -> int:
    return sum(d * 10 ** (num_cols - 1 - col) for col, d in digits.items())


def reduce_3sat(cnf: CNF) -> ReductionOutput:
    """Build the SUBSET-SUM instance whose solvability matches
    satisfiability of `cnf`.

    Clauses must have 1 to 3 literals.  A formula with no variables and no
    clauses is satisfiable by convention and reduces to a trivially solvable
    instance.
    """
    for clause in cnf.clauses:
        if len(clause) == 0:
            raise ValueError("empty clause cannot be reduced (it is never satisfiable)")
    v, c = cnf.num_vars, len(cnf.clauses)
    cols = v + c
    if cols == 0:
        return ReductionOutput(Instance(0, (0,)), (RowRole("padding"),))

    values = []
    roles = []
    for i in range(1, v + 1):
        for kind, sign in (("variable_true", 1), ("variable_false", -1)):
            digits = {i - 1: 1}
            for j, clause in enumerate(cnf.clauses):
                hits = sum(1 for lit in clause if lit == sign * i)
                if hits:
                    digits[v + j] = hits
            values.append(_column_value(digits, cols))
            roles.append(RowRole(kind, i))
    for j in range(1, c + 1):
        for copy in (1, 2):
            values.append(_column_value({v + j - 1: 1}, cols))
            roles.append(RowRole("clause_slack", j, copy))

    target = _column_value(
        {col: (1 if col < v else 3) for col in range(cols)}, cols
    )
    return ReductionOutput(Instance(target, tuple(values)), tuple(roles))


def _true_occurrences(clause, assignment) -> int:
    return sum(
        1
        for lit in clause
        if (lit > 0 and assignment[lit - 1]) or (lit < 0 and not assignment[-lit - 1])
    )


def satisfies(cnf: CNF, assignment) -> bool:
    assignment = tuple(assignment)
    if len(assignment) != cnf.num_vars:
        raise ValueError(f"assignment length {len(assignment)} != {cnf.num_vars}")
    return all(_true_occurrences(clause, assignment) > 0 for clause in cnf.clauses)


def map_witness(cnf: CNF, assignment) -> WitnessSubset:
    """Turn a satisfying assignment into a subset selection for the reduced
    instance: the matching variable row per variable, plus exactly the slack
    rows that top each clause column up to 3."""
    assignment = tuple(assignment)
    if not satisfies(cnf, assignment):
        raise ValueError(f"assignment {assignment} does not satisfy the formula")
    out = reduce_3sat(cnf)
    selection = []
    for role in out.provenance:
        if role.kind == "variable_true":
            selection.append(assignment[role.index - 1])
        elif role.kind == "variable_false":
            selection.append(not assignment[role.index - 1])
        elif role.kind == "clause_slack":
            needed = 3 - _true_occurrences(cnf.clauses[role.index - 1], assignment)
            selection.append(role.copy <= needed)
        else:
            selection.append(False)
    return tuple(selection)


def brute_sat(cnf: CNF, guard: int = VARIABLE_GUARD):
    """Exhaustive satisfiability search; returns a satisfying assignment or
    None."""
    if cnf.num_vars > guard:
        raise GuardError(f"{cnf.num_vars} variables exceed the search guard {guard}")
    for bits in product((False, True), repeat=cnf.num_vars):
        if satisfies(cnf, bits):
            return list(bits)
    return None


def parse_dimacs(text: str) -> CNF:
    """Parse DIMACS CNF text: a "p cnf <vars> <clauses>" header, clauses as
    zero-terminated literal lines, 'c' comment lines ignored."""
    num_vars = None
    declared = None
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"line {lineno}: malformed problem line {line!r}")
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise ValueError(f"line {lineno}: malformed problem line {line!r}") from None
            continue
        if num_vars is None:
            raise ValueError(f"line {lineno}: clause before the problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ValueError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if num_vars is None:
        raise ValueError("missing problem line")
    if pending:
        raise ValueError("last clause is not zero-terminated")
    if declared is not None and declared != len(clauses):
        raise ValueError(f"header declares {declared} clauses, found {len(clauses)}")
    return CNF(num_vars, tuple(clauses))


def enumerate_small_cnfs(max_vars: int = 3, max_clauses: int = 3):
    """The fixed desk-scale family: for each variable count, every
    combination of up to `max_clauses` distinct clauses over 1..3 distinct
    variables, each variable positive or negated."""
    for v in range(1, max_vars + 1):
        pool = []
        for k in range(1, min(3, v) + 1):
            for vars_ in combinations(range(1, v + 1), k):
                for signs in product((1, -1), repeat=k):
                    pool.append(tuple(s * x for s, x in zip(signs, vars_)))
        for c in range(0, max_clauses + 1):
            for chosen in combinations(pool, c):
                yield CNF(v, chosen)
