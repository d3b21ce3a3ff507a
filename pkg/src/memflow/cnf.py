"""Clause-system encoding of gate netlists and DIMACS import/export.

A :class:`ClauseSystem` holds plain disjunctive clauses over 0-based
variable indices plus a set of unit-fixed variables (the product bits of
the number being factorized, the forced leading/trailing factor bits and
the constant-zero node).  Units are kept separate from the clause list:
they are pinned inputs, not dynamical variables, and the clause list is
never simplified against them so that the literal graph reflects the
circuit as built.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .netlist import AND, FULL_ADDER, ZERO_NODE, GateNetlist

Literal = tuple[int, int]  # (variable index, polarity +1/-1)
Clause = tuple[Literal, ...]


class EncodingError(ValueError):
    pass


class DimacsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class ClauseSystem:
    num_vars: int
    clauses: list[Clause]
    units: dict[int, bool]
    node_map: dict[int, str] = field(default_factory=dict)

    def validate(self) -> None:
        seen = [False] * self.num_vars
        for i, clause in enumerate(self.clauses):
            if not clause:
                raise ValueError(f"clause {i} is empty")
            polarities: dict[int, int] = {}
            for var, pol in clause:
                if not (0 <= var < self.num_vars):
                    raise ValueError(f"clause {i}: variable {var} out of range")
                if pol not in (1, -1):
                    raise ValueError(f"clause {i}: polarity must be +1 or -1")
                if polarities.get(var, pol) != pol:
                    raise ValueError(f"clause {i}: contains both polarities of variable {var}")
                polarities[var] = pol
                seen[var] = True
        for var in self.units:
            if not (0 <= var < self.num_vars):
                raise ValueError(f"unit variable {var} out of range")
            seen[var] = True
        missing = [v for v, s in enumerate(seen) if not s]
        if missing:
            raise ValueError(f"variables appear in no clause and no unit: {missing}")

    @property
    def free_vars(self) -> list[int]:
        return [v for v in range(self.num_vars) if v not in self.units]


def _and_clauses(a: int, b: int, z: int) -> list[Clause]:
    # z <=> a AND b
    return [
        ((z, -1), (a, 1)),
        ((z, -1), (b, 1)),
        ((z, 1), (a, -1), (b, -1)),
    ]


def _xor3_clauses(s: int, a: int, b: int, c: int) -> list[Clause]:
    # s <=> a XOR b XOR c: forbid the eight odd-parity patterns of (s,a,b,c)
    return [
        ((s, -1), (a, 1), (b, 1), (c, 1)),
        ((s, -1), (a, -1), (b, -1), (c, 1)),
        ((s, -1), (a, -1), (b, 1), (c, -1)),
        ((s, -1), (a, 1), (b, -1), (c, -1)),
        ((s, 1), (a, -1), (b, -1), (c, -1)),
        ((s, 1), (a, 1), (b, 1), (c, -1)),
        ((s, 1), (a, 1), (b, -1), (c, 1)),
        ((s, 1), (a, -1), (b, 1), (c, 1)),
    ]


def _maj3_clauses(z: int, a: int, b: int, c: int) -> list[Clause]:
    # z <=> at least two of (a, b, c)
    return [
        ((z, 1), (a, -1), (b, -1)),
        ((z, 1), (a, -1), (c, -1)),
        ((z, 1), (b, -1), (c, -1)),
        ((z, -1), (a, 1), (b, 1)),
        ((z, -1), (a, 1), (c, 1)),
        ((z, -1), (b, 1), (c, 1)),
    ]


def encode_cnf(netlist: GateNetlist, n: int) -> ClauseSystem:
    """Encode the netlist with the product register fixed to ``n``.

    Gates become their standard clause sets (AND directly, the full adder
    as an XOR3 sum relation plus a MAJ3 carry relation).  Units fix the
    product bits of ``n``, force the leading bit of each factor to 1, and
    for odd ``n`` force both factor LSBs to 1.  ``n`` with no
    factorization at the given widths is accepted; the clause system is
    then unsatisfiable and the dynamics will simply never terminate with
    a solution.
    """
    width = netlist.p_width + netlist.q_width
    if n < 2:
        raise EncodingError(f"n={n} is not a valid product")
    if n.bit_length() > width:
        raise EncodingError(f"n={n} does not fit in {width} product bits")

    index = {name: i for i, name in enumerate(netlist.nodes)}
    clauses: list[Clause] = []
    for g in netlist.gates:
        t = [index[name] for name in g.terms]
        if g.kind == AND:
            a, b, z = t
            clauses += _and_clauses(a, b, z)
        elif g.kind == FULL_ADDER:
            a, b, cin, s, cout = t
            clauses += _xor3_clauses(s, a, b, cin)
            clauses += _maj3_clauses(cout, a, b, cin)
        else:  # pragma: no cover - Gate rejects unknown kinds
            raise EncodingError(f"unknown gate kind {g.kind!r}")

    units: dict[int, bool] = {}

    def add_unit(name: str, value: bool) -> None:
        var = index[name]
        if var in units and units[var] != value:
            raise EncodingError(
                f"inconsistent unit for node {name!r}: n={n} is not representable by this circuit"
            )
        units[var] = value

    for k, name in enumerate(netlist.product_bits):
        add_unit(name, bool((n >> k) & 1))
    add_unit(netlist.p_bits[-1], True)
    add_unit(netlist.q_bits[-1], True)
    if n % 2 == 1:
        add_unit(netlist.p_bits[0], True)
        add_unit(netlist.q_bits[0], True)
    if ZERO_NODE in index:
        add_unit(ZERO_NODE, False)
    for name in netlist.overflow_carries:
        add_unit(name, False)

    cs = ClauseSystem(
        num_vars=len(netlist.nodes),
        clauses=clauses,
        units=units,
        node_map={i: name for i, name in enumerate(netlist.nodes)},
    )
    cs.validate()
    return cs


def evaluate_assignment(cs: ClauseSystem, assignment) -> bool:
    """Exact Boolean check of a full assignment against clauses and units."""
    if len(assignment) != cs.num_vars:
        raise ValueError("assignment length does not match variable count")
    for var, value in cs.units.items():
        if bool(assignment[var]) != value:
            return False
    for clause in cs.clauses:
        if not any(bool(assignment[var]) == (pol > 0) for var, pol in clause):
            return False
    return True


_P_BIT = re.compile(r"p(\d+)")
_Q_BIT = re.compile(r"q(\d+)")


def decode_factors(cs: ClauseSystem, assignment) -> tuple[int, int]:
    """Read the two factor registers out of a full assignment.

    Relies on the ``p{i}``/``q{i}`` node names carried by ``node_map``;
    raises if the clause system has no factor registers (e.g. a foreign
    DIMACS file).
    """
    p = q = 0
    found = False
    for var, name in cs.node_map.items():
        m = _P_BIT.fullmatch(name)
        if m and bool(assignment[var]):
            p |= 1 << int(m.group(1))
            found = True
        m = _Q_BIT.fullmatch(name)
        if m and bool(assignment[var]):
            q |= 1 << int(m.group(1))
            found = True
    if not found:
        raise ValueError("clause system carries no factor register node names")
    return p, q


def export_dimacs(cs: ClauseSystem) -> str:
    """Serialize to DIMACS CNF.

    Node names go into ``c node`` comment lines, units become unit
    clauses (written first, in ascending variable order), and the clause
    list follows in its stored order, so parse(export(cs)) == cs.
    """
    lines = []
    for var in sorted(cs.node_map):
        lines.append(f"c node {var + 1} {cs.node_map[var]}")
    total = len(cs.units) + len(cs.clauses)
    lines.append(f"p cnf {cs.num_vars} {total}")
    for var in sorted(cs.units):
        lit = var + 1 if cs.units[var] else -(var + 1)
        lines.append(f"{lit} 0")
    for clause in cs.clauses:
        lines.append(" ".join(str((v + 1) * s) for v, s in clause) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> ClauseSystem:
    num_vars: int | None = None
    expected_clauses = 0
    clauses: list[Clause] = []
    units: dict[int, bool] = {}
    node_map: dict[int, str] = {}
    count = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 4 and parts[1] == "node":
                try:
                    var = int(parts[2]) - 1
                except ValueError:
                    raise DimacsError(f"malformed node comment {line!r}", lineno)
                node_map[var] = " ".join(parts[3:])
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError("duplicate problem header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", lineno)
            try:
                num_vars = int(parts[2])
                expected_clauses = int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", lineno)
            if num_vars < 0 or expected_clauses < 0:
                raise DimacsError("negative counts in header", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause before problem header", lineno)
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError:
            raise DimacsError(f"non-integer literal in {line!r}", lineno)
        if not values or values[-1] != 0:
            raise DimacsError("clause line must end with 0", lineno)
        lits = values[:-1]
        if 0 in lits:
            raise DimacsError("literal 0 inside clause", lineno)
        if not lits:
            raise DimacsError("empty clause", lineno)
        clause: list[Literal] = []
        for lit in lits:
            var = abs(lit) - 1
            if var >= num_vars:
                raise DimacsError(f"literal {lit} out of range (header declares {num_vars} variables)", lineno)
            clause.append((var, 1 if lit > 0 else -1))
        count += 1
        if len(clause) == 1:
            var, pol = clause[0]
            value = pol > 0
            if units.get(var, value) != value:
                raise DimacsError(f"conflicting unit clauses for variable {var + 1}", lineno)
            units[var] = value
        else:
            clauses.append(tuple(clause))

    if num_vars is None:
        raise DimacsError("missing problem header")
    if count != expected_clauses:
        raise DimacsError(f"header declares {expected_clauses} clauses but {count} were found")
    bad_names = [v for v in node_map if not (0 <= v < num_vars)]
    if bad_names:
        raise DimacsError(f"node comment for out-of-range variable {bad_names[0] + 1}")

    cs = ClauseSystem(num_vars=num_vars, clauses=clauses, units=units, node_map=node_map)
    cs.validate()
    return cs
