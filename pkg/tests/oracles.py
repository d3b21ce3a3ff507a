"""Independent oracles used by the tests: nothing here touches the dynamics."""

from __future__ import annotations

import math
from itertools import product

from memflow.cnf import ClauseSystem
from memflow.netlist import AND, FULL_ADDER, ZERO_NODE, GateNetlist


def trial_division(n: int) -> tuple[int, int]:
    """Smallest non-trivial factor pair of n."""
    for p in range(2, int(math.isqrt(n)) + 1):
        if n % p == 0:
            return p, n // p
    raise ValueError(f"{n} is prime")


def factor_pairs(n: int) -> set[tuple[int, int]]:
    out = set()
    for p in range(2, int(math.isqrt(n)) + 1):
        if n % p == 0:
            out.add((p, n // p))
            out.add((n // p, p))
    return out


def enumerate_solutions(cs: ClauseSystem, limit_vars: int = 24) -> list[list[bool]]:
    """Exhaustively enumerate all full assignments satisfying clauses and units."""
    free = cs.free_vars
    if len(free) > limit_vars:
        raise ValueError(f"{len(free)} free variables is too many to enumerate")
    base = [False] * cs.num_vars
    for var, value in cs.units.items():
        base[var] = value
    solutions = []
    for bits in product((False, True), repeat=len(free)):
        assignment = list(base)
        for var, b in zip(free, bits):
            assignment[var] = b
        ok = True
        for clause in cs.clauses:
            if not any(assignment[v] == (pol > 0) for v, pol in clause):
                ok = False
                break
        if ok:
            solutions.append(assignment)
    return solutions


def evaluate_netlist(netlist: GateNetlist, p: int, q: int) -> dict[str, bool]:
    """Forward-evaluate every node of the multiplier for given factor values.

    The gate list is in topological order by construction.
    """
    values: dict[str, bool] = {ZERO_NODE: False}
    for i, name in enumerate(netlist.p_bits):
        values[name] = bool((p >> i) & 1)
    for j, name in enumerate(netlist.q_bits):
        values[name] = bool((q >> j) & 1)
    for gate in netlist.gates:
        if gate.kind == AND:
            a, b, z = gate.terms
            values[z] = values[a] and values[b]
        elif gate.kind == FULL_ADDER:
            a, b, cin, s, cout = gate.terms
            total = int(values[a]) + int(values[b]) + int(values[cin])
            values[s] = bool(total % 2)
            values[cout] = total >= 2
    return values


def netlist_product(netlist: GateNetlist, p: int, q: int) -> int:
    values = evaluate_netlist(netlist, p, q)
    out = 0
    for k, name in enumerate(netlist.product_bits):
        if values[name]:
            out |= 1 << k
    return out


def logistic_closed_form(x0: float, t: float) -> float:
    """Solution of dx/dt = x(1-x) from x(0) = x0."""
    return x0 * math.exp(t) / (1.0 + x0 * (math.exp(t) - 1.0))


def logistic_crossing_sigma(t: float, r: float) -> float:
    """Moduli location where the seeded logistic trajectory sits at 1/2 at time t.

    Seed amplitude is r*exp(sigma); solving logistic_closed_form = 1/2 gives
    sigma = -ln(r) - ln(1 + e^t).
    """
    return -math.log(r) - math.log1p(math.exp(t))
