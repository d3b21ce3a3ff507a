import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memflow.cnf import (
    ClauseSystem,
    DimacsError,
    EncodingError,
    decode_factors,
    encode_cnf,
    evaluate_assignment,
    export_dimacs,
    parse_dimacs,
)
from memflow.netlist import build_multiplier

from oracles import enumerate_solutions, evaluate_netlist, factor_pairs, netlist_product


def test_and_gate_unit_propagation():
    # single AND gate, output fixed true: the only solutions have a = b = 1
    cs = ClauseSystem(
        num_vars=3,
        clauses=[((2, -1), (0, 1)), ((2, -1), (1, 1)), ((2, 1), (0, -1), (1, -1))],
        units={2: True},
        node_map={0: "a", 1: "b", 2: "z"},
    )
    cs.validate()
    solutions = enumerate_solutions(cs)
    assert solutions == [[True, True, True]]


def test_n15_exhaustive_solutions_decode_to_3x5(system_15):
    solutions = enumerate_solutions(system_15)
    assert len(solutions) >= 1
    for assignment in solutions:
        p, q = decode_factors(system_15, assignment)
        assert p * q == 15
        assert (p, q) == (3, 5)


@pytest.mark.parametrize("n,pw,qw", [(21, 2, 3), (35, 3, 3), (77, 3, 4)])
def test_small_instances_decode_to_true_factors(n, pw, qw):
    cs = encode_cnf(build_multiplier(pw, qw), n)
    solutions = enumerate_solutions(cs)
    assert solutions
    for assignment in solutions:
        p, q = decode_factors(cs, assignment)
        assert p * q == n
        assert (p, q) in factor_pairs(n)


def test_19bit_instance_known_assignment_satisfies():
    # forward-evaluate the circuit at p=499, q=997 and check the clause system
    net = build_multiplier(9, 10)
    cs = encode_cnf(net, 497503)
    values = evaluate_netlist(net, 499, 997)
    assert netlist_product(net, 499, 997) == 497503
    index = {name: var for var, name in cs.node_map.items()}
    assignment = [False] * cs.num_vars
    for name, value in values.items():
        assignment[index[name]] = value
    assert evaluate_assignment(cs, assignment)
    assert decode_factors(cs, assignment) == (499, 997)


def test_multiplier_forward_evaluation_matches_arithmetic():
    net = build_multiplier(3, 4)
    for p in range(8):
        for q in range(16):
            assert netlist_product(net, p, q) == p * q


def test_even_n_keeps_lsb_free():
    net = build_multiplier(2, 2)
    cs = encode_cnf(net, 4)
    index = {name: var for var, name in cs.node_map.items()}
    assert index["p0"] not in cs.units
    solutions = enumerate_solutions(cs)
    assert solutions
    assert all(decode_factors(cs, a) == (2, 2) for a in solutions)


def test_unrepresentable_n_rejected():
    net = build_multiplier(2, 2)
    with pytest.raises(EncodingError):
        encode_cnf(net, 1 << 5)
    with pytest.raises(EncodingError):
        encode_cnf(net, 1)


@settings(max_examples=20, deadline=None)
@given(
    pw=st.integers(min_value=2, max_value=4),
    qw=st.integers(min_value=2, max_value=4),
    data=st.data(),
)
def test_encoding_invariants(pw, qw, data):
    n = data.draw(st.integers(min_value=2, max_value=(1 << (pw + qw)) - 1))
    cs = encode_cnf(build_multiplier(pw, qw), n)
    cs.validate()  # no empty clause, no double polarity, coverage, ranges
    assert all(len(c) >= 2 for c in cs.clauses)
    # units: product bits plus forced factor bits are all present
    assert len(cs.units) >= pw + qw


def test_dimacs_roundtrip_identity(system_15):
    text = export_dimacs(system_15)
    back = parse_dimacs(text)
    assert back == system_15
    # header counts match the content
    header = next(line for line in text.splitlines() if line.startswith("p cnf"))
    _, _, nv, nc = header.split()
    assert int(nv) == system_15.num_vars
    assert int(nc) == len(system_15.clauses) + len(system_15.units)


def test_dimacs_roundtrip_is_stable_text(system_35):
    text = export_dimacs(system_35)
    assert export_dimacs(parse_dimacs(text)) == text


def test_parse_rejects_empty_clause():
    with pytest.raises(DimacsError) as err:
        parse_dimacs("p cnf 2 1\n0\n")
    assert err.value.line == 2


def test_parse_rejects_malformed_header():
    with pytest.raises(DimacsError):
        parse_dimacs("p cnf two 3\n1 0\n")
    with pytest.raises(DimacsError):
        parse_dimacs("p dnf 2 1\n1 0\n")


def test_parse_rejects_out_of_range_literal():
    with pytest.raises(DimacsError) as err:
        parse_dimacs("p cnf 2 1\n1 3 0\n")
    assert err.value.line == 2


def test_parse_rejects_clause_count_mismatch():
    with pytest.raises(DimacsError):
        parse_dimacs("p cnf 2 2\n1 2 0\n")


def test_parse_rejects_conflicting_units():
    with pytest.raises(DimacsError):
        parse_dimacs("p cnf 1 2\n1 0\n-1 0\n")


def test_parse_keeps_clause_order():
    text = "p cnf 3 2\n1 -2 0\n2 3 0\n"
    cs = parse_dimacs(text)
    assert cs.clauses == [((0, 1), (1, -1)), ((1, 1), (2, 1))]


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_dimacs_roundtrip_random_systems(data):
    num_vars = data.draw(st.integers(min_value=2, max_value=12))
    n_clauses = data.draw(st.integers(min_value=1, max_value=10))
    clauses = []
    for _ in range(n_clauses):
        width = data.draw(st.integers(min_value=2, max_value=min(4, num_vars)))
        vars_ = data.draw(
            st.lists(st.integers(0, num_vars - 1), min_size=width, max_size=width, unique=True)
        )
        clause = tuple((v, data.draw(st.sampled_from((1, -1)))) for v in vars_)
        clauses.append(clause)
    used = {v for c in clauses for v, _ in c}
    units = {v: data.draw(st.booleans()) for v in range(num_vars) if v not in used}
    # a clause variable may also be unit-pinned
    for v in sorted(used):
        if data.draw(st.booleans()) and len(units) < num_vars - 1:
            units[v] = data.draw(st.booleans())
    cs = ClauseSystem(num_vars=num_vars, clauses=clauses, units=units,
                      node_map={v: f"n{v}" for v in range(num_vars)})
    cs.validate()
    assert parse_dimacs(export_dimacs(cs)) == cs


def test_validate_rejects_double_polarity():
    cs = ClauseSystem(num_vars=2, clauses=[((0, 1), (0, -1))], units={1: True}, node_map={})
    with pytest.raises(ValueError):
        cs.validate()


def test_decode_factors_requires_register_names():
    cs = parse_dimacs("p cnf 2 1\n1 2 0\n")
    with pytest.raises(ValueError):
        decode_factors(cs, [True, True])
