import pytest

from memflow.netlist import AND, FULL_ADDER, ZERO_NODE, Gate, build_multiplier, netlist_to_text


def count(netlist, kind):
    return sum(1 for g in netlist.gates if g.kind == kind)


def test_smallest_multiplier():
    net = build_multiplier(2, 2)
    assert count(net, AND) == 4
    assert count(net, FULL_ADDER) > 0
    assert len(net.product_bits) == 4


def test_4x4_gate_counts():
    net = build_multiplier(4, 4)
    assert count(net, AND) == 16
    assert count(net, FULL_ADDER) == 12


def test_19bit_product_register():
    net = build_multiplier(9, 10)
    assert count(net, AND) == 90
    assert len(net.product_bits) == 19  # 19-20 bit register


def test_product_width_always_sum_of_factor_widths():
    for pw, qw in [(2, 2), (2, 5), (3, 4), (5, 5), (6, 2)]:
        net = build_multiplier(pw, qw)
        assert len(net.product_bits) == pw + qw
        net.validate()


def test_deterministic_construction():
    a = build_multiplier(4, 5)
    b = build_multiplier(4, 5)
    assert a.nodes == b.nodes
    assert a.gates == b.gates
    assert a.product_bits == b.product_bits


def test_terminals_reference_existing_nodes():
    net = build_multiplier(3, 4)
    known = set(net.nodes)
    for g in net.gates:
        assert set(g.terms) <= known


def test_node_names_unique():
    net = build_multiplier(5, 5)
    assert len(set(net.nodes)) == len(net.nodes)


def test_rejects_degenerate_widths():
    with pytest.raises(ValueError):
        build_multiplier(1, 4)
    with pytest.raises(ValueError):
        build_multiplier(4, 1)


def test_gate_terminal_arity():
    with pytest.raises(ValueError):
        Gate(AND, ("a", "b"))
    with pytest.raises(ValueError):
        Gate(FULL_ADDER, ("a", "b", "c", "s"))
    with pytest.raises(ValueError):
        Gate("NAND", ("a", "b", "z"))


def test_text_dump_one_gate_per_line():
    net = build_multiplier(2, 2)
    text = netlist_to_text(net)
    lines = text.strip().split("\n")
    assert len(lines) == len(net.gates)
    first = lines[0].split()
    assert first[0] in (AND, FULL_ADDER)
    assert first[1:] == list(net.gates[0].terms)


def test_zero_node_shared_for_two_input_slots():
    net = build_multiplier(2, 2)
    assert ZERO_NODE in net.nodes
    fa_with_zero = [g for g in net.gates if g.kind == FULL_ADDER and ZERO_NODE in g.terms]
    assert fa_with_zero
