"""Schoolbook multiplier circuits built from AND gates and full adders.

The multiplier for a `p_width` x `q_width` bit product is the classic
array: one AND gate per partial-product bit, then per-column reduction of
the partial products with chains of full adders.  Columns that are left
with exactly two bits reuse a full adder with its third input tied to the
shared constant-zero node, so the netlist needs only the two gate kinds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

AND = "AND"
FULL_ADDER = "FULL_ADDER"

#: Name of the shared constant-0 node used to pad two-input adder slots.
ZERO_NODE = "zero"


@dataclass(frozen=True)
class Gate:
    """One gate instance.

    Terminal order is ``(a, b, out)`` for AND and
    ``(a, b, cin, sum, cout)`` for FULL_ADDER.
    """

    kind: str
    terms: tuple[str, ...]

    def __post_init__(self):
        if self.kind == AND:
            if len(self.terms) != 3:
                raise ValueError("AND gate takes terminals (a, b, out)")
        elif self.kind == FULL_ADDER:
            if len(self.terms) != 5:
                raise ValueError("FULL_ADDER takes terminals (a, b, cin, sum, cout)")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")


@dataclass
class GateNetlist:
    p_width: int
    q_width: int
    gates: list[Gate]
    nodes: list[str]
    p_bits: list[str]
    q_bits: list[str]
    product_bits: list[str]
    #: Carry nodes that would land beyond the product register; they are
    #: forced to 0 when the netlist is encoded (p*q < 2**(p_width+q_width)).
    overflow_carries: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("node names are not unique")
        known = set(self.nodes)
        for g in self.gates:
            for t in g.terms:
                if t not in known:
                    raise ValueError(f"gate terminal {t!r} references no node")
        if len(self.product_bits) != self.p_width + self.q_width:
            raise ValueError("product register width must equal p_width + q_width")


def build_multiplier(p_width: int, q_width: int) -> GateNetlist:
    """Build the array multiplier netlist for factors of the given widths.

    Node naming is deterministic: factor bits ``p0..``/``q0..`` (LSB
    first), partial products ``pp{i}_{j}``, intermediate column sums
    ``s{k}_{t}``, carries into column ``k`` named ``c{k}_{t}``, and the
    final bit of column ``k`` named ``out{k}`` when it is produced by an
    adder.  Widths below 2 are rejected (a 1-bit factor is fixed to 1 by
    the forced leading bit, which makes the instance trivial).
    """
    if p_width < 2 or q_width < 2:
        raise ValueError("factor widths must be at least 2 bits")
    width = p_width + q_width
    p_bits = [f"p{i}" for i in range(p_width)]
    q_bits = [f"q{j}" for j in range(q_width)]

    gates: list[Gate] = []
    buckets: list[list[str]] = [[] for _ in range(width)]
    pp_nodes: list[str] = []
    for i in range(p_width):
        for j in range(q_width):
            pp = f"pp{i}_{j}"
            pp_nodes.append(pp)
            gates.append(Gate(AND, (p_bits[i], q_bits[j], pp)))
            buckets[i + j].append(pp)

    adder_nodes: list[str] = []
    product_bits: list[str] = []
    overflow: list[str] = []
    carries_into = [0] * (width + 1)
    sums_in = [0] * width
    zero_used = False

    for k in range(width):
        b = buckets[k]
        final_bit = None
        while len(b) > 1:
            if len(b) >= 3:
                a1, a2, a3 = b.pop(0), b.pop(0), b.pop(0)
            else:
                a1, a2 = b.pop(0), b.pop(0)
                a3 = ZERO_NODE
                zero_used = True
            final = not b
            if final:
                s = f"out{k}"
                final_bit = s
            else:
                s = f"s{k}_{sums_in[k]}"
                sums_in[k] += 1
            c = f"c{k + 1}_{carries_into[k + 1]}"
            carries_into[k + 1] += 1
            gates.append(Gate(FULL_ADDER, (a1, a2, a3, s, c)))
            adder_nodes += [s, c]
            if k + 1 < width:
                buckets[k + 1].append(c)
            else:
                overflow.append(c)
            if not final:
                b.append(s)
        if final_bit is not None:
            product_bits.append(final_bit)
        elif b:
            product_bits.append(b[0])
        else:
            # Structurally impossible to raise this bit; alias it to zero.
            product_bits.append(ZERO_NODE)
            zero_used = True

    nodes = p_bits + q_bits + pp_nodes + adder_nodes
    if zero_used:
        nodes.append(ZERO_NODE)
    netlist = GateNetlist(
        p_width=p_width,
        q_width=q_width,
        gates=gates,
        nodes=nodes,
        p_bits=p_bits,
        q_bits=q_bits,
        product_bits=product_bits,
        overflow_carries=overflow,
    )
    netlist.validate()
    return netlist


def netlist_to_text(netlist: GateNetlist) -> str:
    """Dump the netlist as line-oriented text, one gate per line."""
    lines = [f"{g.kind} {' '.join(g.terms)}" for g in netlist.gates]
    return "\n".join(lines) + "\n"
