"""Block segmentation and edge recovery against hand-enumerated ground truth."""
from contractlens.cfg import EdgeKind, build_cfg, emit_dot, resolve_edges, segment_blocks
from contractlens.disasm import decode

from helpers import asm, parse_dot

U, CT, CF, CALL = (EdgeKind.Unconditional, EdgeKind.ConditionalTrue,
                   EdgeKind.ConditionalFalse, EdgeKind.Call)


def blocks_of(code: bytes):
    return segment_blocks(decode(code))


def test_jump_then_jumpdest_splits_into_two_blocks():
    code = asm("PUSH1 0x03", "JUMP", "JUMPDEST", "STOP")
    blocks = blocks_of(code)
    assert [[i.opcode.mnemonic for i in b.instructions] for b in blocks] == [
        ["PUSH1", "JUMP"], ["JUMPDEST", "STOP"]]
    assert blocks[0].start_offset == 0 and blocks[0].end_offset == 3
    assert blocks[1].start_offset == 3 and blocks[1].end_offset == 5
    assert blocks[1].is_jumpdest_entry and not blocks[0].is_jumpdest_entry


def test_straight_line_is_one_block():
    blocks = blocks_of(asm("ADD", "MUL", "STOP"))
    assert len(blocks) == 1
    assert len(blocks[0].instructions) == 3


def test_jumpi_fixture_three_blocks():
    # offsets: 0 PUSH1, 2 PUSH1, 4 JUMPI | 5 PUSH1, 7 STOP | 8 JUMPDEST, 9 STOP
    code = asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "PUSH1 0x00", "STOP",
               "JUMPDEST", "STOP")
    blocks = blocks_of(code)
    assert [(b.start_offset, b.end_offset) for b in blocks] == [(0, 5), (5, 8), (8, 10)]


def test_partition_property():
    code = asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "PUSH1 0x00", "STOP",
               "JUMPDEST", "PUSH1 0x02", "ADD", "STOP")
    instructions = decode(code)
    blocks = segment_blocks(instructions)
    assert sum(len(b.instructions) for b in blocks) == len(instructions)
    seen = [i.offset for b in blocks for i in b.instructions]
    assert seen == [i.offset for i in instructions]


def test_empty_input():
    assert segment_blocks([]) == []


def test_unconditional_jump_edge():
    code = asm("PUSH1 0x03", "JUMP", "JUMPDEST", "STOP")
    g = build_cfg(code)
    assert g.edges == {(0, U, 1)}
    assert g.diagnostics == []


def test_jumpi_true_and_false_edges():
    code = asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "PUSH1 0x00", "STOP",
               "JUMPDEST", "STOP")
    g = build_cfg(code)
    assert g.edges == {(0, CT, 2), (0, CF, 1)}
    false_edges = [(s, t) for s, k, t in g.edges if k is CF]
    assert false_edges == [(0, 1)]  # exactly one, to the fall-through block


def test_call_mid_block_records_self_edge():
    code = asm("GAS", "CALL", "POP", "STOP")
    g = build_cfg(code)
    assert g.edges == {(0, CALL, 0)}


def test_call_at_block_end_targets_next_block():
    code = asm("GAS", "CALL", "JUMPDEST", "STOP")
    g = build_cfg(code)
    assert (0, CALL, 1) in g.edges


def test_fall_through_edge_into_jumpdest():
    code = asm("ADD", "JUMPDEST", "STOP")
    g = build_cfg(code)
    assert g.edges == {(0, U, 1)}


def test_unresolved_jump_yields_diagnostic_not_edge():
    code = asm("CALLDATALOAD", "JUMP", "JUMPDEST", "STOP")
    g = build_cfg(code)
    assert g.edges == set()
    assert [d.kind for d in g.diagnostics] == ["unresolved-jump"]
    assert g.diagnostics[0].offset == 1


def test_jump_to_non_jumpdest_yields_diagnostic():
    code = asm("PUSH1 0x03", "JUMP", "STOP")
    g = build_cfg(code)
    assert g.edges == set()
    assert [d.kind for d in g.diagnostics] == ["target-not-jumpdest"]


def test_unreachable_trailing_block_is_kept():
    # STOP ends the reachable part; the trailing bytes stay as isolated nodes
    code = asm("STOP") + bytes([0x0C, 0x0C])
    g = build_cfg(code)
    assert len(g.blocks) >= 2
    assert all(isinstance(b.id, int) for b in g.blocks)


def test_contract_name_suffix():
    g = build_cfg(asm("STOP"), contract_name="Token.sol")
    assert g.contract_name == "Token.sol"
    g2 = build_cfg(asm("STOP"), contract_name="Token")
    assert g2.contract_name == "Token.sol"


def test_edge_endpoints_always_exist():
    code = asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "PUSH1 0x00", "STOP",
               "JUMPDEST", "GAS", "CALL", "STOP")
    g = build_cfg(code)
    ids = {b.id for b in g.blocks}
    for s, _, t in g.edges:
        assert s in ids and t in ids


# -- DOT output -------------------------------------------------------------

def test_dot_single_block():
    g = build_cfg(asm("STOP"))
    name, nodes, edges = parse_dot(emit_dot(g))
    assert name == "cfg"
    assert set(nodes) == {"node", "0"}  # "node" is the default-attrs statement
    assert edges == []


def test_dot_edge_colors_match_kinds():
    code = asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "PUSH1 0x00", "STOP",
               "JUMPDEST", "STOP")
    g = build_cfg(code)
    _, _, edges = parse_dot(emit_dot(g))
    colors = {(s, d): a["color"] for s, d, a in edges}
    assert colors[("0", "2")] == "green"
    assert colors[("0", "1")] == "red"


def test_dot_deterministic():
    code = asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "GAS", "CALL", "STOP",
               "JUMPDEST", "PUSH1 0x00", "JUMP")
    a = emit_dot(build_cfg(code))
    b = emit_dot(build_cfg(code))
    assert a == b


def test_dot_reparses_for_every_fixture():
    fixtures = [
        asm("STOP"),
        asm("PUSH1 0x03", "JUMP", "JUMPDEST", "STOP"),
        asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "PUSH1 0x00", "STOP",
            "JUMPDEST", "STOP"),
        asm("GAS", "CALL", "POP", "STOP"),
        asm("ADD", "JUMPDEST", "STOP"),
    ]
    for code in fixtures:
        g = build_cfg(code)
        name, nodes, edges = parse_dot(emit_dot(g))
        node_ids = {k for k in nodes if k != "node"}
        assert node_ids == {str(b.id) for b in g.blocks}
        assert len(edges) == len(g.edges)


def test_resolve_edges_accepts_blocks_directly():
    blocks = blocks_of(asm("PUSH1 0x03", "JUMP", "JUMPDEST", "STOP"))
    g = resolve_edges(blocks, contract_name="X.sol")
    assert g.contract_name == "X.sol"
    assert g.edges == {(0, U, 1)}
