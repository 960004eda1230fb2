"""Basic-block segmentation and typed control-flow edge recovery.

Blocks end after every terminator or conditional branch and start at every
JUMPDEST. Four edge kinds are recovered:

  Unconditional    direct jumps and straight-line fall-through
  ConditionalTrue  the taken path of a JUMPI
  ConditionalFalse the not-taken path of a JUMPI (always the fall-through)
  Call             a block contains a call-class instruction; control leaves
                   the contract and resumes at the call's fall-through

Jump targets are resolved only for the PUSH-constant-immediately-before-jump
pattern. Anything else is reported in the diagnostics list instead of
guessing: missing edges are acceptable, wrong edges are not.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .disasm import Instruction


class EdgeKind(enum.Enum):
    Unconditional = "unconditional"
    ConditionalTrue = "conditional-true"
    ConditionalFalse = "conditional-false"
    Call = "call"


#: DOT colors, one per edge kind.
EDGE_COLORS = {
    EdgeKind.Unconditional: "blue",
    EdgeKind.ConditionalTrue: "green",
    EdgeKind.ConditionalFalse: "red",
    EdgeKind.Call: "yellow",
}


@dataclass(frozen=True)
class BasicBlock:
    """Maximal straight-line instruction run.

    ``end_offset`` is exclusive (one past the last byte of the last
    instruction) so block byte spans partition the code.
    """
    id: int
    start_offset: int
    end_offset: int
    instructions: tuple[Instruction, ...]
    is_jumpdest_entry: bool

    @property
    def last(self) -> Instruction:
        return self.instructions[-1]


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # "unresolved-jump" | "target-not-jumpdest" | "missing-fall-through"
    offset: int
    detail: str = ""


@dataclass
class ControlFlowGraph:
    blocks: list[BasicBlock]
    edges: set[tuple[int, EdgeKind, int]]
    contract_name: str
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __post_init__(self):
        if not self.contract_name.endswith(".sol"):
            self.contract_name += ".sol"

    def block_at(self, offset: int) -> BasicBlock | None:
        for b in self.blocks:
            if b.start_offset == offset:
                return b
        return None

    def successors(self, block_id: int) -> list[tuple[EdgeKind, int]]:
        return sorted((k, t) for (s, k, t) in self.edges if s == block_id)


def segment_blocks(instructions: list[Instruction]) -> list[BasicBlock]:
    """Split an instruction stream into basic blocks ordered by offset."""
    blocks: list[BasicBlock] = []
    current: list[Instruction] = []

    def close():
        if current:
            blocks.append(BasicBlock(
                id=len(blocks),
                start_offset=current[0].offset,
                end_offset=current[-1].end_offset,
                instructions=tuple(current),
                is_jumpdest_entry=current[0].opcode.mnemonic == "JUMPDEST",
            ))
            current.clear()

    for ins in instructions:
        if ins.opcode.mnemonic == "JUMPDEST":
            close()
        current.append(ins)
        if ins.opcode.is_terminator or ins.opcode.is_conditional_branch:
            close()
    close()
    return blocks


def _constant_jump_target(block: BasicBlock) -> int | None:
    """Immediate of a PUSH directly before the block's final jump, if any."""
    if len(block.instructions) < 2:
        return None
    prev = block.instructions[-2]
    if prev.opcode.immediate_len > 0:  # only PUSH carries an immediate
        return int.from_bytes(prev.immediate, "big")
    return None


def resolve_edges(blocks: list[BasicBlock], contract_name: str = "contract.sol") -> ControlFlowGraph:
    """Recover the typed edge set for segmented blocks."""
    edges: set[tuple[int, EdgeKind, int]] = set()
    diags: list[Diagnostic] = []
    starts = {b.start_offset: b.id for b in blocks}
    jumpdest_starts = {b.start_offset for b in blocks if b.is_jumpdest_entry}

    def resolve(block: BasicBlock, jump: Instruction) -> int | None:
        target = _constant_jump_target(block)
        if target is None:
            diags.append(Diagnostic("unresolved-jump", jump.offset))
            return None
        if target not in jumpdest_starts:
            diags.append(Diagnostic(
                "target-not-jumpdest", jump.offset, f"target={target}"))
            return None
        return starts[target]

    for block in blocks:
        last = block.last
        mn = last.opcode.mnemonic

        # Call-class instructions anywhere in the block: control leaves the
        # contract and resumes at the instruction after the call.
        for ins in block.instructions:
            if ins.opcode.is_call:
                resume = ins.end_offset
                dst = next((b.id for b in blocks
                            if b.start_offset <= resume < b.end_offset), None)
                if dst is not None:
                    edges.add((block.id, EdgeKind.Call, dst))
                else:
                    diags.append(Diagnostic(
                        "missing-fall-through", ins.offset, "call at end of code"))

        if mn == "JUMP":
            dst = resolve(block, last)
            if dst is not None:
                edges.add((block.id, EdgeKind.Unconditional, dst))
        elif mn == "JUMPI":
            dst = resolve(block, last)
            if dst is not None:
                edges.add((block.id, EdgeKind.ConditionalTrue, dst))
            fall = starts.get(last.end_offset)
            if fall is not None:
                edges.add((block.id, EdgeKind.ConditionalFalse, fall))
            else:
                diags.append(Diagnostic("missing-fall-through", last.offset))
        elif not last.opcode.is_terminator:
            # Block was closed by a following JUMPDEST: straight fall-through.
            fall = starts.get(last.end_offset)
            if fall is not None:
                edges.add((block.id, EdgeKind.Unconditional, fall))

    return ControlFlowGraph(blocks=list(blocks), edges=edges,
                            contract_name=contract_name, diagnostics=diags)


def build_cfg(code: bytes | list[Instruction], contract_name: str = "contract.sol") -> ControlFlowGraph:
    """Convenience: raw bytes or a decoded stream -> segmented, edged graph."""
    if isinstance(code, (bytes, bytearray)):
        from .disasm import decode
        code = decode(bytes(code))
    return resolve_edges(segment_blocks(code), contract_name)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def emit_dot(cfg: ControlFlowGraph) -> str:
    """Deterministic DOT rendering with the blue/green/red/yellow edge colors."""
    lines = ["digraph cfg {", '  node [shape=box fontname="monospace"];']
    for block in sorted(cfg.blocks, key=lambda b: b.id):
        label = "\\l".join(str(ins) for ins in block.instructions) + "\\l"
        lines.append(f'  {block.id} [label="{_dot_escape(label)}"];')
    ordered = sorted(cfg.edges, key=lambda e: (e[0], e[1].value, e[2]))
    for src, kind, dst in ordered:
        lines.append(f"  {src} -> {dst} [color={EDGE_COLORS[kind]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
