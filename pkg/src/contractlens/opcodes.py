"""EVM opcode table: byte value <-> mnemonic, category, structural flags.

The table covers the classic instruction set grouped into 11 categories.
Byte values outside the table decode to INVALID-class pseudo-opcodes so
that malformed or metadata bytes stay representable.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Category(enum.Enum):
    STOP_ARITHMETIC = "Stop and Arithmetic Operations"
    COMPARISON_BITWISE = "Comparison and Bitwise Logic Operations"
    KECCAK256 = "KECCAK256 Method"
    ENVIRONMENTAL = "Environmental Information"
    BLOCK_INFORMATION = "Block Information"
    STACK_MEMORY_STORAGE_FLOW = "Stack, Memory, Storage and Flow Operations"
    PUSH = "Push Operations"
    DUPLICATION = "Duplication Operations"
    EXCHANGE = "Exchange Operations"
    LOGGING = "Logging Operations"
    SYSTEM = "System Operations"


# Opcodes after which execution cannot continue into the next instruction.
_TERMINATORS = {"STOP", "JUMP", "RETURN", "REVERT", "INVALID", "SELFDESTRUCT"}
_CALLS = {"CALL", "CALLCODE", "DELEGATECALL", "STATICCALL", "CREATE", "CREATE2"}


@dataclass(frozen=True)
class Opcode:
    byte_value: int
    mnemonic: str
    category: Category
    immediate_len: int = 0
    is_terminator: bool = False
    is_conditional_branch: bool = False
    is_call: bool = False
    defined: bool = True  # False for INVALID-class gap fillers


def _build_table() -> dict[int, Opcode]:
    entries: dict[int, str | tuple[str, Category]] = {}

    def block(cat: Category, pairs):
        for value, name in pairs:
            entries[value] = (name, cat)

    block(Category.STOP_ARITHMETIC, enumerate(
        ["STOP", "ADD", "MUL", "SUB", "DIV", "SDIV", "MOD", "SMOD",
         "ADDMOD", "MULMOD", "EXP", "SIGNEXTEND"], start=0x00))
    block(Category.COMPARISON_BITWISE, enumerate(
        ["LT", "GT", "SLT", "SGT", "EQ", "ISZERO", "AND", "OR",
         "XOR", "NOT", "BYTE", "SHL", "SHR", "SAR"], start=0x10))
    block(Category.KECCAK256, [(0x20, "KECCAK256")])
    block(Category.ENVIRONMENTAL, enumerate(
        ["ADDRESS", "BALANCE", "ORIGIN", "CALLER", "CALLVALUE",
         "CALLDATALOAD", "CALLDATASIZE", "CALLDATACOPY", "CODESIZE",
         "CODECOPY", "GASPRICE", "EXTCODESIZE", "EXTCODECOPY",
         "RETURNDATASIZE", "RETURNDATACOPY"], start=0x30))
    block(Category.BLOCK_INFORMATION, enumerate(
        ["BLOCKHASH", "COINBASE", "TIMESTAMP", "NUMBER", "DIFFICULTY",
         "GASLIMIT", "CHAINID"], start=0x40))
    block(Category.STACK_MEMORY_STORAGE_FLOW, enumerate(
        ["POP", "MLOAD", "MSTORE", "MSTORE8", "SLOAD", "SSTORE",
         "JUMP", "JUMPI", "PC", "MSIZE", "GAS", "JUMPDEST"], start=0x50))
    block(Category.PUSH, ((0x60 + i, f"PUSH{i + 1}") for i in range(32)))
    block(Category.DUPLICATION, ((0x80 + i, f"DUP{i + 1}") for i in range(16)))
    block(Category.EXCHANGE, ((0x90 + i, f"SWAP{i + 1}") for i in range(16)))
    block(Category.LOGGING, ((0xA0 + i, f"LOG{i}") for i in range(5)))
    block(Category.SYSTEM, [
        (0xF0, "CREATE"), (0xF1, "CALL"), (0xF2, "CALLCODE"),
        (0xF3, "RETURN"), (0xF4, "DELEGATECALL"), (0xF5, "CREATE2"),
        (0xFA, "STATICCALL"), (0xFD, "REVERT"), (0xFE, "INVALID"),
        (0xFF, "SELFDESTRUCT")])

    table = {}
    for value, (name, cat) in entries.items():
        imm = value - 0x5F if 0x60 <= value <= 0x7F else 0
        table[value] = Opcode(
            byte_value=value,
            mnemonic=name,
            category=cat,
            immediate_len=imm,
            is_terminator=name in _TERMINATORS,
            is_conditional_branch=name == "JUMPI",
            is_call=name in _CALLS,
        )
    return table


#: Defined opcodes only, keyed by byte value.
OPCODE_TABLE: dict[int, Opcode] = _build_table()

#: Reverse map over the defined set (bijective).
MNEMONIC_TABLE: dict[str, Opcode] = {op.mnemonic: op for op in OPCODE_TABLE.values()}

# INVALID-class entries for the gaps, built once so lookups stay cheap and
# identical objects come back for identical bytes.
_UNDEFINED: dict[int, Opcode] = {
    value: Opcode(
        byte_value=value,
        mnemonic=f"UNKNOWN_0x{value:02X}",
        category=Category.SYSTEM,  # class of INVALID: halts execution
        is_terminator=True,
        defined=False,
    )
    for value in range(256) if value not in OPCODE_TABLE
}


def opcode_info(byte_value: int) -> Opcode:
    """Table entry for a byte value; INVALID-class entry for gaps."""
    if not 0 <= byte_value <= 0xFF:
        raise ValueError(f"byte value out of range: {byte_value}")
    try:
        return OPCODE_TABLE[byte_value]
    except KeyError:
        return _UNDEFINED[byte_value]
