"""Decode runtime bytecode hex into a validated instruction stream."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import NonHexInput
from .opcodes import Opcode, opcode_info

_HEX_DIGITS = set("0123456789abcdefABCDEF")


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction.

    ``immediate`` is always ``opcode.immediate_len`` bytes long; when the
    code ends inside a PUSH immediate the missing tail is zero-padded and
    ``padding`` records how many bytes were synthesized.
    """
    offset: int
    opcode: Opcode
    immediate: bytes = b""
    padding: int = 0

    @property
    def truncated(self) -> bool:
        return self.padding > 0

    @property
    def size(self) -> int:
        return 1 + self.opcode.immediate_len

    @property
    def end_offset(self) -> int:
        """Offset one past the last byte (padding included)."""
        return self.offset + self.size

    def encode(self, *, keep_padding: bool = True) -> bytes:
        imm = self.immediate if keep_padding else self.immediate[:len(self.immediate) - self.padding]
        return bytes([self.opcode.byte_value]) + imm

    def __str__(self) -> str:
        if self.opcode.immediate_len:
            return f"{self.offset} {self.opcode.mnemonic} 0x{self.immediate.hex()}"
        return f"{self.offset} {self.opcode.mnemonic}"


def parse_hex(hex_text: str) -> bytes:
    """Hex text (optional 0x prefix, surrounding whitespace) -> raw bytes."""
    text = hex_text.strip()
    if text.startswith(("0x", "0X")):
        text = text[2:]
    if not text:
        return b""
    if len(text) % 2 != 0:
        raise NonHexInput(f"odd number of hex digits ({len(text)})")
    bad = next((c for c in text if c not in _HEX_DIGITS), None)
    if bad is not None:
        raise NonHexInput(f"non-hex character {bad!r}")
    return bytes.fromhex(text)


def decode(code: bytes) -> list[Instruction]:
    """Decode raw bytes; every byte is consumed exactly once."""
    out: list[Instruction] = []
    i = 0
    n = len(code)
    while i < n:
        op = opcode_info(code[i])
        imm = code[i + 1:i + 1 + op.immediate_len]
        pad = op.immediate_len - len(imm)
        if pad:
            imm = imm + b"\x00" * pad
        out.append(Instruction(offset=i, opcode=op, immediate=imm, padding=pad))
        i += 1 + op.immediate_len
    return out


def decode_bytecode(hex_text: str) -> list[Instruction]:
    """Hex text -> instruction stream. Empty input yields an empty list."""
    return decode(parse_hex(hex_text))


def encode_instructions(instructions: list[Instruction], *, keep_padding: bool = False) -> bytes:
    """Re-encode a decoded stream.

    With ``keep_padding=False`` the truncation padding is stripped, so the
    result is byte-identical to the original code.
    """
    return b"".join(ins.encode(keep_padding=keep_padding) for ins in instructions)
