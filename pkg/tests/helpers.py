"""Shared test utilities: a tiny assembler and an independent DOT parser."""
import re

from contractlens.opcodes import MNEMONIC_TABLE


def asm(*ops: str) -> bytes:
    """Assemble 'PUSH1 0x05'-style mnemonic lines into bytecode."""
    out = bytearray()
    for line in ops:
        parts = line.split()
        op = MNEMONIC_TABLE[parts[0]]
        out.append(op.byte_value)
        if op.immediate_len:
            value = int(parts[1], 0)
            out += value.to_bytes(op.immediate_len, "big")
        elif len(parts) > 1:
            raise ValueError(f"{parts[0]} takes no immediate")
    return bytes(out)


def asm_hex(*ops: str) -> str:
    return asm(*ops).hex()


_TOKEN = re.compile(r'\s*(digraph|->|[{}\[\];=,]|"(?:[^"\\]|\\.)*"|[A-Za-z0-9_.]+)')


def parse_dot(text: str):
    """Strict parser for the DOT subset: digraph with node/edge statements.

    Returns (graph_name, {node: attrs}, [(src, dst, attrs)]). Raises
    ValueError on anything that does not follow the grammar.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"lexical error at {pos}: {text[pos:pos+20]!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()

    it = iter(range(len(tokens)))
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else None

    def take(expected=None):
        nonlocal i
        if i >= len(tokens):
            raise ValueError("unexpected end of input")
        tok = tokens[i]
        if expected is not None and tok != expected:
            raise ValueError(f"expected {expected!r}, found {tok!r}")
        i += 1
        return tok

    def unquote(tok):
        if tok.startswith('"'):
            return tok[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        return tok

    def attr_list():
        attrs = {}
        take("[")
        while peek() != "]":
            key = take()
            take("=")
            attrs[key] = unquote(take())
            if peek() == ",":
                take(",")
        take("]")
        return attrs

    take("digraph")
    name = take() if peek() != "{" else ""
    take("{")
    nodes, edges = {}, []
    while peek() != "}":
        first = take()
        if peek() == "->":
            take("->")
            dst = take()
            attrs = attr_list() if peek() == "[" else {}
            edges.append((first, dst, attrs))
        elif peek() == "[":
            attrs = attr_list()
            nodes[first] = attrs
        else:
            nodes[first] = {}
        if peek() == ";":
            take(";")
    take("}")
    if i != len(tokens):
        raise ValueError("trailing tokens after closing brace")
    return name, nodes, edges
