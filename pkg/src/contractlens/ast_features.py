"""AST ingestion and the abstract-syntax feature vector.

The input is a compiler-emitted AST document: JSON where every node is an
object with a required ``type``, an optional ``kind``, an optional
``children`` list, and optional ``parameters`` / ``returnParameters`` lists
(used only for the presence booleans). Identifier names are never read, so
renaming variables or functions cannot change the extracted features.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import data_of, relu
from .errors import DimensionMismatch, MalformedAst

#: Closed set of node roles; anything else maps to Other.
ROLES = [
    "StateVariableDeclaration", "EmitStatement", "contract", "Conditional",
    "FunctionCall", "NumberLiteral", "ThrowStatement", "ExpressionStatement",
    "MemberAccess", "ReturnStatement", "IndexAccess", "ForStatement",
    "StringLiteral", "interface", "TupleExpression", "BooleanLiteral",
    "IfStatement", "ModifierDefinition", "StructDefinition", "EventDefinition",
    "InlineAssemblyStatement", "WhileStatement", "library", "Identifier",
    "UnaryOperation", "VariableDeclarationStatement", "PragmaDirective",
    "BinaryOperation", "ElementaryTypeNameExpression", "EnumDefinition",
    "ContractDefinition", "FunctionDefinition", "UsingForDeclaration", "block",
]
OTHER = "Other"
_ROLE_INDEX = {name: i for i, name in enumerate(ROLES + [OTHER])}

#: Default structurally significant (parent, child) role pairs.
DEFAULT_ROLE_PAIRS: list[tuple[str, str]] = [
    ("ContractDefinition", "FunctionDefinition"),
    ("ContractDefinition", "StateVariableDeclaration"),
    ("ContractDefinition", "EventDefinition"),
    ("ContractDefinition", "ModifierDefinition"),
    ("ContractDefinition", "UsingForDeclaration"),
    ("ContractDefinition", "StructDefinition"),
    ("FunctionDefinition", "block"),
    ("FunctionDefinition", "ExpressionStatement"),
    ("IfStatement", "FunctionCall"),
    ("IfStatement", "block"),
    ("IfStatement", "BinaryOperation"),
    ("block", "ExpressionStatement"),
    ("block", "IfStatement"),
    ("block", "ReturnStatement"),
    ("block", "VariableDeclarationStatement"),
    ("block", "ForStatement"),
    ("block", "EmitStatement"),
    ("ExpressionStatement", "FunctionCall"),
    ("FunctionCall", "MemberAccess"),
    ("BinaryOperation", "Identifier"),
]

_CHILD_BUCKETS = ["0", "1", "2", "3-5", "6+"]
_VARIABLE_ROLES = {"VariableDeclarationStatement", "StateVariableDeclaration"}

#: counters (35 roles) + pair counters (20) + child buckets (5) + booleans (3)
RECORD_LENGTH = len(ROLES) + 1 + len(DEFAULT_ROLE_PAIRS) + len(_CHILD_BUCKETS) + 3


@dataclass
class AstNodeRecord:
    node_type: str                    # one of ROLES or "Other"
    kind: str | None
    child_count: int
    has_variables: bool
    has_input_params: bool
    has_output_params: bool
    children: list["AstNodeRecord"] = field(default_factory=list)
    raw_type: str = ""                # document value before role mapping

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


def _parse_node(obj, location: str, diagnostics: dict) -> AstNodeRecord:
    if not isinstance(obj, dict):
        raise MalformedAst(f"{location}: node must be an object, found {type(obj).__name__}")
    raw_type = obj.get("type")
    if not isinstance(raw_type, str) or not raw_type:
        raise MalformedAst(f"{location}: missing or non-text 'type'")
    kind = obj.get("kind")
    if kind is not None and not isinstance(kind, str):
        raise MalformedAst(f"{location}: 'kind' must be text")
    children_obj = obj.get("children", [])
    if not isinstance(children_obj, list):
        raise MalformedAst(f"{location}: 'children' must be a list")
    for key in ("parameters", "returnParameters"):
        if key in obj and not isinstance(obj[key], list):
            raise MalformedAst(f"{location}: '{key}' must be a list")

    role = raw_type if raw_type in _ROLE_INDEX else OTHER
    if role == OTHER:
        diagnostics[raw_type] = diagnostics.get(raw_type, 0) + 1

    children = [_parse_node(c, f"{location}.children[{i}]", diagnostics)
                for i, c in enumerate(children_obj)]
    has_vars = role in _VARIABLE_ROLES or any(c.has_variables for c in children)
    return AstNodeRecord(
        node_type=role,
        kind=kind,
        child_count=len(children),
        has_variables=has_vars,
        has_input_params=bool(obj.get("parameters")),
        has_output_params=bool(obj.get("returnParameters")),
        children=children,
        raw_type=raw_type,
    )


def parse_ast_document(obj) -> tuple[list[AstNodeRecord], dict[str, int]]:
    """Parse an in-memory AST document.

    The document is either one node or a list of top-level nodes (a file
    typically holds a pragma plus one or more contract definitions).
    Returns (roots, unknown-type counts).
    """
    diagnostics: dict[str, int] = {}
    if isinstance(obj, list):
        roots = [_parse_node(item, f"$[{i}]", diagnostics)
                 for i, item in enumerate(obj)]
    else:
        roots = [_parse_node(obj, "$", diagnostics)]
    return roots, diagnostics


def parse_ast_file(path: str | Path) -> tuple[list[AstNodeRecord], dict[str, int]]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedAst(f"{path}: invalid JSON at line {exc.lineno}, col {exc.colno}") from exc
    return parse_ast_document(obj)


@dataclass
class AstStatistics:
    """Fixed-layout raw feature record for one contract's AST."""
    role_counts: np.ndarray       # 35
    pair_counts: np.ndarray      # one per configured role pair
    child_buckets: np.ndarray    # 0, 1, 2, 3-5, 6+
    any_function_has_variables: bool
    any_function_has_inputs: bool
    any_function_has_outputs: bool

    def to_vector(self) -> np.ndarray:
        flags = np.array([self.any_function_has_variables,
                          self.any_function_has_inputs,
                          self.any_function_has_outputs], dtype=float)
        return np.concatenate([self.role_counts, self.pair_counts,
                               self.child_buckets, flags])


def _bucket_index(count: int) -> int:
    if count <= 2:
        return count
    return 3 if count <= 5 else 4


def ast_statistics(roots: AstNodeRecord | list[AstNodeRecord] | None,
                   role_pairs: list[tuple[str, str]] | None = None) -> AstStatistics:
    """Count roles, configured parent/child role pairs, child-count buckets
    and the function-level presence booleans. Empty input -> all-zero record."""
    pairs = DEFAULT_ROLE_PAIRS if role_pairs is None else role_pairs
    pair_index = {p: i for i, p in enumerate(pairs)}
    roles = np.zeros(len(ROLES) + 1)
    pair_counts = np.zeros(len(pairs))
    buckets = np.zeros(len(_CHILD_BUCKETS))
    has_vars = has_in = has_out = False

    if roots is None:
        roots = []
    elif isinstance(roots, AstNodeRecord):
        roots = [roots]
    for root in roots:
        for node in root.walk():
            roles[_ROLE_INDEX[node.node_type]] += 1
            buckets[_bucket_index(node.child_count)] += 1
            for child in node.children:
                idx = pair_index.get((node.node_type, child.node_type))
                if idx is not None:
                    pair_counts[idx] += 1
            if node.node_type == "FunctionDefinition":
                has_vars = has_vars or node.has_variables
                has_in = has_in or node.has_input_params
                has_out = has_out or node.has_output_params

    return AstStatistics(roles, pair_counts, buckets, has_vars, has_in, has_out)


def project_ast_features(raw_vector, params):
    """One affine layer with ReLU: raw statistics -> feature vector."""
    raw_len = data_of(raw_vector).shape[0]
    if data_of(params.w).shape[1] != raw_len:
        raise DimensionMismatch(
            f"projection expects {data_of(params.w).shape[1]} inputs, record has {raw_len}")
    return relu(params.w @ raw_vector + params.b)


def ast_feature_vector(path: str | Path, params,
                       role_pairs: list[tuple[str, str]] | None = None) -> np.ndarray:
    """File -> parsed forest -> statistics -> projected feature vector."""
    roots, _ = parse_ast_file(path)
    stats = ast_statistics(roots, role_pairs)
    return project_ast_features(stats.to_vector(), params)
