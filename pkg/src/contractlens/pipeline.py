"""Per-contract feature extraction over the three sibling input files.

Each contract is the trio ``<name>.sol`` (source, for comments),
``<name>.bin-runtime`` (hex runtime bytecode from an external compiler) and
``<name>.ast.json`` (compiler-emitted AST). Missing source is tolerated
(empty comment corpus); missing bytecode or AST makes the contract
unprocessable.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .ast_features import ast_statistics, parse_ast_file, project_ast_features
from .cfg import ControlFlowGraph, build_cfg
from .comments import (CommentCorpus, comment_features, extract_comments,
                       load_stopwords, default_stopwords)
from .config import PipelineConfig
from .disasm import decode_bytecode
from .fusion import ContractFeatures, fuse
from .graph_encoder import encode_graph
from .node_embedding import OCfg, assemble_ocfg, embed_blocks
from .params import ModelDims, ModelParams, init_params
from .trainer import TrainingExample


@dataclass
class ContractPaths:
    stem: str
    sol: Path | None
    bin_runtime: Path | None
    ast_json: Path | None

    @property
    def contract_name(self) -> str:
        return f"{self.stem}.sol"

    @property
    def complete(self) -> bool:
        return self.bin_runtime is not None and self.ast_json is not None


def discover_contracts(directory: str | Path) -> list[ContractPaths]:
    """Group sibling files by stem; sorted by stem for determinism."""
    directory = Path(directory)
    stems: dict[str, ContractPaths] = {}

    def entry(stem: str) -> ContractPaths:
        return stems.setdefault(stem, ContractPaths(stem, None, None, None))

    for path in sorted(directory.iterdir()):
        name = path.name
        if name.endswith(".ast.json"):
            entry(name[:-len(".ast.json")]).ast_json = path
        elif name.endswith(".bin-runtime"):
            entry(name[:-len(".bin-runtime")]).bin_runtime = path
        elif name.endswith(".sol"):
            entry(name[:-len(".sol")]).sol = path
    return [stems[s] for s in sorted(stems)]


def default_params(config: PipelineConfig, seed: int) -> ModelParams:
    dims = ModelDims(node_dim=config.embedding_dim,
                     comment_embed=config.comment_dim)
    return init_params(dims, seed=seed)


def _stopwords(config: PipelineConfig):
    if config.stopwords_path is not None:
        return load_stopwords(config.stopwords_path)
    return default_stopwords()


def build_ocfg(paths: ContractPaths, config: PipelineConfig) -> OCfg:
    instructions = decode_bytecode(paths.bin_runtime.read_text())
    graph = build_cfg(instructions, contract_name=paths.contract_name)
    nf = embed_blocks(graph, dim=config.embedding_dim, seed=config.embedding_seed)
    return assemble_ocfg(graph, nf)


def build_corpus(paths: ContractPaths, config: PipelineConfig) -> CommentCorpus:
    if paths.sol is None:
        return CommentCorpus(paths.contract_name, [], [])
    return extract_comments(paths.sol.read_text(), paths.contract_name,
                            stopwords=_stopwords(config))


def extract_contract_features(paths: ContractPaths, params: ModelParams,
                              config: PipelineConfig) -> tuple[ContractFeatures, ControlFlowGraph]:
    """Full three-modality extraction for one contract."""
    ocfg = build_ocfg(paths, config)
    f_cfg = encode_graph(ocfg, params.encoder)

    roots, _ = parse_ast_file(paths.ast_json)
    stats = ast_statistics(roots, config.role_pairs)
    f_ast = project_ast_features(stats.to_vector(), params.ast)

    corpus = build_corpus(paths, config)
    f_com, no_comments = comment_features(corpus, params.comments,
                                          config.comment_dim)
    flags = {"no_comments"} if no_comments else set()
    features = fuse(f_cfg, f_ast, f_com, contract_name=paths.contract_name,
                    flags=flags)
    return features, ocfg.cfg


def training_example(paths: ContractPaths, label: bool, config: PipelineConfig) -> TrainingExample:
    """Raw-artifact example so gradients reach the encoder and projections."""
    ocfg = build_ocfg(paths, config)
    roots, _ = parse_ast_file(paths.ast_json)
    raw = ast_statistics(roots, config.role_pairs).to_vector()
    corpus = build_corpus(paths, config)
    return TrainingExample(name=paths.contract_name, label=label, ocfg=ocfg,
                           ast_raw=raw, tokens=list(corpus.tokens))
