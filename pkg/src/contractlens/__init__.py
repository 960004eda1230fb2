"""contractlens: multimodal smart-contract analysis.

Recovers EVM control-flow graphs from runtime bytecode, extracts three
feature modalities per contract (control flow, abstract syntax, comments),
fuses them, and supports code-clone detection plus vulnerability
verification via similarity search and a trained classifier.
"""
from .ast_features import (AstNodeRecord, AstStatistics, ast_statistics,
                           parse_ast_file, project_ast_features)
from .cfg import (BasicBlock, ControlFlowGraph, EdgeKind, build_cfg, emit_dot,
                  resolve_edges, segment_blocks)
from .comments import (CommentCorpus, KeywordReport, comment_features,
                       extract_comments, keyword_frequency_table, score_keywords)
from .config import PipelineConfig, load_config, load_train_config
from .disasm import Instruction, decode_bytecode, encode_instructions
from .fusion import ContractFeatures, SimilarityScore, fuse, rank_clones, similarity
from .gradcheck import grad_check
from .graph_encoder import encode_graph, gcn_layer, gru_step, normalized_adjacency
from .metrics import Metrics, evaluate_scores, rank_auc
from .node_embedding import OCfg, assemble_ocfg, embed_block, embed_blocks
from .opcodes import OPCODE_TABLE, Opcode, opcode_info
from .params import (EncoderParams, ModelDims, ModelParams, init_params,
                     load_params, save_params)
from .pipeline import (ContractPaths, discover_contracts,
                       extract_contract_features, training_example)
from .smote import SmoteResult, smote_balance
from .store import VULNERABILITIES, FeatureStore, StoreRecord
from .trainer import (TrainConfig, TrainingExample, TrainResult, evaluate,
                      predict_probability, train)

__version__ = "0.1.0"
