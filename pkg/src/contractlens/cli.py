"""Command-line entry point.

Subcommands: disasm, cfg, features, index, clone-detect, verify, train,
keywords, grad-check. Exit codes: 0 success, 1 usage error, 2 input error,
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import errors
from .cfg import build_cfg, emit_dot
from .comments import keyword_frequency_table, score_keywords
from .config import load_config, load_train_config
from .disasm import decode_bytecode
from .fusion import rank_clones
from .gradcheck import grad_check
from .node_embedding import assemble_ocfg
from .params import ModelDims, init_params, load_params, save_params
from .pipeline import (ContractPaths, build_corpus, default_params,
                       discover_contracts, extract_contract_features,
                       training_example)
from .store import VULNERABILITIES, FeatureStore, StoreRecord, _decode_record
from .trainer import TrainingExample, classifier_forward, train

_INPUT_ERRORS = (errors.NonHexInput, errors.MalformedAst, errors.ConfigError,
                 errors.ModelMissing, errors.RecordNotFound, errors.DuplicateRecord,
                 errors.EmptyDataset, errors.DegenerateLabels, errors.TooFewSamples,
                 errors.EmptyCorpus, errors.DimensionMismatch,
                 FileNotFoundError, NotADirectoryError, IsADirectoryError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="contractlens", description=__doc__)
    parser.add_argument("--config", help="pipeline config file (key = value sections)")
    parser.add_argument("--seed", type=int, default=42,
                        help="run seed for parameter init and training")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disasm", help="print one instruction per line")
    p.add_argument("input", help="file containing hex runtime bytecode")

    p = sub.add_parser("cfg", help="recover the control-flow graph as DOT")
    p.add_argument("--input", required=True, help="hex bytecode file")
    p.add_argument("--dot", required=True, help="output DOT file")
    p.add_argument("--name", help="contract name (defaults to input stem + .sol)")

    p = sub.add_parser("features", help="extract features for a contract directory")
    p.add_argument("--input", required=True, help="directory of contract trios")
    p.add_argument("--db", required=True, help="feature store directory")
    p.add_argument("--model", help="trained model file (default: seeded init)")
    p.add_argument("--labels", help="TSV of name<TAB>vuln=0/1,... to attach")
    p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("index", help="list a store or ingest record files")
    p.add_argument("--db", required=True)
    p.add_argument("--add", nargs="*", default=[], help="record files to ingest")
    p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("clone-detect", help="rank stored contracts by similarity")
    p.add_argument("--query", required=True,
                   help="contract stem or directory holding one trio")
    p.add_argument("--db", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--report", required=True, help="output CSV")
    p.add_argument("--model", help="model file used to featurize the query")
    p.add_argument("--emit-contents", action="store_true",
                   help="also write matched source excerpts")

    p = sub.add_parser("verify", help="per-vulnerability probability and verdict")
    p.add_argument("--contract", required=True, help="contract stem or trio directory")
    p.add_argument("--model", action="append", required=True,
                   help="model file; repeat for several vulnerabilities")

    p = sub.add_parser("train", help="train a per-vulnerability classifier")
    p.add_argument("--db", required=True, help="labeled feature store")
    p.add_argument("--vuln", required=True, choices=VULNERABILITIES)
    p.add_argument("--config", "--train-config", dest="train_config",
                   help="training config file ([train] section)")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--contracts",
                   help="directory of trios: train jointly from raw artifacts")
    p.add_argument("--metrics", help="metrics history CSV (default <out>.metrics.csv)")

    p = sub.add_parser("keywords", help="comment keyword frequency table")
    p.add_argument("--input", required=True, help="directory of .sol files")
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("grad-check", help="finite-difference gradient validation")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--max-params", type=int, default=200)
    return parser


def _say(args, message):
    if not args.quiet:
        print(message, file=sys.stderr)


def _warn(message):
    print(message, file=sys.stderr)


def _resolve_trio(spec: str) -> ContractPaths:
    """A trio given as a directory with one contract, or a path stem."""
    path = Path(spec)
    if path.is_dir():
        complete = [c for c in discover_contracts(path) if c.complete]
        if len(complete) != 1:
            raise errors.ConfigError(
                f"{spec}: expected exactly one complete contract trio, "
                f"found {len(complete)}")
        return complete[0]
    stem = path.name
    for suffix in (".sol", ".bin-runtime", ".ast.json"):
        if stem.endswith(suffix):
            stem = stem[:-len(suffix)]
            break
    directory = path.parent if str(path.parent) else Path(".")
    candidates = {c.stem: c for c in discover_contracts(directory)}
    if stem not in candidates or not candidates[stem].complete:
        raise FileNotFoundError(f"no complete trio for {stem} in {directory}")
    return candidates[stem]


def _load_or_init_params(model_path, config, seed):
    if model_path:
        return load_params(model_path)
    return default_params(config, seed)


def _parse_labels_file(path: Path) -> dict[str, dict[str, bool]]:
    out = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        name, _, labels_text = line.partition("\t")
        labels = {}
        for part in labels_text.split(","):
            key, _, value = part.partition("=")
            if key not in VULNERABILITIES:
                raise errors.ConfigError(f"unknown vulnerability label {key!r}")
            labels[key] = value.strip() == "1"
        out[name] = labels
    return out


def _float_csv(value: float) -> str:
    return repr(float(value))


# -- subcommand bodies ------------------------------------------------------

def cmd_disasm(args, config):
    for ins in decode_bytecode(Path(args.input).read_text()):
        print(str(ins))
    return 0


def cmd_cfg(args, config):
    instructions = decode_bytecode(Path(args.input).read_text())
    name = args.name or Path(args.input).stem + ".sol"
    graph = build_cfg(instructions, contract_name=name)
    for diag in graph.diagnostics:
        _warn(f"WARN {diag.kind} offset={diag.offset}")
    Path(args.dot).write_text(emit_dot(graph))
    _say(args, f"wrote {args.dot}: {len(graph.blocks)} blocks, {len(graph.edges)} edges")
    return 0


def cmd_features(args, config):
    params = _load_or_init_params(args.model, config, args.seed)
    labels = _parse_labels_file(Path(args.labels)) if args.labels else {}
    store = FeatureStore(args.db)
    contracts = discover_contracts(args.input)
    if not contracts:
        _warn(f"WARN no contracts under {args.input}")
        return 2
    done = failed = 0
    for paths in contracts:
        if not paths.complete:
            missing = "bytecode" if paths.bin_runtime is None else "AST"
            _warn(f"WARN skipping {paths.stem}: missing {missing}")
            failed += 1
            continue
        try:
            features, _ = extract_contract_features(paths, params, config)
            record = StoreRecord(contract_name=features.contract_name,
                                 features=features,
                                 labels=labels.get(features.contract_name),
                                 source_path=str(paths.sol) if paths.sol else None)
            store.put(record, overwrite=args.overwrite)
        except (errors.ContractLensError, ValueError) as exc:
            _warn(f"WARN skipping {paths.stem}: {exc}")
            failed += 1
            continue
        done += 1
    _say(args, f"indexed {done} contracts into {args.db} ({failed} skipped)")
    return 0 if done else 2


def cmd_index(args, config):
    store = FeatureStore(args.db)
    for rec_file in args.add:
        record = _decode_record(Path(rec_file).read_bytes())
        store.put(record, overwrite=args.overwrite)
    for name in store.names():
        filename, labels = store._index[name]
        label_text = "-" if labels is None else ",".join(
            f"{k}={int(v)}" for k, v in labels.items())
        print(f"{name}\t{filename}\t{label_text}")
    return 0


def cmd_clone_detect(args, config):
    params = _load_or_init_params(args.model, config, args.seed)
    trio = _resolve_trio(args.query)
    query, _ = extract_contract_features(trio, params, config)
    store = FeatureStore(args.db)
    if len(store) == 0:
        _warn("WARN store is empty")
    threshold = args.threshold if args.threshold is not None else config.clone_threshold
    ranked = rank_clones(query, store, threshold, gamma=config.gamma)

    lines = ["rank,name,similarity,cosine,rbf"]
    for rank, (name, score) in enumerate(ranked, start=1):
        lines.append(f"{rank},{name},{_float_csv(score.value)},"
                     f"{_float_csv(score.cosine)},{_float_csv(score.rbf)}")
    Path(args.report).write_text("\n".join(lines) + "\n")

    if args.emit_contents:
        chunks = []
        for name, score in ranked:
            record = store.get(name)
            chunks.append(f"=== {name} (similarity {score.value:.6f}) ===")
            if record.source_path and Path(record.source_path).exists():
                chunks.append(Path(record.source_path).read_text().rstrip())
            else:
                chunks.append("(source unavailable)")
            chunks.append("")
        contents_path = Path(args.report).with_suffix(".contents.txt")
        contents_path.write_text("\n".join(chunks))
        _say(args, f"wrote {contents_path}")
    _say(args, f"wrote {args.report}: {len(ranked)} matches at threshold {threshold}")
    return 0


def cmd_verify(args, config):
    trio = _resolve_trio(args.contract)
    print(f"contract: {trio.contract_name}")
    print("vulnerability\tprobability\tverdict")
    for model_path in args.model:
        params = load_params(model_path)
        vuln = params.vuln or Path(model_path).stem
        features, _ = extract_contract_features(trio, params, config)
        prob = float(classifier_forward(features.flattened(), params.classifier))
        verdict = "positive" if prob > config.decision_threshold else "negative"
        print(f"{vuln}\t{prob:.6f}\t{verdict}")
    return 0


def cmd_train(args, config):
    train_config_path = args.train_config or config.train_config_path
    tconfig = load_train_config(train_config_path, vuln=args.vuln, seed=args.seed)
    store = FeatureStore(args.db)

    labeled = [r for r in store.scan()
               if r.labels is not None and args.vuln in r.labels]
    if not labeled:
        raise errors.EmptyDataset(f"store has no records labeled for {args.vuln}")

    if args.contracts:
        by_stem = {c.contract_name: c for c in discover_contracts(args.contracts)
                   if c.complete}
        examples = []
        for record in labeled:
            paths = by_stem.get(record.contract_name)
            if paths is None:
                _warn(f"WARN no raw artifacts for {record.contract_name}; "
                      "using stored vectors")
                examples.append(_vector_example(record, args.vuln))
            else:
                examples.append(training_example(paths, record.labels[args.vuln],
                                                 config))
        dims = ModelDims(node_dim=config.embedding_dim,
                         comment_embed=config.comment_dim,
                         clf_hidden=tconfig.clf_hidden,
                         dropout_p=tconfig.dropout_p)
        result = train(examples, tconfig, dims=dims)
    else:
        examples = [_vector_example(r, args.vuln) for r in labeled]
        result = train(examples, tconfig)

    save_params(result.params, args.out)
    metrics_path = Path(args.metrics) if args.metrics else Path(args.out + ".metrics.csv")
    metrics_path.write_text(result.history_csv())
    _say(args, f"best epoch {result.best_epoch} loss {result.best_loss:.6f}")
    if result.test_metrics is not None:
        m = result.test_metrics
        _say(args, f"held-out: acc {m.accuracy:.4f} re {m.recall:.4f} "
                   f"pre {m.precision:.4f} f1 {m.f1:.4f} auc {m.auc:.4f}")
    return 0


def _vector_example(record: StoreRecord, vuln: str) -> TrainingExample:
    features = record.features
    return TrainingExample(name=record.contract_name,
                           label=record.labels[vuln],
                           f_cfg=features.f_cfg, f_ast=features.f_ast,
                           f_com=features.f_com)


def cmd_keywords(args, config):
    params = default_params(config, args.seed)
    reports = []
    sol_files = sorted(Path(args.input).glob("*.sol"))
    if not sol_files:
        raise FileNotFoundError(f"no .sol files under {args.input}")
    for sol in sol_files:
        paths = ContractPaths(sol.stem, sol, None, None)
        corpus = build_corpus(paths, config)
        if not corpus.tokens:
            _say(args, f"{paths.contract_name}: no comments")
            continue
        reports.append(score_keywords(corpus, params.comments, config.comment_dim))
    if not reports:
        raise errors.EmptyCorpus("no contract produced any comment tokens")
    Path(args.out).write_text(keyword_frequency_table(reports))
    _say(args, f"wrote {args.out} from {len(reports)} contracts")
    return 0


def cmd_grad_check(args, config):
    rng = np.random.default_rng(args.seed)
    dims = ModelDims(node_dim=4, hidden=4, fc=4, out=4, ast_in=6,
                     comment_embed=8, comment_hidden=8, comment_layers=4,
                     clf_hidden=6, dropout_p=0.0)
    params = init_params(dims, seed=args.seed)
    # PUSH1 1, PUSH1 8, JUMPI | PUSH1 0, STOP | JUMPDEST, STOP
    code = bytes.fromhex("60016008576000005b00")
    graph = build_cfg(code, "check.sol")
    nf = rng.normal(size=(len(graph.blocks), dims.node_dim))
    example = TrainingExample(
        name="check.sol", label=True, ocfg=assemble_ocfg(graph, nf),
        ast_raw=rng.normal(size=dims.ast_in) ** 2,
        tokens=["transfer", "owner", "safemath", "mint"])
    error = grad_check(params, example, epsilon=args.epsilon,
                       max_params=args.max_params, seed=args.seed)
    print(f"max relative error: {error:.3e} over {args.max_params} parameters")
    if error >= 1e-4:
        _warn("FAIL gradient check above 1e-4")
        return 3
    return 0


_COMMANDS = {
    "disasm": cmd_disasm,
    "cfg": cmd_cfg,
    "features": cmd_features,
    "index": cmd_index,
    "clone-detect": cmd_clone_detect,
    "verify": cmd_verify,
    "train": cmd_train,
    "keywords": cmd_keywords,
    "grad-check": cmd_grad_check,
}


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config)
    return _COMMANDS[args.command](args, config)


def main(argv=None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        _warn(f"usage error: {exc}")
        return 1
    except _INPUT_ERRORS as exc:
        _warn(f"input error: {exc}")
        return 2
    except Exception as exc:  # invariant violations and unexpected failures
        _warn(f"internal error: {type(exc).__name__}: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
