"""Parameter bundles for the encoder, projections and classifier.

Persistence format: one flat binary file of little-endian float64 values
preceded by a dimension header, plus a sidecar text manifest
(``<file>.manifest``) naming each tensor and its shape. The manifest also
carries the model dims and the vulnerability tag as ``# meta`` lines.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import DimensionMismatch, ModelMissing

_MAGIC = b"CLMB"
_VERSION = 1

#: Length of the raw AST statistics record (see ast_features.RECORD_LENGTH).
AST_RECORD_LENGTH = 63


@dataclass(frozen=True)
class ModelDims:
    node_dim: int = 128          # per-block embedding width
    hidden: int = 512            # GCN output width == GRU hidden width
    fc: int = 512                # fully connected head width
    out: int = 512               # modality feature vector width
    ast_in: int = AST_RECORD_LENGTH
    comment_embed: int = 128     # hashed token embedding width
    comment_hidden: int = 512    # conv channels
    comment_layers: int = 4
    kernel: int = 3
    clf_hidden: int = 128
    dropout_p: float = 0.3

    @property
    def clf_in(self) -> int:
        return 3 * self.out


@dataclass
class GruLayerParams:
    wz: np.ndarray
    uz: np.ndarray
    wr: np.ndarray
    ur: np.ndarray
    w: np.ndarray
    u: np.ndarray


@dataclass
class EncoderParams:
    w1: np.ndarray                    # node_dim x hidden
    layers: list[GruLayerParams]      # three stacked GRU layers
    fc_w: np.ndarray                  # fc x hidden
    fc_b: np.ndarray
    out_w: np.ndarray                 # out x fc
    out_b: np.ndarray
    dropout_p: float = 0.3

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]


@dataclass
class AstParams:
    w: np.ndarray  # out x ast_in
    b: np.ndarray


@dataclass
class ConvLayerParams:
    w: np.ndarray  # kernel x c_in x c_out
    b: np.ndarray


@dataclass
class CommentParams:
    convs: list[ConvLayerParams]
    proj_w: np.ndarray  # out x comment_hidden
    proj_b: np.ndarray


@dataclass
class ClassifierParams:
    w1: np.ndarray  # clf_hidden x clf_in
    b1: np.ndarray
    w2: np.ndarray  # clf_hidden
    b2: np.ndarray  # scalar


@dataclass
class ModelParams:
    dims: ModelDims
    encoder: EncoderParams
    ast: AstParams
    comments: CommentParams
    classifier: ClassifierParams
    vuln: str | None = None

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        """Deterministic (name, array) listing of every trainable tensor."""
        out: list[tuple[str, np.ndarray]] = [("encoder.w1", self.encoder.w1)]
        for i, layer in enumerate(self.encoder.layers):
            for f in fields(layer):
                out.append((f"encoder.gru{i}.{f.name}", getattr(layer, f.name)))
        out += [("encoder.fc_w", self.encoder.fc_w), ("encoder.fc_b", self.encoder.fc_b),
                ("encoder.out_w", self.encoder.out_w), ("encoder.out_b", self.encoder.out_b),
                ("ast.w", self.ast.w), ("ast.b", self.ast.b)]
        for i, conv in enumerate(self.comments.convs):
            out += [(f"comments.conv{i}.w", conv.w), (f"comments.conv{i}.b", conv.b)]
        out += [("comments.proj_w", self.comments.proj_w),
                ("comments.proj_b", self.comments.proj_b),
                ("classifier.w1", self.classifier.w1), ("classifier.b1", self.classifier.b1),
                ("classifier.w2", self.classifier.w2), ("classifier.b2", self.classifier.b2)]
        return out

    def validate(self):
        d = self.dims
        chain = {
            "encoder.w1": (d.node_dim, d.hidden),
            "encoder.fc_w": (d.fc, d.hidden), "encoder.fc_b": (d.fc,),
            "encoder.out_w": (d.out, d.fc), "encoder.out_b": (d.out,),
            "ast.w": (d.out, d.ast_in), "ast.b": (d.out,),
            "comments.proj_w": (d.out, d.comment_hidden), "comments.proj_b": (d.out,),
            "classifier.w1": (d.clf_hidden, d.clf_in), "classifier.b1": (d.clf_hidden,),
            "classifier.w2": (d.clf_hidden,), "classifier.b2": (),
        }
        for i in range(len(self.encoder.layers)):
            for part in ("wz", "uz", "wr", "ur", "w", "u"):
                chain[f"encoder.gru{i}.{part}"] = (d.hidden, d.hidden)
        for i in range(d.comment_layers):
            c_in = d.comment_embed if i == 0 else d.comment_hidden
            chain[f"comments.conv{i}.w"] = (d.kernel, c_in, d.comment_hidden)
            chain[f"comments.conv{i}.b"] = (d.comment_hidden,)
        for name, arr in self.named_arrays():
            if arr.shape != chain[name]:
                raise DimensionMismatch(
                    f"{name}: expected shape {chain[name]}, found {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    def copy(self) -> "ModelParams":
        src = dict(self.named_arrays())
        clone = init_params(self.dims, seed=0)
        clone.vuln = self.vuln
        for name, arr in clone.named_arrays():
            arr[...] = src[name]
        return clone


class TensorBundle:
    """Tensor view over a ModelParams: same attribute structure, every array
    wrapped in a grad-requiring Tensor sharing the underlying memory."""

    def __init__(self, params: ModelParams):
        self.params = params
        self.tensors: dict[str, Tensor] = {
            name: Tensor(arr, requires_grad=True)
            for name, arr in params.named_arrays()
        }
        d = params.dims
        self.encoder = _Namespace(
            w1=self.tensors["encoder.w1"],
            layers=[_Namespace(**{p: self.tensors[f"encoder.gru{i}.{p}"]
                                  for p in ("wz", "uz", "wr", "ur", "w", "u")})
                    for i in range(len(params.encoder.layers))],
            fc_w=self.tensors["encoder.fc_w"], fc_b=self.tensors["encoder.fc_b"],
            out_w=self.tensors["encoder.out_w"], out_b=self.tensors["encoder.out_b"],
            dropout_p=params.encoder.dropout_p,
        )
        self.ast = _Namespace(w=self.tensors["ast.w"], b=self.tensors["ast.b"])
        self.comments = _Namespace(
            convs=[_Namespace(w=self.tensors[f"comments.conv{i}.w"],
                              b=self.tensors[f"comments.conv{i}.b"])
                   for i in range(d.comment_layers)],
            proj_w=self.tensors["comments.proj_w"],
            proj_b=self.tensors["comments.proj_b"],
        )
        self.classifier = _Namespace(
            w1=self.tensors["classifier.w1"], b1=self.tensors["classifier.b1"],
            w2=self.tensors["classifier.w2"], b2=self.tensors["classifier.b2"],
        )

    def zero_grads(self):
        for t in self.tensors.values():
            t.grad = None


class _Namespace:
    def __init__(self, **kw):
        self.__dict__.update(kw)


def _init_weight(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = shape[-1] if len(shape) == 2 else int(np.prod(shape[:-1])) or 1
    return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)


def init_params(dims: ModelDims, seed: int) -> ModelParams:
    """Seeded deterministic initialization; weights ~ N(0, 1/fan_in), zero biases."""
    rng = np.random.default_rng(seed)
    d = dims
    enc = EncoderParams(
        # w1 is applied as X @ w1, so fan-in is the node dimension (axis 0)
        w1=rng.normal(0.0, 1.0 / np.sqrt(d.node_dim), size=(d.node_dim, d.hidden)),
        layers=[GruLayerParams(*(_init_weight(rng, (d.hidden, d.hidden)) for _ in range(6)))
                for _ in range(3)],
        fc_w=_init_weight(rng, (d.fc, d.hidden)), fc_b=np.zeros(d.fc),
        out_w=_init_weight(rng, (d.out, d.fc)), out_b=np.zeros(d.out),
        dropout_p=d.dropout_p,
    )
    ast = AstParams(w=_init_weight(rng, (d.out, d.ast_in)), b=np.zeros(d.out))
    convs = []
    for i in range(d.comment_layers):
        c_in = d.comment_embed if i == 0 else d.comment_hidden
        convs.append(ConvLayerParams(
            w=rng.normal(0.0, 1.0 / np.sqrt(d.kernel * c_in), size=(d.kernel, c_in, d.comment_hidden)),
            b=np.zeros(d.comment_hidden)))
    com = CommentParams(convs=convs, proj_w=_init_weight(rng, (d.out, d.comment_hidden)),
                        proj_b=np.zeros(d.out))
    clf = ClassifierParams(
        w1=_init_weight(rng, (d.clf_hidden, d.clf_in)), b1=np.zeros(d.clf_hidden),
        w2=rng.normal(0.0, 1.0 / np.sqrt(d.clf_hidden), size=d.clf_hidden),
        b2=np.zeros(()))
    params = ModelParams(dims=dims, encoder=enc, ast=ast, comments=com, classifier=clf)
    params.validate()
    return params


# -- persistence -----------------------------------------------------------

def _dims_meta(dims: ModelDims) -> list[str]:
    return [f"# meta {f.name} {getattr(dims, f.name)}" for f in fields(ModelDims)]


def save_params(params: ModelParams, path: str | Path):
    path = Path(path)
    named = params.named_arrays()
    header = struct.pack("<4sII", _MAGIC, _VERSION, len(named))
    for _, arr in named:
        header += struct.pack("<I", arr.ndim)
        header += struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b""
    payload = b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in named)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(header + payload)
    tmp.replace(path)

    lines = ["# contractlens model manifest"]
    if params.vuln:
        lines.append(f"# meta vuln {params.vuln}")
    lines += _dims_meta(params.dims)
    for name, arr in named:
        shape = "x".join(str(n) for n in arr.shape) if arr.ndim else "scalar"
        lines.append(f"{name}\t{shape}")
    manifest = path.with_suffix(path.suffix + ".manifest")
    tmp = manifest.with_suffix(manifest.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(manifest)


def load_params(path: str | Path) -> ModelParams:
    path = Path(path)
    manifest = path.with_suffix(path.suffix + ".manifest")
    if not path.exists() or not manifest.exists():
        raise ModelMissing(f"model file or manifest missing: {path}")

    meta: dict[str, str] = {}
    names: list[tuple[str, tuple[int, ...]]] = []
    for line in manifest.read_text().splitlines():
        if line.startswith("# meta "):
            _, _, key, value = line.split(" ", 3)
            meta[key] = value
        elif line.startswith("#") or not line.strip():
            continue
        else:
            name, shape_text = line.split("\t")
            shape = () if shape_text == "scalar" else tuple(int(n) for n in shape_text.split("x"))
            names.append((name, shape))

    dim_kwargs = {}
    for f in fields(ModelDims):
        if f.name in meta:
            dim_kwargs[f.name] = float(meta[f.name]) if f.name == "dropout_p" else int(meta[f.name])
    dims = ModelDims(**dim_kwargs)

    raw = path.read_bytes()
    magic, version, n_tensors = struct.unpack_from("<4sII", raw, 0)
    if magic != _MAGIC:
        raise ModelMissing(f"not a model file: {path}")
    if version != _VERSION:
        raise ModelMissing(f"unsupported model version {version}")
    if n_tensors != len(names):
        raise DimensionMismatch(
            f"header lists {n_tensors} tensors, manifest {len(names)}")
    cursor = struct.calcsize("<4sII")
    header_shapes = []
    for _ in range(n_tensors):
        (ndim,) = struct.unpack_from("<I", raw, cursor)
        cursor += 4
        shape = struct.unpack_from(f"<{ndim}I", raw, cursor) if ndim else ()
        cursor += 4 * ndim
        header_shapes.append(tuple(shape))

    params = init_params(dims, seed=0)
    params.vuln = meta.get("vuln")
    arrays = dict(params.named_arrays())
    for (name, m_shape), h_shape in zip(names, header_shapes):
        if m_shape != h_shape:
            raise DimensionMismatch(f"{name}: manifest {m_shape} != header {h_shape}")
        if name not in arrays:
            raise ModelMissing(f"unknown tensor in manifest: {name}")
        count = int(np.prod(m_shape)) if m_shape else 1
        values = np.frombuffer(raw, dtype="<f8", count=count, offset=cursor)
        cursor += 8 * count
        arrays[name][...] = values.reshape(m_shape)
    params.validate()
    return params
