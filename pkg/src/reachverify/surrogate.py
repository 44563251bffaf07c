"""Learned one-step operator: 16-wide input scope vector -> 12-wide output.

Each of the 8 physical variables becomes one token holding its (center,
radius) pair. Tokens go through a per-variable position mapping, a
transformer encoder backbone (input linear, ``num_blocks`` post-norm
self-attention blocks, output linear), GELU, and a two-layer decoder with a
GELU between the layers. The decoder predicts the change of the state
centers and radii in normalized units; the affine scaling constants live in
the model and are saved with it.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import struct
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from . import scope
from .errors import ConfigInvalid, CorruptFile, DatasetEmpty, FormatVersionMismatch, NonFiniteInput, NonFiniteLoss

log = logging.getLogger(__name__)

N_TOKENS = 8
MAGIC = b"RVOP"
FORMAT_VERSION = 1
_DTYPES = {torch.float32: (0, "<f4"), torch.float64: (1, "<f8")}
_DTYPE_CODES = {code: (tdt, npdt) for tdt, (code, npdt) in _DTYPES.items()}

# scope-vector indices of the state part of the input (centers, radii)
_BASE_INDEX = list(range(0, 6)) + list(range(8, 14))


@dataclass
class OperatorConfig:
    token_dim: int = 64
    num_blocks: int = 8
    num_heads: int = 4
    ff_dim: int = 128
    decoder_dim: int = 256
    learning_rate: float = 5e-4
    lr_decay: float = 0.5
    lr_step: int = 150
    epochs: int = 200
    batch_size: int = 256
    seed: int = 0

    def validate(self) -> OperatorConfig:
        for name in ("token_dim", "num_blocks", "num_heads", "ff_dim", "decoder_dim", "lr_step", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise ConfigInvalid(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ConfigInvalid("epochs must be >= 0")
        if self.token_dim % self.num_heads:
            raise ConfigInvalid(f"token_dim {self.token_dim} is not divisible by num_heads {self.num_heads}")
        if not (self.learning_rate > 0 and 0 < self.lr_decay <= 1):
            raise ConfigInvalid("learning_rate must be positive and lr_decay in (0, 1]")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> OperatorConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigInvalid(f"unknown operator config keys: {sorted(unknown)}")
        return cls(**d)


class SelfAttention(nn.Module):
    def __init__(self, dim, heads):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, x):
        b, t, d = x.shape
        hd = d // self.heads
        q, k, v = self.qkv(x).view(b, t, 3, self.heads, hd).permute(2, 0, 3, 1, 4)
        att = torch.softmax(q @ k.transpose(-2, -1) / math.sqrt(hd), dim=-1)
        y = (att @ v).transpose(1, 2).reshape(b, t, d)
        return self.out(y)


class EncoderBlock(nn.Module):
    def __init__(self, dim, heads, ff_dim):
        super().__init__()
        self.attn = SelfAttention(dim, heads)
        self.norm1 = nn.LayerNorm(dim)
        self.ff1 = nn.Linear(dim, ff_dim)
        self.ff2 = nn.Linear(ff_dim, dim)
        self.norm2 = nn.LayerNorm(dim)

    def forward(self, x):
        x = self.norm1(x + self.attn(x))
        return self.norm2(x + self.ff2(F.gelu(self.ff1(x))))


class OperatorNet(nn.Module):
    def __init__(self, cfg: OperatorConfig):
        super().__init__()
        d = cfg.token_dim
        self.embed_weight = nn.Parameter(torch.empty(N_TOKENS, 2, d))
        self.embed_bias = nn.Parameter(torch.zeros(N_TOKENS, d))
        nn.init.normal_(self.embed_weight, std=1.0 / math.sqrt(2.0))
        self.backbone_in = nn.Linear(d, d)
        self.blocks = nn.ModuleList(EncoderBlock(d, cfg.num_heads, cfg.ff_dim) for _ in range(cfg.num_blocks))
        self.backbone_out = nn.Linear(d, d)
        self.fc1 = nn.Linear(N_TOKENS * d, cfg.decoder_dim)
        self.fc2 = nn.Linear(cfg.decoder_dim, scope.N_OUT)
        self.register_buffer("in_shift", torch.zeros(scope.N_IN))
        self.register_buffer("in_scale", torch.ones(scope.N_IN))
        self.register_buffer("out_shift", torch.zeros(scope.N_OUT))
        self.register_buffer("out_scale", torch.ones(scope.N_OUT))

    def normalized(self, x):
        """Decoder output in normalized units (before rescaling and the residual)."""
        z = (x - self.in_shift) / self.in_scale
        tokens = torch.stack([z[:, :N_TOKENS], z[:, N_TOKENS:]], dim=-1)
        h = torch.einsum("btc,tcd->btd", tokens, self.embed_weight) + self.embed_bias
        h = self.backbone_in(h)
        for block in self.blocks:
            h = block(h)
        h = F.gelu(self.backbone_out(h))
        h = F.gelu(self.fc1(h.flatten(1)))
        return self.fc2(h)

    def forward(self, x):
        """Raw (unclamped) output scope vector."""
        return x[:, _BASE_INDEX] + self.out_shift + self.out_scale * self.normalized(x)


@dataclass
class SurrogateModel:
    net: OperatorNet
    config: OperatorConfig
    metadata: dict = field(default_factory=dict)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.net.parameters())

    def set_scaling(self, inputs: np.ndarray, labels: np.ndarray) -> None:
        """Fit the affine input/output scaling constants to a training set."""
        x = np.asarray(inputs, dtype=np.float64)
        delta = np.asarray(labels, dtype=np.float64) - x[:, _BASE_INDEX]
        buf = dict(self.net.named_buffers())
        dtype = buf["in_shift"].dtype
        buf["in_shift"].copy_(torch.as_tensor(x.mean(axis=0), dtype=dtype))
        buf["in_scale"].copy_(torch.as_tensor(np.maximum(x.std(axis=0), 1e-6), dtype=dtype))
        buf["out_shift"].copy_(torch.as_tensor(delta.mean(axis=0), dtype=dtype))
        buf["out_scale"].copy_(torch.as_tensor(np.maximum(delta.std(axis=0), 1e-6), dtype=dtype))

    def __call__(self, inputs):
        return forward(self, inputs)

    def weights_digest(self) -> str:
        """sha256 over parameters and buffers; independent of metadata such as timings."""
        h = hashlib.sha256()
        for name, t in sorted(self.net.state_dict().items()):
            h.update(name.encode())
            h.update(t.detach().cpu().contiguous().numpy().tobytes())
        return h.hexdigest()


def parameter_count_formula(cfg: OperatorConfig) -> int:
    d, f, h = cfg.token_dim, cfg.ff_dim, cfg.decoder_dim
    embed = N_TOKENS * 2 * d + N_TOKENS * d
    backbone = 2 * (d * d + d)
    block = (3 * d * d + 3 * d) + (d * d + d) + (d * f + f) + (f * d + d) + 4 * d
    decoder = (N_TOKENS * d * h + h) + (h * scope.N_OUT + scope.N_OUT)
    return embed + backbone + cfg.num_blocks * block + decoder


def build_model(cfg: OperatorConfig, seed=None) -> SurrogateModel:
    cfg.validate()
    seed = cfg.seed if seed is None else seed
    gen_state = torch.random.get_rng_state()
    try:
        torch.manual_seed(int(seed))
        net = OperatorNet(cfg)
    finally:
        torch.random.set_rng_state(gen_state)
    return SurrogateModel(net, cfg, {"init_seed": int(seed)})


def _as_tensor(model: SurrogateModel, inputs) -> torch.Tensor:
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape[-1] != scope.N_IN:
        raise ValueError(f"expected input scope vectors of width {scope.N_IN}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input scope vector contains NaN or Inf")
    dtype = next(model.net.parameters()).dtype
    return torch.as_tensor(x.reshape(-1, scope.N_IN), dtype=dtype)


def forward(model: SurrogateModel, inputs) -> np.ndarray:
    """Predict output scope vectors; radii are clamped at zero.

    Accepts a single 16-vector or a (k, 16) batch and returns the matching shape.
    """
    single = np.ndim(inputs) == 1
    x = _as_tensor(model, inputs)
    model.net.eval()
    with torch.no_grad():
        y = model.net(x).to(torch.float64).numpy()
    y[:, 6:] = np.maximum(y[:, 6:], 0.0)
    return y[0] if single else y


def normalized_l1(model: SurrogateModel, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Mean absolute error over the 12 outputs, in units of the output scaling."""
    target = (y - x[:, _BASE_INDEX] - model.net.out_shift) / model.net.out_scale
    return F.l1_loss(model.net.normalized(x), target)


def evaluate_loss(model: SurrogateModel, inputs, labels, batch_size=4096) -> float:
    x = _as_tensor(model, inputs)
    y = torch.as_tensor(np.asarray(labels), dtype=x.dtype)
    model.net.eval()
    total = 0.0
    with torch.no_grad():
        for i in range(0, len(x), batch_size):
            total += float(normalized_l1(model, x[i:i + batch_size], y[i:i + batch_size])) * len(x[i:i + batch_size])
    return total / max(len(x), 1)


def learning_rate_at(cfg: OperatorConfig, epoch: int) -> float:
    """Learning rate in effect during ``epoch`` (0-based): halved every lr_step epochs."""
    return cfg.learning_rate * cfg.lr_decay ** (epoch // cfg.lr_step)


@dataclass
class TrainResult:
    model: SurrogateModel
    loss_history: list
    lr_history: list
    initial_loss: float
    seconds: float


def train(model: SurrogateModel, inputs, labels, cfg: OperatorConfig | None = None,
          fit_scaling: bool = True, progress=None) -> TrainResult:
    """RMSprop on the normalized L1 loss with a step learning-rate schedule.

    Shuffling uses a numpy generator seeded from ``cfg.seed`` so two runs
    with the same inputs produce the same loss history.
    """
    cfg = (cfg or model.config).validate()
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if len(inputs) == 0:
        raise DatasetEmpty("no training samples")
    if inputs.shape[1:] != (scope.N_IN,) or labels.shape[1:] != (scope.N_OUT,) or len(inputs) != len(labels):
        raise ValueError(f"expected (n, {scope.N_IN}) inputs and (n, {scope.N_OUT}) labels")
    if fit_scaling:
        model.set_scaling(inputs, labels)
    x = _as_tensor(model, inputs)
    y = torch.as_tensor(labels, dtype=x.dtype)
    initial = evaluate_loss(model, inputs, labels)

    torch.manual_seed(int(cfg.seed))
    opt = torch.optim.RMSprop(model.net.parameters(), lr=cfg.learning_rate)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=cfg.lr_step, gamma=cfg.lr_decay)
    rng = np.random.default_rng(int(cfg.seed))
    history, lrs = [], []
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        model.net.train()
        lrs.append(opt.param_groups[0]["lr"])
        perm = torch.as_tensor(rng.permutation(len(x)))
        total = 0.0
        for i in range(0, len(x), cfg.batch_size):
            idx = perm[i:i + cfg.batch_size]
            loss = normalized_l1(model, x[idx], y[idx])
            if not torch.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss.item()} at epoch {epoch}, batch {i // cfg.batch_size}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        sched.step()
        history.append(total / len(x))
        if progress is not None:
            progress(epoch, history[-1], lrs[-1])
    seconds = time.perf_counter() - t0
    model.metadata.update({"train_samples": int(len(x)), "epochs": int(cfg.epochs),
                           "train_seconds": seconds, "final_loss": history[-1] if history else initial})
    return TrainResult(model, history, lrs, initial, seconds)


def save_model(model: SurrogateModel, path) -> None:
    """Little-endian binary: magic, version, JSON header, tensors, sha256."""
    header = json.dumps({"config": asdict(model.config), "metadata": model.metadata},
                        sort_keys=True).encode()
    state = model.net.state_dict()
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(header)), header, struct.pack("<I", len(state))]
    for name, t in state.items():
        code, npdt = _DTYPES[t.dtype]
        raw = name.encode()
        parts.append(struct.pack("<H", len(raw)) + raw + struct.pack("<BB", code, t.dim()))
        parts.append(struct.pack(f"<{t.dim()}I", *t.shape))
        parts.append(np.ascontiguousarray(t.detach().cpu().numpy(), dtype=npdt).tobytes())
    body = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(body + hashlib.sha256(body).digest())


class _Reader:
    def __init__(self, buf):
        self.buf, self.pos = buf, 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise CorruptFile("unexpected end of model file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_model(path) -> SurrogateModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 8 + 32:
        raise CorruptFile(f"{path}: file too short")
    if data[:len(MAGIC)] != MAGIC:
        raise CorruptFile(f"{path}: not a surrogate model file")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptFile(f"{path}: checksum mismatch")
    r = _Reader(body)
    r.take(len(MAGIC))
    version, hlen = r.unpack("<II")
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    header = json.loads(r.take(hlen))
    cfg = OperatorConfig.from_dict(header["config"]).validate()
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode()
        code, ndim = r.unpack("<BB")
        shape = r.unpack(f"<{ndim}I")
        tdt, npdt = _DTYPE_CODES[code]
        n = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(r.take(n * np.dtype(npdt).itemsize), dtype=npdt).reshape(shape)
        tensors[name] = torch.from_numpy(arr.copy())
    model = build_model(cfg)
    dtype = next(iter(tensors.values())).dtype
    model.net.to(dtype)
    expected = model.net.state_dict()
    if set(expected) != set(tensors):
        raise CorruptFile(f"{path}: tensor names do not match the declared architecture")
    for name, t in tensors.items():
        if tuple(t.shape) != tuple(expected[name].shape):
            raise CorruptFile(f"{path}: tensor {name} has shape {tuple(t.shape)}, "
                              f"config implies {tuple(expected[name].shape)}")
    model.net.load_state_dict(tensors)
    model.metadata = header.get("metadata", {})
    return model


def make_stepper(model: SurrogateModel):
    """Adapt a surrogate model to the oracle stepper signature (StepInput -> IntervalBox)."""

    def step(inp):
        return scope.from_output(forward(model, scope.to_input(inp.state_box, inp.control_box)))

    step.__name__ = "surrogate_step"
    step.model = model
    return step


def set_threads(n: int | None = None) -> int:
    """Pin torch intra-op threads; defaults to REACHVERIFY_THREADS or 1."""
    import os
    n = int(n if n is not None else os.environ.get("REACHVERIFY_THREADS", 1))
    torch.set_num_threads(max(n, 1))
    return torch.get_num_threads()
