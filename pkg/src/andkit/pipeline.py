"""Training orchestration: curriculum rounds, epoch loop, checkpoints.

A run is one instance-only warm-up phase followed by R curriculum rounds.
At the start of round r the memory bank is frozen for planning: every
sample's similarity distribution (query = its own memory row) yields a
consistency entropy, the floor(N * r / R) lowest-entropy anchors are
selected for neighbourhood supervision, and exact top-k neighbourhoods are
built. The plan stays fixed for the whole round while the bank itself
keeps updating every batch.

Training never sees labels: `train` accepts only the raw input matrix.
Label-dependent diagnostics (neighbourhood consistency, kNN accuracy)
enter through the optional `monitor` callback wired up by the CLI.

Checkpoint format (extension ``.andc``, all integers little-endian):

    magic    4 bytes  b"ANDC"
    version  u16      1
    config   fixed-order block:
        rounds, epochs_per_round, init_epochs*, batch_size, k,
        final_round                                   each u32
        seed                                          i64
        lr_reset_per_round, one_off, instance_only,
        force_singleton_neighbourhoods                each u8
        base_lr, momentum, tau, eta                   each f64
        (*) init_epochs stores 0xFFFFFFFF when unset
    layers   u32 count, then one u32 per layer size
    params   per layer: row-major f64 weights, then f64 biases
    bank     u32 n, u32 d, then row-major f64 feature rows
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .affinity import (
    Neighbourhood,
    build_neighbourhoods,
    entropy_rows,
    singleton,
)
from .data import make_batches
from .encoder import (
    EncoderConfig,
    EncoderParams,
    OptimState,
    backward,
    forward,
    init_params,
    lr_at,
    sgd_nesterov_step,
)
from .errors import ConfigurationError, ContractError, DegenerateInputError, FormatError
from .losses import round_batch_loss
from .memory import FeatureBank, init_bank, update_batch
from .numerics import SeededRng, derive_seed, stable_softmax

_MAGIC = b"ANDC"
_VERSION = 1
_HEAD = struct.Struct("<4sH")
_CONFIG = struct.Struct("<6IqBBBBdddd")
_INIT_UNSET = 0xFFFFFFFF

MonitorFn = Callable[[int, "RoundPlan", FeatureBank, EncoderParams], dict]


@dataclass(frozen=True)
class TrainConfig:
    """Full recipe for one training run; every knob is seed-determined."""

    layer_sizes: tuple[int, ...]
    rounds: int = 4
    epochs_per_round: int = 200
    init_epochs: int | None = None  # None means "same as epochs_per_round"
    batch_size: int = 128
    base_lr: float = 0.03
    momentum: float = 0.9
    tau: float = 0.07
    eta: float = 0.5
    k: int = 1
    seed: int = 0
    lr_reset_per_round: bool = False
    one_off: bool = False  # ablation: plan all anchors at round 1, never re-plan
    instance_only: bool = False  # baseline: every sample keeps its instance term
    force_singleton_neighbourhoods: bool = False  # test hook: k-NN search disabled

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))

    def validate(self) -> None:
        if self.rounds < 1:
            raise ConfigurationError(f"rounds must be >= 1, got {self.rounds}")
        if self.epochs_per_round < 0 or (self.init_epochs is not None and self.init_epochs < 0):
            raise ConfigurationError("epoch counts must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.base_lr > 0:
            raise ConfigurationError(f"base_lr must be > 0, got {self.base_lr}")
        if self.momentum < 0:
            raise ConfigurationError(f"momentum must be >= 0, got {self.momentum}")
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be > 0, got {self.tau}")
        if not 0.0 < self.eta <= 1.0:
            raise ConfigurationError(f"eta must lie in (0, 1], got {self.eta}")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        EncoderConfig(layer_sizes=self.layer_sizes)

    @property
    def init_epochs_resolved(self) -> int:
        return self.epochs_per_round if self.init_epochs is None else self.init_epochs


@dataclass
class RoundPlan:
    """Frozen curriculum state for one round."""

    r: int
    entropies: np.ndarray  # (n,) consistency entropies at planning time
    selected: np.ndarray  # (n,) bool, True for neighbourhood-supervised anchors
    neighbourhoods: tuple[Neighbourhood, ...]  # one per selected anchor
    _by_anchor: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._by_anchor = {nb.anchor: nb for nb in self.neighbourhoods}

    def neighbourhood_for(self, anchor: int) -> Neighbourhood:
        try:
            return self._by_anchor[anchor]
        except KeyError:
            raise ContractError(f"no frozen neighbourhood for anchor {anchor}") from None

    @property
    def selected_fraction(self) -> float:
        return float(self.selected.mean())


@dataclass
class MetricsRecord:
    """One training epoch's diagnostics; JSONL-friendly."""

    round: int
    epoch: int
    mean_loss: float
    selected_fraction: float
    consistent_count: int | None = None
    inconsistent_count: int | None = None
    knn_accuracy: float | None = None


def select_anchors(entropies, r: int, R: int) -> np.ndarray:
    """Mask of the floor(N * r / R) lowest-entropy anchors, ties to lower index."""
    if not 1 <= r <= R:
        raise ContractError(f"round {r} outside [1, {R}]")
    h = np.asarray(entropies, dtype=np.float64)
    count = (h.size * r) // R
    mask = np.zeros(h.size, dtype=bool)
    mask[np.argsort(h, kind="stable")[:count]] = True
    return mask


def bank_entropies(bank: FeatureBank, tau: float) -> np.ndarray:
    """Consistency entropy of every memory row queried against the whole bank."""
    probs = stable_softmax(bank.features @ bank.features.T / tau)
    return entropy_rows(probs)


def plan_round(bank: FeatureBank, config: TrainConfig, r: int) -> RoundPlan:
    """Freeze entropies, neighbourhoods, and the selection mask for round r."""
    entropies = bank_entropies(bank, config.tau)
    selected = select_anchors(entropies, r, config.rounds)
    if config.force_singleton_neighbourhoods:
        neighbourhoods = [singleton(i) for i in range(bank.n)]
    else:
        neighbourhoods = build_neighbourhoods(bank, config.k)
    kept = tuple(nb for nb in neighbourhoods if selected[nb.anchor])
    return RoundPlan(r=r, entropies=entropies, selected=selected, neighbourhoods=kept)


def _instance_plan(n: int) -> RoundPlan:
    return RoundPlan(
        r=0,
        entropies=np.zeros(n),
        selected=np.zeros(n, dtype=bool),
        neighbourhoods=(),
    )


def train(
    inputs,
    config: TrainConfig,
    monitor: MonitorFn | None = None,
) -> tuple[EncoderParams, FeatureBank, list[MetricsRecord]]:
    """Run the full curriculum and return final params, bank, and metrics.

    `inputs` is the raw (n, d_in) sample matrix; labels are deliberately
    not accepted here. The run is bit-reproducible from `config.seed`: the
    seed is split into independent streams for weight init, bank init, and
    batch shuffling. `monitor`, when given, is called once per round with
    (round, plan, bank, params) and may return extra MetricsRecord fields
    (consistency counts, kNN accuracy) merged into that round's records.
    """
    config.validate()
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigurationError(f"inputs must be a 2-D matrix, got shape {x.shape}")
    n = x.shape[0]
    if x.shape[1] != config.layer_sizes[0]:
        raise ConfigurationError(
            f"input dim {x.shape[1]} != first layer size {config.layer_sizes[0]}"
        )
    if n < 2:
        raise ConfigurationError(f"need at least 2 samples, got {n}")

    params = init_params(EncoderConfig(config.layer_sizes, seed=derive_seed(config.seed, 1)))
    bank = init_bank(n, config.layer_sizes[-1], SeededRng(derive_seed(config.seed, 2)), config.eta)
    batch_rng = SeededRng(derive_seed(config.seed, 3))
    opt = OptimState.init_like(params, lr=config.base_lr, momentum=config.momentum)
    batch_size = min(config.batch_size, n)

    records: list[MetricsRecord] = []
    global_epoch = 0

    def run_epoch(plan: RoundPlan, round_idx: int, epoch_in_phase: int, extra: dict) -> None:
        nonlocal global_epoch
        schedule_epoch = epoch_in_phase if config.lr_reset_per_round else global_epoch
        opt.lr = lr_at(schedule_epoch, config.base_lr, config.epochs_per_round)
        loss_sum = 0.0
        for batch in make_batches(n, batch_size, batch_rng):
            try:
                feats, cache = forward(params, x[batch])
            except DegenerateInputError as err:
                row = getattr(err, "row", None)
                sample = int(batch[row]) if row is not None else -1
                raise DegenerateInputError(f"sample {sample}: {err}") from err
            pairs = list(zip((int(i) for i in batch), feats))
            loss, gfeats = round_batch_loss(pairs, plan, bank, config.tau)
            sgd_nesterov_step(params, backward(params, cache, gfeats), opt)
            update_batch(bank, batch, feats)
            loss_sum += loss * batch.size
        records.append(
            MetricsRecord(
                round=round_idx,
                epoch=global_epoch,
                mean_loss=loss_sum / n,
                selected_fraction=plan.selected_fraction,
                **extra,
            )
        )
        global_epoch += 1
        opt.epoch = global_epoch

    warmup = _instance_plan(n)
    for e in range(config.init_epochs_resolved):
        run_epoch(warmup, 0, e, {})

    plan = None
    for r in range(1, config.rounds + 1):
        if plan is None or not config.one_off:
            # one-off mode plans once, at full selection, and never re-plans
            plan = plan_round(bank, config, config.rounds if config.one_off else r)
        if config.instance_only:
            plan = replace(plan, selected=np.zeros(n, dtype=bool), neighbourhoods=())
        extra = dict(monitor(r, plan, bank, params)) if monitor is not None else {}
        for e in range(config.epochs_per_round):
            run_epoch(plan, r, e, extra)
    return params, bank, records


@dataclass
class Checkpoint:
    params: EncoderParams
    bank: FeatureBank
    config: TrainConfig
    final_round: int


def save_checkpoint(
    params: EncoderParams,
    bank: FeatureBank,
    config: TrainConfig,
    path,
    final_round: int | None = None,
) -> None:
    """Serialise params, bank, and config; the round trip is bit-exact."""
    sizes = params.layer_sizes
    if tuple(config.layer_sizes) != sizes:
        raise ContractError(f"config layers {config.layer_sizes} != params layers {sizes}")
    final_round = config.rounds if final_round is None else final_round
    init_epochs = _INIT_UNSET if config.init_epochs is None else config.init_epochs
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_MAGIC, _VERSION))
        fh.write(
            _CONFIG.pack(
                config.rounds,
                config.epochs_per_round,
                init_epochs,
                config.batch_size,
                config.k,
                final_round,
                config.seed,
                int(config.lr_reset_per_round),
                int(config.one_off),
                int(config.instance_only),
                int(config.force_singleton_neighbourhoods),
                config.base_lr,
                config.momentum,
                config.tau,
                config.eta,
            )
        )
        fh.write(struct.pack("<I", len(sizes)))
        fh.write(struct.pack(f"<{len(sizes)}I", *sizes))
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
        fh.write(struct.pack("<II", bank.n, bank.d))
        fh.write(np.ascontiguousarray(bank.features, dtype="<f8").tobytes())


def load_checkpoint(path, expect_layer_sizes: tuple[int, ...] | None = None) -> Checkpoint:
    """Read a checkpoint back; `expect_layer_sizes` guards resume shape safety."""
    with open(path, "rb") as fh:
        blob = fh.read()
    view = memoryview(blob)
    off = 0

    def take(num: int) -> memoryview:
        nonlocal off
        if off + num > len(blob):
            raise FormatError(f"{path}: truncated at byte {off} (+{num} needed)")
        chunk = view[off : off + num]
        off += num
        return chunk

    magic, version = _HEAD.unpack(take(_HEAD.size))
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (
        rounds,
        epochs_per_round,
        init_epochs,
        batch_size,
        k,
        final_round,
        seed,
        lr_reset,
        one_off,
        instance_only,
        force_singleton,
        base_lr,
        momentum,
        tau,
        eta,
    ) = _CONFIG.unpack(take(_CONFIG.size))
    (num_sizes,) = struct.unpack("<I", take(4))
    if num_sizes < 2:
        raise FormatError(f"{path}: invalid layer count {num_sizes}")
    sizes = struct.unpack(f"<{num_sizes}I", take(4 * num_sizes))
    if expect_layer_sizes is not None and tuple(expect_layer_sizes) != tuple(sizes):
        raise FormatError(
            f"{path}: checkpoint layers {sizes} do not match expected {tuple(expect_layer_sizes)}"
        )
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(
            np.frombuffer(take(8 * fan_out * fan_in), dtype="<f8").reshape(fan_out, fan_in).copy()
        )
        biases.append(np.frombuffer(take(8 * fan_out), dtype="<f8").copy())
    bank_n, bank_d = struct.unpack("<II", take(8))
    if bank_n < 2 or bank_d != sizes[-1]:
        raise FormatError(f"{path}: invalid bank dimensions ({bank_n}, {bank_d})")
    features = np.frombuffer(take(8 * bank_n * bank_d), dtype="<f8").reshape(bank_n, bank_d).copy()
    if off != len(blob):
        raise FormatError(f"{path}: {len(blob) - off} trailing bytes")
    config = TrainConfig(
        layer_sizes=tuple(sizes),
        rounds=rounds,
        epochs_per_round=epochs_per_round,
        init_epochs=None if init_epochs == _INIT_UNSET else init_epochs,
        batch_size=batch_size,
        base_lr=base_lr,
        momentum=momentum,
        tau=tau,
        eta=eta,
        k=k,
        seed=seed,
        lr_reset_per_round=bool(lr_reset),
        one_off=bool(one_off),
        instance_only=bool(instance_only),
        force_singleton_neighbourhoods=bool(force_singleton),
    )
    return Checkpoint(
        params=EncoderParams(weights=weights, biases=biases),
        bank=FeatureBank(features=features, eta=eta),
        config=config,
        final_round=final_round,
    )
