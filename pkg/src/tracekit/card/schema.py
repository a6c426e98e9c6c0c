"""
Workload card schema.

The card is the YAML document that makes a trace interpretable: which model ran,
on what data, on which hardware, with which software stack. Field paths follow the
published template, e.g. ``workload.model.model_arch.num_params`` and
``Model-executor.model_plan_parallelization.tp``. Provenance keys (``version``,
``description``, ``hf_url``, ``trace_url``, ``contributor``, ``contact``) sit at the
top level of the document.

Absent optional fields are ``None``; nothing is defaulted silently. Keys the schema
does not know are kept in ``WorkloadCard.extras`` under their dotted path and are
written back by ``serialize_card``.

Example:
    >>> card = parse_card(open("card.yaml", "rb").read())
    >>> card.phase, card.parallelization.tp
    ('training', 4)
    >>> card = parse_card(serialize_card(card))  # fixed point
"""

import logging
from dataclasses import dataclass, field, fields, is_dataclass
from functools import cache
from types import NoneType, UnionType
from typing import Any, Union, get_args, get_origin, get_type_hints

import yaml

from tracekit.errors import ParseError, SchemaError

logger = logging.getLogger(__name__)

PHASES = ("training", "inference")


@dataclass(frozen=True)
class Provenance:
    version: str | None = None
    description: str | None = None
    hf_url: str | None = None
    trace_url: str | None = None
    contributor: str | None = None
    contact: str | None = None


@dataclass(frozen=True)
class ModelArch:
    num_params: int | None = None
    num_params_active: int | None = None
    num_params_embedding: int | None = None
    num_layers: int | None = None
    num_heads: int | None = None
    head_dim: int | None = None


@dataclass(frozen=True)
class ModelSpec:
    phase: str | None = None
    moe: bool | None = None
    granularity: str | None = None
    model_family: str | None = None
    precision: str | None = None
    epochs: int | None = None
    iteration: int | None = None
    first_step_is_prefill: bool | None = None
    model_arch: ModelArch = field(default_factory=ModelArch)


@dataclass(frozen=True)
class DataSpec:
    batch_size: int | None = None
    seq_len: int | None = None
    input_len: int | None = None
    output_len: int | None = None
    dataset: str | None = None


@dataclass(frozen=True)
class NetworkTopo:
    """``bandwidth_gbps`` is read as [scale-out, scale-up] in Gbit/s."""

    topology: str | None = None
    bandwidth_gbps: tuple[float, ...] | None = None

    @property
    def scale_out_gbps(self) -> float | None:
        return self.bandwidth_gbps[0] if self.bandwidth_gbps else None

    @property
    def scale_up_gbps(self) -> float | None:
        if not self.bandwidth_gbps or len(self.bandwidth_gbps) < 2:
            return None
        return self.bandwidth_gbps[1]


@dataclass(frozen=True)
class XpuSpec:
    type: str | None = None
    model: str | None = None
    total_count: int | None = None
    count_per_node: int | None = None


@dataclass(frozen=True)
class HardwareSpec:
    network_topo: NetworkTopo = field(default_factory=NetworkTopo)
    xpu_spec: XpuSpec = field(default_factory=XpuSpec)
    driver_version: str | None = None


@dataclass(frozen=True)
class Workload:
    model: ModelSpec = field(default_factory=ModelSpec)
    data: DataSpec = field(default_factory=DataSpec)
    hardware: HardwareSpec = field(default_factory=HardwareSpec)


@dataclass(frozen=True)
class Framework:
    name: str | None = None
    version: str | None = None


@dataclass(frozen=True)
class Parallelization:
    dp_replicate: int | None = None
    dp_shard: int | None = None
    tp: int | None = None
    pp: int | None = None
    cp: int | None = None
    ep: int | None = None
    pp_mb: int | None = None

    DEGREES = ("dp_replicate", "dp_shard", "tp", "pp", "cp", "ep", "pp_mb")


@dataclass(frozen=True)
class CommLibrary:
    name: str | None = None
    version: str | None = None
    env: dict | None = None


@dataclass(frozen=True)
class ExecutorSpec:
    framework: Framework = field(default_factory=Framework)
    compiler_tool_selection: str | None = None
    parallelization: Parallelization = field(
        default_factory=Parallelization,
        metadata={"key": "model_plan_parallelization", "aliases": ("parallelization",)},
    )
    communication_library: CommLibrary = field(default_factory=CommLibrary)
    protocol_selection: tuple[str, ...] | None = None


@dataclass(frozen=True)
class MetricSource:
    traces: tuple[str, ...] | None = None
    metrics_specific_trace: Any = None


@dataclass(frozen=True)
class WorkloadCard:
    """
    Parsed workload card. Build with ``parse_card`` or ``load_card``.
    """

    provenance: Provenance = field(default_factory=Provenance, metadata={"flatten": True})
    workload: Workload = field(default_factory=Workload)
    model_executor: ExecutorSpec = field(
        default_factory=ExecutorSpec, metadata={"key": "Model-executor", "aliases": ("model_executor",)}
    )
    metric_source: MetricSource = field(default_factory=MetricSource)
    extras: dict = field(default_factory=dict)
    source: str = field(default="", compare=False)

    @property
    def model(self) -> ModelSpec:
        return self.workload.model

    @property
    def arch(self) -> ModelArch:
        return self.workload.model.model_arch

    @property
    def data(self) -> DataSpec:
        return self.workload.data

    @property
    def hardware(self) -> HardwareSpec:
        return self.workload.hardware

    @property
    def xpu(self) -> XpuSpec:
        return self.workload.hardware.xpu_spec

    @property
    def parallelization(self) -> Parallelization:
        return self.model_executor.parallelization

    @property
    def phase(self) -> str | None:
        return self.workload.model.phase

    @property
    def is_training(self) -> bool:
        return self.phase == "training"

    @property
    def is_inference(self) -> bool:
        return self.phase == "inference"

    @property
    def is_moe(self) -> bool:
        return bool(self.workload.model.moe)

    @property
    def first_step_is_prefill(self) -> bool:
        flag = self.workload.model.first_step_is_prefill
        return True if flag is None else flag

    @property
    def ref(self) -> str:
        """Short identifier echoed in profiles."""
        return self.source or self.workload.model.model_family or ""


REQUIRED_FIELDS = (
    "workload.model.phase",
    "workload.model.model_family",
    "workload.data.batch_size",
    "workload.data.seq_len",
    "workload.hardware.xpu_spec.model",
    "workload.hardware.xpu_spec.total_count",
)


def _key(f) -> str:
    return f.metadata.get("key", f.name)


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _scalar_type(hint) -> Any:
    if get_origin(hint) in (Union, UnionType):
        args = [a for a in get_args(hint) if a is not NoneType]
        return args[0] if len(args) == 1 else Any
    return hint


def _coerce(raw: Any, hint, path: str) -> Any:
    if raw is None:
        return None
    base = _scalar_type(hint)
    origin = get_origin(base) or base
    if base is Any:
        return raw
    if origin is bool:
        if not isinstance(raw, bool):
            raise SchemaError(path, f"expected true/false, got {raw!r}")
        return raw
    if origin is int:
        if isinstance(raw, bool):
            raise SchemaError(path, f"expected an integer, got {raw!r}")
        if isinstance(raw, int):
            return raw
        try:
            number = float(raw)
        except (TypeError, ValueError):
            raise SchemaError(path, f"expected an integer, got {raw!r}") from None
        if not number.is_integer():
            raise SchemaError(path, f"expected an integer, got {raw!r}")
        return int(number)
    if origin is float:
        if isinstance(raw, bool):
            raise SchemaError(path, f"expected a number, got {raw!r}")
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise SchemaError(path, f"expected a number, got {raw!r}") from None
    if origin is str:
        if isinstance(raw, (dict, list)):
            raise SchemaError(path, f"expected a string, got {raw!r}")
        return str(raw)
    if origin is tuple:
        items = raw if isinstance(raw, list) else [raw]
        item_hint = get_args(base)[0] if get_args(base) else Any
        return tuple(_coerce(item, item_hint, path) for item in items)
    if origin is dict:
        if not isinstance(raw, dict):
            raise SchemaError(path, f"expected a mapping, got {raw!r}")
        return dict(raw)
    return raw


def _bind(cls, data: Any, path: str, extras: dict) -> Any:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SchemaError(path or "<root>", "expected a mapping")
    hints = get_type_hints(cls)
    values: dict[str, Any] = {}
    known: set[str] = set()
    for f in fields(cls):
        if f.name in ("extras", "source"):
            continue
        hint = hints[f.name]
        if f.metadata.get("flatten"):
            sub = {_key(g): data[_key(g)] for g in fields(hint) if _key(g) in data}
            known.update(sub)
            values[f.name] = _bind(hint, sub, path, extras)
            continue
        keys = (_key(f), *f.metadata.get("aliases", ()))
        known.update(keys)
        present = [k for k in keys if k in data]
        raw = data[present[0]] if present else None
        sub_path = _join(path, keys[0])
        if is_dataclass(hint):
            values[f.name] = _bind(hint, raw, sub_path, extras)
        else:
            values[f.name] = _coerce(raw, hint, sub_path)
    for key, value in data.items():
        if key not in known:
            extras[_join(path, str(key))] = value
    return cls(**values)


def _unbind(obj) -> dict:
    out: dict[str, Any] = {}
    for f in fields(obj):
        if f.name in ("extras", "source"):
            continue
        value = getattr(obj, f.name)
        if is_dataclass(value):
            sub = _unbind(value)
            if f.metadata.get("flatten"):
                out.update(sub)
            elif sub:
                out[_key(f)] = sub
        elif isinstance(value, tuple):
            out[_key(f)] = list(value)
        elif value is not None:
            out[_key(f)] = value
    return out


@cache
def section_paths() -> tuple[str, ...]:
    """Dotted paths of every nested section, longest first."""
    paths: list[str] = []

    def walk(cls, path: str):
        hints = get_type_hints(cls)
        for f in fields(cls):
            hint = hints.get(f.name)
            if not is_dataclass(hint) or f.metadata.get("flatten"):
                continue
            sub = _join(path, _key(f))
            paths.append(sub)
            walk(hint, sub)

    walk(WorkloadCard, "")
    return tuple(sorted(paths, key=len, reverse=True))


def _place_extra(out: dict, dotted: str, value: Any) -> None:
    for section in section_paths():
        if dotted.startswith(section + "."):
            node = out
            for part in section.split("."):
                node = node.setdefault(part, {})
            node[dotted[len(section) + 1 :]] = value
            return
    out[dotted] = value


def _lookup(card: WorkloadCard, dotted: str) -> Any:
    node: Any = card
    for part in dotted.split("."):
        node = getattr(node, part)
    return node


def check_card(card: WorkloadCard) -> None:
    """
    Enforce required fields and value ranges.

    Raises:
        SchemaError: Naming the offending field path
    """
    for path in REQUIRED_FIELDS:
        if _lookup(card, path) is None:
            raise SchemaError(path)

    if card.phase not in PHASES:
        raise SchemaError("workload.model.phase", f"must be one of {list(PHASES)}, got {card.phase!r}")
    for name in ("batch_size", "seq_len"):
        if getattr(card.data, name) < 1:
            raise SchemaError(f"workload.data.{name}", "must be >= 1")

    xpu = card.xpu
    if xpu.total_count < 1:
        raise SchemaError("workload.hardware.xpu_spec.total_count", "must be >= 1")
    if xpu.count_per_node is not None and not 1 <= xpu.count_per_node <= xpu.total_count:
        raise SchemaError("workload.hardware.xpu_spec.count_per_node", "must be between 1 and total_count")

    for name in Parallelization.DEGREES:
        degree = getattr(card.parallelization, name)
        if degree is not None and degree < 1:
            raise SchemaError(f"Model-executor.model_plan_parallelization.{name}", "must be >= 1")

    arch = card.arch
    for name in ("num_layers", "num_heads", "head_dim"):
        value = getattr(arch, name)
        if value is not None and value < 1:
            raise SchemaError(f"workload.model.model_arch.{name}", "must be >= 1")
    if arch.num_params_embedding is not None and arch.num_params_embedding < 0:
        raise SchemaError("workload.model.model_arch.num_params_embedding", "must be >= 0")
    if (
        arch.num_params is not None
        and arch.num_params_embedding is not None
        and arch.num_params < arch.num_params_embedding
    ):
        raise SchemaError("workload.model.model_arch.num_params", "must be >= num_params_embedding")

    bandwidths = card.hardware.network_topo.bandwidth_gbps
    if bandwidths is not None and any(bw <= 0 for bw in bandwidths):
        raise SchemaError("workload.hardware.network_topo.bandwidth_gbps", "entries must be > 0")


def parse_card(yaml_bytes: bytes | str, source: str = "") -> WorkloadCard:
    """
    Parse and check a workload card.

    Args:
        yaml_bytes: YAML document
        source: Path or label echoed in profiles and errors

    Returns:
        WorkloadCard

    Raises:
        ParseError: YAML syntax error
        SchemaError: Missing required field or out-of-range value
    """
    try:
        data = yaml.safe_load(yaml_bytes)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(f"invalid workload card YAML: {e}", offset=getattr(mark, "index", None), source=source) from e
    extras: dict[str, Any] = {}
    card = _bind(WorkloadCard, data, "", extras)
    card = WorkloadCard(
        provenance=card.provenance,
        workload=card.workload,
        model_executor=card.model_executor,
        metric_source=card.metric_source,
        extras=extras,
        source=source,
    )
    check_card(card)
    if extras:
        logger.info("Workload card %s carries unrecognised keys %s", source or "<memory>", sorted(extras))
    return card


def load_card(path) -> WorkloadCard:
    with open(path, "rb") as f:
        return parse_card(f.read(), source=str(path))


def card_to_dict(card: WorkloadCard) -> dict:
    out = _unbind(card)
    for dotted, value in card.extras.items():
        _place_extra(out, dotted, value)
    return out


def serialize_card(card: WorkloadCard) -> str:
    """YAML text of the card, unknown keys included, in template key order."""
    return yaml.safe_dump(card_to_dict(card), sort_keys=False)
