"""Analytic stand-ins for the neural models: compute-cost table and accuracy curves.

The calibration file is an INI document with a ``[costs]`` and a ``[quality]``
section. :func:`load_calibration` parses and validates it; every rejection
names the violated constraint and, where it can, the offending line.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .core import (
    ALL_VARIANTS,
    CONTROL_FRAME_BYTES,
    CRM_PIM,
    GFM,
    PIM_PI,
    CetError,
    Modality,
    Mode,
    ModeVariant,
    NodeId,
    ParseError,
    Scenario,
    SemanticFeature,
)
from .netmodel import Topology, crm_roles, gfm_uploaders, path_latency, pim_roles, route
from .semantics import DEFAULT_CODECS, CodecSpec

__all__ = [
    "ANCHOR_ACCURACY",
    "ANCHOR_SNR_DB",
    "CalibrationError",
    "MissingVariant",
    "ComputeCost",
    "QualityParams",
    "CalibrationTable",
    "ConstraintResult",
    "LatencyBreakdown",
    "default_calibration_path",
    "load_calibration",
    "default_table",
    "check_constraints",
    "compute_cost",
    "sensing_accuracy",
    "subset_accuracy",
    "effective_accuracy",
    "total_latency",
    "logistic",
]

ANCHOR_ACCURACY = 0.769
ANCHOR_SNR_DB = 25.0
ANCHOR_TOLERANCE = 1e-3
NIGHT_GAP_LIMIT = 0.05


class CalibrationError(CetError):
    def __init__(self, constraint: str, message: str, line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"[{constraint}] {where}{message}")
        self.constraint = constraint
        self.line = line


class MissingVariant(CalibrationError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__("MissingVariant", message, line)


@dataclass(frozen=True)
class ComputeCost:
    flops_g: float
    memory_mb: float
    inference_s: float

    def __post_init__(self) -> None:
        for name in ("flops_g", "memory_mb", "inference_s"):
            v = getattr(self, name)
            if not (0.0 < v < math.inf):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def inference_ms(self) -> float:
        # decimal shift so 0.00727 s reads back as 7.27 ms, not 7.2700000000000005
        return float(Decimal(repr(self.inference_s)).scaleb(3))


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class QualityParams:
    """Peak accuracy per (variant, scenario) plus the shared SNR curve shape."""

    peak: Mapping[tuple[ModeVariant, Scenario], float]
    num_beams: int = 64
    midpoint_db: float = 5.0
    slope_db: float = 5.0

    @property
    def chance(self) -> float:
        return 1.0 / self.num_beams


@dataclass(frozen=True)
class CalibrationTable:
    costs: Mapping[ModeVariant, ComputeCost]
    quality: QualityParams
    source: str = "<memory>"
    content_hash: str = ""

    @property
    def chance(self) -> float:
        return self.quality.chance


class ConstraintResult(NamedTuple):
    name: str
    passed: bool
    message: str


class LatencyBreakdown(NamedTuple):
    inference_s: float
    transmission_s: float
    total_s: float


# -- loading --


def default_calibration_path() -> Path:
    return Path(str(resources.files("cetsim") / "data" / "table2_fig4_default.ini"))


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key = value`` entry, keyed by (section, key)."""
    lines: dict[tuple[str, str], int] = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            continue
        key = s.split("=", 1)[0].strip()
        lines.setdefault((section, key), lineno)
    return lines


def _exact_float(text: str) -> float:
    return float(Decimal(text.strip()))


def _ms_to_s(text: str) -> float:
    # Decimal keeps 38.2 ms -> 0.0382 s exact to the nearest double
    return float(Decimal(text.strip()) / 1000)


def _section_lines(text: str, section: str) -> Optional[int]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        if raw.strip() == f"[{section}]":
            return lineno
    return None


def parse_calibration(text: str, source: str = "<memory>") -> CalibrationTable:
    """Parse calibration text and check the structural invariants.

    Ordering constraints are checked separately by :func:`check_constraints`;
    :func:`load_calibration` runs both.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # keys are case-sensitive variant names
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise CalibrationError("syntax", str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)

    for section in cp.sections():
        if section not in ("costs", "quality"):
            raise CalibrationError("syntax", f"unknown section [{section}]", _section_lines(text, section))
    for section in ("costs", "quality"):
        if not cp.has_section(section):
            raise CalibrationError("syntax", f"missing section [{section}]")

    costs: dict[ModeVariant, ComputeCost] = {}
    for key, value in cp.items("costs"):
        line = lines.get(("costs", key))
        try:
            v = ModeVariant.from_text(key)
        except ValueError as exc:
            raise CalibrationError("syntax", f"bad variant {key!r}: {exc}", line) from None
        parts = [p for p in value.split(",")]
        if len(parts) != 3:
            raise CalibrationError("cost-values", f"{key}: expected 'flops_g, memory_mb, inference_ms'", line)
        try:
            costs[v] = ComputeCost(_exact_float(parts[0]), _exact_float(parts[1]), _ms_to_s(parts[2]))
        except (InvalidOperation, ValueError) as exc:
            raise CalibrationError("cost-values", f"{key}: {exc}", line) from None

    shape_keys = {"num_beams", "midpoint_db", "slope_db"}
    shape: dict[str, float] = {}
    peak: dict[tuple[ModeVariant, Scenario], float] = {}
    for key, value in cp.items("quality"):
        line = lines.get(("quality", key))
        try:
            if key in shape_keys:
                shape[key] = _exact_float(value)
                continue
            vtext, sep, stext = key.partition("@")
            if not sep:
                raise ParseError(f"expected <variant>@<scenario>, got {key!r}")
            peak[(ModeVariant.from_text(vtext), Scenario.from_text(stext))] = _exact_float(value)
        except (InvalidOperation, ValueError) as exc:
            raise CalibrationError("syntax", f"{key}: {exc}", line) from None

    num_beams = shape.get("num_beams", 64)
    if num_beams != int(num_beams) or num_beams < 2:
        raise CalibrationError("quality-range", "num_beams must be an integer >= 2", lines.get(("quality", "num_beams")))
    slope = shape.get("slope_db", 5.0)
    if not slope > 0:
        raise CalibrationError("quality-range", "slope_db must be positive", lines.get(("quality", "slope_db")))

    for v in ALL_VARIANTS:
        if v not in costs:
            raise MissingVariant(f"[costs] has no entry for {v}", _section_lines(text, "costs"))
        for s in Scenario:
            if (v, s) not in peak:
                raise MissingVariant(f"[quality] has no entry for {v}@{s.label}", _section_lines(text, "quality"))
    for (v, s), a in peak.items():
        if not (0.0 < a < 1.0):
            raise CalibrationError("quality-range", f"{v}@{s.label} = {a} outside (0, 1)", lines.get(("quality", f"{v}@{s.label}")))

    quality = QualityParams(peak, int(num_beams), shape.get("midpoint_db", 5.0), slope)
    digest = hashlib.sha256(text.encode()).hexdigest()
    return CalibrationTable(costs, quality, source, digest)


def _ordering_pairs() -> list[tuple[ModeVariant, ModeVariant]]:
    """(smaller, larger) pairs where the smaller modality set is a proper subset."""
    return [
        (a, b)
        for b in ALL_VARIANTS
        for a in ALL_VARIANTS
        if a.modality_set < b.modality_set
    ]


def check_constraints(table: CalibrationTable, *, anchor_checks: bool = True) -> list[ConstraintResult]:
    """Evaluate every calibration constraint.

    The ordering constraints always apply. With ``anchor_checks`` the
    reference anchor point and the two nighttime observations are also
    checked.
    """
    q = table.quality
    results: list[ConstraintResult] = []

    c = q.chance
    low = min(q.peak.values())
    results.append(ConstraintResult("chance-level", c < low, f"chance {c:.6g} vs lowest peak {low:.6g}"))

    bad = [
        f"{a}@{s.label}={q.peak[(a, s)]} > {b}@{s.label}={q.peak[(b, s)]}"
        for s in Scenario
        for a, b in _ordering_pairs()
        if q.peak[(a, s)] > q.peak[(b, s)]
    ]
    results.append(
        ConstraintResult("subset-monotonicity", not bad, "; ".join(bad) if bad else "every superset variant peaks at least as high")
    )

    if anchor_checks:
        acc = sensing_accuracy(GFM, Scenario.DAYTIME, ANCHOR_SNR_DB, table)
        results.append(
            ConstraintResult(
                "anchor",
                abs(acc - ANCHOR_ACCURACY) <= ANCHOR_TOLERANCE,
                f"GFM Daytime {ANCHOR_SNR_DB:g} dB -> {acc:.6f} (target {ANCHOR_ACCURACY} +/- {ANCHOR_TOLERANCE})",
            )
        )
        day, night = q.peak[(PIM_PI, Scenario.DAYTIME)], q.peak[(PIM_PI, Scenario.NIGHTTIME)]
        results.append(
            ConstraintResult("night-vision-penalty", night < day, f"PIM(P+I) night {night} vs day {day}")
        )
        gap = q.peak[(GFM, Scenario.NIGHTTIME)] - q.peak[(CRM_PIM, Scenario.NIGHTTIME)]
        results.append(
            ConstraintResult(
                "crm-night-close-to-gfm", gap <= NIGHT_GAP_LIMIT, f"GFM - CRM(P+I+M) at night = {gap:.6g} (limit {NIGHT_GAP_LIMIT})"
            )
        )
    return results


def load_calibration(path: str | Path | None = None, *, anchor_checks: bool = False) -> CalibrationTable:
    """Read, parse and validate a calibration file (the shipped default if ``path`` is None)."""
    p = Path(path) if path is not None else default_calibration_path()
    text = p.read_text(encoding="utf-8")
    table = parse_calibration(text, str(p))
    for r in check_constraints(table, anchor_checks=anchor_checks):
        if not r.passed:
            raise CalibrationError(r.name, r.message)
    return table


_DEFAULT: Optional[CalibrationTable] = None


def default_table() -> CalibrationTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_calibration(anchor_checks=True)
    return _DEFAULT


# -- model evaluation --


def compute_cost(v: ModeVariant, table: CalibrationTable) -> ComputeCost:
    try:
        return table.costs[v]
    except KeyError:
        raise MissingVariant(f"no compute cost for {v}") from None


def sensing_accuracy(v: ModeVariant, s: Scenario, snr_db: float, table: CalibrationTable) -> float:
    """Top-1 beam accuracy: chance plus a logistic share of the above-chance peak."""
    q = table.quality
    try:
        a = q.peak[(v, s)]
    except KeyError:
        raise MissingVariant(f"no quality entry for {v}@{s.label}") from None
    c = q.chance
    return c + (a - c) * logistic((snr_db - q.midpoint_db) / q.slope_db)


def subset_accuracy(
    modalities: Iterable[Modality], s: Scenario, snr_db: float, table: CalibrationTable
) -> tuple[Optional[ModeVariant], float]:
    """Best variant that can be fused from ``modalities`` and its accuracy.

    Returns ``(None, chance)`` when no legal variant fits inside the set.
    """
    have = frozenset(modalities)
    best: tuple[Optional[ModeVariant], float] = (None, table.chance)
    for v in ALL_VARIANTS:
        if v.modality_set <= have:
            acc = sensing_accuracy(v, s, snr_db, table)
            if best[0] is None or acc > best[1]:
                best = (v, acc)
    return best


def effective_accuracy(base: float, features: Sequence[SemanticFeature] | Sequence[float], chance: float) -> float:
    """Scale the above-chance margin by the product of accepted fidelities."""
    prod = 1.0
    for f in features:
        prod *= f.fidelity if isinstance(f, SemanticFeature) else float(f)
    return chance + (base - chance) * prod


def _bundle_bytes(mods: Iterable[Modality], codecs: Mapping[Modality, CodecSpec]) -> int:
    return sum(codecs[m].payload_bytes for m in mods)


def total_latency(
    v: ModeVariant,
    topo: Topology,
    table: CalibrationTable,
    codecs: Mapping[Modality, CodecSpec] = DEFAULT_CODECS,
    terminal: Optional[NodeId] = None,
    control_bytes: int = CONTROL_FRAME_BYTES,
) -> LatencyBreakdown:
    """Inference, transmission and total latency of one round of ``v``.

    GFM: every uploader sends its feature bundle to the cloud; uploads run
    in parallel, so the slowest one counts. CRM: the cueing features go to
    the edge, then a directive goes to the steered terminal. PIM: one peer
    alert per D2D neighbour, in parallel.
    """
    inference = compute_cost(v, table).inference_s
    if v.mode is Mode.GFM:
        plan = gfm_uploaders(topo, prefer=terminal)
        cloud = topo.cloud
        transmission = max(path_latency(_bundle_bytes(mods, codecs), route(t, cloud, Mode.GFM, topo)) for t, mods in plan.items())
    elif v.mode is Mode.CRM:
        source, edge, target = crm_roles(v, topo, target=terminal)
        cue = v.modality_set - {Modality.RF_POWER}
        transmission = path_latency(_bundle_bytes(cue, codecs), route(source, edge, Mode.CRM, topo)) + path_latency(
            control_bytes, route(edge, target, Mode.CRM, topo)
        )
    else:
        decider, peers = pim_roles(v, topo, decider=terminal)
        transmission = max(path_latency(control_bytes, route(p, decider, Mode.PIM, topo)) for p in peers)
    return LatencyBreakdown(inference, transmission, inference + transmission)
