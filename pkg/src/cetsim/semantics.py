"""Preprocessing transforms, semantic encoding, and attack injection."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import CetError, Message, MessageKind, Modality, NodeId, SemanticFeature

__all__ = [
    "AllMissing",
    "AllZero",
    "TooManyPoints",
    "DegenerateCloud",
    "ModalityMismatch",
    "IncompatibleAttack",
    "minmax_normalize",
    "unit_sphere_pad",
    "normalize_iq",
    "CodecSpec",
    "DEFAULT_CODECS",
    "encode",
    "AttackKind",
    "AttackSpec",
    "inject_attack",
    "verify_watermark",
    "SemanticFeature",
]


class AllMissing(CetError, ValueError):
    pass


class AllZero(CetError, ValueError):
    pass


class TooManyPoints(CetError, ValueError):
    pass


class DegenerateCloud(CetError, ValueError):
    """All points coincide; ``result`` holds the zero-padded output."""

    def __init__(self, msg: str, result: np.ndarray):
        super().__init__(msg)
        self.result = result


class ModalityMismatch(CetError, ValueError):
    pass


class IncompatibleAttack(CetError, TypeError):
    pass


# -- preprocessing --


def minmax_normalize(seq: Sequence[Optional[float]]) -> np.ndarray:
    """Impute missing entries with the finite mean, then scale to [0, 1].

    ``None`` and NaN both count as missing. A constant sequence maps to zeros.
    """
    x = np.array([np.nan if v is None else v for v in seq], dtype=float)
    if x.size == 0:
        raise ValueError("sequence must be non-empty")
    finite = np.isfinite(x)
    if not finite.any():
        raise AllMissing("no finite entry to impute from")
    x[~finite] = x[finite].mean()
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def unit_sphere_pad(points, target_count: int, *, strict: bool = False) -> np.ndarray:
    """Center a point cloud, scale it into the unit ball, pad with zero rows.

    A cloud whose points all coincide centers to the origin and is returned
    as zeros; with ``strict=True`` that case raises :class:`DegenerateCloud`
    instead (the padded zeros are attached to the exception).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("point cloud must be non-empty")
    if target_count < 1:
        raise ValueError("target_count must be positive")
    if len(pts) > target_count:
        raise TooManyPoints(f"{len(pts)} points exceed target {target_count}")
    out = np.zeros((target_count, 3))
    # exact test: centering coincident points can leave a rounding residue
    if np.all(pts == pts[0]):
        if strict:
            raise DegenerateCloud("all points identical", out)
        return out
    centered = pts - pts.mean(axis=0)
    out[: len(pts)] = centered / np.linalg.norm(centered, axis=1).max()
    return out


def normalize_iq(iq) -> np.ndarray:
    z = np.asarray(iq, dtype=complex)
    if z.size == 0:
        raise ValueError("IQ sequence must be non-empty")
    peak = np.abs(z).max()
    if peak == 0.0:
        raise AllZero("IQ sequence has no nonzero sample")
    return z / peak


# -- semantic encoding --


@dataclass(frozen=True)
class CodecSpec:
    modality: Modality
    raw_bytes: int
    compression_ratio: float
    base_fidelity: float = 0.95

    def __post_init__(self) -> None:
        if self.raw_bytes < 1:
            raise ValueError("raw_bytes must be positive")
        if not (0.0 < self.compression_ratio <= 1.0):
            raise ValueError("compression_ratio must lie in (0, 1]")
        if not (0.0 < self.base_fidelity <= 1.0):
            raise ValueError("base_fidelity must lie in (0, 1]")

    @property
    def payload_bytes(self) -> int:
        return max(1, math.ceil(self.raw_bytes * self.compression_ratio))


# Four-modality aggregate is 2,070,938 B, within 4% of the 2 MB GFM upload.
DEFAULT_CODECS: Mapping[Modality, CodecSpec] = {
    Modality.RF_POWER: CodecSpec(Modality.RF_POWER, 262_144, 0.50),
    Modality.IMAGE: CodecSpec(Modality.IMAGE, 1_048_576, 0.05),
    Modality.POINT_CLOUD: CodecSpec(Modality.POINT_CLOUD, 10_485_760, 0.10),
    Modality.MMWAVE: CodecSpec(Modality.MMWAVE, 4_194_304, 0.20),
}


def encode(modality: Modality, codec: CodecSpec, origin: NodeId) -> SemanticFeature:
    if codec.modality is not modality:
        raise ModalityMismatch(f"codec is for {codec.modality.tag}, asked to encode {modality.tag}")
    return SemanticFeature(modality, codec.payload_bytes, codec.base_fidelity, origin)


# -- attacks and integrity checks --


class AttackKind(enum.Enum):
    SEMANTIC_TAMPER = "SemanticTamper"
    MALICIOUS_RELAY = "MaliciousRelay"
    CROSS_MODAL_MISLEAD = "CrossModalMislead"


@dataclass(frozen=True)
class AttackSpec:
    """An attack that fires with ``probability`` and scales fidelity by ``severity``.

    ``modality`` optionally restricts a SemanticTamper attack to one modality.
    """

    kind: AttackKind
    probability: float
    severity: float = 0.5
    modality: Optional[Modality] = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.probability <= 1.0):
            raise ValueError("probability must lie in [0, 1]")
        if not (0.0 < self.severity <= 1.0):
            raise ValueError("severity must lie in (0, 1]")

    def targets(self, feature: SemanticFeature) -> bool:
        return self.modality is None or feature.modality is self.modality


def corrupt_body(body: str, kind: MessageKind) -> str:
    """Rewrite the coordinate fields of a directive or alert body.

    Coordinates move by a fixed offset, a directive signature is cleared,
    and an alert reports a phantom object.
    """
    fields = body.split("|")
    out = []
    for f in fields:
        key, sep, value = f.partition("=")
        if sep and key in ("x", "y"):
            out.append(f"{key}={float(value) + 250.0!r}")
        elif sep and key == "sig":
            out.append("sig=0")
        elif sep and key == "obj" and kind is MessageKind.PEER_ALERT:
            out.append("obj=phantom")
        else:
            out.append(f)
    return "|".join(out)


def inject_attack(target, attack: AttackSpec, rng: np.random.Generator):
    """Apply ``attack`` to a feature or message with its configured probability.

    Exactly one uniform draw is consumed per call, hit or miss, so the rng
    stream stays aligned across configurations. An unchanged target is
    returned as the same object.
    """
    if isinstance(target, SemanticFeature):
        if attack.kind is not AttackKind.SEMANTIC_TAMPER:
            raise IncompatibleAttack(f"{attack.kind.value} does not apply to features")
        hit = rng.random() < attack.probability
        if not hit or not attack.targets(target):
            return target
        return replace(target, fidelity=target.fidelity * attack.severity, tampered=True, watermark_valid=False)
    if isinstance(target, Message):
        wanted = {
            AttackKind.MALICIOUS_RELAY: MessageKind.DIRECTIVE,
            AttackKind.CROSS_MODAL_MISLEAD: MessageKind.PEER_ALERT,
        }.get(attack.kind)
        if wanted is not target.kind:
            raise IncompatibleAttack(f"{attack.kind.value} does not apply to {target.kind.value} messages")
        hit = rng.random() < attack.probability
        if not hit:
            return target
        return replace(target, body=corrupt_body(target.body, target.kind))
    raise IncompatibleAttack(f"cannot attack a {type(target).__name__}")


def verify_watermark(f: SemanticFeature, detection_prob: float, rng: np.random.Generator) -> bool:
    """True if the feature is accepted. One uniform draw per call."""
    if not (0.0 <= detection_prob <= 1.0):
        raise ValueError("detection_prob must lie in [0, 1]")
    draw = rng.random()
    if not f.tampered and f.watermark_valid:
        return True
    return not draw < detection_prob
