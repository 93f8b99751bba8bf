"""Detection metrics: EER, minimum detection cost, DET curve points, and
per-trial score fusion.

Threshold convention: a trial is accepted iff score >= threshold, so
P_miss(t) = fraction of target scores < t and P_fa(t) = fraction of
non-target scores >= t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

FUSION_METHODS = ("average", "minimum", "maximum", "median")


@dataclass(frozen=True)
class DcfParams:
    """Detection cost weights (defaults follow the NIST SRE'08 convention)."""

    c_miss: float = 10.0
    c_fa: float = 1.0
    p_target: float = 0.01

    def __post_init__(self):
        if self.c_miss <= 0 or self.c_fa <= 0:
            raise DomainError("costs must be positive")
        if not 0 < self.p_target < 1:
            raise DomainError("p_target must lie in (0, 1)")


class EerResult(NamedTuple):
    eer: float  # percent
    threshold: float


class DcfResult(NamedTuple):
    min_dcf: float  # raw, unnormalized
    threshold: float


def _sweep(target_scores, nontarget_scores):
    """Candidate thresholds (with accept-all / reject-all sentinels) and the
    miss/false-alarm rates at each."""
    tar = np.sort(np.asarray(target_scores, dtype=np.float64))
    non = np.sort(np.asarray(nontarget_scores, dtype=np.float64))
    if len(tar) == 0 or len(non) == 0:
        raise DomainError("need at least one target and one non-target score")
    if not (np.all(np.isfinite(tar)) and np.all(np.isfinite(non))):
        raise DomainError("scores must be finite")

    inner = np.unique(np.concatenate([tar, non]))
    thresholds = np.concatenate([[inner[0] - 1.0], inner, [inner[-1] + 1.0]])
    p_miss = np.searchsorted(tar, thresholds, side="left") / len(tar)
    p_fa = (len(non) - np.searchsorted(non, thresholds, side="left")) / len(non)
    return thresholds, p_miss, p_fa


def compute_eer(target_scores, nontarget_scores) -> EerResult:
    """Equal error rate in percent, linearly interpolated on the ROC when no
    threshold gives an exact miss/false-alarm crossing."""
    thresholds, p_miss, p_fa = _sweep(target_scores, nontarget_scores)
    diff = p_miss - p_fa
    i = int(np.argmax(diff >= 0.0))  # first index at or past the crossing
    if diff[i] == 0.0:
        return EerResult(100.0 * p_miss[i], float(thresholds[i]))
    # bracketing segment: diff[i-1] < 0 <= diff[i]
    step = (p_miss[i] - p_miss[i - 1]) - (p_fa[i] - p_fa[i - 1])
    t = (p_fa[i - 1] - p_miss[i - 1]) / step
    eer = p_miss[i - 1] + t * (p_miss[i] - p_miss[i - 1])
    threshold = thresholds[i - 1] + t * (thresholds[i] - thresholds[i - 1])
    return EerResult(100.0 * eer, float(threshold))


def compute_min_dcf(target_scores, nontarget_scores,
                    params: DcfParams | None = None) -> DcfResult:
    """Minimum over thresholds of
    c_miss * P_miss * p_target + c_fa * P_fa * (1 - p_target)."""
    params = params or DcfParams()
    thresholds, p_miss, p_fa = _sweep(target_scores, nontarget_scores)
    dcf = params.c_miss * p_miss * params.p_target \
        + params.c_fa * p_fa * (1.0 - params.p_target)
    i = int(np.argmin(dcf))
    return DcfResult(float(dcf[i]), float(thresholds[i]))


def det_points(target_scores, nontarget_scores) -> np.ndarray:
    """(P_fa, P_miss) staircase, one row per distinct operating point,
    ordered by increasing threshold."""
    _, p_miss, p_fa = _sweep(target_scores, nontarget_scores)
    points = np.column_stack([p_fa, p_miss])
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(points[1:] != points[:-1], axis=1)
    return points[keep]


def fuse_scores(per_system_scores, method: str) -> float:
    """Combine one trial's scores from several systems into one."""
    scores = np.asarray(per_system_scores, dtype=np.float64)
    if scores.size == 0:
        raise DomainError("cannot fuse an empty score list")
    if method == "average":
        return float(np.mean(scores))
    if method == "minimum":
        return float(np.min(scores))
    if method == "maximum":
        return float(np.max(scores))
    if method == "median":
        return float(np.median(scores))
    raise DomainError(f"unknown fusion method {method!r}; expected one of {FUSION_METHODS}")
