"""Diagonal-covariance Gaussian mixtures: EM-trained background model,
relevance-MAP speaker adaptation, and frame-averaged log-likelihood-ratio
scoring.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, FormatError, IoError, ValidationError

log = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)
WEIGHT_SUM_TOL = 1e-10


@dataclass
class DiagGmm:
    """Mixture weights, means (K x D) and diagonal variances (K x D)."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def validate(self) -> "DiagGmm":
        if self.means.ndim != 2 or self.means.shape[0] < 1 or self.means.shape[1] < 1:
            raise ValidationError(f"means must be K x D with K,D >= 1, got {self.means.shape}")
        if self.weights.shape != (self.k,) or self.variances.shape != self.means.shape:
            raise ValidationError("weights/variances shapes inconsistent with means")
        for name, arr in (("weights", self.weights), ("means", self.means),
                          ("variances", self.variances)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"non-finite entries in {name}")
        if np.any(self.weights < 0):
            raise ValidationError("negative mixture weight")
        if abs(float(self.weights.sum()) - 1.0) >= WEIGHT_SUM_TOL:
            raise ValidationError(f"weights sum to {self.weights.sum()!r}, expected 1")
        if np.any(self.variances <= 0):
            raise ValidationError("non-positive variance")
        return self

    def copy(self) -> "DiagGmm":
        return DiagGmm(self.weights.copy(), self.means.copy(), self.variances.copy())


@dataclass(frozen=True)
class EmConfig:
    """EM schedule; initialization is deterministic binary splitting."""

    max_iterations: int = 20
    rel_tol: float = 1e-5
    seed: int = 0
    split_iterations: int = 2  # EM passes after each split stage

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if self.rel_tol <= 0:
            raise DomainError("rel_tol must be > 0")


@dataclass(frozen=True)
class MapConfig:
    relevance: float = 10.0
    iterations: int = 3
    adapt_means: bool = True
    adapt_weights: bool = False
    adapt_variances: bool = False

    def __post_init__(self):
        if self.relevance <= 0:
            raise DomainError("relevance must be > 0")
        if self.iterations < 1:
            raise DomainError("iterations must be >= 1")


def _component_log_densities(model: DiagGmm, x: np.ndarray) -> np.ndarray:
    """log[w_k N(x_t; mu_k, diag var_k)] for all t, k -> (T, K)."""
    inv = 1.0 / model.variances
    const = -0.5 * (model.d * LOG_2PI + np.sum(np.log(model.variances), axis=1)) \
        + np.log(model.weights)
    quad = (x ** 2) @ inv.T - 2.0 * (x @ (model.means * inv).T) \
        + np.sum(model.means ** 2 * inv, axis=1)
    return const - 0.5 * quad


def log_likelihoods(model: DiagGmm, frames: np.ndarray) -> np.ndarray:
    """Per-frame mixture log-density, (T,) in nats."""
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[1] != model.d:
        raise DomainError(f"frame dim {frames.shape[1]} != model dim {model.d}")
    return logsumexp(_component_log_densities(model, frames), axis=1)


def gmm_log_likelihood(model: DiagGmm, frame: np.ndarray) -> float:
    """Mixture log-density of a single frame."""
    return float(log_likelihoods(model, np.asarray(frame, dtype=np.float64)[None, :])[0])


def responsibilities(model: DiagGmm, frames: np.ndarray) -> tuple[np.ndarray, float]:
    """Posterior component occupancies (T, K) and the total log-likelihood."""
    densities = _component_log_densities(model, frames)
    per_frame = logsumexp(densities, axis=1)
    return np.exp(densities - per_frame[:, None]), float(per_frame.sum())


def _m_step(frames: np.ndarray, gamma: np.ndarray, floor: np.ndarray) -> DiagGmm:
    n = gamma.sum(axis=0)
    safe_n = np.maximum(n, np.finfo(np.float64).tiny)
    weights = n / len(frames)
    weights = weights / weights.sum()
    means = (gamma.T @ frames) / safe_n[:, None]
    second = (gamma.T @ frames ** 2) / safe_n[:, None]
    variances = np.maximum(second - means ** 2, floor)
    return DiagGmm(weights, means, variances)


def _reseed_degenerate(model: DiagGmm, n: np.ndarray, rng: np.random.Generator,
                       threshold: float) -> DiagGmm:
    dead = np.flatnonzero(n < threshold)
    if len(dead) == 0:
        return model
    donor = int(np.argmax(model.variances.sum(axis=1)))
    weights = model.weights.copy()
    means = model.means.copy()
    variances = model.variances.copy()
    for j in dead:
        log.warning("re-seeding degenerate mixture component %d from component %d", j, donor)
        means[j] = means[donor] + 0.5 * np.sqrt(variances[donor]) * rng.standard_normal(model.d)
        variances[j] = variances[donor]
        weights[j] = weights[donor] / 2.0
        weights[donor] /= 2.0
    weights /= weights.sum()
    return DiagGmm(weights, means, variances)


def _split(model: DiagGmm, n_new: int) -> DiagGmm:
    """Split the n_new heaviest components, perturbing means by +/-0.2 sigma."""
    order = np.argsort(-model.weights, kind="stable")[:n_new]
    chosen = np.zeros(model.k, dtype=bool)
    chosen[order] = True
    weights, means, variances = [], [], []
    for j in range(model.k):
        if chosen[j]:
            delta = 0.2 * np.sqrt(model.variances[j])
            for sign in (+1.0, -1.0):
                weights.append(model.weights[j] / 2.0)
                means.append(model.means[j] + sign * delta)
                variances.append(model.variances[j])
        else:
            weights.append(model.weights[j])
            means.append(model.means[j])
            variances.append(model.variances[j])
    return DiagGmm(np.array(weights), np.array(means), np.array(variances))


def em_fit(frames: np.ndarray, k: int, cfg: EmConfig | None = None
           ) -> tuple[DiagGmm, np.ndarray]:
    """Fit a K-component diagonal GMM; returns the model and the trace of
    total log-likelihoods over the fixed-size EM iterations.

    Initialization grows the mixture by binary splitting (1 -> 2 -> ...),
    with a couple of settling EM passes per stage. Variances are floored at
    1e-4 of the global per-dimension variance (absolute floor 1e-8).
    """
    cfg = cfg or EmConfig()
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise DomainError("training data must be 2-D (frames x dims)")
    t_total = frames.shape[0]
    if t_total < 10 * k:
        raise DomainError(f"need at least {10 * k} frames to fit K={k}, got {t_total}")

    floor = np.maximum(1e-4 * frames.var(axis=0), 1e-8)
    rng = np.random.default_rng(cfg.seed)
    degenerate_threshold = 1e-6

    model = DiagGmm(np.array([1.0]),
                    frames.mean(axis=0)[None, :],
                    np.maximum(frames.var(axis=0), floor)[None, :])

    def em_pass(current: DiagGmm) -> tuple[DiagGmm, float]:
        gamma, total_ll = responsibilities(current, frames)
        n = gamma.sum(axis=0)
        if np.any(n < degenerate_threshold):
            current = _reseed_degenerate(current, n, rng, degenerate_threshold)
            gamma, total_ll = responsibilities(current, frames)
        return _m_step(frames, gamma, floor), total_ll

    while model.k < k:
        model = _split(model, min(model.k, k - model.k))
        for _ in range(cfg.split_iterations):
            model, _ = em_pass(model)

    history = []
    previous = None
    for _ in range(cfg.max_iterations):
        model, total_ll = em_pass(model)
        history.append(total_ll)
        if previous is not None and total_ll - previous <= cfg.rel_tol * abs(previous):
            break
        previous = total_ll
    return model, np.array(history)


def train_ubm(frames: np.ndarray, k: int, cfg: EmConfig | None = None) -> DiagGmm:
    """EM-train the speaker-independent background model."""
    model, _ = em_fit(frames, k, cfg)
    return model


def map_adapt(ubm: DiagGmm, frames: np.ndarray, cfg: MapConfig | None = None) -> DiagGmm:
    """Derive a speaker model from the background model.

    Each pass re-estimates occupancies against the evolving model, then
    interpolates per component between the posterior data statistics and the
    background prior with alpha_k = n_k / (n_k + relevance). Mean-only by
    default; weights and variances then stay shared with the background
    model.
    """
    cfg = cfg or MapConfig()
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[0] < 1:
        raise DomainError("adaptation needs at least one frame")
    if frames.shape[1] != ubm.d:
        raise DomainError(f"frame dim {frames.shape[1]} != model dim {ubm.d}")

    t_total = frames.shape[0]
    model = ubm.copy()
    for _ in range(cfg.iterations):
        gamma, _ = responsibilities(model, frames)
        n = gamma.sum(axis=0)
        safe_n = np.maximum(n, np.finfo(np.float64).tiny)
        alpha = (n / (n + cfg.relevance))[:, None]
        xbar = (gamma.T @ frames) / safe_n[:, None]

        means = alpha * xbar + (1.0 - alpha) * ubm.means if cfg.adapt_means else model.means
        weights = model.weights
        variances = model.variances
        if cfg.adapt_weights:
            weights = alpha[:, 0] * (n / t_total) + (1.0 - alpha[:, 0]) * ubm.weights
            weights = weights / weights.sum()
        if cfg.adapt_variances:
            second = (gamma.T @ frames ** 2) / safe_n[:, None]
            variances = alpha * second + (1.0 - alpha) * (ubm.variances + ubm.means ** 2) \
                - means ** 2
            variances = np.maximum(variances, 1e-8)
        model = DiagGmm(weights, means, variances)
    return model


def llr_score(speaker: DiagGmm, ubm: DiagGmm, test) -> float:
    """Frame-averaged log-likelihood ratio of speaker model vs background."""
    frames = np.atleast_2d(np.asarray(getattr(test, "rows", test), dtype=np.float64))
    if frames.shape[0] < 1:
        raise DomainError("empty test segment")
    return float(np.mean(log_likelihoods(speaker, frames) - log_likelihoods(ubm, frames)))


def save_gmm(model: DiagGmm, path) -> None:
    """Serialize as JSON with 17-significant-digit numbers (lossless for f64)."""
    model.validate()

    def numbers(arr):
        return "[" + ", ".join(format(float(v), ".17g") for v in np.ravel(arr)) + "]"

    text = (
        "{\n"
        f'  "k": {model.k},\n'
        f'  "d": {model.d},\n'
        f'  "weights": {numbers(model.weights)},\n'
        f'  "means": {numbers(model.means)},\n'
        f'  "variances": {numbers(model.variances)}\n'
        "}\n"
    )
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_gmm(path) -> DiagGmm:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        obj = json.loads(text)
        k = int(obj["k"])
        d = int(obj["d"])
        weights = np.asarray(obj["weights"], dtype=np.float64)
        means = np.asarray(obj["means"], dtype=np.float64)
        variances = np.asarray(obj["variances"], dtype=np.float64)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed model file: {exc}") from exc
    if k < 1 or d < 1:
        raise ValidationError(f"{path}: k and d must be >= 1, got k={k} d={d}")
    if means.size != k * d or variances.size != k * d or weights.size != k:
        raise ValidationError(f"{path}: array sizes inconsistent with k={k}, d={d}")
    model = DiagGmm(weights, means.reshape(k, d), variances.reshape(k, d))
    try:
        return model.validate()
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
