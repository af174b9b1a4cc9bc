"""Gram powers T*^k T^k and the commutation verdicts built from them.

An operator is half-centered when its gram powers pairwise commute, and
centered when the doubly infinite family including the co-grams T^k T*^k
commutes as well.  On a truncation, the commutator of a pair (j, k) is only
meaningful on the leading ``window(j + k)`` block, so every residual here is
computed on that block and scaled by the product of the factors' norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import WindowExhausted
from .operators import OperatorModel, ToleranceConfig
from .subspaces import Subspace, orthonormalize

__all__ = [
    "CommutationReport",
    "CriterionReport",
    "gram_power",
    "co_gram_power",
    "half_centered_check",
    "centered_check",
    "centered_criterion",
    "kernel_of_adjoint",
]


def gram_power(model: OperatorModel, k: int) -> np.ndarray:
    """The positive matrix T*^k T^k; the identity for k = 0."""
    if k < 0:
        raise ValueError("power must be nonnegative")
    if model.window(k) < 1:
        raise WindowExhausted(f"window({k}) = {model.window(k)} < 1")
    if k == 0:
        return np.eye(model.dim, dtype=complex)
    p = model.power(k)
    g = p.conj().T @ p
    return (g + g.conj().T) / 2.0


def co_gram_power(model: OperatorModel, k: int) -> np.ndarray:
    """The positive matrix T^k T*^k."""
    if k < 0:
        raise ValueError("power must be nonnegative")
    if model.window(k) < 1:
        raise WindowExhausted(f"window({k}) = {model.window(k)} < 1")
    if k == 0:
        return np.eye(model.dim, dtype=complex)
    p = model.power(k)
    g = p @ p.conj().T
    return (g + g.conj().T) / 2.0


@dataclass
class CommutationReport:
    depth: int
    max_half_residual: float
    max_full_residual: float | None
    half_centered: bool
    centered: bool | None
    pairs: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "half_residual": self.max_half_residual,
            "full_residual": self.max_full_residual,
            "verdict": {"half_centered": self.half_centered, "centered": self.centered},
            "pairs": list(self.pairs),
        }


def _pair_residual(model: OperatorModel, a: np.ndarray, b: np.ndarray, w: int) -> float:
    aw = model.window_compress(a, w)
    bw = model.window_compress(b, w)
    num = np.linalg.norm(aw @ bw - bw @ aw)
    den = np.linalg.norm(aw, 2) * np.linalg.norm(bw, 2)
    return float(num / den) if den > 0 else 0.0


def half_centered_check(model: OperatorModel, cfg: ToleranceConfig) -> CommutationReport:
    """Pairwise commutation of the gram powers up to the configured depth."""
    K = cfg.depth
    if model.window(2 * K) < 1:
        raise WindowExhausted(f"window(2K) = {model.window(2 * K)} < 1 at depth {K}")
    grams = [gram_power(model, k) for k in range(K + 1)]
    pairs = []
    worst = 0.0
    for j in range(1, K + 1):
        for k in range(j + 1, K + 1):
            res = _pair_residual(model, grams[j], grams[k], model.window(j + k))
            pairs.append({"j": j, "k": k, "kind": "gram-gram", "residual": res})
            worst = max(worst, res)
    return CommutationReport(
        depth=K, max_half_residual=worst, max_full_residual=None,
        half_centered=bool(worst <= cfg.commutator_tol), centered=None, pairs=pairs,
    )


def centered_check(model: OperatorModel, cfg: ToleranceConfig) -> CommutationReport:
    """Commutation of the full family {T^j T*^j} u {T*^k T^k}."""
    half = half_centered_check(model, cfg)
    K = cfg.depth
    grams = [gram_power(model, k) for k in range(K + 1)]
    cograms = [co_gram_power(model, k) for k in range(K + 1)]
    pairs = list(half.pairs)
    worst = half.max_half_residual
    for j in range(1, K + 1):
        for k in range(j + 1, K + 1):
            res = _pair_residual(model, cograms[j], cograms[k], model.window(j + k))
            pairs.append({"j": j, "k": k, "kind": "cogram-cogram", "residual": res})
            worst = max(worst, res)
    for j in range(1, K + 1):
        for k in range(1, K + 1):
            res = _pair_residual(model, grams[j], cograms[k], model.window(j + k))
            pairs.append({"j": j, "k": k, "kind": "gram-cogram", "residual": res})
            worst = max(worst, res)
    return CommutationReport(
        depth=K, max_half_residual=half.max_half_residual, max_full_residual=worst,
        half_centered=half.half_centered, centered=bool(worst <= cfg.commutator_tol),
        pairs=pairs,
    )


def kernel_of_adjoint(model: OperatorModel, cfg: ToleranceConfig) -> Subspace:
    """ker T* = (T H)^perp, found from the singular directions of T."""
    u, s, _ = np.linalg.svd(model.matrix)
    cutoff = cfg.rank_tol * s[0] if s.size and s[0] > 0 else 0.0
    null = u[:, s <= cutoff]
    if null.shape[1] == 0:
        return Subspace(frame=np.zeros((model.dim, 0), dtype=complex), rank_tol=cfg.rank_tol)
    return orthonormalize([null], rank_tol=cfg.rank_tol)


@dataclass
class CriterionReport:
    verdict: bool
    residual: float
    vacuous: bool
    per_power: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "residual": self.residual,
            "vacuous": self.vacuous,
            "per_power": list(self.per_power),
        }


def centered_criterion(model: OperatorModel, cfg: ToleranceConfig) -> CriterionReport:
    """Invariance criterion: T is centered iff every gram power maps the
    kernel line of T* into itself.

    An empty kernel makes the criterion vacuously true (reported, not
    failed): an injective adjoint means dense range, and dense range already
    forces a half-centered operator to be centered.
    """
    E = kernel_of_adjoint(model, cfg)
    if E.dim == 0:
        return CriterionReport(verdict=True, residual=0.0, vacuous=True)
    per_power = []
    worst = 0.0
    for k in range(1, cfg.depth + 1):
        g = gram_power(model, k)
        image = g @ E.frame
        leak = image - E.frame @ (E.frame.conj().T @ image)
        res = float(np.linalg.norm(leak) / max(np.linalg.norm(g, 2), 1e-300))
        per_power.append({"k": k, "residual": res})
        worst = max(worst, res)
    return CriterionReport(
        verdict=bool(worst <= cfg.commutator_tol), residual=worst,
        vacuous=False, per_power=per_power,
    )
