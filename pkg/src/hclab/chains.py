"""Moduli subspace, the chain decomposition X_n / V_n / E_n, and the tower
of partial isometries carried by the polar decompositions of operator powers.

Truncated shifts are nilpotent, so everything that needs an injective
operator runs on the compressed window block: the leading ``window(K)``
indices, where the truncation still agrees with the infinite operator.  The
gram family used on the block is the window compression of the full-size
grams (exact where the window promises), not the grams of the compressed
matrix, whose own boundary would corrupt them.  Frames are reported in the
ambient space; residual tables are computed in block coordinates, which
makes them invariant under basis rotations of the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .commutation import gram_power, half_centered_check, kernel_of_adjoint
from .errors import NotHalfCentered, NotInjectiveOnWindow, WindowExhausted
from .linalg import polar, positive_sqrt
from .operators import OperatorModel, ToleranceConfig
from .subspaces import Subspace, orthonormalize, subspace_ominus, subspace_sum

__all__ = [
    "AnalysisBlock",
    "ChainDecomposition",
    "IsometryTower",
    "TowerLevel",
    "effective_depth",
    "analysis_block",
    "moduli_subspace",
    "span_closure",
    "wandering_span",
    "chain_decomposition",
    "isometry_tower",
    "verify_chain_structure",
]

MIN_WINDOW = 8


def effective_depth(model: OperatorModel, cfg: ToleranceConfig) -> int:
    """Depth actually usable on this truncation.

    Banded truncations lose ``window_step`` indices per power, so the depth
    is capped to keep at least ``MIN_WINDOW`` uncorrupted indices (falling
    back to a single index for very small models); exact models keep the
    configured depth.
    """
    if model.window_step == 0:
        return cfg.depth
    for floor in (MIN_WINDOW, 1):
        k = (model.dim - floor) // model.window_step
        k = min(cfg.depth, k)
        if k >= 1:
            return k
    raise WindowExhausted(f"dimension {model.dim} leaves no usable window")


def _ensure_injective_on_window(model: OperatorModel, cfg: ToleranceConfig) -> None:
    T = model.matrix
    top = np.linalg.norm(T, 2)
    if model.window_step > 0:
        block = model.window_restrict(T, model.window(1))
    else:
        block = T
    s = np.linalg.svd(block, compute_uv=False)
    smin = s[-1] if s.size else 0.0
    if smin <= cfg.rank_tol * max(top, 1e-300):
        raise NotInjectiveOnWindow(f"sigma_min {smin:.3e} on the effective window")


@dataclass
class AnalysisBlock:
    """The window-compressed stage on which injective-operator theory runs."""

    w: int
    step: int
    depth: int
    matrix: np.ndarray          # w x w compression of the operator
    grams: list                 # window compressions of the full grams, 0..2*depth
    E: Subspace                 # kernel line in block coordinates
    embed: np.ndarray           # ambient_dim x w window basis

    def window(self, k: int) -> int:
        if self.step == 0:
            return self.w
        return max(self.w - k * self.step, 0)

    def lift(self, sub: Subspace) -> Subspace:
        """Express a block subspace in ambient coordinates."""
        return Subspace(self.embed @ sub.frame, sub.rank_tol)

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, k)


def analysis_block(model: OperatorModel, cfg: ToleranceConfig,
                   require_injective: bool = False) -> AnalysisBlock:
    """Build the compressed stage: operator block, exact gram compressions,
    and the kernel line restricted to the window."""
    K = effective_depth(model, cfg)
    if require_injective:
        _ensure_injective_on_window(model, cfg)
    w = model.window(K)
    if w < 1:
        raise WindowExhausted(f"window({K}) < 1")
    embed = model.window_cols(w)
    Tb = model.window_compress(model.matrix, w)
    deepest = min(2 * K, (model.dim - 1) // model.window_step) if model.window_step else 2 * K
    grams = [model.window_compress(gram_power(model, k), w) for k in range(deepest + 1)]

    E_full = kernel_of_adjoint(model, cfg)
    coords = embed.conj().T @ E_full.frame
    if E_full.dim:
        mass = float(np.min(np.linalg.norm(coords, axis=0)))
        if mass < 1.0 - 1e-8:
            raise WindowExhausted(
                f"kernel of T* keeps only {mass:.6f} of its mass inside the window"
            )
        E_blk = orthonormalize([coords], rank_tol=cfg.rank_tol)
    else:
        E_blk = Subspace(np.zeros((w, 0), dtype=complex), cfg.rank_tol)
    return AnalysisBlock(w=w, step=model.window_step, depth=K, matrix=Tb,
                         grams=grams, E=E_blk, embed=embed)


def _moduli_on_block(block: AnalysisBlock, cfg: ToleranceConfig) -> tuple[Subspace, str]:
    if block.E.dim == 0:
        return block.E, "empty"
    grams = block.grams[1:block.depth + 1]
    frame = block.E.frame
    stable = 0
    for _ in range(4 * block.w):
        sub = orthonormalize([frame] + [g @ frame for g in grams], rank_tol=cfg.rank_tol)
        if sub.dim == frame.shape[1]:
            stable += 1
            if stable >= 2:
                return sub, "stable"
        else:
            stable = 0
        frame = sub.frame
        if sub.dim >= block.w:
            return sub, "capped"
    return Subspace(frame, cfg.rank_tol), "stable"


def moduli_subspace(model: OperatorModel, cfg: ToleranceConfig) -> tuple[Subspace, str]:
    """Smallest gram-invariant subspace containing ker T*, by iterated spans.

    Sweeps ``frame -> span(frame, T_1 frame, .., T_K frame)`` on the window
    block until the dimension is stable for two consecutive sweeps.
    Hitting the block dimension is reported as status ``"capped"``: the
    finite surrogate of an infinite-dimensional moduli subspace.  The frame
    comes back in ambient coordinates.
    """
    block = analysis_block(model, cfg)
    sub, status = _moduli_on_block(block, cfg)
    return block.lift(sub), status


def span_closure(model: OperatorModel, cfg: ToleranceConfig,
                 seed_space: Subspace) -> tuple[Subspace, str]:
    """Closure of an ambient subspace under repeated application of T."""
    frame = seed_space.frame
    layer = frame
    for _ in range(model.dim + 1):
        layer = model.matrix @ layer
        grown = orthonormalize([frame, layer], rank_tol=cfg.rank_tol)
        if grown.dim == frame.shape[1]:
            return grown, "stable"
        frame = grown.frame
        if grown.dim >= model.dim:
            return grown, "capped"
    return Subspace(frame, cfg.rank_tol), "stable"


def wandering_span(model: OperatorModel, cfg: ToleranceConfig) -> tuple[Subspace, str]:
    """Finite-window wandering check: the closure of ker T* under T.

    When the spans of T^k(ker T*) exhaust the space the kernel line is a
    wandering subspace for T; a closure that stalls below the ambient
    dimension exhibits the failure (the missing directions are vectors
    lying in every range T^k H, e.g. eigenvectors of T).
    """
    return span_closure(model, cfg, kernel_of_adjoint(model, cfg))


def _range_space(block: AnalysisBlock, n: int, cfg: ToleranceConfig) -> Subspace:
    """H_n: numerically significant range of the window columns of T^n.

    Only the uncorrupted leading columns of the power enter, so trailing
    nilpotent columns of a truncated shift cannot pollute the range rank.
    """
    if n == 0:
        return orthonormalize([np.eye(block.w, dtype=complex)], rank_tol=cfg.rank_tol)
    wn = block.window(n)
    if wn < 1:
        raise WindowExhausted(f"block window({n}) < 1")
    return orthonormalize([block.power(n)[:, :wn]], rank_tol=cfg.rank_tol)


@dataclass
class ChainDecomposition:
    E: Subspace
    M_E: Subspace
    moduli_status: str
    X: list
    V: list
    layers: list
    defects: list
    depth: int
    dims: dict
    block: AnalysisBlock
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "moduli_status": self.moduli_status,
            "dims": dict(self.dims),
            "notes": dict(self.notes),
        }


def chain_decomposition(model: OperatorModel, cfg: ToleranceConfig) -> ChainDecomposition:
    """Build E, M_E and the chain X_n = X_{n-1} (+) V_n up to the usable depth.

    Raises NotInjectiveOnWindow when the operator fails to act injectively
    on the window (for a truncation: on the leading window columns; for an
    exact model: on the whole space).
    """
    block = analysis_block(model, cfg, require_injective=True)
    K = block.depth
    M_E_blk, status = _moduli_on_block(block, cfg)

    X = [M_E_blk]
    V = [M_E_blk]
    layers = [M_E_blk]  # layers[n] spans T^n M_E inside the block
    for n in range(1, K + 1):
        image = block.matrix @ layers[-1].frame
        layer = orthonormalize([image], rank_tol=cfg.rank_tol) if image.size else \
            Subspace(np.zeros((block.w, 0), complex), cfg.rank_tol)
        layers.append(layer)
        prev = X[-1]
        if layer.dim:
            fresh = layer.frame - prev.frame @ (prev.frame.conj().T @ layer.frame)
            # frames have unit columns: judge new directions on that scale,
            # never on the residual's own (possibly dust) magnitude
            Vn = orthonormalize([fresh], rank_tol=cfg.rank_tol, scale=1.0)
        else:
            Vn = Subspace(np.zeros((block.w, 0), complex), cfg.rank_tol)
        V.append(Vn)
        X.append(subspace_sum(prev, Vn))

    H = [_range_space(block, n, cfg) for n in range(K + 1)]
    defects = [subspace_ominus(H[n], H[n + 1]) for n in range(K)]

    dims = {
        "E": block.E.dim,
        "M_E": M_E_blk.dim,
        "X": [x.dim for x in X],
        "V": [v.dim for v in V],
        "defects": [d.dim for d in defects],
    }

    notes = {}
    vdims = dims["V"]
    notes["v_dims_weakly_decreasing"] = all(
        vdims[m] <= vdims[n] for n in range(len(vdims)) for m in range(n, len(vdims))
    )
    # each V_n must be invariant under every gram power
    grams = block.grams[1:K + 1]
    worst = 0.0
    for Vn in V:
        if Vn.dim == 0:
            continue
        for g in grams:
            image = g @ Vn.frame
            leak = image - Vn.frame @ (Vn.frame.conj().T @ image)
            worst = max(worst, float(np.linalg.norm(leak) / max(np.linalg.norm(g, 2), 1e-300)))
    notes["gram_invariance_residual"] = worst
    return ChainDecomposition(
        E=block.lift(block.E), M_E=block.lift(M_E_blk), moduli_status=status,
        X=[block.lift(x) for x in X], V=[block.lift(v) for v in V],
        layers=[block.lift(s) for s in layers],
        defects=[block.lift(d) for d in defects],
        depth=K, dims=dims, block=block, notes=notes,
    )


@dataclass
class TowerLevel:
    n: int
    theta: np.ndarray
    r: np.ndarray
    r_product: np.ndarray
    residuals: dict


@dataclass
class IsometryTower:
    levels: list
    block: AnalysisBlock

    def theta(self, n: int) -> np.ndarray:
        if n == 0:
            return np.eye(self.block.w, dtype=complex)
        return self.levels[n - 1].theta

    def as_dict(self) -> dict:
        return {
            "levels": [
                {"n": lvl.n, "residuals": dict(lvl.residuals)} for lvl in self.levels
            ]
        }


def isometry_tower(model: OperatorModel, cfg: ToleranceConfig) -> IsometryTower:
    """Partial isometries theta_n = polar(T^n) and their positive factors.

    Each r_n is computed twice: as the positive square root of the gram
    power, and as the descending product of conjugated square roots of the
    first gram; their disagreement is recorded per level.  The identity
    between the two routes (and between theta_n and the polar factor of
    T^n) is only claimed for half-centered operators, so the verdict is
    enforced first.
    """
    report = half_centered_check(model, cfg)
    if not report.half_centered:
        raise NotHalfCentered(
            f"half-centered residual {report.max_half_residual:.3e} exceeds tolerance"
        )
    block = analysis_block(model, cfg, require_injective=True)
    K = block.depth
    G1 = block.grams[1]
    prev_theta = np.eye(block.w, dtype=complex)
    product = np.eye(block.w, dtype=complex)
    levels = []
    for n in range(1, K + 1):
        Tn = block.power(n)
        theta = polar(Tn, rank_tol=cfg.rank_tol).isometry_part
        gram_n = block.grams[n]
        r_sqrt = positive_sqrt(gram_n)
        factor = positive_sqrt(prev_theta.conj().T @ G1 @ prev_theta)
        product = factor @ product
        wn = block.window(n)
        scale = max(np.linalg.norm(Tn[:wn, :wn]), 1e-300)
        proj = theta @ theta.conj().T
        residuals = {
            "reconstruct": float(np.linalg.norm((theta @ r_sqrt - Tn)[:wn, :wn]) / scale),
            "r_two_routes": float(
                np.linalg.norm((product - r_sqrt)[:wn, :wn])
                / max(np.linalg.norm(r_sqrt[:wn, :wn]), 1e-300)
            ),
            "rstar_r_vs_gram": float(
                np.linalg.norm((r_sqrt.conj().T @ r_sqrt - gram_n)[:wn, :wn])
                / max(np.linalg.norm(gram_n[:wn, :wn]), 1e-300)
            ),
            "theta_partial_isometry": float(np.linalg.norm(proj @ proj - proj)),
        }
        levels.append(TowerLevel(n=n, theta=theta, r=r_sqrt,
                                 r_product=product.copy(), residuals=residuals))
        prev_theta = theta
    return IsometryTower(levels=levels, block=block)


def _containment_residual(vectors: np.ndarray, space: Subspace) -> float:
    if vectors.size == 0:
        return 0.0
    leak = vectors - space.frame @ (space.frame.conj().T @ vectors)
    scale = max(np.linalg.norm(vectors), 1e-300)
    return float(np.linalg.norm(leak) / scale)


def verify_chain_structure(
    model: OperatorModel,
    chain: ChainDecomposition,
    tower: IsometryTower,
    cfg: ToleranceConfig,
) -> dict:
    """Residuals for the structural claims about the chain and the tower.

    Keys of the returned table:

    - ``space1``: containment of T V_k in V_{k+1} (+) (X_k (-) T X_{k-1}),
      and ``space1_direct_sum``: the layers reconstruct the chain span.
    - ``isisis``: the compressed maps P_{V_m} T^{m-n} : V_n -> V_m are onto
      (projection defect, plus the smallest-singular-value certificate).
    - ``jups``: sampled v in V_m with T v orthogonal to M_E land in V_{m+1}.
    - ``saknar``: the defect space E_n sits inside T^n M_E.
    - ``labann`` / ``key``: the tower factor identities, and agreement of
      polar(T^n) with the composed level-wise isometries.
    - ``fuio`` / ``fukth``: layer projections commute with the gram family;
      grams agree with range-compressed grams on deep layers.
    """
    block = chain.block
    Tb = block.matrix
    K = chain.depth
    # work with block-coordinate frames throughout
    V = [Subspace(block.embed.conj().T @ v.frame, v.rank_tol) for v in chain.V]
    X = [Subspace(block.embed.conj().T @ x.frame, x.rank_tol) for x in chain.X]
    layers = [Subspace(block.embed.conj().T @ s.frame, s.rank_tol) for s in chain.layers]
    defects = [Subspace(block.embed.conj().T @ d.frame, d.rank_tol) for d in chain.defects]
    M_E = Subspace(block.embed.conj().T @ chain.M_E.frame, chain.M_E.rank_tol)
    out: dict = {"depth": K, "dims": dict(chain.dims)}

    worst = 0.0
    complement_dims = []
    for k in range(K):
        Vk = V[k]
        if k == 0:
            complement_dims.append(X[0].dim)
        else:
            TXprev = orthonormalize([Tb @ X[k - 1].frame], rank_tol=cfg.rank_tol)
            complement_dims.append(subspace_ominus(X[k], TXprev).dim)
        if Vk.dim == 0:
            continue
        image = Tb @ Vk.frame
        if k == 0:
            allowed = subspace_sum(V[1], X[0])
        else:
            TXprev = orthonormalize([Tb @ X[k - 1].frame], rank_tol=cfg.rank_tol)
            allowed = subspace_sum(V[k + 1], subspace_ominus(X[k], TXprev))
        worst = max(worst, _containment_residual(image, allowed))
    out["space1"] = worst
    # the complement X_k (-) T X_{k-1} carries no interpretation here; its
    # dimension is reported as-is
    out["space1_complement_dims"] = complement_dims

    P_sum = sum((v.projector() for v in V), np.zeros((block.w, block.w), complex))
    out["space1_direct_sum"] = float(np.linalg.norm(P_sum - X[-1].projector()))

    defect = 0.0
    certificate = np.inf
    for n in range(K + 1):
        for m in range(n + 1, K + 1):
            Vn, Vm = V[n], V[m]
            if Vn.dim == 0 or Vm.dim == 0:
                continue
            power = block.power(m - n)
            map_block = Vm.frame.conj().T @ power @ Vn.frame
            image_span = orthonormalize([Vm.frame @ map_block], rank_tol=cfg.rank_tol,
                                        scale=float(np.linalg.norm(power, 2)))
            defect = max(defect, _containment_residual(Vm.frame, image_span))
            s = np.linalg.svd(map_block, compute_uv=False)
            if Vm.dim <= Vn.dim and s.size and s[0] > 0:
                certificate = min(certificate, float(s[min(map_block.shape) - 1] / s[0]))
    out["isisis"] = defect
    out["isisis_sigma_min"] = None if certificate is np.inf else certificate

    worst = 0.0
    sampled = 0
    for m in range(K):
        Vm = V[m]
        if Vm.dim == 0 or V[m + 1].dim == 0:
            continue
        cross = M_E.frame.conj().T @ (Tb @ Vm.frame)
        if cross.size:
            # directions count as "T v orthogonal to M_E" relative to ||T||
            _, s, vh = np.linalg.svd(cross)
            cutoff = cfg.rank_tol * max(np.linalg.norm(Tb, 2), 1e-300)
            null = vh[np.sum(s > cutoff):].conj().T
        else:
            null = np.eye(Vm.dim, dtype=complex)
        if null.shape[1] == 0:
            continue
        candidates = Tb @ (Vm.frame @ null)
        keep = np.linalg.norm(candidates, axis=0) > cfg.rank_tol * np.linalg.norm(Tb, 2)
        candidates = candidates[:, keep]
        if candidates.shape[1] == 0:
            continue
        worst = max(worst, _containment_residual(candidates, V[m + 1]))
        sampled += candidates.shape[1]
    out["jups"] = worst
    out["jups_samples"] = sampled

    worst = 0.0
    for n, En in enumerate(defects):
        if En.dim == 0:
            continue
        worst = max(worst, _containment_residual(En.frame, layers[n]))
    out["saknar"] = worst

    out["labann"] = max(
        (max(lvl.residuals["reconstruct"], lvl.residuals["r_two_routes"],
             lvl.residuals["rstar_r_vs_gram"]) for lvl in tower.levels),
        default=0.0,
    )

    worst = 0.0
    composed = np.eye(block.w, dtype=complex)
    for lvl in tower.levels:
        n = lvl.n
        Hprev = _range_space(block, n - 1, cfg)
        compression = Hprev.projector() @ Tb @ Hprev.projector()
        composed = polar(compression, rank_tol=cfg.rank_tol).isometry_part @ composed
        wn = block.window(n)
        scale = max(np.linalg.norm(lvl.theta[:wn, :wn]), 1e-300)
        worst = max(worst, float(np.linalg.norm((composed - lvl.theta)[:wn, :wn]) / scale))
    out["key"] = worst

    grams = block.grams[1:K + 1]
    worst = 0.0
    for Vm in V:
        if Vm.dim == 0:
            continue
        P = Vm.projector()
        for g in grams:
            worst = max(
                worst,
                float(np.linalg.norm(P @ g - g @ P) / max(np.linalg.norm(g, 2), 1e-300)),
            )
    out["fuio"] = worst

    worst = 0.0
    for n in range(1, K + 1):
        Hn = _range_space(block, n, cfg)
        comp = Hn.projector() @ Tb @ Hn.projector()
        for j in range(1, K - n + 1):
            cj = np.linalg.matrix_power(comp, j)
            gj = cj.conj().T @ cj
            for m in range(n, K + 1):
                Vm = V[m]
                if Vm.dim == 0:
                    continue
                diff = (grams[j - 1] - gj) @ Vm.frame
                worst = max(
                    worst,
                    float(np.linalg.norm(diff) / max(np.linalg.norm(grams[j - 1], 2), 1e-300)),
                )
    out["fukth"] = worst
    out["v_dims_weakly_decreasing"] = chain.notes["v_dims_weakly_decreasing"]
    out["gram_invariance_residual"] = chain.notes["gram_invariance_residual"]
    return out
