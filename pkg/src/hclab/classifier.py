"""Verdict machinery: detect a four-term power relation, or reconstruct the
shift-plus-rank-one normal form, and combine both into a classification.

The two certificates are produced by independent routes.  The relation comes
from a smallest-singular-value scan over stacked gram powers; the polynomial
route rebuilds the same relation symbolically from two triples and is kept
separate so the tests can compare them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chains import ChainDecomposition, chain_decomposition, effective_depth, span_closure
from .commutation import centered_check, gram_power, half_centered_check, kernel_of_adjoint
from .errors import (
    DegenerateTriples,
    HclabError,
    InconclusiveError,
    ModuliTooSmall,
    NoRelationFound,
    NotSingleTriple,
    PatternResidualTooLarge,
    PreconditionError,
    PreconditionViolated,
)
from .operators import OperatorModel, ToleranceConfig
from .spectral import StructureData, TripleRecord, enumerate_triples, structure_extract

__all__ = [
    "RelationCertificate",
    "ShiftRankOneCertificate",
    "ClassificationReport",
    "relation_detect",
    "recurrence_residual",
    "polynomial_machinery",
    "shift_rank_one_reconstruct",
    "classify",
]

# reference used to pick a canonical relation inside a degenerate null space;
# it is the pattern (1 - z^n)(1 - z^m), the relation every isometry satisfies
_REFERENCE_4 = np.array([1.0, -1.0, -1.0, 1.0]) / 2.0
_REFERENCE_3 = np.array([1.0, -2.0, 1.0]) / np.sqrt(6.0)


@dataclass
class RelationCertificate:
    """Coefficients (a, b, c, d) with a I + b T_n + c T_m + d T_{n+m} ~= 0."""

    coefficients: tuple
    n: int
    m: int
    operator_residual: float
    degenerate: bool
    tau_residual: float | None = None
    beta_residual: float | None = None

    @property
    def three_term(self) -> tuple:
        a, b, c, d = self.coefficients
        return (a, b + c, d)

    def as_dict(self) -> dict:
        a, b, c, d = self.coefficients
        return {
            "a": a, "b": b, "c": c, "d": d,
            "n": self.n, "m": self.m,
            "residual": self.operator_residual,
            "degenerate": self.degenerate,
            "tau_residual": self.tau_residual,
            "beta_residual": self.beta_residual,
        }


def _canonical_null_vector(stack: np.ndarray, reference: np.ndarray,
                           tol: float) -> np.ndarray:
    """Real unit null-ish vector of the stacked system, canonically chosen.

    When several singular values sit below tolerance the null space is a
    genuine subspace (maximally degenerate inputs such as isometries); the
    returned vector is then the normalized projection of the reference
    pattern, which is basis independent, instead of an arbitrary SVD column.
    """
    _, s, vh = np.linalg.svd(stack, full_matrices=False)
    cutoff = max(tol * s[0], 1e2 * np.finfo(float).eps * s[0]) if s[0] > 0 else 0.0
    null_dim = int(np.sum(s <= cutoff))
    if null_dim >= 2:
        basis = vh[len(s) - null_dim:].conj().T
        cand = basis @ (basis.conj().T @ reference.astype(complex))
        if np.linalg.norm(cand) > 0.1:
            vec = cand
        else:
            vec = vh[-1].conj()
    else:
        vec = vh[-1].conj()
    # the stacked columns are Hermitian matrices, so the null vector is real
    # up to a global phase; rotate it there and drop the residual imag part
    pivot = vec[int(np.argmax(np.abs(vec)))]
    if abs(pivot) > 0:
        vec = vec * (pivot.conjugate() / abs(pivot))
    if np.max(np.abs(vec.imag)) > 1e-10 * np.linalg.norm(vec):
        raise HclabError("relation coefficients failed to be real")
    vec = vec.real
    vec /= np.linalg.norm(vec)
    sig = np.abs(vec) > 1e-8
    if np.any(sig) and vec[int(np.argmax(sig))] < 0:
        vec = -vec
    return vec


def recurrence_residual(coefficients, n: int, m: int, seq) -> float | None:
    """Residual of a coefficient 4-vector as a linear recurrence on ``seq``.

    Checks a s_k + b s_{k+n} + c s_{k+m} + d s_{k+n+m} = 0 for every k the
    sequence covers; None when the sequence is too short to test.
    """
    a, b, c, d = coefficients
    seq = np.asarray(seq, dtype=float)
    top = len(seq) - 1 - (n + m)
    if top < 0:
        return None
    scale = max(float(np.max(np.abs(seq))), 1e-300)
    worst = 0.0
    for k in range(top + 1):
        val = a * seq[k] + b * seq[k + n] + c * seq[k + m] + d * seq[k + n + m]
        worst = max(worst, abs(val) / scale)
    return worst


def relation_detect(model: OperatorModel, cfg: ToleranceConfig,
                    structure: StructureData | None = None) -> RelationCertificate:
    """Best four-term relation a I + b T_n + c T_m + d T_{n+m} = 0.

    Stacks the vectorized window blocks of the four gram powers and reads
    the coefficients off the smallest singular direction.  Among exponent
    pairs whose residual clears the tolerance the lexicographically smallest
    (n + m, n) wins, which makes the smallest-degree relation canonical.
    The coincidence n = m collapses the system to three terms, stored as
    (a, b+c, 0, d) with the degenerate flag set.
    """
    K = effective_depth(model, cfg)
    grams = {k: gram_power(model, k) for k in range(0, K + 1)}
    candidates = []
    for n in range(1, K // 2 + 1):
        for m in range(n, K - n + 1):
            w = model.window(n + m)
            if w < 2:
                continue
            if n == m:
                mats = [grams[0], grams[n], grams[2 * n]]
                reference = _REFERENCE_3
            else:
                mats = [grams[0], grams[n], grams[m], grams[n + m]]
                reference = _REFERENCE_4
            blocks = [model.window_compress(mt, w) for mt in mats]
            stack = np.column_stack([blk.ravel() for blk in blocks])
            coeffs = _canonical_null_vector(stack, reference, cfg.relation_tol)
            combo = sum(ci * blk for ci, blk in zip(coeffs, blocks))
            term = max(np.linalg.norm(ci * blk) for ci, blk in zip(coeffs, blocks))
            residual = float(np.linalg.norm(combo) / max(term, 1e-300))
            if n == m:
                stored = (coeffs[0], coeffs[1], 0.0, coeffs[2])
            else:
                stored = tuple(coeffs)
            candidates.append((residual, n + m, n, m, stored))
    if not candidates:
        raise NoRelationFound("no exponent pair fits inside the window")
    accepted = [c for c in candidates if c[0] <= cfg.relation_tol]
    if not accepted:
        best = min(candidates)
        raise NoRelationFound(
            f"best residual {best[0]:.3e} at (n, m) = ({best[2]}, {best[3]}) "
            f"exceeds {cfg.relation_tol:.1e}"
        )
    accepted.sort(key=lambda c: (c[1], c[2]))
    residual, _, n, m, stored = accepted[0]
    cert = RelationCertificate(
        coefficients=tuple(float(x) for x in stored), n=n, m=m,
        operator_residual=residual, degenerate=(n == m),
    )
    if structure is not None:
        cert.tau_residual = recurrence_residual(cert.coefficients, n, m, structure.tau)
        if not structure.no_nonzero_beta:
            cert.beta_residual = recurrence_residual(
                cert.coefficients, n, m,
                structure.beta / max(np.max(np.abs(structure.beta)), 1e-300),
            )
        else:
            cert.beta_residual = 0.0
    return cert


@dataclass
class PolynomialData:
    p1: np.ndarray
    p2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    p: np.ndarray
    tau_residual: float | None
    beta_residual: float | None

    def as_dict(self) -> dict:
        return {
            "P1": self.p1.tolist(), "P2": self.p2.tolist(),
            "Q1": self.q1.tolist(), "Q2": self.q2.tolist(),
            "P": self.p.tolist(),
            "tau_residual": self.tau_residual,
            "beta_residual": self.beta_residual,
        }


def _branch_polynomials(structure: StructureData, triple: TripleRecord,
                        zero_tol: float) -> tuple[np.ndarray, np.ndarray]:
    lam = structure.me_spectrum.characters[triple.lambda_char]
    m = triple.m
    lam_m = lam.value(m)
    A_lam = structure.A_values[triple.lambda_char]
    C_gam = structure.C_values[triple.gamma_char]
    first = np.zeros(m + 1)
    second = np.zeros(m + 1)
    first[0] = 1.0
    second[0] = C_gam
    if abs(lam_m) > zero_tol:
        first[m] = -1.0 / lam_m
        second[m] = -A_lam / lam_m
    else:
        first[m] = -1.0 / structure.tau[m]
    return first, second


def _apply_backward_shift_poly(p: np.ndarray, seq: np.ndarray) -> float | None:
    """Max residual of sum_j p[j] seq[k+j] over all k the sequence covers."""
    deg = len(p) - 1
    top = len(seq) - 1 - deg
    if top < 0:
        return None
    scale = max(float(np.max(np.abs(seq))), 1e-300) * max(float(np.sum(np.abs(p))), 1.0)
    worst = 0.0
    for k in range(top + 1):
        worst = max(worst, abs(float(p @ seq[k:k + deg + 1])) / scale)
    return worst


def polynomial_machinery(triple1: TripleRecord, triple2: TripleRecord,
                         structure: StructureData, cfg: ToleranceConfig) -> PolynomialData:
    """Build the case-table polynomials of two triples and their difference
    P = P1 Q2 - P2 Q1, then check that P annihilates the tau and beta
    sequences under the backward shift.

    Two effectively equal triples force P to vanish identically, which is
    rejected as DegenerateTriples.
    """
    scale = max(
        float(np.max(np.abs(structure.me_spectrum.value_table()))) if structure.me_spectrum.characters else 1.0,
        1.0,
    )
    zero_tol = cfg.rank_tol * scale
    p1, p2 = _branch_polynomials(structure, triple1, zero_tol)
    q1, q2 = _branch_polynomials(structure, triple2, zero_tol)
    poly = np.polynomial.polynomial
    p = poly.polysub(poly.polymul(p1, q2), poly.polymul(p2, q1))
    p = np.atleast_1d(p)
    coeff_scale = max(np.max(np.abs(p1)), np.max(np.abs(p2)),
                      np.max(np.abs(q1)), np.max(np.abs(q2)), 1.0)
    if np.max(np.abs(p)) <= 1e-12 * coeff_scale:
        raise DegenerateTriples("P = P1 Q2 - P2 Q1 vanishes identically")
    tau_res = _apply_backward_shift_poly(p, structure.tau)
    beta_res = None
    if not structure.no_nonzero_beta:
        beta_norm = structure.beta / max(np.max(np.abs(structure.beta)), 1e-300)
        beta_res = _apply_backward_shift_poly(p, beta_norm)
    return PolynomialData(p1=p1, p2=p2, q1=q1, q2=q2, p=p,
                          tau_residual=tau_res, beta_residual=beta_res)


@dataclass
class ShiftRankOneCertificate:
    basis: np.ndarray
    weights: np.ndarray
    a: complex
    n: int
    reconstruction_residual: float
    joint_eigenvector_residual: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "a_abs": abs(self.a),
            "weights_abs": np.abs(self.weights).tolist(),
            "residual": self.reconstruction_residual,
            "joint_eigenvector_residual": self.joint_eigenvector_residual,
        }


def shift_rank_one_reconstruct(model: OperatorModel, chain: ChainDecomposition,
                               structure: StructureData, triples: list,
                               cfg: ToleranceConfig) -> ShiftRankOneCertificate:
    """Recover the basis in which T is a weighted shift plus one rank-one term.

    With a single triple (lambda, gamma, m) and a two-dimensional moduli
    subspace, the basis is x_k = T^k w (normalized) below the triple depth
    and x_k = T^{k-m} v above it, where w is the lambda eigenvector and v
    the other one.  In that basis T must show a subdiagonal plus a single
    entry in row 0 at column m - 1; everything off that pattern is the
    reconstruction residual.
    """
    if len(triples) != 1:
        raise NotSingleTriple(f"expected exactly one triple, found {len(triples)}")
    if chain.M_E.dim != 2:
        raise PreconditionViolated(f"dim M_E = {chain.M_E.dim}, reconstruction needs 2")
    triple = triples[0]
    m = triple.m
    chars = structure.me_spectrum.characters
    if len(chars) != 2:
        raise PreconditionViolated("moduli characters are degenerate")
    lam = chars[triple.lambda_char]
    other = chars[1 - triple.lambda_char]
    w_vec = chain.M_E.frame @ lam.frame[:, 0]
    v_vec = chain.M_E.frame @ other.frame[:, 0]

    T = model.matrix
    N = model.dim
    basis = []
    ortho_tol = 1e-7

    def push(vec) -> bool:
        nrm = np.linalg.norm(vec)
        if nrm <= cfg.rank_tol:
            return False
        u = vec / nrm
        for b in basis:
            u = u - b * np.vdot(b, u)
        nrm2 = np.linalg.norm(u)
        if nrm2 < 1.0 - ortho_tol:
            return False
        basis.append(u / nrm2)
        return True

    cur = w_vec
    for _ in range(min(m, N)):
        if not push(cur):
            raise PatternResidualTooLarge("lambda chain collapsed before depth m")
        cur = T @ cur
    cur = v_vec
    while len(basis) < N:
        if not push(cur):
            break
        cur = T @ cur
    X = np.column_stack(basis)

    # gauge: make each subdiagonal weight positive real where possible
    for k in range(X.shape[1] - 1):
        wk = np.vdot(X[:, k + 1], T @ X[:, k])
        if abs(wk) > cfg.rank_tol:
            X[:, k + 1] *= wk / abs(wk)

    B = X.shape[1]
    Tt = X.conj().T @ T @ X
    pattern = np.zeros((B, B), dtype=bool)
    pattern[np.arange(1, B), np.arange(B - 1)] = True
    pattern[0, m - 1] = True
    off = Tt.copy()
    off[pattern] = 0.0
    residual = float(np.linalg.norm(off) / max(np.linalg.norm(Tt), 1e-300))
    if residual > cfg.relation_tol:
        raise PatternResidualTooLarge(f"off-pattern mass {residual:.3e}")

    weights = np.array([Tt[k + 1, k] for k in range(B - 1)])
    a = complex(Tt[0, m - 1])

    K = chain.depth
    joint_res = 0.0
    for k in range(1, K + 1):
        g = X.conj().T @ gram_power(model, k) @ X
        offd = g - np.diag(np.diag(g))
        joint_res = max(joint_res, float(np.linalg.norm(offd) / max(np.linalg.norm(g, 2), 1e-300)))

    return ShiftRankOneCertificate(
        basis=X, weights=weights, a=a, n=m - 1,
        reconstruction_residual=residual,
        joint_eigenvector_residual=joint_res,
    )


@dataclass
class ClassificationReport:
    verdict: str
    dim_E: int
    dim_M_E: int
    triple_count: int | None
    closed_range_flag: bool
    condition_II_ok: bool
    moduli_status: str
    relation: RelationCertificate | None = None
    reconstruction: ShiftRankOneCertificate | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "dim_E": self.dim_E,
            "dim_M_E": self.dim_M_E,
            "triples": self.triple_count,
            "closed_range": self.closed_range_flag,
            "condition_II_ok": self.condition_II_ok,
            "moduli_status": self.moduli_status,
            "relation": None if self.relation is None else self.relation.as_dict(),
            "reconstruction": None if self.reconstruction is None else self.reconstruction.as_dict(),
            "diagnostics": dict(self.diagnostics),
        }


def _closed_range_flag(model: OperatorModel, cfg: ToleranceConfig) -> bool:
    g1 = gram_power(model, 1)
    block = model.window_compress(g1, model.window(1))
    s = np.linalg.svd(block, compute_uv=False)
    return bool(s[-1] > cfg.rank_tol * max(s[0], 1e-300))


def classify(model: OperatorModel, cfg: ToleranceConfig) -> ClassificationReport:
    """Main dichotomy: weighted shift, shift plus rank one, four-term
    relation, both, or inconclusive with diagnostics.

    Preconditions: half-centered within tolerance and a one-dimensional
    kernel of T*.  The span condition (the chain must exhaust the ambient
    window) is reported but does not abort the run.
    """
    diagnostics: dict = {}
    half = half_centered_check(model, cfg)
    if not half.half_centered:
        raise PreconditionViolated(
            f"not half-centered: residual {half.max_half_residual:.3e}"
        )
    diagnostics["half_residual"] = half.max_half_residual

    E = kernel_of_adjoint(model, cfg)
    if E.dim != 1:
        raise PreconditionViolated(f"dim ker T* = {E.dim}, the analysis needs 1")

    try:
        chain = chain_decomposition(model, cfg)
    except PreconditionError as exc:
        raise PreconditionViolated(str(exc)) from exc

    closure, closure_status = span_closure(model, cfg, chain.M_E)
    w_check = model.window(chain.depth)
    probe = model.window_cols(w_check)
    leak = probe - closure.frame @ (closure.frame.conj().T @ probe)
    span_defect = float(np.linalg.norm(leak, 2))
    condition_II_ok = span_defect <= 1e-8
    diagnostics["span_defect"] = span_defect
    diagnostics["span_status"] = closure_status

    closed_range = _closed_range_flag(model, cfg)

    if chain.M_E.dim == 1:
        centered = centered_check(model, cfg)
        diagnostics["centered_residual"] = centered.max_full_residual
        return ClassificationReport(
            verdict="centered_weighted_shift",
            dim_E=E.dim, dim_M_E=chain.M_E.dim, triple_count=None,
            closed_range_flag=closed_range, condition_II_ok=condition_II_ok,
            moduli_status=chain.moduli_status, diagnostics=diagnostics,
        )

    try:
        structure = structure_extract(model, chain, cfg)
    except ModuliTooSmall as exc:  # dim M_E >= 2 was checked above
        raise PreconditionViolated(str(exc)) from exc
    triples = enumerate_triples(model, chain, structure, cfg)
    diagnostics["no_nonzero_beta"] = structure.no_nonzero_beta
    diagnostics["bt1_residual"] = structure.residuals.get("bt1")

    relation = None
    try:
        relation = relation_detect(model, cfg, structure=structure)
    except NoRelationFound as exc:
        diagnostics["relation"] = str(exc)

    reconstruction = None
    if len(triples) == 1:
        try:
            reconstruction = shift_rank_one_reconstruct(model, chain, structure, triples, cfg)
        except (PreconditionError, InconclusiveError) as exc:
            diagnostics["reconstruction"] = str(exc)

    if chain.M_E.dim >= 3 and relation is not None:
        a = relation.coefficients[0]
        if abs(a) <= 1e3 * cfg.relation_tol:
            diagnostics["constant_term"] = a
            relation = None
            diagnostics["relation"] = "constant term vanishes although dim M_E >= 3"
        elif not closed_range:
            diagnostics["relation"] = "relation found but the range is not closed"
            relation = None

    if relation is not None and reconstruction is not None:
        verdict = "both"
    elif reconstruction is not None:
        verdict = "shift_plus_rank_one"
    elif relation is not None:
        verdict = "four_term_relation"
        if len(triples) < 2:
            diagnostics["triples_note"] = (
                f"relation certified with only {len(triples)} triple(s) resolved"
            )
    else:
        verdict = "inconclusive"

    return ClassificationReport(
        verdict=verdict, dim_E=E.dim, dim_M_E=chain.M_E.dim,
        triple_count=len(triples), closed_range_flag=closed_range,
        condition_II_ok=condition_II_ok, moduli_status=chain.moduli_status,
        relation=relation, reconstruction=reconstruction, diagnostics=diagnostics,
    )
