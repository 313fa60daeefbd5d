"""Orthodox, factorization-relative entanglement diagnostics."""

from __future__ import annotations

import dataclasses
import enum
from collections.abc import Callable

import numpy as np

from .errors import UnsupportedDimension
from .factorization import Factorization, coefficient_matrix, standard_factorization
from .operators import PAULIS, dagger, density_matrix, state_vector

SCHMIDT_FLOOR = 1e-12
RANK_THRESHOLD = 1e-9
NEGATIVITY_THRESHOLD = 1e-10
PPT_EXACT_DIMS = frozenset({(2, 2), (2, 3), (3, 2)})


@dataclasses.dataclass(frozen=True)
class SchmidtData:
    """``psi = sum_k c_k u_k (x) v_k`` in the aligned product coordinates.

    ``left_vectors[:, k]`` and ``right_vectors[:, k]`` are ``u_k`` and ``v_k``.
    """

    coefficients: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.sum(self.coefficients >= RANK_THRESHOLD))

    def reconstruct(self, f: Factorization) -> np.ndarray:
        aligned = sum(
            c * np.kron(self.left_vectors[:, k], self.right_vectors[:, k]) for k, c in enumerate(self.coefficients)
        )
        return dagger(f.alignment) @ aligned


class Kind(enum.Enum):
    ENTANGLED = "entangled"
    SEPARABLE = "separable"
    INCONCLUSIVE = "inconclusive"


@dataclasses.dataclass(frozen=True)
class OrthodoxVerdict:
    kind: Kind
    measure: float
    witness: str | None = None


def schmidt(psi, f: Factorization) -> SchmidtData:
    psi = state_vector(psi)
    u, s, vh = np.linalg.svd(coefficient_matrix(psi, f), full_matrices=False)
    keep = s >= SCHMIDT_FLOOR
    return SchmidtData(s[keep], u[:, keep], vh.T[:, keep])


def entanglement_entropy(s: SchmidtData) -> float:
    """Von Neumann entropy of either reduced state, in bits."""
    p = np.asarray(s.coefficients) ** 2
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def partial_transpose(rho, f: Factorization) -> np.ndarray:
    """Transpose of the right factor in aligned coordinates."""
    t = f.aligned_density(rho).reshape(f.d1, f.d2, f.d1, f.d2)
    return t.transpose(0, 3, 2, 1).reshape(f.dim, f.dim)


def negativity(rho, f: Factorization) -> float:
    rho = density_matrix(rho)
    ev = np.linalg.eigvalsh(partial_transpose(rho, f))
    return float(np.sum(-ev[ev < 0]))


def ppt_verdict(rho, f: Factorization) -> OrthodoxVerdict:
    n = negativity(rho, f)
    if n > NEGATIVITY_THRESHOLD:
        return OrthodoxVerdict(Kind.ENTANGLED, n, "partial transpose has negative eigenvalues")
    if (f.d1, f.d2) in PPT_EXACT_DIMS or f.degenerate:
        return OrthodoxVerdict(Kind.SEPARABLE, n, "PPT, exact criterion in this dimension")
    return OrthodoxVerdict(Kind.INCONCLUSIVE, n, f"PPT but {f.d1}x{f.d2} lies outside the exact regime")


def classify_orthodox(state, f: Factorization) -> OrthodoxVerdict:
    """Pure states by Schmidt rank (measure: entropy); mixed states by PPT."""
    state = np.asarray(state)
    if state.ndim == 1:
        s = schmidt(state, f)
        kind = Kind.ENTANGLED if s.rank >= 2 else Kind.SEPARABLE
        return OrthodoxVerdict(kind, entanglement_entropy(s), f"Schmidt rank {s.rank}")
    return ppt_verdict(state, f)


def correlation_matrix(rho, f: Factorization) -> np.ndarray:
    """``T[i, j] = tr(rho sigma_i (x) sigma_j)`` for a two-qubit split."""
    if (f.d1, f.d2) != (2, 2):
        raise UnsupportedDimension(f"CHSH needs a 2x2 split, got {f.d1}x{f.d2}")
    r = f.aligned_density(density_matrix(rho))
    return np.array([[np.einsum("ij,ji->", r, np.kron(a, b)).real for b in PAULIS] for a in PAULIS])


def chsh_value(rho, f: Factorization, a, a2, b, b2) -> float:
    """E(a,b) - E(a,b') + E(a',b) + E(a',b') for Bloch-vector settings."""
    t = correlation_matrix(rho, f)
    a, a2, b, b2 = (np.asarray(x, dtype=float) for x in (a, a2, b, b2))
    return float(a @ t @ b - a @ t @ b2 + a2 @ t @ b + a2 @ t @ b2)


def chsh_max(rho, f: Factorization) -> tuple[float, dict[str, np.ndarray]]:
    """Maximal CHSH value ``2 sqrt(s1^2 + s2^2)`` and settings attaining it.

    ``s1 >= s2`` are the top singular values of the correlation matrix.
    """
    t = correlation_matrix(rho, f)
    u, s, vh = np.linalg.svd(t)
    s1, s2 = s[0], s[1]
    value = 2 * float(np.hypot(s1, s2))
    theta = float(np.arctan2(s2, s1)) if s1 > 0 else 0.0
    v1, v2 = vh[0], vh[1]
    settings = {
        "a": u[:, 1],
        "a_prime": u[:, 0],
        "b": np.cos(theta) * v1 + np.sin(theta) * v2,
        "b_prime": np.cos(theta) * v1 - np.sin(theta) * v2,
    }
    return value, settings


def singlet() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def werner_state(w: float) -> np.ndarray:
    """``w |singlet><singlet| + (1 - w) I/4``."""
    s = singlet()
    return density_matrix(w * np.outer(s, s.conj()) + (1 - w) * np.eye(4) / 4)


def bisect_threshold(predicate: Callable[[float], bool], lo: float, hi: float, resolution: float = 1e-6) -> float:
    """Smallest x in [lo, hi] with predicate true, assuming false/true ordering."""
    if predicate(lo) or not predicate(hi):
        raise ValueError("predicate must be false at lo and true at hi")
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def werner_thresholds(resolution: float = 1e-6) -> dict[str, float]:
    """Locate where the Werner family turns NPT and where it violates CHSH."""
    f = standard_factorization(2, 2)
    w_ppt = bisect_threshold(lambda w: negativity(werner_state(w), f) > NEGATIVITY_THRESHOLD, 0.0, 1.0, resolution)
    w_chsh = bisect_threshold(lambda w: chsh_max(werner_state(w), f)[0] > 2.0, 0.0, 1.0, resolution)
    return {"w_ppt": w_ppt, "w_chsh": w_chsh, "resolution": resolution}


def werner_table(points: int = 21) -> list[dict[str, float]]:
    f = standard_factorization(2, 2)
    rows = []
    for w in np.linspace(0.0, 1.0, points):
        rho = werner_state(float(w))
        rows.append({"w": float(w), "negativity": negativity(rho, f), "chsh": chsh_max(rho, f)[0]})
    return rows
