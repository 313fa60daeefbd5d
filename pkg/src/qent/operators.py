"""Dense complex linear algebra: validated states and operators.

Values are plain :class:`numpy.ndarray` objects.  The constructors
(:func:`state_vector`, :func:`hermitian`, :func:`projector`,
:func:`density_matrix`, :func:`unitary`) check the relevant invariant and
return a read-only complex128 copy, so every value handed around the package
is immutable.  A 1-d array is a state vector; a 2-d array is an operator.
"""

from __future__ import annotations

from collections.abc import Sequence
from functools import reduce

import numpy as np

from . import config
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DimensionTooLarge,
    InvalidRank,
    InvariantViolation,
    NonRealExpectation,
    WeightsNotNormalized,
)

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
for _m in (I2, *PAULIS):
    _m.flags.writeable = False

RngLike = int | np.random.Generator | None


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex, copy=True)
    out.flags.writeable = False
    return out


def _check_dim(n: int) -> None:
    cap = config.get().max_dim
    if n > cap:
        raise DimensionTooLarge(f"dimension {n} exceeds configured cap {cap}")


def as_matrix(a) -> np.ndarray:
    """Validate a finite complex 2-d array (not necessarily square)."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or 0 in m.shape:
        raise InvariantViolation("matrix must be 2-dimensional and non-empty", detail=f"shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvariantViolation("entries must be finite")
    return _frozen(m)


def max_entry(a) -> float:
    """Largest entry modulus; the package's standard distance measure."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def state_vector(psi, normalize: bool = False) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise InvariantViolation("state vector must be 1-dimensional and non-empty", detail=f"shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvariantViolation("entries must be finite")
    _check_dim(v.size)
    norm = float(np.linalg.norm(v))
    if normalize:
        if norm == 0.0:
            raise InvariantViolation("norm = 1", residual=1.0, detail="cannot normalize the zero vector")
        v = v / norm
    elif abs(norm - 1.0) > config.get().tol_norm:
        raise InvariantViolation("norm = 1", residual=abs(norm - 1.0), detail=f"norm = {norm:.10g}")
    return _frozen(v)


def hermitian(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise InvariantViolation("operator must be square", detail=f"shape {m.shape}")
    _check_dim(m.shape[0])
    dev = max_entry(m - m.conj().T)
    if dev > config.get().tol_herm:
        raise InvariantViolation("Hermitian", residual=dev)
    return m


def projector(a) -> np.ndarray:
    m = hermitian(a)
    tol = config.get().tol_herm
    dev = max_entry(m @ m - m)
    if dev > tol:
        raise InvariantViolation("idempotent", residual=dev)
    ev = np.linalg.eigvalsh(m)
    off = float(np.max(np.minimum(np.abs(ev), np.abs(ev - 1.0))))
    if off > tol:
        raise InvariantViolation("eigenvalues in {0, 1}", residual=off)
    return m


def projector_rank(p) -> int:
    return int(round(float(np.trace(p).real)))


def density_matrix(a) -> np.ndarray:
    m = hermitian(a)
    s = config.get()
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > s.tol_trace:
        raise InvariantViolation("trace = 1", residual=abs(tr - 1.0))
    lo = float(np.linalg.eigvalsh(m)[0])
    if lo < -s.tol_psd:
        raise InvariantViolation("positive semi-definite", residual=-lo)
    return m


def unitary(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise InvariantViolation("operator must be square", detail=f"shape {m.shape}")
    _check_dim(m.shape[0])
    dev = max_entry(m @ m.conj().T - np.eye(m.shape[0]))
    if dev > config.get().tol_herm:
        raise InvariantViolation("U U^dagger = I", residual=dev)
    return m


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return _frozen(v)


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return _frozen(np.outer(psi, psi.conj()))


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of any number of vectors or matrices."""
    if not ops:
        raise ValueError("tensor_product needs at least one factor")
    return _frozen(reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops)))


def expectation(a, state) -> float:
    """Born-rule expectation: <psi|A|psi> for vectors, tr(rho A) for matrices."""
    a = np.asarray(a, dtype=complex)
    state = np.asarray(state, dtype=complex)
    n = a.shape[0]
    if state.shape[0] != n or (state.ndim == 2 and state.shape[1] != n):
        raise DimensionMismatch(f"operator is {a.shape}, state is {state.shape}")
    if state.ndim == 1:
        val = np.vdot(state, a @ state)
    else:
        val = np.einsum("ij,ji->", state, a)
    if abs(val.imag) >= 1e-10:
        raise NonRealExpectation(f"imaginary part {val.imag:.3g}; is the operator Hermitian?")
    return float(val.real)


def commutes(p, q, tol: float | None = None) -> bool:
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape != q.shape:
        raise DimensionMismatch(f"{p.shape} vs {q.shape}")
    if tol is None:
        tol = config.get().tol_herm
    return max_entry(p @ q - q @ p) < tol


def spectral_decomposition(a) -> list[tuple[float, np.ndarray]]:
    """Eigenvalues (descending) with their eigenprojectors.

    Eigenvalues closer than the configured degeneracy gap are merged into a
    single higher-rank projector; the eigenvalue reported for a merged block
    is the block mean.
    """
    a = np.asarray(a, dtype=complex)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    gap = config.get().degeneracy_gap
    blocks: list[list[int]] = []
    for k in range(len(w)):
        if blocks and w[blocks[-1][-1]] - w[k] < gap:
            blocks[-1].append(k)
        else:
            blocks.append([k])
    out = []
    for b in blocks:
        vecs = v[:, b]
        out.append((float(np.mean(w[b])), _frozen(vecs @ vecs.conj().T)))
    return out


def mixture_from_ensemble(weights: Sequence[float], states: Sequence) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if len(w) != len(states) or len(w) == 0:
        raise DimensionMismatch("need one weight per state")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise WeightsNotNormalized(f"weights must be nonnegative and sum to 1 (sum {w.sum():.15g})")
    vecs = [state_vector(s) for s in states]
    dims = {v.size for v in vecs}
    if len(dims) != 1:
        raise DimensionMismatch(f"states have dimensions {sorted(dims)}")
    rho = sum(p * np.outer(v, v.conj()) for p, v in zip(w, vecs))
    return density_matrix(rho)


def rng_from(seed: RngLike) -> np.random.Generator:
    """Accept an integer seed or an existing Generator (for threading one stream)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_pure_state(dim: int, seed: RngLike = None) -> np.ndarray:
    _check_dim(dim)
    v = _ginibre(rng_from(seed), dim, 1)[:, 0]
    return _frozen(v / np.linalg.norm(v))


def random_unitary(dim: int, seed: RngLike = None) -> np.ndarray:
    """Haar unitary via QR of a complex Gaussian matrix with the phase fix."""
    _check_dim(dim)
    q, r = np.linalg.qr(_ginibre(rng_from(seed), dim, dim))
    d = np.diag(r)
    return _frozen(q * (d / np.abs(d)))


def random_density(dim: int, rank: int | None = None, seed: RngLike = None) -> np.ndarray:
    """Random density matrix of the given rank (full rank by default)."""
    _check_dim(dim)
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise InvalidRank(f"rank must be in [1, {dim}], got {rank}")
    g = _ginibre(rng_from(seed), dim, rank)
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return _frozen(rho / np.trace(rho).real)


def random_hermitian(dim: int, seed: RngLike = None) -> np.ndarray:
    g = _ginibre(rng_from(seed), dim, dim)
    return _frozen((g + g.conj().T) / 2)


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T
