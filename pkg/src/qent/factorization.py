"""Tensor factorizations, channels and shadows.

A :class:`Factorization` of a ``d``-dimensional space into ``d1 x d2`` is an
alignment unitary ``A``: ambient coordinates are mapped by ``A`` onto
product coordinates, with product index ``i * d2 + j``.  Changing the
factorization by a global unitary ``U`` is the composition ``A @ U``, so an
operator that is local in the new split is ``(A U)^dagger (X (x) I) (A U)``
in ambient coordinates.
"""

from __future__ import annotations

import dataclasses
import enum
from collections.abc import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    KrausIncomplete,
    NonCommutingPair,
    NotProductState,
    UnequalFactors,
)
from .operators import (
    RngLike,
    commutes,
    dagger,
    density_matrix,
    hermitian,
    max_entry,
    random_density,
    random_unitary,
    rng_from,
    state_vector,
    unitary,
)
from .psa import PSA, PowersGraph, build_powers_graph, psa_from_density


class Side(enum.Enum):
    """Which factor a partial trace keeps."""

    LEFT = "left"
    RIGHT = "right"


@dataclasses.dataclass(frozen=True)
class Factorization:
    d1: int
    d2: int
    alignment: np.ndarray

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError("factor dimensions must be positive")
        if self.alignment.shape != (self.d1 * self.d2,) * 2:
            raise DimensionMismatch(f"alignment {self.alignment.shape} vs d1*d2 = {self.d1 * self.d2}")

    @property
    def dim(self) -> int:
        return self.d1 * self.d2

    @property
    def degenerate(self) -> bool:
        return self.d1 == 1 or self.d2 == 1

    def check(self, n: int) -> None:
        if n != self.dim:
            raise DimensionMismatch(f"dimension {n} vs factorization {self.d1}x{self.d2}")

    def aligned_state(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        self.check(psi.shape[0])
        return self.alignment @ psi

    def aligned_density(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        self.check(rho.shape[0])
        return self.alignment @ rho @ dagger(self.alignment)

    def pull_back(self, op) -> np.ndarray:
        """Ambient-coordinate form of an operator given in product coordinates."""
        return dagger(self.alignment) @ np.asarray(op, dtype=complex) @ self.alignment

    def local_left(self, a) -> np.ndarray:
        return self.pull_back(np.kron(a, np.eye(self.d2)))

    def local_right(self, b) -> np.ndarray:
        return self.pull_back(np.kron(np.eye(self.d1), b))


def standard_factorization(d1: int, d2: int) -> Factorization:
    return Factorization(d1, d2, unitary(np.eye(d1 * d2)))


def twist_factorization(f: Factorization, u) -> Factorization:
    u = unitary(u)
    f.check(u.shape[0])
    return Factorization(f.d1, f.d2, unitary(f.alignment @ u))


def coefficient_matrix(psi, f: Factorization) -> np.ndarray:
    """Amplitudes as a d1 x d2 matrix in the aligned product coordinates."""
    return f.aligned_state(psi).reshape(f.d1, f.d2)


def partial_trace(rho, f: Factorization, side: Side | str = Side.LEFT) -> np.ndarray:
    """Reduced state on the kept factor (``side``) after alignment."""
    side = Side(side)
    rho = density_matrix(rho)
    t = f.aligned_density(rho).reshape(f.d1, f.d2, f.d1, f.d2)
    red = np.einsum("ijkj->ik", t) if side is Side.LEFT else np.einsum("ijil->jl", t)
    return density_matrix((red + dagger(red)) / 2)


@dataclasses.dataclass(frozen=True)
class CptpMap:
    """Completely positive trace-preserving map in Kraus form."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.kraus:
            raise KrausIncomplete("empty Kraus family")
        shapes = {k.shape for k in self.kraus}
        if len(shapes) != 1:
            raise DimensionMismatch(f"Kraus operators of shapes {sorted(shapes)}")
        total = sum(dagger(k) @ k for k in self.kraus)
        dev = max_entry(total - np.eye(self.in_dim))
        if dev > 1e-9:
            raise KrausIncomplete(f"sum K^dagger K deviates from I by {dev:.3g}")

    @classmethod
    def from_kraus(cls, ops: Sequence) -> CptpMap:
        mats = []
        for k in ops:
            m = np.array(k, dtype=complex)
            m.flags.writeable = False
            mats.append(m)
        return cls(tuple(mats))

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.in_dim, self.in_dim):
            raise DimensionMismatch(f"channel input {self.in_dim}, state {rho.shape}")
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def after(self, first: CptpMap) -> CptpMap:
        """Composition ``self o first`` (apply ``first``, then ``self``)."""
        if first.out_dim != self.in_dim:
            raise DimensionMismatch(f"cannot compose {first.out_dim}-dim output into {self.in_dim}-dim input")
        return CptpMap.from_kraus([b @ a for b in self.kraus for a in first.kraus])


def identity_channel(d: int) -> CptpMap:
    return CptpMap.from_kraus([np.eye(d)])


def unitary_channel(u) -> CptpMap:
    return CptpMap.from_kraus([unitary(u)])


def partial_trace_channel(f: Factorization, side: Side | str = Side.LEFT) -> CptpMap:
    side = Side(side)
    ops = []
    if side is Side.LEFT:
        for j in range(f.d2):
            bra = np.zeros((1, f.d2))
            bra[0, j] = 1
            ops.append(np.kron(np.eye(f.d1), bra) @ f.alignment)
    else:
        for i in range(f.d1):
            bra = np.zeros((1, f.d1))
            bra[0, i] = 1
            ops.append(np.kron(bra, np.eye(f.d2)) @ f.alignment)
    return CptpMap.from_kraus(ops)


def apply_cptp(rho, t: CptpMap) -> np.ndarray:
    rho = density_matrix(rho)
    out = t(rho)
    return density_matrix((out + dagger(out)) / 2)


@dataclasses.dataclass(frozen=True)
class Shadow:
    source: PSA
    map: CptpMap
    result: PSA


def shadow(psa: PSA, t: CptpMap, target_graph: PowersGraph) -> Shadow:
    """Push a PSA through a channel onto a graph of powers of the output space."""
    if target_graph.dim != t.out_dim:
        raise DimensionMismatch(f"target graph dim {target_graph.dim} vs channel output {t.out_dim}")
    return Shadow(psa, t, psa_from_density(apply_cptp(psa.backing, t), target_graph))


def verify_factorization_invariance(psa: PSA, t: CptpMap, u: CptpMap, tol: float = 1e-10) -> tuple[bool, float]:
    """Compare ``U_*(T_* Psi)`` with ``(U o T)_* Psi``; returns (passed, residual)."""
    if t.out_dim != u.in_dim:
        raise DimensionMismatch(f"U expects {u.in_dim}, T produces {t.out_dim}")
    composed = u.after(t)
    via_shadow = apply_cptp(apply_cptp(psa.backing, t), u)
    direct = apply_cptp(psa.backing, composed)
    residual = max_entry(via_shadow - direct)
    return residual < tol, residual


def invariance_sweep(trials: int, seed: RngLike, d1: int = 2, d2: int = 2) -> list[float]:
    """Residuals of the invariance check on random (rho, partial trace, unitary) triples.

    Each trial draws a full-rank state on ``d1*d2``, a random side for the
    partial trace of the standard split, and a Haar unitary channel on the
    kept factor.
    """
    rng = rng_from(seed)
    f = standard_factorization(d1, d2)
    graph = build_powers_graph([], dim=d1 * d2)
    residuals = []
    for _ in range(trials):
        rho = random_density(d1 * d2, seed=rng)
        side = Side.LEFT if rng.integers(2) == 0 else Side.RIGHT
        t = partial_trace_channel(f, side)
        u = unitary_channel(random_unitary(t.out_dim, seed=rng))
        _, res = verify_factorization_invariance(psa_from_density(rho, graph), t, u)
        residuals.append(res)
    return residuals


def qcf(x, y, psi) -> float:
    """Quantum covariant function <XY> - <X><Y> for commuting X, Y."""
    x = hermitian(x)
    y = hermitian(y)
    psi = state_vector(psi)
    if x.shape != y.shape or x.shape[0] != psi.size:
        raise DimensionMismatch(f"X {x.shape}, Y {y.shape}, state {psi.size}")
    if not commutes(x, y):
        raise NonCommutingPair("QCF is only real-valued for commuting observables")
    joint = np.vdot(psi, x @ y @ psi)
    ex = np.vdot(psi, x @ psi).real
    ey = np.vdot(psi, y @ psi).real
    return float(joint.real - ex * ey)


def maximally_entangled(d: int) -> np.ndarray:
    """(1/sqrt d) sum_k |k>|k> in product coordinates."""
    v = np.zeros(d * d, dtype=complex)
    v[[k * d + k for k in range(d)]] = 1 / np.sqrt(d)
    return v


def _unitary_with_first_column(v: np.ndarray) -> np.ndarray:
    n = v.size
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(n)]))
    phase = np.vdot(q[:, 0], v)
    q[:, 0] *= phase / abs(phase)
    return q


def entangling_factorization_for(psi, f: Factorization) -> tuple[Factorization, tuple[np.ndarray, np.ndarray]]:
    """Re-factorize so that a product state becomes maximally entangled.

    Returns the twisted factorization together with a commuting witness pair
    ``(F, G)``: local observables of the new split, written in ambient
    coordinates, whose QCF on ``psi`` is nonzero.  The local observable is
    ``diag(linspace(-1, 1, d))`` on each factor.
    """
    psi = state_vector(psi)
    if f.d1 != f.d2:
        raise UnequalFactors(f"need d1 == d2, got {f.d1}x{f.d2}")
    if f.d1 < 2:
        raise UnequalFactors("factors must have dimension >= 2")
    s = np.linalg.svd(coefficient_matrix(psi, f), compute_uv=False)
    if s.size > 1 and s[1] >= 1e-9:
        raise NotProductState(f"second Schmidt coefficient {s[1]:.3g}")
    a = f.aligned_state(psi)
    target = maximally_entangled(f.d1)
    w = _unitary_with_first_column(target) @ dagger(_unitary_with_first_column(a))
    # new alignment W A equals A (A^dagger W A): a twist of f
    new = twist_factorization(f, dagger(f.alignment) @ w @ f.alignment)
    local = np.diag(np.linspace(-1.0, 1.0, f.d1)).astype(complex)
    big_f = hermitian((new.local_left(local) + dagger(new.local_left(local))) / 2)
    big_g = hermitian((new.local_right(local) + dagger(new.local_right(local))) / 2)
    return new, (big_f, big_g)
