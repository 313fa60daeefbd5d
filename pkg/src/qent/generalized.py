"""Generalized entanglement relative to a reduction map.

Two kinds of reduction are supported:

* :class:`SubsystemPair` -- the pair of partial traces of a factorization.
  A pure state is generalized unentangled when both reduced states lie on
  extreme rays of the positive cone (rank one).
* :class:`ObservableProjection` -- expectations of a distinguished set of
  Hermitian observables, orthonormal in the trace inner product.  Here the
  extremality of the image is judged by *relative purity*
  ``sum_i <A_i>^2``: the state is unentangled when its relative purity
  reaches the maximum over pure states.  The maximum is estimated by
  multistart Nelder-Mead and the verdict is marked heuristic.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
from collections.abc import Sequence

import numpy as np
from scipy.optimize import minimize

from .entanglement import Kind, PPT_EXACT_DIMS, classify_orthodox, ppt_verdict
from .errors import (
    DimensionMismatch,
    LinearlyDependentSet,
    NotPositive,
    NotPure,
    SetNotOrthonormalized,
    UnsupportedMixedRegime,
)
from .factorization import Factorization, Side, partial_trace
from .operators import (
    density_matrix,
    hermitian,
    pure_density,
    rng_from,
    state_vector,
)
from .psa import hermitian_basis

OPTIMIZER_STARTS = 64
PURITY_TOLERANCE = 1e-6


@dataclasses.dataclass(frozen=True)
class DistinguishedSet:
    observables: tuple[np.ndarray, ...]
    orthonormalized: bool = False

    @classmethod
    def of(cls, observables: Sequence, orthonormalized: bool = False) -> DistinguishedSet:
        mats = tuple(hermitian(a) for a in observables)
        if len({m.shape for m in mats}) > 1:
            raise DimensionMismatch("observables of different dimensions")
        return cls(mats, orthonormalized)

    @property
    def dim(self) -> int:
        return self.observables[0].shape[0]

    def digest(self) -> str:
        h = hashlib.sha256()
        for a in self.observables:
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


@dataclasses.dataclass(frozen=True)
class SubsystemPair:
    factorization: Factorization


@dataclasses.dataclass(frozen=True)
class ObservableProjection:
    observables: DistinguishedSet


ReductionMap = SubsystemPair | ObservableProjection


class GeKind(enum.Enum):
    UNENTANGLED = "generalized_unentangled"
    ENTANGLED = "generalized_entangled"


@dataclasses.dataclass(frozen=True)
class GeVerdict:
    kind: GeKind
    certificate: str
    heuristic: bool = False


def _hs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.einsum("ij,ji->", a, b).real)


def orthonormalize(dset: DistinguishedSet) -> DistinguishedSet:
    """Gram-Schmidt in the trace inner product; preserves span and order."""
    out: list[np.ndarray] = []
    for k, a in enumerate(dset.observables):
        v = np.array(a, dtype=complex)
        for b in out:
            v = v - _hs(b, v) * b
        norm = np.sqrt(max(_hs(v, v), 0.0))
        if norm < 1e-9 * max(1.0, np.sqrt(_hs(a, a))):
            raise LinearlyDependentSet(f"observable {k} lies in the span of the previous ones")
        out.append(v / norm)
    return DistinguishedSet.of(out, orthonormalized=True)


def traceless_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (trace inner product) basis of traceless d x d Hermitian matrices."""
    basis = [b for b in hermitian_basis(d) if abs(np.trace(b)) < 1e-12]
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1
        diag[k] = -k
        basis.append(np.diag(diag / np.linalg.norm(diag)).astype(complex))
    return basis


def local_observable_set(f: Factorization) -> DistinguishedSet:
    """Traceless local observables on each factor, pulled back to ambient coordinates.

    For two qubits this is ``{sigma_i (x) I / 2, I (x) sigma_i / 2}``.
    """
    left = [f.local_left(b) / np.sqrt(f.d2) for b in traceless_basis(f.d1)]
    right = [f.local_right(b) / np.sqrt(f.d1) for b in traceless_basis(f.d2)]
    return DistinguishedSet.of(left + right, orthonormalized=True)


def full_operator_set(d: int) -> DistinguishedSet:
    """All of the Hermitian operators: the identity reduction."""
    return DistinguishedSet.of(hermitian_basis(d), orthonormalized=True)


def _as_density(state) -> np.ndarray:
    state = np.asarray(state)
    return pure_density(state_vector(state)) if state.ndim == 1 else density_matrix(state)


def reduce_state(state, reduction: ReductionMap):
    """Image of a state: a pair of reduced states, or a vector of expectations."""
    rho = _as_density(state)
    if isinstance(reduction, SubsystemPair):
        f = reduction.factorization
        return partial_trace(rho, f, Side.LEFT), partial_trace(rho, f, Side.RIGHT)
    obs = reduction.observables
    if obs.dim != rho.shape[0]:
        raise DimensionMismatch(f"observables act on {obs.dim}, state on {rho.shape[0]}")
    return np.array([_hs(rho, a) for a in obs.observables])


def cone_extremality(x, rel_floor: float = 1e-9) -> bool:
    """True when a positive operator spans an extreme ray (numerical rank <= 1)."""
    x = hermitian(x)
    ev = np.linalg.eigvalsh(x)[::-1]
    if ev[-1] < -1e-10:
        raise NotPositive(f"minimum eigenvalue {ev[-1]:.3g}")
    if ev[0] <= 0:
        return True
    return len(ev) < 2 or ev[1] < rel_floor * ev[0]


def relative_purity(psi, dset: DistinguishedSet) -> float:
    if not dset.orthonormalized:
        raise SetNotOrthonormalized("orthonormalize the distinguished set first")
    psi = state_vector(psi)
    return float(sum(np.vdot(psi, a @ psi).real ** 2 for a in dset.observables))


_max_purity_cache: dict[tuple[str, int, int], float] = {}


def max_relative_purity(dset: DistinguishedSet, starts: int = OPTIMIZER_STARTS, seed: int = 0) -> float:
    """Estimate the maximum relative purity over pure states.

    Multistart Nelder-Mead on the unnormalized real parametrization of the
    state vector.  Results are cached per (set, starts, seed).
    """
    if not dset.orthonormalized:
        raise SetNotOrthonormalized("orthonormalize the distinguished set first")
    key = (dset.digest(), starts, seed)
    if key in _max_purity_cache:
        return _max_purity_cache[key]
    d = dset.dim
    stack = np.array(dset.observables)

    def neg_purity(x: np.ndarray) -> float:
        v = x[:d] + 1j * x[d:]
        n = np.vdot(v, v).real
        if n < 1e-300:
            return 0.0
        exp = np.einsum("i,kij,j->k", v.conj(), stack, v).real / n
        return -float(exp @ exp)

    rng = rng_from(seed)
    best = 0.0
    for _ in range(starts):
        x0 = rng.standard_normal(2 * d)
        res = minimize(
            neg_purity,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400 * d, "maxfev": 600 * d},
        )
        best = max(best, -float(res.fun))
    _max_purity_cache[key] = best
    return best


def is_generalized_unentangled(state, reduction: ReductionMap, seed: int = 0) -> GeVerdict:
    """Generalized (un)entanglement of a state relative to a reduction map.

    Mixed states are handled only for :class:`SubsystemPair` in 2x2 and 2x3,
    where membership in the convex hull of pure product states is decided
    exactly by PPT.
    """
    arr = np.asarray(state)
    if arr.ndim == 2:
        rho = density_matrix(arr)
        w, v = np.linalg.eigh(rho)
        if len(w) == 1 or w[-2] < 1e-9:
            arr = v[:, -1] / np.linalg.norm(v[:, -1])
        elif isinstance(reduction, SubsystemPair):
            f = reduction.factorization
            if (f.d1, f.d2) not in PPT_EXACT_DIMS:
                raise UnsupportedMixedRegime(f"mixed states in {f.d1}x{f.d2} are not decidable here")
            v = ppt_verdict(rho, f)
            if v.kind is Kind.SEPARABLE:
                return GeVerdict(GeKind.UNENTANGLED, "clause (b): PPT, a mixture of pure product states")
            return GeVerdict(GeKind.ENTANGLED, "not clause (b): partial transpose is not positive")
        else:
            raise NotPure("observable reductions are decided for pure states only")
    psi = state_vector(arr)

    if isinstance(reduction, SubsystemPair):
        left, right = reduce_state(psi, reduction)
        ext_l, ext_r = cone_extremality(left), cone_extremality(right)
        if ext_l and ext_r:
            return GeVerdict(GeKind.UNENTANGLED, "clause (a): state and both reduced states are extreme")
        which = "left" if not ext_l else "right"
        return GeVerdict(GeKind.ENTANGLED, f"not clause (a): {which} reduced state has rank > 1")

    dset = reduction.observables
    if dset.dim != psi.size:
        raise DimensionMismatch(f"observables act on {dset.dim}, state on {psi.size}")
    if not dset.orthonormalized:
        dset = orthonormalize(dset)
    purity = relative_purity(psi, dset)
    top = max(max_relative_purity(dset, seed=seed), purity)
    if purity >= top - PURITY_TOLERANCE:
        return GeVerdict(
            GeKind.UNENTANGLED,
            f"clause (a): relative purity {purity:.9f} attains estimated maximum {top:.9f}",
            heuristic=True,
        )
    return GeVerdict(
        GeKind.ENTANGLED,
        f"not clause (a): relative purity {purity:.9f} below estimated maximum {top:.9f}",
        heuristic=True,
    )


def ge_matches_orthodox(psi, f: Factorization) -> bool:
    ge = is_generalized_unentangled(psi, SubsystemPair(f))
    orth = classify_orthodox(state_vector(psi), f)
    return (ge.kind is GeKind.UNENTANGLED) == (orth.kind is Kind.SEPARABLE)

