"""Graphs of powers, contexts and Potential States of Affairs.

A *power* is a projector; two powers are joined by an edge when they
commute.  A *context* is a complete subgraph.  A PSA assigns every power an
intensity in [0, 1], is additive over orthogonal families and gives the
identity intensity 1.  In finite dimension every PSA is backed by a density
matrix, ``Psi(P) = tr(rho P)``, and that is how :class:`PSA` stores it.

Global *binary* valuations (one true power per identity-resolving maximal
context, one value per power however it is reached) do not always exist; the
18-vector family in dimension 4 (:data:`KS18_VECTORS`) is the standard
obstruction.  :func:`binary_valuation_search` decides the question by
backtracking.
"""

from __future__ import annotations

import dataclasses
import itertools
from collections.abc import Iterable, Sequence

import networkx as nx
import numpy as np

from . import config
from .errors import (
    DimensionMismatch,
    GraphTooLarge,
    InconsistentValues,
    InvariantViolation,
    NoIdentityResolvingContext,
    NotInformationallyComplete,
    NotOrthogonal,
    NotPositive,
    PowerNotInContext,
)
from .operators import (
    commutes,
    density_matrix,
    hermitian,
    max_entry,
    projector,
    projector_rank,
)


@dataclasses.dataclass(frozen=True)
class Power:
    projector: np.ndarray
    label: str
    rank: int

    @classmethod
    def from_matrix(cls, p, label: str) -> Power:
        p = projector(p)
        return cls(p, label, projector_rank(p))


@dataclasses.dataclass(frozen=True)
class PowersGraph:
    powers: tuple[Power, ...]
    edges: frozenset[tuple[int, int]]
    identity_index: int

    @property
    def dim(self) -> int:
        return self.powers[0].projector.shape[0]

    def __len__(self) -> int:
        return len(self.powers)

    def adjacent(self, i: int, j: int) -> bool:
        return i == j or (min(i, j), max(i, j)) in self.edges

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.powers)))
        g.add_edges_from(self.edges)
        return g

    def projectors(self) -> list[np.ndarray]:
        return [p.projector for p in self.powers]


@dataclasses.dataclass(frozen=True)
class Context:
    members: tuple[int, ...]
    is_maximal: bool
    resolves_identity: bool


@dataclasses.dataclass(frozen=True)
class PSA:
    """A Potential State of Affairs over a graph, backed by a density matrix.

    ``gleason_regime`` is False for dimension <= 2, where the bijection
    with density matrices is not guaranteed for valuations in general.
    """

    backing: np.ndarray
    graph: PowersGraph
    gleason_regime: bool

    def intensity(self, p) -> float:
        """Intensity of any projector, graph node or not."""
        p = np.asarray(p)
        if p.shape != self.backing.shape:
            raise DimensionMismatch(f"projector {p.shape} vs state {self.backing.shape}")
        v = float(np.einsum("ij,ji->", self.backing, p).real)
        if not -1e-10 <= v <= 1 + 1e-10:
            raise InvariantViolation("intensity in [0, 1]", residual=max(-v, v - 1))
        return min(1.0, max(0.0, v))

    def value(self, index: int) -> float:
        return self.intensity(self.graph.powers[index].projector)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(self.value(i) for i in range(len(self.graph)))


@dataclasses.dataclass(frozen=True)
class BinaryValuation:
    assignment: tuple[int, ...]

    def true_powers(self) -> list[int]:
        return [i for i, v in enumerate(self.assignment) if v == 1]


@dataclasses.dataclass(frozen=True)
class ValuationSearch:
    """Outcome of :func:`binary_valuation_search`.

    ``witness`` is None when the search space was exhausted without a
    solution.  ``solutions`` is only filled in exhaustive mode.
    """

    witness: BinaryValuation | None
    explored: int
    solutions: int | None = None

    @property
    def satisfiable(self) -> bool:
        return self.witness is not None


def _is_identity(p: np.ndarray) -> bool:
    return max_entry(p - np.eye(p.shape[0])) < config.get().tol_herm


def build_powers_graph(projectors: Sequence, labels: Sequence[str] | None = None, dim: int | None = None) -> PowersGraph:
    """Build the commutation graph of a projector family.

    The identity is appended when absent.  ``dim`` is needed only when the
    family is empty.
    """
    mats = [projector(p) for p in projectors]
    labels = list(labels) if labels is not None else [f"P{i}" for i in range(len(mats))]
    if len(labels) != len(mats):
        raise ValueError("one label per projector")
    dims = {m.shape[0] for m in mats}
    if dim is not None:
        dims.add(dim)
    if len(dims) > 1:
        raise DimensionMismatch(f"projectors of dimensions {sorted(dims)}")
    if not dims:
        raise ValueError("dimension unknown for an empty family; pass dim")
    d = dims.pop()
    powers = [Power(m, lab, projector_rank(m)) for m, lab in zip(mats, labels)]
    ident = next((i for i, p in enumerate(powers) if _is_identity(p.projector)), None)
    if ident is None:
        powers.append(Power.from_matrix(np.eye(d), "I"))
        ident = len(powers) - 1
    tol = config.get().tol_herm
    edges = frozenset(
        (i, j)
        for i, j in itertools.combinations(range(len(powers)), 2)
        if commutes(powers[i].projector, powers[j].projector, tol)
    )
    return PowersGraph(tuple(powers), edges, ident)


def _resolves_identity(graph: PowersGraph, members: Iterable[int]) -> bool:
    rest = [i for i in members if i != graph.identity_index]
    if not rest:
        return True
    total = sum(graph.powers[i].projector for i in rest)
    return max_entry(total - np.eye(graph.dim)) < config.get().tol_herm


def enumerate_maximal_contexts(graph: PowersGraph) -> list[Context]:
    """All maximal complete subgraphs, sorted by member tuple.

    The identity belongs to every maximal context; it is ignored when
    deciding whether a context resolves the identity.
    """
    cap = config.get().max_graph_nodes
    if len(graph) > cap:
        raise GraphTooLarge(f"{len(graph)} nodes exceeds cap {cap}")
    cliques = sorted(tuple(sorted(c)) for c in nx.find_cliques(graph.to_networkx()))
    return [Context(c, True, _resolves_identity(graph, c)) for c in cliques]


def make_context(graph: PowersGraph, members: Iterable[int]) -> Context:
    """Context from explicit members; checks completeness and flags maximality."""
    members = tuple(sorted(set(members)))
    for i, j in itertools.combinations(members, 2):
        if not graph.adjacent(i, j):
            raise InvariantViolation("context members pairwise commute", detail=f"{i} and {j} do not")
    extendable = any(all(graph.adjacent(k, m) for m in members) for k in range(len(graph)) if k not in members)
    return Context(members, not extendable, _resolves_identity(graph, members))


def psa_from_density(rho, graph: PowersGraph) -> PSA:
    rho = density_matrix(rho)
    if rho.shape[0] != graph.dim:
        raise DimensionMismatch(f"state dimension {rho.shape[0]} vs graph dimension {graph.dim}")
    return PSA(rho, graph, gleason_regime=graph.dim > 2)


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis (trace inner product) of d x d Hermitian matrices."""
    basis = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1
        basis.append(e)
    s = 1 / np.sqrt(2)
    for j, k in itertools.combinations(range(d), 2):
        sym = np.zeros((d, d), dtype=complex)
        sym[j, k] = sym[k, j] = s
        anti = np.zeros((d, d), dtype=complex)
        anti[j, k], anti[k, j] = -1j * s, 1j * s
        basis += [sym, anti]
    return basis


def informationally_complete_family(d: int) -> list[np.ndarray]:
    """d**2 rank-1 projectors whose intensities fix a density matrix.

    Projectors onto e_k, (e_j + e_k)/sqrt2 and (e_j + i e_k)/sqrt2, j < k.
    """
    vecs = []
    eye = np.eye(d, dtype=complex)
    for k in range(d):
        vecs.append(eye[k])
    for j, k in itertools.combinations(range(d), 2):
        vecs.append((eye[j] + eye[k]) / np.sqrt(2))
        vecs.append((eye[j] + 1j * eye[k]) / np.sqrt(2))
    return [projector(np.outer(v, v.conj())) for v in vecs]


def density_from_psa(values: Sequence[tuple[np.ndarray, float]], tol: float = 1e-8) -> np.ndarray:
    """Recover the density matrix from intensities by linear inversion.

    Raises NotInformationallyComplete when the projectors do not span the
    Hermitian operators, InconsistentValues when no density matrix
    reproduces the values to ``tol``, and NotPositive when the best fit is
    not positive semi-definite.
    """
    if not values:
        raise NotInformationallyComplete("no values supplied")
    mats = [hermitian(p) for p, _ in values]
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionMismatch("projectors of different dimensions")
    y = np.array([float(v) for _, v in values])
    basis = hermitian_basis(d)
    design = np.array([[np.einsum("ij,ji->", b, p).real for b in basis] for p in mats])
    rank = np.linalg.matrix_rank(design, tol=1e-9)
    if rank < d * d:
        raise NotInformationallyComplete(f"design matrix rank {rank} < {d * d}")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.max(np.abs(design @ coef - y)))
    if resid > tol:
        raise InconsistentValues(f"least-squares residual {resid:.3g} exceeds {tol:g}")
    rho = sum(c * b for c, b in zip(coef, basis))
    rho = (rho + rho.conj().T) / 2
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -config.get().tol_psd:
        raise NotPositive(f"minimum eigenvalue {lo:.3g}")
    tr = float(np.trace(rho).real)
    if abs(tr - 1) > config.get().tol_trace:
        raise InconsistentValues(f"implied trace {tr:.12g} != 1")
    return density_matrix(rho)


def check_sigma_additivity(psa: PSA, family: Sequence) -> float:
    """|Psi(sum P_i) - sum Psi(P_i)| for a pairwise orthogonal family."""
    mats = [projector(p) for p in family]
    tol = config.get().tol_herm
    for (i, a), (j, b) in itertools.combinations(enumerate(mats), 2):
        if max_entry(a @ b) >= tol:
            raise NotOrthogonal(f"members {i} and {j} are not orthogonal")
    if len(mats) == 1:
        return 0.0
    total = projector(sum(mats))
    return abs(psa.intensity(total) - sum(psa.intensity(m) for m in mats))


def context_value(psa: PSA, power_index: int, context: Context) -> float:
    """Read Psi(P) through a context's joint eigenbasis.

    The members are diagonalized simultaneously; P is diagonal (0/1) in the
    joint eigenbasis and its intensity is the Born weight of its support.
    This is a different numerical path from ``tr(rho P)``.
    """
    if power_index not in context.members:
        raise PowerNotInContext(f"power {power_index} not in context {context.members}")
    graph = psa.graph
    # irrational weights make accidental degeneracies of the combination non-generic
    weights = np.sqrt(np.arange(2, len(context.members) + 2))
    combo = sum(w * graph.powers[m].projector for w, m in zip(weights, context.members))
    _, vecs = np.linalg.eigh(combo)
    p = graph.powers[power_index].projector
    occupation = np.round(np.einsum("ik,ij,jk->k", vecs.conj(), p, vecs).real)
    born = np.einsum("ik,ij,jk->k", vecs.conj(), psa.backing, vecs).real
    return float(min(1.0, max(0.0, np.dot(occupation, born))))


def noncontextual_value_check(psa: PSA, power_index: int, contexts: Sequence[Context], tol: float = 1e-12) -> bool:
    """True when Psi(P) read through every listed context matches tr(rho P)."""
    direct = psa.value(power_index)
    readings = [context_value(psa, power_index, c) for c in contexts]
    return all(abs(r - direct) <= tol for r in readings)


def _search_constraints(graph: PowersGraph) -> tuple[list[tuple[int, ...]], list[tuple[int, int]]]:
    contexts = enumerate_maximal_contexts(graph)
    exactly_one = [
        tuple(m for m in c.members if m != graph.identity_index)
        for c in contexts
        if c.resolves_identity and len(c.members) > 1
    ]
    if not exactly_one and not any(c.resolves_identity for c in contexts):
        raise NoIdentityResolvingContext("no maximal context sums to the identity")
    tol = config.get().tol_herm
    orthogonal = [
        (i, j)
        for i, j in graph.edges
        if max_entry(graph.powers[i].projector @ graph.powers[j].projector) < tol
    ]
    return exactly_one, orthogonal


def binary_valuation_search(graph: PowersGraph, exhaustive: bool = False) -> ValuationSearch:
    """Backtracking search for a global {0,1} valuation.

    Constraints: the identity is true; in every identity-resolving maximal
    context exactly one other member is true; orthogonal powers are never
    both true.  Each power carries a single global value.  Branching follows
    node index order trying 0 before 1, so the first witness is the
    lexicographically smallest.  With ``exhaustive=True`` all solutions are
    counted.
    """
    exactly_one, orthogonal = _search_constraints(graph)
    n = len(graph)
    neighbours: list[list[int]] = [[] for _ in range(n)]
    for i, j in orthogonal:
        neighbours[i].append(j)
        neighbours[j].append(i)
    groups_of: list[list[int]] = [[] for _ in range(n)]
    for g, members in enumerate(exactly_one):
        for m in members:
            groups_of[m].append(g)

    explored = 0
    first: tuple[int, ...] | None = None
    count = 0

    def propagate(assign: list[int], queue: list[int]) -> bool:
        while queue:
            k = queue.pop()
            touched = set(groups_of[k])
            if assign[k] == 1:
                for nb in neighbours[k]:
                    if assign[nb] == 1:
                        return False
                    if assign[nb] == -1:
                        assign[nb] = 0
                        queue.append(nb)
            for g in touched:
                members = exactly_one[g]
                ones = sum(1 for m in members if assign[m] == 1)
                free = [m for m in members if assign[m] == -1]
                if ones > 1 or (ones == 0 and not free):
                    return False
                if ones == 1:
                    for m in free:
                        assign[m] = 0
                        queue.append(m)
                elif len(free) == 1:
                    assign[free[0]] = 1
                    queue.append(free[0])
        return True

    def solve(assign: list[int]) -> bool:
        nonlocal explored, first, count
        explored += 1
        try:
            k = assign.index(-1)
        except ValueError:
            count += 1
            if first is None:
                first = tuple(assign)
            return not exhaustive
        for v in (0, 1):
            trial = list(assign)
            trial[k] = v
            if propagate(trial, [k]) and solve(trial):
                return True
        return False

    start = [-1] * n
    start[graph.identity_index] = 1
    if propagate(start, list(range(n))):
        solve(start)
    witness = BinaryValuation(first) if first is not None else None
    return ValuationSearch(witness, explored, count if exhaustive else None)


def verify_valuation(graph: PowersGraph, valuation: BinaryValuation) -> bool:
    """Independent check that a valuation meets the search constraints."""
    a = valuation.assignment
    if len(a) != len(graph) or a[graph.identity_index] != 1:
        return False
    exactly_one, orthogonal = _search_constraints(graph)
    if any(a[i] == 1 and a[j] == 1 for i, j in orthogonal):
        return False
    return all(sum(a[m] for m in g) == 1 for g in exactly_one)


# The standard 18-vector Kochen-Specker set in dimension 4.  Each row
# of KS18_BASES lists indices into KS18_VECTORS forming one orthogonal basis;
# every vector occurs in exactly two of the nine bases.
KS18_VECTORS: tuple[tuple[int, int, int, int], ...] = (
    (0, 0, 0, 1), (0, 0, 1, 0), (1, 1, 0, 0), (1, -1, 0, 0), (0, 1, 0, 0), (1, 0, 1, 0),
    (1, 0, -1, 0), (1, -1, 1, -1), (1, -1, -1, 1), (0, 0, 1, 1), (1, 1, 1, 1), (0, 1, 0, -1),
    (1, 0, 0, 1), (1, 0, 0, -1), (0, 1, -1, 0), (1, 1, -1, 1), (1, 1, 1, -1), (-1, 1, 1, 1),
)
KS18_BASES: tuple[tuple[int, int, int, int], ...] = (
    (0, 1, 2, 3), (0, 4, 5, 6), (7, 8, 2, 9), (7, 10, 6, 11), (1, 4, 12, 13),
    (8, 10, 13, 14), (15, 16, 3, 9), (15, 17, 5, 11), (16, 17, 12, 14),
)


def ks18_projectors() -> list[np.ndarray]:
    out = []
    for v in KS18_VECTORS:
        u = np.array(v, dtype=float)
        # integer outer product over the squared norm is exact in binary
        out.append(projector(np.outer(u, u) / (u @ u)))
    return out
