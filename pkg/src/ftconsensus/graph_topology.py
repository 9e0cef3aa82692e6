"""Leader-follower communication topology and the matrices derived from it.

Followers are indexed ``1..N`` in user-facing structures (edge lists, config
files, diagnostics) and ``0..N-1`` inside arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class TopologyError(ValueError):
    """Raised for a topology that violates symmetry, weight or reachability rules."""


class EigenSolverError(RuntimeError):
    """Raised when the symmetric eigensolver fails to converge."""


@dataclass(frozen=True)
class TopologySpec:
    """Undirected weighted follower graph plus leader link weights.

    Attributes:
        n_followers: number of follower agents N.
        edges: tuples ``(i, j, a_ij)`` with 1-based follower indices. Each
            undirected edge is listed once; listing ``(j, i, a_ji)`` as well is
            accepted only when the weights agree.
        leader_links: length-N sequence of ``b_i >= 0``.
    """

    n_followers: int
    edges: tuple[tuple[int, int, float], ...]
    leader_links: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(i), int(j), float(w)) for i, j, w in self.edges))
        object.__setattr__(self, "leader_links", tuple(float(b) for b in self.leader_links))


@dataclass(frozen=True)
class ConnectionMatrices:
    """``A``, ``Q = D - A``, ``M = Q + diag(b)`` and the smallest eigenvalue of ``M``."""

    adjacency: np.ndarray
    laplacian: np.ndarray
    leader_matrix: np.ndarray
    lambda_min: float
    leader_links: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.diag(self.laplacian).copy()


def _adjacency(spec: TopologySpec) -> np.ndarray:
    n = spec.n_followers
    if n < 1:
        raise TopologyError(f"n_followers must be a positive integer, got {n}")
    if len(spec.leader_links) != n:
        raise TopologyError(f"leader_links has length {len(spec.leader_links)}, expected {n}")
    if any(b < 0 or not np.isfinite(b) for b in spec.leader_links):
        raise TopologyError("leader link weights b_i must be finite and >= 0")
    A = np.zeros((n, n))
    for i, j, w in spec.edges:
        if not (1 <= i <= n and 1 <= j <= n):
            raise TopologyError(f"edge ({i}, {j}) references a follower outside 1..{n}")
        if i == j:
            raise TopologyError(f"self-loop on follower {i}")
        if not (w > 0 and np.isfinite(w)):
            raise TopologyError(f"edge ({i}, {j}) has nonpositive weight {w}")
        for r, c in ((i - 1, j - 1), (j - 1, i - 1)):
            if A[r, c] != 0 and A[r, c] != w:
                raise TopologyError(f"asymmetric or duplicated edge ({i}, {j}): weights {A[r, c]} and {w}")
            A[r, c] = w
    return A


def _components(A: np.ndarray) -> list[list[int]]:
    n = A.shape[0]
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in np.flatnonzero(A[u]):
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        comps.append(sorted(comp))
    return comps


def validate_root_reachability(spec: TopologySpec) -> tuple[bool, list[int]]:
    """Check that every follower component touches the leader.

    Returns:
        ``(ok, unreachable)`` where ``unreachable`` lists the 1-based indices
        of followers whose component has no ``b_i > 0``.
    """
    A = _adjacency(spec)
    b = spec.leader_links
    unreachable = []
    for comp in _components(A):
        if not any(b[i] > 0 for i in comp):
            unreachable.extend(i + 1 for i in comp)
    return not unreachable, sorted(unreachable)


def min_eigenvalue(M: np.ndarray, *, sym_tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a real symmetric matrix.

    Backed by LAPACK's symmetric solver (``numpy.linalg.eigvalsh``), which is
    deterministic for a given input and accurate to machine precision relative
    to ``||M||``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if np.max(np.abs(M - M.T), initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    try:
        return float(np.linalg.eigvalsh(M)[0])
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc


def build_matrices(spec: TopologySpec) -> ConnectionMatrices:
    """Assemble ``A``, ``Q``, ``M`` and ``lambda_min(M)`` for a topology.

    Raises:
        TopologyError: on asymmetric/nonpositive weights or when some follower
            cannot be reached from the leader.
    """
    A = _adjacency(spec)
    ok, unreachable = validate_root_reachability(spec)
    if not any(b > 0 for b in spec.leader_links):
        raise TopologyError("at least one leader link b_i must be positive")
    if not ok:
        raise TopologyError(f"followers {unreachable} are not reachable from the leader")
    Q = np.diag(A.sum(axis=1)) - A
    b = np.array(spec.leader_links)
    M = Q + np.diag(b)
    for arr in (A, Q, M, b):
        arr.setflags(write=False)
    return ConnectionMatrices(A, Q, M, min_eigenvalue(M), b)


def export_matrix_csv(matrix: np.ndarray, path: str | Path) -> Path:
    """Write a matrix row-major with a header row of 1-based column indices."""
    path = Path(path)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = ",".join(str(j + 1) for j in range(matrix.shape[1]))
    np.savetxt(path, matrix, delimiter=",", fmt="%.17g", header=header, comments="")
    return path


def reference_topology() -> TopologySpec:
    """Default five-follower topology bundled with the package.

    Unit weights; edges 1-2, 1-4, 1-5, 2-3 with the leader linked to followers
    1 and 3. ``lambda_min(M) = 0.290725...``.
    """
    return TopologySpec(5, ((1, 2, 1.0), (1, 4, 1.0), (1, 5, 1.0), (2, 3, 1.0)), (1.0, 0.0, 1.0, 0.0, 0.0))
