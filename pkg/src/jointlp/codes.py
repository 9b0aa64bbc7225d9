"""Binary LDPC codes as Tanner graphs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "TannerGraph",
    "EvenSubsetFamily",
    "CodeConstructionError",
    "AlistError",
    "AlistHeaderError",
    "AlistDegreeError",
    "AlistIndexError",
    "AlistDuplicateError",
    "DegreeCapExceeded",
    "generate_regular_code",
    "small_random_code",
    "single_parity_check",
    "syndrome_ok",
    "gf2_nullspace",
    "gf2_rank",
    "fixed_weight_codeword",
    "even_subsets",
    "load_alist",
    "save_alist",
    "format_alist",
]


class CodeConstructionError(RuntimeError):
    pass


class AlistError(ValueError):
    pass


class AlistHeaderError(AlistError):
    pass


class AlistDegreeError(AlistError):
    pass


class AlistIndexError(AlistError):
    pass


class AlistDuplicateError(AlistError):
    pass


class DegreeCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite graph of ``n`` variable nodes and ``m`` check nodes.

    ``check_neighbors[j]`` lists the variables of check ``j`` in increasing
    order; nodes are 0-based.
    """

    n: int
    check_neighbors: tuple

    def __post_init__(self):
        rows = tuple(tuple(sorted(int(i) for i in row)) for row in self.check_neighbors)
        for j, row in enumerate(rows):
            if len(set(row)) != len(row):
                raise ValueError(f"check {j} has a repeated variable")
            if row and not (0 <= row[0] and row[-1] < self.n):
                raise ValueError(f"check {j} references a variable outside 0..{self.n - 1}")
        object.__setattr__(self, "check_neighbors", rows)

    @property
    def m(self) -> int:
        return len(self.check_neighbors)

    @cached_property
    def var_neighbors(self) -> tuple:
        cols = [[] for _ in range(self.n)]
        for j, row in enumerate(self.check_neighbors):
            for i in row:
                cols[i].append(j)
        return tuple(tuple(c) for c in cols)

    @cached_property
    def edges(self) -> tuple:
        """All ``(i, j)`` pairs, grouped by check."""
        return tuple((i, j) for j, row in enumerate(self.check_neighbors) for i in row)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_var(self) -> np.ndarray:
        return np.array([i for i, _ in self.edges], dtype=np.intp)

    @cached_property
    def edge_check(self) -> np.ndarray:
        return np.array([j for _, j in self.edges], dtype=np.intp)

    @cached_property
    def check_slices(self) -> tuple:
        """Slice of the edge array belonging to each check."""
        out, start = [], 0
        for row in self.check_neighbors:
            out.append(slice(start, start + len(row)))
            start += len(row)
        return tuple(out)

    @cached_property
    def var_edge_index(self) -> tuple:
        """Edge-array positions touching each variable."""
        idx = [[] for _ in range(self.n)]
        for k, (i, _) in enumerate(self.edges):
            idx[i].append(k)
        return tuple(np.array(v, dtype=np.intp) for v in idx)

    @cached_property
    def padded_checks(self) -> np.ndarray:
        """(m, max_dc) edge positions per check, padded with ``num_edges``."""
        dmax = max((len(r) for r in self.check_neighbors), default=0)
        out = np.full((self.m, dmax), self.num_edges, dtype=np.intp)
        for j, sl in enumerate(self.check_slices):
            out[j, : sl.stop - sl.start] = np.arange(sl.start, sl.stop)
        return out

    @property
    def var_degrees(self) -> np.ndarray:
        return np.array([len(c) for c in self.var_neighbors])

    @property
    def check_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.check_neighbors])

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for j, row in enumerate(self.check_neighbors):
            H[j, list(row)] = 1
        return H

    @classmethod
    def from_dense(cls, H) -> "TannerGraph":
        H = np.asarray(H)
        return cls(H.shape[1], tuple(tuple(np.flatnonzero(r)) for r in H))

    def has_four_cycle(self) -> bool:
        sets = [set(r) for r in self.check_neighbors]
        for a, b in combinations(range(self.m), 2):
            if len(sets[a] & sets[b]) >= 2:
                return True
        return False

    @cached_property
    def rank(self) -> int:
        return gf2_rank(self.to_dense())

    @property
    def dimension(self) -> int:
        return self.n - self.rank

    @property
    def rate(self) -> float:
        return self.dimension / self.n

    @cached_property
    def generator(self) -> np.ndarray:
        """Rows form a basis of the code (k x n, uint8)."""
        return gf2_nullspace(self.to_dense(), self.n)


def single_parity_check(n: int) -> TannerGraph:
    return TannerGraph(n, (tuple(range(n)),))


def generate_regular_code(n: int, dv: int, dc: int, rng: np.random.Generator,
                          max_attempts: int = 200, avoid_four_cycles: bool = True) -> TannerGraph:
    """Random (dv, dc)-regular graph without double edges or 4-cycles.

    ``avoid_four_cycles=False`` only forbids double edges (needed for tiny
    lengths where no 4-cycle-free graph exists).

    Variable sockets are matched to checks one at a time in random order,
    rejecting checks that would create a double edge or a 4-cycle. A stuck
    socket is repaired by swapping with an already placed edge; an attempt
    that cannot be repaired is discarded and restarted.
    """
    if n <= 0 or dv <= 0 or dc <= 0:
        raise ValueError("n, dv, dc must be positive")
    if (n * dv) % dc:
        raise ValueError(f"n*dv = {n * dv} is not divisible by dc = {dc}")
    m = n * dv // dc
    if dc > n or dv > m:
        raise ValueError("degrees exceed the number of nodes")
    for _ in range(max_attempts):
        H = _try_regular(n, m, dv, dc, rng, avoid_four_cycles)
        if H is not None:
            return TannerGraph(n, tuple(tuple(sorted(r)) for r in H))
    raise CodeConstructionError(
        f"no {'4-cycle-free ' if avoid_four_cycles else ''}({dv},{dc}) graph of length {n} "
        f"after {max_attempts} attempts")


def small_random_code(n: int, rng: np.random.Generator, m: int | None = None,
                      col_weight: int = 2, max_attempts: int = 1000) -> TannerGraph:
    """Random sparse code for oracle-sized experiments.

    Every column has ``col_weight`` distinct checks and every check at least
    two variables; short cycles are allowed.
    """
    m = max(1, n // 2) if m is None else m
    if not 1 <= col_weight <= m:
        raise ValueError("need 1 <= col_weight <= m")
    for _ in range(max_attempts):
        H = np.zeros((m, n), dtype=np.uint8)
        for i in range(n):
            H[rng.choice(m, size=col_weight, replace=False), i] = 1
        if H.sum(axis=1).min() >= 2:
            return TannerGraph.from_dense(H)
    raise CodeConstructionError(f"no sparse code with n={n}, m={m} after {max_attempts} attempts")


def _try_regular(n, m, dv, dc, rng, girth6=True):
    rows = [set() for _ in range(m)]
    cols = [set() for _ in range(n)]
    capacity = np.full(m, dc)

    def ok(v, c):
        if c in cols[v]:
            return False
        if not girth6:
            return True
        rc = rows[c]
        for c2 in cols[v]:
            if not rc.isdisjoint(rows[c2]):
                return False
        return True

    order = rng.permutation(np.repeat(np.arange(n), dv))
    for v in order:
        v = int(v)
        open_checks = np.flatnonzero(capacity > 0)
        cand = [int(c) for c in open_checks if ok(v, int(c))]
        if cand:
            c = cand[int(rng.integers(len(cand)))]
            rows[c].add(v)
            cols[v].add(c)
            capacity[c] -= 1
            continue
        # repair: move an existing edge (u, c) to (v, c) and (u, c_open)
        placed = False
        for _ in range(50 * dv):
            c_open = int(open_checks[rng.integers(len(open_checks))])
            c = int(rng.integers(m))
            if c == c_open or not rows[c]:
                continue
            u = int(rng.choice(sorted(rows[c])))
            if u == v:
                continue
            rows[c].discard(u)
            cols[u].discard(c)
            if ok(v, c):
                rows[c].add(v)
                cols[v].add(c)
                if ok(u, c_open):
                    rows[c_open].add(u)
                    cols[u].add(c_open)
                    capacity[c_open] -= 1
                    placed = True
                    break
                rows[c].discard(v)
                cols[v].discard(c)
            rows[c].add(u)
            cols[u].add(c)
        if not placed:
            return None
    return rows


def syndrome_ok(graph: TannerGraph, bits: Sequence[int]) -> bool:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} bits, got shape {bits.shape}")
    return all(int(bits[list(row)].sum()) % 2 == 0 for row in graph.check_neighbors)


def _gf2_rref(H):
    """Row-reduce a GF(2) matrix. Returns (reduced rows, pivot columns)."""
    A = (np.asarray(H, dtype=np.uint8) & 1).copy()
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hits = np.flatnonzero(A[r:, c]) + r
        if hits.size == 0:
            continue
        p = hits[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        mask = A[:, c].astype(bool)
        mask[r] = False
        A[mask] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r], pivots


def gf2_rank(H) -> int:
    return len(_gf2_rref(H)[1])


def gf2_nullspace(H, n: int | None = None) -> np.ndarray:
    """Basis of ``{c : H c = 0 mod 2}`` as rows of a uint8 matrix."""
    H = np.asarray(H, dtype=np.uint8)
    if n is None:
        n = H.shape[1]
    if H.size == 0:
        return np.eye(n, dtype=np.uint8)
    R, pivots = _gf2_rref(H)
    free = [c for c in range(n) if c not in set(pivots)]
    G = np.zeros((len(free), n), dtype=np.uint8)
    for k, f in enumerate(free):
        G[k, f] = 1
        for r, p in enumerate(pivots):
            G[k, p] = R[r, f]
    return G


def fixed_weight_codeword(graph: TannerGraph, target_weight: int, rng: np.random.Generator,
                          tolerance: int = 5, max_attempts: int = 20000) -> np.ndarray:
    """Random codeword whose weight lies within ``tolerance`` of the target."""
    if target_weight - tolerance <= 0:
        return np.zeros(graph.n, dtype=np.uint8)
    G = graph.generator
    k = G.shape[0]
    if k == 0:
        raise CodeConstructionError("code has dimension 0")
    Gi = G.astype(np.int64)
    for attempt in range(1, max_attempts + 1):
        u = rng.integers(0, 2, size=k)
        c = (u @ Gi) % 2
        if abs(int(c.sum()) - target_weight) <= tolerance:
            return c.astype(np.uint8)
    raise CodeConstructionError(
        f"no codeword of weight {target_weight}+-{tolerance} in {max_attempts} attempts")


@dataclass(frozen=True)
class EvenSubsetFamily:
    """Even-size subsets of one check's neighborhood.

    ``masks[k, t]`` says whether the t-th neighbor of the check belongs to
    subset k.
    """

    check: int
    neighbors: tuple
    masks: np.ndarray

    def __len__(self):
        return self.masks.shape[0]

    def subsets(self) -> list:
        return [tuple(v for v, b in zip(self.neighbors, row) if b) for row in self.masks]


def even_subsets(graph: TannerGraph, j: int, degree_cap: int = 12) -> EvenSubsetFamily:
    nbrs = graph.check_neighbors[j]
    d = len(nbrs)
    if d > degree_cap:
        raise DegreeCapExceeded(f"check {j} has degree {d} > cap {degree_cap}")
    codes = np.arange(2 ** d, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(d)) & 1).astype(bool)
    even = bits[bits.sum(axis=1) % 2 == 0]
    return EvenSubsetFamily(j, nbrs, even)


def format_alist(graph: TannerGraph) -> str:
    """MacKay alist text (1-based indices, zero padded)."""
    cols, rows = graph.var_neighbors, graph.check_neighbors
    dv = max((len(c) for c in cols), default=0)
    dc = max((len(r) for r in rows), default=0)
    lines = [f"{graph.n} {graph.m}", f"{dv} {dc}",
             " ".join(str(len(c)) for c in cols),
             " ".join(str(len(r)) for r in rows)]
    for c in cols:
        lines.append(" ".join(str(j + 1) for j in c) + " 0" * (dv - len(c)))
    for r in rows:
        lines.append(" ".join(str(i + 1) for i in r) + " 0" * (dc - len(r)))
    return "\n".join(line.strip() for line in lines) + "\n"


def save_alist(graph: TannerGraph, path) -> None:
    Path(path).write_text(format_alist(graph))


def _parse_ints(tokens, what):
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise AlistHeaderError(f"non-integer token in {what}") from exc


def load_alist(path) -> TannerGraph:
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) < 4 or len(lines[0]) != 2 or len(lines[1]) != 2:
        raise AlistHeaderError("alist header must be 'n m' then 'max_dv max_dc'")
    n, m = _parse_ints(lines[0], "header")
    max_dv, max_dc = _parse_ints(lines[1], "header")
    if n <= 0 or m < 0:
        raise AlistHeaderError("bad dimensions")
    col_deg = _parse_ints(lines[2], "column degrees")
    row_deg = _parse_ints(lines[3], "row degrees")
    if len(col_deg) != n or len(row_deg) != m:
        raise AlistDegreeError("degree list lengths do not match the header")
    if max(col_deg, default=0) > max_dv or max(row_deg, default=0) > max_dc:
        raise AlistDegreeError("degree exceeds the declared maximum")
    if len(lines) < 4 + n + m:
        raise AlistHeaderError("file truncated")
    col_lists = []
    for v in range(n):
        entries = [t for t in _parse_ints(lines[4 + v], "column list") if t != 0]
        if len(entries) != col_deg[v]:
            raise AlistDegreeError(f"column {v + 1} lists {len(entries)} checks, expected {col_deg[v]}")
        if any(not 1 <= t <= m for t in entries):
            raise AlistIndexError(f"column {v + 1} has a check index outside 1..{m}")
        if len(set(entries)) != len(entries):
            raise AlistDuplicateError(f"column {v + 1} repeats a check index")
        col_lists.append(entries)
    rows = []
    for c in range(m):
        entries = [t for t in _parse_ints(lines[4 + n + c], "row list") if t != 0]
        if len(entries) != row_deg[c]:
            raise AlistDegreeError(f"row {c + 1} lists {len(entries)} variables, expected {row_deg[c]}")
        if any(not 1 <= t <= n for t in entries):
            raise AlistIndexError(f"row {c + 1} has a variable index outside 1..{n}")
        if len(set(entries)) != len(entries):
            raise AlistDuplicateError(f"row {c + 1} repeats a variable index")
        rows.append(tuple(t - 1 for t in entries))
    graph = TannerGraph(n, tuple(rows))
    for v, entries in enumerate(col_lists):
        if sorted(t - 1 for t in entries) != sorted(graph.var_neighbors[v]):
            raise AlistDegreeError(f"column {v + 1} disagrees with the row lists")
    return graph
