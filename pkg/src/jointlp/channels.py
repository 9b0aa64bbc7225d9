"""Finite-state channels, their unrolled trellises, and AWGN branch metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "ChannelSpec",
    "TrellisSequence",
    "BranchMetrics",
    "dicode_spec",
    "pr2_spec",
    "channel_by_name",
    "build_trellis",
    "branch_metrics",
    "channel_simulate",
    "sigma_from_snr_db",
]


def _symbol(bit: int) -> int:
    # antipodal map 0 -> -1, 1 -> +1
    return 2 * bit - 1


@dataclass(frozen=True)
class ChannelSpec:
    """A binary-input finite-state channel.

    Each edge is a tuple ``(initial_state, final_state, input_bit, output)``.
    Edges are stored in canonical order, sorted by ``(initial_state, input_bit)``.
    """

    name: str
    num_states: int
    edges: tuple
    p0: tuple

    def __post_init__(self):
        if self.num_states < 1:
            raise ValueError("num_states must be positive")
        edges = tuple(
            (int(s), int(t), int(x), float(a)) for s, t, x, a in self.edges
        )
        for s, t, x, _ in edges:
            if not (0 <= s < self.num_states and 0 <= t < self.num_states):
                raise ValueError(f"edge state out of range: {(s, t)}")
            if x not in (0, 1):
                raise ValueError(f"edge input bit must be 0 or 1, got {x}")
        if len(edges) > 2 * self.num_states ** 2:
            raise ValueError("more than 2*|S|^2 edges per section")
        present = {(s, x) for s, _, x, _ in edges}
        for s in range(self.num_states):
            for x in (0, 1):
                if (s, x) not in present:
                    raise ValueError(f"state {s} has no outgoing edge for bit {x}")
        p0 = tuple(float(v) for v in self.p0)
        if len(p0) != self.num_states:
            raise ValueError("p0 length must equal num_states")
        if min(p0) < 0 or abs(sum(p0) - 1.0) > 1e-12:
            raise ValueError("p0 must be a probability vector")
        order = sorted(range(len(edges)), key=lambda k: (edges[k][0], edges[k][2]))
        object.__setattr__(self, "edges", tuple(edges[k] for k in order))
        object.__setattr__(self, "p0", p0)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def src(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.intp)

    @cached_property
    def dst(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.intp)

    @cached_property
    def bit(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=np.int8)

    @cached_property
    def output(self) -> np.ndarray:
        return np.array([e[3] for e in self.edges], dtype=float)

    @property
    def is_deterministic(self) -> bool:
        """True when every (state, bit) pair has exactly one outgoing edge."""
        pairs = [(s, x) for s, _, x, _ in self.edges]
        return len(pairs) == len(set(pairs))

    def next_edge(self, state: int, bit: int) -> int:
        """Index of the unique edge leaving ``state`` on input ``bit``."""
        for k, (s, _, x, _) in enumerate(self.edges):
            if s == state and x == bit:
                return k
        raise KeyError((state, bit))

    def output_power(self) -> float:
        """Mean squared noiseless output under i.i.d. equiprobable input bits.

        Uses the stationary state distribution of the input-driven chain.
        """
        S = self.num_states
        P = np.zeros((S, S))
        counts = np.zeros((S, 2))
        for s, _, x, _ in self.edges:
            counts[s, x] += 1
        for s, t, x, _ in self.edges:
            P[s, t] += 0.5 / counts[s, x]
        w, v = np.linalg.eig(P.T)
        pi = np.real(v[:, np.argmin(np.abs(w - 1.0))])
        pi = pi / pi.sum()
        power = 0.0
        for s, _, x, a in self.edges:
            power += pi[s] * 0.5 / counts[s, x] * a * a
        return float(power)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_states": self.num_states,
            "edges": [list(e) for e in self.edges],
            "p0": list(self.p0),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ChannelSpec":
        return cls(
            name=doc["name"],
            num_states=int(doc["num_states"]),
            edges=tuple(tuple(e) for e in doc["edges"]),
            p0=tuple(doc["p0"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ChannelSpec":
        return cls.from_dict(json.loads(text))


def _point_mass(num_states: int, state: int) -> tuple:
    p0 = [0.0] * num_states
    p0[state] = 1.0
    return tuple(p0)


def _uniform(num_states: int) -> tuple:
    return tuple([1.0 / num_states] * num_states)


def _resolve_p0(num_states, start_state):
    if start_state is None:
        return _uniform(num_states)
    return _point_mass(num_states, start_state)


def dicode_spec(precoded: bool = False, start_state: int | None = 0) -> ChannelSpec:
    """Dicode channel ``1 - D`` with optional ``1/(1 xor D)`` precoding.

    State 0 means the previous channel symbol was -1. ``start_state=None``
    gives a uniform initial distribution.
    """
    edges = []
    for s in (0, 1):
        for x in (0, 1):
            # precoder state is the previous precoded bit v_{i-1} = s
            v = (x ^ s) if precoded else x
            a = _symbol(v) - _symbol(s)
            edges.append((s, v, x, float(a)))
    name = "pdic" if precoded else "dic"
    return ChannelSpec(name, 2, tuple(edges), _resolve_p0(2, start_state))


def pr2_spec(start_state: int | None = 0) -> ChannelSpec:
    """Class-II partial response ``1 + 2D + D^2``.

    The state index is ``2*b_{i-1} + b_{i-2}``.
    """
    edges = []
    for s in range(4):
        b1, b2 = s >> 1, s & 1
        for x in (0, 1):
            a = _symbol(x) + 2 * _symbol(b1) + _symbol(b2)
            edges.append((s, 2 * x + b1, x, float(a)))
    return ChannelSpec("pr2", 4, tuple(edges), _resolve_p0(4, start_state))


def channel_by_name(name: str, start_state: int | None = 0) -> ChannelSpec:
    if name == "dic":
        return dicode_spec(False, start_state)
    if name == "pdic":
        return dicode_spec(True, start_state)
    if name == "pr2":
        return pr2_spec(start_state)
    raise ValueError(f"unknown channel {name!r}; expected dic, pdic or pr2")


@dataclass(frozen=True)
class TrellisSequence:
    """A channel unrolled over ``length`` identical sections."""

    spec: ChannelSpec
    length: int

    @property
    def num_states(self) -> int:
        return self.spec.num_states

    @property
    def num_edges(self) -> int:
        return self.spec.num_edges

    @property
    def num_vertices(self) -> int:
        return (self.length + 1) * self.spec.num_states

    def section(self, i: int) -> list:
        """Edges of section ``i`` (1-based) as ``(t, s, s', x, a)`` tuples."""
        if not 1 <= i <= self.length:
            raise IndexError(i)
        return [(i,) + e for e in self.spec.edges]

    @property
    def src(self):
        return self.spec.src

    @property
    def dst(self):
        return self.spec.dst

    @property
    def bit(self):
        return self.spec.bit

    @property
    def output(self):
        return self.spec.output


def build_trellis(spec: ChannelSpec, n: int) -> TrellisSequence:
    if n < 1:
        raise ValueError("trellis length must be at least 1")
    return TrellisSequence(spec, int(n))


@dataclass(frozen=True)
class BranchMetrics:
    """Edge costs ``b[i, e]`` for a length-N trellis.

    ``values`` holds finite costs; entries where ``excluded`` is set are
    meaningless and stand for +inf.
    """

    values: np.ndarray
    excluded: np.ndarray
    sigma: float

    @property
    def shape(self):
        return self.values.shape

    def as_float(self) -> np.ndarray:
        """Costs with +inf at excluded edges."""
        return np.where(self.excluded, np.inf, self.values)

    @classmethod
    def from_array(cls, b, sigma: float = float("nan")) -> "BranchMetrics":
        b = np.asarray(b, dtype=float)
        excluded = np.isposinf(b)
        if np.isnan(b).any() or np.isneginf(b).any():
            raise ValueError("branch metrics must be finite or +inf")
        return cls(np.where(excluded, 0.0, b), excluded, sigma)


def branch_metrics(trellis: TrellisSequence, y: Sequence[float], sigma: float) -> BranchMetrics:
    """Squared-error AWGN metrics, with ``-ln P0`` folded into the first section."""
    y = np.asarray(y, dtype=float)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if y.ndim != 1 or y.shape[0] != trellis.length:
        raise ValueError(f"expected {trellis.length} samples, got shape {y.shape}")
    a = trellis.output
    values = (y[:, None] - a[None, :]) ** 2 / (2.0 * sigma * sigma)
    excluded = np.zeros(values.shape, dtype=bool)
    p0 = np.asarray(trellis.spec.p0)[trellis.src]
    excluded[0] = p0 == 0.0
    with np.errstate(divide="ignore"):
        values[0] = np.where(excluded[0], 0.0, values[0] - np.log(np.where(p0 > 0, p0, 1.0)))
    return BranchMetrics(values, excluded, float(sigma))


def channel_simulate(spec: ChannelSpec, bits, sigma: float, rng: np.random.Generator):
    """Pass ``bits`` through the channel and add white Gaussian noise.

    Returns ``(y, clean)``.
    """
    bits = np.asarray(bits)
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    p0 = np.asarray(spec.p0)
    support = np.flatnonzero(p0)
    state = int(support[0]) if len(support) == 1 else int(rng.choice(spec.num_states, p=p0))
    clean = np.empty(len(bits))
    table = {}
    for k, (s, _, x, _) in enumerate(spec.edges):
        table.setdefault((s, x), []).append(k)
    for i, x in enumerate(bits):
        choices = table[(state, int(x))]
        k = choices[0] if len(choices) == 1 else choices[int(rng.integers(len(choices)))]
        clean[i] = spec.edges[k][3]
        state = spec.edges[k][1]
    noise = rng.normal(0.0, sigma, size=len(bits)) if sigma > 0 else np.zeros(len(bits))
    return clean + noise, clean


def sigma_from_snr_db(spec: ChannelSpec, snr_db: float) -> float:
    """Noise std for SNR defined as channel output power over sigma^2."""
    return float(np.sqrt(spec.output_power() / 10.0 ** (snr_db / 10.0)))
