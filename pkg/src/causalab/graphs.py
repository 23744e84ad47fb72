"""Causal graphs over binary variables and their enumeration spaces.

A graph on ``n`` labeled nodes is stored as a flat tuple of edge states,
one per unordered node pair in canonical order ``(0,1), (0,2), ...,
(n-2,n-1)``.  State ``+1`` orients the pair low->high, ``-1`` high->low,
``0`` means no edge.  Canonical graph order is lexicographic over this
vector with ``-1 < 0 < +1``, which keeps hypothesis-space indices stable
across runs (transition matrices, golden files).

Node display labels are ``x, y, z, w, v`` for indices 0..4; everything
internal is 0-based integer indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    InconsistentTrialError,
    SizeLimitError,
)

NODE_LABELS = "xyzwv"
EDGE_STATES = (-1, 0, 1)  # backward, absent, forward
MAX_ENUM_NODES = 5

FREE = 0
FIXED_ON = 1
FIXED_OFF = -1

_SETTING_CODES = {FREE: ".", FIXED_ON: "+", FIXED_OFF: "-"}
_CODE_SETTINGS = {v: k for k, v in _SETTING_CODES.items()}


def node_pairs(n: int) -> tuple[tuple[int, int], ...]:
    """All unordered node pairs (i, j), i < j, in canonical order."""
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def pair_label(i: int, j: int) -> str:
    return NODE_LABELS[i] + NODE_LABELS[j]


def _children_lists(n: int, edges) -> list[list[int]]:
    children = [[] for _ in range(n)]
    for (i, j), state in zip(node_pairs(n), edges):
        if state == 1:
            children[i].append(j)
        elif state == -1:
            children[j].append(i)
    return children


def is_acyclic(n: int, edges) -> bool:
    """True iff the edge-state assignment induces no directed cycle."""
    children = _children_lists(n, edges)
    indeg = [0] * n
    for kids in children:
        for k in kids:
            indeg[k] += 1
    frontier = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while frontier:
        v = frontier.pop()
        seen += 1
        for k in children[v]:
            indeg[k] -= 1
            if indeg[k] == 0:
                frontier.append(k)
    return seen == n


def topological_order(n: int, edges) -> list[int]:
    """A topological order of the induced DAG (parents before children)."""
    children = _children_lists(n, edges)
    indeg = [0] * n
    for kids in children:
        for k in kids:
            indeg[k] += 1
    order, frontier = [], sorted(v for v in range(n) if indeg[v] == 0)
    while frontier:
        v = frontier.pop(0)
        order.append(v)
        for k in children[v]:
            indeg[k] -= 1
            if indeg[k] == 0:
                frontier.append(k)
    if len(order) != n:
        raise ValueError("graph contains a directed cycle")
    return order


@dataclass(frozen=True)
class CausalGraph:
    """A directed acyclic graph stored as per-pair edge states."""

    n: int
    edges: tuple[int, ...]

    def __post_init__(self):
        expected = self.n * (self.n - 1) // 2
        if len(self.edges) != expected:
            raise ValueError(
                f"need {expected} edge states for n={self.n}, got {len(self.edges)}"
            )
        if any(s not in (-1, 0, 1) for s in self.edges):
            raise ValueError("edge states must be -1, 0 or +1")
        if not is_acyclic(self.n, self.edges):
            raise ValueError("edge states contain a directed cycle")

    @staticmethod
    def empty(n: int) -> "CausalGraph":
        return CausalGraph(n, (0,) * (n * (n - 1) // 2))

    @staticmethod
    def from_text(n: int, text: str) -> "CausalGraph":
        states = parse_graph_text(n, text)
        if any(s is None for s in states):
            raise ValueError("graph text leaves pairs unspecified")
        return CausalGraph(n, tuple(states))

    def edge(self, i: int, j: int) -> int:
        """Edge state for the ordered pair (i, j), i < j."""
        if not i < j < self.n:
            raise ValueError(f"bad pair ({i}, {j}) for n={self.n}")
        return self.edges[node_pairs(self.n).index((i, j))]

    def parents(self, x: int) -> tuple[int, ...]:
        out = []
        for (i, j), state in zip(node_pairs(self.n), self.edges):
            if state == 1 and j == x:
                out.append(i)
            elif state == -1 and i == x:
                out.append(j)
        return tuple(sorted(out))

    def children(self, x: int) -> tuple[int, ...]:
        out = []
        for (i, j), state in zip(node_pairs(self.n), self.edges):
            if state == 1 and i == x:
                out.append(j)
            elif state == -1 and j == x:
                out.append(i)
        return tuple(sorted(out))

    def directed_edges(self) -> tuple[tuple[int, int], ...]:
        """(parent, child) pairs in canonical pair order."""
        out = []
        for (i, j), state in zip(node_pairs(self.n), self.edges):
            if state == 1:
                out.append((i, j))
            elif state == -1:
                out.append((j, i))
        return tuple(out)

    def to_text(self) -> str:
        return ";".join(
            f"{NODE_LABELS[a]}->{NODE_LABELS[b]}" for a, b in self.directed_edges()
        )

    def __str__(self):
        return self.to_text() or "(unconnected)"


def parse_graph_text(n: int, text: str) -> list:
    """Parse ``"x->y;y->z"`` into an edge-state list in canonical pair order.

    ``"a?b"`` marks the pair as unspecified (state ``None``); the empty
    string is the unconnected graph.  Unknown labels or malformed tokens
    raise ValueError.
    """
    pair_index = {p: k for k, p in enumerate(node_pairs(n))}
    states: list = [0] * len(pair_index)
    text = text.strip()
    if not text:
        return states
    for token in text.split(";"):
        token = token.strip()
        if not token:
            continue
        if "->" in token:
            a, b = token.split("->", 1)
            unknown = False
        elif "?" in token:
            a, b = token.split("?", 1)
            unknown = True
        else:
            raise ValueError(f"malformed edge token {token!r}")
        a, b = a.strip(), b.strip()
        try:
            ia, ib = NODE_LABELS.index(a), NODE_LABELS.index(b)
        except ValueError:
            raise ValueError(f"unknown node label in token {token!r}") from None
        if ia >= n or ib >= n or ia == ib:
            raise ValueError(f"bad node pair in token {token!r} for n={n}")
        lo, hi = min(ia, ib), max(ia, ib)
        k = pair_index[(lo, hi)]
        if unknown:
            states[k] = None
        else:
            states[k] = 1 if ia < ib else -1
    return states


def descendants(g: CausalGraph, node: int) -> frozenset:
    """Direct and indirect descendants of ``node``, excluding the node."""
    if node >= g.n:
        raise ValueError(f"node {node} out of range for n={g.n}")
    seen, frontier = set(), [node]
    while frontier:
        v = frontier.pop()
        for k in g.children(v):
            if k not in seen:
                seen.add(k)
                frontier.append(k)
    return frozenset(seen)


def edit_distance(g1: CausalGraph, g2: CausalGraph) -> int:
    """Number of node pairs whose edge state differs (a reversal is 1 edit)."""
    if g1.n != g2.n:
        raise DimensionMismatchError(f"graphs on {g1.n} vs {g2.n} nodes")
    return sum(a != b for a, b in zip(g1.edges, g2.edges))


def count_dags(n: int) -> int:
    """Number of DAGs on n labeled nodes via the alternating recurrence."""
    if n < 0:
        raise ValueError("n must be non-negative")
    counts = [1]
    for m in range(1, n + 1):
        total = 0
        for k in range(1, m + 1):
            total += (-1) ** (k + 1) * comb(m, k) * 2 ** (k * (m - k)) * counts[m - k]
        counts.append(total)
    return counts[n]


@dataclass(frozen=True)
class Intervention:
    """Per-node settings: fixed-on (+1), fixed-off (-1) or free (0)."""

    n: int
    settings: tuple[int, ...]

    def __post_init__(self):
        if len(self.settings) != self.n:
            raise ValueError(f"need {self.n} settings, got {len(self.settings)}")
        if any(s not in (-1, 0, 1) for s in self.settings):
            raise ValueError("settings must be -1, 0 or +1")

    @staticmethod
    def observation(n: int) -> "Intervention":
        return Intervention(n, (FREE,) * n)

    @staticmethod
    def from_text(text: str) -> "Intervention":
        try:
            settings = tuple(_CODE_SETTINGS[ch] for ch in text.strip())
        except KeyError as exc:
            raise ValueError(f"bad intervention code {exc.args[0]!r}") from None
        return Intervention(len(settings), settings)

    def to_text(self) -> str:
        return "".join(_SETTING_CODES[s] for s in self.settings)

    @property
    def free_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.settings) if s == FREE)

    @property
    def fixed_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.settings) if s != FREE)

    def fixed_value(self, node: int) -> int:
        return 1 if self.settings[node] == FIXED_ON else 0

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class Outcome:
    """Full binary activation pattern over the nodes."""

    values: tuple[int, ...]

    def __post_init__(self):
        if any(v not in (0, 1) for v in self.values):
            raise ValueError("outcome values must be 0 or 1")

    @staticmethod
    def from_text(text: str) -> "Outcome":
        if any(ch not in "01" for ch in text.strip()):
            raise ValueError(f"bad outcome string {text!r}")
        return Outcome(tuple(int(ch) for ch in text.strip()))

    def to_text(self) -> str:
        return "".join(str(v) for v in self.values)

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class Trial:
    """One intervention paired with its observed outcome."""

    intervention: Intervention
    outcome: Outcome

    def __post_init__(self):
        c, d = self.intervention, self.outcome
        if len(d.values) != c.n:
            raise InconsistentTrialError(
                f"outcome has {len(d.values)} values for n={c.n}"
            )
        for node in c.fixed_nodes:
            if d.values[node] != c.fixed_value(node):
                raise InconsistentTrialError(
                    f"node {node} fixed to {c.fixed_value(node)} but observed "
                    f"{d.values[node]}"
                )


def enumerate_interventions(n: int) -> tuple[Intervention, ...]:
    """All 3^n interventions; the pure observation comes first."""
    if not 1 <= n <= MAX_ENUM_NODES:
        raise SizeLimitError(f"intervention enumeration supports 1..{MAX_ENUM_NODES} nodes")
    return tuple(
        Intervention(n, settings)
        for settings in itertools.product((FREE, FIXED_ON, FIXED_OFF), repeat=n)
    )


def outcome_space(c: Intervention) -> tuple[Outcome, ...]:
    """All 2^(#free) outcomes consistent with the intervention."""
    free = c.free_nodes
    base = [c.fixed_value(i) if s != FREE else 0 for i, s in enumerate(c.settings)]
    outcomes = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        vals = list(base)
        for node, b in zip(free, bits):
            vals[node] = b
        outcomes.append(Outcome(tuple(vals)))
    return tuple(outcomes)


def classify_intervention(c: Intervention) -> str:
    """Count-based taxonomy label: "observe", "1 on", "1 on 1 off", ..."""
    n_on = sum(1 for s in c.settings if s == FIXED_ON)
    n_off = sum(1 for s in c.settings if s == FIXED_OFF)
    if n_on + n_off == c.n:
        return "all fixed"
    if n_on == 0 and n_off == 0:
        return "observe"
    parts = []
    if n_on:
        parts.append(f"{n_on} on")
    if n_off:
        parts.append(f"{n_off} off")
    return " ".join(parts)


class HypothesisSpace:
    """All DAGs on n labeled nodes in canonical order, plus lookup tables.

    The integer tables are what the numeric kernels consume:

    - ``edge_states``   int8  [G, P]  per-graph edge-state vectors
    - ``parent_masks``  uint8 [G, N]  bitmask of each node's parents
    - ``desc_masks``    uint8 [G, N]  bitmask of each node's descendants
    - ``neighbors``     int32 [G, P, 3]  graph index reached by setting pair
      p to state ``EDGE_STATES[s]`` (-1 when that variant is cyclic)

    Arrays are read-only; one space per n is built and shared.
    """

    def __init__(self, n: int):
        if not 1 <= n <= MAX_ENUM_NODES:
            raise SizeLimitError(f"full enumeration supports 1..{MAX_ENUM_NODES} nodes")
        self.n = n
        self.pairs = node_pairs(n)
        vectors = [
            edges
            for edges in itertools.product(EDGE_STATES, repeat=len(self.pairs))
            if is_acyclic(n, edges)
        ]
        self.graphs: tuple[CausalGraph, ...] = tuple(
            CausalGraph(n, edges) for edges in vectors
        )
        self.index: dict[CausalGraph, int] = {g: k for k, g in enumerate(self.graphs)}
        G, P = len(self.graphs), len(self.pairs)

        self.edge_states = np.array(vectors, dtype=np.int8).reshape(G, P)
        self.parent_masks = np.zeros((G, n), dtype=np.uint8)
        self.desc_masks = np.zeros((G, n), dtype=np.uint8)
        for k, g in enumerate(self.graphs):
            for x in range(n):
                for p in g.parents(x):
                    self.parent_masks[k, x] |= 1 << p
                for d in descendants(g, x):
                    self.desc_masks[k, x] |= 1 << d

        vec_index = {edges: k for k, edges in enumerate(vectors)}
        self.neighbors = np.full((G, P, 3), -1, dtype=np.int32)
        for k, edges in enumerate(vectors):
            for p in range(P):
                for s, state in enumerate(EDGE_STATES):
                    variant = edges[:p] + (state,) + edges[p + 1 :]
                    self.neighbors[k, p, s] = vec_index.get(variant, -1)

        for arr in (self.edge_states, self.parent_masks, self.desc_masks, self.neighbors):
            arr.flags.writeable = False

    def __len__(self):
        return len(self.graphs)

    def index_of(self, g: CausalGraph) -> int:
        try:
            return self.index[g]
        except KeyError:
            raise DimensionMismatchError(
                f"graph on {g.n} nodes not in space for n={self.n}"
            ) from None

    def __repr__(self):
        return f"HypothesisSpace(n={self.n}, graphs={len(self.graphs)})"


@lru_cache(maxsize=None)
def hypothesis_space(n: int) -> HypothesisSpace:
    """Shared read-only space for n nodes (built once per process)."""
    return HypothesisSpace(n)


def enumerate_dags(n: int) -> HypothesisSpace:
    """All and only the DAGs on n labeled nodes, canonically ordered."""
    return hypothesis_space(n)
