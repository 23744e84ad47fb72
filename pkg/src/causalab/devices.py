"""Canonical experiment devices and conditions.

Exact on-screen wirings are label-level choices: every reproduced
statistic is driven by the structural class (single / fork / chain /
collider / fully-connected / unconnected), so the wirings below pick the
canonical representative of each class.  Device ids are opaque strings
scoped to an experiment preset (the two designs reuse numbers 6-7 for
different structures).
"""

from __future__ import annotations

from dataclasses import dataclass

from .graphs import CausalGraph

DEVICE_LABELS = ("single", "fork", "chain", "collider", "fully-connected", "unconnected")


@dataclass(frozen=True)
class Device:
    """One causal system to be learned."""

    id: str
    n: int
    graph: CausalGraph
    label: str

    def __post_init__(self):
        if self.label not in DEVICE_LABELS:
            raise ValueError(f"unknown device label {self.label!r}")
        if self.graph.n != self.n:
            raise ValueError("device graph has wrong node count")
        if not _label_matches(self.label, self.graph):
            raise ValueError(f"device {self.id}: structure is not a {self.label}")


def _label_matches(label: str, g: CausalGraph) -> bool:
    edges = g.directed_edges()
    n = g.n
    if label == "unconnected":
        return len(edges) == 0
    if label == "single":
        return len(edges) == 1
    if label == "fully-connected":
        return len(edges) == n * (n - 1) // 2
    out_deg = [len(g.children(x)) for x in range(n)]
    in_deg = [len(g.parents(x)) for x in range(n)]
    if label == "fork":
        # one root feeding every other node directly
        return len(edges) == n - 1 and max(out_deg) == n - 1
    if label == "chain":
        # simple directed path covering all nodes
        return len(edges) == n - 1 and max(out_deg) <= 1 and max(in_deg) <= 1
    if label == "collider":
        # every other node feeding one sink directly
        return len(edges) == n - 1 and max(in_deg) == n - 1
    return False


@dataclass(frozen=True)
class Condition:
    """Noise condition plus elicitation mode."""

    w_s: float
    w_b: float
    w_known: bool = True
    reporting: str = "remain"  # or "disappear"

    def __post_init__(self):
        if not (0.0 <= self.w_s <= 1.0 and 0.0 <= self.w_b <= 1.0):
            raise ValueError("w_s and w_b must lie in [0, 1]")
        if self.reporting not in ("remain", "disappear"):
            raise ValueError("reporting must be 'remain' or 'disappear'")


def make_device(device_id: str, n: int, text: str, label: str) -> Device:
    return Device(id=device_id, n=n, graph=CausalGraph.from_text(n, text), label=label)


def three_var_devices(prefix: str = "d") -> tuple[Device, ...]:
    """Devices 1-5: the five three-variable structures."""
    return (
        make_device(f"{prefix}1", 3, "x->y", "single"),
        make_device(f"{prefix}2", 3, "x->y;x->z", "fork"),
        make_device(f"{prefix}3", 3, "x->y;y->z", "chain"),
        make_device(f"{prefix}4", 3, "x->z;y->z", "collider"),
        make_device(f"{prefix}5", 3, "x->y;x->z;y->z", "fully-connected"),
    )


def four_var_devices(prefix: str = "d", start: int = 6) -> tuple[Device, ...]:
    """Four-variable analogs: single, fork, chain, collider, fully-connected."""
    texts = (
        ("x->y", "single"),
        ("x->y;x->z;x->w", "fork"),
        ("x->y;y->z;z->w", "chain"),
        ("x->w;y->w;z->w", "collider"),
        ("x->y;x->z;x->w;y->z;y->w;z->w", "fully-connected"),
    )
    return tuple(
        make_device(f"{prefix}{start + k}", 4, text, label)
        for k, (text, label) in enumerate(texts)
    )


def unconnected_device(device_id: str = "d6", n: int = 3) -> Device:
    return make_device(device_id, n, "", "unconnected")
