"""Partitioner: proxies, relays, call-graph pruning, image emission."""

from .callgraph import CONCRETE, PROXY, CallGraph, Node, build_call_graph, reachable_set
from .emit import (
    INTERFACE_FILE, TRUSTED_IMG, UNTRUSTED_IMG, check_interface, emit, load_plan,
    parse_interface, render_interface,
)
from .model import (
    MarshalKind, ProxyClassDef, RelayMethodDef, StubMethod, classify,
    generate_proxies, relay_direction, synthesize_relays,
)
from .plan import (
    ImageSpec, InterfaceDescriptor, InterfaceRecord, PartitionPlan, compute_images,
)

__all__ = [
    "CONCRETE", "PROXY", "CallGraph", "Node", "build_call_graph", "reachable_set",
    "INTERFACE_FILE", "TRUSTED_IMG", "UNTRUSTED_IMG", "check_interface", "emit",
    "load_plan", "parse_interface", "render_interface",
    "MarshalKind", "ProxyClassDef", "RelayMethodDef", "StubMethod", "classify",
    "generate_proxies", "relay_direction", "synthesize_relays",
    "ImageSpec", "InterfaceDescriptor", "InterfaceRecord", "PartitionPlan",
    "compute_images",
]
