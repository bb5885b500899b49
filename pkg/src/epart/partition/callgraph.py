"""Method-level call graph and reachability closure for one image side.

Nodes are (kind, class, method) where kind distinguishes a concrete method from
a proxy stub living in this image.  Dispatch is exact: the language has no
inheritance, so each call site resolves to one node.  Proxy stubs have no
outgoing edges; their work happens in the opposite image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..dsl.ast import Annotation, Program
from ..dsl.validate import analyze_calls

CONCRETE = "concrete"
PROXY = "proxy"

Node = tuple[str, str, str]  # (kind, class_name, method_name)


@dataclass
class CallGraph:
    side: Annotation  # TRUSTED or UNTRUSTED: which image this graph describes
    nodes: set[Node] = field(default_factory=set)
    edges: dict[Node, list[Node]] = field(default_factory=dict)
    entry_points: list[Node] = field(default_factory=list)
    reachable: set[Node] = field(default_factory=set)


def _node_for_target(target_class_ann: Annotation, side: Annotation,
                     class_name: str, method_name: str) -> Node:
    if target_class_ann == Annotation.NEUTRAL or target_class_ann == side:
        return (CONCRETE, class_name, method_name)
    return (PROXY, class_name, method_name)


def build_call_graph(program: Program, side: Annotation,
                     entry_points: list[Node]) -> CallGraph:
    """Graph of the image for `side` with reachability from entry_points.

    Raises UnresolvedCall (via analyze_calls) if any body names a missing
    class or method.
    """
    annotations = {c.name: c.annotation for c in program.classes}
    calls = analyze_calls(program)
    g = CallGraph(side)

    for cls in program.classes:
        local = cls.annotation == side or cls.annotation == Annotation.NEUTRAL
        for m in cls.methods:
            if local:
                node = (CONCRETE, cls.name, m.name)
                g.nodes.add(node)
                outs = []
                for tgt_class, tgt_method in calls[(cls.name, m.name)]:
                    tgt = _node_for_target(annotations[tgt_class], side,
                                           tgt_class, tgt_method)
                    if tgt not in outs:
                        outs.append(tgt)
                g.edges[node] = outs
            else:
                stub = (PROXY, cls.name, m.name)
                g.nodes.add(stub)
                g.edges[stub] = []

    g.entry_points = list(entry_points)
    g.reachable = reachable_set(g)
    return g


def reachable_set(g: CallGraph) -> set[Node]:
    """Least fixed point of the successor relation over the entry points."""
    seen: set[Node] = set()
    work = [n for n in g.entry_points if n in g.nodes]
    while work:
        node = work.pop()
        if node in seen:
            continue
        seen.add(node)
        for succ in g.edges.get(node, []):
            if succ in g.nodes and succ not in seen:
                work.append(succ)
    return seen
