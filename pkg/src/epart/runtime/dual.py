"""Two-isolate execution of a partition plan.

Each side runs its own interpreter over its own heap.  Every boundary
crossing (constructor, instance method, host file shim, mirror removal)
is a transition: the caller pays the ecall/ocall cost, arguments travel
as canonical wire bytes, and serialization is charged to whichever side
encoded the bytes.  Transition framing (context and hash words) rides
for free; unit responses carry no payload at all.

Object identity across the boundary is a 64-bit hash minted by an
object's home isolate at first exposure.  The home side keeps the hash
to mirror pairing in its registry (a strong GC root); the other side
tracks its proxies weakly so a collection can report unreferenced
hashes back, letting the home side drop the mirror.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

from ..dsl import ast
from ..errors import (
    DslRuntimeError, InterfaceMismatch, MarshalError, StaleMirror,
    TransitionOverflow,
)
from ..partition.model import MarshalKind
from ..partition.plan import PartitionPlan
from . import wire
from .costmodel import CostModel
from .heap import (
    TRUSTED, UNTRUSTED, UNSET, Frame, GcStats, HeapObject, InstanceObj,
    Isolate, ListObj, MetricCounters, ProxyObj, other_side,
)
from .interp import Interpreter

MAX_TRANSITION_DEPTH = 256
DEFAULT_GC_THRESHOLD = 64 * 1024
LIVE_GC_INTERVAL = 1.0

_SIDE_NAME = {ast.Annotation.TRUSTED: TRUSTED, ast.Annotation.UNTRUSTED: UNTRUSTED}


@dataclass
class TraceEvent:
    seq: int
    direction: str   # ecall | ocall
    kind: str        # ctor | invoke | shim | remove
    qualname: str
    hash_value: int
    nbytes: int
    cycles: int

    def line(self) -> str:
        return (f"{self.seq} {self.direction.upper()} {self.kind} "
                f"{self.qualname} hash=0x{self.hash_value:016x} "
                f"bytes={self.nbytes} cycles={self.cycles}")


@dataclass
class ExecutionResult:
    transcript: list[str] = field(default_factory=list)
    vfs: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, MetricCounters] = field(default_factory=dict)
    trace: list[TraceEvent] = field(default_factory=list)
    shim_ocalls: int = 0
    remove_calls: int = 0
    cycles_by_source: dict[str, dict[str, int]] = field(default_factory=dict)

    def total(self, name: str) -> int:
        return sum(getattr(m, name) for m in self.metrics.values())

    @property
    def total_cycles(self) -> int:
        return self.total("simulated_cycles")

    def metrics_text(self) -> str:
        lines: list[str] = []
        for side in sorted(self.metrics):
            lines.append(f"[{side}]")
            lines.extend(self.metrics[side].as_lines())
            lines.append("")
        lines.append("[run]")
        lines.append(f"shim_ocalls = {self.shim_ocalls}")
        lines.append(f"remove_calls = {self.remove_calls}")
        lines.append(f"total_simulated_cycles = {self.total_cycles}")
        return "\n".join(lines) + "\n"


class DualRuntime:
    """Loads both images of a plan and executes them against each other."""

    def __init__(self, plan: PartitionPlan, model: CostModel | None = None,
                 gc_mode: str = "deterministic", gc_scan_every: int = 1,
                 gc_threshold: int = DEFAULT_GC_THRESHOLD):
        if gc_mode not in ("deterministic", "live"):
            raise ValueError(f"unknown gc mode {gc_mode!r}")
        if gc_scan_every < 1:
            raise ValueError("gc_scan_every must be at least 1")
        from .interp import ensure_recursion_headroom
        ensure_recursion_headroom()
        self.plan = plan
        self.model = model if model is not None else CostModel()
        self.gc_mode = gc_mode
        self.gc_scan_every = gc_scan_every
        self.gc_threshold = gc_threshold

        self.isolates = {side: Isolate(side, self.model)
                         for side in (TRUSTED, UNTRUSTED)}
        self.classes: dict[str, dict[str, ast.ClassDecl]] = {}
        self.relays: dict[str, dict[str, object]] = {}
        self.interps: dict[str, Interpreter] = {}
        for annotation, side in _SIDE_NAME.items():
            image = plan.image(annotation)
            self.classes[side] = {c.name: c for c in image.classes}
            self.relays[side] = {r.relay_id: r for r in image.relays}
            self.interps[side] = Interpreter(
                self.isolates[side], self.classes[side],
                {p.class_name for p in image.proxies}, self)
        self.class_names = {i: n for n, i in plan.class_ids.items()}

        self.transcript: list[str] = []
        self.vfs: dict[str, str] = {}
        self.trace: list[TraceEvent] = []
        self.seq = 0
        self.depth = 0
        self.shim_ocalls = 0
        self.remove_calls = 0

        self._lock = threading.RLock()
        self._live_stop: threading.Event | None = None
        self._live_threads: list[threading.Thread] = []

        # Values handed out through the Python API are rooted here so a
        # collection cannot reclaim what the host still holds.
        self.host_frames: dict[str, Frame] = {}
        self._pin_counter = 0
        for side, iso in self.isolates.items():
            hf = Frame("__host__")
            iso.frames.append(hf)
            self.host_frames[side] = hf

    # -- program entry -------------------------------------------------------

    def find_main(self) -> tuple[ast.ClassDecl, ast.MethodDecl]:
        for cls in self.plan.untrusted_image.classes:
            for m in cls.methods:
                if m.is_static and m.name == "main":
                    return cls, m
        raise InterfaceMismatch("untrusted image has no main entry point")

    def run_main(self, argv: list[str] | None = None) -> ExecutionResult:
        cls, m = self.find_main()
        iso = self.isolates[UNTRUSTED]
        args: list = []
        if m.params:
            lst = ListObj([str(a) for a in (argv or [])])
            iso.alloc(lst, charged=False)
            args = [lst]
        self._start_live_gc()
        try:
            self.interps[UNTRUSTED].call_method(cls, m, None, args)
        finally:
            self._stop_live_gc()
        return self.result()

    def result(self) -> ExecutionResult:
        return ExecutionResult(
            transcript=list(self.transcript),
            vfs=dict(self.vfs),
            metrics={side: replace(iso.metrics)
                     for side, iso in self.isolates.items()},
            trace=list(self.trace),
            shim_ocalls=self.shim_ocalls,
            remove_calls=self.remove_calls,
            cycles_by_source={side: dict(iso.cycles_by_source)
                              for side, iso in self.isolates.items()},
        )

    # -- python-level api (used by benchmarks and tests) ----------------------

    def construct(self, side: str, class_name: str, args: list, pin: bool = True):
        """Build an instance as code on `side` would: local or via proxy."""
        with self._lock:
            if class_name in self.classes[side]:
                obj = self.interps[side].instantiate(
                    self.classes[side][class_name], list(args))
            else:
                obj = self.remote_new(self.isolates[side], class_name, list(args))
            if pin:
                self.pin(side, obj)
            return obj

    def call(self, side: str, receiver, method: str, args: list, pin: bool = True):
        """Invoke a method as code on `side` would."""
        with self._lock:
            if isinstance(receiver, ProxyObj):
                result = self.remote_invoke(self.isolates[side], receiver,
                                            method, list(args))
            elif isinstance(receiver, InstanceObj):
                decl = receiver.decl
                result = self.interps[side].call_method(
                    decl, decl.method(method), receiver, list(args))
            else:
                raise TypeError(f"cannot call methods on {receiver!r}")
            if pin and isinstance(result, HeapObject):
                self.pin(side, result)
            return result

    def make_list(self, side: str, items: list) -> ListObj:
        lst = ListObj(list(items))
        self.isolates[side].alloc(lst, charged=False)
        self.pin(side, lst)
        return lst

    def pin(self, side: str, value) -> str:
        self._pin_counter += 1
        key = f"pin{self._pin_counter}"
        self.host_frames[side].env[key] = value
        return key

    def clear_pins(self, side: str) -> None:
        self.host_frames[side].env.clear()

    def force_gc(self, side: str, scan: bool = True) -> GcStats:
        with self._lock:
            return self._collect(self.isolates[side], force_scan=scan)

    def total_cycles(self) -> int:
        return sum(iso.metrics.simulated_cycles for iso in self.isolates.values())

    def registry_hashes(self, side: str) -> set[int]:
        return set(self.isolates[side].registry)

    def live_proxy_hashes(self, side: str) -> set[int]:
        iso = self.isolates[side]
        return {h for slot, h in iso.proxy_weak_list if slot.get() is not None}

    # -- marshaling ----------------------------------------------------------

    def lower_value(self, iso: Isolate, value, _seen: set[int] | None = None):
        """Runtime value -> wire value, minting hashes for home objects."""
        if value is None:
            return wire.UNIT
        if isinstance(value, bool):
            return ("bool", value)
        if isinstance(value, int):
            return ("int", value)
        if isinstance(value, str):
            return ("str", value)
        if isinstance(value, ProxyObj):
            return ("href", value.hash_value,
                    self.plan.class_ids[value.class_name])
        if isinstance(value, ListObj):
            seen = _seen if _seen is not None else set()
            if id(value) in seen:
                raise MarshalError("cyclic value cannot cross the boundary")
            seen.add(id(value))
            items = [("str", v) if type(v) is str
                     else self.lower_value(iso, v, seen)
                     for v in value.items]
            seen.discard(id(value))
            return ("list", items)
        if isinstance(value, InstanceObj):
            decl = value.decl
            if decl.annotation == ast.Annotation.NEUTRAL:
                seen = _seen if _seen is not None else set()
                if id(value) in seen:
                    raise MarshalError("cyclic value cannot cross the boundary")
                seen.add(id(value))
                fields = []
                for f in decl.fields:
                    v = value.values[f.name]
                    if v is UNSET:
                        raise MarshalError(
                            f"unset field {decl.name}.{f.name} cannot cross "
                            "the boundary")
                    fields.append(self.lower_value(iso, v, seen))
                seen.discard(id(value))
                return ("neutral", self.plan.class_ids[decl.name], fields)
            h = iso.pair_hash.get(value)
            if h is None:
                h = iso.mint_hash()
                iso.register_mirror(h, value)
            return ("href", h, self.plan.class_ids[decl.name])
        raise MarshalError(f"cannot marshal {value!r}")

    def materialize(self, iso: Isolate, wv):
        """Wire value -> runtime value on `iso`; allocations are uncharged."""
        kind = wv[0]
        if kind == "unit":
            return None
        if kind in ("int", "bool", "str"):
            return wv[1]
        if kind == "list":
            lst = ListObj([item[1] if item[0] == "str"
                           else self.materialize(iso, item)
                           for item in wv[1]])
            iso.alloc(lst, charged=False)
            return lst
        if kind == "neutral":
            _, class_id, fields = wv
            decl = self._decl_for_id(iso, class_id)
            if len(fields) != len(decl.fields):
                raise MarshalError(
                    f"{decl.name} payload has {len(fields)} fields, "
                    f"expected {len(decl.fields)}")
            obj = InstanceObj(decl)
            iso.alloc(obj, charged=False)
            for f, fwv in zip(decl.fields, fields):
                obj.values[f.name] = self.materialize(iso, fwv)
            return obj
        if kind == "href":
            _, h, class_id = wv
            return self._resolve_href(iso, h, class_id)
        raise MarshalError(f"unknown wire value kind {kind!r}")

    def _decl_for_id(self, iso: Isolate, class_id: int) -> ast.ClassDecl:
        name = self.class_names.get(class_id)
        if name is None:
            raise MarshalError(f"unknown class id {class_id}")
        decl = self.classes[iso.side].get(name)
        if decl is None:
            raise MarshalError(f"class {name} is not present in the "
                               f"{iso.side} image")
        return decl

    def _resolve_href(self, iso: Isolate, h: int, class_id: int):
        """A hash arriving at `iso`: mirror lookup at home, proxy elsewhere."""
        home = TRUSTED if (h >> 63) & 1 else UNTRUSTED
        if home == iso.side:
            obj = iso.registry.get(h)
            if obj is None:
                raise StaleMirror(h)
            return obj
        slot = iso.proxy_table.get(h)
        if slot is not None:
            live = slot.get()
            if live is not None:
                return live
        name = self.class_names.get(class_id)
        if name is None:
            raise MarshalError(f"unknown class id {class_id}")
        proxy = ProxyObj(name, h)
        iso.alloc(proxy, charged=False)
        iso.adopt_proxy(proxy)
        return proxy

    # -- transitions ----------------------------------------------------------

    def _transition(self, caller: Isolate, direction: str, kind: str,
                    qualname: str, hash_value: int, request: bytes, handler):
        """Cross to the other isolate; returns (hash_out, response bytes)."""
        if self.depth >= MAX_TRANSITION_DEPTH:
            raise TransitionOverflow(
                f"transition depth exceeded {MAX_TRANSITION_DEPTH} "
                f"entering {qualname}")
        target = self.isolates[other_side(caller.side)]
        cost = self.model.ecall_cost if direction == "ecall" \
            else self.model.ocall_cost
        if direction == "ecall":
            caller.metrics.ecalls += 1
        else:
            caller.metrics.ocalls += 1
        caller.charge("transition", cost)
        if request:
            caller.charge_serialize(len(request))
        self.seq += 1
        event = TraceEvent(self.seq, direction, kind, qualname, hash_value,
                           len(request), cost)
        self.trace.append(event)
        self.depth += 1
        try:
            try:
                hash_out, response = handler(target, request)
            except DslRuntimeError as e:
                e.trace.append(f"-- {direction} boundary {qualname} --")
                raise
        finally:
            self.depth -= 1
        if response:
            target.charge_serialize(len(response))
        event.nbytes += len(response)
        if hash_out is not None:
            event.hash_value = hash_out
        return hash_out, response

    def _relay(self, target_side: str, relay_id: str):
        relay = self.relays[target_side].get(relay_id)
        if relay is None:
            raise InterfaceMismatch(
                f"no relay {relay_id} in the {target_side} image")
        return relay

    def remote_new(self, iso: Isolate, class_name: str, args: list) -> ProxyObj:
        """`new` on a proxy class: run the constructor relay, bind the hash."""
        target_side = other_side(iso.side)
        relay = self._relay(target_side, f"{class_name}.{class_name}")
        request = b"".join(wire.encode(self.lower_value(iso, a)) for a in args)

        def handler(target: Isolate, data: bytes):
            values = wire.decode_sequence(data, len(relay.param_kinds))
            margs = [self.materialize(target, v) for v in values]
            decl = self.classes[target.side][class_name]
            obj = self.interps[target.side].instantiate(decl, margs)
            h = target.mint_hash()
            target.register_mirror(h, obj)
            return h, b""

        hash_out, _ = self._transition(iso, relay.direction, "ctor",
                                       relay.relay_id, 0, request, handler)
        proxy = ProxyObj(class_name, hash_out)
        iso.alloc(proxy, charged=True)
        iso.adopt_proxy(proxy)
        return proxy

    def remote_invoke(self, iso: Isolate, proxy: ProxyObj, method_name: str,
                      args: list):
        """Proxy method call: relay looks the mirror up and dispatches."""
        target_side = other_side(iso.side)
        relay = self._relay(target_side, f"{proxy.class_name}.{method_name}")
        request = b"".join(wire.encode(self.lower_value(iso, a)) for a in args)

        def handler(target: Isolate, data: bytes):
            obj = target.registry.get(proxy.hash_value)
            if obj is None:
                raise StaleMirror(proxy.hash_value)
            values = wire.decode_sequence(data, len(relay.param_kinds))
            margs = [self.materialize(target, v) for v in values]
            decl = self.classes[target.side][proxy.class_name]
            method = decl.method(method_name)
            result = self.interps[target.side].call_method(
                decl, method, obj, margs)
            if relay.return_kind == MarshalKind.UNIT:
                return None, b""
            return None, wire.encode(self.lower_value(target, result))

        _, response = self._transition(iso, relay.direction, "invoke",
                                       relay.relay_id, proxy.hash_value,
                                       request, handler)
        if relay.return_kind == MarshalKind.UNIT:
            return None
        return self.materialize(iso, wire.decode(response))

    # -- builtin hooks ---------------------------------------------------------

    def builtin_print(self, iso: Isolate, text: str) -> None:
        if iso.side == UNTRUSTED:
            self.transcript.append(text)
            return

        def handler(target: Isolate, raw: bytes):
            (s,) = wire.decode_sequence(raw, 1)
            self.transcript.append(s[1])
            return None, b""

        request = wire.encode(("str", text))
        self.shim_ocalls += 1
        self._transition(iso, "ocall", "shim", "__host__.print", 0,
                         request, handler)

    def builtin_file_write(self, iso: Isolate, path: str, data: str) -> None:
        if iso.side == UNTRUSTED:
            self._host_write(iso, path, data)
            return

        def handler(target: Isolate, raw: bytes):
            p, d = wire.decode_sequence(raw, 2)
            self._host_write(target, p[1], d[1])
            return None, b""

        request = wire.encode(("str", path)) + wire.encode(("str", data))
        self.shim_ocalls += 1
        self._transition(iso, "ocall", "shim", "__host__.file_write", 0,
                         request, handler)

    def builtin_file_read(self, iso: Isolate, path: str) -> str:
        if iso.side == UNTRUSTED:
            return self._host_read(path)

        def handler(target: Isolate, raw: bytes):
            (p,) = wire.decode_sequence(raw, 1)
            return None, wire.encode(("str", self._host_read(p[1])))

        request = wire.encode(("str", path))
        self.shim_ocalls += 1
        _, response = self._transition(iso, "ocall", "shim",
                                       "__host__.file_read", 0,
                                       request, handler)
        value = wire.decode(response)
        return value[1]

    def _host_write(self, iso: Isolate, path: str, data: str) -> None:
        self.vfs[path] = data
        iso.charge("io", self.model.io_write_cost)

    def _host_read(self, path: str) -> str:
        if path not in self.vfs:
            raise DslRuntimeError(f"file_read of missing path: {path}")
        return self.vfs[path]

    # -- garbage collection hooks -------------------------------------------

    def stmt_guard(self, iso: Isolate):
        return self._lock

    def safepoint(self, iso: Isolate) -> None:
        if iso.bytes_since_gc >= self.gc_threshold:
            with self._lock:
                if iso.bytes_since_gc >= self.gc_threshold:
                    self._collect(iso, force_scan=False)

    def explicit_gc(self, iso: Isolate) -> None:
        with self._lock:
            self._collect(iso, force_scan=True)

    def _collect(self, iso: Isolate, force_scan: bool) -> GcStats:
        stats = iso.gc_collect()
        if force_scan or iso.collections_since_scan >= self.gc_scan_every:
            self._scan_cleared_proxies(iso)
            iso.collections_since_scan = 0
        return stats

    def _scan_cleared_proxies(self, iso: Isolate) -> None:
        """Report swept proxies so the other side can drop their mirrors."""
        cleared = iso.cleared_proxy_entries()
        other = other_side(iso.side)
        direction = "ecall" if other == TRUSTED else "ocall"
        for slot, h in cleared:
            iso.proxy_weak_list.remove((slot, h))
            if iso.proxy_table.get(h) is slot:
                del iso.proxy_table[h]
            qual = f"{slot.referent.class_name}.release"

            def handler(target: Isolate, raw: bytes, h=h):
                target.remove_mirror(h)
                return None, b""

            self.remove_calls += 1
            self._transition(iso, direction, "remove", qual, h, b"", handler)

    # -- live gc mode -----------------------------------------------------------

    def _start_live_gc(self) -> None:
        if self.gc_mode != "live":
            return
        self._live_stop = threading.Event()
        for side in (TRUSTED, UNTRUSTED):
            t = threading.Thread(target=self._gc_loop, args=(side,),
                                 name=f"gc-{side}", daemon=True)
            self._live_threads.append(t)
            t.start()

    def _stop_live_gc(self) -> None:
        if self._live_stop is None:
            return
        self._live_stop.set()
        for t in self._live_threads:
            t.join()
        self._live_threads.clear()
        self._live_stop = None

    def _gc_loop(self, side: str) -> None:
        assert self._live_stop is not None
        stop = self._live_stop
        while not stop.wait(LIVE_GC_INTERVAL):
            with self._lock:
                self._collect(self.isolates[side], force_scan=False)
