"""Single-isolate execution: the unpartitioned baselines.

enclave mode puts the whole program inside one trusted isolate, so the
EPC penalty applies to all of its memory work and every file builtin is
shimmed out to the host (an accounting-only untrusted isolate).  plain
mode runs the program in one untrusted isolate with direct file access
and no transitions at all; it is the reference used to check that
partitioning preserves observable behavior.
"""

from __future__ import annotations

import threading
from dataclasses import replace

from ..dsl import ast
from ..dsl.validate import validate
from ..errors import DslRuntimeError, ValidationFailed
from . import wire
from .costmodel import CostModel
from .dual import ExecutionResult, TraceEvent
from .heap import TRUSTED, UNTRUSTED, GcStats, Isolate, ListObj
from .interp import Interpreter, ensure_recursion_headroom

DEFAULT_GC_THRESHOLD = 64 * 1024


class SingleRuntime:
    def __init__(self, program: ast.Program, mode: str = "plain",
                 model: CostModel | None = None,
                 gc_threshold: int = DEFAULT_GC_THRESHOLD):
        if mode not in ("enclave", "plain"):
            raise ValueError(f"unknown mode {mode!r}")
        ensure_recursion_headroom()
        report = validate(program)
        if not report.ok:
            raise ValidationFailed(report)
        self.program = program
        self.mode = mode
        self.model = model if model is not None else CostModel()
        self.gc_threshold = gc_threshold
        side = TRUSTED if mode == "enclave" else UNTRUSTED
        self.isolate = Isolate(side, self.model)
        self.host = Isolate(UNTRUSTED, self.model) if mode == "enclave" else None
        classes = {c.name: c for c in program.classes}
        self.interp = Interpreter(self.isolate, classes, set(), self)
        self.transcript: list[str] = []
        self.vfs: dict[str, str] = {}
        self.trace: list[TraceEvent] = []
        self.seq = 0
        self.shim_ocalls = 0
        self._lock = threading.RLock()

    # -- entry ---------------------------------------------------------------

    def run_main(self, argv: list[str] | None = None) -> ExecutionResult:
        cls, m = self.program.main_location()
        args: list = []
        if m.params:
            lst = ListObj([str(a) for a in (argv or [])])
            self.isolate.alloc(lst, charged=False)
            args = [lst]
        self.interp.call_method(cls, m, None, args)
        return self.result()

    def result(self) -> ExecutionResult:
        metrics = {self.isolate.side: replace(self.isolate.metrics)}
        sources = {self.isolate.side: dict(self.isolate.cycles_by_source)}
        if self.host is not None:
            metrics[self.host.side] = replace(self.host.metrics)
            sources[self.host.side] = dict(self.host.cycles_by_source)
        return ExecutionResult(
            transcript=list(self.transcript),
            vfs=dict(self.vfs),
            metrics=metrics,
            trace=list(self.trace),
            shim_ocalls=self.shim_ocalls,
            remove_calls=0,
            cycles_by_source=sources,
        )

    # -- builtin hooks ----------------------------------------------------------

    def builtin_print(self, iso: Isolate, text: str) -> None:
        if self.host is not None:
            self._shim("__host__.print", wire.encode(("str", text)))
        self.transcript.append(text)

    def builtin_file_write(self, iso: Isolate, path: str, data: str) -> None:
        if self.host is None:
            self.vfs[path] = data
            iso.charge("io", self.model.io_write_cost)
            return
        request = wire.encode(("str", path)) + wire.encode(("str", data))
        self._shim("__host__.file_write", request)
        self.vfs[path] = data
        self.host.charge("io", self.model.io_write_cost)

    def builtin_file_read(self, iso: Isolate, path: str) -> str:
        if path not in self.vfs:
            raise DslRuntimeError(f"file_read of missing path: {path}")
        data = self.vfs[path]
        if self.host is not None:
            request = wire.encode(("str", path))
            self._shim("__host__.file_read", request,
                       response=wire.encode(("str", data)))
        return data

    def _shim(self, qualname: str, request: bytes, response: bytes = b"") -> None:
        """Account one host shim ocall: transition plus payload encoding."""
        iso = self.isolate
        iso.metrics.ocalls += 1
        iso.charge("transition", self.model.ocall_cost)
        if request:
            iso.charge_serialize(len(request))
        if response and self.host is not None:
            self.host.charge_serialize(len(response))
        self.seq += 1
        self.shim_ocalls += 1
        self.trace.append(TraceEvent(self.seq, "ocall", "shim", qualname, 0,
                                     len(request) + len(response),
                                     self.model.ocall_cost))

    # -- gc hooks ---------------------------------------------------------------

    def stmt_guard(self, iso: Isolate):
        return self._lock

    def safepoint(self, iso: Isolate) -> None:
        if iso.bytes_since_gc >= self.gc_threshold:
            iso.gc_collect()

    def explicit_gc(self, iso: Isolate) -> GcStats:
        return iso.gc_collect()

    # never reached: the image has no proxy classes
    def remote_new(self, iso, class_name, args):  # pragma: no cover
        raise AssertionError("single runtime cannot cross isolates")

    def remote_invoke(self, iso, proxy, method, args):  # pragma: no cover
        raise AssertionError("single runtime cannot cross isolates")


def run_unpartitioned(program: ast.Program, argv: list[str] | None = None,
                      model: CostModel | None = None) -> ExecutionResult:
    """Whole program inside the enclave, file builtins shimmed to the host."""
    return SingleRuntime(program, "enclave", model).run_main(argv)


def run_reference(program: ast.Program, argv: list[str] | None = None,
                  model: CostModel | None = None) -> ExecutionResult:
    """Plain host run: no enclave, no shim; the behavioral reference."""
    return SingleRuntime(program, "plain", model).run_main(argv)
