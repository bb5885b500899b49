"""Abstract cycle cost model for the simulated runtime.

All prices are in abstract cycles.  epc_penalty is a multiplier applied to
memory-bound work (allocation, field access, compute, GC scanning) executed in
the trusted isolate; it does not scale transition or serialization costs, which
the model prices identically on both sides.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

# Round-trip transition price measured for SGX-class hardware.
DEFAULT_TRANSITION_CYCLES = 13100

_INT_FIELDS = ("ecall_cost", "ocall_cost", "alloc_cost", "field_access_cost",
               "serialize_per_byte", "compute_unit_cost", "io_write_cost")


@dataclass(frozen=True)
class CostModel:
    ecall_cost: int = DEFAULT_TRANSITION_CYCLES
    ocall_cost: int = DEFAULT_TRANSITION_CYCLES
    alloc_cost: int = 10
    field_access_cost: int = 2
    serialize_per_byte: int = 5
    epc_penalty: float = 4.0
    compute_unit_cost: int = 1
    io_write_cost: int = 2000

    def __post_init__(self) -> None:
        for name in _INT_FIELDS:
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
        if self.epc_penalty < 1:
            raise ValueError(f"epc_penalty must be >= 1, got {self.epc_penalty!r}")

    def replace(self, **kwargs) -> "CostModel":
        return dataclasses.replace(self, **kwargs)

    def scaled(self, base: int, trusted: bool) -> int:
        """Price memory-bound work, applying the EPC penalty in the enclave."""
        if not trusted:
            return base
        return round(base * self.epc_penalty)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"


_FIELD_NAMES = {f.name for f in dataclasses.fields(CostModel)}


def parse_model(text: str) -> CostModel:
    """Parse flat key = value text; unknown keys are rejected."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _FIELD_NAMES:
            raise ValueError(f"line {lineno}: unknown cost model key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val) if key == "epc_penalty" else int(val)
        except ValueError as e:
            raise ValueError(f"line {lineno}: bad value for {key}: {val!r}") from e
    return CostModel(**values)  # type: ignore[arg-type]


def load_model(path: str | Path) -> CostModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))
