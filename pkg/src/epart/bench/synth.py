"""Synthetic workload programs with a tunable trusted/untrusted split.

A synthetic program has `n_classes` identical worker classes, a seeded
subset of which is annotated @Untrusted (the rest @Trusted), plus a
neutral driver class whose static main constructs every worker and calls
its work() method once.  Two workload bodies are supported:

  cpu  work() burns `cpu_units` of compute
  io   work() writes an `io_bytes` payload to a per-class file

Transition counts are analytic: every trusted worker costs two ecalls
(constructor + work), and in the io workload one shim ocall for the
file write.  Untrusted workers run locally and cost nothing.
"""

from dataclasses import dataclass
import random

WORKLOADS = ("cpu", "io")

DEFAULT_CLASSES = 100
DEFAULT_IO_BYTES = 4096
DEFAULT_CPU_UNITS = 250


@dataclass
class SyntheticSpec:
    n_classes: int = DEFAULT_CLASSES
    pct_untrusted: int = 0
    workload: str = "cpu"
    io_bytes: int = DEFAULT_IO_BYTES
    cpu_units: int = DEFAULT_CPU_UNITS
    seed: int = 0

    def untrusted_count(self) -> int:
        return round(self.n_classes * self.pct_untrusted / 100)

    def trusted_count(self) -> int:
        return self.n_classes - self.untrusted_count()

    def expected_ecalls(self) -> int:
        return 2 * self.trusted_count()

    def expected_shim_ocalls(self) -> int:
        return self.trusted_count() if self.workload == "io" else 0


def untrusted_indices(spec: SyntheticSpec) -> set[int]:
    rng = random.Random(spec.seed)
    return set(rng.sample(range(spec.n_classes), spec.untrusted_count()))


def generate_synthetic(spec: SyntheticSpec) -> str:
    if spec.workload not in WORKLOADS:
        raise ValueError(f"unknown workload {spec.workload!r}")
    if not 0 <= spec.pct_untrusted <= 100:
        raise ValueError("pct_untrusted must be within [0, 100]")
    chosen = untrusted_indices(spec)
    payload = "x" * spec.io_bytes
    out: list[str] = []
    for i in range(spec.n_classes):
        side = "@Untrusted" if i in chosen else "@Trusted"
        if spec.workload == "io":
            body = f'file_write("/out/w{i}.txt", "{payload}");'
        else:
            body = f"compute({spec.cpu_units});"
        out.append(f"""{side}
class Work{i} {{
    acc: Int;
    Work{i}() {{
        this.acc = 0;
    }}
    work() {{
        {body}
        this.acc = this.acc + 1;
    }}
}}""")
    calls = "\n".join(
        f"        var w{i}: Work{i} = new Work{i}();\n"
        f"        w{i}.work();"
        for i in range(spec.n_classes))
    out.append(f"""@Neutral
class Main {{
    static main() {{
{calls}
    }}
}}""")
    return "\n\n".join(out) + "\n"
