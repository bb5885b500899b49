import pytest

from epart.dsl import parse_program
from epart.errors import DslRuntimeError, StaleMirror, TransitionOverflow
from epart.partition import compute_images
from epart.runtime import (
    MAX_TRANSITION_DEPTH, DualRuntime, run_reference, run_unpartitioned,
)
from epart.runtime.heap import TRUSTED, UNTRUSTED, InstanceObj, ProxyObj


def plan_of(source: str):
    return compute_images(parse_program(source))


def run_dual(source: str, argv=None, **kwargs):
    return DualRuntime(plan_of(source), **kwargs).run_main(argv)


class TestBankExecution:
    def test_counters(self, bank_plan):
        res = DualRuntime(bank_plan).run_main()
        assert res.transcript == []
        assert res.vfs == {}
        u = res.metrics[UNTRUSTED]
        t = res.metrics[TRUSTED]
        assert (u.ecalls, u.ocalls, res.shim_ocalls) == (6, 0, 0)
        assert (t.ecalls, t.ocalls) == (0, 0)
        assert u.bytes_serialized == 67
        assert t.bytes_serialized == 0
        assert u.allocations == 5   # 2 Persons + 3 proxies
        assert t.allocations == 5   # 3 Accounts + registry + its list
        assert t.mirror_registry_size == 3
        assert u.live_proxies == 3
        assert res.total_cycles == 79287

    def test_cycles_by_source(self, bank_plan):
        res = DualRuntime(bank_plan).run_main()
        assert res.cycles_by_source[TRUSTED] == {"alloc": 200, "field": 88}
        assert res.cycles_by_source[UNTRUSTED] == {
            "alloc": 50, "field": 14, "transition": 78600, "serialize": 335}

    def test_balances_live_in_trusted_mirrors(self, bank_plan):
        rt = DualRuntime(bank_plan)
        rt.run_main()
        balances = {}
        for obj in rt.isolates[TRUSTED].registry.values():
            if isinstance(obj, InstanceObj) and obj.decl.name == "Account":
                balances[obj.values["owner"]] = obj.values["balance"]
        assert balances == {"Alice": 75, "Bob": 50}

    def test_trace(self, bank_plan):
        res = DualRuntime(bank_plan).run_main()
        assert len(res.trace) == 6
        assert all(ev.direction == "ecall" for ev in res.trace)
        assert res.trace[0].line() == (
            "1 ECALL ctor Account.Account "
            "hash=0x8000000000000001 bytes=19 cycles=13100")
        assert [ev.qualname for ev in res.trace] == [
            "Account.Account", "Account.Account", "Account.updateBalance",
            "Account.updateBalance", "AccountRegistry.AccountRegistry",
            "AccountRegistry.addAccount",
        ]

    def test_matches_reference(self, bank_program, bank_plan):
        dual = DualRuntime(bank_plan).run_main()
        ref = run_reference(bank_program)
        assert dual.transcript == ref.transcript
        assert dual.vfs == ref.vfs
        assert ref.total("ecalls") == 0
        assert ref.shim_ocalls == 0


class TestProxyLifecycle:
    REUSE_SRC = """
@Trusted
class Gem {
    Gem() { }
}
@Trusted
class Store {
    item: Gem;
    Store() { }
    put(g: Gem) { this.item = g; }
    fetch() -> Gem { return this.item; }
}
@Untrusted
class Main {
    static main() {
        var g: Gem = new Gem();
        var s: Store = new Store();
        s.put(g);
        s.fetch();
    }
}
"""

    def test_construct_through_proxy(self, bank_plan):
        rt = DualRuntime(bank_plan)
        acct = rt.construct(UNTRUSTED, "Account", ["X", 5])
        assert isinstance(acct, ProxyObj)
        assert acct.hash_value == 0x8000000000000001
        assert rt.registry_hashes(TRUSTED) == {acct.hash_value}
        assert rt.live_proxy_hashes(UNTRUSTED) == {acct.hash_value}

    def test_return_path_reuses_live_proxy(self):
        rt = DualRuntime(plan_of(self.REUSE_SRC))
        gem = rt.construct(UNTRUSTED, "Gem", [])
        store = rt.construct(UNTRUSTED, "Store", [])
        rt.call(UNTRUSTED, store, "put", [gem])
        back = rt.call(UNTRUSTED, store, "fetch", [])
        assert back is gem
        assert rt.live_proxy_hashes(UNTRUSTED) == \
            {gem.hash_value, store.hash_value}

    def test_stale_mirror_after_collection(self, bank_plan):
        rt = DualRuntime(bank_plan)
        acct = rt.construct(UNTRUSTED, "Account", ["X", 5])
        rt.clear_pins(UNTRUSTED)
        rt.force_gc(UNTRUSTED, scan=True)
        assert rt.registry_hashes(TRUSTED) == set()
        assert rt.remove_calls == 1
        with pytest.raises(StaleMirror) as exc:
            rt.call(UNTRUSTED, acct, "updateBalance", [1])
        assert exc.value.hash_value == acct.hash_value

    def test_pinned_proxy_survives_collection(self, bank_plan):
        rt = DualRuntime(bank_plan)
        acct = rt.construct(UNTRUSTED, "Account", ["X", 5])
        rt.force_gc(UNTRUSTED, scan=True)
        assert rt.registry_hashes(TRUSTED) == {acct.hash_value}
        rt.call(UNTRUSTED, acct, "updateBalance", [1])


class TestCopyDivergence:
    SRC = """
@Neutral
class Box {
    v: Int;
    Box() { this.v = 1; }
    add(n: Int) { this.v = this.v + n; }
    get() -> Int { return this.v; }
}
@Trusted
class Vault {
    Vault() { }
    bump(b: Box) { b.add(10); }
}
@Untrusted
class Main {
    static main() {
        var b: Box = new Box();
        var t: Vault = new Vault();
        t.bump(b);
        print(b.get());
    }
}
"""

    def test_neutral_argument_is_copied_across_boundary(self):
        # the trusted side mutates its own copy; the caller's original
        # is untouched, unlike the shared-heap reference semantics
        assert run_dual(self.SRC).transcript == ["1"]
        assert run_reference(parse_program(self.SRC)).transcript == ["11"]

    def test_neutral_sharing_preserved_within_one_side(self):
        src = self.SRC.replace("t.bump(b);", "b.add(10);")
        assert run_dual(src).transcript == ["11"]


class TestTransitions:
    PING_PONG = """
@Trusted
class T {
    T() { }
    ping(u: U, n: Int) {
        if (n > 0) { u.pong(this, n - 1); }
    }
}
@Untrusted
class U {
    U() { }
    pong(t: T, n: Int) {
        if (n > 0) { t.ping(this, n - 1); }
    }
}
@Untrusted
class Main {
    static main() {
        var t: T = new T();
        var u: U = new U();
        t.ping(u, %d);
    }
}
"""

    def test_depth_limit(self):
        assert MAX_TRANSITION_DEPTH == 256
        with pytest.raises(TransitionOverflow, match="entering T.ping"):
            run_dual(self.PING_PONG % 600)

    def test_bounded_ping_pong(self):
        res = run_dual(self.PING_PONG % 100)
        assert res.metrics[UNTRUSTED].ecalls == 52  # 2 ctors + 50 pings
        assert res.metrics[TRUSTED].ocalls == 50

    def test_error_trace_crosses_boundary(self):
        src = """
@Trusted
class Calc {
    Calc() { }
    div(a: Int, b: Int) -> Int { return a / b; }
}
@Untrusted
class Caller {
    Caller() { }
    go(c: Calc) -> Int { return c.div(10, 0); }
}
@Untrusted
class Main {
    static main() {
        var c: Calc = new Calc();
        var k: Caller = new Caller();
        print(k.go(c));
    }
}
"""
        with pytest.raises(DslRuntimeError) as exc:
            run_dual(src)
        assert exc.value.formatted() == (
            "runtime error: division by zero\n"
            "  at Calc.div\n"
            "  -- ecall boundary Calc.div --\n"
            "  at Caller.go\n"
            "  at Main.main")


class TestSemantics:
    SEM_SRC = """
@Untrusted
class Main {
    static main(args: List[Str]) {
        print(9223372036854775807 + 1);
        print(-7 / 2);
        print(7 / -2);
        print(-7 % 2);
        print(7 % -2);
        print(args.len());
        print(args.get(1));
        var xs: List[Int] = [];
        xs.append(4);
        xs.append(5);
        print(xs.len());
        print(xs.get(0) * xs.get(1));
        var s: Str = "ab" + "cd";
        print(s);
        print(s == "abcd");
        print(true);
    }
}
"""

    def test_int64_and_list_and_str(self):
        res = run_dual(self.SEM_SRC, argv=["prog", "hello"])
        assert res.transcript == [
            "-9223372036854775808",  # wraparound at 2**63
            "-3", "-3",              # division truncates toward zero
            "-1", "1",               # remainder keeps the dividend's sign
            "2", "hello",
            "2", "20",
            "abcd", "true", "true",
        ]

    def test_partitioned_matches_reference(self):
        argv = ["prog", "hello"]
        assert run_dual(self.SEM_SRC, argv=argv).transcript == \
            run_reference(parse_program(self.SEM_SRC), argv).transcript

    def test_division_by_zero(self):
        src = (
            "@Untrusted\n"
            "class Main {\n"
            "    static main() {\n"
            "        var z: Int = 0;\n"
            "        print(7 % z);\n"
            "    }\n"
            "}\n")
        with pytest.raises(DslRuntimeError, match="division by zero"):
            run_dual(src)

    def test_primitive_field_defaults(self):
        src = """
@Untrusted
class Fresh {
    i: Int;
    b: Bool;
    s: Str;
    xs: List[Int];
    Fresh() { }
    show() {
        print(this.i);
        print(this.b);
        print(this.s == "");
        print(this.xs.len());
    }
}
@Untrusted
class Main {
    static main(args: List[Str]) {
        var f: Fresh = new Fresh();
        f.show();
        print(args.len());
    }
}
"""
        # argv defaults to an empty list
        assert run_dual(src).transcript == ["0", "false", "true", "0", "0"]

    def test_object_field_read_before_assignment(self):
        src = """
@Untrusted
class Peer {
    Peer() { }
}
@Untrusted
class Late {
    p: Peer;
    Late() { }
    get() -> Peer { return this.p; }
}
@Untrusted
class Main {
    static main() {
        var l: Late = new Late();
        l.get();
    }
}
"""
        with pytest.raises(DslRuntimeError,
                           match="field Late.p read before assignment"):
            run_dual(src)

    def test_list_index_out_of_range(self):
        src = """
@Untrusted
class Main {
    static main() {
        var xs: List[Int] = [];
        print(xs.get(0));
    }
}
"""
        with pytest.raises(DslRuntimeError):
            run_dual(src)


class TestHostShims:
    WRITER_SRC = """
@Trusted
class Writer {
    Writer() { }
    emit() {
        print("starting");
        file_write("/data/out.txt", "payload");
        var back: Str = file_read("/data/out.txt");
        print(back);
    }
}
@Untrusted
class Main {
    static main() {
        var w: Writer = new Writer();
        w.emit();
    }
}
"""

    def test_trusted_io_and_print_go_through_shims(self):
        res = run_dual(self.WRITER_SRC)
        assert res.transcript == ["starting", "payload"]
        assert res.vfs == {"/data/out.txt": "payload"}
        assert res.shim_ocalls == 4
        shims = [ev for ev in res.trace if ev.kind == "shim"]
        assert [(ev.qualname, ev.nbytes) for ev in shims] == [
            ("__host__.print", 13),
            ("__host__.file_write", 30),
            ("__host__.file_read", 30),
            ("__host__.print", 12),
        ]
        assert all(ev.direction == "ocall" for ev in shims)

    def test_print_payload_grows_with_text(self):
        src = """
@Trusted
class Shout {
    Shout() { }
    go(s: Str) { print(s); }
}
@Untrusted
class Main {
    static main() {
        var sh: Shout = new Shout();
        var s: Str = "%s";
        sh.go(s);
    }
}
""" % ("x" * 4096)
        res = run_dual(src)
        shims = [ev for ev in res.trace if ev.kind == "shim"]
        assert len(shims) == 1
        assert shims[0].nbytes == 4101  # tag + length + 4096 chars

    def test_enclave_mode_shims_match(self):
        prog = parse_program(self.WRITER_SRC)
        dual = run_dual(self.WRITER_SRC)
        unpart = run_unpartitioned(prog)
        ref = run_reference(prog)
        assert unpart.transcript == ref.transcript == dual.transcript
        assert unpart.vfs == ref.vfs == dual.vfs
        assert unpart.shim_ocalls == 4
        assert ref.shim_ocalls == 0
        assert ref.total("ocalls") == 0

    def test_file_read_missing_path(self):
        src = """
@Untrusted
class Main {
    static main() {
        var s: Str = file_read("/data/none.txt");
    }
}
"""
        with pytest.raises(DslRuntimeError, match="missing path"):
            run_dual(src)


class TestDeterminism:
    def test_reruns_are_byte_identical(self, bank_plan):
        runs = [DualRuntime(bank_plan).run_main() for _ in range(2)]
        assert runs[0].metrics_text() == runs[1].metrics_text()
        assert [ev.line() for ev in runs[0].trace] == \
            [ev.line() for ev in runs[1].trace]
        assert runs[0].cycles_by_source == runs[1].cycles_by_source

    def test_live_mode_matches_transcript(self):
        src = TestHostShims.WRITER_SRC
        plan = plan_of(src)
        det = DualRuntime(plan).run_main()
        live = DualRuntime(plan, gc_mode="live").run_main()
        assert live.transcript == det.transcript
        assert live.vfs == det.vfs

    def test_metrics_text_shape(self, bank_plan):
        text = DualRuntime(bank_plan).run_main().metrics_text()
        lines = text.splitlines()
        assert lines[0] == "[trusted]"
        assert "[untrusted]" in lines
        assert "[run]" in lines
        for key in ("ecalls", "ocalls", "bytes_serialized", "allocations",
                    "gc_runs", "gc_cycles", "mirror_registry_size",
                    "live_proxies", "simulated_cycles"):
            assert sum(1 for l in lines if l.startswith(f"{key} = ")) == 2
        assert lines[-3] == "shim_ocalls = 0"
        assert lines[-2] == "remove_calls = 0"
        assert lines[-1] == "total_simulated_cycles = 79287"

    def test_constructor_guards(self, bank_plan):
        with pytest.raises(ValueError, match="gc mode"):
            DualRuntime(bank_plan, gc_mode="eager")
        with pytest.raises(ValueError, match="gc_scan_every"):
            DualRuntime(bank_plan, gc_scan_every=0)
