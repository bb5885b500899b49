from epart.dsl import analyze_calls, parse_program, validate


def check(source: str) -> set[str]:
    return validate(parse_program(source)).rules()


WRAP = """
@Untrusted
class Main {{
    static main() {{
{body}
    }}
}}
"""


def check_main(body: str, extra: str = "") -> set[str]:
    return check(extra + WRAP.format(body=body))


class TestPlacement:
    def test_bank_is_clean(self, bank_program):
        assert validate(bank_program).ok

    def test_main_in_trusted_class(self):
        rules = check("@Trusted\nclass Main { static main() { } }")
        assert "MAIN_PLACEMENT" in rules

    def test_main_in_neutral_class_ok(self):
        assert check("@Neutral\nclass Main { static main() { } }") == set()

    def test_main_must_be_static(self):
        rules = check("@Untrusted\nclass Main { main() { } }")
        assert "MAIN_SIGNATURE" in rules

    def test_main_param_list_str_ok(self):
        src = """
@Untrusted
class Main {
    static main(args: List[Str]) {
        print(args.len());
    }
}
"""
        assert check(src) == set()

    def test_main_bad_params(self):
        rules = check("@Untrusted\nclass Main { static main(n: Int) { } }")
        assert "MAIN_SIGNATURE" in rules

    def test_static_on_annotated_class(self):
        src = """
@Trusted
class T {
    T() { }
    static helper() { }
}
@Untrusted
class Main { static main() { } }
"""
        assert "STATIC_PLACEMENT" in check(src)

    def test_static_on_neutral_class_ok(self):
        src = """
@Neutral
class N {
    N() { }
    static helper() { }
}
@Untrusted
class Main { static main() { N.helper(); } }
"""
        assert check(src) == set()

    def test_static_call_through_annotated_class(self):
        src = """
@Trusted
class T {
    T() { }
    static helper() { }
}
@Untrusted
class Main { static main() { T.helper(); } }
"""
        assert "STATIC_PLACEMENT" in check(src)


class TestEncapsulation:
    def test_public_field_on_annotated(self):
        src = """
@Trusted
class T {
    public x: Int;
    T() { this.x = 0; }
}
@Untrusted
class Main { static main() { } }
"""
        assert "ENCAPSULATION" in check(src)

    def test_public_field_on_neutral_ok(self):
        src = """
@Neutral
class N {
    public x: Int;
    N() { this.x = 0; }
}
@Untrusted
class Main { static main() { } }
"""
        assert check(src) == set()

    def test_cross_object_field_access(self):
        src = """
@Neutral
class P {
    x: Int;
    P() { this.x = 1; }
}
@Untrusted
class Main {
    static main() {
        var p: P = new P();
        print(p.x);
    }
}
"""
        assert "FIELD_ACCESS" in check(src)

    def test_this_field_access_ok(self, bank_program):
        assert validate(bank_program).ok


class TestTypes:
    def test_unknown_type(self):
        assert "TYPE_RESOLVE" in check_main("        var x: Missing = 1;")

    def test_unknown_variable(self):
        assert "TYPE_RESOLVE" in check_main("        print(nope);")

    def test_unknown_method(self):
        extra = "@Neutral\nclass P { P() { } }\n"
        body = "        var p: P = new P();\n        p.nope();"
        assert "TYPE_RESOLVE" in check_main(body, extra)

    def test_int_plus_str_rejected(self):
        assert "TYPE_ERROR" in check_main('        var x: Int = 1 + "a";')

    def test_str_concat_ok(self):
        assert check_main('        var s: Str = "a" + "b";') == set()

    def test_condition_must_be_bool(self):
        assert "TYPE_ERROR" in check_main("        if (1) { }")

    def test_while_condition_must_be_bool(self):
        assert "TYPE_ERROR" in check_main('        while ("x") { }')

    def test_unary_minus_needs_int(self):
        assert "TYPE_ERROR" in check_main("        var x: Int = -true;")

    def test_equality_needs_same_prim(self):
        assert "TYPE_ERROR" in check_main('        var b: Bool = 1 == "a";')

    def test_assignment_type_mismatch(self):
        body = "        var x: Int = 1;\n        x = true;"
        assert "TYPE_ERROR" in check_main(body)

    def test_return_type_mismatch(self):
        src = """
@Untrusted
class Main {
    static main() { }
    f() -> Int { return "s"; }
}
"""
        assert "TYPE_ERROR" in check(src)

    def test_missing_return_value(self):
        src = """
@Untrusted
class Main {
    static main() { }
    f() -> Int { return; }
}
"""
        assert "TYPE_ERROR" in check(src)

    def test_call_arity_checked(self):
        extra = "@Neutral\nclass P { P() { } go(n: Int) { } }\n"
        body = "        var p: P = new P();\n        p.go();"
        assert "TYPE_ERROR" in check_main(body, extra)

    def test_ctor_arg_type_checked(self):
        extra = "@Neutral\nclass P { P(n: Int) { } }\n"
        assert "TYPE_ERROR" in check_main('        var p: P = new P("s");', extra)

    def test_list_ops(self):
        body = ("        var xs: List[Int] = [];\n"
                "        xs.append(1);\n"
                "        print(xs.get(0));\n"
                "        print(xs.len());")
        assert check_main(body) == set()

    def test_list_append_type_checked(self):
        body = '        var xs: List[Int] = [];\n        xs.append("s");'
        assert "TYPE_ERROR" in check_main(body)

    def test_builtin_arg_types(self):
        assert "TYPE_ERROR" in check_main("        file_write(1, 2);")
        assert "TYPE_ERROR" in check_main("        compute(true);")
        assert check_main("        compute(5);") == set()
        assert check_main("        gc();") == set()


class TestCallAnalysis:
    def test_resolved_targets(self, bank_program):
        calls = analyze_calls(bank_program)
        main_calls = calls[("Main", "main")]
        assert ("Person", "Person") in main_calls
        assert ("AccountRegistry", "addAccount") in main_calls
        transfer = calls[("Person", "transfer")]
        assert ("Person", "getAccount") in transfer
        assert ("Account", "updateBalance") in transfer
