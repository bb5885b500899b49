"""Hand-written tokenizer for the annotated class language."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

KEYWORDS = {
    "class", "static", "public", "private", "var", "new", "this",
    "return", "if", "else", "while", "true", "false",
}

# Longest first so that two-char operators win.
SYMBOLS = [
    "->", "<=", ">=", "==", "!=",
    "{", "}", "(", ")", "[", "]", "<", ">",
    ";", ":", ",", ".", "@", "=", "+", "-", "*", "/", "%",
]


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, str, keyword, sym, eof
    text: str
    line: int
    col: int

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


def tokenize(source: str) -> list[Token]:
    """Produce the token stream, ending with an eof token.

    Raises ParseError("syntax") on any malformed input; never crashes.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def err(msg: str) -> ParseError:
        return ParseError("syntax", msg, line, col)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":  # comment to end of line
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and (source[j].isalpha() or source[j] == "_"):
                raise err(f"malformed number {source[i:j + 1]!r}")
            tokens.append(Token("int", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n:
                    raise err("unterminated string literal")
                c = source[j]
                if c == '"':
                    j += 1
                    break
                if c == "\n":
                    raise err("newline in string literal")
                if c == "\\":
                    if j + 1 >= n:
                        raise err("unterminated escape sequence")
                    esc = source[j + 1]
                    if esc not in _ESCAPES:
                        raise err(f"unknown escape sequence \\{esc}")
                    out.append(_ESCAPES[esc])
                    j += 2
                    continue
                out.append(c)
                j += 1
            tokens.append(Token("str", "".join(out), start_line, start_col))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("sym", sym, start_line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise err(f"unexpected character {ch!r}")

    tokens.append(Token("eof", "", line, col))
    return tokens
