"""Primitive instructions and their surface syntax.

Core primitives: a plain basic instruction `a` / `f.m`, positive and negative
tests `+a` / `-a`, a relative forward jump `#l`, and the halt `!`.  On top of
these sit the register-file primitives: switch-over `@i`, `put(i,u)` storing a
core primitive in register i, and the load placeholder `get(i)`.  Notation
modules add the absolute jump `##l` and the relative backward jump `\\#l`.

Basic tokens match `[a-z][A-Za-z0-9_]*`, optionally `focus.method`, with
':'-separated parameter segments; a segment may be quoted in braces when it is
not plain alphanumeric text (e.g. `irf.put:1:{#2}`).
"""

from dataclasses import dataclass

from .errors import ParseError
from .threads import Basic, parse_method, render_method

_IDENT_START = frozenset("abcdefghijklmnopqrstuvwxyz")
_IDENT_CHARS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"
)
_RESERVED = ("tau", "gnl")


# === instruction kinds ===


@dataclass(frozen=True)
class Plain:
    basic: Basic


@dataclass(frozen=True)
class PosTest:
    basic: Basic


@dataclass(frozen=True)
class NegTest:
    basic: Basic


@dataclass(frozen=True)
class FwdJump:
    """Skip to the counter-th next position; #0 never proceeds."""

    counter: int

    def __post_init__(self):
        if self.counter < 0:
            raise ValueError("jump counter must be >= 0")


@dataclass(frozen=True)
class Halt:
    pass


HALT = Halt()

CoreInstruction = Plain | PosTest | NegTest | FwdJump | Halt


@dataclass(frozen=True)
class Swo:
    """Switch over to the fragment with the given index."""

    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("switch-over index must be >= 0")


@dataclass(frozen=True)
class Put:
    """Store a core primitive in an instruction register."""

    register: int
    payload: CoreInstruction

    def __post_init__(self):
        if self.register < 1:
            raise ValueError("register number must be >= 1")
        if not isinstance(self.payload, (Plain, PosTest, NegTest, FwdJump, Halt)):
            raise ValueError("put payload must be a core primitive")


@dataclass(frozen=True)
class Get:
    """Placeholder replaced by the register contents at load time."""

    register: int

    def __post_init__(self):
        if self.register < 1:
            raise ValueError("register number must be >= 1")


Instruction = CoreInstruction | Swo | Put | Get


@dataclass(frozen=True)
class AbsJump:
    """Jump to an absolute 1-based position; 0 and out-of-range terminate."""

    target: int

    def __post_init__(self):
        if self.target < 0:
            raise ValueError("jump target must be >= 0")


@dataclass(frozen=True)
class RelBack:
    """Relative backward jump; offset 0 never proceeds."""

    offset: int

    def __post_init__(self):
        if self.offset < 0:
            raise ValueError("jump offset must be >= 0")


AnyInstruction = Instruction | AbsJump | RelBack


def is_supplementary(u: AnyInstruction) -> bool:
    return isinstance(u, (Swo, Put, Get))


# === rendering ===


def render(u: AnyInstruction) -> str:
    if isinstance(u, Plain):
        return u.basic.render()
    if isinstance(u, PosTest):
        return "+" + u.basic.render()
    if isinstance(u, NegTest):
        return "-" + u.basic.render()
    if isinstance(u, FwdJump):
        return f"#{u.counter}"
    if isinstance(u, Halt):
        return "!"
    if isinstance(u, Swo):
        return f"@{u.index}"
    if isinstance(u, Put):
        payload = render(u.payload)
        if not isinstance(u.payload, Plain):
            payload = "{" + payload + "}"
        return f"put({u.register},{payload})"
    if isinstance(u, Get):
        return f"get({u.register})"
    if isinstance(u, AbsJump):
        return f"##{u.target}"
    if isinstance(u, RelBack):
        return f"\\#{u.offset}"
    raise TypeError(f"not an instruction: {u!r}")


def render_program(instructions) -> str:
    return ";".join(render(u) for u in instructions)


# === parsing ===


class Cursor:
    """Character cursor over one line of program text."""

    def __init__(self, text: str, line: int | None = None):
        self.text = text
        self.i = 0
        self.line = line

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.i + 1)

    def skip_ws(self):
        while self.i < len(self.text) and self.text[self.i] in " \t":
            self.i += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.i >= len(self.text)

    def peek(self) -> str:
        return self.text[self.i] if self.i < len(self.text) else ""

    def take(self, expected: str) -> bool:
        if self.text.startswith(expected, self.i):
            self.i += len(expected)
            return True
        return False

    def expect(self, expected: str):
        if not self.take(expected):
            raise self.error(f"expected {expected!r}")

    def number(self) -> int:
        start = self.i
        while self.i < len(self.text) and self.text[self.i].isdigit():
            self.i += 1
        if self.i == start:
            raise self.error("expected a number")
        return int(self.text[start : self.i])

    def ident(self) -> str:
        start = self.i
        if self.peek() not in _IDENT_START:
            raise self.error("expected an identifier")
        while self.i < len(self.text) and self.text[self.i] in _IDENT_CHARS:
            self.i += 1
        return self.text[start : self.i]


def _parse_basic(c: Cursor) -> Basic:
    first = c.ident()
    focus = None
    if c.peek() == "." :
        c.i += 1
        focus = first
        first = c.ident()
    segments = [first]
    while c.peek() == ":":
        c.i += 1
        if c.peek() == "{":
            c.i += 1
            end = c.text.find("}", c.i)
            if end < 0:
                raise c.error("unterminated '{'")
            segments.append(c.text[c.i : end])
            c.i = end + 1
        else:
            start = c.i
            while c.i < len(c.text) and c.text[c.i] in _IDENT_CHARS:
                c.i += 1
            if c.i == start:
                raise c.error("expected a parameter segment")
            segments.append(c.text[start : c.i])
    if focus is None and len(segments) == 1 and segments[0] in _RESERVED:
        raise c.error(f"{segments[0]!r} is reserved for internal actions")
    return Basic(":".join(segments), focus)


def parse_one(c: Cursor) -> AnyInstruction:
    """Parse a single instruction at the cursor."""
    c.skip_ws()
    ch = c.peek()
    if ch == "":
        raise c.error("expected an instruction")
    if ch == "!":
        c.i += 1
        return HALT
    if c.take("##"):
        return AbsJump(c.number())
    if ch == "#":
        c.i += 1
        return FwdJump(c.number())
    if c.take("\\#"):
        return RelBack(c.number())
    if ch == "@":
        c.i += 1
        return Swo(c.number())
    if ch == "+":
        c.i += 1
        return PosTest(_parse_basic(c))
    if ch == "-":
        c.i += 1
        return NegTest(_parse_basic(c))
    if ch in _IDENT_START:
        mark = c.i
        word = c.ident()
        if word == "put" and c.peek() == "(":
            c.i += 1
            reg = c.number()
            c.expect(",")
            c.skip_ws()
            braced = c.take("{")
            payload = parse_one(c)
            if braced:
                c.expect("}")
            c.expect(")")
            if not isinstance(payload, (Plain, PosTest, NegTest, FwdJump, Halt)):
                raise c.error("put payload must be a core primitive")
            return Put(reg, payload)
        if word == "get" and c.peek() == "(":
            c.i += 1
            reg = c.number()
            c.expect(")")
            return Get(reg)
        c.i = mark
        return Plain(_parse_basic(c))
    raise c.error(f"unexpected character {ch!r}")


def parse_instructions(text: str, line: int | None = None) -> list[AnyInstruction]:
    """Parse a ';'-separated instruction list (no repetition)."""
    c = Cursor(text, line)
    out = [parse_one(c)]
    while True:
        c.skip_ws()
        if c.at_end():
            return out
        c.expect(";")
        out.append(parse_one(c))
