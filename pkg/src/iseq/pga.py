"""Program terms, instruction streams, and thread extraction.

Terms are built from single instructions with concatenation `;` and repetition
`(...)*`.  Every closed term denotes an eventually periodic instruction
stream; `normalize` computes it, and two terms are provably equal exactly when
they denote the same stream.  Streams are kept canonical: the period is not a
power of a shorter word, and no rotation-aligned copy of the period can be
absorbed from the end of the prefix.

`extract` turns a stream of core primitives into its behaviour graph, with
stream positions as candidate states: a plain instruction performs its action
and continues, a test branches between the next position and the one after, a
jump chain is followed (an endless chain means inaction), and halting or
running off a finite stream end as termination or inaction respectively.
"""

from dataclasses import dataclass

from .errors import ParseError
from .instructions import (
    AnyInstruction,
    Cursor,
    FwdJump,
    Halt,
    Instruction,
    NegTest,
    Plain,
    PosTest,
    is_supplementary,
    parse_one,
    render,
)
from .threads import DEAD, STOP, Post, ThreadGraph, ThreadNode, dead_graph, gc


# === terms ===


@dataclass(frozen=True)
class Instr:
    instruction: Instruction


@dataclass(frozen=True)
class Concat:
    left: "PgaTerm"
    right: "PgaTerm"


@dataclass(frozen=True)
class Repeat:
    body: "PgaTerm"


PgaTerm = Instr | Concat | Repeat


def concat_all(terms) -> PgaTerm:
    terms = list(terms)
    if not terms:
        raise ValueError("cannot concatenate zero terms")
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = Concat(t, out)
    return out


# === streams ===


def _primitive_root(period: tuple) -> tuple:
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period[:d] * (n // d) == period:
            return period[:d]
    return period


@dataclass(frozen=True)
class InstructionStream:
    """Eventually periodic instruction sequence in canonical form."""

    prefix: tuple[Instruction, ...]
    period: tuple[Instruction, ...] = ()

    def __post_init__(self):
        prefix = tuple(self.prefix)
        period = tuple(self.period)
        if not prefix and not period:
            raise ValueError("instruction stream must be non-empty")
        if period:
            period = _primitive_root(period)
            prefix = list(prefix)
            while prefix and prefix[-1] == period[-1]:
                prefix.pop()
                period = (period[-1],) + period[:-1]
            prefix = tuple(prefix)
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "period", period)

    @property
    def finite(self) -> bool:
        return not self.period

    def norm(self, pos: int) -> int:
        """Canonical 1-based position; wraps periodic positions down."""
        lp = len(self.prefix)
        if pos <= lp or self.finite:
            return pos
        return lp + (pos - lp - 1) % len(self.period) + 1

    def at(self, pos: int) -> Instruction | None:
        """Instruction at canonical position, or None past a finite end."""
        lp = len(self.prefix)
        if pos <= lp:
            return self.prefix[pos - 1]
        if self.finite:
            return None
        return self.period[(pos - lp - 1) % len(self.period)]

    def instructions(self) -> tuple[Instruction, ...]:
        return self.prefix + self.period

    def map(self, fn) -> "InstructionStream":
        return InstructionStream(
            tuple(fn(u) for u in self.prefix), tuple(fn(u) for u in self.period)
        )


def normalize(term: PgaTerm | InstructionStream) -> InstructionStream:
    """The instruction stream a term denotes.

    Repetition of a finite sequence becomes its period, repetition of an
    already infinite sequence changes nothing, and anything concatenated
    after an infinite sequence is absorbed.
    """
    if isinstance(term, InstructionStream):
        return term
    if isinstance(term, Instr):
        return InstructionStream((term.instruction,))
    if isinstance(term, Concat):
        left = normalize(term.left)
        if not left.finite:
            return left
        right = normalize(term.right)
        return InstructionStream(left.prefix + right.prefix, right.period)
    if isinstance(term, Repeat):
        body = normalize(term.body)
        if not body.finite:
            return body
        return InstructionStream((), body.prefix)
    raise TypeError(f"not a term: {term!r}")


def equal_terms(a: PgaTerm, b: PgaTerm) -> bool:
    """Provable equality: both sides denote the same canonical stream."""
    return normalize(a) == normalize(b)


def stream_to_term(s: InstructionStream) -> PgaTerm:
    parts = [Instr(u) for u in s.prefix]
    if s.period:
        parts.append(Repeat(concat_all([Instr(u) for u in s.period])))
    return concat_all(parts)


# === thread extraction ===

_OFF_END = 0  # sentinel resolve target: ran past a finite stream


def extract(s: InstructionStream | PgaTerm) -> ThreadGraph:
    """Behaviour graph of a stream of core primitives."""
    s = normalize(s)
    for u in s.instructions():
        if is_supplementary(u):
            raise ValueError("polyadic instruction in plain PGA extraction")

    def resolve(pos: int) -> int:
        """First non-jump position reached from pos, or _OFF_END for
        inaction (off the end, #0, or an endless jump chain)."""
        seen = set()
        while True:
            p = s.norm(pos)
            u = s.at(p)
            if u is None:
                return _OFF_END
            if not isinstance(u, FwdJump):
                return p
            if u.counter == 0 or p in seen:
                return _OFF_END
            seen.add(p)
            pos = p + u.counter

    ids: dict[int, int] = {}
    nodes: list[ThreadNode] = []
    queue: list[int] = []

    def node_for(pos: int) -> int:
        target = resolve(pos)
        if target == _OFF_END:
            target_key = _OFF_END
        else:
            target_key = target
        if target_key not in ids:
            ids[target_key] = len(nodes)
            nodes.append(DEAD)  # placeholder
            if target_key != _OFF_END:
                queue.append(target_key)
        return ids[target_key]

    root = node_for(1)
    while queue:
        p = queue.pop()
        u = s.at(p)
        i = ids[p]
        if isinstance(u, Halt):
            nodes[i] = STOP
        elif isinstance(u, Plain):
            succ = node_for(p + 1)
            nodes[i] = Post(u.basic, succ, succ)
        elif isinstance(u, PosTest):
            nodes[i] = Post(u.basic, node_for(p + 1), node_for(p + 2))
        elif isinstance(u, NegTest):
            nodes[i] = Post(u.basic, node_for(p + 2), node_for(p + 1))
        else:  # pragma: no cover - resolve() never yields jumps
            raise AssertionError(u)
    return gc(ThreadGraph(tuple(nodes), root))


# === term syntax ===


def parse_term(text: str, line: int | None = None) -> PgaTerm:
    """Parse `u1;...;uk` or `u1;...;(v1;...;vm)*`; repetition may only be
    the final factor."""
    c = Cursor(text, line)
    parts: list[PgaTerm] = []
    while True:
        c.skip_ws()
        if c.peek() == "(":
            c.i += 1
            inner: list[PgaTerm] = [Instr(_term_instruction(parse_one(c), c))]
            while True:
                c.skip_ws()
                if c.take(")"):
                    break
                c.expect(";")
                inner.append(Instr(_term_instruction(parse_one(c), c)))
            c.expect("*")
            parts.append(Repeat(concat_all(inner)))
            c.skip_ws()
            if not c.at_end():
                raise c.error("repetition must be the final factor")
            break
        parts.append(Instr(_term_instruction(parse_one(c), c)))
        c.skip_ws()
        if c.at_end():
            break
        c.expect(";")
    return concat_all(parts)


def _term_instruction(u: AnyInstruction, c: Cursor) -> Instruction:
    # program terms take core primitives and register-file primitives only
    if not isinstance(u, (Plain, PosTest, NegTest, FwdJump, Halt)) and not is_supplementary(u):
        raise c.error(f"instruction {render(u)!r} is not allowed in a program term")
    return u


def format_term(t: PgaTerm) -> str:
    if isinstance(t, Instr):
        return render(t.instruction)
    if isinstance(t, Concat):
        return f"{format_term(t.left)};{format_term(t.right)}"
    if isinstance(t, Repeat):
        return f"({format_term(t.body)})*"
    raise TypeError(f"not a term: {t!r}")


def format_stream(s: InstructionStream) -> str:
    return format_term(stream_to_term(s))


def parse_stream(text: str, line: int | None = None) -> InstructionStream:
    return normalize(parse_term(text, line))
