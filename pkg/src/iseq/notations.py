"""Program notations with explicit positions and their projections.

Two notations are supported.  PGLD has absolute jumps `##l`; jumping to 0 or
past the end terminates, and control falling past the last instruction also
terminates.  The second is a minimal relocatable notation with relative
forward jumps `#l`, relative backward jumps `\\#l`, and `!`; its programs are
closed blocks (no control transfer can leave the block except by halting or
switching over), which makes concatenation of blocks behaviour-safe.

Projections: `pgld_to_pga` renumbers jumps into a repeated program term,
`pga_to_pglc` flattens an instruction stream into a closed block,
`pglc_to_pgld` resolves relative jumps at fixed positions, and `pgld_graph` /
`pgld_oracle` interpret PGLD directly, independently of the projections.
"""

import enum
from dataclasses import dataclass

from .errors import ParseError
from .instructions import (
    HALT,
    AbsJump,
    AnyInstruction,
    FwdJump,
    Get,
    Halt,
    NegTest,
    Plain,
    PosTest,
    Put,
    RelBack,
    Swo,
    is_supplementary,
    parse_instructions,
    render,
    render_program,
)
from .pga import (
    Instr,
    InstructionStream,
    PgaTerm,
    Repeat,
    concat_all,
    normalize,
)
from .threads import DEAD, STOP, Post, ThreadGraph, ThreadNode, gc, project


class NotationIndex(enum.Enum):
    C = "C"
    D = "D"


_KNOWN_UNSUPPORTED = ("A", "B", "Dg", "E", "S")


def parse_notation(letter: str, line: int | None = None) -> NotationIndex:
    letter = letter.strip()
    if letter in ("C", "D"):
        return NotationIndex(letter)
    if letter in _KNOWN_UNSUPPORTED:
        raise ParseError(
            f"notation {letter!r} is not supported; only C and D fragments load", line
        )
    raise ParseError(f"unknown notation {letter!r}", line)


# === program types ===


@dataclass(frozen=True)
class PgldProgram:
    """Non-empty instruction list, 1-based positions, absolute jumps only."""

    instructions: tuple[AnyInstruction, ...]

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if not self.instructions:
            raise ValueError("program must have at least one instruction")
        for u in self.instructions:
            if isinstance(u, (FwdJump, RelBack, Halt)):
                raise ValueError(f"{render(u)!r} is not a PGLD instruction")

    def __len__(self) -> int:
        return len(self.instructions)


@dataclass(frozen=True)
class PglcProgram:
    """Closed block over core primitives, relative jumps, and the
    register-file primitives."""

    instructions: tuple[AnyInstruction, ...]

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if not self.instructions:
            raise ValueError("program must have at least one instruction")
        for u in self.instructions:
            if isinstance(u, AbsJump):
                raise ValueError("absolute jumps are not block instructions")
        bad = closure_defect(self.instructions)
        if bad is not None:
            raise ValueError(f"not a closed block: {bad}")

    def __len__(self) -> int:
        return len(self.instructions)


def closure_defect(instructions) -> str | None:
    """Why an instruction list is not a closed block, or None if it is.

    Every implicit or explicit control transfer must stay inside the block;
    halting, switching over, and the zero jumps are the only exits.
    """
    k = len(instructions)
    for j, u in enumerate(instructions, start=1):
        if isinstance(u, (Plain, Put)) and j + 1 > k:
            return f"instruction {j} falls off the end"
        if isinstance(u, (PosTest, NegTest)) and j + 2 > k:
            return f"test at position {j} can skip off the end"
        if isinstance(u, FwdJump) and u.counter and j + u.counter > k:
            return f"forward jump at position {j} leaves the block"
        if isinstance(u, RelBack) and u.offset and j - u.offset < 1:
            return f"backward jump at position {j} leaves the block"
    return None


def is_closed_block(instructions) -> bool:
    return closure_defect(instructions) is None


# === PGLD -> PGA ===


def pgld_to_pga(p: PgldProgram) -> PgaTerm:
    """Projection to a repeated program term.

    An absolute jump forward becomes the remaining distance, a backward jump
    wraps around the repeated copy (crossing the two added halts), and a
    jump to 0 or out of range halts.
    """
    k = len(p)
    mapped: list[PgaTerm] = []
    for j, u in enumerate(p.instructions, start=1):
        if isinstance(u, AbsJump):
            l = u.target
            if l == 0 or l > k:
                mapped.append(Instr(HALT))
            elif l >= j:
                mapped.append(Instr(FwdJump(l - j)))
            else:
                mapped.append(Instr(FwdJump(k + 2 - (j - l))))
        else:
            mapped.append(Instr(u))
    mapped.append(Instr(HALT))
    mapped.append(Instr(HALT))
    return Repeat(concat_all(mapped))


# === direct PGLD interpretation ===

_TERM = 0
_STUCK = -1


def pgld_graph(p: PgldProgram) -> ThreadGraph:
    """Behaviour graph by direct small-step interpretation of positions."""
    for u in p.instructions:
        if is_supplementary(u):
            raise ValueError("cannot interpret a program with register-file instructions")
    k = len(p)

    def resolve(j: int) -> int:
        seen = set()
        while True:
            if j == 0 or j > k:
                return _TERM
            u = p.instructions[j - 1]
            if not isinstance(u, AbsJump):
                return j
            if j in seen:
                return _STUCK
            seen.add(j)
            j = u.target

    ids: dict[int, int] = {}
    nodes: list[ThreadNode] = []
    queue: list[int] = []

    def node_for(j: int) -> int:
        key = resolve(j)
        if key not in ids:
            ids[key] = len(nodes)
            nodes.append(STOP if key == _TERM else DEAD)
            if key > 0:
                queue.append(key)
        return ids[key]

    root = node_for(1)
    while queue:
        j = queue.pop()
        u = p.instructions[j - 1]
        i = ids[j]
        if isinstance(u, Plain):
            succ = node_for(j + 1)
            nodes[i] = Post(u.basic, succ, succ)
        elif isinstance(u, PosTest):
            nodes[i] = Post(u.basic, node_for(j + 1), node_for(j + 2))
        elif isinstance(u, NegTest):
            nodes[i] = Post(u.basic, node_for(j + 2), node_for(j + 1))
        else:  # pragma: no cover
            raise AssertionError(u)
    return gc(ThreadGraph(tuple(nodes), root))


def pgld_oracle(p: PgldProgram, depth: int) -> ThreadGraph:
    """Depth-truncated direct interpretation."""
    return project(depth, pgld_graph(p))


# === stream -> closed block ===


def pga_to_pglc(t: PgaTerm | InstructionStream) -> PglcProgram:
    """Flatten a stream into a closed block.

    Finite part verbatim with out-of-range forward jumps clamped to the
    inaction jump #0; a periodic part is emitted once followed by a backward
    jump over it, with jumps past the copy reduced modulo the period.  Pad
    jumps make every fall-through and test skip explicit so the block stays
    closed when embedded in a larger program.
    """
    s = normalize(t)
    lp, per = len(s.prefix), len(s.period)
    total = lp + per
    out: list[AnyInstruction] = []
    for j, u in enumerate(s.instructions(), start=1):
        if not isinstance(u, FwdJump):
            out.append(u)
            continue
        l = u.counter
        if l == 0:
            out.append(FwdJump(0))
            continue
        target = j + l
        if target <= total:
            out.append(FwdJump(l))
        elif s.finite:
            out.append(FwdJump(0))
        else:
            wrapped = lp + (target - lp - 1) % per + 1
            if wrapped > j:
                out.append(FwdJump(wrapped - j))
            elif wrapped < j:
                out.append(RelBack(j - wrapped))
            else:
                # the jump only ever reaches copies of itself
                out.append(FwdJump(0))
    if s.finite:
        overhang = 0
        last = s.prefix[-1]
        if isinstance(last, (Plain, Put)):
            overhang = 1
        elif isinstance(last, (PosTest, NegTest)):
            overhang = 2
        if lp >= 2 and isinstance(s.prefix[-2], (PosTest, NegTest)):
            overhang = max(overhang, 1)
        out.extend([FwdJump(0)] * overhang)
    else:
        out.append(RelBack(per))
        if isinstance(s.period[-1], (PosTest, NegTest)):
            # skip target of a test ending the copy wraps into the period
            out.append(RelBack(per if per >= 2 else 2))
    return PglcProgram(tuple(out))


# === closed block -> PGLD ===


def pglc_to_pgld(p: PglcProgram | tuple) -> PgldProgram:
    """Resolve relative jumps at their positions into absolute jumps."""
    instructions = p.instructions if isinstance(p, PglcProgram) else tuple(p)
    out: list[AnyInstruction] = []
    for j, u in enumerate(instructions, start=1):
        if isinstance(u, FwdJump):
            out.append(AbsJump(j + u.counter if u.counter else j))
        elif isinstance(u, RelBack):
            if u.offset >= j:
                raise ValueError(f"unanchored backward jump at position {j}")
            out.append(AbsJump(j - u.offset if u.offset else j))
        elif isinstance(u, Halt):
            out.append(AbsJump(0))
        else:
            out.append(u)
    return PgldProgram(tuple(out))


def pglc_to_pga(p: PglcProgram) -> InstructionStream:
    """Stream semantics of a closed block.

    Without backward jumps the block already reads as a finite stream; with
    them, the block is routed through the absolute-jump notation and its
    projection.
    """
    if any(isinstance(u, RelBack) and u.offset for u in p.instructions):
        return normalize(pgld_to_pga(pglc_to_pgld(p)))
    fixed = tuple(FwdJump(0) if isinstance(u, RelBack) else u for u in p.instructions)
    return InstructionStream(fixed)


# === text ===


def parse_pgld(text: str, line: int | None = None) -> PgldProgram:
    instrs = parse_instructions(text, line)
    for u in instrs:
        if isinstance(u, (FwdJump, RelBack, Halt)):
            raise ParseError(f"{render(u)!r} is not a PGLD instruction", line)
    return PgldProgram(tuple(instrs))


def parse_pglc(text: str, line: int | None = None) -> PglcProgram:
    instrs = parse_instructions(text, line)
    for u in instrs:
        if isinstance(u, AbsJump):
            raise ParseError("absolute jumps are not block instructions", line)
    try:
        return PglcProgram(tuple(instrs))
    except ValueError as exc:
        raise ParseError(str(exc), line) from None


def format_pgld(p: PgldProgram) -> str:
    return render_program(p.instructions)


def format_pglc(p: PglcProgram) -> str:
    return render_program(p.instructions)
