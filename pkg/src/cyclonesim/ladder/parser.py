"""Text format for ladder programs.

Grammar (# starts a comment running to end of line):

    program   := decl* rung*
    decl      := "VAR" ident ":" ("BOOL" | "REAL") ";"
               | "TIMER" ident "PRESET" int ";"
    rung      := "RUNG" ":" element* "=>" target ";"
    element   := "NO" ident | "NC" ident
               | "CMP" ident op number
               | "TON" ident
               | "OR" "(" branch ("," branch)* ")"
    branch    := element+
    target    := ("COIL" | "SET" | "RESET") ident
    op        := "<" | "<=" | ">" | ">="

Adjacent elements are a series (AND) connection. All declarations must
precede the first rung. Anything outside the grammar is rejected;
parsing either yields a validated program or a list of diagnostics,
never both.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .ast import (
    COMPARE_OPS,
    Compare,
    Contact,
    Element,
    LadderProgram,
    OrGroup,
    Rung,
    TargetKind,
    TimerOn,
    VarType,
)

KEYWORDS = frozenset(
    "VAR TIMER PRESET RUNG NO NC CMP TON OR COIL SET RESET BOOL REAL".split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[+-]?(\d+(\.\d+)?|\.\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>=>|<=|>=|[:;,()<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    line: int | None = None
    col: int | None = None

    def __str__(self) -> str:
        if self.line is not None:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | "punct" | "eof"
    text: str
    line: int
    col: int


@dataclass
class ParseResult:
    program: LadderProgram | None
    diagnostics: list[Diagnostic] = field(default_factory=list)


class _LexError(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def _lex(source: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise _LexError(
                Diagnostic(f"unexpected character {source[pos]!r}", line, col)
            )
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _SyntaxError(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self.variables: dict[str, VarType] = {}
        self.timer_presets: dict[str, int] = {}
        self.rungs: list[Rung] = []
        self.saw_rung = False

    # -- token plumbing --------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> _SyntaxError:
        tok = tok or self.peek()
        return _SyntaxError(Diagnostic(message, tok.line, tok.col))

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text or 'end of file'!r}")
        return self.advance()

    def expect_ident(self, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise self.error(f"expected {what}, found {tok.text or 'end of file'!r}")
        return self.advance()

    def declared(self, name: str) -> bool:
        return name in self.variables or name in self.timer_presets

    def note(self, message: str, tok: _Token) -> None:
        self.diags.append(Diagnostic(message, tok.line, tok.col))

    def synchronize(self) -> None:
        """Skip past the next ';' so later statements still get checked."""
        while True:
            tok = self.advance()
            if tok.kind == "eof" or tok.text == ";":
                return

    # -- statements -------------------------------------------------------

    def parse(self) -> None:
        while self.peek().kind != "eof":
            tok = self.peek()
            try:
                if tok.text == "VAR":
                    self.parse_var()
                elif tok.text == "TIMER":
                    self.parse_timer()
                elif tok.text == "RUNG":
                    self.saw_rung = True
                    self.parse_rung()
                else:
                    raise self.error(
                        f"expected VAR, TIMER, or RUNG, found {tok.text!r}"
                    )
            except _SyntaxError as exc:
                self.diags.append(exc.diag)
                self.synchronize()

    def check_decl_position(self, tok: _Token) -> None:
        if self.saw_rung:
            self.note("declarations must precede the first RUNG", tok)

    def parse_var(self) -> None:
        kw = self.advance()
        self.check_decl_position(kw)
        name = self.expect_ident("a variable name")
        self.expect(":")
        type_tok = self.advance()
        if type_tok.text not in ("BOOL", "REAL"):
            raise self.error("expected BOOL or REAL", type_tok)
        self.expect(";")
        if self.declared(name.text):
            self.note(f"duplicate declaration of {name.text!r}", name)
        else:
            self.variables[name.text] = VarType[type_tok.text]

    def parse_timer(self) -> None:
        kw = self.advance()
        self.check_decl_position(kw)
        name = self.expect_ident("a timer name")
        self.expect("PRESET")
        num = self.peek()
        if num.kind != "number":
            raise self.error("expected a preset in milliseconds", num)
        self.advance()
        self.expect(";")
        if not re.fullmatch(r"\d+", num.text) or int(num.text) <= 0:
            self.note("timer preset must be a positive integer (milliseconds)", num)
            return
        if self.declared(name.text):
            self.note(f"duplicate declaration of {name.text!r}", name)
        else:
            self.timer_presets[name.text] = int(num.text)

    def parse_rung(self) -> None:
        self.advance()  # RUNG
        self.expect(":")
        elements = []
        while self.peek().text not in ("=>", ";") and self.peek().kind != "eof":
            elements.append(self.parse_element())
        self.expect("=>")
        kind_tok = self.advance()
        if kind_tok.text not in ("COIL", "SET", "RESET"):
            raise self.error("expected COIL, SET, or RESET", kind_tok)
        target = self.expect_ident("an output name")
        self.expect(";")
        self.check_target(target)
        self.rungs.append(
            Rung(tuple(elements), TargetKind[kind_tok.text], target.text)
        )

    # -- elements ----------------------------------------------------------

    def parse_element(self) -> Element:
        tok = self.advance()
        if tok.text in ("NO", "NC"):
            name = self.expect_ident("a contact name")
            self.check_contact(name)
            return Contact(name.text, negated=(tok.text == "NC"))
        if tok.text == "CMP":
            name = self.expect_ident("a REAL variable")
            self.check_real(name)
            op = self.peek()
            if op.text not in COMPARE_OPS:
                raise self.error("expected <, <=, >, or >=", op)
            self.advance()
            num = self.peek()
            if num.kind != "number":
                raise self.error("expected a number", num)
            self.advance()
            return Compare(name.text, op.text, float(num.text))
        if tok.text == "TON":
            name = self.expect_ident("a timer name")
            self.check_timer(name)
            return TimerOn(name.text)
        if tok.text == "OR":
            self.expect("(")
            branches = [self.parse_branch()]
            while self.peek().text == ",":
                self.advance()
                branches.append(self.parse_branch())
            self.expect(")")
            return OrGroup(tuple(branches))
        raise self.error(f"expected a rung element, found {tok.text!r}", tok)

    def parse_branch(self) -> tuple[Element, ...]:
        elements = []
        while self.peek().text not in (",", ")") and self.peek().kind != "eof":
            elements.append(self.parse_element())
        if not elements:
            raise self.error("empty OR branch")
        return tuple(elements)

    # -- reference checks (location-aware; validate() repeats them) --------

    def check_contact(self, tok: _Token) -> None:
        name = tok.text
        if name in self.timer_presets:
            return
        if name not in self.variables:
            self.note(f"unknown identifier {name!r}", tok)
        elif self.variables[name] is not VarType.BOOL:
            self.note(f"{name!r} is a REAL and cannot be used as a contact", tok)

    def check_real(self, tok: _Token) -> None:
        name = tok.text
        if name not in self.variables:
            self.note(f"unknown identifier {name!r}", tok)
        elif self.variables[name] is not VarType.REAL:
            self.note(f"CMP needs a REAL variable, {name!r} is not one", tok)

    def check_timer(self, tok: _Token) -> None:
        if tok.text not in self.timer_presets:
            if self.declared(tok.text):
                self.note(f"TON needs a TIMER, {tok.text!r} is not one", tok)
            else:
                self.note(f"unknown identifier {tok.text!r}", tok)

    def check_target(self, tok: _Token) -> None:
        name = tok.text
        if name not in self.variables:
            if name in self.timer_presets:
                self.note(f"coil target {name!r} must be BOOL, not a timer", tok)
            else:
                self.note(f"unknown identifier {name!r}", tok)
        elif self.variables[name] is not VarType.BOOL:
            self.note(f"coil target {name!r} must be BOOL", tok)


def parse_ladder(source: str) -> ParseResult:
    """Parse and validate source. Never returns a partial program."""
    try:
        tokens = _lex(source)
    except _LexError as exc:
        return ParseResult(None, [exc.diag])
    parser = _Parser(tokens)
    parser.parse()
    if parser.diags:
        return ParseResult(None, parser.diags)
    program = LadderProgram(
        variables=parser.variables,
        timer_presets=parser.timer_presets,
        rungs=tuple(parser.rungs),
    )
    problems = validate(program)
    if problems:
        return ParseResult(None, problems)
    return ParseResult(program, [])


def validate(program: LadderProgram) -> list[Diagnostic]:
    """Check program invariants; empty list means the program is sound.

    Works on programs built in code as well as parsed ones, so messages
    locate problems by 1-based rung index rather than source line.
    """
    diags: list[Diagnostic] = []

    def bad(message: str) -> None:
        diags.append(Diagnostic(message))

    for name, preset in program.timer_presets.items():
        if name in program.variables:
            bad(f"{name!r} declared as both a variable and a timer")
        if not isinstance(preset, int) or preset <= 0:
            bad(f"timer {name!r} preset must be a positive integer, got {preset!r}")

    coil_writers: dict[str, int] = {}
    latch_targets: set[str] = set()
    timer_drivers: dict[str, int] = {}

    def check_elements(elements, where: str) -> None:
        for el in elements:
            if isinstance(el, Contact):
                if el.name in program.timer_presets:
                    continue
                var = program.variables.get(el.name)
                if var is None:
                    bad(f"{where}: unknown identifier {el.name!r}")
                elif var is not VarType.BOOL:
                    bad(f"{where}: contact {el.name!r} must be BOOL or a timer")
            elif isinstance(el, Compare):
                if program.variables.get(el.name) is not VarType.REAL:
                    bad(f"{where}: CMP needs a REAL variable, got {el.name!r}")
                if el.op not in COMPARE_OPS:
                    bad(f"{where}: bad comparison operator {el.op!r}")
                if not isinstance(el.value, (int, float)) or not math.isfinite(el.value):
                    bad(f"{where}: comparison constant must be finite, got {el.value!r}")
            elif isinstance(el, TimerOn):
                if el.name not in program.timer_presets:
                    bad(f"{where}: TON needs a declared TIMER, got {el.name!r}")
                elif el.name in timer_drivers:
                    bad(
                        f"{where}: timer {el.name!r} already driven by a TON "
                        f"in rung {timer_drivers[el.name]}"
                    )
                else:
                    timer_drivers[el.name] = current_rung
            elif isinstance(el, OrGroup):
                if not el.branches:
                    bad(f"{where}: OR group with no branches")
                for branch in el.branches:
                    if not branch:
                        bad(f"{where}: empty OR branch")
                    check_elements(branch, where)
            else:
                bad(f"{where}: unknown element {el!r}")

    for index, rung in enumerate(program.rungs, start=1):
        current_rung = index
        where = f"rung {index}"
        check_elements(rung.elements, where)
        name = rung.target
        if program.variables.get(name) is not VarType.BOOL:
            bad(f"{where}: coil target {name!r} must be a declared BOOL")
            continue
        if rung.target_kind is TargetKind.COIL:
            if name in coil_writers:
                bad(
                    f"{where}: coil {name!r} already written by rung "
                    f"{coil_writers[name]}"
                )
            elif name in latch_targets:
                bad(f"{where}: coil {name!r} mixes COIL with SET/RESET")
            else:
                coil_writers[name] = index
        else:
            if name in coil_writers:
                bad(f"{where}: coil {name!r} mixes COIL with SET/RESET")
            latch_targets.add(name)

    return diags


def to_source(program: LadderProgram) -> str:
    """Render a program in canonical text form; reparses to an equal AST."""
    lines = []
    for name, var_type in program.variables.items():
        lines.append(f"VAR {name} : {var_type.value} ;")
    for name, preset in program.timer_presets.items():
        lines.append(f"TIMER {name} PRESET {preset} ;")
    for rung in program.rungs:
        body = _render_elements(rung.elements)
        words = ["RUNG", ":"]
        if body:
            words.append(body)
        words += ["=>", rung.target_kind.value, rung.target, ";"]
        lines.append(" ".join(words))
    return "\n".join(lines) + ("\n" if lines else "")


def _render_elements(elements) -> str:
    parts = []
    for el in elements:
        if isinstance(el, Contact):
            parts.append(f"{'NC' if el.negated else 'NO'} {el.name}")
        elif isinstance(el, Compare):
            parts.append(f"CMP {el.name} {el.op} {el.value!r}")
        elif isinstance(el, TimerOn):
            parts.append(f"TON {el.name}")
        elif isinstance(el, OrGroup):
            inner = " , ".join(_render_elements(b) for b in el.branches)
            parts.append(f"OR( {inner} )")
    return " ".join(parts)
