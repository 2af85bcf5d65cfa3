"""Textual modelling language for IOSA components (``.iosa`` files).

Example::

    clock x ~ exponential(2.0);

    automaton I1 {
      init s0 clocks {x};
      s0 --{x}, a!, {}--> s1;
      s1 --{}, c!!, {}--> s2;
    }

    system = I1 || I2 || I3;
    query m1 = mean_time_to(I3.s9);

Action direction and urgency come from the name suffix: ``a!`` output,
``a!!`` urgent output, ``a?`` input, ``a??`` urgent input; ``tau`` is the
silent urgent output.
"""

from __future__ import annotations

import dataclasses as d
import re

from .core import (
    INPUT,
    OUTPUT,
    TAU,
    Automaton,
    ClockDecl,
    Distribution,
    Label,
    ModelError,
    Transition,
    fmt_set,
)
from .sim.query import (
    KINDS,
    STEADY_FRACTION,
    And,
    Const,
    Fired,
    InState,
    Not,
    Or,
    Predicate,
    Query,
)

COMPLETE_INPUTS = "#complete-inputs"


class ParseError(ValueError):
    """Syntax or model error with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@d.dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"//[^\n]*"),
    ("PRAGMA", r"#[A-Za-z][A-Za-z0-9_-]*"),
    ("ARROW", r"-->"),
    ("DASHES", r"--"),
    ("NUMBER", r"[-+]?(?:inf\b|(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"),
    ("ACTION", r"[A-Za-z_][A-Za-z0-9_]*(?:!!|\?\?|!|\?)"),
    ("NAME", r"[A-Za-z_][A-Za-z0-9_]*(?:\|[A-Za-z_][A-Za-z0-9_]*)*"),
    ("OROR", r"\|\|"),
    ("ANDAND", r"&&"),
    ("PUNCT", r"[{}(),;~=.!@]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _TOKEN_SPEC))
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


@d.dataclass
class ModelFile:
    clocks: dict[str, ClockDecl]
    automata: dict[str, Automaton]
    system: tuple[str, ...] | None = None
    queries: dict[str, Query] = d.field(default_factory=dict)

    def system_automata(self) -> list[Automaton]:
        """Components of the system block, or every automaton in file order."""
        names = self.system if self.system is not None else tuple(self.automata)
        return [self.automata[n] for n in names]


@d.dataclass
class _RawAutomaton:
    name: str
    token: Token
    complete_inputs: bool = False
    local_clocks: dict[str, ClockDecl] = d.field(default_factory=dict)
    init: tuple[str, Token] | None = None
    init_clocks: list[Token] = d.field(default_factory=list)
    declared_states: list[Token] | None = None
    declared_actions: dict[str, Label] | None = None
    transitions: list[tuple[Token, Label, Token, list[Token], Token, list[Token]]] = d.field(
        default_factory=list
    )


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: Token | None = None) -> ParseError:
        token = token or self.current
        return ParseError(message, token.line, token.column)

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "EOF":
            self.pos += 1
        return token

    def check(self, text: str) -> bool:
        tok = self.current
        return tok.text == text and tok.kind in ("PUNCT", "NAME", "OROR", "ANDAND", "ARROW", "DASHES")

    def accept(self, text: str) -> Token | None:
        return self.advance() if self.check(text) else None

    def expect(self, text: str) -> Token:
        if not self.check(text):
            found = self.current.text or "end of file"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.current.kind != kind:
            found = self.current.text or "end of file"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def ident(self, what: str) -> Token:
        tok = self.expect_kind("NAME", what)
        if not _IDENT_RE.match(tok.text):
            raise self.error(f"invalid {what} {tok.text!r}", tok)
        return tok

    def number(self) -> float:
        tok = self.expect_kind("NUMBER", "number")
        return float(tok.text)

    def ident_set(self, what: str) -> list[Token]:
        self.expect("{")
        items: list[Token] = []
        if not self.check("}"):
            items.append(self.ident(what))
            while self.accept(","):
                items.append(self.ident(what))
        self.expect("}")
        return items

    # top level

    def parse_file(self) -> ModelFile:
        clocks: dict[str, ClockDecl] = {}
        clock_tokens: dict[str, Token] = {}
        raws: dict[str, _RawAutomaton] = {}
        system: tuple[str, ...] | None = None
        system_tokens: list[Token] = []
        queries: dict[str, Query] = {}
        while self.current.kind != "EOF":
            tok = self.current
            if self.check("clock"):
                decl, name_tok = self.clock_decl()
                if decl.id in clocks:
                    raise self.error(f"duplicate clock {decl.id!r}", name_tok)
                clocks[decl.id] = decl
                clock_tokens[decl.id] = name_tok
            elif self.check("automaton"):
                raw = self.automaton()
                if raw.name in raws:
                    raise self.error(f"duplicate automaton {raw.name!r}", raw.token)
                raws[raw.name] = raw
            elif self.check("system"):
                if system is not None:
                    raise self.error("duplicate system block")
                self.advance()
                self.expect("=")
                system_tokens = [self.ident("automaton name")]
                while self.accept("||"):
                    system_tokens.append(self.ident("automaton name"))
                self.expect(";")
                system = tuple(t.text for t in system_tokens)
            elif self.check("query"):
                self.advance()
                name = self.ident("query name")
                self.expect("=")
                query = self.query()
                self.expect(";")
                if name.text in queries:
                    raise self.error(f"duplicate query {name.text!r}", name)
                queries[name.text] = query
            else:
                raise self.error(f"unexpected {tok.text!r}; expected clock, automaton, system or query")
        automata = {name: _build(raw, clocks) for name, raw in raws.items()}
        for tok in system_tokens:
            if tok.text not in automata:
                raise self.error(f"system refers to unknown automaton {tok.text!r}", tok)
        return ModelFile(clocks, automata, system, queries)

    def clock_decl(self) -> tuple[ClockDecl, Token]:
        self.expect("clock")
        name = self.ident("clock name")
        self.expect("~")
        family = self.ident("distribution family")
        self.expect("(")
        params = [self.number()]
        while self.accept(","):
            params.append(self.number())
        self.expect(")")
        self.expect(";")
        try:
            dist = Distribution(family.text, tuple(params))
        except ModelError as exc:
            raise self.error(str(exc), family) from None
        return ClockDecl(name.text, dist), name

    def automaton(self) -> _RawAutomaton:
        self.expect("automaton")
        name = self.ident("automaton name")
        raw = _RawAutomaton(name.text, name)
        self.expect("{")
        while not self.accept("}"):
            tok = self.current
            if tok.kind == "EOF":
                raise self.error(f"unterminated automaton {name.text!r}")
            if tok.kind == "PRAGMA":
                if tok.text != COMPLETE_INPUTS:
                    raise self.error(f"unknown pragma {tok.text!r}")
                self.advance()
                raw.complete_inputs = True
            elif tok.kind == "NAME" and tok.text == "clock" and self.tokens[self.pos + 1].kind == "NAME":
                decl, name_tok = self.clock_decl()
                if decl.id in raw.local_clocks:
                    raise self.error(f"duplicate clock {decl.id!r}", name_tok)
                raw.local_clocks[decl.id] = decl
            elif tok.kind == "NAME" and tok.text == "init" and self.tokens[self.pos + 1].kind == "NAME":
                if raw.init is not None:
                    raise self.error("duplicate init declaration")
                self.advance()
                state = self.expect_kind("NAME", "state")
                raw.init = (state.text, state)
                if self.accept("clocks"):
                    raw.init_clocks = self.ident_set("clock")
                self.expect(";")
            elif tok.kind == "NAME" and tok.text == "states" and self.tokens[self.pos + 1].text == "{":
                if raw.declared_states is not None:
                    raise self.error("duplicate states declaration")
                self.advance()
                self.expect("{")
                states: list[Token] = []
                if not self.check("}"):
                    states.append(self.expect_kind("NAME", "state"))
                    while self.accept(","):
                        states.append(self.expect_kind("NAME", "state"))
                self.expect("}")
                self.expect(";")
                seen: set[str] = set()
                for st in states:
                    if st.text in seen:
                        raise self.error(f"duplicate state {st.text!r}", st)
                    seen.add(st.text)
                raw.declared_states = states
            elif tok.kind == "NAME" and tok.text == "actions" and self.tokens[self.pos + 1].text == "{":
                if raw.declared_actions is not None:
                    raise self.error("duplicate actions declaration")
                self.advance()
                self.expect("{")
                actions: dict[str, Label] = {}
                if not self.check("}"):
                    while True:
                        label, ltok = self.label()
                        if label.name in actions:
                            raise self.error(f"duplicate action {label.name!r}", ltok)
                        actions[label.name] = label
                        if not self.accept(","):
                            break
                self.expect("}")
                self.expect(";")
                raw.declared_actions = actions
            elif tok.kind == "NAME":
                raw.transitions.append(self.transition())
            else:
                raise self.error(f"unexpected {tok.text!r} in automaton {name.text!r}")
        return raw

    def label(self) -> tuple[Label, Token]:
        tok = self.current
        if tok.kind == "NAME" and tok.text == TAU:
            self.advance()
            return Label(TAU, OUTPUT, True), tok
        if tok.kind != "ACTION":
            raise self.error(f"expected action such as 'a!' or 'b??', found {tok.text!r}")
        self.advance()
        m = re.match(r"([A-Za-z_][A-Za-z0-9_]*)(.*)", tok.text)
        name, mark = m.group(1), m.group(2)
        if name == TAU:
            if mark != "!!":
                raise self.error("tau is an urgent output ('tau' or 'tau!!')", tok)
            return Label(TAU, OUTPUT, True), tok
        kind = OUTPUT if mark[0] == "!" else INPUT
        return Label(name, kind, len(mark) == 2), tok

    def transition(self) -> tuple[Token, Label, Token, list[Token], Token, list[Token]]:
        source = self.expect_kind("NAME", "state")
        self.expect_kind("DASHES", "'--'")
        trigger = self.ident_set("clock")
        self.expect(",")
        label, label_tok = self.label()
        self.expect(",")
        resets = self.ident_set("clock")
        self.expect_kind("ARROW", "'-->'")
        target = self.expect_kind("NAME", "state")
        self.expect(";")
        return source, label, label_tok, trigger, target, resets

    # queries

    def query(self) -> Query:
        kind = self.ident("query kind")
        if kind.text not in KINDS:
            raise self.error(f"unknown query kind {kind.text!r}; expected one of {', '.join(KINDS)}", kind)
        self.expect("(")
        pred = self.predicate()
        nums = []
        while self.accept(","):
            nums.append(self.number())
        close = self.expect(")")
        limit = 2 if kind.text == STEADY_FRACTION else 1
        if len(nums) > limit:
            raise self.error(f"too many arguments to {kind.text}", close)
        horizon = nums[0] if nums else None
        warmup = nums[1] if len(nums) > 1 else 0.0
        try:
            return Query(kind.text, pred, horizon, warmup)
        except ValueError as exc:
            raise self.error(str(exc), kind) from None

    def predicate(self) -> Predicate:
        left = self.conjunction()
        while self.accept("||"):
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Predicate:
        left = self.unary()
        while self.accept("&&"):
            left = And(left, self.unary())
        return left

    def unary(self) -> Predicate:
        if self.accept("!"):
            return Not(self.unary())
        if self.accept("("):
            inner = self.predicate()
            self.expect(")")
            return inner
        if self.accept("@"):
            tok = self.current
            if tok.kind == "NAME" and tok.text == TAU:
                self.advance()
                return Fired(TAU)
            return Fired(self.ident("action").text)
        tok = self.expect_kind("NAME", "predicate")
        if tok.text in ("true", "false"):
            return Const(tok.text == "true")
        if self.accept("."):
            state = self.expect_kind("NAME", "state")
            if not _IDENT_RE.match(tok.text):
                raise self.error(f"invalid component name {tok.text!r}", tok)
            return InState(tok.text, state.text)
        return InState(None, tok.text)


def _build(raw: _RawAutomaton, global_clocks: dict[str, ClockDecl]) -> Automaton:
    def err(message: str, tok: Token) -> ParseError:
        return ParseError(message, tok.line, tok.column)

    if raw.init is None:
        raise err(f"automaton {raw.name!r} has no init declaration", raw.token)
    for cid in raw.local_clocks:
        if cid in global_clocks:
            raise err(f"clock {cid!r} declared both globally and in {raw.name!r}", raw.token)

    clocks: dict[str, ClockDecl] = dict(raw.local_clocks)

    def clock(tok: Token) -> str:
        if tok.text in raw.local_clocks:
            return tok.text
        if tok.text in global_clocks:
            clocks[tok.text] = global_clocks[tok.text]
            return tok.text
        raise err(f"undeclared clock {tok.text!r}", tok)

    declared = None
    if raw.declared_states is not None:
        declared = {st.text for st in raw.declared_states}

    def state(tok: Token) -> str:
        if declared is not None and tok.text not in declared:
            raise err(f"undeclared state {tok.text!r}", tok)
        return tok.text

    labels: dict[str, Label] = dict(raw.declared_actions or {})
    states = [st.text for st in raw.declared_states] if raw.declared_states else []
    init_state = state(raw.init[1])
    states.append(init_state)
    init_clocks = [clock(c) for c in raw.init_clocks]

    transitions = []
    for source_tok, label, label_tok, trigger, target_tok, resets in raw.transitions:
        known = labels.get(label.name)
        if known is None:
            if raw.declared_actions is not None:
                raise err(f"undeclared action {label.name!r}", label_tok)
            labels[label.name] = label
        elif known != label:
            raise err(
                f"action {label.name!r} used as {label} but declared as {known}", label_tok
            )
        src, tgt = state(source_tok), state(target_tok)
        states.extend((src, tgt))
        transitions.append(
            Transition(
                src,
                frozenset(clock(c) for c in trigger),
                label.name,
                frozenset(clock(c) for c in resets),
                tgt,
            )
        )
    try:
        return Automaton(
            raw.name,
            states,
            labels.values(),
            clocks.values(),
            transitions,
            init_state,
            init_clocks,
            complete_inputs=raw.complete_inputs,
        )
    except ModelError as exc:
        raise err(str(exc), raw.token) from None


def parse_model(text: str | bytes) -> ModelFile:
    """Parse a model file; every failure is reported as a ``ParseError``."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text[: exc.start]).decode("utf-8", errors="replace")
            line = prefix.count("\n") + 1
            column = len(prefix) - (prefix.rfind("\n") + 1) + 1
            raise ParseError("invalid UTF-8", line, column) from None
    try:
        return _Parser(tokenize(text)).parse_file()
    except RecursionError:
        raise ParseError("expression nested too deeply", 1, 1) from None


def parse_automaton(text: str | bytes) -> Automaton:
    model = parse_model(text)
    if len(model.automata) != 1:
        raise ParseError(f"expected exactly one automaton, found {len(model.automata)}", 1, 1)
    return next(iter(model.automata.values()))


def _label_text(automaton: Automaton, name: str) -> str:
    return str(automaton.labels[name])


def serialize(automaton: Automaton) -> str:
    """Canonical text of one automaton: sorted, one transition per line."""
    lines = [f"automaton {automaton.name} {{"]
    if automaton.complete_inputs:
        lines.append(f"  {COMPLETE_INPUTS}")
    for decl in automaton.clocks.values():
        lines.append(f"  clock {decl.id} ~ {decl.distribution};")
    lines.append("  actions {" + ", ".join(str(l) for l in automaton.labels.values()) + "};")
    lines.append("  states " + fmt_set(automaton.states) + ";")
    init = f"  init {automaton.initial_state}"
    if automaton.initial_clocks:
        init += " clocks " + fmt_set(automaton.initial_clocks)
    lines.append(init + ";")
    for tr in sorted(automaton.transitions, key=lambda tr: tr.sort_key):
        lines.append(
            f"  {tr.source} --{fmt_set(tr.trigger)}, {_label_text(automaton, tr.label)}, "
            f"{fmt_set(tr.resets)}--> {tr.target};"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_model(model: ModelFile) -> str:
    """Canonical text of a whole model file.

    Clocks referenced by each automaton are written inside its block, so
    the output never has top-level clock declarations.
    """
    parts = [serialize(a) for a in model.automata.values()]
    tail = []
    if model.system is not None:
        tail.append("system = " + " || ".join(model.system) + ";")
    for name, query in model.queries.items():
        tail.append(f"query {name} = {query.text()};")
    if tail:
        parts.append("\n".join(tail) + "\n")
    return "\n".join(parts)
