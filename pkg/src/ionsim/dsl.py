"""Text format for pulse programs (suffix .iqp).

A program file starts with a header line

    ions N modes M cutoff=K

followed by one instruction per line. `#` starts a comment. Conditional
blocks use braces:

    if c0==1 {
      pulse RC ion=2 theta=pi phi=0
    }

Angle and duration values are arithmetic expressions over numbers, `pi`,
`sqrt2` and `sqrt(...)`. Bare numbers may carry an SI suffix: time
suffixes (s, ms, us, ns) scale to seconds, frequency suffixes (Hz, kHz,
MHz, GHz) convert an ordinary frequency to the angular one used
internally (factor 2*pi).

`gate` lines are expanded into their pulse sequences while parsing, so
the printed form of a parsed program contains only primitive
instructions. Printing and re-parsing always yields a structurally
equal program.

All failures are positioned: lexical and syntax problems report line
and column, semantic problems (bad ion index, unmatched hide, a
condition on an unwritten bit) report the instruction index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import gates
from .program import (AcPhase, Bichromatic, GeometricForce, Hide, IfBit,
                      Measure, ModePhase, PulseBlue, PulseCarrier, PulseRed,
                      PulseProgram, StarkZ, Unhide, Wait)

PI = math.pi


class DslError(ValueError):
    """Positioned diagnostic. line/col for text problems (1-based),
    index for semantic problems with an already-parsed instruction."""

    def __init__(self, message, *, line=None, col=None, index=None):
        self.message = message
        self.line = line
        self.col = col
        self.index = index
        super().__init__(str(self))

    def __str__(self):
        if self.line is not None and self.col is not None:
            return f"line {self.line}, col {self.col}: {self.message}"
        if self.line is not None:
            return f"line {self.line}: {self.message}"
        if self.index is not None:
            return f"instruction {self.index}: {self.message}"
        return self.message


# -------------------------------------------------------------- lexing

_WORD_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD_CHARS = _WORD_START | set("0123456789")
_DIGITS = set("0123456789")
_PUNCT = set("=,{}()*/+-")

# value multipliers for suffixed numbers
_TIME_SUFFIX = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_FREQ_SUFFIX = {"Hz": 2.0 * PI, "kHz": 2.0 * PI * 1e3,
                "MHz": 2.0 * PI * 1e6, "GHz": 2.0 * PI * 1e9}
_SUFFIX = {**_TIME_SUFFIX, **_FREQ_SUFFIX}


@dataclass(frozen=True)
class _Tok:
    kind: str    # word | num | punct | eq (for ==)
    text: str
    line: int
    col: int
    value: float = 0.0


def _lex_line(text: str, line_no: int) -> list:
    """Tokenize one line (comment already stripped)."""
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r":
            i += 1
            continue
        col = i + 1
        if ch in _WORD_START:
            j = i + 1
            while j < n and text[j] in _WORD_CHARS:
                j += 1
            toks.append(_Tok("word", text[i:j], line_no, col))
            i = j
            continue
        if ch in _DIGITS or (ch == "." and i + 1 < n and text[i + 1] in _DIGITS):
            j = i
            while j < n and text[j] in _DIGITS:
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j] in _DIGITS:
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k] in _DIGITS:
                    j = k
                    while j < n and text[j] in _DIGITS:
                        j += 1
            lit = text[i:j]
            # optional unit suffix glued to the number
            mult = None
            for suf in sorted(_SUFFIX, key=len, reverse=True):
                if text.startswith(suf, j):
                    end = j + len(suf)
                    if end == n or text[end] not in _WORD_CHARS:
                        mult = _SUFFIX[suf]
                        lit_text = text[i:end]
                        j = end
                        break
            value = float(lit)
            if mult is not None:
                value *= mult
                toks.append(_Tok("num", lit_text, line_no, col, value))
            else:
                toks.append(_Tok("num", lit, line_no, col, value))
            i = j
            continue
        if ch == "=" and i + 1 < n and text[i + 1] == "=":
            toks.append(_Tok("eq", "==", line_no, col))
            i += 2
            continue
        if ch in _PUNCT:
            toks.append(_Tok("punct", ch, line_no, col))
            i += 1
            continue
        raise DslError(f"unexpected character {ch!r}", line=line_no, col=col)
    return toks


# -------------------------------------------- expression evaluation

class _Cursor:
    def __init__(self, toks, line_no, names=None):
        self.toks = toks
        self.pos = 0
        self.line = line_no
        # extra name -> value bindings usable in expressions
        self.names = names if names is not None else {}

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        t = self.peek()
        if t is not None:
            self.pos += 1
        return t

    def fail(self, message, tok=None):
        tok = tok if tok is not None else self.peek()
        col = tok.col if tok is not None else (
            self.toks[-1].col + len(self.toks[-1].text) if self.toks else 1)
        raise DslError(message, line=self.line, col=col)

    def expect_punct(self, ch):
        t = self.peek()
        if t is None or t.kind != "punct" or t.text != ch:
            self.fail(f"expected {ch!r}")
        return self.next()


def _is_punct(tok, ch):
    return tok is not None and tok.kind == "punct" and tok.text == ch


def _expr(cur: _Cursor) -> float:
    val = _term(cur)
    while _is_punct(cur.peek(), "+") or _is_punct(cur.peek(), "-"):
        op = cur.next().text
        rhs = _term(cur)
        val = val + rhs if op == "+" else val - rhs
    return val


def _term(cur: _Cursor) -> float:
    val = _factor(cur)
    while _is_punct(cur.peek(), "*") or _is_punct(cur.peek(), "/"):
        op = cur.next()
        rhs = _factor(cur)
        if op.text == "*":
            val = val * rhs
        else:
            if rhs == 0.0:
                cur.fail("division by zero", op)
            val = val / rhs
    return val


def _factor(cur: _Cursor) -> float:
    sign = 1.0
    while _is_punct(cur.peek(), "-") or _is_punct(cur.peek(), "+"):
        if cur.next().text == "-":
            sign = -sign
    t = cur.peek()
    if t is None:
        cur.fail("expected a number")
    if t.kind == "num":
        cur.next()
        return sign * t.value
    if t.kind == "word":
        if t.text == "pi":
            cur.next()
            return sign * PI
        if t.text == "sqrt2":
            cur.next()
            return sign * math.sqrt(2.0)
        if t.text == "sqrt":
            cur.next()
            cur.expect_punct("(")
            inner = _expr(cur)
            cur.expect_punct(")")
            if inner < 0.0:
                cur.fail("sqrt of a negative value", t)
            return sign * math.sqrt(inner)
        if t.text in cur.names:
            cur.next()
            return sign * cur.names[t.text]
        cur.fail(f"unknown name {t.text!r} in expression", t)
    if _is_punct(t, "("):
        cur.next()
        inner = _expr(cur)
        cur.expect_punct(")")
        return sign * inner
    cur.fail(f"unexpected token {t.text!r} in expression", t)


# ---------------------------------------------------- key=value forms

def _parse_pairs(cur: _Cursor) -> dict:
    """Parse `key=value ...` to end of line. Values stay as raw token
    slices; typed conversion happens per key."""
    pairs = {}
    while cur.peek() is not None:
        t = cur.peek()
        if t.kind != "word":
            cur.fail(f"expected key=value, got {t.text!r}")
        key = cur.next()
        if key.text in pairs:
            cur.fail(f"duplicate key {key.text!r}", key)
        cur.expect_punct("=")
        start = cur.pos
        depth = 0
        while cur.peek() is not None:
            t2 = cur.peek()
            if _is_punct(t2, "("):
                depth += 1
            elif _is_punct(t2, ")"):
                depth -= 1
            elif t2.kind == "word" and depth == 0 and cur.pos > start:
                # a bare word at depth 0 begins the next key unless it is
                # part of an expression (pi, sqrt...), which only follows
                # an operator
                prev = cur.toks[cur.pos - 1]
                if not (prev.kind == "punct" and prev.text in "*/+-(,"):
                    break
            cur.next()
        if cur.pos == start:
            cur.fail(f"missing value for key {key.text!r}", key)
        pairs[key.text] = (key, cur.toks[start:cur.pos])
    return pairs


class _Args:
    """Typed access to parsed key=value pairs with positioned errors."""

    def __init__(self, mnemonic: _Tok, pairs: dict, line_no: int,
                 names=None):
        self.mnemonic = mnemonic
        self.pairs = pairs
        self.line = line_no
        self.names = names if names is not None else {}
        self.used = set()

    def _take(self, key):
        self.used.add(key)
        return self.pairs.get(key)

    def _fail_at(self, tok, message):
        raise DslError(message, line=self.line, col=tok.col)

    def _require(self, key):
        got = self._take(key)
        if got is None:
            self._fail_at(self.mnemonic,
                          f"{self.mnemonic.text}: missing required key {key!r}")
        return got

    def expr(self, key, default=None):
        got = self._take(key) if default is not None else self._require(key)
        if got is None:
            return default
        key_tok, toks = got
        cur = _Cursor(toks, self.line, self.names)
        val = _expr(cur)
        if cur.peek() is not None:
            cur.fail(f"trailing tokens after value for {key!r}")
        if not math.isfinite(val):
            self._fail_at(key_tok, f"value for {key!r} is not finite")
        return val

    def integer(self, key, default=None):
        got = self._take(key)
        if got is None:
            if default is not None:
                return default
            self._fail_at(self.mnemonic,
                          f"{self.mnemonic.text}: missing required key {key!r}")
        key_tok, toks = got
        if len(toks) == 1 and toks[0].kind == "num":
            v = toks[0].value
            if v == int(v):
                return int(v)
        self._fail_at(key_tok, f"value for {key!r} must be an integer")

    def ion(self, key="ion", allow_all=False):
        got = self._require(key)
        key_tok, toks = got
        if allow_all and len(toks) == 1 and toks[0].kind == "word" \
                and toks[0].text == "all":
            return None
        if len(toks) == 1 and toks[0].kind == "num" \
                and toks[0].value == int(toks[0].value):
            return int(toks[0].value)
        what = "an integer or 'all'" if allow_all else "an integer"
        self._fail_at(key_tok, f"value for {key!r} must be {what}")

    def int_list(self, key, allow_all=False, default=None):
        got = self._take(key)
        if got is None:
            if default is not None or allow_all:
                return default
            self._fail_at(self.mnemonic,
                          f"{self.mnemonic.text}: missing required key {key!r}")
        key_tok, toks = got
        if allow_all and len(toks) == 1 and toks[0].kind == "word" \
                and toks[0].text == "all":
            return None
        out = []
        expect_num = True
        for t in toks:
            if expect_num:
                if t.kind != "num" or t.value != int(t.value):
                    self._fail_at(t, f"value for {key!r} must list integers")
                out.append(int(t.value))
                expect_num = False
            else:
                if not _is_punct(t, ","):
                    self._fail_at(t, f"expected ',' in list for {key!r}")
                expect_num = True
        if expect_num:
            self._fail_at(key_tok, f"trailing ',' in list for {key!r}")
        return tuple(out)

    def float_list(self, key, default=None):
        got = self._take(key)
        if got is None:
            return default
        key_tok, toks = got
        # split on top-level commas, evaluate each slice
        groups, cur_group, depth = [], [], 0
        for t in toks:
            if _is_punct(t, "("):
                depth += 1
            elif _is_punct(t, ")"):
                depth -= 1
            if _is_punct(t, ",") and depth == 0:
                groups.append(cur_group)
                cur_group = []
            else:
                cur_group.append(t)
        groups.append(cur_group)
        out = []
        for g in groups:
            if not g:
                self._fail_at(key_tok, f"empty element in list for {key!r}")
            cur = _Cursor(g, self.line, self.names)
            v = _expr(cur)
            if cur.peek() is not None:
                cur.fail(f"trailing tokens in list for {key!r}")
            if not math.isfinite(v):
                self._fail_at(key_tok, f"value for {key!r} is not finite")
            out.append(v)
        return tuple(out)

    def finish(self):
        for key, (key_tok, _) in self.pairs.items():
            if key not in self.used:
                self._fail_at(key_tok,
                              f"{self.mnemonic.text}: unknown key {key!r}")


# ------------------------------------------------------------ parsing

_PULSE_KINDS = {"RC", "RB", "RR"}

_GATE_BUILDERS = {
    "cnot": lambda a: gates.cirac_zoller_cnot(
        a.integer("control"), a.integer("target"), a.integer("mode", 0)),
    "cz": lambda a: gates.cz_gate(
        a.integer("control"), a.integer("target"), a.integer("mode", 0)),
    "phase": lambda a: gates.composite_phase_gate(
        a.integer("ion"), a.integer("mode", 0)),
    "swap": lambda a: gates.composite_swap(
        a.integer("ion"), a.integer("mode", 0),
        phase_offset=a.expr("offset", 0.0)),
    "addrflip": lambda a: gates.addressed_flip_composite(a.integer("ion")),
    "acphase": lambda a: gates.ac_stark_motional_phase_gate(
        a.integer("ion"), a.integer("mode", 0)),
    "ms": lambda a: (gates.ms_instruction(
        a.int_list("ions", default=(0, 1)), a.integer("mode", 0),
        eta=a.expr("eta", 0.1), delta=a.expr("delta", 0.0) or None,
        trap_freq=a.expr("trap", 2.0 * PI * 1.0e6),
        omega=a.expr("omega", 0.0) or None,
        loops=a.integer("loops", 1), ramp_frac=a.expr("ramp", 0.0)),),
    "geomphase": lambda a: (gates.geometric_phase_gate(
        a.int_list("ions", default=(0, 1)), a.integer("mode", 1),
        delta=a.expr("delta", 2.0 * PI * 20.0e3),
        loops=a.integer("loops", 1)),),
    "threephase": lambda a: (gates.three_phase_phase_gate(
        a.int_list("ions", default=(0, 1, 2)), a.integer("mode", 0),
        delta=a.expr("delta", 2.0 * PI * 20.0e3)),),
}


def _parse_header(cur: _Cursor):
    def expect_word(w):
        t = cur.peek()
        if t is None or t.kind != "word" or t.text != w:
            got = f", got {t.text!r}" if t is not None else ""
            cur.fail(f"expected {w!r} in header "
                     f"'ions N modes M cutoff=K'{got}")
        return cur.next()

    expect_word("ions")
    t = cur.next()
    if t is None or t.kind != "num" or t.value != int(t.value):
        cur.fail("expected ion count")
    n_ions = int(t.value)
    if n_ions < 1:
        raise DslError("ion count must be >= 1", line=cur.line, col=t.col)
    expect_word("modes")
    t = cur.next()
    if t is None or t.kind != "num" or t.value != int(t.value):
        cur.fail("expected mode count")
    n_modes = int(t.value)
    if n_modes < 0:
        raise DslError("mode count must be >= 0", line=cur.line, col=t.col)
    cutoffs = ()
    if n_modes > 0:
        expect_word("cutoff")
        cur.expect_punct("=")
        vals = []
        while True:
            t = cur.next()
            if t is None or t.kind != "num" or t.value != int(t.value):
                cur.fail("expected integer cutoff")
            if int(t.value) < 2:
                raise DslError("cutoff must be >= 2", line=cur.line, col=t.col)
            vals.append(int(t.value))
            if not _is_punct(cur.peek(), ","):
                break
            cur.next()
        if len(vals) == 1:
            cutoffs = (vals[0],) * n_modes
        elif len(vals) == n_modes:
            cutoffs = tuple(vals)
        else:
            cur.fail(f"{len(vals)} cutoffs for {n_modes} modes")
    if cur.peek() is not None:
        cur.fail("trailing tokens after header")
    return n_ions, cutoffs


_INSTRUCTION_WORDS = {"pulse", "gate", "starkz", "acphase", "modephase",
                      "wait", "hide", "unhide", "measure", "bichromatic",
                      "geomforce"}


def _parse_instruction(mnemonic: _Tok, cur: _Cursor, line_no: int):
    """Parse one non-block instruction line into a tuple of instructions
    (gate lines expand to several)."""
    name = mnemonic.text
    if name not in _INSTRUCTION_WORDS:
        raise DslError(f"unknown instruction, token {name!r}",
                       line=line_no, col=mnemonic.col)
    if name == "pulse":
        kind_tok = cur.next()
        if kind_tok is None or kind_tok.kind != "word" \
                or kind_tok.text not in _PULSE_KINDS:
            got = kind_tok.text if kind_tok is not None else "end of line"
            raise DslError(f"expected pulse kind RC, RB or RR, got {got!r}",
                           line=line_no,
                           col=kind_tok.col if kind_tok else mnemonic.col)
        args = _Args(kind_tok, _parse_pairs(cur), line_no, cur.names)
        if kind_tok.text == "RC":
            ion = args.ion(allow_all=True)
            ins = PulseCarrier(ion, args.expr("theta"), args.expr("phi"))
        else:
            cls = PulseBlue if kind_tok.text == "RB" else PulseRed
            ins = cls(args.ion(), args.expr("theta"), args.expr("phi"),
                      mode=args.integer("mode", 0),
                      order=args.integer("order", 1))
        args.finish()
        return (ins,)
    if name == "gate":
        gate_tok = cur.next()
        if gate_tok is None or gate_tok.kind != "word":
            raise DslError("expected a gate name", line=line_no,
                           col=gate_tok.col if gate_tok else mnemonic.col)
        builder = _GATE_BUILDERS.get(gate_tok.text)
        if builder is None:
            known = ", ".join(sorted(_GATE_BUILDERS))
            raise DslError(f"unknown gate {gate_tok.text!r}; "
                           f"known gates: {known}",
                           line=line_no, col=gate_tok.col)
        args = _Args(gate_tok, _parse_pairs(cur), line_no, cur.names)
        try:
            seq = builder(args)
        except DslError:
            raise
        except Exception as exc:   # builder contract violations
            raise DslError(f"gate {gate_tok.text}: {exc}",
                           line=line_no, col=gate_tok.col) from exc
        args.finish()
        return tuple(seq)
    args = _Args(mnemonic, _parse_pairs(cur), line_no, cur.names)
    if name == "starkz":
        ins = StarkZ(args.ion(), args.expr("phi"))
    elif name == "acphase":
        ins = AcPhase(args.ion(), args.integer("mode", 0), args.expr("theta"))
    elif name == "modephase":
        ins = ModePhase(args.integer("mode"), args.expr("phi"))
    elif name == "wait":
        ins = Wait(args.expr("t"))
    elif name == "hide":
        ins = Hide(args.ion())
    elif name == "unhide":
        ins = Unhide(args.ion())
    elif name == "measure":
        ins = Measure(args.int_list("ions", allow_all=True))
    elif name == "bichromatic":
        ins = Bichromatic(args.int_list("ions"), args.integer("mode", 0),
                          delta=args.expr("delta"), omega=args.expr("omega"),
                          duration=args.expr("duration"),
                          eta=args.expr("eta"),
                          trap_freq=args.expr("trap", 2.0 * PI * 1.0e6),
                          ramp_frac=args.expr("ramp", 0.0))
    else:
        ions = args.int_list("ions")
        ins = GeometricForce(ions, args.integer("mode", 0),
                             delta=args.expr("delta"),
                             duration=args.expr("duration"),
                             g=args.expr("g"),
                             f_up=args.expr("fup", 1.0),
                             f_down=args.expr("fdown", -2.0),
                             xi=args.float_list("xi", (0.0,) * len(ions)))
    args.finish()
    return (ins,)


def _parse_if_open(cur: _Cursor, line_no: int):
    """`if cN==V {` -> (ion, value). The brace must close the line."""
    t = cur.next()
    if t is None or t.kind != "word" or not t.text.startswith("c") \
            or not t.text[1:].isdigit():
        raise DslError("expected a classical bit like c0 after 'if'",
                       line=line_no, col=t.col if t else 1)
    ion = int(t.text[1:])
    t2 = cur.peek()
    if t2 is None or t2.kind != "eq":
        cur.fail("expected '==' in condition")
    cur.next()
    t3 = cur.next()
    if t3 is None or t3.kind != "num" or t3.value not in (0.0, 1.0):
        raise DslError("condition value must be 0 or 1",
                       line=line_no, col=t3.col if t3 else 1)
    cur.expect_punct("{")
    if cur.peek() is not None:
        cur.fail("trailing tokens after '{'")
    return ion, int(t3.value)


_RESERVED_NAMES = ("pi", "sqrt2", "sqrt")


def parse(text, *, names=None) -> PulseProgram:
    """Parse .iqp text to a validated PulseProgram.

    `names` maps extra identifiers to numbers usable in any value
    expression, which is how scanned parameters enter a program file.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8", errors="replace")
    if names:
        for k in names:
            if k in _RESERVED_NAMES:
                raise ValueError(f"binding {k!r} shadows a builtin name")
        names = {str(k): float(v) for k, v in names.items()}
    header = None
    # stack of open instruction lists; [0] is the program body
    body = []
    stack = [body]
    if_spec = []   # (ion, value, line) per open block
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _lex_line(line, line_no)
        if not toks:
            continue
        cur = _Cursor(toks, line_no, names)
        if header is None:
            header = _parse_header(cur)
            continue
        first = cur.peek()
        if _is_punct(first, "}"):
            cur.next()
            if cur.peek() is not None:
                cur.fail("trailing tokens after '}'")
            if len(stack) == 1:
                raise DslError("'}' without an open block",
                               line=line_no, col=first.col)
            block = stack.pop()
            ion, value, _ = if_spec.pop()
            stack[-1].append(IfBit(ion, value, tuple(block)))
            continue
        if first.kind != "word":
            raise DslError(f"expected an instruction, got {first.text!r}",
                           line=line_no, col=first.col)
        if first.text == "if":
            cur.next()
            ion, value = _parse_if_open(cur, line_no)
            if_spec.append((ion, value, line_no))
            stack.append([])
            continue
        mnemonic = cur.next()
        stack[-1].extend(_parse_instruction(mnemonic, cur, line_no))
        if cur.peek() is not None:
            cur.fail("trailing tokens after instruction")
    if header is None:
        raise DslError("missing header 'ions N modes M cutoff=K'",
                       line=max(1, text.count("\n") + 1), col=1)
    if len(stack) > 1:
        _, _, open_line = if_spec[-1]
        raise DslError("unclosed '{' block", line=open_line, col=1)
    n_ions, cutoffs = header
    prog = PulseProgram(n_ions=n_ions, cutoffs=cutoffs,
                        instructions=tuple(body))
    _check_semantics(prog)
    return prog


def load(path, *, names=None) -> PulseProgram:
    with open(path, "rb") as fh:
        return parse(fh.read(), names=names)


# ----------------------------------------------------- semantic checks

def _check_semantics(prog: PulseProgram) -> None:
    """Walk instructions in document order; report problems with the
    0-based instruction index. Hide/measure state is tracked statically
    on the unconditional path; conditional bodies get the same checks
    with the state they inherit."""
    n_ions = prog.n_ions
    n_modes = len(prog.cutoffs)
    counter = [0]

    def bad(idx, msg):
        raise DslError(msg, index=idx)

    def check_ion(idx, ion):
        if ion is None:
            return
        if not 0 <= ion < n_ions:
            bad(idx, f"ion {ion} out of range for {n_ions} ions")

    def check_mode(idx, mode):
        if not 0 <= mode < n_modes:
            bad(idx, f"mode {mode} out of range for {n_modes} modes")

    def walk(instrs, hidden, measured):
        for ins in instrs:
            idx = counter[0]
            counter[0] += 1
            if isinstance(ins, (PulseCarrier, StarkZ, Hide, Unhide)):
                check_ion(idx, ins.ion)
            if isinstance(ins, (PulseBlue, PulseRed, AcPhase)):
                check_ion(idx, ins.ion)
                check_mode(idx, ins.mode)
            if isinstance(ins, (PulseBlue, PulseRed)) and ins.order < 1:
                bad(idx, "sideband order must be >= 1")
            if isinstance(ins, ModePhase):
                check_mode(idx, ins.mode)
            if isinstance(ins, (Bichromatic, GeometricForce)):
                for ion in ins.ions:
                    check_ion(idx, ion)
                check_mode(idx, ins.mode)
            if isinstance(ins, Hide):
                if ins.ion in hidden:
                    bad(idx, f"ion {ins.ion} is already hidden")
                hidden.add(ins.ion)
            elif isinstance(ins, Unhide):
                if ins.ion not in hidden:
                    bad(idx, f"unhide of ion {ins.ion} without a prior hide")
                hidden.discard(ins.ion)
            elif isinstance(ins, Measure):
                if ins.ions is None:
                    targets = [i for i in range(n_ions) if i not in hidden]
                else:
                    for ion in ins.ions:
                        check_ion(idx, ion)
                        if ion in hidden:
                            bad(idx, f"measuring hidden ion {ion}")
                    targets = list(ins.ions)
                measured.update(targets)
            elif isinstance(ins, IfBit):
                check_ion(idx, ins.ion)
                if ins.ion not in measured:
                    bad(idx, f"condition on c{ins.ion} before it is measured")
                walk(ins.body, hidden, measured)

    walk(prog.instructions, set(), set())
    try:
        prog.validate()
    except DslError:
        raise
    except Exception as exc:
        raise DslError(str(exc), index=0) from exc


# ---------------------------------------------------------- formatting

# readable spellings for common angles, checked by exact float equality
_NUM_NAMES = {}
for _num, _den in ((1, 1), (1, 2), (1, 3), (1, 4), (1, 6), (1, 8), (1, 16),
                   (2, 1), (2, 3), (3, 2), (3, 4), (4, 3)):
    _val = _num * PI / _den
    _txt = "pi" if _num == 1 else f"{_num}*pi"
    if _den != 1:
        _txt += f"/{_den}"
    _NUM_NAMES.setdefault(_val, _txt)
    _NUM_NAMES.setdefault(-_val, "-" + _txt)
_NUM_NAMES.setdefault(PI / math.sqrt(2.0), "pi/sqrt2")
_NUM_NAMES.setdefault(2.0 * PI / math.sqrt(2.0), "2*pi/sqrt2")


def _fmt_num(x: float) -> str:
    x = float(x)
    if x in _NUM_NAMES:
        return _NUM_NAMES[x]
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _fmt_ion(ion) -> str:
    return "all" if ion is None else str(ion)


def _fmt_instruction(ins) -> str:
    if isinstance(ins, PulseCarrier):
        return (f"pulse RC ion={_fmt_ion(ins.ion)} "
                f"theta={_fmt_num(ins.theta)} phi={_fmt_num(ins.phi)}")
    if isinstance(ins, (PulseBlue, PulseRed)):
        kind = "RB" if isinstance(ins, PulseBlue) else "RR"
        extra = f" order={ins.order}" if ins.order != 1 else ""
        return (f"pulse {kind} ion={ins.ion} mode={ins.mode} "
                f"theta={_fmt_num(ins.theta)} phi={_fmt_num(ins.phi)}{extra}")
    if isinstance(ins, StarkZ):
        return f"starkz ion={ins.ion} phi={_fmt_num(ins.phi)}"
    if isinstance(ins, AcPhase):
        return (f"acphase ion={ins.ion} mode={ins.mode} "
                f"theta={_fmt_num(ins.theta)}")
    if isinstance(ins, ModePhase):
        return f"modephase mode={ins.mode} phi={_fmt_num(ins.phi)}"
    if isinstance(ins, Wait):
        return f"wait t={_fmt_num(ins.duration)}"
    if isinstance(ins, Hide):
        return f"hide ion={ins.ion}"
    if isinstance(ins, Unhide):
        return f"unhide ion={ins.ion}"
    if isinstance(ins, Measure):
        if ins.ions is None:
            return "measure ions=all"
        return "measure ions=" + ",".join(str(i) for i in ins.ions)
    if isinstance(ins, Bichromatic):
        ions = ",".join(str(i) for i in ins.ions)
        return (f"bichromatic ions={ions} mode={ins.mode} "
                f"delta={_fmt_num(ins.delta)} omega={_fmt_num(ins.omega)} "
                f"duration={_fmt_num(ins.duration)} eta={_fmt_num(ins.eta)} "
                f"trap={_fmt_num(ins.trap_freq)} "
                f"ramp={_fmt_num(ins.ramp_frac)}")
    if isinstance(ins, GeometricForce):
        ions = ",".join(str(i) for i in ins.ions)
        xi = ",".join(_fmt_num(x) for x in ins.xi)
        return (f"geomforce ions={ions} mode={ins.mode} "
                f"delta={_fmt_num(ins.delta)} "
                f"duration={_fmt_num(ins.duration)} g={_fmt_num(ins.g)} "
                f"fup={_fmt_num(ins.f_up)} fdown={_fmt_num(ins.f_down)} "
                f"xi={xi}")
    raise TypeError(f"cannot format {ins!r}")


def format_program(prog: PulseProgram) -> str:
    """Render a program as .iqp text; parse(format_program(p)) is
    structurally equal to p (layout and instructions)."""
    lines = [f"ions {prog.n_ions} modes {len(prog.cutoffs)}"
             + (f" cutoff={','.join(str(c) for c in prog.cutoffs)}"
                if prog.cutoffs else "")]

    def emit(instrs, depth):
        pad = "  " * depth
        for ins in instrs:
            if isinstance(ins, IfBit):
                lines.append(f"{pad}if c{ins.ion}=={ins.value} {{")
                emit(ins.body, depth + 1)
                lines.append(f"{pad}}}")
            else:
                lines.append(pad + _fmt_instruction(ins))

    emit(prog.instructions, 0)
    return "\n".join(lines) + "\n"


def dump(prog: PulseProgram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_program(prog))
