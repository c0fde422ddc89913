"""Reader and writer for the line-oriented spec document format.

See ``docs/grammar.md`` for the grammar.  A short example::

    [meta]
    d = 1
    m = 2
    T = 1
    state_space = R

    [drift]
    1: t - x

    [diffusion]
    11: 1

Every failure is reported as :class:`~polymag.errors.SpecError` carrying a
line and column.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from ..errors import SpecError
from ..genmat import MAX_DEGREE, ProcessSpec, StateSpace, validate_spec
from ..kernels import SAMPLERS, make_sampler
from ..timefuncs import ONE, T_IDENTITY, TimeCoefficient, TimePoly

SECTIONS = ("meta", "drift", "diffusion", "jump_moments", "sampler")
MAX_POWER = 64
MAX_NESTING = 64

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*^();:,]|·|−)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(text: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise SpecError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = mt.lastgroup
        if kind != "ws":
            tok = mt.group()
            if tok == "·":
                tok = "*"
            elif tok == "−":
                tok = "-"
            toks.append(_Tok(kind, tok, col0 + pos))
        pos = mt.end()
    toks.append(_Tok("end", "", col0 + len(text)))
    return toks


class _ExprParser:
    """Recursive descent over one expression; values are :class:`TimePoly`."""

    def __init__(self, text: str, d: int, line: int, col0: int = 1):
        self.d = d
        self.line = line
        self.toks = _tokenize(text, line, col0)
        self.i = 0
        self.depth = 0

    def error(self, msg, tok=None):
        tok = tok or self.toks[self.i]
        return SpecError(msg, self.line, tok.col)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self, text=None, kind=None) -> _Tok:
        tok = self.tok
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(tok.text) if tok.kind != "end" else "end of expression"
            raise self.error(f"expected {want}, got {got}")
        self.i += 1
        return tok

    def parse(self) -> TimePoly:
        value = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return value

    def expr(self) -> TimePoly:
        value = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> TimePoly:
        value = self.unary()
        while self.tok.text == "*":
            self.take()
            value = value * self.unary()
        return value

    def unary(self) -> TimePoly:
        if self.tok.text in ("-", "+"):
            op = self.take().text
            self._enter()
            value = self.unary()
            self.depth -= 1
            return -value if op == "-" else value
        return self.power()

    def power(self) -> TimePoly:
        base = self.atom()
        if self.tok.text == "^":
            self.take()
            tok = self.take(kind="number")
            if not re.fullmatch(r"\d+", tok.text):
                raise self.error("exponent must be a non-negative integer", tok)
            n = int(tok.text)
            if n > MAX_POWER:
                raise self.error(f"exponent {n} exceeds {MAX_POWER}", tok)
            return base**n
        return base

    def _enter(self):
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise self.error("expression nested too deeply")

    def atom(self) -> TimePoly:
        tok = self.tok
        if tok.kind == "number":
            self.take()
            v = float(tok.text)
            if not math.isfinite(v):
                raise self.error(f"number {tok.text} is not finite", tok)
            return TimePoly.constant(self.d, v)
        if tok.text == "(":
            self.take()
            self._enter()
            value = self.expr()
            self.depth -= 1
            self.take(")")
            return value
        if tok.kind == "name":
            self.take()
            if tok.text == "t":
                return TimePoly.constant(self.d, T_IDENTITY)
            if tok.text == "piecewise":
                return self.piecewise(tok)
            if tok.text == "x":
                if self.d != 1:
                    raise self.error("bare 'x' is only allowed when d = 1; use x1 .. xd", tok)
                return TimePoly.variable(1, 0)
            mt = re.fullmatch(r"x(\d+)", tok.text)
            if mt:
                i = int(mt.group(1))
                if not 1 <= i <= self.d:
                    raise self.error(f"variable {tok.text} out of range for d = {self.d}", tok)
                return TimePoly.variable(self.d, i - 1)
            raise self.error(f"unknown name {tok.text!r}", tok)
        got = repr(tok.text) if tok.kind != "end" else "end of expression"
        raise self.error(f"expected a number, t, a variable or '(', got {got}", tok)

    def piecewise(self, head: _Tok) -> TimePoly:
        self.take("(")
        self._enter()
        pieces = [self.expr()]
        breaks = []
        while self.tok.text == ";":
            self.take()
            sign = -1.0 if self.tok.text == "-" else 1.0
            if self.tok.text in ("-", "+"):
                self.take()
            btok = self.take(kind="number")
            breaks.append(sign * float(btok.text))
            self.take(":")
            pieces.append(self.expr())
        self.depth -= 1
        self.take(")")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise self.error("piecewise breakpoints must increase", head)
        if not breaks:
            return pieces[0]
        keys = sorted({k for p in pieces for k, _ in p.terms})
        terms = {}
        for k in keys:
            polys = []
            for p in pieces:
                c = p.as_dict().get(k)
                if c is not None and c.breakpoints:
                    raise self.error("piecewise expressions cannot be nested", head)
                polys.append(c.pieces[0] if c is not None else ())
            try:
                terms[k] = TimeCoefficient.piecewise(breaks, polys)
            except SpecError as exc:
                raise self.error(str(exc), head) from None
        return TimePoly.from_dict(self.d, terms)


def parse_expression(text: str, d: int, line: int = 1, col0: int = 1) -> TimePoly:
    """Parse a polynomial expression in ``t`` and ``x1..xd``."""
    value = _ExprParser(text, d, line, col0).parse()
    for _, c in value.terms:
        if not all(math.isfinite(v) for p in c.pieces for v in p):
            raise SpecError("expression overflows to a non-finite coefficient", line, col0)
    return value


def parse_time_coefficient(text: str) -> TimeCoefficient:
    """Parse an expression in ``t`` only (no state variables)."""
    value = parse_expression(text, 1)
    if not value.x_free():
        raise SpecError(f"time coefficient {text!r} must not depend on x")
    return value.as_dict().get((0,), TimeCoefficient.constant(0.0))


def _parse_state_space(text: str, d: int, line: int, col: int) -> StateSpace:
    t = text.replace(" ", "")
    if t in ("R", f"R^{d}"):
        return StateSpace.reals(d)
    mt = re.fullmatch(r"R\+(?:\^(\d+))?", t)
    if mt:
        p = int(mt.group(1)) if mt.group(1) else d
        return StateSpace.positive(d, p)
    mt = re.fullmatch(r"box\(([^,]+),([^,]+)\)", t)
    if mt:
        try:
            lo, hi = float(mt.group(1)), float(mt.group(2))
        except ValueError:
            raise SpecError(f"bad box bounds in {text!r}", line, col) from None
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise SpecError("box bounds must be finite", line, col)
        return StateSpace.box(d, lo, hi)
    raise SpecError(f"unknown state space {text!r}; expected R, R+^p or box(l, u)", line, col)


def _parse_index(key: str, d: int, line: int, col: int, section: str) -> tuple[int, ...]:
    k = key.strip()
    if section == "jump_moments":
        mt = re.fullmatch(r"\(\s*(\d+(?:\s*,\s*\d+)*)\s*\)", k)
        if not mt:
            raise SpecError(f"jump moment key must look like (l1,...,ld), got {key!r}", line, col)
        idx = tuple(int(v) for v in mt.group(1).split(","))
        if len(idx) != d:
            raise SpecError(f"jump moment key {key!r} needs {d} entries", line, col)
        return idx
    parts = [p for p in re.split(r"\s*,\s*", k) if p]
    if not all(p.isdigit() for p in parts) or not parts:
        raise SpecError(f"bad {section} key {key!r}", line, col)
    if section == "drift":
        if len(parts) != 1:
            raise SpecError(f"drift key must be a single coordinate, got {key!r}", line, col)
        idx = (int(parts[0]),)
    elif len(parts) == 2:
        idx = (int(parts[0]), int(parts[1]))
    elif len(parts) == 1 and len(parts[0]) == 2 and d < 10:
        idx = (int(parts[0][0]), int(parts[0][1]))
    else:
        raise SpecError(f"diffusion key must be 'ij' or 'i,j', got {key!r}", line, col)
    if not all(1 <= v <= d for v in idx):
        raise SpecError(f"index {key!r} out of range for d = {d}", line, col)
    return idx


def parse_spec(text: str, *, validate: bool = True) -> ProcessSpec:
    """Parse a spec document into a :class:`ProcessSpec`.

    Degree bounds are part of the grammar: drift at most 1 in x, diffusion
    at most 2, jump moment ``l`` at most ``|l|`` and ``|l| <= m``.  With
    ``validate`` the sampled positive semi-definiteness check also runs.
    """
    if not isinstance(text, str):
        raise SpecError("spec document must be text")
    sections: dict[str, list[tuple[int, int, str, str, int]]] = {s: [] for s in SECTIONS}
    seen = set()
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        col = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            mt = re.fullmatch(r"\[\s*([a-z_]+)\s*\]", stripped)
            if not mt or mt.group(1) not in SECTIONS:
                raise SpecError(f"unknown section header {stripped!r}", lineno, col)
            current = mt.group(1)
            if current in seen:
                raise SpecError(f"duplicate section [{current}]", lineno, col)
            seen.add(current)
            continue
        if current is None:
            raise SpecError("content before the first section header", lineno, col)
        sep = "=" if current in ("meta", "sampler") else ":"
        if current == "jump_moments":
            close = line.find(")")
            pos = line.find(":", close) if close >= 0 else -1
        else:
            pos = line.find(sep)
        if pos < 0:
            raise SpecError(f"expected 'key {sep} value' in [{current}]", lineno, col)
        key, value = line[:pos], line[pos + 1:]
        vcol = pos + 2 + len(value) - len(value.lstrip())
        sections[current].append((lineno, col, key.strip(), value.strip(), vcol))

    meta = {}
    for lineno, col, key, value, _ in sections["meta"]:
        if key in meta:
            raise SpecError(f"duplicate meta key {key!r}", lineno, col)
        meta[key] = (value.strip(), lineno, col)
    for req in ("d", "m", "T"):
        if req not in meta:
            raise SpecError(f"[meta] is missing {req!r}", 1, 1)
    unknown = set(meta) - {"d", "m", "T", "state_space", "name"}
    if unknown:
        key = sorted(unknown)[0]
        raise SpecError(f"unknown meta key {key!r}", meta[key][1], meta[key][2])

    def meta_int(key):
        v, ln, c = meta[key]
        if not re.fullmatch(r"\d+", v):
            raise SpecError(f"{key} must be a non-negative integer, got {v!r}", ln, c)
        return int(v)

    d, m = meta_int("d"), meta_int("m")
    if not 1 <= d <= 8:
        raise SpecError(f"d must be between 1 and 8, got {d}", meta["d"][1], meta["d"][2])
    if m < 2 or m % 2 or m > MAX_DEGREE:
        raise SpecError(f"m must be even with 2 <= m <= {MAX_DEGREE}, got {m}", meta["m"][1], meta["m"][2])
    try:
        T = float(meta["T"][0])
    except ValueError:
        raise SpecError(f"T must be a number, got {meta['T'][0]!r}", meta["T"][1], meta["T"][2]) from None
    if not (math.isfinite(T) and T > 0):
        raise SpecError(f"T must be positive and finite, got {meta['T'][0]!r}", meta["T"][1], meta["T"][2])
    if "state_space" in meta:
        v, ln, c = meta["state_space"]
        ss = _parse_state_space(v, d, ln, c)
    else:
        ss = StateSpace.reals(d)
    name = meta.get("name", ("",))[0]

    zero = TimePoly(d)
    drift = [zero] * d
    diffusion = [[zero] * d for _ in range(d)]
    moments = {}
    seen_keys = set()
    for section in ("drift", "diffusion", "jump_moments"):
        for lineno, col, key, value, vcol in sections[section]:
            idx = _parse_index(key, d, lineno, col, section)
            if (section, idx) in seen_keys:
                raise SpecError(f"duplicate {section} entry {key.strip()!r}", lineno, col)
            seen_keys.add((section, idx))
            poly = parse_expression(value, d, lineno, vcol)
            if section == "drift":
                if poly.degree > 1:
                    raise SpecError(f"drift {idx[0]} has degree {poly.degree} in x, at most 1 allowed", lineno, vcol)
                drift[idx[0] - 1] = poly
            elif section == "diffusion":
                i, j = idx
                if i > j:
                    raise SpecError("diffusion entries are given for the upper triangle (i <= j)", lineno, col)
                if poly.degree > 2:
                    raise SpecError(f"diffusion {i}{j} has degree {poly.degree} in x, at most 2 allowed", lineno, vcol)
                diffusion[i - 1][j - 1] = poly
                diffusion[j - 1][i - 1] = poly
            else:
                order = sum(idx)
                if not 2 <= order <= m:
                    raise SpecError(f"jump moment {idx} needs 2 <= |l| <= m = {m}", lineno, col)
                if poly.degree > order:
                    raise SpecError(f"jump moment {idx} has degree {poly.degree} in x, at most {order} allowed", lineno, vcol)
                moments[idx] = poly

    sampler = None
    if sections["sampler"]:
        params = {}
        sname = None
        for lineno, col, key, value, vcol in sections["sampler"]:
            if key == "name":
                sname = value.strip()
                if sname not in SAMPLERS:
                    raise SpecError(f"unknown sampler {sname!r}; known: {sorted(SAMPLERS)}", lineno, vcol)
            else:
                try:
                    params[key] = float(value)
                except ValueError:
                    raise SpecError(f"sampler parameter {key!r} must be a number", lineno, vcol) from None
        if sname is None:
            raise SpecError("[sampler] needs a name", sections["sampler"][0][0], 1)
        try:
            sampler = make_sampler(sname, params)
        except SpecError as exc:
            raise SpecError(str(exc), sections["sampler"][0][0], 1) from None

    spec = ProcessSpec(
        d=d, m=m, T=T, drift=tuple(drift), diffusion=tuple(map(tuple, diffusion)),
        jump_moments=tuple(moments.items()), state_space=ss, sampler=sampler, name=name,
    )
    if validate:
        validate_spec(spec)
    return spec


def to_document(spec: ProcessSpec) -> str:
    """Serialize a spec; ``parse_spec(to_document(s)) == s`` coefficient-wise."""
    d = spec.d
    lines = ["[meta]"]
    if spec.name:
        lines.append(f"name = {spec.name}")
    lines += [f"d = {d}", f"m = {spec.m}", f"T = {spec.T!r}", f"state_space = {spec.state_space.to_text()}", ""]
    lines.append("[drift]")
    for i, b in enumerate(spec.drift):
        if not b.is_zero:
            lines.append(f"{i + 1}: {b.to_expr()}")
    lines += ["", "[diffusion]"]
    for i in range(d):
        for j in range(i, d):
            c = spec.diffusion[i][j]
            if not c.is_zero:
                lines.append(f"{i + 1},{j + 1}: {c.to_expr()}")
    if spec.jump_moments:
        lines += ["", "[jump_moments]"]
        for l, p in spec.jump_moments:
            lines.append(f"({','.join(map(str, l))}): {p.to_expr()}")
    if spec.sampler is not None:
        lines += ["", "[sampler]", f"name = {spec.sampler.name}"]
        for k, v in spec.sampler.params().items():
            lines.append(f"{k} = {v!r}")
    return "\n".join(lines) + "\n"
