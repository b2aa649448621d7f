"""Surface syntax for models and for local-form expressions.

The grammar is line oriented.  A model file lists declarations in a fixed
order: the header (name, base dimension, metric, parameters), the field
declarations, an optional algebra block, the bracket kind, the named
densities with their master, and an optional foliation block::

    model maxwell
    dim 4
    metric 1 -1 -1 -1
    field A { parity 0, ghost 0, role field, shape 4 }
    ...
    structure odd-BV
    density S = ...
    master S
    foliation {
      time 0
      map A -> A
      field E { parity 0, ghost 0, role source, shape 3 }
      phase A[0],[0] := lam
      density H = ...
    }

Expressions use ``+ - * ^`` with ``*`` and ``^`` both denoting the graded
product, ``dx[j]``, ``x[j]``, ``vol``, ``del(...)``, ``d(...)``,
``ib(j, ...)`` for contraction with the j-th coordinate field, rational
literals like ``3/4``, parameters by name, and jet variables written
``A[0],[1 2]`` (component labels, then derivative indices).  Those atom
names are reserved; ``#`` starts a comment.  The canonical rendering
produced by ``model.print_model`` parses back to an equal model.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import foliation, forms, kernel, model
from .forms import LocalForm
from .kernel import FieldSpec, GradedScalar, Spectrum


class ParseError(Exception):
    """Bad surface syntax, with source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[^\S\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<number>\d+(?:/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<assign>:=)
  | (?P<op>[{}()\[\],=+\-*^])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             line, pos - start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(Token(kind, m.group(), line, m.start() - start + 1))
        if kind == "nl":
            line += 1
            start = m.end()
        pos = m.end()
    toks.append(Token("nl", "\n", line, max(len(text) - start, 0) + 1))
    toks.append(Token("eof", "", line + 1, 1))
    return toks


_RESERVED = {"dx", "x", "vol", "del", "d", "ib"}

_FIELD_ATTRS = ("parity", "ghost", "role", "shape", "conjugate", "slots",
                "factor")
_ALGEBRA_ATTRS = ("constants", "form")


class _Parser:
    def __init__(self, toks: Sequence[Token]):
        self.toks = list(toks)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, message: str, t: Optional[Token] = None):
        t = t or self.peek()
        raise ParseError(message, t.line, t.col)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            got = t.text if t.text.strip() else t.kind
            self.fail(f"expected {want!r}, got {got!r}", t)
        return self.next()

    def at(self, kind: str, text: Optional[str] = None,
           ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == kind and (text is None or t.text == text)

    def end_line(self) -> None:
        self.expect("nl")
        self.skip_blank()

    def skip_blank(self) -> None:
        while self.at("nl"):
            self.next()

    # -- small shared pieces ----------------------------------------------

    def integer(self) -> int:
        t = self.expect("number")
        if "/" in t.text:
            self.fail("expected an integer", t)
        return int(t.text)

    def number(self) -> Fraction:
        neg = False
        if self.at("op", "-"):
            self.next()
            neg = True
        t = self.expect("number")
        q = Fraction(t.text)
        return -q if neg else q

    def name(self) -> str:
        return self.expect("name").text

    def int_list(self) -> tuple[int, ...]:
        out = []
        while self.at("number"):
            out.append(self.integer())
        return tuple(out)

    def num_list(self) -> tuple[Fraction, ...]:
        out = []
        while self.at("number") or self.at("op", "-"):
            out.append(self.number())
        return tuple(out)

    def word_to_eol(self) -> str:
        parts = []
        while not self.at("nl") and not self.at("eof"):
            parts.append(self.next().text)
        if not parts:
            self.fail("expected a word")
        return "".join(parts)

    # -- expressions -------------------------------------------------------

    def expression(self, spectrum: Spectrum) -> LocalForm:
        a = self.term(spectrum)
        while self.at("op", "+") or self.at("op", "-"):
            if self.next().text == "+":
                a = a + self.term(spectrum)
            else:
                a = a - self.term(spectrum)
        return a

    def term(self, spectrum: Spectrum) -> LocalForm:
        a = self.factor(spectrum)
        while self.at("op", "*") or self.at("op", "^"):
            self.next()
            a = forms.wedge(a, self.factor(spectrum))
        return a

    def factor(self, spectrum: Spectrum) -> LocalForm:
        if self.at("op", "-"):
            self.next()
            return self.factor(spectrum).scale(-1)
        return self.atom(spectrum)

    def atom(self, spectrum: Spectrum) -> LocalForm:
        dim = spectrum.dim
        if self.at("op", "("):
            self.next()
            a = self.expression(spectrum)
            self.expect("op", ")")
            return a
        if self.at("number"):
            return forms.scalar_form(dim, Fraction(self.next().text))
        t = self.peek()
        if t.kind != "name":
            self.fail(f"expected an expression, got {t.text.strip() or t.kind!r}")
        word = self.next().text
        if word == "vol":
            return forms.volume(dim)
        if word == "dx":
            j = self.bracketed_index(dim)
            return forms.dx(dim, j)
        if word == "x":
            j = self.bracketed_index(dim)
            return forms.scalar_form(
                dim, GradedScalar.generator(kernel.coord_gen(j)))
        if word in ("d", "del"):
            self.expect("op", "(")
            a = self.expression(spectrum)
            self.expect("op", ")")
            return forms.d(a) if word == "d" else forms.delta(a)
        if word == "ib":
            self.expect("op", "(")
            j = self.integer()
            if not 0 <= j < dim:
                self.fail(f"direction {j} out of range for dimension {dim}", t)
            self.expect("op", ",")
            a = self.expression(spectrum)
            self.expect("op", ")")
            return forms.interior_coordinate(a, j)
        if word in spectrum.parameters:
            return forms.scalar_form(dim, kernel.parameter(word))
        try:
            f = spectrum.field(word)
        except KeyError:
            self.fail(f"unknown name {word!r}", t)
        comp, mi = self.jet_indices()
        if len(comp) != len(f.shape):
            self.fail(f"field {word!r} takes {len(f.shape)} component "
                      f"labels, got {len(comp)}", t)
        return forms.scalar_form(dim, kernel.jet(spectrum, word, comp, mi))

    def bracketed_index(self, dim: int) -> int:
        self.expect("op", "[")
        t = self.peek()
        j = self.integer()
        self.expect("op", "]")
        if not 0 <= j < dim:
            self.fail(f"direction {j} out of range for dimension {dim}", t)
        return j

    def jet_indices(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        comp: tuple[int, ...] = ()
        mi: tuple[int, ...] = ()
        if self.at("op", "["):
            self.next()
            comp = self.int_list()
            self.expect("op", "]")
        if self.at("op", ",") and self.at("op", "[", ahead=1):
            self.next()
            self.next()
            mi = self.int_list()
            self.expect("op", "]")
        return comp, mi

    def jet_generator(self, spectrum: Spectrum) -> kernel.Gen:
        t = self.peek()
        word = self.name()
        if word in _RESERVED or word in spectrum.parameters:
            self.fail(f"{word!r} is not a field", t)
        try:
            spectrum.field(word)
        except KeyError:
            self.fail(f"unknown field {word!r}", t)
        comp, mi = self.jet_indices()
        return kernel.jet_gen(spectrum, word, comp, mi)

    def scalar_expression(self, spectrum: Spectrum) -> GradedScalar:
        t = self.peek()
        a = self.expression(spectrum)
        if a.is_zero():
            return kernel.ZERO
        if a.bidegree() != (0, 0):
            self.fail("expected a scalar expression", t)
        return a.terms[((), ())]

    # -- attribute blocks --------------------------------------------------

    def attr_block(self, keywords: Sequence[str]) -> dict[str, list[Token]]:
        """``{ key value..., key value... }`` with values left unparsed."""
        self.expect("op", "{")
        out: dict[str, list[Token]] = {}
        while not self.at("op", "}"):
            t = self.peek()
            key = self.name()
            if key not in keywords:
                self.fail(f"unknown attribute {key!r}", t)
            if key in out:
                self.fail(f"duplicate attribute {key!r}", t)
            depth = 0
            value: list[Token] = []
            while True:
                if self.at("nl") or self.at("eof"):
                    self.fail("unterminated attribute block")
                if depth == 0 and self.at("op", "}"):
                    break
                if depth == 0 and self.at("op", ",") and \
                        self.at("name", ahead=1):
                    self.next()
                    break
                tok = self.next()
                if tok.kind == "op" and tok.text in "([{":
                    depth += 1
                elif tok.kind == "op" and tok.text in ")]}":
                    depth -= 1
                value.append(tok)
            if not value:
                self.fail(f"attribute {key!r} has no value", t)
            out[key] = value
        self.expect("op", "}")
        return out

    def _sub(self, value: list[Token]) -> "_Parser":
        last = value[-1]
        stop = Token("nl", "\n", last.line, last.col + len(last.text))
        return _Parser(value + [stop])

    def field_spec(self, dim: int) -> FieldSpec:
        t = self.peek()
        fname = self.name()
        if fname in _RESERVED:
            self.fail(f"{fname!r} is reserved", t)
        attrs = self.attr_block(_FIELD_ATTRS)
        for req in ("parity", "ghost", "role"):
            if req not in attrs:
                self.fail(f"field {fname!r} is missing {req!r}", t)
        kw: dict = {}
        kw["parity"] = self._sub(attrs["parity"]).integer()
        kw["ghost"] = self._int_signed(attrs["ghost"])
        kw["role"] = self._sub(attrs["role"]).name()
        if "shape" in attrs:
            kw["shape"] = self._sub(attrs["shape"]).int_list()
        if "conjugate" in attrs:
            kw["conjugate"] = self._sub(attrs["conjugate"]).name()
        if "slots" in attrs:
            sub = self._sub(attrs["slots"])
            kinds = []
            while sub.at("name"):
                kinds.append(sub.name())
            kw["slot_kinds"] = tuple(kinds)
        if "factor" in attrs:
            kw["form_factor"] = self._form_factor(attrs["factor"], dim)
        try:
            return FieldSpec(fname, **kw)
        except ValueError as e:
            self.fail(str(e), t)

    def _int_signed(self, value: list[Token]) -> int:
        sub = self._sub(value)
        neg = False
        if sub.at("op", "-"):
            sub.next()
            neg = True
        n = sub.integer()
        return -n if neg else n

    def _form_factor(self, value: list[Token], dim: int,
                     ) -> tuple[tuple[Fraction, tuple[int, ...]], ...]:
        blank = Spectrum(dim, [])
        sub = self._sub(value)
        a = sub.expression(blank)
        out = []
        for (dxs, contacts), s in sorted(a.terms.items()):
            mono = {(): Fraction(0)}
            mono.update({m: c for m, c in s.terms.items()})
            if contacts or set(mono) != {()}:
                self.fail("factor must be a constant horizontal form",
                          value[0])
            out.append((mono[()], dxs))
        return tuple(out)

    # -- model files -------------------------------------------------------

    def model_file(self) -> model.Model:
        self.skip_blank()
        self.expect("name", "model")
        mname = self.word_to_eol()
        self.end_line()

        self.expect("name", "dim")
        dim = self.integer()
        self.end_line()

        metric = None
        if self.at("name", "metric"):
            self.next()
            metric = self.num_list()
            if len(metric) != dim:
                self.fail(f"metric needs {dim} entries")
            self.end_line()

        parameters = []
        while self.at("name", "parameter"):
            self.next()
            parameters.append(self.name())
            self.end_line()

        fields = []
        while self.at("name", "field"):
            self.next()
            fields.append(self.field_spec(dim))
            self.end_line()

        algebra_constants = None
        algebra_form = None
        if self.at("name", "algebra"):
            self.next()
            attrs = self.attr_block(_ALGEBRA_ATTRS)
            if "constants" in attrs:
                algebra_constants = self._sub(attrs["constants"]).name()
            if "form" in attrs:
                algebra_form = self._sub(attrs["form"]).num_list()
            self.end_line()

        try:
            spectrum = Spectrum(dim, fields, metric=metric,
                                parameters=tuple(parameters),
                                algebra_form=algebra_form)
        except ValueError as e:
            self.fail(str(e))

        self.expect("name", "structure")
        structure_kind = self.word_to_eol()
        self.end_line()

        densities: dict[str, LocalForm] = {}
        while self.at("name", "density"):
            self.next()
            t = self.peek()
            dname = self.name()
            if dname in densities:
                self.fail(f"duplicate density {dname!r}", t)
            self.expect("op", "=")
            densities[dname] = self.expression(spectrum)
            self.end_line()

        self.expect("name", "master")
        master = self.name()
        self.end_line()

        fol = None
        phase_densities: dict[str, LocalForm] = {}
        if self.at("name", "foliation"):
            self.next()
            fol, phase_densities = self.foliation_block(spectrum)
            self.end_line()

        self.expect("eof")
        try:
            return model.Model(mname, spectrum, structure_kind, densities,
                               master, foliation=fol,
                               phase_densities=phase_densities,
                               algebra_constants=algebra_constants)
        except (model.ModelError, foliation.FoliationError, ValueError) as e:
            self.fail(str(e), self.toks[0])

    def foliation_block(self, spectrum: Spectrum,
                        ) -> tuple[foliation.FoliationContext,
                                   dict[str, LocalForm]]:
        start = self.peek()
        self.expect("op", "{")
        self.end_line()

        self.expect("name", "time")
        time = self.int_list()
        if not time:
            self.fail("expected time directions")
        self.end_line()

        field_map: dict[str, str] = {}
        while self.at("name", "map"):
            self.next()
            t = self.peek()
            src = self.name()
            self.expect("arrow")
            dst = self.name()
            if src in field_map:
                self.fail(f"field {src!r} mapped twice", t)
            field_map[src] = dst
            self.end_line()

        spatial_dim = spectrum.dim - len(set(time))
        extras = []
        while self.at("name", "field"):
            self.next()
            extras.append(self.field_spec(spatial_dim))
            self.end_line()

        try:
            spatial = model.phase_spectrum(spectrum, time, field_map, extras)
        except ValueError as e:
            self.fail(str(e), start)

        rules: dict[kernel.Gen, GradedScalar] = {}
        while self.at("name", "phase"):
            self.next()
            t = self.peek()
            g = self.jet_generator(spectrum)
            if g in rules:
                self.fail("duplicate phase rule", t)
            self.expect("assign")
            rules[g] = self.scalar_expression(spatial)
            self.end_line()

        phase_densities: dict[str, LocalForm] = {}
        while self.at("name", "density"):
            self.next()
            t = self.peek()
            dname = self.name()
            if dname in phase_densities:
                self.fail(f"duplicate density {dname!r}", t)
            self.expect("op", "=")
            phase_densities[dname] = self.expression(spatial)
            self.end_line()

        self.expect("op", "}")
        try:
            ctx = foliation.FoliationContext(spectrum, spatial, tuple(time),
                                             field_map, rules)
        except foliation.FoliationError as e:
            self.fail(str(e), start)
        return ctx, phase_densities


def parse_model(text: str) -> model.Model:
    """Parse a model file into a validated Model."""
    return _Parser(tokenize(text)).model_file()


def parse_expression(text: str, spectrum: Spectrum) -> LocalForm:
    """Parse a single local-form expression over the given spectrum."""
    p = _Parser(tokenize(text))
    p.skip_blank()
    a = p.expression(spectrum)
    p.skip_blank()
    p.expect("eof")
    return a
