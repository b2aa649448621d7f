"""Exact graded polynomial algebra over jet-space coordinates.

The scalar layer of the engine: polynomial expressions in base coordinates
x^i, formal parameters, and jet variables phi^a_I (a field component
together with a symmetric multi-index of total-derivative directions).
Coefficients are exact rationals; Grassmann-odd generators anticommute and
square to zero.  Everything downstream (forms, variational calculus,
brackets) is built on top of this module.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

EVEN = 0
ODD = 1

# Roles a declared field can play in a model.
ROLE_FIELD = "field"
ROLE_ANTIFIELD = "antifield"
ROLE_SOURCE = "source"

_ROLES = (ROLE_FIELD, ROLE_ANTIFIELD, ROLE_SOURCE)


class JetOrderCapExceeded(Exception):
    """Raised when an operation would need jet variables beyond the cap."""


def jet_order_cap() -> int:
    """Maximal multi-index length allowed, configurable via environment."""
    raw = os.environ.get("VTC_JET_ORDER_CAP")
    if raw is None:
        return 8
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"VTC_JET_ORDER_CAP must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError("VTC_JET_ORDER_CAP must be positive")
    return value


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------


def multi_index(parts: Iterable[int]) -> tuple[int, ...]:
    """Canonical (sorted) multi-index from an iterable of directions."""
    mi = tuple(sorted(parts))
    for p in mi:
        if p < 0:
            raise ValueError(f"negative direction in multi-index: {mi}")
    return mi


def mi_extend(mi: Sequence[int], j: int) -> tuple[int, ...]:
    """Multi-index with one more derivative in direction j."""
    return tuple(sorted(tuple(mi) + (j,)))


def mi_remove(mi: Sequence[int], j: int) -> tuple[int, ...]:
    """Multi-index with one occurrence of direction j removed."""
    parts = list(mi)
    parts.remove(j)
    return tuple(parts)


def mi_contains(mi: Sequence[int], j: int) -> bool:
    return j in mi


# ---------------------------------------------------------------------------
# Field declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldSpec:
    """Declaration of one field: name, statistics and tensor layout.

    ``shape`` gives the index ranges of the component labels; a scalar field
    has shape ().  ``slot_kinds`` marks each shape slot as a base index
    (contracted with the base metric) or an internal index (contracted with
    the spectrum's invariant form); unmarked slots default to base.
    ``form_factor`` optionally names a constant horizontal form the field is
    implicitly wedged with (for base-form-valued fields); it is interpreted
    by the frontend, not by the kernel.
    """

    name: str
    parity: int
    ghost: int
    role: str = ROLE_FIELD
    shape: tuple[int, ...] = ()
    conjugate: Optional[str] = None
    slot_kinds: Optional[tuple[str, ...]] = None
    form_factor: Optional[tuple[tuple[Fraction, tuple[int, ...]], ...]] = None

    def __post_init__(self) -> None:
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"parity must be 0 or 1, got {self.parity}")
        if self.role not in _ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.slot_kinds is not None:
            if len(self.slot_kinds) != len(self.shape):
                raise ValueError("slot_kinds must mark every shape slot")
            for k in self.slot_kinds:
                if k not in ("base", "internal"):
                    raise ValueError(f"unknown slot kind {k!r}")

    def components(self) -> Iterator[tuple[int, ...]]:
        """All component label tuples of this field."""
        if not self.shape:
            yield ()
            return
        def rec(prefix: tuple[int, ...], dims: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
            if not dims:
                yield prefix
                return
            for v in range(dims[0]):
                yield from rec(prefix + (v,), dims[1:])
        yield from rec((), self.shape)


class Spectrum:
    """Ordered collection of field declarations over an n-dimensional base."""

    def __init__(self, dim: int, fields: Sequence[FieldSpec],
                 metric: Optional[Sequence[Fraction]] = None,
                 parameters: Sequence[str] = (),
                 algebra_form: Optional[Sequence[Fraction]] = None):
        if dim < 1:
            raise ValueError("base dimension must be positive")
        self.dim = dim
        self.fields = tuple(fields)
        self.by_name = {f.name: f for f in self.fields}
        if len(self.by_name) != len(self.fields):
            raise ValueError("duplicate field names in spectrum")
        self.index = {f.name: i for i, f in enumerate(self.fields)}
        if metric is None:
            metric = [Fraction(1)] * dim
        self.metric = tuple(Fraction(m) for m in metric)
        if len(self.metric) != dim:
            raise ValueError("metric must have one diagonal entry per dimension")
        self.parameters = tuple(parameters)
        self.algebra_form = (None if algebra_form is None
                             else tuple(Fraction(a) for a in algebra_form))
        for f in self.fields:
            if f.conjugate is not None and f.conjugate not in self.by_name:
                raise ValueError(
                    f"field {f.name} declares unknown conjugate {f.conjugate}")

    def _key(self):
        return (self.dim, self.fields, self.metric, self.parameters,
                self.algebra_form)

    def __eq__(self, other) -> bool:
        return isinstance(other, Spectrum) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def field(self, name: str) -> FieldSpec:
        try:
            return self.by_name[name]
        except KeyError:
            raise KeyError(f"unknown field {name!r}") from None

    def conjugate_pairs(self) -> list[tuple[FieldSpec, FieldSpec]]:
        """(conjugate, field) pairs in declaration order of the conjugates."""
        pairs = []
        for f in self.fields:
            if f.conjugate is not None:
                pairs.append((f, self.by_name[f.conjugate]))
        return pairs


# ---------------------------------------------------------------------------
# Generators
#
# A generator is a plain tuple so monomials order and hash cheaply:
#   (0, name)                                   parameter (even)
#   (1, i)                                      base coordinate x^i (even)
#   (2, pos, name, comp, mi, parity, ghost, role)   jet variable
#   (3, name, parity, ghost)                    auxiliary constant
# The leading rank makes the canonical monomial order: parameters, base
# coordinates, then jet variables by (field declaration order, component,
# multi-index), auxiliaries last.  Jet generators carry their field name and
# grading so scalars print and grade without a spectrum at hand.
# ---------------------------------------------------------------------------

Gen = tuple


def param_gen(name: str) -> Gen:
    return (0, name)


def coord_gen(i: int) -> Gen:
    return (1, i)


def jet_gen(spectrum: Spectrum, name: str, comp: Sequence[int] = (),
            mi: Iterable[int] = ()) -> Gen:
    f = spectrum.field(name)
    comp = tuple(comp)
    dims = f.shape
    if len(comp) != len(dims) or any(not 0 <= c < d for c, d in zip(comp, dims)):
        raise ValueError(f"component {comp} out of range for field {name} with shape {dims}")
    return (2, spectrum.index[name], name, comp, multi_index(mi), f.parity, f.ghost, f.role)


def aux_gen(name: str, parity: int = EVEN, ghost: int = 0) -> Gen:
    return (3, name, parity, ghost)


def gen_parity(g: Gen) -> int:
    if g[0] == 2:
        return g[5]
    if g[0] == 3:
        return g[2]
    return EVEN


def gen_ghost(g: Gen) -> int:
    if g[0] == 2:
        return g[6]
    if g[0] == 3:
        return g[3]
    return 0


def gen_role(g: Gen) -> Optional[str]:
    return g[7] if g[0] == 2 else None


def is_jet(g: Gen) -> bool:
    return g[0] == 2


def jet_name(g: Gen) -> str:
    return g[2]


def jet_comp(g: Gen) -> tuple[int, ...]:
    return g[3]


def jet_mi(g: Gen) -> tuple[int, ...]:
    return g[4]


def jet_base(g: Gen) -> Gen:
    """The underived generator of the same field component."""
    return g[:4] + ((),) + g[5:]


def jet_shift(g: Gen, j: int) -> Gen:
    """The jet generator with one more derivative in direction j."""
    cap = jet_order_cap()
    mi = mi_extend(g[4], j)
    if len(mi) > cap:
        raise JetOrderCapExceeded(
            f"jet order {len(mi)} exceeds cap {cap} (set VTC_JET_ORDER_CAP to raise)")
    return g[:4] + (mi,) + g[5:]


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------

Monomial = tuple  # tuple[tuple[Gen, int], ...] sorted by generator

ONE_MONO: Monomial = ()


def mono_parity(m: Monomial) -> int:
    return sum(gen_parity(g) * e for g, e in m) % 2


def mono_ghost(m: Monomial) -> int:
    return sum(gen_ghost(g) * e for g, e in m)


def mono_degree(m: Monomial, role: str) -> int:
    """Number of jet factors whose field has the given role."""
    return sum(e for g, e in m if gen_role(g) == role)


def mono_mul(m1: Monomial, m2: Monomial) -> tuple[int, Optional[Monomial]]:
    """Product of canonical monomials; returns (koszul_sign, monomial).

    The sign accounts for sorting the concatenation into canonical order;
    ``None`` is returned when an odd generator repeats (the product is 0).
    """
    if not m1:
        return 1, m2
    if not m2:
        return 1, m1
    # Suffix odd-degree table for m1.
    n1 = len(m1)
    odd_suffix = [0] * (n1 + 1)
    for idx in range(n1 - 1, -1, -1):
        g, e = m1[idx]
        odd_suffix[idx] = odd_suffix[idx + 1] + (gen_parity(g) & (e & 1))
    out: list[tuple[Gen, int]] = []
    sign = 1
    i = j = 0
    while i < n1 and j < len(m2):
        g1, e1 = m1[i]
        g2, e2 = m2[j]
        if g1 < g2:
            out.append((g1, e1))
            i += 1
        elif g1 > g2:
            if gen_parity(g2) and (e2 & 1) and (odd_suffix[i] & 1):
                sign = -sign
            out.append((g2, e2))
            j += 1
        else:
            if gen_parity(g1):
                return 1, None  # odd generator squared
            out.append((g1, e1 + e2))
            i += 1
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return sign, tuple(out)


def mono_sort_key(m: Monomial) -> tuple:
    return (len(m), m)


# ---------------------------------------------------------------------------
# Graded scalars
# ---------------------------------------------------------------------------

Coefficient = Union[int, Fraction]


class GradedScalar:
    """Exact polynomial in graded generators: a map monomial -> Fraction.

    Immutable in use (no mutating public API); arithmetic returns fresh
    instances and drops zero coefficients eagerly.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Coefficient]] = None):
        data: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    data[m] = c
        self.terms = data

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c: Coefficient) -> "GradedScalar":
        return cls({ONE_MONO: Fraction(c)})

    @classmethod
    def generator(cls, g: Gen) -> "GradedScalar":
        return cls({((g, 1),): Fraction(1)})

    # -- basics -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, GradedScalar):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == GradedScalar.constant(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.terms.items(), key=lambda t: mono_sort_key(t[0]))))

    def __repr__(self) -> str:
        from . import printing
        return printing.scalar_str(self)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "GradedScalar") -> "GradedScalar":
        other = _coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        res = GradedScalar.__new__(GradedScalar)
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self) -> "GradedScalar":
        res = GradedScalar.__new__(GradedScalar)
        res.terms = {m: -c for m, c in self.terms.items()}
        return res

    def __sub__(self, other: "GradedScalar") -> "GradedScalar":
        return self + (-_coerce(other))

    def __rsub__(self, other: "GradedScalar") -> "GradedScalar":
        return _coerce(other) + (-self)

    def __mul__(self, other: Union["GradedScalar", Coefficient]) -> "GradedScalar":
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            res = GradedScalar.__new__(GradedScalar)
            res.terms = {} if not other else {m: c * other for m, c in self.terms.items()}
            return res
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                sign, m = mono_mul(m1, m2)
                if m is None:
                    continue
                c = c1 * c2 * sign
                s = out.get(m, Fraction(0)) + c
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        res = GradedScalar.__new__(GradedScalar)
        res.terms = out
        return res

    def __rmul__(self, other: Coefficient) -> "GradedScalar":
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    # -- grading ----------------------------------------------------------

    def grade_of(self, grading: str) -> Optional[int]:
        """Common grade of all terms, or None when inhomogeneous / zero.

        ``grading`` is one of "parity", "ghost", "momentum", "polyvector".
        """
        values = {_mono_grade(m, grading) for m in self.terms}
        if len(values) != 1:
            return None
        return values.pop()

    def grade_split(self, grading: str) -> dict[int, "GradedScalar"]:
        """Decompose into homogeneous pieces of the given grading."""
        out: dict[int, dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            out.setdefault(_mono_grade(m, grading), {})[m] = c
        return {k: GradedScalar(v) for k, v in sorted(out.items())}

    def parity(self) -> Optional[int]:
        return self.grade_of("parity")

    # -- derivatives ------------------------------------------------------

    def left_partial(self, g: Gen) -> "GradedScalar":
        """Left derivative with respect to the generator g."""
        return self._partial(g, left=True)

    def right_partial(self, g: Gen) -> "GradedScalar":
        """Right derivative with respect to the generator g."""
        return self._partial(g, left=False)

    def _partial(self, g: Gen, left: bool) -> "GradedScalar":
        out: dict[Monomial, Fraction] = {}
        gp = gen_parity(g)
        for m, c in self.terms.items():
            for idx, (h, e) in enumerate(m):
                if h != g:
                    continue
                if gp:
                    if left:
                        crossed = sum(gen_parity(k) & (x & 1) for k, x in m[:idx])
                    else:
                        crossed = sum(gen_parity(k) & (x & 1) for k, x in m[idx + 1:])
                    sign = -1 if crossed % 2 else 1
                    rest = m[:idx] + m[idx + 1:]
                    cc = c * sign
                else:
                    rest = m[:idx] + ((h, e - 1),) + m[idx + 1:] if e > 1 else m[:idx] + m[idx + 1:]
                    cc = c * e
                s = out.get(rest, Fraction(0)) + cc
                if s:
                    out[rest] = s
                else:
                    out.pop(rest, None)
                break
        return GradedScalar(out)

    def total_derivative(self, j: int) -> "GradedScalar":
        """Total derivative in base direction j.

        Acts as an even derivation: x^j goes to 1, every jet variable
        phi^a_I goes to phi^a_{Ij}, parameters and auxiliaries go to 0.
        """
        out: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            for idx, (g, e) in enumerate(m):
                repl: Optional[Gen]
                if g[0] == 1:
                    repl = None if g[1] != j else ()
                elif g[0] == 2:
                    repl = jet_shift(g, j)
                else:
                    continue
                if repl is None:
                    continue
                if e > 1:
                    head = m[:idx] + ((g, e - 1),)
                    cc = c * e
                else:
                    head = m[:idx]
                    cc = c
                tail = m[idx + 1:]
                if repl == ():  # derivative of the coordinate itself
                    sign, mono = mono_mul(head, tail)
                else:
                    sign, mid = mono_mul(head, ((repl, 1),))
                    if mid is None:
                        continue
                    sign2, mono = mono_mul(mid, tail)
                    if mono is None:
                        continue
                    sign *= sign2
                s = out.get(mono, Fraction(0)) + cc * sign
                if s:
                    out[mono] = s
                else:
                    out.pop(mono, None)
        return GradedScalar(out)

    def total_derivative_mi(self, mi: Sequence[int]) -> "GradedScalar":
        cur = self
        for j in mi:
            cur = cur.total_derivative(j)
        return cur

    # -- inspection -------------------------------------------------------

    def jet_generators(self) -> set[Gen]:
        return {g for m in self.terms for g, _ in m if is_jet(g)}

    def max_jet_order(self) -> int:
        orders = [len(g[3]) for m in self.terms for g, _ in m if is_jet(g)]
        return max(orders, default=0)

    def substitute(self, table: Mapping[Gen, "GradedScalar"]) -> "GradedScalar":
        """Replace generators by scalar expressions (a ring homomorphism).

        Substituted values must have the parity of the generator they
        replace; this is checked.
        """
        for g, v in table.items():
            p = v.grade_of("parity")
            if v and p != gen_parity(g):
                raise ValueError(
                    f"substitution for parity-{gen_parity(g)} generator has parity {p}")
        total = GradedScalar()
        for m, c in self.terms.items():
            acc = GradedScalar.constant(c)
            for g, e in m:
                val = table.get(g)
                if val is None:
                    val = GradedScalar.generator(g)
                for _ in range(e):
                    acc = acc * val
                    if not acc:
                        break
                if not acc:
                    break
            total = total + acc
        return total


def _coerce(v: Union[GradedScalar, Coefficient]) -> GradedScalar:
    if isinstance(v, GradedScalar):
        return v
    return GradedScalar.constant(v)


def _mono_grade(m: Monomial, grading: str) -> int:
    if grading == "parity":
        return mono_parity(m)
    if grading == "ghost":
        return mono_ghost(m)
    if grading == "momentum":
        return mono_degree(m, ROLE_SOURCE)
    if grading == "polyvector":
        return mono_degree(m, ROLE_ANTIFIELD)
    raise ValueError(f"unknown grading {grading!r}")


ZERO = GradedScalar()
ONE = GradedScalar.constant(1)


def scalar(c: Coefficient) -> GradedScalar:
    return GradedScalar.constant(c)


def x(i: int) -> GradedScalar:
    return GradedScalar.generator(coord_gen(i))


def parameter(name: str) -> GradedScalar:
    return GradedScalar.generator(param_gen(name))


def jet(spectrum: Spectrum, name: str, comp: Sequence[int] = (),
        mi: Iterable[int] = ()) -> GradedScalar:
    return GradedScalar.generator(jet_gen(spectrum, name, comp, mi))


def aux(name: str, parity: int = EVEN, ghost: int = 0) -> GradedScalar:
    return GradedScalar.generator(aux_gen(name, parity, ghost))
