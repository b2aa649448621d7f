"""Local differential forms on jet space and the Cartan calculus on them.

A local form is a sum of terms

    (scalar) ^ dx^{i1} ^ ... ^ dx^{ip} ^ d(phi^{a1}_{I1}) ^ ... ^ d(phi^{aq}_{Iq})

with exact graded-polynomial coefficients, horizontal generators dx^i and
contact generators d(phi^a_I), the vertical differentials of jet variables.
Everything carries a single total parity: a scalar contributes its Grassmann
parity, each dx^i contributes 1, and each contact d(phi^a_I) contributes
parity(phi^a) + 1.  Products reorder with the Koszul sign of that parity, so
the dx^i anticommute among themselves, contacts of even fields anticommute,
and contacts of odd fields are symmetric (d(C)^d(C) survives).

The horizontal differential d and the vertical differential delta are odd
right derivations:

    D(u ^ v) = u ^ D(v) + (-1)^{parity(v)} D(u) ^ v

with d(f) = sum_j (total_j f) ^ dx^j, d(d(phi^a_I)) = d(phi^a_{Ij}) ^ dx^j,
delta(f) = sum (right-partial of f) ^ d(phi^a_I), and delta(dx) =
delta(d(phi)) = 0.  They satisfy d d = 0, delta delta = 0 and
d delta + delta d = 0.

Contraction with an evolutionary field X is a right derivation of parity
parity(X) + 1 that kills scalars and dx and sends d(phi^a_I) to the
prolonged component X^a_I.  The vertical Lie derivative is

    lie(X, w) = contract(X, delta(w)) + (-1)^{parity(X)} delta(contract(X, w)).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from . import kernel
from .kernel import Gen, GradedScalar, Spectrum

# A form term key: (ascending tuple of dx directions, sorted tuple of contact
# generators).  Contact generators of odd fields (even contacts) may repeat.
Key = tuple[tuple[int, ...], tuple[Gen, ...]]

_EMPTY: Key = ((), ())


def _contact_parity(g: Gen) -> int:
    return (kernel.gen_parity(g) + 1) % 2


class LocalForm:
    """A local differential form over an n-dimensional base."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Optional[Mapping[Key, GradedScalar]] = None):
        self.dim = dim
        data: dict[Key, GradedScalar] = {}
        if terms:
            for k, s in terms.items():
                if s:
                    data[k] = s
        self.terms = data

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "LocalForm":
        return cls(dim)

    @classmethod
    def from_scalar(cls, dim: int, s: Union[GradedScalar, int, Fraction]) -> "LocalForm":
        if not isinstance(s, GradedScalar):
            s = GradedScalar.constant(s)
        return cls(dim, {_EMPTY: s})

    # -- basics -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LocalForm):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.dim, tuple(sorted((k, hash(s)) for k, s in self.terms.items()))))

    def __repr__(self) -> str:
        from . import printing
        return printing.form_str(self)

    def __add__(self, other: "LocalForm") -> "LocalForm":
        out = dict(self.terms)
        for k, s in other.terms.items():
            t = out.get(k)
            t = s if t is None else t + s
            if t:
                out[k] = t
            else:
                out.pop(k, None)
        res = LocalForm.__new__(LocalForm)
        res.dim = self.dim
        res.terms = out
        return res

    def __neg__(self) -> "LocalForm":
        res = LocalForm.__new__(LocalForm)
        res.dim = self.dim
        res.terms = {k: -s for k, s in self.terms.items()}
        return res

    def __sub__(self, other: "LocalForm") -> "LocalForm":
        return self + (-other)

    def scale(self, c: Union[int, Fraction, GradedScalar]) -> "LocalForm":
        """Left multiplication by a constant or an even x-free scalar."""
        if isinstance(c, GradedScalar):
            return wedge(LocalForm.from_scalar(self.dim, c), self)
        out = {k: s * Fraction(c) for k, s in self.terms.items()}
        return LocalForm(self.dim, out)

    def __mul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    # -- degrees ----------------------------------------------------------

    def hdeg(self) -> Optional[int]:
        degs = {len(k[0]) for k in self.terms}
        return degs.pop() if len(degs) == 1 else None

    def vdeg(self) -> Optional[int]:
        degs = {len(k[1]) for k in self.terms}
        return degs.pop() if len(degs) == 1 else None

    def bidegree(self) -> Optional[tuple[int, int]]:
        """(vertical, horizontal) degree when homogeneous."""
        h, v = self.hdeg(), self.vdeg()
        if h is None or v is None:
            return None
        return (v, h)

    def parity(self) -> Optional[int]:
        vals = set()
        for (dxs, contacts), s in self.terms.items():
            sp = s.grade_of("parity")
            if sp is None:
                return None
            base = (len(dxs) + sum(_contact_parity(g) for g in contacts)) % 2
            vals.add((sp + base) % 2)
            if len(vals) > 1:
                return None
        return vals.pop() if vals else None

    def ghost(self) -> Optional[int]:
        vals = set()
        for (dxs, contacts), s in self.terms.items():
            sg = s.grade_of("ghost")
            if sg is None:
                return None
            vals.add(sg + sum(kernel.gen_ghost(g) for g in contacts))
            if len(vals) > 1:
                return None
        return vals.pop() if vals else None

    def weight(self, grading: str) -> Optional[int]:
        """Uniform momentum or polyvector weight, contacts included."""
        role = {"momentum": kernel.ROLE_SOURCE, "polyvector": kernel.ROLE_ANTIFIELD}[grading]
        vals = set()
        for (dxs, contacts), s in self.terms.items():
            split = s.grade_split(grading)
            if len(split) != 1:
                return None
            (w,) = split.keys()
            vals.add(w + sum(1 for g in contacts if kernel.gen_role(g) == role))
            if len(vals) > 1:
                return None
        return vals.pop() if vals else None

    def weight_split(self, grading: str) -> dict[int, "LocalForm"]:
        """Decompose into homogeneous momentum or polyvector weight."""
        role = {"momentum": kernel.ROLE_SOURCE, "polyvector": kernel.ROLE_ANTIFIELD}[grading]
        out: dict[int, dict[Key, GradedScalar]] = {}
        for (dxs, contacts), s in self.terms.items():
            cdeg = sum(1 for g in contacts if kernel.gen_role(g) == role)
            for w, part in s.grade_split(grading).items():
                out.setdefault(w + cdeg, {})[(dxs, contacts)] = part
        return {w: LocalForm(self.dim, t) for w, t in sorted(out.items())}

    def bidegree_split(self) -> dict[tuple[int, int], "LocalForm"]:
        """Split into (vertical, horizontal) homogeneous pieces."""
        out: dict[tuple[int, int], dict[Key, GradedScalar]] = {}
        for k, s in self.terms.items():
            out.setdefault((len(k[1]), len(k[0])), {})[k] = s
        return {bd: LocalForm(self.dim, t) for bd, t in sorted(out.items())}

    # -- inspection -------------------------------------------------------

    def jet_generators(self) -> set[Gen]:
        gens = set()
        for (dxs, contacts), s in self.terms.items():
            gens.update(s.jet_generators())
            gens.update(contacts)
        return gens

    def max_jet_order(self) -> int:
        m = 0
        for (dxs, contacts), s in self.terms.items():
            m = max(m, s.max_jet_order())
            for g in contacts:
                m = max(m, len(kernel.jet_mi(g)))
        return m

    def coefficient(self, key: Key) -> GradedScalar:
        return self.terms.get(key, kernel.ZERO)

    def map_scalars(self, fn) -> "LocalForm":
        """Apply fn to every coefficient scalar (no re-sorting: fn must not
        change which term a contribution belongs to)."""
        return LocalForm(self.dim, {k: fn(s) for k, s in self.terms.items()})


Factor = tuple  # ("s", GradedScalar) | ("dx", int) | ("c", Gen)


def _append_factor(dim: int, key: Key,
                   s: GradedScalar, factor: Factor,
                   sink: list) -> None:
    """Right-multiply the single term (key, s) by one factor, accumulating
    the resulting terms into ``sink`` as (key, scalar) pairs."""
    dxs, contacts = key
    kind = factor[0]
    if kind == "s":
        f = factor[1]
        if not f:
            return
        crossed = len(dxs) + sum(_contact_parity(g) for g in contacts)
        for p, part in f.grade_split("parity").items():
            sign = -1 if (p and crossed % 2) else 1
            sink.append((key, (s * part) * sign))
    elif kind == "dx":
        i = factor[1]
        if not 0 <= i < dim:
            raise ValueError(f"dx index {i} out of range for dimension {dim}")
        if i in dxs:
            return
        pos = sum(1 for p in dxs if p < i)
        crossed = (len(dxs) - pos) + sum(_contact_parity(g) for g in contacts)
        sign = -1 if crossed % 2 else 1
        new_dxs = dxs[:pos] + (i,) + dxs[pos:]
        sink.append(((new_dxs, contacts), s * sign))
    elif kind == "c":
        g = factor[1]
        p = _contact_parity(g)
        if p and g in contacts:
            return
        pos = len(contacts)
        while pos > 0 and contacts[pos - 1] > g:
            pos -= 1
        crossed = sum(_contact_parity(h) for h in contacts[pos:])
        sign = -1 if (p and crossed % 2) else 1
        new_contacts = contacts[:pos] + (g,) + contacts[pos:]
        sink.append(((dxs, new_contacts), s * sign))
    else:
        raise ValueError(f"unknown factor kind {kind!r}")


def _accumulate(out: dict[Key, GradedScalar], dim: int,
                factors: Sequence[Factor], coeff: Union[int, Fraction] = 1,
                start: tuple[Key, GradedScalar] = (_EMPTY, kernel.ONE)) -> None:
    """Canonicalize the wedge of ``factors`` (times coeff) into ``out``."""
    current = [(start[0], start[1] * Fraction(coeff))]
    for factor in factors:
        nxt: list = []
        for key, s in current:
            if s:
                _append_factor(dim, key, s, factor, nxt)
        current = nxt
        if not current:
            return
    for key, s in current:
        if not s:
            continue
        t = out.get(key)
        t = s if t is None else t + s
        if t:
            out[key] = t
        else:
            out.pop(key, None)


def _term_factors(key: Key, s: GradedScalar) -> list[Factor]:
    dxs, contacts = key
    fs: list[Factor] = [("s", s)]
    fs += [("dx", i) for i in dxs]
    fs += [("c", g) for g in contacts]
    return fs


def wedge(a: LocalForm, b: LocalForm) -> LocalForm:
    if a.dim != b.dim:
        raise ValueError("wedge of forms over different base dimensions")
    out: dict[Key, GradedScalar] = {}
    for kb, sb in b.terms.items():
        factors = _term_factors(kb, sb)
        for ka, sa in a.terms.items():
            _accumulate(out, a.dim, factors, start=(ka, sa))
    return LocalForm(a.dim, out)


def wedge_all(forms: Sequence[LocalForm]) -> LocalForm:
    if not forms:
        raise ValueError("empty wedge")
    acc = forms[0]
    for f in forms[1:]:
        acc = wedge(acc, f)
    return acc


# -- basic builders ---------------------------------------------------------


def scalar_form(dim: int, s: Union[GradedScalar, int, Fraction]) -> LocalForm:
    return LocalForm.from_scalar(dim, s)


def dx(dim: int, i: int) -> LocalForm:
    if not 0 <= i < dim:
        raise ValueError(f"dx index {i} out of range for dimension {dim}")
    return LocalForm(dim, {((i,), ()): kernel.ONE})


def contact(dim: int, g: Gen) -> LocalForm:
    if not kernel.is_jet(g):
        raise ValueError("contact forms exist only for jet variables")
    return LocalForm(dim, {((), (g,)): kernel.ONE})


def volume(dim: int) -> LocalForm:
    return LocalForm(dim, {(tuple(range(dim)), ()): kernel.ONE})


def constant_horizontal(dim: int,
                        terms: Sequence[tuple[Union[int, Fraction],
                                              tuple[int, ...]]]) -> LocalForm:
    """Constant-coefficient horizontal form given as ((coeff, indices), ...)."""
    out = LocalForm.zero(dim)
    for co, mi in terms:
        piece = scalar_form(dim, Fraction(co))
        for j in mi:
            piece = wedge(piece, dx(dim, j))
        out = out + piece
    return out


# -- differentials ----------------------------------------------------------


def d(form: LocalForm) -> LocalForm:
    """Horizontal differential (odd right derivation)."""
    out: dict[Key, GradedScalar] = {}
    dim = form.dim
    for (dxs, contacts), s in form.terms.items():
        base_par = (len(dxs) + sum(_contact_parity(g) for g in contacts)) % 2
        # derivative of the coefficient scalar
        sign0 = -1 if base_par else 1
        for j in range(dim):
            ds = s.total_derivative(j)
            if ds:
                factors: list[Factor] = [("s", ds), ("dx", j)]
                factors += [("dx", i) for i in dxs]
                factors += [("c", g) for g in contacts]
                _accumulate(out, dim, factors, sign0)
        # derivative of each contact factor: d(phi_I) -> d(phi_{Ij}) ^ dx^j
        for idx, g in enumerate(contacts):
            after = sum(_contact_parity(h) for h in contacts[idx + 1:]) % 2
            sign = -1 if after else 1
            for j in range(dim):
                g2 = kernel.jet_shift(g, j)
                factors = [("s", s)]
                factors += [("dx", i) for i in dxs]
                factors += [("c", h) for h in contacts[:idx]]
                factors += [("c", g2), ("dx", j)]
                factors += [("c", h) for h in contacts[idx + 1:]]
                _accumulate(out, dim, factors, sign)
    return LocalForm(dim, out)


def delta(form: LocalForm) -> LocalForm:
    """Vertical differential (odd right derivation)."""
    out: dict[Key, GradedScalar] = {}
    dim = form.dim
    for (dxs, contacts), s in form.terms.items():
        base_par = (len(dxs) + sum(_contact_parity(g) for g in contacts)) % 2
        sign0 = -1 if base_par else 1
        for g in sorted(s.jet_generators()):
            df = s.right_partial(g)
            if df:
                factors: list[Factor] = [("s", df), ("c", g)]
                factors += [("dx", i) for i in dxs]
                factors += [("c", h) for h in contacts]
                _accumulate(out, dim, factors, sign0)
    return LocalForm(dim, out)


# -- evolutionary vector fields ---------------------------------------------


class EvoField:
    """Evolutionary vertical vector field: components on underived fields,
    prolonged to all jet variables by total derivatives.

    ``components`` maps underived jet generators to their component scalars;
    missing entries are zero.  Parity and ghost number are inferred from the
    nonzero components and checked for consistency.
    """

    def __init__(self, spectrum: Spectrum,
                 components: Mapping[Gen, GradedScalar],
                 parity: Optional[int] = None,
                 ghost: Optional[int] = None,
                 name: str = ""):
        self.spectrum = spectrum
        self.name = name
        comps: dict[Gen, GradedScalar] = {}
        for g, v in components.items():
            if not kernel.is_jet(g):
                raise ValueError("EvoField components must be keyed by jet variables")
            if kernel.jet_mi(g):
                raise ValueError("EvoField components must be keyed by underived variables")
            if v:
                comps[g] = v
        inferred_p = set()
        inferred_g = set()
        for g, v in comps.items():
            vp = v.grade_of("parity")
            if vp is not None:
                inferred_p.add((vp + kernel.gen_parity(g)) % 2)
            vg = v.grade_of("ghost")
            if vg is not None:
                inferred_g.add(vg - kernel.gen_ghost(g))
        if parity is None:
            if len(inferred_p) > 1:
                raise ValueError("EvoField components have inconsistent parity")
            parity = inferred_p.pop() if inferred_p else kernel.EVEN
        elif inferred_p - {parity}:
            raise ValueError("EvoField component parity does not match declared parity")
        if ghost is None:
            ghost = inferred_g.pop() if len(inferred_g) == 1 else None
        self.parity = parity
        self.ghost = ghost
        self._components = comps
        self._cache: dict[Gen, GradedScalar] = dict(comps)

    def component(self, g: Gen) -> GradedScalar:
        """Prolonged component X^a_I = total_I(X^a)."""
        cached = self._cache.get(g)
        if cached is not None:
            return cached
        mi = kernel.jet_mi(g)
        if not mi:
            val = kernel.ZERO
        else:
            base = self._cache.get(kernel.jet_base(g))
            if base is None and kernel.jet_base(g) not in self._components:
                val = kernel.ZERO
            else:
                j = mi[-1]
                parent = g[:4] + (mi[:-1],) + g[5:]
                val = self.component(parent).total_derivative(j)
        self._cache[g] = val
        return val

    def base_components(self) -> dict[Gen, GradedScalar]:
        return dict(self._components)

    def apply(self, s: GradedScalar) -> GradedScalar:
        """Action on a scalar: sum of (right-partial) * component."""
        total = kernel.ZERO
        for g in s.jet_generators():
            part = s.right_partial(g)
            if part:
                total = total + part * self.component(g)
        return total

    def is_zero(self) -> bool:
        return all(not v for v in self._components.values())

    def __repr__(self) -> str:
        from . import printing
        bits = [f"d/d{printing.gen_str(g)} . ({printing.scalar_str(v)})"
                for g, v in sorted(self._components.items())]
        label = self.name or "EvoField"
        return f"{label}[" + "; ".join(bits) + "]" if bits else f"{label}[0]"


def scale_field(X: EvoField, c: Union[int, Fraction]) -> EvoField:
    comps = {g: v * Fraction(c) for g, v in X.base_components().items()}
    return EvoField(X.spectrum, comps, parity=X.parity, ghost=X.ghost, name=X.name)


def add_fields(X: EvoField, Y: EvoField) -> EvoField:
    if X.parity != Y.parity:
        raise ValueError("cannot add evolutionary fields of different parity")
    comps = X.base_components()
    for g, v in Y.base_components().items():
        comps[g] = comps.get(g, kernel.ZERO) + v
    return EvoField(X.spectrum, comps, parity=X.parity)


def contract(X: EvoField, form: LocalForm) -> LocalForm:
    """Interior product with an evolutionary field: a right derivation of
    parity parity(X) + 1 sending d(phi^a_I) to X^a_I."""
    out: dict[Key, GradedScalar] = {}
    dim = form.dim
    dpar = (X.parity + 1) % 2
    for (dxs, contacts), s in form.terms.items():
        for idx, g in enumerate(contacts):
            comp = X.component(g)
            if not comp:
                continue
            after = sum(_contact_parity(h) for h in contacts[idx + 1:]) % 2
            sign = -1 if (dpar and after) else 1
            factors: list[Factor] = [("s", s)]
            factors += [("dx", i) for i in dxs]
            factors += [("c", h) for h in contacts[:idx]]
            factors += [("s", comp)]
            factors += [("c", h) for h in contacts[idx + 1:]]
            _accumulate(out, dim, factors, sign)
    return LocalForm(dim, out)


def lie(X: EvoField, form: LocalForm) -> LocalForm:
    """Vertical Lie derivative along an evolutionary field."""
    first = contract(X, delta(form))
    second = delta(contract(X, form))
    if X.parity:
        return first - second
    return first + second


def commutator(X: EvoField, Y: EvoField) -> EvoField:
    """Graded commutator of evolutionary fields, itself evolutionary."""
    sign = -1 if (X.parity and Y.parity) else 1
    comps: dict[Gen, GradedScalar] = {}
    keys = set(X.base_components()) | set(Y.base_components())
    for g in keys:
        comps[g] = X.apply(Y.component(g)) - sign * Y.apply(X.component(g))
    return EvoField(X.spectrum, comps, parity=(X.parity + Y.parity) % 2)


def interior_coordinate(form: LocalForm, j: int) -> LocalForm:
    """Left interior product with the coordinate vector along direction j.

    Defined on horizontal-only forms; used to build the dual bases
    d^{n-1}x^i and their iterates from the volume form.
    """
    out: dict[Key, GradedScalar] = {}
    for (dxs, contacts), s in form.terms.items():
        if contacts:
            raise ValueError("interior_coordinate expects a horizontal form")
        if j not in dxs:
            continue
        pos = dxs.index(j)
        sp = s.grade_of("parity")
        if sp is None:
            for p, part in s.grade_split("parity").items():
                sign = -1 if (p + pos) % 2 else 1
                _add_term(out, (dxs[:pos] + dxs[pos + 1:], ()), part * sign)
        else:
            sign = -1 if (sp + pos) % 2 else 1
            _add_term(out, (dxs[:pos] + dxs[pos + 1:], ()), s * sign)
    return LocalForm(form.dim, out)


def _add_term(out: dict[Key, GradedScalar], key: Key, s: GradedScalar) -> None:
    t = out.get(key)
    t = s if t is None else t + s
    if t:
        out[key] = t
    else:
        out.pop(key, None)
