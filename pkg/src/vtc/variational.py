"""Exactness machinery for the horizontal complex.

Euler-Lagrange derivatives, the unique source-form part of a (1,n)-form,
horizontal homotopy inversion of d, primitives of total divergences, and
mod-d equivalence testing.  Everything is exact: decompositions recompose to
the input on the nose, and equivalence verdicts are symbolic identities.

Inversion of d (``_solve_d``) uses undetermined coefficients over a finite
candidate basis grown by preimage saturation: starting from the monomials of
the right-hand side, collect every form monomial whose horizontal
differential can reach them (lowering one derivative index and one dx, or
trading a dx for a base-coordinate power), close up under the new rows this
creates, and solve the resulting sparse rational system.  If some sigma with
d(sigma) = rho exists supported anywhere, restricting to the saturated
candidate set keeps the system solvable, so failure of the bounded solve is
an honest obstruction report rather than a search artifact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from . import forms, kernel, linsolve
from .forms import LocalForm
from .kernel import Gen, GradedScalar


class DegreeError(Exception):
    """Input form has the wrong (or inhomogeneous) bidegree."""


class NotDivergenceError(Exception):
    """A (0,n)-form with nonvanishing Euler-Lagrange derivatives."""

    def __init__(self, residual: dict[Gen, GradedScalar]):
        self.residual = residual
        names = ", ".join(sorted(_gen_label(g) for g in residual))
        super().__init__(f"not a total divergence: nonzero variation along {names}")


class ObstructionError(Exception):
    """A candidate divergence with a field-independent part."""


class NoPrimitiveError(Exception):
    """Bounded inversion of d found no primitive."""


def _gen_label(g: Gen) -> str:
    from . import printing
    return printing.gen_str(g)


# ---------------------------------------------------------------------------
# Euler-Lagrange derivatives and source forms
# ---------------------------------------------------------------------------


def _top_scalar(lam: LocalForm) -> GradedScalar:
    """Coefficient of the volume form of a (0,n)-form."""
    n = lam.dim
    vol_key = (tuple(range(n)), ())
    for key in lam.terms:
        if key != vol_key:
            raise DegreeError(f"expected a (0,{n})-form")
    return lam.terms.get(vol_key, kernel.ZERO)


def el_derivative(lam: LocalForm) -> dict[Gen, GradedScalar]:
    """Euler-Lagrange derivatives of a horizontal top form.

    Returns a map from underived field generators to the variation
    (-total)_I applied to the right jet-partials; fields with vanishing
    variation are omitted.
    """
    L = _top_scalar(lam)
    acc: dict[Gen, GradedScalar] = {}
    for g in sorted(L.jet_generators()):
        part = L.right_partial(g)
        if not part:
            continue
        mi = kernel.jet_mi(g)
        term = part.total_derivative_mi(mi)
        if len(mi) % 2:
            term = -term
        base = kernel.jet_base(g)
        acc[base] = acc.get(base, kernel.ZERO) + term
    return {g: v for g, v in acc.items() if v}


def _contact_vol_sign(dim: int, g: Gen) -> int:
    """Sign relating d(phi) ^ vol to the canonical vol ^ d(phi) layout."""
    probe = forms.wedge(forms.contact(dim, g), forms.volume(dim))
    ((key, s),) = probe.terms.items()
    ((mono, c),) = s.terms.items()
    return 1 if c > 0 else -1


def source_form(dim: int, components: dict[Gen, GradedScalar]) -> LocalForm:
    """Assemble sum of E_a ^ d(phi^a) ^ vol from coefficient scalars."""
    total = LocalForm.zero(dim)
    vol = forms.volume(dim)
    for g in sorted(components):
        E = components[g]
        if not E:
            continue
        if kernel.jet_mi(g):
            raise ValueError("source components must be keyed by underived variables")
        total = total + forms.wedge_all([forms.scalar_form(dim, E),
                                         forms.contact(dim, g), vol])
    return total


@dataclass
class SourceDecomposition:
    """Split of a (1,n)-form into its source part plus a total divergence."""

    source: LocalForm
    boundary: LocalForm
    components: dict[Gen, GradedScalar]

    def __iter__(self) -> Iterator[LocalForm]:
        return iter((self.source, self.boundary))


def source_decompose(alpha: LocalForm) -> SourceDecomposition:
    """Write a (1,n)-form as (source form) + d(boundary).

    Integration by parts is applied to the contact factor with the longest
    multi-index until only underived contacts remain; that residue is the
    unique source part.
    """
    n = alpha.dim
    vol_key = tuple(range(n))
    for (dxs, contacts) in alpha.terms:
        if dxs != vol_key or len(contacts) != 1:
            raise DegreeError(f"expected a (1,{n})-form")
    rem = alpha
    boundary = LocalForm.zero(n)
    while True:
        target: Optional[tuple] = None
        best = 0
        for (dxs, contacts) in rem.terms:
            g = contacts[0]
            k = len(kernel.jet_mi(g))
            if k > best or (k == best and k > 0 and (target is None or contacts > target[1])):
                best, target = k, (dxs, contacts)
        if best == 0:
            break
        dxs, contacts = target
        g = contacts[0]
        mi = kernel.jet_mi(g)
        j = mi[-1]
        lowered = g[:4] + (kernel.mi_remove(mi, j),) + g[5:]
        s = rem.terms[target]
        cand = forms.wedge_all([
            forms.scalar_form(n, s),
            forms.interior_coordinate(forms.volume(n), j),
            forms.contact(n, lowered),
        ])
        dc = forms.d(cand)
        high = dc.terms.get(target, kernel.ZERO)
        if high == s:
            sign = 1
        elif high == -s:
            sign = -1
        else:
            raise AssertionError("integration-by-parts step lost its leading term")
        rem = rem - sign * dc
        boundary = boundary + sign * cand
    components: dict[Gen, GradedScalar] = {}
    for (dxs, contacts), s in rem.terms.items():
        g = contacts[0]
        components[g] = components.get(g, kernel.ZERO) + s * _contact_vol_sign(n, g)
    components = {g: v for g, v in components.items() if v}
    return SourceDecomposition(source_form(n, components), boundary, components)


# ---------------------------------------------------------------------------
# Inversion of the horizontal differential
# ---------------------------------------------------------------------------

# A column/row key is one form monomial: (dx tuple, contact tuple, monomial).
MonoKey = tuple[tuple[int, ...], tuple[Gen, ...], kernel.Monomial]


def _form_mono_items(form: LocalForm) -> Iterator[tuple[MonoKey, Fraction]]:
    for (dxs, contacts), s in form.terms.items():
        for mono, c in s.terms.items():
            yield (dxs, contacts, mono), c


def _single(dim: int, key: MonoKey, coeff: Fraction = Fraction(1)) -> LocalForm:
    dxs, contacts, mono = key
    return LocalForm(dim, {(dxs, contacts): GradedScalar({mono: coeff})})


def _mono_x_degree(mono: kernel.Monomial) -> int:
    return sum(e for g, e in mono if g[0] == 1)


def _lower_contact(g: Gen, j: int) -> Gen:
    return g[:4] + (kernel.mi_remove(kernel.jet_mi(g), j),) + g[5:]


def _preimages(key: MonoKey, x_cap: int) -> Iterator[MonoKey]:
    """Candidate monomials whose horizontal differential can hit ``key``."""
    dxs, contacts, mono = key
    for pos, j in enumerate(dxs):
        rest = dxs[:pos] + dxs[pos + 1:]
        # lower a contact factor
        for idx, g in enumerate(contacts):
            if j in kernel.jet_mi(g):
                low = _lower_contact(g, j)
                newc = tuple(sorted(contacts[:idx] + (low,) + contacts[idx + 1:]))
                if kernel.gen_parity(low) == kernel.EVEN and _has_repeat_odd_contact(newc):
                    continue
                yield (rest, newc, mono)
        # lower a scalar jet factor
        for idx, (g, e) in enumerate(mono):
            if kernel.is_jet(g) and j in kernel.jet_mi(g):
                low = _lower_contact(g, j)
                head = mono[:idx] + ((g, e - 1),) if e > 1 else mono[:idx]
                sign, newm = kernel.mono_mul(head + mono[idx + 1:], ((low, 1),))
                if newm is not None:
                    yield (rest, contacts, newm)
        # trade the dx for a base-coordinate power
        if _mono_x_degree(mono) < x_cap:
            _, newm = kernel.mono_mul(mono, ((kernel.coord_gen(j), 1),))
            yield (rest, contacts, newm)


def _has_repeat_odd_contact(contacts: tuple[Gen, ...]) -> bool:
    # contacts of even fields are odd generators: no repeats allowed
    for i in range(1, len(contacts)):
        if contacts[i] == contacts[i - 1] and kernel.gen_parity(contacts[i]) == kernel.EVEN:
            return True
    return False


def _block_key(key: MonoKey) -> tuple:
    """Invariant of a form monomial preserved by d: per-component jet factor
    counts together with parameter and auxiliary powers."""
    dxs, contacts, mono = key
    counts: dict = {}
    for g in contacts:
        k = (g[1], g[3])
        counts[k] = counts.get(k, 0) + 1
    for g, e in mono:
        if kernel.is_jet(g):
            k = (g[1], g[3])
            counts[k] = counts.get(k, 0) + e
        elif g[0] in (0, 3):
            counts[g] = counts.get(g, 0) + e
    return tuple(sorted(counts.items(), key=repr))


def _solve_d_block(dim: int, rhs: dict[MonoKey, Fraction], x_cap: int,
                   ) -> Optional[dict[MonoKey, Fraction]]:
    candidates: dict[MonoKey, dict[MonoKey, Fraction]] = {}
    seen_rows: set[MonoKey] = set(rhs)
    queue = sorted(rhs)
    while queue:
        next_rows: list[MonoKey] = []
        for row in queue:
            for cand in _preimages(row, x_cap):
                if cand in candidates:
                    continue
                try:
                    image = dict(_form_mono_items(forms.d(_single(dim, cand))))
                except kernel.JetOrderCapExceeded:
                    continue
                if not image:
                    continue
                candidates[cand] = image
                for r in image:
                    if r not in seen_rows:
                        seen_rows.add(r)
                        next_rows.append(r)
        queue = sorted(next_rows)
    by_row: dict[MonoKey, dict[MonoKey, Fraction]] = {}
    for cand, image in candidates.items():
        for row, c in image.items():
            by_row.setdefault(row, {})[cand] = c
    equations = []
    for row in sorted(seen_rows):
        equations.append((by_row.get(row, {}), rhs.get(row, Fraction(0))))
    return linsolve.solve_linear(equations)


def _solve_d(rho: LocalForm) -> LocalForm:
    """Solve d(sigma) = rho over a saturated candidate basis.

    The system splits into independent blocks labelled by the jet content
    d preserves; each block is first attempted without raising the
    base-coordinate degree, which suffices for translation-covariant inputs,
    and retried with one extra coordinate power before giving up.  Raises
    NoPrimitiveError when inconsistent (rho not exact within the bounds).
    """
    if rho.is_zero():
        return LocalForm.zero(rho.dim)
    dim = rho.dim
    blocks: dict[tuple, dict[MonoKey, Fraction]] = {}
    for key, c in _form_mono_items(rho):
        blocks.setdefault(_block_key(key), {})[key] = c
    sigma = LocalForm.zero(dim)
    for label in sorted(blocks, key=repr):
        rhs = blocks[label]
        x_base = max(_mono_x_degree(m) for (_, _, m) in rhs)
        solution = _solve_d_block(dim, rhs, x_base)
        if solution is None:
            solution = _solve_d_block(dim, rhs, x_base + 1)
        if solution is None:
            raise NoPrimitiveError(
                "no primitive found within jet order "
                f"{rho.max_jet_order()} and coordinate degree {x_base + 1}")
        for cand in sorted(solution):
            c = solution[cand]
            if c:
                sigma = sigma + _single(dim, cand, c)
    return sigma


def horizontal_homotopy(rho: LocalForm) -> LocalForm:
    """Homotopy inverse of d in positive vertical degree.

    For vertical degree q >= 1 this satisfies d h + h d = identity below the
    top horizontal degree; at top degree it returns a primitive of an exact
    input and reports the obstruction otherwise.
    """
    if rho.is_zero():
        return LocalForm.zero(rho.dim)
    bd = rho.bidegree()
    if bd is None:
        raise DegreeError("homotopy needs a bidegree-homogeneous form")
    q, p = bd
    if q < 1:
        raise DegreeError("horizontal homotopy is defined for vertical degree >= 1")
    if p < 1:
        raise DegreeError("no horizontal degree left to invert")
    if p == rho.dim:
        return _solve_d(rho)
    return _solve_d(rho - _solve_d(forms.d(rho)))


def divergence_primitive(f: LocalForm) -> LocalForm:
    """Invert d on a horizontal top form that is a total divergence."""
    if f.is_zero():
        return LocalForm.zero(f.dim)
    top = _top_scalar(f)
    residual = el_derivative(f)
    if residual:
        raise NotDivergenceError(residual)
    field_free = GradedScalar(
        {m: c for m, c in top.terms.items()
         if not any(kernel.is_jet(g) for g, _ in m)})
    if field_free:
        raise ObstructionError(
            "field-independent density has no local primitive of compact support")
    return _solve_d(f)


# ---------------------------------------------------------------------------
# Equivalence modulo total divergences
# ---------------------------------------------------------------------------


def equiv_mod_d(a: LocalForm, b: LocalForm) -> bool:
    """Whether a - b is a horizontal differential.

    Tested per bidegree block: a top form is exact over R^n iff all its
    Euler-Lagrange derivatives vanish; a (1,n) block iff its source part
    vanishes; positive vertical degree below top iff it is d-closed (row
    exactness); higher vertical degree at the top via the bounded solver.
    """
    if a.dim != b.dim:
        raise DegreeError("forms live over different base dimensions")
    bda, bdb = a.bidegree(), b.bidegree()
    if a and b and bda is not None and bdb is not None and bda != bdb:
        raise DegreeError(f"cannot compare bidegrees {bda} and {bdb}")
    rho = a - b
    if rho.is_zero():
        return True
    n = rho.dim
    for (q, p), block in rho.bidegree_split().items():
        if p == 0:
            return False
        if q == 0:
            if p == n:
                if el_derivative(block):
                    return False
            else:
                if not forms.d(block).is_zero():
                    return False
        elif p == n:
            if q == 1:
                if source_decompose(block).components:
                    return False
            else:
                try:
                    _solve_d(block)
                except NoPrimitiveError:
                    return False
        else:
            if not forms.d(block).is_zero():
                return False
    return True
