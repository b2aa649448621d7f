"""Degree gradings, exponential jet-space flows, and derived multibrackets.

This module provides the bookkeeping for the two auxiliary gradings carried
by the jet algebra (the number of source factors and the number of antifield
factors), the formal diffeomorphisms e^X generated by degree-raising
evolutionary fields, a bounded search that homogenizes an inhomogeneous
presymplectic form by such a flow, and the nested-bracket construction that
turns a degree-n generator into an n-ary bracket on degree-0 densities.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import forms, kernel, linsolve, symplectic, variational
from .forms import EvoField, LocalForm
from .kernel import Gen, GradedScalar, Spectrum

KIND_MOMENTUM = "momentum"
KIND_POLYVECTOR = "polyvector"

_KIND_ROLES = {
    KIND_MOMENTUM: kernel.ROLE_SOURCE,
    KIND_POLYVECTOR: kernel.ROLE_ANTIFIELD,
}


class TruncationError(Exception):
    """An exponential series failed to stabilize within its order bound."""


class NoHomogenizerError(Exception):
    """The bounded homogenizer search came up empty.

    This reports failure of the search within the configured jet-order and
    polynomial-degree bounds, not nonexistence of a homogenizer.
    """


class ArityError(Exception):
    """Multibracket arguments do not match the generator's degree."""


# ---------------------------------------------------------------------------
# Degree splitting and Euler fields
# ---------------------------------------------------------------------------


def degree_split(a: LocalForm, kind: str) -> list[tuple[int, LocalForm]]:
    """Split a form into eigenforms of the chosen counting degree.

    ``kind`` selects which factors are counted: ``"momentum"`` counts source
    variables, ``"polyvector"`` counts antifield variables, in scalar
    coefficients and contact factors alike.  Returns (degree, component)
    pairs in increasing degree; their sum is the input.
    """
    if kind not in _KIND_ROLES:
        raise ValueError(f"unknown grading kind {kind!r}")
    return sorted(a.weight_split(kind).items())


def counting_field(spectrum: Spectrum, kind: str) -> EvoField:
    """The literal Euler field of a grading: X^a = phi^a on counted fields.

    Its Lie derivative multiplies each homogeneous component by its degree.
    """
    role = _KIND_ROLES[kind]
    comps: dict[Gen, GradedScalar] = {}
    for f in spectrum.fields:
        if f.role != role:
            continue
        for comp in f.components():
            g = kernel.jet_gen(spectrum, f.name, comp, ())
            comps[g] = GradedScalar.generator(g)
    return EvoField(spectrum, comps, parity=kernel.EVEN, ghost=0,
                    name=f"E[{kind}]")


@dataclass(frozen=True)
class EulerField:
    """A counting field, optionally conjugated by a flow e^X.

    Without a conjugator this is the literal field whose Lie derivative
    reads off the degree.  With one, the field is transported through the
    inverse flow, so that it measures the degree of the flow's image; a
    structure made homogeneous by e^X is an exact eigenform of the result.
    """

    kind: str
    conjugator: Optional[EvoField] = None
    truncation_order: int = 16

    def field(self, spectrum: Spectrum) -> EvoField:
        base = counting_field(spectrum, self.kind)
        if self.conjugator is None or self.conjugator.is_zero():
            return base
        total = base
        term = base
        for k in range(1, self.truncation_order + 1):
            term = forms.scale_field(
                forms.commutator(self.conjugator, term), Fraction(-1, k))
            if term.is_zero():
                return total
            total = forms.add_fields(total, term)
        raise TruncationError(
            f"conjugated Euler field did not stabilize within order "
            f"{self.truncation_order}")


# ---------------------------------------------------------------------------
# Exponential flows
# ---------------------------------------------------------------------------


@dataclass
class HomotopyDiffeo:
    """Formal diffeomorphism of the jet space generated by a vertical field.

    The pullback acts as e^{L_X}; the series must terminate on each input
    within ``truncation_order`` steps, which holds whenever X strictly
    raises a bounded grading (the only case produced here).
    """

    X: EvoField
    truncation_order: int = 16
    certificate: Optional["HomogenizerCertificate"] = None

    def inverse(self) -> "HomotopyDiffeo":
        return HomotopyDiffeo(forms.scale_field(self.X, -1),
                              self.truncation_order)


@dataclass(frozen=True)
class HomogenizerCertificate:
    """Record of a verified homogenization: h*(original) ~ leading mod d."""

    original: LocalForm
    leading: LocalForm
    degree: int
    pulled_back: LocalForm


def pullback(h: HomotopyDiffeo, a: LocalForm) -> LocalForm:
    """Apply the flow's pullback e^{L_X} to a form, term by term.

    Raises TruncationError, reporting the order bound, if the Lie series
    has not terminated after ``truncation_order`` steps.
    """
    total = a
    term = a
    for k in range(1, h.truncation_order + 1):
        term = forms.lie(h.X, term).scale(Fraction(1, k))
        if term.is_zero():
            return total
        total = total + term
    raise TruncationError(
        f"pullback series did not terminate within order {h.truncation_order}")


# ---------------------------------------------------------------------------
# Homogenizer search
# ---------------------------------------------------------------------------


def _ansatz_pool(spectrum: Spectrum, jet_order: int) -> list[Gen]:
    pool: list[Gen] = [kernel.param_gen(p) for p in spectrum.parameters]
    for f in spectrum.fields:
        for comp in f.components():
            for r in range(jet_order + 1):
                for mi in itertools.combinations_with_replacement(
                        range(spectrum.dim), r):
                    pool.append(kernel.jet_gen(spectrum, f.name, comp, mi))
    return sorted(pool)


def _candidate_monomials(pool: Sequence[Gen], poly_degree: int,
                         ) -> dict[tuple[int, int, int, int], list[kernel.Monomial]]:
    """Monomials over the pool bucketed by parity, ghost and counted degrees."""
    info = [(g, kernel.gen_parity(g), kernel.gen_ghost(g)) for g in pool]
    buckets: dict[tuple[int, int, int, int], list[kernel.Monomial]] = {}
    for r in range(1, poly_degree + 1):
        for combo in itertools.combinations_with_replacement(info, r):
            mono: list[tuple[Gen, int]] = []
            ok = True
            for g, p, _ in combo:
                if mono and mono[-1][0] == g:
                    if p:
                        ok = False
                        break
                    mono[-1] = (g, mono[-1][1] + 1)
                else:
                    mono.append((g, 1))
            if not ok:
                continue
            par = sum(p for _, p, _ in combo) % 2
            gh = sum(h for _, _, h in combo)
            srcdeg = kernel.mono_degree(tuple(mono), kernel.ROLE_SOURCE)
            afdeg = kernel.mono_degree(tuple(mono), kernel.ROLE_ANTIFIELD)
            buckets.setdefault((par, gh, srcdeg, afdeg), []).append(tuple(mono))
    return buckets


def _stage_basis(spectrum: Spectrum, kind: str, raise_by: int,
                 buckets: dict) -> list[tuple[Gen, kernel.Monomial]]:
    role = _KIND_ROLES[kind]
    basis: list[tuple[Gen, kernel.Monomial]] = []
    for f in spectrum.fields:
        own = 1 if f.role == role else 0
        for comp in f.components():
            direction = kernel.jet_gen(spectrum, f.name, comp, ())
            for (par, gh, srcdeg, afdeg), monos in buckets.items():
                if par != f.parity or gh != f.ghost:
                    continue
                counted = srcdeg if kind == KIND_MOMENTUM else afdeg
                if counted != raise_by + own:
                    continue
                basis.extend((direction, m) for m in monos)
    return basis


def _basis_field(spectrum: Spectrum, direction: Gen,
                 mono: kernel.Monomial) -> EvoField:
    return EvoField(spectrum, {direction: GradedScalar({mono: Fraction(1)})},
                    parity=kernel.EVEN, ghost=0)


def _stage_solve(spectrum: Spectrum, leading: LocalForm, residual: LocalForm,
                 basis: Sequence[tuple[Gen, kernel.Monomial]],
                 ) -> Optional[dict[int, Fraction]]:
    """Coefficients c with sum_i c_i L_{X_i}(leading) + residual = 0 mod d."""
    images = []
    for direction, mono in basis:
        images.append(forms.lie(_basis_field(spectrum, direction, mono),
                                leading))
    rows: dict[tuple, dict] = {}
    for i, im in enumerate(images):
        for key, c in variational._form_mono_items(im):
            rows.setdefault(key, {})[("c", i)] = c
    rhs: dict[tuple, Fraction] = {}
    for key, c in variational._form_mono_items(residual):
        rhs[key] = rhs.get(key, Fraction(0)) + c
        rows.setdefault(key, {})
    equations = [(coeffs, -rhs.get(key, Fraction(0)))
                 for key, coeffs in sorted(rows.items(), key=repr)]
    sol = linsolve.solve_linear(equations)
    if sol is None:
        # Retry modulo exact horizontal differentials: saturate the row set
        # with d-images of candidate primitives of the rows already present.
        x_cap = max((variational._mono_x_degree(m)
                     for (_, _, m) in rows), default=0) + 1
        seen = set(rows)
        queue = sorted(seen, key=repr)
        d_cands: dict[tuple, dict[tuple, Fraction]] = {}
        while queue:
            fresh: list[tuple] = []
            for row in queue:
                for cand in variational._preimages(row, x_cap):
                    if cand in d_cands:
                        continue
                    try:
                        image = dict(variational._form_mono_items(
                            forms.d(variational._single(spectrum.dim, cand))))
                    except kernel.JetOrderCapExceeded:
                        continue
                    if not image:
                        continue
                    d_cands[cand] = image
                    for r in image:
                        if r not in seen:
                            seen.add(r)
                            fresh.append(r)
            queue = sorted(fresh, key=repr)
        full: dict[tuple, dict] = {key: dict(cs) for key, cs in rows.items()}
        for cand, image in d_cands.items():
            for row, c in image.items():
                full.setdefault(row, {})[("b", cand)] = c
        equations = [(coeffs, -rhs.get(key, Fraction(0)))
                     for key, coeffs in sorted(full.items(), key=repr)]
        sol = linsolve.solve_linear(equations)
    if sol is None:
        return None
    return {i: v for (tag, i), v in sol.items() if tag == "c" and v}


def find_homogenizer(omega1: LocalForm, spectrum: Spectrum, *,
                     kind: str = KIND_MOMENTUM,
                     jet_order: int = 2, poly_degree: int = 3,
                     truncation_order: int = 16) -> HomotopyDiffeo:
    """Search for a flow whose pullback reduces a form to its leading degree.

    The form is split by the chosen counting degree; the flow's generator is
    built degree by degree as a linear combination of candidate evolutionary
    fields (components polynomial in jet variables up to ``jet_order``
    derivatives and ``poly_degree`` factors, parameters included), with the
    coefficients determined by a linear solve modulo exact horizontal
    differentials.  The returned flow carries a certificate recording the
    verified identity; failure to find a generator within the bounds raises
    NoHomogenizerError, which does not assert that none exists.
    """
    parts = degree_split(omega1, kind)
    if not parts:
        zero = EvoField(spectrum, {}, parity=kernel.EVEN, ghost=0)
        return HomotopyDiffeo(zero, truncation_order,
                              HomogenizerCertificate(omega1, omega1, 0, omega1))
    k0, leading = parts[0]
    if leading.is_zero():
        raise NoHomogenizerError("leading degree component vanishes")
    X_total = EvoField(spectrum, {}, parity=kernel.EVEN, ghost=0)
    buckets = None
    for _stage in range(truncation_order):
        h = HomotopyDiffeo(X_total, truncation_order)
        current = pullback(h, omega1)
        tail = [(k, comp) for k, comp in degree_split(current, kind) if k > k0]
        if not tail:
            cert = HomogenizerCertificate(omega1, leading, k0, current)
            if not variational.equiv_mod_d(current, leading):
                raise NoHomogenizerError(
                    "flow stabilized on an inequivalent leading part")
            return HomotopyDiffeo(X_total, truncation_order, cert)
        gap, residual = tail[0]
        if buckets is None:
            buckets = _candidate_monomials(
                _ansatz_pool(spectrum, jet_order), poly_degree)
        basis = _stage_basis(spectrum, kind, gap - k0, buckets)
        sol = _stage_solve(spectrum, leading, residual, basis) if basis else None
        if sol is None:
            raise NoHomogenizerError(
                f"no generator of degree {gap - k0} within jet order "
                f"{jet_order} and polynomial degree {poly_degree} removes "
                f"the degree-{gap} component")
        comps: dict[Gen, GradedScalar] = {}
        for i, c in sorted(sol.items()):
            direction, mono = basis[i]
            comps.setdefault(direction, kernel.ZERO)
            comps[direction] = comps[direction] + GradedScalar({mono: c})
        X_total = forms.add_fields(
            X_total, EvoField(spectrum, comps, parity=kernel.EVEN, ghost=0))
    raise NoHomogenizerError(
        f"homogenization did not stabilize within {truncation_order} stages")


# ---------------------------------------------------------------------------
# Derived multibrackets
# ---------------------------------------------------------------------------


def derived_bracket(generator: LocalForm, args: Sequence[LocalForm],
                    structure: symplectic.PresympStructure,
                    kind: str = KIND_MOMENTUM) -> LocalForm:
    """n-ary bracket of degree-0 densities derived from a degree-n generator.

    Evaluates the nested bracket {...{{generator, a_1}, a_2}, ..., a_n}.
    The generator must be homogeneous of counting degree equal to the number
    of arguments, and every argument must have counting degree 0; mismatches
    raise ArityError.  Each nesting step consumes one degree, so the result
    is again of degree 0.
    """
    args = list(args)
    if not args:
        raise ArityError("derived bracket needs at least one argument")
    parts = [(k, c) for k, c in degree_split(generator, kind)
             if not c.is_zero()]
    if len(parts) != 1:
        found = [k for k, _ in parts]
        raise ArityError(
            f"generator is not degree-homogeneous (degrees {found})")
    gen_degree = parts[0][0]
    if gen_degree != len(args):
        raise ArityError(
            f"generator of degree {gen_degree} defines a {gen_degree}-ary "
            f"bracket, got {len(args)} arguments")
    for pos, a in enumerate(args):
        w = a.weight(kind)
        if w not in (0, None):
            raise ArityError(
                f"argument {pos} has counting degree {w}, expected 0")
    out = generator
    for a in args:
        out = symplectic.bracket(out, a, structure)
    return out
