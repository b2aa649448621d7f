"""Gauge systems (Q, omega): canonical presymplectic structures, Hamiltonian
vector fields, brackets of Hamiltonian forms, master-equation checks,
descent, and the BRST current.

The sign conventions are self-calibrating: reading a Hamiltonian field off a
source decomposition contracts the structure with probe fields carrying a
fresh auxiliary generator of the right parity, so every Koszul factor is
computed by the form engine itself rather than hard-coded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import forms, kernel, variational
from .forms import EvoField, LocalForm
from .kernel import Gen, GradedScalar, Spectrum

KIND_EVEN_COTANGENT = "even-cotangent"
KIND_ODD_BV = "odd-BV"
KIND_ODD_PHASE = "odd-phase"


class SpectrumError(Exception):
    """Field spectrum does not match the requested canonical structure."""


class NoHamiltonianFieldError(Exception):
    """The structure cannot be inverted along some field direction."""

    def __init__(self, direction: str, reason: str):
        self.direction = direction
        super().__init__(f"no Hamiltonian field: {reason} along {direction}")


class GradingError(Exception):
    pass


class DescentError(Exception):
    pass


@dataclass
class PresympStructure:
    """A delta-closed (2,m)-form, with its potential when known."""

    omega: LocalForm
    theta: Optional[LocalForm] = None
    kind: Optional[str] = None
    spectrum: Optional[Spectrum] = None

    def __post_init__(self) -> None:
        if not forms.delta(self.omega).is_zero():
            raise ValueError("presymplectic representative must be delta-closed")
        if self.theta is not None and forms.delta(self.theta) != self.omega:
            raise ValueError("theta is not a potential: delta(theta) != omega")

    @property
    def dim(self) -> int:
        return self.omega.dim

    def parity(self) -> Optional[int]:
        return self.omega.parity()

    def ghost(self) -> Optional[int]:
        return self.omega.ghost()

    def horizontal_degree(self) -> Optional[int]:
        return self.omega.hdeg()


def _pair_weight(spectrum: Spectrum, f: kernel.FieldSpec, comp: tuple[int, ...]) -> Fraction:
    w = Fraction(1)
    kinds = getattr(f, "slot_kinds", None) or ("base",) * len(f.shape)
    for kind_slot, c in zip(kinds, comp):
        if kind_slot == "base":
            w *= spectrum.metric[c]
        else:
            w *= spectrum.algebra_form[c]
    return w


_KIND_RULES = {
    KIND_ODD_BV: dict(parity_flip=True, ghost=lambda g: -g - 1),
    KIND_EVEN_COTANGENT: dict(parity_flip=False, ghost=lambda g: -g),
    KIND_ODD_PHASE: dict(parity_flip=True, ghost=lambda g: -g + 1),
}


def _dressed(spectrum: Spectrum, f: kernel.FieldSpec,
             comp: tuple[int, ...]) -> tuple[LocalForm, int]:
    """The field component as a form, wedged with its declared dressing."""
    dim = spectrum.dim
    sf = forms.scalar_form(dim, kernel.jet(spectrum, f.name, comp))
    if f.form_factor is None:
        return sf, 0
    degs = {len(mi) for _, mi in f.form_factor}
    if len(degs) != 1:
        raise SpectrumError(f"dressing of {f.name} mixes horizontal degrees")
    fac = forms.constant_horizontal(dim, f.form_factor)
    return forms.wedge(sf, fac), degs.pop()


def canonical_structure(spectrum: Spectrum, kind: str) -> PresympStructure:
    """Sum over conjugate pairs of d(conj) ^ d(field) ^ volume.

    Tensor slots are contracted with the base metric (or the declared
    invariant form on internal slots), the conjugate gradings are
    validated against the requested kind, and declared dressings are
    wedged in; dressed pairs must already fill the horizontal degree.
    """
    if kind not in _KIND_RULES:
        raise ValueError(f"unknown structure kind {kind!r}")
    rules = _KIND_RULES[kind]
    pairs = spectrum.conjugate_pairs()
    if not pairs:
        raise SpectrumError("spectrum declares no conjugate pairs")
    paired = {f.name for _, f in pairs} | {c.name for c, _ in pairs}
    for f in spectrum.fields:
        if f.name not in paired:
            raise SpectrumError(f"field {f.name} has no conjugate partner")
    dim = spectrum.dim
    vol = forms.volume(dim)
    omega = LocalForm.zero(dim)
    theta = LocalForm.zero(dim)
    for conj, base in pairs:
        if conj.shape != base.shape:
            raise SpectrumError(
                f"conjugate pair {conj.name}/{base.name} has mismatched shapes")
        want_parity = (base.parity + 1) % 2 if rules["parity_flip"] else base.parity
        if conj.parity != want_parity:
            raise SpectrumError(
                f"conjugate {conj.name} has parity {conj.parity}, expected {want_parity}")
        want_ghost = rules["ghost"](base.ghost)
        if conj.ghost != want_ghost:
            raise SpectrumError(
                f"conjugate {conj.name} has ghost {conj.ghost}, expected {want_ghost}")
        for comp in base.components():
            w = _pair_weight(spectrum, base, comp)
            dbar, kbar = _dressed(spectrum, conj, comp)
            dfld, kfld = _dressed(spectrum, base, comp)
            om_pair = forms.wedge(forms.delta(dbar), forms.delta(dfld)).scale(w)
            th_pair = forms.wedge(dbar, forms.delta(dfld)).scale(w)
            if kbar + kfld == 0:
                om_pair = forms.wedge(om_pair, vol)
                th_pair = forms.wedge(th_pair, vol)
            elif kbar + kfld != dim:
                raise SpectrumError(
                    f"dressings of pair {conj.name}/{base.name} fill horizontal "
                    f"degree {kbar + kfld}, expected 0 or {dim}")
            if forms.delta(th_pair) == -om_pair:
                th_pair = -th_pair
            omega = omega + om_pair
            theta = theta + th_pair
    return PresympStructure(omega, theta, kind, spectrum)


# ---------------------------------------------------------------------------
# Hamiltonian fields and the bracket
# ---------------------------------------------------------------------------


def _structure_directions(om: LocalForm) -> list[Gen]:
    """Underived contact directions of a canonical-shaped structure."""
    gens: set[Gen] = set()
    for (dxs, contacts) in om.terms:
        for g in contacts:
            if kernel.jet_mi(g):
                raise NoHamiltonianFieldError(
                    _label(g), "structure has differentiated contact directions")
            gens.add(g)
    return sorted(gens)


def _label(g: Gen) -> str:
    from . import printing
    return printing.gen_str(g)


_probe_counter = [0]


def _probe_rows(spectrum: Spectrum, om: LocalForm, h: Gen,
                probe_parity: int) -> dict[Gen, GradedScalar]:
    """Rows contributed by direction h: contract omega with a probe field
    whose component is a fresh auxiliary generator, then strip it off.

    The returned coefficient c is normalized so the direction's contribution
    to the source component along g is (component of h) * c."""
    _probe_counter[0] += 1
    aux = kernel.aux_gen(f".probe{_probe_counter[0]}", probe_parity)
    X = EvoField(spectrum, {h: GradedScalar.generator(aux)}, name="probe")
    contracted = forms.contract(X, om)
    vol_key = tuple(range(om.dim))
    dec_rows: dict[Gen, GradedScalar] = {}
    for (dxs, contacts), s in contracted.terms.items():
        if dxs != vol_key or len(contacts) != 1 or kernel.jet_mi(contacts[0]):
            raise NoHamiltonianFieldError(
                _label(h), "contraction is not a source form")
        g = contacts[0]
        coeff = s.left_partial(aux)
        sign = variational._contact_vol_sign(om.dim, g)
        dec_rows[g] = dec_rows.get(g, kernel.ZERO) + coeff * sign
    return {g: v for g, v in dec_rows.items() if v}


def hamiltonian_field(O: LocalForm, structure: PresympStructure) -> EvoField:
    """Solve i_X omega = delta(O) modulo d for an evolutionary X.

    The source components of delta(O) are matched row by row against probe
    contractions of the structure; directions the structure cannot pair are
    reported as obstructions.
    """
    om = structure.omega
    spectrum = structure.spectrum
    if spectrum is None:
        raise ValueError("structure carries no spectrum")
    if O.dim != om.dim:
        raise ValueError("form and structure live over different bases")
    if O.is_zero():
        return EvoField(spectrum, {}, parity=kernel.EVEN)
    opar = O.parity()
    ompar = om.parity()
    if opar is None or ompar is None:
        raise GradingError("Hamiltonian form and structure must have definite parity")
    xpar = (opar + ompar) % 2
    directions = _structure_directions(om)
    rows: dict[Gen, dict[Gen, GradedScalar]] = {}
    for h in directions:
        probe_parity = (xpar + kernel.gen_parity(h)) % 2
        for g, c in _probe_rows(spectrum, om, h, probe_parity).items():
            rows.setdefault(g, {})[h] = c
    targets = variational.source_decompose(forms.delta(O)).components
    for g in targets:
        if g not in rows:
            raise NoHamiltonianFieldError(_label(g), "structure is degenerate")
    unknowns: dict[Gen, Optional[GradedScalar]] = {h: None for h in directions}
    residue = {g: targets.get(g, kernel.ZERO) for g in rows}
    pending = dict(rows)
    while pending:
        progress = False
        for g in sorted(pending):
            cols = {h: c for h, c in pending[g].items() if unknowns[h] is None}
            if not cols:
                del pending[g]
                progress = True
                continue
            if len(cols) != 1:
                continue
            ((h, c),) = cols.items()
            const = _constant_of(c)
            if const is None:
                continue
            rest = residue[g]
            for h2, c2 in pending[g].items():
                if h2 != h:
                    rest = rest - unknowns[h2] * c2
            unknowns[h] = rest * (1 / const)
            del pending[g]
            progress = True
        if progress:
            continue
        # no single-unknown rows left: pin all but one unknown in some row
        chosen = None
        for g in sorted(pending):
            open_cols = sorted(h for h, c in pending[g].items() if unknowns[h] is None)
            solvable = [h for h in open_cols if _constant_of(pending[g][h]) is not None]
            if solvable:
                chosen = (g, solvable[0], open_cols)
                break
        if chosen is None:
            g = sorted(pending)[0]
            raise NoHamiltonianFieldError(_label(g), "no invertible pairing row")
        g, h, open_cols = chosen
        for h2 in open_cols:
            if h2 != h:
                unknowns[h2] = kernel.ZERO
    for h in directions:
        if unknowns[h] is None:
            unknowns[h] = kernel.ZERO
    # consistency: every row must now be satisfied
    for g, cols in rows.items():
        total = kernel.ZERO
        for h, c in cols.items():
            total = total + unknowns[h] * c
        if total != residue[g]:
            raise NoHamiltonianFieldError(
                _label(g), "source component not in the structure's image")
    comps = {h: v for h, v in unknowns.items() if v}
    return EvoField(spectrum, comps, parity=xpar)


def _constant_of(s: GradedScalar) -> Optional[Fraction]:
    if set(s.terms) == {kernel.ONE_MONO}:
        return s.terms[kernel.ONE_MONO]
    return None


def bracket(A: LocalForm, B: LocalForm, structure: PresympStructure) -> LocalForm:
    """Bracket of Hamiltonian forms: (-1)^{parity X_A} i_{X_A} i_{X_B} omega."""
    XA = hamiltonian_field(A, structure)
    XB = hamiltonian_field(B, structure)
    out = forms.contract(XA, forms.contract(XB, structure.omega))
    if XA.parity:
        out = -out
    return out


# ---------------------------------------------------------------------------
# Gauge systems, master equation, descent
# ---------------------------------------------------------------------------


@dataclass
class GaugeSystem:
    Q: EvoField
    structure: PresympStructure
    H: Optional[LocalForm] = None

    def validate(self) -> None:
        if not forms.commutator(self.Q, self.Q).is_zero():
            raise ValueError("Q is not homological: [Q,Q] != 0")
        hot = forms.lie(self.Q, self.structure.omega)
        if not variational.equiv_mod_d(hot, LocalForm.zero(hot.dim)):
            raise ValueError("structure is not Q-invariant modulo d")
        if self.H is not None:
            lhs = forms.contract(self.Q, self.structure.omega)
            if not variational.equiv_mod_d(lhs, forms.delta(self.H)):
                raise ValueError("H is not a Hamiltonian for Q")


@dataclass
class MasterCheck:
    ok: bool
    sigma: Optional[LocalForm]
    residual: Optional[dict[Gen, GradedScalar]] = None

    def __iter__(self):
        return iter((self.ok, self.sigma))


def check_master(O: LocalForm, structure: PresympStructure) -> MasterCheck:
    """Whether {O,O} is a total divergence, and the density it is one of."""
    br = bracket(O, O, structure)
    rhs = br.scale(Fraction(-1, 2))
    if rhs.is_zero():
        return MasterCheck(True, LocalForm.zero(O.dim))
    try:
        sigma = variational.divergence_primitive(rhs)
    except variational.NotDivergenceError as exc:
        return MasterCheck(False, None, exc.residual)
    return MasterCheck(True, sigma)


def descend(sys: GaugeSystem) -> GaugeSystem:
    """One step of descent: (Q, omega) to (Q, omega_1) with d(omega_1) equal
    to the Q-Lie-derivative of omega.

    When the system carries a Hamiltonian the potential route is used: the
    boundary part of delta(H)'s source decomposition, negated, is a
    presymplectic potential for the descendant.  Otherwise the descendant is
    the horizontal homotopy of lie(Q, omega).  The next Hamiltonian is the
    divergence primitive of -1/2 {H,H} when the bracket is available.
    """
    Q = sys.Q
    om = sys.structure.omega
    target = forms.lie(Q, om)
    omega1: Optional[LocalForm] = None
    theta1: Optional[LocalForm] = None
    if sys.H is not None and sys.H.hdeg() == om.dim:
        dec = variational.source_decompose(forms.delta(sys.H))
        cand_theta = -dec.boundary
        cand_omega = forms.delta(cand_theta)
        if forms.d(cand_omega) == target:
            omega1, theta1 = cand_omega, cand_theta
    if omega1 is None:
        omega1 = variational.horizontal_homotopy(target)
        if forms.d(omega1) != target:
            raise DescentError("homotopy produced no primitive of the descent source")
        if not forms.delta(omega1).is_zero():
            raise DescentError("descendant representative is not delta-closed")
    H1: Optional[LocalForm] = None
    if sys.H is not None:
        try:
            mc = check_master(sys.H, sys.structure)
        except (NoHamiltonianFieldError, GradingError):
            mc = None
        if mc is not None and mc.ok:
            H1 = mc.sigma
    structure1 = PresympStructure(omega1, theta1, None, sys.structure.spectrum)
    return GaugeSystem(Q, structure1, H1)


def descent_chain(sys: GaugeSystem, steps: int) -> list[GaugeSystem]:
    """Iterated descent: [sys, descend(sys), ...], steps entries beyond sys."""
    chain = [sys]
    for _ in range(steps):
        chain.append(descend(chain[-1]))
    return chain


def brst_current(sys: GaugeSystem) -> LocalForm:
    """Conserved current density J with d(J) = -1/2 {H,H} and delta(J)
    matching i_Q omega_1 modulo d."""
    if sys.H is None:
        raise ValueError("system carries no Hamiltonian to build a current from")
    mc = check_master(sys.H, sys.structure)
    if not mc.ok:
        raise variational.NotDivergenceError(mc.residual or {})
    J = mc.sigma
    down = descend(sys)
    lhs = forms.delta(J)
    rhs = forms.contract(sys.Q, down.structure.omega)
    if not variational.equiv_mod_d(lhs, rhs):
        raise DescentError("current fails the descendant contraction cross-check")
    return J


def verify_evolution_generator(S: LocalForm, Gamma: LocalForm,
                               structure: PresympStructure) -> bool:
    """Whether the bracket (S, Gamma) vanishes modulo d: the charge S is
    invariant under the evolution Gamma generates."""
    if Gamma.is_zero():
        return True
    gpar = (Gamma.parity() + Gamma.hdeg()) % 2
    ggh = Gamma.ghost()
    if (gpar, ggh) not in ((kernel.EVEN, 0), (kernel.ODD, 1)):
        raise GradingError(
            f"evolution generator must be even ghost 0 or odd ghost 1, "
            f"got intrinsic parity {gpar} ghost {ggh}")
    br = bracket(S, Gamma, structure)
    return variational.equiv_mod_d(br, LocalForm.zero(br.dim))
