"""Pipeline orchestration and deterministic report emission.

``run_pipeline`` drives a model through the standard stages in order:
master check, descent of the presymplectic structure, conserved current,
reduction to the leaves, phase-space bracket verdicts, and homogenization
of the reduced structure.  Stage selection is honored; the first stage
error aborts the run and is recorded under the stage that raised it.
Every expression enters the report both as canonical text and as a sorted
term list, so identical inputs yield byte-identical serializations.
"""
from __future__ import annotations

import json
from typing import Mapping, Optional, Sequence

from . import foliation, forms, grading, kernel, model, symplectic, variational
from .forms import LocalForm
from .model import Model

STAGES = ("master", "descend", "current", "reduce", "brackets", "homogenize")

_ENGINE_ERRORS = (
    kernel.JetOrderCapExceeded, model.ModelError,
    symplectic.SpectrumError, symplectic.NoHamiltonianFieldError,
    symplectic.GradingError, symplectic.DescentError,
    variational.DegreeError, variational.NotDivergenceError,
    variational.ObstructionError, variational.NoPrimitiveError,
    foliation.FoliationError, grading.TruncationError,
    grading.NoHomogenizerError, grading.ArityError,
)


def form_json(a: LocalForm) -> dict:
    """Canonical text plus a machine-readable sorted term list."""
    terms = []
    for (dxs, contacts), s in sorted(a.terms.items()):
        scal = []
        for mono, c in sorted(s.terms.items()):
            factors = []
            for g, p in mono:
                factors.extend([model.gen_text(g)] * p)
            scal.append({"monomial": factors, "coefficient": model._num(c)})
        terms.append({"dx": list(dxs),
                      "contacts": [model.gen_text(g) for g in contacts],
                      "scalar": scal})
    return {"text": model.form_text(a), "terms": terms}


def field_json(X: forms.EvoField) -> dict:
    """Components of an evolutionary field, keyed by generator text."""
    return {model.gen_text(g): model.scalar_text(v)
            for g, v in sorted(X.base_components().items())
            if not v.is_zero()}


class _Run:
    """Shared state between stages; prerequisites compute lazily."""

    def __init__(self, m: Model, steps: int):
        self.m = m
        self.steps = steps
        self._cache: dict[str, object] = {}

    def _get(self, key: str, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def structure(self):
        return self._get("structure", self.m.structure)

    @property
    def system(self):
        def build():
            S = self.m.master_density()
            Q = symplectic.hamiltonian_field(S, self.structure)
            return symplectic.GaugeSystem(Q, self.structure, S)
        return self._get("system", build)

    @property
    def master(self):
        return self._get("master", lambda: symplectic.check_master(
            self.m.master_density(), self.structure))

    @property
    def chain(self):
        def build():
            chain = [self.system]
            for _ in range(self.steps):
                if chain[-1].structure.omega.is_zero():
                    break
                chain.append(symplectic.descend(chain[-1]))
            return chain
        return self._get("chain", build)

    @property
    def current(self):
        return self._get("current",
                         lambda: symplectic.brst_current(self.system))

    @property
    def slicing(self):
        F = self.m.foliation
        if F is None:
            raise foliation.FoliationError(
                "model declares no foliation")
        return F

    @property
    def reduced_structure(self):
        def build():
            chain = self.chain
            if len(chain) < 2:
                raise symplectic.DescentError(
                    "reduction needs at least one descent step")
            omega1 = chain[1].structure.omega
            w1red = foliation.reduce(omega1, self.slicing)
            return symplectic.PresympStructure(
                w1red, spectrum=self.slicing.spatial)
        return self._get("reduced_structure", build)

    @property
    def charge(self):
        return self._get("charge", lambda: foliation.charge_density(
            self.current, self.slicing, self.reduced_structure))

    @property
    def homogenizer(self):
        return self._get("homogenizer", lambda: grading.find_homogenizer(
            self.reduced_structure.omega, self.slicing.spatial))


def _stage_master(run: _Run) -> tuple[dict, bool]:
    mc = run.master
    out: dict = {"ok": mc.ok, "brst_field": field_json(run.system.Q)}
    if mc.ok:
        out["sigma"] = form_json(mc.sigma)
    else:
        out["residual"] = {model.gen_text(g): model.scalar_text(v)
                           for g, v in sorted((mc.residual or {}).items())}
    return out, mc.ok


def _stage_descend(run: _Run) -> tuple[dict, bool]:
    return {"descendants": [form_json(s.structure.omega)
                            for s in run.chain]}, True


def _stage_current(run: _Run) -> tuple[dict, bool]:
    return {"current": form_json(run.current)}, True


def _stage_reduce(run: _Run) -> tuple[dict, bool]:
    return {"structure": form_json(run.reduced_structure.omega),
            "charge": form_json(run.charge)}, True


def _stage_brackets(run: _Run) -> tuple[dict, bool]:
    st = run.reduced_structure
    z = LocalForm.zero(st.omega.dim)
    verdicts = {}
    ok = True
    for name in sorted(run.m.phase_densities):
        G = run.m.phase_densities[name]
        v = {
            "commutes_with_charge": variational.equiv_mod_d(
                foliation.f_bracket(G, run.charge, st), z),
            "involutive": variational.equiv_mod_d(
                foliation.f_bracket(G, G, st), z),
            "evolution_generated_by_charge":
                symplectic.verify_evolution_generator(run.charge, G, st),
        }
        verdicts[name] = v
        ok = ok and all(v.values())
    return {"verdicts": verdicts}, ok


def _algebra_closure(run: _Run, hs: LocalForm,
                     st: symplectic.PresympStructure) -> bool:
    """Derived binary bracket of plain field densities closes on the algebra."""
    spl = run.slicing.spatial
    eps = model.structure_constants(run.m.algebra_constants)
    rank = max(i for (i, _, _) in eps) + 1
    pair = next(f for c, f in spl.conjugate_pairs())

    def dens(i):
        return forms.wedge(
            forms.scalar_form(spl.dim, kernel.jet(spl, pair.name, (i,))),
            forms.volume(spl.dim))

    for i in range(rank):
        for j in range(rank):
            want = LocalForm.zero(spl.dim)
            for kk in range(rank):
                s = eps.get((i, j, kk))
                if s:
                    want = want + dens(kk).scale(s)
            got = grading.derived_bracket(hs, [dens(i), dens(j)], st)
            if not variational.equiv_mod_d(got, want):
                return False
    return True


def _stage_homogenize(run: _Run) -> tuple[dict, bool]:
    parts = grading.degree_split(run.reduced_structure.omega,
                                 grading.KIND_MOMENTUM)
    if len(parts) > 1 and parts[0][0] < 1:
        raise grading.NoHomogenizerError(
            "the reduced structure has a momentum-degree-0 block, which the "
            "momentum flow leaves fixed; homogenization does not apply")
    h = run.homogenizer
    cert = h.certificate
    ok = cert.pulled_back == cert.leading or variational.equiv_mod_d(
        cert.pulled_back, cert.leading)
    out: dict = {"vector": field_json(h.X),
                 "degree": cert.degree,
                 "certificate_exact": cert.pulled_back == cert.leading,
                 "structure": form_json(cert.pulled_back)}
    hs = grading.pullback(h, run.charge)
    out["charge"] = form_json(hs)
    if run.m.algebra_constants is not None:
        st_new = symplectic.PresympStructure(
            cert.pulled_back, spectrum=run.slicing.spatial)
        closed = _algebra_closure(run, hs, st_new)
        out["algebra_closes"] = closed
        ok = ok and closed
    return out, ok


_STAGE_FUNCS = {
    "master": _stage_master,
    "descend": _stage_descend,
    "current": _stage_current,
    "reduce": _stage_reduce,
    "brackets": _stage_brackets,
    "homogenize": _stage_homogenize,
}


def default_stages(m: Model) -> tuple[str, ...]:
    """The stages that apply to a model.

    The foliated stages need a declared slicing; homogenization applies
    when the reduced structure is momentum-inhomogeneous with every block
    at positive degree, so the momentum Euler flow can act on it.
    """
    stages = ["master", "descend", "current"]
    if m.foliation is None:
        return tuple(stages)
    stages += ["reduce", "brackets"]
    run = _Run(m, steps=1)
    try:
        parts = grading.degree_split(run.reduced_structure.omega,
                                     grading.KIND_MOMENTUM)
    except _ENGINE_ERRORS:
        return tuple(stages)
    if len(parts) > 1 and parts[0][0] >= 1:
        stages.append("homogenize")
    return tuple(stages)


def run_pipeline(m: Model, stages: Optional[Sequence[str]] = None,
                 *, steps: int = 2) -> dict:
    """Execute the selected stages and collect a deterministic report."""
    if stages is None:
        stages = default_stages(m)
    bad = [s for s in stages if s not in STAGES]
    if bad:
        raise ValueError(f"unknown stages {bad}")
    selected = [s for s in STAGES if s in stages]
    run = _Run(m, steps)
    report: dict = {"model": m.name, "dim": m.spectrum.dim,
                    "stages": {}, "ok": True}
    for name in selected:
        try:
            section, ok = _STAGE_FUNCS[name](run)
        except _ENGINE_ERRORS as e:
            report["stages"][name] = {"error": f"{type(e).__name__}: {e}"}
            report["ok"] = False
            break
        report["stages"][name] = section
        report["ok"] = report["ok"] and ok
    return report


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _text_value(value, indent: str, lines: list) -> None:
    if isinstance(value, Mapping):
        if "text" in value and "terms" in value:
            lines.append(f"{indent}{value['text']}")
            return
        for key in sorted(value):
            sub = value[key]
            if isinstance(sub, (Mapping, list)):
                lines.append(f"{indent}{key}:")
                _text_value(sub, indent + "  ", lines)
            else:
                lines.append(f"{indent}{key}: {_scalar_text(sub)}")
        return
    if isinstance(value, list):
        for i, sub in enumerate(value):
            lines.append(f"{indent}[{i}]")
            _text_value(sub, indent + "  ", lines)
        return
    lines.append(f"{indent}{_scalar_text(value)}")


def _scalar_text(value) -> str:
    if value is True:
        return "yes"
    if value is False:
        return "no"
    return str(value)


def emit(report: dict, format: str = "json") -> bytes:
    """Serialize a report; identical reports give identical bytes."""
    if format == "json":
        return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    lines = [f"model {report.get('model', '?')} (dim {report.get('dim', '?')})",
             "ok: " + _scalar_text(report.get("ok", False))]
    for name in STAGES:
        section = report.get("stages", {}).get(name)
        if section is None:
            continue
        lines.append(f"[{name}]")
        _text_value(section, "  ", lines)
    return ("\n".join(lines) + "\n").encode()
