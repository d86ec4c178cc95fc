"""Parameter sweeps, benchmark reproduction reports, and CSV emission.

The bundled corpus holds five benchmark equations with reference values
from the published stability analysis of each equation.  Reproduction
reports recompute every reference quantity, flag matches and mismatches
(mismatching reference figures are reported with our derived replacement,
never overwritten), and cross-check the analytic verdict with a direct
simulation.  Known mismatches can be waived in the bundled configuration;
the CLI exits nonzero on any unwaived mismatch.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import criteria
from .criteria import CriterionVerdict
from .eqspec import EquationSpec, load_spec
from .expr import scale
from .params import ParameterSummary, integral_summary, summarize
from .simulate import DecayEstimate, decay_rate, integrate

CORPUS_ENV = "NDSTAB_CORPUS_DIR"

_FMT = "{:.12g}"  # 12 significant digits in every CSV cell


def corpus_dir() -> Path:
    """Bundled corpus location, overridable via NDSTAB_CORPUS_DIR."""
    env = os.environ.get(CORPUS_ENV)
    if env:
        return Path(env)
    return Path(__file__).parent / "corpus"


def load_corpus_spec(example_id: str, directory: Path | None = None) -> EquationSpec:
    d = directory if directory is not None else corpus_dir()
    return load_spec(d / f"{example_id}.json")


def load_waivers(directory: Path | None = None) -> set[str]:
    d = directory if directory is not None else corpus_dir()
    path = d / "waivers.json"
    if not path.exists():
        return set()
    data = json.loads(path.read_text())
    return set(data.get("waived_mismatches", []))


def scale_b(spec: EquationSpec, r: float) -> EquationSpec:
    """Instantiate a b-linear family at amplitude r (b and its bounds scale)."""
    ov = dict(spec.overrides)
    for key in ("norm_b", "inf_b", "limsup_int_b", "tilde_tau", "tilde_delta", "tilde_sigma"):
        if key in ov:
            ov[key] = ov[key] * r
    return EquationSpec(a=spec.a, b=scale(r, spec.b), g=spec.g, h=spec.h,
                        t0=spec.t0, horizon=spec.horizon, f=spec.f,
                        overrides=ov, name=spec.name)


# -- sweeps ---------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    """Feasibility band of the swept coefficient amplitude at one alpha.

    When the sweep is evaluated on an explicit r grid, ``r`` holds the cell
    coordinate and ``feasible`` says whether the main test is applicable
    and satisfied there; without an r grid, ``feasible`` says whether the
    band [r_lower, r_upper) is nonempty.
    """

    alpha: float
    r_lower: float
    r_upper: float
    feasible: bool
    r: float | None = None


def _band(summary: ParameterSummary, alpha: float) -> tuple[float, float]:
    """Closed-form feasibility band for b = r * (unit shape) at fixed alpha.

    The gate alpha * tau0 <= delta inverts to r >= alpha (1-||a||)/(e delta
    ||shape||); the decisive inequality gives the upper bound.
    """
    one_minus = 1.0 - summary.norm_a
    shape = summary.norm_b  # family is stored at unit amplitude
    denom = summary.tau + summary.sigma * summary.norm_a * (1.0 - summary.inf_a) / (one_minus * one_minus)
    upper = one_minus * (1.0 + alpha / math.e) / (shape * denom)
    if alpha == 0.0:
        return 0.0, upper
    if summary.delta <= 0.0:
        return math.inf, upper  # gate unsatisfiable for alpha > 0
    return alpha * one_minus / (math.e * summary.delta * shape), upper


def sweep_alpha_r(
    spec: EquationSpec,
    alpha_grid,
    r_grid=None,
    summary: ParameterSummary | None = None,
    threads: int | None = None,
) -> list[SweepRow]:
    """Feasibility bands of the alpha-parameterized main test over alpha.

    ``spec`` holds the coefficient family at unit amplitude (b enters
    linearly).  With ``r_grid`` the result has one row per (alpha, r) cell;
    otherwise one row per alpha.  Rows come back in grid order regardless
    of ``threads``.
    """
    if summary is None:
        summary = summarize(spec)
    alphas = [float(a) for a in alpha_grid]
    if summary.inf_a <= 0.0:
        bands = [(math.inf, -math.inf)] * len(alphas)
    else:
        def work(chunk):
            return [_band(summary, a) for a in chunk]

        if threads and threads > 1 and len(alphas) > 1:
            n = threads
            chunks = [alphas[i::n] for i in range(n)]
            with ThreadPoolExecutor(max_workers=n) as pool:
                results = list(pool.map(work, chunks))
            bands = [None] * len(alphas)
            for off, chunk_res in enumerate(results):
                bands[off::n] = chunk_res
        else:
            bands = work(alphas)

    rows: list[SweepRow] = []
    for a, (lo, hi) in zip(alphas, bands):
        if r_grid is None:
            rows.append(SweepRow(a, lo, hi, lo < hi))
        else:
            for r in r_grid:
                r = float(r)
                rows.append(SweepRow(a, lo, hi, lo <= r < hi, r))
    return rows


def write_sweep_csv(rows, fh) -> None:
    """Figure-style CSV: alpha, r_lower, r_upper (deterministic layout)."""
    fh.write("alpha,r_lower,r_upper\r\n")
    for row in rows:
        fh.write(f"{_FMT.format(row.alpha)},{_FMT.format(row.r_lower)},{_FMT.format(row.r_upper)}\r\n")


# -- benchmark reproduction -------------------------------------------------------

@dataclass(frozen=True)
class QuantityCheck:
    """One reference value versus its recomputation."""

    name: str
    quoted: float
    derived: float
    abs_tol: float
    method: str

    @property
    def match(self) -> bool:
        return abs(self.derived - self.quoted) <= self.abs_tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "quoted": self.quoted,
            "derived": self.derived,
            "abs_tol": self.abs_tol,
            "method": self.method,
            "match": self.match,
        }


@dataclass(frozen=True)
class ClaimCheck:
    """One boolean statement from the reference analysis."""

    name: str
    holds: bool
    method: str = "closed-form"

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "method": self.method}


@dataclass(frozen=True)
class ExampleReport:
    example_id: str
    name: str
    quantities: tuple[QuantityCheck, ...]
    claims: tuple[ClaimCheck, ...]
    verdicts: tuple[CriterionVerdict, ...]
    simulation: DecayEstimate | None
    simulation_note: str
    notes: tuple[str, ...] = ()

    def mismatches(self) -> list[str]:
        out = [f"{self.example_id}:{q.name}" for q in self.quantities if not q.match]
        out += [f"{self.example_id}:{c.name}" for c in self.claims if not c.holds]
        return out

    def to_dict(self) -> dict:
        return {
            "id": self.example_id,
            "name": self.name,
            "quantities": [q.to_dict() for q in self.quantities],
            "claims": [c.to_dict() for c in self.claims],
            "verdicts": [v.to_dict() for v in self.verdicts],
            "simulation": self.simulation.to_dict() if self.simulation else None,
            "simulation_note": self.simulation_note,
            "notes": list(self.notes),
            "mismatches": self.mismatches(),
        }


EXAMPLE_IDS = ("ex1", "ex2", "ex3", "ex4", "ex5")

# half a unit in the last printed decimal of each reference figure, except
# where a figure is compared at the precision of the inequality it appears in
_Q = QuantityCheck


def _report_ex1(spec, summary, sim, sim_note):
    interval = criteria.alpha_interval_theorem1(summary)
    c3 = {a: criteria.check_corollary3(summary, a) for a in (0.0, 0.5, 1.0)}
    yu = criteria.check_prop_yu(summary, summary.limsup_int_b, constant_delays=False)
    tz = criteria.check_prop_tang_zou(summary, summary.limsup_int_b, constant_delays=False)
    quantities = (
        _Q("alpha_interval_lower", 0.272, interval.lower, 5e-4, "closed-form"),
        _Q("alpha_interval_upper", 0.951, interval.upper, 5e-4, "closed-form"),
    )
    claims = (
        ClaimCheck("alpha_interval_open_closed", interval.lower_open and not interval.upper_open),
        ClaimCheck("limiting_lag_test_holds_at_alpha_0.5", c3[0.5].satisfied),
        ClaimCheck("limiting_lag_test_fails_at_alpha_0", not c3[0.0].satisfied),
        ClaimCheck("limiting_lag_test_fails_at_alpha_1", not c3[1.0].satisfied),
        ClaimCheck("baseline_3_2_not_applicable", not yu.applicable),
        ClaimCheck("baseline_sqrt_not_applicable", not tz.applicable),
    )
    verdicts = tuple(criteria.best_verdict(spec, summary))
    return quantities, claims, verdicts, ()


def _report_ex2(spec, summary, sim, sim_note):
    rows = {a: sweep_alpha_r(spec, [a], summary=summary)[0] for a in (0.0, 0.5, 1.0)}
    s15 = summarize(scale_b(spec, 0.15), 4096)
    s20 = summarize(scale_b(spec, 0.20), 4096)
    quantities = (
        _Q("r_upper_alpha_1", 0.168, rows[1.0].r_upper, 5e-4, "closed-form"),
        _Q("norm_a_grid", 0.6, _grid(spec, "norm_a"), 1e-3, "grid-estimate"),
        _Q("inf_a_grid", 0.4, _grid(spec, "inf_a"), 1e-3, "grid-estimate"),
    )
    claims = (
        ClaimCheck("band_nonempty_for_every_alpha", all(r.feasible for r in rows.values())),
        ClaimCheck("main_test_holds_at_r_0.15_alpha_1",
                   criteria.check_theorem1(s15, 1.0).satisfied),
        ClaimCheck("main_test_fails_at_r_0.20_alpha_1",
                   not criteria.check_theorem1(s20, 1.0).satisfied),
    )
    verdicts = tuple(criteria.best_verdict(scale_b(spec, 0.15)))
    return quantities, claims, verdicts, ()


def _report_ex3(spec, summary, sim, sim_note):
    part_a, part_b = criteria.check_corollary_main(summary)
    one_minus = 1.0 - summary.norm_a
    denom = summary.tau + summary.sigma * summary.norm_a * (1.0 - summary.inf_a) / one_minus ** 2
    r_b_upper = one_minus / denom                                   # alpha = 0 bound
    r_a_upper = one_minus * (1.0 + 1.0 / math.e) / denom            # alpha = 1 bound
    r_a_lower = one_minus / (math.e * summary.delta)                # alpha = 1 gate
    yu_thr = criteria.yu_threshold(summary.norm_a)
    tz_thr = criteria.tang_zou_threshold(summary.norm_a)
    quantities = (
        _Q("norm_a_grid", 0.499, _grid(spec, "norm_a"), 1e-3, "grid-estimate"),
        _Q("inf_a_grid", 0.497, _grid(spec, "inf_a"), 1e-3, "grid-estimate"),
        _Q("part_b_r_upper", 0.0797, r_b_upper, 5e-5, "closed-form"),
        # the reference band 0.059 < . < 0.109 does not recompute from the
        # alpha = 0 part it is attributed to; derived replacements below,
        # see notes
        _Q("r_band_upper", 0.109, r_b_upper, 5e-4, "closed-form"),
        _Q("r_band_lower", 0.059, 0.0, 5e-4, "closed-form"),
        _Q("baseline_sqrt_threshold", 0.0632, tz_thr, 5e-5, "closed-form"),
        _Q("baseline_3_2_threshold", 0.002, yu_thr, 5e-4, "closed-form"),
    )
    claims = (
        ClaimCheck("part_b_holds_below_its_bound",
                   criteria.check_theorem1(_with_b(summary, 0.9 * r_b_upper), 0.0).satisfied),
        ClaimCheck("sharper_than_baselines", r_b_upper * (summary.limsup_int_b or 0.0) > tz_thr),
    )
    notes = (
        "reference figures 0.059 and 0.109 are reported on the integrated-b scale but only "
        f"recompute, on the coefficient scale, as the alpha=1 gate and bound "
        f"({r_a_lower:.6g} <= r < {r_a_upper:.6g}); the derived alpha=0 bound is {r_b_upper:.6g}",
    )
    verdicts = tuple(criteria.best_verdict(scale_b(spec, 0.05)))
    return quantities, claims, verdicts, notes


def _report_ex4(spec, summary, sim, sim_note):
    tb = criteria.tau_bar(summary)
    lhs = (summary.tau * summary.norm_b
           + summary.sigma * summary.norm_a_plus * summary.norm_b / (1.0 - summary.norm_a_plus) ** 2
           + summary.norm_a_minus * summary.norm_b / (1.0 - summary.norm_a_plus))
    alpha_thr = math.e * (lhs - (1.0 - summary.norm_a)) / (1.0 - summary.norm_a_plus)
    rhs_045 = 1.0 - summary.norm_a + 0.45 * (1.0 - summary.norm_a_plus) / math.e
    t2 = criteria.check_theorem2(summary, 0.45)
    t1 = criteria.check_theorem1(summary, 0.45)
    c5a, c5b = criteria.check_corollary5(summary)
    quantities = (
        _Q("norm_a_grid", 0.6, _grid(spec, "norm_a"), 1e-3, "grid-estimate"),
        _Q("sign_split_lhs", 0.4125, lhs, 1e-9, "closed-form"),
        _Q("alpha_threshold", 0.085, alpha_thr, 5e-4, "closed-form"),
        _Q("tau_bar", 0.98, tb, 5e-3, "closed-form"),
        # the reference right side at alpha = 0.45 does not recompute from
        # the displayed inequality; derived replacement reported
        _Q("rhs_at_alpha_0.45", 0.4147, rhs_045, 5e-5, "closed-form"),
    )
    claims = (
        ClaimCheck("sign_split_test_holds_at_alpha_0.45", t2.satisfied),
        ClaimCheck("main_test_not_applicable", not t1.applicable),
        ClaimCheck("alpha_1_endpoint_gate_fails", not c5a.applicable),
        ClaimCheck("alpha_0_endpoint_fails", not c5b.satisfied),
    )
    verdicts = tuple(criteria.best_verdict(spec, summary))
    return quantities, claims, verdicts, ()


def _report_ex5(spec, summary, sim, sim_note):
    isummary = integral_summary(spec)
    lhs = criteria.theorem3_lhs(isummary)
    rhs_1 = (1.0 - isummary.norm_a) * (1.0 + 1.0 / math.e)
    t3 = {a: criteria.check_theorem3(isummary, a) for a in (1.0, 0.36, 0.30)}
    quantities = (
        _Q("tilde_sigma", 0.25 * math.log(3.0), isummary.tilde_sigma, 1e-8, "quadrature"),
        _Q("tilde_tau", 0.25 * math.log(2.0), isummary.tilde_tau, 1e-8, "quadrature"),
        _Q("tilde_delta", 0.25 * math.log(2.0), isummary.tilde_delta, 1e-8, "quadrature"),
        _Q("tilde_tau0", 0.1655, isummary.tilde_tau0, 5e-5, "closed-form"),
        _Q("integral_lhs", 0.509, lhs, 5e-4, "quadrature"),
        # the reference right side at alpha = 1 is printed at the precision
        # of the displayed inequality; derived replacement reported
        _Q("rhs_at_alpha_1", 0.6, rhs_1, 5e-3, "closed-form"),
    )
    claims = (
        ClaimCheck("integral_test_holds_at_alpha_1", t3[1.0].satisfied),
        ClaimCheck("integral_test_holds_at_alpha_0.36", t3[0.36].satisfied),
        ClaimCheck("integral_test_fails_at_alpha_0.30", not t3[0.30].satisfied),
        ClaimCheck("gate_open_for_any_alpha_below_1", isummary.tilde_tau0 <= isummary.tilde_delta),
    )
    verdicts = tuple(criteria.best_verdict(spec, summary, isummary=isummary))
    return quantities, claims, verdicts, ()


_BUILDERS = {
    "ex1": (_report_ex1, 1.0),
    "ex2": (_report_ex2, 0.15),
    "ex3": (_report_ex3, 0.05),
    "ex4": (_report_ex4, 1.0),
    "ex5": (_report_ex5, 1.0),
}


def _grid(spec: EquationSpec, field_name: str, points: int = 20001) -> float:
    bare = EquationSpec(a=spec.a, b=spec.b, g=spec.g, h=spec.h,
                        t0=spec.t0, horizon=spec.horizon, f=spec.f, name=spec.name)
    return getattr(summarize(bare, points), field_name)


def _with_b(summary: ParameterSummary, norm_b: float) -> ParameterSummary:
    ratio = norm_b / summary.norm_b
    return ParameterSummary(
        norm_a=summary.norm_a, inf_a=summary.inf_a,
        norm_a_plus=summary.norm_a_plus, norm_a_minus=summary.norm_a_minus,
        norm_b=norm_b, inf_b=summary.inf_b * ratio,
        sigma=summary.sigma, tau=summary.tau, delta=summary.delta,
        limit_tau=summary.limit_tau,
        limsup_int_b=None if summary.limsup_int_b is None else summary.limsup_int_b * ratio,
        provenance=dict(summary.provenance),
    )


def reproduce_examples(
    ids=None,
    directory: Path | None = None,
    with_simulation: bool = True,
    sim_span: float = 300.0,
    sim_step: float = 1e-3,
) -> list[ExampleReport]:
    """Build one reproduction report per bundled benchmark equation."""
    out = []
    for ex_id in ids or EXAMPLE_IDS:
        if ex_id not in _BUILDERS:
            raise ValueError(f"unknown example id {ex_id!r} (have {', '.join(EXAMPLE_IDS)})")
        spec = load_corpus_spec(ex_id, directory)
        summary = summarize(spec)
        builder, rep_r = _BUILDERS[ex_id]

        sim = None
        sim_note = "simulation skipped"
        if with_simulation:
            sim_spec = scale_b(spec, rep_r) if rep_r != 1.0 else spec
            traj = integrate(sim_spec, 1.0, spec.t0 + sim_span, sim_step)
            sim = decay_rate(traj, warmup=0.0, window=sim_span / 10.0)
            sim_note = (f"representative point (amplitude {rep_r:g}), constant history, "
                        f"span {sim_span:g}, step {sim_step:g}")

        quantities, claims, verdicts, notes = builder(spec, summary, sim, sim_note)
        out.append(ExampleReport(
            example_id=ex_id, name=spec.name,
            quantities=quantities, claims=claims, verdicts=verdicts,
            simulation=sim, simulation_note=sim_note, notes=notes,
        ))
    return out


def unwaived_mismatches(reports, waived: set[str]) -> list[str]:
    out = []
    for rep in reports:
        out.extend(m for m in rep.mismatches() if m not in waived)
    return out


# -- baseline comparison -----------------------------------------------------------

def compare_baselines(spec: EquationSpec, summary: ParameterSummary | None = None) -> list[dict]:
    """Side-by-side thresholds for one equation: the classical constant-delay
    baselines (on the integrated-b scale) and this library's endpoint tests
    (on the coefficient scale, with the integrated-scale equivalent where a
    limsup of the b-integral is available)."""
    if summary is None:
        summary = summarize(spec)
    one_minus = 1.0 - summary.norm_a
    rows: list[dict] = []

    yu_thr = criteria.yu_threshold(summary.norm_a)
    rows.append({
        "criterion": "baseline_3_2",
        "scale": "limsup int b",
        "threshold": yu_thr if yu_thr > 0.0 else None,
        "applicable": yu_thr > 0.0,
        "note": "" if yu_thr > 0.0 else f"threshold not positive at A0={summary.norm_a:g}",
    })
    tz_thr = criteria.tang_zou_threshold(summary.norm_a)
    rows.append({
        "criterion": "baseline_sqrt",
        "scale": "limsup int b",
        "threshold": tz_thr,
        "applicable": tz_thr is not None,
        "note": "" if tz_thr is not None else f"A0={summary.norm_a:g} >= 1/2 out of range",
    })

    if summary.inf_a > 0.0:
        denom = summary.tau + summary.sigma * summary.norm_a * (1.0 - summary.inf_a) / one_minus ** 2
        b_upper = one_minus / denom
        factor = None
        if summary.limsup_int_b is not None and summary.norm_b > 0.0:
            factor = summary.limsup_int_b / summary.norm_b
        rows.append({
            "criterion": "corollary_main_b",
            "scale": "sup b",
            "threshold": b_upper,
            "applicable": True,
            "note": "" if factor is None else
            f"equivalent limsup-int-b threshold {b_upper * factor:.6g}",
        })
        rows.append({
            "criterion": "corollary_main_a",
            "scale": "sup b",
            "threshold": b_upper * (1.0 + 1.0 / math.e),
            "applicable": True,
            "note": f"requires sup b >= {one_minus / (math.e * summary.delta):.6g} (lag-scale gate)"
            if summary.delta > 0.0 else "gate requires delta > 0",
        })
    else:
        rows.append({
            "criterion": "corollary_main_b",
            "scale": "sup b",
            "threshold": None,
            "applicable": False,
            "note": "a(t) >= a0 > 0 fails",
        })
    return rows
