"""Named verification scenarios and their structured reports.

Each scenario builds its domains from a config mapping (defaults below,
overridable key by key), runs the numerics, and checks a list of claims.
Every claim carries the expected value, the measured value, the tolerance
and the oracle it is compared against:

* ``[analytic]``   closed-form spectra and thresholds from :mod:`thinpart.catalog`;
* ``[1D-radial]``  the radial ODE shooting oracle for round annuli;
* ``[paper-exact]`` a published exact value (e.g. ``9 pi^2``).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .catalog import (
    ANTISYMMETRIC, PI2, annulus_spectrum_round, as_fraction, cylinder_spectrum, dn_sufficient_condition,
    thin_threshold,
)
from .discretization import annulus, assemble, build_grid, deck_split, strip
from .eigensolver import cluster, lowest_eigenpairs
from .errors import InvalidArgument
from .nodal import courant_sharp_check, is_bipartite, neighbor_graph, nodal_domains
from .partition import (
    compare_with_theory, equal_bands, iterate, partition_energy, property_B_check,
    sector_cut_deviation,
)

ANALYTIC = "[analytic]"
RADIAL = "[1D-radial]"
PAPER = "[paper-exact]"


@dataclass
class Claim:
    description: str
    expected: object
    measured: object
    tolerance: str
    oracle: str
    passed: bool

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.oracle} {self.description}: measured {_fmt(self.measured)}, "
                f"expected {_fmt(self.expected)} ({self.tolerance})")


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


@dataclass
class ScenarioReport:
    scenario: str
    inputs: dict
    claims: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.claims) and all(c.passed for c in self.claims)

    def check(self, description, expected, measured, tolerance, oracle, passed):
        self.claims.append(Claim(description, expected, measured, tolerance, oracle, bool(passed)))
        return bool(passed)

    def close(self, description, expected, measured, rel, oracle, abs_tol=0.0):
        ok = abs(measured - expected) <= max(rel * abs(expected), abs_tol)
        tol = f"rel {rel:g}" + (f", abs {abs_tol:g}" if abs_tol else "")
        return self.check(description, expected, measured, tol, oracle, ok)

    def to_dict(self, timing=False):
        """JSON-ready dict.  Wall time is left out unless asked for, so reports
        from identical configs are byte-identical."""
        d = {
            "scenario": self.scenario,
            "passed": self.passed,
            "inputs": self.inputs,
            "claims": [vars(c) for c in self.claims],
            "artifacts": sorted(Path(p).name for p in self.artifacts),
            "extra": self.extra,
        }
        if timing:
            d["wall_time"] = self.wall_time
        return io.to_jsonable(d)

    def summary(self):
        head = f"{self.scenario}: {'PASS' if self.passed else 'FAIL'} ({self.wall_time:.1f} s)"
        return "\n".join([head] + ["  " + c.line() for c in self.claims])


# ---------------------------------------------------------------------------
# scenarios


def _lemma_c2(cfg, rep, out):
    b, nth, nt = cfg["b"], cfg["ntheta"], cfg["nt"]
    count = 7
    dom = strip(b, degree=2)
    grid = build_grid(dom, nth, nt)
    op = assemble(grid)
    pairs = lowest_eigenpairs(op, count + 1, tol=cfg["tol"], seed=cfg["seed"])
    vals = np.array([p.value for p in pairs])
    spec = cylinder_spectrum(b, degree=2, bc="NN", count=count)
    exact = np.array(spec.values(), dtype=float)
    for j in range(count):
        rep.close(f"lambda_{j + 1} of C(2,{b}) / pi^2", exact[j] / PI2, vals[j] / PI2,
                  0.01, ANALYTIC, abs_tol=1e-8)
    groups = cluster(vals[:count])
    rep.check("multiplicity pattern of the first 7 eigenvalues",
              [e.multiplicity for e in spec], [len(g) for g in groups], "exact", ANALYTIC,
              [len(g) for g in groups] == [e.multiplicity for e in spec])
    rep.check(f"b = {b} <= 1/3 (Courant-sharp range of lambda_6)", "<= 1/3", b, "exact", PAPER,
              as_fraction(b) <= Fraction(1, 3))
    cc = courant_sharp_check(op, 6, tol=cfg["tol"], seed=cfg["seed"], pairs=pairs)
    rep.check("lambda_6 eigenspace has a 6-domain eigenfunction", 6,
              cc.max_count if cc.witness else max(cc.counts), "exact count", PAPER, cc.witness)
    rep.extra["nodal_counts"] = {str(p.value): nodal_domains(op.to_grid(p.vector)).count
                                 for p in pairs[:count]}
    rep.extra["eigenvalues"] = vals[:count].tolist()
    if out:
        rows = [["index", "numeric", "analytic"]]
        rows += [[j + 1, repr(float(vals[j])), repr(float(exact[j]))] for j in range(count)]
        rep.artifacts.append(io.write_rows_csv(out / "spectrum_numeric.csv", rows))
        rep.artifacts += io.export_plot_data(spec, out / "spectrum_analytic.csv")
        rep.artifacts += io.export_plot_data(op.to_grid(pairs[5].vector), out / "eigvec_6.csv")
        if cc.witness_vector is not None:
            rep.artifacts += io.export_plot_data(cc.witness_vector, out / "witness_6.csv")
            rep.artifacts += io.export_plot_data(nodal_domains(cc.witness_vector).labels,
                                                 out / "witness_6_domains.csv")


def _partition_artifacts(rep, out, state, name):
    if not out:
        return
    rep.artifacts += io.export_plot_data(np.asarray(state.labels), out / f"{name}_labels.csv")
    rep.artifacts.append(io.write_edge_list(out / f"{name}_graph.txt",
                                            neighbor_graph(state.labels, k=state.k)))
    rows = [["step", "Lambda", "moved", "phase"]] + [list(h) for h in state.history]
    rep.artifacts.append(io.write_rows_csv(out / f"{name}_history.csv", rows))
    rows = [["init", "seed", "Lambda"]] + [[i, "" if s is None else s, repr(v)]
                                           for i, s, v in state.runs]
    rep.artifacts.append(io.write_rows_csv(out / f"{name}_runs.csv", rows))


def _optimize(grid, cfg, inits):
    return iterate(grid, cfg["k"], init=inits, restarts=cfg["restarts"], seed=cfg["seed"],
                   max_sweeps=cfg["max_sweeps"], jobs=cfg["jobs"])


def _thm_cylinder(cfg, rep, out):
    b, k = cfg["b"], cfg["k"]
    grid = build_grid(strip(b), cfg["ntheta"], cfg["nt"])
    rep.check(f"b = {b} <= 1/(2 sqrt 5)", thin_threshold(3).surd, b, "exact", PAPER,
              thin_threshold(3).admits(b))
    state = _optimize(grid, cfg, ("equal-sectors",))
    target = k * k
    ratio = state.Lambda / (target * PI2)
    rep.check(f"Lambda / ({target} pi^2)", "[0.98, 1.03]", ratio, "interval", PAPER,
              0.98 <= ratio <= 1.03)
    cuts, dev = sector_cut_deviation(state.labels, k)
    rep.check("angular cuts at equal thirds up to rotation (cells)", 0.0,
              "not sectorial" if dev is None else dev, "<= 2 cells", ANALYTIC,
              dev is not None and dev <= 2)
    prop_b = property_B_check(state, grid)
    rep.check("property B (lift is a 2k-partition)", True, prop_b, "exact", PAPER, prop_b)
    graph = neighbor_graph(state.labels, k=k)
    bip, _ = is_bipartite(graph)
    rep.check("neighbour graph is complete (K_3)", True, graph.is_complete(), "exact", PAPER,
              graph.is_complete())
    rep.check("neighbour graph is not bipartite (non-nodal)", False, bip, "exact", PAPER, not bip)
    rep.extra["theory"] = compare_with_theory(state, grid)
    rep.extra["runs"] = [list(r) for r in state.runs]
    _partition_artifacts(rep, out, state, "partition")


def _prop_23(cfg, rep, out):
    b, k = cfg["b"], cfg["k"]
    grid = build_grid(strip(b), cfg["ntheta"], cfg["nt"])
    _, t = grid.coordinates()
    mode = np.cos(2 * np.pi * t / b)          # transverse mode n = 2
    nodal = nodal_domains(mode)
    rep.check("transverse mode cos(2 pi y / b) has 3 nodal domains", 3, nodal.count, "exact",
              ANALYTIC, nodal.count == 3)
    bands = equal_bands(grid, k)
    energies, lam = partition_energy(bands, grid, k=k)
    expected = 4 / b ** 2
    rep.close("nodal band partition Lambda / pi^2", expected, lam / PI2, 0.02, PAPER)
    rep.check("nodal band Lambda < 9 pi^2", 9.0, lam / PI2, "strict", PAPER, lam / PI2 < 9.0)
    state = _optimize(grid, cfg, ("equal-sectors", "equal-bands"))
    rep.check("optimizer Lambda / pi^2 <= 1.02 * 4/b^2", 1.02 * expected, state.Lambda / PI2,
              "upper bound", PAPER, state.Lambda / PI2 <= 1.02 * expected)
    rep.extra["band_energies_over_pi2"] = (energies / PI2).tolist()
    rep.extra["theory"] = compare_with_theory(state, grid)
    rep.extra["runs"] = [list(r) for r in state.runs]
    if out:
        rep.artifacts += io.export_plot_data(np.asarray(bands), out / "bands_labels.csv")
    _partition_artifacts(rep, out, state, "partition")


def _k_thresholds(cfg, rep, out):
    b, k = cfg["b"], cfg["k"]
    for kk, sq in ((3, Fraction(1, 20)), (5, Fraction(1, 84)), (7, Fraction(1, 132))):
        th = thin_threshold(kk)
        rep.check(f"threshold b^2 for k = {kk}", str(sq), str(th.bound_squared), "exact",
                  PAPER, th.bound_squared == sq)
    for kk, bb in ((5, 0.1), (7, 0.08)):
        res = dn_sufficient_condition(kk, bb)
        rep.check(f"lambda^DN_{res['index']}(C({bb})) >= {kk}^2 pi^2 and b < 1/{kk}",
                  f">= {kk * kk}", str(res["lambda_dn_over_pi2"]), "exact", ANALYTIC,
                  res["holds"])
    rep.check(f"b = {b} admits k = {k}", thin_threshold(k).surd, b, "exact", PAPER,
              thin_threshold(k).admits(b))
    grid = build_grid(strip(b), cfg["ntheta"], cfg["nt"])
    state = _optimize(grid, cfg, ("equal-sectors",))
    rep.close(f"optimizer Lambda / pi^2 for k = {k}", float(k * k), state.Lambda / PI2,
              0.03, PAPER)
    rep.extra["theory"] = compare_with_theory(state, grid)
    rep.extra["runs"] = [list(r) for r in state.runs]
    _partition_artifacts(rep, out, state, "partition")


def _annulus_condthin(cfg, rep, out):
    b, nth, nt = cfg["b"], cfg["ntheta"], cfg["nt"]
    r_in, r_out = 1.0, 1.0 + b
    tol, seed = cfg["tol"], cfg["seed"]
    # base domain, Neumann
    g1 = build_grid(annulus(b), nth, nt)
    base = [p.value for p in lowest_eigenpairs(assemble(g1), 6, tol=tol, seed=seed)]
    oracle = [m.value for m in annulus_spectrum_round(r_in, r_out, "NN", 6)]
    for j in range(6):
        rep.close(f"Omega lambda_{j + 1}^N", oracle[j], base[j], 0.01, RADIAL, abs_tol=1e-8)
    # double cover
    g2 = build_grid(annulus(b, degree=2), 2 * nth, nt)
    op2 = assemble(g2)
    pairs = lowest_eigenpairs(op2, 8, tol=tol, seed=seed)
    cover = [p.value for p in pairs]
    modes = annulus_spectrum_round(r_in, r_out, "NN", 7, degree=2)
    for j in range(7):
        rep.close(f"cover lambda_{j + 1}^N", modes[j].value, cover[j], 0.01, RADIAL, abs_tol=1e-8)
    lam6 = cover[5]
    split = deck_split(op2)
    anti = [p.value for p in lowest_eigenpairs(split.antisymmetric, 6, tol=tol, seed=seed)]
    sym = [p.value for p in lowest_eigenpairs(split.symmetric, 6, tol=tol, seed=seed)]
    gap_anti = min(abs(v - lam6) for v in anti) / lam6
    gap_sym = min(abs(v - lam6) for v in sym) / lam6
    rep.check("cover lambda_6 lies in the deck-antisymmetric block", ANTISYMMETRIC,
              f"rel dist anti {gap_anti:.1e}, sym {gap_sym:.1e}", "anti <= 1e-6 < sym",
              RADIAL, gap_anti <= 1e-6 < gap_sym and modes[5].deck_class == ANTISYMMETRIC)
    cc = courant_sharp_check(op2, 6, tol=tol, seed=seed, pairs=pairs)
    rep.check("cover lambda_6 is Courant sharp (6-domain witness)", 6,
              cc.max_count, "exact count", RADIAL, cc.witness)
    lam2 = {}
    for bc in ("DN", "ND"):
        g = build_grid(annulus(b, bc=bc), nth, nt)
        num = lowest_eigenpairs(assemble(g), 2, tol=tol, seed=seed)[1].value
        ref = annulus_spectrum_round(r_in, r_out, bc, 2)[1].value
        rep.close(f"Omega lambda_2^{bc}", ref, num, 0.01, RADIAL)
        lam2[bc] = num
    bound = min(lam2.values())
    rep.check("condition lambda_6^N(cover) <= inf(lambda_2^DN, lambda_2^ND)", bound, lam6,
              "upper bound", RADIAL, lam6 <= bound)
    rep.extra.update(base=base, base_oracle=oracle, cover=cover,
                     cover_oracle=[m.value for m in modes], antisymmetric=anti, symmetric=sym,
                     lambda2=lam2)
    if out:
        rep.artifacts += io.export_plot_data(modes, out / "cover_oracle.csv")
        rep.artifacts += io.export_plot_data(op2.to_grid(pairs[5].vector), out / "cover_eigvec_6.csv")
        if cc.witness_vector is not None:
            rep.artifacts += io.export_plot_data(nodal_domains(cc.witness_vector).labels,
                                                 out / "cover_witness_6_domains.csv")


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    anchor: str
    defaults: dict
    run: object


_COMMON = {"tol": 1e-8, "seed": 0, "jobs": 1, "max_sweeps": 200}

SCENARIOS = {
    s.id: s for s in (
        Scenario("lemma-C2", "spectrum of the double-cover strip C(2,b) and a Courant-sharp lambda_6",
                 "C(2,b) lambda_6 Courant sharp for b <= 1/3",
                 {"b": 0.3, "ntheta": 512, "nt": 78}, _lemma_c2),
        Scenario("thm-cylinder", "minimal Neumann 3-partition of C(b) is equal thirds for thin b",
                 "L_3 = 9 pi^2 for b <= 1/(2 sqrt 5)",
                 {"b": 0.2, "k": 3, "ntheta": 256, "nt": 52, "restarts": 8}, _thm_cylinder),
        Scenario("prop-2-3", "for b = 0.8 the transverse nodal 3-partition beats equal thirds",
                 "three nodal bands with energy 4 pi^2/b^2 < 9 pi^2",
                 {"b": 0.8, "k": 3, "ntheta": 128, "nt": 100, "restarts": 8}, _prop_23),
        Scenario("k-thresholds", "odd-k thinness thresholds and the DN sufficient condition",
                 "L_k = k^2 pi^2 below the k-dependent threshold",
                 {"b": 0.1, "k": 5, "ntheta": 500, "nt": 50, "restarts": 2}, _k_thresholds),
        Scenario("annulus-condthin", "round annulus: antisymmetric Courant-sharp lambda_6 on the cover",
                 "lambda_6 of the cover antisymmetric, Courant sharp, below lambda_2^DN and lambda_2^ND",
                 {"b": 0.1, "ntheta": 256, "nt": 20}, _annulus_condthin),
    )
}


def list_scenarios():
    """``(id, description, anchor)`` for every scenario in registry order."""
    return [(s.id, s.description, s.anchor) for s in SCENARIOS.values()]


def scenario_config(scenario_id, config=None):
    if scenario_id not in SCENARIOS:
        raise InvalidArgument(f"unknown scenario {scenario_id!r}; try one of {list(SCENARIOS)}")
    cfg = dict(_COMMON)
    cfg.update(SCENARIOS[scenario_id].defaults)
    for key, value in (config or {}).items():
        if value is not None:
            cfg[key] = value
    return cfg


def run_scenario(scenario_id, config=None, out_dir=None):
    """Run one scenario.  Artifacts and ``report.json`` go to ``out_dir/<id>`` if given."""
    cfg = scenario_config(scenario_id, config)
    out = None
    if out_dir is not None:
        out = Path(out_dir) / scenario_id
        out.mkdir(parents=True, exist_ok=True)
    rep = ScenarioReport(scenario_id, {k: cfg[k] for k in sorted(cfg)})
    start = time.perf_counter()
    SCENARIOS[scenario_id].run(cfg, rep, out)
    rep.wall_time = time.perf_counter() - start
    if out is not None:
        path = out / "report.json"
        path.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
        rep.artifacts.append(path)
    return rep
