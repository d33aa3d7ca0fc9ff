"""
Network analysis workflows: reachable-set polytopes, safety verdicts and
bound tightening.
"""

import logging
from typing import List

import numpy as np

from quadcert.exceptions import ConfigError
from quadcert.network import (
    bounds_report,
    forward_eval,
    interval_propagate,
    load_box,
    load_network,
    sample_box,
)
from quadcert.reach import (
    CHARACTERIZATIONS,
    ActivationBlockSpec,
    CertFamily,
    average_width,
    box_directions,
    builtin_family,
    characterization,
    facet_lines,
    family_from_file,
    not_minimal_rows,
    output_interval,
    prepare_analysis,
    projection_directions,
    reach_polytope,
    verify_disjunction,
    verify_polyhedron,
)
from quadcert.reach.qcs import BUILTIN_FAMILIES
from quadcert.tighten import TightenOptions, tighten_network_report
from quadcert.workflows.base import BASE_EXIT_CODES, ExitCode, Workflow, exit_code_table

REACH_SUMMARY_KIND = "reach_summary"
SAFETY_KIND = "safety_report"


def _finite(value):
    """JSON-safe float: None for inf and nan."""
    value = float(value)
    return value if np.isfinite(value) else None


class NetworkWorkflow(Workflow):
    """Shared loading of the network, input box, QC families and characterizations."""

    def load_network(self):
        net = load_network(self.config.network)
        if self.config.input_box is not None:
            box = load_box(self.config.input_box)
        elif net.input_box is not None:
            box = net.input_box
        else:
            raise ConfigError("No input box: set 'input_box' or store one with the network")
        if box.shape[0] != net.n_x:
            raise ConfigError(f"Input box has {box.shape[0]} rows, network has {net.n_x} inputs")
        self.ctx.network = net
        self.ctx.box = box
        self.ctx.families = self.load_families(net)
        self.ctx.tighten_options = TightenOptions.from_record(self.options.get("tighten"))
        self.report(f"Network '{net.name}': inputs {net.n_x}, hidden {net.hidden_sizes}, outputs {net.n_y}, "
                    f"activations {sorted(set(net.activations))}")

    def family_activation(self, net) -> str:
        if "activation" in self.options:
            return self.options["activation"]
        tags = sorted({a for a in net.activations if a != "identity"})
        if len(tags) != 1:
            raise ConfigError(f"Network mixes activations {tags}; set options.activation for the families")
        return tags[0]

    def load_families(self, net) -> List[CertFamily]:
        families = []
        for entry in self.config.families:
            if entry in BUILTIN_FAMILIES:
                families.append(builtin_family(entry, self.family_activation(net)))
            else:
                families.append(family_from_file(entry, self.family_activation(net)))
            fam = families[-1]
            self.report(
                f"QC family '{fam.name}' ({fam.activation}): "
                f"{len(fam.forms)} forms, domain {fam.domain}"
            )
        return families

    def activation_spec(self, name: str) -> ActivationBlockSpec:
        if name in CHARACTERIZATIONS:
            return characterization(
                name,
                block_size=int(self.options.get("block_size", 10)),
                block_strategy=self.options.get("block_strategy", "sequential"),
                families=self.ctx.families,
                relu_complementarity=self.options.get("relu_complementarity", "inequality"),
            )
        # any other name: verified families plus local bounds only
        return ActivationBlockSpec(name, families=tuple(self.ctx.families), local_bounds=True)

    def context(self, act: ActivationBlockSpec):
        return self.call(
            prepare_analysis,
            self.ctx.network,
            self.ctx.box,
            act,
            prune=bool(self.options.get("prune", True)),
            tighten_options=self.ctx.tighten_options,
            workers=self.config.workers,
            tol=self.config.tolerances,
        )


class ReachWorkflow(NetworkWorkflow):
    """
    One output polytope per characterization in ``options.characterizations``
    (default ``["COMB"]``). Facet directions come from ``options.directions``:
    ``{"kind": "box"}`` or ``{"kind": "projection", "plane": [0, 1], "count": 180}``.
    Writes the polytope JSON, facet-line CSV (2D planes only), a sampled
    output cloud and a width summary.
    """

    name = "reach"
    outline = ("load_network", "build_directions", "solve_polytopes", "sample_outputs", "write_summary")

    def build_directions(self):
        spec = dict(self.options.get("directions", {"kind": "box"}))
        n_y = self.ctx.network.n_y
        kind = spec.get("kind", "box")
        if kind == "box":
            dirs = box_directions(n_y)
        elif kind == "projection":
            plane = tuple(spec.get("plane", (0, 1)))
            dirs = projection_directions(n_y, plane, int(spec.get("count", 180)))
        elif kind == "explicit":
            dirs = [np.asarray(a, dtype=float) for a in spec["rows"]]
        else:
            raise ConfigError(f"Unknown direction kind '{kind}'")
        self.ctx.directions = dirs
        self.ctx.plane = tuple(spec.get("plane", (0, 1)))
        self.report(f"{len(dirs)} facet directions")

    def solve_polytopes(self):
        names = self.options.get("characterizations", ["COMB"])
        self.ctx.polytopes = {}
        for name in names:
            act = self.activation_spec(name)
            ctx = self.context(act)
            poly = self.call(
                reach_polytope,
                ctx.network,
                ctx.input_set,
                act,
                self.ctx.directions,
                tol=self.config.tolerances,
                workers=self.config.workers,
                context=ctx,
            )
            if poly.failed:
                self.report(f"'{name}': {len(poly.failed)} facets dropped", logging.WARNING)
                self.flags.setdefault("partial_polytopes", []).append(name)
            self.ctx.polytopes[name] = poly
            record = dict(poly.to_record(), characterization=act.to_record(),
                          multipliers=ctx.assembly.multiplier_counts())
            self.write_record(f"polytope:{name}", f"{name}_polytope.json", record)
            if self.ctx.network.n_y >= 2:
                rows = facet_lines(poly, self.ctx.plane)
                header = ["a_p", "a_q", "b", "start_p", "start_q", "end_p", "end_q"]
                self.write_csv(f"facets:{name}", f"{name}_facets.csv", header, rows)

    def sample_outputs(self):
        n = int(self.options.get("samples", 1000))
        xs = sample_box(self.ctx.box, n, seed=self.config.seed)
        ys = np.atleast_2d(forward_eval(self.ctx.network, xs)).reshape(n, -1)
        header = [f"y{i + 1}" for i in range(ys.shape[1])]
        self.write_csv("samples", "outputs.csv", header, ys)
        for name, poly in self.ctx.polytopes.items():
            outside = int(np.sum(~poly.contains(ys, tol=1e-7)))
            if outside:
                self.report(f"'{name}': {outside} sampled outputs outside the polytope", logging.ERROR)
                self.flags.setdefault("containment_failures", {})[name] = outside

    def write_summary(self):
        rows = []
        for name, poly in self.ctx.polytopes.items():
            rows.append(
                {
                    "name": name,
                    "average_width": _finite(average_width(poly)),
                    "output_interval": [_finite(v) for v in output_interval(poly, 0)],
                    "n_facets": len(poly.kept),
                    "n_failed": len(poly.failed),
                }
            )
            self.report(f"'{name}': average width {rows[-1]['average_width']}")
        summary = {
            "kind": REACH_SUMMARY_KIND,
            "network": self.ctx.network.name,
            "characterizations": rows,
        }
        self.write_record("summary", "reach_summary.json", summary)
        if self.flags.get("containment_failures"):
            return self.exit_codes.ERROR_VERIFICATION_FAILED


class SafetyWorkflow(NetworkWorkflow):
    """
    Safety verdicts for ``options.halfspaces`` ({c, d}), ``options.polyhedra``
    (lists of halfspaces, all must hold), ``options.disjunctions``
    ({rows, mode}) and ``options.not_minimal`` (output indices).
    Any verdict other than 'verified' exits 2.
    """

    name = "safety"
    outline = (
        "load_network",
        "prepare",
        "check_halfspaces",
        "check_polyhedra",
        "check_disjunctions",
        "finalize",
    )
    exit_codes = exit_code_table(
        *BASE_EXIT_CODES,
        ExitCode(2, "ERROR_NOT_VERIFIED", "some safety properties could not be verified"),
    )

    @staticmethod
    def _rows(records):
        return [(np.asarray(r["c"], dtype=float), float(r["d"])) for r in records]

    def prepare(self):
        act = self.activation_spec(self.options.get("characterization", "COMB"))
        self.ctx.act = act
        self.ctx.analysis = self.context(act)
        self.ctx.results = {"halfspaces": [], "polyhedra": [], "disjunctions": []}

    def check_halfspaces(self):
        rows = self._rows(self.options.get("halfspaces", []))
        if not rows:
            return
        ctx = self.ctx.analysis
        _, verdicts = verify_polyhedron(ctx.network, ctx.input_set, self.ctx.act, rows,
                                        tol=self.config.tolerances, workers=self.config.workers, context=ctx)
        for v in verdicts:
            self.report(f"halfspace c={v.c.tolist()} d={v.d}: {v.verdict}")
        self.ctx.results["halfspaces"] = [v.to_record() for v in verdicts]

    def check_polyhedra(self):
        ctx = self.ctx.analysis
        for k, records in enumerate(self.options.get("polyhedra", [])):
            ok, verdicts = verify_polyhedron(
                ctx.network,
                ctx.input_set,
                self.ctx.act,
                self._rows(records),
                tol=self.config.tolerances,
                workers=self.config.workers,
                context=ctx,
            )
            self.report(f"polyhedron {k}: {'verified' if ok else 'unknown'}")
            self.ctx.results["polyhedra"].append(
                {"verdict": "verified" if ok else "unknown", "rows": [v.to_record() for v in verdicts]}
            )

    def check_disjunctions(self):
        ctx = self.ctx.analysis
        items = [(self._rows(d["rows"]), d.get("mode", "joint"), d.get("label", f"disjunction{k}"))
                 for k, d in enumerate(self.options.get("disjunctions", []))]
        for index in self.options.get("not_minimal", []):
            items.append((not_minimal_rows(ctx.network.n_y, int(index)), "joint", f"not_minimal[{index}]"))
        for rows, mode, label in items:
            verdict = verify_disjunction(ctx.network, ctx.input_set, self.ctx.act, rows, mode=mode,
                                         tol=self.config.tolerances, context=ctx)
            self.report(f"{label} ({mode}): {verdict.verdict}, active rows {verdict.active}")
            self.ctx.results["disjunctions"].append(dict(verdict.to_record(), label=label))

    def finalize(self):
        results = self.ctx.results
        verdicts = [r["verdict"] for group in results.values() for r in group]
        record = dict(results, kind=SAFETY_KIND, network=self.ctx.network.name,
                      characterization=self.ctx.act.to_record(),
                      all_verified=all(v == "verified" for v in verdicts))
        self.write_record("safety", "safety.json", record)
        n_unknown = sum(v != "verified" for v in verdicts)
        self.report(f"{len(verdicts) - n_unknown}/{len(verdicts)} properties verified")
        if n_unknown:
            return self.exit_codes.ERROR_NOT_VERIFIED


class TightenWorkflow(NetworkWorkflow):
    """Interval bounds, tightened bounds and the per-layer tightening report."""

    name = "tighten"
    outline = ("load_network", "tighten", "write_outputs")

    def tighten(self):
        net = self.ctx.network
        self.ctx.ibp = interval_propagate(net, self.ctx.box)
        bounds, report = self.call(
            tighten_network_report,
            net,
            self.ctx.box,
            self.ctx.tighten_options,
            workers=self.config.workers,
            tol=self.config.tolerances,
        )
        self.ctx.bounds = bounds
        self.ctx.report = report
        for layer in range(2, net.depth + 1):
            self.report(f"Layer {layer}: mean width reduction {report.mean_reduction(layer):.2f}%")

    def write_outputs(self):
        self.write_record("ibp_bounds", "ibp_bounds.json", bounds_report(self.ctx.ibp))
        self.write_record("bounds", "bounds.json", bounds_report(self.ctx.bounds))
        self.write_record("tightening", "tightening.json",
                          dict(self.ctx.report.to_record(), network=self.ctx.network.name))
