"""
Summary tables over run artifacts.

This module provides functionality to:
1. Load candidate/verified families, reach summaries, tightening reports,
   safety reports, bounds reports and run manifests
2. Reduce each artifact to a small summary dictionary
3. Build the width comparison across characterizations (absolute average
   width and relative increase against a reference, COMB-PP by default)
4. Render everything as plain-text tables

Usage:
    from quadcert.utils.postprocessing.report import render_report

    record, text = render_report(["out/tanh_verified.json", "out/net_reach_summary.json"])
"""

from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from quadcert.exceptions import ParseError
from quadcert.utils.serialization import read_json

PathLike = Union[str, Path]


def _family_summary(data: dict) -> Dict[str, Any]:
    forms = data.get("forms", [])
    summary = {
        "relation": data.get("relation", ""),
        "n_forms": len(forms),
        "n_mirrored": sum("mirrored_from" in f.get("meta", {}) for f in forms),
        "n_analytic": sum(f.get("provenance") == "analytic" for f in forms),
    }
    if data.get("kind") == "verified_family":
        verified = [f for f in forms if f.get("meta", {}).get("verified")]
        summary.update(
            n_verified=len(verified),
            dropped=[f.get("tag", "") for f in forms if not f.get("meta", {}).get("verified")],
            domain=data.get("domain"),
        )
    else:
        slack = [f.get("meta", {}).get("slack", {}) for f in forms]
        summary.update(
            n_zero_slack=sum(bool(s.get("zero_slack")) for s in slack),
            n_degenerate=sum(bool(s.get("degenerate")) for s in slack),
            n_global_warning=sum(bool(s.get("global_warning")) for s in slack),
        )
    return summary


def _tightening_summary(data: dict) -> Dict[str, Any]:
    return {
        "network": data.get("network", ""),
        "layers": [
            {"layer": rec["layer"], "mean_width_reduction_percent": rec["mean_width_reduction_percent"],
             "facets": rec.get("facets", {})}
            for rec in data.get("layers", [])
        ],
    }


def _safety_summary(data: dict) -> Dict[str, Any]:
    groups = {key: data.get(key, []) for key in ("halfspaces", "polyhedra", "disjunctions")}
    verdicts = [r.get("verdict") for rows in groups.values() for r in rows]
    return {
        "network": data.get("network", ""),
        "n_properties": len(verdicts),
        "n_verified": sum(v == "verified" for v in verdicts),
        "all_verified": bool(data.get("all_verified", False)),
    }


def _bounds_summary(data: dict) -> Dict[str, Any]:
    layers = []
    for rec in data.get("layers", []):
        counts = {"inactive": 0, "active": 0, "unstable": 0}
        for neuron in rec.get("neurons", []):
            if neuron.get("stability") in counts:
                counts[neuron["stability"]] += 1
        layers.append({"layer": rec["layer"], **counts})
    return {"layers": layers}


def summarize_artifact(data: dict) -> Dict[str, Any]:
    """
    Summary of one artifact, dispatched on its ``kind`` field.

    Raises:
        ParseError: for records without a known kind
    """
    kind = data.get("kind") if isinstance(data, dict) else None
    if kind in ("candidate_family", "verified_family"):
        summary = _family_summary(data)
    elif kind == "reach_summary":
        summary = {
            "network": data.get("network", ""),
            "characterizations": data.get("characterizations", []),
        }
    elif kind == "tightening_report":
        summary = _tightening_summary(data)
    elif kind == "safety_report":
        summary = _safety_summary(data)
    elif kind == "bounds_report":
        summary = _bounds_summary(data)
    elif kind == "run_manifest":
        keys = ("command", "status", "label", "complete", "flags")
        summary = {k: data.get(k) for k in keys}
    elif kind == "certificate_archive":
        summary = {
            "relation": data.get("relation", ""),
            "n_certificates": len(data.get("certificates", [])),
        }
    else:
        raise ParseError(f"unknown artifact kind {kind!r}")
    return dict(summary, kind=kind, seed=data.get("seed"))


def width_table(
    summaries: Sequence[dict], reference: str = "COMB-PP"
) -> Tuple[List[str], List[List[Any]]]:
    """
    Average polytope widths per characterization.

    Args:
        summaries: reach_summary summaries (other kinds are skipped)
        reference: characterization the relative increase is measured against

    Returns:
        (header, rows) with rows [network, characterization, width, increase %];
        the increase is None when the reference is missing from that network
    """
    header = ["network", "characterization", "average_width", "increase_percent"]
    rows = []
    for summary in summaries:
        if summary.get("kind") != "reach_summary":
            continue
        entries = summary["characterizations"]
        ref = next((e["average_width"] for e in entries if e["name"] == reference), None)
        for e in entries:
            width = e["average_width"]
            increase = None
            if ref is not None and width is not None and ref > 0:
                increase = 100.0 * (width - ref) / ref
            rows.append([summary["network"], e["name"], width, increase])
    return header, rows


def format_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Fixed-width text table; floats with 6 significant digits."""

    def cell(value):
        if value is None:
            return "-"
        if isinstance(value, (float, np.floating)):
            return f"{value:.6g}"
        return str(value)

    text_rows = [[cell(v) for v in row] for row in rows]
    widths = [max([len(h), *(len(r[k]) for r in text_rows)]) for k, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in text_rows)
    return "\n".join(lines)


def _section(title: str, header, rows) -> str:
    return f"{title}\n{format_table(header, rows)}\n"


def render_report(paths: Sequence[PathLike], reference: str = "COMB-PP",
                  debug: bool = False) -> Tuple[dict, str]:
    """
    Load every artifact and render the summary tables.

    Args:
        paths: artifact files
        reference: reference characterization of the width table
        debug: print one line per loaded file

    Returns:
        (record, text): JSON-ready summaries and the rendered tables
    """
    summaries = []
    for path in paths:
        summary = summarize_artifact(read_json(path))
        summary["source"] = Path(path).name
        summaries.append(summary)
        if debug:
            print(f"Loaded {summary['kind']} from {path}")

    blocks = []
    fam = [s for s in summaries if s["kind"] in ("candidate_family", "verified_family")]
    if fam:
        keys = ("source", "relation", "n_forms", "n_verified", "n_mirrored", "n_analytic")
        rows = [[s.get(k) for k in keys] for s in fam]
        header = ["file", "relation", "forms", "verified", "mirrored", "analytic"]
        blocks.append(_section("Families", header, rows))
    header, rows = width_table(summaries, reference)
    if rows:
        blocks.append(_section(f"Average widths (increase against {reference})", header, rows))
    tight = [s for s in summaries if s["kind"] == "tightening_report"]
    if tight:
        rows = [
            [s["network"], L["layer"], L["mean_width_reduction_percent"]]
            for s in tight
            for L in s["layers"]
        ]
        header = ["network", "layer", "mean_reduction_percent"]
        blocks.append(_section("Tightening", header, rows))
    safety = [s for s in summaries if s["kind"] == "safety_report"]
    if safety:
        rows = [[s["network"], s["n_verified"], s["n_properties"]] for s in safety]
        blocks.append(_section("Safety", ["network", "verified", "properties"], rows))

    record = {"kind": "summary_report", "reference": reference, "artifacts": summaries,
              "widths": _width_records(summaries, reference)}
    return record, "\n".join(blocks)


def _width_records(summaries: Sequence[dict], reference: str) -> List[dict]:
    header, rows = width_table(summaries, reference)
    return [dict(zip(header, r)) for r in rows]

