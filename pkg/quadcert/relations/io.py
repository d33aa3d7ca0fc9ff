"""
Relation spec files.

A relation spec is a JSON document::

    {
      "name": "sat", "kind": "piecewise_polynomial",
      "domain": [-5, 5], "symmetry": "odd", "breakpoints": [-1, 1],
      "pieces": [
        {"label": "lower", "interval": [-5, -1], "equality": [{"x": 0, "y": 0, "c": -1}]},
        ...
      ],
      "generation": {...}, "verification": {...}
    }

Pieces give either ``equality`` (y = p(x), p as sparse monomial records) or
``constraints`` (a list of polynomials g_j >= 0); the interval is always
added as the single constraint (x - a)(b - x) >= 0. Evaluator relations give
``"evaluator": "tanh"`` and ``"lipschitz"`` instead of pieces.
"""

from pathlib import Path
from typing import Union

from quadcert.exceptions import ParseError
from quadcert.relations.polynomial import Polynomial2, interval_constraint
from quadcert.relations.registry import get_evaluator
from quadcert.relations.relation import ScalarRelation, SemialgebraicPiece
from quadcert.utils.serialization import digest, read_json

SECTIONS = ("generation", "verification")


def _piece_from_record(rec: dict, where: str) -> SemialgebraicPiece:
    try:
        label = rec.get("label", where)
        interval = tuple(float(v) for v in rec["interval"])
        if "equality" in rec:
            p = Polynomial2.from_records(rec["equality"])
            return SemialgebraicPiece.from_graph(interval, p, label=label)
        extra = [Polynomial2.from_records(g) for g in rec.get("constraints", [])]
        graph = Polynomial2.from_records(rec["graph"]) if "graph" in rec else None
        constraints = [interval_constraint(*interval)] + extra
        return SemialgebraicPiece(tuple(constraints), label=label, interval=interval, graph=graph)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad piece record: {exc}", location=where) from exc


def relation_from_dict(data: dict, source: str = "<relation>") -> ScalarRelation:
    """Build a ScalarRelation from a parsed spec document."""
    try:
        kind = data["kind"]
        domain = tuple(float(v) for v in data["domain"])
        name = data.get("name", Path(source).stem)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"missing or malformed field: {exc}", location=source) from exc

    sections = {key: data[key] for key in SECTIONS if key in data}
    common = dict(
        name=name,
        kind=kind,
        domain=domain,
        symmetry=data.get("symmetry", "none"),
        declared_breakpoints=tuple(data.get("breakpoints", ())),
        sections=sections,
    )
    if kind == "evaluator":
        evaluator = get_evaluator(data.get("evaluator"))
        lipschitz = data.get("lipschitz", evaluator.lipschitz)
        return ScalarRelation(evaluator=evaluator, lipschitz=float(lipschitz), **common)

    pieces = [
        _piece_from_record(rec, f"{source}#pieces[{k}]") for k, rec in enumerate(data.get("pieces", []))
    ]
    return ScalarRelation(pieces=tuple(pieces), **common)


def load_relation(source: Union[str, Path, dict]) -> ScalarRelation:
    """Load a relation from a spec file path, ``bundled:<name>`` or an already parsed dict."""
    if isinstance(source, dict):
        return relation_from_dict(source)
    from quadcert.config import resolve_path

    path = resolve_path(source, None)
    return relation_from_dict(read_json(path), source=str(path))


def dump_relation(rel: ScalarRelation) -> dict:
    """Spec document for ``rel`` (sections included)."""
    data = {
        "name": rel.name,
        "kind": rel.kind,
        "domain": list(rel.domain),
        "symmetry": rel.symmetry,
        "breakpoints": list(rel.declared_breakpoints),
    }
    if rel.kind == "evaluator":
        data["evaluator"] = rel.evaluator.name
        data["lipschitz"] = rel.lipschitz
    else:
        data["pieces"] = []
        for piece in rel.pieces:
            rec = {"label": piece.label, "interval": list(piece.interval)}
            if piece.graph is not None and len(piece.constraints) == 3:
                rec["equality"] = piece.graph.to_records()
            else:
                rec["constraints"] = [g.to_records() for g in piece.constraints[1:]]
                if piece.graph is not None:
                    rec["graph"] = piece.graph.to_records()
            data["pieces"].append(rec)
    data.update(rel.sections)
    return data


def relation_digest(rel: ScalarRelation) -> str:
    return digest(dump_relation(rel))
