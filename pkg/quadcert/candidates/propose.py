"""
Candidate generation over a list of subdomains.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from quadcert.candidates.io import read_family
from quadcert.candidates.qp import CandidateSpec, assemble_candidate_qp, solve_candidate
from quadcert.conic.solve import DEFAULT_TOLERANCES, ToleranceProfile
from quadcert.exceptions import DomainError, PreconditionError
from quadcert.forms import QuadraticForm
from quadcert.relations.relation import ScalarRelation, apply_odd_symmetry, eval_graph
from quadcert.relations.sampling import (
    PLACEMENTS,
    SampleSet,
    anchor_points,
    sample_exterior,
    sample_graph,
)

MODES = ("qp", "read")
_FLIP = {"upper": "lower", "lower": "upper", "unconstrained": "unconstrained"}


@dataclass(frozen=True)
class SubdomainRecipe:
    """
    One candidate request.

    Args:
        interval: subdomain [a, b] of the relation domain
        orientation: 'upper' puts exterior points above the graph, 'lower' below
        n_local: number of local graph samples
        placement: 'uniform' or 'boundary_weighted'
        exterior_offsets: signed vertical offsets of the exterior samples
        n_exterior: number of x locations per offset
        targets: explicit exterior points appended verbatim
        tag: label of the subdomain; generated from the index when empty
    """

    interval: Tuple[float, float]
    orientation: str = "unconstrained"
    n_local: int = 20
    placement: str = "boundary_weighted"
    exterior_offsets: Tuple[float, ...] = ()
    n_exterior: int = 0
    targets: Tuple[Tuple[float, float], ...] = ()
    tag: str = ""

    def __post_init__(self):
        a, b = (float(v) for v in self.interval)
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "exterior_offsets", tuple(float(d) for d in self.exterior_offsets))
        object.__setattr__(self, "targets", tuple(tuple(float(v) for v in t) for t in self.targets))
        if self.placement not in PLACEMENTS:
            raise PreconditionError(f"Unknown placement '{self.placement}'")
        if self.orientation == "upper" and any(d < 0 for d in self.exterior_offsets):
            raise PreconditionError(f"Subdomain {self.interval}: 'upper' needs positive offsets")
        if self.orientation == "lower" and any(d > 0 for d in self.exterior_offsets):
            raise PreconditionError(f"Subdomain {self.interval}: 'lower' needs negative offsets")

    @classmethod
    def from_record(cls, record: dict) -> "SubdomainRecipe":
        return cls(
            interval=tuple(record["interval"]),
            orientation=record.get("orientation", "unconstrained"),
            n_local=int(record.get("n_local", 20)),
            placement=record.get("placement", "boundary_weighted"),
            exterior_offsets=tuple(record.get("exterior_offsets", ())),
            n_exterior=int(record.get("n_exterior", 0)),
            targets=tuple(tuple(t) for t in record.get("targets", ())),
            tag=record.get("tag", ""),
        )

    def to_record(self) -> dict:
        return {
            "interval": list(self.interval),
            "orientation": self.orientation,
            "n_local": self.n_local,
            "placement": self.placement,
            "exterior_offsets": list(self.exterior_offsets),
            "n_exterior": self.n_exterior,
            "targets": [list(t) for t in self.targets],
            "tag": self.tag,
        }


def child_seed(seed: int, index: int) -> int:
    """Independent integer seed for stream ``index`` derived from ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def _tag(recipe: SubdomainRecipe, index: int) -> str:
    return recipe.tag or f"S{index + 1}"


def build_samples(
    rel: ScalarRelation,
    subdomains: Sequence[SubdomainRecipe],
    n_global: int,
    seed: int,
    global_interval: Optional[Tuple[float, float]] = None,
) -> SampleSet:
    """
    Draw all three sample classes.

    Global samples contain the ends and breakpoints of ``global_interval``
    (the relation domain by default) first, then stratified draws over it up
    to ``n_global`` points.
    """
    lo, hi = global_interval or rel.domain
    if lo > hi:
        raise DomainError(f"Empty global interval [{lo}, {hi}]")
    anchors = anchor_points(rel)
    inside = (anchors[:, 0] > lo) & (anchors[:, 0] < hi)
    ends = np.array([lo, hi])
    anchors = np.vstack([np.column_stack([ends, eval_graph(rel, ends)]), anchors[inside]])
    n_draw = max(n_global - len(anchors), 0)
    blocks = [anchors[:n_global]]
    if n_draw:
        blocks.append(sample_graph(rel, (lo, hi), n_draw, child_seed(seed, 0), "uniform"))
    global_points = np.vstack(blocks) if n_global > 0 else np.zeros((0, 2))

    local, exterior = {}, {}
    for k, recipe in enumerate(subdomains):
        tag = _tag(recipe, k)
        if tag in local:
            raise PreconditionError(f"Duplicate subdomain tag '{tag}'")
        local[tag] = sample_graph(rel, recipe.interval, recipe.n_local, child_seed(seed, 2 * k + 1),
                                  recipe.placement)
        exterior[tag] = sample_exterior(
            rel,
            recipe.interval,
            recipe.n_exterior,
            recipe.exterior_offsets,
            child_seed(seed, 2 * k + 2),
            targets=recipe.targets or None,
        )
    return SampleSet(local=local, global_points=global_points, exterior=exterior)


def mirror_candidate(q: QuadraticForm) -> QuadraticForm:
    """Odd-symmetry image of a candidate with flipped orientation and a primed tag."""
    meta = {"mirrored_from": q.tag}
    if "interval" in q.meta:
        a, b = q.meta["interval"]
        meta["interval"] = [-b, -a]
    return apply_odd_symmetry(q).replace(tag=f"{q.tag}'", orientation=_FLIP[q.orientation], meta=meta)


def _solve_one(samples, tag, recipe, spec, tol, debug):
    qp = assemble_candidate_qp(samples, tag, spec.with_orientation(recipe.orientation))
    form, report = solve_candidate(qp, tol, debug=debug)
    meta = {"interval": list(recipe.interval), "slack": report.to_record()}
    return form.replace(meta=meta)


def generate_candidates(
    rel: ScalarRelation,
    subdomains: Sequence[SubdomainRecipe],
    spec: CandidateSpec,
    seed: int = 0,
    n_global: int = 500,
    global_interval: Optional[Tuple[float, float]] = None,
    mode: str = "qp",
    workers: int = 1,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    debug: bool = False,
    **kwargs,
) -> List[QuadraticForm]:
    """
    One candidate per subdomain, plus mirrored candidates for odd relations.

    :param rel: relation to characterize
    :param subdomains: list of SubdomainRecipe (repeated intervals are allowed)
    :param spec: QP weights; the orientation of each recipe overrides spec.orientation
    :param seed: base seed, every sample stream is derived from it
    :param n_global: number of global graph samples shared by all subdomains
    :param global_interval: x-range of the global samples, the relation domain by default
    :param mode: 'qp' solves the sampled QPs, 'read' loads a stored family
    :param workers: number of QPs solved concurrently
    :param kwargs: 'readfile' for mode 'read'
    :return: list of QuadraticForm; slack reports live in ``form.meta['slack']``
    """
    if mode == "qp":
        if not subdomains:
            raise PreconditionError("At least one subdomain is required")
        samples = build_samples(rel, subdomains, n_global, seed, global_interval)
        if debug:
            print(
                f"Relation '{rel.name}': {len(samples.global_points)} global samples, "
                f"{len(subdomains)} subdomains"
            )
        jobs = [
            (samples, _tag(r, k), r, spec, tol, debug) for k, r in enumerate(subdomains)
        ]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                candidates = list(pool.map(lambda job: _solve_one(*job), jobs))
        else:
            candidates = [_solve_one(*job) for job in jobs]

    elif mode == "read":
        if "readfile" not in kwargs:
            raise PreconditionError("readfile must be provided in kwargs for read mode")
        family = read_family(kwargs["readfile"])
        candidates = [
            q
            for q in family.forms
            if q.provenance == "candidate" and "mirrored_from" not in q.meta
        ]
        if debug:
            print(f"Reading {len(candidates)} candidates from {kwargs['readfile']}")

    else:
        raise PreconditionError(f"Unknown mode '{mode}'. Use one of {MODES}")

    if rel.symmetry == "odd":
        candidates = candidates + [mirror_candidate(q) for q in candidates]
        if debug:
            print(f"Appended {len(candidates) // 2} mirrored candidates")
    return candidates
