"""
Verified-family files, certificate archives and the audit pass.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from quadcert.candidates.io import CandidateFamily, read_family, write_family
from quadcert.exceptions import ParseError
from quadcert.forms import QuadraticForm
from quadcert.relations.io import relation_digest
from quadcert.relations.relation import ScalarRelation, SemialgebraicPiece, eval_graph
from quadcert.utils.serialization import digest, read_json, write_json
from quadcert.verification.approx import verification_pieces
from quadcert.verification.recheck import recheck_certificate
from quadcert.verification.sos import FamilyVerdict, SOSCertificate

VERIFIED_KIND = "verified_family"
ARCHIVE_KIND = "certificate_archive"
AUDIT_GRID = 100_000
AUDIT_TOL = 1e-8


def pieces_digest(pieces: Sequence[SemialgebraicPiece]) -> str:
    return digest([p.to_record() for p in pieces])


def verified_family(
    verdicts: Sequence[FamilyVerdict],
    rel: ScalarRelation,
    pieces: Sequence[SemialgebraicPiece],
    seed: Optional[int] = None,
    profile: Optional[str] = None,
    header: Optional[dict] = None,
) -> CandidateFamily:
    """Family whose forms carry 'verified', certificate digests and the piece digest in their meta."""
    piece_digest = pieces_digest(pieces)
    forms = []
    for v in verdicts:
        meta = dict(v.form.meta)
        meta.update(
            verified=v.verified,
            piece_digest=piece_digest,
            certificate_digests=[c.digest() for c in v.union.certificates] if v.union else [],
        )
        if v.message:
            meta["diagnostic"] = v.message
        forms.append(v.form.replace(meta=meta))
    return CandidateFamily(
        forms=forms,
        relation=rel.name,
        relation_digest=relation_digest(rel),
        seed=seed,
        profile=profile,
        header=dict(header or {}, piece_digest=piece_digest),
        kind=VERIFIED_KIND,
    )


def write_verified_family(path: Union[str, Path], family: CandidateFamily) -> Path:
    return write_family(path, family, kind=VERIFIED_KIND)


def load_verified_forms(path: Union[str, Path]) -> List[QuadraticForm]:
    """Only the forms marked verified."""
    family = read_family(path)
    if family.kind != VERIFIED_KIND:
        raise ParseError("not a verified-family file", location=str(path))
    return [q for q in family.forms if q.meta.get("verified", False)]


def certificate_archive(verdicts: Sequence[FamilyVerdict], rel: ScalarRelation,
                        pieces: Sequence[SemialgebraicPiece]) -> dict:
    entries = []
    for v in verdicts:
        if v.union is None:
            continue
        for outcome in v.union.outcomes:
            if outcome.certificate is None:
                continue
            cert = outcome.certificate
            entries.append(
                {"form": v.form.tag, "piece": cert.piece_label, "digest": cert.digest(),
                 "certificate": cert.to_record()}
            )
    return {
        "kind": ARCHIVE_KIND,
        "relation": rel.name,
        "relation_digest": relation_digest(rel),
        "piece_digest": pieces_digest(pieces),
        "certificates": entries,
    }


def write_archive(path: Union[str, Path], archive: dict) -> Path:
    return write_json(path, archive)


def read_archive(path: Union[str, Path]) -> dict:
    data = read_json(path)
    if not isinstance(data, dict) or data.get("kind") != ARCHIVE_KIND:
        raise ParseError("not a certificate archive", location=str(path))
    return data


@dataclass
class AuditReport:
    n_forms: int = 0
    n_certificates: int = 0
    grid_failures: List[dict] = field(default_factory=list)
    recheck_failures: List[dict] = field(default_factory=list)
    problems: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.grid_failures or self.recheck_failures or self.problems)

    def to_record(self) -> dict:
        return {
            "passed": self.passed,
            "n_forms": self.n_forms,
            "n_certificates": self.n_certificates,
            "grid_failures": self.grid_failures,
            "recheck_failures": self.recheck_failures,
            "problems": self.problems,
        }


def grid_soundness(q: QuadraticForm, rel: ScalarRelation, n: int = AUDIT_GRID) -> float:
    """min over an n-point grid of q(x, f(x)) across the relation domain."""
    xs = np.linspace(*rel.domain, n)
    return float(np.min(q(xs, eval_graph(rel, xs))))


def audit_family(
    family_path: Union[str, Path],
    rel: ScalarRelation,
    archive_path: Optional[Union[str, Path]] = None,
    grid_points: int = AUDIT_GRID,
    debug: bool = False,
) -> AuditReport:
    """
    Grid soundness of every verified form plus a re-check of every archived
    certificate against freshly rebuilt verification pieces.
    """
    report = AuditReport()
    forms = load_verified_forms(family_path)
    report.n_forms = len(forms)
    for q in forms:
        low = grid_soundness(q, rel, grid_points)
        if debug:
            print(f"  form '{q.tag}': grid minimum {low:.3e}")
        if low < -AUDIT_TOL:
            report.grid_failures.append({"form": q.tag, "minimum": low})

    if archive_path is None:
        return report

    archive = read_archive(archive_path)
    pieces, _ = verification_pieces(rel)
    if archive.get("piece_digest") != pieces_digest(pieces):
        report.problems.append("rebuilt verification pieces differ from the archived piece digest")
        return report
    by_label = {p.label: p for p in pieces}
    by_tag = {q.tag: q for q in forms}
    for entry in archive["certificates"]:
        report.n_certificates += 1
        cert = SOSCertificate.from_record(entry["certificate"])
        if cert.digest() != entry["digest"]:
            report.recheck_failures.append(
                {"form": entry["form"], "piece": entry["piece"], "reason": "digest mismatch"}
            )
            continue
        q, piece = by_tag.get(entry["form"]), by_label.get(entry["piece"])
        if q is None or piece is None:
            # certificates of dropped candidates are not audited
            report.n_certificates -= 1
            continue
        result = recheck_certificate(cert, q, piece)
        if not result.passed:
            report.recheck_failures.append(
                {"form": entry["form"], "piece": entry["piece"], "residual": result.residual,
                 "perturbation": result.perturbation}
            )
    if debug:
        print(f"Audit: {report.n_forms} forms, {report.n_certificates} certificates, "
              f"{'passed' if report.passed else 'FAILED'}")
    return report
