"""
Candidate-family files.

A family file is a JSON object with a header (relation name and digest,
seed, profile, QP weights) and a ``forms`` list of quadratic-form records.
Coefficients are written at full precision.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

from quadcert.exceptions import ParseError
from quadcert.forms import QuadraticForm
from quadcert.utils.serialization import read_json, write_json

FAMILY_KIND = "candidate_family"


@dataclass
class CandidateFamily:
    forms: List[QuadraticForm]
    relation: str = ""
    relation_digest: str = ""
    seed: Optional[int] = None
    profile: Optional[str] = None
    header: dict = field(default_factory=dict)
    kind: str = FAMILY_KIND

    def __len__(self):
        return len(self.forms)

    def to_record(self, kind: Optional[str] = None) -> dict:
        record = dict(self.header)
        record.update(
            kind=kind or self.kind,
            relation=self.relation,
            relation_digest=self.relation_digest,
            seed=self.seed,
            profile=self.profile,
            forms=[q.to_record() for q in self.forms],
        )
        return record

    @classmethod
    def from_record(cls, record: dict, source: str = "<family>") -> "CandidateFamily":
        if not isinstance(record, dict) or "forms" not in record:
            raise ParseError("family file needs a 'forms' list", location=source)
        forms = []
        for k, rec in enumerate(record["forms"]):
            try:
                forms.append(QuadraticForm.from_record(rec))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad form record: {exc}", location=f"{source}#forms[{k}]") from exc
        reserved = {"kind", "relation", "relation_digest", "seed", "profile", "forms"}
        return cls(
            forms=forms,
            relation=record.get("relation", ""),
            relation_digest=record.get("relation_digest", ""),
            seed=record.get("seed"),
            profile=record.get("profile"),
            header={k: v for k, v in record.items() if k not in reserved},
            kind=record.get("kind", FAMILY_KIND),
        )


def write_family(path: Union[str, Path], family: CandidateFamily, kind: Optional[str] = None) -> Path:
    return write_json(path, family.to_record(kind))


def read_family(path: Union[str, Path]) -> CandidateFamily:
    return CandidateFamily.from_record(read_json(path), source=str(path))
