"""
Minimal step-runner shared by the batch workflows.

A workflow declares an ``outline`` of method names that run in order over a
shared ``ctx`` namespace. A step may return an ``ExitCode`` to stop the run.
Library calls go through ``self.call`` so that their debug printing ends up
in the workflow log.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from types import SimpleNamespace
from typing import Dict, Optional, Tuple

from quadcert.config import RunConfig
from quadcert.exceptions import (
    AmbiguityError,
    ApproximationError,
    AssemblyError,
    ConfigError,
    DomainError,
    InconsistencyError,
    ParseError,
    PreconditionError,
    SolverError,
)
from quadcert.utils.reporting import redirect_print_report
from quadcert.utils.serialization import write_json, write_table

MANIFEST_KIND = "run_manifest"


@dataclass(frozen=True)
class ExitCode:
    status: int
    label: str
    message: str

    @property
    def ok(self) -> bool:
        return self.status == 0


def exit_code_table(*codes: ExitCode) -> SimpleNamespace:
    """Namespace of exit codes keyed by label, e.g. ``table.ERROR_SOLVER``."""
    return SimpleNamespace(**{code.label: code for code in codes})


BASE_EXIT_CODES = (
    ExitCode(0, "FINISHED_OK", "run finished"),
    ExitCode(2, "ERROR_VERIFICATION_FAILED", "verification failures present"),
    ExitCode(3, "ERROR_SOLVER", "solver or numerical failure"),
    ExitCode(3, "ERROR_UNEXPECTED", "unexpected internal error"),
    ExitCode(4, "ERROR_CONFIG", "invalid configuration or input file"),
)

# exception types -> exit code label
_ERROR_LABELS: Tuple[Tuple[tuple, str], ...] = (
    ((SolverError, ApproximationError, InconsistencyError, AssemblyError), "ERROR_SOLVER"),
    ((ConfigError, ParseError, PreconditionError, DomainError, AmbiguityError), "ERROR_CONFIG"),
)


class Workflow:
    """
    Base class. Subclasses set ``name`` and ``outline`` and may extend
    ``exit_codes``.
    """

    name = "workflow"
    outline: Tuple[str, ...] = ()
    exit_codes = exit_code_table(*BASE_EXIT_CODES)

    def __init__(self, config: RunConfig):
        self.config = config
        self.ctx = SimpleNamespace()
        self.outputs: Dict[str, Path] = {}
        self.logger = logging.getLogger(f"quadcert.{self.name}")
        self.exit_code: Optional[ExitCode] = None
        self.flags: Dict[str, object] = {}

    @property
    def options(self) -> dict:
        return self.config.options

    @property
    def stem(self) -> str:
        return self.options.get("name", self.name)

    def report(self, message: str, level: int = logging.INFO):
        self.logger.log(level, message)

    def call(self, func, *args, **kwargs):
        """Call a library function with ``debug=True`` and forward what it printed."""
        result, text = redirect_print_report(func, *args, debug=True, **kwargs)
        for line in text.splitlines():
            if line.strip():
                self.report(line)
        return result

    def out(self, key: str, path: Path) -> Path:
        self.outputs[key] = Path(path)
        return Path(path)

    def artifact(self, suffix: str) -> Path:
        return Path(self.config.output) / f"{self.stem}_{suffix}"

    def write_record(self, key: str, suffix: str, record: dict) -> Path:
        record = dict(record, seed=self.config.seed)
        return self.out(key, write_json(self.artifact(suffix), record))

    def write_csv(self, key: str, suffix: str, header, rows) -> Path:
        return self.out(key, write_table(self.artifact(suffix), header, rows))

    def run(self) -> ExitCode:
        """
        Run the outline. Exceptions of the package map to exit codes; any
        other exception is logged with its traceback and ends the run with
        ERROR_UNEXPECTED and an incomplete manifest.
        """
        self.report(f"Starting '{self.name}' (seed {self.config.seed}, workers {self.config.workers})")
        code = None
        done = 0
        try:
            for step in self.outline:
                self.report(f"Step '{step}'", logging.DEBUG)
                code = getattr(self, step)()
                done += 1
                if isinstance(code, ExitCode):
                    break
        except Exception as exc:
            label = next(
                (lab for types, lab in _ERROR_LABELS if isinstance(exc, types)), None
            )
            if label is None:
                self.logger.error(
                    "Unexpected %s in step %d: %s", type(exc).__name__, done + 1, exc,
                    exc_info=True,
                )
                label = "ERROR_UNEXPECTED"
            else:
                self.report(f"{type(exc).__name__}: {exc}", logging.ERROR)
            code = getattr(self.exit_codes, label)
        if not isinstance(code, ExitCode):
            code = self.exit_codes.FINISHED_OK
        self.exit_code = code
        self.write_manifest(code, complete=done == len(self.outline))
        level = logging.INFO if code.ok else logging.ERROR
        self.report(
            f"'{self.name}' finished with exit status {code.status} "
            f"({code.label}): {code.message}",
            level,
        )
        return code

    def write_manifest(self, code: ExitCode, complete: bool) -> Path:
        """Artifact list of the run; ``complete`` is false when it stopped early."""
        record = {
            "kind": MANIFEST_KIND,
            "command": self.name,
            "status": code.status,
            "label": code.label,
            "complete": complete,
            "flags": self.flags,
            "artifacts": {k: p.name for k, p in sorted(self.outputs.items())},
            "seed": self.config.seed,
        }
        return write_json(self.artifact("manifest.json"), record)
