"""
Configuration: named candidate profiles and the batch run configuration.
"""

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional

from quadcert.conic.solve import DEFAULT_TOLERANCES, ToleranceProfile
from quadcert.exceptions import ConfigError
from quadcert.utils.serialization import read_json

# Candidate QP weights for the two bundled relations.
CANDIDATE_PROFILES = {
    "tanh": dict(rho=1e-3, lambda_loc=10.0, lambda_g=1.0, lambda_ext=10.0, gamma_bar=1e-2),
    "sat": dict(rho=1e-3, lambda_loc=10.0, lambda_g=1.0, lambda_ext=5.0, gamma_bar=1e-3),
}

COMMANDS = ("characterize", "verify", "reach", "safety", "tighten", "report")

# files each command cannot run without
_REQUIRED = {
    "characterize": ("relation",),
    "verify": ("relation", "candidates"),
    "reach": ("network",),
    "safety": ("network",),
    "tighten": ("network",),
    "report": (),
}

_PATH_FIELDS = ("relation", "candidates", "network", "input_box")
_PATH_LIST_FIELDS = ("families", "inputs")
BUNDLED_PREFIX = "bundled:"


def resolve_path(value, base_dir: Optional[Path]) -> Path:
    """Resolve ``bundled:<name>`` references and paths relative to ``base_dir``."""
    text = str(value)
    if text.startswith(BUNDLED_PREFIX):
        from quadcert.data import bundled_path

        try:
            return bundled_path(text[len(BUNDLED_PREFIX):])
        except FileNotFoundError as exc:
            raise ConfigError(str(exc)) from exc
    path = Path(text)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return path


@dataclass
class RunConfig:
    """
    One batch run.

    Args:
        command: one of COMMANDS
        relation: relation spec file (characterize, verify)
        candidates: candidate-family file (verify)
        families: verified-family files or built-in family names (reach, safety)
        network: network file, native JSON or benchmark ``.nnet`` (reach, safety, tighten)
        input_box: input-box file; defaults to the box stored with the network
        inputs: artifact files to summarize (report)
        output: output directory
        profile: candidate profile name
        seed: random seed recorded in every artifact
        workers: concurrent solves
        audit: run the audit pass (report, verify)
        tolerances: solver tolerance profile
        options: command-specific settings
    """

    command: str
    relation: Optional[Path] = None
    candidates: Optional[Path] = None
    families: List[str] = field(default_factory=list)
    network: Optional[Path] = None
    input_box: Optional[Path] = None
    inputs: List[Path] = field(default_factory=list)
    output: Path = Path("quadcert_out")
    profile: Optional[str] = None
    seed: int = 0
    workers: int = 1
    audit: bool = False
    tolerances: ToleranceProfile = DEFAULT_TOLERANCES
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}")
        if "command" not in data:
            raise ConfigError("Config needs a 'command'")
        kwargs = dict(data)
        for key in _PATH_FIELDS:
            if kwargs.get(key) is not None:
                kwargs[key] = resolve_path(kwargs[key], base_dir)
        kwargs["inputs"] = [resolve_path(p, base_dir) for p in kwargs.get("inputs", [])]
        kwargs["families"] = [
            str(resolve_path(f, base_dir)) if _looks_like_file(f) else str(f)
            for f in kwargs.get("families", [])
        ]
        if "output" in kwargs:
            kwargs["output"] = resolve_path(kwargs["output"], base_dir)
        tol = kwargs.pop("tolerances", None) or {}
        try:
            kwargs["tolerances"] = DEFAULT_TOLERANCES.with_overrides(**tol)
        except TypeError as exc:
            raise ConfigError(f"Bad tolerance overrides: {exc}") from exc
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = read_json(path)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data, base_dir=path.parent)

    def apply_overrides(self, seed=None, workers=None, profile=None, audit=None) -> "RunConfig":
        if seed is not None:
            self.seed = int(seed)
        if workers is not None:
            self.workers = int(workers)
        if profile is not None:
            self.profile = profile
        if audit:
            self.audit = True
        return self

    def validate(self) -> "RunConfig":
        """
        Raises:
            ConfigError: on unknown commands, missing files, bad worker counts
                or unknown profiles
        """
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}'. Use one of {COMMANDS}")
        for key in _REQUIRED[self.command]:
            if getattr(self, key) is None:
                raise ConfigError(f"Command '{self.command}' needs '{key}'")
        for key in _PATH_FIELDS:
            path = getattr(self, key)
            if path is not None and not Path(path).exists():
                raise ConfigError(f"'{key}' file does not exist: {path}")
        for path in self.inputs:
            if not Path(path).exists():
                raise ConfigError(f"input file does not exist: {path}")
        for fam in self.families:
            if _looks_like_file(fam) and not Path(fam).exists():
                raise ConfigError(f"family file does not exist: {fam}")
        if self.command == "report" and not self.inputs:
            raise ConfigError("Command 'report' needs at least one entry in 'inputs'")
        if self.workers < 1:
            raise ConfigError("'workers' must be at least 1")
        if self.profile is not None and self.profile not in CANDIDATE_PROFILES:
            raise ConfigError(f"Unknown profile '{self.profile}'. Known: {sorted(CANDIDATE_PROFILES)}")
        if not isinstance(self.options, dict):
            raise ConfigError("'options' must be an object")
        return self


def _looks_like_file(value) -> bool:
    text = str(value)
    return text.startswith(BUNDLED_PREFIX) or text.endswith(".json")
