"""
Batch workflows behind the command line, one per command.
"""

from .analyze import ReachWorkflow, SafetyWorkflow, TightenWorkflow
from .base import ExitCode, Workflow
from .characterize import CharacterizeWorkflow, VerifyWorkflow
from .report import ReportWorkflow

WORKFLOWS = {
    "characterize": CharacterizeWorkflow,
    "verify": VerifyWorkflow,
    "reach": ReachWorkflow,
    "safety": SafetyWorkflow,
    "tighten": TightenWorkflow,
    "report": ReportWorkflow,
}

__all__ = [
    'ReachWorkflow',
    'SafetyWorkflow',
    'TightenWorkflow',
    'ExitCode',
    'Workflow',
    'CharacterizeWorkflow',
    'VerifyWorkflow',
    'ReportWorkflow',
    'WORKFLOWS',
]
