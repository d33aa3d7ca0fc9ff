"""
Report workflow: summary tables over earlier artifacts and the optional
audit of a verified family.
"""

import logging
from pathlib import Path

from quadcert.exceptions import ConfigError
from quadcert.relations import load_relation
from quadcert.utils.postprocessing import render_report
from quadcert.utils.serialization import read_json
from quadcert.verification import audit_family
from quadcert.workflows.base import BASE_EXIT_CODES, ExitCode, Workflow, exit_code_table


class ReportWorkflow(Workflow):
    """
    Renders ``<name>_report.txt`` and ``<name>_report.json`` from ``inputs``.
    With ``audit`` set, the verified family among the inputs (and the
    certificate archive, if given) is audited against ``relation``.
    """

    name = "report"
    outline = ("render", "audit", "finalize")
    exit_codes = exit_code_table(
        *BASE_EXIT_CODES,
        ExitCode(2, "ERROR_AUDIT_FAILED", "the audited family failed grid soundness or certificate re-check"),
    )

    def render(self):
        record, text = self.call(render_report, self.config.inputs,
                                 reference=self.options.get("reference", "COMB-PP"))
        self.ctx.record = record
        self.ctx.text = text
        for line in text.splitlines():
            self.report(line)

    def _input_of_kind(self, kind: str):
        for path in self.config.inputs:
            if read_json(path).get("kind") == kind:
                return Path(path)
        return None

    def audit(self):
        self.ctx.audit = None
        if not self.config.audit:
            return
        if self.config.relation is None:
            raise ConfigError("'report --audit' needs the 'relation' spec")
        family = self._input_of_kind("verified_family")
        if family is None:
            raise ConfigError("'report --audit' needs a verified-family file among the inputs")
        archive = self._input_of_kind("certificate_archive")
        if archive is None:
            self.report("No certificate archive given: auditing grid soundness only", logging.WARNING)
        rel = load_relation(self.config.relation)
        report = self.call(audit_family, family, rel, archive)
        self.ctx.audit = report
        self.ctx.record["audit"] = report.to_record()
        self.report(f"Audit of {family.name}: {'passed' if report.passed else 'FAILED'}")

    def finalize(self):
        self.write_record("report", "report.json", self.ctx.record)
        path = self.artifact("report.txt")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.ctx.text, encoding="utf-8")
        self.out("text", path)
        if self.ctx.audit is not None and not self.ctx.audit.passed:
            return self.exit_codes.ERROR_AUDIT_FAILED
