"""
Characterize and Verify workflows: relation spec -> candidate family ->
verified family plus certificate archive.
"""

import logging

from quadcert.candidates import (
    CandidateFamily,
    CandidateSpec,
    SubdomainRecipe,
    generate_candidates,
    read_family,
    write_family,
)
from quadcert.forms import QuadraticForm
from quadcert.relations import load_relation, relation_digest
from quadcert.verification import (
    DegreePolicy,
    audit_family,
    certificate_archive,
    verification_pieces,
    verified_family,
    verify_family,
    write_verified_family,
)
from quadcert.workflows.base import BASE_EXIT_CODES, ExitCode, Workflow, exit_code_table


class CharacterizeWorkflow(Workflow):
    """
    Sampled candidate QPs for every subdomain recipe of the relation's
    ``generation`` section. Options override the section: ``subdomains``,
    ``n_global``, ``global_interval``, ``mode`` and ``readfile``.
    """

    name = "characterize"
    outline = ("load_inputs", "generate", "write_outputs")

    def load_inputs(self):
        rel = load_relation(self.config.relation)
        gen = dict(rel.sections.get("generation", {}))
        passthrough = ("subdomains", "n_global", "global_interval")
        gen.update({k: v for k, v in self.options.items() if k in passthrough})
        profile = self.config.profile or gen.get("profile")
        overrides = gen.get("overrides", {})
        spec = CandidateSpec.from_profile(profile, **overrides) if profile else CandidateSpec(**overrides)
        self.ctx.relation = rel
        self.ctx.profile = profile
        self.ctx.spec = spec
        self.ctx.recipes = [SubdomainRecipe.from_record(r) for r in gen.get("subdomains", [])]
        self.ctx.n_global = int(gen.get("n_global", 500))
        self.ctx.global_interval = tuple(gen["global_interval"]) if "global_interval" in gen else None
        self.report(f"Relation '{rel.name}' ({rel.kind}, symmetry {rel.symmetry}), profile {profile}, "
                    f"{len(self.ctx.recipes)} subdomains")

    def generate(self):
        kwargs = {}
        if "readfile" in self.options:
            kwargs["readfile"] = self.options["readfile"]
        forms = self.call(
            generate_candidates,
            self.ctx.relation,
            self.ctx.recipes,
            self.ctx.spec,
            seed=self.config.seed,
            n_global=self.ctx.n_global,
            global_interval=self.ctx.global_interval,
            mode=self.options.get("mode", "qp"),
            workers=self.config.workers,
            tol=self.config.tolerances,
            **kwargs,
        )
        for q in forms:
            slack = q.meta.get("slack", {})
            if slack.get("global_warning"):
                self.report(f"Candidate '{q.tag}': global slack above 10*gamma_bar", logging.WARNING)
            if slack.get("degenerate"):
                self.report(f"Candidate '{q.tag}' is degenerate", logging.WARNING)
        self.ctx.forms = forms
        self.report(f"{len(forms)} candidates")

    def write_outputs(self):
        rel = self.ctx.relation
        family = CandidateFamily(
            forms=self.ctx.forms,
            relation=rel.name,
            relation_digest=relation_digest(rel),
            seed=self.config.seed,
            profile=self.ctx.profile,
            header={
                "spec": self.ctx.spec.to_record(),
                "subdomains": [r.to_record() for r in self.ctx.recipes],
                "n_global": self.ctx.n_global,
            },
        )
        self.out("candidates", write_family(self.artifact("candidates.json"), family))


class VerifyWorkflow(Workflow):
    """
    SOS verification of a candidate family over the relation's pieces
    (exact pieces, or relaxed bands from the ``verification`` section).
    Failing candidates stay in the file with ``verified: false`` and the run
    exits 2 once every artifact is written. With ``audit`` set the written
    family is audited and any failure exits 2.
    """

    name = "verify"
    outline = ("load_inputs", "build_pieces", "verify", "write_outputs", "audit", "finalize")
    exit_codes = exit_code_table(
        *BASE_EXIT_CODES,
        ExitCode(2, "ERROR_AUDIT_FAILED", "the verified family failed the audit"),
    )

    def load_inputs(self):
        rel = load_relation(self.config.relation)
        family = read_family(self.config.candidates)
        if family.relation_digest and family.relation_digest != relation_digest(rel):
            self.report("Candidate family was generated from a different relation spec", logging.WARNING)
        section = dict(rel.sections.get("verification", {}))
        section.update(self.options.get("verification", {}))
        self.ctx.relation = rel
        self.ctx.family = family
        self.ctx.section = section
        self.ctx.policy = DegreePolicy.from_record(section.get("policy"))
        self.ctx.analytic = [
            QuadraticForm.from_record(
                rec if isinstance(rec, dict) else {"coeffs": rec, "tag": f"analytic{k}"}
            ).replace(provenance="analytic")
            for k, rec in enumerate(section.get("analytic", []))
        ]
        self.ctx.candidates = [q for q in family.forms if q.provenance == "candidate"]
        self.report(f"{len(self.ctx.candidates)} candidates, {len(self.ctx.analytic)} analytic forms, "
                    f"degree policy {self.ctx.policy.to_record()}")

    def build_pieces(self):
        pieces, approxes = verification_pieces(self.ctx.relation, self.ctx.section)
        max_eps = self.ctx.section.get("max_eps")
        for ap in approxes:
            lo, hi = ap.interval
            self.report(f"Approximation {ap.method} on [{lo}, {hi}]: eps = {ap.eps:.3e}")
            if max_eps is not None and ap.eps > float(max_eps):
                self.report(f"Band on {list(ap.interval)} is wider than max_eps = {max_eps}", logging.WARNING)
        self.ctx.pieces = pieces
        self.ctx.approxes = approxes
        self.report(f"{len(pieces)} verification pieces")

    def verify(self):
        verdicts = self.call(
            verify_family,
            self.ctx.candidates,
            self.ctx.pieces,
            self.ctx.policy,
            self.config.tolerances,
            workers=self.config.workers,
            analytic=self.ctx.analytic,
        )
        dropped = [v.form.tag for v in verdicts if not v.verified]
        if dropped:
            self.report(f"Dropped candidates: {dropped}", logging.WARNING)
        self.flags["dropped"] = dropped
        self.ctx.verdicts = verdicts
        self.report(f"{sum(v.verified for v in verdicts)} verified forms")

    def write_outputs(self):
        rel = self.ctx.relation
        domain = self.ctx.section.get("domain", list(rel.domain))
        header = {
            "domain": [float(domain[0]), float(domain[1])],
            "policy": self.ctx.policy.to_record(),
            "approximations": [ap.to_record() for ap in self.ctx.approxes],
        }
        family = verified_family(self.ctx.verdicts, rel, self.ctx.pieces, seed=self.config.seed,
                                 profile=self.ctx.family.profile, header=header)
        self.out("verified", write_verified_family(self.artifact("verified.json"), family))
        archive = certificate_archive(self.ctx.verdicts, rel, self.ctx.pieces)
        self.write_record("archive", "certificates.json", archive)

    def audit(self):
        self.ctx.audit = None
        if not self.config.audit:
            return
        report = self.call(audit_family, self.outputs["verified"], self.ctx.relation, self.outputs["archive"])
        self.write_record("audit", "audit.json", dict(report.to_record(), kind="audit_report"))
        self.ctx.audit = report

    def finalize(self):
        if self.ctx.audit is not None and not self.ctx.audit.passed:
            return self.exit_codes.ERROR_AUDIT_FAILED
        if self.flags["dropped"]:
            return self.exit_codes.ERROR_VERIFICATION_FAILED
