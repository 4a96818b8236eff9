"""Command-line interface: complete, check and kb-lint subcommands.

Exit codes: 0 means no error-level findings, 2 means conflicts or validation
errors were found, 1 means an input file was missing or unreadable. Stdout
is for humans; machine-readable data goes to the output files, which are
written atomically (temp file plus rename). With ``--strict``, warnings
count as errors for the exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass

from .errors import ModcompleteError
from .gherkin import ParseError, RequirementDoc, parse_corpus, parse_requirement
from .generator import (
    CompletionReport,
    Finding,
    SEVERITY_ERROR,
    SEVERITY_WARNING,
    check_acceptability,
    complete_model,
)
from .kb import (
    KnowledgeBase,
    Literal,
    MetaReq,
    OptionalLiteral,
    SlotPattern,
    default_kb,
    parse_kb,
)
from .matcher import AmbiguousMatch, NoMatch, match_requirement
from .model import SystemModel, load_model, save_model
from .normalize import ARTICLES
from .trace import emit_requirement_diagram, emit_trace_json

KB_ENV_VAR = "MODCOMPLETE_KB"


@dataclass(frozen=True)
class RunConfig:
    model_path: str
    corpus_path: str
    kb_path: str | None = None
    out_model_path: str = "completed_model.json"
    report_path: str = "report.json"
    trace_path: str = "trace.json"
    diagram_dir: str | None = None
    strict: bool = False
    explain: bool = False


class InputError(ModcompleteError):
    pass


def _read_file(path: str, what: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise InputError(f"cannot read {what} {path!r}: {exc}") from None


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".modcomplete-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_inputs(config: RunConfig) -> tuple[SystemModel, list[RequirementDoc], KnowledgeBase]:
    try:
        model = load_model(_read_file(config.model_path, "model"))
        corpus = parse_corpus(_read_file(config.corpus_path, "requirements"))
        kb_path = config.kb_path or os.environ.get(KB_ENV_VAR)
        kb = parse_kb(_read_file(kb_path, "knowledge base")) if kb_path else default_kb()
    except InputError:
        raise
    except ModcompleteError as exc:
        raise InputError(str(exc)) from None
    return model, corpus, kb


def _exit_code(findings: list[Finding], strict: bool) -> int:
    severities = {f.severity for f in findings}
    if SEVERITY_ERROR in severities:
        return 2
    if strict and SEVERITY_WARNING in severities:
        return 2
    return 0


def _report_doc(report: CompletionReport, findings: list[Finding]) -> dict:
    return {
        "version": "1",
        "added": [
            {
                "owner": e.owner,
                "transition_id": e.transition_id,
                "requirement_ids": list(e.requirement_ids),
            }
            for e in report.added
        ],
        "duplicates": [
            {
                "owner": e.owner,
                "transition_id": e.transition_id,
                "requirement_ids": list(e.requirement_ids),
            }
            for e in report.duplicates
        ],
        "conflicts": [
            {
                "owner": c.owner,
                "source": c.source,
                "trigger": c.trigger,
                "requirement_ids": list(c.requirement_ids()),
                "variants": [
                    {
                        "target": v.target,
                        "effects": [
                            {"signal": e.signal, "target_block": e.target_block}
                            for e in v.effects
                        ],
                        "requirement_ids": list(v.requirement_ids),
                    }
                    for v in c.variants
                ],
            }
            for c in report.conflicts
        ],
        "unmatched": [
            {"requirement_id": u.requirement_id, "diagnostics": list(u.diagnostics)}
            for u in report.unmatched
        ],
        "findings": [
            {
                "kind": f.kind,
                "severity": f.severity,
                "message": f.message,
                "requirement_ids": list(f.requirement_ids),
            }
            for f in findings
        ],
    }


def _diagram_filename(requirement_id: str) -> str:
    safe = "".join(ch if (ch.isalnum() or ch in "-_.") else "_" for ch in requirement_id)
    return f"RD-{safe}.puml"


def cmd_complete(config: RunConfig) -> int:
    """Complete the model and write model, report, trace and diagram files."""
    try:
        model, corpus, kb = _load_inputs(config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = complete_model(model, corpus, kb)
    findings = check_acceptability(result.report, result.model)

    _atomic_write(config.out_model_path, save_model(result.model))
    _atomic_write(
        config.report_path,
        json.dumps(_report_doc(result.report, findings), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
    )
    _atomic_write(config.trace_path, emit_trace_json(result.trace))
    if config.diagram_dir is not None:
        for record in sorted(result.trace, key=lambda r: r.requirement_id):
            diagram = emit_requirement_diagram(record, result.model)
            if diagram is not None:
                _atomic_write(
                    os.path.join(config.diagram_dir, _diagram_filename(record.requirement_id)),
                    diagram,
                )

    report = result.report
    print(
        f"completed {config.model_path}: "
        f"{len(report.added)} added, {len(report.duplicates)} duplicate(s), "
        f"{len(report.conflicts)} conflict(s), {len(report.unmatched)} unmatched"
    )
    for finding in findings:
        ids = ", ".join(finding.requirement_ids)
        print(f"  [{finding.severity}] {finding.kind}: {finding.message} ({ids})")
    return _exit_code(findings, config.strict)


def cmd_check(config: RunConfig) -> int:
    """Dry run: print a per-requirement verdict, write nothing."""
    try:
        model, corpus, kb = _load_inputs(config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for doc in corpus:
        try:
            ast = parse_requirement(doc)
        except ParseError as exc:
            print(f"{doc.id}: parse error: {exc}")
            continue
        try:
            match = match_requirement(ast, kb, model)
        except NoMatch as exc:
            print(f"{doc.id}: NoMatch")
            if config.explain:
                for diagnostic in exc.diagnostics:
                    print(f"    {diagnostic.render()}")
            elif exc.diagnostics:
                print(f"    closest: {exc.diagnostics[0].render()}")
            continue
        except AmbiguousMatch as exc:
            print(f"{doc.id}: AmbiguousMatch ({exc.metareq_id})")
            if config.explain:
                for i, binding_set in enumerate(exc.binding_sets, start=1):
                    rendered = ", ".join(f"{b.role}={b.element}" for b in binding_set)
                    print(f"    set {i}: {rendered}")
            continue
        suffix = ""
        if match.alternatives_consumed:
            suffix = f", {match.alternatives_consumed} alternatives"
        print(f"{doc.id}: {match.metareq_id} ({len(match.bindings)} bindings{suffix})")
        if config.explain:
            for binding in match.bindings:
                print(f"    {binding.role} ({binding.metaclass.value}) = {binding.element}"
                      f"  <- {binding.phrase!r}")

    result = complete_model(model, corpus, kb)
    findings = check_acceptability(result.report, result.model)
    for finding in findings:
        ids = ", ".join(finding.requirement_ids)
        print(f"  [{finding.severity}] {finding.kind}: {finding.message} ({ids})")
    return _exit_code(findings, config.strict)


def _strip_article_optionals(items) -> tuple:
    return tuple(
        item
        for item in items
        if not (isinstance(item, OptionalLiteral) and set(item.words) <= ARTICLES)
    )


def _template_subsumes(ta, tb) -> bool:
    a_items = _strip_article_optionals(ta.items)
    b_items = _strip_article_optionals(tb.items)

    def rec(ai: int, bi: int) -> bool:
        if ai == len(a_items):
            return bi == len(b_items)
        a = a_items[ai]
        b = b_items[bi] if bi < len(b_items) else None
        if isinstance(a, OptionalLiteral):
            if rec(ai + 1, bi):
                return True
            if isinstance(b, Literal) and b.word in a.words and rec(ai + 1, bi + 1):
                return True
            if isinstance(b, OptionalLiteral) and set(b.words) <= set(a.words) and rec(ai + 1, bi + 1):
                return True
            return False
        if b is None:
            return False
        if isinstance(a, Literal):
            return isinstance(b, Literal) and a.word == b.word and rec(ai + 1, bi + 1)
        return (
            isinstance(b, SlotPattern) and a.metaclass is b.metaclass and rec(ai + 1, bi + 1)
        )

    return rec(0, 0)


def _metareq_subsumes(a: MetaReq, b: MetaReq) -> bool:
    """True when every requirement matching b's templates also matches a's
    (syntactic check; a shadows b because a has higher priority)."""
    for sa, sb in ((a.given, b.given), (a.when, b.when), (a.then, b.then)):
        if len(sa) != len(sb):
            return False
        if not all(_template_subsumes(ta, tb) for ta, tb in zip(sa, sb)):
            return False
    return True


def cmd_kb_lint(kb_path: str | None) -> int:
    """Parse and validate a knowledge base; report shadowed rules."""
    try:
        kb = parse_kb(_read_file(kb_path, "knowledge base")) if kb_path else default_kb()
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ModcompleteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    problems = 0
    if not kb.metareqs:
        print("warning: knowledge base defines no templates")
    for i, high in enumerate(kb.metareqs):
        for low in kb.metareqs[i + 1 :]:
            if _metareq_subsumes(high, low):
                print(f"error: {low.id} is shadowed by higher-priority {high.id}")
                problems += 1
    if problems:
        return 2
    print(f"ok: {len(kb.metareqs)} rule(s), {len(kb.fragments)} fragment(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modcomplete",
        description="Complete a partial state-machine model from Given-When-Then requirements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", required=True, help="model document (JSON)")
        p.add_argument("--reqs", required=True, help="requirements feature file")
        p.add_argument("--kb", default=None, help=f"knowledge base file (default: ${KB_ENV_VAR} or built-in)")
        p.add_argument("--strict", action="store_true", help="treat warnings as errors")
        p.add_argument("--explain", action="store_true", help="verbose per-slot explanations")

    complete = sub.add_parser("complete", help="complete the model and write outputs")
    add_io_args(complete)
    complete.add_argument("--out", default="completed_model.json", help="completed model path")
    complete.add_argument("--report", default="report.json", help="report path")
    complete.add_argument("--trace", default="trace.json", help="trace path")
    complete.add_argument("--diagrams", default=None, help="directory for requirement diagrams")

    check = sub.add_parser("check", help="match requirements without writing outputs")
    add_io_args(check)

    lint = sub.add_parser("kb-lint", help="validate a knowledge base")
    lint.add_argument("--kb", default=None, help=f"knowledge base file (default: ${KB_ENV_VAR} or built-in)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "kb-lint":
        return cmd_kb_lint(args.kb or os.environ.get(KB_ENV_VAR))
    config = RunConfig(
        model_path=args.model,
        corpus_path=args.reqs,
        kb_path=args.kb,
        out_model_path=getattr(args, "out", "completed_model.json"),
        report_path=getattr(args, "report", "report.json"),
        trace_path=getattr(args, "trace", "trace.json"),
        diagram_dir=getattr(args, "diagrams", None),
        strict=args.strict,
        explain=args.explain,
    )
    if args.command == "complete":
        return cmd_complete(config)
    return cmd_check(config)


if __name__ == "__main__":
    sys.exit(main())
