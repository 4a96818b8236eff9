"""Instantiate matched fragments into transitions and merge them.

``complete_model`` is the end-to-end pipeline: parse each requirement, match
it against the knowledge base, instantiate the winning fragment, and merge
the resulting transitions into the model. It never aborts on a single
failing requirement; failures land in the report. Conflicting transitions
(same source and trigger, different target or effects) are all withheld from
the model and reported, which keeps the final model independent of corpus
order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ModcompleteError
from .gherkin import ParseError, RequirementDoc, parse_requirement
from .kb import KnowledgeBase, MetaFragment
from .matcher import (
    AmbiguousMatch,
    BindingSet,
    MatchResult,
    NoMatch,
    match_requirement,
)
from .model import (
    MergeKind,
    SendEffect,
    SystemModel,
    Transition,
    add_transition,
    make_transition,
)
from .trace import TraceRecord, build_trace


class StateNotInOwnerMachine(ModcompleteError):
    """A bound state is absent from the owner block's machine."""


@dataclass(frozen=True)
class ReceivabilityWarning:
    """An effect targets a block whose declared signals lack the one sent."""

    requirement_id: str
    signal: str
    target_block: str


@dataclass(frozen=True)
class FragmentInstance:
    """Concrete transitions produced from one matched requirement."""

    pairs: tuple[tuple[str, Transition], ...]  # (owner, transition)
    warnings: tuple[ReceivabilityWarning, ...] = ()

    @property
    def owner(self) -> str:
        return self.pairs[0][0]

    @property
    def transitions(self) -> tuple[Transition, ...]:
        return tuple(t for _, t in self.pairs)


def instantiate_fragment(
    fragment: MetaFragment,
    binding_sets: tuple[BindingSet, ...],
    model: SystemModel,
    requirement_id: str,
) -> FragmentInstance:
    """Fill a fragment from bindings; one transition per binding set.

    Raises:
        StateNotInOwnerMachine: a bound source or target state is not defined
            by the owner block's machine (or the owner has none). Effects
            whose target block does not list the sent signal are downgraded
            to :class:`ReceivabilityWarning`.
    """
    pairs: list[tuple[str, Transition]] = []
    warnings: list[ReceivabilityWarning] = []
    seen_ids: set[str] = set()
    for bindings in binding_sets:
        elements = {b.role: b.element for b in bindings}
        owner = elements[fragment.owner_role]
        block = model.block(owner)
        assert block is not None, "binding soundness guarantees the owner block"
        machine = block.state_machine
        if machine is None:
            raise StateNotInOwnerMachine(f"block {owner!r} has no state machine")
        state_names = set(machine.state_names())
        source = elements[fragment.source_role]
        target = elements[fragment.target_role]
        for state in (source, target):
            if state not in state_names:
                raise StateNotInOwnerMachine(
                    f"state {state!r} is not in the machine of {owner!r}"
                )
        trigger = elements[fragment.trigger_role] if fragment.trigger_role else None
        effects = tuple(
            SendEffect(signal=elements[sig_role], target_block=elements[tgt_role])
            for sig_role, tgt_role in fragment.effect_specs
        )
        for effect in effects:
            target_block = model.block(effect.target_block)
            assert target_block is not None
            declared = target_block.receivable_signals
            if declared is not None and effect.signal not in declared:
                warnings.append(
                    ReceivabilityWarning(requirement_id, effect.signal, effect.target_block)
                )
        transition = make_transition(
            owner, source, target, trigger, effects, provenance=(requirement_id,)
        )
        if transition.id not in seen_ids:
            seen_ids.add(transition.id)
            pairs.append((owner, transition))
    return FragmentInstance(tuple(pairs), tuple(warnings))


# ---------------------------------------------------------------------------
# Completion report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MergeEntry:
    owner: str
    transition_id: str
    requirement_ids: tuple[str, ...]


@dataclass(frozen=True)
class ConflictVariant:
    target: str
    effects: tuple[SendEffect, ...]
    requirement_ids: tuple[str, ...]


@dataclass(frozen=True)
class ConflictRecord:
    """Transitions that share (owner, source, trigger) but disagree."""

    owner: str
    source: str
    trigger: str | None
    variants: tuple[ConflictVariant, ...]

    def requirement_ids(self) -> tuple[str, ...]:
        return tuple(sorted({rid for v in self.variants for rid in v.requirement_ids}))


@dataclass(frozen=True)
class UnmatchedEntry:
    requirement_id: str
    diagnostics: tuple[str, ...]


@dataclass(frozen=True)
class CompletionReport:
    """Outcome of a completion run; every requirement id lands in exactly
    one of added / duplicates / conflicts / unmatched."""

    added: tuple[MergeEntry, ...] = ()
    duplicates: tuple[MergeEntry, ...] = ()
    conflicts: tuple[ConflictRecord, ...] = ()
    unmatched: tuple[UnmatchedEntry, ...] = ()
    receivability_warnings: tuple[ReceivabilityWarning, ...] = ()
    multi_effect_requirements: tuple[str, ...] = ()


@dataclass(frozen=True)
class CompletionResult:
    model: SystemModel
    report: CompletionReport
    trace: tuple[TraceRecord, ...]


@dataclass
class _Attempt:
    doc: RequirementDoc
    match: MatchResult
    instance: FragmentInstance


def complete_model(
    model: SystemModel, corpus: list[RequirementDoc], kb: KnowledgeBase
) -> CompletionResult:
    """Run the whole pipeline over a corpus, in corpus order.

    The output model is always valid; requirement-level failures are
    recorded (never raised). Candidate transitions that disagree on
    (owner, source, trigger) are withheld in full and reported as conflicts,
    so permuting the corpus cannot change the final model.
    """
    attempts: list[_Attempt] = []
    unmatched: list[UnmatchedEntry] = []
    warnings: list[ReceivabilityWarning] = []
    multi_effect: list[str] = []

    for doc in corpus:
        try:
            ast = parse_requirement(doc)
            match = match_requirement(ast, kb, model)
            metareq = kb.metareq_by_id(match.metareq_id)
            fragment = kb.fragment_by_id(metareq.fragment)
            instance = instantiate_fragment(fragment, match.binding_sets, model, doc.id)
        except ParseError as exc:
            unmatched.append(UnmatchedEntry(doc.id, (f"parse error: {exc}",)))
            continue
        except NoMatch as exc:
            unmatched.append(
                UnmatchedEntry(doc.id, tuple(d.render() for d in exc.diagnostics) or ("knowledge base is empty",))
            )
            continue
        except AmbiguousMatch as exc:
            unmatched.append(UnmatchedEntry(doc.id, (str(exc),)))
            continue
        except StateNotInOwnerMachine as exc:
            unmatched.append(UnmatchedEntry(doc.id, (str(exc),)))
            continue
        attempts.append(_Attempt(doc, match, instance))
        warnings.extend(instance.warnings)
        if len(fragment.effect_specs) > 1:
            multi_effect.append(doc.id)

    conflicts, withheld = _detect_conflicts(model, attempts)

    added: list[MergeEntry] = []
    duplicates: list[MergeEntry] = []
    trace: list[TraceRecord] = []
    current = model
    for attempt in attempts:
        if attempt.doc.id in withheld:
            continue
        added_ids: list[str] = []
        duplicate_ids: list[str] = []
        for owner, transition in attempt.instance.pairs:
            outcome = add_transition(current, owner, transition)
            assert outcome.kind is not MergeKind.CONFLICT, "conflicts are pre-screened"
            current = outcome.model
            if outcome.kind is MergeKind.ADDED:
                added_ids.append(outcome.transition_id)
                added.append(MergeEntry(owner, outcome.transition_id, (attempt.doc.id,)))
            else:
                duplicate_ids.append(outcome.transition_id)
        kind = MergeKind.ADDED if added_ids else MergeKind.DUPLICATE
        if kind is MergeKind.DUPLICATE:
            for owner, transition in attempt.instance.pairs:
                duplicates.append(MergeEntry(owner, transition.id, (attempt.doc.id,)))
        trace.append(
            build_trace(
                attempt.match,
                kind,
                tuple(added_ids + duplicate_ids),
                text=attempt.doc.text,
            )
        )

    report = CompletionReport(
        added=tuple(added),
        duplicates=tuple(duplicates),
        conflicts=tuple(conflicts),
        unmatched=tuple(unmatched),
        receivability_warnings=tuple(warnings),
        multi_effect_requirements=tuple(multi_effect),
    )
    return CompletionResult(model=current, report=report, trace=tuple(trace))


def _detect_conflicts(
    model: SystemModel, attempts: list[_Attempt]
) -> tuple[list[ConflictRecord], set[str]]:
    """Group candidates by (owner, source, trigger); >1 right-hand side is a
    conflict. Returns the records plus the ids of withheld requirements (a
    requirement with any conflicted candidate is withheld atomically)."""
    Key = tuple[str, str, str | None]
    Rhs = tuple[str, tuple[SendEffect, ...]]

    existing: dict[Key, dict[Rhs, set[str]]] = {}
    for block in model.blocks:
        if block.state_machine is None:
            continue
        for t in block.state_machine.transitions:
            key = (block.name, t.source, t.trigger)
            existing.setdefault(key, {}).setdefault((t.target, t.effects), set()).update(
                t.provenance
            )

    candidates: dict[Key, dict[Rhs, set[str]]] = {}
    key_order: list[Key] = []
    per_requirement: dict[str, set[Key]] = {}
    for attempt in attempts:
        for owner, t in attempt.instance.pairs:
            key = (owner, t.source, t.trigger)
            if key not in candidates:
                candidates[key] = {}
                key_order.append(key)
            candidates[key].setdefault((t.target, t.effects), set()).add(attempt.doc.id)
            per_requirement.setdefault(attempt.doc.id, set()).add(key)

    conflicts: list[ConflictRecord] = []
    conflicted_keys: set[Key] = set()
    for key in key_order:
        sides: dict[Rhs, set[str]] = {}
        for rhs, ids in candidates[key].items():
            sides.setdefault(rhs, set()).update(ids)
        for rhs, ids in existing.get(key, {}).items():
            sides.setdefault(rhs, set()).update(ids)
        if len(sides) < 2:
            continue
        conflicted_keys.add(key)
        owner, source, trigger = key
        variants = tuple(
            ConflictVariant(target=rhs[0], effects=rhs[1], requirement_ids=tuple(sorted(ids)))
            for rhs, ids in sorted(
                sides.items(), key=lambda kv: (kv[0][0], tuple((e.signal, e.target_block) for e in kv[0][1]))
            )
        )
        conflicts.append(ConflictRecord(owner, source, trigger, variants))

    withheld = {
        rid for rid, keys in per_requirement.items() if keys & conflicted_keys
    }
    return conflicts, withheld


# ---------------------------------------------------------------------------
# Acceptability
# ---------------------------------------------------------------------------

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"
SEVERITY_INFO = "info"


@dataclass(frozen=True)
class Finding:
    kind: str
    severity: str
    message: str
    requirement_ids: tuple[str, ...] = ()


def check_acceptability(report: CompletionReport, model: SystemModel) -> list[Finding]:
    """Derive acceptability findings from a completion report.

    Conflicts are errors; redundancy and non-receivable signals are
    warnings; non-singular and unverifiable requirements are informational.
    """
    findings: list[Finding] = []
    for conflict in report.conflicts:
        trigger = conflict.trigger or "(no trigger)"
        findings.append(
            Finding(
                kind="Conflict",
                severity=SEVERITY_ERROR,
                message=(
                    f"transitions from {conflict.source!r} on {trigger} in {conflict.owner!r} "
                    f"disagree ({len(conflict.variants)} variants)"
                ),
                requirement_ids=conflict.requirement_ids(),
            )
        )
    for entry in report.duplicates:
        findings.append(
            Finding(
                kind="Redundancy",
                severity=SEVERITY_WARNING,
                message=(
                    f"requirement repeats transition {entry.transition_id} of {entry.owner!r}"
                ),
                requirement_ids=entry.requirement_ids,
            )
        )
    for warning in report.receivability_warnings:
        findings.append(
            Finding(
                kind="SignalNotReceivable",
                severity=SEVERITY_WARNING,
                message=(
                    f"block {warning.target_block!r} does not list signal {warning.signal!r} "
                    "as receivable"
                ),
                requirement_ids=(warning.requirement_id,),
            )
        )
    for rid in report.multi_effect_requirements:
        findings.append(
            Finding(
                kind="NonSingular",
                severity=SEVERITY_INFO,
                message="requirement produces more than one send effect",
                requirement_ids=(rid,),
            )
        )
    for entry in report.unmatched:
        findings.append(
            Finding(
                kind="Unverifiable",
                severity=SEVERITY_INFO,
                message="requirement could not be matched to the model",
                requirement_ids=(entry.requirement_id,),
            )
        )
    return findings
