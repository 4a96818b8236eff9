"""Clause extraction: tokenize requirement text and build the clause AST.

The grammar over the five keywords (given, when, then, and, or) is

    req := GIVEN clause (AND clause)*
           [WHEN clause ((AND | OR) clause)*]
           THEN clause (AND clause)*

Keywords must appear in Given < When < Then order. ``and``/``or`` always
split clauses at parse time; the matcher may re-merge adjacent clauses when
a single template spans them (an ``and`` can join clauses or noun phrases,
and only matching against the knowledge base can tell which). ``or`` is only
meaningful between When clauses, where it switches the requirement into
disjunctive mode (one alternative trigger per clause).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import ModcompleteError

KEYWORDS = frozenset({"given", "when", "then", "and", "or"})
SECTION_KEYWORDS = frozenset({"given", "when", "then"})
TERMINAL_PUNCT = frozenset({",", ".", ";"})


class TokenKind(Enum):
    KEYWORD = "keyword"
    WORD = "word"
    PUNCT = "punct"


class ClauseKind(Enum):
    GIVEN = "Given"
    WHEN = "When"
    THEN = "Then"


class WhenMode(Enum):
    CONJUNCTIVE = "Conjunctive"
    DISJUNCTIVE = "Disjunctive"


@dataclass(frozen=True)
class Token:
    """One token with original spelling, lowercased form, and stream index."""

    kind: TokenKind
    text: str
    lower: str
    index: int


@dataclass(frozen=True)
class RequirementDoc:
    id: str
    text: str
    feature: str | None = None
    scenario: str | None = None


@dataclass(frozen=True)
class Clause:
    """A run of words inside one section, introduced by ``lead`` keyword."""

    kind: ClauseKind
    words: tuple[Token, ...]
    lead: Token | None = None


@dataclass(frozen=True)
class RequirementAST:
    id: str
    given: tuple[Clause, ...]
    when: tuple[Clause, ...]
    then: tuple[Clause, ...]
    when_mode: WhenMode
    tokens: tuple[Token, ...]

    def clauses(self) -> tuple[Clause, ...]:
        return self.given + self.when + self.then


class ParseError(ModcompleteError):
    """Requirement text violates the clause grammar."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (token {position})")
        self.position = position


class MissingGiven(ParseError):
    pass


class MissingThen(ParseError):
    pass


class OutOfOrderKeyword(ParseError):
    """A keyword at a position the grammar does not allow."""


class MixedAndOr(ParseError):
    """Both ``and`` and ``or`` join clauses inside the When group."""


class DuplicateId(ModcompleteError):
    """Two requirements in one corpus ended up with the same id."""


def tokenize(text: str) -> list[Token]:
    """Split text on whitespace into keyword/word/punct tokens.

    Terminal punctuation (comma, period, semicolon) is peeled off the end of
    each chunk into its own token; original spelling is preserved on every
    token.
    """
    tokens: list[Token] = []
    for chunk in text.split():
        trailing: list[str] = []
        while chunk and chunk[-1] in TERMINAL_PUNCT:
            trailing.append(chunk[-1])
            chunk = chunk[:-1]
        if chunk:
            lower = chunk.lower()
            kind = TokenKind.KEYWORD if lower in KEYWORDS else TokenKind.WORD
            tokens.append(Token(kind, chunk, lower, len(tokens)))
        for punct in reversed(trailing):
            tokens.append(Token(TokenKind.PUNCT, punct, punct, len(tokens)))
    return tokens


_SECTION_ORDER = {"given": 0, "when": 1, "then": 2}
_SECTION_KIND = {"given": ClauseKind.GIVEN, "when": ClauseKind.WHEN, "then": ClauseKind.THEN}


def parse_requirement(doc: RequirementDoc) -> RequirementAST:
    """Parse one requirement into its Given/When/Then clause lists.

    Raises:
        MissingGiven, MissingThen: a mandatory section is absent.
        OutOfOrderKeyword: keyword order violates Given < When < Then, or a
            keyword sits where no clause can start or end (``or`` outside
            the When group, a connective before any section, an empty
            clause body).
        MixedAndOr: the When group mixes ``and`` and ``or`` separators.
    """
    tokens = tuple(tokenize(doc.text))
    if not any(t.kind is TokenKind.KEYWORD and t.lower == "given" for t in tokens):
        raise MissingGiven("requirement has no 'Given'", 0)

    sections: dict[str, list[Clause]] = {"given": [], "when": [], "then": []}
    when_separators: list[str] = []
    current_section: str | None = None
    current_words: list[Token] = []
    current_lead: Token | None = None

    def close_clause(next_kw: Token | None) -> None:
        nonlocal current_words, current_lead
        if current_section is None:
            return
        if not current_words:
            assert current_lead is not None
            where = next_kw.index if next_kw is not None else current_lead.index
            raise OutOfOrderKeyword(
                f"empty clause after {current_lead.text!r}", where
            )
        sections[current_section].append(
            Clause(_SECTION_KIND[current_section], tuple(current_words), current_lead)
        )
        current_words = []

    for tok in tokens:
        if tok.kind is TokenKind.PUNCT:
            continue
        if tok.kind is TokenKind.WORD:
            if current_section is None:
                raise OutOfOrderKeyword("requirement must start with 'Given'", tok.index)
            current_words.append(tok)
            continue
        # keyword
        if tok.lower in SECTION_KEYWORDS:
            order = _SECTION_ORDER[tok.lower]
            if current_section is None:
                if tok.lower != "given":
                    raise OutOfOrderKeyword(f"{tok.text!r} before 'Given'", tok.index)
            else:
                if order <= _SECTION_ORDER[current_section]:
                    raise OutOfOrderKeyword(
                        f"{tok.text!r} cannot follow the {current_section.capitalize()} section",
                        tok.index,
                    )
            close_clause(tok)
            current_section = tok.lower
            current_lead = tok
        else:  # and / or
            if current_section is None:
                raise OutOfOrderKeyword(f"{tok.text!r} before 'Given'", tok.index)
            if tok.lower == "or" and current_section != "when":
                raise OutOfOrderKeyword(
                    "'or' is only allowed between When clauses", tok.index
                )
            if current_section == "when":
                when_separators.append(tok.lower)
                if len(set(when_separators)) > 1:
                    raise MixedAndOr("When group mixes 'and' and 'or'", tok.index)
            close_clause(tok)
            current_lead = tok

    close_clause(None)

    if not sections["given"]:
        raise MissingGiven("requirement has no 'Given'", 0)
    if not sections["then"]:
        raise MissingThen("requirement has no 'Then'", tokens[-1].index if tokens else 0)

    mode = WhenMode.DISJUNCTIVE if "or" in when_separators else WhenMode.CONJUNCTIVE
    return RequirementAST(
        id=doc.id,
        given=tuple(sections["given"]),
        when=tuple(sections["when"]),
        then=tuple(sections["then"]),
        when_mode=mode,
        tokens=tokens,
    )


_FEATURE_RE = re.compile(r"^Feature:\s*(.*)$")
_SCENARIO_RE = re.compile(r"^Scenario:\s*(.*)$")
_ID_TAG_RE = re.compile(r"^@id:\s*(\S+)\s*$")


def parse_corpus(text: str) -> list[RequirementDoc]:
    """Parse a feature file into requirement documents.

    One document per ``Scenario:`` block (a headerless file with text is a
    single block). Ids are ``REQ-<n>`` in file order unless an ``@id:`` tag
    line inside the block overrides. Blank lines and ``#`` comments are
    ignored.

    Raises:
        DuplicateId: two blocks resolve to the same requirement id.
    """
    docs: list[RequirementDoc] = []
    feature: str | None = None
    scenario: str | None = None
    tagged_id: str | None = None
    body: list[str] = []
    counter = 0

    def flush() -> None:
        # A tag with no body yet ("@id:" above the Scenario line) carries
        # over to the next block.
        nonlocal scenario, tagged_id, body, counter
        if body:
            counter += 1
            rid = tagged_id if tagged_id is not None else f"REQ-{counter:03d}"
            docs.append(
                RequirementDoc(id=rid, text=" ".join(body), feature=feature, scenario=scenario)
            )
            tagged_id = None
        scenario = None
        body = []

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if m := _FEATURE_RE.match(line):
            flush()
            feature = m.group(1) or None
            continue
        if m := _SCENARIO_RE.match(line):
            flush()
            scenario = m.group(1) or None
            continue
        if m := _ID_TAG_RE.match(line):
            tagged_id = m.group(1)
            continue
        body.append(line)
    flush()

    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise DuplicateId(f"requirement id {doc.id!r} used twice")
        seen.add(doc.id)
    return docs
