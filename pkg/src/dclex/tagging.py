"""Discourse-connective annotations and token fusion.

A tagged connective occurrence is collapsed into a single token
``surface_with_underscores-RelationLabel`` (e.g. ``even_though-Comparison.Concession``)
so that the word aligner sees one relation-bearing unit. Fusion is
reversible: split at the last '-', map underscores back to spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Corpus, SentencePair, build_match_table, scan_matches, write_token_file
from .errors import PipelineError
from .fileio import atomic_write_text, read_text_strict
from .inventory import Connective, _iter_data_lines
from .parallel import process_chunks

SURFACE_JOINER = "_"
SENSE_SEPARATOR = "-"


@dataclass(frozen=True)
class DCAnnotation:
    """A connective occurrence on the source side; `start`..`end` inclusive."""

    sentence_id: int
    start: int
    end: int
    surface: tuple[str, ...]
    relation: str | None
    discourse_usage: bool

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise PipelineError(f"bad annotation span [{self.start}, {self.end}]")
        if len(self.surface) != self.end - self.start + 1:
            raise PipelineError(
                f"annotation surface {self.surface!r} does not cover span "
                f"[{self.start}, {self.end}]"
            )
        if self.discourse_usage != (self.relation is not None):
            raise PipelineError(
                "annotation must carry a relation exactly when discourse_usage is true"
            )
        if self.relation is not None:
            if any(ch.isspace() for ch in self.relation) or SENSE_SEPARATOR in self.relation:
                raise PipelineError(
                    f"relation label {self.relation!r} must not contain whitespace or '-'"
                )


@dataclass(frozen=True)
class FusedSentence:
    sentence_id: int
    tokens: tuple[str, ...]


def fuse_token(span_tokens: Sequence[str], relation: str) -> str:
    return SURFACE_JOINER.join(span_tokens) + SENSE_SEPARATOR + relation


def split_fused_token(token: str) -> tuple[tuple[str, ...], str] | None:
    """Inverse of `fuse_token`; None when `token` carries no sense tag."""
    head, sep, relation = token.rpartition(SENSE_SEPARATOR)
    if not sep or not head or not relation:
        return None
    return tuple(head.split(SURFACE_JOINER)), relation


def _check_span(pair: SentencePair, ann: DCAnnotation) -> None:
    if ann.sentence_id != pair.id:
        raise PipelineError(
            f"annotation for sentence {ann.sentence_id} applied to pair {pair.id}"
        )
    if ann.end >= len(pair.src_tokens):
        raise PipelineError(
            f"sentence {pair.id}: span [{ann.start}, {ann.end}] out of bounds "
            f"(length {len(pair.src_tokens)})"
        )
    actual = tuple(t.lower() for t in pair.src_tokens[ann.start : ann.end + 1])
    expected = tuple(t.lower() for t in ann.surface)
    if actual != expected:
        raise PipelineError(
            f"sentence {pair.id}: tokens {actual!r} at [{ann.start}, {ann.end}] "
            f"do not match annotated surface {expected!r}"
        )


def fuse_tokens(pair: SentencePair, annotations: Sequence[DCAnnotation]) -> FusedSentence:
    """Replace each discourse-usage span with a single fused token.

    Non-discourse annotations and untagged tokens pass through unchanged.
    New token count = original - sum(span_len - 1) over fused spans.
    """
    anns = sorted(annotations, key=lambda a: a.start)
    prev_end = -1
    for ann in anns:
        _check_span(pair, ann)
        if ann.start <= prev_end:
            raise PipelineError(f"sentence {pair.id}: overlapping annotation at {ann.start}")
        prev_end = ann.end
    tokens: list[str] = []
    pos = 0
    for ann in anns:
        tokens.extend(pair.src_tokens[pos : ann.start])
        if ann.discourse_usage:
            assert ann.relation is not None
            tokens.append(fuse_token(pair.src_tokens[ann.start : ann.end + 1], ann.relation))
        else:
            tokens.extend(pair.src_tokens[ann.start : ann.end + 1])
        pos = ann.end + 1
    tokens.extend(pair.src_tokens[pos:])
    return FusedSentence(pair.id, tuple(tokens))


def fuse_corpus(corpus: Corpus, annotations: Sequence[DCAnnotation]) -> list[FusedSentence]:
    by_sentence: dict[int, list[DCAnnotation]] = {}
    for ann in annotations:
        by_sentence.setdefault(ann.sentence_id, []).append(ann)
    known = {pair.id for pair in corpus.pairs}
    for sid in by_sentence:
        if sid not in known:
            raise PipelineError(f"annotation references unknown sentence id {sid}")
    return [fuse_tokens(pair, by_sentence.get(pair.id, ())) for pair in corpus.pairs]


# ---------------------------------------------------------------------------
# Stand-off annotation files
# ---------------------------------------------------------------------------
#
# Tab-separated, one record per line:
#   sentence_id <TAB> start <TAB> end <TAB> surface <TAB> relation <TAB> usage
# `usage` is 1/0; `relation` is empty exactly when usage is 0. The surface is
# space-joined and refers to the tokenized corpus the annotator consumed.


def load_annotations(path: str, corpus: Corpus) -> list[DCAnnotation]:
    """Load and validate stand-off annotations against `corpus`."""
    by_id = {pair.id: pair for pair in corpus.pairs}
    annotations: list[DCAnnotation] = []
    for lineno, line in enumerate(read_text_strict(path).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise PipelineError(f"{path}: expected 6 fields at record {lineno}")
        try:
            sid, start, end = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise PipelineError(f"{path}: non-numeric field at record {lineno}") from exc
        surface = tuple(parts[3].split())
        relation = parts[4] or None
        if parts[5] not in ("0", "1"):
            raise PipelineError(f"{path}: usage flag must be 0 or 1 at record {lineno}")
        usage = parts[5] == "1"
        if sid not in by_id:
            raise PipelineError(f"{path}: unknown sentence id {sid} at record {lineno}")
        try:
            ann = DCAnnotation(sid, start, end, surface, relation, usage)
            _check_span(by_id[sid], ann)
        except PipelineError as exc:
            raise PipelineError(f"{path}: record {lineno}: {exc}") from exc
        annotations.append(ann)
    annotations.sort(key=lambda a: (a.sentence_id, a.start))
    prev: DCAnnotation | None = None
    for ann in annotations:
        if prev is not None and ann.sentence_id == prev.sentence_id and ann.start <= prev.end:
            raise PipelineError(
                f"{path}: overlapping spans in sentence {ann.sentence_id} "
                f"([{prev.start}, {prev.end}] and [{ann.start}, {ann.end}])"
            )
        prev = ann
    return annotations


def write_annotations(annotations: Sequence[DCAnnotation], path: str) -> None:
    lines = []
    for ann in annotations:
        lines.append(
            f"{ann.sentence_id}\t{ann.start}\t{ann.end}\t{' '.join(ann.surface)}\t"
            f"{ann.relation or ''}\t{int(ann.discourse_usage)}\n"
        )
    atomic_write_text(path, "".join(lines))


def load_default_senses(path: str) -> dict[str, str]:
    """Load `surface<TAB>relation` defaults for the heuristic tagger."""
    senses: dict[str, str] = {}
    for lineno, payload in _iter_data_lines(read_text_strict(path)):
        parts = payload.split("\t")
        if len(parts) != 2:
            raise PipelineError(f"{path}: expected `surface<TAB>relation` at line {lineno}")
        surface = " ".join(parts[0].lower().split())
        relation = parts[1].strip()
        if not surface or not relation:
            raise PipelineError(f"{path}: empty field at line {lineno}")
        if surface in senses and senses[surface] != relation:
            raise PipelineError(f"{path}: conflicting senses for {surface!r} at line {lineno}")
        senses[surface] = relation
    if not senses:
        raise PipelineError(f"{path}: empty default-sense table")
    return senses


def heuristic_tag(
    corpus: Corpus,
    inventory: Sequence[Connective],
    default_sense: Mapping[str, str],
    threads: int = 1,
) -> list[DCAnnotation]:
    """Tag source-side connectives by longest-match scan with default senses.

    A crude stand-in for a real discourse tagger: every match is treated as
    discourse usage and labeled with the surface's default relation.
    """
    table = build_match_table([c.surface for c in inventory])

    def tag_chunk(pairs: Sequence[SentencePair]) -> list[DCAnnotation]:
        out: list[DCAnnotation] = []
        for pair in pairs:
            lowered = tuple(t.lower() for t in pair.src_tokens)
            for start, form in scan_matches(lowered, table):
                text = " ".join(form)
                sense = default_sense.get(text)
                if sense is None:
                    raise PipelineError(f"no default sense for connective {text!r}")
                out.append(
                    DCAnnotation(pair.id, start, start + len(form) - 1, form, sense, True)
                )
        return out

    annotations: list[DCAnnotation] = []
    for part in process_chunks(tag_chunk, corpus.pairs, threads):
        annotations.extend(part)
    return annotations


def write_fused_corpus(sentences: Sequence[FusedSentence], path: str) -> None:
    write_token_file((s.tokens for s in sentences), path)
