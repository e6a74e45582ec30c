"""Consistent phrase-pair extraction and connective-pair filtering.

A phrase pair is any box (contiguous source span, contiguous target span)
that contains at least one alignment link and no link crossing its boundary
on either side; boxes may extend over unaligned boundary words. From the
phrase table we keep the rows whose source side is exactly one fused
connective token and whose target side is a known target connective.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .alignment import Alignment
from .errors import PipelineError
from .fileio import atomic_write_text, read_text_strict
from .inventory import Connective
from .parallel import process_chunks
from .tagging import split_fused_token

Phrase = tuple[str, ...]


@dataclass(frozen=True)
class PhraseTableEntry:
    src_phrase: Phrase
    tgt_phrase: Phrase
    count: int


@dataclass(frozen=True)
class DCAlignmentRecord:
    """A (target connective, source connective, relation) co-occurrence count."""

    fr_dc: str
    en_dc: str
    relation: str
    count: int


def extract_phrase_pairs(
    src_tokens: Sequence[str],
    tgt_tokens: Sequence[str],
    alignment: Alignment,
    max_len: int = 7,
) -> list[tuple[Phrase, Phrase]]:
    """Enumerate all consistent phrase pairs up to `max_len` tokens per side.

    For each source span the aligned target words are projected to a minimal
    target span; if no link leaks out of the box it is emitted along with
    every extension over unaligned target boundary words. Source-side
    extensions arise from enumerating all source spans. Each box is emitted
    once; identical token phrases from distinct boxes are kept.
    """
    if max_len < 1:
        raise PipelineError(f"max_len must be >= 1, got {max_len}")
    n, m = len(src_tokens), len(tgt_tokens)
    links = sorted(alignment.links)
    for i, j in links:
        if not (0 <= i < n and 0 <= j < m):
            raise PipelineError(f"alignment link {i}-{j} out of bounds for {n}x{m} pair")
    if not links:
        return []

    tgt_of_src: list[list[int]] = [[] for _ in range(n)]
    src_of_tgt: list[list[int]] = [[] for _ in range(m)]
    for i, j in links:
        tgt_of_src[i].append(j)
        src_of_tgt[j].append(i)
    tgt_aligned = [bool(src_of_tgt[j]) for j in range(m)]

    out: list[tuple[Phrase, Phrase]] = []
    for i1 in range(n):
        jlo, jhi = m, -1
        for i2 in range(i1, min(i1 + max_len, n)):
            for j in tgt_of_src[i2]:
                jlo = min(jlo, j)
                jhi = max(jhi, j)
            if jhi < 0:
                continue  # no link yet; a wider span may pick one up
            if jhi - jlo + 1 > max_len:
                break  # projection only widens with i2
            consistent = True
            for j in range(jlo, jhi + 1):
                if any(i < i1 or i > i2 for i in src_of_tgt[j]):
                    consistent = False
                    break
            if not consistent:
                continue
            src_phrase = tuple(src_tokens[i1 : i2 + 1])
            js = jlo
            while True:
                je = jhi
                while je < m and je - js + 1 <= max_len:
                    out.append((src_phrase, tuple(tgt_tokens[js : je + 1])))
                    je += 1
                    if je >= m or tgt_aligned[je]:
                        break
                js -= 1
                if js < 0 or tgt_aligned[js] or jhi - js + 1 > max_len:
                    break
    return out


def build_phrase_table(
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
    alignments: Sequence[Alignment],
    max_len: int = 7,
    threads: int = 1,
) -> list[PhraseTableEntry]:
    """Aggregate per-sentence extractions into counted entries, sorted by
    (src_phrase, tgt_phrase)."""
    if len(pairs) != len(alignments):
        raise PipelineError(
            f"corpus/alignment length mismatch: {len(pairs)} vs {len(alignments)}"
        )
    jobs = list(zip(pairs, alignments))

    def extract_chunk(chunk) -> Counter:
        counts: Counter = Counter()
        for (src, tgt), alignment in chunk:
            for phrase_pair in extract_phrase_pairs(src, tgt, alignment, max_len):
                counts[phrase_pair] += 1
        return counts

    totals: Counter = Counter()
    for part in process_chunks(extract_chunk, jobs, threads):
        totals.update(part)
    return [
        PhraseTableEntry(src, tgt, totals[(src, tgt)])
        for src, tgt in sorted(totals)
    ]


def filter_dc_entries(
    table: Sequence[PhraseTableEntry],
    tgt_inventory: Sequence[Connective],
    src_inventory: Sequence[Connective],
    relations: Sequence[str],
) -> list[DCAlignmentRecord]:
    """Keep entries pairing a single fused source connective with a target
    connective; anything untagged or out of inventory is dropped.

    A source token that parses as `<known surface>-<label>` with an unknown
    label signals upstream corruption and is fatal.
    """
    tgt_forms = {c.surface for c in tgt_inventory}
    src_forms = {c.surface for c in src_inventory}
    known_relations = set(relations)
    counts: dict[tuple[str, str, str], int] = {}
    for entry in table:
        tgt_lower = tuple(t.lower() for t in entry.tgt_phrase)
        if tgt_lower not in tgt_forms:
            continue
        if len(entry.src_phrase) != 1:
            continue
        parsed = split_fused_token(entry.src_phrase[0])
        if parsed is None:
            continue  # plain token, e.g. an untagged connective occurrence
        surface, relation = parsed
        surface_lower = tuple(t.lower() for t in surface)
        if surface_lower not in src_forms:
            continue
        if relation not in known_relations:
            raise PipelineError(
                f"malformed fused token {entry.src_phrase[0]!r}: "
                f"unknown relation label {relation!r}"
            )
        key = (" ".join(tgt_lower), " ".join(surface_lower), relation)
        counts[key] = counts.get(key, 0) + entry.count
    return [
        DCAlignmentRecord(fr_dc, en_dc, relation, counts[(fr_dc, en_dc, relation)])
        for fr_dc, en_dc, relation in sorted(counts)
    ]


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def write_phrase_table(table: Sequence[PhraseTableEntry], path: str) -> None:
    """Export `src ||| tgt ||| count` in table order."""
    lines = [
        f"{' '.join(e.src_phrase)} ||| {' '.join(e.tgt_phrase)} ||| {e.count}\n"
        for e in table
    ]
    atomic_write_text(path, "".join(lines))


def write_dc_records(records: Sequence[DCAlignmentRecord], path: str) -> None:
    lines = [f"{r.fr_dc}\t{r.en_dc}\t{r.relation}\t{r.count}\n" for r in records]
    atomic_write_text(path, "".join(lines))


def read_dc_records(path: str) -> list[DCAlignmentRecord]:
    records = []
    for lineno, line in enumerate(read_text_strict(path).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise PipelineError(f"{path}: expected 4 fields at line {lineno}")
        try:
            records.append(DCAlignmentRecord(parts[0], parts[1], parts[2], int(parts[3])))
        except ValueError as exc:
            raise PipelineError(f"{path}: bad count at line {lineno}") from exc
    return records
