"""Ranked connective-relation lexicon and evidence sampling.

Each lexicon entry scores a (target connective, relation) pair by
aligned_count / corpus_freq, computed in exact integer arithmetic. Counts
are summed across source connectives: the evidence that `en_dc` signalled
the relation transfers to whatever target phrase it aligned to.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .alignment import Alignment
from .corpus import Corpus, FrequencyTable
from .errors import PipelineError
from .fileio import atomic_write_text, read_text_strict
from .phrasetable import DCAlignmentRecord
from .tagging import FusedSentence, split_fused_token

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LexiconEntry:
    fr_dc: str
    relation: str
    prob: Fraction
    aligned_count: int
    corpus_freq: int


@dataclass(frozen=True)
class RankedLexicon:
    """Entries sorted by descending prob, then descending aligned_count,
    then (fr_dc, relation)."""

    entries: tuple[LexiconEntry, ...]


def build_lexicon(
    records: Sequence[DCAlignmentRecord],
    freqs: FrequencyTable,
    min_freq: int = 50,
) -> RankedLexicon:
    """Aggregate alignment records into a ranked lexicon.

    Connectives occurring fewer than `min_freq` times are dropped. Aligned
    counts are capped against the corpus frequency (pathological extraction
    can emit more boxes than occurrences): relations for one connective
    drain a shared budget of `corpus_freq`, largest count first, so the
    per-connective total never exceeds the frequency and every prob is <= 1.
    """
    if min_freq < 0:
        raise PipelineError(f"min_freq must be >= 0, got {min_freq}")
    by_dc: dict[str, dict[str, int]] = {}
    for record in records:
        if record.count < 0:
            raise PipelineError(f"negative count in record {record!r}")
        rels = by_dc.setdefault(record.fr_dc, {})
        rels[record.relation] = rels.get(record.relation, 0) + record.count

    entries: list[LexiconEntry] = []
    for fr_dc in sorted(by_dc):
        freq = freqs.count(fr_dc)
        total = sum(by_dc[fr_dc].values())
        if freq == 0 and total > 0:
            raise PipelineError(
                f"{fr_dc!r} has alignment records but zero corpus frequency"
            )
        if freq < min_freq:
            continue
        budget = freq
        ranked_rels = sorted(by_dc[fr_dc].items(), key=lambda kv: (-kv[1], kv[0]))
        for relation, count in ranked_rels:
            capped = min(count, budget)
            if capped < count:
                logger.warning(
                    "capping aligned count for (%s, %s): %d -> %d (corpus freq %d)",
                    fr_dc, relation, count, capped, freq,
                )
            budget -= capped
            if capped >= 1:
                entries.append(
                    LexiconEntry(fr_dc, relation, Fraction(capped, freq), capped, freq)
                )
    entries.sort(key=lambda e: (-e.prob, -e.aligned_count, e.fr_dc, e.relation))
    return RankedLexicon(tuple(entries))


def write_ranked_lexicon(lexicon: RankedLexicon, path: str) -> None:
    """Export `fr_dc<TAB>relation<TAB>prob<TAB>aligned_count<TAB>corpus_freq`
    in rank order; prob rendered with six decimals."""
    lines = [
        f"{e.fr_dc}\t{e.relation}\t{float(e.prob):.6f}\t{e.aligned_count}\t{e.corpus_freq}\n"
        for e in lexicon.entries
    ]
    atomic_write_text(path, "".join(lines))


def read_ranked_lexicon(path: str) -> RankedLexicon:
    """Reload an exported lexicon; probabilities are rebuilt exactly from the
    integer columns rather than the rendered decimals."""
    entries = []
    for lineno, line in enumerate(read_text_strict(path).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise PipelineError(f"{path}: expected 5 fields at line {lineno}")
        try:
            aligned, freq = int(parts[3]), int(parts[4])
        except ValueError as exc:
            raise PipelineError(f"{path}: bad counts at line {lineno}") from exc
        if freq <= 0 or aligned < 0:
            raise PipelineError(f"{path}: invalid counts at line {lineno}")
        entries.append(LexiconEntry(parts[0], parts[1], Fraction(aligned, freq), aligned, freq))
    return RankedLexicon(tuple(entries))


# ---------------------------------------------------------------------------
# Evidence sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvidenceExcerpt:
    """One sentence pair with both connectives highlighted as __span__."""

    pair_id: int
    src_text: str
    tgt_text: str


def _highlight(tokens: Sequence[str], start: int, end: int) -> str:
    parts = list(tokens[:start])
    parts.append("__" + " ".join(tokens[start : end + 1]) + "__")
    parts.extend(tokens[end + 1 :])
    return " ".join(parts)


def sample_evidence(
    corpus: Corpus,
    alignments: Sequence[Alignment],
    fused_corpus: Sequence[FusedSentence],
    fr_dc: str,
    relation: str,
    k: int,
    seed: int,
) -> list[EvidenceExcerpt]:
    """Sample up to `k` sentence pairs supporting a lexicon entry.

    A pair qualifies when some occurrence of `fr_dc` on the target side has a
    token linked to a fused source token carrying `relation`. Sampling is
    uniform without replacement and fully determined by `seed`; fewer than
    `k` qualifying pairs means all of them are returned.
    """
    if k < 1:
        raise PipelineError(f"sample size must be >= 1, got {k}")
    if not (len(corpus.pairs) == len(alignments) == len(fused_corpus)):
        raise PipelineError("corpus, alignments, and fused corpus must be parallel")
    form = tuple(fr_dc.lower().split())
    if not form:
        raise PipelineError("empty target connective")

    qualifying: list[EvidenceExcerpt] = []
    for pair, alignment, fused in zip(corpus.pairs, alignments, fused_corpus):
        tgt_lower = tuple(t.lower() for t in pair.tgt_tokens)
        found = None
        for start in range(len(tgt_lower) - len(form) + 1):
            if tgt_lower[start : start + len(form)] != form:
                continue
            end = start + len(form) - 1
            hits = sorted(
                (j, i) for i, j in alignment.links if start <= j <= end
            )
            for _, i in hits:
                parsed = split_fused_token(fused.tokens[i])
                if parsed is not None and parsed[1] == relation:
                    found = (start, end, i)
                    break
            if found:
                break
        if found:
            start, end, i = found
            qualifying.append(
                EvidenceExcerpt(
                    pair.id,
                    _highlight(fused.tokens, i, i),
                    _highlight(pair.tgt_tokens, start, end),
                )
            )

    rng = random.Random(seed)
    if len(qualifying) <= k:
        return list(qualifying)
    return rng.sample(qualifying, k)


def format_evidence(
    fr_dc: str, relation: str, excerpts: Sequence[EvidenceExcerpt]
) -> str:
    """Render excerpts as text blocks with FR:/EN: lines (target, source)."""
    blocks = []
    for ex in excerpts:
        blocks.append(
            f"# {fr_dc}\t{relation}\tpair {ex.pair_id}\n"
            f"FR: {ex.tgt_text}\n"
            f"EN: {ex.src_text}\n"
        )
    return "\n".join(blocks)
