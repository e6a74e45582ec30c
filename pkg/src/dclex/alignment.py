"""Word alignment: IBM Model 1 (optionally Model 2), Viterbi, symmetrization.

Training is plain EM over a sparse lexical table t(f|e). The E-step runs in
fixed-size chunks whose partial counts are merged in chunk order, so results
are bit-identical for any worker count. A NULL source token (virtual index
-1) absorbs target words with no counterpart; Viterbi links decoded to NULL
are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import PipelineError
from .fileio import atomic_write_text, read_text_strict
from .parallel import process_chunks

NULL_TOKEN = "<NULL>"
PROB_FLOOR = 1e-12

SentenceTokens = Sequence[str]
TokenPair = tuple[SentenceTokens, SentenceTokens]

HEURISTICS = ("intersection", "union", "grow-diag-final")


@dataclass(frozen=True)
class Alignment:
    """Link set for one sentence pair, as (src_index, tgt_index) pairs."""

    links: frozenset[tuple[int, int]]
    direction: str = "symmetrized"  # forward | backward | symmetrized


@dataclass
class TranslationTable:
    """Lexical translation probabilities t(f|e), sparse over co-occurring pairs."""

    probs: dict[str, dict[str, float]]
    use_null: bool
    log_likelihoods: tuple[float, ...] = field(default_factory=tuple)

    def prob(self, e: str, f: str) -> float:
        """Stored probability, or the floor for unknown pairs."""
        p = self.probs.get(e, {}).get(f, 0.0)
        return p if p > PROB_FLOOR else PROB_FLOOR


@dataclass
class Model2Tables:
    """Model 2 parameters: lexical table plus positional distortion q(i|j,l,m)."""

    lexical: TranslationTable
    distortion: dict[tuple[int, int, int], dict[int, float]]


def _validate_training_input(pairs: Sequence[TokenPair], iterations: int) -> None:
    if iterations < 1:
        raise PipelineError(f"iterations must be >= 1, got {iterations}")
    if not pairs:
        raise PipelineError("empty corpus: nothing to train on")
    for idx, (src, tgt) in enumerate(pairs):
        if not src or not tgt:
            raise PipelineError(f"empty sentence in training pair {idx}")


def _source_side(src: SentenceTokens, use_null: bool) -> list[str]:
    return [NULL_TOKEN, *src] if use_null else list(src)


def _uniform_init(pairs: Sequence[TokenPair], use_null: bool) -> dict[str, dict[str, float]]:
    # Uniform over the target words each source word co-occurs with.
    cooc: dict[str, dict[str, None]] = {}
    for src, tgt in pairs:
        for e in _source_side(src, use_null):
            row = cooc.setdefault(e, {})
            for f in tgt:
                if f not in row:
                    row[f] = None
    return {e: {f: 1.0 / len(row) for f in row} for e, row in cooc.items()}


def train_model1(
    pairs: Sequence[TokenPair],
    iterations: int = 5,
    use_null: bool = True,
    threads: int = 1,
) -> TranslationTable:
    """EM-train t(f|e). Every source row stays normalized to 1; the recorded
    per-iteration corpus log-likelihood is non-decreasing."""
    _validate_training_input(pairs, iterations)
    probs = _uniform_init(pairs, use_null)
    history: list[float] = []

    for _ in range(iterations):
        def estep(chunk: Sequence[TokenPair]) -> tuple[dict, dict, float]:
            counts: dict[str, dict[str, float]] = {}
            totals: dict[str, float] = {}
            ll = 0.0
            for src, tgt in chunk:
                es = _source_side(src, use_null)
                rows = [probs[e] for e in es]
                for f in tgt:
                    z = 0.0
                    for row in rows:
                        z += row[f]
                    ll += math.log(z) - math.log(len(es))
                    for e, row in zip(es, rows):
                        c = row[f] / z
                        erow = counts.setdefault(e, {})
                        erow[f] = erow.get(f, 0.0) + c
                        totals[e] = totals.get(e, 0.0) + c
            return counts, totals, ll

        counts: dict[str, dict[str, float]] = {}
        totals: dict[str, float] = {}
        ll_total = 0.0
        for part_counts, part_totals, part_ll in process_chunks(estep, pairs, threads):
            for e, row in part_counts.items():
                erow = counts.setdefault(e, {})
                for f, c in row.items():
                    erow[f] = erow.get(f, 0.0) + c
            for e, c in part_totals.items():
                totals[e] = totals.get(e, 0.0) + c
            ll_total += part_ll
        history.append(ll_total)
        probs = {e: {f: c / totals[e] for f, c in row.items()} for e, row in counts.items()}

    return TranslationTable(probs, use_null, tuple(history))


def train_model2(
    pairs: Sequence[TokenPair],
    iterations: int = 5,
    use_null: bool = True,
    threads: int = 1,
) -> Model2Tables:
    """EM-train Model 2: t(f|e) plus distortion q(i|j,l,m) over source positions.

    Same contracts as Model 1: normalized rows, non-decreasing log-likelihood.
    Source position -1 stands for NULL.
    """
    _validate_training_input(pairs, iterations)
    probs = _uniform_init(pairs, use_null)

    def positions(src_len: int) -> list[int]:
        return [-1, *range(src_len)] if use_null else list(range(src_len))

    # q rows keyed by (l, m, j); uniform start.
    distortion: dict[tuple[int, int, int], dict[int, float]] = {}
    for src, tgt in pairs:
        l, m = len(src), len(tgt)
        pos = positions(l)
        for j in range(m):
            key = (l, m, j)
            if key not in distortion:
                distortion[key] = {i: 1.0 / len(pos) for i in pos}

    history: list[float] = []
    for _ in range(iterations):
        def estep(chunk: Sequence[TokenPair]) -> tuple[dict, dict, dict, dict, float]:
            tcounts: dict[str, dict[str, float]] = {}
            ttotals: dict[str, float] = {}
            qcounts: dict[tuple[int, int, int], dict[int, float]] = {}
            qtotals: dict[tuple[int, int, int], float] = {}
            ll = 0.0
            for src, tgt in chunk:
                l, m = len(src), len(tgt)
                pos = positions(l)
                words = _source_side(src, use_null)
                for j, f in enumerate(tgt):
                    qrow = distortion[(l, m, j)]
                    scores = [probs[e][f] * qrow[i] for e, i in zip(words, pos)]
                    z = sum(scores)
                    ll += math.log(z)
                    key = (l, m, j)
                    qc = qcounts.setdefault(key, {})
                    for e, i, s in zip(words, pos, scores):
                        c = s / z
                        erow = tcounts.setdefault(e, {})
                        erow[f] = erow.get(f, 0.0) + c
                        ttotals[e] = ttotals.get(e, 0.0) + c
                        qc[i] = qc.get(i, 0.0) + c
                        qtotals[key] = qtotals.get(key, 0.0) + c
            return tcounts, ttotals, qcounts, qtotals, ll

        tcounts: dict[str, dict[str, float]] = {}
        ttotals: dict[str, float] = {}
        qcounts: dict[tuple[int, int, int], dict[int, float]] = {}
        qtotals: dict[tuple[int, int, int], float] = {}
        ll_total = 0.0
        for pc, pt, pqc, pqt, pll in process_chunks(estep, pairs, threads):
            for e, row in pc.items():
                erow = tcounts.setdefault(e, {})
                for f, c in row.items():
                    erow[f] = erow.get(f, 0.0) + c
            for e, c in pt.items():
                ttotals[e] = ttotals.get(e, 0.0) + c
            for key, row in pqc.items():
                qrow = qcounts.setdefault(key, {})
                for i, c in row.items():
                    qrow[i] = qrow.get(i, 0.0) + c
            for key, c in pqt.items():
                qtotals[key] = qtotals.get(key, 0.0) + c
            ll_total += pll
        history.append(ll_total)
        probs = {e: {f: c / ttotals[e] for f, c in row.items()} for e, row in tcounts.items()}
        distortion = {
            key: {i: c / qtotals[key] for i, c in row.items()} for key, row in qcounts.items()
        }

    return Model2Tables(TranslationTable(probs, use_null, tuple(history)), distortion)


def viterbi_align(
    pair: TokenPair,
    table: TranslationTable,
    use_null: bool | None = None,
    direction: str = "forward",
) -> Alignment:
    """Link each target token to its most probable source token.

    Ties break to the lowest source index; NULL occupies virtual index -1,
    so a target word whose best candidate is NULL ends up unaligned.
    """
    src, tgt = pair
    if use_null is None:
        use_null = table.use_null
    if not src and not use_null:
        raise PipelineError("cannot align against an empty source sentence")
    candidates: list[tuple[int, str]] = []
    if use_null:
        candidates.append((-1, NULL_TOKEN))
    candidates.extend(enumerate(src))
    links = set()
    for j, f in enumerate(tgt):
        best_i = candidates[0][0]
        best_p = table.prob(candidates[0][1], f)
        for i, e in candidates[1:]:
            p = table.prob(e, f)
            if p > best_p:
                best_p, best_i = p, i
        if best_i >= 0:
            links.add((best_i, j))
    return Alignment(frozenset(links), direction)


def viterbi_align_model2(
    pair: TokenPair,
    tables: Model2Tables,
    use_null: bool | None = None,
    direction: str = "forward",
) -> Alignment:
    """Model 2 decoding: argmax over t(f|e) * q(i|j,l,m); unseen length
    configurations fall back to uniform distortion."""
    src, tgt = pair
    table = tables.lexical
    if use_null is None:
        use_null = table.use_null
    if not src and not use_null:
        raise PipelineError("cannot align against an empty source sentence")
    l, m = len(src), len(tgt)
    pos = [-1, *range(l)] if use_null else list(range(l))
    words = [NULL_TOKEN, *src] if use_null else list(src)
    uniform = 1.0 / len(pos)
    links = set()
    for j, f in enumerate(tgt):
        qrow = tables.distortion.get((l, m, j))
        best_i: int | None = None
        best_p = -1.0
        for i, e in zip(pos, words):
            q = qrow.get(i, 0.0) if qrow is not None else uniform
            p = table.prob(e, f) * max(q, PROB_FLOOR)
            if p > best_p:
                best_p, best_i = p, i
        assert best_i is not None
        if best_i >= 0:
            links.add((best_i, j))
    return Alignment(frozenset(links), direction)


def transpose(alignment: Alignment, direction: str = "backward") -> Alignment:
    return Alignment(frozenset((j, i) for i, j in alignment.links), direction)


_NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def symmetrize(forward: Alignment, backward: Alignment, heuristic: str) -> Alignment:
    """Combine forward and backward link sets.

    `backward` must already be transposed into (src, tgt) orientation.
    grow-diag-final: start from the intersection; repeatedly add union links
    8-adjacent to the current set while either endpoint is unaligned; finish
    with one pass adding union links with an unaligned src or tgt endpoint.
    Scans go in ascending (src, tgt) order and take effect immediately.
    """
    if heuristic not in HEURISTICS:
        raise PipelineError(f"unknown symmetrization heuristic {heuristic!r}")
    fwd, bwd = forward.links, backward.links
    if heuristic == "intersection":
        return Alignment(frozenset(fwd & bwd))
    if heuristic == "union":
        return Alignment(frozenset(fwd | bwd))

    union = sorted(fwd | bwd)
    links = set(fwd & bwd)
    src_aligned = {i for i, _ in links}
    tgt_aligned = {j for _, j in links}

    def adopt(i: int, j: int) -> None:
        links.add((i, j))
        src_aligned.add(i)
        tgt_aligned.add(j)

    changed = True
    while changed:
        changed = False
        for i, j in union:
            if (i, j) in links:
                continue
            if i in src_aligned and j in tgt_aligned:
                continue
            if any((i + di, j + dj) in links for di, dj in _NEIGHBORS):
                adopt(i, j)
                changed = True
    for i, j in union:
        if (i, j) not in links and (i not in src_aligned or j not in tgt_aligned):
            adopt(i, j)
    return Alignment(frozenset(links))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def format_alignment(alignment: Alignment) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(alignment.links))


def write_alignments(alignments: Iterable[Alignment], path: str) -> None:
    """One line per sentence pair: space-separated `i-j` links, ascending."""
    atomic_write_text(path, "".join(format_alignment(a) + "\n" for a in alignments))


def read_alignments(path: str, direction: str = "symmetrized") -> list[Alignment]:
    alignments = []
    for lineno, line in enumerate(read_text_strict(path).splitlines(), start=1):
        links = set()
        for token in line.split():
            try:
                i, j = token.split("-")
                links.add((int(i), int(j)))
            except ValueError as exc:
                raise PipelineError(f"{path}: bad link {token!r} at line {lineno}") from exc
        alignments.append(Alignment(frozenset(links), direction))
    return alignments


def write_translation_table(table: TranslationTable, path: str) -> None:
    """Export `e<TAB>f<TAB>prob` sorted by source word, then descending prob."""
    lines = []
    for e in sorted(table.probs):
        row = table.probs[e]
        for f, p in sorted(row.items(), key=lambda kv: (-kv[1], kv[0])):
            lines.append(f"{e}\t{f}\t{p!r}\n")
    atomic_write_text(path, "".join(lines))
