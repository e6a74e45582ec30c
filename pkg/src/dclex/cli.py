"""Command-line pipeline: ingest | tag | align | extract | build | eval |
evidence | report, plus `run all`.

Every stage reads its inputs from and writes its artifacts to the configured
output directory, so stages can be rerun individually. A JSON manifest
records the config snapshot, input digests, per-stage row counts and timing.
"""

from __future__ import annotations

import argparse
import dataclasses
import difflib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import alignment as al
from . import corpus as cp
from . import evaluation as ev
from . import inventory as inv
from . import lexicon as lx
from . import phrasetable as pt
from . import tagging as tg
from .errors import PipelineError, UsageError
from .fileio import atomic_write_text, read_text_strict, sha256_file
from .parallel import process_chunks

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "CONLEDISCO_CONFIG"

STAGES = ("ingest", "tag", "align", "extract", "build", "eval", "evidence", "report")

ARTIFACTS = {
    "corpus_src": "corpus.src",
    "corpus_tgt": "corpus.tgt",
    "freqs": "freqs.tsv",
    "annotations": "annotations.tsv",
    "fused_src": "fused.src",
    "ttable_fwd": "ttable.fwd.tsv",
    "ttable_bwd": "ttable.bwd.tsv",
    "align_fwd": "alignments.fwd.txt",
    "align_bwd": "alignments.bwd.txt",
    "align_sym": "alignments.sym.txt",
    "phrase_table": "phrase_table.txt",
    "dc_records": "dc_records.tsv",
    "lexicon": "lexicon.tsv",
    "eval_report": "eval_report.txt",
    "pr_points": "pr_points.tsv",
    "evidence": "evidence.txt",
    "table1": "table1.tsv",
    "manifest": "manifest.json",
}


@dataclass
class PipelineConfig:
    """Validated pipeline settings; field names double as config-file keys."""

    src_corpus: str
    tgt_corpus: str
    src_inventory: str
    tgt_inventory: str
    output_dir: str = "out"
    annotations: str | None = None
    default_senses: str | None = None
    gold_lexicon: str | None = None
    relation_map: str | None = None
    induced_relations: str | None = None
    gold_relations: str | None = None
    iterations: int = 5
    use_null: bool = True
    heuristic: str = "grow-diag-final"
    max_phrase_len: int = 7
    min_freq: int = 50
    lowercase: bool = True
    skip_empty: bool = True
    seed: int = 0
    threads: int = 1
    limit: int = 0
    model: str = "model1"
    evidence_k: int = 5
    evidence_min_prob: float = 0.01
    dump_pr_points: bool = False


_REQUIRED_KEYS = ("src_corpus", "tgt_corpus", "src_inventory", "tgt_inventory")
_PATH_KEYS = _REQUIRED_KEYS + (
    "output_dir",
    "annotations",
    "default_senses",
    "gold_lexicon",
    "relation_map",
    "induced_relations",
    "gold_relations",
)


def _parse_bool(key: str, raw: str) -> bool:
    if raw.lower() in ("true", "1", "yes"):
        return True
    if raw.lower() in ("false", "0", "no"):
        return False
    raise UsageError(f"config key {key!r}: expected a boolean, got {raw!r}")


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"config key {key!r}: expected an integer, got {raw!r}") from exc


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise UsageError(f"config key {key!r}: expected a number, got {raw!r}") from exc


def _check_ranges(cfg: PipelineConfig) -> None:
    if cfg.iterations < 1:
        raise UsageError(f"config key 'iterations' must be >= 1, got {cfg.iterations}")
    if cfg.max_phrase_len < 1:
        raise UsageError(f"config key 'max_phrase_len' must be >= 1, got {cfg.max_phrase_len}")
    if cfg.min_freq < 0:
        raise UsageError(f"config key 'min_freq' must be >= 0, got {cfg.min_freq}")
    if cfg.threads < 1:
        raise UsageError(f"config key 'threads' must be >= 1, got {cfg.threads}")
    if cfg.limit < 0:
        raise UsageError(f"config key 'limit' must be >= 0, got {cfg.limit}")
    if cfg.evidence_k < 1:
        raise UsageError(f"config key 'evidence_k' must be >= 1, got {cfg.evidence_k}")
    if not 0.0 <= cfg.evidence_min_prob <= 1.0:
        raise UsageError(
            f"config key 'evidence_min_prob' must be in [0, 1], got {cfg.evidence_min_prob}"
        )
    if cfg.heuristic not in al.HEURISTICS:
        raise UsageError(
            f"config key 'heuristic' must be one of {', '.join(al.HEURISTICS)}; "
            f"got {cfg.heuristic!r}"
        )
    if cfg.model not in ("model1", "model2"):
        raise UsageError(f"config key 'model' must be model1 or model2, got {cfg.model!r}")


def validate_config(path: str) -> PipelineConfig:
    """Parse a line-oriented `key = value` config file, strictly.

    Unknown keys are rejected with a closest-match suggestion; missing
    required keys and out-of-range values are fatal before any work runs.
    """
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    if not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    values: dict[str, object] = {}
    for lineno, line in enumerate(read_text_strict(path).splitlines(), start=1):
        payload = line.split("#", 1)[0].strip()
        if not payload:
            continue
        if "=" not in payload:
            raise UsageError(f"{path}: expected `key = value` at line {lineno}")
        key, raw = (part.strip() for part in payload.split("=", 1))
        if key not in fields:
            close = difflib.get_close_matches(key, fields, n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise UsageError(f"{path}: unknown config key {key!r} at line {lineno}{hint}")
        if key in values:
            raise UsageError(f"{path}: duplicate config key {key!r} at line {lineno}")
        ftype = fields[key].type
        if ftype == "int":
            values[key] = _parse_int(key, raw)
        elif ftype == "bool":
            values[key] = _parse_bool(key, raw)
        elif ftype == "float":
            values[key] = _parse_float(key, raw)
        else:
            values[key] = raw
    missing = [key for key in _REQUIRED_KEYS if key not in values]
    if missing:
        raise UsageError(f"{path}: missing required config key(s): {', '.join(missing)}")
    cfg = PipelineConfig(**values)  # type: ignore[arg-type]
    _check_ranges(cfg)
    return cfg


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    """Reproducibility record: config snapshot, input digests, stage stats."""

    version: str
    config: dict
    inputs: dict[str, str]
    stages: dict[str, dict]

    @classmethod
    def load_or_create(cls, path: Path, cfg: PipelineConfig) -> "RunManifest":
        if path.is_file():
            data = json.loads(read_text_strict(path))
            return cls(data["version"], data["config"], data["inputs"], data["stages"])
        return cls(__version__, dataclasses.asdict(cfg), {}, {})

    def record_inputs(self, cfg: PipelineConfig) -> None:
        for key in _PATH_KEYS:
            value = getattr(cfg, key)
            if key != "output_dir" and value and Path(value).is_file():
                self.inputs[str(value)] = sha256_file(value)

    def record_stage(self, name: str, rows: dict[str, int], seconds: float) -> None:
        self.stages[name] = {"rows": rows, "seconds": round(seconds, 3)}

    def write(self, path: Path) -> None:
        payload = {
            "version": self.version,
            "config": self.config,
            "inputs": self.inputs,
            "stages": self.stages,
        }
        atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def _out(cfg: PipelineConfig, name: str) -> Path:
    return Path(cfg.output_dir) / ARTIFACTS[name]


def _require(cfg: PipelineConfig, name: str, produced_by: str) -> Path:
    path = _out(cfg, name)
    if not path.is_file():
        raise UsageError(
            f"missing artifact {path}: run the `{produced_by}` stage first"
        )
    return path


def _require_config_path(cfg: PipelineConfig, key: str) -> str:
    value = getattr(cfg, key)
    if not value:
        raise UsageError(f"config key {key!r} is required by this stage")
    if not Path(value).is_file():
        raise UsageError(f"config key {key!r}: file not found: {value}")
    return value


def _load_induced_relations(cfg: PipelineConfig) -> list[str]:
    if cfg.induced_relations:
        return inv.load_relation_inventory(_require_config_path(cfg, "induced_relations"))
    return inv.default_induced_relations()


def _load_gold_relations(cfg: PipelineConfig) -> list[str]:
    if cfg.gold_relations:
        return inv.load_relation_inventory(_require_config_path(cfg, "gold_relations"))
    return inv.default_gold_relations()


def _load_relation_map(cfg: PipelineConfig, induced: list[str], gold: list[str]) -> inv.RelationMap:
    if cfg.relation_map:
        return inv.load_relation_map(_require_config_path(cfg, "relation_map"), induced, gold)
    return inv.default_relation_map(induced, gold)


def _stage_ingest(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    opts = cp.TokenizerOptions(lowercase=cfg.lowercase, skip_empty=cfg.skip_empty)
    corpus = cp.load_parallel_corpus(
        _require_config_path(cfg, "src_corpus"),
        _require_config_path(cfg, "tgt_corpus"),
        opts,
        limit=cfg.limit or None,
    )
    if not corpus.pairs:
        raise PipelineError("corpus is empty after loading")
    cp.write_token_file((p.src_tokens for p in corpus.pairs), _out(cfg, "corpus_src"))
    cp.write_token_file((p.tgt_tokens for p in corpus.pairs), _out(cfg, "corpus_tgt"))
    tgt_inventory = inv.load_connective_inventory(
        _require_config_path(cfg, "tgt_inventory"), "target"
    )
    freqs = cp.count_occurrences(corpus, "target", tgt_inventory, threads=cfg.threads)
    cp.write_frequency_table(freqs, _out(cfg, "freqs"))
    return {"pairs": len(corpus.pairs), "target_forms": len(freqs.entries)}


def _load_work_corpus(cfg: PipelineConfig, produced_by: str = "ingest") -> cp.Corpus:
    src = _require(cfg, "corpus_src", produced_by)
    tgt = _require(cfg, "corpus_tgt", produced_by)
    return cp.load_token_corpus(str(src), str(tgt))


def _stage_tag(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    corpus = _load_work_corpus(cfg)
    if cfg.annotations:
        annotations = tg.load_annotations(_require_config_path(cfg, "annotations"), corpus)
    else:
        if not cfg.default_senses:
            raise UsageError(
                "the tag stage needs either 'annotations' or 'default_senses' configured"
            )
        src_inventory = inv.load_connective_inventory(
            _require_config_path(cfg, "src_inventory"), "source"
        )
        senses = tg.load_default_senses(_require_config_path(cfg, "default_senses"))
        annotations = tg.heuristic_tag(corpus, src_inventory, senses, threads=cfg.threads)
    tg.write_annotations(annotations, _out(cfg, "annotations"))
    fused = tg.fuse_corpus(corpus, annotations)
    tg.write_fused_corpus(fused, _out(cfg, "fused_src"))
    return {"annotations": len(annotations), "sentences": len(fused)}


def _stage_align(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    fused_path = _require(cfg, "fused_src", "tag")
    tgt_path = _require(cfg, "corpus_tgt", "ingest")
    work = cp.load_token_corpus(str(fused_path), str(tgt_path))
    fwd_pairs = [(p.src_tokens, p.tgt_tokens) for p in work.pairs]
    bwd_pairs = [(p.tgt_tokens, p.src_tokens) for p in work.pairs]

    if cfg.model == "model2":
        fwd_tables = al.train_model2(fwd_pairs, cfg.iterations, cfg.use_null, cfg.threads)
        bwd_tables = al.train_model2(bwd_pairs, cfg.iterations, cfg.use_null, cfg.threads)
        fwd = [al.viterbi_align_model2(p, fwd_tables) for p in fwd_pairs]
        bwd = [al.viterbi_align_model2(p, bwd_tables) for p in bwd_pairs]
        fwd_table, bwd_table = fwd_tables.lexical, bwd_tables.lexical
    else:
        fwd_table = al.train_model1(fwd_pairs, cfg.iterations, cfg.use_null, cfg.threads)
        bwd_table = al.train_model1(bwd_pairs, cfg.iterations, cfg.use_null, cfg.threads)

        def decode(table: al.TranslationTable, pairs: list) -> list[al.Alignment]:
            def chunk(job_chunk):
                return [al.viterbi_align(p, table) for p in job_chunk]

            out: list[al.Alignment] = []
            for part in process_chunks(chunk, pairs, cfg.threads):
                out.extend(part)
            return out

        fwd = decode(fwd_table, fwd_pairs)
        bwd = decode(bwd_table, bwd_pairs)

    bwd_transposed = [al.transpose(a) for a in bwd]
    symmetrized = [
        al.symmetrize(f, b, cfg.heuristic) for f, b in zip(fwd, bwd_transposed)
    ]
    al.write_translation_table(fwd_table, _out(cfg, "ttable_fwd"))
    al.write_translation_table(bwd_table, _out(cfg, "ttable_bwd"))
    al.write_alignments(fwd, _out(cfg, "align_fwd"))
    al.write_alignments(bwd_transposed, _out(cfg, "align_bwd"))
    al.write_alignments(symmetrized, _out(cfg, "align_sym"))
    return {"pairs": len(work.pairs)}


def _stage_extract(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    fused_path = _require(cfg, "fused_src", "tag")
    tgt_path = _require(cfg, "corpus_tgt", "ingest")
    align_path = _require(cfg, "align_sym", "align")
    work = cp.load_token_corpus(str(fused_path), str(tgt_path))
    alignments = al.read_alignments(str(align_path))
    if len(alignments) != len(work.pairs):
        raise PipelineError(
            f"alignment count {len(alignments)} does not match corpus size {len(work.pairs)}"
        )
    pairs = [(p.src_tokens, p.tgt_tokens) for p in work.pairs]
    table = pt.build_phrase_table(pairs, alignments, cfg.max_phrase_len, cfg.threads)
    pt.write_phrase_table(table, _out(cfg, "phrase_table"))
    tgt_inventory = inv.load_connective_inventory(
        _require_config_path(cfg, "tgt_inventory"), "target"
    )
    src_inventory = inv.load_connective_inventory(
        _require_config_path(cfg, "src_inventory"), "source"
    )
    relations = _load_induced_relations(cfg)
    records = pt.filter_dc_entries(table, tgt_inventory, src_inventory, relations)
    pt.write_dc_records(records, _out(cfg, "dc_records"))
    return {"phrase_entries": len(table), "dc_records": len(records)}


def _stage_build(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    records = pt.read_dc_records(str(_require(cfg, "dc_records", "extract")))
    freqs = cp.read_frequency_table(str(_require(cfg, "freqs", "ingest")))
    ranked = lx.build_lexicon(records, freqs, cfg.min_freq)
    lx.write_ranked_lexicon(ranked, _out(cfg, "lexicon"))
    return {"entries": len(ranked.entries)}


def _stage_eval(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    ranked = lx.read_ranked_lexicon(str(_require(cfg, "lexicon", "build")))
    freqs = cp.read_frequency_table(str(_require(cfg, "freqs", "ingest")))
    gold_relations = _load_gold_relations(cfg)
    gold = inv.load_gold_lexicon(_require_config_path(cfg, "gold_lexicon"), gold_relations)
    gold = inv.restrict_gold(gold, freqs, cfg.min_freq)
    if not gold.entries:
        raise PipelineError(
            f"gold lexicon is empty after applying the frequency threshold {cfg.min_freq}"
        )
    induced = _load_induced_relations(cfg)
    relation_map = _load_relation_map(cfg, induced, gold_relations)
    report = ev.evaluate(ranked, gold, relation_map)
    ev.write_eval_report(report, _out(cfg, "eval_report"))
    if cfg.dump_pr_points:
        ev.write_pr_points(report, _out(cfg, "pr_points"))
    return {
        "relevant_retrieved": report.counts.relevant_retrieved,
        "total_relevant": report.counts.total_relevant,
    }


def _stage_evidence(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    ranked = lx.read_ranked_lexicon(str(_require(cfg, "lexicon", "build")))
    corpus = _load_work_corpus(cfg)
    fused_path = _require(cfg, "fused_src", "tag")
    align_path = _require(cfg, "align_sym", "align")
    fused_tokens = read_text_strict(fused_path).splitlines()
    if len(fused_tokens) != len(corpus.pairs):
        raise PipelineError(
            f"fused corpus size {len(fused_tokens)} does not match corpus size {len(corpus.pairs)}"
        )
    fused = [
        tg.FusedSentence(pair.id, tuple(line.split()))
        for pair, line in zip(corpus.pairs, fused_tokens)
    ]
    alignments = al.read_alignments(str(align_path))
    if len(alignments) != len(corpus.pairs):
        raise PipelineError(
            f"alignment count {len(alignments)} does not match corpus size {len(corpus.pairs)}"
        )

    only_dc = getattr(extra, "dc", None) if extra else None
    only_relation = getattr(extra, "relation", None) if extra else None
    min_prob = Fraction(str(cfg.evidence_min_prob))
    targets = [
        entry
        for entry in ranked.entries
        if entry.prob >= min_prob
        and (only_dc is None or entry.fr_dc == only_dc)
        and (only_relation is None or entry.relation == only_relation)
    ]
    blocks = []
    sampled = 0
    for idx, entry in enumerate(targets):
        # Per-entry seed derived from the run seed and the entry's rank, so a
        # rerun with the same config reproduces the same samples.
        excerpts = lx.sample_evidence(
            corpus,
            alignments,
            fused,
            entry.fr_dc,
            entry.relation,
            cfg.evidence_k,
            cfg.seed * 100003 + idx,
        )
        sampled += len(excerpts)
        if excerpts:
            blocks.append(lx.format_evidence(entry.fr_dc, entry.relation, excerpts))
    atomic_write_text(_out(cfg, "evidence"), "\n".join(blocks))
    return {"entries": len(targets), "excerpts": sampled}


def _stage_report(cfg: PipelineConfig, extra: argparse.Namespace | None) -> dict[str, int]:
    freqs = cp.read_frequency_table(str(_require(cfg, "freqs", "ingest")))
    tgt_inventory = inv.load_connective_inventory(
        _require_config_path(cfg, "tgt_inventory"), "target"
    )
    zero = below = above = 0
    for connective in tgt_inventory:
        count = freqs.count(connective.text)
        if count == 0:
            zero += 1
        elif count < cfg.min_freq:
            below += 1
        else:
            above += 1
    total = len(tgt_inventory)
    header = f"=0\t<{cfg.min_freq}\t>={cfg.min_freq}\ttotal"
    row = f"{zero}\t{below}\t{above}\t{total}"
    text = header + "\n" + row + "\n"
    atomic_write_text(_out(cfg, "table1"), text)
    print(text, end="")
    return {"inventory_forms": total}


_STAGE_FUNCS = {
    "ingest": _stage_ingest,
    "tag": _stage_tag,
    "align": _stage_align,
    "extract": _stage_extract,
    "build": _stage_build,
    "eval": _stage_eval,
    "evidence": _stage_evidence,
    "report": _stage_report,
}


def run_stage(stage: str, cfg: PipelineConfig, extra: argparse.Namespace | None = None) -> dict:
    """Run one stage, then update the manifest under the output directory."""
    if stage not in _STAGE_FUNCS:
        raise UsageError(f"unknown stage {stage!r}")
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    manifest_path = Path(cfg.output_dir) / ARTIFACTS["manifest"]
    manifest = RunManifest.load_or_create(manifest_path, cfg)
    manifest.config = dataclasses.asdict(cfg)
    started = time.perf_counter()
    rows = _STAGE_FUNCS[stage](cfg, extra)
    elapsed = time.perf_counter() - started
    manifest.record_inputs(cfg)
    manifest.record_stage(stage, rows, elapsed)
    manifest.write(manifest_path)
    logger.info("stage %s done in %.2fs: %s", stage, elapsed, rows)
    return rows


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dclex",
        description="Induce a connective-to-relation lexicon from a parallel corpus.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--config",
            help=f"pipeline config file (falls back to ${CONFIG_ENV_VAR})",
        )
        p.add_argument("--limit", type=int, help="use only the first N sentence pairs")
        p.add_argument("--threads", type=int, help="worker threads (output is identical for any value)")
        p.add_argument("--seed", type=int, help="random seed override")
        p.add_argument("--output", help="output directory override")

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        add_common(p)
        if stage == "evidence":
            p.add_argument("--dc", help="restrict to one target connective")
            p.add_argument("--relation", help="restrict to one relation label")
        if stage == "report":
            p.add_argument(
                "--table1",
                action="store_true",
                help="print the inventory frequency distribution (the default report)",
            )

    p = sub.add_parser("run", help="run pipeline stages in order")
    p.add_argument("what", choices=["all"], help="which stage set to run")
    add_common(p)
    return parser


def _resolve_config(args: argparse.Namespace) -> PipelineConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        raise UsageError(
            f"no config given: pass --config or set ${CONFIG_ENV_VAR}"
        )
    cfg = validate_config(path)
    overrides: dict[str, object] = {}
    if args.limit is not None:
        if args.limit < 0:
            raise UsageError(f"--limit must be >= 0, got {args.limit}")
        overrides["limit"] = args.limit
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        overrides["threads"] = args.threads
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.output:
        overrides["output_dir"] = args.output
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "run":
            for stage in ("ingest", "tag", "align", "extract", "build", "eval", "evidence", "report"):
                run_stage(stage, cfg, args)
        else:
            run_stage(args.command, cfg, args)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
