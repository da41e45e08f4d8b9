"""Command-line surface: extract, align, annotate, stats, report."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import annotate as annotate_mod
from . import corpusio, interaction, metrics
from .astcore import SourceFunction, parse
from .errors import BothEmpty, BugsemError, NoHighAttention, PathTooShort, TooFewLayers, UnparseableSource
from .features import BugFeatureSet, PvsRuleSet, extract_buggy_paths, extract_pvs, load_rules
from .tokenalign import aggregate_attention, build_alignment

log = logging.getLogger("bugsem")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

ALL_METRICS = ("interpret", "attention", "pair-proportion", "interaction", "joint-prob", "chain")


@dataclass
class RunConfig:
    corpus: Optional[str] = None
    dump_dir: Optional[str] = None
    features: Optional[str] = None
    pvs_version: str = "v2"
    rules_file: Optional[str] = None
    feature_kind: str = "pvs"
    metric_names: tuple = ALL_METRICS
    k: Optional[int] = None              # None = |B|
    theta: float = 0.3
    top_t: Optional[int] = None          # None = max(m, 2 * path length)
    attention_reduce: str = "mean"
    head_reduce: str = "mean"
    include_terminator: bool = True
    out: Optional[str] = None
    fmt: str = "json"
    workers: int = 1
    mode: str = "baseline"
    markers: tuple = annotate_mod.DEFAULT_MARKERS
    separator: str = annotate_mod.DEFAULT_SEPARATOR

    def rules(self) -> PvsRuleSet:
        if self.rules_file:
            return load_rules(self.rules_file)
        return PvsRuleSet.named(self.pvs_version)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("BUGSEM_WORKERS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bugsem",
                     description="Bug-semantic features and model alignment analysis")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--corpus", required=True, help="JSON-lines corpus file")
        p.add_argument("--pvs-version", default="v2", choices=("v1", "v2", "v3"))
        p.add_argument("--rules", dest="rules_file", default=None,
                       help="custom PVS rule set (JSON), overrides --pvs-version")
        p.add_argument("--no-terminator", dest="include_terminator",
                       action="store_false", default=True,
                       help="exclude the enclosing statement's ';' from PVS sets")
        p.add_argument("--workers", type=int, default=_default_workers(),
                       help="parallel workers (env BUGSEM_WORKERS)")

    p_extract = sub.add_parser("extract", help="compute PVS / buggy-path feature sets")
    common(p_extract)
    p_extract.add_argument("--feature-kind", default="pvs", choices=("pvs", "buggy-path"))
    p_extract.add_argument("--out", required=True, help="features JSON-lines output")
    p_extract.add_argument("--write-normalized", default=None,
                           help="also write the whitespace-normalized corpus here")

    p_align = sub.add_parser("align", help="score model dumps against bug features")
    common(p_align)
    p_align.add_argument("--features", required=True, help="output of `bugsem extract`")
    p_align.add_argument("--dump-dir", required=True)
    p_align.add_argument("--metrics", default=",".join(ALL_METRICS),
                         help=f"comma list from {ALL_METRICS}")
    p_align.add_argument("--k", type=int, default=None,
                         help="fixed top-k (default: k = |B|)")
    p_align.add_argument("--theta", type=float, default=0.3,
                         help="threshold for pair-proportion")
    p_align.add_argument("--t", dest="top_t", type=int, default=None,
                         help="top-t transitions for chain metrics "
                              "(default max(m, 2*path length))")
    p_align.add_argument("--attention-reduce", default="mean", choices=("mean", "mass"))
    p_align.add_argument("--head-reduce", default="mean", choices=("mean", "max"))
    p_align.add_argument("--out", required=True)
    p_align.add_argument("--format", dest="fmt", default="json", choices=("json", "csv"))

    p_annotate = sub.add_parser("annotate", help="emit annotated training inputs")
    common(p_annotate)
    p_annotate.add_argument("--mode", default="baseline",
                            choices=annotate_mod.MODES)
    p_annotate.add_argument("--dump-dir", default=None,
                            help="use subword offsets from model dumps when present")
    p_annotate.add_argument("--marker-begin", default=annotate_mod.DEFAULT_MARKERS[0])
    p_annotate.add_argument("--marker-end", default=annotate_mod.DEFAULT_MARKERS[1])
    p_annotate.add_argument("--separator", default=annotate_mod.DEFAULT_SEPARATOR)
    p_annotate.add_argument("--out", required=True)

    p_stats = sub.add_parser("stats", help="PVS and buggy-path corpus statistics")
    common(p_stats)
    p_stats.add_argument("--out", default=None, help="optional JSON output")

    p_report = sub.add_parser("report", help="recompute summaries for a records file")
    p_report.add_argument("--records", required=True)
    p_report.add_argument("--head-reduce", default="mean", choices=("mean", "max"))
    p_report.add_argument("--out", default=None)
    return parser


# --- extract ----------------------------------------------------------------------

def _extract_one(args):
    fn, version, rules, include_terminator, feature_kind = args
    try:
        ast = parse(fn.code)
    except UnparseableSource as exc:
        return fn.id, None, str(exc)
    records = []
    if feature_kind == "pvs":
        pvs = extract_pvs(ast, rules, include_terminator)
        records.append({
            "id": fn.id, "kind": "pvs", "version": version,
            "token_indices": list(pvs.tokens),
            "token_texts": [ast.terminals[i].text for i in pvs.tokens],
            "path_id": None,
        })
    else:
        for path in extract_buggy_paths(ast, fn):
            records.append({
                "id": fn.id, "kind": "buggy_path", "version": None,
                "token_indices": list(path.tokens),
                "token_texts": [ast.terminals[i].text for i in path.tokens],
                "path_id": path.path_id,
            })
    normalized = ast.normalized
    return fn.id, (records, normalized), None


def cmd_extract(config: RunConfig, write_normalized: Optional[str] = None) -> int:
    functions = corpusio.load_corpus(config.corpus)
    if not functions:
        log.error("corpus %s is empty", config.corpus)
        return EXIT_DATA
    rules = config.rules()
    work = [(fn, rules.version, rules, config.include_terminator, config.feature_kind)
            for fn in functions]
    results = _map(work, _extract_one, config.workers)

    skipped = 0
    normalized_rows = []
    with open(config.out, "w", encoding="utf-8") as fh:
        for fn, (ex_id, payload, err) in zip(functions, results):
            if payload is None:
                log.warning("skipping %s: %s", ex_id, err)
                skipped += 1
                continue
            records, normalized = payload
            for record in records:
                fh.write(json.dumps(record) + "\n")
            normalized_rows.append(SourceFunction(
                id=fn.id, code=normalized, label=fn.label,
                dataset=fn.dataset, bug_line_traces=fn.bug_line_traces))
    if write_normalized:
        corpusio.write_corpus(normalized_rows, write_normalized)
    log.info("extracted features for %d/%d examples (%d skipped)",
             len(functions) - skipped, len(functions), skipped)
    if skipped == len(functions):
        log.error("every example failed to parse")
        return EXIT_DATA
    return EXIT_OK


# --- align ------------------------------------------------------------------------

def _load_features(path) -> dict[str, list[dict]]:
    by_example: dict[str, list[dict]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                record = json.loads(line)
                by_example.setdefault(record["id"], []).append(record)
    return by_example


def _align_one(args):
    fn, feature_records, dump_dir, config = args
    try:
        ast = parse(fn.code)
        dump = corpusio.load_dump(dump_dir, fn.id)
        align = build_alignment(ast, dump.tokens)
    except BugsemError as exc:
        return fn.id, None, f"{type(exc).__name__}: {exc}"

    records: list[metrics.AlignmentRecord] = []
    skips: list[str] = []
    for feat in feature_records:
        tokens = tuple(feat["token_indices"])
        if not tokens:
            skips.append(f"{fn.id}: empty bug set (path {feat['path_id']})")
            continue
        bug = BugFeatureSet(kind=feat["kind"], tokens=tokens, path_id=feat["path_id"])
        try:
            records.extend(_score_feature(fn.id, bug, ast, dump, align, config))
        except (BothEmpty, PathTooShort, NoHighAttention) as exc:
            skips.append(f"{fn.id}: {type(exc).__name__}: {exc}")
        except TooFewLayers as exc:
            return fn.id, None, f"TooFewLayers: {exc}"
    return fn.id, (records, skips), None


def _score_feature(example_id, bug, ast, dump, align, config: RunConfig):
    b = set(bug.tokens)
    path_id = bug.path_id
    wanted = config.metric_names
    out: list[metrics.AlignmentRecord] = []

    if "interpret" in wanted and dump.attributions:
        per_tool, mean_score, k = metrics.alignment_interpret(
            dump.attributions, align, b, tools=sorted(dump.attributions), k=config.k)
        for tool, score in sorted(per_tool.items()):
            out.append(metrics.AlignmentRecord(example_id, "interpret", score, k=k,
                                               tool=tool, path_id=path_id))
        out.append(metrics.AlignmentRecord(example_id, "interpret", mean_score, k=k,
                                           path_id=path_id))

    if "attention" in wanted:
        for layer, head, k, score in metrics.alignment_attention(
                dump.attention, align, b, reduce=config.attention_reduce, k=config.k):
            out.append(metrics.AlignmentRecord(example_id, "attention", score, k=k,
                                               layer=layer, head=head, path_id=path_id))

    if "pair-proportion" in wanted:
        n_layers, n_heads = dump.attention.shape[:2]
        for layer in range(n_layers):
            for head in range(n_heads):
                agg = aggregate_attention(dump.attention[layer, head], align,
                                          reduce=config.attention_reduce)
                try:
                    score = metrics.pair_proportion(agg, b, config.theta)
                except NoHighAttention:
                    continue
                out.append(metrics.AlignmentRecord(
                    example_id, "pair_proportion", score, k=len(b),
                    layer=layer, head=head, path_id=path_id))

    needs_im = {"interaction", "joint-prob", "chain"} & set(wanted)
    if needs_im:
        im = interaction.build_interaction_matrix(dump.attention, align,
                                                  reduce=config.attention_reduce)
        if "interaction" in wanted:
            score, k = interaction.alignment_im(im, b)
            out.append(metrics.AlignmentRecord(example_id, "interaction", score, k=k,
                                               path_id=path_id))
        if bug.kind == "buggy_path":
            positions = interaction._path_positions(im, bug.tokens)
            n_nodes = len(positions)
            if "joint-prob" in wanted and n_nodes >= 2:
                prob = interaction.path_joint_probability(im, bug.tokens)
                out.append(metrics.AlignmentRecord(example_id, "joint_prob", prob,
                                                   k=n_nodes, path_id=path_id))
            if "chain" in wanted and n_nodes >= 2:
                t = config.top_t or interaction.default_top_t(im.size, n_nodes)
                chain_len, coverage = interaction.longest_chain(im, bug.tokens, t)
                components = interaction.induced_components(im, bug.tokens, t)
                out.append(metrics.AlignmentRecord(example_id, "chain", float(chain_len),
                                                   k=n_nodes, path_id=path_id))
                out.append(metrics.AlignmentRecord(example_id, "chain_coverage", coverage,
                                                   k=n_nodes, path_id=path_id))
                out.append(metrics.AlignmentRecord(example_id, "components", float(components),
                                                   k=n_nodes, path_id=path_id))
    return out


def cmd_align(config: RunConfig) -> int:
    functions = corpusio.load_corpus(config.corpus)
    features = _load_features(config.features)
    work = []
    missing_dump = 0
    for fn in functions:
        feats = features.get(fn.id)
        if not feats:
            continue
        paths = corpusio.dump_paths(config.dump_dir, fn.id)
        if not paths["attention"].exists():
            missing_dump += 1
            continue
        work.append((fn, feats, config.dump_dir, config))
    if missing_dump:
        log.warning("%d examples have features but no dump", missing_dump)

    all_records: list[metrics.AlignmentRecord] = []
    failures = 0
    for ex_id, payload, err in _map(work, _align_one, config.workers):
        if payload is None:
            log.warning("skipping %s: %s", ex_id, err)
            failures += 1
            continue
        records, skips = payload
        for message in skips:
            log.info("skipped: %s", message)
        all_records.extend(records)

    if not all_records:
        log.error("no alignment records produced (examples: %d scored, %d failed, "
                  "%d missing dumps)", len(work) - failures, failures, missing_dump)
        return EXIT_DATA
    corpusio.write_report(all_records, config.out, fmt=config.fmt,
                          head_reduce=config.head_reduce)
    log.info("wrote %d records to %s", len(all_records), config.out)
    return EXIT_OK


# --- annotate ----------------------------------------------------------------------

def cmd_annotate(config: RunConfig) -> int:
    functions = corpusio.load_corpus(config.corpus)
    if not functions:
        log.error("corpus %s is empty", config.corpus)
        return EXIT_DATA
    rules = config.rules()
    dumps = None
    if config.dump_dir:
        dumps = {}
        for fn in functions:
            paths = corpusio.dump_paths(config.dump_dir, fn.id)
            if paths["tokens"].exists():
                tokens = corpusio.load_tokens(config.dump_dir, fn.id)
                try:
                    ast = parse(fn.code)
                except UnparseableSource:
                    continue
                dumps[fn.id] = (tokens, build_alignment(ast, tokens))
    written = annotate_mod.emit_training_corpus(
        functions, config.mode, rules, config.out,
        include_terminator=config.include_terminator,
        markers=config.markers, separator=config.separator,
        dumps=dumps)
    if written == 0:
        log.error("no examples could be annotated")
        return EXIT_DATA
    log.info("wrote %d annotated records to %s", written, config.out)
    return EXIT_OK


# --- stats -------------------------------------------------------------------------

def cmd_stats(config: RunConfig, out: Optional[str] = None) -> int:
    from .features import pvs_statistics

    functions = corpusio.load_corpus(config.corpus)
    if not functions:
        log.error("corpus %s is empty", config.corpus)
        return EXIT_DATA
    rules = config.rules()
    stats = pvs_statistics(functions, rules, config.include_terminator)

    trace_counts = [len(fn.bug_line_traces) for fn in functions if fn.bug_line_traces]
    mean_traces = sum(trace_counts) / len(trace_counts) if trace_counts else 0.0

    payload = {
        "pvs_version": rules.version,
        "mean_pvs_vulnerable": stats.mean_vulnerable,
        "mean_pvs_non_vulnerable": stats.mean_non_vulnerable,
        "vul_nonvul_ratio": stats.ratio,
        "n_vulnerable": stats.n_vulnerable,
        "n_non_vulnerable": stats.n_non_vulnerable,
        "n_skipped": stats.n_skipped,
        "n_with_traces": len(trace_counts),
        "mean_traces_per_program": mean_traces,
    }
    text = (
        f"PVS {rules.version}: mean {stats.mean_vulnerable:.2f} (vulnerable) "
        f"vs {stats.mean_non_vulnerable:.2f} (non-vulnerable), "
        f"ratio {stats.ratio:.2f}\n"
        f"traces: {len(trace_counts)} examples, "
        f"mean {mean_traces:.2f} buggy paths per program\n"
    )
    sys.stdout.write(text)
    if out:
        Path(out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


# --- report ------------------------------------------------------------------------

def cmd_report(records_path: str, head_reduce: str, out: Optional[str]) -> int:
    records = corpusio.read_report(records_path)
    if not records:
        log.error("no records in %s", records_path)
        return EXIT_DATA
    summary = corpusio.summarize(records, head_reduce=head_reduce)
    text = json.dumps(summary, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- plumbing ----------------------------------------------------------------------

def _map(work, fn, workers: int):
    if workers <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))


def _config_from_args(args) -> RunConfig:
    config = RunConfig()
    for name in ("corpus", "dump_dir", "features", "pvs_version", "rules_file",
                 "include_terminator", "theta", "top_t", "attention_reduce",
                 "head_reduce", "out", "fmt", "workers", "mode", "separator", "k"):
        if hasattr(args, name):
            setattr(config, name, getattr(args, name))
    if hasattr(args, "feature_kind"):
        config.feature_kind = args.feature_kind
    if hasattr(args, "metrics"):
        config.metric_names = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
        unknown = set(config.metric_names) - set(ALL_METRICS)
        if unknown:
            raise SystemExit(EXIT_USAGE)
    if hasattr(args, "marker_begin"):
        config.markers = (args.marker_begin, args.marker_end)
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args.records, args.head_reduce, args.out)
        config = _config_from_args(args)
        if args.command == "extract":
            return cmd_extract(config, write_normalized=args.write_normalized)
        if args.command == "align":
            return cmd_align(config)
        if args.command == "annotate":
            return cmd_annotate(config)
        if args.command == "stats":
            return cmd_stats(config, out=args.out)
    except BugsemError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
