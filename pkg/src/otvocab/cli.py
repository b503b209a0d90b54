"""Command line interface.

Subcommands: learn-candidates, volt, muv-search, encode, stats.  All logs go
to stderr; data goes to files or stdout, so every subcommand is pipe
friendly.  Reports embed a digest of the effective configuration and content
hashes of the inputs, which makes runs auditable and reproducible.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time

from . import __version__
from .bpe import (learn_bpe, read_candidates_tsv, top_candidates,
                  write_candidates_tsv, write_merges)
from .corpus import (count_chars, count_tokens, load_corpus, pre_tokenize,
                     write_frequency_tsv)
from .entropy import corpus_entropy
from .errors import (InfeasibleTransportError, OtvocabError, PipelineError)
from .ot import SinkhornConfig
from .pipeline import (DEFAULT_BILINGUAL_SCHEDULE, DEFAULT_MUV_SEARCH_SIZES,
                       TimestepSchedule, _solve_timestep, bpe_sweep,
                       muv_search, run_volt)
from .segmenter import decode, encode
from .vocab import Vocabulary

log = logging.getLogger("otvocab")

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2


def _config_digest(settings: dict) -> str:
    payload = json.dumps(settings, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_words(paths, max_bytes, marker):
    """Concatenate the input files and pre-tokenize."""
    all_lines = []
    consumed = 0
    for path in paths:
        budget = None if max_bytes is None else max_bytes - consumed
        if budget is not None and budget <= 0:
            break
        corpus = load_corpus(path, max_bytes=budget)
        all_lines.extend(corpus.lines)
        consumed += corpus.byte_count
    from .corpus import RawCorpus

    merged = RawCorpus(lines=tuple(all_lines), byte_count=consumed,
                       source_id=",".join(str(p) for p in paths))
    return pre_tokenize(merged, boundary_marker=marker)


def _write_vocab_tsv(vocab: Vocabulary, fileobj):
    freqs = vocab.frequencies or {}
    for tok in vocab.tokens:
        fileobj.write(f"{tok}\t{freqs.get(tok, 0)}\n")


def _read_vocab_tsv(path) -> Vocabulary:
    tokens = []
    freqs = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            tok, _, c = line.rpartition("\t")
            if not tok:
                tok, c = line, "0"
            tokens.append(tok)
            freqs[tok] = int(c)
    return Vocabulary(tokens=tuple(tokens), frequencies=freqs)


def cmd_learn_candidates(args) -> int:
    words = _load_words(args.inputs, args.max_bytes, args.word_boundary_marker)
    t0 = time.monotonic()
    candidates = learn_bpe(words, num_merges=args.candidates)
    log.info("learned %d merges in %.2fs (%d candidate tokens)",
             len(candidates.merge_rules), time.monotonic() - t0,
             len(candidates.tokens))
    with open(args.candidates_out, "w", encoding="utf-8") as f:
        write_candidates_tsv(candidates, f)
    with open(args.merges_out, "w", encoding="utf-8") as f:
        write_merges(candidates, f)
    return EXIT_OK


def _dump_plan(path, dist, plan, config):
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t" + "\t".join(dist.tokens) + "\n")
        for i, ch in enumerate(dist.chars):
            row = "\t".join(repr(x) for x in plan.matrix[i])
            f.write(f"{ch}\t{row}\n")
    sidecar = {
        "gamma": config.gamma,
        "iterations_used": plan.iterations_used,
        "marginal_violation": plan.marginal_violation,
        "converged": plan.converged,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2)


def cmd_volt(args) -> int:
    settings = {
        "subcommand": "volt",
        "schedule": args.schedule,
        "gamma": args.gamma,
        "max_iters": args.max_iters,
        "tolerance": args.tolerance,
        "epsilon": args.epsilon,
        "unbalanced_tau": args.unbalanced_tau,
        "selection": args.selection,
        "merge_order": args.merge_order,
        "candidates": args.candidates,
        "word_boundary_marker": args.word_boundary_marker,
        "schema": SCHEMA_VERSION,
    }
    digest = _config_digest(settings)
    timings = {}

    t0 = time.monotonic()
    words = _load_words(args.inputs, args.max_bytes, args.word_boundary_marker)
    timings["load_s"] = time.monotonic() - t0

    t0 = time.monotonic()
    if args.candidates_file:
        merges = open(args.merges_file, encoding="utf-8") if args.merges_file else None
        with open(args.candidates_file, encoding="utf-8") as f:
            candidates = read_candidates_tsv(f, merges)
        if merges:
            merges.close()
    else:
        candidates = learn_bpe(words, num_merges=args.candidates)
    timings["candidates_s"] = time.monotonic() - t0

    schedule = TimestepSchedule.from_spec(args.schedule)
    config = SinkhornConfig(gamma=args.gamma, max_iters=args.max_iters,
                            tolerance=args.tolerance, epsilon_relax=args.epsilon,
                            unbalanced_tau=args.unbalanced_tau)
    t0 = time.monotonic()
    report = run_volt(words, candidates, schedule, config,
                      selection=args.selection, merge_order=args.merge_order,
                      jobs=args.jobs)
    timings["solve_s"] = time.monotonic() - t0
    log.info("phase wall-clock: %s",
             " ".join(f"{k}={v:.2f}s" for k, v in timings.items()))
    log.info("selected timestep %d (size budget %d, %d tokens)",
             report.selected_timestep,
             schedule.sizes[report.selected_timestep],
             len(report.selected_vocabulary))

    if args.dump_plan:
        char_table = count_chars(words)
        _, _, plan = _solve_timestep(
            words, candidates, schedule.sizes[report.selected_timestep],
            char_table, config, args.merge_order)
        from .ot import build_distance_matrix

        dist = build_distance_matrix(
            char_table, top_candidates(candidates,
                                       schedule.sizes[report.selected_timestep]))
        _dump_plan(args.dump_plan, dist, plan, config)

    with open(args.vocab_out, "w", encoding="utf-8") as f:
        _write_vocab_tsv(report.selected_vocabulary, f)

    if args.report:
        doc = {
            "schema": SCHEMA_VERSION,
            "config_digest": digest,
            "settings": settings,
            "inputs": {str(p): _file_hash(p) for p in args.inputs},
            "schedule": list(schedule.sizes),
            "trace": [
                {
                    "timestep": e.timestep,
                    "candidate_size": e.candidate_size,
                    "vocab_size": e.vocab_size,
                    "entropy_nats": e.entropy,
                    "muv": e.muv,
                    "sinkhorn_iterations": e.sinkhorn_iterations,
                    "converged": e.converged,
                    "error": e.error,
                }
                for e in report.trace
            ],
            "selected_timestep": report.selected_timestep,
            "selected_size": schedule.sizes[report.selected_timestep],
            "selected_vocab_size": len(report.selected_vocabulary),
        }
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, ensure_ascii=False)
            f.write("\n")
    return EXIT_OK


def cmd_muv_search(args) -> int:
    words = _load_words(args.inputs, args.max_bytes, args.word_boundary_marker)
    sizes = [int(s) for s in args.sizes.split(",")]
    vocab = muv_search(words, sizes, merge_order=args.merge_order)
    with open(args.vocab_out, "w", encoding="utf-8") as f:
        _write_vocab_tsv(vocab, f)
    log.info("muv-search selected %d tokens (muv=%.6g)",
             len(vocab), vocab.provenance.get("muv", float("nan")))
    return EXIT_OK


def cmd_encode(args) -> int:
    vocab = _read_vocab_tsv(args.vocab)
    source = open(args.input, encoding="utf-8") if args.input else sys.stdin
    sink = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for line in source:
            seq = encode(line, vocab, merge_order=args.merge_order,
                         unk_token=args.unk_token)
            sink.write(" ".join(tok for word in seq.words for tok in word))
            sink.write("\n")
    finally:
        if args.input:
            source.close()
        if args.output:
            sink.close()
    return EXIT_OK


def cmd_stats(args) -> int:
    words = _load_words(args.inputs, args.max_bytes, args.word_boundary_marker)
    sizes = [int(s) for s in args.sizes.split(",")]
    sweep = bpe_sweep(words, sizes, merge_order=args.merge_order)
    rows = []
    for size, _, report in sweep:
        row = {"size": size, "entropy_nats": report.entropy,
               "avg_token_len": report.avg_token_len}
        rows.append(row)
        sys.stdout.write(json.dumps(row) + "\n")
    if args.plot:
        _plot_sweep(rows, args.plot)
    return EXIT_OK


def _plot_sweep(rows, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sizes = [r["size"] for r in rows]
    ents = [r["entropy_nats"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sizes, ents, marker="o", label="entropy")
    if len(rows) >= 2:
        muvs = [-(e1 - e0) / (s1 - s0)
                for (s0, e0), (s1, e1) in zip(zip(sizes, ents),
                                              zip(sizes[1:], ents[1:]))]
        star = 1 + max(range(len(muvs)), key=lambda i: (muvs[i], -i))
        ax.plot([sizes[star]], [ents[star]], marker="*", markersize=18,
                color="red", linestyle="none", label="max marginal utility")
    ax.set_xlabel("vocabulary size")
    ax.set_ylabel("entropy (nats/char)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otvocab",
        description="Corpus-in, vocabulary-out toolkit: optimal-transport "
                    "vocabulary construction, MUV search, and greedy "
                    "subword segmentation.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_corpus_args(p):
        p.add_argument("inputs", nargs="+", help="UTF-8 text file(s); multiple files are concatenated")
        p.add_argument("--max-bytes", type=int, default=None)
        p.add_argument("--word-boundary-marker", default="")

    p = sub.add_parser("learn-candidates", help="train BPE merge rules and rank candidates")
    add_corpus_args(p)
    p.add_argument("--candidates", type=int, default=100_000,
                   help="BPE merge budget (default 100000)")
    p.add_argument("--candidates-out", default="candidates.tsv")
    p.add_argument("--merges-out", default="merges.txt")
    p.set_defaults(func=cmd_learn_candidates)

    p = sub.add_parser("volt", help="optimal-transport vocabulary construction")
    add_corpus_args(p)
    p.add_argument("--candidates-file", default=None,
                   help="pre-learned candidate TSV; learned on the fly if omitted")
    p.add_argument("--merges-file", default=None)
    p.add_argument("--candidates", type=int, default=100_000)
    p.add_argument("--schedule", default=DEFAULT_BILINGUAL_SCHEDULE,
                   help="size schedule start:stop:step (default %(default)s)")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="token-marginal slack")
    p.add_argument("--unbalanced-tau", type=float, default=None,
                   help="enable KL-relaxed updates on the token marginal")
    p.add_argument("--selection", choices=["muv", "literal-eq3"], default="muv")
    p.add_argument("--merge-order", choices=["leftmost", "frequency"], default="leftmost")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", default=None, help="write trace JSON here")
    p.add_argument("--vocab-out", default="vocab.tsv")
    p.add_argument("--dump-plan", default=None,
                   help="dump the selected timestep's transport plan as TSV")
    p.set_defaults(func=cmd_volt)

    p = sub.add_parser("muv-search", help="BPE sweep selecting the max-MUV vocabulary")
    add_corpus_args(p)
    p.add_argument("--sizes", default=",".join(str(s) for s in DEFAULT_MUV_SEARCH_SIZES))
    p.add_argument("--merge-order", choices=["leftmost", "frequency"], default="leftmost")
    p.add_argument("--vocab-out", default="vocab.tsv")
    p.set_defaults(func=cmd_muv_search)

    p = sub.add_parser("encode", help="segment text with a vocabulary")
    p.add_argument("--vocab", required=True, help="vocabulary TSV")
    p.add_argument("--input", default=None, help="input file (default stdin)")
    p.add_argument("--output", default=None, help="output file (default stdout)")
    p.add_argument("--merge-order", choices=["leftmost", "frequency"], default="leftmost")
    p.add_argument("--unk-token", default=None)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("stats", help="entropy/size statistics over a BPE sweep")
    add_corpus_args(p)
    p.add_argument("--sizes", default=",".join(str(s) for s in DEFAULT_MUV_SEARCH_SIZES))
    p.add_argument("--merge-order", choices=["leftmost", "frequency"], default="leftmost")
    p.add_argument("--plot", default=None, help="write an entropy-vs-size plot (svg/png)")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InfeasibleTransportError, PipelineError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (OtvocabError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
