"""Command-line pipeline: anonymize, paraphrase, attack, sweep, audit, typechange.

Every run writes its output files plus a manifest capturing the fully
resolved configuration; `dptg rerun --manifest PATH` replays a manifest
and reproduces the outputs byte for byte. Data goes to files, progress
and warnings to stderr. Exit codes: 0 success, 1 usage error, 2 data
error, 3 audit failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .attack_harness import LabeledCorpus, Record, run_attack
from .corpus_io import (
    SchemaError,
    read_corpus,
    read_perturbed_corpus,
    records_to_rows,
    write_jsonl,
)
from .dp_softmax import (
    QualityTable,
    exponential_mechanism_pmf,
    temperature_from_epsilon,
    verify_dp_bound,
)
from .embedding_store import (
    EmbeddingFormatError,
    EmbeddingStore,
    Geometry,
    load_embeddings,
    save_embeddings,
)
from .eval_metrics import TypeLexicon, relative_gain, semantic_similarity, word_type_change_rate
from .noise_samplers import RngStream
from .synthdata import synthetic_corpus, synthetic_embeddings, synthetic_lexicon
from .toy_decoder import NgramModel, generate, perplexity, train_ngram
from .word_mechanism import (
    AnonymizedSentence,
    MechanismConfig,
    OovPolicy,
    anonymize_sentence,
    budget_report,
    detokenize,
    tokenize,
)

MECHANISMS = ("euclidean", "poincare", "paraphrase", "identity")

# Published word-type-change measurements on a full 50-d GloVe + WordNet
# setup, included in typechange reports as external reference points only;
# the synthetic store is not expected to match them.
REFERENCE_TYPE_CHANGE_RATES = [
    {"epsilon": 8.0, "rate": 0.173, "setup": "glove-50d+wordnet"},
    {"epsilon": 10.0, "rate": 0.078, "setup": "glove-50d+wordnet"},
]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_AUDIT_FAIL = 3

_DATA_ERRORS = (
    SchemaError,
    EmbeddingFormatError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    NotADirectoryError,
    KeyError,
    ValueError,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def resolve_seed(value: int | None) -> int:
    """Explicit flag wins; DPTG_SEED is the environment fallback, then 0."""
    if value is not None:
        return value
    env = os.environ.get("DPTG_SEED")
    return int(env) if env else 0


# ---------------------------------------------------------------------------
# corpus-wide mechanism application

def perturb_corpus(
    records: Sequence[Record],
    store: EmbeddingStore,
    config: MechanismConfig,
) -> tuple[list[Record], list[AnonymizedSentence]]:
    """Run the word mechanism over every record, stream id = record index."""
    out_records: list[Record] = []
    sentences: list[AnonymizedSentence] = []
    for idx, rec in enumerate(records):
        tokens = tokenize(rec.text)
        if tokens:
            sent = anonymize_sentence(tokens, store, config, RngStream(config.seed, idx))
        else:
            sent = AnonymizedSentence((), (), budget_report(0, config.epsilon))
        sentences.append(sent)
        out_records.append(
            Record(rec.id, rec.author, rec.sentiment, detokenize(sent.output_tokens))
        )
    return out_records, sentences


def paraphrase_corpus(
    records: Sequence[Record],
    model: NgramModel,
    temperature: float,
    delta_q: float,
    max_len: int,
    seed: int,
) -> tuple[list[Record], list]:
    """Regenerate every record through the decoder, stream id = record index."""
    out_records = []
    results = []
    for idx, rec in enumerate(records):
        res = generate(model, rec.text, temperature, max_len, RngStream(seed, idx), delta_q)
        results.append(res)
        out_records.append(Record(rec.id, rec.author, rec.sentiment, res.text))
    return out_records, results


# ---------------------------------------------------------------------------
# sweep

@dataclass
class SweepRow:
    epsilon: float
    author_mcc_static: float
    author_mcc_adaptive: float
    sentiment_mcc_static: float
    sentiment_mcc_adaptive: float
    gamma_static: float
    gamma_adaptive: float
    similarity: float
    perplexity: float
    type_change_rate: float | None
    mean_total_epsilon: float
    best_gamma_static: bool = False
    best_gamma_adaptive: bool = False


SWEEP_COLUMNS = [
    "epsilon",
    "author_mcc_static",
    "author_mcc_adaptive",
    "sentiment_mcc_static",
    "sentiment_mcc_adaptive",
    "gamma_static",
    "gamma_adaptive",
    "similarity",
    "perplexity",
    "type_change_rate",
    "mean_total_epsilon",
    "best_gamma_static",
    "best_gamma_adaptive",
]


@dataclass
class SweepResult:
    mechanism: str
    baseline_author_mcc: float
    baseline_sentiment_mcc: float
    rows: list[SweepRow]


def run_sweep(
    records: Sequence[Record],
    store: EmbeddingStore | None,
    mechanism: str,
    epsilon_grid: Sequence[float],
    seed: int,
    oov_policy: OovPolicy = OovPolicy.IGNORE,
    lexicon: TypeLexicon | None = None,
    delta_q: float = 1.0,
    lm_order: int = 2,
    lm_alpha: float = 0.1,
    max_len: int = 40,
    nb_n: int = 4,
    nb_alpha: float = 0.1,
    test_fraction: float = 0.2,
) -> SweepResult:
    """One mechanism, one epsilon grid: privacy, utility, and quality metrics.

    Each row perturbs the whole corpus at one budget, trains static and
    adaptive attackers for both tasks, and reports MCCs, relative gain
    against the unperturbed baselines, the similarity and perplexity
    proxies, and (for aligned word mechanisms) the type-change rate.
    """
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    if mechanism in ("euclidean", "poincare") and store is None:
        raise ValueError(f"mechanism {mechanism!r} needs an embedding store")
    grid = list(epsilon_grid) if mechanism != "identity" else [float("inf")]
    if not grid:
        raise ValueError("epsilon grid is empty")

    corpus = LabeledCorpus.build(records, seed, test_fraction)
    originals = list(records)
    baseline_author = run_attack(corpus, originals, "author", "static", nb_n, nb_alpha).mcc
    baseline_sentiment = run_attack(corpus, originals, "sentiment", "static", nb_n, nb_alpha).mcc
    if baseline_author <= 0 or baseline_sentiment <= 0:
        raise ValueError(
            "baseline classifiers are at chance level; relative gain is undefined "
            f"(author {baseline_author:.3f}, sentiment {baseline_sentiment:.3f})"
        )

    train_token_seqs = [tokenize(r.text) for r in corpus.train_records]
    lm = train_ngram([t for t in train_token_seqs if t], lm_order, lm_alpha)
    decoder_model: NgramModel | None = None
    if mechanism == "paraphrase":
        decoder_model = lm

    by_id = {r.id: r for r in originals}
    rows: list[SweepRow] = []
    for grid_idx, eps in enumerate(grid):
        type_pairs: list[tuple[str, str]] | None = None
        if mechanism == "identity":
            perturbed = originals
            mean_budget = 0.0
            type_pairs = []
            for rec in corpus.test_records:
                type_pairs.extend((t, t) for t in tokenize(rec.text))
        elif mechanism == "paraphrase":
            temperature = temperature_from_epsilon(eps, delta_q)
            perturbed, results = paraphrase_corpus(
                originals, decoder_model, temperature, delta_q, max_len, seed
            )
            mean_budget = float(np.mean([r.total_epsilon for r in results]))
        else:
            geometry = Geometry.EUCLIDEAN if mechanism == "euclidean" else Geometry.POINCARE_BALL
            config = MechanismConfig(eps, geometry, oov_policy, seed)
            perturbed, sentences = perturb_corpus(originals, store, config)
            mean_budget = float(np.mean([s.budget.total_epsilon for s in sentences]))
            test_id_set = set(corpus.test_ids)
            type_pairs = []
            for rec, sent in zip(originals, sentences):
                if rec.id in test_id_set:
                    type_pairs.extend(
                        (s.original, s.replacement)
                        for s in sent.substitutions
                        if not s.oov and s.replacement is not None
                    )

        cell = {}
        for task in ("author", "sentiment"):
            for mode in ("static", "adaptive"):
                cell[(task, mode)] = run_attack(corpus, perturbed, task, mode, nb_n, nb_alpha).mcc

        perturbed_by_id = {r.id: r for r in perturbed}
        sims = []
        ppls = []
        for rec in corpus.test_records:
            pert_text = perturbed_by_id[rec.id].text
            if store is not None:
                orig_tokens = tokenize(rec.text)
                pert_tokens = tokenize(pert_text)
                try:
                    sims.append(semantic_similarity(orig_tokens, pert_tokens, store))
                except ValueError:
                    pass  # no in-vocabulary overlap with the store
            if pert_text.strip():
                ppls.append(perplexity(lm, pert_text))
        similarity = float(np.mean(sims)) if sims else float("nan")
        ppl = float(np.mean(ppls)) if ppls else float("nan")

        rate: float | None = None
        if lexicon is not None and type_pairs is not None:
            rate = word_type_change_rate(type_pairs, lexicon).rate

        rows.append(
            SweepRow(
                epsilon=eps,
                author_mcc_static=cell[("author", "static")],
                author_mcc_adaptive=cell[("author", "adaptive")],
                sentiment_mcc_static=cell[("sentiment", "static")],
                sentiment_mcc_adaptive=cell[("sentiment", "adaptive")],
                gamma_static=relative_gain(
                    baseline_author,
                    baseline_sentiment,
                    cell[("author", "static")],
                    cell[("sentiment", "static")],
                ),
                gamma_adaptive=relative_gain(
                    baseline_author,
                    baseline_sentiment,
                    cell[("author", "adaptive")],
                    cell[("sentiment", "adaptive")],
                ),
                similarity=similarity,
                perplexity=ppl,
                type_change_rate=rate,
                mean_total_epsilon=mean_budget,
            )
        )
        _log(f"sweep[{mechanism}] eps={eps:g}: " + ", ".join(
            f"{t[:4]}-{m[:4]}={cell[(t, m)]:.3f}" for t in ("author", "sentiment") for m in ("static", "adaptive")
        ))

    best_static = max(range(len(rows)), key=lambda i: rows[i].gamma_static)
    best_adaptive = max(range(len(rows)), key=lambda i: rows[i].gamma_adaptive)
    rows[best_static].best_gamma_static = True
    rows[best_adaptive].best_gamma_adaptive = True
    return SweepResult(mechanism, baseline_author, baseline_sentiment, rows)


def write_sweep_csv(path: str | Path, result: SweepResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in result.rows:
            writer.writerow(
                [
                    repr(row.epsilon),
                    repr(row.author_mcc_static),
                    repr(row.author_mcc_adaptive),
                    repr(row.sentiment_mcc_static),
                    repr(row.sentiment_mcc_adaptive),
                    repr(row.gamma_static),
                    repr(row.gamma_adaptive),
                    repr(row.similarity),
                    repr(row.perplexity),
                    "" if row.type_change_rate is None else repr(row.type_change_rate),
                    repr(row.mean_total_epsilon),
                    int(row.best_gamma_static),
                    int(row.best_gamma_adaptive),
                ]
            )


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    """Parse a sweep CSV back into rows (round-trip counterpart of the writer)."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_COLUMNS:
            raise SchemaError(f"unexpected sweep columns {reader.fieldnames}")
        for rec in reader:
            rows.append(
                SweepRow(
                    epsilon=float(rec["epsilon"]),
                    author_mcc_static=float(rec["author_mcc_static"]),
                    author_mcc_adaptive=float(rec["author_mcc_adaptive"]),
                    sentiment_mcc_static=float(rec["sentiment_mcc_static"]),
                    sentiment_mcc_adaptive=float(rec["sentiment_mcc_adaptive"]),
                    gamma_static=float(rec["gamma_static"]),
                    gamma_adaptive=float(rec["gamma_adaptive"]),
                    similarity=float(rec["similarity"]),
                    perplexity=float(rec["perplexity"]),
                    type_change_rate=(
                        None if rec["type_change_rate"] == "" else float(rec["type_change_rate"])
                    ),
                    mean_total_epsilon=float(rec["mean_total_epsilon"]),
                    best_gamma_static=rec["best_gamma_static"] == "1",
                    best_gamma_adaptive=rec["best_gamma_adaptive"] == "1",
                )
            )
    return rows


# ---------------------------------------------------------------------------
# typechange

def run_typechange(
    store: EmbeddingStore,
    lexicon: TypeLexicon,
    epsilon_grid: Sequence[float],
    samples: int,
    seed: int,
    oov_policy: OovPolicy = OovPolicy.IGNORE,
) -> dict:
    """Perturb a seeded token sample once per budget and tally type changes."""
    if not epsilon_grid:
        raise ValueError("epsilon grid is empty")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if len(lexicon) == 0:
        raise ValueError("lexicon is empty")
    eligible = sorted(set(store.words) & set(lexicon.words()))
    if not eligible:
        raise ValueError("lexicon and vocabulary do not overlap")
    with_replacement = len(eligible) < samples
    gen = RngStream(seed, stream_id=0).generator
    picks = gen.choice(len(eligible), size=samples, replace=with_replacement)
    tokens = [eligible[int(i)] for i in picks]

    results = []
    for grid_idx, eps in enumerate(epsilon_grid):
        config = MechanismConfig(eps, store.geometry, oov_policy, seed)
        sent = anonymize_sentence(tokens, store, config, RngStream(seed, grid_idx + 1))
        pairs = [
            (s.original, s.replacement)
            for s in sent.substitutions
            if not s.oov and s.replacement is not None
        ]
        report = word_type_change_rate(pairs, lexicon)
        results.append({"epsilon": eps, **report.as_dict()})
    return {
        "samples": samples,
        "sampled_with_replacement": with_replacement,
        "eligible_tokens": len(eligible),
        "results": results,
        "reference": REFERENCE_TYPE_CHANGE_RATES,
    }


# ---------------------------------------------------------------------------
# manifests

def _write_manifest(command: str, options: dict, output: str | Path, stats: dict | None = None) -> None:
    manifest = {
        "tool": "dptg",
        "version": __version__,
        "command": command,
        "options": options,
    }
    if stats is not None:
        manifest["stats"] = stats
    path = Path(str(output) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _opts(args: argparse.Namespace, keys: Sequence[str]) -> dict:
    out = {}
    for k in keys:
        v = getattr(args, k)
        if isinstance(v, Path):
            v = str(Path(v).resolve())
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# command handlers

def cmd_anonymize(args) -> int:
    seed = resolve_seed(args.seed)
    records = read_corpus(args.dataset, args.sentiment_scale)
    store, report = load_embeddings(args.embeddings, args.geometry, lowercase=not args.no_lowercase)
    if report.rescaled:
        _log(f"embeddings: rescaled {report.rescaled} row(s) into the unit ball")
    config = MechanismConfig(args.epsilon, Geometry(args.geometry), OovPolicy(args.oov_policy), seed)
    perturbed, sentences = perturb_corpus(records, store, config)
    violations = sum(1 for s in sentences if s.budget.dp_violation)
    removed = sum(
        sum(1 for sub in s.substitutions if sub.oov and sub.replacement is None)
        for s in sentences
    )
    rows = []
    for rec, new, sent in zip(records, perturbed, sentences):
        rows.append(
            {
                "id": rec.id,
                "author": rec.author,
                "sentiment": rec.sentiment,
                "text": rec.text,
                "anonymized_text": new.text,
                "substitutions": [s.as_dict() for s in sent.substitutions],
                "budget": sent.budget.as_dict(),
            }
        )
    write_jsonl(args.output, rows)
    if violations:
        _log(
            f"warning: {violations} record(s) contain out-of-vocabulary tokens passed "
            "through unperturbed; those tokens carry no privacy guarantee"
        )
    if removed:
        _log(f"removed {removed} out-of-vocabulary token(s) under the remove policy")
    _write_manifest(
        "anonymize",
        dict(
            _opts(args, ["dataset", "embeddings", "output"]),
            epsilon=args.epsilon,
            geometry=args.geometry,
            oov_policy=args.oov_policy,
            seed=seed,
            sentiment_scale=args.sentiment_scale,
            no_lowercase=args.no_lowercase,
        ),
        args.output,
        stats={
            "records": len(rows),
            "oov_passthrough_total": sum(s.budget.oov_passthrough_count for s in sentences),
            "oov_removed_total": removed,
            "dp_violation_records": violations,
        },
    )
    _log(f"anonymize: wrote {len(rows)} records to {args.output}")
    return EXIT_OK


def cmd_paraphrase(args) -> int:
    seed = resolve_seed(args.seed)
    records = read_corpus(args.dataset, args.sentiment_scale)
    if args.model:
        model = NgramModel.load(args.model)
    else:
        corpus_records = read_corpus(args.train_on, args.sentiment_scale)
        seqs = [tokenize(r.text) for r in corpus_records]
        model = train_ngram([s for s in seqs if s], args.order, args.lm_alpha)
        if args.save_model:
            model.save(args.save_model)
            _log(f"paraphrase: saved n-gram model to {args.save_model}")
    perturbed, results = paraphrase_corpus(
        records, model, args.temperature, args.dq, args.max_len, seed
    )
    rows = []
    for rec, new, res in zip(records, perturbed, results):
        rows.append(
            {
                "id": rec.id,
                "author": rec.author,
                "sentiment": rec.sentiment,
                "text": rec.text,
                "anonymized_text": new.text,
                "budget": {
                    "per_step_epsilon": res.per_step_epsilon,
                    "generated_tokens": res.n,
                    "total_epsilon": res.total_epsilon,
                    "temperature": res.temperature,
                },
            }
        )
    write_jsonl(args.output, rows)
    _write_manifest(
        "paraphrase",
        dict(
            _opts(args, ["dataset", "output"]),
            model=str(Path(args.model).resolve()) if args.model else None,
            train_on=str(Path(args.train_on).resolve()) if args.train_on else None,
            save_model=str(Path(args.save_model).resolve()) if args.save_model else None,
            temperature=args.temperature,
            dq=args.dq,
            max_len=args.max_len,
            order=args.order,
            lm_alpha=args.lm_alpha,
            seed=seed,
            sentiment_scale=args.sentiment_scale,
        ),
        args.output,
    )
    _log(f"paraphrase: wrote {len(rows)} records to {args.output}")
    return EXIT_OK


def cmd_attack(args) -> int:
    seed = resolve_seed(args.seed)
    records = read_corpus(args.dataset, args.sentiment_scale)
    perturbed = read_perturbed_corpus(args.perturbed, args.sentiment_scale)
    corpus = LabeledCorpus.build(records, seed, args.test_fraction)
    result = run_attack(corpus, perturbed, args.task, args.mode, args.ngram, args.nb_alpha)
    Path(args.output).write_text(json.dumps(result.as_dict(), indent=2, sort_keys=True) + "\n")
    _write_manifest(
        "attack",
        dict(
            _opts(args, ["dataset", "perturbed", "output"]),
            task=args.task,
            mode=args.mode,
            ngram=args.ngram,
            nb_alpha=args.nb_alpha,
            test_fraction=args.test_fraction,
            seed=seed,
            sentiment_scale=args.sentiment_scale,
        ),
        args.output,
    )
    _log(f"attack: {args.task}/{args.mode} MCC = {result.mcc:.4f}")
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"bad epsilon grid {text!r}") from None
    if not grid or any(e <= 0 for e in grid):
        raise ValueError("epsilon grid entries must be positive")
    return grid


def cmd_sweep(args) -> int:
    seed = resolve_seed(args.seed)
    records = read_corpus(args.dataset, args.sentiment_scale)
    store = None
    if args.embeddings:
        geometry = Geometry.POINCARE_BALL if args.mechanism == "poincare" else Geometry.EUCLIDEAN
        store, _ = load_embeddings(args.embeddings, geometry, lowercase=not args.no_lowercase)
    lexicon = TypeLexicon.load_tsv(args.lexicon) if args.lexicon else None
    result = run_sweep(
        records,
        store,
        args.mechanism,
        _parse_grid(args.epsilon_grid),
        seed,
        oov_policy=OovPolicy(args.oov_policy),
        lexicon=lexicon,
        delta_q=args.dq,
        lm_order=args.lm_order,
        lm_alpha=args.lm_alpha,
        max_len=args.max_len,
        nb_n=args.ngram,
        nb_alpha=args.nb_alpha,
        test_fraction=args.test_fraction,
    )
    write_sweep_csv(args.output, result)
    _write_manifest(
        "sweep",
        dict(
            _opts(args, ["dataset", "output"]),
            embeddings=str(Path(args.embeddings).resolve()) if args.embeddings else None,
            lexicon=str(Path(args.lexicon).resolve()) if args.lexicon else None,
            mechanism=args.mechanism,
            epsilon_grid=args.epsilon_grid,
            oov_policy=args.oov_policy,
            dq=args.dq,
            lm_order=args.lm_order,
            lm_alpha=args.lm_alpha,
            max_len=args.max_len,
            ngram=args.ngram,
            nb_alpha=args.nb_alpha,
            test_fraction=args.test_fraction,
            seed=seed,
            sentiment_scale=args.sentiment_scale,
            no_lowercase=args.no_lowercase,
        ),
        args.output,
    )
    _log(
        f"sweep: baselines author={result.baseline_author_mcc:.3f} "
        f"sentiment={result.baseline_sentiment_mcc:.3f}; wrote {len(result.rows)} rows "
        f"to {args.output}"
    )
    return EXIT_OK


def cmd_audit(args) -> int:
    table = QualityTable.from_json_dict(json.loads(Path(args.table).read_text()))
    mech_eps = args.mechanism_epsilon if args.mechanism_epsilon is not None else args.epsilon
    pmf = np.vstack([exponential_mechanism_pmf(table, x, mech_eps) for x in table.inputs])
    report = verify_dp_bound(table, args.epsilon, pmf=pmf)
    payload = dict(report.as_dict(), mechanism_epsilon=mech_eps, delta_q=table.sensitivity())
    Path(args.output).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_manifest(
        "audit",
        dict(
            _opts(args, ["table", "output"]),
            epsilon=args.epsilon,
            mechanism_epsilon=args.mechanism_epsilon,
        ),
        args.output,
    )
    if report.passed:
        _log(f"audit: PASS (max ratio {report.max_ratio:.6g} <= bound {report.bound:.6g})")
        return EXIT_OK
    _log(
        f"audit: FAIL (max ratio {report.max_ratio:.6g} > bound {report.bound:.6g} "
        f"at pair {report.worst_pair} output {report.worst_output!r})"
    )
    return EXIT_AUDIT_FAIL


def cmd_typechange(args) -> int:
    seed = resolve_seed(args.seed)
    store, _ = load_embeddings(args.embeddings, args.geometry, lowercase=not args.no_lowercase)
    lexicon = TypeLexicon.load_tsv(args.lexicon)
    payload = run_typechange(
        store,
        lexicon,
        _parse_grid(args.epsilon_grid),
        args.samples,
        seed,
        OovPolicy(args.oov_policy),
    )
    Path(args.output).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if payload["sampled_with_replacement"]:
        _log(
            f"warning: only {payload['eligible_tokens']} tokens in lexicon/vocabulary "
            f"intersection; sampled {args.samples} with replacement"
        )
    _write_manifest(
        "typechange",
        dict(
            _opts(args, ["embeddings", "lexicon", "output"]),
            epsilon_grid=args.epsilon_grid,
            samples=args.samples,
            geometry=args.geometry,
            oov_policy=args.oov_policy,
            seed=seed,
            no_lowercase=args.no_lowercase,
        ),
        args.output,
    )
    rates = ", ".join(f"{r['epsilon']:g}: {r['rate']}" for r in payload["results"])
    _log(f"typechange: rates by epsilon: {rates}")
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = resolve_seed(args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, vocab = synthetic_corpus(
        n_authors=args.authors, records_per_author=args.records_per_author, seed=seed
    )
    store = synthetic_embeddings(vocab.all_words, dim=args.dim, geometry=args.geometry, seed=seed)
    lexicon = synthetic_lexicon(vocab.all_words, seed=seed)
    corpus_path = out_dir / "corpus.jsonl"
    embeddings_path = out_dir / "embeddings.txt"
    lexicon_path = out_dir / "lexicon.tsv"
    write_jsonl(corpus_path, records_to_rows(records))
    save_embeddings(store, embeddings_path)
    lexicon.save_tsv(lexicon_path)
    _write_manifest(
        "synth",
        {
            "out_dir": str(out_dir.resolve()),
            "authors": args.authors,
            "records_per_author": args.records_per_author,
            "dim": args.dim,
            "geometry": args.geometry,
            "seed": seed,
        },
        out_dir / "synth",
    )
    _log(
        f"synth: wrote {corpus_path} ({len(records)} records), "
        f"{embeddings_path} ({len(store)} words, dim {store.dim}), {lexicon_path}"
    )
    return EXIT_OK


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    if manifest.get("tool") != "dptg":
        raise ValueError("not a dptg manifest")
    command = manifest["command"]
    options = manifest["options"]
    if command not in _RERUNNABLE:
        raise ValueError(f"manifest command {command!r} cannot be re-run")
    handler_argv = [command]
    for key, value in options.items():
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                handler_argv.append(flag)
        else:
            handler_argv.extend([flag, str(value)])
    _log(f"rerun: dptg {' '.join(handler_argv)}")
    return main(handler_argv)


_RERUNNABLE = {"anonymize", "paraphrase", "attack", "sweep", "audit", "typechange", "synth"}


# ---------------------------------------------------------------------------
# parser

def _add_seed(p):
    p.add_argument("--seed", type=int, default=None, help="run seed (default: DPTG_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dptg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dptg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("anonymize", help="word-level embedding perturbation over a corpus")
    p.add_argument("--dataset", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--geometry", choices=[g.value for g in Geometry], default="euclidean")
    p.add_argument("--oov-policy", choices=[o.value for o in OovPolicy], default="ignore")
    p.add_argument("--sentiment-scale", type=int, choices=[5, 10], default=None)
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--output", required=True)
    _add_seed(p)
    p.set_defaults(handler=cmd_anonymize)

    p = sub.add_parser("paraphrase", help="regenerate a corpus through the DP decoder")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", default=None, help="trained n-gram model JSON")
    p.add_argument("--train-on", default=None, help="train a model on this corpus instead")
    p.add_argument("--save-model", default=None)
    p.add_argument("--temperature", type=float, required=True)
    p.add_argument("--dq", type=float, default=1.0, help="score sensitivity used for budgeting")
    p.add_argument("--max-len", type=int, default=40)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--lm-alpha", type=float, default=0.1)
    p.add_argument("--sentiment-scale", type=int, choices=[5, 10], default=None)
    p.add_argument("--output", required=True)
    _add_seed(p)
    p.set_defaults(handler=cmd_paraphrase)

    p = sub.add_parser("attack", help="train/evaluate one deanonymization or utility attack")
    p.add_argument("--dataset", required=True)
    p.add_argument("--perturbed", required=True)
    p.add_argument("--task", choices=["author", "sentiment"], required=True)
    p.add_argument("--mode", choices=["static", "adaptive"], required=True)
    p.add_argument("--ngram", type=int, default=4)
    p.add_argument("--nb-alpha", type=float, default=0.1)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--sentiment-scale", type=int, choices=[5, 10], default=None)
    p.add_argument("--output", required=True)
    _add_seed(p)
    p.set_defaults(handler=cmd_attack)

    p = sub.add_parser("sweep", help="full privacy/utility grid for one mechanism")
    p.add_argument("--dataset", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--mechanism", choices=list(MECHANISMS), required=True)
    p.add_argument("--epsilon-grid", default="1,4,16", help="comma-separated budgets")
    p.add_argument("--oov-policy", choices=[o.value for o in OovPolicy], default="ignore")
    p.add_argument("--lexicon", default=None)
    p.add_argument("--dq", type=float, default=1.0)
    p.add_argument("--lm-order", type=int, default=2)
    p.add_argument("--lm-alpha", type=float, default=0.1)
    p.add_argument("--max-len", type=int, default=40)
    p.add_argument("--ngram", type=int, default=4)
    p.add_argument("--nb-alpha", type=float, default=0.1)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--sentiment-scale", type=int, choices=[5, 10], default=None)
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--output", required=True)
    _add_seed(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("audit", help="exhaustive indistinguishability-bound check")
    p.add_argument("--table", required=True, help="quality table JSON")
    p.add_argument("--epsilon", type=float, required=True, help="budget the bound is checked at")
    p.add_argument(
        "--mechanism-epsilon",
        type=float,
        default=None,
        help="budget the audited mechanism was built for (default: --epsilon)",
    )
    p.add_argument("--output", required=True)
    p.set_defaults(handler=cmd_audit)

    p = sub.add_parser("typechange", help="word-type-change rate across budgets")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--epsilon-grid", default="2,8,20")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--geometry", choices=[g.value for g in Geometry], default="euclidean")
    p.add_argument("--oov-policy", choices=[o.value for o in OovPolicy], default="ignore")
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--output", required=True)
    _add_seed(p)
    p.set_defaults(handler=cmd_typechange)

    p = sub.add_parser("synth", help="materialize the synthetic corpus, embeddings, and lexicon")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--authors", type=int, default=4)
    p.add_argument("--records-per-author", type=int, default=500)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--geometry", choices=[g.value for g in Geometry], default="euclidean")
    _add_seed(p)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("rerun", help="replay a previous run from its manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(handler=cmd_rerun)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _DATA_ERRORS as exc:
        _log(f"dptg {args.command}: error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
