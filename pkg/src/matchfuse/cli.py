"""Umbrella CLI: synth, ingest, train, embed, index, match, eval,
hitl-simulate, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import evaluation, io
from .config import AppConfig, ensure_data_dir, load_config
from .encoder import ProjectionHead, embed_corpus
from .model import Corpus, matching_pairs
from .retrieval import (MatchRunSummary, build_index, match_domains,
                        prediction_from_dict, prediction_to_dict)
from .synthgen import SynthConfig, SynthCorpora, generate
from .trainer import TrainConfig, history_csv, train


@click.group()
def main():
    """Product-matching pipeline and validation service."""


def _load_json_config(path, cls):
    if path is None:
        return cls()
    with open(path, encoding="utf-8") as fh:
        return cls(**json.load(fh))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="SynthConfig JSON")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def synth(config_path, out_dir):
    """Generate a synthetic corpus with train/val/test splits."""
    cfg = _load_json_config(config_path, SynthConfig)
    corpora = generate(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, corpus in corpora.as_dict().items():
        base = out / name.replace("-domain", "")
        io.write_offers(base.with_suffix(".jsonl"), corpus,
                        sidecar_path=base.with_suffix(".mfeb"))
    click.echo(f"wrote {len(corpora.train)} train / {len(corpora.validation)} val / "
               f"{len(corpora.test_in)} test-in / {len(corpora.test_out)} test-out offers "
               f"to {out}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--sidecar", type=click.Path(exists=True), default=None)
def ingest(corpus_path, sidecar):
    """Validate an offer JSONL file and print corpus statistics."""
    corpus = io.ingest_offers(corpus_path, sidecar_path=sidecar)
    pairs = matching_pairs(corpus)
    click.echo(json.dumps({
        "offers": len(corpus),
        "domains": sorted(corpus.domains()),
        "matching_pairs": len(pairs),
    }, indent=2))


@main.command(name="train")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TrainConfig JSON")
@click.option("--out", "head_path", type=click.Path(), required=True)
@click.option("--history", "history_path", type=click.Path(), default=None)
def train_cmd(corpus_path, config_path, head_path, history_path):
    """Train the projection head; history goes to CSV."""
    corpus = io.ingest_offers(corpus_path)
    cfg = _load_json_config(config_path, TrainConfig)
    result = train(corpus, cfg)
    result.head.save(head_path)
    csv = history_csv(result.history)
    if history_path:
        Path(history_path).write_text(csv)
    else:
        click.echo(csv, nl=False)
    click.echo(f"saved head to {head_path}", err=True)


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--head", "head_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def embed(corpus_path, head_path, out_path):
    """Embed a corpus; writes an id list + MFEB sidecar pair."""
    corpus = io.ingest_offers(corpus_path)
    head = ProjectionHead.load(head_path)
    embeddings = embed_corpus(corpus, head)
    ids = sorted(embeddings)
    io.write_sidecar(out_path, np.stack([embeddings[i] for i in ids]))
    Path(str(out_path) + ".ids").write_text("\n".join(ids) + "\n")
    click.echo(f"embedded {len(ids)} offers to {out_path}")


@main.command(name="index")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--head", "head_path", type=click.Path(exists=True), required=True)
def index_cmd(corpus_path, head_path):
    """Build the brand-partitioned index and print its shape."""
    corpus = io.ingest_offers(corpus_path)
    head = ProjectionHead.load(head_path)
    idx = build_index(embed_corpus(corpus, head), corpus)
    click.echo(json.dumps({
        "entries": len(idx),
        "brands": len(idx.brand_groups),
    }, indent=2))


@main.command()
@click.option("--index", "index_path", type=click.Path(exists=True), required=True,
              help="index corpus JSONL")
@click.option("--query", "query_path", type=click.Path(exists=True), required=True,
              help="query corpus JSONL")
@click.option("--head", "head_path", type=click.Path(exists=True), required=True)
@click.option("--k", default=3, show_default=True)
@click.option("--brand-sim", default=0.85, show_default=True)
@click.option("--dist-threshold", default=0.2, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def match(index_path, query_path, head_path, k, brand_sim, dist_threshold, out_path):
    """Blocked kNN matching; writes prediction JSONL."""
    index_corpus = io.ingest_offers(index_path)
    query_corpus = io.ingest_offers(query_path)
    head = ProjectionHead.load(head_path)
    index = build_index(embed_corpus(index_corpus, head), index_corpus)
    summary = MatchRunSummary()
    predictions = match_domains(query_corpus, embed_corpus(query_corpus, head), index,
                                k=k, brand_threshold=brand_sim,
                                distance_threshold=dist_threshold, summary=summary)
    with open(out_path, "w", encoding="utf-8") as fh:
        for pred in predictions:
            fh.write(json.dumps(prediction_to_dict(pred), sort_keys=True) + "\n")
    click.echo(f"{summary.n_queries} queries, {summary.n_failed} failed, "
               f"predictions in {out_path}")


@main.command(name="eval")
@click.option("--predictions", "pred_path", type=click.Path(exists=True), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True,
              help="corpus holding ground-truth product ids (index + query offers)")
@click.option("--k", "ks", default="1,3", show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--plot", "plot_path", type=click.Path(), default=None,
              help="also write an SVG PR chart")
def eval_cmd(pred_path, corpus_path, ks, out_path, plot_path):
    """Compute R@k, PR curve and AUCPR from a prediction file."""
    corpus = io.ingest_offers(corpus_path)
    pairs = matching_pairs(corpus)
    predictions = []
    with open(pred_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                predictions.append(prediction_from_dict(json.loads(line)))
    k_list = tuple(int(k) for k in ks.split(","))
    report = evaluation.evaluate(predictions, pairs, ks=k_list)
    categories = {o.offer_id: o.category for o in corpus.offers}
    report.per_category = evaluation.per_category_report(
        predictions, pairs, categories, ks=k_list)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    if plot_path:
        Path(plot_path).write_text(evaluation.pr_curve_svg(report.curve))
    click.echo(json.dumps({k: v for k, v in report.to_dict().items()
                           if k in ("aucpr", "recall_at")}, indent=2))


@main.command(name="hitl-simulate")
@click.option("--rows", default=14453, show_default=True)
@click.option("--input-precision", default=0.162, show_default=True)
@click.option("--target-tpr", default=0.794, show_default=True)
@click.option("--target-fpr", default=0.018, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--rule", default="majority", show_default=True,
              type=click.Choice(["majority", "unanimous", "any-positive"]))
def hitl_simulate(rows, input_precision, target_tpr, target_fpr, seed, rule):
    """Simulate a validation experiment with calibrated synthetic votes."""
    from .hitl import calibrate_votes, run_simulation

    p, q = calibrate_votes(target_tpr, target_fpr)
    report = run_simulation(rows, input_precision, p, q, seed=seed, rule_name=rule)
    payload = report.to_dict()
    payload["per_vote_accuracy"] = p
    payload["per_vote_false_positive_rate"] = q
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(config_path):
    """Start the validation HTTP service."""
    import uvicorn

    from .server import create_app
    from .store import CorruptLogError, ValidationStore

    config = load_config(config_path)
    data_dir = ensure_data_dir(config)
    try:
        store = ValidationStore(data_dir / "hitl")
    except CorruptLogError as exc:
        click.echo(f"refusing to start: {exc}", err=True)
        sys.exit(1)
    app = create_app(store, config)
    uvicorn.run(app, host=config.host, port=config.port)


@main.command(name="run")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--query", "query_path", type=click.Path(exists=True), required=True)
@click.option("--head", "head_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), default="run")
def run_cmd(config_path, index_path, query_path, head_path, out_dir):
    """Full pipeline: embed, index, match, evaluate, enqueue."""
    from .pipeline import StageError, run_pipeline

    config = load_config(config_path)
    index_corpus = io.ingest_offers(index_path)
    query_corpus = io.ingest_offers(query_path)
    head = ProjectionHead.load(head_path)
    try:
        report = run_pipeline(index_corpus, query_corpus, head, config, out_dir)
    except StageError as exc:
        click.echo(json.dumps({"error": "stage-failure", "stage": exc.stage,
                               "detail": str(exc.cause)}), err=True)
        sys.exit(1)
    click.echo(json.dumps(report, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
