"""End-to-end run: embed -> index -> match -> evaluate -> enqueue.

Each stage failure is reported with its stage name; artifacts produced by
earlier stages are kept on disk.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import evaluation, retrieval
from .config import AppConfig
from .encoder import ProjectionHead, embed_corpus
from .hitl import HitlPolicy
from .model import Corpus, matching_pairs
from .retrieval import MatchRunSummary, prediction_to_dict
from .store import ValidationStore


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _offer_snapshots(corpus: Corpus) -> dict[str, dict]:
    """Display fields for validation rows; price/sizes stay hidden by policy."""
    return {
        o.offer_id: {"title": o.title_raw, "brand": o.brand_raw,
                     "category": o.category, "domain": o.domain}
        for o in corpus.offers
    }


def run_pipeline(index_corpus: Corpus, query_corpus: Corpus, head: ProjectionHead,
                 config: AppConfig, out_dir, store: ValidationStore | None = None) -> dict:
    """Run the matching pipeline and return a machine-readable report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {"config": {
        "k": config.k, "brand_sim": config.brand_sim,
        "dist_threshold": config.dist_threshold, "seed": config.seed,
    }}

    try:
        index_emb = embed_corpus(index_corpus, head)
        query_emb = embed_corpus(query_corpus, head)
    except Exception as exc:
        raise StageError("encoding", exc) from exc

    try:
        index = retrieval.build_index(index_emb, index_corpus)
    except Exception as exc:
        raise StageError("indexing", exc) from exc

    try:
        summary = MatchRunSummary()
        predictions = retrieval.match_domains(
            query_corpus, query_emb, index, k=config.k,
            brand_threshold=config.brand_sim,
            distance_threshold=config.dist_threshold, summary=summary)
        pred_path = out_dir / "predictions.jsonl"
        with open(pred_path, "w", encoding="utf-8") as fh:
            for pred in predictions:
                fh.write(json.dumps(prediction_to_dict(pred), sort_keys=True) + "\n")
        report["matching"] = {
            "n_queries": summary.n_queries, "n_failed": summary.n_failed,
            "predictions_path": str(pred_path),
        }
    except Exception as exc:
        raise StageError("matching", exc) from exc

    try:
        pairs = matching_pairs(Corpus(
            offers=index_corpus.offers + [o for o in query_corpus.offers
                                          if o.offer_id not in index_corpus]))
        if pairs:
            ev = evaluation.evaluate(predictions, pairs, ks=(1, 3))
            report["evaluation"] = {
                "aucpr": ev.aucpr,
                "r_at_1": ev.recall_at[1],
                "r_at_3": ev.recall_at[3],
                "n_matched_queries": ev.n_matched_queries,
            }
        else:
            report["evaluation"] = None
    except Exception as exc:
        raise StageError("evaluation", exc) from exc

    try:
        policy = HitlPolicy(band_low=config.band_low, band_high=config.band_high,
                            judgments_per_row=config.judgments_per_row)
        snapshots = {**_offer_snapshots(index_corpus), **_offer_snapshots(query_corpus)}
        if store is not None:
            rows = store.enqueue(predictions, policy, snapshots=snapshots)
        else:
            from .hitl import enqueue_predictions
            rows = enqueue_predictions(predictions, policy, snapshots=snapshots)
        report["hitl"] = {"rows_enqueued": len(rows)}
    except Exception as exc:
        raise StageError("enqueue", exc) from exc

    report_path = out_dir / "run_report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    report["report_path"] = str(report_path)
    return report
