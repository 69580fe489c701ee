"""Ablation protocols on the synthetic corpus: raw-vs-trained retrieval,
lone-negative share sweep, and batch-size sweep.

The batch-size sweep holds the optimizer step count fixed across batch sizes
so runs differ only in how many negatives each anchor sees. Batch sizes are
capped at 16k: beyond ~32k the contrastive loss is known to fluctuate heavily
during training even at reduced learning rates, so larger values are not part
of the sweep.
"""

from __future__ import annotations

import math

import numpy as np

from . import evaluation
from .encoder import embed_corpus, pool_images
from .model import Corpus, matching_pairs, lone_offers
from .retrieval import Candidate, MatchPrediction
from .trainer import TrainConfig, train

MAX_SWEEP_BATCH = 16384


def raw_embeddings(corpus: Corpus) -> dict[str, np.ndarray]:
    """Untrained baseline: normalized concatenation of pooled image and text
    embeddings (numerical features omitted; they have no natural unit scale)."""
    out: dict[str, np.ndarray] = {}
    for offer in corpus:
        v = np.concatenate([pool_images(offer.image_embeddings), offer.text_embedding])
        out[offer.offer_id] = v / np.linalg.norm(v)
    return out


def cross_domain_predictions(embeddings: dict[str, np.ndarray], corpus: Corpus,
                             k: int = 3) -> list[MatchPrediction]:
    """Each ground-truth-matched offer queries all other-domain offers; exact
    top-k by distance with id tie-break."""
    pairs = matching_pairs(corpus)
    matched: set[str] = set()
    for pair in pairs:
        matched.update(pair)
    ids = sorted(embeddings)
    mat = np.stack([embeddings[i] for i in ids])
    domains = np.array([corpus.get(i).domain for i in ids])
    row_of = {i: r for r, i in enumerate(ids)}

    predictions = []
    for qid in sorted(matched):
        r = row_of[qid]
        distances = 1.0 - mat @ mat[r]
        cand_rows = np.nonzero(domains != domains[r])[0]
        order = sorted(cand_rows, key=lambda c: (distances[c], ids[c]))[:k]
        predictions.append(MatchPrediction(
            query_offer_id=qid,
            candidates=[Candidate(ids[c], float(distances[c])) for c in order],
            accepted=[True] * len(order),
            threshold=2.0,
        ))
    return predictions


def retrieval_scores(embeddings: dict[str, np.ndarray], corpus: Corpus) -> dict:
    preds = cross_domain_predictions(embeddings, corpus)
    report = evaluation.evaluate(preds, matching_pairs(corpus), ks=(1, 3))
    return {"r_at_1": report.recall_at[1], "r_at_3": report.recall_at[3],
            "aucpr": report.aucpr}


def trained_vs_raw(train_corpus: Corpus, eval_corpora: dict[str, Corpus],
                   config: TrainConfig) -> dict:
    """Retrieval scores of a trained head against the raw-embedding baseline."""
    result = train(train_corpus, config, validation=None)
    out: dict = {}
    for name, corpus in eval_corpora.items():
        out[name] = {
            "raw": retrieval_scores(raw_embeddings(corpus), corpus),
            "trained": retrieval_scores(embed_corpus(corpus, result.head), corpus),
        }
    return out


def _epochs_for_steps(target_steps: int, n_offers: int, batch_size: int) -> int:
    steps_per_epoch = max(1, math.ceil(n_offers / batch_size))
    return max(1, round(target_steps / steps_per_epoch))


def lone_negative_sweep(train_corpus: Corpus, val_corpus: Corpus,
                        shares=(0.0, 1.0), seeds=(0, 1, 2),
                        batch_size: int = 512, epochs: int = 20) -> dict[float, float]:
    """Median validation AUCPR per lone-negative share.

    The share=0 run uses a smaller batch so both settings see the same number
    of positive pairs per batch.
    """
    n_all = len(train_corpus)
    n_paired = n_all - len(lone_offers(train_corpus))
    results: dict[float, float] = {}
    for share in shares:
        # a batch of size B from a population with paired fraction f holds
        # ~B*f paired offers; scale B so that product is constant across shares
        kept = n_paired + share * (n_all - n_paired)
        bs = max(2, int(round(batch_size * kept / n_all)))
        scores = []
        for seed in seeds:
            cfg = TrainConfig(epochs=epochs, batch_size=bs, seed=seed,
                              lone_negative_share=share, validation_fraction=0.0,
                              eval_every=10 ** 9)
            result = train(train_corpus, cfg, validation=None)
            scores.append(retrieval_scores(
                embed_corpus(val_corpus, result.head), val_corpus)["aucpr"])
        results[share] = float(np.median(scores))
    return results


def batch_size_sweep(train_corpus: Corpus, val_corpus: Corpus,
                     batch_sizes=(256, 4096), seeds=(0, 1, 2),
                     target_steps: int = 60) -> dict[int, float]:
    """Median validation AUCPR per batch size at a fixed optimizer step count."""
    n_paired = len(train_corpus) - len(lone_offers(train_corpus))
    results: dict[int, float] = {}
    for bs in batch_sizes:
        if bs > MAX_SWEEP_BATCH:
            raise ValueError(f"batch size {bs} beyond the supported sweep range")
        epochs = _epochs_for_steps(target_steps, n_paired, bs)
        scores = []
        for seed in seeds:
            cfg = TrainConfig(epochs=epochs, batch_size=bs, seed=seed,
                              lone_negative_share=0.0, validation_fraction=0.0,
                              eval_every=10 ** 9)
            result = train(train_corpus, cfg, validation=None)
            scores.append(retrieval_scores(
                embed_corpus(val_corpus, result.head), val_corpus)["aucpr"])
        results[bs] = float(np.median(scores))
    return results
