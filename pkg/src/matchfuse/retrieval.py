"""Two-stage retrieval: fuzzy-brand blocking, exact cosine kNN within the
block, distance-threshold discrimination."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Corpus, DomainError, normalize_brand
from .strings import jaro_winkler


@dataclass(frozen=True)
class Candidate:
    index_offer_id: str
    distance: float  # 1 - cosine similarity, in [0, 2]

    @property
    def similarity(self) -> float:
        return 1.0 - self.distance


@dataclass
class MatchPrediction:
    query_offer_id: str
    candidates: list[Candidate]
    accepted: list[bool]
    threshold: float


class MatchIndex:
    """Immutable brand-partitioned store of unit offer embeddings."""

    def __init__(self, ids: list[str], brands: list[str], vectors: np.ndarray,
                 categories: list[str]):
        if len(set(ids)) != len(ids):
            raise DomainError("duplicate offer id in index")
        self.ids = list(ids)
        self.brands = list(brands)
        self.categories = list(categories)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.brand_groups: dict[str, np.ndarray] = {}
        by_brand: dict[str, list[int]] = {}
        for i, brand in enumerate(self.brands):
            by_brand.setdefault(brand, []).append(i)
        for brand, rows in by_brand.items():
            self.brand_groups[brand] = np.array(rows, dtype=np.intp)

    def __len__(self):
        return len(self.ids)


def build_index(embeddings: dict[str, np.ndarray], corpus: Corpus) -> MatchIndex:
    missing = [o.offer_id for o in corpus.offers if o.offer_id not in embeddings]
    if missing:
        raise DomainError(f"missing embeddings for offers: {missing[:10]}")
    ids, brands, vectors, categories = [], [], [], []
    for offer in corpus.offers:
        ids.append(offer.offer_id)
        brands.append(offer.brand_normalized)
        vectors.append(embeddings[offer.offer_id])
        categories.append(offer.category)
    mat = np.stack(vectors) if vectors else np.zeros((0, 0))
    return MatchIndex(ids=ids, brands=brands, vectors=mat, categories=categories)


def brand_block(query_brand: str, index: MatchIndex, sim_threshold: float) -> np.ndarray:
    """Row indices of entries whose brand is similar enough to the query brand."""
    q = normalize_brand(query_brand)
    rows: list[np.ndarray] = []
    for brand in sorted(index.brand_groups):
        if sim_threshold <= 0 or jaro_winkler(q, brand) >= sim_threshold:
            rows.append(index.brand_groups[brand])
    if not rows:
        return np.array([], dtype=np.intp)
    return np.sort(np.concatenate(rows))


def knn(query: np.ndarray, index: MatchIndex, block: np.ndarray, k: int) -> list[Candidate]:
    """Exact k nearest neighbors within the block, ties broken by offer id."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if len(block) == 0:
        return []
    distances = 1.0 - index.vectors[block] @ np.asarray(query, dtype=np.float64)
    order = sorted(range(len(block)), key=lambda r: (distances[r], index.ids[block[r]]))[:k]
    return [Candidate(index_offer_id=index.ids[block[r]], distance=float(distances[r]))
            for r in order]


def discriminate(candidates: list[Candidate], distance_threshold: float) -> list[bool]:
    """Accept a candidate iff its distance is at or below the threshold."""
    if not 0.0 <= distance_threshold <= 2.0:
        raise DomainError(f"distance threshold must be in [0, 2], got {distance_threshold}")
    return [c.distance <= distance_threshold for c in candidates]


@dataclass
class MatchRunSummary:
    n_queries: int = 0
    n_failed: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)


def match_domains(query_corpus: Corpus, query_embeddings: dict[str, np.ndarray],
                  index: MatchIndex, k: int = 3, brand_threshold: float = 0.85,
                  distance_threshold: float = 0.2,
                  summary: MatchRunSummary | None = None) -> list[MatchPrediction]:
    """Per-query brand_block -> knn -> discriminate; per-offer failures are
    collected in the summary instead of aborting the run."""
    predictions: list[MatchPrediction] = []
    for offer in query_corpus.offers:
        if summary is not None:
            summary.n_queries += 1
        try:
            vec = query_embeddings[offer.offer_id]
            block = brand_block(offer.brand_raw, index, brand_threshold)
            candidates = knn(vec, index, block, k)
            accepted = discriminate(candidates, distance_threshold)
        except (KeyError, DomainError) as exc:
            if summary is None:
                raise
            summary.n_failed += 1
            summary.failures.append((offer.offer_id, str(exc)))
            continue
        predictions.append(MatchPrediction(
            query_offer_id=offer.offer_id, candidates=candidates,
            accepted=accepted, threshold=distance_threshold))
    return predictions


def prediction_to_dict(pred: MatchPrediction) -> dict:
    return {
        "query_id": pred.query_offer_id,
        "candidates": [
            {"index_id": c.index_offer_id, "distance": c.distance,
             "similarity": c.similarity, "accepted": a}
            for c, a in zip(pred.candidates, pred.accepted)
        ],
        "threshold": pred.threshold,
    }


def prediction_from_dict(rec: dict) -> MatchPrediction:
    candidates = [Candidate(index_offer_id=c["index_id"], distance=c["distance"])
                  for c in rec["candidates"]]
    accepted = [bool(c["accepted"]) for c in rec["candidates"]]
    return MatchPrediction(query_offer_id=rec["query_id"], candidates=candidates,
                           accepted=accepted, threshold=rec["threshold"])
