"""Retrieval metrics: R@k, threshold-swept PR curve at k=1, AUCPR, and
per-category breakdowns."""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import DomainError
from .retrieval import MatchPrediction

OPERATING_SIMILARITY = 0.80  # reported alongside the curve for chart parity


class UndefinedMetricError(DomainError):
    """No query offer has a ground-truth match; the metric has no denominator."""


@dataclass(frozen=True)
class PRPoint:
    threshold: float  # distance threshold
    precision: float
    recall: float
    accepted_count: int


@dataclass
class EvalReport:
    recall_at: dict[int, float]
    curve: list[PRPoint]
    aucpr: float
    n_matched_queries: int
    operating_point: PRPoint | None = None
    per_category: dict[str, "EvalReport"] = field(default_factory=dict)

    def to_dict(self) -> dict:
        rec = {
            "recall_at": {str(k): v for k, v in sorted(self.recall_at.items())},
            "aucpr": self.aucpr,
            "n_matched_queries": self.n_matched_queries,
            "curve": [
                {"threshold": p.threshold, "precision": p.precision,
                 "recall": p.recall, "accepted_count": p.accepted_count}
                for p in self.curve
            ],
        }
        if self.operating_point is not None:
            p = self.operating_point
            rec["operating_point"] = {
                "similarity": 1.0 - p.threshold, "threshold": p.threshold,
                "precision": p.precision, "recall": p.recall,
                "accepted_count": p.accepted_count,
            }
        if self.per_category:
            rec["per_category"] = {c: r.to_dict() for c, r in sorted(self.per_category.items())}
        return rec


def _matched_queries(predictions: list[MatchPrediction], pairs: set[frozenset]) -> set[str]:
    in_pairs: set[str] = set()
    for pair in pairs:
        in_pairs.update(pair)
    return {p.query_offer_id for p in predictions if p.query_offer_id in in_pairs}


def recall_at_k(predictions: list[MatchPrediction], pairs: set[frozenset], k: int) -> float:
    """Share of ground-truth-matched queries whose top-k contains a true match.

    No distance threshold is applied; ranking alone decides.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    matched = _matched_queries(predictions, pairs)
    if not matched:
        raise UndefinedMetricError("no query offer has a ground-truth match")
    hits = 0
    for pred in predictions:
        if pred.query_offer_id not in matched:
            continue
        top = pred.candidates[:k]
        if any(frozenset((pred.query_offer_id, c.index_offer_id)) in pairs for c in top):
            hits += 1
    return hits / len(matched)


def pr_curve(predictions: list[MatchPrediction], pairs: set[frozenset]) -> list[PRPoint]:
    """PR curve at k=1 obtained by sweeping the distance threshold.

    Each query contributes its single nearest neighbor. The degenerate
    zero-accepted endpoint uses the precision-1 convention.
    """
    matched = _matched_queries(predictions, pairs)
    if not matched:
        raise UndefinedMetricError("no query offer has a ground-truth match")

    top1 = []  # (distance, is_true) per query that has a nearest neighbor
    for pred in predictions:
        if pred.candidates:
            c = pred.candidates[0]
            top1.append((c.distance, frozenset((pred.query_offer_id, c.index_offer_id)) in pairs))
    top1.sort(key=lambda t: t[0])

    points = [PRPoint(threshold=float("-inf"), precision=1.0, recall=0.0, accepted_count=0)]
    accepted = 0
    correct = 0
    thresholds = sorted({d for d, _ in top1})
    i = 0
    for t in thresholds:
        while i < len(top1) and top1[i][0] <= t:
            accepted += 1
            correct += top1[i][1]
            i += 1
        points.append(PRPoint(
            threshold=t,
            precision=correct / accepted if accepted else 1.0,
            recall=correct / len(matched),
            accepted_count=accepted,
        ))
    return points


def aucpr(curve: list[PRPoint]) -> float:
    """Area under the PR curve by the average-precision step convention:
    sum of (recall step) * precision, no interpolation."""
    if not curve:
        raise DomainError("empty PR curve")
    area = 0.0
    prev_recall = 0.0
    for point in curve:
        area += (point.recall - prev_recall) * point.precision
        prev_recall = point.recall
    return area


def _operating_point(curve: list[PRPoint]) -> PRPoint | None:
    """Last curve point at or below the fixed-similarity operating distance."""
    limit = 1.0 - OPERATING_SIMILARITY
    best = None
    for point in curve:
        if point.threshold <= limit:
            best = point
    return best


def evaluate(predictions: list[MatchPrediction], pairs: set[frozenset],
             ks=(1, 3)) -> EvalReport:
    curve = pr_curve(predictions, pairs)
    return EvalReport(
        recall_at={k: recall_at_k(predictions, pairs, k) for k in ks},
        curve=curve,
        aucpr=aucpr(curve),
        n_matched_queries=len(_matched_queries(predictions, pairs)),
        operating_point=_operating_point(curve),
    )


def per_category_report(predictions: list[MatchPrediction], pairs: set[frozenset],
                        categories: dict[str, str], ks=(1, 3),
                        min_matched: int = 1) -> dict[str, EvalReport]:
    """Full report per query category; sparse categories pool into "other"."""
    by_cat: dict[str, list[MatchPrediction]] = {}
    for pred in predictions:
        by_cat.setdefault(categories.get(pred.query_offer_id, "unknown"), []).append(pred)

    pooled: list[MatchPrediction] = []
    reports: dict[str, EvalReport] = {}
    for cat, preds in sorted(by_cat.items()):
        if len(_matched_queries(preds, pairs)) < min_matched:
            pooled.extend(preds)
        else:
            reports[cat] = evaluate(preds, pairs, ks)
    if pooled and _matched_queries(pooled, pairs):
        reports["other"] = evaluate(pooled, pairs, ks)
    return reports


def pr_curve_svg(curve: list[PRPoint], width: int = 640, height: int = 480) -> str:
    """Minimal standalone SVG of the PR curve with the operating point marked."""
    pad = 50
    w, h = width - 2 * pad, height - 2 * pad

    def sx(r):
        return pad + r * w

    def sy(p):
        return pad + (1.0 - p) * h

    pts = " ".join(f"{sx(p.recall):.1f},{sy(p.precision):.1f}" for p in curve)
    op = _operating_point(curve)
    marker = ""
    if op is not None:
        marker = (f'<circle cx="{sx(op.recall):.1f}" cy="{sy(op.precision):.1f}" '
                  f'r="5" fill="black"/>')
    return f"""<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">
<rect width="{width}" height="{height}" fill="white"/>
<rect x="{pad}" y="{pad}" width="{w}" height="{h}" fill="none" stroke="#999"/>
<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>
{marker}
<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle">recall</text>
<text x="15" y="{height / 2:.0f}" transform="rotate(-90 15 {height / 2:.0f})" text-anchor="middle">precision</text>
</svg>
"""
