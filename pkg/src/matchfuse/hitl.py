"""Human validation: task rows, vote aggregation, confusion-matrix estimation
with bootstrap errors, and the likelihood-ratio model of output precision."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import DomainError
from .retrieval import MatchPrediction

NO_MATCH = "no-match"
CANDIDATE_CHOICES = ("c1", "c2", "c3")
MAX_CANDIDATES = 3


@dataclass
class HitlPolicy:
    """Routing band: similarity above the band auto-accepts, below auto-rejects,
    inside goes to human validation."""

    band_low: float = 0.75   # similarity below this: auto-reject
    band_high: float = 0.95  # similarity at/above this: auto-accept
    judgments_per_row: int = 3

    def __post_init__(self):
        if not 0 <= self.band_low <= self.band_high:
            raise DomainError("policy band must satisfy 0 <= low <= high")


@dataclass
class ValidationRow:
    row_id: str
    query: dict                 # offer snapshot shown to validators
    candidates: list[dict]      # up to 3 candidate snapshots, ranked
    required_votes: int = 3
    votes: list[tuple[str, str]] = field(default_factory=list)
    # experiment mode only: which displayed candidate is a true match, or None
    true_choice: str | None = None
    labeled: bool = False

    @property
    def status(self) -> str:
        return "complete" if len(self.votes) >= self.required_votes else "pending"

    @property
    def is_true_row(self) -> bool:
        return self.true_choice is not None

    def valid_choices(self) -> tuple[str, ...]:
        return CANDIDATE_CHOICES[: len(self.candidates)] + (NO_MATCH,)

    def to_dict(self) -> dict:
        return {
            "row_id": self.row_id,
            "query": self.query,
            "candidates": self.candidates,
            "required_votes": self.required_votes,
            "votes": [list(v) for v in self.votes],
            "status": self.status,
            "true_choice": self.true_choice,
            "labeled": self.labeled,
        }


def aggregate_majority(row: ValidationRow) -> str:
    """A candidate is confirmed iff it receives at least 2 votes; else no-match."""
    if row.status != "complete":
        raise DomainError(f"row {row.row_id} is incomplete; cannot aggregate")
    counts: dict[str, int] = {}
    for _, choice in row.votes:
        if choice != NO_MATCH:
            counts[choice] = counts.get(choice, 0) + 1
    for choice in sorted(counts):
        if counts[choice] >= 2:
            return choice
    return NO_MATCH


def aggregate_unanimous(row: ValidationRow) -> str:
    """Confirm only when every vote names the same candidate."""
    if row.status != "complete":
        raise DomainError(f"row {row.row_id} is incomplete; cannot aggregate")
    choices = {choice for _, choice in row.votes}
    if len(choices) == 1 and NO_MATCH not in choices:
        return next(iter(choices))
    return NO_MATCH


def aggregate_any_positive(row: ValidationRow) -> str:
    """Confirm the most-voted candidate as soon as any vote is positive."""
    if row.status != "complete":
        raise DomainError(f"row {row.row_id} is incomplete; cannot aggregate")
    counts: dict[str, int] = {}
    for _, choice in row.votes:
        if choice != NO_MATCH:
            counts[choice] = counts.get(choice, 0) + 1
    if not counts:
        return NO_MATCH
    best = max(counts.values())
    return sorted(c for c, n in counts.items() if n == best)[0]


AGGREGATION_RULES = {
    "majority": aggregate_majority,
    "unanimous": aggregate_unanimous,
    "any-positive": aggregate_any_positive,
}


@dataclass
class ConfusionEstimate:
    tpr: float
    fnr: float
    tnr: float
    fpr: float
    stderr: dict[str, float]
    n_rows: int
    n_true_rows: int
    n_false_rows: int

    def to_dict(self) -> dict:
        return {
            "tpr": self.tpr, "fnr": self.fnr, "tnr": self.tnr, "fpr": self.fpr,
            "stderr": dict(self.stderr), "n_rows": self.n_rows,
            "n_true_rows": self.n_true_rows, "n_false_rows": self.n_false_rows,
        }


def _confirmed(row: ValidationRow, rule) -> bool:
    return rule(row) != NO_MATCH


def _row_correct(row: ValidationRow, rule) -> bool:
    """Did aggregation confirm the row (any candidate) on a true-match row?

    A row counts as a true match when any shown candidate is a true match;
    confirmation of any candidate counts as a positive verdict.
    """
    return _confirmed(row, rule)


def confusion(rows: list[ValidationRow], rule_name: str = "majority",
              n_bootstrap: int = 1000, seed: int = 0) -> ConfusionEstimate:
    """TPR/FNR/TNR/FPR over labeled, complete rows; stderr by seeded bootstrap."""
    rule = AGGREGATION_RULES[rule_name]
    for row in rows:
        if row.status != "complete":
            raise DomainError(f"row {row.row_id} is incomplete")
        if not row.labeled:
            raise DomainError(f"row {row.row_id} carries no ground truth")

    truths = np.array([row.is_true_row for row in rows], dtype=bool)
    confirmed = np.array([_confirmed(row, rule) for row in rows], dtype=bool)
    n_true = int(truths.sum())
    n_false = int((~truths).sum())
    if n_true == 0 or n_false == 0:
        raise DomainError("confusion needs at least one true-match and one non-match row")

    def rates(t: np.ndarray, c: np.ndarray) -> tuple[float, float]:
        nt = t.sum()
        nf = (~t).sum()
        tpr = (c & t).sum() / nt if nt else math.nan
        fpr = (c & ~t).sum() / nf if nf else math.nan
        return float(tpr), float(fpr)

    tpr, fpr = rates(truths, confirmed)

    rng = np.random.default_rng(seed)
    boot = {"tpr": [], "fpr": []}
    n = len(rows)
    for _ in range(n_bootstrap):
        idx = rng.integers(0, n, size=n)
        bt, bf = rates(truths[idx], confirmed[idx])
        if not math.isnan(bt):
            boot["tpr"].append(bt)
        if not math.isnan(bf):
            boot["fpr"].append(bf)
    stderr = {
        "tpr": float(np.std(boot["tpr"])) if boot["tpr"] else math.nan,
        "fpr": float(np.std(boot["fpr"])) if boot["fpr"] else math.nan,
    }
    stderr["fnr"] = stderr["tpr"]
    stderr["tnr"] = stderr["fpr"]
    return ConfusionEstimate(
        tpr=tpr, fnr=1.0 - tpr, tnr=1.0 - fpr, fpr=fpr, stderr=stderr,
        n_rows=n, n_true_rows=n_true, n_false_rows=n_false)


def lr_plus(estimate: ConfusionEstimate) -> float:
    """Positive likelihood ratio TPR/FPR; math.inf when FPR is exactly 0."""
    if estimate.fpr == 0:
        return math.inf
    return estimate.tpr / estimate.fpr


def predict_hitl_precision(p_model: float, lr: float) -> float:
    """Post-validation precision: {1 + (1/p_model - 1)/LR+}^-1.

    Monotone increasing in both arguments; an infinite likelihood ratio gives
    precision 1.
    """
    if p_model <= 0 or p_model > 1:
        raise DomainError(f"p_model must be in (0, 1], got {p_model}")
    if lr <= 0:
        raise DomainError(f"LR+ must be positive, got {lr}")
    if math.isinf(lr):
        return 1.0
    return 1.0 / (1.0 + (1.0 / p_model - 1.0) / lr)


def enqueue_predictions(predictions: list[MatchPrediction], policy: HitlPolicy,
                        existing_keys: set[str] | None = None,
                        snapshots: dict[str, dict] | None = None) -> list[ValidationRow]:
    """Create rows for in-band predictions; idempotent on (query, candidates).

    A prediction is in-band when its best accepted candidate's similarity falls
    inside [band_low, band_high). ``snapshots`` optionally maps offer ids to
    display fields for the UI.
    """
    keys = existing_keys if existing_keys is not None else set()
    snapshots = snapshots or {}
    rows: list[ValidationRow] = []
    for pred in predictions:
        shown = [c for c, a in zip(pred.candidates, pred.accepted) if a][:MAX_CANDIDATES]
        if not shown:
            continue
        best = max(c.similarity for c in shown)
        if best >= policy.band_high or best < policy.band_low:
            continue
        key = pred.query_offer_id + "|" + ",".join(c.index_offer_id for c in shown)
        if key in keys:
            continue
        keys.add(key)
        rows.append(ValidationRow(
            row_id=key,
            query={"offer_id": pred.query_offer_id,
                   **snapshots.get(pred.query_offer_id, {})},
            candidates=[
                {"offer_id": c.index_offer_id, "similarity": c.similarity,
                 **snapshots.get(c.index_offer_id, {})}
                for c in shown
            ],
            required_votes=policy.judgments_per_row,
        ))
    return rows


def record_vote(row: ValidationRow, validator_id: str, choice: str) -> ValidationRow:
    """Append one vote; completion is reached at required_votes."""
    if row.status == "complete":
        raise DomainError(f"row {row.row_id} is already complete")
    if any(v == validator_id for v, _ in row.votes):
        raise DomainError(f"validator {validator_id} already voted on row {row.row_id}")
    if choice not in row.valid_choices():
        raise DomainError(f"invalid choice {choice!r} for row {row.row_id}")
    row.votes.append((validator_id, choice))
    return row


def simulate_validators(rows: list[ValidationRow], accuracy_true: float,
                        false_positive_rate: float, seed: int = 0) -> None:
    """Fill each labeled row with independent synthetic votes.

    On true-match rows a validator names the correct candidate with probability
    ``accuracy_true`` and otherwise votes no-match. On non-match rows a
    validator erroneously names a uniformly random candidate with probability
    ``false_positive_rate``.
    """
    if not 0 <= accuracy_true <= 1 or not 0 <= false_positive_rate <= 1:
        raise DomainError("vote probabilities must be in [0, 1]")
    rng = np.random.default_rng(seed)
    for row in rows:
        if not row.labeled:
            raise DomainError(f"row {row.row_id} carries no ground truth")
        options = CANDIDATE_CHOICES[: len(row.candidates)]
        for v in range(row.required_votes - len(row.votes)):
            if row.is_true_row:
                choice = row.true_choice if rng.random() < accuracy_true else NO_MATCH
            else:
                if rng.random() < false_positive_rate:
                    choice = options[rng.integers(0, len(options))]
                else:
                    choice = NO_MATCH
            record_vote(row, f"sim-{v}", choice)


def majority_tpr(p: float) -> float:
    """TPR of majority-of-3 when each vote names the true candidate w.p. p."""
    return 3 * p * p - 2 * p ** 3


def majority_fpr(q: float, n_candidates: int = 3) -> float:
    """FPR of majority-of-3 on non-match rows when each vote erroneously names
    a uniformly random candidate with probability q.

    With 3 votes, at most one candidate can reach 2 votes, so the per-candidate
    events are disjoint.
    """
    r = q / n_candidates
    per_candidate = 3 * r * r * (1 - r) + r ** 3
    return n_candidates * per_candidate


def _invert(fn, target: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """Bisection inverse of a monotone-increasing fn on [lo, hi]."""
    for _ in range(200):
        mid = (lo + hi) / 2
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def calibrate_votes(target_tpr: float, target_fpr: float,
                    n_candidates: int = 3) -> tuple[float, float]:
    """Per-vote (accuracy_true, false_positive_rate) whose majority-of-3
    aggregate hits the target row-level TPR and FPR."""
    p = _invert(majority_tpr, target_tpr)
    q = _invert(lambda x: majority_fpr(x, n_candidates), target_fpr)
    return p, q


@dataclass
class SimulationReport:
    estimate: ConfusionEstimate
    lr_plus: float
    input_precision: float
    output_precision: float
    predicted_precision: float
    n_confirmed: int

    def to_dict(self) -> dict:
        return {
            "confusion": self.estimate.to_dict(),
            "lr_plus": self.lr_plus,
            "input_precision": self.input_precision,
            "output_precision": self.output_precision,
            "predicted_precision": self.predicted_precision,
            "n_confirmed": self.n_confirmed,
        }


def run_simulation(n_rows: int, input_precision: float, accuracy_true: float,
                   false_positive_rate: float, seed: int = 0,
                   rule_name: str = "majority", n_bootstrap: int = 1000) -> SimulationReport:
    """Desk-scale reproduction of a validation experiment: build labeled rows
    at a given input precision, vote synthetically, and compare the empirical
    output precision with the likelihood-ratio prediction."""
    rng = np.random.default_rng(seed)
    rows: list[ValidationRow] = []
    for i in range(n_rows):
        is_true = rng.random() < input_precision
        true_choice = CANDIDATE_CHOICES[rng.integers(0, MAX_CANDIDATES)] if is_true else None
        rows.append(ValidationRow(
            row_id=f"row-{i}",
            query={"offer_id": f"q{i}"},
            candidates=[{"offer_id": f"i{i}-{j}", "similarity": 0.8}
                        for j in range(MAX_CANDIDATES)],
            true_choice=true_choice,
            labeled=True,
        ))
    simulate_validators(rows, accuracy_true, false_positive_rate, seed=seed + 1)

    rule = AGGREGATION_RULES[rule_name]
    estimate = confusion(rows, rule_name=rule_name, n_bootstrap=n_bootstrap, seed=seed + 2)
    confirmed_true = sum(1 for r in rows if r.is_true_row and _confirmed(r, rule))
    confirmed_false = sum(1 for r in rows if not r.is_true_row and _confirmed(r, rule))
    n_confirmed = confirmed_true + confirmed_false
    empirical_p = estimate.n_true_rows / estimate.n_rows
    output_precision = confirmed_true / n_confirmed if n_confirmed else math.nan
    return SimulationReport(
        estimate=estimate,
        lr_plus=lr_plus(estimate),
        input_precision=empirical_p,
        output_precision=output_precision,
        predicted_precision=predict_hitl_precision(empirical_p, lr_plus(estimate)),
        n_confirmed=n_confirmed,
    )
