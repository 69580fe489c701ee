"""Contrastive training of the projection head on precomputed fused inputs.

The loss is the in-batch supervised contrastive objective over unit offer
embeddings: anchors average the log-softmax of their positives' similarities
against all other batch members, lone members contribute only to the
denominators. Gradients are analytic (backprop through the normalization and
the affine head), so no autograd dependency is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .encoder import ProjectionHead, forward, fuse
from .model import Corpus, DomainError, lone_offers, matching_pairs

ROW_CHUNK = 1024  # anchors processed per tile; fixed so reductions are deterministic


@dataclass
class TrainConfig:
    temperature: float = 0.06
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 16384
    weight_decay: float = 0.01
    seed: int = 0
    lone_negative_share: float = 0.0
    output_dim: int = 192
    hidden: bool = False
    modality_mask: tuple = ("image", "text", "numerical")
    validation_fraction: float = 0.1
    eval_every: int = 1

    def __post_init__(self):
        if self.temperature <= 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")
        if self.batch_size < 2:
            raise DomainError(f"batch_size must be >= 2, got {self.batch_size}")
        if not 0.0 <= self.lone_negative_share <= 1.0:
            raise DomainError("lone_negative_share must be in [0, 1]")


@dataclass
class Batch:
    """Mini-batch of offer ids with each member's in-batch positive indices."""

    offer_ids: list[str]
    positives: list[np.ndarray]  # per member: indices of matching members

    def __len__(self):
        return len(self.offer_ids)

    def has_positive_pair(self) -> bool:
        return any(len(p) > 0 for p in self.positives)


def filter_lone_negatives(corpus: Corpus, share: float, seed: int = 0) -> Corpus:
    """Keep all paired offers and a seeded round(share * n) subsample of lone ones."""
    if not 0.0 <= share <= 1.0:
        raise DomainError("share must be in [0, 1]")
    lone = sorted(lone_offers(corpus))
    keep_count = int(round(share * len(lone)))
    rng = np.random.default_rng(seed)
    kept_lone = set(np.array(lone, dtype=object)[rng.permutation(len(lone))[:keep_count]])
    paired = {o.offer_id for o in corpus.offers} - set(lone)
    return corpus.subset(paired | kept_lone)


def _product_groups(corpus: Corpus) -> list[list[str]]:
    """Sampling groups: one per product, singletons for unlabeled/lone offers."""
    groups: dict[str, list[str]] = {}
    singles: list[list[str]] = []
    paired_products = set()
    for pid, offers in corpus.product_groups().items():
        if len(offers) > 1:
            groups[pid] = sorted(o.offer_id for o in offers)
            paired_products.update(groups[pid])
    for offer in corpus.offers:
        if offer.offer_id not in paired_products:
            singles.append([offer.offer_id])
    ordered = [groups[pid] for pid in sorted(groups)]
    ordered.extend(sorted(singles))
    return ordered


def sample_batches(corpus: Corpus, batch_size: int, seed: int) -> list[Batch]:
    """One epoch of batches: seeded product-id permutation, groups packed
    greedily without splitting. A final partial batch survives only if it
    contains at least one positive pair."""
    groups = _product_groups(corpus)
    largest = max((len(g) for g in groups), default=0)
    if largest > batch_size:
        raise DomainError(
            f"batch_size {batch_size} smaller than largest product group ({largest})")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(groups))

    batches: list[Batch] = []
    current: list[list[str]] = []
    size = 0
    for gi in order:
        group = groups[gi]
        if size + len(group) > batch_size:
            batches.append(_make_batch(current))
            current, size = [], 0
        current.append(group)
        size += len(group)
    if current:
        last = _make_batch(current)
        if last.has_positive_pair():
            batches.append(last)
    return batches


def _make_batch(groups: list[list[str]]) -> Batch:
    ids: list[str] = []
    positives: list[np.ndarray] = []
    for group in groups:
        start = len(ids)
        ids.extend(group)
        for i in range(len(group)):
            pos = [start + j for j in range(len(group)) if j != i]
            positives.append(np.array(pos, dtype=np.intp))
    return Batch(offer_ids=ids, positives=positives)


def _anchor_terms(v: np.ndarray, positives: list[np.ndarray], temperature: float):
    """Yield (chunk_start, logits, log_denominator) per anchor tile.

    logits is the (chunk, n) similarity/temperature matrix with the diagonal
    masked out; the log-denominator uses max-subtraction.
    """
    n = v.shape[0]
    for start in range(0, n, ROW_CHUNK):
        stop = min(start + ROW_CHUNK, n)
        logits = v[start:stop] @ v.T / temperature
        rows = np.arange(start, stop)
        logits[rows - start, rows] = -np.inf
        m = logits.max(axis=1, keepdims=True)
        log_denom = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
        yield start, logits, log_denom


def supcon_loss(v: np.ndarray, positives: list[np.ndarray], temperature: float) -> float:
    """In-batch contrastive loss over unit embeddings ``v`` (n, d)."""
    if not any(len(p) for p in positives):
        raise DomainError("batch has no positive pair; loss undefined")
    loss = 0.0
    for start, logits, log_denom in _anchor_terms(v, positives, temperature):
        for r in range(logits.shape[0]):
            pos = positives[start + r]
            if len(pos) == 0:
                continue
            loss -= float(np.sum(logits[r, pos] - log_denom[r])) / len(pos)
    return loss


def supcon_loss_value(head: ProjectionHead, x: np.ndarray,
                      positives: list[np.ndarray], temperature: float) -> float:
    """Loss of the head on fused inputs ``x``; used by the gradient check."""
    z = forward(head, x)
    v = z / np.linalg.norm(z, axis=1, keepdims=True)
    return supcon_loss(v, positives, temperature)


def supcon_gradient(head: ProjectionHead, x: np.ndarray,
                    positives: list[np.ndarray], temperature: float):
    """Exact parameter gradient of ``supcon_loss_value``.

    Returns (loss, grads) with grads ordered like head.parameters().
    """
    if not any(len(p) for p in positives):
        raise DomainError("batch has no positive pair; loss undefined")
    x = np.asarray(x, dtype=np.float64)
    hidden = len(head.weights) == 2

    u = x @ head.weights[0].T + head.biases[0]
    if hidden:
        h = np.maximum(u, 0.0)
        z = h @ head.weights[1].T + head.biases[1]
    else:
        z = u
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise DomainError("projection produced a zero vector; cannot normalize")
    v = z / norms

    # dL/dv via the similarity-gradient matrix G: dV = (G + G^T) V / temperature,
    # accumulated tile by tile in fixed order.
    loss = 0.0
    dv = np.zeros_like(v)
    for start, logits, log_denom in _anchor_terms(v, positives, temperature):
        g = np.zeros_like(logits)
        for r in range(logits.shape[0]):
            pos = positives[start + r]
            if len(pos) == 0:
                continue
            loss -= float(np.sum(logits[r, pos] - log_denom[r])) / len(pos)
            g[r] = np.exp(logits[r] - log_denom[r])
            g[r, start + r] = 0.0
            g[r, pos] -= 1.0 / len(pos)
        dv[start : start + logits.shape[0]] += (g @ v) / temperature
        dv += (g.T @ v[start : start + logits.shape[0]]) / temperature

    # through L2 normalization: dz_i = (dv_i - (dv_i . v_i) v_i) / ||z_i||
    dz = (dv - (dv * v).sum(axis=1, keepdims=True) * v) / norms

    if hidden:
        dw2 = dz.T @ h
        db2 = dz.sum(axis=0)
        du = (dz @ head.weights[1]) * (u > 0)
        dw1 = du.T @ x
        db1 = du.sum(axis=0)
        grads = [dw1, db1, dw2, db2]
    else:
        grads = [dz.T @ x, dz.sum(axis=0)]
    return loss, grads


class AdamW:
    """Adam with decoupled weight decay; state is plain numpy arrays."""

    def __init__(self, params: list[np.ndarray], lr: float, weight_decay: float = 0.0,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
            p -= self.lr * self.weight_decay * p


@dataclass
class EpochStats:
    epoch: int
    loss: float
    recall_at_1: float | None = None
    recall_at_3: float | None = None


@dataclass
class TrainResult:
    head: ProjectionHead
    history: list[EpochStats] = field(default_factory=list)


def split_validation(corpus: Corpus, fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Hold out a seeded fraction of product groups (pairs stay whole)."""
    groups = _product_groups(corpus)
    rng = np.random.default_rng(seed + 1)
    order = rng.permutation(len(groups))
    n_val = int(round(fraction * len(groups)))
    val_ids = {oid for gi in order[:n_val] for oid in groups[gi]}
    train_ids = {o.offer_id for o in corpus.offers} - val_ids
    return corpus.subset(train_ids, role="train"), corpus.subset(val_ids, role="validation")


def _validation_recall(embeddings: dict[str, np.ndarray], corpus: Corpus,
                       ks=(1, 3)) -> dict[int, float]:
    """R@k with each matched offer queried against all other-domain offers."""
    pairs = matching_pairs(corpus)
    partners: dict[str, set[str]] = {}
    for pair in pairs:
        a, b = tuple(pair)
        partners.setdefault(a, set()).add(b)
        partners.setdefault(b, set()).add(a)
    if not partners:
        return {k: float("nan") for k in ks}

    ids = sorted(embeddings)
    mat = np.stack([embeddings[i] for i in ids])
    domains = np.array([corpus.get(i).domain for i in ids])
    id_index = {i: r for r, i in enumerate(ids)}

    hits = {k: 0 for k in ks}
    kmax = max(ks)
    for qid, true in partners.items():
        qr = id_index[qid]
        sims = mat @ mat[qr]
        mask = domains != domains[qr]
        cand = np.nonzero(mask)[0]
        order = cand[np.argsort(-sims[cand], kind="stable")][:kmax]
        top = [ids[c] for c in order]
        for k in ks:
            if any(t in true for t in top[:k]):
                hits[k] += 1
    return {k: hits[k] / len(partners) for k in ks}


def train(corpus: Corpus, config: TrainConfig,
          validation: Corpus | None = None) -> TrainResult:
    """Train a projection head; deterministic given config.seed.

    When no validation corpus is supplied, a seeded fraction of product groups
    is held out from ``corpus``.
    """
    if not matching_pairs(corpus):
        raise DomainError("training corpus has no matching pair")

    if validation is None and config.validation_fraction > 0:
        corpus, validation = split_validation(corpus, config.validation_fraction, config.seed)

    corpus = filter_lone_negatives(corpus, config.lone_negative_share, config.seed)

    sample = corpus.offers[0]
    head = ProjectionHead.create(
        d_img=sample.d_img, d_txt=sample.d_txt, d_out=config.output_dim,
        hidden=config.hidden, modality_mask=config.modality_mask, seed=config.seed)
    head.fit_standardization(corpus)

    # fused inputs are fixed while only the head trains; compute them once
    fused = {o.offer_id: fuse(o, head) for o in corpus.offers}
    params = head.parameters()
    opt = AdamW(params, lr=config.learning_rate, weight_decay=config.weight_decay)

    history: list[EpochStats] = []
    for epoch in range(config.epochs):
        batches = sample_batches(corpus, config.batch_size, seed=config.seed * 100003 + epoch)
        epoch_loss = 0.0
        n_terms = 0
        for bi, batch in enumerate(batches):
            x = np.stack([fused[oid] for oid in batch.offer_ids])
            loss, grads = supcon_gradient(head, x, batch.positives, config.temperature)
            if not np.isfinite(loss):
                raise DomainError(f"non-finite loss at epoch {epoch}, batch {bi}")
            opt.step(grads)
            epoch_loss += loss
            n_terms += len(batch)
        stats = EpochStats(epoch=epoch, loss=epoch_loss / max(n_terms, 1))
        if validation is not None and len(validation) and (epoch + 1) % config.eval_every == 0:
            from .encoder import embed_corpus
            recall = _validation_recall(embed_corpus(validation, head), validation)
            stats.recall_at_1 = recall.get(1)
            stats.recall_at_3 = recall.get(3)
        history.append(stats)
    return TrainResult(head=head, history=history)


def history_csv(history: list[EpochStats]) -> str:
    lines = ["epoch,loss,r_at_1,r_at_3"]
    for s in history:
        r1 = "" if s.recall_at_1 is None else f"{s.recall_at_1:.6f}"
        r3 = "" if s.recall_at_3 is None else f"{s.recall_at_3:.6f}"
        lines.append(f"{s.epoch},{s.loss:.10f},{r1},{r3}")
    return "\n".join(lines) + "\n"
