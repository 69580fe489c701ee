"""Core entities: offers, corpora, text normalization and numerical features."""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass, field

import numpy as np

VALID_ROLES = {"train", "validation", "test-in-domain", "test-out-domain"}


class DomainError(ValueError):
    """Raised when an input value violates a documented precondition."""


def normalize_text(brand_raw: str, title_raw: str) -> str:
    """Join brand and title into one normalized text feature, brand first.

    Unicode compatibility decomposition (NFKC) + case folding, whitespace
    collapsed to single spaces. Empty inputs yield empty segments.
    """
    parts = []
    for raw in (brand_raw, title_raw):
        norm = unicodedata.normalize("NFKC", raw).casefold()
        norm = " ".join(norm.split())
        if norm:
            parts.append(norm)
    return " ".join(parts)


def normalize_brand(brand_raw: str) -> str:
    """Brand key used for blocking: same normalization as the text feature."""
    norm = unicodedata.normalize("NFKC", brand_raw).casefold()
    return " ".join(norm.split())


def numerical_features(price: float, n_sizes: int) -> np.ndarray:
    """3-vector [n_sizes, ln(n_sizes), ln(price)] of per-offer numeric signals."""
    if price <= 0:
        raise DomainError(f"price must be positive, got {price}")
    if n_sizes < 1:
        raise DomainError(f"n_sizes must be >= 1, got {n_sizes}")
    return np.array([float(n_sizes), math.log(n_sizes), math.log(price)], dtype=np.float64)


@dataclass(frozen=True)
class Offer:
    """One seller listing: embeddings, text feature, numeric signals, labels."""

    offer_id: str
    domain: str
    brand_raw: str
    title_raw: str
    price: float
    n_sizes: int
    image_embeddings: tuple  # tuple of 1-d float64 arrays, equal dimension
    text_embedding: np.ndarray
    product_id: str | None = None
    category: str = "unknown"
    text_feature: str = field(default="")
    brand_normalized: str = field(default="")

    def __post_init__(self):
        if not self.offer_id:
            raise DomainError("offer_id must be non-empty")
        if not self.domain:
            raise DomainError("domain must be non-empty")
        if len(self.image_embeddings) == 0:
            raise DomainError(f"offer {self.offer_id}: needs at least one image embedding")
        dims = {len(v) for v in self.image_embeddings}
        if len(dims) != 1:
            raise DomainError(
                f"offer {self.offer_id}: image embedding dimensions differ: {sorted(dims)}"
            )
        if self.price <= 0:
            raise DomainError(f"offer {self.offer_id}: price must be positive, got {self.price}")
        if self.n_sizes < 1:
            raise DomainError(f"offer {self.offer_id}: n_sizes must be >= 1, got {self.n_sizes}")
        if not self.text_feature:
            object.__setattr__(self, "text_feature", normalize_text(self.brand_raw, self.title_raw))
        if not self.brand_normalized:
            object.__setattr__(self, "brand_normalized", normalize_brand(self.brand_raw))

    @property
    def d_img(self) -> int:
        return len(self.image_embeddings[0])

    @property
    def d_txt(self) -> int:
        return len(self.text_embedding)

    def numerical_features(self) -> np.ndarray:
        return numerical_features(self.price, self.n_sizes)


@dataclass
class Corpus:
    """Immutable collection of offers plus split bookkeeping.

    Within one domain offer ids are unique and no two offers match each other;
    cross-domain matches are defined solely by shared product ids.
    """

    offers: list[Offer]
    role: str = "train"
    index_domain: str | None = None
    query_domain: str | None = None

    def __post_init__(self):
        if self.role not in VALID_ROLES:
            raise DomainError(f"unknown corpus role {self.role!r}")
        seen: set[tuple[str, str]] = set()
        for offer in self.offers:
            key = (offer.domain, offer.offer_id)
            if key in seen:
                raise DomainError(f"duplicate (domain, offer_id): {key}")
            seen.add(key)
        self._by_id = {o.offer_id: o for o in self.offers}
        if len(self._by_id) != len(self.offers):
            raise DomainError("offer ids must be unique across the corpus")

    def __len__(self) -> int:
        return len(self.offers)

    def __iter__(self):
        return iter(self.offers)

    def get(self, offer_id: str) -> Offer:
        return self._by_id[offer_id]

    def __contains__(self, offer_id: str) -> bool:
        return offer_id in self._by_id

    def domains(self) -> set[str]:
        return {o.domain for o in self.offers}

    def product_groups(self) -> dict[str, list[Offer]]:
        """Offers grouped by product id; unlabeled offers are excluded."""
        groups: dict[str, list[Offer]] = {}
        for offer in self.offers:
            if offer.product_id is not None:
                groups.setdefault(offer.product_id, []).append(offer)
        return groups

    def subset(self, offer_ids, role: str | None = None) -> "Corpus":
        wanted = set(offer_ids)
        return Corpus(
            offers=[o for o in self.offers if o.offer_id in wanted],
            role=role or self.role,
            index_domain=self.index_domain,
            query_domain=self.query_domain,
        )


def matching_pairs(corpus: Corpus) -> set[frozenset]:
    """All cross-domain offer-id pairs sharing a product id.

    Product ids are equivalence-class labels, so within a product group every
    cross-domain pair is a match. Within-domain pairs never match.
    """
    pairs: set[frozenset] = set()
    for _, group in corpus.product_groups().items():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                if group[i].domain != group[j].domain:
                    pairs.add(frozenset((group[i].offer_id, group[j].offer_id)))
    return pairs


def lone_offers(corpus: Corpus) -> set[str]:
    """Offer ids that appear in no matching pair."""
    paired: set[str] = set()
    for pair in matching_pairs(corpus):
        paired.update(pair)
    return {o.offer_id for o in corpus.offers} - paired
