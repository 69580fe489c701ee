"""Deterministic synthetic corpus generator.

Products get latent image/text unit vectors; each offer observes the latent
plus a fixed per-domain offset and per-image noise, re-normalized. Lone
negatives come from fresh latents. Generation order stands in for creation
date: the tail of the product list forms the test period, and one domain is
held out entirely for the out-domain query set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Corpus, DomainError, Offer

PARENT_BRANDS = [
    "orion", "kestrel", "halcyon", "verity", "nimbus", "ardent",
    "solstice", "meridian", "cobalt", "fable",
]
SUB_BRAND_SUFFIXES = ["originals", "terra", "studio", "sport", "kids"]
CATEGORIES = ["dress", "shirt", "trousers", "shoes", "jacket", "accessory"]


@dataclass
class SynthConfig:
    n_products: int = 1000
    n_domains: int = 3
    d_img: int = 32
    d_txt: int = 16
    domain_shift_scale: float = 0.8
    noise_scale: float = 0.35
    text_noise_scale: float = 0.5
    lone_negative_fraction: float = 0.3   # train-corpus share of lone offers
    test_lone_fraction: float = 0.7       # index offers without a query match
    images_per_offer_mean: float = 4.5
    images_per_offer_sd: float = 2.0
    price_log_mean: float = 3.6
    price_log_sd: float = 0.5
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.n_domains < 3:
            raise DomainError("need >= 3 domains: index, in-domain query, out-domain query")
        if self.domain_shift_scale < 0 or self.noise_scale < 0:
            raise DomainError("scales must be >= 0")
        for frac in (self.lone_negative_fraction, self.test_lone_fraction, self.train_fraction):
            if not 0.0 <= frac <= 1.0:
                raise DomainError("fractions must be in [0, 1]")


@dataclass
class SynthCorpora:
    train: Corpus
    validation: Corpus
    test_in: Corpus
    test_out: Corpus

    def as_dict(self) -> dict[str, Corpus]:
        return {"train": self.train, "validation": self.validation,
                "test-in-domain": self.test_in, "test-out-domain": self.test_out}


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


@dataclass
class _Product:
    pid: str
    latent_img: np.ndarray
    latent_txt: np.ndarray
    brand_variants: list[str]
    category: str
    price: float
    n_sizes: int


def _make_product(cfg: SynthConfig, idx: int, lone: bool = False) -> _Product:
    rng = np.random.default_rng([cfg.seed, 7 if lone else 3, idx])
    parent = PARENT_BRANDS[rng.integers(0, len(PARENT_BRANDS))]
    variants = [parent]
    if rng.random() < 0.4:
        variants.append(parent + " " + SUB_BRAND_SUFFIXES[rng.integers(0, len(SUB_BRAND_SUFFIXES))])
    return _Product(
        pid=("lone" if lone else "p") + str(idx),
        latent_img=_unit(rng.standard_normal(cfg.d_img)),
        latent_txt=_unit(rng.standard_normal(cfg.d_txt)),
        brand_variants=variants,
        category=CATEGORIES[rng.integers(0, len(CATEGORIES))],
        price=float(np.exp(rng.normal(cfg.price_log_mean, cfg.price_log_sd))),
        n_sizes=int(rng.integers(1, 11)),
    )


def _make_offer(cfg: SynthConfig, product: _Product, domain_idx: int,
                offsets_img: np.ndarray, offsets_txt: np.ndarray) -> Offer:
    # stable across processes, unlike hash() on strings
    pid_key = int.from_bytes(product.pid.encode(), "little") % (2 ** 31)
    rng = np.random.default_rng([cfg.seed, 11, domain_idx, pid_key])
    n_images = max(1, int(round(rng.normal(cfg.images_per_offer_mean, cfg.images_per_offer_sd))))
    images = tuple(
        _unit(product.latent_img
              + cfg.domain_shift_scale * offsets_img[domain_idx]
              + cfg.noise_scale * rng.standard_normal(cfg.d_img))
        for _ in range(n_images)
    )
    text = _unit(product.latent_txt
                 + cfg.domain_shift_scale * offsets_txt[domain_idx]
                 + cfg.text_noise_scale * rng.standard_normal(cfg.d_txt))
    brand = product.brand_variants[int(rng.integers(0, len(product.brand_variants)))]
    titles = [f"{product.category} classic", f"{product.category} fitted",
              f"essential {product.category}", f"{product.category} relaxed fit"]
    price = product.price * float(1.0 + rng.normal(0, 0.02))
    return Offer(
        offer_id=f"{product.pid}-d{domain_idx}",
        domain=f"domain{domain_idx}",
        brand_raw=brand,
        title_raw=titles[int(rng.integers(0, len(titles)))],
        price=max(price, 0.01),
        n_sizes=product.n_sizes,
        image_embeddings=images,
        text_embedding=text,
        product_id=None if product.pid.startswith("lone") else product.pid,
        category=product.category,
    )


def generate(cfg: SynthConfig) -> SynthCorpora:
    """Build train/validation/test-in/test-out corpora; same seed, same bytes."""
    rng = np.random.default_rng([cfg.seed, 1])
    offsets_img = rng.standard_normal((cfg.n_domains, cfg.d_img))
    offsets_img /= np.linalg.norm(offsets_img, axis=1, keepdims=True)
    offsets_txt = rng.standard_normal((cfg.n_domains, cfg.d_txt))
    offsets_txt /= np.linalg.norm(offsets_txt, axis=1, keepdims=True)

    out_domain = cfg.n_domains - 1
    train_domains = list(range(cfg.n_domains - 1))  # domain0 is the index domain

    products = [_make_product(cfg, i) for i in range(cfg.n_products)]
    n_train = int(round(cfg.train_fraction * cfg.n_products))
    train_products = products[:n_train]
    test_products = products[n_train:]

    # train: every product has one offer in domain0 and one in another train domain
    train_offers: list[Offer] = []
    for i, product in enumerate(train_products):
        partner = train_domains[1 + i % (len(train_domains) - 1)] if len(train_domains) > 1 else 0
        train_offers.append(_make_offer(cfg, product, 0, offsets_img, offsets_txt))
        train_offers.append(_make_offer(cfg, product, partner, offsets_img, offsets_txt))
    n_lone = int(round(cfg.lone_negative_fraction * len(train_offers))
                 ) if cfg.lone_negative_fraction > 0 else 0
    for j in range(n_lone):
        lone = _make_product(cfg, j, lone=True)
        dom = train_domains[j % len(train_domains)]
        train_offers.append(_make_offer(cfg, lone, dom, offsets_img, offsets_txt))

    # validation: a tail slice of the train-period products, removed from train
    n_val = max(1, int(round(0.1 * len(train_products))))
    val_products = train_products[-n_val:]
    val_ids = {f"{p.pid}-d{d}" for p in val_products for d in range(cfg.n_domains)}
    val_offers = [o for o in train_offers if o.offer_id in val_ids]
    train_offers = [o for o in train_offers if o.offer_id not in val_ids]

    # test: shared index in domain0; in-domain queries from a train domain,
    # out-domain queries from the held-out domain with its unseen offset
    query_in = train_domains[1] if len(train_domains) > 1 else 0
    n_matched_test = int(round((1.0 - cfg.test_lone_fraction) * len(test_products)))
    index_offers = [_make_offer(cfg, p, 0, offsets_img, offsets_txt) for p in test_products]
    queries_in = [_make_offer(cfg, p, query_in, offsets_img, offsets_txt)
                  for p in test_products[:n_matched_test]]
    queries_out = [_make_offer(cfg, p, out_domain, offsets_img, offsets_txt)
                   for p in test_products[:n_matched_test]]

    return SynthCorpora(
        train=Corpus(offers=train_offers, role="train"),
        validation=Corpus(offers=val_offers, role="validation"),
        test_in=Corpus(offers=index_offers + queries_in, role="test-in-domain",
                       index_domain="domain0", query_domain=f"domain{query_in}"),
        test_out=Corpus(offers=index_offers + queries_out, role="test-out-domain",
                        index_domain="domain0", query_domain=f"domain{out_domain}"),
    )
