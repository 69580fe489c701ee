import numpy as np
import pytest

from matchfuse.model import Corpus, Offer


def make_offer(offer_id, domain="d1", product_id=None, d_img=8, d_txt=4,
               brand="acme", title="test item", price=10.0, n_sizes=2,
               n_images=2, category="unknown", seed=None):
    rng = np.random.default_rng(abs(hash((offer_id, domain))) % (2 ** 31) if seed is None else seed)
    return Offer(
        offer_id=offer_id,
        domain=domain,
        brand_raw=brand,
        title_raw=title,
        price=price,
        n_sizes=n_sizes,
        image_embeddings=tuple(rng.standard_normal(d_img) for _ in range(n_images)),
        text_embedding=rng.standard_normal(d_txt),
        product_id=product_id,
        category=category,
    )


def random_corpus(rng, n_products=10, n_lone=5, domains=("d1", "d2", "d3"), **kw):
    offers = []
    for p in range(n_products):
        doms = rng.choice(len(domains), size=2, replace=False)
        for d in doms:
            offers.append(make_offer(f"p{p}-{domains[d]}", domain=domains[d],
                                     product_id=f"prod{p}", seed=int(rng.integers(2**31)), **kw))
    for i in range(n_lone):
        d = domains[int(rng.integers(len(domains)))]
        offers.append(make_offer(f"lone{i}", domain=d, seed=int(rng.integers(2**31)), **kw))
    return Corpus(offers=offers)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
