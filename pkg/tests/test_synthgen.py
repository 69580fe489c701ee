import numpy as np
import pytest

from matchfuse.model import DomainError, lone_offers, matching_pairs
from matchfuse.retrieval import build_index, match_domains
from matchfuse.evaluation import evaluate
from matchfuse.synthgen import SynthConfig, generate

SMALL = dict(n_products=40, d_img=8, d_txt=4, seed=3)


def raw_retrieval_report(test_corpus):
    """k=1 retrieval on normalized raw concatenated embeddings, no blocking."""
    index_ids = [o.offer_id for o in test_corpus.offers
                 if o.domain == test_corpus.index_domain]
    query_ids = {o.offer_id for o in test_corpus.offers
                 if o.domain == test_corpus.query_domain}
    emb = {}
    for o in test_corpus.offers:
        v = np.concatenate([np.mean(o.image_embeddings, axis=0),
                            o.text_embedding])
        emb[o.offer_id] = v / np.linalg.norm(v)
    index_c = test_corpus.subset(index_ids, role="train")
    query_c = test_corpus.subset(sorted(query_ids), role="train")
    index = build_index({k: emb[k] for k in index_ids}, index_c)
    preds = match_domains(query_c, emb, index, k=1, brand_threshold=0.0,
                          distance_threshold=2.0)
    return evaluate(preds, matching_pairs(test_corpus), ks=(1,))


def corpus_fingerprint(corpus):
    parts = []
    for o in corpus.offers:
        vec_bytes = b"".join(np.asarray(v).tobytes() for v in o.image_embeddings)
        parts.append((o.offer_id, o.domain, o.brand_raw, o.title_raw,
                      round(o.price, 10), o.n_sizes, o.product_id, o.category,
                      vec_bytes, np.asarray(o.text_embedding).tobytes()))
    return parts


class TestDeterminism:
    def test_same_seed_same_bytes(self):
        a = generate(SynthConfig(**SMALL))
        b = generate(SynthConfig(**SMALL))
        for name in ("train", "validation", "test_in", "test_out"):
            assert corpus_fingerprint(getattr(a, name)) == \
                corpus_fingerprint(getattr(b, name))

    def test_different_seed_differs(self):
        a = generate(SynthConfig(**SMALL))
        b = generate(SynthConfig(**{**SMALL, "seed": 4}))
        assert corpus_fingerprint(a.train) != corpus_fingerprint(b.train)


class TestStructure:
    def test_roles_and_domains(self):
        c = generate(SynthConfig(**SMALL))
        assert c.train.role == "train"
        assert c.test_in.index_domain == "domain0"
        assert c.test_out.query_domain == "domain2"
        out_query_domains = {o.domain for o in c.test_out.offers
                             if o.domain != "domain0"}
        assert out_query_domains == {"domain2"}
        # the held-out domain never leaks into training
        assert all(o.domain != "domain2" for o in c.train.offers)
        assert all(o.domain != "domain2" for o in c.validation.offers)

    def test_pair_counts_recounted(self):
        cfg = SynthConfig(**SMALL)
        c = generate(cfg)
        n_train_products = round(cfg.train_fraction * cfg.n_products)
        n_val = max(1, round(0.1 * n_train_products))
        # each matched product contributes exactly one cross-domain pair
        assert len(matching_pairs(c.train)) == n_train_products - n_val
        assert len(matching_pairs(c.validation)) == n_val
        n_test = cfg.n_products - n_train_products
        n_matched = round((1 - cfg.test_lone_fraction) * n_test)
        assert len(matching_pairs(c.test_in)) == n_matched
        assert len(matching_pairs(c.test_out)) == n_matched

    def test_lone_negative_share(self):
        cfg = SynthConfig(**SMALL, lone_negative_fraction=0.5)
        c = generate(cfg)
        lone = lone_offers(c.train)
        paired = [o for o in c.train.offers if o.product_id is not None]
        # lone count is set against the pre-validation-split paired population
        assert len(lone) == round(0.5 * (len(paired) + 2 * round(
            0.1 * round(cfg.train_fraction * cfg.n_products))))

    def test_zero_lone_fraction(self):
        c = generate(SynthConfig(**SMALL, lone_negative_fraction=0.0))
        assert lone_offers(c.train) == set()

    def test_unit_norm_embeddings(self):
        c = generate(SynthConfig(**SMALL))
        for o in c.train.offers[:10]:
            for v in o.image_embeddings:
                assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)
            assert np.linalg.norm(o.text_embedding) == pytest.approx(1.0, abs=1e-9)

    def test_config_validation(self):
        with pytest.raises(DomainError):
            SynthConfig(n_domains=2)
        with pytest.raises(DomainError):
            SynthConfig(train_fraction=1.5)
        with pytest.raises(DomainError):
            SynthConfig(noise_scale=-1)


class TestSignalStrength:
    def test_noise_free_corpus_is_perfectly_retrievable(self):
        # no domain shift, no noise: every offer reproduces the product latent,
        # so raw nearest-neighbor retrieval must be exact
        cfg = SynthConfig(n_products=60, d_img=8, d_txt=4, seed=1,
                          domain_shift_scale=0.0, noise_scale=0.0,
                          text_noise_scale=0.0, test_lone_fraction=0.0)
        c = generate(cfg)
        report = raw_retrieval_report(c.test_in)
        assert report.recall_at[1] == 1.0

    def test_domain_shift_hurts_raw_retrieval(self):
        cfg = SynthConfig(n_products=120, d_img=8, d_txt=4, seed=1,
                          test_lone_fraction=0.0)
        c = generate(cfg)
        report = raw_retrieval_report(c.test_in)
        assert report.recall_at[1] < 0.9  # leaves headroom for training
