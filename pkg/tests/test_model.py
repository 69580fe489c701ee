import unicodedata

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matchfuse.model import (Corpus, DomainError, lone_offers, matching_pairs,
                             normalize_text, numerical_features)
from .conftest import make_offer, random_corpus


class TestNormalizeText:
    def test_table_style_example(self):
        assert normalize_text("Vila", "LONG-SLEEVED Wrap Dress") == "vila long-sleeved wrap dress"

    def test_empty(self):
        assert normalize_text("", "") == ""

    def test_fullwidth_compatibility_forms(self):
        # oracle: stdlib NFKC + casefold
        brand, title = "ＡＤＩＤＡＳ", "Ｔee"
        expected = " ".join([
            unicodedata.normalize("NFKC", brand).casefold(),
            unicodedata.normalize("NFKC", title).casefold(),
        ])
        assert normalize_text(brand, title) == expected == "adidas tee"

    def test_whitespace_collapse(self):
        assert normalize_text("  a  b ", "\tc\n d ") == "a b c d"

    @given(st.text(max_size=30), st.text(max_size=30))
    def test_idempotent(self, brand, title):
        once = normalize_text(brand, title)
        assert normalize_text("", once) == once


class TestNumericalFeatures:
    def test_catalog_row(self):
        feats = numerical_features(46.9, 6)
        assert feats == pytest.approx([6.0, 1.791759, 3.848018], abs=1e-6)

    def test_unit_values(self):
        assert numerical_features(1.0, 1) == pytest.approx([1.0, 0.0, 0.0])

    def test_euler_price(self):
        assert numerical_features(float(np.e), 1) == pytest.approx([1.0, 0.0, 1.0])

    @pytest.mark.parametrize("price,n_sizes,msg", [
        (0.0, 1, "price"), (-3.0, 1, "price"), (1.0, 0, "n_sizes"),
    ])
    def test_domain_errors_name_the_field(self, price, n_sizes, msg):
        with pytest.raises(DomainError, match=msg):
            numerical_features(price, n_sizes)


class TestMatchingPairs:
    def test_cross_domain_pair(self):
        c = Corpus(offers=[make_offer("a", "d1", "p1"), make_offer("b", "d2", "p1")])
        assert matching_pairs(c) == {frozenset(("a", "b"))}

    def test_distinct_products(self):
        c = Corpus(offers=[make_offer("a", "d1", "p1"), make_offer("b", "d2", "p2")])
        assert matching_pairs(c) == set()

    def test_same_domain_never_matches(self):
        c = Corpus(offers=[make_offer("a", "d1", "p1"), make_offer("b", "d1", "p1")])
        assert matching_pairs(c) == set()

    def test_unlabeled_contribute_nothing(self):
        c = Corpus(offers=[make_offer("a", "d1"), make_offer("b", "d2")])
        assert matching_pairs(c) == set()

    def test_matches_brute_force(self, rng):
        corpus = random_corpus(rng, n_products=15, n_lone=8)
        expected = set()
        for a in corpus.offers:
            for b in corpus.offers:
                if (a.offer_id < b.offer_id and a.domain != b.domain
                        and a.product_id is not None and a.product_id == b.product_id):
                    expected.add(frozenset((a.offer_id, b.offer_id)))
        assert matching_pairs(corpus) == expected

    def test_symmetric_irreflexive(self, rng):
        corpus = random_corpus(rng)
        for pair in matching_pairs(corpus):
            assert len(pair) == 2  # frozenset of two distinct ids


class TestLoneOffers:
    def test_all_paired(self):
        c = Corpus(offers=[make_offer("a", "d1", "p1"), make_offer("b", "d2", "p1")])
        assert lone_offers(c) == set()

    def test_all_singletons(self):
        c = Corpus(offers=[make_offer("a", "d1"), make_offer("b", "d2")])
        assert lone_offers(c) == {"a", "b"}

    def test_partition_property(self, rng):
        corpus = random_corpus(rng, n_products=12, n_lone=7)
        lone = lone_offers(corpus)
        paired = set()
        for pair in matching_pairs(corpus):
            paired.update(pair)
        assert lone | paired == {o.offer_id for o in corpus.offers}
        assert lone & paired == set()


class TestCorpusInvariants:
    def test_duplicate_id_rejected(self):
        with pytest.raises(DomainError, match="duplicate"):
            Corpus(offers=[make_offer("a", "d1"), make_offer("a", "d1")])

    def test_mixed_dims_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError, match="dimensions differ"):
            make_offer("x", n_images=1).__class__(
                offer_id="x", domain="d1", brand_raw="b", title_raw="t",
                price=1.0, n_sizes=1,
                image_embeddings=(rng.standard_normal(8), rng.standard_normal(16)),
                text_embedding=rng.standard_normal(4))

    def test_empty_images_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError, match="image"):
            make_offer("x").__class__(
                offer_id="x", domain="d1", brand_raw="b", title_raw="t",
                price=1.0, n_sizes=1, image_embeddings=(),
                text_embedding=rng.standard_normal(4))

    def test_bad_role_rejected(self):
        with pytest.raises(DomainError, match="role"):
            Corpus(offers=[], role="nonsense")
