import pytest
from hypothesis import given, strategies as st

from matchfuse import strings
from matchfuse.strings import jaro, jaro_winkler, pure_python


class TestJaro:
    def test_identical(self):
        assert jaro("martha", "martha") == 1.0

    def test_empty(self):
        assert jaro("", "") == 1.0
        assert jaro("a", "") == 0.0

    def test_classic_reference_values(self):
        # standard worked examples for this metric
        assert jaro("martha", "marhta") == pytest.approx(0.944444, abs=1e-6)
        assert jaro("dixon", "dicksonx") == pytest.approx(0.766667, abs=1e-6)
        assert jaro("jellyfish", "smellyfish") == pytest.approx(0.896296, abs=1e-6)

    def test_no_common_characters(self):
        assert jaro("abc", "xyz") == 0.0


class TestJaroWinkler:
    def test_prefix_boost(self):
        assert jaro_winkler("martha", "marhta") == pytest.approx(0.961111, abs=1e-6)
        assert jaro_winkler("dwayne", "duane") == pytest.approx(0.84, abs=1e-6)

    def test_brand_blocking_case(self):
        # sub-brand sharing a prefix scores high; unrelated brand scores low
        assert jaro_winkler("jordan", "jordan brand") >= 0.85
        assert jaro_winkler("jordan", "nike") < 0.85

    def test_sub_brand_suffix(self):
        assert jaro_winkler("adidas", "adidas originals") >= 0.85

    @given(st.text(alphabet="abcdefgh ", max_size=16),
           st.text(alphabet="abcdefgh ", max_size=16))
    def test_compiled_matches_pure_python(self, s1, s2):
        assert jaro_winkler(s1, s2) == pytest.approx(
            pure_python.jaro_winkler(s1, s2), abs=1e-12)
        assert jaro(s1, s2) == pytest.approx(pure_python.jaro(s1, s2), abs=1e-12)

    @given(st.text(max_size=12), st.text(max_size=12))
    def test_symmetric_and_bounded(self, s1, s2):
        v = jaro_winkler(s1, s2)
        assert 0.0 <= v <= 1.0
        assert jaro(s1, s2) == pytest.approx(jaro(s2, s1), abs=1e-12)


def test_kernel_flag_is_reported():
    assert strings.KERNEL in ("compiled", "python")
