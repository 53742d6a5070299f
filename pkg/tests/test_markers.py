import numpy as np
import pytest

from shiftcode.errors import (MarkerSearchError, NoMarkerExistsError,
                              NotMixingError, ParameterError, ShiftcodeError)
from shiftcode.markers import (MarkerScheme, avoidance_filter, check_scheme,
                               find_marker, locate_offset)
from shiftcode.measures import MarkovMeasure
from shiftcode.shiftspace import Word, build_sft, enumerate_words


def exhaustive_valid_markers(sft, nu, M, alpha):
    """Oracle: scan every admissible 8M-word."""
    return [w for w in enumerate_words(sft, 8 * M)
            if check_scheme(sft, nu, w, M, alpha)[3]]


class TestFindMarker:
    def test_exhaustive_against_oracle(self, full2, bern_01):
        scheme = find_marker(full2, bern_01, M=1, alpha=0.5, seed=1)
        oracle = exhaustive_valid_markers(full2, bern_01, 1, 0.5)
        assert oracle, "oracle says valid markers exist"
        assert any(scheme.word == w for w in oracle)
        assert scheme.nu_h1 < 0.5 and scheme.nu_h2 < 0.5

    def test_self_distinguishing_reverified(self, scheme_m2):
        scheme = scheme_m2
        sym = scheme.word.symbols
        h2 = sym[12:16]
        for i in range(12):
            assert not np.array_equal(sym[i:i + 4], h2), i

    def test_degenerate_no_marker(self):
        one = build_sft(1, [])
        with pytest.raises(NoMarkerExistsError):
            find_marker(one, MarkovMeasure.bernoulli([1.0]), M=1, alpha=0.5)

    def test_not_mixing_rejected(self):
        cyc = build_sft(2, ["00", "11"])
        with pytest.raises(NotMixingError):
            find_marker(cyc, MarkovMeasure.uniform(cyc), M=1, alpha=0.5)

    def test_alpha_zero(self, full2, bern_half):
        with pytest.raises(ParameterError):
            find_marker(full2, bern_half, M=1, alpha=0.0)

    def test_alpha_too_small_reports_condition(self, full2, bern_half):
        # every 2-window has mass 1/4 >= alpha/M
        with pytest.raises(MarkerSearchError) as exc:
            find_marker(full2, bern_half, M=1, alpha=0.01)
        assert "alpha" in str(exc.value)

    def test_random_mode_valid(self, full2, bern_half):
        scheme = find_marker(full2, bern_half, M=4, alpha=0.5, seed=7)
        viol, nu1, nu2, ok = check_scheme(full2, bern_half, scheme.word, 4, 0.5)
        assert ok and viol == 0

    def test_alpha_monotonicity(self, full2, bern_01):
        # nu masses of 2-windows are 0.81, 0.09, 0.09, 0.01, so the
        # feasible set steps up strictly across those thresholds
        counts = [len(exhaustive_valid_markers(full2, bern_01, 1, a))
                  for a in (0.05, 0.2, 0.95)]
        assert counts[0] < counts[1] < counts[2]

    def test_admissible_in_constrained_target(self, golden_mean):
        nu = MarkovMeasure.uniform(golden_mean)
        scheme = find_marker(golden_mean, nu, M=2, alpha=0.9, seed=3)
        assert golden_mean.is_admissible(scheme.word)


@pytest.fixture(scope="module")
def scheme_m2(full2, bern_half):
    return find_marker(full2, bern_half, M=2, alpha=0.5, seed=1)


class TestLocateOffset:
    def test_zero_offset(self, scheme_m2):
        scheme = scheme_m2
        L, M = 50, 2
        w = np.zeros(L, dtype=np.uint8)
        w[L - 9 * M:L - 9 * M + 16] = scheme.word.symbols
        assert locate_offset(Word(w), scheme, L) == 0

    def test_shifted(self, scheme_m2):
        scheme = scheme_m2
        L, M = 50, 2
        w = np.zeros(L, dtype=np.uint8)
        w[L - 9 * M - 5:L - 9 * M - 5 + 16] = scheme.word.symbols
        assert locate_offset(Word(w), scheme, L) == 5

    def test_not_found(self, scheme_m2):
        scheme = scheme_m2
        with pytest.raises(ShiftcodeError, match="marker not found"):
            locate_offset(Word(np.ones(50, dtype=np.uint8)), scheme, 50)

    def test_length_hypothesis_enforced(self, scheme_m2):
        scheme = scheme_m2
        with pytest.raises(ParameterError):
            locate_offset(Word(np.zeros(38, dtype=np.uint8)), scheme, 38)


class TestAvoidanceFilter:
    def make_scheme(self):
        # hand-built scheme: H1 window = "11", H2 window = "10"
        return MarkerScheme(Word.from_string("11000010"), M=1, alpha=0.5,
                            nu_h1=0.01, nu_h2=0.09)

    def test_all_zero_passes(self):
        scheme = self.make_scheme()
        words = [Word(np.zeros(20, dtype=np.uint8))]
        assert list(avoidance_filter(words, scheme, N=18)) == words

    def test_occurrence_inside_range_rejected(self):
        scheme = self.make_scheme()
        w = Word.from_string("00011000000000000000")
        assert list(avoidance_filter([w], scheme, N=10)) == []

    def test_occurrence_outside_range_passes(self):
        scheme = self.make_scheme()
        sym = np.zeros(20, dtype=np.uint8)
        sym[11] = sym[12] = 1   # occurrence at offset 11 > N
        w = Word(sym)
        assert list(avoidance_filter([w], scheme, N=10)) == [w]

    def test_short_words_scanned_over_their_extent(self):
        scheme = self.make_scheme()
        good = Word.from_string("0000")
        bad = Word.from_string("0110")
        assert list(avoidance_filter([good, bad], scheme, N=4)) == [good]


class TestSerialization:
    def test_roundtrip(self, bern_half, scheme_m2):
        scheme = scheme_m2
        line = scheme.serialize()
        again = MarkerScheme.parse(line, bern_half)
        assert again.word == scheme.word
        assert again.M == scheme.M
        assert again.alpha == pytest.approx(scheme.alpha)
        assert again.nu_h1 == pytest.approx(scheme.nu_h1)
