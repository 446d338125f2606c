import math
from fractions import Fraction

import numpy as np
import pytest

from walshlab.core import Spectrum, TruthTable, table_from_anf, walsh_transform
from walshlab.metrics import (
    ExactValue,
    SpectrumError,
    classify,
    entropy,
    influence_probe,
    influence_spectral,
    min_entropy,
    ratio,
)
from walshlab.report import QUINTIC_MAX_ANF, QUINTIC_SEED_ANF

from conftest import random_table


def spectrum_of(anf: str, n: int) -> Spectrum:
    return walsh_transform(table_from_anf(anf, n))


def parity(n: int) -> Spectrum:
    return walsh_transform(table_from_anf(" + ".join(f"X{j}" for j in range(1, n + 1)), n))


# --- ExactValue -------------------------------------------------------------------


def test_exact_value_shadow_accuracy():
    for q in (Fraction(7, 4), Fraction(128, 45), Fraction(-3, 7), Fraction(10**12, 7)):
        v = ExactValue.from_fraction(q)
        assert v.exact
        assert v.value == pytest.approx(float(q), abs=abs(math.ulp(float(q))))


def test_exact_value_log2():
    assert ExactValue.log2_of(Fraction(1, 16)).rational == -4
    assert ExactValue.log2_of(Fraction(8)).rational == 3
    v = ExactValue.log2_of(Fraction(1024, 36))
    assert not v.exact
    assert v.value == pytest.approx(math.log2(1024 / 36))
    with pytest.raises(ValueError):
        ExactValue.log2_of(Fraction(0))


def test_exact_value_arithmetic():
    a = ExactValue.from_fraction(Fraction(1, 3))
    b = ExactValue.from_fraction(Fraction(1, 6))
    assert (a + b).rational == Fraction(1, 2)
    assert (a * b).rational == Fraction(1, 18)
    c = ExactValue.from_float(0.5)
    assert not (a + c).exact
    assert (a + c).value == pytest.approx(1 / 3 + 0.5)


def test_as_str():
    assert ExactValue.from_fraction(Fraction(16, 7)).as_str() == "16/7"
    assert ExactValue.from_fraction(Fraction(4)).as_str() == "4"
    assert ExactValue.from_float(2.5).as_str() == "2.5"


# --- entropy ----------------------------------------------------------------------


def test_entropy_parity_is_zero():
    for n in (1, 3, 6):
        v = entropy(parity(n))
        assert v.exact and v.rational == 0


def test_entropy_bent_two_vars():
    v = entropy(spectrum_of("X1X2", 2))
    assert v.exact and v.rational == 2


def test_entropy_and5_ratio_below_4():
    s = spectrum_of("X1X2X3X4X5", 5)
    h = entropy(s)
    inf = influence_spectral(s)
    assert not h.exact
    assert h.value < 4 * float(inf.rational)


def test_entropy_exactness_is_conservative(rng):
    # exact only in the plateaued power-of-two-support case
    for n in range(1, 8):
        for _ in range(30):
            s = walsh_transform(random_table(rng, n))
            v = entropy(s)
            if v.exact:
                nz = np.abs(s.corr[s.corr != 0])
                support = int(nz.size)
                assert np.unique(nz).size == 1
                assert support & (support - 1) == 0
                assert v.rational == support.bit_length() - 1


def test_entropy_rejects_corrupt_spectrum():
    bad = Spectrum(2, np.array([1, 1, 1, 1]))
    with pytest.raises(SpectrumError):
        entropy(bad)
    with pytest.raises(SpectrumError):
        classify(bad)


# --- min-entropy ------------------------------------------------------------------


def test_min_entropy_examples():
    assert min_entropy(spectrum_of(QUINTIC_MAX_ANF, 5)).rational == 4
    assert min_entropy(spectrum_of(QUINTIC_SEED_ANF, 5)).rational == 4
    assert min_entropy(spectrum_of("X1", 1)).rational == 0


def test_min_entropy_non_dyadic_is_float():
    # weight-1 function on 3 vars peaks at corr 6, and 36 is not a power of two
    s = walsh_transform(TruthTable(3, 0b00000001))
    assert s.max_corr_sq == 36
    v = min_entropy(s)
    assert not v.exact
    assert v.value == pytest.approx(math.log2(64 / 36))


# --- influence --------------------------------------------------------------------


def test_influence_examples():
    assert influence_spectral(spectrum_of(QUINTIC_MAX_ANF, 5)).rational == Fraction(7, 4)
    assert influence_spectral(spectrum_of(QUINTIC_SEED_ANF, 5)).rational == Fraction(15, 8)
    for n in (2, 4, 6):
        assert influence_spectral(parity(n)).rational == n


def test_influence_probe_and2():
    assert influence_probe(table_from_anf("X1X2", 2)).rational == 1


def test_probe_equals_spectral(rng):
    for n in range(1, 11):
        for _ in range(100):
            f = random_table(rng, n)
            assert influence_probe(f).rational == influence_spectral(walsh_transform(f)).rational


def test_influence_denominator_divides_total(rng):
    for n in (3, 5, 7):
        for _ in range(50):
            q = influence_spectral(walsh_transform(random_table(rng, n))).rational
            assert (4**n) % q.denominator == 0


# --- classification ----------------------------------------------------------------


def test_classify_bent_product():
    rep = classify(spectrum_of("X1X2", 2))
    assert rep.bent and rep.plateaued and rep.plateau_level == 2
    assert rep.resilience_order == -1 and not rep.balanced
    assert rep.entropy.rational == 2 and rep.min_entropy.rational == 2
    assert rep.influence.rational == 1
    assert rep.mei_ratio.rational == 2 and rep.ei_ratio.rational == 2


def test_classify_bent_implications(rng):
    # bent => H = Hmin = n and influence = n/2
    quartic = classify(spectrum_of("X1X2 + X3X4", 4))
    assert quartic.bent
    assert quartic.entropy.rational == 4
    assert quartic.min_entropy.rational == 4
    assert quartic.influence.rational == 2


def test_classify_parity():
    for n in (2, 5):
        rep = classify(parity(n))
        assert rep.resilience_order == n - 1
        assert rep.plateaued and rep.plateau_level == 2**n
        assert not rep.bent
        assert rep.balanced
        assert rep.min_entropy.rational == 0 and rep.influence.rational == n


def test_classify_constant_has_no_ratios():
    rep = classify(walsh_transform(TruthTable(3, 0)))
    assert rep.influence.rational == 0
    assert rep.ei_ratio is None and rep.mei_ratio is None
    assert rep.weight == 0 and rep.resilience_order == -1


def test_classify_seed_function():
    rep = classify(spectrum_of(QUINTIC_SEED_ANF, 5))
    assert rep.balanced and rep.plateaued and rep.plateau_level == 8
    assert rep.resilience_order == 0
    assert rep.max_corr_sq == 64


def test_metric_bounds_and_order(rng):
    for n in range(1, 9):
        for _ in range(40):
            rep = classify(walsh_transform(random_table(rng, n)))
            assert 0 <= rep.min_entropy.value <= rep.entropy.value + 1e-12
            assert rep.entropy.value <= n + 1e-12
            assert 0 <= float(rep.influence.rational) <= n
            assert 0 <= rep.weight <= 1 << n


def test_resilient_influence_lower_bound(rng):
    # t-resilient => influence >= t + 1
    for n in (3, 5, 7):
        for _ in range(60):
            rep = classify(walsh_transform(random_table(rng, n)))
            if rep.resilience_order >= 0:
                assert rep.influence.rational >= rep.resilience_order + 1


def test_ratio_helper():
    assert ratio(ExactValue.from_fraction(1), ExactValue.from_fraction(0)) is None
    v = ratio(ExactValue.from_fraction(3), ExactValue.from_fraction(Fraction(3, 2)))
    assert v.rational == 2
    w = ratio(ExactValue.from_float(1.0), ExactValue.from_fraction(2))
    assert not w.exact and w.value == 0.5
