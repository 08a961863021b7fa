import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coronawsn.radio import RadioParams, agg_energy, rx_energy, tx_energy, tx_energy_array

R = RadioParams()


def test_d0_from_amplifier_constants():
    assert R.d0 == pytest.approx(87.7058, abs=1e-4)


@pytest.mark.parametrize(
    "k,d,expected",
    [(4000, 50, 3.0e-4), (4000, 20, 2.16e-4), (4000, 200, 8.52e-3), (0, 123.0, 0.0), (0, 500.0, 0.0)],
)
def test_tx_energy_frozen(k, d, expected):
    assert tx_energy(R, k, d) == pytest.approx(expected, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("k,expected", [(4000, 2.0e-4), (0, 0.0), (1, 50e-9)])
def test_rx_energy_frozen(k, expected):
    assert rx_energy(R, k) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("k,s,expected", [(4000, 3, 6.0e-5), (4000, 0, 0.0), (1, 1, 5e-9)])
def test_agg_energy_frozen(k, s, expected):
    assert agg_energy(R, k, s) == pytest.approx(expected, rel=1e-12)


def test_branches_meet_at_d0():
    k = 4000
    fs = k * (R.e_elec + R.eps_fs * R.d0**2)
    mp = k * (R.e_elec + R.eps_mp * R.d0**4)
    assert abs(fs - mp) <= 1e-12 * fs
    eps = 1e-9
    assert tx_energy(R, k, R.d0 - eps) == pytest.approx(tx_energy(R, k, R.d0 + eps), rel=1e-9)


@pytest.mark.parametrize("fn,args", [(tx_energy, (-1, 10)), (tx_energy, (10, -1)), (rx_energy, (-1,)), (agg_energy, (1, -1))])
def test_negative_inputs_rejected(fn, args):
    with pytest.raises(ValueError):
        fn(R, *args)


def test_nonpositive_constants_rejected():
    with pytest.raises(ValueError):
        RadioParams(e_elec=0.0)
    with pytest.raises(ValueError):
        RadioParams.from_mapping({"eps_mp": "-1"})


def test_from_mapping_parses_strings():
    p = RadioParams.from_mapping({"e_elec": "40e-9", "d0": "80", "junk": "x"})
    assert p.e_elec == 40e-9 and p.d0 == 80.0


@given(st.integers(0, 10**5), st.floats(0, 1000))
def test_vector_matches_scalar(k, d):
    assert tx_energy_array(R, k, [d])[0] == pytest.approx(tx_energy(R, k, d), rel=1e-12, abs=0)


@given(st.integers(1, 10**5), st.floats(0, 999), st.floats(0, 1))
def test_monotone_in_distance(k, d, extra):
    assert tx_energy(R, k, d + extra) >= tx_energy(R, k, d)


@given(st.integers(0, 10**5), st.floats(0, 1000))
def test_linear_in_bits(k, d):
    assert math.isclose(tx_energy(R, 2 * k, d), 2 * tx_energy(R, k, d), rel_tol=1e-12, abs_tol=0)
    assert np.isfinite(tx_energy(R, k, d))
