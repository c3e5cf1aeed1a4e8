import numpy as np
import pytest

from rwre.ctime import (constant_sampler, iid_sampler, make_sampler, moment_condition_ct, moment_statistic,
                        zrp_sampler)
from rwre.env import JumpRange
from rwre.errors import ConfigError

NN = JumpRange.nearest_neighbor(2, lazy=False)


def test_constant_unit_rates_statistic():
    # upsilon = 4, |conv{±e1, ±e2}| = 2: (4^3 + 1) / 2
    assert moment_statistic(NN, np.ones((3, 4))).tolist() == [32.5] * 3
    rep = moment_condition_ct(constant_sampler(NN, [1.0] * 4), 64, seed=0)
    assert rep.mean == 32.5 and rep.stderr == 0.0 and rep.finite


def test_unit_zrp_rates_match_constant_case():
    rep = moment_condition_ct(zrp_sampler({"kind": "constant"}, 0.5, {"base": 1.0}), 256, seed=1)
    assert rep.mean == pytest.approx(32.5, rel=1e-14) and rep.finite


def test_degenerate_hull_is_infinite():
    assert np.isinf(moment_statistic(NN, [[1.0, 1.0, 0.0, 0.0]])[0])
    rep = moment_condition_ct(constant_sampler(NN, [1.0, 1.0, 0.0, 0.0]), 32, seed=0)
    assert rep.infinite and not rep.finite


def test_bounded_iid_rates_are_stable():
    rep = moment_condition_ct(iid_sampler(NN, low=0.5, high=1.5), 20_000, seed=2)
    assert rep.finite and rep.running.shape == (5,)
    assert np.all(np.abs(rep.running - rep.mean) < 6 * rep.stderr * np.sqrt(20_000 / rep.running_at))


def test_heavy_tailed_rates_are_flagged():
    # pareto index 1.5: upsilon^3 / upsilon^2 has infinite mean
    rep = moment_condition_ct(iid_sampler(NN, low=1.0, law="pareto", shape=1.5), 50_000, seed=3)
    assert not rep.finite


def test_make_sampler_dispatch():
    U, R = make_sampler({"kind": "constant", "rates": [2.0] * 4})(10, 0)
    assert np.all(R == 2.0) and U.size == 4
    U, R = make_sampler({"kind": "zrp", "alpha": 0.3})(10, 0)
    assert R.shape == (10, 4)
    with pytest.raises(ConfigError):
        make_sampler({"kind": "other"})
    with pytest.raises(ConfigError):
        moment_condition_ct(constant_sampler(NN, [1.0] * 4), 8, seed=0)
