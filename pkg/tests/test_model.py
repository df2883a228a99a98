import json

import numpy as np
import pytest

from basscontrol.model import BassParams, ModelParams, ReplicatorParams, \
    bass_rhs, controlled_rhs, replicator_rhs

from conftest import make_params


def test_replicator_symmetric_point():
    assert replicator_rhs(0.5, 0.5, ReplicatorParams(rho=1.0)) == (-0.25, 0.25)


def test_replicator_boundary_fixed_point():
    assert replicator_rhs(1.0, 0.0, ReplicatorParams(rho=3.0)) == (0.0, 0.0)


def test_replicator_generic_point():
    r1, r2 = replicator_rhs(0.3, 0.7, ReplicatorParams(rho=2.0))
    assert r1 == pytest.approx(-0.42, rel=1e-15)
    assert r2 == pytest.approx(0.42, rel=1e-15)


def test_replicator_conserves_total_share():
    rng = np.random.default_rng(0)
    p = ReplicatorParams(rho=2.5)
    for _ in range(100):
        x1, x2 = rng.uniform(0.0, 1.0, 2)
        r1, r2 = replicator_rhs(x1, x2, p)
        assert r1 + r2 == 0.0


@pytest.mark.parametrize("x1,x2", [(-0.1, 0.5), (0.5, 1.2), (2.0, 2.0)])
def test_replicator_domain_errors(x1, x2):
    with pytest.raises(ValueError):
        replicator_rhs(x1, x2, ReplicatorParams(rho=1.0))


def test_bass_innovation_only_at_zero():
    assert bass_rhs(0.0, BassParams(p_innovation=0.03, q_imitation=0.38)) == 0.03


def test_bass_saturation_fixed_point():
    assert bass_rhs(1.0, BassParams(p_innovation=0.7, q_imitation=1.3)) == 0.0


def test_bass_logistic_case():
    assert bass_rhs(0.5, BassParams(p_innovation=0.0, q_imitation=1.0)) == 0.25


def test_bass_domain_error():
    with pytest.raises(ValueError):
        bass_rhs(1.5, BassParams(p_innovation=0.0, q_imitation=1.0))


def test_bass_reduces_to_replicator_without_innovation():
    rho = 1.7
    bass = BassParams(p_innovation=0.0, q_imitation=rho)
    repl = ReplicatorParams(rho=rho)
    for x in np.linspace(0.0, 1.0, 23):
        expected = replicator_rhs(1.0 - x, x, repl)[1]
        assert bass_rhs(float(x), bass) == expected


def test_controlled_zero_when_effort_balances_alternative():
    params = make_params()
    assert controlled_rhs(0.5, 0.5, params) == 0.0


def test_controlled_boundary():
    assert controlled_rhs(0.0, 7.0, make_params()) == 0.0


def test_controlled_generic_value():
    assert controlled_rhs(0.5, 1.0, make_params()) == 0.0625


def test_controlled_sign_matches_net_effort():
    params = make_params()
    rng = np.random.default_rng(1)
    for _ in range(200):
        x = rng.uniform(0.01, 0.99)
        u = rng.uniform(-1.0, 2.0)
        rate = controlled_rhs(x, u, params)
        net = params.beta * u - params.xi_cost
        if net > 0:
            assert rate > 0
        elif net < 0:
            assert rate < 0
        else:
            assert rate == 0


def test_controlled_domain_error():
    with pytest.raises(ValueError):
        controlled_rhs(-0.2, 1.0, make_params())


def test_model_params_json_round_trip():
    params = make_params()
    assert ModelParams.from_json(params.to_json()) == params


def test_model_params_rejects_unknown_keys():
    payload = json.loads(make_params().to_json())
    payload["extra"] = 1.0
    with pytest.raises(ValueError, match="unknown"):
        ModelParams.from_json(json.dumps(payload))


def test_model_params_rejects_missing_keys():
    payload = json.loads(make_params().to_json())
    del payload["sigma"]
    with pytest.raises(ValueError, match="missing"):
        ModelParams.from_json(json.dumps(payload))


@pytest.mark.parametrize("field,value", [
    ("cost_c", 0.0),
    ("horizon_t", -1.0),
    ("sigma", -0.1),
    ("beta", 0.0),
    ("xi_cost", -0.5),
])
def test_model_params_invariants(field, value):
    with pytest.raises(ValueError):
        make_params(**{field: value})


def test_bass_params_invariants():
    with pytest.raises(ValueError):
        BassParams(p_innovation=-0.1, q_imitation=0.0)
    with pytest.raises(ValueError):
        BassParams(p_innovation=0.0, q_imitation=-1.0)
