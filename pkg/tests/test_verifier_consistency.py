"""Cross-checks between the batched deviation machinery and the
single-instance mechanism implementations, plus equilibrium certifications
for the second-price and externality payment rules."""

import numpy as np
import pytest

from helpers import random_instance
from posauction import (
    DeviationGrid,
    ExpressiveBidProfile,
    MechanismSpec,
    SlotCurve,
    ValueProfile,
    run_auction,
    verify_nash,
)
from posauction.complete_info import _batched_agent_utility, _batched_greedy


@pytest.mark.parametrize("rule", ["first-price", "second-price", "vcg"])
def test_batched_utilities_match_single_instance(rule):
    # the verifier's vectorized path must agree with run_auction row by row
    rng = np.random.Generator(np.random.Philox(key=[61, 0]))
    spec = MechanismSpec(rule)
    for _ in range(25):
        values, curve = random_instance(rng, n_max=6, k_max=4)
        n, k = values.n, curve.k
        raw = -np.sort(-rng.random((n, k)) * curve.betas[None, :], axis=1)
        bids = ExpressiveBidProfile(raw)
        outcome = run_auction(spec, bids, curve, values)
        batch = np.broadcast_to(raw, (3, n, k)).copy()
        assign = _batched_greedy(batch, None)
        for agent in range(n):
            if rule == "vcg":
                from posauction.auction import _greedy_bid_welfare

                w_without = _greedy_bid_welfare(np.delete(raw, agent, axis=0), k)
            else:
                w_without = 0.0
            utils = _batched_agent_utility(agent, batch, assign, values, curve,
                                           rule, w_without)
            assert np.allclose(utils, outcome.utilities[agent], atol=1e-12)


def test_truthful_vcg_bids_certified_as_equilibrium():
    # truthful bidding is dominant under the externality rule, so the
    # deviation search must come up empty
    values = ValueProfile([3.0, 2.0, 1.0])
    curve = SlotCurve([2.0, 1.0])
    bids = ExpressiveBidProfile(np.outer(values.values, curve.betas))
    report = verify_nash(bids, None, values, MechanismSpec("vcg"), curve,
                         DeviationGrid.scaled(3.0), tol=1e-9)
    assert report.is_equilibrium
    assert report.efficiency_flag


def test_random_truthful_vcg_instances_certified():
    rng = np.random.Generator(np.random.Philox(key=[61, 1]))
    spec = MechanismSpec("vcg")
    for _ in range(10):
        values, curve = random_instance(rng, n_max=6, k_max=3)
        bids = ExpressiveBidProfile(np.outer(values.values, curve.betas))
        grid = DeviationGrid.scaled(float(values.values.max()) or 1.0)
        report = verify_nash(bids, None, values, spec, curve, grid, tol=1e-9)
        assert report.is_equilibrium, report.worst_violation


def test_fewer_agents_than_positions_full_auction():
    spec = MechanismSpec("second-price")
    curve = SlotCurve([3.0, 2.0, 1.0])
    values = ValueProfile([2.0, 1.0])
    bids = ExpressiveBidProfile([[2.0, 1.5, 1.0], [1.0, 0.8, 0.2]])
    out = run_auction(spec, bids, curve, values)
    assert out.assignment == {0: 0, 1: 1}
    # slot 1 priced at the rival's bid, slot 2 has no remaining rival
    assert np.allclose(out.payments, [1.0, 0.0])
    assert np.allclose(out.utilities, [3.0 * 2.0 - 1.0, 2.0 * 1.0])


def test_vcg_with_unfilled_positions():
    spec = MechanismSpec("vcg")
    curve = SlotCurve([2.0, 1.0])
    values = ValueProfile([4.0])
    bids = ExpressiveBidProfile([[1.0, 0.5]])
    out = run_auction(spec, bids, curve, values)
    assert out.assignment == {0: 0}
    assert out.payments[0] == 0.0
