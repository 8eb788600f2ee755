"""Tampering risk accounting: frozen pencil-and-paper cases plus the
lower/exact/upper sandwich as a property over random placements."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_scenario
from leoplace.placement import Placement
from leoplace.risk import RiskTriple, co_location_tally, coarse_risk, exact_risk, risk_triple

# Two slices, crits 2.0 and 3.0, isolation 0.5, ENC sensitivity 0.9:
# pairwise weight = 0.9 * 0.5 * 2 * 3 = 2.7.
PAIR_WEIGHT = 2.7


def two_slice_scenario(users_a=2, users_b=2, **kw):
    return make_scenario(
        [
            ("east", 2.0, ("ENC",), tuple([50.0] * users_a)),
            ("west", 3.0, ("ENC",), tuple([50.0] * users_b)),
        ],
        iso=[[0.0, 0.5], [0.5, 0.0]],
        **kw,
    )


def shared_instance_placement(users_a=2, users_b=2):
    assign = {}
    for u in range(users_a):
        assign[(0, u, 0)] = (0, 0)
    for u in range(users_b):
        assign[(1, u, 0)] = (0, 0)
    return Placement(assign)


def test_exact_risk_two_by_two():
    sc = two_slice_scenario()
    p = shared_instance_placement()
    # 2 x 2 cross-slice user pairs on one instance.
    assert exact_risk(p, sc) == pytest.approx(4 * PAIR_WEIGHT, abs=1e-12)


def test_bounds_two_by_two():
    sc = two_slice_scenario()
    p = shared_instance_placement()
    lb, ub = coarse_risk(p, sc)
    # Lower bound sees only that the pair shares; upper assumes everyone does.
    assert lb == pytest.approx(PAIR_WEIGHT, abs=1e-12)
    assert ub == pytest.approx(4 * PAIR_WEIGHT, abs=1e-12)


def test_disjoint_instances_zero_risk():
    sc = two_slice_scenario()
    p = Placement(
        {
            (0, 0, 0): (0, 0),
            (0, 1, 0): (0, 0),
            (1, 0, 0): (1, 0),
            (1, 1, 0): (1, 0),
        }
    )
    assert exact_risk(p, sc) == 0.0
    # No instance hosts both slices, so even the pessimistic bound is zero.
    assert coarse_risk(p, sc) == (0.0, 0.0)


def test_same_slice_never_risky():
    sc = two_slice_scenario(users_a=3, users_b=1)
    p = Placement(
        {
            (0, 0, 0): (0, 0),
            (0, 1, 0): (0, 0),
            (0, 2, 0): (0, 0),
            (1, 0, 0): (1, 1),
        }
    )
    assert exact_risk(p, sc) == 0.0


def test_partial_sharing():
    sc = two_slice_scenario()
    p = Placement(
        {
            (0, 0, 0): (0, 0),
            (0, 1, 0): (1, 0),
            (1, 0, 0): (0, 0),
            (1, 1, 0): (1, 2),
        }
    )
    # Only one cross pair shares (ENC, 0, 0).
    assert exact_risk(p, sc) == pytest.approx(PAIR_WEIGHT, abs=1e-12)


def test_repeated_type_counts_distinct_users():
    sc = make_scenario(
        [
            ("dual", 2.0, ("ENC", "ENC"), (50.0,)),
            ("single", 3.0, ("ENC",), (50.0,)),
        ],
        iso=[[0.0, 0.5], [0.5, 0.0]],
    )
    p = Placement(
        {(0, 0, 0): (0, 0), (0, 0, 1): (0, 0), (1, 0, 0): (0, 0)}
    )
    # Both of the dual chain's positions land on the shared instance, but
    # it is still one user meeting one user.
    assert exact_risk(p, sc) == pytest.approx(PAIR_WEIGHT, abs=1e-12)


def test_per_assignment_mode_counts_occurrences():
    sc = make_scenario(
        [
            ("dual", 2.0, ("ENC", "ENC"), (50.0,)),
            ("single", 3.0, ("ENC",), (50.0,)),
        ],
        iso=[[0.0, 0.5], [0.5, 0.0]],
        risk_per_assignment=True,
    )
    p = Placement(
        {(0, 0, 0): (0, 0), (0, 0, 1): (0, 0), (1, 0, 0): (0, 0)}
    )
    assert exact_risk(p, sc) == pytest.approx(2 * PAIR_WEIGHT, abs=1e-12)
    lb, ub = coarse_risk(p, sc)
    assert lb - 1e-12 <= exact_risk(p, sc) <= ub + 1e-12


def test_tally_shape():
    sc = two_slice_scenario()
    p = shared_instance_placement()
    tally = co_location_tally(p, sc)
    assert tally == {("ENC", 0, 0): {0: 2, 1: 2}}


def test_risk_triple_ordering():
    sc = two_slice_scenario()
    t = risk_triple(shared_instance_placement(), sc)
    assert isinstance(t, RiskTriple)
    assert t.lower <= t.exact <= t.upper
    assert t.exact == pytest.approx(4 * PAIR_WEIGHT)


@st.composite
def random_case(draw):
    users_a = draw(st.integers(1, 3))
    users_b = draw(st.integers(1, 3))
    per_assignment = draw(st.booleans())
    sc = make_scenario(
        [
            ("east", 2.0, ("ENC", "TM"), tuple([50.0] * users_a)),
            ("west", 3.0, ("ENC",), tuple([50.0] * users_b)),
        ],
        iso=[[0.0, 0.7], [0.7, 0.0]],
        instances_per_type=2,
        risk_per_assignment=per_assignment,
    )
    assign = {}
    for e in sc.entries():
        assign[e] = (draw(st.integers(0, 1)), draw(st.integers(0, 3)))
    return sc, Placement(assign)


@settings(max_examples=80, deadline=None)
@given(random_case())
def test_sandwich_property(case):
    sc, p = case
    lb, ub = coarse_risk(p, sc)
    ex = exact_risk(p, sc)
    assert lb - 1e-9 <= ex <= ub + 1e-9
    assert lb >= 0.0
