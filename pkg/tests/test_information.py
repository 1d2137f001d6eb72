import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from frozen_values import (
    IMS_INFO_N10_R0_HALF,
    MUD_REFINED_INFO_N4_R0_0_1,
    OBTUSE_IMS_N3_NR0_0_05,
    SRM_INFO_N3_R0_0_1,
)
from qpyramid.geometry import cyclic_unitary, make_pyramid, pyramid_from_nr0, signal_states
from qpyramid.information import (
    JointDistribution,
    failure_probability,
    guess_odds,
    ims_info,
    joint_probabilities,
    mud_failure,
    mud_info,
    mud_srm_limit_ratio,
    mutual_information,
    necessary_condition_residual,
    scheme_info,
    srm_info,
    srm_info_limit,
    unified_info,
)
from qpyramid.measurement import (
    Pom,
    SchemeSpec,
    ims,
    mud,
    named_pom,
    srm,
    unified_pom,
)


def numeric_info(p, pom):
    return mutual_information(joint_probabilities(*signal_states(p), pom))


def random_spec(rng, n):
    t = float(rng.uniform(0.0, 4.0))
    w2 = float(rng.uniform(0.0, min(1.0, 1.0 / max(t * t, 1e-12))))
    return SchemeSpec.from_t_w2(t, w2)


# --- joint distribution and mutual information


def test_joint_orthogonal_srm():
    p = make_pyramid(4, 0.25)
    joint = joint_probabilities(*signal_states(p), srm(p))
    assert np.allclose(joint.p, np.eye(4) / 4, atol=1e-15)
    assert np.allclose(joint.row_marginals, 0.25) and np.allclose(joint.column_marginals, 0.25)


def test_joint_refined_mud():
    p = make_pyramid(3, 0.1)
    joint = joint_probabilities(*signal_states(p), mud(p, refined=True)).p
    diff = joint[:, 3:]
    want = (p.r1 - p.r0) / 3 * np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1]])
    assert np.allclose(diff, want, atol=1e-14)


def test_joint_srm_diagonal():
    p = make_pyramid(4, 0.3)
    joint = joint_probabilities(*signal_states(p), srm(p)).p
    diag = (math.sqrt(p.r0) + 3 * math.sqrt(p.r1)) ** 2 / 16
    assert np.allclose(np.diag(joint), diag, atol=1e-14)
    assert np.trace(joint) == pytest.approx(guess_odds(p), abs=1e-14)


def test_joint_rejects_invalid():
    p = make_pyramid(3, 0.2)
    full = srm(p)
    with pytest.raises(ValueError):
        joint_probabilities(*signal_states(p), Pom(full.labels[:2], full.operators[:2]))
    with pytest.raises(ValueError):
        joint_probabilities(*signal_states(p), Pom(["x"], -np.eye(3)[None]))


def test_mutual_information_basics():
    assert mutual_information(np.eye(5) / 5) == pytest.approx(math.log2(5), abs=1e-15)
    px, py = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.4])
    assert mutual_information(np.outer(px, py)) == pytest.approx(0.0, abs=1e-15)
    p = make_pyramid(3, 1 / 3)
    assert mutual_information(joint_probabilities(*signal_states(p), srm(p))) == pytest.approx(math.log2(3), abs=1e-12)
    assert mutual_information(JointDistribution(np.eye(2) / 2)) == pytest.approx(1.0)


# --- square-root measurement


def test_srm_info_values():
    for n in (2, 3, 7, 20):
        assert srm_info(make_pyramid(n, 1 / n)) == pytest.approx(math.log2(n), abs=1e-12)
    p = make_pyramid(3, 0.1)
    assert srm_info(p) == pytest.approx(SRM_INFO_N3_R0_0_1, abs=1e-12)
    assert srm_info(p) == pytest.approx(numeric_info(p, srm(p)), abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5, 10])
def test_srm_no_base_limit(n):
    ratios = [srm_info(make_pyramid(n, 1 - (n - 1) * r1)) / srm_info_limit(make_pyramid(n, 1 - (n - 1) * r1), "no_base")
              for r1 in (1e-3 / n, 1e-5 / n, 1e-7 / n)]
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)
    assert ratios[-1] == pytest.approx(1.0, rel=1e-3)
    p = make_pyramid(n, 1 - (n - 1) * 1e-6 / n)
    assert srm_info(p) == pytest.approx(srm_info_limit(p, "no_base"), rel=0.01)


@pytest.mark.parametrize("n", [3, 4, 6, 9])
def test_srm_flat_limit(n):
    p, flat = make_pyramid(n, 1e-6 / n), make_pyramid(n, 0.0)
    assert srm_info(p) == pytest.approx(srm_info_limit(p, "flat"), rel=0.01)
    rise = srm_info(p) - srm_info(flat)
    assert rise == pytest.approx(srm_info_limit(p, "flat") - srm_info_limit(flat, "flat"), rel=0.01)


def test_limit_branch_name():
    with pytest.raises(ValueError):
        srm_info_limit(make_pyramid(3, 0.1), "sideways")


# --- odds and unambiguous discrimination


def test_guess_odds_degenerate_shapes():
    for n in (2, 3, 6):
        assert guess_odds(make_pyramid(n, 1.0)) == pytest.approx(1 / n, abs=1e-12)
        assert guess_odds(make_pyramid(n, 1 / n)) == pytest.approx(1.0, abs=1e-12)
        assert guess_odds(make_pyramid(n, 0.0)) == pytest.approx(1 - 1 / n, abs=1e-12)


def test_mud_failure_values():
    assert mud_failure(make_pyramid(4, 0.25)) == 0.0
    assert mud_failure(make_pyramid(3, 0.2)) == pytest.approx(0.4, abs=1e-15)
    assert mud_failure(make_pyramid(5, 0.8)) == pytest.approx(0.75, abs=1e-15)


def test_mud_info_values():
    p = make_pyramid(4, 0.1)
    assert mud_info(p, refined=True) == pytest.approx(MUD_REFINED_INFO_N4_R0_0_1, abs=1e-12)
    assert mud_info(p, refined=True) == pytest.approx(numeric_info(p, mud(p, refined=True)), abs=1e-12)
    assert mud_info(p) == pytest.approx(numeric_info(p, mud(p)), abs=1e-12)
    assert mud_info(make_pyramid(3, 0.0), refined=True) == pytest.approx(math.log2(1.5), abs=1e-15)
    q = make_pyramid(5, 0.6)
    assert mud_info(q) == pytest.approx(numeric_info(q, mud(q)), abs=1e-12)


@pytest.mark.parametrize("n", [3, 5, 10, 30])
def test_mud_srm_limits(n):
    acute = make_pyramid(n, 1 - 1e-9)
    assert mud_info(acute) / srm_info(acute) == pytest.approx(mud_srm_limit_ratio(n, "acute"), rel=1e-3)
    flat = make_pyramid(n, 1e-12)
    ratio = mud_info(flat, refined=True) / srm_info(flat)
    assert ratio == pytest.approx(mud_srm_limit_ratio(n, "obtuse"), rel=1e-3)


def test_mud_limit_n30():
    assert mud_srm_limit_ratio(30, "acute") == pytest.approx(30 / 58 * math.log(30), abs=1e-15)
    assert mud_srm_limit_ratio(30, "acute") == pytest.approx(1.7594, abs=5e-4)


# --- unified family closed form


def test_unified_special_rows():
    p = make_pyramid(5, 0.3)
    assert unified_info(p, SchemeSpec(1.0, 0.0, 1.0, 0.0)) == srm_info(p)
    assert unified_info(p, SchemeSpec(0.0, 1.0, 0.0, 1.0)) == pytest.approx(0.7 * math.log2(2.5), abs=1e-15)


def test_unified_random_example():
    rng = np.random.default_rng(3)
    p = make_pyramid(5, 0.07)
    for _ in range(20):
        spec = random_spec(rng, 5)
        assert unified_info(p, spec) == pytest.approx(numeric_info(p, unified_pom(p, spec)), abs=1e-10)


@settings(max_examples=400, deadline=None)
@given(
    st.integers(2, 12),
    st.floats(min_value=1e-9, max_value=1.0),
    st.floats(min_value=0.0, max_value=5.0),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_unified_closed_form_property(n, r0, t, frac):
    p = make_pyramid(n, r0)
    w2 = frac if t <= 1.0 else frac / (t * t)
    spec = SchemeSpec.from_t_w2(t, w2)
    assume(spec.w3 <= 1e-14 or not p.has_no_base)
    assert unified_info(p, spec) == pytest.approx(numeric_info(p, unified_pom(p, spec)), abs=1e-10)


def test_failure_probability():
    p = make_pyramid(4, 0.1)
    spec = SchemeSpec.from_t_w2(2.0, 0.2)
    pom = unified_pom(p, spec)
    joint = joint_probabilities(*signal_states(p), pom).p
    non_edge = joint[:, [not lab.startswith("edge") for lab in pom.labels]].sum()
    assert failure_probability(p, spec) == pytest.approx(non_edge, abs=1e-14)


# --- accessible information


def test_ims_info_examples():
    p = make_pyramid(10, 0.5)
    assert ims_info(p) == pytest.approx(5 / 8 * math.log2(9), abs=1e-14)
    assert ims_info(p) == pytest.approx(IMS_INFO_N10_R0_HALF, abs=1e-12)
    assert ims_info(pyramid_from_nr0(3, 0.05)) == pytest.approx(OBTUSE_IMS_N3_NR0_0_05, abs=1e-12)
    for n in (3, 5, 8):
        q = make_pyramid(n, 0.5 * (1 / n + (4 * n - 4) / n**2))
        assert ims_info(q) == srm_info(q)
    # ratio to the square-root measurement grows toward flatness
    ratios = [ims_info(pyramid_from_nr0(3, x)) / srm_info(pyramid_from_nr0(3, x)) for x in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert ratios == sorted(ratios)


def test_ims_matches_its_pom():
    for n, nr0 in ((3, 0.05), (4, 0.01), (10, 5.0), (5, 0.0)):
        p = pyramid_from_nr0(n, nr0)
        assert ims_info(p) == pytest.approx(numeric_info(p, ims(p)[0]), abs=1e-12)


def test_scheme_info_dispatch():
    p = make_pyramid(4, 0.1)
    assert scheme_info(p, "srm") == srm_info(p)
    assert scheme_info(p, "mud_refined") == mud_info(p, refined=True)
    with pytest.raises(ValueError):
        scheme_info(p, "custom")


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 12), st.floats(min_value=0.0, max_value=1.0))
def test_dominance_and_entropy_bound(n, r0):
    p = make_pyramid(n, r0)
    best = ims_info(p)
    assert best >= srm_info(p) - 1e-12
    if 0 < r0 < 1:
        assert best >= mud_info(p, refined=not p.is_acute) - 1e-12
    for value in (best, srm_info(p), mud_info(p), mud_info(p, refined=True)):
        assert value <= math.log2(n) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(min_value=1e-6, max_value=1 - 1e-6), st.sampled_from(["srm", "mud", "ims"]))
def test_relabeling_invariance(n, r0, scheme):
    p = make_pyramid(n, r0)
    states, priors = signal_states(p)
    pom = named_pom(p, scheme)
    u = cyclic_unitary(p)
    rotated = Pom(pom.labels, np.einsum("ab,kbc,dc->kad", u, pom.operators, u))
    moved = np.einsum("ab,jbc,dc->jad", u, states, u)
    assert mutual_information(joint_probabilities(moved, priors, rotated)) == pytest.approx(
        mutual_information(joint_probabilities(states, priors, pom)), abs=1e-12)


# --- necessary condition


def test_residual_examples():
    p = make_pyramid(3, 1 / 3)
    states, priors = signal_states(p)
    assert necessary_condition_residual(states, priors, srm(p), mode="MEM") <= 1e-10
    acute = make_pyramid(3, 0.9)
    states, priors = signal_states(acute)
    assert necessary_condition_residual(states, priors, ims(acute)[0]) <= 1e-8
    # the square-root measurement is not optimal here, yet the pairwise
    # condition holds for it exactly: swapping two labels is a symmetry
    assert ims_info(acute) > srm_info(acute) + 1e-5
    assert necessary_condition_residual(states, priors, srm(acute)) <= 1e-12
    with pytest.raises(ValueError):
        necessary_condition_residual(states, priors, srm(acute), mode="other")
