import numpy as np
import pytest

import sympext as sx
from sympext.propagation import RelationPair, canonical_forcing


class BlockDiagonalProvider(sx.CoefficientProvider):
    """Direct sum of the unit-weight and the geometric-weight scalar systems."""

    def __init__(self, gamma=0.25):
        self.n = 2
        self.gamma = gamma

    def blocks(self, k):
        eye = np.eye(2, dtype=complex)
        w = np.diag([1.0, self.gamma**k]).astype(complex)
        return eye, -eye, 0 * eye, eye, w


@pytest.fixture(scope="module")
def block_system():
    return sx.build_system(BlockDiagonalProvider(), 16)


@pytest.fixture(scope="module")
def e1_data(e1):
    return sx.assemble_theta(e1, 0.0, -1.0, d=1, anchors=[40, 80, 160])


@pytest.fixture(scope="module")
def e2_data(e2):
    return sx.assemble_theta(e2, 0.0, -1.0, d=2, anchors=[40, 80, 160])


def test_count_e1_limit_point(e1):
    for lam in (1j, -1.0):
        rep = sx.count_square_summable(e1, lam, [40, 80, 160])
        assert rep.d_estimate == 1
        assert rep.confidence == "Stable"
        assert sx.classify(e1, rep).kind == "LimitPoint"


def test_count_e2_limit_circle(e2):
    for lam in (1j, 0.0, -1.0):
        rep = sx.count_square_summable(e2, lam, [40, 80, 160])
        assert rep.d_estimate == 2
        assert rep.confidence == "Stable"
        assert sx.classify(e2, rep).kind == "LimitCircle"


def test_count_block_intermediate(block_system):
    rep = sx.count_square_summable(block_system, 1j, [40, 80, 160])
    assert rep.d_estimate == 3
    cls = sx.classify(block_system, rep)
    assert cls.kind == "Intermediate" and cls.d == 3
    assert str(cls) == "Intermediate(3)"


def test_count_survives_overflow_horizons(e1):
    # |Phi| passes 1e300 near k=620 at lambda=-1; the scaled sweep keeps counting
    rep = sx.count_square_summable(e1, -1.0, [400, 800])
    assert rep.pair_counts[-1] == 1


def test_classify_requires_stable(e1):
    rep = sx.count_square_summable(e1, 1j, [40, 80, 160])
    rep.confidence = "Marginal"
    with pytest.raises(sx.SympextError):
        sx.classify(e1, rep)


def test_lower_bound_certificate(e1, identity_system):
    cert = sx.lower_bound_certificate(e1, 0.0, 200, (0, 1))
    assert cert.certified and cert.kind == "CertifiedAtLeast"
    cert_osc = sx.lower_bound_certificate(e1, 5.0, 60, (0, 1))
    assert not cert_osc.certified and "onset" in cert_osc.reason
    cert_atk = sx.lower_bound_certificate(identity_system, 0.0, 60, (0, 5))
    assert not cert_atk.certified and "Atkinson" in cert_atk.reason


def test_select_pivot_rows_synthetic():
    u_hat = np.array([[0.5], [0.0]], dtype=complex)  # n=2, d-n=1
    sel, transform = sx.select_pivot_rows(u_hat, 1)
    assert sel == [0]
    assert transform[0, 0] == pytest.approx(2.0)
    with pytest.raises(sx.RankDeficientComplement):
        sx.select_pivot_rows(np.zeros((2, 1)), 1)


def test_assemble_e1_limit_point(e1, e1_data):
    data = e1_data
    assert data.d == 1 and data.indices == []
    assert np.allclose(data.M, [[1.0, 0.0]])
    assert data.L.shape == (1, 0)
    assert np.linalg.norm(data.upsilon) < 1e-10
    res = data.invariant_residuals()
    assert res["rank_ML"] == 1
    assert res["ml_identity"] < 1e-10


def test_assemble_e2_full_pipeline(e2, e2_data):
    data = e2_data
    assert data.d == 2 and data.indices == [1]
    canonical = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.linalg.norm(data.upsilon - canonical) <= 1e-8
    res = data.invariant_residuals()
    assert res["rank_ML"] == 2
    assert res["ml_identity"] <= 1e-10
    assert res["upsilon_submatrix"] <= 1e-8
    # Wronskian constancy: Upsilon at k=0 and k=m agree
    j = e2.j
    ups0 = data.theta.values[0].conj().T @ j @ data.theta.values[0]
    assert np.linalg.norm(ups0 - data.upsilon) < 1e-9
    # theta columns solve the system
    for col in range(2):
        assert sx.is_solution(e2, data.theta.column(col))


def test_assemble_rejects_lambda_not_below_nu(e1):
    with pytest.raises(sx.RangeMismatch):
        sx.assemble_theta(e1, 0.0, 0.0, d=1)
    with pytest.raises(sx.RangeMismatch):
        sx.assemble_theta(e1, 0.0, 0.5, d=1)


def test_friedrichs_data_json(e2_data):
    blob = e2_data.to_json_dict()
    assert blob["d"] == 2 and blob["indices"] == [1]
    assert blob["upsilon"][0][1] == pytest.approx([1.0, 0.0], abs=1e-10)
    assert len(blob["M"]) == 2 and len(blob["M"][0]) == 2


def test_boundary_form_conjoined_column_vanishes(e1):
    res = sx.recessive_solution(e1, -1.0, [20, 40, 80], m=0)
    col = res.basis.column(0)
    value, converged = sx.boundary_form_limit(col, col, 60, 15)
    assert converged and abs(value) < 1e-12


def test_boundary_form_wronskian_pair(e1):
    K = 40
    rec = sx.VectorSolution(0.0, np.array([[1.0, 0.0]] * (K + 2)))
    dom = sx.VectorSolution(0.0, np.array([[float(k), 1.0] for k in range(K + 2)]))
    value, converged = sx.boundary_form_limit(dom, rec, K, 10)
    assert converged
    assert value == pytest.approx(1.0)


def test_boundary_form_decaying_pair(e2):
    res = sx.recessive_solution(e2, -1.0, [40, 80, 160], m=0)
    col = res.basis.column(0)
    decaying = sx.propagate_forward(e2, col.values[0] * 0.3, -1.0, 120)
    value, converged = sx.boundary_form_limit(decaying, col, 110, 25)
    assert converged and abs(value) < 1e-7


def membership_pair(sysm, values):
    return RelationPair(values, canonical_forcing(sysm, values))


def test_membership_zero_pair(e1, e1_data):
    verdict = sx.friedrichs_membership(e1, RelationPair(np.zeros((80, 2)), np.zeros((80, 2))), e1_data)
    assert verdict.member


def test_membership_trivialized_recessive_e2(e2, e2_data):
    data = e2_data
    col = data.recessive.basis.column(0)
    triv = sx.trivialize(e2, col, 0, 2)
    verdict = sx.friedrichs_membership(e2, membership_pair(e2, triv.values), data)
    assert verdict.member, verdict.conditions
    assert all(c["ok"] for c in verdict.conditions.values())


def test_membership_rejects_dominant_on_tail(e1, e1_data):
    data = e1_data
    dom = sx.dominant_solution(e1, data.recessive.basis, 0).column(0)
    verdict = sx.friedrichs_membership(e1, membership_pair(e1, dom.values), data)
    assert not verdict.member
    assert "z_tail" in verdict.failed_conditions()


def test_membership_rejects_nonzero_x0(e1, e1_data):
    data = e1_data
    # untrivialized recessive column: admissible solution with x_0 != 0
    col = data.recessive.basis.column(0)
    verdict = sx.friedrichs_membership(e1, membership_pair(e1, col.values), data)
    assert not verdict.member
    assert verdict.failed_conditions() == ["x0"]
    assert verdict.conditions["x0"]["value"] > 1e-6


def test_membership_accepts_trivialized_recessive_e1(e1, e1_data):
    data = e1_data
    col = data.recessive.basis.column(0)
    triv = sx.trivialize(e1, col, 0, 2)
    verdict = sx.friedrichs_membership(e1, membership_pair(e1, triv.values), data)
    assert verdict.member


def test_accepted_pairs_have_vanishing_lagrange_boundary(e2, e2_data):
    # finite-horizon echo of self-adjointness: boundary terms of accepted pairs vanish
    data = e2_data
    col = data.recessive.basis.column(0)
    pairs = [
        membership_pair(e2, sx.trivialize(e2, col, 0, 2).values),
        membership_pair(e2, sx.trivialize(e2, col, 1, 4).values),
    ]
    for pair in pairs:
        assert sx.friedrichs_membership(e2, pair, data).member
    j = e2.j
    boundaries = []
    for K in (40, 80, 150):
        z, w = pairs[0].z, pairs[1].z
        boundaries.append(abs(w[0].conj() @ j @ z[0] - w[K + 1].conj() @ j @ z[K + 1]))
    assert boundaries[-1] < 1e-10
    assert boundaries[-1] <= boundaries[0] + 1e-12
