from __future__ import annotations

import numpy as np
import pytest

from dspin import curves as cv
from dspin import transport as tr
from dspin.errors import ConfigInvalid, GridTooCoarse, ZeroAxis, ZeroLengthSegment

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0 + 0j, -1.0])


def test_su2_exp_examples():
    U = tr.su2_exp([0, 0, 1], np.pi)
    np.testing.assert_allclose(U.matrix, np.diag([1j, -1j]), atol=1e-15)
    assert abs(U.trace()) < 1e-15
    assert tr.su2_exp([1, 0, 0], 0.0).distance(tr.SU2Operator.identity()) == 0.0
    np.testing.assert_allclose(tr.su2_exp([1, 0, 0], 2 * np.pi).matrix, -np.eye(2), atol=1e-15)
    with pytest.raises(ZeroAxis):
        tr.su2_exp([0, 0, 0], 1.0)


def test_quaternion_matrix_roundtrip(rng):
    for _ in range(10):
        q = rng.normal(size=4)
        U = tr.SU2Operator(q / np.linalg.norm(q))
        assert U.unitarity_defect() < 1e-14 and U.det_defect() < 1e-14
        assert tr.SU2Operator.from_matrix(U.matrix).distance(U) < 1e-14
        # operator 2-norm of the difference equals the quaternion distance
        q2 = rng.normal(size=4)
        V = tr.SU2Operator(q2 / np.linalg.norm(q2))
        assert abs(np.linalg.norm(U.matrix - V.matrix, 2) - U.distance(V)) < 1e-13
        np.testing.assert_allclose((U @ V).matrix, U.matrix @ V.matrix, atol=1e-14)


def test_rotation_matches_pauli_conjugation(rng):
    sig = [SX, SY, SZ]
    q = rng.normal(size=4)
    U = tr.SU2Operator(q / np.linalg.norm(q))
    M = U.matrix
    R = np.array([[0.5 * np.trace(sig[k] @ M @ sig[l] @ M.conj().T).real for l in range(3)] for k in range(3)])
    np.testing.assert_allclose(U.rotation(), R, atol=1e-14)


def test_spinor_phase_and_bloch(rng):
    for _ in range(5):
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        sp = tr.Spinor.from_bloch(m)
        assert abs(np.linalg.norm(sp.amp) - 1) < 1e-12
        assert sp.amp[0].imag == 0 and sp.amp[0].real > 0
        np.testing.assert_allclose(sp.bloch(), m, atol=1e-12)
    with pytest.raises(ConfigInvalid):
        tr.Spinor.from_bloch([1.0, 1.0, 0.0])


def test_unitarity_per_factor_and_cumulative(viv_cyl):
    U = tr.path_ordered_propagator(viv_cyl, 0.0, viv_cyl.length, 10_000)
    assert U.unitarity_defect() < 1e-9 and U.det_defect() < 1e-9


def test_composition_and_reversal(viv_sph):
    L = viv_sph.length
    n, k = 3000, 1100
    s2 = k * L / n
    U13 = tr.path_ordered_propagator(viv_sph, 0.0, L, n)
    U12 = tr.path_ordered_propagator(viv_sph, 0.0, s2, k)
    U23 = tr.path_ordered_propagator(viv_sph, s2, L, n - k)
    assert (U23 @ U12).distance(U13) < 1e-9
    R = tr.path_ordered_propagator(viv_sph, L, 0.0, n)
    assert R.distance(U13.dagger()) < 1e-9
    assert tr.path_ordered_propagator(viv_sph, 1.0, 1.0, 5).distance(tr.SU2Operator.identity()) == 0.0


def test_c1_constant_axis(c1):
    b = 1 / np.sqrt(2)
    for n in (1, 7, 300):
        for s1, s2 in ((0.0, 2.5), (1.0, 7.0), (4.0, 0.5)):
            U = tr.path_ordered_propagator(c1, s1, s2, n)
            V = tr.su2_exp([0, 0, -1], b * (s2 - s1))
            assert U.distance(V) < 1e-10
            # commutes with any rotation about e_z
            W = tr.su2_exp([0, 0, 1], 0.37 * n)
            assert (U @ W).distance(W @ U) < 1e-9


def test_second_order_self_convergence(viv_cyl):
    L = viv_cyl.length
    ref = tr.path_ordered_propagator(viv_cyl, 0.0, L, 64_000)
    errs = [tr.path_ordered_propagator(viv_cyl, 0.0, L, n).distance(ref) for n in (500, 1000, 2000)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.2)


def test_ode_oracle(c1, viv_cyl):
    U = tr.ode_propagator_oracle(c1, 0.5, 4.0, tol=1e-11)
    assert U.distance(tr.su2_exp([0, 0, -1], 3.5 / np.sqrt(2))) < 1e-10
    line = cv.straight_line(2.0)
    assert tr.ode_propagator_oracle(line, 0.0, 2.0).distance(tr.SU2Operator.identity()) < 1e-14
    Uo = tr.ode_propagator_oracle(viv_cyl, 0.0, 3.0, tol=1e-11)
    Up = tr.path_ordered_propagator(viv_cyl, 0.0, 3.0, 20_000)
    assert Uo.distance(Up) < 1e-6


def test_frame_rotation_oracle(viv_sph):
    # without an extra field the spin co-rotates with the Darboux frame
    L = viv_sph.length
    U = tr.path_ordered_propagator(viv_sph, 0.2, L - 0.3, 20_000)
    R = tr.frame_transport_rotation(viv_sph, 0.2, L - 0.3)
    assert np.max(np.abs(U.rotation() - R)) < 1e-7


def test_adiabatic_c1_half_turn(c1):
    L = c1.length
    U, summ = tr.adiabatic_propagator(c1, 0.0, L / 2)
    assert abs(summ.Phi - np.pi) < 1e-12
    np.testing.assert_allclose(summ.h, [-1 / np.sqrt(2), 0, 1 / np.sqrt(2)], atol=1e-12)
    assert abs(tr.wilson_loop(U)) < 1e-12
    np.testing.assert_allclose(tr.adiabatic_lab_axis(c1, summ, 0.3), [0, 0, -1], atol=1e-12)


def test_adiabatic_identities(viv_sph):
    U, summ = tr.adiabatic_propagator(viv_sph, 0.0, viv_sph.length, 512)
    assert abs(tr.wilson_loop(U) - 2 * np.cos(summ.Phi / 2)) < 1e-12
    assert abs(summ.Phi - np.linalg.norm([summ.phi_s, summ.phi_N, summ.phi_q])) < 1e-14
    assert abs(np.linalg.norm(summ.h) - 1) < 1e-14
    U0, s0 = tr.adiabatic_propagator(viv_sph, 1.0, 1.0)
    assert s0.Phi == 0 and abs(tr.wilson_loop(U0) - 2) < 1e-15
    with pytest.raises(ZeroLengthSegment):
        tr.adiabatic_propagator(viv_sph, 1.0, 1.0, allow_empty=False)
    with pytest.raises(ConfigInvalid):
        tr.adiabatic_propagator(viv_sph, 0.0, 1.0, quad_n=32)


@pytest.mark.parametrize("alpha", [np.pi / 6, np.pi / 3, 2 * np.pi / 3])
def test_latitude_phi_N(alpha):
    c = cv.latitude_circle(alpha)
    _, summ = tr.adiabatic_propagator(c, 0.0, c.length, 512)
    assert abs(summ.phi_N - 2 * np.pi * np.cos(alpha)) < 1e-10


def test_wilson_trivial_values():
    assert tr.wilson_loop(tr.SU2Operator.identity()) == 2
    assert abs(tr.wilson_loop(tr.su2_exp([0, 1, 0], 2 * np.pi)) + 2) < 1e-15


def test_texture_c1(c1):
    tex = tr.evolve_spin_texture(c1, [1.0, 0.0, 0.0], 512)
    assert len(tex) == 513 and len(tex.rows()[0]) == len(tr.TEXTURE_COLUMNS)
    k = 256  # s = L/2 = sqrt(2) pi
    np.testing.assert_allclose(tex.m_lab[k], [-1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(tex.m_lab, axis=-1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.einsum("kij,kj->ki", tex.frame, tex.m_lab), tex.m_darboux, atol=1e-12)
    still = tr.evolve_spin_texture(c1, [0, 0, -1], 64)
    np.testing.assert_allclose(still.m_lab, np.broadcast_to([0, 0, -1], still.m_lab.shape), atol=1e-12)


def test_texture_reverse_and_zero_field():
    line = cv.straight_line(3.0)
    tex = tr.evolve_spin_texture(line, [0, 1, 0], 32, direction="reverse")
    assert tex.s[0] == 3.0 and tex.s[-1] == 0.0
    np.testing.assert_allclose(tex.m_lab, np.broadcast_to([0, 1, 0], tex.m_lab.shape), atol=1e-15)
    rep = tr.precession_residual(tex)
    assert rep.r1 < 1e-12 and rep.r2 < 1e-12
    with pytest.raises(ConfigInvalid):
        tr.evolve_spin_texture(line, [0, 1, 0], 32, direction="sideways")


def test_precession_laws(c1, viv_sph):
    rep = tr.precession_residual(tr.evolve_spin_texture(c1, [1, 0, 0], 2048))
    assert rep.r1 < 1e-6 and rep.satisfied_law == "lab"
    assert rep.r2 > 0.1
    rs = tr.precession_residual(tr.evolve_spin_texture(viv_sph, [1, 0, 0], 4096))
    assert rs.r1 < 1e-5
    coarse = tr.evolve_spin_texture(viv_sph, [1, 0, 0], 8)
    with pytest.raises(GridTooCoarse):
        tr.precession_residual(coarse)
    assert tr.precession_residual(coarse, strict=False).fd_error > tr.FD_ERROR_LIMIT


def test_adiabatic_texture_on_c1(c1):
    a = tr.evolve_spin_texture(c1, [1, 0, 0], 64, method="adiabatic")
    p = tr.evolve_spin_texture(c1, [1, 0, 0], 64)
    # for a constant field the adiabatic operator is exact
    np.testing.assert_allclose(a.m_lab, p.m_lab, atol=1e-9)
