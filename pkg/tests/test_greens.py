import cmath
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lossycma import greens as gr
from lossycma.errors import (BranchViolation, IllConditionedPrediction, PoleAtMinusOne,
                             RankDeficient, SingularCoincidentPoints)
from lossycma.greens import ComplexImageSet, HalfSpace

from cases import EPS, LAM, mesh

K0 = 2 * np.pi / LAM


class TestKeps:
    def test_homogeneous(self):
        assert gr.k_eps(1) == 0

    def test_pec_limit(self):
        assert abs(gr.k_eps(1e12) + 1) < 1e-11

    def test_lossy_value(self):
        assert gr.k_eps(16 - 16j) == pytest.approx((-511 + 32j) / 545, abs=1e-15)
        assert gr.k_eps(16 - 16j) == pytest.approx(-0.93761 + 0.05872j, abs=1e-5)

    def test_pole(self):
        with pytest.raises(PoleAtMinusOne):
            gr.k_eps(-1)
        with pytest.raises(PoleAtMinusOne):
            HalfSpace(-1)

    def test_active_medium_rejected(self):
        with pytest.raises(ValueError):
            HalfSpace(4 + 1j)


class TestDistances:
    def test_direct(self):
        assert gr.distance_direct(3, 4, 0) == 5
        assert gr.distance_direct(0, 1.5, 1.5) == 0
        assert gr.distance_direct(1e-3, 0.7, 0.7) == 1e-3

    def test_image(self):
        assert gr.distance_image(0, 1, 1) == 2
        assert gr.distance_image(3, 2, 2) == 5

    def test_complex_image(self):
        assert gr.distance_complex_image(0.3, 1.0, 2.0, 0) == gr.distance_image(0.3, 1.0, 2.0)
        # 4 - j(3j) = 7
        assert gr.distance_complex_image(0, 2, 2, 3j) == pytest.approx(7, abs=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(rho=st.floats(0, 10), z=st.floats(0.01, 10), zp=st.floats(0.01, 10),
           vr=st.floats(-20, 20), vi=st.floats(-20, 20))
    def test_branch_and_bound(self, rho, z, zp, vr, vi):
        d = gr.distance_complex_image(rho, z, zp, complex(vr, vi))
        assert np.real(d) >= 0
        assert gr.distance_image(rho, z, zp) >= 2 * min(z, zp)


class TestKernels:
    def test_free_phase_wrap(self):
        d = LAM
        assert gr.g_free(d, 0, 0, K0) == pytest.approx(1 / (4 * np.pi * d), rel=1e-12)

    def test_free_static(self):
        assert gr.g_free(0.3, 1, 0.6, 0.0) == pytest.approx(1 / (4 * np.pi * 0.5), rel=1e-15)

    def test_free_decay(self):
        d = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
        mags = np.abs(gr.g_free(d, 0, 0, K0))
        assert np.all(np.diff(mags) < 0)
        np.testing.assert_allclose(mags * d, 1 / (4 * np.pi), rtol=1e-14)

    def test_coincident(self):
        with pytest.raises(SingularCoincidentPoints):
            gr.g_free(0, 1, 1, K0)
        with pytest.raises(SingularCoincidentPoints):
            gr.g_pec(0, 1, 1, K0)

    def test_pec_is_direct_plus_image(self):
        rho, z, zp = 0.01, 0.3, 0.4
        ref = gr.g_free(rho, z, zp, K0) + gr.g_free(rho, z, -zp, K0)
        assert gr.g_pec(rho, z, zp, K0) == pytest.approx(ref, rel=1e-15)
        assert abs(gr.g_pec(1e9, z, zp, K0)) < 1e-9

    def test_reductions_exact(self):
        rho = np.linspace(0.001, 1.0, 7)[:, None]
        z = np.linspace(0.05, 1.0, 5)[None, :]
        zp = 0.37
        free = ComplexImageSet.free()
        pec = ComplexImageSet.pec()
        np.testing.assert_array_equal(gr.g_lossy(rho, z, zp, K0, free), gr.g_free(rho, z, zp, K0))
        np.testing.assert_array_equal(gr.g_lossy(rho, z, zp, K0, pec), gr.g_pec(rho, z, zp, K0))

    @settings(max_examples=50, deadline=None)
    @given(rho=st.floats(1e-4, 2.0), z=st.floats(0.01, 2.0), zp=st.floats(0.01, 2.0))
    def test_reciprocity(self, rho, z, zp):
        im = gr.prony_fit(mesh().spec, HalfSpace(EPS))
        assert gr.g_lossy(rho, z, zp, K0, im) == gr.g_lossy(rho, zp, z, K0, im)
        assert gr.g_pec(rho, z, zp, K0) == gr.g_pec(rho, zp, z, K0)


class TestSpectral:
    def test_no_interface(self):
        kz = K0 * np.array([1.0, 0.5, -0.3j, -4j])
        np.testing.assert_allclose(gr.tm_reflection_spectral(kz, 1.0, K0), 0, atol=1e-15)

    def test_quasi_static_limit(self):
        g = gr.tm_reflection_spectral(-1e7j * K0, EPS, K0)
        assert g == pytest.approx(-gr.k_eps(EPS), abs=1e-6)
        # the fitted residual decays with |kz0|
        r = [abs(gr.tm_reflection_spectral(-1j * t * K0, EPS, K0) + gr.k_eps(EPS)) for t in (1, 10, 100)]
        assert r[0] > r[1] > r[2]

    def test_normal_incidence(self):
        for eps in (2.0, 9.0, 81.0):
            s = np.sqrt(eps)
            assert gr.tm_reflection_spectral(K0, eps, K0) == pytest.approx((eps - s) / (eps + s), rel=1e-13)

    def test_branch(self):
        kz1 = gr.kz_lower(K0 * np.array([1.0, 0.1 - 2j, -3j]), EPS, K0)
        assert np.all(kz1.imag <= 0)
        with pytest.raises(BranchViolation):
            gr.tm_reflection_spectral(1j * K0, EPS, K0)


class TestProny:
    def test_two_exponentials(self):
        dt = 0.1
        t = np.arange(20) * dt
        y = 3 * np.exp(-2 * t) + 5 * np.exp(-t)
        a, s = gr.prony(y, 2, dt)
        order = np.argsort(s.real)
        np.testing.assert_allclose(s[order], [-2, -1], atol=1e-8)
        np.testing.assert_allclose(a[order], [3, 5], atol=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_rank_exact_recovery(self, M, seed):
        rng = np.random.default_rng(seed)
        # well-separated decaying oscillations on a 64-sample grid
        rate = -np.sort(rng.uniform(0.05, 1.5, M))
        freq = np.linspace(-2.5, 2.5, M) + rng.uniform(-0.1, 0.1, M)
        s_true = rate + 1j * freq
        a_true = rng.uniform(0.5, 2.0, M) * np.exp(1j * rng.uniform(0, 2 * np.pi, M))
        dt = 0.1
        t = np.arange(64) * dt
        y = np.exp(np.outer(t, s_true)) @ a_true
        a, s = gr.prony(y, M, dt)
        for sv, av in zip(s_true, a_true):
            i = np.argmin(np.abs(s - sv))
            assert abs(s[i] - sv) <= 1e-8 * max(1, abs(sv))
            assert abs(a[i] - av) <= 1e-8 * max(1, abs(av))

    def test_rank_deficient(self):
        t = np.arange(30) * 0.1
        y = 2 * np.exp(-t)
        with pytest.raises(RankDeficient) as ei:
            gr.prony(y, 3, 0.1)
        assert ei.value.recoverable == 1
        with pytest.raises(RankDeficient):
            gr.prony(np.zeros(10), 2)

    def test_ill_conditioned(self):
        t = np.arange(40) * 0.1
        y = np.exp(-t) + np.exp(-(1 + 1e-6) * t)
        with pytest.raises(IllConditionedPrediction) as ei:
            gr.prony(y, 2, 0.1, rank_tol=1e-16)
        assert ei.value.condition > 1e13

    def test_fit_homogeneous(self):
        im = gr.prony_fit(mesh().spec, HalfSpace(1.0))
        assert im.M == 0 and im.K_eps == 0

    def test_fit_pec_limit(self):
        im = gr.prony_fit(mesh().spec, HalfSpace(1e8))
        # the residual images only carry the tiny non-PEC remainder
        assert np.max(np.abs(im.u)) < 5e-3
        assert im.K_eps == pytest.approx(-1, abs=1e-7)

    def test_fit_lossy(self):
        im = gr.prony_fit(mesh().spec, HalfSpace(EPS))
        assert im.M == 5
        assert im.fit_residual < 1e-3
        assert np.all(np.isfinite(im.u))

    def test_json_roundtrip(self):
        im = gr.prony_fit(mesh().spec, HalfSpace(EPS))
        d = json.loads(im.to_json())
        assert set(d) >= {"K_eps", "u", "v", "M", "fit_residual"}
        assert d["M"] == 5 and len(d["u"]) == 5 and len(d["u"][0]) == 2
        back = ComplexImageSet.from_json(im.to_json())
        np.testing.assert_array_equal(back.u, im.u)
        np.testing.assert_array_equal(back.v, im.v)
        assert back.K_eps == im.K_eps


class TestSommerfeldOracle:
    def test_benchmark_point(self):
        im = gr.prony_fit(mesh().spec, HalfSpace(EPS))
        rho, z = 0.1 * LAM, 0.25 * LAM
        ref = gr.sommerfeld_oracle(rho, z, z, K0, EPS)
        dcim = gr.g_lossy(rho, z, z, K0, im) - gr.g_free(rho, z, z, K0)
        assert abs(dcim - ref) / abs(ref) < 1e-2

    def test_homogeneous(self):
        assert abs(gr.sommerfeld_oracle(0.2 * LAM, 0.3 * LAM, 0.1 * LAM, K0, 1.0)) < 1e-12

    def test_pec_limit(self):
        rho, z, zp = 0.1 * LAM, 0.25 * LAM, 0.3 * LAM
        ref = gr.g_free(rho, z, -zp, K0)
        val = gr.sommerfeld_oracle(rho, z, zp, K0, 1e8)
        assert abs(val - ref) / abs(ref) < 1e-3

    def test_decay_with_height(self):
        near = gr.sommerfeld_oracle(0.1 * LAM, 0.5 * LAM, 0.5 * LAM, K0, EPS)
        far = gr.sommerfeld_oracle(0.1 * LAM, 5 * LAM, 5 * LAM, K0, EPS)
        assert abs(far) < abs(near)

    def test_deterministic(self):
        a = gr.sommerfeld_oracle(0.3 * LAM, 0.2 * LAM, 0.4 * LAM, K0, EPS)
        b = gr.sommerfeld_oracle(0.3 * LAM, 0.2 * LAM, 0.4 * LAM, K0, EPS)
        assert a == b

    def test_requires_positive_height(self):
        with pytest.raises(ValueError):
            gr.sommerfeld_oracle(0.1, 0.0, 0.0, K0, EPS)
