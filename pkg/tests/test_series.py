"""Sphere-sum series, growth exponents, bound checks, good-vector probe."""

from types import SimpleNamespace

import numpy as np
import pytest

import freerep.series as series_mod
from freerep.freegroup import Alphabet
from freerep.functions import coefficient, deepen, first_shell
from freerep.generate import ai_instance, random_scalar_system, random_system
from freerep.series import (
    CoefficientSeries,
    budget_nmax,
    default_threads,
    exponent_fit,
    good_vector_probe,
    good_vector_verdict,
    haagerup_violations,
    phi_eps_norm,
    sphere_sums,
)
from freerep.systems import normalize

A, AI, B, BI = 0, 1, 2, 3


def random_family(nsys, seed):
    rng = np.random.default_rng(seed)
    vecs = {
        a: rng.standard_normal(nsys.dims[a])
        + 1j * rng.standard_normal(nsys.dims[a])
        for a in nsys.alphabet.letters
    }
    return first_shell(nsys, vecs)


def dense_sphere_sums(v, w, nmax):
    """Independent reference via canonical-family matrix coefficients."""
    alpha = v.system.alphabet
    return [
        sum(abs(coefficient(v, x, w)) ** 2 for x in alpha.sphere(n))
        for n in range(nmax + 1)
    ]


def synthetic(values):
    return CoefficientSeries(s=tuple(float(x) for x in values), v_norm=1.0,
                             w_norm=1.0, cutoff=False, nmax=len(values) - 1)


class TestSphereSums:
    def test_s0_frozen_values(self, s0_norm):
        v = first_shell(s0_norm, {A: [1.0]})
        ser = sphere_sums(v, v, 3)
        assert ser.s[0] == pytest.approx(1.0, abs=1e-12)
        assert ser.s[1] == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert ser.s[2] == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert ser.s[3] == pytest.approx(46.0 / 27.0, abs=1e-12)
        assert ser.v_norm == pytest.approx(1.0, abs=1e-12)
        assert not ser.cutoff

    def test_matches_dense_scalar(self):
        nsys = normalize(random_scalar_system(23))
        v = random_family(nsys, 1)
        w = random_family(nsys, 2)
        ser = sphere_sums(v, w, 4)
        ref = dense_sphere_sums(v, w, 4)
        assert np.allclose(ser.s, ref, rtol=1e-12, atol=1e-12)

    def test_matches_dense_matrix(self):
        nsys = normalize(random_system(29, k=2, max_dim=2))
        v = random_family(nsys, 3)
        w = random_family(nsys, 4)
        ser = sphere_sums(v, w, 3)
        ref = dense_sphere_sums(v, w, 3)
        assert np.allclose(ser.s, ref, rtol=1e-12, atol=1e-12)

    def test_matrix_path_matches_scalar_path(self, monkeypatch):
        nsys = normalize(random_scalar_system(31))
        v = random_family(nsys, 5)
        w = random_family(nsys, 6)
        ref = sphere_sums(v, w, 6)
        monkeypatch.setattr(series_mod, "_subtree_scalar",
                            series_mod._subtree_matrix)
        alt = sphere_sums(v, w, 6)
        assert np.allclose(alt.s, ref.s, rtol=1e-12, atol=1e-14)

    def test_swap_symmetry(self):
        nsys = normalize(random_system(37, k=2, max_dim=2))
        v = random_family(nsys, 7)
        w = random_family(nsys, 8)
        fwd = sphere_sums(v, w, 5)
        bwd = sphere_sums(w, v, 5)
        assert np.allclose(fwd.s, bwd.s, rtol=1e-11, atol=1e-12)

    def test_thread_determinism(self):
        nsys = normalize(random_system(41, k=2, max_dim=2))
        v = random_family(nsys, 9)
        w = random_family(nsys, 10)
        assert sphere_sums(v, w, 6, threads=2).s == \
            sphere_sums(v, w, 6, threads=1).s

    def test_requires_depth_zero(self, s0_norm):
        v = first_shell(s0_norm, {A: [1.0]})
        with pytest.raises(ValueError, match="depth-0"):
            sphere_sums(deepen(v, 1), v, 2)

    def test_requires_shared_system(self):
        n1 = normalize(random_scalar_system(43))
        n2 = normalize(random_scalar_system(43))
        with pytest.raises(ValueError, match="system mismatch"):
            sphere_sums(random_family(n1, 1), random_family(n2, 1), 2)


class TestBudget:
    def test_horizons(self):
        two = Alphabet(2)
        assert budget_nmax(SimpleNamespace(alphabet=two, dims=(1,) * 4), 99) == 12
        assert budget_nmax(SimpleNamespace(alphabet=two, dims=(1, 3, 2, 3)), 99) == 9
        assert budget_nmax(SimpleNamespace(alphabet=Alphabet(3), dims=(1,) * 6), 99) == 8
        assert budget_nmax(SimpleNamespace(alphabet=two, dims=(1,) * 4), 5) == 5
        assert budget_nmax(SimpleNamespace(alphabet=two, dims=(65,) * 4), 3) == 0

    def test_cutoff_flag(self):
        nsys = normalize(random_system(47, k=3, max_dim=1))
        v = random_family(nsys, 11)
        ser = sphere_sums(v, v, 14)
        assert ser.cutoff
        assert ser.nmax == 8
        assert len(ser.s) == 9

    def test_within_budget_not_flagged(self):
        nsys = normalize(random_scalar_system(53))
        ser = sphere_sums(random_family(nsys, 12), random_family(nsys, 12), 6)
        assert not ser.cutoff
        assert ser.nmax == 6
        assert len(ser.s) == 7

    def test_default_threads_env(self, monkeypatch):
        monkeypatch.delenv("FREEREP_THREADS", raising=False)
        assert default_threads() == 1
        monkeypatch.setenv("FREEREP_THREADS", "3")
        assert default_threads() == 3
        monkeypatch.setenv("FREEREP_THREADS", "junk")
        assert default_threads() == 1
        monkeypatch.setenv("FREEREP_THREADS", "0")
        assert default_threads() == 1


class TestHaagerupBound:
    def test_s0_clean(self, s0_norm):
        v = first_shell(s0_norm, {A: [1.0]})
        assert haagerup_violations(sphere_sums(v, v, 8)) == []

    def test_random_systems_clean(self):
        for seed in (61, 62, 63):
            nsys = normalize(random_system(seed, k=2, max_dim=2))
            v = random_family(nsys, seed)
            w = random_family(nsys, seed + 100)
            ser = sphere_sums(v, w, 6)
            assert haagerup_violations(ser) == []
            scale = (ser.v_norm * ser.w_norm) ** 2
            for n, s in enumerate(ser.s):
                assert s <= (n + 1) ** 2 * scale * (1 + 1e-9) + 1e-9

    def test_flags_planted_violation(self):
        bad = synthetic([1.0, 2.0, 3.0, 99.0])
        assert haagerup_violations(bad) == [3]


class TestExponentFit:
    def test_constant_series(self):
        fit = exponent_fit(synthetic([1.0] * 13))
        assert fit.p_hat == pytest.approx(1.0, abs=1e-9)
        assert fit.slope == pytest.approx(0.0, abs=1e-9)
        assert fit.confidence > 0.999

    def test_quadratic_series(self):
        fit = exponent_fit(synthetic([1.0] + [float(n * n) for n in range(1, 13)]))
        assert fit.p_hat == pytest.approx(3.0, abs=1e-9)
        assert fit.confidence > 0.999
        assert fit.window == (3, 12)

    def test_clamped_to_range(self):
        fit = exponent_fit(synthetic([1.0] + [float(n ** 4) for n in range(1, 13)]))
        assert fit.p_hat == 3.0
        decay = exponent_fit(synthetic([4.0 ** (-n) for n in range(13)]))
        assert decay.p_hat == 1.0

    def test_short_series_raises(self):
        with pytest.raises(ValueError, match="series too short"):
            exponent_fit(synthetic([1.0] * 6))

    def test_all_zero_raises(self):
        with pytest.raises(ValueError, match="all-zero series"):
            exponent_fit(synthetic([0.0] * 13))

    def test_s0_measured_exponent(self, s0_norm):
        v = first_shell(s0_norm, {A: [1.0]})
        ser = sphere_sums(v, v, 12)
        fit = exponent_fit(ser)
        assert 2.7 <= fit.p_hat <= 3.3


class TestPhiEps:
    def test_requires_positive_eps(self, s0_norm):
        v = first_shell(s0_norm, {A: [1.0]})
        with pytest.raises(ValueError, match="positive"):
            phi_eps_norm(sphere_sums(v, v, 3), 0.0)

    def test_damped_sum_and_tail(self, s0_norm):
        v = first_shell(s0_norm, {A: [1.0]})
        ser = sphere_sums(v, v, 8)
        tight = phi_eps_norm(ser, 2.5)
        expect = sum(s * np.exp(-2.5 * n) for n, s in enumerate(ser.s))
        assert tight.value == pytest.approx(expect, rel=1e-12)
        assert tight.tail_ok
        loose = phi_eps_norm(ser, 0.3)
        assert not loose.tail_ok
        assert loose.value > tight.value


class TestGoodVector:
    def test_bounded_series_plausible(self):
        verdict = good_vector_verdict(synthetic([1.0] * 13))
        assert verdict.bounded
        assert verdict.label == "GVB-plausible"
        assert verdict.heuristic

    def test_growing_series_implausible(self):
        verdict = good_vector_verdict(
            synthetic([1.0] + [float(n * n) for n in range(1, 13)]))
        assert not verdict.bounded
        assert verdict.label == "GVB-implausible"
        assert verdict.sup_s == 144.0

    def test_s0_probe_implausible(self, s0_norm):
        v = first_shell(s0_norm, {A: [1.0]})
        assert good_vector_probe(v, 10).label == "GVB-implausible"

    def test_bounded_class_probe_plausible(self):
        nsys = normalize(ai_instance(6))
        v = random_family(nsys, 13)
        assert good_vector_probe(v, 9).label == "GVB-plausible"
