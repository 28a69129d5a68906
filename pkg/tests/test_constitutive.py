import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from viscostab import constitutive as cm
from viscostab import tensor_core as tc

ALL_MODELS = [
    cm.ModelSpec("oldroyd-b"),
    cm.ModelSpec("giesekus", alpha=0.1),
    cm.ModelSpec("giesekus", alpha=0.5),
    cm.ModelSpec("giesekus", alpha=0.9),
    cm.ModelSpec("fene-p", b=4.0),
    cm.ModelSpec("fene-p", b=10.0),
    cm.ModelSpec("fene-p", b=100.0),
    cm.ModelSpec("johnson-segalman", a=0.5),
    cm.ModelSpec("ptt-exp", p=0.01),
    cm.ModelSpec("ptt-exp", p=0.1),
    cm.ModelSpec("ptt-exp", p=1.0),
    cm.ModelSpec("ptt-linear", p=0.2),
]
IDS = [m.label for m in ALL_MODELS]
DIAG = np.diag([2.0, 1.0, 1.0])


def samples(m, n, lo=1e-3, hi=50.0, seed=0):
    rng = np.random.default_rng(seed)
    from viscostab.audit import sample_spd

    return sample_spd(m, n, (lo, hi), rng)


def mp_psi1(m, lam, dps=50):
    """High-precision literal free energy from eigenvalues."""
    with mp.workdps(dps):
        lam = [mp.mpf(float(x)) for x in lam]
        tr = sum(lam)
        lndet = sum(mp.log(x) for x in lam)
        k = mp.mpf(m.mu) / (2 * mp.mpf(m.rho))
        if m.kind is cm.ModelKind.FENE_P:
            b = mp.mpf(m.b)
            c = 1 - 3 / b
            return k * (-b * mp.log(1 - tr / b) + b * mp.log(c) - lndet / c)
        return k * (tr - 3 - lndet)


class TestExamples:
    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_identity_is_equilibrium(self, m):
        eye = np.eye(3)
        assert cm.psi1(m, eye) == 0.0
        assert np.all(cm.dpsi1_dB(m, eye) == 0.0)
        assert np.all(cm.relax_f(m, eye) == 0.0)
        assert np.all(cm.elastic_stress(m, eye) == 0.0)
        assert cm.zeta_mech(m, np.zeros((3, 3)), eye, 300.0) == 0.0

    def test_oldroyd_b_values(self):
        m = cm.ModelSpec("oldroyd-b")
        assert cm.psi1(m, DIAG) == pytest.approx(0.5 * (1.0 - math.log(2.0)), rel=1e-14)
        assert cm.psi1(m, DIAG) == pytest.approx(0.153426, abs=5e-7)
        np.testing.assert_allclose(cm.dpsi1_dB(m, DIAG), np.diag([0.25, 0, 0]), atol=1e-15)
        np.testing.assert_allclose(cm.elastic_stress(m, DIAG), np.diag([2 / 3, -1 / 3, -1 / 3]), atol=1e-15)

    def test_fene_p_value_against_high_precision(self):
        m = cm.ModelSpec("fene-p", b=10.0)
        ref = mp_psi1(m, [2.0, 1.0, 1.0])
        assert cm.psi1(m, DIAG) == pytest.approx(float(ref), rel=1e-14)
        assert cm.psi1(m, DIAG) == pytest.approx(0.275649, abs=2e-6)

    def test_giesekus_relax(self):
        m = cm.ModelSpec("giesekus", alpha=0.5)
        np.testing.assert_allclose(cm.relax_f(m, DIAG), np.diag([1.5, 0, 0]), atol=1e-15)

    def test_ptt_exp_relax(self):
        m = cm.ModelSpec("ptt-exp", p=0.1)
        np.testing.assert_allclose(cm.relax_f(m, DIAG), np.diag([math.exp(0.1), 0, 0]), rtol=1e-15)
        assert cm.relax_f(m, DIAG)[0, 0] == pytest.approx(1.105171, abs=1e-6)

    def test_stress_linear_in_slip(self):
        js = cm.ModelSpec("johnson-segalman", a=0.5)
        ob = cm.ModelSpec("oldroyd-b")
        np.testing.assert_allclose(cm.elastic_stress(js, DIAG), 0.5 * cm.elastic_stress(ob, DIAG), atol=1e-15)

    def test_zeta_examples(self):
        m = cm.ModelSpec("oldroyd-b")
        D = np.diag([1.0, -1.0, 0.0])
        assert cm.zeta_mech(m, D, np.eye(3), 300.0) == pytest.approx(4.0)
        assert cm.zeta_mech(m, np.zeros((3, 3)), DIAG, 300.0) == pytest.approx(0.25)

    def test_cf_constants(self):
        assert cm.cf_model(cm.ModelSpec("oldroyd-b")) == 1.0
        assert cm.cf_model(cm.ModelSpec("giesekus", alpha=0.5)) == 2.0
        assert cm.cf_model(cm.ModelSpec("fene-p", b=10.0)) == pytest.approx(0.7)
        assert cm.cf_model(cm.ModelSpec("johnson-segalman", a=0.3)) == 1.0
        assert cm.cf_model(cm.ModelSpec("ptt-exp", p=0.1)) == pytest.approx(math.exp(0.3))
        lin = cm.cf_model(cm.ModelSpec("ptt-linear", p=0.2))
        assert getattr(lin, "derived", False)
        assert lin == pytest.approx(1 / 0.4)
        assert math.isinf(cm.cf_model(cm.ModelSpec("ptt-linear", p=1 / 3)))


class TestValidation:
    def test_collects_all_violations(self):
        with pytest.raises(cm.ConfigError) as err:
            cm.ModelSpec("giesekus", alpha=1.2, mu=-1.0, rho=0.0)
        assert len(err.value.violations) == 3
        assert "alpha must lie in (0,1)" in str(err.value)

    def test_fene_p_b(self):
        with pytest.raises(cm.ConfigError, match="b must exceed 3"):
            cm.ModelSpec("fene-p", b=2.5)

    def test_fixed_slip(self):
        with pytest.raises(cm.ConfigError, match="a is fixed to 1"):
            cm.ModelSpec("oldroyd-b", a=0.5)
        with pytest.raises(cm.ConfigError):
            cm.ModelSpec("johnson-segalman", a=1.5)

    def test_ptt_ranges(self):
        with pytest.raises(cm.ConfigError):
            cm.ModelSpec("ptt-exp", p=0.0)
        with pytest.raises(cm.ConfigError):
            cm.ModelSpec("ptt-linear", p=0.5)

    def test_viscosity_bounds(self):
        law = cm.ViscosityLaw("bounded-exp", base=0.5, amplitude=2.0, rate=1.0, theta_ref=300.0)
        assert law.inf == 0.5 and law.sup == 2.5
        v = law(np.array([1.0, 300.0, 1e6]))
        assert np.all((v >= law.inf) & (v <= law.sup))
        with pytest.raises(cm.ConfigError):
            cm.ModelSpec(nu=cm.ViscosityLaw("constant", value=0.0))

    def test_thermal_positive(self):
        with pytest.raises(cm.ConfigError):
            cm.ThermalSpec(c_v=-1.0)

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="unknown model"):
            cm.ModelKind.parse("maxwell")

    def test_fene_p_domain_error(self):
        m = cm.ModelSpec("fene-p", b=4.0)
        with pytest.raises(cm.DomainError, match="Tr B < b"):
            cm.psi1(m, np.diag([2.0, 1.0, 1.0]))
        with pytest.raises(cm.DomainError, match="positive definite"):
            cm.psi1(cm.ModelSpec(), np.diag([1.0, -1.0, 1.0]))


class TestProperties:
    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_psi1_positive_off_identity(self, m):
        B = samples(m, 10_000, seed=1)
        psi = cm.psi1(m, B)
        assert np.all(psi > 0)

    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_psi1_matches_high_precision(self, m):
        B = samples(m, 40, seed=2)
        lam = np.linalg.eigvalsh(B)
        got = cm.psi1(m, B)
        ref = np.array([float(mp_psi1(m, row)) for row in lam])
        # eigenvalue roundoff dominates: relative error ~ eps * cond(B)
        np.testing.assert_allclose(got, ref, rtol=1e-9)

    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_commutativity_moderate_range(self, m):
        B = samples(m, 5000, lo=0.1, hi=10.0, seed=3)
        d = cm.dpsi1_dB(m, B)
        assert tc.frob_norm(tc.matmul(B, d) - tc.matmul(d, B)).max() < 1e-12

    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_pairing_nonnegative_and_consistent(self, m):
        B = samples(m, 5000, seed=4)
        direct = tc.frob_inner(cm.dpsi1_dB(m, B), cm.relax_f(m, B))
        spectral = cm.dissipation_pairing(m, B)
        assert np.all(spectral >= 0)
        assert np.all(direct >= -1e-12)
        np.testing.assert_allclose(direct, spectral, rtol=1e-8, atol=1e-9)

    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_b_dpsi_matches_product(self, m):
        B = samples(m, 2000, lo=0.1, hi=10.0, seed=5)
        np.testing.assert_allclose(cm.b_dpsi1(m, B), tc.matmul(B, cm.dpsi1_dB(m, B)), atol=1e-11)

    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_relax_matches_spectral(self, m):
        B = samples(m, 2000, lo=0.1, hi=10.0, seed=6)
        spec = tc.spectral_apply(B, lambda w: cm.relax_eigs(m, w))
        np.testing.assert_allclose(cm.relax_f(m, B), spec, atol=1e-10)

    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_stress_traceless(self, m):
        B = samples(m, 1000, seed=7)
        assert np.abs(tc.trace(cm.elastic_stress(m, B))).max() < 1e-10

    @settings(max_examples=100)
    @given(
        st.integers(0, 2**32 - 1),
        st.floats(1.0, 500.0),
        st.sampled_from(ALL_MODELS),
    )
    def test_zeta_nonnegative(self, seed, theta, m):
        rng = np.random.default_rng(seed)
        B = samples(m, 1, seed=seed)[0]
        D = tc.dev(tc.symmetrize(rng.normal(size=(3, 3))))
        assert cm.zeta_mech(m, D, B, theta) >= -1e-12

    @pytest.mark.parametrize("m", ALL_MODELS, ids=IDS)
    def test_cf_inequality(self, m):
        B = samples(m, 10_000, seed=8)
        cf = cm.cf_model(m)
        slack = cf * cm.dissipation_pairing(m, B) - cm.psi1(m, B)
        assert slack.min() >= -1e-10


class TestScalarCatalog:
    def test_roots(self):
        for name in ("f", "g", "h"):
            assert cm.scalar_catalog(name, 1.0) == 0.0
            assert cm.scalar_catalog(name, 1.0, stable=False) == 0.0
        assert cm.scalar_catalog("g_alpha", 1.0, alpha=0.3) == 0.0
        assert abs(cm.scalar_catalog("g_alpha", 1.0, stable=False, alpha=0.3)) < 1e-15
        assert cm.scalar_catalog("f_rs", 1.0, r=3.0, s=-7.0) == 0.0

    def test_f_b_root(self):
        for b in (3.5, 4.0, 10.0, 100.0):
            assert abs(cm.scalar_f_b(3.0 / b, b)) < 1e-12
            assert abs(cm.scalar_f_b(3.0 / b, b, stable=False)) < 1e-12 * b

    def test_f_b_worked_example(self):
        b, eps = 10.0, 0.3
        terms = 0.7 / 0.49 * 3.0 - 6 / 0.7 + 10 * math.log(0.7) - 10 * math.log(0.7) + 3 / 0.7
        assert terms == pytest.approx(0.0, abs=1e-12)
        assert cm.scalar_f_b(eps, b, stable=False) == pytest.approx(terms, abs=1e-12)

    @pytest.mark.parametrize(
        "name,params",
        [
            ("f", {}),
            ("g", {}),
            ("h", {}),
            ("g_alpha", {"alpha": 0.1}),
            ("g_alpha", {"alpha": 0.9}),
            ("f_rs", {"r": 3.0, "s": -1.0}),
            ("f_rs", {"r": 3.0, "s": -97.0}),
        ],
    )
    def test_stable_matches_literal(self, name, params):
        x = np.geomspace(1e-3, 1e3, 1001)
        a = cm.scalar_catalog(name, x, **params)
        b = cm.scalar_catalog(name, x, stable=False, **params)
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-13 * np.maximum(1.0, np.abs(b).max()))

    @pytest.mark.parametrize("b", [3.5, 4.0, 10.0, 100.0])
    def test_f_b_forms_agree_high_precision(self, b):
        eps = np.linspace(0.01, 0.99, 99)
        with mp.workdps(40):
            c = 1 - mp.mpf(3) / b
            ref = [
                float(c * e * b / (1 - e) ** 2 - 6 / (1 - e) + b * mp.log(1 - e) - b * mp.log(c) + 3 / c)
                for e in map(mp.mpf, eps)
            ]
        np.testing.assert_allclose(cm.scalar_f_b(eps, b), ref, rtol=1e-12, atol=1e-13 * b)

    def test_derivative_of_f_b(self):
        b = 10.0
        e = np.linspace(0.05, 0.9, 30)
        h = 1e-6
        fd = (cm.scalar_f_b(e + h, b) - cm.scalar_f_b(e - h, b)) / (2 * h)
        np.testing.assert_allclose(cm.scalar_f_b_prime(e, b), fd, rtol=1e-6, atol=1e-6)

    def test_domain_errors(self):
        with pytest.raises(cm.DomainError):
            cm.scalar_catalog("f", 0.0)
        with pytest.raises(cm.DomainError):
            cm.scalar_catalog("g_alpha", 1.0, alpha=1.0)
        with pytest.raises(cm.DomainError):
            cm.scalar_catalog("f_rs", 1.0, r=1.0, s=1.0)
        with pytest.raises(cm.DomainError):
            cm.scalar_catalog("f_b", 1.0, b=10.0)
        with pytest.raises(cm.DomainError):
            cm.scalar_catalog("f_b", 0.5, b=3.0)
        with pytest.raises(KeyError):
            cm.scalar_catalog("q", 1.0)

    @given(st.floats(1e-6, 1e6), st.floats(0.01, 0.99))
    def test_nonnegative_random_points(self, x, alpha):
        for name, params in [("f", {}), ("g", {}), ("h", {}), ("g_alpha", {"alpha": alpha})]:
            assert cm.scalar_catalog(name, x, **params) >= 0.0
        assert cm.scalar_catalog("f_rs", x, r=3.0, s=-7.0) >= 0.0
