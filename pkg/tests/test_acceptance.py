"""End-to-end acceptance checks, one group per criterion.

The simulation groups run the 32x32 reference configuration to ``t = 5``
for five models; expect roughly eight minutes in total.
"""

import math
import time

import numpy as np
import pytest

from viscostab import audit as au
from viscostab import constitutive as cm
from viscostab import decay as dc
from viscostab import sim
from viscostab.cli import AUDIT_MATRIX
from viscostab.steady_state import BoundarySpec, Grid2D, solve_steady_heat

AUDIT_MODELS = [cm.ModelSpec(kind=k, **kw) for k, kw in AUDIT_MATRIX]
AUDIT_IDS = [m.label for m in AUDIT_MODELS]

# constants of the C_f inequality per model family
EXPECTED_CF = {
    "oldroyd-b": lambda m: 1.0,
    "giesekus": lambda m: 1.0 / (1.0 - m.alpha),
    "fene-p": lambda m: 1.0 - 3.0 / m.b,
    "johnson-segalman": lambda m: 1.0,
    "ptt-exp": lambda m: math.exp(3.0 * m.p),
}


# ---------------------------------------------------------------- criterion 1

@pytest.fixture(scope="module")
def audit_reports():
    t0 = time.perf_counter()
    reports = [au.audit_model(m, n_samples=10_000, eig_range=(1e-3, 50.0), seed=0) for m in AUDIT_MODELS]
    return reports, time.perf_counter() - t0


@pytest.mark.criterion(1)
@pytest.mark.parametrize("k", range(len(AUDIT_MODELS)), ids=AUDIT_IDS)
def test_c1_assumptions_hold(audit_reports, k):
    rep = audit_reports[0][k]
    m = AUDIT_MODELS[k]
    assert rep.n_samples == 10_000
    for name in ("A-zero-value", "A-derivative-zero", "A-commutativity", "F-zero", "F-nonneg-pairing"):
        assert rep.check(name).margin < 1e-10, name
    assert rep.cf == pytest.approx(EXPECTED_CF[m.kind.value](m), rel=1e-14)
    assert rep.check("F-stability").margin >= -1e-8


@pytest.mark.criterion(1)
def test_c1_audit_runtime(audit_reports):
    assert audit_reports[1] < 60.0


# ---------------------------------------------------------------- criterion 2

@pytest.mark.criterion(2)
@pytest.mark.parametrize("m", AUDIT_MODELS, ids=AUDIT_IDS)
def test_c2_gradient_matches_central_differences(m):
    B = au.sample_spd(m, 100, (1e-3, 50.0), np.random.default_rng(7))
    assert au.gradient_errors(m, B).max() < 1e-6


# ---------------------------------------------------------------- criterion 3

@pytest.mark.criterion(3)
def test_c3_oldroyd_b_cf_is_optimal():
    est = au.estimate_cf_sup(cm.ModelSpec())
    assert 0.999 <= est <= 1.0


# ---------------------------------------------------------------- criterion 4

def _log_grid(lo, hi, root):
    x = np.logspace(math.log10(lo), math.log10(hi), 999)
    return np.sort(np.append(x, root))


SCALAR_CASES = [
    ("f", {}, (1e-3, 1e3)),
    ("g", {}, (1e-3, 1e3)),
    ("h", {}, (1e-3, 1e3)),
    ("g_alpha", {"alpha": 0.1}, (1e-3, 1e3)),
    ("g_alpha", {"alpha": 0.5}, (1e-3, 1e3)),
    ("g_alpha", {"alpha": 0.9}, (1e-3, 1e3)),
    ("f_rs", {"r": 2.0, "s": -1.0}, (1e-3, 1e3)),
    ("f_rs", {"r": 0.5, "s": -3.0}, (1e-3, 1e3)),
    ("f_b", {"b": 4.0}, (1e-4, 1.0 - 1e-4)),
    ("f_b", {"b": 10.0}, (1e-4, 1.0 - 1e-4)),
    ("f_b", {"b": 100.0}, (1e-4, 1.0 - 1e-4)),
]


@pytest.mark.criterion(4)
@pytest.mark.parametrize("name,params,span", SCALAR_CASES, ids=[f"{c[0]}{c[1]}" for c in SCALAR_CASES])
def test_c4_scalar_inequalities(name, params, span):
    root = cm.scalar_root(name, **params)
    x = _log_grid(*span, root)
    assert x.size == 1000
    vals = cm.scalar_catalog(name, x, **params)
    assert np.all(vals >= 0.0)
    k = int(np.argmin(np.abs(vals)))
    assert x[k] == root
    assert abs(vals[k]) < 1e-10


# ---------------------------------------------------------------- criterion 5

@pytest.mark.criterion(5)
def test_c5_linear_field_reproduced():
    g = Grid2D(32, 32)
    s = solve_steady_heat(g, BoundarySpec("linear_x", low=300.0, high=310.0), tol=1e-12)
    X, _ = g.centers()
    assert s.residual_inf < 1e-9
    assert np.abs(s.theta - (300.0 + 10.0 * X)).max() < 1e-9


@pytest.mark.criterion(5)
def test_c5_harmonic_second_order():
    errs = []
    for n in (32, 64):
        g = Grid2D(n, n)
        bdr = BoundarySpec("harmonic_sine", low=300.0, amplitude=1.0)
        s = solve_steady_heat(g, bdr, tol=1e-13)
        X, Y = g.centers()
        errs.append(np.abs(s.theta - bdr.exact(X, Y, g)).max())
    order = math.log2(errs[0] / errs[1])
    assert abs(order - 2.0) <= 0.15 * 2.0


# ------------------------------------------------------------ criteria 6 to 10

RUN_MODELS = {
    "oldroyd-b": cm.ModelSpec(),
    "giesekus": cm.ModelSpec(kind="giesekus", alpha=0.5),
    "fene-p": cm.ModelSpec(kind="fene-p", b=10.0),
    "johnson-segalman": cm.ModelSpec(kind="johnson-segalman", a=0.5),
    "ptt-exp": cm.ModelSpec(kind="ptt-exp", p=0.1),
}
OTHERS = [k for k in RUN_MODELS if k != "oldroyd-b"]
_RUNS: dict[str, tuple[sim.Trajectory, float]] = {}


def _run(key):
    if key not in _RUNS:
        cfg = sim.acceptance_config(RUN_MODELS[key])
        t0 = time.perf_counter()
        traj = sim.run(cfg)
        _RUNS[key] = (traj, time.perf_counter() - t0)
    return _RUNS[key]


def check_invariants(traj, seconds):
    s = traj.series
    assert traj.config.grid == Grid2D(32, 32) and traj.config.t_end == 5.0
    assert traj.dt <= sim.stability_bound(traj.config)
    assert s["div_rel"].max() <= 1e-10
    assert s["min_eig_B"].min() > 0.0
    assert s["min_zeta"].min() >= -1e-12
    assert traj.certifying
    assert seconds < 300.0


def check_budget(traj):
    _, rel = traj.budget()
    assert rel.size == len(traj.samples)
    assert rel.max() <= 0.05


def check_decay(traj, expected_cmech=None):
    rep = dc.verify_trajectory(traj)
    if expected_cmech is not None:
        assert rep.c_mech == pytest.approx(expected_cmech, rel=1e-14)
    assert np.all(np.diff(traj.column("v_mech")) <= 0.0)
    main, kinetic, psi = rep.bounds
    assert main.passed and main.worst_ratio <= 1.05
    assert kinetic.passed and psi.passed
    assert rep.fitted_rate >= rep.c_mech * (1.0 - 1e-6)
    return rep


def check_temperature(traj):
    assert traj.config.mn_pairs[0] == (0.35, 0.6)
    y = np.array([smp.y_th_mn[0] for smp in traj.samples])
    assert y[0] > 0.0
    assert y[-1] / y[0] < 0.01
    assert traj.series["min_theta"].min() > 0.0


def expected_cmech(model):
    cp = 1.0 / (2.0 * math.pi**2)
    return min(2.0 * model.nu.inf / (model.rho * cp), model.mu / (cm.cf_model(model) * model.nu1.sup))


@pytest.mark.criterion(6)
def test_c6_oldroyd_b_invariants():
    check_invariants(*_run("oldroyd-b"))


@pytest.mark.criterion(7)
def test_c7_oldroyd_b_energy_budget():
    check_budget(_run("oldroyd-b")[0])


@pytest.mark.criterion(8)
def test_c8_oldroyd_b_exponential_bound():
    traj = _run("oldroyd-b")[0]
    assert min(2.0 * 2.0 * math.pi**2, 1.0) == 1.0
    check_decay(traj, expected_cmech=1.0)


@pytest.mark.criterion(9)
def test_c9_oldroyd_b_temperature_decay():
    check_temperature(_run("oldroyd-b")[0])


@pytest.mark.criterion(10)
@pytest.mark.parametrize("key", OTHERS)
def test_c10_cross_model(key):
    traj, seconds = _run(key)
    check_invariants(traj, seconds)
    check_budget(traj)
    check_decay(traj, expected_cmech=expected_cmech(RUN_MODELS[key]))
    check_temperature(traj)


@pytest.mark.criterion(10)
def test_c10_matrix_runtime():
    for key in RUN_MODELS:
        _run(key)
    assert sum(sec for _, sec in _RUNS.values()) < 1800.0
