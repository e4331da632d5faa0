import numpy as np
import pytest
from scipy.stats import norm

from ouensemble.engine import (EnsembleParams, TrajectoryBatch, clt_rescaled_Z, export, read_binary,
                               simulate_ou, simulate_Z, simulate_ZH, simulate_Zstar, step_ou_exact,
                               tau_eff)
from ouensemble.engine import kernels
from ouensemble.errors import ConfigurationError, DivergenceError, InputError
from ouensemble.populations import (Delta, Exponential, GeneralizedGamma, OneSidedLevy,
                                    TabulatedInverseCdf)
from ouensemble.rng import Stream
from ouensemble.specfun import variance_Y_curve
from ouensemble.stats import ks_two_sample, sample_variance

TWO_POINT = TabulatedInverseCdf(probabilities=(0.0, 0.5, 0.5, 1.0), quantiles=(1.0, 1.0, 2.0, 2.0))
GRID = np.array([0.0, 0.1, 0.5, 1.0, 2.0, 5.0])
HET = EnsembleParams(N=20, R=400, q_spec=Exponential(rate=1.0), g_spec=GeneralizedGamma(nu=0.5, eta=1.3),
                     t_grid=GRID, seed=3)
HOMOG = EnsembleParams(N=50, R=20000, q_spec=Delta(location=1.0), g_spec=Delta(location=1.0),
                       t_grid=GRID, seed=5)


def within(est, theory, k=3.0):
    return abs(est.value - theory) <= k * est.std_error


# ---------------------------------------------------------------- exact OU step

def test_step_examples():
    assert step_ou_exact(1.0, 2.0, 1.0, 2.0, 0.0) == pytest.approx(np.exp(-1.0), rel=1e-15)
    assert step_ou_exact(0.0, 1.0, 1.0, 50.0, 1.0) == pytest.approx(1.0, rel=1e-15)


def test_step_variance_mc():
    g = Stream.from_seed(1).normal(10**5)
    x = step_ou_exact(np.zeros(g.size), 2.0, 3.0, 1.0, g)
    assert within(sample_variance(x), 3 * 2 * (1 - np.exp(-1)))


def test_step_rejects_bad_input():
    with pytest.raises(InputError):
        step_ou_exact(0.0, -1.0, 1.0, 1.0, 0.0)
    with pytest.raises(InputError):
        step_ou_exact(0.0, 1.0, 1.0, 0.0, 0.0)


def test_single_ou_variance():
    t = np.r_[0.0, np.logspace(-1, 1, 10)]
    b = simulate_ou(2.0, 3.0, t, 10**5, seed=2)
    assert np.all(b.values[:, 0] == 0)
    for j in range(1, t.size):
        assert within(sample_variance(b.values[:, j]), 6.0 * (1 - np.exp(-t[j])))


# ---------------------------------------------------------------- tau_eff

def test_tau_eff_examples():
    for t in (0.01, 1.0, 50.0):
        assert tau_eff(t, "quadrature", q=Delta(location=3.0)) == pytest.approx(3.0, rel=1e-15)
        assert tau_eff(t, "sample-series", tau=[3.0, 3.0]) == pytest.approx(3.0, rel=1e-15)
    assert tau_eff(50.0, "quadrature", q=TWO_POINT) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert tau_eff(50.0, "sample-series", tau=[1.0, 2.0]) == pytest.approx(np.sqrt(2), abs=1e-6)
    for t in (0.1, 1.0, 3.0):
        assert tau_eff(t, "sample-series", tau=[1.0, 2.0]) == pytest.approx(
            tau_eff(t, "quadrature", q=TWO_POINT), rel=1e-12)


def test_tau_eff_covariance_rule():
    # sum v / sum v/tau at stationarity: (1 + 2) / (1 + 1) = 1.5
    assert tau_eff(50.0, "sample-series", tau=[1.0, 2.0], rule="covariance") == pytest.approx(1.5, rel=1e-12)


def test_tau_eff_quadrature_divergence():
    with pytest.raises(DivergenceError, match="diverges"):
        tau_eff(1.0, "quadrature", q=Exponential(rate=1.0))


@pytest.mark.parametrize("kwargs", [{"mode": "quadrature"}, {"mode": "sample-series"},
                                    {"mode": "nope", "tau": [1.0]}, {"tau": [1.0, -1.0]},
                                    {"tau": [1.0], "rule": "mean"}])
def test_tau_eff_input_errors(kwargs):
    with pytest.raises(InputError):
        tau_eff(1.0, **kwargs)


def test_taueff_table_backends_agree():
    tau = Exponential(rate=1.0).sample(Stream.from_seed(7), 30).reshape(3, 10)
    mesh = np.logspace(-3, 2, 40)
    for rule in (kernels.RULE_RMS, kernels.RULE_COVARIANCE):
        a = kernels.taueff_table(tau, mesh, rule, "numba")
        b = kernels.taueff_table(tau, mesh, rule, "numpy")
        np.testing.assert_allclose(a, b, rtol=1e-14)
        name = "rms" if rule == kernels.RULE_RMS else "covariance"
        assert a[1, 17] == pytest.approx(tau_eff(mesh[17], tau=tau[1], rule=name), rel=1e-13)


# ---------------------------------------------------------------- processes

def test_params_validation():
    base = dict(N=2, R=2, q_spec=Delta(location=1.0), g_spec=Delta(location=1.0))
    for bad in ({"N": 0}, {"R": 0}, {"sigma0": -1.0}, {"t_grid": [0.0, 1.0, 1.0]}, {"t_grid": [1.0, 2.0]},
                {"dt_max": 0.0}, {"seed": -1}, {"zh_mode": "x"}, {"lambda_mode": "x"},
                {"tau_eff_rule": "x"}, {"zstar_scheme": "x"}, {"zstar_step_fraction": 0.0},
                {"q_spec": 1.0}):
        with pytest.raises(ConfigurationError):
            EnsembleParams(**{**base, **bad})
    assert EnsembleParams(**base).sigma0 == 0.5


@pytest.mark.parametrize("sim", [simulate_Z, simulate_Zstar, simulate_ZH], ids=lambda f: f.__name__)
def test_backends_agree(sim):
    a = sim(HET, "numba")
    b = sim(HET, "numpy")
    np.testing.assert_allclose(a.values, b.values, rtol=1e-9, atol=1e-12)
    np.testing.assert_array_equal(a.lam, b.lam)


@pytest.mark.parametrize("sim", [simulate_Z, simulate_Zstar, simulate_ZH], ids=lambda f: f.__name__)
def test_deterministic_across_workers(sim):
    a = sim(HET, "numba", 1)
    b = sim(HET, "numba", 2)
    c = sim(HET, "numba", None)
    assert a.values.tobytes() == b.values.tobytes() == c.values.tobytes()
    assert sim(HET.replace(seed=4), "numba").values.tobytes() != a.values.tobytes()


@pytest.mark.parametrize("sim", [simulate_Z, simulate_Zstar, simulate_ZH], ids=lambda f: f.__name__)
def test_start_at_origin_and_zero_mean(sim):
    b = sim(HET.replace(R=4000))
    assert np.all(b.values[:, 0] == 0.0)
    v = b.ok
    se = v[:, 1:].std(axis=0) / np.sqrt(v.shape[0])
    assert np.all(np.abs(v[:, 1:].mean(axis=0)) <= 3.5 * se)


def test_single_particle_reduction():
    p = EnsembleParams(N=1, R=20000, q_spec=Delta(location=2.0), g_spec=Delta(location=3.0), t_grid=GRID)
    z = simulate_Z(p)
    np.testing.assert_allclose(z.lam, 3.0)  # sigma0 = 1/N = 1 and m = sqrt(1/3), so Lambda = sigma
    # Z = X exactly, whatever the mass
    for j in range(1, GRID.size):
        assert within(sample_variance(z.values[:, j]), 3 * 2 * (1 - np.exp(-GRID[j])))
    np.testing.assert_array_equal(clt_rescaled_Z(p).values, z.values)


@pytest.mark.parametrize("sim", [simulate_Z, simulate_Zstar, simulate_ZH], ids=lambda f: f.__name__)
def test_homogeneous_variance(sim):
    b = sim(HOMOG)
    lam = HOMOG.sigma0 / (HOMOG.N * np.sqrt(HOMOG.sigma0)) ** 2
    np.testing.assert_allclose(b.lam, lam, rtol=1e-14)
    for j in range(1, GRID.size):
        theory = HOMOG.N * lam * (1 - np.exp(-2 * GRID[j]))
        assert within(sample_variance(b.values[:, j]), theory)


def test_homogeneous_exponential_autocovariance():
    z = simulate_Z(HOMOG).values
    lam = 1.0 / HOMOG.N**2  # sigma_c / N^2
    c = np.mean(z[:, 3] * z[:, 4]) - z[:, 3].mean() * z[:, 4].mean()
    theory = HOMOG.N * lam * (np.exp(-1.0) - np.exp(-3.0))
    assert abs(c - theory) < 0.03 * theory


def test_heterogeneous_variance_identity():
    p = HET.replace(R=20000, N=10)
    v = variance_Y_curve(p.t_grid, p.q_spec)
    for sim in (simulate_Z, simulate_ZH):
        b = sim(p)
        for j in range(1, p.t_grid.size):
            x = b.values[:, j]
            d = x * x - p.N * b.lam * v[j]
            assert abs(d.mean()) <= 3.5 * d.std() / np.sqrt(d.size)


def test_exact_step_invariance():
    grid = np.array([0.0, 0.5, 1.0, 2.0])
    p = HET.replace(R=10000, t_grid=grid, dt_max=0.5)
    a = simulate_Z(p)
    b = simulate_Z(p.replace(dt_max=0.25, seed=p.seed + 1))
    for j in range(1, grid.size):
        assert ks_two_sample(a.values[:, j], b.values[:, j]).p_value > 0.01


def test_zstar_mean_reversion():
    # regression of Z*_{t+dt} on Z*_t recovers the decay factor exp(-dt / tau0)
    b = simulate_Zstar(HOMOG).values
    for j in (2, 3, 4):
        x, y = b[:, j], b[:, j + 1]
        slope = np.dot(x, y) / np.dot(x, x)
        assert 0 < slope < 1
        assert slope == pytest.approx(np.exp(-(GRID[j + 1] - GRID[j])), abs=0.02)


def test_zstar_exponential_scheme_matches_euler():
    a = simulate_Zstar(HOMOG.replace(R=5000))
    b = simulate_Zstar(HOMOG.replace(R=5000, zstar_scheme="exponential", seed=9))
    for j in range(1, GRID.size):
        assert ks_two_sample(a.values[:, j], b.values[:, j]).p_value > 0.01


def test_zstar_aborts_are_reported():
    b = simulate_Zstar(HET.replace(R=10, zstar_max_steps=5))
    assert b.aborted.all() and np.isnan(b.values).all() and b.abort_fraction == 1.0
    assert b.ok.shape == (0, GRID.size)


def test_zh_modes_agree():
    p = EnsembleParams(N=100, R=10000, q_spec=Exponential(rate=1.0), g_spec=GeneralizedGamma(nu=0.5, eta=1.3),
                       t_grid=np.array([0.0, 1.0, 10.0]), seed=8)
    a = simulate_ZH(p)
    b = simulate_ZH(p.replace(zh_mode="sum_of_y"))
    for j in (1, 2):
        assert ks_two_sample(a.values[:, j], b.values[:, j]).p_value > 0.01


def test_zh_gaussian_mode_is_randomly_scaled():
    b = simulate_ZH(HET)
    # a single normal per realization: the path is proportional to sqrt(v(t))
    sd = np.sqrt(variance_Y_curve(GRID, HET.q_spec))
    ratio = b.values[:, 1:] / sd[1:]
    np.testing.assert_allclose(ratio, ratio[:, :1] * np.ones_like(ratio), rtol=1e-12)
    assert ks_two_sample(ratio[:, 0] / np.sqrt(HET.N * b.lam), norm.ppf(np.linspace(0.001, 0.999, 999))
                         ).p_value > 0.01


def test_zh_sigma0_override_scales_amplitude():
    a = simulate_ZH(HET)
    b = simulate_ZH(HET.replace(zh_sigma0=4 * HET.sigma0))
    np.testing.assert_allclose(b.values, 2 * a.values, rtol=1e-14)


def test_fixed_lambda_mode():
    b = simulate_Z(HET.replace(lambda_mode="fixed"))
    assert np.all(b.lam == b.lam[0])
    r = simulate_Z(HET)
    assert np.unique(r.lam).size == r.R


def test_levy_population_runs():
    p = EnsembleParams(N=20, R=200, q_spec=OneSidedLevy(alpha=0.75, inverse_weighted=True),
                       g_spec=GeneralizedGamma(nu=0.5, eta=1.3), t_grid=GRID)
    for sim in (simulate_Z, simulate_Zstar, simulate_ZH):
        b = sim(p)
        assert np.isfinite(b.ok).all() and b.abort_fraction == 0.0


# ---------------------------------------------------------------- export

def test_csv_export(tmp_path):
    b = simulate_Z(HET.replace(R=3))
    path = tmp_path / "z.csv"
    export(b, path, "csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "realization,t,value"
    assert len(lines) == 1 + 3 * GRID.size
    r, t, v = lines[1 + GRID.size + 2].split(",")
    assert int(r) == 1 and float(t) == GRID[2] and float(v) == b.values[1, 2]
    assert b"\r" not in path.read_bytes()


def test_binary_round_trip(tmp_path):
    b = simulate_Zstar(HET.replace(R=7))
    path = tmp_path / "z.bin"
    export(b, path, "binary")
    raw = path.read_bytes()
    assert raw[:4] == b"OUTB" and len(raw) == 16 + 8 * 7 * GRID.size
    back = read_binary(path, "Zstar", GRID)
    assert back.meta["N"] == HET.N
    assert back.values.tobytes() == b.values.tobytes()
    with pytest.raises(ValueError):
        export(b, path, "xml")


def test_batch_rejects_unknown_process():
    with pytest.raises(ValueError):
        TrajectoryBatch("W", np.zeros((2, 2)), GRID[:2])
