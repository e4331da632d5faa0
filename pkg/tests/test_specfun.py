import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma

from ouensemble.errors import DomainError, InputError
from ouensemble.populations import Delta, Exponential, GeneralizedGamma, MWright, OneSidedLevy
from ouensemble.quadrature import integrate_log
from ouensemble.specfun import (KernelParams, covariance_Z, ggbm_density, kernel_table, mixture_density,
                                mwright, variance_Y, variance_Y_curve, write_kernel_csv)

KERNELS = [KernelParams(H=0.5, beta=0.5, t=1.0), KernelParams(H=0.4, beta=0.75, t=2.0),
           KernelParams(H=0.5, beta=1.0, t=1.0), KernelParams(H=0.3, beta=0.25, t=0.5)]


def test_mwright_at_zero():
    assert mwright(0.5, 0.0) == pytest.approx(1 / np.sqrt(np.pi), rel=1e-15)


@pytest.mark.parametrize("z", [0.5, 1.0, 2.0])
def test_mwright_gaussian_points(z):
    assert abs(mwright(0.5, z) - np.exp(-z * z / 4) / np.sqrt(np.pi)) < 1e-10


@pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("n", [1, 2])
def test_mwright_moments(beta, n):
    val = integrate_log(lambda x: x**n * mwright(beta, x), epsrel=1e-12)
    assert val == pytest.approx(gamma(n + 1) / gamma(beta * n + 1), abs=1e-6)


def test_kernel_params_domain():
    for bad in ({"H": 0.0, "beta": 0.5, "t": 1.0}, {"H": 0.5, "beta": 0.0, "t": 1.0},
                {"H": 0.5, "beta": 1.5, "t": 1.0}, {"H": 0.5, "beta": 0.5, "t": 0.0}):
        with pytest.raises(DomainError):
            KernelParams(**bad)


def test_ggbm_gaussian_reduction():
    p = KernelParams(H=0.5, beta=1.0, t=1.0)
    for z in (0.0, 1.0, 2.0):
        assert ggbm_density(z, p) == pytest.approx(np.exp(-z * z / 4) / (2 * np.sqrt(np.pi)), abs=1e-12)


@pytest.mark.parametrize("p", KERNELS, ids=lambda p: f"b{p.beta}-H{p.H}")
def test_ggbm_moments(p):
    mass = 2 * integrate_log(lambda z: ggbm_density(z, p), epsrel=1e-12)
    second = 2 * integrate_log(lambda z: z * z * ggbm_density(z, p), epsrel=1e-12)
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert second == pytest.approx(2 * p.t ** (2 * p.H) / gamma(1 + p.beta), abs=1e-5)


@given(st.floats(min_value=0.0, max_value=20.0), st.sampled_from(KERNELS))
def test_ggbm_symmetric_and_monotone(z, p):
    assert ggbm_density(z, p) == ggbm_density(-z, p)
    assert ggbm_density(z * 1.01 + 1e-3, p) <= ggbm_density(z, p)


def test_mixture_delta():
    assert mixture_density(0.0, 1.0, Delta(location=1.0)) == pytest.approx((4 * np.pi) ** -0.5, rel=1e-14)


@pytest.mark.parametrize("beta, H", [(0.5, 0.5), (0.75, 0.4)])
def test_mixture_equals_ggbm(beta, H):
    t = 1.3
    p = KernelParams(H=H, beta=beta, t=t)
    z = np.linspace(-5, 5, 41)
    mixed = mixture_density(z, t ** (2 * H), MWright(beta=beta))
    np.testing.assert_allclose(mixed, ggbm_density(z, p), rtol=0, atol=1e-5)


@pytest.mark.parametrize("f", [Exponential(rate=2.0), GeneralizedGamma(nu=1.5, eta=1.3)], ids=lambda f: f.kind)
def test_mixture_second_moment(f):
    vt = 0.7
    second = 2 * integrate_log(lambda z: z * z * mixture_density(z, vt, f, epsrel=1e-11), epsrel=1e-9)
    assert second == pytest.approx(2 * vt * f.expect(lambda x: x), abs=1e-5)


def test_mixture_bad_vt():
    with pytest.raises(InputError):
        mixture_density(0.0, 0.0, Delta(location=1.0))


def test_variance_Y_examples():
    assert variance_Y(50.0, Delta(location=1.0)) == pytest.approx(1.0, rel=1e-15)
    assert variance_Y(1.0, Delta(location=2.0)) == pytest.approx(2 * (1 - np.exp(-1)), rel=1e-14)
    assert variance_Y(1e-3, Exponential(rate=1.0)) == pytest.approx(2e-3, rel=0.01)
    with pytest.raises(InputError):
        variance_Y(0.0, Delta(location=1.0))


@pytest.mark.parametrize("q", [Exponential(rate=1.0), OneSidedLevy(alpha=0.75),
                               OneSidedLevy(alpha=0.75, inverse_weighted=True), Delta(location=3.0)],
                         ids=lambda q: q.kind)
def test_variance_Y_properties(q):
    ts = np.logspace(-3, 3, 25)
    v = variance_Y_curve(ts, q)
    assert np.all(np.diff(v) >= 0)
    # strictly increasing until it saturates at E[tau] in double precision
    below = v[1:] < v[-1] * (1 - 1e-9)
    assert np.all(np.diff(v)[below] > 0)
    assert np.all(v <= 2 * ts * (1 + 1e-12))
    try:
        mean = q.expect(lambda x: x)
    except Exception:
        mean = np.inf
    assert np.all(v <= mean * (1 + 1e-10))
    assert variance_Y_curve(np.array([0.0, 1.0]), q)[0] == 0.0


def test_variance_Y_levy_scaling():
    q = OneSidedLevy(alpha=0.75)
    ts = np.logspace(2, 4, 9)
    slope = np.polyfit(np.log(ts), np.log(variance_Y_curve(ts, q)), 1)[0]
    assert slope == pytest.approx(0.25, abs=0.05)


def test_covariance_delta_closed_form():
    N, lam, tau0 = 100, 0.013, 1.7
    for t in (0.5, 1.0, 3.0):
        assert covariance_Z(t, t, Delta(location=tau0), N, lam) == pytest.approx(
            N * lam * tau0 * (1 - np.exp(-2 * t / tau0)), rel=1e-14)
    assert covariance_Z(1.0, 2.0, Delta(location=tau0), N, lam) == pytest.approx(
        N * lam * tau0 * (np.exp(-1 / tau0) - np.exp(-3 / tau0)), rel=1e-13)


@pytest.mark.parametrize("q", [Exponential(rate=1.0), OneSidedLevy(alpha=0.75, inverse_weighted=True)],
                         ids=lambda q: q.kind)
def test_covariance_diagonal_and_origin(q):
    N, lam = 50, 0.02
    for t in (0.3, 2.0):
        assert covariance_Z(t, t, q, N, lam) == pytest.approx(N * lam * variance_Y(t, q), rel=1e-10)
    assert abs(covariance_Z(1.0, 1e-8, q, N, lam)) < 1e-6 * N * lam


@given(st.floats(min_value=0.01, max_value=50), st.floats(min_value=0.01, max_value=50))
def test_covariance_symmetric(t, s):
    q = Exponential(rate=1.0)
    assert covariance_Z(t, s, q, 10, 0.1) == pytest.approx(covariance_Z(s, t, q, 10, 0.1), rel=1e-12)
    d = Delta(location=2.0)
    hi, lo = max(t, s), min(t, s)
    assert covariance_Z(hi, hi, d, 10, 0.1) >= covariance_Z(hi, lo, d, 10, 0.1)


def test_kernel_table_and_csv(tmp_path):
    z = np.linspace(-2, 2, 5)
    rows = kernel_table(1.0, 0.5, 1.0, z)
    assert [r[3] for r in rows] == ["ggbm"] * 5 + ["mixture"] * 5
    gauss = np.exp(-z * z / 4) / (2 * np.sqrt(np.pi))
    np.testing.assert_allclose([r[2] for r in rows[:5]], gauss, atol=1e-10)
    np.testing.assert_allclose([r[2] for r in rows[5:]], gauss, atol=1e-10)
    path = tmp_path / "k.csv"
    write_kernel_csv(path, rows)
    lines = path.read_bytes().split(b"\n")
    assert lines[0] == b"z,t,density,kernel_id,beta,H"
    assert len(lines) == 12 and lines[-1] == b""
