import numpy as np
import pytest

from chaosbench import analysis, dynamics
from chaosbench.analysis import (LyapunovSpectrum, ReturnMap, extract_maxima,
                                 fit_return_map, lyapunov_map, lyapunov_ode,
                                 lyapunov_ode_reference, one_step_error,
                                 return_map_error, tau_lim)
from chaosbench.dynamics import Trajectory, integrate
from chaosbench.precision import DOUBLE, EXTENDED, SINGLE

IC = [0.0, 0.45, 1.41]


# -- tau_lim -------------------------------------------------------------

def _as_ext(traj):
    return Trajectory(traj.system, traj.dt, traj.points, EXTENDED,
                      points_lo=np.zeros_like(traj.points))


def test_tau_lim_identical_full_horizon(lorenz_double_10k):
    ref = _as_ext(lorenz_double_10k)
    assert tau_lim(lorenz_double_10k, ref) == pytest.approx(
        (len(ref) - 1) * 0.02)


def test_tau_lim_constructed_jump(lorenz_double_10k):
    ref = _as_ext(lorenz_double_10k)
    d_attr = np.sqrt(np.mean(np.sum(ref.points ** 2, axis=1)))
    k = 400
    pts = lorenz_double_10k.points.copy()
    pts[k:] += 0.10 * d_attr / np.sqrt(3.0)
    pred = Trajectory("lorenz", 0.02, pts, DOUBLE)
    assert tau_lim(pred, ref) == pytest.approx(k * 0.02)


def test_tau_lim_threshold_monotonic(lorenz_double_10k, lorenz_single_10k):
    ref = _as_ext(lorenz_double_10k)
    pred = Trajectory("lorenz", 0.02,
                      lorenz_single_10k.points.astype(np.float64), DOUBLE)
    assert tau_lim(pred, ref, 0.10) >= tau_lim(pred, ref, 0.05)


# -- maxima --------------------------------------------------------------

def test_maxima_sine_once_per_period():
    t = np.arange(0, 40 * np.pi, 0.02)
    pts = np.stack([t, t, np.sin(t)], axis=1)
    tr = Trajectory("lorenz", 0.02, pts, DOUBLE)
    mx = extract_maxima(tr)
    assert len(mx) == 20
    assert np.all(np.abs(mx - 1.0) < 1e-4)


def test_maxima_strictly_increasing_empty():
    t = np.arange(100, dtype=float)
    tr = Trajectory("lorenz", 0.02, np.stack([t, t, t], axis=1), DOUBLE)
    assert len(extract_maxima(tr)) == 0


def test_maxima_band_lorenz(lorenz_double_50k):
    # brute-force oracle on this exact run: 1330 peaks, interpolated
    # band [29.3571, 47.8606] (raw samples [29.3570, 47.8389])
    mx = extract_maxima(lorenz_double_50k)
    assert len(mx) == 1330
    assert mx.min() == pytest.approx(29.3571, abs=0.005)
    assert mx.max() == pytest.approx(47.8606, abs=0.005)
    assert np.all((mx > 28.0) & (mx < 49.0))


# -- return map -----------------------------------------------------------

def test_fit_exact_cubic_single_branch():
    # points on an exact degree-3 curve, single rising branch
    z = np.linspace(30.0, 37.0, 400)
    nxt = 35.0 + 0.1 * (z - 33.0) - 0.01 * (z - 33.0) ** 3
    pairs = np.stack([z, nxt], axis=1)
    rm = ReturnMap(pairs=pairs)
    fit = fit_return_map(rm, min_branch=1)
    xi = return_map_error(rm, fit)
    assert xi < 1e-10


def test_return_map_error_zero_on_fit_points():
    z = np.linspace(30.0, 36.0, 300)
    pairs = np.stack([z, 40.0 - 0.2 * (z - 33.0) ** 2], axis=1)
    rm = ReturnMap(pairs=pairs)
    fit = fit_return_map(rm, min_branch=1)
    assert return_map_error(rm, fit) < 1e-10


def test_xi_reorder_invariant(lorenz_double_50k):
    rm = ReturnMap.from_trajectory(lorenz_double_50k)
    fit = fit_return_map(rm)
    xi = return_map_error(rm, fit)
    rng = np.random.default_rng(0)
    shuffled = ReturnMap(pairs=rng.permutation(rm.pairs))
    assert return_map_error(shuffled, fit) == pytest.approx(xi, rel=1e-12)


def test_fit_bootstrap_stability(lorenz_double_50k):
    rm = ReturnMap.from_trajectory(lorenz_double_50k)
    xi = return_map_error(rm, fit_return_map(rm))
    rng = np.random.default_rng(1)
    idx = rng.integers(0, len(rm.pairs), len(rm.pairs))
    boot = ReturnMap(pairs=rm.pairs[idx])
    xi_b = return_map_error(boot, fit_return_map(boot))
    assert xi_b == pytest.approx(xi, rel=0.10)


def test_fit_requires_enough_pairs():
    pairs = np.random.default_rng(0).uniform(30, 40, (50, 2))
    with pytest.raises(ValueError):
        fit_return_map(ReturnMap(pairs=pairs))


# -- Lyapunov -------------------------------------------------------------

def test_lyapunov_linear_system():
    A = np.diag([-1.0, -2.0, -3.0])
    sp = lyapunov_ode_reference(lambda s: A @ s, lambda s: A,
                                np.array([1.0, 1.0, 1.0]), 0.01, 50_000,
                                transient=10)
    for got, want in zip(sp.lambdas, (-1.0, -2.0, -3.0)):
        assert got == pytest.approx(want, abs=1e-6)


def test_lyapunov_lorenz_table(lorenz_lyap_double):
    l1, l2, l3 = lorenz_lyap_double.lambdas
    assert l1 == pytest.approx(0.906, rel=0.005)
    assert abs(l2) < 0.01
    assert l3 == pytest.approx(-14.567, rel=0.005)


def test_lyapunov_lorenz_sum(lorenz_lyap_double):
    total = sum(lorenz_lyap_double.lambdas)
    assert total == pytest.approx(-(10.0 + 1.0 + 8.0 / 3.0), rel=0.005)


def test_lyapunov_kernel_vs_reference_oracle():
    # compiled Benettin loop against the straight-line numpy oracle
    # compare over a horizon short enough that the two trajectories have
    # not yet amplified their fused-multiply-add-level differences
    p = dynamics.default_params("lorenz")
    sp = lyapunov_ode("lorenz", dt=0.01, n_steps=2000, ic=(1.0, 1.0, 1.0),
                      transient=0)
    ref = lyapunov_ode_reference(
        lambda s: dynamics.lorenz_rhs(s, p),
        lambda s: dynamics.lorenz_jacobian(s, p),
        np.array([1.0, 1.0, 1.0]), 0.01, 2000, transient=0)
    for a, b in zip(sp.lambdas, ref.lambdas):
        assert a == pytest.approx(b, abs=1e-9)


def test_lyapunov_single_vs_double_leading():
    a = lyapunov_ode("lorenz", dt=0.01, n_steps=200_000, prec=SINGLE)
    b = lyapunov_ode("lorenz", dt=0.01, n_steps=200_000, prec=DOUBLE)
    assert a.lambdas[0] == pytest.approx(b.lambdas[0], rel=0.02)


def test_lyapunov_map_identity_zero():
    sp = lyapunov_map(np.array([1.0, 2.0, 3.0, 4.0]), lambda s: s.copy(),
                      dt=0.02, n_steps=500, transient=10)
    assert np.allclose(sp.lambdas, 0.0, atol=1e-8)


def test_spectrum_sorted_and_tagged(lorenz_lyap_double):
    lams = lorenz_lyap_double.lambdas
    assert list(lams) == sorted(lams, reverse=True)
    assert lorenz_lyap_double.method == "ode-tangent"


# -- one-step error -------------------------------------------------------

def test_one_step_error_self_consistency():
    tr = integrate(IC, 1200, 0.02, prec=DOUBLE)
    mean, std = one_step_error(tr, start_index=100, n=1000)
    assert mean < 1e-12


@pytest.fixture(scope="module")
def lorenz_lyap_double():
    return lyapunov_ode("lorenz", dt=0.01, n_steps=400_000)
