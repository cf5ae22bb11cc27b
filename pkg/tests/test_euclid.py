import csv
import json
import math

import numpy as np
import pytest
from scipy import integrate, special

from packbound import euclid as E
from packbound.config import DEFAULT_CAPS
from packbound.errors import InfeasibleCertificate
from packbound.geometry import PointConfiguration, cube_mesh


def gaussian(dim, R=6.0):
    return E.RadialProfile.analytic(dim, R, lambda r: np.exp(-np.pi * r ** 2), name="gauss")


def slice_lens(n, r):
    # volume of B(0) n B(r e1) by integrating (n-1)-ball cross-sections along e1
    inner = E.ball_volume(n - 1)

    def area(x):
        rho2 = min(1 - x * x, 1 - (x - r) ** 2)
        return inner * rho2 ** ((n - 1) / 2) if rho2 > 0 else 0.0

    val, _ = integrate.quad(area, r - 1, 1, points=[r / 2], epsabs=1e-13, epsrel=1e-13)
    return val


def test_volumes():
    assert E.ball_volume(1) == pytest.approx(2)
    assert E.ball_volume(2) == pytest.approx(math.pi)
    assert E.ball_volume(3) == pytest.approx(4 * math.pi / 3)
    assert E.sphere_area(3) == pytest.approx(4 * math.pi)


def test_bessel_orders_match_scipy():
    x = np.concatenate([np.linspace(1e-3, 1, 50), np.linspace(1, 300, 500)])
    for nu in (-0.5, 0, 0.5, 1, 1.5, 2.5):
        assert np.allclose(E.bessel_j(nu, x), special.jv(nu, x), rtol=1e-12, atol=1e-14)


def test_triangle_transform_at_zero():
    assert abs(E.radial_fourier(E.triangle_profile(), 0.0) - 4) < 1e-12
    # 1-d transform of the triangle is 4 sinc^2(2 s)
    s = np.array([0.1, 0.3, 0.77, 2.2])
    assert np.allclose(E.radial_fourier(E.triangle_profile(), s), 4 * np.sinc(2 * s) ** 2, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gaussian_transform(n):
    s = np.linspace(0, 2, 41)
    assert np.max(np.abs(E.radial_fourier(gaussian(n), s) - np.exp(-np.pi * s ** 2))) < 1e-6


@pytest.mark.parametrize("n", [2, 3])
def test_transform_at_zero_monte_carlo(n):
    rng = np.random.default_rng(n)
    f = E.ball_autocorrelation(n)
    N = 400_000
    x = rng.uniform(-2, 2, size=(N, n))
    vals = f(np.linalg.norm(x, axis=1)) * 4.0 ** n
    est, sigma = vals.mean(), vals.std() / math.sqrt(N)
    assert abs(E.radial_fourier(f, 0.0) - est) <= 3 * sigma


def test_ball_autocorrelation_values():
    f1 = E.ball_autocorrelation(1)
    assert f1(np.array([0.0]))[0] == 2 and f1(np.array([2.0]))[0] == 0
    assert np.allclose(f1(np.linspace(0, 2, 9)), 2 - np.linspace(0, 2, 9))
    assert abs(E.ball_autocorrelation(2)(np.array([0.0]))[0] - math.pi) < 1e-14
    assert abs(E.ball_autocorrelation(3)(np.array([0.0]))[0] - 4 * math.pi / 3) < 1e-14
    assert abs(E.ball_autocorrelation(4)(np.array([0.0]))[0] - math.pi ** 2 / 2) < 1e-14
    with pytest.raises(ValueError):
        E.ball_autocorrelation(5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_lens_formulas_against_slicing(n):
    f = E.ball_autocorrelation(n)
    for r in (0.25, 0.5, 1.0, 1.5, 1.9):
        assert abs(f(np.array([r]))[0] - slice_lens(n, r)) < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4])
def test_lens_formulas_against_monte_carlo(n):
    rng = np.random.default_rng(40 + n)
    f = E.ball_autocorrelation(n)
    N = 1_000_000
    for r in (0.5, 1.0, 1.5):
        # sample the unit ball uniformly, count hits in the shifted ball
        g = rng.normal(size=(N, n))
        g *= (rng.random(N) ** (1 / n) / np.linalg.norm(g, axis=1))[:, None]
        g[:, 0] -= r
        p = np.mean(np.linalg.norm(g, axis=1) < 1)
        est = p * E.ball_volume(n)
        sigma = math.sqrt(p * (1 - p) / N) * E.ball_volume(n)
        assert abs(f(np.array([r]))[0] - est) <= max(4 * sigma, 1e-4)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_autocorrelation_transform_is_squared_indicator(n):
    f = E.ball_autocorrelation(n)
    s = np.linspace(0.05, 6, 120)
    ind = special.jv(n / 2, 2 * np.pi * s) / s ** (n / 2)
    fh = E.radial_fourier(f, s)
    assert np.max(np.abs(fh - ind ** 2)) < 1e-9
    assert fh.min() >= -1e-9


def test_lp_check_triangle():
    rep = E.lp_certificate_check(E.triangle_profile(1))
    assert rep.feasible
    assert abs(rep.ratio - 0.5) < 1e-12
    assert abs(rep.density_bound - 1) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("variant", ["theta'", "theta", "theta+"])
def test_lp_check_ball_autocorrelation(n, variant):
    rep = E.lp_certificate_check(E.ball_autocorrelation(n), variant)
    assert rep.feasible, rep.violation
    assert abs(rep.density_bound - 1) < 1e-5
    assert abs(rep.ratio - 1 / E.ball_volume(n)) < 1e-6
    assert rep.min_fhat_margin >= -1e-9


def test_lp_check_ratios_from_formula():
    # density 1 means ratio = Gamma(n/2 + 1) / pi^(n/2)
    for n in (2, 3):
        rep = E.lp_certificate_check(E.ball_autocorrelation(n))
        assert abs(rep.ratio - math.gamma(n / 2 + 1) / math.pi ** (n / 2)) < 1e-6
    assert abs(E.lp_certificate_check(E.ball_autocorrelation(3)).ratio - 0.2387324) < 1e-5


def test_lp_check_rejects_bad_profiles():
    # positive beyond 2
    wide = E.RadialProfile.piecewise(1, [0.0, 3.0], [[3.0, -1.0]])
    rep = E.lp_certificate_check(wide)
    assert not rep.feasible and rep.violation[0].startswith("f <= 0")
    with pytest.raises(InfeasibleCertificate):
        E.lp_certificate_check(wide, strict=True)
    # a box has a sign-changing transform
    box = E.RadialProfile.piecewise(1, [0.0, 1.0], [[1.0]])
    rep = E.lp_certificate_check(box)
    assert not rep.feasible and rep.violation[0] == "fhat >= 0" and rep.min_fhat_margin < -0.1


def test_lp_check_variants_differ():
    # negative tail beyond 2 is allowed for theta' only
    tail = E.RadialProfile.piecewise(1, [0.0, 2.0, 3.0], [[2.0, -1.0], [2.0, -1.0]])
    assert E.lp_certificate_check(tail, "theta'").sign_margin >= 0
    assert not E.lp_certificate_check(tail, "theta").feasible


def test_certificate_record_fields():
    rec = E.lp_certificate_check(E.triangle_profile()).record()
    assert set(rec) == {"variant", "n", "f0", "fhat0", "ratio", "density_bound", "min_fhat_margin",
                        "sign_margin", "feasible"}
    json.dumps(rec)


def test_profile_json_round_trip(tmp_path):
    f = E.RadialProfile.piecewise(2, [0.0, 1.0, 2.0], [[1.0, -0.5], [1.25, -1.0, 0.25]])
    path = tmp_path / "f.json"
    path.write_text(json.dumps(f.to_json()))
    g = E.load_profile(path)
    r = np.linspace(0, 2.5, 11)
    assert np.array_equal(f(r), g(r))
    with pytest.raises(ValueError):
        E.RadialProfile.piecewise(1, [0.0, 1.0, 2.0], [[1.0], [0.0]])


def test_samples_profile():
    r = np.linspace(0, 2, 401)
    f = E.RadialProfile.from_samples(1, r, 2 - r)
    assert abs(E.radial_fourier(f, 0.0) - 4) < 1e-9


# ---------------------------------------------------------------- sweeps

def test_sweep_csv_is_resumable(tmp_path):
    path = tmp_path / "sweep.csv"
    a = E.delta_sweep("pack", 1, [10, 20], [1.0], csv_path=path)
    b = E.delta_sweep("pack", 1, [10, 20, 30], [1.0], csv_path=path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(E.CSV_FIELDS)
    assert [float(r["r"]) for r in rows] == [10.0, 20.0, 30.0]
    assert a.values() == {k: v for k, v in b.values().items() if k[0] < 30}
    assert all(r["status"] == "ok" for r in rows)


def test_pack_sweep_converges():
    caps = DEFAULT_CAPS.with_(alpha=300)
    rec = E.delta_sweep("pack", 1, [20, 40, 100], [0.5], caps=caps)
    vals = [row.value for row in rec.rows]
    assert vals == [11, 21, 51]
    for row in rec.rows:
        assert abs(row.value_over_rn - 0.5) <= 1.5 / row.r
    ratios = [row.value_over_rn for row in rec.rows]
    assert all(b <= a + 2e-2 for a, b in zip(ratios, ratios[1:]))


def test_cov_sweep_from_above():
    caps = DEFAULT_CAPS.with_(cov=200)
    row = E.delta_sweep("cov", 1, [20], [0.25], caps=caps).rows[0]
    # greedy interval cover: groups of eight mesh points span 1.75
    assert row.value == math.ceil(81 / 8)
    assert 0.5 <= row.value_over_rn <= 0.6


def test_theta_prime_sweep_doubling():
    caps = DEFAULT_CAPS.with_(theta_prime=200)
    rec = E.delta_sweep("theta'", 1, [10, 20, 40], [0.5], caps=caps)
    ratios = [row.value_over_rn for row in rec.rows]
    assert all(row.status == "ok" for row in rec.rows)
    assert all(b <= a + 2e-2 for a, b in zip(ratios, ratios[1:]))
    assert all(r >= 0.5 for r in ratios)


def test_sweep_reports_cap():
    row = E.delta_sweep("cov", 1, [40], [0.5]).rows[0]
    assert row.status == "cap_exceeded" and math.isnan(row.value)


def test_refinement_report():
    rec = E.delta_sweep("pack", 1, [8], [1.0, 0.5, 0.25])
    seq, mono = rec.refinement()[8.0]
    assert [h for h, _ in seq] == [1.0, 0.5, 0.25] and mono


# ---------------------------------------------------------------- sandwich report

def test_sandwich_on_mesh():
    rep = E.sandwich_consistency_report(1, 6.0, 1.0)
    assert rep.holds
    assert all(s == "ok" for _, _, s in rep.rows)
    vals = dict((b, v) for b, v, _ in rep.rows)
    assert vals["pack"] == 4 and vals["cov"] == 4


def test_sandwich_single_point():
    rep = E.sandwich_consistency_report(config=PointConfiguration([[0.3, 0.1]], 2))
    assert rep.holds
    assert all(abs(v - 1) < 1e-6 for _, v, _ in rep.rows)


def test_sandwich_triangle():
    s = 1.9
    c = PointConfiguration([[0, 0], [s, 0], [s / 2, s * math.sqrt(3) / 2]], 2)
    rep = E.sandwich_consistency_report(config=c)
    vals = dict((b, v) for b, v, _ in rep.rows)
    assert vals["pack"] == 1 and vals["cov"] == 2 and rep.holds
    assert "pack" in rep.table()
