import numpy as np
import pytest

from lpcns.littlewood_paley import get_bank
from lpcns.model import ModelParams
from lpcns.spectral import make_grid
from lpcns.verify import (
    band_limited_shell,
    bernstein_constant,
    budget_convergence,
    report_json,
    scaling_roundtrip,
    verify_suite,
)


@pytest.fixture(scope="module")
def default_report():
    return verify_suite(n=32, seed=0)


class TestSuite:
    def test_default_passes(self, default_report):
        failed = [p["name"] for p in default_report["properties"] if not p["passed"]]
        assert failed == []
        assert default_report["passed"] is True

    def test_broken_dealias_only_fails_budget(self):
        rep = verify_suite(n=32, seed=0, break_dealias=True)
        failed = {p["name"] for p in rep["properties"] if not p["passed"]}
        assert rep["passed"] is False
        assert failed == {"budget_residual_convergence"}

    def test_json_stable(self, default_report):
        assert report_json(default_report) == report_json(verify_suite(n=32, seed=0))


class TestHelpers:
    def test_band_limited_shell_support(self):
        g = make_grid(2, 32)
        bank = get_bank(g)
        F = band_limited_shell(g, np.random.default_rng(0), 2)
        outside = np.abs(F.coef[0]) * (bank.multiplier(2) < 1e-15)
        assert outside.max() < 1e-15

    def test_band_limited_shell_too_fine(self):
        with pytest.raises(ValueError):
            band_limited_shell(make_grid(2, 16), np.random.default_rng(0), 3)

    def test_bernstein_grid_independent(self):
        a = bernstein_constant(32, 10, seed=1)
        b = bernstein_constant(64, 10, seed=1)
        assert set(a) == set(b) == {1, 2, 3}
        for q in a:
            assert abs(a[q] - b[q]) <= 0.1 * max(a[q], b[q])

    def test_budget_fails_without_dealiasing(self):
        ratios = budget_convergence(ModelParams(dealias=False))
        assert not np.all((ratios > 3.0) & (ratios < 5.0))

    def test_scaling_small(self):
        disc, integ = scaling_roundtrip(n=32)
        assert disc <= 10 * integ
