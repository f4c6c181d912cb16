"""Symbol tabulation, seminorms, cutoff splitting, and composition defects."""

import math

import numpy as np
import pytest

import levysde as lv
from levysde.symbols import AClass, HypClass

from conftest import make_mode


class TestTabulate:
    def test_constant_coefficient_row_constant(self, symbol_const_256, grid256):
        vals = symbol_const_256.values
        assert np.abs(vals - vals[0]).max() <= 1e-12 * np.abs(vals).max()
        assert np.allclose(vals[0], np.abs(grid256.xi) ** 1.5, atol=1e-12)

    def test_shift_by_one(self, constant_model, grid256, symbol_const_256):
        shifted = lv.tabulate(constant_model, grid256, shift=1.0)
        assert np.allclose(shifted.values, symbol_const_256.values + 1.0, atol=0.0)

    def test_variable_sigma_range(self, symbol_var_256, grid256):
        # values at fixed xi vary between |1.8 xi|^{1.5} and |2.2 xi|^{1.5}
        k = int(np.argmin(np.abs(grid256.xi - 8.0)))
        col = symbol_var_256.values[:, k].real
        assert col.min() == pytest.approx((1.8 * 8.0) ** 1.5, rel=1e-3)
        assert col.max() == pytest.approx((2.2 * 8.0) ** 1.5, rel=1e-3)

    def test_csv_emission(self, tmp_path, grid256):
        grid = lv.TorusGrid(n=16, dimension=1, length_factor=1.0)
        model = lv.SdeModel(
            sigma=lv.coefficient_preset("constant", value=1.0),
            drift=lv.coefficient_preset("constant", value=0.0),
            measure=lv.StableMeasure.normalized(1.5),
            sigma_lower_bound=0.5,
        )
        sym = lv.tabulate(model, grid)
        path = tmp_path / "sym.csv"
        sym.to_csv(path, header_comment="x")
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == "x_index,xi_index,re,im"
        assert len(lines) == 2 + 16 * 16


class TestSeminorm:
    def test_bracket_weight_function_analytic_oracle(self, grid256):
        # s = <xi>^{1.5} in class A(1.5, 2, 0; 1, 0): the analytic-derivative
        # oracle on the lattice, FD value within 2%
        brk = np.sqrt(1.0 + grid256.xi**2)
        s = lv.SymbolGrid(grid256, np.tile(brk**1.5, (256, 1)).astype(complex), 1.5)
        rep = lv.seminorm(s, AClass(m=1.5, k1=2, k2=0))
        xi = grid256.xi
        d0 = brk**1.5
        d1 = np.abs(1.5 * xi * brk**-0.5)
        d2 = np.abs(1.5 * brk**-0.5 - 0.75 * xi**2 * brk**-2.5)
        oracle = max(
            (d0 * brk**-1.5).max(), (d1 * brk**-0.5).max(), (d2 * brk**0.5).max()
        )
        assert rep.value == pytest.approx(oracle, rel=0.02)

    def test_constant_symbol(self, grid256):
        s = lv.SymbolGrid(grid256, np.full((256, 256), 3.0 + 4.0j), 0.0)
        rep = lv.seminorm(s, AClass(m=0.0, k1=2, k2=2))
        assert rep.value == pytest.approx(5.0, abs=1e-10)
        assert rep.witness[2] == (0,) and rep.witness[3] == (0,)

    def test_hyp_power_witness_on_boundary(self, grid256):
        # 1/s derivatives have a closed form; the sup sits on the circle |xi| = r
        vals = np.tile(np.abs(grid256.xi) ** 1.5, (256, 1)).astype(complex)
        vals[:, grid256.xi == 0.0] = 1.0  # harmless: outside the Hyp region
        s = lv.SymbolGrid(grid256, vals, 1.5)
        rep = lv.seminorm(s, HypClass(m=1.5, k1=2, k2=0, radius=4.0))
        assert abs(grid256.xi[rep.witness[1][0]]) == pytest.approx(4.0)
        x0 = 4.0
        oracle = 1.5 * 2.5 * x0**-3.5 * (1.0 + x0**2) ** 1.75
        assert rep.value == pytest.approx(oracle, rel=0.02)

    def test_witness_reproducible(self, symbol_var_256):
        rep = lv.seminorm(symbol_var_256, AClass(m=1.5, k1=2, k2=2))
        assert lv.recompute_witness(symbol_var_256, rep) == rep.value

    def test_hyp_witness_reproducible(self, symbol_var_256):
        rep = lv.seminorm(symbol_var_256, HypClass(m=1.5, k1=2, k2=1, radius=4.0))
        assert lv.recompute_witness(symbol_var_256, rep) == rep.value

    def test_ellipticity_violation_names_point(self, grid256):
        vals = np.tile(np.abs(grid256.xi) ** 1.5, (256, 1)).astype(complex)
        vals[:, 100] = 0.0
        s = lv.SymbolGrid(grid256, vals, 1.5)
        with pytest.raises(lv.EllipticityError) as err:
            lv.seminorm(s, HypClass(m=1.5, k1=1, k2=0, radius=4.0))
        assert err.value.point is not None

    def test_torus_x_weights_rejected(self, symbol_const_256):
        with pytest.raises(ValueError):
            lv.seminorm(symbol_const_256, AClass(m=1.5, k1=1, k2=0, delta=0.5))

    def test_fd_order_cap(self, symbol_const_256):
        with pytest.raises(ValueError):
            lv.seminorm(symbol_const_256, AClass(m=1.5, k1=5, k2=0))

    def test_report_serialization(self, symbol_var_256):
        rep = lv.seminorm(symbol_var_256, AClass(m=1.5, k1=1, k2=1))
        d = rep.to_dict()
        assert d["class"] == "AClass"
        assert set(d["witness"]) == {"x_index", "xi_index", "alpha", "beta"}

    def test_shift_uniformity_over_ray(self, symbol_var_256):
        # Hyp seminorm of (lambda + a) varies by <= 3 along the sector ray
        theta_p = 0.6
        vals = []
        for mag in (1.0, 3.0, 10.0, 30.0, 100.0):
            lam = mag * np.exp(1j * (np.pi / 2.0 + theta_p))
            rep = lv.seminorm(
                symbol_var_256.shifted(lam), HypClass(m=1.5, k1=2, k2=0, radius=4.0)
            )
            vals.append(rep.value)
        assert max(vals) / min(vals) <= 3.0


class TestChooseR:
    def test_constant_symbol_small_radius(self, symbol_const_256):
        R = lv.choose_R(symbol_const_256, 1.5)
        assert R >= 1.0
        assert R == 4.0  # floor from the first-derivative seminorm product

    def test_variable_symbol(self, symbol_var_256):
        assert lv.choose_R(symbol_var_256, 1.5) == 4.0

    def test_bounded_symbol_rejected(self, grid256):
        s = lv.SymbolGrid(grid256, np.full((256, 256), 3.0 + 0.0j), 0.0)
        with pytest.raises(lv.EllipticityError):
            lv.choose_R(s, 1.5)

    def test_shift_sweep_non_increasing(self, constant_model, variable_model, grid1024):
        sym = lv.tabulate(variable_model, grid1024)
        radii = [lv.choose_R(sym.shifted(lam), 1.5) for lam in (1.0, 10.0, 100.0)]
        assert all(r1 >= r2 for r1, r2 in zip(radii, radii[1:]))

    def test_grid_too_coarse(self, variable_model):
        grid = lv.TorusGrid(n=16, dimension=1, length_factor=4.0)
        sym = lv.tabulate(variable_model, grid)
        with pytest.raises(lv.ContractionError, match="Nyquist"):
            lv.choose_R(sym, 1.5)


class TestCutoffSplit:
    def test_reconstruction_everywhere(self, symbol_var_256):
        split = lv.cutoff_split(symbol_var_256, 4.0)
        recon = split.p_high.values + split.b_low.values
        assert np.abs(recon - symbol_var_256.values).max() <= 1e-12 * np.abs(
            symbol_var_256.values
        ).max()

    def test_parametrix_inverts_on_plateau(self, symbol_var_256, grid256):
        split = lv.cutoff_split(symbol_var_256, 4.0)
        mags = grid256.xi_norm()
        plateau = mags >= 8.0
        prod = split.q.values * symbol_var_256.values
        assert np.abs(prod[:, plateau] - 1.0).max() <= 1e-12

    def test_low_block_vanishes(self, symbol_var_256, grid256):
        split = lv.cutoff_split(symbol_var_256, 4.0)
        low = grid256.xi_norm() <= 4.0
        assert np.abs(split.p_high.values[:, low]).max() == 0.0
        assert np.abs(split.q.values[:, low]).max() == 0.0
        high = grid256.xi_norm() >= 8.0
        assert np.abs(split.b_low.values[:, high]).max() == 0.0

    def test_b_low_support(self, symbol_var_256, grid256):
        split = lv.cutoff_split(symbol_var_256, 4.0)
        outside = grid256.xi_norm() > 8.0  # = 2R
        assert np.abs(split.b_low.values[:, outside]).max() == 0.0


class TestCompositionDefect:
    def test_x_independent_second_factor_exact(self, grid256):
        # a1 = sigma(x) i xi, a2 = i xi: all correction terms vanish at N = 0
        sig = lv.coefficient_preset("2+sin", offset=2.0, amplitude=0.2)(grid256.x)[:, None]
        a1 = lv.SymbolGrid(grid256, sig * 1j * grid256.xi[None, :], 1.0)
        a2 = lv.SymbolGrid(grid256, np.tile(1j * grid256.xi, (256, 1)), 1.0)
        u = make_mode(grid256, 5.0)
        defect, rep = lv.composition_defect(a1, a2, u, order=0)
        assert rep.relative <= 1e-10

    def test_product_rule_exact_at_order_one(self, grid256):
        # oracle: d/dx (sigma du/dx) = sigma u'' + sigma' u', reproduced exactly
        # by the order-1 expansion
        sig_fun = lv.coefficient_preset("2+sin", offset=2.0, amplitude=0.2)
        sig = sig_fun(grid256.x)[:, None]
        a1 = lv.SymbolGrid(grid256, np.tile(1j * grid256.xi, (256, 1)), 1.0)
        a2 = lv.SymbolGrid(grid256, sig * 1j * grid256.xi[None, :], 1.0)
        u = make_mode(grid256, 5.0)
        defect, rep = lv.composition_defect(a1, a2, u, order=1)
        assert rep.relative <= 1e-10
        # direct differential-operator oracle
        x = grid256.x
        lhs = lv.apply_symbol(a1, lv.apply_symbol(a2, u)).values
        oracle = -sig_fun(x) * 25.0 * np.exp(5j * x) + 1j * 5.0 * np.gradient(
            sig_fun(x), x
        ) * np.exp(5j * x)
        # np.gradient is itself O(h^2); compare loosely
        assert np.abs(lhs - oracle).max() <= 1e-2 * np.abs(oracle).max()

    def test_defect_order_improves_one_power(self, variable_model, grid1024):
        sym = lv.tabulate(variable_model, grid1024)
        ratios = []
        for k in (8.0, 16.0, 32.0):
            u = make_mode(grid1024, k)
            _, rep0 = lv.composition_defect(sym, sym, u, order=0)
            _, rep1 = lv.composition_defect(sym, sym, u, order=1)
            ratios.append((k, rep1.defect_l2 / rep0.defect_l2))
        slope = math.log(ratios[-1][1] / ratios[0][1]) / math.log(
            ratios[-1][0] / ratios[0][0]
        )
        assert -1.3 <= slope <= -0.7

    def test_band_limit_precondition(self, symbol_const_256, grid256):
        u = make_mode(grid256, 20.0)  # Nyquist is 32, bound is 8
        with pytest.raises(ValueError):
            lv.composition_defect(symbol_const_256, symbol_const_256, u, order=0)
