import math

import numpy as np
import pytest

from scldpc.density import (GridError, LlrGrid, NumericalFailure, Density,
                            bec_density, box_conv, box_conv_self,
                            gaussian_llr_density, perfect_density, point_mass,
                            sum_conv)


def boxplus(a, b):
    return 2.0 * math.atanh(math.tanh(a / 2.0) * math.tanh(b / 2.0))


def random_density(grid, seed):
    rng = np.random.default_rng(seed)
    vec = rng.random(grid.n)
    vec /= vec.sum()
    return Density(grid, vec)


# ---------------------------------------------------------------------- grid

def test_grid_validation():
    with pytest.raises(ValueError):
        LlrGrid(-0.1, 10.0)
    with pytest.raises(ValueError):
        LlrGrid(0.3, 10.0)  # rmax not a multiple of delta
    with pytest.raises(ValueError):
        LlrGrid(0.001, 30.0)  # too fine for the int16 combine table


def test_grid_caching_and_layout():
    g = LlrGrid(0.5, 10.0)
    assert g is LlrGrid(0.5, 10.0)
    assert g.n == 41 and g.half == 20
    assert g.values[g.half] == 0.0
    assert g.values[-1] == pytest.approx(10.0)
    assert g.index_of(0.26) == g.half + 1
    assert g.index_of(99.0) == g.n - 1


# ----------------------------------------------------------- basic densities

def test_point_and_perfect_densities():
    g = LlrGrid(0.5, 10.0)
    d = point_mass(g, 2.0)
    assert d.mass() == pytest.approx(1.0)
    assert d.bhattacharyya() == pytest.approx(math.exp(-1.0))
    assert d.error_prob() == 0.0
    assert perfect_density(g).bhattacharyya() == 0.0
    assert point_mass(g, 0.0).bhattacharyya() == 1.0
    assert point_mass(g, -math.inf).error_prob() == 1.0


def test_bec_density_summaries():
    g = LlrGrid(0.1, 20.0)
    d = bec_density(g, 0.37)
    assert d.mass() == pytest.approx(1.0)
    assert d.bhattacharyya() == pytest.approx(0.37)
    assert d.error_prob() == pytest.approx(0.37 / 2.0)  # half the erasure mass


def test_gaussian_density_summaries():
    g = LlrGrid(0.01, 30.0)
    d = gaussian_llr_density(g, 1.0)
    assert d.mass() == pytest.approx(1.0, abs=1e-12)
    assert d.bhattacharyya() == pytest.approx(math.exp(-0.5), abs=1e-4)
    # P(z < 0) for N(2, 4): Phi(-1)
    from scipy.special import ndtr
    assert d.error_prob() == pytest.approx(float(ndtr(-1.0)), abs=1e-3)
    assert d.symmetry_defect() < 1e-6


def test_gaussian_density_grid_too_small():
    with pytest.raises(GridError):
        gaussian_llr_density(LlrGrid(0.01, 4.0), 0.9)


def test_renormalize_guard():
    g = LlrGrid(0.5, 10.0)
    d = random_density(g, 0)
    d.renormalize()  # fine at mass 1
    d.vec *= 1.1
    with pytest.raises(NumericalFailure):
        d.renormalize()


# ------------------------------------------------------------- check combine

def test_boxplus_two_point_oracle():
    g = LlrGrid(0.01, 30.0)
    out = box_conv(point_mass(g, 2.0), point_mass(g, 2.0))
    mode = g.values[int(np.argmax(out.vec))]
    assert abs(mode - boxplus(2.0, 2.0)) <= g.delta / 2 + 1e-12
    assert out.mass() == pytest.approx(1.0, abs=1e-12)
    # sign algebra
    out = box_conv(point_mass(g, 2.0), point_mass(g, -2.0))
    mode = g.values[int(np.argmax(out.vec))]
    assert abs(mode + boxplus(2.0, 2.0)) <= g.delta / 2 + 1e-12


def test_boxplus_identity_and_erasure():
    g = LlrGrid(0.05, 15.0)
    a = gaussian_llr_density(g, 1.2)
    ident = box_conv(a, perfect_density(g))
    assert np.allclose(ident.vec, a.vec, atol=1e-12)
    assert ident.p_pos_inf == pytest.approx(a.p_pos_inf)
    erased = box_conv(a, point_mass(g, 0.0))
    assert erased.vec[g.half] == pytest.approx(1.0, abs=1e-12)


def test_boxplus_matches_exact_rule_oracle():
    # independent oracle: exact tanh rule per mass pair, rounded to the grid
    g = LlrGrid(0.5, 6.0)
    a = random_density(g, 1)
    b = random_density(g, 2)
    expect = np.zeros(g.n)
    for i, ai in enumerate(a.vec):
        for j, bj in enumerate(b.vec):
            z = boxplus(g.values[i], g.values[j]) if g.values[i] and g.values[j] else 0.0
            expect[g.index_of(z)] += ai * bj
    out = box_conv(a, b)
    assert np.allclose(out.vec, expect, atol=1e-12)


def test_box_conv_self_consistency():
    g = LlrGrid(0.1, 10.0)
    a = random_density(g, 3)
    assert np.allclose(box_conv_self(a).vec, box_conv(a, a).vec, atol=1e-12)


def test_boxplus_preserves_symmetry():
    g = LlrGrid(0.02, 20.0)
    a = gaussian_llr_density(g, 1.0)
    out = box_conv(a, a).renormalize()
    # quantization perturbs symmetry by O(delta^2)
    assert out.symmetry_defect() < g.delta ** 2
    assert 0.0 <= out.bhattacharyya() <= 1.0


# ---------------------------------------------------------- variable combine

def test_sum_conv_point_masses_and_folding():
    g = LlrGrid(0.5, 10.0)
    out = sum_conv(point_mass(g, 2.0), point_mass(g, 1.5))
    assert out.vec[g.index_of(3.5)] == pytest.approx(1.0)
    folded = sum_conv(point_mass(g, 8.0), point_mass(g, 7.0))
    assert folded.vec[-1] == pytest.approx(1.0)  # saturates at +rmax
    assert sum_conv(point_mass(g, 1.0), perfect_density(g)).p_pos_inf == 1.0
    with pytest.raises(NumericalFailure):
        sum_conv(perfect_density(g), point_mass(g, -math.inf))


def test_sum_conv_matches_double_loop_oracle():
    g = LlrGrid(0.5, 5.0)
    a = random_density(g, 4)
    b = random_density(g, 5)
    expect = np.zeros(g.n)
    for i, ai in enumerate(a.vec):
        for j, bj in enumerate(b.vec):
            idx = min(max(i + j - g.half, 0), g.n - 1)
            expect[idx] += ai * bj
    out = sum_conv(a, b)
    assert np.allclose(out.vec, expect, atol=1e-12)
    assert out.mass() == pytest.approx(1.0, abs=1e-12)


def test_sum_conv_preserves_symmetry():
    g = LlrGrid(0.02, 20.0)
    a = gaussian_llr_density(g, 1.3)
    out = sum_conv(a, a).renormalize()
    assert out.symmetry_defect() < 1e-6
    # Bhattacharyya multiplicative under LLR addition
    assert out.bhattacharyya() == pytest.approx(a.bhattacharyya() ** 2, rel=1e-6)
