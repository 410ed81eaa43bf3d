"""Tests for the scalar comb medium: combs, transforms, propagation, echoes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iafc.errors import (
    CoverageError,
    NumericalInstabilityError,
    UndefinedFidelityError,
)
from iafc.spectral import (
    CombTooth,
    FrequencyComb,
    MediumSpec,
    SpectralPulse,
    TemporalPulse,
    comb_from_depth,
    conjugate_time_grid,
    design_grid,
    echo_efficiency,
    echo_window,
    find_echo,
    gaussian_spectrum,
    make_ideal_comb,
    propagate,
    scalar_fidelity,
    time_domain_oracle,
    to_freq,
    to_time,
    transfer_function,
)

GHZ = 2 * np.pi * 1e9
DELTA = 2 * np.pi * 400e6   # tooth spacing used across the tests
GAMMA = 5e6                 # homogeneous linewidth (amplitude decay rate)
LENGTH = 1e-3


def ideal_medium(n_teeth=9, area=1.0, gamma=GAMMA, delta=DELTA, length=LENGTH):
    """Medium whose period-averaged amplitude exponent equals ``area``."""
    weight = area * delta / (np.pi * length)
    return MediumSpec(length, make_ideal_comb(n_teeth, delta, gamma, weight))


# ---------------------------------------------------------------------------
# comb construction
# ---------------------------------------------------------------------------

class TestMakeIdealComb:
    def test_nine_teeth_centred(self):
        comb = make_ideal_comb(9, 2 * np.pi * 400e6, 2 * np.pi * 5e6, 1.0)
        expected = (np.arange(9) - 4) * 2 * np.pi * 400e6
        assert np.allclose(comb.detunings, expected)
        assert np.all(comb.weights == 1.0)

    def test_single_tooth_at_zero(self):
        comb = make_ideal_comb(1, 1.0, 1.0, 2.0)
        assert comb.detunings == pytest.approx([0.0])

    def test_two_teeth_symmetric(self):
        comb = make_ideal_comb(2, DELTA, GAMMA, 1.0)
        assert np.allclose(comb.detunings, [-DELTA / 2, DELTA / 2])

    @pytest.mark.parametrize("kwargs", [
        dict(n_teeth=0, delta=1.0, gamma=1.0, weight=1.0),
        dict(n_teeth=3, delta=-1.0, gamma=1.0, weight=1.0),
        dict(n_teeth=3, delta=1.0, gamma=0.0, weight=1.0),
        dict(n_teeth=3, delta=1.0, gamma=1.0, weight=-1.0),
    ])
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ValueError):
            make_ideal_comb(**kwargs)

    def test_teeth_sorted_by_detuning(self):
        comb = FrequencyComb((CombTooth(2.0, 1.0), CombTooth(-1.0, 1.0)), 1.0)
        assert np.all(np.diff(comb.detunings) > 0)

    def test_from_peak_depth(self):
        med = comb_from_depth(9, DELTA, GAMMA, d0=2.0, length=LENGTH)
        assert med.peak_depth() == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# transfer function
# ---------------------------------------------------------------------------

class TestTransferFunction:
    def test_empty_comb_is_transparent(self):
        comb = FrequencyComb((), 1.0)
        assert transfer_function(comb, 123.0) == 0.0

    def test_single_tooth_peak_value(self):
        w = 3.0
        comb = FrequencyComb((CombTooth(0.0, w),), GAMMA)
        val = transfer_function(comb, 0.0)
        assert val == pytest.approx(2 * w / GAMMA)
        assert val.imag == pytest.approx(0.0)

    def test_matches_direct_sum_at_tooth_centres(self):
        comb = make_ideal_comb(9, DELTA, GAMMA, 7.5e8)
        for omega in -comb.detunings:
            expected = sum(
                th.weight / (1j * (th.detuning + omega) + GAMMA / 2)
                for th in comb.teeth
            )
            got = transfer_function(comb, omega)
            assert abs(got - expected) <= 1e-12 * abs(expected)

    def test_real_part_nonnegative(self):
        rng = np.random.default_rng(7)
        comb = make_ideal_comb(5, DELTA, GAMMA, 1e9)
        omega = rng.uniform(-10 * DELTA, 10 * DELTA, size=300)
        assert np.all(transfer_function(comb, omega).real >= 0.0)


# ---------------------------------------------------------------------------
# Fourier transforms
# ---------------------------------------------------------------------------

class TestTransforms:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    def test_roundtrip_identity(self, seed):
        rng = np.random.default_rng(seed)
        n = 256
        tp = TemporalPulse(-3.3e-9, 0.05e-9,
                           rng.normal(size=n) + 1j * rng.normal(size=n))
        back = to_time(to_freq(tp), grid=(tp.t0, tp.dt))
        err = np.linalg.norm(back.samples - tp.samples)
        assert err <= 1e-10 * np.linalg.norm(tp.samples)

    def test_parseval(self):
        rng = np.random.default_rng(3)
        tp = TemporalPulse(0.0, 0.1e-9,
                           rng.normal(size=512) + 1j * rng.normal(size=512))
        sp = to_freq(tp)
        assert sp.energy() == pytest.approx(tp.energy(), rel=1e-10)

    def test_delta_spectrum_constant_magnitude(self):
        samples = np.zeros(128, complex)
        samples[40] = 1.0
        sp = SpectralPulse(-64e9, 1e9, samples)
        tp = to_time(sp)
        mags = np.abs(tp.samples)
        assert np.allclose(mags, mags[0], rtol=1e-12)

    def test_gaussian_pair_reciprocal_widths(self):
        b = 2 * np.pi * 0.5e9
        grid = (-40 * b, 80 * b / 4096, 4096)
        sp = gaussian_spectrum(grid, b)
        tp = to_time(sp)
        t = tp.times()
        intensity = np.abs(tp.samples) ** 2
        sigma_t = np.sqrt(np.sum(t ** 2 * intensity) / np.sum(intensity))
        # |E(t)|^2 has RMS width 1/(b sqrt(2)) for amplitude width 1/b
        assert sigma_t * b * np.sqrt(2) == pytest.approx(1.0, rel=1e-6)

    def test_nonconjugate_grid_rejected(self):
        sp = SpectralPulse(0.0, 1e9, np.ones(64, complex))
        with pytest.raises(ValueError):
            to_time(sp, grid=(0.0, 1e-9))


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

class TestPropagate:
    def test_zero_weight_is_identity(self):
        med = MediumSpec(LENGTH, make_ideal_comb(9, DELTA, GAMMA, 0.0))
        grid = design_grid(med.comb, bandwidth=GHZ)
        pin = gaussian_spectrum(grid, GHZ)
        out = propagate(pin, med)
        assert np.allclose(out.samples, pin.samples)

    def test_beer_lambert_single_line(self):
        d0 = 1.3
        med = MediumSpec(LENGTH, FrequencyComb(
            (CombTooth(0.0, d0 * GAMMA / (2 * LENGTH)),), GAMMA))
        grid = design_grid(med.comb, bandwidth=3 * GAMMA)
        pin = gaussian_spectrum(grid, 2 * GAMMA)
        out = propagate(pin, med)
        w = pin.omegas()
        analytic = np.exp(-med.comb.teeth[0].weight * LENGTH
                          / (1j * w + GAMMA / 2))
        mask = np.abs(pin.samples) > 1e-6
        got = out.samples[mask] / pin.samples[mask]
        assert np.max(np.abs(got - analytic[mask])) < 1e-12
        centre = np.argmin(np.abs(w))
        assert np.abs(out.samples[centre] / pin.samples[centre]) ** 2 == \
            pytest.approx(np.exp(-2 * d0), rel=1e-12)

    def test_echo_appears_at_comb_period(self):
        med = ideal_medium(area=0.7)
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5,
                           span_factor=2.5)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        tout = to_time(propagate(pin, med))
        t_e = 2 * np.pi / DELTA
        peak = find_echo(tout, (0.5 * t_e, 1.5 * t_e))
        assert abs(peak - t_e) <= tout.dt

    def test_comb_outside_grid_raises(self):
        med = ideal_medium()
        pin = SpectralPulse(50 * DELTA, DELTA / 100, np.ones(256, complex))
        with pytest.raises(CoverageError):
            propagate(pin, med)

    def test_lines_near_edge_warn(self):
        comb = FrequencyComb((CombTooth(0.0, 1e8),), GAMMA)
        # line at w = 0 sits exactly at the upper grid edge
        pin = SpectralPulse(-255 * GAMMA, GAMMA, np.ones(256, complex))
        with pytest.warns(UserWarning):
            propagate(pin, MediumSpec(LENGTH, comb))

    def test_passivity(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            n_teeth = rng.integers(1, 7)
            weight = 10 ** rng.uniform(6, 11)
            med = MediumSpec(LENGTH, make_ideal_comb(int(n_teeth), DELTA,
                                                     GAMMA, weight))
            grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5)
            pin = gaussian_spectrum(grid, 2 * np.pi * rng.uniform(0.2, 1.0) * 1e9)
            out = propagate(pin, med)
            assert out.energy() <= pin.energy() * (1 + 1e-9)

    def test_linearity(self):
        med = ideal_medium(area=0.8)
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5)
        p1 = gaussian_spectrum(grid, 2 * np.pi * 0.4e9)
        p2 = gaussian_spectrum(grid, 2 * np.pi * 0.7e9, mean_offset=DELTA)
        a, b = 0.3 - 0.2j, 1.1 + 0.5j
        combo = SpectralPulse(p1.omega0, p1.domega,
                              a * p1.samples + b * p2.samples)
        lhs = propagate(combo, med).samples
        rhs = a * propagate(p1, med).samples + b * propagate(p2, med).samples
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)

    def test_grid_refinement_converged(self):
        # production grids (resolve_factor 1.5) agree with twice-refined ones
        med = ideal_medium(area=1.0)
        etas = []
        for rf in (1.5, 3.0):
            grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=rf,
                               span_factor=2.5)
            pin = gaussian_spectrum(grid, 2 * np.pi * 0.55e9)
            tout = to_time(propagate(pin, med))
            etas.append(echo_efficiency(tout, pin.energy(), DELTA))
        assert abs(etas[0] - etas[1]) < 1e-4


# ---------------------------------------------------------------------------
# echo metrics
# ---------------------------------------------------------------------------

class TestEchoMetrics:
    def test_zero_medium_no_echo_energy(self):
        med = MediumSpec(LENGTH, make_ideal_comb(9, DELTA, GAMMA, 0.0))
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.6e9)
        tout = to_time(propagate(pin, med))
        eta = echo_efficiency(tout, pin.energy(), DELTA)
        assert eta < 1e-6

    def test_efficiency_window(self):
        lo, hi = echo_window(DELTA)
        assert lo == pytest.approx(np.pi / DELTA)
        assert hi == pytest.approx(3 * np.pi / DELTA)

    def test_window_outside_grid_raises(self):
        tp = TemporalPulse(0.0, 1e-12, np.ones(64, complex))
        with pytest.raises(CoverageError):
            echo_efficiency(tp, 1.0, DELTA)

    def test_invalid_input_energy(self):
        tp = TemporalPulse(0.0, 1e-9, np.ones(64, complex))
        with pytest.raises(ValueError):
            echo_efficiency(tp, 0.0, DELTA)

    def test_find_echo_none_for_zero_medium(self):
        med = MediumSpec(LENGTH, make_ideal_comb(9, DELTA, GAMMA, 0.0))
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.6e9)
        tout = to_time(propagate(pin, med))
        t_e = 2 * np.pi / DELTA
        assert find_echo(tout, (0.7 * t_e, 1.3 * t_e)) is None

    def test_find_echo_empty_window_raises(self):
        tp = TemporalPulse(0.0, 1e-9, np.ones(64, complex))
        with pytest.raises(ValueError):
            find_echo(tp, (5e-9, 5e-9))

    def test_find_echo_matches_dense_scan_on_nonuniform_comb(self):
        # interleaved spacings delta and 2*delta
        teeth = tuple(CombTooth(d, 7e8) for d in
                      np.array([-3, -1, 0, 1, 3]) * DELTA)
        med = MediumSpec(LENGTH, FrequencyComb(teeth, GAMMA))
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        tout = to_time(propagate(pin, med))
        window = (0.5e-9, 4.5e-9)
        t = tout.times()
        mask = (t >= window[0]) & (t < window[1])
        brute = t[mask][np.argmax(np.abs(tout.samples[mask]) ** 2)]
        refined = find_echo(tout, window)
        assert abs(refined - brute) <= tout.dt

    def test_echo_train_periodicity(self):
        med = ideal_medium(area=0.7)
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5,
                           span_factor=2.5)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        tout = to_time(propagate(pin, med))
        t_e = 2 * np.pi / DELTA
        for k in (1, 2):
            peak = find_echo(tout, ((k - 0.5) * t_e, (k + 0.5) * t_e))
            assert abs(peak - k * t_e) <= tout.dt


class TestScalarFidelity:
    def _pulse_pair(self):
        grid = (-2 * np.pi * 5e9, 2 * np.pi * 10e9 / 8192, 8192)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.6e9)
        return pin, to_time(pin)

    def test_exact_delay_gives_unity(self):
        pin, tin = self._pulse_pair()
        t_e = 2 * np.pi / DELTA
        delayed = SpectralPulse(pin.omega0, pin.domega,
                                pin.samples * np.exp(-1j * pin.omegas() * t_e))
        tout = to_time(delayed, grid=(tin.t0, tin.dt))
        assert scalar_fidelity(tin, tout, DELTA) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_mode_gives_zero(self):
        pin, tin = self._pulse_pair()
        t_e = 2 * np.pi / DELTA
        # odd envelope: derivative of the Gaussian, delayed to the echo window
        odd = pin.samples * pin.omegas()
        sp = SpectralPulse(pin.omega0, pin.domega,
                           odd * np.exp(-1j * pin.omegas() * t_e))
        tout = to_time(sp, grid=(tin.t0, tin.dt))
        assert scalar_fidelity(tin, tout, DELTA) < 1e-12

    def test_zero_energy_raises(self):
        _, tin = self._pulse_pair()
        dead = TemporalPulse(tin.t0, tin.dt, np.zeros(tin.n, complex))
        with pytest.raises(UndefinedFidelityError):
            scalar_fidelity(tin, dead, DELTA)

    def test_global_phase_invariance(self):
        pin, tin = self._pulse_pair()
        med = ideal_medium(area=1.0)
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5,
                           span_factor=2.5)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        tin = to_time(pin)
        tout = to_time(propagate(pin, med))
        f0 = scalar_fidelity(tin, tout, DELTA)
        rotated = TemporalPulse(tin.t0, tin.dt,
                                tin.samples * np.exp(1j * 0.731))
        assert scalar_fidelity(rotated, tout, DELTA) == pytest.approx(f0, abs=1e-12)


# ---------------------------------------------------------------------------
# time-domain oracle
# ---------------------------------------------------------------------------

def _windowed_rel_error(a: TemporalPulse, b: TemporalPulse, lo, hi):
    t = a.times()
    m = (t >= lo) & (t < hi)
    return (np.linalg.norm(a.samples[m] - b.samples[m])
            / np.linalg.norm(b.samples[m]))


class TestTimeDomainOracle:
    def test_zero_weight_identity(self):
        med = MediumSpec(LENGTH, make_ideal_comb(3, DELTA, GAMMA, 0.0))
        grid = design_grid(med.comb, bandwidth=GHZ, resolve_factor=1.5,
                           span_factor=2.5)
        tin = to_time(gaussian_spectrum(grid, 2 * np.pi * 0.4e9))
        out = time_domain_oracle(med, tin, nz=8)
        assert np.allclose(out.samples, tin.samples)

    def test_three_tooth_agreement(self):
        med = ideal_medium(n_teeth=3, area=0.5)
        # wide span: the integrator needs ~15 samples across the pulse
        grid = design_grid(med.comb, bandwidth=2 * np.pi * 0.5e9,
                           resolve_factor=1.5, span_factor=40)
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.4e9)
        tin = to_time(pin)
        ref = to_time(propagate(pin, med))
        got = time_domain_oracle(med, tin, nz=420)
        # compare over the transmitted pulse and the first three echoes;
        # beyond that the periodic spectral grid wraps the slow echo tail
        # while the causal integration truncates it
        assert _windowed_rel_error(got, ref, -2e-9, 8.5e-9) < 1e-3

    def test_single_tooth_beer_lambert_decay(self):
        d0 = 0.8
        med = MediumSpec(LENGTH, FrequencyComb(
            (CombTooth(0.0, d0 * GAMMA / (2 * LENGTH)),), GAMMA))
        grid = design_grid(med.comb, bandwidth=3 * GAMMA, span_factor=8)
        pin = gaussian_spectrum(grid, 2 * GAMMA)
        got = time_domain_oracle(med, to_time(pin), nz=64)
        spec = to_freq(got, grid=(pin.omega0, pin.domega))
        centre = np.argmin(np.abs(pin.omegas()))
        decay = np.abs(spec.samples[centre] / pin.samples[centre]) ** 2
        assert decay == pytest.approx(np.exp(-2 * d0), rel=1e-4)

    def test_instability_detected(self):
        med = ideal_medium(n_teeth=3, area=1.0)   # peak depth 320
        grid = design_grid(med.comb, bandwidth=2 * np.pi * 0.5e9,
                           resolve_factor=1.5, span_factor=2.5)
        tin = to_time(gaussian_spectrum(grid, 2 * np.pi * 0.4e9))
        with pytest.raises(NumericalInstabilityError):
            time_domain_oracle(med, tin, nz=16)


# ---------------------------------------------------------------------------
# grid design
# ---------------------------------------------------------------------------

class TestDesignGrid:
    def test_policy_resolves_teeth_and_covers_band(self):
        comb = make_ideal_comb(9, DELTA, GAMMA, 1e9)
        omega0, domega, n = design_grid(comb, bandwidth=GHZ)
        assert domega <= GAMMA / 6
        span = n * domega
        lines = -comb.detunings
        assert omega0 < lines.min() and omega0 + span > lines.max()
        assert span >= 4 * (lines.max() - lines.min())
        assert span >= (lines.max() - lines.min()) + 8 * GHZ
        # time span comfortably exceeds two echo periods
        assert 2 * np.pi / domega > 3.5 * (2 * np.pi / DELTA)

    def test_conjugate_time_grid_centres(self):
        sp = SpectralPulse(-1e9, 1e6, np.ones(1024, complex))
        t0, dt = conjugate_time_grid(sp)
        assert t0 == pytest.approx(-512 * dt)
        assert dt * 1e6 * 1024 == pytest.approx(2 * np.pi)
