"""Tests for LG modes, paraxial kernels and the split-step solver."""

import numpy as np
import pytest

from iafc.errors import ConvergenceError, ResolutionError, StepSizeError
from iafc.spectral import (
    MediumSpec,
    conjugate_time_grid,
    design_grid,
    gaussian_spectrum,
    make_ideal_comb,
    transfer_function,
)
from iafc.storage import reference_weight
from iafc.transverse import (
    DensityProfile,
    LGModeSpec,
    TransverseField,
    azimuthal_spectrum,
    free_kernel_step,
    lg_mode,
    make_vector_vortex,
    propagate_homogeneous,
    propagate_inhomogeneous,
    propagate_inhomogeneous_converged,
    transverse_overlap,
)

W0 = 1e-3
LAMBDA = 387.7e-9
DELTA = 2 * np.pi * 400e6
GAMMA = 5e6
LENGTH = 1e-3


def ideal_medium(area=1.0):
    comb = make_ideal_comb(9, DELTA, GAMMA, 1.0)
    return MediumSpec(LENGTH, comb.scaled(area * reference_weight(comb, LENGTH)))


def small_grid(bandwidth=2 * np.pi * 0.6e9, time_span=58.75e-9):
    comb = ideal_medium().comb
    return design_grid(comb, bandwidth=bandwidth, resolve_factor=1.5,
                       span_factor=2.5, time_span=time_span)


class TestLGMode:
    def test_fundamental_is_plain_gaussian(self):
        spec = LGModeSpec(ell=0, w0=W0, wavelength=LAMBDA)
        f = lg_mode(spec, 0.0, n=128)
        r2 = f.xs()[None, :] ** 2 + f.ys()[:, None] ** 2
        expected = np.exp(-r2 / W0 ** 2)
        expected /= np.sqrt(np.sum(expected ** 2) * f.dx * f.dy)
        assert np.max(np.abs(f.samples - expected)) < 1e-9
        assert np.max(np.abs(np.angle(f.samples[np.abs(f.samples) > 1e-6]))) < 1e-12

    def test_phase_is_azimuthal_angle_for_ell_one(self):
        f = lg_mode(LGModeSpec(ell=1, w0=W0, wavelength=LAMBDA), 0.0, n=128)
        phi = np.arctan2(f.ys()[:, None], f.xs()[None, :])
        mask = np.abs(f.samples) > 1e-4 * np.abs(f.samples).max()
        err = np.angle(f.samples[mask] * np.exp(-1j * phi[mask]))
        assert np.max(np.abs(err)) < 1e-10

    def test_grid_normalisation(self):
        for ell in (0, 3, 10):
            f = lg_mode(LGModeSpec(ell=ell, w0=W0), 0.0, n=256)
            assert f.energy() == pytest.approx(1.0, abs=1e-9)

    def test_orthogonality_of_opposite_charges(self):
        a = lg_mode(LGModeSpec(ell=1, w0=W0), 0.0, n=192)
        b = lg_mode(LGModeSpec(ell=-1, w0=W0), 0.0, n=192)
        assert abs(transverse_overlap(a, b)) < 1e-8

    def test_radial_index_orthogonality(self):
        a = lg_mode(LGModeSpec(ell=2, p=0, w0=W0), 0.0, n=192)
        b = lg_mode(LGModeSpec(ell=2, p=1, w0=W0), 0.0, n=192)
        assert abs(transverse_overlap(a, b)) < 1e-8

    def test_under_resolved_grid_rejected(self):
        with pytest.raises(ResolutionError):
            lg_mode(LGModeSpec(ell=0, w0=W0), 0.0, n=32)

    def test_insufficient_extent_rejected(self):
        with pytest.raises(ResolutionError):
            lg_mode(LGModeSpec(ell=0, w0=W0), 0.0, n=256, extent=4 * W0)


class TestFreeKernel:
    def test_zero_step_is_identity(self):
        f = lg_mode(LGModeSpec(ell=1, w0=W0), 0.0, n=128)
        g = free_kernel_step(f, 0.0)
        assert g is f

    def test_energy_conserved(self):
        spec = LGModeSpec(ell=2, w0=W0, wavelength=LAMBDA)
        f = lg_mode(spec, 0.0, n=128)
        g = free_kernel_step(f, 0.05 * spec.rayleigh_range)
        assert abs(g.energy() - f.energy()) < 1e-9

    def test_lg_modes_are_eigenmodes(self):
        spec = LGModeSpec(ell=2, w0=W0, wavelength=LAMBDA)
        f = lg_mode(spec, 0.0, n=256)
        z = 0.1 * spec.rayleigh_range
        g = free_kernel_step(f, z)
        analytic = lg_mode(spec, z, n=256)
        assert abs(transverse_overlap(g, analytic)) >= 0.999

    def test_under_sampled_kernel_rejected(self):
        spec = LGModeSpec(ell=0, w0=W0, wavelength=LAMBDA)
        f = lg_mode(spec, 0.0, n=128)
        with pytest.raises(StepSizeError):
            free_kernel_step(f, 500.0 * spec.rayleigh_range)


class TestPropagateHomogeneous:
    def test_transverse_profile_preserved_and_gouy_negligible(self):
        med = ideal_medium()
        spec = LGModeSpec(ell=10, w0=1.2e-3, wavelength=LAMBDA)
        f = lg_mode(spec, 0.0, n=192)
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        trans, _ = propagate_homogeneous(f, pin, med)
        overlap = transverse_overlap(f, trans)
        assert abs(overlap) > 0.999999
        # accumulated Gouy phase over the cell: (|l|+1) atan(L/z_R),
        # computed by the solver rather than assumed away
        gouy = (abs(spec.ell) + 1) * np.arctan(med.length / spec.rayleigh_range)
        assert gouy < 1e-3
        # in the mode-averaged overlap the wavefront-curvature phase
        # k <r^2> / 2 z_bar cancels exactly half of the Gouy phase
        assert abs(np.angle(overlap)) == pytest.approx(0.5 * gouy, rel=1e-2)

    def test_temporal_factor_matches_scalar_path(self):
        from iafc.spectral import propagate, to_time
        med = ideal_medium()
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        f = lg_mode(LGModeSpec(ell=1, w0=W0), 0.0, n=128)
        _, temp = propagate_homogeneous(f, pin, med)
        ref = to_time(propagate(pin, med))
        assert np.allclose(temp.samples, ref.samples)


class TestPropagateInhomogeneous:
    def test_separability_for_uniform_density(self):
        med = ideal_medium()
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        f = lg_mode(LGModeSpec(ell=1, w0=W0), 0.0, n=64, extent=8 * W0)
        out = propagate_inhomogeneous(f, pin, med,
                                      DensityProfile("homogeneous"), nz=2)
        trans, temp = propagate_homogeneous(f, pin, med)
        ref = trans.samples[:, :, None] * temp.samples[None, None, :]
        rel = (np.linalg.norm((out.samples - ref).ravel())
               / np.linalg.norm(ref.ravel()))
        assert rel < 1e-6

    def test_wide_density_recovers_homogeneous(self):
        med = ideal_medium()
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        f = lg_mode(LGModeSpec(ell=1, w0=W0), 0.0, n=64, extent=8 * W0)
        wide = DensityProfile("gaussian", 1.0, w0_prime=50 * W0)
        out = propagate_inhomogeneous(f, pin, med, wide, nz=2)
        trans, temp = propagate_homogeneous(f, pin, med)
        ref = trans.samples[:, :, None] * temp.samples[None, None, :]
        rel = (np.linalg.norm((out.samples - ref).ravel())
               / np.linalg.norm(ref.ravel()))
        assert rel < 1e-3

    def test_thin_slab_matches_born_expansion(self):
        med = ideal_medium()
        shallow = MediumSpec(1e-5, med.comb.scaled(1e-3))
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        f = lg_mode(LGModeSpec(ell=1, w0=W0), 0.0, n=64, extent=8 * W0)
        dens = DensityProfile("gaussian", 1.0, w0_prime=0.71 * W0)
        out = propagate_inhomogeneous(f, pin, shallow, dens, nz=1,
                                      include_diffraction=False)
        nvals = dens.values(f)
        dv = transfer_function(shallow.comb, pin.omegas())
        spec3 = (f.samples[:, :, None] * pin.samples[None, None, :]
                 * (1.0 - shallow.length * nvals[:, :, None] * dv[None, None, :]))
        t0, dt = conjugate_time_grid(pin)
        j = np.arange(pin.n)
        ref = np.fft.ifft(spec3 * np.exp(1j * j * pin.domega * t0), axis=2) / dt
        ref *= np.exp(1j * pin.omega0 * (t0 + dt * j))[None, None, :]
        rel = (np.linalg.norm((out.samples - ref).ravel())
               / np.linalg.norm(ref.ravel()))
        assert rel < 1e-4

    def test_strang_splitting_second_order(self):
        # strongly diffractive configuration so the splitting error is
        # visible: waist 20 um gives z_R comparable to the cell length
        w0 = 2e-5
        med = ideal_medium()
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        f = lg_mode(LGModeSpec(ell=1, w0=w0, wavelength=LAMBDA), 0.0,
                    n=64, extent=8 * w0)
        dens = DensityProfile("gaussian", 1.0, w0_prime=0.71 * w0)
        ref = propagate_inhomogeneous(f, pin, med, dens, nz=64)
        errs = []
        for nz in (2, 4, 8):
            got = propagate_inhomogeneous(f, pin, med, dens, nz=nz)
            errs.append(np.linalg.norm((got.samples - ref.samples).ravel())
                        / np.linalg.norm(ref.samples.ravel()))
        assert 3.0 < errs[0] / errs[1] < 5.0
        assert 3.0 < errs[1] / errs[2] < 5.0

    def test_converged_wrapper(self):
        med = ideal_medium()
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        f = lg_mode(LGModeSpec(ell=1, w0=W0), 0.0, n=64, extent=8 * W0)
        dens = DensityProfile("gaussian", 1.0, w0_prime=0.71 * W0)
        out, nz = propagate_inhomogeneous_converged(f, pin, med, dens,
                                                    nz0=2, tol=1e-3)
        assert nz >= 4
        with pytest.raises(ConvergenceError):
            propagate_inhomogeneous_converged(f, pin, med, dens, nz0=1,
                                              tol=1e-14, max_doublings=2)

    def test_oam_conserved_through_uniform_medium(self):
        med = ideal_medium()
        grid = small_grid()
        pin = gaussian_spectrum(grid, 2 * np.pi * 0.5e9)
        f = lg_mode(LGModeSpec(ell=3, w0=W0), 0.0, n=128)
        out = propagate_inhomogeneous(f, pin, med,
                                      DensityProfile("homogeneous"), nz=2)
        # collapse time: total output transverse profile at the echo peak
        trace = out.intensity_trace()
        peak = np.argmax(np.abs(trace.samples[trace.n // 2:])) + trace.n // 2
        snap = TransverseField(out.dx, out.dy, out.samples[:, :, peak],
                               wavelength=LAMBDA)
        ells, power = azimuthal_spectrum(snap)
        assert power[ells == 3] >= 0.999


class TestVectorVortex:
    def test_pure_component(self):
        v = make_vector_vortex(1.0, 0.0, ell=1,
                               spec=LGModeSpec(ell=1, w0=W0), n=128)
        assert v.minus.energy() == pytest.approx(0.0, abs=1e-12)
        assert v.plus.energy() == pytest.approx(1.0, abs=1e-9)

    def test_unnormalised_coefficients_rejected(self):
        with pytest.raises(ValueError):
            make_vector_vortex(1.0, 0.5, ell=1, n=128)

    def test_balanced_state_polarization_texture(self):
        # alpha = beta: the local linear-polarization direction rotates
        # as ell * phi around the beam axis (Stokes-parameter check)
        ell = 2
        v = make_vector_vortex(1 / np.sqrt(2), 1 / np.sqrt(2), ell=ell,
                               spec=LGModeSpec(ell=ell, w0=W0), n=128)
        ep, em = v.plus.samples, v.minus.samples
        # linear basis: Ex = (E+ + E-)/sqrt2, Ey = -i (E+ - E-)/sqrt2
        ex = (ep + em) / np.sqrt(2)
        ey = -1j * (ep - em) / np.sqrt(2)
        s1 = np.abs(ex) ** 2 - np.abs(ey) ** 2
        s2 = 2 * np.real(np.conj(ex) * ey)
        orientation = 0.5 * np.arctan2(s2, s1)
        phi = np.arctan2(v.plus.ys()[:, None], v.plus.xs()[None, :])
        mask = np.abs(ep) > 0.05 * np.abs(ep).max()
        # orientation = ell * phi modulo pi
        err = (orientation[mask] - ell * phi[mask] + np.pi / 2) % np.pi - np.pi / 2
        assert np.max(np.abs(err)) < 1e-8


class TestAzimuthalSpectrum:
    def test_superposition_weights(self):
        specs = [LGModeSpec(ell=1, w0=W0), LGModeSpec(ell=-5, w0=W0),
                 LGModeSpec(ell=10, w0=W0)]
        fields = [lg_mode(s, 0.0, n=256) for s in specs]
        mix = TransverseField(fields[0].dx, fields[0].dy,
                              sum(f.samples for f in fields) / np.sqrt(3),
                              wavelength=LAMBDA)
        ells, power = azimuthal_spectrum(mix)
        for ell in (1, -5, 10):
            assert power[ells == ell] == pytest.approx(1 / 3, abs=0.01)
        assert power[np.isin(ells, (1, -5, 10))].sum() > 0.999
