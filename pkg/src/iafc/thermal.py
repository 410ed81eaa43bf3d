"""Temperature effects: velocity-dependent line shifts and comb broadening.

A moving atom sees each comb line displaced by the full beam-geometry
Doppler shift (longitudinal, radial and azimuthal parts for a twisted
beam).  Averaging the medium response over a Maxwell-Boltzmann velocity
distribution, with the Gaussian of each velocity component approximated
by a Lorentzian of width a = fit_const * sqrt(kB T / m), widens every
tooth: gamma/2 -> gamma/2 + a * f(x, y, z), where f collects the local
beam-geometry factors and is dominated by the constant wavenumber k.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann as K_B

from .spectral import (
    FrequencyComb,
    MediumSpec,
    MemoryReport,
    SpectralPulse,
    TemporalPulse,
    _shift_to_grid,
    conjugate_time_grid,
    find_echo,
    to_time,
)
from .transverse import LGModeSpec, TransverseField

__all__ = [
    "ThermalSpec", "DopplerField", "doppler_shift", "f_field",
    "thermal_transfer", "thermal_medium_transfer", "thermal_storage_run",
    "voigt_transfer", "velocity_class_transfer",
]

F_TERMS = ("transverse_linear", "azimuthal", "gouy", "curvature", "plane")


@dataclass(frozen=True)
class ThermalSpec:
    """Vapour temperature, atomic mass and the Lorentzian-fit constant.

    ``fit_const`` rescales sqrt(kB T / m) into the half-width of the
    Lorentzian that stands in for the per-component Maxwell-Boltzmann
    velocity distribution; it is a fitted number close to 0.76, kept
    configurable.
    """

    temperature: float
    mass: float
    fit_const: float = 0.76

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (self.mass > 0):
            raise ValueError("mass must be > 0")
        if not (self.fit_const > 0):
            raise ValueError("fit_const must be > 0")

    def lorentzian_width(self) -> float:
        """a = fit_const * sqrt(kB T / m), in m/s."""
        return self.fit_const * np.sqrt(K_B * self.temperature / self.mass)

    def velocity_sigma(self) -> float:
        """RMS of one Maxwell-Boltzmann velocity component, m/s."""
        return np.sqrt(K_B * self.temperature / self.mass)


@dataclass(frozen=True)
class DopplerField:
    """Grid of the broadening factor f(x, y, z) in 1/m at one z plane."""

    values: np.ndarray
    z: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("f field must be finite everywhere")
        object.__setattr__(self, "values", values)


def doppler_shift(spec: LGModeSpec, r: float, phi: float, z: float,
                  v: tuple[float, float, float]) -> float:
    """Frequency shift seen by an atom at (r, phi, z) moving with v.

    ``v`` is (v_r, v_phi, v_z).  The longitudinal part carries the plane
    -wave -k v_z plus wavefront-curvature and beam-divergence corrections;
    the azimuthal part is the orbital term -v_phi * ell / r.
    """
    v_r, v_phi, v_z = v
    if r <= 0.0:
        raise ValueError("r must be > 0 (azimuthal term diverges on axis)")
    k = spec.k
    z_r = spec.rayleigh_range
    z2 = z ** 2 + z_r ** 2
    longitudinal = v_z * (-k
                          + k * r ** 2 * (z ** 2 - z_r ** 2) / (2.0 * z2 ** 2)
                          - (abs(spec.ell) + 1) * z_r / z2)
    radial = 0.0
    if z != 0.0:
        z_bar = z2 / z
        radial = -v_r * k * r / z_bar
    azimuthal = -v_phi * spec.ell / r
    return float(longitudinal + radial + azimuthal)


def f_field(spec: LGModeSpec, grid: TransverseField, z: float,
            include_terms=F_TERMS) -> DopplerField:
    """Broadening factor f(x, y, z) on the grid of ``grid``.

    f = k (x + y) / z_bar + ell (x - y) / (x^2 + y^2)
        - (2p + |ell| + 1) z_R / (z^2 + z_R^2)
        - k (x^2 + y^2) (z^2 - z_R^2) / (2 z_bar^2 z^2) + k

    with z_bar = (z^2 + z_R^2) / z.  The axis cell of the orbital term is
    regularised with r^2 -> max(r^2, (dx/2)^2); the mode intensity
    vanishes there for ell != 0, so the cell carries negligible weight.
    Requires z > 0 (two terms are singular at the waist plane; evaluate
    at the cell midplane).
    """
    if z <= 0.0:
        raise ValueError("f is evaluated strictly inside the cell (z > 0)")
    unknown = set(include_terms) - set(F_TERMS)
    if unknown:
        raise ValueError(f"unknown f terms: {sorted(unknown)}")
    k = spec.k
    z_r = spec.rayleigh_range
    z_bar = (z ** 2 + z_r ** 2) / z
    x = grid.xs()[None, :]
    y = grid.ys()[:, None]
    r2 = x ** 2 + y ** 2
    r2_safe = np.maximum(r2, (0.5 * grid.dx) ** 2)

    out = np.zeros((grid.ny, grid.nx))
    if "transverse_linear" in include_terms:
        out += k * (x + y) / z_bar
    if "azimuthal" in include_terms:
        out += spec.ell * (x - y) / r2_safe
    if "gouy" in include_terms:
        out -= (2 * spec.p + abs(spec.ell) + 1) * z_r / (z ** 2 + z_r ** 2)
    if "curvature" in include_terms:
        out -= k * r2 * (z ** 2 - z_r ** 2) / (2.0 * z_bar ** 2 * z ** 2)
    if "plane" in include_terms:
        out += k
    return DopplerField(out, z)


def _broadened_comb(comb: FrequencyComb, extra_half_width: float) -> FrequencyComb:
    if extra_half_width < 0 and 0.5 * comb.gamma + extra_half_width <= 0:
        raise ValueError("broadening would drive the linewidth negative")
    return FrequencyComb(comb.teeth, comb.gamma + 2.0 * extra_half_width,
                         comb.carrier)


def thermal_transfer(comb: FrequencyComb, spec: ThermalSpec, f_val: float,
                     omega):
    """Comb transfer function with each half-width gamma/2 -> gamma/2 + a f.

    Reduces exactly to the cold transfer function at T = 0.  Where a*f
    would drive the total half-width non-positive (possible off axis for
    negative f contributions) the width is clamped just above zero with
    a warning.
    """
    from .spectral import transfer_function

    a_f = spec.lorentzian_width() * f_val
    half = 0.5 * comb.gamma + a_f
    if half <= 0.0:
        warnings.warn("gamma/2 + a f <= 0; clamping to a tiny positive width",
                      stacklevel=2)
        half = 1e-6 * comb.gamma
    return transfer_function(
        FrequencyComb(comb.teeth, 2.0 * half, comb.carrier), omega)


def thermal_medium_transfer(medium: MediumSpec, spec: ThermalSpec,
                            f_val: float, omega) -> np.ndarray:
    return thermal_transfer(medium.comb, spec, f_val, omega) * medium.length


# ---------------------------------------------------------------------------
# velocity-average oracles
# ---------------------------------------------------------------------------

def voigt_transfer(comb: FrequencyComb, sigma_v: float, k: float, omega):
    """Exact Gaussian velocity average of the comb response (Faddeeva).

    Each tooth becomes a Voigt profile: the Lorentzian of half-width
    gamma/2 convolved with the Gaussian Doppler kernel of width
    k * sigma_v.  Reference for the Lorentzian approximation.
    """
    from scipy.special import wofz

    omega = np.asarray(omega, dtype=float)
    if sigma_v <= 0.0:
        from .spectral import transfer_function
        return transfer_function(comb, omega)
    s = k * sigma_v
    out = np.zeros(omega.shape, dtype=complex)
    for tooth in comb.teeth:
        zz = (-(tooth.detuning + omega) + 0.5j * comb.gamma) / (np.sqrt(2.0) * s)
        out += tooth.weight * np.sqrt(np.pi / 2.0) / s * wofz(zz)
    return out if out.ndim else complex(out)


def velocity_class_transfer(comb: FrequencyComb, sigma_v: float, k: float,
                            omega, n_classes: int = 201,
                            n_sigma: float = 5.0):
    """Direct sum over discrete longitudinal velocity classes.

    Small-grid numerical average of the per-class response weighted by
    the Maxwell-Boltzmann distribution; independent check of both the
    Faddeeva evaluation and the Lorentzian substitute.
    """
    from .spectral import transfer_function

    omega = np.asarray(omega, dtype=float)
    if sigma_v <= 0.0:
        return transfer_function(comb, omega)
    v = np.linspace(-n_sigma * sigma_v, n_sigma * sigma_v, n_classes)
    weights = np.exp(-v ** 2 / (2.0 * sigma_v ** 2))
    weights /= weights.sum()
    out = np.zeros(omega.shape, dtype=complex)
    for vi, wi in zip(v, weights):
        # class detuning shift: each line moves by -k v
        shifted = FrequencyComb(
            tuple(type(t)(t.detuning - k * vi, t.weight) for t in comb.teeth),
            comb.gamma, comb.carrier)
        out += wi * transfer_function(shifted, omega)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# full thermal storage run
# ---------------------------------------------------------------------------

def thermal_storage_run(medium: MediumSpec, spec: ThermalSpec,
                        lg: LGModeSpec, pulse: SpectralPulse,
                        n: int = 128, extent: float | None = None,
                        z_plane: float | None = None, n_bins: int = 24,
                        include_terms=F_TERMS,
                        weight_scale: float = 1.0) -> MemoryReport:
    """Storage of one LG mode through the warm comb medium.

    Every transverse point propagates through a comb whose teeth carry
    the local extra width a * f(x, y, z = L/2).  Points are grouped into
    ``n_bins`` equal-f bins (f varies by parts in 1e4 across the beam,
    so the grouping is essentially exact) and the echo metrics are
    accumulated with the local mode intensity as weight.
    """
    from . import transverse as tv

    mode = tv.lg_mode(lg, 0.0, n=n, extent=extent)
    z_mid = 0.5 * medium.length if z_plane is None else z_plane
    f_vals = f_field(lg, mode, z_mid, include_terms=include_terms).values
    weights_map = np.abs(mode.samples) ** 2 * mode.dx * mode.dy

    edges = np.quantile(f_vals.ravel(), np.linspace(0.0, 1.0, n_bins + 1))
    edges[-1] += 1.0
    idx = np.clip(np.searchsorted(edges, f_vals.ravel(), side="right") - 1,
                  0, n_bins - 1)
    bin_weight = np.bincount(idx, weights=weights_map.ravel(), minlength=n_bins)
    sums = np.bincount(idx, weights=(weights_map * f_vals).ravel(),
                       minlength=n_bins)

    comb = medium.comb.scaled(weight_scale)
    t0, dt = conjugate_time_grid(pulse)
    jj = np.arange(pulse.n)
    ramp = np.exp(1j * jj * pulse.domega * t0)
    carrier = np.exp(1j * pulse.omega0 * (t0 + dt * jj))
    tin = to_time(pulse)
    e_in = pulse.energy()

    trace = np.zeros(pulse.n)
    fields = []
    active = []
    for b in range(n_bins):
        if bin_weight[b] <= 0.0:
            continue
        f_bin = sums[b] / bin_weight[b]
        exponent = -thermal_transfer(comb, spec, f_bin, pulse.omegas()) \
            * medium.length
        out = pulse.samples * np.exp(exponent)
        field = np.fft.ifft(out * ramp) / dt * carrier
        trace += bin_weight[b] * np.abs(field) ** 2
        fields.append(field)
        active.append(bin_weight[b])

    total = TemporalPulse(t0, dt, np.sqrt(trace))
    t_nominal = 2.0 * np.pi / comb.median_spacing()
    t_echo = find_echo(total, (0.45 * t_nominal, 1.55 * t_nominal))
    params = dict(temperature=spec.temperature, ell=lg.ell,
                  weight_scale=weight_scale)
    if t_echo is None:
        return MemoryReport(0.0, 0.0, 0.0, params)
    d_eff = 2.0 * np.pi / t_echo
    lo, hi = np.pi / d_eff, 3.0 * np.pi / d_eff
    times = t0 + dt * jj
    mask = (times >= lo) & (times < hi)
    ref = _shift_to_grid(tin, t_echo, tin)

    overlap = 0.0 + 0.0j
    e_win = 0.0
    for wgt, field in zip(active, fields):
        overlap += wgt * np.sum(np.conj(ref.samples[mask]) * field[mask]) * dt
        e_win += wgt * float(np.sum(np.abs(field[mask]) ** 2) * dt)
    eta = e_win / e_in
    fid = float(np.abs(overlap) ** 2 / (e_in * e_win)) if e_win > 0 else 0.0
    return MemoryReport(t_echo, eta, min(fid, 1.0), params)
