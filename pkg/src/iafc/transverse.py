"""Transverse beam optics: LG modes, paraxial kernels, split-step solver.

Paraxial envelope over grids (y, x); the carrier wavenumber k = 2 pi /
wavelength is fixed for all spectral components (the pulse bandwidth is
many orders of magnitude below the optical carrier).  Free propagation
multiplies the transverse spectrum by exp(-i q^2 dz / 2k); an absorbing
comb medium adds exp(-n(r) D(w) dz) pointwise in space, and the two are
interleaved with Strang splitting when the density varies across the
beam.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, ResolutionError, StepSizeError
from .spectral import (
    MediumSpec,
    SpectralPulse,
    TemporalPulse,
    conjugate_time_grid,
    propagate,
    to_time,
    transfer_function,
)

__all__ = [
    "LGModeSpec", "TransverseField", "VectorTransverseField", "DensityProfile",
    "SpaceTimeField", "lg_mode", "free_kernel_step", "propagate_homogeneous",
    "propagate_inhomogeneous", "propagate_inhomogeneous_converged",
    "make_vector_vortex", "transverse_overlap", "azimuthal_spectrum",
]


@dataclass(frozen=True)
class LGModeSpec:
    """Azimuthal index, radial index, waist and carrier wavelength."""

    ell: int
    p: int = 0
    w0: float = 1e-3
    wavelength: float = 387.7e-9

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("radial index p must be >= 0")
        if not (self.w0 > 0 and self.wavelength > 0):
            raise ValueError("waist and wavelength must be > 0")

    @property
    def k(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def rayleigh_range(self) -> float:
        return np.pi * self.w0 ** 2 / self.wavelength

    def beam_radius(self, z: float) -> float:
        return self.w0 * np.sqrt(1.0 + (z / self.rayleigh_range) ** 2)

    def gouy_phase(self, z: float) -> float:
        return (2 * self.p + abs(self.ell) + 1) * np.arctan(z / self.rayleigh_range)


@dataclass(frozen=True)
class TransverseField:
    """Complex field on a centred uniform (y, x) grid at position z."""

    dx: float
    dy: float
    samples: np.ndarray
    z: float = 0.0
    wavelength: float = 387.7e-9

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 2:
            raise ValueError("need a 2-D sample array")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacings must be > 0")
        object.__setattr__(self, "samples", samples)

    @property
    def ny(self) -> int:
        return self.samples.shape[0]

    @property
    def nx(self) -> int:
        return self.samples.shape[1]

    def xs(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    def ys(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dx * self.dy)

    @property
    def k(self) -> float:
        return 2.0 * np.pi / self.wavelength


@dataclass(frozen=True)
class VectorTransverseField:
    """Right/left circular transverse components on a shared grid."""

    plus: TransverseField
    minus: TransverseField

    def __post_init__(self):
        if self.plus.samples.shape != self.minus.samples.shape:
            raise ValueError("components must share one grid")


@dataclass(frozen=True)
class DensityProfile:
    """Relative atom density across the beam; scales the comb weights."""

    kind: str = "homogeneous"
    n0: float = 1.0
    w0_prime: float | None = None

    def __post_init__(self):
        if self.kind not in ("homogeneous", "gaussian"):
            raise ValueError(f"unknown density kind '{self.kind}'")
        if self.n0 < 0:
            raise ValueError("n0 must be >= 0")
        if self.kind == "gaussian" and not (self.w0_prime and self.w0_prime > 0):
            raise ValueError("gaussian profile needs w0_prime > 0")

    def values(self, field: TransverseField) -> np.ndarray:
        if self.kind == "homogeneous":
            return np.full((field.ny, field.nx), self.n0)
        x = field.xs()[None, :]
        y = field.ys()[:, None]
        return self.n0 * np.exp(-(x ** 2 + y ** 2) / (2.0 * self.w0_prime ** 2))


@dataclass(frozen=True)
class SpaceTimeField:
    """Time-resolved transverse field samples[y, x, t] at one z plane."""

    dx: float
    dy: float
    t0: float
    dt: float
    samples: np.ndarray
    z: float

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dx * self.dy * self.dt)

    def intensity_trace(self) -> TemporalPulse:
        """Transverse-integrated |E|^2 packed as sqrt for echo search."""
        trace = np.sum(np.abs(self.samples) ** 2, axis=(0, 1)) * self.dx * self.dy
        return TemporalPulse(self.t0, self.dt, np.sqrt(trace))

    def window_energy(self, lo: float, hi: float) -> float:
        t = self.t0 + self.dt * np.arange(self.samples.shape[2])
        mask = (t >= lo) & (t < hi)
        return float(np.sum(np.abs(self.samples[:, :, mask]) ** 2)
                     * self.dx * self.dy * self.dt)


# ---------------------------------------------------------------------------
# LG modes
# ---------------------------------------------------------------------------

def lg_mode(spec: LGModeSpec, z: float, n: int = 256,
            extent: float | None = None) -> TransverseField:
    """Sample a Laguerre-Gauss mode on an n x n grid, unit L2 norm.

    ``extent`` defaults to 12 waists.  The grid must put at least eight
    samples across the local beam radius and extend to six radii, else
    the mode is unresolved and a ResolutionError is raised.
    """
    from scipy.special import eval_genlaguerre, gammaln

    if extent is None:
        extent = 12.0 * spec.w0
    dx = extent / n
    w_z = spec.beam_radius(z)
    if dx > w_z / 8.0:
        raise ResolutionError(
            f"grid spacing {dx:.3g} m exceeds w(z)/8 = {w_z / 8:.3g} m")
    if extent < 6.0 * w_z:
        raise ResolutionError(
            f"grid extent {extent:.3g} m is below 6 w(z) = {6 * w_z:.3g} m")

    x = (np.arange(n) - n // 2) * dx
    xx, yy = np.meshgrid(x, x)
    r2 = xx ** 2 + yy ** 2
    phi = np.arctan2(yy, xx)
    ell, p = spec.ell, spec.p

    # sqrt(2 p! / (pi (p+|l|)!)) via log-gamma to stay finite at large |l|
    log_c = 0.5 * (np.log(2.0 / np.pi) + gammaln(p + 1) - gammaln(p + abs(ell) + 1))
    amp = (np.exp(log_c) / w_z
           * (np.sqrt(2.0 * r2) / w_z) ** abs(ell)
           * eval_genlaguerre(p, abs(ell), 2.0 * r2 / w_z ** 2)
           * np.exp(-r2 / w_z ** 2))
    phase = ell * phi - spec.gouy_phase(z)
    if z != 0.0:
        z_bar = (z ** 2 + spec.rayleigh_range ** 2) / z
        phase = phase + spec.k * r2 / (2.0 * z_bar)
    u = amp * np.exp(1j * phase)

    norm = np.sqrt(np.sum(np.abs(u) ** 2) * dx * dx)
    if not (0.98 < norm < 1.02):
        raise ResolutionError(
            f"grid quadrature norm {norm:.4f} deviates from 1; "
            "the mode leaks off the grid")
    return TransverseField(dx, dx, u / norm, z=z, wavelength=spec.wavelength)


def make_vector_vortex(alpha: complex, beta: complex, ell: int,
                       spec: LGModeSpec | None = None, n: int = 256,
                       extent: float | None = None) -> VectorTransverseField:
    """alpha |l>|R> + beta |-l>|L> as a two-component transverse field."""
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise ValueError("|alpha|^2 + |beta|^2 must be 1")
    base = spec or LGModeSpec(ell=ell)
    plus = lg_mode(replace(base, ell=ell), 0.0, n=n, extent=extent)
    minus = lg_mode(replace(base, ell=-ell), 0.0, n=n, extent=extent)
    return VectorTransverseField(
        replace(plus, samples=alpha * plus.samples),
        replace(minus, samples=beta * minus.samples),
    )


def transverse_overlap(a: TransverseField, b: TransverseField) -> complex:
    """Grid inner product <a|b> dx dy."""
    if a.samples.shape != b.samples.shape:
        raise ValueError("fields must share one grid")
    return complex(np.sum(np.conj(a.samples) * b.samples) * a.dx * a.dy)


def azimuthal_spectrum(field: TransverseField, n_phi: int = 256,
                       n_r: int = 96) -> tuple[np.ndarray, np.ndarray]:
    """Power carried by each orbital index: FFT over angle, summed over r.

    Returns (ells, power) with power normalised to the total captured by
    the polar resampling.
    """
    from scipy.ndimage import map_coordinates

    r_max = 0.5 * min(field.nx * field.dx, field.ny * field.dy) * 0.98
    r = np.linspace(r_max / n_r * 0.5, r_max, n_r)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    col = rr * np.cos(pp) / field.dx + field.nx // 2
    row = rr * np.sin(pp) / field.dy + field.ny // 2
    real = map_coordinates(field.samples.real, [row, col], order=1)
    imag = map_coordinates(field.samples.imag, [row, col], order=1)
    rings = real + 1j * imag
    coeffs = np.fft.fft(rings, axis=1) / n_phi
    power = np.sum(np.abs(coeffs) ** 2 * r[:, None], axis=0)
    ells = np.fft.fftfreq(n_phi, d=1.0 / n_phi).astype(int)
    order = np.argsort(ells)
    total = power.sum()
    return ells[order], power[order] / total


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def _q_squared(field: TransverseField) -> np.ndarray:
    qx = 2.0 * np.pi * np.fft.fftfreq(field.nx, field.dx)
    qy = 2.0 * np.pi * np.fft.fftfreq(field.ny, field.dy)
    return qx[None, :] ** 2 + qy[:, None] ** 2


def _check_kernel_sampling(field: TransverseField, dz: float):
    """The q-space phase must stay resolved between adjacent samples.

    For exp(-i q^2 dz / 2k) the edge-of-band increment per bin is
    q_max * dq * dz / k; once it reaches pi the kernel aliases.
    """
    q_max = np.pi / min(field.dx, field.dy)
    dq = 2.0 * np.pi / max(field.nx * field.dx, field.ny * field.dy)
    increment = q_max * dq * abs(dz) / field.k
    if increment >= np.pi:
        raise StepSizeError(
            f"kernel under-sampled: edge phase increment {increment:.3f} "
            ">= pi per q bin; reduce dz or enlarge the grid")


def free_kernel_step(field: TransverseField, dz: float) -> TransverseField:
    """Free-space paraxial step: spectral phase exp(-i q^2 dz / 2k).

    A pure phase in q-space, so grid energy is conserved exactly.
    """
    if dz == 0.0:
        return field
    _check_kernel_sampling(field, dz)
    q2 = _q_squared(field)
    phase = q2 * dz / (2.0 * field.k)
    spectrum = np.fft.fft2(field.samples)
    out = np.fft.ifft2(spectrum * np.exp(-1j * phase))
    return replace(field, samples=out, z=field.z + dz)


def propagate_homogeneous(f0: TransverseField, temporal: SpectralPulse,
                          medium: MediumSpec) -> tuple[TransverseField, TemporalPulse]:
    """Factored solution for a transversely uniform medium.

    The space and time evolutions decouple: the transverse factor is the
    free-space propagation of ``f0`` across the cell and the temporal
    factor is the scalar comb propagation of ``temporal``.  The physical
    field is their outer product.
    """
    trans = free_kernel_step(f0, medium.length)
    temp = to_time(propagate(temporal, medium))
    return trans, temp


def _select_bins(temporal: SpectralPulse, min_rel_amp: float) -> np.ndarray:
    keep = np.abs(temporal.samples) >= min_rel_amp * np.abs(temporal.samples).max()
    return np.nonzero(keep)[0]


def propagate_inhomogeneous(f0: TransverseField, temporal: SpectralPulse,
                            medium: MediumSpec, density: DensityProfile,
                            nz: int, include_diffraction: bool = True,
                            min_rel_amp: float = 1e-7,
                            chunk: int = 64) -> SpaceTimeField:
    """Strang split-step solve of d E/dz = (i/2k) Lap E - n(r) D(w) E.

    Half a diffraction step, a full local-absorption step, half a
    diffraction step, for each of ``nz`` slabs and for every spectral
    sample carrying at least ``min_rel_amp`` of the peak amplitude
    (weaker bins are propagated by diffraction alone).  Returns the
    time-resolved field at z = L on the symmetric conjugate time grid.
    """
    if nz < 1:
        raise ValueError("nz must be >= 1")
    n_side = density.values(f0)
    dz = medium.length / nz
    dvals = transfer_function(medium.comb, temporal.omegas())
    bins = _select_bins(temporal, min_rel_amp)

    if include_diffraction:
        _check_kernel_sampling(f0, dz)
        q2 = _q_squared(f0)
        phase = q2 * dz / (2.0 * f0.k)
        half = np.exp(-0.5j * phase)[:, :, None]
    else:
        half = None

    n_t = temporal.n
    out = np.empty((f0.ny, f0.nx, n_t), dtype=complex)

    # bins below threshold never interact appreciably: diffraction only
    if include_diffraction:
        free_total = np.exp(-1j * q2 * medium.length / (2.0 * f0.k))
        f_free = np.fft.ifft2(np.fft.fft2(f0.samples) * free_total)
    else:
        f_free = f0.samples
    out[:] = f_free[:, :, None] * temporal.samples[None, None, :]

    for start in range(0, bins.size, chunk):
        sel = bins[start:start + chunk]
        fields = f0.samples[:, :, None] * temporal.samples[None, None, sel]
        absorb = np.exp(-dz * n_side[:, :, None] * dvals[None, None, sel])
        for step in range(nz):
            if half is not None:
                fields = np.fft.ifft2(np.fft.fft2(fields, axes=(0, 1)) * half,
                                      axes=(0, 1))
            fields *= absorb
            if half is not None:
                fields = np.fft.ifft2(np.fft.fft2(fields, axes=(0, 1)) * half,
                                      axes=(0, 1))
        out[:, :, sel] = fields

    # inverse transform w -> t per transverse point (symmetric time grid)
    t0, dt = conjugate_time_grid(temporal)
    j = np.arange(n_t)
    ramp = np.exp(1j * j * temporal.domega * t0)
    out *= ramp[None, None, :]
    out = np.fft.ifft(out, axis=2) / dt
    t = t0 + dt * j
    out *= np.exp(1j * temporal.omega0 * t)[None, None, :]
    return SpaceTimeField(f0.dx, f0.dy, t0, dt, out, z=f0.z + medium.length)


def propagate_inhomogeneous_converged(f0: TransverseField,
                                      temporal: SpectralPulse,
                                      medium: MediumSpec,
                                      density: DensityProfile,
                                      nz0: int = 2, tol: float = 1e-3,
                                      max_doublings: int = 5,
                                      **kwargs) -> tuple[SpaceTimeField, int]:
    """Double nz until the output stabilises to ``tol`` in relative L2."""
    nz = nz0
    prev = propagate_inhomogeneous(f0, temporal, medium, density, nz, **kwargs)
    for _ in range(max_doublings):
        nz *= 2
        cur = propagate_inhomogeneous(f0, temporal, medium, density, nz, **kwargs)
        num = np.linalg.norm((cur.samples - prev.samples).ravel())
        den = np.linalg.norm(cur.samples.ravel())
        if num <= tol * den:
            return cur, nz
        prev = cur
    raise ConvergenceError(
        f"split-step not converged to {tol:g} after nz = {nz}")
