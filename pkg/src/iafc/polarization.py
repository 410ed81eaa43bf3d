"""Dual-comb propagation of the two circular polarization components.

The sigma+ and sigma- components couple to separate tooth sets.  Their
coupled propagation in the retarded frame is

    d/dz [E+, E-] = A(w) [E+, E-],
    A(w) = [[-Dplus(w), -G(w)], [-G(w), -Dminus(w)]],

solved per frequency by a closed-form 2x2 matrix exponential.  A relative
comb displacement ``shift`` moves the plus teeth by +shift/2 and the
minus teeth by -shift/2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import UndefinedFidelityError
from .spectral import (
    FrequencyComb,
    SpectralPulse,
    TemporalPulse,
    _check_coverage,
    _shift_to_grid,
    _window_mask,
    echo_window,
    to_time,
    transfer_function,
)

__all__ = [
    "DualComb", "VectorPulse", "TemporalVector", "dual_transfer_matrix",
    "propagate_vector", "vector_fidelity", "apply_waveplate", "expm_2x2",
]


@dataclass(frozen=True)
class DualComb:
    """Tooth sets for the Delta m = +1 and Delta m = -1 transitions.

    ``cross_teeth`` holds (detuning, weight) pairs for transitions whose
    dipole couples to both polarizations; they feed the off-diagonal
    mixing term G(w).  ``shift`` displaces the two combs by +/- shift/2.
    """

    comb_plus: FrequencyComb
    comb_minus: FrequencyComb
    cross_teeth: tuple[tuple[float, float], ...] = ()
    shift: float = 0.0

    def __post_init__(self):
        if abs(self.comb_plus.gamma - self.comb_minus.gamma) > 1e-9 * self.comb_plus.gamma:
            raise ValueError("both combs must share one homogeneous linewidth")
        if self.cross_teeth and self.shift != 0.0:
            raise ValueError(
                "a relative comb shift is only meaningful for media with "
                "no cross-coupling teeth"
            )
        self._validate_cross_weights()

    def _validate_cross_weights(self):
        """Cross weights obey |w_x|^2 <= w_plus * w_minus per shared line.

        The cross weight houses a product of the two dipole moments of one
        transition, so it is bounded by the geometric mean of the diagonal
        weights at the same detuning.
        """
        if not self.cross_teeth:
            return
        tol = 1e-6
        for detuning, w_x in self.cross_teeth:
            w_p = self._weight_at(self.comb_plus, detuning)
            w_m = self._weight_at(self.comb_minus, detuning)
            if w_x ** 2 > w_p * w_m * (1 + tol):
                raise ValueError(
                    f"cross weight {w_x:g} at detuning {detuning:g} violates "
                    f"w_x^2 <= w_plus*w_minus = {w_p:g}*{w_m:g}"
                )

    @staticmethod
    def _weight_at(comb: FrequencyComb, detuning: float) -> float:
        d = comb.detunings
        if d.size == 0:
            return 0.0
        k = int(np.argmin(np.abs(d - detuning)))
        if abs(d[k] - detuning) > 1e-3 * comb.gamma + 1e-6 * abs(detuning):
            return 0.0
        return float(comb.weights[k])

    @property
    def gamma(self) -> float:
        return self.comb_plus.gamma

    def shifted_plus(self) -> FrequencyComb:
        return self.comb_plus.shifted(+0.5 * self.shift)

    def shifted_minus(self) -> FrequencyComb:
        return self.comb_minus.shifted(-0.5 * self.shift)

    def swapped(self) -> "DualComb":
        """Exchange the roles of the two polarizations."""
        return DualComb(self.comb_minus, self.comb_plus, self.cross_teeth,
                        -self.shift)


@dataclass(frozen=True)
class VectorPulse:
    """Spectral amplitudes of the right/left circular components."""

    e_plus: SpectralPulse
    e_minus: SpectralPulse

    def __post_init__(self):
        same = (
            self.e_plus.n == self.e_minus.n
            and abs(self.e_plus.omega0 - self.e_minus.omega0) <= 1e-6 * self.e_plus.domega
            and abs(self.e_plus.domega - self.e_minus.domega) <= 1e-12 * self.e_plus.domega
        )
        if not same:
            raise ValueError("both components must share one spectral grid")

    def energy(self) -> float:
        return self.e_plus.energy() + self.e_minus.energy()


@dataclass(frozen=True)
class TemporalVector:
    """Time-domain counterpart of :class:`VectorPulse`."""

    plus: TemporalPulse
    minus: TemporalPulse

    def __post_init__(self):
        if (self.plus.n != self.minus.n
                or abs(self.plus.dt - self.minus.dt) > 1e-12 * self.plus.dt
                or abs(self.plus.t0 - self.minus.t0) > 1e-6 * self.plus.dt):
            raise ValueError("both components must share one time grid")

    def energy(self) -> float:
        return self.plus.energy() + self.minus.energy()


def vector_to_time(v: VectorPulse, grid=None) -> TemporalVector:
    tp = to_time(v.e_plus, grid)
    tm = to_time(v.e_minus, grid=(tp.t0, tp.dt))
    return TemporalVector(tp, tm)


def dual_transfer_matrix(dc: DualComb, omega) -> np.ndarray:
    """A(w) as an array of shape (..., 2, 2), in 1/m (retarded frame)."""
    omega = np.asarray(omega, dtype=float)
    d_plus = transfer_function(dc.shifted_plus(), omega)
    d_minus = transfer_function(dc.shifted_minus(), omega)
    g = np.zeros_like(np.asarray(d_plus))
    half = 0.5 * dc.gamma
    for detuning, w_x in dc.cross_teeth:
        g = g + w_x / (1j * (detuning + omega) + half)
    out = np.empty(omega.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = -d_plus
    out[..., 0, 1] = -g
    out[..., 1, 0] = -g
    out[..., 1, 1] = -d_minus
    return out


def expm_2x2(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of a stack of 2x2 complex matrices.

    Trace/determinant closed form with mu = tr(M)/2 and
    s^2 = mu^2 - det(M):

        exp(M) = exp(mu) [cosh(s) I + sinh(s)/s (M - mu I)].

    Both cosh(s)/s terms are even in s, so the square-root branch does
    not matter.  The evaluation works with the eigen-exponentials
    exp(mu +- s) directly: for passive media their real parts are
    non-positive, so deep absorption underflows to zero instead of
    overflowing.
    """
    a = m[..., 0, 0]
    b = m[..., 0, 1]
    c = m[..., 1, 0]
    d = m[..., 1, 1]
    mu = 0.5 * (a + d)
    s2 = 0.25 * (a - d) ** 2 + b * c
    s = np.sqrt(s2)
    e_up = np.exp(mu + s)
    e_dn = np.exp(mu - s)
    cosh_term = 0.5 * (e_up + e_dn)
    small = np.abs(s) < 1e-6
    s_safe = np.where(small, 1.0, s)
    ratio = np.where(small, np.exp(mu) * (1.0 + s2 / 6.0),
                     0.5 * (e_up - e_dn) / s_safe)
    out = np.empty_like(m)
    out[..., 0, 0] = cosh_term + ratio * 0.5 * (a - d)
    out[..., 0, 1] = ratio * b
    out[..., 1, 0] = ratio * c
    out[..., 1, 1] = cosh_term - ratio * 0.5 * (a - d)
    return out


def propagate_vector(v: VectorPulse, dc: DualComb, length: float) -> VectorPulse:
    """Apply exp(A(w) L) per frequency sample.

    With no cross-coupling this reduces exactly to two independent scalar
    propagations through the shifted combs.
    """
    if not (length > 0):
        raise ValueError("length must be > 0")
    _check_coverage(dc.shifted_plus(), v.e_plus)
    _check_coverage(dc.shifted_minus(), v.e_minus)
    w = v.e_plus.omegas()
    transfer = expm_2x2(dual_transfer_matrix(dc, w) * length)
    ep = transfer[:, 0, 0] * v.e_plus.samples + transfer[:, 0, 1] * v.e_minus.samples
    em = transfer[:, 1, 0] * v.e_plus.samples + transfer[:, 1, 1] * v.e_minus.samples
    return VectorPulse(replace(v.e_plus, samples=ep),
                       replace(v.e_minus, samples=em))


def apply_waveplate(v: TemporalVector, phase: float,
                    delay: float = 0.0) -> TemporalVector:
    """Constant relative phase (and optional delay) on the minus component.

    Models the wave plate that compensates unequal echo phases or echo
    times of the two polarizations before the fidelity measurement.
    """
    minus = v.minus
    if delay != 0.0:
        minus = _shift_to_grid(minus, delay, minus)
    minus = replace(minus, samples=minus.samples * np.exp(1j * phase))
    return TemporalVector(v.plus, minus)


def vector_fidelity(input_v: TemporalVector, output_v: TemporalVector,
                    delta_eff: float) -> float:
    """Overlap fidelity of a two-component field with its first echo.

    F = |sum_c Int_win E*_in,c(t - 2pi/delta) E_out,c(t) dt|^2 normalised
    by the total input energy and the output energy in the echo window.
    Invariant under a global phase on either field.
    """
    t_e = 2.0 * np.pi / delta_eff
    lo, hi = echo_window(delta_eff)
    mask = _window_mask(output_v.plus, lo, hi)
    overlap = 0.0 + 0.0j
    e_out = 0.0
    for comp_in, comp_out in ((input_v.plus, output_v.plus),
                              (input_v.minus, output_v.minus)):
        ref = _shift_to_grid(comp_in, t_e, comp_out)
        overlap += np.sum(np.conj(ref.samples[mask]) * comp_out.samples[mask]) * comp_out.dt
        e_out += float(np.sum(np.abs(comp_out.samples[mask]) ** 2) * comp_out.dt)
    e_in = input_v.energy()
    if e_in <= 0.0 or e_out <= 0.0:
        raise UndefinedFidelityError("zero-energy field in vector fidelity")
    return float(np.abs(overlap) ** 2 / (e_in * e_out))
