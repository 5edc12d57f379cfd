"""In-plane energy landscape of the straintronic MTJ soft layer.

Axes follow the usual elliptical-nanomagnet convention: z along the major
(easy) axis, y along the minor axis, x out of plane. The polar angle theta is
measured from +z, which is the hard-layer magnetization direction, so theta is
also the angle between the two layers' magnetizations. The dipole coupling
field points along -z and holds the soft layer at theta = 180 deg at rest.

All quantities are SI. Oersted inputs are converted with :data:`OE_TO_A_PER_M`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import constants, optimize
from scipy.special import elliprd

MU0 = constants.mu_0
K_B = constants.k
OE_TO_A_PER_M = 1e3 / (4 * np.pi)


@dataclass(frozen=True)
class SoftLayerGeometry:
    """Elliptical cylinder with major axis L, minor axis W and thickness d."""

    major_axis: float
    minor_axis: float
    thickness: float

    def __post_init__(self):
        if min(self.major_axis, self.minor_axis, self.thickness) <= 0:
            raise ValueError("soft-layer dimensions must be positive")
        # Non-strict ordering so the sphere limit L = W = d stays representable.
        if not self.major_axis >= self.minor_axis >= self.thickness:
            raise ValueError("soft layer must satisfy major >= minor >= thickness")

    @property
    def volume(self) -> float:
        return np.pi * self.major_axis * self.minor_axis * self.thickness / 4


@dataclass(frozen=True)
class MagnetMaterial:
    saturation_magnetization: float
    magnetostriction: float
    youngs_modulus: float
    damping: float

    def __post_init__(self):
        if self.saturation_magnetization <= 0:
            raise ValueError("saturation magnetization must be positive")
        if self.youngs_modulus <= 0:
            raise ValueError("Young's modulus must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("Gilbert damping must lie in (0, 1]")


@dataclass(frozen=True)
class PiezoStack:
    d33: float
    thickness: float

    def __post_init__(self):
        if self.thickness <= 0:
            raise ValueError("piezoelectric thickness must be positive")


@dataclass(frozen=True)
class DipoleField:
    """Dipole coupling field magnitude in A/m, directed along -z."""

    magnitude: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("dipole field magnitude must be non-negative")

    @classmethod
    def from_oe(cls, oe: float) -> "DipoleField":
        return cls(oe * OE_TO_A_PER_M)


@dataclass(frozen=True)
class DemagFactors:
    nxx: float
    nyy: float
    nzz: float

    def __post_init__(self):
        for n in (self.nxx, self.nyy, self.nzz):
            if not 0 <= n <= 1:
                raise ValueError(f"demagnetization factor {n} outside [0, 1]")
        if abs(self.nxx + self.nyy + self.nzz - 1) > 1e-9:
            raise ValueError("demagnetization factors must sum to 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.nxx, self.nyy, self.nzz])


@dataclass(frozen=True)
class LandscapeConstants:
    """Threshold voltage ``big_gamma`` and demag offset ``small_gamma`` (V)."""

    big_gamma: float
    small_gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.big_gamma) and np.isfinite(self.small_gamma)):
            raise ValueError("landscape constants must be finite")


def compute_demag_factors(geom: SoftLayerGeometry) -> DemagFactors:
    """Demagnetization factors of the ellipsoid inscribed in the soft layer.

    The thin elliptical cylinder is replaced by the ellipsoid with semi-axes
    L/2, W/2, d/2. For an ellipsoid with semi-axes (a, b, c) the factor along
    a is ``a*b*c/3 * R_D(b**2, c**2, a**2)`` with ``R_D`` Carlson's symmetric
    elliptic integral of the second kind (Osborn 1945).
    """
    a, b, c = geom.major_axis / 2, geom.minor_axis / 2, geom.thickness / 2
    # Rescale to keep the arguments of R_D near unity.
    s = max(a, b, c)
    a, b, c = a / s, b / s, c / s
    pref = a * b * c / 3
    nzz = pref * elliprd(b * b, c * c, a * a)
    nyy = pref * elliprd(a * a, c * c, b * b)
    nxx = 1.0 - nyy - nzz
    return DemagFactors(float(nxx), float(nyy), float(nzz))


@dataclass(frozen=True)
class MagnetParams:
    """Everything the soft-layer energy needs.

    ``demag_override`` replaces the computed demagnetization factors, e.g. to
    pin ``small_gamma`` to a reference value (see :meth:`with_pinned_gamma`).
    """

    geometry: SoftLayerGeometry
    material: MagnetMaterial
    piezo: PiezoStack
    dipole: DipoleField
    temperature: float = 300.0
    demag_override: DemagFactors | None = None
    _demag: DemagFactors = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        demag = self.demag_override or compute_demag_factors(self.geometry)
        object.__setattr__(self, "_demag", demag)

    @property
    def demag(self) -> DemagFactors:
        return self._demag

    @property
    def volume(self) -> float:
        return self.geometry.volume

    @property
    def kT(self) -> float:
        return K_B * self.temperature

    def moment_scale(self) -> float:
        """mu0 * Ms * volume, the factor converting field (A/m) to energy (J)."""
        return MU0 * self.material.saturation_magnetization * self.volume

    def with_pinned_gamma(self, small_gamma: float) -> "MagnetParams":
        """Copy whose in-plane demag difference reproduces ``small_gamma``.

        N_xx is kept at its computed value; N_yy and N_zz are shifted
        symmetrically so the sum rule still holds.
        """
        mat, pz = self.material, self.piezo
        scale = 3 * mat.magnetostriction * mat.youngs_modulus * pz.d33
        diff = small_gamma * scale / (MU0 * mat.saturation_magnetization**2 * pz.thickness)
        base = self.demag
        mean = (base.nyy + base.nzz) / 2
        pinned = DemagFactors(base.nxx, mean - diff / 2, mean + diff / 2)
        return replace(self, demag_override=pinned)

    def with_temperature(self, temperature: float) -> "MagnetParams":
        return replace(self, temperature=temperature)

    def with_dipole(self, dipole: DipoleField) -> "MagnetParams":
        return replace(self, dipole=dipole)


def reference_params(temperature: float = 300.0) -> MagnetParams:
    """Terfenol-D soft layer on PMN-PT: the reference device."""
    return MagnetParams(
        geometry=SoftLayerGeometry(800e-9, 700e-9, 2.2e-9),
        material=MagnetMaterial(
            saturation_magnetization=8.5e5,
            magnetostriction=600e-6,
            youngs_modulus=120e9,
            damping=0.1,
        ),
        piezo=PiezoStack(d33=1.5e-9, thickness=1e-6),
        dipole=DipoleField.from_oe(1000.0),
        temperature=temperature,
    )


def stress_from_gate(v_gate, material: MagnetMaterial, piezo: PiezoStack):
    """Uniaxial stress (Pa) generated in the soft layer by the gate voltage."""
    return material.youngs_modulus * piezo.d33 * np.asarray(v_gate) / piezo.thickness


def _anisotropy_coefficient(v_gate, params: MagnetParams):
    # Coefficient of sin^2(theta): shape plus stress anisotropy, in J.
    mat, dm = params.material, params.demag
    sigma = stress_from_gate(v_gate, mat, params.piezo)
    shape = 0.5 * MU0 * mat.saturation_magnetization**2 * (dm.nyy - dm.nzz)
    return (shape + 1.5 * mat.magnetostriction * sigma) * params.volume


def energy(theta, v_gate, params: MagnetParams):
    """In-plane (phi = 90 deg) magnetostatic energy in joules."""
    theta = np.asarray(theta, dtype=float)
    mat, dm = params.material, params.demag
    omega = params.volume
    sigma = stress_from_gate(v_gate, mat, params.piezo)
    k_coef = _anisotropy_coefficient(v_gate, params)
    const = 0.5 * MU0 * mat.saturation_magnetization**2 * omega * dm.nzz
    const = const - 1.5 * mat.magnetostriction * sigma * omega
    dipole = params.moment_scale() * params.dipole.magnitude
    return k_coef * np.sin(theta) ** 2 + const + dipole * np.cos(theta)


def energy_derivative(theta, v_gate, params: MagnetParams):
    """Analytic dE/dtheta of :func:`energy`."""
    theta = np.asarray(theta, dtype=float)
    k_coef = _anisotropy_coefficient(v_gate, params)
    dipole = params.moment_scale() * params.dipole.magnitude
    return k_coef * np.sin(2 * theta) - dipole * np.sin(theta)


def landscape_constants(params: MagnetParams) -> LandscapeConstants:
    mat, pz, dm = params.material, params.piezo, params.demag
    denom = 3 * mat.magnetostriction * mat.youngs_modulus * pz.d33
    if denom == 0:
        raise ZeroDivisionError("magnetostriction * Young's modulus * d33 vanishes")
    ms = mat.saturation_magnetization
    big = MU0 * ms * params.dipole.magnitude * pz.thickness / denom
    small = MU0 * ms**2 * (dm.nzz - dm.nyy) * pz.thickness / denom
    return LandscapeConstants(float(big), float(small))


class SteadyAngle(NamedTuple):
    theta: float
    collinear: bool


def theta_ss_analytic(v_gate: float, consts: LandscapeConstants) -> SteadyAngle:
    """Steady-state angle from the stationarity condition of the landscape.

    ``cos(theta) = big_gamma / (v_gate - small_gamma)``. The non-collinear root
    is a minimum only when the sin^2 coefficient is negative, i.e. when
    ``v_gate < small_gamma``; on the other side it is a maximum and the rest
    state at 180 deg is kept. Outside the real-root band the magnetizations
    stay antiparallel as well.
    """
    shifted = v_gate - consts.small_gamma
    if shifted >= 0:
        return SteadyAngle(float(np.pi), True)
    ratio = consts.big_gamma / shifted
    if ratio < -1:
        return SteadyAngle(float(np.pi), True)
    return SteadyAngle(float(np.arccos(ratio)), False)


def energy_minimum(v_gate: float, params: MagnetParams, n_grid: int = 3601) -> float:
    """Global minimum of the in-plane energy over [0, pi], refined locally."""
    grid = np.linspace(0.0, np.pi, n_grid)
    e = energy(grid, v_gate, params)
    k = int(np.argmin(e))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]
    res = optimize.minimize_scalar(
        lambda t: float(energy(t, v_gate, params)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x) if res.fun <= e[k] else float(grid[k])


def well_depth(v_gate: float, params: MagnetParams) -> float:
    """Depth of the potential well in joules.

    Measured from the minimum to the lowest barrier confining it in the
    (theta, 2*pi - theta) double well, which is the collinear state at 180 deg.
    Zero when the minimum is the collinear state itself.
    """
    theta_min = energy_minimum(v_gate, params)
    e_min = float(energy(theta_min, v_gate, params))
    e_barrier = float(energy(np.pi, v_gate, params))
    return max(e_barrier - e_min, 0.0)
