"""Hamiltonian functions and their flows in real phase-space coordinates.

A Hamiltonian is specified by a complex bilinear kernel acting through the
complex chart psi_i = sqrt(rho_i) exp(i pi_i), optional linear terms, a
constant, and an optional nonlinear perturbation from a small catalog.  The
value and all derivatives are closed form in (rho, pi) via the chain rule
through the chart, so no automatic differentiation is involved.

Flows are integrated with the implicit midpoint rule: it is symplectic, it
conserves linear invariants such as sum(rho) exactly, and it handles these
non-separable Hamiltonians.  Momenta are circle-valued (each pi_i matters
only modulo 2 pi); values are stored as given and `circle_difference` or
`PhasePoint.wrapped_pi` reduce to a fundamental domain when needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundaryError,
    ConvergenceError,
    DimensionError,
    NormalizationError,
    NotRealError,
)
from .geometry import EPS_FLOOR, NORM_TOL, as_vector, readonly, require_interior

TWO_PI = 2.0 * np.pi

#: Imaginary residue above which a Hamiltonian value is rejected as non-real.
REAL_TOL = 1e-9

#: Elementwise tolerance for kernel Hermiticity and linear-term conjugacy.
HERMITIAN_TOL = 1e-12

NONLINEAR_TAGS = ("none", "sum_rho_squared", "quartic_psi")


def circle_difference(a, b) -> np.ndarray:
    """Componentwise a - b reduced to (-pi, pi]."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.pi - np.mod(np.pi - d, TWO_PI)


@dataclass(frozen=True)
class PhasePoint:
    """A phase-space point (rho, pi).

    rho is componentwise nonnegative; interior operations additionally
    require rho_i >= EPS_FLOOR.  pi is circle-valued: each component is
    meaningful modulo 2 pi, and values are kept exactly as given so that
    momentum shifts compose without wrap artifacts.
    """

    rho: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        rho = as_vector(self.rho, "rho")
        pi = as_vector(self.pi, "pi")
        if rho.size != pi.size:
            raise DimensionError(f"rho has length {rho.size} but pi has length {pi.size}")
        if float(np.min(rho)) < 0.0:
            raise ValueError("rho must be componentwise nonnegative")
        object.__setattr__(self, "rho", readonly(rho))
        object.__setattr__(self, "pi", readonly(pi))

    @property
    def n(self) -> int:
        return self.rho.size

    @property
    def rho_total(self) -> float:
        return float(self.rho.sum())

    @property
    def is_normalized(self) -> bool:
        return abs(self.rho_total - 1.0) <= NORM_TOL

    @property
    def coordinates(self) -> np.ndarray:
        """The 2n vector (rho_1 .. rho_n, pi_1 .. pi_n)."""
        return np.concatenate([self.rho, self.pi])

    def wrapped_pi(self) -> np.ndarray:
        return np.mod(self.pi, TWO_PI)


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector with components split as (drho/dl, dpi/dl)."""

    components: np.ndarray

    def __post_init__(self):
        comps = as_vector(self.components, "components")
        if comps.size % 2:
            raise DimensionError(f"components must have even length, got {comps.size}")
        object.__setattr__(self, "components", readonly(comps))

    @property
    def n(self) -> int:
        return self.components.size // 2

    @property
    def drho(self) -> np.ndarray:
        return self.components[: self.n]

    @property
    def dpi(self) -> np.ndarray:
        return self.components[self.n :]


def _as_complex_vector(values, name: str, n: int | None = None) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{name} must be a nonempty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if n is not None and arr.size != n:
        raise DimensionError(f"{name} has length {arr.size}, expected {n}")
    return arr


@dataclass(frozen=True)
class HamiltonianSpec:
    """A Hamiltonian function on phase space.

    value(psi) = conj(psi) . kernel . psi + conj(psi) . linear_bra
                 + linear_ket . psi + constant + nonlinear(rho)

    The value is real at every point exactly when the kernel is Hermitian and
    linear_ket = conj(linear_bra); only such specs generate flows.  The
    nonlinear catalog holds two tags for one and the same gauge-invariant
    function: ``sum_rho_squared`` evaluates strength * sum(rho_i^2) from the
    real coordinates while ``quartic_psi`` evaluates strength * sum(|psi_i|^4)
    through the chart.  Either one is Hamiltonian but not metric preserving,
    which makes it the standard negative control.
    """

    kernel: np.ndarray | None = None
    linear_bra: np.ndarray | None = None
    linear_ket: np.ndarray | None = None
    constant: float = 0.0
    nonlinear: str = "none"
    nonlinear_strength: float = 1.0

    def __post_init__(self):
        n = None
        kernel = self.kernel
        if kernel is not None:
            kernel = np.asarray(kernel, dtype=complex)
            if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
                raise DimensionError(f"kernel must be square, got shape {kernel.shape}")
            if not np.all(np.isfinite(kernel)):
                raise ValueError("kernel has non-finite entries")
            n = kernel.shape[0]
            object.__setattr__(self, "kernel", readonly(kernel, dtype=complex))
        for name in ("linear_bra", "linear_ket"):
            vec = getattr(self, name)
            if vec is not None:
                vec = _as_complex_vector(vec, name, n)
                n = vec.size
                object.__setattr__(self, name, readonly(vec, dtype=complex))
        if self.nonlinear not in NONLINEAR_TAGS:
            raise ValueError(f"unknown nonlinear tag {self.nonlinear!r}, expected one of {NONLINEAR_TAGS}")
        if not np.isfinite(self.constant) or not np.isfinite(self.nonlinear_strength):
            raise ValueError("constant and nonlinear_strength must be finite")
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "nonlinear_strength", float(self.nonlinear_strength))

    @property
    def n(self) -> int | None:
        """Dimension fixed by the arrays, or None for dimension-free specs."""
        if self.kernel is not None:
            return self.kernel.shape[0]
        for vec in (self.linear_bra, self.linear_ket):
            if vec is not None:
                return vec.size
        return None

    def is_valid_real(self, tol: float = HERMITIAN_TOL) -> bool:
        """Whether the value is real for every point."""
        if self.kernel is not None:
            if float(np.max(np.abs(self.kernel - self.kernel.conj().T))) > tol:
                return False
        bra, ket = self.linear_bra, self.linear_ket
        if bra is None and ket is None:
            return True
        size = bra.size if bra is not None else ket.size
        bra = bra if bra is not None else np.zeros(size, dtype=complex)
        ket = ket if ket is not None else np.zeros(size, dtype=complex)
        return float(np.max(np.abs(ket - np.conj(bra)))) <= tol

    def require_valid_real(self) -> None:
        if not self.is_valid_real():
            raise NotRealError(
                "Hamiltonian is not real-valued: the kernel must be Hermitian "
                "and linear_ket must equal conj(linear_bra)"
            )

    @classmethod
    def from_kernel(cls, kernel) -> "HamiltonianSpec":
        return cls(kernel=np.asarray(kernel, dtype=complex))

    @classmethod
    def normalization(cls, n: int) -> "HamiltonianSpec":
        """The constraint function 1 - sum(rho); its flow shifts every
        momentum by the flow parameter and leaves rho fixed."""
        return cls(kernel=-np.eye(n, dtype=complex), constant=1.0)


@dataclass(frozen=True)
class Trajectory:
    """Ordered flow samples with per-step conservation diagnostics."""

    parameter_values: np.ndarray
    points: tuple[PhasePoint, ...]
    norm_defects: np.ndarray    # |sum(rho) - 1| per sample
    energy_defects: np.ndarray  # |H(X_k) - H(X_0)| per sample

    def __post_init__(self):
        taus = as_vector(self.parameter_values, "parameter_values")
        points = tuple(self.points)
        norms = as_vector(self.norm_defects, "norm_defects")
        energies = as_vector(self.energy_defects, "energy_defects")
        if not (len(points) == taus.size == norms.size == energies.size):
            raise DimensionError("trajectory fields have mismatched lengths")
        if taus.size > 1 and np.min(np.diff(taus)) <= 0.0:
            raise ValueError("parameter values must be strictly increasing")
        object.__setattr__(self, "parameter_values", readonly(taus))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "norm_defects", readonly(norms))
        object.__setattr__(self, "energy_defects", readonly(energies))

    def __len__(self) -> int:
        return len(self.points)


def _psi_from(rho: np.ndarray, pi: np.ndarray) -> np.ndarray:
    return np.sqrt(rho) * np.exp(1j * pi)


def _check_dim(spec: HamiltonianSpec, n: int) -> None:
    if spec.n is not None and spec.n != n:
        raise DimensionError(f"spec has dimension {spec.n} but the point has dimension {n}")


def _eval_complex(spec: HamiltonianSpec, rho: np.ndarray, pi: np.ndarray) -> complex:
    psi = _psi_from(rho, pi)
    value = complex(spec.constant)
    if spec.kernel is not None:
        value += complex(np.conj(psi) @ spec.kernel @ psi)
    if spec.linear_bra is not None:
        value += complex(np.conj(psi) @ spec.linear_bra)
    if spec.linear_ket is not None:
        value += complex(spec.linear_ket @ psi)
    if spec.nonlinear == "sum_rho_squared":
        value += spec.nonlinear_strength * float(np.sum(rho * rho))
    elif spec.nonlinear == "quartic_psi":
        dens = (np.conj(psi) * psi).real
        value += spec.nonlinear_strength * float(np.sum(dens * dens))
    return value


def _grad_arrays(spec: HamiltonianSpec, rho: np.ndarray, pi: np.ndarray):
    """Complex formal gradients (d/drho, d/dpi) of the value.

    Real parts are the gradients of the real part of the Hamiltonian, which
    is the function every flow operation acts on.  Requires the interior.
    """
    require_interior(rho)
    _check_dim(spec, rho.size)
    psi = _psi_from(rho, pi)
    dr = np.zeros(rho.size, dtype=complex)
    dp = np.zeros(rho.size, dtype=complex)
    if spec.kernel is not None:
        right = np.conj(psi) * (spec.kernel @ psi)       # psi_k^* (K psi)_k
        left = (spec.kernel.T @ np.conj(psi)) * psi      # (psi^* K)_k psi_k
        dr += (right + left) / (2.0 * rho)
        dp += -1j * (right - left)
    if spec.linear_bra is not None:
        u = np.conj(psi) * spec.linear_bra
        dr += u / (2.0 * rho)
        dp += -1j * u
    if spec.linear_ket is not None:
        w = spec.linear_ket * psi
        dr += w / (2.0 * rho)
        dp += 1j * w
    if spec.nonlinear == "sum_rho_squared":
        dr += 2.0 * spec.nonlinear_strength * rho
    elif spec.nonlinear == "quartic_psi":
        dr += 2.0 * spec.nonlinear_strength * (np.conj(psi) * psi).real
    return dr, dp


def _field_arrays(spec: HamiltonianSpec, rho: np.ndarray, pi: np.ndarray):
    """Hamilton's equations: (drho/dtau, dpi/dtau) = (dH/dpi, -dH/drho)."""
    dr, dp = _grad_arrays(spec, rho, pi)
    return dp.real.copy(), -dr.real


def eval_hamiltonian(spec: HamiltonianSpec, X: PhasePoint) -> tuple[float, float]:
    """Value of the Hamiltonian at X as (real part, imaginary residue).

    The residue stays below 1e-12 for any real-valued spec; it exceeds the
    NotRealError threshold only for ill-formed specs such as a non-Hermitian
    kernel.
    """
    require_interior(X.rho)
    _check_dim(spec, X.n)
    value = _eval_complex(spec, X.rho, X.pi)
    residue = abs(value.imag)
    if residue > REAL_TOL:
        raise NotRealError(f"Hamiltonian value has imaginary residue {residue:.3e}")
    return float(value.real), float(residue)


def gradient(spec: HamiltonianSpec, X: PhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """(dH/drho, dH/dpi) of the real part H of the Hamiltonian at X."""
    dr, dp = _grad_arrays(spec, X.rho, X.pi)
    return dr.real.copy(), dp.real.copy()


def hamiltonian_vector_field(spec: HamiltonianSpec, X: PhasePoint) -> TangentVector:
    """The flow field (drho/dtau, dpi/dtau) = (dH/dpi, -dH/drho) at X."""
    spec.require_valid_real()
    fr, fp = _field_arrays(spec, X.rho, X.pi)
    return TangentVector(np.concatenate([fr, fp]))


def bracket_from_gradients(grad_a, grad_b) -> float:
    """Poisson bracket contraction of two gradient pairs (dF/drho, dF/dpi)."""
    dra, dpa = grad_a
    drb, dpb = grad_b
    return float(np.dot(dra, dpb) - np.dot(dpa, drb))


def poisson_bracket(spec_a: HamiltonianSpec, spec_b: HamiltonianSpec, X: PhasePoint) -> float:
    """{A, B} = sum_i (dA/drho_i dB/dpi_i - dA/dpi_i dB/drho_i) at X."""
    spec_a.require_valid_real()
    spec_b.require_valid_real()
    return bracket_from_gradients(gradient(spec_a, X), gradient(spec_b, X))


def check_normalization_generator(spec: HamiltonianSpec, X: PhasePoint) -> float:
    """d|rho|/dtau along the flow, i.e. sum_i dH/dpi_i at X.

    Zero (to rounding) exactly for gauge-invariant specs: a pure Hermitian
    kernel, with or without the nonlinear catalog terms.
    """
    _, dp = _grad_arrays(spec, X.rho, X.pi)
    return float(dp.real.sum())


def integrate_midpoint(
    spec: HamiltonianSpec,
    X0: PhasePoint,
    h: float,
    steps: int,
    *,
    tol: float = 1e-13,
    max_iter: int = 50,
) -> Trajectory:
    """Integrate the flow of ``spec`` from ``X0`` with the implicit midpoint rule.

    Each step solves X1 = X0 + h f((X0 + X1)/2) by fixed-point iteration
    starting from an explicit Euler predictor; the sweep stops when the
    update falls below ``tol`` (the true fixed-point error is then smaller by
    the contraction factor, of order h * |df|).  Records the normalization
    defect |sum(rho) - 1| and the energy defect |H(X_k) - H(X_0)| at every
    sample.  Aborts with BoundaryError as soon as an iterate or midpoint
    leaves the interior, rather than projecting back (projection would break
    symplecticity).
    """
    spec.require_valid_real()
    if not np.isfinite(h) or h <= 0.0:
        raise ValueError(f"h must be positive and finite, got {h!r}")
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be an integer >= 1, got {steps!r}")
    steps = int(steps)
    rho = X0.rho.copy()
    pi = X0.pi.copy()
    require_interior(rho)
    _check_dim(spec, rho.size)
    energy0 = _eval_complex(spec, rho, pi).real
    taus = [0.0]
    points = [PhasePoint(rho, pi)]
    norm_defects = [abs(rho.sum() - 1.0)]
    energy_defects = [0.0]
    for k in range(steps):
        fr, fp = _field_arrays(spec, rho, pi)
        zr = rho + h * fr
        zp = pi + h * fp
        converged = False
        for _ in range(max_iter):
            mr = 0.5 * (rho + zr)
            mp = 0.5 * (pi + zp)
            if float(np.min(mr)) < EPS_FLOOR:
                raise BoundaryError(f"flow reached the simplex boundary at step {k + 1}")
            fr, fp = _field_arrays(spec, mr, mp)
            nr = rho + h * fr
            npi = pi + h * fp
            delta = max(float(np.max(np.abs(nr - zr))), float(np.max(np.abs(npi - zp))))
            zr, zp = nr, npi
            if delta <= tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(
                f"midpoint fixed point missed tolerance {tol:g} after {max_iter} sweeps at step {k + 1}"
            )
        if float(np.min(zr)) < EPS_FLOOR:
            raise BoundaryError(f"flow reached the simplex boundary at step {k + 1}")
        rho, pi = zr, zp
        taus.append((k + 1) * h)
        points.append(PhasePoint(rho, pi))
        norm_defects.append(abs(rho.sum() - 1.0))
        energy_defects.append(abs(_eval_complex(spec, rho, pi).real - energy0))
    return Trajectory(
        parameter_values=np.asarray(taus),
        points=tuple(points),
        norm_defects=np.asarray(norm_defects),
        energy_defects=np.asarray(energy_defects),
    )


def gauge_canonicalize(X: PhasePoint) -> PhasePoint:
    """Pick the gauge representative with zero weighted momentum mean.

    Shifts pi by the constant sum(rho_i pi_i), the same mean the ray metric
    minimizer removes.  Idempotent; requires a normalized point.
    """
    if not X.is_normalized:
        raise NormalizationError(f"point must be normalized, sum(rho) = {X.rho_total!r}")
    mean = float(X.rho @ X.pi)
    if mean == 0.0:
        return X
    return PhasePoint(X.rho, X.pi - mean)
