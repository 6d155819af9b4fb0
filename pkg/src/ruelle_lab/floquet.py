"""Floquet machinery for periodic linear systems.

Fundamental solutions dU/dtheta = A(theta) U, monodromy matrices, hyperbolic
decompositions (multipliers, exponents, twisting indices, the real generator
A = log(M^2)/(2P)), the periodic factor P(theta) = U(theta,0) exp(-theta*A),
and holonomy of flat-connection coefficients around the orbit.  This is the
bridge from raw linearization data to the spectral model: ``to_element`` turns
a decomposition into a closed-orbit element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .model import ClosedOrbitElement, EigenDatum, HALF_TWIST, ZERO_TWIST

DEFAULT_TOL = 1e-10
HYPERBOLICITY_TOL = 1e-8
# degenerate real multipliers integrate into conjugate pairs with spurious
# imaginary parts at the ODE-noise scale; rotation angles this small are
# indistinguishable from real pairs anyway
REAL_EIG_TOL = 1e-7


class FloquetError(RuntimeError):
    pass


class NonHyperbolicError(FloquetError):
    pass


class NonDiagonalizableError(FloquetError):
    pass


@dataclass(frozen=True)
class PeriodicCoefficient:
    """Periodic matrix coefficient theta -> A(theta), wrapped modulo period."""

    period: float
    matrix: Callable[[float], np.ndarray]
    size: int

    def evaluate(self, theta: float) -> np.ndarray:
        return np.asarray(self.matrix(theta % self.period))

    @staticmethod
    def constant(a, period: float) -> "PeriodicCoefficient":
        a = np.asarray(a, dtype=complex if np.iscomplexobj(a) else float)
        return PeriodicCoefficient(float(period), lambda _theta: a, a.shape[0])

    @staticmethod
    def from_callable(fn, period: float, size: int) -> "PeriodicCoefficient":
        return PeriodicCoefficient(float(period), fn, size)

    @staticmethod
    def from_samples(thetas, matrices, period: float) -> "PeriodicCoefficient":
        """Cubic-spline interpolation of uniformly or arbitrarily sampled data.

        The sample at theta = period is synthesized from the one at 0 if
        absent, so inputs need only cover [0, period).
        """
        thetas = np.asarray(thetas, dtype=float)
        mats = np.asarray(matrices)
        order = np.argsort(thetas)
        thetas, mats = thetas[order], mats[order]
        if not math.isclose(thetas[-1], period, rel_tol=0, abs_tol=1e-12):
            thetas = np.append(thetas, period)
            mats = np.concatenate([mats, mats[:1]], axis=0)
        else:
            mats[-1] = mats[0]
        spline = CubicSpline(thetas, mats, axis=0, bc_type="periodic")
        size = mats.shape[1]
        return PeriodicCoefficient(float(period),
                                   lambda th: spline(th % period), size)


def _integrate_matrix(coeff: PeriodicCoefficient, theta0: float, theta1: float,
                      tol: float, sign: float = 1.0, dense: bool = False):
    """Fundamental solution of dU/dtheta = sign * A(theta) U, U(theta0) = Id."""
    n = coeff.size
    probe = np.asarray(coeff.matrix(theta0 % coeff.period))
    is_complex = np.iscomplexobj(probe)
    ident = np.eye(n, dtype=complex if is_complex else float)

    if theta1 == theta0:
        return (ident, None) if dense else ident

    if is_complex:
        def rhs(th, y):
            u = (y[: n * n] + 1j * y[n * n:]).reshape(n, n)
            du = sign * coeff.evaluate(th) @ u
            return np.concatenate([du.real.ravel(), du.imag.ravel()])

        y0 = np.concatenate([ident.real.ravel(), ident.imag.ravel()])
    else:
        def rhs(th, y):
            return (sign * coeff.evaluate(th) @ y.reshape(n, n)).ravel()

        y0 = ident.ravel().astype(float)

    sol = solve_ivp(rhs, (theta0, theta1), y0, method="DOP853",
                    rtol=tol, atol=tol, dense_output=dense)
    if not sol.success:
        raise FloquetError(f"integration failed: {sol.message}")

    def unpack(y):
        if is_complex:
            return (y[: n * n] + 1j * y[n * n:]).reshape(n, n)
        return y.reshape(n, n)

    if dense:
        return unpack(sol.y[:, -1]), lambda th: unpack(sol.sol(th))
    return unpack(sol.y[:, -1])


def integrate_fundamental(coeff: PeriodicCoefficient, theta0: float,
                          theta1: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """U(theta1, theta0) with local error ~ tol per unit theta."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _integrate_matrix(coeff, theta0, theta1, tol)


def monodromy(coeff: PeriodicCoefficient, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Period map M = U(period, 0); its determinant is positive (Liouville)."""
    m = integrate_fundamental(coeff, 0.0, coeff.period, tol)
    det = float(np.linalg.det(np.real(m))) if not np.iscomplexobj(m) else None
    if det is not None and det <= 0:
        raise FloquetError(f"monodromy determinant {det} <= 0; integration is broken")
    return m


@dataclass(frozen=True)
class FloquetDecomposition:
    """Spectral normal form of a hyperbolic monodromy matrix.

    ``multipliers`` are the eigenvalues in canonical order (stable first,
    conjugate pairs adjacent), ``angles`` their arguments, ``lyapunov`` the
    exponents log|nu|/P, ``frequencies`` the rotation rates, ``twists`` 1/2 at
    negative real multipliers, and ``generator`` the real matrix A with
    exp(2*P*A) = M^2.
    """

    period: float
    multipliers: tuple[complex, ...]
    angles: tuple[float, ...]
    lyapunov: tuple[float, ...]
    frequencies: tuple[float, ...]
    twists: tuple[Fraction, ...]
    generator: np.ndarray
    orientable_u: bool
    orientable_s: bool
    det_positive: bool

    @property
    def eigen_data(self) -> tuple[EigenDatum, ...]:
        return tuple(
            EigenDatum(chi=c, omega=w, twist=t)
            for c, w, t in zip(self.lyapunov, self.frequencies, self.twists)
        )

    def to_element(self, name: str) -> ClosedOrbitElement:
        neg_unstable = sum(
            1 for c, t in zip(self.lyapunov, self.twists)
            if c > 0 and t == HALF_TWIST
        )
        eps = HALF_TWIST if neg_unstable % 2 else ZERO_TWIST
        return ClosedOrbitElement(name, self.period, self.eigen_data, eps)


def floquet_decompose(m: np.ndarray, period: float,
                      hyp_tol: float = HYPERBOLICITY_TOL) -> FloquetDecomposition:
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    w, v = np.linalg.eig(m)

    bad = [x for x in w if abs(abs(x) - 1.0) <= hyp_tol]
    if bad:
        raise NonHyperbolicError(f"multipliers on the unit circle: {bad}")
    resid = np.linalg.norm(m - (v @ np.diag(w) @ np.linalg.inv(v)).real)
    if resid > 1e-8 * max(1.0, np.linalg.norm(m)):
        raise NonDiagonalizableError(
            f"monodromy is not diagonalizable within tolerance (residual {resid:.2e})"
        )

    scale = np.max(np.abs(w))
    is_real = np.abs(w.imag) <= REAL_EIG_TOL * max(1.0, scale)

    # branch-correct eigenvalue logarithms: principal for complex and positive
    # real multipliers, |nu| for negative real ones (the monodromy-squared trick)
    mu = np.empty(n, dtype=complex)
    for i, x in enumerate(w):
        if is_real[i] and x.real < 0:
            mu[i] = math.log(abs(x))
        else:
            mu[i] = np.log(x)
    gen = (v @ np.diag(mu) @ np.linalg.inv(v)) / period
    if np.max(np.abs(gen.imag)) > 1e-7 * max(1.0, np.linalg.norm(gen.real)):
        raise FloquetError("generator failed to come out real")
    gen = gen.real

    # canonical listing: stable reals, stable pairs, unstable reals, unstable pairs
    records = []  # (nu complex, angle, chi, omega, twist)
    used = np.zeros(n, dtype=bool)
    for i, x in enumerate(w):
        if used[i]:
            continue
        if is_real[i]:
            used[i] = True
            nu = float(x.real)
            chi = math.log(abs(nu)) / period
            twist = HALF_TWIST if nu < 0 else ZERO_TWIST
            records.append([(complex(nu), 0.0 if nu > 0 else math.pi, chi, 0.0, twist)])
        else:
            if x.imag < 0:
                continue  # handled with its conjugate
            used[i] = True
            j = next(
                k for k in range(n)
                if not used[k] and not is_real[k]
                and abs(w[k] - np.conj(x)) <= 1e-7 * max(1.0, scale)
            )
            used[j] = True
            theta = float(np.angle(x))
            chi = math.log(abs(x)) / period
            omega = theta / period
            records.append([
                (complex(x), theta, chi, omega, ZERO_TWIST),
                (complex(np.conj(x)), -theta, chi, -omega, ZERO_TWIST),
            ])

    def block_key(block):
        nu, theta, chi, omega, twist = block[0]
        return (chi >= 0, len(block) > 1, chi, abs(omega))

    records.sort(key=block_key)
    flat = [entry for block in records for entry in block]

    lyap = tuple(e[2] for e in flat)
    twists = tuple(e[4] for e in flat)
    neg_stable = sum(1 for e in flat if e[2] < 0 and e[4] == HALF_TWIST)
    neg_unstable = sum(1 for e in flat if e[2] > 0 and e[4] == HALF_TWIST)

    return FloquetDecomposition(
        period=float(period),
        multipliers=tuple(e[0] for e in flat),
        angles=tuple(e[1] for e in flat),
        lyapunov=lyap,
        frequencies=tuple(e[3] for e in flat),
        twists=twists,
        generator=gen,
        orientable_u=(neg_unstable % 2 == 0),
        orientable_s=(neg_stable % 2 == 0),
        det_positive=bool(np.linalg.det(m) > 0),
    )


class FloquetFrame:
    """Dense access to U(theta, 0), A and the 2P-periodic factor P(theta, 0).

    Solves the fundamental system once over [0, 2P] with dense output; the
    factor is evaluated by wrapping.  ``expm_generator(t)`` is exp(t*A).
    """

    def __init__(self, coeff: PeriodicCoefficient, tol: float = DEFAULT_TOL):
        self.coeff = coeff
        self.period = coeff.period
        self.tol = tol
        _, path = _integrate_matrix(coeff, 0.0, 2.0 * coeff.period, tol, dense=True)
        self._path = path
        m = path(coeff.period)
        if np.linalg.det(m) <= 0:
            raise FloquetError("monodromy determinant <= 0")
        self.monodromy = m
        self.decomposition = floquet_decompose(m, coeff.period)
        self.generator = self.decomposition.generator

    def fundamental(self, theta: float) -> np.ndarray:
        """U(theta, 0) for any theta, via U(theta + 2P,0) = U(theta,0) M^2."""
        two_p = 2.0 * self.period
        k = math.floor(theta / two_p)
        base = self._path(theta - k * two_p)
        if k == 0:
            return base
        m2 = self.monodromy @ self.monodromy
        pw = np.linalg.matrix_power(m2, abs(k))
        return base @ (pw if k > 0 else np.linalg.inv(pw))

    def expm_generator(self, t: float) -> np.ndarray:
        from scipy.linalg import expm

        return expm(t * self.generator)

    def periodic_factor(self, theta: float) -> np.ndarray:
        return self.fundamental(theta) @ self.expm_generator(-theta)


def periodic_factor(coeff: PeriodicCoefficient, theta: float,
                    tol: float = DEFAULT_TOL) -> np.ndarray:
    """P(theta, 0) = U(theta,0) exp(-theta A); 2P-periodic, diag(+-1) at theta=P."""
    return FloquetFrame(coeff, tol).periodic_factor(theta)


def connection_monodromy(coeff: PeriodicCoefficient, tol: float = DEFAULT_TOL):
    """Parallel-transport holonomy of a connection coefficient T(theta).

    Sections are parallel when ds/dtheta = -T(theta) s; the holonomy is the
    transport over one period.  Returns (M, gammas) with the holonomy
    eigenvalues written as exp(2*i*pi*gamma_j), real parts normalized to
    [0, 1).  Anti-Hermitian T gives a unitary holonomy and real gammas.
    """
    m = _integrate_matrix(coeff, 0.0, coeff.period, tol, sign=-1.0)
    w, v = np.linalg.eig(m)
    resid = np.linalg.norm(m - v @ np.diag(w) @ np.linalg.inv(v))
    if resid > 1e-8 * max(1.0, np.linalg.norm(m)):
        raise NonDiagonalizableError(
            f"holonomy is not diagonalizable within tolerance (residual {resid:.2e})"
        )
    gammas = []
    for x in w:
        g = np.log(complex(x)) / (2j * math.pi)
        re = g.real - math.floor(g.real)
        if 1.0 - re < 1e-9:  # numerical wrap-around of the [0, 1) window
            re = 0.0
        im = g.imag
        if abs(im) < 1e-9:
            # integration residue; exact zero keeps unitary holonomies unitary
            im = 0.0
        gammas.append(complex(re, im))
    gammas.sort(key=lambda g: (g.real, g.imag))
    return m, gammas
