"""Green's functions for a vertical current element above a half-space.

Three kernels share one code path: free space, PEC ground (a single
positive image) and a lossy dielectric ground represented by a
quasi-dynamic image weighted by ``-K_eps`` plus ``M`` complex images fitted
with Prony's method. A direct Sommerfeld integration is provided as an
independent reference for the complex-image approximation.

Time convention is ``exp(+j omega t)``; passive media have ``Im(eps_r) <= 0``.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .errors import (BranchViolation, IllConditionedPrediction, NonConvergentTail,
                     PoleAtMinusOne, RankDeficient, SingularCoincidentPoints)

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class HalfSpace:
    eps_r: complex

    def __post_init__(self):
        eps = complex(self.eps_r)
        if eps.imag > 0:
            raise ValueError(f"eps_r={eps} is active; passive media need Im(eps_r) <= 0")
        if eps == -1:
            raise PoleAtMinusOne("eps_r = -1 is a pole of K_eps")
        object.__setattr__(self, "eps_r", eps)

    @property
    def K_eps(self):
        return k_eps(self.eps_r)


def k_eps(eps_r):
    eps_r = complex(eps_r)
    if eps_r == -1:
        raise PoleAtMinusOne("K_eps has a pole at eps_r = -1")
    return (1 - eps_r) / (1 + eps_r)


def distance_direct(rho, z, zp):
    return np.sqrt(np.square(rho) + np.square(np.subtract(z, zp)))


def distance_image(rho, z, zp):
    return np.sqrt(np.square(rho) + np.square(np.add(z, zp)))


def distance_complex_image(rho, z, zp, v):
    # principal branch, Re >= 0
    w = np.add(z, zp) - 1j * np.asarray(v)
    return np.sqrt(np.square(rho) + w * w + 0j)


def _green(d, k0):
    return np.exp(-1j * k0 * d) / (FOUR_PI * d)


def _check_nonzero(d):
    if np.any(np.asarray(d) == 0):
        raise SingularCoincidentPoints("source and observation points coincide")


def g_free(rho, z, zp, k0):
    d = distance_direct(rho, z, zp)
    _check_nonzero(d)
    return _green(d, k0)


def g_pec(rho, z, zp, k0):
    d = distance_direct(rho, z, zp)
    _check_nonzero(d)
    return _green(d, k0) + _green(distance_image(rho, z, zp), k0)


@dataclass(frozen=True)
class ComplexImageSet:
    """Quasi-dynamic coefficient and complex images ``(u_m, v_m)``.

    ``v`` is in metres. The reflected kernel is
    ``-K_eps g(d_i) + sum_m u_m g(d_cm)``.
    """

    K_eps: complex
    u: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    fit_residual: float = 0.0
    eps_r: complex | None = None
    k0: float | None = None
    T0: float | None = None
    Ns: int | None = None
    M_requested: int | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex).ravel()
        v = np.asarray(self.v, dtype=complex).ravel()
        if u.shape != v.shape:
            raise ValueError("u and v must have the same length")
        if not np.all(np.isfinite(u)) or not np.all(np.isfinite(v)):
            raise ValueError("complex image coefficients must be finite")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "K_eps", complex(self.K_eps))

    @property
    def M(self):
        return len(self.u)

    @classmethod
    def pec(cls):
        return cls(K_eps=-1.0)

    @classmethod
    def free(cls):
        return cls(K_eps=0.0)

    def reflected_terms(self):
        """``(coefficient, displacement)`` pairs of the reflected kernel."""
        terms = [(-self.K_eps, 0j)] if self.K_eps != 0 else []
        terms += list(zip(self.u, self.v))
        return terms

    def to_dict(self):
        pair = lambda c: [float(np.real(c)), float(np.imag(c))]
        return {
            "K_eps": pair(self.K_eps),
            "u": [pair(c) for c in self.u],
            "v": [pair(c) for c in self.v],
            "M": self.M,
            "fit_residual": float(self.fit_residual),
            "eps_r": None if self.eps_r is None else pair(self.eps_r),
            "k0": self.k0,
            "T0": self.T0,
            "Ns": self.Ns,
            "M_requested": self.M_requested,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        cplx = lambda p: complex(p[0], p[1])
        if d.get("M") is not None and d["M"] != len(d["u"]):
            raise ValueError("M does not match the number of images")
        return cls(
            K_eps=cplx(d["K_eps"]),
            u=np.array([cplx(p) for p in d["u"]], dtype=complex),
            v=np.array([cplx(p) for p in d["v"]], dtype=complex),
            fit_residual=d.get("fit_residual", 0.0),
            eps_r=None if d.get("eps_r") is None else cplx(d["eps_r"]),
            k0=d.get("k0"), T0=d.get("T0"), Ns=d.get("Ns"),
            M_requested=d.get("M_requested"),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def reflected_kernel(rho, w, k0, terms):
    """Reflected kernel as a function of ``w = z + z'``."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(np.broadcast(np.asarray(rho), w).shape, dtype=complex)
    rho2 = np.square(rho)
    for coef, v in terms:
        d = np.sqrt(rho2 + (w - 1j * v) ** 2 + 0j)
        out = out + coef * _green(d, k0)
    return out


def g_lossy(rho, z, zp, k0, images: ComplexImageSet):
    d = distance_direct(rho, z, zp)
    _check_nonzero(d)
    g = _green(d, k0) - images.K_eps * _green(distance_image(rho, z, zp), k0)
    for um, vm in zip(images.u, images.v):
        g = g + um * _green(distance_complex_image(rho, z, zp, vm), k0)
    return g


# -- spectral domain ---------------------------------------------------------

def kz_lower(kz0, eps_r, k0):
    """Vertical wavenumber in the ground, branch ``Im <= 0``."""
    r = np.sqrt(eps_r * k0**2 - (k0**2 - np.asarray(kz0, dtype=complex) ** 2))
    flip = (r.imag > 0) | ((r.imag == 0) & (r.real < 0))
    return np.where(flip, -r, r)


def tm_reflection_spectral(kz0, eps_r, k0):
    """TM reflection coefficient seen by a vertical electric dipole."""
    kz0 = np.asarray(kz0, dtype=complex)
    if np.any(kz0.imag > 1e-12 * k0):
        raise BranchViolation("kz0 must lie on the decaying sheet, Im(kz0) <= 0")
    kz1 = kz_lower(kz0, eps_r, k0)
    if np.any(kz1.imag > 0):
        raise BranchViolation("Im(kz1) > 0")
    return (eps_r * kz0 - kz1) / (eps_r * kz0 + kz1)


def prony(values, M, dt=1.0, rank_tol=1e-11, cond_limit=1e13, polish=True):
    """Classical least-squares Prony fit of uniformly spaced samples.

    Returns ``(amplitudes, exponents)`` such that
    ``values[i] ~ sum_m amplitudes[m] * exp(exponents[m] * i * dt)``.
    With ``polish`` the Prony estimate seeds a Levenberg-Marquardt refinement
    of the exponents (amplitudes eliminated by linear least squares), which
    is kept only when it lowers the sample residual.
    """
    y = np.asarray(values, dtype=complex)
    Ns = len(y)
    if M < 1:
        raise ValueError("M must be >= 1")
    if Ns < 2 * M:
        raise ValueError(f"need at least 2M={2 * M} samples, got {Ns}")
    # forward linear prediction: y[i+M] = -sum_j c_j y[i+M-1-j]
    A = np.column_stack([y[M - 1 - j: Ns - 1 - j] for j in range(M)])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0:
        raise RankDeficient("samples are identically zero", 0)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    if rank < M:
        raise RankDeficient(f"prediction matrix has rank {rank} < M={M}", rank)
    cond = sv[0] / sv[-1]
    if cond > cond_limit:
        raise IllConditionedPrediction("linear-prediction system is ill conditioned", cond)
    c = np.linalg.lstsq(A, -y[M:], rcond=None)[0]
    poles = np.roots(np.concatenate([[1.0], c]))
    exponents = np.log(poles.astype(complex)) / dt
    t = np.arange(Ns) * dt
    amps, res = _amplitudes(t, exponents, y)
    if polish:
        e2, a2, r2 = _polish(t, exponents, y)
        if r2 < res:
            exponents, amps = e2, a2
    return amps, exponents


def _amplitudes(t, exponents, y):
    V = np.exp(np.outer(t, exponents))
    a = np.linalg.lstsq(V, y, rcond=None)[0]
    return a, float(np.linalg.norm(V @ a - y))


def _polish(t, exponents, y):
    M = len(exponents)

    def resid(p):
        e = p[:M] + 1j * p[M:]
        V = np.exp(np.outer(t, e))
        r = V @ np.linalg.lstsq(V, y, rcond=None)[0] - y
        return np.concatenate([r.real, r.imag])

    p0 = np.concatenate([exponents.real, exponents.imag])
    try:
        sol = optimize.least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    except (ValueError, np.linalg.LinAlgError):
        return exponents, None, np.inf
    e = sol.x[:M] + 1j * sol.x[M:]
    if not np.all(np.isfinite(e)):
        return exponents, None, np.inf
    a, r = _amplitudes(t, e, y)
    return e, a, r


def sampling_path(k0, T0, Ns):
    t = np.linspace(0.0, T0, Ns)
    return t, k0 * ((1 - t / T0) - 1j * t)


def prony_fit(spec, hs: HalfSpace, M=5, T0=5.0, Ns=100, strict=False):
    """Fit the complex images of ``hs`` at the frequency of ``spec``.

    The residual spectral function ``Gamma(kz0) + K_eps`` is sampled on a
    one-level path from ``kz0 = k0`` to ``kz0 = -j k0 T0`` and fitted by
    ``sum u_m exp(-v_m kz0)``, which the Sommerfeld identity turns into point
    sources at ``z + z' - j v_m``. When the samples support fewer than ``M``
    exponentials the fit is reduced to the recoverable count unless
    ``strict`` is set.
    """
    k0 = spec.k0
    K = hs.K_eps
    t, kz0 = sampling_path(k0, T0, Ns)
    F = tm_reflection_spectral(kz0, hs.eps_r, k0) + K
    meta = dict(eps_r=hs.eps_r, k0=k0, T0=T0, Ns=Ns, M_requested=M)
    if np.max(np.abs(F)) <= 1e-13:
        return ComplexImageSet(K_eps=K, fit_residual=float(np.max(np.abs(F))), **meta)
    dt = t[1] - t[0]
    m = M
    while True:
        try:
            amps, s = prony(F, m, dt)
            break
        except RankDeficient as exc:
            if strict or exc.recoverable == 0:
                raise
            log.warning("Prony fit reduced from M=%d to %d", m, exc.recoverable)
            m = exc.recoverable
    # exp(s t) = exp(-v kz0(t)) up to a constant: kz0 = k0 - k0 t (1/T0 + j)
    v = s / (k0 * (1.0 / T0 + 1j))
    u = amps * np.exp(v * k0)
    fitted = np.exp(np.outer(t, s)) @ amps
    resid = float(np.max(np.abs(fitted - F)) / np.max(np.abs(F)))
    return ComplexImageSet(K_eps=K, u=u, v=v, fit_residual=resid, **meta)


def sommerfeld_oracle(rho, z, zp, k0, eps_r, rtol=1e-9, atol=1e-13, max_chunks=4000):
    """Reflected part of the half-space kernel by direct Sommerfeld integration.

    The quasi-static limit ``-K_eps`` of the reflection coefficient is
    removed and added back in closed form; the remainder is integrated along
    the real ``k_rho`` axis with the substitutions ``k_rho = k0 sin(theta)``
    below ``k0`` and ``k_rho = k0 cosh(psi)`` above it, which remove the
    ``1/kz0`` branch-point singularity. Above ``k0`` the range is partitioned
    at the zeros of ``J0(k_rho rho)`` and summed until the chunks fall below
    tolerance.
    """
    w = float(z) + float(zp)
    if not w > 0:
        raise ValueError("z + z' must be positive")
    eps_r = complex(eps_r)
    K = k_eps(eps_r)
    rho = float(rho)
    di = np.hypot(rho, w)
    quasi = -K * _green(di, k0)
    if eps_r == 1:
        return 0j

    def resid(kz0):
        return tm_reflection_spectral(kz0, eps_r, k0) + K

    def low(th):
        return resid(k0 * np.cos(th)) * np.exp(-1j * k0 * np.cos(th) * w) \
            * special.j0(k0 * np.sin(th) * rho) * k0 * np.sin(th) / 1j

    def high(ps):
        return resid(-1j * k0 * np.sinh(ps)) * np.exp(-k0 * np.sinh(ps) * w) \
            * special.j0(k0 * np.cosh(ps) * rho) * k0 * np.cosh(ps)

    errs = []

    def cquad(fn, a, b):
        val, err = integrate.quad(fn, a, b, complex_func=True, limit=200,
                                  epsabs=atol, epsrel=rtol)
        errs.append(err)
        return val

    # a near-real surface-wave pole sits just below k_rho = k0
    low_val = cquad(low, 0.0, 1.2) + cquad(low, 1.2, 1.45) + cquad(low, 1.45, np.pi / 2)

    # decay exp(-k0 sinh(psi) w): stop where it is below 1e-16
    psi_end = np.arcsinh(37.0 / (k0 * w))
    if rho > 0:
        zeros = special.jn_zeros(0, max_chunks) / (k0 * rho)
        zeros = zeros[zeros > 1.0]
        brk = np.arccosh(zeros)
        brk = brk[brk < psi_end]
    else:
        brk = np.zeros(0)
    edges = np.concatenate([[0.0], np.linspace(0.0, min(psi_end, 0.5), 4)[1:], brk, [psi_end]])
    edges = np.unique(edges)
    if len(edges) > max_chunks:
        raise NonConvergentTail("too many Bessel chunks", low_val, np.inf)
    high_val = 0j
    for a, b in zip(edges[:-1], edges[1:]):
        high_val += cquad(high, a, b)
    total = low_val + high_val
    # beyond psi_end the integrand is bounded by an exponential with rate
    # k0 w cosh(psi_end); add the quadrature error estimates
    tail = abs(resid(-1j * k0 * np.sinh(psi_end))) * np.exp(-k0 * np.sinh(psi_end) * w) \
        * k0 * np.cosh(psi_end) / (k0 * w * np.cosh(psi_end))
    bound = tail + float(np.sum(np.abs(errs)))
    if bound > max(atol, 1e-6 * abs(total)):
        raise NonConvergentTail("Sommerfeld tail did not converge", total, bound)
    return quasi + total / FOUR_PI
