"""Steady-state optical response of a laser-driven four-level center.

Four fields couple the levels (energy order l < n < g < m) in a closed
loop: two strong control fields dress the l-g and n-m transitions, a
weak signal probes l-m, and the idler generated on n-g closes the
frequency loop (omega_idler = omega_c1 + omega_c2 - omega_signal).  In
the rotating frame fixed by that loop the Hamiltonian is time
independent, so the density matrix obeys d(rho)/dt = L vec(rho) with a
16x16 generator and everything reduces to small dense linear algebra:

* :func:`steady_state` solves L vec(rho) = 0 with unit trace,
* :func:`probe_response` perturbs the steady state to first order in
  the weak signal/idler pair and extracts the four response
  coefficients that drive the coupled-amplitude slab equations,
* :func:`phase_mismatch` combines the dispersive parts of all four
  waves into the wave-vector mismatch per resonant absorption length.

All Rabi frequencies, detunings and relaxation constants are angular
rates in s^-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "LVL_L",
    "LVL_N",
    "LVL_G",
    "LVL_M",
    "SingularModel",
    "FourLevelParams",
    "DriveConfig",
    "ResponseSet",
    "default_params",
    "default_drive",
    "build_hamiltonian",
    "build_liouvillian",
    "steady_state",
    "probe_response",
    "phase_mismatch",
]

# Level indices in energy order: l is the stable ground level.
LVL_L, LVL_N, LVL_G, LVL_M = 0, 1, 2, 3

# vec(rho) uses row-major flattening, rho_ij -> 4*i + j.
_POP_IDX = [4 * k + k for k in range(4)]

# Probe solves with a condition estimate above this are flagged, not rejected.
ILL_CONDITION_LIMIT = 1e12

# Relative residual above which a steady-state solve is treated as singular.
_RESIDUAL_LIMIT = 1e-8


class SingularModel(RuntimeError):
    """The relaxation/drive structure does not pin a unique steady state."""


@dataclass(frozen=True)
class FourLevelParams:
    """Relaxation rates, wavelengths and normalization of one center.

    ``Gamma_n``, ``Gamma_g``, ``Gamma_m`` are total population decay
    rates of the excited levels (the ground level l is stable).
    ``gamma_xy`` are partial transfer rates x -> y; whatever part of a
    total decay is not assigned to a listed branch drains to the ground
    level, and n decays entirely to l.  ``Gamma_xy`` are homogeneous
    half-widths of the six coherences, applied directly as off-diagonal
    decay rates (any excess over the lifetime limit is pure dephasing).

    ``lambda4``/``lambda2`` are the signal/idler vacuum wavelengths used
    for the frequency weights of the phase mismatch; ``lambda1``/
    ``lambda3`` may pin the control frequencies, otherwise the loop
    constraint is closed with the symmetric split omega1 = omega3.
    ``idler_alpha_ratio`` is the resonant-absorption ratio of the idler
    vs the signal transition (absorbs the unknown dipole-moment ratio).
    """

    Gamma_n: float
    Gamma_g: float
    Gamma_m: float
    gamma_gl: float
    gamma_gn: float
    gamma_ml: float
    gamma_mn: float
    Gamma_lg: float
    Gamma_lm: float
    Gamma_ng: float
    Gamma_nm: float
    Gamma_gm: float
    Gamma_ln: float
    lambda4: float = 480e-9
    lambda2: float = 756e-9
    lambda1: float | None = None
    lambda3: float | None = None
    idler_alpha_ratio: float = 1.0

    def __post_init__(self) -> None:
        rates = {
            "Gamma_n": self.Gamma_n,
            "Gamma_g": self.Gamma_g,
            "Gamma_m": self.Gamma_m,
            "gamma_gl": self.gamma_gl,
            "gamma_gn": self.gamma_gn,
            "gamma_ml": self.gamma_ml,
            "gamma_mn": self.gamma_mn,
            "Gamma_lg": self.Gamma_lg,
            "Gamma_lm": self.Gamma_lm,
            "Gamma_ng": self.Gamma_ng,
            "Gamma_nm": self.Gamma_nm,
            "Gamma_gm": self.Gamma_gm,
            "Gamma_ln": self.Gamma_ln,
        }
        for name, value in rates.items():
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.gamma_gl + self.gamma_gn > self.Gamma_g:
            raise ValueError("partial rates gamma_gl + gamma_gn exceed Gamma_g")
        if self.gamma_ml + self.gamma_mn > self.Gamma_m:
            raise ValueError("partial rates gamma_ml + gamma_mn exceed Gamma_m")
        # Half-widths below the lifetime limit would mean negative pure dephasing.
        decay = {LVL_L: 0.0, LVL_N: self.Gamma_n, LVL_G: self.Gamma_g, LVL_M: self.Gamma_m}
        limits = {
            "Gamma_lg": (LVL_L, LVL_G),
            "Gamma_lm": (LVL_L, LVL_M),
            "Gamma_ng": (LVL_N, LVL_G),
            "Gamma_nm": (LVL_N, LVL_M),
            "Gamma_gm": (LVL_G, LVL_M),
            "Gamma_ln": (LVL_L, LVL_N),
        }
        for name, (i, j) in limits.items():
            if rates[name] < 0.5 * (decay[i] + decay[j]) - 1e-12 * rates[name]:
                raise ValueError(f"{name} is below the lifetime limit of its levels")
        for name in ("lambda4", "lambda2"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("lambda1", "lambda3"):
            value = getattr(self, name)
            if value is not None and not value > 0.0:
                raise ValueError(f"{name} must be positive when given")
        if not self.idler_alpha_ratio > 0.0:
            raise ValueError("idler_alpha_ratio must be positive")

    def coherence_widths(self) -> np.ndarray:
        """Symmetric 4x4 matrix of coherence half-widths (zero diagonal)."""
        w = np.zeros((4, 4))
        w[LVL_L, LVL_G] = w[LVL_G, LVL_L] = self.Gamma_lg
        w[LVL_L, LVL_M] = w[LVL_M, LVL_L] = self.Gamma_lm
        w[LVL_N, LVL_G] = w[LVL_G, LVL_N] = self.Gamma_ng
        w[LVL_N, LVL_M] = w[LVL_M, LVL_N] = self.Gamma_nm
        w[LVL_G, LVL_M] = w[LVL_M, LVL_G] = self.Gamma_gm
        w[LVL_L, LVL_N] = w[LVL_N, LVL_L] = self.Gamma_ln
        return w

    def frequency_ratios(self) -> tuple[float, float, float]:
        """Frequency weights (omega1, omega2, omega3) / omega4.

        The idler weight follows from the wavelengths.  The control
        weights are taken from ``lambda1``/``lambda3`` when supplied
        (either one suffices, the four-wave loop fixes the other);
        otherwise the loop sum is split symmetrically between the two
        controls.
        """
        w2 = self.lambda4 / self.lambda2
        if self.lambda1 is not None:
            w1 = self.lambda4 / self.lambda1
            w3 = self.lambda4 / self.lambda3 if self.lambda3 is not None else 1.0 + w2 - w1
        elif self.lambda3 is not None:
            w3 = self.lambda4 / self.lambda3
            w1 = 1.0 + w2 - w3
        else:
            w1 = w3 = 0.5 * (1.0 + w2)
        return w1, w2, w3


@dataclass(frozen=True)
class DriveConfig:
    """Control Rabi frequencies and detunings, plus the signal detuning.

    The idler detuning is not free: the frequency loop fixes
    delta2 = delta1 + delta3 - delta4.
    """

    g1: float
    g3: float
    delta1: float
    delta3: float
    delta4: float = 0.0

    @property
    def delta2(self) -> float:
        return self.delta1 + self.delta3 - self.delta4


@dataclass
class ResponseSet:
    """Steady state plus first-order probe response of one drive setting.

    The weak signal/idler pair enters the first-order coherences as
    rho_ml = i*(a44*G4 + a42*conj(G2)) and rho_gn = i*(a22*G2 +
    a24*conj(G4)); the a-coefficients carry units of 1/rate.  The
    normalized constants are referenced to the undriven resonant signal
    absorption: ``alpha4_ratio`` is alpha4/alpha40, ``dn4_norm`` the
    dispersive counterpart, ``g4_norm``/``g2_norm`` the complex FWM
    couplings in the same units, and ``dk_over_alpha40`` the wave-vector
    mismatch per resonant absorption length.  ``dn1_norm``/``dn3_norm``
    are the control-wave dispersive parts per unit Rabi frequency (zero
    while the corresponding control is off).
    """

    rho0: np.ndarray
    a44: complex
    a42: complex
    a22: complex
    a24: complex
    alpha4_ratio: float
    alpha2_ratio: float
    dn4_norm: float
    dn2_norm: float
    dn1_norm: float
    dn3_norm: float
    g4_norm: complex
    g2_norm: complex
    dk_over_alpha40: float
    condition: float
    ill_conditioned: bool


def default_params() -> FourLevelParams:
    """Representative dye-like molecular parameter set."""
    return FourLevelParams(
        Gamma_n=20e6,
        Gamma_g=120e6,
        Gamma_m=120e6,
        gamma_gl=7e6,
        gamma_gn=4e6,
        gamma_ml=10e6,
        gamma_mn=5e6,
        Gamma_lg=1.0e12,
        Gamma_lm=1.9e12,
        Gamma_ng=1.5e12,
        Gamma_nm=1.8e12,
        Gamma_gm=5.0e10,
        Gamma_ln=1.0e10,
        lambda4=480e-9,
        lambda2=756e-9,
    )


def default_drive(params: FourLevelParams | None = None) -> DriveConfig:
    """Default control setting: 5e10 s^-1 Rabi, detuned 2.5 l-g widths."""
    p = params if params is not None else default_params()
    return DriveConfig(g1=5e10, g3=5e10, delta1=2.5 * p.Gamma_lg, delta3=2.5 * p.Gamma_lg)


def build_hamiltonian(
    params: FourLevelParams,
    drive: DriveConfig,
    g4: complex = 0j,
    g2: complex = 0j,
) -> np.ndarray:
    """Rotating-frame Hamiltonian (units of s^-1, hbar = 1).

    Level ordering (l, n, g, m); diagonal (0, -(delta1 - delta2),
    -delta1, -delta4); couplings -G1 on g-l, -G2 on g-n, -G3 on m-n,
    -G4 on m-l, each with its Hermitian conjugate.
    """
    h = np.zeros((4, 4), dtype=complex)
    h[LVL_N, LVL_N] = -(drive.delta1 - drive.delta2)
    h[LVL_G, LVL_G] = -drive.delta1
    h[LVL_M, LVL_M] = -drive.delta4
    h[LVL_G, LVL_L] = -drive.g1
    h[LVL_L, LVL_G] = -np.conj(drive.g1)
    h[LVL_G, LVL_N] = -g2
    h[LVL_N, LVL_G] = -np.conj(g2)
    h[LVL_M, LVL_N] = -drive.g3
    h[LVL_N, LVL_M] = -np.conj(drive.g3)
    h[LVL_M, LVL_L] = -g4
    h[LVL_L, LVL_M] = -np.conj(g4)
    return h


def build_liouvillian(
    params: FourLevelParams,
    drive: DriveConfig,
    g4: complex = 0j,
    g2: complex = 0j,
) -> np.ndarray:
    """16x16 generator L with d vec(rho)/dt = L vec(rho).

    Commutator part -i[H, .]; population transfer at the partial rates
    with unassigned decay drained to the ground level; coherences damped
    at exactly the listed half-widths.
    """
    h = build_hamiltonian(params, drive, g4=g4, g2=g2)
    eye = np.eye(4)
    lmat = -1j * (np.kron(h, eye) - np.kron(eye, h.T))

    def idx(i: int, j: int) -> int:
        return 4 * i + j

    flows = (
        (LVL_G, LVL_L, params.Gamma_g - params.gamma_gn),
        (LVL_G, LVL_N, params.gamma_gn),
        (LVL_M, LVL_L, params.Gamma_m - params.gamma_mn),
        (LVL_M, LVL_N, params.gamma_mn),
        (LVL_N, LVL_L, params.Gamma_n),
    )
    for src, dst, rate in flows:
        lmat[idx(dst, dst), idx(src, src)] += rate
    for level, total in ((LVL_N, params.Gamma_n), (LVL_G, params.Gamma_g), (LVL_M, params.Gamma_m)):
        lmat[idx(level, level), idx(level, level)] -= total

    widths = params.coherence_widths()
    for i in range(4):
        for j in range(4):
            if i != j:
                lmat[idx(i, j), idx(i, j)] -= widths[i, j]
    return lmat


def _trace_bordered(lmat_scaled: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Replace the redundant ground-population row by the trace row and
    equilibrate rows; returns (matrix, row_scales)."""
    a = lmat_scaled.copy()
    a[0, :] = 0.0
    a[0, _POP_IDX] = 1.0
    row_scale = np.abs(a).max(axis=1)
    row_scale[row_scale == 0.0] = 1.0
    a /= row_scale[:, None]
    return a, row_scale


def _null_space_report(lmat_scaled: np.ndarray) -> str:
    sigma = np.linalg.svd(lmat_scaled, compute_uv=False)
    dim = int(np.sum(sigma < 1e-12 * sigma[0]))
    return f"generator null space has dimension {dim} (expected 1)"


def steady_state(
    params: FourLevelParams,
    drive: DriveConfig,
    g4: complex = 0j,
    g2: complex = 0j,
) -> np.ndarray:
    """Unit-trace steady-state density matrix of the driven center.

    Probes default to zero (the contract case); nonzero ``g4``/``g2``
    solve the fully driven problem, which serves as the finite-probe
    reference for the perturbative response.

    Raises :class:`SingularModel` when the generator does not have a
    one-dimensional null space or the solution is unphysical.
    """
    lmat = build_liouvillian(params, drive, g4=g4, g2=g2)
    ls = lmat / params.Gamma_lm
    a, row_scale = _trace_bordered(ls)
    b = np.zeros(16, dtype=complex)
    b[0] = 1.0 / row_scale[0]
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        raise SingularModel(_null_space_report(ls)) from None
    residual = float(np.abs(ls @ x).max())
    if not residual < _RESIDUAL_LIMIT:
        raise SingularModel(_null_space_report(ls) + f"; residual {residual:.3e}")
    rho = x.reshape(4, 4)
    diag = np.diagonal(rho)
    if np.abs(diag.imag).max() > 1e-10 or diag.real.min() < -1e-10:
        raise SingularModel("steady state has unphysical populations")
    return rho


def probe_response(params: FourLevelParams, drive: DriveConfig) -> ResponseSet:
    """First-order response to the weak signal/idler pair.

    Solves the trace-free linear system L0 vec(rho1) = -Lp vec(rho0)
    twice (unit signal probe, then unit idler probe) and reads the
    signal (m,l) and idler (g,n) coherences of each solution.  One LU
    factorization is shared by both solves.
    """
    rho0 = steady_state(params, drive)
    v0 = rho0.reshape(16)

    scale = params.Gamma_lm
    l0 = build_liouvillian(params, drive)
    pert4 = build_liouvillian(params, drive, g4=1.0) - l0
    pert2 = build_liouvillian(params, drive, g2=1.0) - l0

    a, row_scale = _trace_bordered(l0 / scale)
    lu, piv = scipy.linalg.lu_factor(a)
    condition = float(np.linalg.cond(a))

    def solve(pert: np.ndarray) -> np.ndarray:
        b = -(pert @ v0) / scale
        b[0] = 0.0
        b /= row_scale
        return scipy.linalg.lu_solve((lu, piv), b).reshape(4, 4)

    rho1_sig = solve(pert4)
    rho1_idl = solve(pert2)
    a44 = complex(rho1_sig[LVL_M, LVL_L] / 1j)
    a24 = complex(rho1_sig[LVL_G, LVL_N] / 1j)
    a42 = complex(rho1_idl[LVL_M, LVL_L] / 1j)
    a22 = complex(rho1_idl[LVL_G, LVL_N] / 1j)

    # Control-wave dispersion per unit Rabi frequency; an absent control
    # wave contributes nothing to the mismatch.
    if drive.g1 != 0.0:
        dn1 = -params.Gamma_lg * (rho0[LVL_G, LVL_L] / (1j * drive.g1)).imag
    else:
        dn1 = 0.0
    if drive.g3 != 0.0:
        dn3 = -params.Gamma_nm * (rho0[LVL_M, LVL_N] / (1j * drive.g3)).imag
    else:
        dn3 = 0.0

    resp = ResponseSet(
        rho0=rho0,
        a44=a44,
        a42=a42,
        a22=a22,
        a24=a24,
        alpha4_ratio=params.Gamma_lm * a44.real,
        alpha2_ratio=params.Gamma_ng * a22.real,
        dn4_norm=-params.Gamma_lm * a44.imag,
        dn2_norm=-params.Gamma_ng * a22.imag,
        dn1_norm=dn1,
        dn3_norm=dn3,
        g4_norm=params.Gamma_lm * a42,
        g2_norm=params.Gamma_ng * a24,
        dk_over_alpha40=0.0,
        condition=condition,
        ill_conditioned=condition > ILL_CONDITION_LIMIT,
    )
    resp.dk_over_alpha40 = phase_mismatch(params, resp)
    return resp


def phase_mismatch(params: FourLevelParams, resp: ResponseSet) -> float:
    """Wave-vector mismatch k1 + k3 - k2 - k4 per resonant absorption length.

    Each wave contributes half its normalized dispersive part, weighted
    by its frequency relative to the signal; the idler additionally
    carries the resonant-absorption ratio kappa.  The host is assumed
    mismatch-free.
    """
    w1, w2, w3 = params.frequency_ratios()
    kappa = params.idler_alpha_ratio
    return 0.5 * (
        w1 * resp.dn1_norm
        - w2 * kappa * resp.dn2_norm
        + w3 * resp.dn3_norm
        - resp.dn4_norm
    )
