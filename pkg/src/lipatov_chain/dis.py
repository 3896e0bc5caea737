"""Map chain entanglement results onto deep-inelastic-scattering kinematics.

All lengths and times are in GeV⁻¹ (natural units); entropies in nats.
Conversion to femtometres happens only through :func:`to_fm`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError

HBAR_C_GEV_FM = 0.1973269804
EXPERIMENTAL_DELTA = 0.3


@dataclass(frozen=True)
class DISKinematics:
    m: float
    x: float
    Q: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"m must be positive, got {self.m}")
        if not 0 < self.x < 1:
            raise DomainError(f"x must lie in (0, 1), got {self.x}")
        if not self.Q > 0:
            raise DomainError(f"Q must be positive, got {self.Q}")


@dataclass(frozen=True)
class DISPrediction:
    ell: float
    r: float
    tau: float
    t_c: float
    S: float | None = None
    delta: float | None = None

    def to_record(self):
        return asdict(self)


def to_fm(length_gev_inv):
    return length_gev_inv * HBAR_C_GEV_FM


def probe_geometry(k: DISKinematics) -> DISPrediction:
    ell = 1.0 / (k.m * k.x)
    return DISPrediction(ell=ell, r=1.0 / k.Q, tau=1.0 / k.m, t_c=ell)


def entropy_at_x(c, x):
    if not 0 < x <= 1:
        raise DomainError(f"x must lie in (0, 1], got {x}")
    return (c / 3.0) * np.log(1.0 / x)


def entropy_vs_time(c, m, t, x):
    """``(c/3) ln(mt)`` up to ``t_c = 1/(mx)``, then a flat plateau."""
    if not m > 0 or not 0 < x < 1:
        raise DomainError("need m > 0 and 0 < x < 1")
    if t < 1.0 / m:
        raise DomainError(f"t={t} precedes the characteristic time 1/m={1 / m}")
    t_c = 1.0 / (m * x)
    if t >= t_c:
        return entropy_at_x(c, x)
    return (c / 3.0) * np.log(m * t)


def structure_function_exponent(c):
    if not c > 0:
        raise DomainError("central charge must be positive")
    delta = c / 3.0
    note = (
        f"delta = {delta:.4f} vs experimental ~{EXPERIMENTAL_DELTA}: "
        f"difference {delta - EXPERIMENTAL_DELTA:+.4f}"
    )
    return delta, note


def predict(k: DISKinematics, c) -> DISPrediction:
    g = probe_geometry(k)
    delta, _ = structure_function_exponent(c)
    return DISPrediction(g.ell, g.r, g.tau, g.t_c, entropy_at_x(c, k.x), delta)
