"""Pair interaction potentials.

A PotentialSpec holds Phi and Phi' as functions of the rescaled separation
q = r/sigma.  The built-in power law is -Phi'(q) = q^(-p), Phi(q) =
q^(1-p)/(p-1) for p > 1; arbitrary (Phi, Phi') callables are accepted for
library use.  Phi' must be locally Lipschitz on (0, inf), and nonincreasing
when used with the scaling certificates.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class PotentialSpec:
    kind: str  # "power_law" | "custom" | "free"
    p: Optional[float] = None
    phi_fn: Optional[Callable] = field(default=None, repr=False)
    dphi_fn: Optional[Callable] = field(default=None, repr=False)

    @classmethod
    def power_law(cls, p: float) -> "PotentialSpec":
        """-Phi'(q) = q^(-p) with p > 1, so Phi(q) = q^(1-p)/(p-1)."""
        p = float(p)
        if not np.isfinite(p) or p <= 1.0:
            raise ValueError(f"power-law exponent must satisfy p > 1, got {p}")
        return cls(kind="power_law", p=p)

    @classmethod
    def custom(cls, phi: Callable, dphi: Callable) -> "PotentialSpec":
        """User-supplied (Phi, Phi'); trusted for local Lipschitz continuity."""
        return cls(kind="custom", phi_fn=phi, dphi_fn=dphi)

    @classmethod
    def free(cls) -> "PotentialSpec":
        """Zero interaction (Phi = Phi' = 0): free flight."""
        return cls(kind="free")

    @property
    def is_power_law(self) -> bool:
        return self.kind == "power_law"

    @property
    def descriptor(self) -> str:
        if self.kind == "power_law":
            return f"power_law p={self.p:.17g}"
        return self.kind

    def phi(self, q):
        """Phi evaluated at rescaled separation(s) q > 0."""
        q = np.asarray(q, dtype=np.float64)
        if self.kind == "power_law":
            return q ** (1.0 - self.p) / (self.p - 1.0)
        if self.kind == "free":
            return np.zeros_like(q)
        return np.asarray(self.phi_fn(q), dtype=np.float64)

    def dphi(self, q):
        """Phi' evaluated at rescaled separation(s) q > 0."""
        q = np.asarray(q, dtype=np.float64)
        if self.kind == "power_law":
            return -(q**-self.p)
        if self.kind == "free":
            return np.zeros_like(q)
        return np.asarray(self.dphi_fn(q), dtype=np.float64)
