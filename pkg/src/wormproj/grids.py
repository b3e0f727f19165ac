"""Tensor grids on D'_beta and sampled functions on D'_beta or D_beta.

Grid coordinates are (x, u, s, theta) with z1 = x + i(u + s), z2 = e^{s/2 + i theta}.
The D_beta grid is the image under Psi, with weights multiplied by |e^{z1}|^2 = e^{2x}
(the Jacobian of Psi), so both carry the same quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import PointC2, WormParams
from .numerics import ConfigurationError, GridSpec, s_rule, theta_rule, u_rule, x_rule

DOMAIN_TAGS = ("D_beta", "D_beta_prime")


class StructureError(ValueError):
    """Values do not fit the tensor grid (e.g. not closed under z2-rotation)."""


@dataclass(frozen=True, eq=False)
class DPrimeGrid:
    params: WormParams
    spec: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        x, wx = x_rule(self.params, self.spec)
        u, wu = u_rule(self.spec)
        s, ws = s_rule(self.params, self.spec)
        th, wt = theta_rule(self.spec)
        for name, val in dict(x=x, wx=wx, u=u, wu=wu, s=s, ws=ws, theta=th, wt=wt).items():
            object.__setattr__(self, name, val)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.x.size, self.u.size, self.s.size, self.theta.size)

    @property
    def y(self) -> np.ndarray:
        """Im z1 on the (u, s) plane, shape (nu, ns)."""
        return self.u[:, None] + self.s[None, :]

    @property
    def z1(self) -> np.ndarray:
        return self.x[:, None, None, None] + 1j * self.y[None, :, :, None]

    @property
    def z2(self) -> np.ndarray:
        return np.exp(0.5 * self.s[None, None, :, None] + 1j * self.theta[None, None, None, :])

    @property
    def weights(self) -> np.ndarray:
        return (
            self.wx[:, None, None, None]
            * self.wu[None, :, None, None]
            * self.ws[None, None, :, None]
            * self.wt[None, None, None, :]
        )

    def nodes(self, domain_tag: str = "D_beta_prime") -> PointC2:
        z1, z2 = np.broadcast_arrays(self.z1, self.z2)
        if domain_tag == "D_beta":
            z1 = np.exp(z1)
        return PointC2(z1, z2)

    def measure(self, domain_tag: str) -> np.ndarray:
        w = self.weights
        if domain_tag == "D_beta":
            w = w * np.exp(2.0 * self.x)[:, None, None, None]
        return np.broadcast_to(w, self.shape)

    def refined(self, factor: float = 1.5) -> "DPrimeGrid":
        return DPrimeGrid(self.params, self.spec.refined(factor))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function sampled on a DPrimeGrid, viewed on D'_beta or, through Psi, on D_beta.

    ``func`` optionally keeps the generating callable (taking a PointC2 of the
    tagged domain) so that derivatives can be taken by finite differences.
    """

    grid: DPrimeGrid
    values: np.ndarray
    domain_tag: str = "D_beta"
    func: Callable | None = None

    def __post_init__(self):
        if self.domain_tag not in DOMAIN_TAGS:
            raise ConfigurationError(f"unknown domain tag {self.domain_tag!r}")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise StructureError(f"values of shape {v.shape} do not match the grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, func: Callable, grid: DPrimeGrid, domain_tag: str = "D_beta") -> "GridFunction":
        vals = func(grid.nodes(domain_tag))
        return cls(grid, np.broadcast_to(vals, grid.shape).astype(complex), domain_tag, func)

    @property
    def nodes(self) -> PointC2:
        return self.grid.nodes(self.domain_tag)

    @property
    def weights(self) -> np.ndarray:
        return self.grid.measure(self.domain_tag)

    def inner(self, other: "GridFunction") -> complex:
        self._check_compatible(other)
        return complex(np.sum(self.weights * self.values * np.conj(other.values)))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))

    def _check_compatible(self, other: "GridFunction") -> None:
        if other.grid is not self.grid or other.domain_tag != self.domain_tag:
            raise StructureError("grid functions live on different grids or domains")

    def with_values(self, values, func: Callable | None = None) -> "GridFunction":
        return GridFunction(self.grid, values, self.domain_tag, func)

    def to_prime(self) -> "GridFunction":
        """The isometry f -> (f o Psi) e^{z1} onto L^2(D'_beta)."""
        if self.domain_tag == "D_beta_prime":
            return self
        return GridFunction(self.grid, self.values * np.exp(self.grid.z1), "D_beta_prime")

    def to_beta(self) -> "GridFunction":
        if self.domain_tag == "D_beta":
            return self
        return GridFunction(self.grid, self.values * np.exp(-self.grid.z1), "D_beta")

    def to(self, domain_tag: str) -> "GridFunction":
        return self.to_beta() if domain_tag == "D_beta" else self.to_prime()

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: complex) -> "GridFunction":
        return self.with_values(self.values * c)

    __rmul__ = __mul__
