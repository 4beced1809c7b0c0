"""Gas model: species (energy levels), collision catalog and cross sections.

Indices are 0-based in code. A multi-energy-level gas is represented as a set
of species sharing one mass; a monatomic mixture is the special case with all
internal energies zero and elastic collisions only.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "SpeciesLevel",
    "CrossSectionModel",
    "HardSphereElastic",
    "AndersonMultiLevel",
    "GasModel",
    "Channel",
    "CollisionCatalog",
    "build_collision_catalog",
    "sigma_elastic_hs",
    "anderson_probability",
]


@dataclass(frozen=True)
class SpeciesLevel:
    """One species or internal energy level.

    Attributes
    ----------
    name : str
    mass : float
        Particle mass [kg].
    diameter : float
        Collision diameter [m].
    degeneracy : int
        Level degeneracy, >= 1.
    energy : float
        Internal energy of the level [J], >= 0.
    """

    name: str
    mass: float
    diameter: float
    degeneracy: int = 1
    energy: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"species {self.name!r}: mass must be positive")
        if not self.diameter > 0:
            raise ValueError(f"species {self.name!r}: diameter must be positive")
        if int(self.degeneracy) != self.degeneracy or self.degeneracy < 1:
            raise ValueError(f"species {self.name!r}: degeneracy must be an integer >= 1")
        if not self.energy >= 0:
            raise ValueError(f"species {self.name!r}: internal energy must be >= 0")


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
    return h.hexdigest()[:16]


class CrossSectionModel:
    """Isotropic differential cross sections sigma(i, j -> k, l; u) per steradian.

    Subclasses implement :meth:`sigma`. The elastic channel of a pair is the
    identity channel ``(k, l) == (i, j)``.
    """

    tag = "abstract"
    has_inelastic = False

    def sigma(self, i, j, k, l, u):
        raise NotImplementedError

    def sigma_elastic(self, i, j, u):
        return self.sigma(i, j, i, j, u)

    def kinks(self, i, j):
        """Relative speeds where sigma(i, j -> *, *) has a slope discontinuity."""
        return ()

    def fingerprint(self) -> str:
        raise NotImplementedError


class HardSphereElastic(CrossSectionModel):
    """Hard-sphere elastic scattering, sigma = (d_i + d_j)^2 / 16."""

    tag = "hard_sphere"
    has_inelastic = False

    def __init__(self, diameters: Sequence[float]):
        self.diameters = np.asarray(diameters, dtype=float)

    def sigma(self, i, j, k, l, u):
        u = np.asarray(u, dtype=float)
        if (k, l) != (i, j):
            return np.zeros_like(u)
        return np.full_like(u, sigma_elastic_hs(self.diameters[i], self.diameters[j]))

    def fingerprint(self):
        return _digest(self.tag, self.diameters.tolist())


class AndersonMultiLevel(CrossSectionModel):
    """Hard-sphere cross section times a level-transition probability.

    ``sigma(i, j -> k, l; u) = P(u) d^2 / 4`` where ``P`` distributes the
    collision over all final level pairs in proportion to the degeneracy
    weighted post-collision kinetic energy. The elastic channel is included.
    """

    tag = "anderson"
    has_inelastic = True

    def __init__(self, diameter: float, masses, energies, degeneracies):
        self.diameter = float(diameter)
        self.masses = np.asarray(masses, dtype=float)
        self.energies = np.asarray(energies, dtype=float)
        self.degeneracies = np.asarray(degeneracies, dtype=float)
        self.prefactor = self.diameter**2 / 4.0

    def _mu(self, i, j):
        mi, mj = self.masses[i], self.masses[j]
        return mi * mj / (mi + mj)

    def probability(self, i, j, k, l, u):
        """Transition probability P(i, j -> k, l) at relative speed ``u``."""
        u = np.asarray(u, dtype=float)
        mu = self._mu(i, j)
        e0 = self.energies[i] + self.energies[j]
        g = self.degeneracies
        E = self.energies
        ke = mu * u * u
        den = np.zeros_like(ke)
        for m in range(len(E)):
            for n in range(len(E)):
                den = den + g[m] * g[n] * np.maximum(ke - 2.0 * (E[m] + E[n] - e0), 0.0)
        num = g[k] * g[l] * np.maximum(ke - 2.0 * (E[k] + E[l] - e0), 0.0)
        degenerate = den <= 0.0
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(degenerate, 0.0, num / np.where(degenerate, 1.0, den))
        if (k, l) == (i, j):
            p = np.where(degenerate, 1.0, p)
        return p

    def sigma(self, i, j, k, l, u):
        return self.prefactor * self.probability(i, j, k, l, u)

    def kinks(self, i, j):
        mu = self._mu(i, j)
        e0 = self.energies[i] + self.energies[j]
        de = {float(a + b - e0) for a in self.energies for b in self.energies}
        return tuple(sorted(np.sqrt(2.0 * d / mu) for d in de if d > 0))

    def fingerprint(self):
        return _digest(self.tag, self.diameter, self.masses.tolist(),
                       self.energies.tolist(), self.degeneracies.tolist())


def sigma_elastic_hs(d_i: float, d_j: float) -> float:
    """Hard-sphere differential cross section [m^2/sr]."""
    return (d_i + d_j) ** 2 / 16.0


def anderson_probability(u, channel: "Channel", model: "GasModel"):
    """Anderson transition probability for ``channel`` at speeds ``u``."""
    xs = model.cross_section
    if not isinstance(xs, AndersonMultiLevel):
        raise TypeError("gas model does not use the Anderson cross section")
    return xs.probability(channel.i, channel.j, channel.k, channel.l, u)


@dataclass(frozen=True)
class GasModel:
    """Species table plus cross-section model."""

    species: tuple
    cross_section: CrossSectionModel = field(compare=False)

    def __post_init__(self):
        if len(self.species) < 1:
            raise ValueError("at least one species is required")
        object.__setattr__(self, "species", tuple(self.species))

    @property
    def ns(self) -> int:
        return len(self.species)

    @property
    def masses(self) -> np.ndarray:
        return np.array([s.mass for s in self.species])

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.species])

    @property
    def degeneracies(self) -> np.ndarray:
        return np.array([float(s.degeneracy) for s in self.species])

    @property
    def diameters(self) -> np.ndarray:
        return np.array([s.diameter for s in self.species])

    @property
    def names(self) -> list:
        return [s.name for s in self.species]

    @property
    def has_internal_energy(self) -> bool:
        return bool(np.any(self.energies > 0))

    @property
    def inelastic(self) -> bool:
        return self.cross_section.has_inelastic

    def reduced_mass(self, i, j) -> float:
        mi, mj = self.species[i].mass, self.species[j].mass
        return mi * mj / (mi + mj)

    def fingerprint(self) -> str:
        return _digest([(s.mass, s.diameter, s.degeneracy, s.energy) for s in self.species],
                       self.cross_section.fingerprint())

    @classmethod
    def hard_sphere_mixture(cls, species):
        species = tuple(species)
        return cls(species, HardSphereElastic([s.diameter for s in species]))

    @classmethod
    def multilevel(cls, mass, diameter, degeneracies, energies, names=None):
        """Single-mass gas whose internal levels act as species (Anderson model)."""
        if len(degeneracies) != len(energies):
            raise ValueError("degeneracies and energies must have equal length")
        names = names or [f"level{n + 1}" for n in range(len(energies))]
        species = tuple(SpeciesLevel(nm, mass, diameter, int(g), float(e))
                        for nm, g, e in zip(names, degeneracies, energies))
        xs = AndersonMultiLevel(diameter, [mass] * len(species), energies, degeneracies)
        return cls(species, xs)


@dataclass(frozen=True)
class Channel:
    """Collision channel i + j -> k + l (0-based species indices)."""

    i: int
    j: int
    k: int
    l: int
    delta_e: float
    reduced_mass: float

    @property
    def elastic(self) -> bool:
        return (self.k, self.l) == (self.i, self.j)

    def reverse(self) -> "Channel":
        return Channel(self.k, self.l, self.i, self.j, -self.delta_e, self.reduced_mass)


@dataclass(frozen=True)
class CollisionCatalog:
    """Elastic pairs and inelastic triplets of a gas model.

    ``inelastic`` holds, for every species ``i``, the channels ``(i, j -> k, l)``
    with ``(j, k, l)`` ranging over all triplets except ``(s, i, s)``.
    """

    ns: int
    elastic: tuple
    inelastic: tuple

    def inelastic_for(self, i):
        return tuple(c for c in self.inelastic if c.i == i)

    @property
    def n_inelastic_per_species(self) -> int:
        return self.ns**3 - self.ns


def build_collision_catalog(model: GasModel) -> CollisionCatalog:
    ns = model.ns
    E = model.energies

    def make(i, j, k, l):
        return Channel(i, j, k, l, float(E[k] + E[l] - E[i] - E[j]), model.reduced_mass(i, j))

    elastic = tuple(make(i, j, i, j) for i in range(ns) for j in range(ns))
    inelastic = tuple(
        make(i, j, k, l)
        for i in range(ns)
        for j, k, l in itertools.product(range(ns), repeat=3)
        if not (k == i and l == j)
    )
    return CollisionCatalog(ns, elastic, inelastic)
