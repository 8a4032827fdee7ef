"""Site networks, waveguide arrays, and the Hamiltonians built from them.

Single-excitation tight-binding models: a network of sites with on-site
energies and pairwise couplings, or an array of evanescently coupled
waveguides with propagation constants.  All energies are angular
frequencies with hbar = 1; see the README units note.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

HERMITICITY_TOL = 1e-12


class NetworkError(ValueError):
    """Inconsistent site network (shape mismatch, asymmetry, bad diagonal)."""


class GeometryError(ValueError):
    """Invalid waveguide geometry (non-positive separations or scales)."""


class MappingError(ValueError):
    """Invalid site mapping (not a permutation, wrong length, bad scale)."""


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _default_labels(prefix: str, n: int) -> tuple:
    return tuple(f"{prefix}{i}" for i in range(n))


@dataclass(frozen=True)
class SiteNetwork:
    """Sites with on-site energies and symmetric pairwise couplings."""

    on_site: np.ndarray
    couplings: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        eps = _frozen_array(self.on_site, float)
        if eps.ndim != 1 or eps.size == 0:
            raise NetworkError("on_site must be a non-empty 1-d sequence")
        n = eps.size
        v = _frozen_array(self.couplings, float)
        if v.shape != (n, n):
            raise NetworkError(f"couplings shape {v.shape} does not match {n} sites")
        if not np.array_equal(v, v.T):
            raise NetworkError("couplings must be symmetric")
        if np.any(np.diagonal(v) != 0.0):
            raise NetworkError("couplings diagonal must be exactly zero")
        labels = tuple(self.labels) or _default_labels("s", n)
        if len(labels) != n:
            raise NetworkError(f"{len(labels)} labels for {n} sites")
        object.__setattr__(self, "on_site", eps)
        object.__setattr__(self, "couplings", v)
        object.__setattr__(self, "labels", labels)

    @property
    def n_sites(self) -> int:
        return self.on_site.size

    def __add__(self, other: "SiteNetwork") -> "SiteNetwork":
        if not isinstance(other, SiteNetwork):
            return NotImplemented
        if other.n_sites != self.n_sites or other.labels != self.labels:
            raise NetworkError("can only add networks sharing sites and labels")
        return SiteNetwork(self.on_site + other.on_site,
                           self.couplings + other.couplings, self.labels)


@dataclass(frozen=True)
class WaveguideGeometry:
    """Waveguide array: pairwise separations plus the evanescent-coupling scales.

    Couplings follow the coupled-mode form C(d) = coupling_scale *
    exp(-d / decay_length); separations are in micrometres.
    """

    separations: np.ndarray
    prop_constants: np.ndarray
    coupling_scale: float
    decay_length: float
    labels: tuple = ()

    def __post_init__(self):
        beta = _frozen_array(self.prop_constants, float)
        if beta.ndim != 1 or beta.size == 0:
            raise GeometryError("prop_constants must be a non-empty 1-d sequence")
        n = beta.size
        d = _frozen_array(self.separations, float)
        if d.shape != (n, n):
            raise GeometryError(f"separations shape {d.shape} does not match {n} guides")
        if not np.array_equal(d, d.T):
            raise GeometryError("separations must be symmetric")
        off = d[~np.eye(n, dtype=bool)]
        if off.size and np.any(off <= 0.0):
            raise GeometryError("off-diagonal separations must be positive")
        if not (self.coupling_scale > 0.0 and self.decay_length > 0.0):
            raise GeometryError("coupling_scale and decay_length must be positive")
        labels = tuple(self.labels) or _default_labels("g", n)
        if len(labels) != n:
            raise GeometryError(f"{len(labels)} labels for {n} guides")
        object.__setattr__(self, "separations", d)
        object.__setattr__(self, "prop_constants", beta)
        object.__setattr__(self, "labels", labels)

    @property
    def n_guides(self) -> int:
        return self.prop_constants.size


@dataclass(frozen=True)
class MappingRecord:
    """Site bijection plus the unit scale relating two Hamiltonians."""

    site_bijection: tuple
    unit_scale: float = 1.0

    def __post_init__(self):
        perm = tuple(int(p) for p in self.site_bijection)
        if sorted(perm) != list(range(len(perm))):
            raise MappingError(f"{perm} is not a permutation of 0..{len(perm) - 1}")
        if not self.unit_scale > 0.0:
            raise MappingError("unit_scale must be positive")
        object.__setattr__(self, "site_bijection", perm)
        object.__setattr__(self, "unit_scale", float(self.unit_scale))

    def inverse(self) -> "MappingRecord":
        inv = np.argsort(np.asarray(self.site_bijection))
        return MappingRecord(tuple(int(i) for i in inv), 1.0 / self.unit_scale)


@dataclass(frozen=True)
class Hamiltonian:
    """Hermitian operator over a labelled finite basis.

    The matrix is dense complex for site networks; the Bose-Hubbard builder
    stores a scipy sparse matrix instead.  Hermiticity is checked entrywise
    at construction.
    """

    matrix: object
    basis_labels: tuple = ()

    def __post_init__(self):
        m = self.matrix
        if sp.issparse(m):
            m = m.tocsr(copy=True)
            dev = abs(m - m.conjugate().T)
            deviation = dev.max() if dev.nnz else 0.0
        else:
            m = np.array(m, dtype=complex, copy=True)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"matrix must be square, got shape {m.shape}")
            deviation = np.abs(m - m.conj().T).max() if m.size else 0.0
            m.setflags(write=False)
        if deviation > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian: max |H - H^dag| = {deviation:.3e}")
        labels = tuple(self.basis_labels) or _default_labels("b", m.shape[0])
        if len(labels) != m.shape[0]:
            raise ValueError(f"{len(labels)} labels for dimension {m.shape[0]}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        """Dense complex copy of the matrix."""
        if self.is_sparse:
            return np.asarray(self.matrix.todense(), dtype=complex)
        return np.array(self.matrix, dtype=complex)

    def content_hash(self) -> str:
        """SHA-256 over dimension, labels and matrix entries."""
        h = hashlib.sha256()
        h.update(str(self.dim).encode())
        h.update("\x1f".join(self.basis_labels).encode())
        if self.is_sparse:
            c = self.matrix.tocsr()
            c.sum_duplicates()
            h.update(np.ascontiguousarray(c.indptr).tobytes())
            h.update(np.ascontiguousarray(c.indices).tobytes())
            h.update(np.ascontiguousarray(c.data, dtype=complex).tobytes())
        else:
            h.update(np.ascontiguousarray(self.matrix, dtype=complex).tobytes())
        return h.hexdigest()


def build_tight_binding(net: SiteNetwork) -> Hamiltonian:
    """Hamiltonian with on-site energies on the diagonal and couplings off it."""
    h = net.couplings.astype(complex)
    h[np.diag_indices(net.n_sites)] = net.on_site
    return Hamiltonian(h, net.labels)


def waveguide_hamiltonian(geom: WaveguideGeometry) -> Hamiltonian:
    """Coupled-mode Hamiltonian of a waveguide array.

    Diagonal entries are the propagation constants; pair (m, n) couples with
    coupling_scale * exp(-separation / decay_length).
    """
    n = geom.n_guides
    h = geom.coupling_scale * np.exp(-geom.separations / geom.decay_length)
    h = h.astype(complex)
    h[np.diag_indices(n)] = geom.prop_constants
    return Hamiltonian(h, geom.labels)


def map_network(h_target: Hamiltonian, rec: MappingRecord) -> Hamiltonian:
    """Carry a Hamiltonian across a site bijection with a unit rescale.

    Returns H_source with H_source[p(m), p(n)] = unit_scale * H_target[m, n]
    for the bijection p in ``rec``.  Basis labels travel with their sites.
    """
    if h_target.is_sparse:
        raise MappingError("map_network supports dense Hamiltonians only")
    perm = np.asarray(rec.site_bijection)
    if perm.size != h_target.dim:
        raise MappingError(
            f"permutation length {perm.size} does not match dimension {h_target.dim}")
    inv = np.argsort(perm)
    out = rec.unit_scale * h_target.matrix[np.ix_(inv, inv)]
    labels = tuple(np.asarray(h_target.basis_labels, dtype=object)[inv])
    return Hamiltonian(out, labels)


def apply_static_disorder(h: Hamiltonian, sigma: float, seed: int) -> Hamiltonian:
    """Add independent Gaussian offsets of width sigma to the diagonal.

    Off-diagonal entries are untouched; a fixed seed gives identical output.
    """
    if sigma < 0:
        raise ValueError("disorder sigma must be non-negative")
    if h.is_sparse:
        raise ValueError("apply_static_disorder supports dense Hamiltonians only")
    if sigma == 0:
        return Hamiltonian(h.matrix, h.basis_labels)
    rng = np.random.default_rng(seed)
    offsets = rng.normal(0.0, sigma, h.dim)
    out = np.array(h.matrix, copy=True)
    out[np.diag_indices(h.dim)] += offsets
    return Hamiltonian(out, h.basis_labels)
