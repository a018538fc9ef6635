"""Desk-scale P1 finite elements for the radiation-type problem on rectangles
(and intervals as a 1-D smoke variant), plus exact norm and level-set queries.

Degree-1 fields make most measurements exact rather than approximate:
gradients are element-constant, super-level sets are clipped polygons, and
integrals of |u|^q have a closed form for every real q >= 0 through the
second divided difference of t^{q+2} (evaluated in max-scaled form, so
arbitrarily large q neither overflows nor loses the maximum).  Assembly and
source-data integrals use degree-4 quadrature.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, SolverError

GAMMA = "gamma"
GAMMA_N = "gamma_n"

_EDGES = ("bottom", "right", "top", "left")

# Dunavant 6-point rule, exact to degree 4, weights normalized to sum 1
_TRI_QP = np.array([
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
])
_TRI_QW = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)

# 3-point Gauss on [0,1], exact to degree 5
_SEG_QP = np.array([0.5 - math.sqrt(15.0) / 10.0, 0.5, 0.5 + math.sqrt(15.0) / 10.0])
_SEG_QW = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


@dataclass
class Mesh:
    dim: int
    vertices: np.ndarray          # (N, dim)
    elements: np.ndarray          # (M, dim+1) vertex indices
    boundary_facets: np.ndarray   # (F, dim) vertex indices (edges / points)
    facet_tags: np.ndarray        # (F,) strings GAMMA / GAMMA_N
    h: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.h == 0.0:
            self.h = float(np.max(self.element_diameters()))
        tags = set(self.facet_tags.tolist())
        if not tags <= {GAMMA, GAMMA_N}:
            raise ConfigurationError(f"unknown facet tags: {sorted(tags)}")
        if GAMMA not in tags:
            raise ConfigurationError("Gamma must be nonempty")

    # geometry -----------------------------------------------------------
    def element_coords(self):
        return self.vertices[self.elements]  # (M, dim+1, dim)

    def element_diameters(self):
        c = self.element_coords()
        if self.dim == 1:
            return np.abs(c[:, 1, 0] - c[:, 0, 0])
        d01 = np.linalg.norm(c[:, 0] - c[:, 1], axis=1)
        d02 = np.linalg.norm(c[:, 0] - c[:, 2], axis=1)
        d12 = np.linalg.norm(c[:, 1] - c[:, 2], axis=1)
        return np.maximum(np.maximum(d01, d02), d12)

    def element_measures(self):
        if "areas" not in self._cache:
            c = self.element_coords()
            if self.dim == 1:
                a = np.abs(c[:, 1, 0] - c[:, 0, 0])
            else:
                e1 = c[:, 1] - c[:, 0]
                e2 = c[:, 2] - c[:, 0]
                a = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
            self._cache["areas"] = a
        return self._cache["areas"]

    def basis_gradients(self):
        """Element-constant gradients of the P1 basis, shape (M, dim+1, dim)."""
        if "grads" not in self._cache:
            c = self.element_coords()
            if self.dim == 1:
                ln = c[:, 1, 0] - c[:, 0, 0]
                g = np.stack([-1.0 / ln, 1.0 / ln], axis=1)[:, :, None]
            else:
                e1 = c[:, 1] - c[:, 0]
                e2 = c[:, 2] - c[:, 0]
                det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
                g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
                g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
                g0 = -g1 - g2
                g = np.stack([g0, g1, g2], axis=1)
            self._cache["grads"] = g
        return self._cache["grads"]

    def facet_measures(self):
        if "flens" not in self._cache:
            if self.dim == 1:
                self._cache["flens"] = np.ones(len(self.boundary_facets))
            else:
                fc = self.vertices[self.boundary_facets]
                self._cache["flens"] = np.linalg.norm(fc[:, 1] - fc[:, 0], axis=1)
        return self._cache["flens"]

    def facets_with_tag(self, region):
        if region == "Boundary":
            return np.arange(len(self.boundary_facets))
        tag = {GAMMA: GAMMA, "Gamma": GAMMA, GAMMA_N: GAMMA_N, "GammaN": GAMMA_N}[region]
        return np.nonzero(self.facet_tags == tag)[0]

    # reported measures ----------------------------------------------------
    @property
    def vol_omega(self):
        return float(np.sum(self.element_measures()))

    def surface_measure(self, region):
        idx = self.facets_with_tag(region)
        return float(np.sum(self.facet_measures()[idx]))

    # serialization ----------------------------------------------------------
    def save_text(self, path):
        with open(path, "w") as fh:
            fh.write(_mesh_to_text(self))

    @classmethod
    def load_text(cls, path):
        with open(path) as fh:
            return _mesh_from_text(fh.read())


def _mesh_to_text(mesh: Mesh) -> str:
    out = io.StringIO()
    out.write("radbounds-mesh 1\n")
    out.write(f"dim {mesh.dim}\n")
    out.write(f"vertices {len(mesh.vertices)}\n")
    for v in mesh.vertices:
        out.write(" ".join(repr(float(x)) for x in v) + "\n")
    out.write(f"elements {len(mesh.elements)}\n")
    for e in mesh.elements:
        out.write(" ".join(str(int(i)) for i in e) + "\n")
    out.write(f"facets {len(mesh.boundary_facets)}\n")
    for f, t in zip(mesh.boundary_facets, mesh.facet_tags):
        out.write(" ".join(str(int(i)) for i in f) + " " + str(t) + "\n")
    return out.getvalue()


def _mesh_from_text(text: str) -> Mesh:
    lines = text.strip().splitlines()
    if lines[0].split() != ["radbounds-mesh", "1"]:
        raise ConfigurationError("not a radbounds mesh file (version 1)")
    dim = int(lines[1].split()[1])
    i = 2
    nv = int(lines[i].split()[1]); i += 1
    verts = np.array([[float(x) for x in lines[i + k].split()] for k in range(nv)])
    i += nv
    ne = int(lines[i].split()[1]); i += 1
    elems = np.array([[int(x) for x in lines[i + k].split()] for k in range(ne)])
    i += ne
    nf = int(lines[i].split()[1]); i += 1
    facets, tags = [], []
    for k in range(nf):
        parts = lines[i + k].split()
        facets.append([int(x) for x in parts[:-1]])
        tags.append(parts[-1])
    return Mesh(dim=dim, vertices=verts, elements=elems,
                boundary_facets=np.array(facets), facet_tags=np.array(tags))


def build_rectangle_mesh(width, height, resolution, gamma_spec) -> Mesh:
    """Structured triangulation of [0,width] x [0,height].

    resolution is the number of cells per side; gamma_spec maps each of
    "bottom", "right", "top", "left" to "gamma" or "gamma_n" (edges omitted
    from the mapping default to "gamma").
    """
    if resolution < 2:
        raise ConfigurationError("resolution must be >= 2")
    tags = {e: GAMMA for e in _EDGES}
    for k, v in dict(gamma_spec or {}).items():
        if k not in _EDGES:
            raise ConfigurationError(f"unknown edge {k!r}")
        if v not in (GAMMA, GAMMA_N):
            raise ConfigurationError(f"unknown tag {v!r}")
        tags[k] = v
    if all(v == GAMMA_N for v in tags.values()):
        raise ConfigurationError("all edges Gamma_N: the radiative part Gamma must be nonempty")

    R = resolution
    xs = np.linspace(0.0, width, R + 1)
    ys = np.linspace(0.0, height, R + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (R + 1) + j

    elems = []
    for i in range(R):
        for j in range(R):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            elems.append([v00, v10, v11])
            elems.append([v00, v11, v01])
    facets, ftags = [], []
    for i in range(R):
        facets.append([vid(i, 0), vid(i + 1, 0)]); ftags.append(tags["bottom"])
        facets.append([vid(i, R), vid(i + 1, R)]); ftags.append(tags["top"])
        facets.append([vid(0, i), vid(0, i + 1)]); ftags.append(tags["left"])
        facets.append([vid(R, i), vid(R, i + 1)]); ftags.append(tags["right"])
    return Mesh(dim=2, vertices=verts, elements=np.array(elems),
                boundary_facets=np.array(facets), facet_tags=np.array(ftags))


def build_interval_mesh(length, resolution, gamma_spec=None) -> Mesh:
    """Uniform mesh of [0, length]; endpoints tagged gamma / gamma_n."""
    if resolution < 2:
        raise ConfigurationError("resolution must be >= 2")
    tags = {"left": GAMMA, "right": GAMMA}
    for k, v in dict(gamma_spec or {}).items():
        if k not in ("left", "right") or v not in (GAMMA, GAMMA_N):
            raise ConfigurationError(f"bad interval gamma_spec entry {k!r}: {v!r}")
        tags[k] = v
    xs = np.linspace(0.0, length, resolution + 1)
    verts = xs[:, None]
    elems = np.column_stack([np.arange(resolution), np.arange(1, resolution + 1)])
    facets = np.array([[0], [resolution]])
    ftags = np.array([tags["left"], tags["right"]])
    return Mesh(dim=1, vertices=verts, elements=elems,
                boundary_facets=facets, facet_tags=ftags)


# ---------------------------------------------------------------------------
# coefficients, data, boundary law, fields
# ---------------------------------------------------------------------------


class CoefficientField:
    """Per-element symmetric leading coefficient with certified bounds."""

    def __init__(self, mesh: Mesh, matrices, a_low, a_high):
        self.mesh = mesh
        self.a_low = float(a_low)
        self.a_high = float(a_high)
        mats = np.asarray(matrices, dtype=float)
        if mesh.dim == 1:
            mats = mats.reshape(len(mesh.elements))
            lam_min = lam_max = mats
        else:
            mats = mats.reshape(len(mesh.elements), 2, 2)
            if not np.allclose(mats[:, 0, 1], mats[:, 1, 0], rtol=0, atol=1e-14):
                raise ConfigurationError("element matrices must be symmetric")
            tr = mats[:, 0, 0] + mats[:, 1, 1]
            disc = np.sqrt((mats[:, 0, 0] - mats[:, 1, 1]) ** 2 + 4.0 * mats[:, 0, 1] ** 2)
            lam_min = 0.5 * (tr - disc)
            lam_max = 0.5 * (tr + disc)
        tol = 1e-12 * max(1.0, self.a_high)
        if np.min(lam_min) < self.a_low - tol:
            raise ConfigurationError("element eigenvalue below a_low witness")
        if np.max(lam_max) > self.a_high + tol:
            raise ConfigurationError("element eigenvalue above a_high witness")
        self.matrices = mats

    @classmethod
    def identity(cls, mesh, scale=1.0):
        if mesh.dim == 1:
            return cls(mesh, np.full(len(mesh.elements), scale), scale, scale)
        m = np.tile(np.eye(2) * scale, (len(mesh.elements), 1, 1))
        return cls(mesh, m, scale, scale)

    @classmethod
    def from_callable(cls, mesh, fn, a_low, a_high):
        """fn(cx, cy) -> (M,2,2) at element centroids (or (M,) for dim 1)."""
        cent = mesh.element_coords().mean(axis=1)
        if mesh.dim == 1:
            return cls(mesh, fn(cent[:, 0]), a_low, a_high)
        return cls(mesh, fn(cent[:, 0], cent[:, 1]), a_low, a_high)


class BoundaryLaw:
    """The boundary nonlinearity: linear b(y) = b_star y or canonical |y|^{ell-2} y.

    Growth constants: b_low = b_high = b_star in the linear case and 1 for the
    canonical law (its strong-monotonicity constant 2^{2-ell} plays no role in
    the growth bounds used here).
    """

    def __init__(self, ell, b_star=None):
        if ell < 2.0:
            raise ConfigurationError("ell must be >= 2")
        if b_star is not None and ell != 2.0:
            raise ConfigurationError("linear law requires ell = 2")
        self.ell = float(ell)
        self.b_star = None if b_star is None else float(b_star)

    @property
    def linear(self):
        return self.b_star is not None

    @property
    def b_low(self):
        return self.b_star if self.linear else 1.0

    @property
    def b_high(self):
        return self.b_star if self.linear else 1.0

    def b(self, y):
        if self.linear:
            return self.b_star * y
        return np.abs(y) ** (self.ell - 2.0) * y

    def db(self, y):
        if self.linear:
            return np.full_like(np.asarray(y, dtype=float), self.b_star)
        return (self.ell - 1.0) * np.abs(y) ** (self.ell - 2.0)


@dataclass
class SourceData:
    """Right-hand-side callbacks; all vectorized over coordinate arrays.

    f(x, y) scalar, fvec(x, y) -> (fx, fy), g on Gamma_N facets, h on Gamma
    facets.  None means identically zero.
    """

    f: Optional[Callable] = None
    fvec: Optional[Callable] = None
    g: Optional[Callable] = None
    h: Optional[Callable] = None


@dataclass
class DiscreteField:
    mesh: Mesh
    values: np.ndarray
    degree: int = 1
    solve_info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("field values must be finite")

    def element_values(self):
        return self.values[self.mesh.elements]

    def save_text(self, path):
        with open(path, "w") as fh:
            fh.write("radbounds-field 1\n")
            fh.write(_mesh_to_text(self.mesh))
            fh.write(f"values {len(self.values)}\n")
            for v in self.values:
                fh.write(repr(float(v)) + "\n")

    @classmethod
    def load_text(cls, path):
        with open(path) as fh:
            text = fh.read()
        head, _, rest = text.partition("radbounds-mesh")
        if not head.startswith("radbounds-field 1"):
            raise ConfigurationError("not a radbounds field file (version 1)")
        mesh_text, _, vals_text = ("radbounds-mesh" + rest).partition("values")
        mesh = _mesh_from_text(mesh_text)
        lines = vals_text.split()
        nv = int(lines[0])
        vals = np.array([float(x) for x in lines[1:1 + nv]])
        return cls(mesh=mesh, values=vals)


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------


def _tri_quad_points(mesh):
    c = mesh.element_coords()  # (M,3,2)
    pts = np.einsum("qi,mid->mqd", _TRI_QP, c)
    return pts  # (M, nq, 2)


def _facet_quad_points(mesh, idx):
    fc = mesh.vertices[mesh.boundary_facets[idx]]  # (F,2,dim)
    t = _SEG_QP
    pts = fc[:, None, 0, :] * (1.0 - t)[None, :, None] + fc[:, None, 1, :] * t[None, :, None]
    return pts  # (F, 3, dim)


def _eval_scalar(fn, pts, dim):
    if dim == 1:
        return np.asarray(fn(pts[..., 0]), dtype=float)
    return np.asarray(fn(pts[..., 0], pts[..., 1]), dtype=float)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def _stiffness(mesh: Mesh, coeff: CoefficientField):
    grads = mesh.basis_gradients()          # (M, nb, dim)
    areas = mesh.element_measures()
    if mesh.dim == 1:
        Ag = grads[:, :, 0] * coeff.matrices[:, None]
        ke = np.einsum("mi,mj->mij", Ag, grads[:, :, 0]) * areas[:, None, None]
    else:
        Ag = np.einsum("mde,mie->mid", coeff.matrices, grads)
        ke = np.einsum("mid,mjd->mij", Ag, grads) * areas[:, None, None]
    nb = mesh.elements.shape[1]
    rows = np.repeat(mesh.elements, nb, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, nb)).ravel()
    K = sp.coo_matrix((ke.ravel(), (rows, cols)),
                      shape=(len(mesh.vertices),) * 2).tocsr()
    return K


def _boundary_mass(mesh: Mesh, idx):
    """Facet mass matrix over the selected facets (linear boundary term)."""
    n = len(mesh.vertices)
    if len(idx) == 0:
        return sp.csr_matrix((n, n))
    if mesh.dim == 1:
        v = mesh.boundary_facets[idx][:, 0]
        return sp.coo_matrix((np.ones(len(v)), (v, v)), shape=(n, n)).tocsr()
    lens = mesh.facet_measures()[idx]
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    fe = lens[:, None, None] * local[None]
    f = mesh.boundary_facets[idx]
    rows = np.repeat(f, 2, axis=1).ravel()
    cols = np.tile(f, (1, 2)).ravel()
    return sp.coo_matrix((fe.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _load_vector(mesh: Mesh, data: SourceData, load_refine=0):
    n = len(mesh.vertices)
    rhs = np.zeros(n)
    areas = mesh.element_measures()
    if data.f is not None and mesh.dim == 2 and load_refine > 0:
        # subdivided quadrature for poorly resolved (indicator-like) sources
        parent = mesh.element_coords()
        grads = mesh.basis_gradients()
        v0 = parent[:, 0]
        tris = [parent]
        for _ in range(load_refine):
            tris = [t for tri in tris for t in _refine_tri(tri)]
        contrib = np.zeros((len(mesh.elements), 3))
        for tri in tris:
            e1 = tri[:, 1] - tri[:, 0]
            e2 = tri[:, 2] - tri[:, 0]
            sub_areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
            pts = np.einsum("qi,mid->mqd", _TRI_QP, tri)
            fv = _eval_scalar(data.f, pts, 2)
            rel = pts - v0[:, None, :]
            lam12 = np.einsum("mqd,mid->mqi", rel, grads[:, 1:, :])
            lam = np.concatenate([1.0 - lam12.sum(axis=2, keepdims=True), lam12], axis=2)
            contrib += np.einsum("mq,q,mqi->mi", fv, _TRI_QW, lam) * sub_areas[:, None]
        np.add.at(rhs, mesh.elements, contrib)
    elif data.f is not None:
        pts = _tri_quad_points(mesh) if mesh.dim == 2 else _seg_quad_points_1d(mesh)
        fv = _eval_scalar(data.f, pts, mesh.dim)
        if mesh.dim == 2:
            contrib = np.einsum("mq,q,qi->mi", fv, _TRI_QW, _TRI_QP) * areas[:, None]
        else:
            phis = np.stack([1.0 - _SEG_QP, _SEG_QP], axis=1)
            contrib = np.einsum("mq,q,qi->mi", fv, _SEG_QW, phis) * areas[:, None]
        np.add.at(rhs, mesh.elements, contrib)
    if data.fvec is not None:
        grads = mesh.basis_gradients()
        if mesh.dim == 2:
            pts = _tri_quad_points(mesh)
            fx, fy = data.fvec(pts[..., 0], pts[..., 1])
            avg = np.stack([np.einsum("mq,q->m", np.asarray(fx, dtype=float), _TRI_QW),
                            np.einsum("mq,q->m", np.asarray(fy, dtype=float), _TRI_QW)], axis=1)
            contrib = np.einsum("md,mid->mi", avg, grads) * areas[:, None]
        else:
            pts = _seg_quad_points_1d(mesh)
            fx = np.asarray(data.fvec(pts[..., 0]), dtype=float)
            avg = np.einsum("mq,q->m", fx, _SEG_QW)
            contrib = avg[:, None] * grads[:, :, 0] * areas[:, None]
        np.add.at(rhs, mesh.elements, contrib)
    for fn, region in ((data.g, "GammaN"), (data.h, "Gamma")):
        if fn is None:
            continue
        idx = mesh.facets_with_tag(region)
        if len(idx) == 0:
            continue
        if mesh.dim == 1:
            v = mesh.boundary_facets[idx][:, 0]
            vals = _eval_scalar(fn, mesh.vertices[v], 1)
            np.add.at(rhs, v, vals)
        else:
            pts = _facet_quad_points(mesh, idx)
            vals = _eval_scalar(fn, pts, 2)
            lens = mesh.facet_measures()[idx]
            phis = np.stack([1.0 - _SEG_QP, _SEG_QP], axis=1)
            contrib = np.einsum("fq,q,qi->fi", vals, _SEG_QW, phis) * lens[:, None]
            np.add.at(rhs, mesh.boundary_facets[idx], contrib)
    return rhs


def _seg_quad_points_1d(mesh):
    c = mesh.element_coords()  # (M,2,1)
    t = _SEG_QP
    return c[:, None, 0, :] * (1.0 - t)[None, :, None] + c[:, None, 1, :] * t[None, :, None]


def _boundary_residual_and_jac(mesh: Mesh, law: BoundaryLaw, u, idx, want_jac):
    """(vector of int_Gamma b(u) phi_i, optional Jacobian matrix)."""
    n = len(mesh.vertices)
    vec = np.zeros(n)
    if len(idx) == 0:
        return vec, sp.csr_matrix((n, n)) if want_jac else None
    if mesh.dim == 1:
        v = mesh.boundary_facets[idx][:, 0]
        np.add.at(vec, v, law.b(u[v]))
        if want_jac:
            J = sp.coo_matrix((law.db(u[v]), (v, v)), shape=(n, n)).tocsr()
            return vec, J
        return vec, None
    f = mesh.boundary_facets[idx]
    lens = mesh.facet_measures()[idx]
    uv = u[f]  # (F, 2)
    phis = np.stack([1.0 - _SEG_QP, _SEG_QP], axis=1)       # (3, 2)
    uq = uv @ phis.T                                        # (F, 3)
    bq = law.b(uq)
    contrib = np.einsum("fq,q,qi->fi", bq, _SEG_QW, phis) * lens[:, None]
    np.add.at(vec, f, contrib)
    if not want_jac:
        return vec, None
    dbq = law.db(uq)
    je = np.einsum("fq,q,qi,qj->fij", dbq, _SEG_QW, phis, phis) * lens[:, None, None]
    rows = np.repeat(f, 2, axis=1).ravel()
    cols = np.tile(f, (1, 2)).ravel()
    J = sp.coo_matrix((je.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return vec, J


class _DualNorm:
    """Discrete dual norm of residual vectors wrt the H^1 inner product."""

    def __init__(self, mesh):
        K = _stiffness(mesh, CoefficientField.identity(mesh))
        lumped = np.zeros(len(mesh.vertices))
        areas = mesh.element_measures()
        nb = mesh.elements.shape[1]
        np.add.at(lumped, mesh.elements, np.repeat(areas[:, None] / nb, nb, axis=1))
        H = (K + sp.diags(lumped)).tocsc()
        self._solve = spla.splu(H).solve

    def __call__(self, r):
        return float(math.sqrt(max(np.dot(r, self._solve(r)), 0.0)))


def residual_vector(mesh, coeff, data, law, u, load_refine=0):
    K = _stiffness(mesh, coeff)
    rhs = _load_vector(mesh, data, load_refine)
    idx = mesh.facets_with_tag("Gamma")
    bvec, _ = _boundary_residual_and_jac(mesh, law, u, idx, want_jac=False)
    return K @ u + bvec - rhs


def assemble_and_solve(mesh: Mesh, coeff: CoefficientField, data: SourceData,
                       nonlinearity: BoundaryLaw, tol=1e-10, max_iter=40,
                       initial_guess=None, load_refine=0) -> DiscreteField:
    """Solve the discrete weak problem; damped Newton for the nonlinear law.

    The residual is driven below tol in the discrete dual norm of the FE
    space.  The linear law needs a single solve.
    """
    law = nonlinearity
    K = _stiffness(mesh, coeff)
    rhs = _load_vector(mesh, data, load_refine)
    idx = mesh.facets_with_tag("Gamma")
    dual = _DualNorm(mesh)

    if law.linear:
        A = (K + law.b_star * _boundary_mass(mesh, idx)).tocsc()
        u = spla.splu(A).solve(rhs)
        res = K @ u + law.b_star * (_boundary_mass(mesh, idx) @ u) - rhs
        info = {"iterations": 0, "residuals": [dual(res)], "linear": True}
        return DiscreteField(mesh=mesh, values=u, solve_info=info)

    if initial_guess is None:
        # warm start from the unit-coefficient linearization: at u = 0 the
        # canonical law has a degenerate boundary Jacobian and K alone is
        # singular on pure-Gamma meshes
        A0 = (K + _boundary_mass(mesh, idx)).tocsc()
        u = spla.splu(A0).solve(rhs)
    else:
        u = np.asarray(initial_guess, dtype=float).copy()
    history = []
    for it in range(max_iter):
        bvec, J_b = _boundary_residual_and_jac(mesh, law, u, idx, want_jac=True)
        F = K @ u + bvec - rhs
        rn = dual(F)
        history.append(rn)
        if rn <= tol:
            info = {"iterations": it, "residuals": history, "linear": False}
            return DiscreteField(mesh=mesh, values=u, solve_info=info)
        J = (K + J_b).tocsc()
        du = spla.splu(J).solve(-F)
        step = 1.0
        for _ in range(30):
            cand = u + step * du
            bc, _ = _boundary_residual_and_jac(mesh, law, cand, idx, want_jac=False)
            if dual(K @ cand + bc - rhs) <= (1.0 - 1e-4 * step) * rn:
                break
            step *= 0.5
        u = u + step * du
    raise SolverError(f"Newton did not converge within {max_iter} iterations",
                      residual_history=history)


# ---------------------------------------------------------------------------
# exact P1 integrals of |u|^q
# ---------------------------------------------------------------------------


def _phi_ratio(u, v, mp1):
    """(u^mp1 - v^mp1) / (u - v) for 0 <= v <= u in [0, 1] (stable everywhere).

    Written as u^{mp1-1} (1 - w^mp1)/(1 - w) with w = v/u, so neither huge
    ratios nor near-coincident arguments overflow or cancel.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    upos = u > 0.0
    safe_u = np.where(upos, u, 1.0)
    w = np.clip(np.where(upos, v / safe_u, 0.0), 0.0, 1.0)
    near = w > 1.0 - 1e-12
    wpos = (w > 0.0) & ~near
    safe_w = np.where(wpos, w, 0.5)
    h = np.where(wpos, -np.expm1(mp1 * np.log(safe_w)) / (1.0 - safe_w), 1.0)
    h = np.where(near, mp1, h)
    return np.where(upos, safe_u ** (mp1 - 1.0) * h, 0.0)


def _tri_power_integral(vals, areas, m):
    """Exact integral of L^m over triangles; vals (M,3) nonnegative, real m >= 0."""
    v = np.sort(np.asarray(vals, dtype=float), axis=1)
    a, b, c = v[:, 0], v[:, 1], v[:, 2]
    areas = np.asarray(areas, dtype=float)
    out = np.zeros(len(v))
    pos = c > 0.0
    if m == 0.0:
        return areas.copy()
    if not np.any(pos):
        return out
    cs = np.where(pos, c, 1.0)
    x = np.where(pos, a / cs, 0.0)
    y = np.where(pos, b / cs, 0.0)
    mp2 = m + 2.0
    ph1 = _phi_ratio(np.ones_like(y), y, mp2)
    ph2 = _phi_ratio(y, x, mp2)
    onemx = 1.0 - x
    clustered = onemx < 1e-6
    mean = (x + y + 1.0) / 3.0
    D = np.where(
        clustered,
        0.5 * mp2 * (mp2 - 1.0) * mean ** m,
        (ph1 - ph2) / np.where(onemx > 0.0, onemx, 1.0),
    )
    out = np.where(pos, 2.0 * areas * cs ** m * D / ((m + 1.0) * (m + 2.0)), 0.0)
    return out


def _seg_power_integral(vals, lens, m):
    """Exact integral of L^m along segments; vals (F,2) nonnegative."""
    v = np.sort(np.asarray(vals, dtype=float), axis=1)
    a, b = v[:, 0], v[:, 1]
    lens = np.asarray(lens, dtype=float)
    if m == 0.0:
        return lens.copy()
    pos = b > 0.0
    bs = np.where(pos, b, 1.0)
    x = np.where(pos, a / bs, 0.0)
    ph = _phi_ratio(np.ones_like(x), x, m + 1.0)
    return np.where(pos, lens * bs ** m * ph / (m + 1.0), 0.0)


def _split_triangle_by_sign(coords, vals):
    """Split one triangle into (coords, |vals|) subtriangles of constant sign."""
    above = [(coords[i], vals[i]) for i in range(3) if vals[i] > 0.0]
    below = [(coords[i], vals[i]) for i in range(3) if vals[i] < 0.0]
    on = [(coords[i], vals[i]) for i in range(3) if vals[i] == 0.0]
    if not above or not below:
        return [(np.array([c for c, _ in above + below + on]),
                 np.abs(np.array([v for _, v in above + below + on])))]
    polys = {1: [], -1: []}
    pts = list(zip(coords, vals))
    for k in range(3):
        (c0, v0), (c1, v1) = pts[k], pts[(k + 1) % 3]
        s0 = 0 if v0 == 0.0 else (1 if v0 > 0 else -1)
        s1 = 0 if v1 == 0.0 else (1 if v1 > 0 else -1)
        if s0 >= 0:
            polys[1].append((c0, v0))
        if s0 <= 0:
            polys[-1].append((c0, v0))
        if s0 * s1 < 0:
            t = v0 / (v0 - v1)
            cz = c0 + t * (c1 - c0)
            polys[1].append((cz, 0.0))
            polys[-1].append((cz, 0.0))
    out = []
    for sgn in (1, -1):
        poly = polys[sgn]
        if len(poly) < 3:
            continue
        base_c, base_v = poly[0]
        for k in range(1, len(poly) - 1):
            cs = np.array([base_c, poly[k][0], poly[k + 1][0]])
            vs = np.abs(np.array([base_v, poly[k][1], poly[k + 1][1]]))
            out.append((cs, vs))
    return out


def _abs_power_integral_omega(field: DiscreteField, m):
    """Exact integral of |u|^m over Omega for real m >= 0."""
    mesh = field.mesh
    ev = field.element_values()
    areas = mesh.element_measures()
    if mesh.dim == 1:
        vmin, vmax = ev.min(axis=1), ev.max(axis=1)
        mixed = (vmin < 0.0) & (vmax > 0.0)
        total = float(np.sum(_seg_power_integral(np.abs(ev[~mixed]), areas[~mixed], m)))
        for k in np.nonzero(mixed)[0]:
            a, b = ev[k]
            t = a / (a - b)
            l0, l1 = areas[k] * t, areas[k] * (1.0 - t)
            total += float(_seg_power_integral(np.array([[abs(a), 0.0]]), np.array([l0]), m)[0])
            total += float(_seg_power_integral(np.array([[0.0, abs(b)]]), np.array([l1]), m)[0])
        return total
    vmin, vmax = ev.min(axis=1), ev.max(axis=1)
    mixed = (vmin < 0.0) & (vmax > 0.0)
    total = float(np.sum(_tri_power_integral(np.abs(ev[~mixed]), areas[~mixed], m)))
    if np.any(mixed):
        coords = mesh.element_coords()
        sub_vals, sub_areas = [], []
        for k in np.nonzero(mixed)[0]:
            for cs, vs in _split_triangle_by_sign(coords[k], ev[k]):
                e1, e2 = cs[1] - cs[0], cs[2] - cs[0]
                sub_areas.append(0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0]))
                sub_vals.append(vs)
        total += float(np.sum(_tri_power_integral(np.array(sub_vals),
                                                  np.array(sub_areas), m)))
    return total


def _abs_power_integral_facets(field: DiscreteField, m, region):
    mesh = field.mesh
    idx = mesh.facets_with_tag(region)
    if len(idx) == 0:
        return 0.0
    if mesh.dim == 1:
        v = field.values[mesh.boundary_facets[idx][:, 0]]
        return float(np.sum(np.abs(v) ** m))
    fv = field.values[mesh.boundary_facets[idx]]
    lens = mesh.facet_measures()[idx]
    vmin, vmax = fv.min(axis=1), fv.max(axis=1)
    mixed = (vmin < 0.0) & (vmax > 0.0)
    total = float(np.sum(_seg_power_integral(np.abs(fv[~mixed]), lens[~mixed], m)))
    for k in np.nonzero(mixed)[0]:
        a, b = fv[k]
        t = a / (a - b)
        total += float(_seg_power_integral(np.array([[abs(a), 0.0]]),
                                           np.array([lens[k] * t]), m)[0])
        total += float(_seg_power_integral(np.array([[0.0, abs(b)]]),
                                           np.array([lens[k] * (1.0 - t)]), m)[0])
    return total


def lebesgue_norm(field: DiscreteField, q, region="Omega"):
    """||u||_{q, region}; q = inf gives the max over nodes and quadrature points.

    Finite q is evaluated by the exact closed-form P1 integral, max-scaled so
    arbitrarily large q stays finite; this is exact for every real q >= 1
    (in particular for the polynomial cases the quadrature contract covers).
    """
    if q != math.inf and q < 1.0:
        raise ConfigurationError(f"q must be >= 1 or inf, got {q!r}")
    mesh = field.mesh
    if region == "Omega":
        vals = field.values
        if q == math.inf:
            return float(np.max(np.abs(vals))) if len(vals) else 0.0
        M = float(np.max(np.abs(field.element_values()))) if len(vals) else 0.0
        if M == 0.0:
            return 0.0
        scaled = DiscreteField(mesh=mesh, values=field.values / M)
        return M * _abs_power_integral_omega(scaled, q) ** (1.0 / q)
    idx = mesh.facets_with_tag(region)
    nodal = field.values[np.unique(mesh.boundary_facets[idx])] if len(idx) else np.array([0.0])
    if q == math.inf:
        return float(np.max(np.abs(nodal)))
    M = float(np.max(np.abs(nodal)))
    if M == 0.0:
        return 0.0
    scaled = DiscreteField(mesh=mesh, values=field.values / M)
    return M * _abs_power_integral_facets(scaled, q, region) ** (1.0 / q)


def gradient_norm(field: DiscreteField, q):
    """||grad u||_{q, Omega} over the element-constant gradients (exact)."""
    mesh = field.mesh
    grads = mesh.basis_gradients()
    ev = field.element_values()
    if mesh.dim == 1:
        gmag = np.abs(np.einsum("mi,mi->m", ev, grads[:, :, 0]))
    else:
        g = np.einsum("mi,mid->md", ev, grads)
        gmag = np.linalg.norm(g, axis=1)
    if q == math.inf:
        return float(np.max(gmag)) if len(gmag) else 0.0
    areas = mesh.element_measures()
    M = float(np.max(gmag)) if len(gmag) else 0.0
    if M == 0.0:
        return 0.0
    return M * float(np.sum(areas * (gmag / M) ** q)) ** (1.0 / q)


def ess_sup(field: DiscreteField, region="Omega"):
    """Essential supremum over the closure: max of |u| over all nodes."""
    if region == "Omega":
        return float(np.max(np.abs(field.values)))
    return lebesgue_norm(field, math.inf, region)


# ---------------------------------------------------------------------------
# level sets and truncations
# ---------------------------------------------------------------------------


def _tri_area_above(vals, areas, c):
    """Exact area of {L > c} per triangle for P1 values (M,3)."""
    v = np.asarray(vals, dtype=float)
    above = v > c
    count = above.sum(axis=1)
    out = np.zeros(len(v))
    out[count == 3] = areas[count == 3]
    one = np.nonzero(count == 1)[0]
    if len(one):
        vv = v[one]
        ai = above[one].argmax(axis=1)
        rows = np.arange(len(one))
        va = vv[rows, ai]
        others = np.array([[1, 2], [0, 2], [0, 1]])[ai]
        vb = vv[rows, others[:, 0]]
        vc = vv[rows, others[:, 1]]
        frac = (va - c) ** 2 / ((va - vb) * (va - vc))
        out[one] = areas[one] * frac
    two = np.nonzero(count == 2)[0]
    if len(two):
        vv = v[two]
        bi = (~above[two]).argmax(axis=1)
        rows = np.arange(len(two))
        vb0 = vv[rows, bi]
        others = np.array([[1, 2], [0, 2], [0, 1]])[bi]
        va1 = vv[rows, others[:, 0]]
        va2 = vv[rows, others[:, 1]]
        frac = 1.0 - (c - vb0) ** 2 / ((va1 - vb0) * (va2 - vb0))
        out[two] = areas[two] * frac
    return out


def _seg_length_above(vals, lens, c):
    v = np.asarray(vals, dtype=float)
    lo = v.min(axis=1)
    hi = v.max(axis=1)
    frac = np.clip((hi - c) / np.where(hi > lo, hi - lo, 1.0), 0.0, 1.0)
    frac = np.where(lo > c, 1.0, np.where(hi <= c, 0.0, frac))
    return lens * frac


@dataclass
class LevelSetRecord:
    k: float
    omega: float
    gamma: float
    gamma_n: float
    boundary: float
    sigma: float  # |Omega(k)| + |boundary(k)|^{n/(n-1)}


def level_set_measures(field: DiscreteField, thresholds):
    """Exact measures of {|u| > k} on Omega, Gamma, Gamma_N, boundary per k.

    sigma pairs the interior measure with the boundary measure raised to
    n/(n-1) (n = 2 here, so squared; for interval meshes the counting
    measure is used directly).
    """
    mesh = field.mesh
    ks = list(thresholds)
    if any(k < 1.0 for k in ks):
        raise ConfigurationError("thresholds must be >= 1 (the decay proofs start at k0 = 1)")
    if sorted(ks) != ks:
        raise ConfigurationError("thresholds must be sorted ascending")
    ev = field.element_values()
    areas = mesh.element_measures()
    records = []
    n = 2 if mesh.dim == 2 else 1
    for k in ks:
        if mesh.dim == 2:
            om = float(np.sum(_tri_area_above(ev, areas, k) + _tri_area_above(-ev, areas, k)))
        else:
            om = float(np.sum(_seg_length_above(ev, areas, k) + _seg_length_above(-ev, areas, k)))
        surf = {}
        for region in ("Gamma", "GammaN", "Boundary"):
            idx = mesh.facets_with_tag(region)
            if len(idx) == 0:
                surf[region] = 0.0
                continue
            if mesh.dim == 1:
                v = field.values[mesh.boundary_facets[idx][:, 0]]
                surf[region] = float(np.sum(np.abs(v) > k))
            else:
                fv = field.values[mesh.boundary_facets[idx]]
                lens = mesh.facet_measures()[idx]
                surf[region] = float(np.sum(_seg_length_above(fv, lens, k)
                                            + _seg_length_above(-fv, lens, k)))
        expo = n / (n - 1.0) if n > 1 else 1.0
        records.append(LevelSetRecord(
            k=float(k), omega=om, gamma=surf["Gamma"], gamma_n=surf["GammaN"],
            boundary=surf["Boundary"], sigma=om + surf["Boundary"] ** expo))
    return records


def truncate(field: DiscreteField, k, signed=False) -> DiscreteField:
    """Nodal truncation: min(|u|, k) by default, sign(u) min(|u|, k) if signed."""
    if k <= 0.0:
        raise ConfigurationError("truncation level must be positive")
    a = np.abs(field.values)
    if signed:
        vals = np.sign(field.values) * np.minimum(a, k)
    else:
        vals = np.minimum(a, k)
    return DiscreteField(mesh=field.mesh, values=vals)


def f_m_smooth(tau, m):
    """Bounded approximation m tau / (m + |tau|) of the identity."""
    tau = np.asarray(tau, dtype=float)
    return m * tau / (m + np.abs(tau))


# ---------------------------------------------------------------------------
# quadrature norms of source callbacks
# ---------------------------------------------------------------------------


def _refine_tri(coords):
    mids = 0.5 * (coords + np.roll(coords, -1, axis=1))
    c, m = coords, mids
    return [
        np.stack([c[:, 0], m[:, 0], m[:, 2]], axis=1),
        np.stack([m[:, 0], c[:, 1], m[:, 1]], axis=1),
        np.stack([m[:, 2], m[:, 1], c[:, 2]], axis=1),
        np.stack([m[:, 0], m[:, 1], m[:, 2]], axis=1),
    ]


def source_norm(mesh: Mesh, fn, q, region="Omega", refine=0, vector=False):
    """||fn||_{q, region} by degree-4 quadrature, optionally on subdivided cells.

    refine > 0 splits every cell 4-way that many times before applying the
    rule (used for indicator-like data whose jump the base rule straddles).
    """
    if fn is None:
        return 0.0
    if region == "Omega":
        if mesh.dim == 1:
            pts = _seg_quad_points_1d(mesh)
            vals = np.abs(_eval_scalar(fn, pts, 1)) ** q
            return float(
                np.sum(np.einsum("mq,q->m", vals, _SEG_QW) * mesh.element_measures())
            ) ** (1.0 / q)
        tris = [mesh.element_coords()]
        for _ in range(refine):
            tris = [t for tri in tris for t in _refine_tri(tri)]
        total = 0.0
        for tri in tris:
            e1 = tri[:, 1] - tri[:, 0]
            e2 = tri[:, 2] - tri[:, 0]
            areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
            pts = np.einsum("qi,mid->mqd", _TRI_QP, tri)
            if vector:
                fx, fy = fn(pts[..., 0], pts[..., 1])
                mag = np.sqrt(np.asarray(fx, dtype=float) ** 2
                              + np.asarray(fy, dtype=float) ** 2)
            else:
                mag = np.abs(_eval_scalar(fn, pts, 2))
            total += float(np.sum(np.einsum("mq,q->m", mag ** q, _TRI_QW) * areas))
        return total ** (1.0 / q)
    idx = mesh.facets_with_tag(region)
    if len(idx) == 0:
        return 0.0
    if mesh.dim == 1:
        v = mesh.boundary_facets[idx][:, 0]
        vals = np.abs(_eval_scalar(fn, mesh.vertices[v], 1)) ** q
        return float(np.sum(vals)) ** (1.0 / q)
    segs = [mesh.vertices[mesh.boundary_facets[idx]]]
    for _ in range(refine):
        nxt = []
        for s in segs:
            mid = 0.5 * (s[:, 0] + s[:, 1])
            nxt.append(np.stack([s[:, 0], mid], axis=1))
            nxt.append(np.stack([mid, s[:, 1]], axis=1))
        segs = nxt
    total = 0.0
    for s in segs:
        lens = np.linalg.norm(s[:, 1] - s[:, 0], axis=1)
        pts = s[:, None, 0, :] * (1.0 - _SEG_QP)[None, :, None] \
            + s[:, None, 1, :] * _SEG_QP[None, :, None]
        vals = np.abs(_eval_scalar(fn, pts, 2))
        total += float(np.sum(np.einsum("fq,q->f", vals ** q, _SEG_QW) * lens))
    return total ** (1.0 / q)
