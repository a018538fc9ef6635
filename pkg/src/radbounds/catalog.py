"""Shipped verification instances: unit-square and rectangle problems spanning
ell in {2, 3, 4}, mixed and pure radiative boundaries, and piecewise-constant
leading coefficients with contrast 4.

Magnitudes are tuned so the interesting instances exceed the level k0 = 1
(the decay studies need max |u| > 1) while staying desk-scale.
"""

from __future__ import annotations

import numpy as np

from .experiments import Instance
from .solver import CoefficientField, SourceData


def _identity(scale=1.0):
    def build(mesh):
        return CoefficientField.identity(mesh, scale)
    return build


def _piecewise_contrast4(mesh):
    """diag(1) on the left half, diag(4) on the right half (contrast 4)."""
    cent = mesh.element_coords().mean(axis=1)
    width = mesh.vertices[:, 0].max()
    mats = np.tile(np.eye(2), (len(mesh.elements), 1, 1))
    mats[cent[:, 0] > 0.5 * width] *= 4.0
    return CoefficientField(mesh, mats, 1.0, 4.0)


def _anisotropic(mesh):
    m = np.array([[2.0, 0.5], [0.5, 1.0]])
    mats = np.tile(m, (len(mesh.elements), 1, 1))
    return CoefficientField(mesh, mats, 0.7, 2.4)


def _bump(c, x0=0.4, y0=0.6, w=8.0):
    return lambda x, y: c * np.exp(-w * ((x - x0) ** 2 + (y - y0) ** 2))


def _cospi(c):
    return lambda x, y: c * np.cos(np.pi * x) * np.cos(np.pi * y)


def _fvec_swirl(c, k=1.0):
    return lambda x, y: (c * np.sin(k * np.pi * y), c * np.cos(k * np.pi * x))


def build_catalog():
    """The shipped instance list (>= 10 solvable n = 2 problems)."""
    inst = []

    inst.append(Instance(
        name="lin-mixed-base", width=1.0, height=1.0,
        gamma_spec={"top": "gamma_n", "right": "gamma_n"},
        ell=2.0, b_star=1.0, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(f=_cospi(24.0), g=lambda x, y: 1.5 + 0.5 * x,
                        h=lambda x, y: 1.0 + np.cos(np.pi * x) ** 2),
        exponents={"p": 4.0, "r": 4.0, "s": 4.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "LinearRN"),
        notes="linear law, mixed tags, smooth mixed data"))

    inst.append(Instance(
        name="lin-pure-gamma-f", width=1.0, height=1.0, gamma_spec={},
        ell=2.0, b_star=0.8, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(f=_bump(30.0)),
        exponents={"p": 2.5, "r": 4.0, "s": 3.0, "t": 2.0, "chi": 1.8},
        methods=("energy", "DeGiorgi", "Moser", "LinearRN", "ladder", "decay"),
        notes="conormal case, interior bump source"))

    inst.append(Instance(
        name="lin-fvec-only", width=1.0, height=1.0, gamma_spec={},
        ell=2.0, b_star=1.0, a_low=1.0, a_high=4.0,
        coeff_builder=_piecewise_contrast4,
        data=SourceData(fvec=_fvec_swirl(8.0)),
        exponents={"p": 2.5, "r": 4.0, "s": 3.0, "t": 2.0, "chi": 1.8},
        methods=("energy", "DeGiorgi", "Moser", "LinearRN", "ladder"),
        notes="pure gradient-type data, discontinuous A"))

    inst.append(Instance(
        name="lin-boundary-only", width=1.0, height=1.0,
        gamma_spec={"top": "gamma_n", "left": "gamma_n"},
        ell=2.0, b_star=1.2, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(g=lambda x, y: 1.2 * (1.0 + x),
                        h=lambda x, y: 1.5 * (1.0 - 0.5 * x)),
        exponents={"p": 4.0, "r": 4.0, "s": 4.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "BoundaryData", "LinearRN"),
        notes="boundary data only"))

    inst.append(Instance(
        name="lin-disc-A", width=1.0, height=1.0,
        gamma_spec={"left": "gamma_n", "right": "gamma_n"},
        ell=2.0, b_star=1.0, a_low=1.0, a_high=4.0,
        coeff_builder=_piecewise_contrast4,
        data=SourceData(f=_cospi(18.0), g=lambda x, y: np.full_like(x, 1.0),
                        h=lambda x, y: np.full_like(x, 1.0)),
        exponents={"p": 4.0, "r": 4.0, "s": 4.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "LinearRN", "decay"),
        notes="contrast-4 interface through the data support"))

    inst.append(Instance(
        name="cubic-mixed", width=1.0, height=1.0,
        gamma_spec={"top": "gamma_n", "right": "gamma_n"},
        ell=3.0, b_star=None, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(f=_bump(26.0), g=lambda x, y: np.full_like(x, 1.5),
                        h=lambda x, y: 2.0 + np.sin(np.pi * x)),
        exponents={"p": 4.0, "r": 4.0, "s": 4.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "decay"),
        notes="cubic radiation law, mixed data"))

    inst.append(Instance(
        name="cubic-moser", width=1.0, height=1.0, gamma_spec={},
        ell=3.0, b_star=None, a_low=1.0, a_high=4.0,
        coeff_builder=_piecewise_contrast4,
        data=SourceData(fvec=_fvec_swirl(5.0), f=_bump(12.0)),
        exponents={"p": 2.5, "r": 4.0, "s": 3.0, "t": 2.0, "chi": 1.7},
        methods=("energy", "DeGiorgi", "Moser", "ladder", "decay"),
        notes="cubic law, interior data only"))

    inst.append(Instance(
        name="cubic-boundary", width=1.0, height=1.0,
        gamma_spec={"top": "gamma_n", "left": "gamma_n"},
        ell=3.0, b_star=None, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(g=lambda x, y: 2.0 * (1.0 + y),
                        h=lambda x, y: 0.5 + 2.5 * np.cos(np.pi * x) ** 2),
        exponents={"p": 4.0, "r": 4.0, "s": 4.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "BoundaryData"),
        notes="cubic law, boundary data only"))

    inst.append(Instance(
        name="quart-mixed", width=1.0, height=1.0,
        gamma_spec={"bottom": "gamma_n", "right": "gamma_n", "top": "gamma_n"},
        ell=4.0, b_star=None, a_low=0.7, a_high=2.4, coeff_builder=_anisotropic,
        data=SourceData(f=_bump(20.0), g=lambda x, y: np.full_like(x, 1.0),
                        h=lambda x, y: np.full_like(x, 1.2)),
        exponents={"p": 4.0, "r": 4.0, "s": 4.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "decay"),
        notes="quartic law, anisotropic constant A, single radiative edge"))

    inst.append(Instance(
        name="quart-moser", width=1.0, height=1.0, gamma_spec={},
        ell=4.0, b_star=None, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(fvec=_fvec_swirl(9.0, k=2.0)),
        exponents={"p": 2.5, "r": 4.0, "s": 3.0, "t": 2.0, "chi": 1.7},
        methods=("energy", "DeGiorgi", "Moser", "ladder"),
        notes="quartic law, pure gradient-type data"))

    inst.append(Instance(
        name="quart-boundary", width=1.0, height=1.0, gamma_spec={},
        ell=4.0, b_star=None, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(h=lambda x, y: 2.0 + np.cos(np.pi * x)),
        exponents={"p": 4.0, "r": 4.0, "s": 3.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "BoundaryData"),
        notes="quartic conormal case, radiative data only"))

    inst.append(Instance(
        name="lin-rect-wide", width=2.0, height=1.0,
        gamma_spec={"top": "gamma_n", "left": "gamma_n", "right": "gamma_n"},
        ell=2.0, b_star=1.0, a_low=1.0, a_high=1.0, coeff_builder=_identity(),
        data=SourceData(f=lambda x, y: 15.0 * np.cos(0.5 * np.pi * x) * np.cos(np.pi * y),
                        g=lambda x, y: np.full_like(x, 0.8),
                        h=lambda x, y: 1.0 + 0.3 * x),
        exponents={"p": 4.0, "r": 4.0, "s": 4.0, "t": 2.0},
        methods=("energy", "DeGiorgi", "LinearRN", "decay"),
        notes="2x1 rectangle, bottom edge radiative"))

    return inst


def get_instance(name):
    for inst in build_catalog():
        if inst.name == name:
            return inst
    raise KeyError(name)
