"""Shared fixtures: the bundled example data, built programmatically."""

from __future__ import annotations

import pytest

from ktforest.poly import Poly, RingSpec
from ktforest.resolution import FreeResolution, GeneratorId, ModuleElement


def make_resolution(ring: RingSpec, layers, diff_lines, augment_lines) -> FreeResolution:
    """Build a resolution from label lists and textual d / augmentation rows.

    `layers` is a list of label lists for degrees -1, -2, ...; `diff_lines`
    maps labels to {label: poly-text}; `augment_lines` maps degree -1 labels
    to poly-text.
    """
    gens_by_degree = {}
    by_label = {}
    for depth, labels in enumerate(layers, start=1):
        gens = tuple(GeneratorId(-depth, i, name) for i, name in enumerate(labels))
        gens_by_degree[-depth] = gens
        for g in gens:
            by_label[g.label] = g
    diff = {}
    for label, row in diff_lines.items():
        g = by_label[label]
        terms = {by_label[target]: Poly.parse(text, ring) for target, text in row.items()}
        diff[g] = ModuleElement(ring, terms)
    augment = {by_label[label]: Poly.parse(text, ring) for label, text in augment_lines.items()}
    return FreeResolution(ring, gens_by_degree, diff, augment)


@pytest.fixture(scope="session")
def ring_xy():
    return RingSpec(["x", "y"])


@pytest.fixture(scope="session")
def ring_xyz():
    return RingSpec(["x", "y", "z"])


@pytest.fixture(scope="session")
def quadratic_resolution(ring_xy):
    """Length-2 resolution of K[x,y] / <x^2, xy, y^2>."""
    return make_resolution(
        ring_xy,
        layers=[["pi1", "pi2", "pi3"], ["pi", "pib"]],
        diff_lines={
            "pi": {"pi2": "x", "pi1": "-y"},
            "pib": {"pi3": "x", "pi2": "-y"},
        },
        augment_lines={"pi1": "x^2", "pi2": "x*y", "pi3": "y^2"},
    )


@pytest.fixture(scope="session")
def regular_resolution(ring_xy):
    """Length-2 resolution of K[x,y] / <x^2, y^2> (a Koszul complex)."""
    return make_resolution(
        ring_xy,
        layers=[["pi1", "pi2"], ["pi"]],
        diff_lines={"pi": {"pi2": "x^2", "pi1": "-y^2"}},
        augment_lines={"pi1": "x^2", "pi2": "y^2"},
    )


@pytest.fixture(scope="session")
def monomial3_resolution(ring_xyz):
    """Length-3 resolution of K[x,y,z] / <x^2, yz, xz, xy>, ranks 4,4,1."""
    return make_resolution(
        ring_xyz,
        layers=[["e1", "e2", "e3", "e4"], ["e13", "e14", "e24", "e34"], ["e134"]],
        diff_lines={
            "e13": {"e3": "x", "e1": "-z"},
            "e14": {"e4": "x", "e1": "-y"},
            "e24": {"e4": "z", "e2": "-x"},
            "e34": {"e4": "z", "e3": "-y"},
            "e134": {"e34": "x", "e14": "-z", "e13": "y"},
        },
        augment_lines={"e1": "x^2", "e2": "y*z", "e3": "x*z", "e4": "x*y"},
    )
