"""Name-based catalogs resolving scenario references to objects.

The names here are the stable public contract of the scenario format:
models {euclidean, hyperbolic, paraboloid, custom}, weights {zero,
gaussian, antigaussian, power, logpow, custom}, submanifolds {sphere,
plane, cylinder, graph, helicoid, grim_curve}.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from . import geometry as ge
from . import radial as rd
from .errors import CatalogError
from .model import WeightedModel


def resolve_warping(spec):
    name = spec.get("name", "euclidean")
    if name == "euclidean":
        return rd.warping_euclidean()
    if name == "hyperbolic":
        return rd.warping_hyperbolic(spec.get("kappa", -1.0))
    if name == "paraboloid":
        return rd.warping_paraboloid()
    if name == "custom":
        profile = rd.RadialProfile.from_expression(spec["expr"])
        return rd.WarpingFunction(profile.fn, profile.d1, profile.d2,
                                  name=spec["expr"], numpy_safe=True)
    raise CatalogError(f"unknown warping {name!r}")


def resolve_weight_profile(spec, warping=None):
    name = spec.get("name", "zero")
    try:
        return rd.weight_catalog_entry(name, w=warping,
                                       **{k: v for k, v in spec.items()
                                          if k != "name"})
    except KeyError as err:
        raise CatalogError(str(err)) from err


def resolve_model(spec):
    warping = resolve_warping(spec.get("warping", spec.get("w", {})))
    weight = resolve_weight_profile(spec.get("weight", spec.get("f", {})),
                                    warping=warping)
    return WeightedModel(int(spec["m"]), warping, weight)


def ambient_weight_from_profile(profile):
    if profile.name == "zero":
        return ge.ZeroWeight()
    return ge.RadialWeight(profile)


def resolve_ambient_weight(spec, m, warping=None):
    """Euclidean ambient weight: radial catalog entries, height, or custom."""
    name = spec.get("name", "zero")
    if name == "zero":
        return ge.ZeroWeight()
    if name == "height":
        mu = resolve_weight_profile(spec.get("mu", {"name": "custom",
                                                    "expr": "t"}))
        return ge.HeightWeight(mu, m)
    if name == "translator":
        mu = rd.RadialProfile(lambda t: t + 0.0 * t, lambda t: 1.0 + 0.0 * t,
                              lambda t: 0.0 * t, name="height", numpy_safe=True)
        return ge.HeightWeight(mu, m)
    if name == "split":
        eta = resolve_ambient_weight(spec["eta"], m - 1, warping)
        mu = resolve_weight_profile(spec["mu"])
        return ge.SplitWeight(eta, mu, m)
    if name == "custom_coords":
        return ge.ExprWeight(spec["expr"], m)
    return ge.RadialWeight(resolve_weight_profile(spec, warping=warping))


def resolve_submanifold(spec, m, weight):
    name = spec["name"]
    if name == "sphere":
        return ge.euclidean_sphere(float(spec["a"]), m, weight)
    if name == "plane":
        if "axes" in spec:
            return ge.coordinate_plane(m, tuple(spec["axes"]), weight)
        return ge.hyperplane(m, np.asarray(spec["normal"], dtype=float),
                             float(spec.get("offset", 0.0)), weight)
    if name == "cylinder":
        return ge.cylinder_hypersurface(float(spec["a"]), int(spec["k"]), m,
                                        weight)
    if name == "graph":
        ast = ex.parse(spec["expr"], [f"x{i + 1}" for i in range(m - 1)])

        def phi(u):
            return ex.evaluate(ast, {f"x{i + 1}": u[i] for i in range(m - 1)})

        window = tuple(tuple(w) for w in spec["window"]) if "window" in spec else None
        return ge.graph_hypersurface(phi, m, weight, window=window,
                                     name=f"graph({spec['expr']})")
    if name == "paraboloid_graph":
        return ge.paraboloid_graph(m, weight)
    if name == "helicoid":
        return ge.helicoid(float(spec.get("pitch", 1.0)), weight)
    if name == "grim_curve":
        return ge.grim_curve()
    if name == "radial_scenario":
        return ge.identity_chart(m, weight)
    raise CatalogError(f"unknown submanifold {name!r}")
