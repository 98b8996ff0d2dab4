"""Python access to the renewalkit core.

Network arguments accept a JSON string, a dict in the network file format, or a path.
"""

import json
import os

from . import _renewalkit as _rk
from ._renewalkit import InputError, NumericError, expm, presets, demo, approximate_uniform

__all__ = [
    "InputError",
    "NumericError",
    "expm",
    "scalar_kernels",
    "solve",
    "ode_deviation",
    "markovianity",
    "detailed_balance",
    "approximate_uniform",
    "presets",
    "demo",
]


def _doc(network):
    if isinstance(network, dict):
        return json.dumps(network)
    if isinstance(network, (str, os.PathLike)) and os.path.exists(network):
        with open(network, encoding="utf-8") as f:
            return f.read()
    return network


def scalar_kernels(network, t_max, dt):
    return _rk.scalar_kernels(_doc(network), t_max, dt)


def solve(network, t_max, dt, scalar=False):
    return _rk.solve(_doc(network), t_max, dt, scalar)


def ode_deviation(network, t_max, dt):
    return _rk.ode_deviation(_doc(network), t_max, dt)


def markovianity(network, t_max, dt):
    return _rk.markovianity(_doc(network), t_max, dt)


def detailed_balance(network):
    return _rk.detailed_balance(_doc(network))
