"""Skipped-attention 2-D to 3-D pose lifting."""

import json
from fractions import Fraction

from . import _core
from ._core import GsfError, mpjpe, p_mpjpe, run_cli, skip_partition, synth_generate

__all__ = [
    "GsfError",
    "Model",
    "analytic_skt",
    "analytic_ssa",
    "analytic_stt",
    "analytic_vanilla",
    "cost_report",
    "default_config",
    "mpjpe",
    "p_mpjpe",
    "param_count",
    "run_cli",
    "skip_partition",
    "synth_generate",
]


def _fraction(pair):
    value = Fraction(*pair)
    return value.numerator if value.denominator == 1 else value


def analytic_ssa(frames, dim, interval):
    return _fraction(_core.analytic_ssa(frames, dim, interval))


def analytic_skt(frames, dim, interval):
    return _fraction(_core.analytic_skt(frames, dim, interval))


def analytic_stt(frames, dim, kernel=3, stride=3):
    return _fraction(_core.analytic_stt(frames, dim, kernel, stride))


def analytic_vanilla(frames, dim):
    return _fraction(_core.analytic_vanilla(frames, dim))


def _config_text(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def default_config():
    return json.loads(_core.default_config_json())


def cost_report(config=None, kernel=3, stride=3):
    return json.loads(_core.cost_report_json(_config_text(config), kernel, stride))


def param_count(config=None):
    return _core.param_count(_config_text(config))


class Model:
    """Thin wrapper over the C++ model; `config` holds model fields such as T, D, C, heads, m, L1, L2."""

    def __init__(self, config=None, seed=0, _impl=None):
        self._impl = _impl if _impl is not None else _core.Model(_config_text(config), seed)

    @classmethod
    def load(cls, path):
        return cls(_impl=_core.Model.load(str(path)))

    def save(self, path):
        self._impl.save(str(path))

    @property
    def config(self):
        return json.loads(self._impl.config_json())

    def param_count(self):
        return self._impl.param_count()

    def forward(self, frames):
        """frames: (T, J, 2) normalized 2-D poses -> ((T, J, 3), (J, 3)) in millimeters."""
        return self._impl.forward(frames)
