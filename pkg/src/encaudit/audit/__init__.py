"""Audit engines: the plaintext reference ``reduce`` and ``ereduce`` over
plain, DET and KH logs."""

from .engine import (Engine, EvaluationError, MissingToken, Trace, binds,
                     ereduce, esat, esat_hat, provmap, restrict, sub_extends)
from .reduce import reduce, sat
from .simplify import normalize, simplify

__all__ = ["Engine", "EvaluationError", "MissingToken", "Trace", "binds",
           "ereduce", "esat", "esat_hat", "provmap", "restrict", "sub_extends",
           "reduce", "sat", "normalize", "simplify"]
