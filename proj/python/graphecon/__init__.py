"""Graphical exchange economies with resale: solver, verifiers, fixtures.

Thin dict-level wrappers around the C++ core. Exact-mode scalars cross the
boundary as "num/den" strings inside JSON documents.
"""

import json

from . import _core

__version__ = _core.__version__


def check(economy, mode=""):
    """Run the five existence-assumption checks on an economy dict."""
    return json.loads(_core.check(json.dumps(economy), mode))


def solve(economy, eps="1/10", force=False, instrument="sampled", mode=""):
    """Compute a (1+eps)-approximate b-resale equilibrium.

    Returns {"certificate": {...}, "stats": {...}}.
    """
    return json.loads(_core.solve(json.dumps(economy), str(eps), force, instrument, mode))


def verify(economy, certificate, kind="exact", value="", mode=""):
    """Verify a certificate: kind in {"exact", "approx", "kko", "ad"}."""
    return json.loads(
        _core.verify(json.dumps(economy), json.dumps(certificate), kind, str(value), mode)
    )


def gen_fixture(name, b="1/2", eps_pad="1/10", m=6, alpha="2", mode=""):
    """Worked economies: broker, asymmetric-broker, epsilon-kko,
    breadth-chain, pmax-chain."""
    return json.loads(_core.gen_fixture(name, str(b), str(eps_pad), m, str(alpha), mode))


def brute_force(economy, depth=12, tol="1/20", mode=""):
    """Grid-search approximate equilibria on desk-scale economies."""
    return json.loads(_core.brute_force(json.dumps(economy), depth, str(tol), mode))


__all__ = ["check", "solve", "verify", "gen_fixture", "brute_force", "__version__"]
