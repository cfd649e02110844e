"""The three parameter systems for link loss and the maps between them.

theta:  per-link loss rate, the probability a probe dies on the link given
        it reached the link's parent node.
xi:     per-link subtree loss rate, the probability a probe entering the
        subtree rooted at the link reaches none of its receivers.
psi:    natural parameters of the exponential-family form of the
        likelihood; for an internal link this is the log probability that
        the probe passed the link given the whole subtree went dark.

All maps are evaluated leaf-to-root in one pass, no iteration.  theta_to_xi
and xi_to_theta are mutually inverse on the interior domain; xi_to_psi and
psi_to_xi likewise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .topology import GeneralNetwork

XI_BOUNDARY_TOL = 1e-12


@dataclass
class LossRates:
    """Per-link loss rates. Interior means every value in (0, 1)."""

    theta: dict[int, float]

    def __getitem__(self, link_id: int) -> float:
        return self.theta[link_id]

    def is_interior(self) -> bool:
        return all(0.0 < v < 1.0 for v in self.theta.values())


@dataclass
class SubtreeLossRates:
    """Per-link subtree loss rates."""

    xi: dict[int, float]

    def __getitem__(self, link_id: int) -> float:
        return self.xi[link_id]


@dataclass
class NaturalParams:
    """Natural parameters; negative on internal links, any real on leaves."""

    psi: dict[int, float]

    def __getitem__(self, link_id: int) -> float:
        return self.psi[link_id]


def _unwrap(values, attr: str) -> dict[int, float]:
    return getattr(values, attr, values)


def child_product(xi: dict[int, float], net: GeneralNetwork, link_id: int) -> float:
    """Product of xi over the link's child links; 0.0 for a leaf.

    The leaf convention matches the model: a probe that reaches a receiver
    node is observed there with certainty.
    """
    kids = net.child_links[link_id]
    if not kids:
        return 0.0
    prod = 1.0
    for c in kids:
        prod *= xi[c]
    return prod


def theta_to_xi(theta, net: GeneralNetwork) -> SubtreeLossRates:
    """Subtree loss rates from link loss rates (leaf-to-root recursion)."""
    th = _unwrap(theta, "theta")
    xi: dict[int, float] = {}
    for i in reversed(net.order):
        xi[i] = th[i] + (1.0 - th[i]) * child_product(xi, net, i)
    return SubtreeLossRates({i: xi[i] for i in sorted(xi)})


def xi_to_theta(xi, net: GeneralNetwork) -> LossRates:
    """Link loss rates from subtree loss rates.

    Exact inverse of theta_to_xi on the interior domain.  Values outside it
    are mapped raw: a link whose xi does not exceed its children's product
    comes back <= 0 (or -inf when the product reaches 1), so callers can
    detect and project.  Use xi_membership to classify.
    """
    x = _unwrap(xi, "xi")
    theta: dict[int, float] = {}
    for i in sorted(net.links):
        if net.is_leaf(i):
            theta[i] = x[i]
            continue
        prod = child_product(x, net, i)
        denom = 1.0 - prod
        if denom <= 0.0:
            theta[i] = 1.0 if x[i] >= 1.0 else -math.inf
        else:
            theta[i] = (x[i] - prod) / denom
    return LossRates(theta)


def xi_to_psi(xi, net: GeneralNetwork) -> NaturalParams:
    """Natural parameters from subtree loss rates.

    Leaf links: log((1 - xi) / xi).  Internal links: log of the conditional
    pass probability (xi - theta)/xi, computed in the algebraically
    equivalent form pi*(1 - xi) / (xi*(1 - pi)) with pi the child product,
    which avoids cancellation for small rates.
    """
    x = _unwrap(xi, "xi")
    psi: dict[int, float] = {}
    for i in sorted(net.links):
        v = x[i]
        if not 0.0 < v < 1.0:
            raise ValueError(f"xi[{i}]={v} outside (0,1); psi undefined")
        if net.is_leaf(i):
            psi[i] = math.log((1.0 - v) / v)
        else:
            prod = child_product(x, net, i)
            arg = prod * (1.0 - v) / (v * (1.0 - prod))
            if not 0.0 < arg < 1.0:
                # xi at or below the child product: the conditional pass
                # probability is not a probability and psi leaves its domain
                raise ValueError(f"xi[{i}]={v} at or below child product {prod}; psi undefined")
            psi[i] = math.log(arg)
    return NaturalParams(psi)


def psi_to_xi(psi, net: GeneralNetwork) -> SubtreeLossRates:
    """Subtree loss rates from natural parameters (leaf-to-root)."""
    p = _unwrap(psi, "psi")
    xi: dict[int, float] = {}
    for i in reversed(net.order):
        if net.is_leaf(i):
            xi[i] = 1.0 / (1.0 + math.exp(p[i]))
        else:
            prod = child_product(xi, net, i)
            xi[i] = prod / (prod + math.exp(p[i]) * (1.0 - prod))
    return SubtreeLossRates({i: xi[i] for i in sorted(xi)})


def xi_membership(xi, net: GeneralNetwork, tol: float = XI_BOUNDARY_TOL) -> dict[int, str]:
    """Classify each link's xi as 'interior', 'boundary' or 'outside'.

    Internal links are judged by the sign of xi_i minus the product of the
    children's xi; leaves by distance from 0 and 1.
    """
    x = _unwrap(xi, "xi")
    out: dict[int, str] = {}
    for i in sorted(net.links):
        v = x[i]
        if net.is_leaf(i):
            gap = min(v, 1.0 - v)
        else:
            gap = min(v - child_product(x, net, i), 1.0 - v)
        if gap > tol:
            out[i] = "interior"
        elif gap >= -tol:
            out[i] = "boundary"
        else:
            out[i] = "outside"
    return out


def parse_rates(text: str) -> tuple[str, dict[int, float]]:
    """Parse a loss-rate file: lines '<kind> <link_id> <value>'.

    kind is 'theta' or 'xi' and must be the same on every line.
    """
    kind = None
    values: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 3 or tok[0] not in ("theta", "xi"):
            raise ValueError(f"line {lineno}: expected 'theta|xi <link_id> <value>'")
        if kind is None:
            kind = tok[0]
        elif tok[0] != kind:
            raise ValueError(f"line {lineno}: mixed rate kinds {kind!r} and {tok[0]!r}")
        try:
            link, value = int(tok[1]), float(tok[2])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed number in {line!r}") from None
        if link in values:
            raise ValueError(f"line {lineno}: duplicate link {link}")
        values[link] = value
    if kind is None:
        raise ValueError("rate file is empty")
    return kind, values


def serialize_rates(kind: str, values: dict[int, float]) -> str:
    return "".join(f"{kind} {i} {values[i]!r}\n" for i in sorted(values))
