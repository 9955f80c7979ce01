"""Text format for reaction networks (.crn) and its canonical serializer.

Grammar, one statement per line, '#' comments::

    species  := "species" ident+
    kinetics := "kinetics" ident "=" ("mass_action" | "mm(" real ")")
    reaction := complex arrow complex "@" rate ("," rate)?
    arrow    := "->" | "<->"
    complex  := term ("+" term)*
    term     := [coeff] ident

Species may be declared up front or are auto-declared in first-use order.
Distinct complexes become columns of B in first-appearance order; repeated
edges accumulate their rates.  The empty complex ("0") is rejected because
complex vectors must be nonzero and linearly independent.  Rates are printed
with 17 significant digits, so parse(serialize(net)) reproduces the network
bit for bit.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ParseError, ValidationError
from .kinetics import Kinetics
from .network import ReactionNetwork, validate

__all__ = ["parse", "serialize"]

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM_RE = re.compile(rf"^\s*(?:({_NUM})\s*)?({_IDENT})\s*$")
_KINETICS_RE = re.compile(
    rf"^kinetics\s+({_IDENT})\s*=\s*(mass_action|mm\(\s*({_NUM})\s*\))\s*$"
)
_SPECIES_RE = re.compile(rf"^species(\s+{_IDENT})+\s*$")
_REACTION_RE = re.compile(
    rf"^(?P<lhs>[^-<>@]+?)\s*(?P<arrow><->|->)\s*(?P<rhs>[^@]+?)\s*@\s*"
    rf"(?P<r1>{_NUM})\s*(?:,\s*(?P<r2>{_NUM})\s*)?$"
)


class _Doc:
    def __init__(self):
        self.species: list[str] = []
        self.index: dict[str, int] = {}
        self.kinetics: dict[str, Kinetics] = {}
        self.complexes: list[tuple[tuple[int, float], ...]] = []
        self.cpx_index: dict[tuple, int] = {}
        self.cpx_line: list[int] = []
        self.edges: list[tuple[int, int, float]] = []  # (src, dst, rate)
        self.last_reaction_line = 0

    def species_id(self, name: str) -> int:
        if name not in self.index:
            self.index[name] = len(self.species)
            self.species.append(name)
        return self.index[name]

    def complex_id(self, terms, lineno) -> int:
        key = tuple(sorted(terms.items()))
        if key not in self.cpx_index:
            self.cpx_index[key] = len(self.complexes)
            self.complexes.append(key)
            self.cpx_line.append(lineno)
        return self.cpx_index[key]


def _parse_complex(text: str, doc: _Doc, lineno: int) -> int:
    text = text.strip()
    if text == "0":
        raise ParseError(
            "empty complexes are not supported: complex vectors must be "
            "nonzero and linearly independent",
            lineno,
        )
    terms: dict[int, float] = {}
    for part in text.split("+"):
        mt = _TERM_RE.match(part)
        if not mt:
            raise ParseError(f"cannot parse complex term {part.strip()!r}", lineno)
        coeff = float(mt.group(1)) if mt.group(1) else 1.0
        if coeff <= 0:
            raise ParseError(f"coefficient {coeff} must be positive", lineno)
        if coeff < 1.0:
            raise ParseError(
                f"coefficient {coeff} lies in (0, 1); entries must be 0 or >= 1",
                lineno,
            )
        k = doc.species_id(mt.group(2))
        terms[k] = terms.get(k, 0.0) + coeff
    return doc.complex_id(terms, lineno)


def _parse_rate(tok: str, lineno: int) -> float:
    rate = float(tok)
    if rate <= 0:
        raise ParseError(f"rate must be positive, got {tok}", lineno)
    return rate


def parse(text: str, check: bool = True) -> ReactionNetwork:
    """Parse a .crn document into a :class:`ReactionNetwork`.

    With ``check=True`` (default) the structural hypotheses are verified and
    a failure raises :class:`ValidationError` carrying line diagnostics;
    ``check=False`` skips that step so callers can inspect broken networks.
    """
    doc = _Doc()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("species"):
            if not _SPECIES_RE.match(line):
                raise ParseError("malformed species declaration", lineno)
            for name in line.split()[1:]:
                doc.species_id(name)
            continue
        if line.startswith("kinetics"):
            mk = _KINETICS_RE.match(line)
            if not mk:
                raise ParseError("malformed kinetics directive", lineno)
            name = mk.group(1)
            if name in doc.kinetics:
                raise ParseError(f"duplicate kinetics directive for {name!r}", lineno)
            if mk.group(2) == "mass_action":
                doc.kinetics[name] = Kinetics.mass_action()
            else:
                doc.kinetics[name] = Kinetics.michaelis_menten(float(mk.group(3)))
            doc.species_id(name)
            continue
        mr = _REACTION_RE.match(line)
        if not mr:
            raise ParseError(f"cannot parse statement {line!r}", lineno)
        src = _parse_complex(mr.group("lhs"), doc, lineno)
        dst = _parse_complex(mr.group("rhs"), doc, lineno)
        fwd = _parse_rate(mr.group("r1"), lineno)
        doc.edges.append((src, dst, fwd))
        if mr.group("arrow") == "<->":
            if mr.group("r2") is None:
                raise ParseError("reversible reaction needs two rates", lineno)
            doc.edges.append((dst, src, _parse_rate(mr.group("r2"), lineno)))
        elif mr.group("r2") is not None:
            raise ParseError("one-way reaction takes a single rate", lineno)
        doc.last_reaction_line = lineno

    if not doc.edges:
        raise ParseError("document contains no reactions", doc.last_reaction_line or 1)

    n, m = len(doc.species), len(doc.complexes)
    B = np.zeros((n, m))
    for j, terms in enumerate(doc.complexes):
        for k, coeff in terms:
            B[k, j] = coeff
    A = np.zeros((m, m))
    for src, dst, rate in doc.edges:
        A[dst, src] += rate
    kin = tuple(
        doc.kinetics.get(name, Kinetics.mass_action()) for name in doc.species
    )
    net = ReactionNetwork(A, B, kinetics=kin, species=doc.species)

    if check:
        report = validate(net)
        if not report.ok:
            msgs = []
            for c in report.failures():
                line = doc.last_reaction_line
                if c.name == "irreducible" and c.detail:
                    hit = re.search(r"complex (\d+) unreachable", c.detail)
                    if hit:
                        line = doc.cpx_line[int(hit.group(1)) - 1]
                msgs.append(f"line {line}: {c.name} failed ({c.detail})")
            raise ValidationError("; ".join(msgs))
    return net


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return format(v, ".17g")


def _fmt_complex(net: ReactionNetwork, j: int) -> str:
    parts = []
    for k in range(net.n):
        b = net.B[k, j]
        if b == 0.0:
            continue
        if b == 1.0:
            parts.append(net.species[k])
        else:
            parts.append(f"{_fmt_num(b)} {net.species[k]}")
    return " + ".join(parts)


def serialize(net: ReactionNetwork) -> str:
    """Canonical .crn text; one line per positive off-diagonal entry of A."""
    lines = ["species " + " ".join(net.species)]
    for name, kin in zip(net.species, net.kinetics):
        if kin.kind != "mass_action":
            lines.append(f"kinetics {name} = mm({format(kin.K, '.17g')})")
    for j in range(net.m):
        for i in range(net.m):
            if i != j and net.A[i, j] > 0:
                lines.append(
                    f"{_fmt_complex(net, j)} -> {_fmt_complex(net, i)}"
                    f" @ {format(net.A[i, j], '.17g')}"
                )
    return "\n".join(lines) + "\n"
