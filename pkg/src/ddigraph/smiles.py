"""Restricted SMILES reader producing heavy-atom molecular graphs.

Supported: organic-subset atoms, bracket atoms (isotope, chirality, H count,
charge, atom class), bonds ``- = # :`` plus ``/ \\`` (read as single),
branches, ring closures ``0-9`` and ``%nn``, and ``.``-separated components,
which end up as disconnected parts of one graph.

Isotopes, chirality and bond direction are discarded. Aromaticity is taken
from the input notation only; nothing is perceived from Kekulé forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from ddigraph.errors import (
    EmptySmiles,
    SmilesError,
    UnbalancedParens,
    UnclosedRing,
    UnknownToken,
    UnterminatedBracket,
    ValenceError,
)

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()
_ELEMENT_SET = frozenset(ELEMENTS)

ORGANIC_SUBSET = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
BRACKET_AROMATIC = ("se", "as", "te", "b", "c", "n", "o", "p", "s")

# Allowed valences in increasing order; the first one that fits is used.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}
# Aromatic atoms that contribute one electron to the pi system use up one
# extra valence unit; o and s donate a lone pair instead.
_PI_ONE_ELECTRON = frozenset({"B", "C", "N", "P"})

BOND_SYMBOLS = "-=#:/\\"


class BondKind(Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"

    @property
    def order(self) -> int:
        # aromatic bonds count 1 towards valence; the pi share is added per atom
        return {"single": 1, "double": 2, "triple": 3, "aromatic": 1}[self.value]


_SYMBOL_KIND = {
    "-": BondKind.SINGLE,
    "/": BondKind.SINGLE,
    "\\": BondKind.SINGLE,
    "=": BondKind.DOUBLE,
    "#": BondKind.TRIPLE,
    ":": BondKind.AROMATIC,
}


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    is_aromatic: bool = False
    implicit_hydrogens: int = 0
    degree: int = 0
    in_brackets: bool = False
    # hydrogens added by the valence rule (always 0 for bracket atoms)
    implicit_valence: int = 0


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    kind: BondKind
    is_conjugated: bool = False
    is_in_ring: bool = False


@dataclass(frozen=True)
class MolecularGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    adjacency: tuple[tuple[int, ...], ...]
    n_components: int = 1
    ring_closures: int = 0
    smiles: str = ""

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def permuted(self, perm) -> "MolecularGraph":
        """Relabel atoms so that old atom ``i`` becomes atom ``perm[i]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.n_atoms)):
            raise ValueError("perm must be a permutation of range(n_atoms)")
        atoms = [None] * self.n_atoms
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = tuple(replace(b, begin=perm[b.begin], end=perm[b.end]) for b in self.bonds)
        return replace(self, atoms=tuple(atoms), bonds=bonds, adjacency=_adjacency(len(atoms), bonds))


@dataclass(frozen=True)
class Token:
    kind: str  # atom | bond | open | close | ring | dot
    text: str
    pos: int
    element: str = ""
    aromatic: bool = False
    bracket: bool = False
    hcount: int = 0
    charge: int = 0
    ring: int = -1

    def __repr__(self):
        if self.kind == "atom":
            return f"Atom {self.text}"
        if self.kind == "bond":
            return f"Bond {self.text}"
        if self.kind == "ring":
            return f"Ring {self.ring}"
        return self.kind.capitalize()


def tokenize(smiles: str) -> list[Token]:
    if not smiles:
        raise EmptySmiles("empty SMILES", smiles, 0)
    tokens = []
    i, n = 0, len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            end = smiles.find("]", i + 1)
            if end < 0:
                raise UnterminatedBracket("unterminated bracket atom", smiles, i)
            tokens.append(_bracket_atom(smiles, i, end))
            i = end + 1
        elif smiles.startswith(("Cl", "Br"), i):
            tokens.append(Token("atom", smiles[i : i + 2], i, element=smiles[i : i + 2]))
            i += 2
        elif ch in "BCNOPSFI":
            tokens.append(Token("atom", ch, i, element=ch))
            i += 1
        elif ch in AROMATIC_ORGANIC:
            tokens.append(Token("atom", ch, i, element=ch.upper(), aromatic=True))
            i += 1
        elif ch in BOND_SYMBOLS:
            tokens.append(Token("bond", ch, i))
            i += 1
        elif ch == "(":
            tokens.append(Token("open", ch, i))
            i += 1
        elif ch == ")":
            tokens.append(Token("close", ch, i))
            i += 1
        elif ch.isdigit():
            tokens.append(Token("ring", ch, i, ring=int(ch)))
            i += 1
        elif ch == "%":
            digits = smiles[i + 1 : i + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise UnknownToken("'%' must be followed by two digits", smiles, i)
            tokens.append(Token("ring", smiles[i : i + 3], i, ring=int(digits)))
            i += 3
        elif ch == ".":
            tokens.append(Token("dot", ch, i))
            i += 1
        else:
            raise UnknownToken(f"unknown token {ch!r}", smiles, i)
    return tokens


def _bracket_atom(smiles: str, start: int, end: int) -> Token:
    body = smiles[start + 1 : end]
    j = 0

    def fail(msg):
        raise UnknownToken(msg, smiles, start + 1 + j)

    while j < len(body) and body[j].isdigit():  # isotope
        j += 1
    aromatic = False
    for sym in BRACKET_AROMATIC:
        if body.startswith(sym, j):
            element, aromatic = sym.capitalize(), True
            j += len(sym)
            break
    else:
        if len(body[j : j + 2]) == 2 and body[j : j + 2] in _ELEMENT_SET:
            element = body[j : j + 2]
            j += 2
        elif body[j : j + 1] in _ELEMENT_SET:
            element = body[j]
            j += 1
        else:
            fail("unknown element in bracket atom")
    if j < len(body) and body[j] == "@":
        j += 1
        if j < len(body) and body[j] == "@":
            j += 1
        elif body[j : j + 2] in ("TH", "AL", "SP", "TB", "OH"):
            j += 2
            while j < len(body) and body[j].isdigit():
                j += 1
    hcount = 0
    if j < len(body) and body[j] == "H":
        j += 1
        hcount = 1
        if j < len(body) and body[j].isdigit():
            hcount = int(body[j])
            j += 1
    charge = 0
    if j < len(body) and body[j] in "+-":
        sign = 1 if body[j] == "+" else -1
        k = j
        while k < len(body) and body[k] == body[j]:
            k += 1
        if k - j > 1:
            charge = sign * (k - j)
            j = k
        else:
            j += 1
            digits = ""
            while j < len(body) and body[j].isdigit():
                digits += body[j]
                j += 1
            charge = sign * (int(digits) if digits else 1)
    if j < len(body) and body[j] == ":":
        j += 1
        if j == len(body) or not body[j].isdigit():
            fail("atom class needs digits")
        while j < len(body) and body[j].isdigit():
            j += 1
    if j != len(body):
        fail("unexpected character in bracket atom")
    return Token(
        "atom",
        smiles[start : end + 1],
        start,
        element=element,
        aromatic=aromatic,
        bracket=True,
        hcount=hcount,
        charge=charge,
    )


@dataclass
class _Builder:
    smiles: str
    atoms: list = field(default_factory=list)  # Token per atom
    bonds: list = field(default_factory=list)  # [a, b, symbol or None]
    pairs: set = field(default_factory=set)

    def add_bond(self, a, b, symbol, pos):
        key = (min(a, b), max(a, b))
        if a == b:
            raise SmilesError("ring closure onto the same atom", self.smiles, pos)
        if key in self.pairs:
            raise SmilesError("duplicate bond", self.smiles, pos)
        self.pairs.add(key)
        self.bonds.append([a, b, symbol])


def parse(smiles: str) -> MolecularGraph:
    tokens = tokenize(smiles)
    st = _Builder(smiles)
    prev = None
    pending = None  # (symbol, pos)
    branches = []  # (atom index, pos of '(')
    rings = {}  # ring number -> (atom index, bond symbol or None, pos)
    closures = 0

    for tok in tokens:
        if tok.kind == "atom":
            idx = len(st.atoms)
            st.atoms.append(tok)
            if prev is not None:
                st.add_bond(prev, idx, pending[0] if pending else None, tok.pos)
            elif pending:
                raise SmilesError("bond symbol without a preceding atom", smiles, pending[1])
            prev, pending = idx, None
        elif tok.kind == "bond":
            if pending or prev is None:
                raise SmilesError("misplaced bond symbol", smiles, tok.pos)
            pending = (tok.text, tok.pos)
        elif tok.kind == "open":
            if prev is None or pending:
                raise UnbalancedParens("branch must follow an atom", smiles, tok.pos)
            branches.append((prev, tok.pos))
        elif tok.kind == "close":
            if not branches:
                raise UnbalancedParens("unmatched ')'", smiles, tok.pos)
            if pending:
                raise SmilesError("dangling bond symbol", smiles, pending[1])
            prev = branches.pop()[0]
        elif tok.kind == "ring":
            if prev is None:
                raise SmilesError("ring closure without a preceding atom", smiles, tok.pos)
            symbol = pending[0] if pending else None
            if tok.ring in rings:
                partner, other, _ = rings.pop(tok.ring)
                if symbol and other and _SYMBOL_KIND[symbol] != _SYMBOL_KIND[other]:
                    raise SmilesError("conflicting ring-closure bond orders", smiles, tok.pos)
                st.add_bond(partner, prev, symbol or other, tok.pos)
                closures += 1
            else:
                rings[tok.ring] = (prev, symbol, tok.pos)
            pending = None
        else:  # dot
            if pending:
                raise SmilesError("dangling bond symbol", smiles, pending[1])
            if prev is None or branches:
                raise SmilesError("'.' must separate two complete components", smiles, tok.pos)
            prev = None

    if pending:
        raise SmilesError("dangling bond symbol", smiles, pending[1])
    if tokens[-1].kind == "dot":
        raise SmilesError("'.' must separate two complete components", smiles, tokens[-1].pos)
    if branches:
        raise UnbalancedParens("unclosed '('", smiles, branches[-1][1])
    if rings:
        num, (_, _, pos) = min(rings.items(), key=lambda kv: kv[1][2])
        raise UnclosedRing(f"ring {num} never closed", smiles, pos)
    if not st.atoms:
        raise EmptySmiles("no atoms", smiles, 0)
    return _finish(st, closures)


def _finish(st: _Builder, closures: int) -> MolecularGraph:
    toks = st.atoms
    # fold neutral [H] leaves into their heavy neighbour
    extra_h = [0] * len(toks)
    drop = set()
    degree = [0] * len(toks)
    for a, b, _ in st.bonds:
        degree[a] += 1
        degree[b] += 1
    for a, b, _ in st.bonds:
        for h, heavy in ((a, b), (b, a)):
            t = toks[h]
            if (
                t.element == "H" and t.bracket and t.charge == 0 and degree[h] == 1
                and toks[heavy].element != "H" and h not in drop
            ):
                drop.add(h)
                extra_h[heavy] += 1 + t.hcount
    keep = [i for i in range(len(toks)) if i not in drop]
    remap = {old: new for new, old in enumerate(keep)}
    raw = []
    for a, b, sym in st.bonds:
        if a in drop or b in drop:
            continue
        ta, tb = toks[a], toks[b]
        if sym is None:
            kind = BondKind.AROMATIC if ta.aromatic and tb.aromatic else BondKind.SINGLE
        else:
            kind = _SYMBOL_KIND[sym]
        raw.append((remap[a], remap[b], kind, sym is None))

    n = len(keep)
    pairs = [(a, b) for a, b, _, _ in raw]
    n_components = _count_components(n, pairs)
    ring_flags = _ring_bonds(n, pairs)
    kinds = []
    for (a, b, kind, implicit), in_ring in zip(raw, ring_flags):
        # an unmarked bond between aromatic atoms outside a ring (biaryl link) is single
        if implicit and kind is BondKind.AROMATIC and not in_ring:
            kind = BondKind.SINGLE
        kinds.append(kind)

    multiple = [False] * n
    bond_sum = [0] * n
    n_bonds = [0] * n
    for (a, b, _, _), kind in zip(raw, kinds):
        for v in (a, b):
            bond_sum[v] += kind.order
            n_bonds[v] += 1
            if kind is not BondKind.SINGLE:
                multiple[v] = True

    atoms = []
    for new, old in enumerate(keep):
        t = toks[old]
        used = bond_sum[new] + extra_h[old]
        if t.bracket:
            hyd = t.hcount + extra_h[old]
            allowed = VALENCES.get(t.element)
            if allowed and used + t.hcount > max(allowed) + abs(t.charge):
                raise ValenceError(f"{t.text} exceeds its valence", st.smiles, t.pos)
            implicit = 0
        else:
            implicit = _implicit_h(t, used, st.smiles)
            hyd = implicit + extra_h[old]
        atoms.append(
            Atom(
                element=t.element,
                formal_charge=t.charge,
                is_aromatic=t.aromatic,
                implicit_hydrogens=hyd,
                degree=n_bonds[new],
                in_brackets=t.bracket,
                implicit_valence=implicit,
            )
        )

    bonds = tuple(
        Bond(
            a,
            b,
            kind,
            is_conjugated=kind is BondKind.AROMATIC or (multiple[a] and multiple[b]),
            is_in_ring=in_ring,
        )
        for (a, b, _, _), kind, in_ring in zip(raw, kinds, ring_flags)
    )
    return MolecularGraph(
        atoms=tuple(atoms),
        bonds=bonds,
        adjacency=_adjacency(n, bonds),
        n_components=n_components,
        ring_closures=closures,
        smiles=st.smiles,
    )


def _implicit_h(tok: Token, used: int, smiles: str) -> int:
    allowed = VALENCES[tok.element]
    if used > max(allowed):
        raise ValenceError(f"{tok.text} exceeds its valence", smiles, tok.pos)
    if tok.aromatic:
        pi = 1 if tok.element in _PI_ONE_ELECTRON else 0
        return max(0, allowed[0] - used - pi)
    for v in allowed:
        if v >= used:
            return v - used
    raise ValenceError(f"{tok.text} exceeds its valence", smiles, tok.pos)


def _adjacency(n, bonds) -> tuple[tuple[int, ...], ...]:
    adj = [[] for _ in range(n)]
    for b in bonds:
        adj[b.begin].append(b.end)
        adj[b.end].append(b.begin)
    return tuple(tuple(a) for a in adj)


def _count_components(n, pairs) -> int:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        parent[find(a)] = find(b)
    return len({find(i) for i in range(n)})


def _ring_bonds(n, pairs) -> list[bool]:
    """A bond is a ring bond iff it is not a bridge."""
    adj = [[] for _ in range(n)]
    for k, (a, b) in enumerate(pairs):
        adj[a].append((b, k))
        adj[b].append((a, k))
    disc = [-1] * n
    low = [0] * n
    bridge = [False] * len(pairs)
    counter = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = counter
        counter += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, via, it = stack[-1]
            for w, k in it:
                if k == via:
                    continue
                if disc[w] < 0:
                    disc[w] = low[w] = counter
                    counter += 1
                    stack.append((w, k, iter(adj[w])))
                    break
                low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridge[via] = True
    return [not b for b in bridge]
