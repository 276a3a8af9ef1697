import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddigraph.errors import (
    EmptyInput,
    SmilesError,
    UnbalancedParens,
    UnclosedRing,
    UnknownToken,
    UnterminatedBracket,
    ValenceError,
)
from ddigraph.smiles import BondKind, parse, tokenize

from conftest import DATA


def corpus():
    rows = []
    for line in (DATA / "parser_corpus.tsv").read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        smi, n_atoms, n_bonds, degrees = line.split("\t")
        rows.append((smi, int(n_atoms), int(n_bonds), [int(d) for d in degrees.split()]))
    return rows


CORPUS = corpus()


def test_corpus_has_25_molecules():
    assert len(CORPUS) == 25


@pytest.mark.parametrize("smi,n_atoms,n_bonds,degrees", CORPUS, ids=[r[0] for r in CORPUS])
def test_corpus_counts(smi, n_atoms, n_bonds, degrees):
    g = parse(smi)
    assert g.n_atoms == n_atoms
    assert len(g.bonds) == n_bonds
    assert [a.degree for a in g.atoms] == degrees


def test_tokenize_examples():
    assert [repr(t) for t in tokenize("CCO")] == ["Atom C", "Atom C", "Atom O"]
    assert [repr(t) for t in tokenize("C(=O)O")] == ["Atom C", "Open", "Bond =", "Atom O", "Close", "Atom O"]
    rings = [t for t in tokenize("C%10CC%10") if t.kind == "ring"]
    assert [t.ring for t in rings] == [10, 10]


def test_bracket_token_fields():
    (tok,) = tokenize("[13CH3-]")
    assert (tok.element, tok.hcount, tok.charge, tok.bracket) == ("C", 3, -1, True)
    (tok,) = tokenize("[Fe+2]")
    assert (tok.element, tok.charge) == ("Fe", 2)
    (tok,) = tokenize("[nH]")
    assert tok.aromatic and tok.hcount == 1


def test_methane_hydrogens():
    g = parse("C")
    assert g.n_atoms == 1 and not g.bonds
    assert g.atoms[0].implicit_hydrogens == 4


def test_benzene_aromatic():
    g = parse("c1ccccc1")
    assert all(a.is_aromatic and a.element == "C" for a in g.atoms)
    assert all(b.kind is BondKind.AROMATIC and b.is_in_ring for b in g.bonds)
    assert [a.implicit_hydrogens for a in g.atoms] == [1] * 6


def test_hydrogen_counts():
    assert [a.implicit_hydrogens for a in parse("CC(=O)O").atoms] == [3, 0, 0, 1]
    assert [a.implicit_hydrogens for a in parse("C#N").atoms] == [1, 0]
    # bracket atoms trust their explicit count
    assert parse("[CH2]").atoms[0].implicit_hydrogens == 2
    assert parse("[NH4+]").atoms[0].formal_charge == 1
    # sulfonamide sulfur uses its hexavalent state
    s = [a for a in parse("CS(=O)(=O)N").atoms if a.element == "S"][0]
    assert s.implicit_hydrogens == 0


def test_explicit_hydrogen_atoms_fold_into_neighbour():
    g = parse("[H]C([H])([H])[H]")
    assert g.n_atoms == 1 and g.atoms[0].implicit_hydrogens == 4


def test_stereo_and_isotope_discarded():
    assert parse("F/C=C/F").bonds == parse("FC=CF").bonds
    assert parse("[13CH3][C@@H](O)F").atoms == parse("[CH3][CH](O)F").atoms


def test_components_and_ring_flags():
    assert parse("[Na+].[Cl-]").n_components == 2
    g = parse("C1CC1C")
    assert [b.is_in_ring for b in g.bonds] == [True, True, True, False]


def test_conjugation_rule():
    # the bond itself carries the multiple-bond evidence for both endpoints
    assert parse("C#N").bonds[0].is_conjugated
    g = parse("C=CC=C")
    assert [b.is_conjugated for b in g.bonds] == [True, True, True]
    assert [b.is_conjugated for b in parse("C=CCC").bonds] == [True, False, False]


@pytest.mark.parametrize(
    "smi,exc,pos",
    [
        ("", EmptyInput, 0),
        ("C$C", UnknownToken, 1),
        ("C[Cu", UnterminatedBracket, 1),
        ("C1CC", UnclosedRing, 1),
        ("C(C", UnbalancedParens, 1),
        ("CC)", UnbalancedParens, 2),
        ("C(C)(C)(C)(C)C", ValenceError, 0),
        ("O=O=O", ValenceError, 2),
        ("C%1C", UnknownToken, 1),
        ("C==C", SmilesError, 2),
        (".C", SmilesError, 0),
        ("CC.", SmilesError, 2),
    ],
)
def test_errors_carry_offsets(smi, exc, pos):
    with pytest.raises(exc) as info:
        parse(smi)
    assert info.value.position == pos
    assert f"offset {pos}" in str(info.value)


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        parse("C(")


# ---------------------------------------------------------------- properties


@st.composite
def tree_smiles(draw):
    """A random carbon skeleton written as SMILES, with its true graph as oracle.

    A random parent array defines a tree; extra ring-closure edges join
    non-adjacent atoms. Degrees are capped at 4 so every atom is a valid carbon.
    """
    n = draw(st.integers(1, 14))
    parent = [-1] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    edges = {(parent[i], i) for i in range(1, n)}
    deg = [0] * n
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    if any(d > 4 for d in deg):
        # fold overfull nodes onto a chain instead of rejecting the sample
        parent = [-1] + list(range(n - 1))
        edges = {(i - 1, i) for i in range(1, n)}
        deg = [min(i, 1) + (1 if i < n - 1 else 0) for i in range(n)]
    rings = []
    for _ in range(draw(st.integers(0, 3))):
        if n < 3:
            break
        a = draw(st.integers(0, n - 1))
        b = draw(st.integers(0, n - 1))
        a, b = min(a, b), max(a, b)
        if a == b or (a, b) in edges or deg[a] >= 4 or deg[b] >= 4:
            continue
        edges.add((a, b))
        deg[a] += 1
        deg[b] += 1
        rings.append((a, b))

    children = [[] for _ in range(n)]
    for i in range(1, n):
        children[parent[i]].append(i)
    labels = {}
    for k, (a, b) in enumerate(rings):
        labels.setdefault(a, []).append(10 + k)
        labels.setdefault(b, []).append(10 + k)

    order = []

    def emit(v):
        order.append(v)
        text = "C" + "".join(f"%{r}" for r in labels.get(v, []))
        kids = children[v]
        for c in kids[:-1]:
            text += "(" + emit(c) + ")"
        if kids:
            text += emit(kids[-1])
        return text

    smi = emit(0)
    rank = {v: i for i, v in enumerate(order)}
    degrees = [0] * n
    for a, b in edges:
        degrees[rank[a]] += 1
        degrees[rank[b]] += 1
    return smi, n, len(edges), degrees, len(rings)


@settings(max_examples=200, deadline=None)
@given(tree_smiles())
def test_random_skeletons_match_generator(case):
    smi, n, n_edges, degrees, n_rings = case
    g = parse(smi)
    assert g.n_atoms == n
    assert len(g.bonds) == n_edges
    assert [a.degree for a in g.atoms] == degrees
    # Euler relation on one connected component
    assert len(g.bonds) == g.n_atoms - g.n_components + g.ring_closures
    assert g.ring_closures == n_rings
    assert g.atoms[0].implicit_hydrogens == 4 - degrees[0]


@settings(max_examples=100, deadline=None)
@given(tree_smiles())
def test_adjacency_symmetric_irreflexive(case):
    g = parse(case[0])
    for v, nbrs in enumerate(g.adjacency):
        assert v not in nbrs
        for u in nbrs:
            assert v in g.adjacency[u]
    derived = np.zeros(g.n_atoms, dtype=int)
    for b in g.bonds:
        derived[b.begin] += 1
        derived[b.end] += 1
    assert derived.tolist() == [a.degree for a in g.atoms]


@pytest.mark.parametrize("smi", [r[0] for r in CORPUS])
def test_euler_on_corpus(smi):
    g = parse(smi)
    assert len(g.bonds) == g.n_atoms - g.n_components + g.ring_closures


@pytest.mark.parametrize("smi", [r[0] for r in CORPUS[:8]])
def test_parse_deterministic(smi):
    assert repr(parse(smi)) == repr(parse(smi))


def test_permuted_relabels_consistently():
    g = parse("CC(=O)Nc1ccc(O)cc1")
    perm = np.random.default_rng(0).permutation(g.n_atoms).tolist()
    h = g.permuted(perm)
    for old, new in enumerate(perm):
        assert h.atoms[new] == g.atoms[old]
        assert sorted(h.adjacency[new]) == sorted(perm[u] for u in g.adjacency[old])
