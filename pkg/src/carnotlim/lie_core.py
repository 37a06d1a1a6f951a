"""Stratified Lie algebras as exact rational structure-constant tables.

Three constructors are shipped:

* `free_nilpotent_algebra(rank, step)`: free nilpotent Lie algebra on a
  Hall basis. A bracket word [u, v] is admissible when u < v in the
  global (degree, position) order and v is either a generator or a
  bracket [a, b] with a <= u. Structure constants are computed by the
  classical rewriting: a non-admissible [u, [a, b]] with u < a expands
  through the Jacobi identity into [[u, a], b] + [a, [u, b]], and the
  recursion terminates because the smaller index of the pair strictly
  increases at fixed total degree.
* `amalgam_algebra(i)`: rank i+1, step i. Generators X, Y^1, ..., Y^i;
  each pair (X, Y^k) spans a copy of the free rank-2 step-k algebra and
  every bracket mixing two different Y-blocks is zero.
* `abelian_algebra(rank, weights)`: trivial bracket, with optional
  generator weights so that anisotropic dilations (for example the real
  line scaled by lambda^2) are representable.

All coefficients are `fractions.Fraction`; no floats enter this module.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InputFormatError, ResourceCapError, ValidationError
from .exactnum import format_fraction, parse_fraction

DEFAULT_SIZE_CAP = 2000


class BasisWord:
    """One basis word: a generator or an admissible bracket of two words.

    `index` is the position in the algebra's global basis order (sorted
    by degree, then construction order). Generators carry a `label`;
    bracket words carry `left`/`right` factor references.
    """

    __slots__ = ("index", "degree", "label", "left", "right", "name")

    def __init__(self, index, degree, label=None, left=None, right=None):
        self.index = index
        self.degree = degree
        self.label = label
        self.left = left
        self.right = right
        if label is not None:
            assert left is None and right is None
            self.name = label
        else:
            assert left is not None and right is not None
            assert degree == left.degree + right.degree
            self.name = f"[{left.name},{right.name}]"

    def is_generator(self):
        return self.label is not None

    def __repr__(self):
        return f"BasisWord({self.index}: {self.name})"


def generator_labels(rank):
    """Generator naming: X, Y for rank two, X1..Xr otherwise."""
    assert rank >= 1
    if rank == 1:
        return ("X",)
    if rank == 2:
        return ("X", "Y")
    return tuple(f"X{i}" for i in range(1, rank + 1))


def hall_basis(rank, step, labels=None, size_cap=DEFAULT_SIZE_CAP):
    """Deterministic Hall basis of the free nilpotent algebra, by degree.

    Returns a tuple of BasisWord. Same input yields the identical order.
    Raises ResourceCapError when the total dimension would exceed
    `size_cap`.
    """
    if rank < 1 or step < 1:
        raise ValidationError(f"rank and step must be positive, got ({rank}, {step})")
    labels = labels or generator_labels(rank)
    assert len(labels) == rank
    words = [BasisWord(i, 1, label=labels[i]) for i in range(rank)]
    by_degree = {1: list(words)}
    for degree in range(2, step + 1):
        candidates = []
        for d1 in range(1, degree):
            for u in by_degree.get(d1, ()):
                for v in by_degree.get(degree - d1, ()):
                    if u.index >= v.index:
                        continue
                    if v.left is not None and v.left.index > u.index:
                        continue
                    candidates.append((u, v))
        candidates.sort(key=lambda uv: (uv[0].index, uv[1].index))
        level = []
        for u, v in candidates:
            if len(words) >= size_cap:
                raise ResourceCapError(
                    f"hall basis size cap ({size_cap}) exceeded at degree "
                    f"{degree} for rank {rank}"
                )
            w = BasisWord(len(words), degree, left=u, right=v)
            words.append(w)
            level.append(w)
        by_degree[degree] = level
    return tuple(words)


class LieAlgebra:
    """Graded Lie algebra over an ordered basis with a sparse bracket table.

    `structure` maps pairs (i, j) with i < j to {k: coefficient} for the
    expansion of [basis[i], basis[j]]; missing pairs bracket to zero.
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, kind, rank, step, basis, structure, weights=None, param=None):
        self.kind = kind
        self.rank = rank
        self.step = step
        self.basis = tuple(basis)
        self.structure = structure
        self.weights = tuple(weights) if weights else None
        self.param = param
        self.dim = len(self.basis)
        self.label_to_index = {
            w.label: w.index for w in self.basis if w.is_generator()
        }
        self.degrees = tuple(w.degree for w in self.basis)
        max_degree = max(self.degrees) if self.basis else 0
        self.dims_by_degree = [0] * max(step, max_degree)
        for w in self.basis:
            self.dims_by_degree[w.degree - 1] += 1
        self._check_table()

    # -- identity ---------------------------------------------------------

    @property
    def algebra_id(self):
        if self.kind == "free":
            return f"free:{self.rank}:{self.step}"
        if self.kind == "amalgam":
            return f"amalgam:{self.param}"
        if self.weights and set(self.weights) != {1}:
            return "abelian:{}:{}".format(
                self.rank, ",".join(str(w) for w in self.weights)
            )
        return f"abelian:{self.rank}"

    def same_algebra(self, other):
        return isinstance(other, LieAlgebra) and self.algebra_id == other.algebra_id

    def __repr__(self):
        return f"LieAlgebra({self.algebra_id}, dim={self.dim})"

    # -- element helpers ---------------------------------------------------

    def element(self, coords):
        return AlgebraElement(self, coords)

    def zero(self):
        return AlgebraElement(self, {})

    def basis_element(self, index):
        return AlgebraElement(self, {index: Fraction(1)})

    def generator(self, label):
        if label not in self.label_to_index:
            raise ValidationError(f"{self.algebra_id} has no generator {label!r}")
        return self.basis_element(self.label_to_index[label])

    def first_layer_indices(self):
        return tuple(w.index for w in self.basis if w.degree == 1)

    def is_stratified(self):
        """True when every generator has degree one (weights all 1)."""
        return all(w.degree == 1 for w in self.basis if w.is_generator())

    # -- bracket table -----------------------------------------------------

    def bracket_words(self, i, j):
        """Expansion of [basis[i], basis[j]] as {index: coefficient}."""
        if i == j:
            return {}
        if i > j:
            return {k: -c for k, c in self.bracket_words(j, i).items()}
        return self.structure.get((i, j), {})

    def _check_table(self):
        for (i, j), entry in self.structure.items():
            assert i < j, "structure table keys must be ordered pairs"
            target = self.degrees[i] + self.degrees[j]
            assert target <= self.step or not entry
            for k, c in entry.items():
                assert self.degrees[k] == target, (
                    f"grading violated at ({i},{j})->{k}"
                )
                assert isinstance(c, Fraction) and c != 0


class AlgebraElement:
    """Sparse rational coordinate vector over an algebra's basis."""

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra, coords):
        self.algebra = algebra
        clean = {}
        for k, v in coords.items():
            v = Fraction(v)
            if v == 0:
                continue
            if not 0 <= k < algebra.dim:
                raise ValidationError(
                    f"coordinate index {k} out of range for {algebra.algebra_id}"
                )
            clean[int(k)] = v
        self.coords = clean

    def is_zero(self):
        return not self.coords

    def __add__(self, other):
        _require_same_algebra(self, other)
        out = dict(self.coords)
        for k, v in other.coords.items():
            s = out.get(k, Fraction(0)) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return AlgebraElement(self.algebra, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, q):
        q = Fraction(q)
        return AlgebraElement(self.algebra, {k: v * q for k, v in self.coords.items()})

    def __eq__(self, other):
        return (
            isinstance(other, AlgebraElement)
            and self.algebra.same_algebra(other.algebra)
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((self.algebra.algebra_id, tuple(sorted(self.coords.items()))))

    def max_degree(self):
        return max((self.algebra.degrees[k] for k in self.coords), default=0)

    def degree_part(self, degree):
        return AlgebraElement(
            self.algebra,
            {k: v for k, v in self.coords.items() if self.algebra.degrees[k] == degree},
        )

    def __repr__(self):
        parts = [
            f"{format_fraction(v)}*{self.algebra.basis[k].name}"
            for k, v in sorted(self.coords.items())
        ]
        return "AlgebraElement(" + (" + ".join(parts) or "0") + ")"


def _require_same_algebra(a, b):
    if not a.algebra.same_algebra(b.algebra):
        raise ValidationError(
            f"elements belong to different algebras: "
            f"{a.algebra.algebra_id} vs {b.algebra.algebra_id}"
        )


def bracket(a, b):
    """Lie bracket of two elements, by bilinear extension of the table."""
    _require_same_algebra(a, b)
    alg = a.algebra
    out = {}
    for i, ai in a.coords.items():
        for j, bj in b.coords.items():
            entry = alg.bracket_words(i, j)
            if not entry:
                continue
            f = ai * bj
            for k, c in entry.items():
                s = out.get(k, Fraction(0)) + f * c
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
    return AlgebraElement(alg, out)


# ---------------------------------------------------------------------------
# Free nilpotent construction
# ---------------------------------------------------------------------------


def _hall_structure(words, step):
    """Structure constants over a Hall basis, by Jacobi rewriting."""
    pair_to_word = {
        (w.left.index, w.right.index): w.index for w in words if w.left is not None
    }
    degrees = [w.degree for w in words]
    cache = {}

    def expand(i, j):
        """[words[i], words[j]] for i < j as {index: coefficient}."""
        key = (i, j)
        hit = cache.get(key)
        if hit is not None:
            return hit
        if degrees[i] + degrees[j] > step:
            cache[key] = {}
            return {}
        direct = pair_to_word.get(key)
        if direct is not None:
            result = {direct: Fraction(1)}
        else:
            v = words[j]
            # i < j and (i, j) not admissible, so v = [a, b] with a > i.
            assert v.left is not None and v.left.index > i
            a, b = v.left.index, v.right.index
            result = _combine(
                _elt_bracket_word(expand(i, a), b),
                _word_bracket_elt(a, expand(i, b)),
            )
        cache[key] = result
        return result

    def signed(i, j):
        if i == j:
            return {}
        if i < j:
            return expand(i, j)
        return {k: -c for k, c in expand(j, i).items()}

    def _elt_bracket_word(elt, j):
        out = {}
        for c_idx, coef in elt.items():
            for k, c in signed(c_idx, j).items():
                s = out.get(k, Fraction(0)) + coef * c
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
        return out

    def _word_bracket_elt(i, elt):
        out = {}
        for c_idx, coef in elt.items():
            for k, c in signed(i, c_idx).items():
                s = out.get(k, Fraction(0)) + coef * c
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
        return out

    def _combine(x, y):
        out = dict(x)
        for k, c in y.items():
            s = out.get(k, Fraction(0)) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return out

    structure = {}
    dim = len(words)
    for j in range(dim):
        for i in range(j):
            entry = expand(i, j)
            if entry:
                structure[(i, j)] = entry
    return structure


def free_nilpotent_algebra(rank, step, size_cap=DEFAULT_SIZE_CAP):
    """Free nilpotent Lie algebra of the given rank and step."""
    words = hall_basis(rank, step, size_cap=size_cap)
    structure = _hall_structure(words, step)
    return LieAlgebra("free", rank, step, words, structure)


def abelian_algebra(rank, weights=None, size_cap=DEFAULT_SIZE_CAP):
    """Abelian algebra; optional integer weights give anisotropic dilations."""
    if rank < 1:
        raise ValidationError(f"rank must be positive, got {rank}")
    if rank > size_cap:
        raise ResourceCapError(f"abelian rank {rank} exceeds size cap {size_cap}")
    weights = tuple(weights) if weights is not None else (1,) * rank
    if len(weights) != rank or any(w < 1 for w in weights):
        raise ValidationError(f"need {rank} positive weights, got {weights!r}")
    labels = generator_labels(rank)
    words = [
        BasisWord(i, weights[i], label=labels[i]) for i in range(rank)
    ]
    return LieAlgebra("abelian", rank, max(weights), words, {}, weights=weights)


# ---------------------------------------------------------------------------
# Amalgam construction
# ---------------------------------------------------------------------------


def amalgam_algebra(i, size_cap=DEFAULT_SIZE_CAP):
    """Rank i+1, step i algebra glued from free rank-2 blocks.

    Generators X, Y^1..Y^i. The pair (X, Y^k) spans a free nilpotent
    algebra of step k; brackets between distinct Y-blocks vanish. The
    Jacobi identity is re-verified exhaustively before returning.
    """
    if i < 1:
        raise ValidationError(f"amalgam parameter must be positive, got {i}")
    free_blocks = {
        k: free_nilpotent_algebra(2, k, size_cap=size_cap) for k in range(2, i + 1)
    }
    total_dim = 1 + i + sum(b.dim - 2 for b in free_blocks.values())
    if total_dim > size_cap:
        raise ResourceCapError(
            f"amalgam({i}) dimension {total_dim} exceeds size cap {size_cap}"
        )

    words = [BasisWord(0, 1, label="X")]
    words.extend(BasisWord(k, 1, label=f"Y^{k}") for k in range(1, i + 1))
    # block_maps[k][free_index] = amalgam_index, for the two generators now
    # and the higher words as they are created degree by degree.
    block_maps = {k: {0: 0, 1: k} for k in free_blocks}
    max_degree = i
    for degree in range(2, max_degree + 1):
        for k in sorted(free_blocks):
            blk = free_blocks[k]
            if degree > blk.step:
                continue
            for w in blk.basis:
                if w.degree != degree:
                    continue
                left = words[block_maps[k][w.left.index]]
                right = words[block_maps[k][w.right.index]]
                new = BasisWord(len(words), degree, left=left, right=right)
                words.append(new)
                block_maps[k][w.index] = new.index

    structure = {}
    for k, blk in free_blocks.items():
        mapping = block_maps[k]
        for (fi, fj), entry in blk.structure.items():
            pair = (mapping[fi], mapping[fj])
            assert pair[0] < pair[1]
            structure[pair] = {mapping[fk]: c for fk, c in entry.items()}

    alg = LieAlgebra("amalgam", i + 1, i, words, structure, param=i)
    alg.blocks = {
        k: tuple(sorted(m for f, m in block_maps[k].items() if f != 0))
        for k in free_blocks
    }
    alg.blocks.setdefault(1, (1,))
    report = verify_jacobi(alg)
    assert report.ok, f"amalgam({i}) failed Jacobi: {report.violations[:3]}"
    return alg


# ---------------------------------------------------------------------------
# Jacobi verification
# ---------------------------------------------------------------------------


class JacobiReport:
    """Outcome of an exhaustive Jacobi check over basis triples."""

    def __init__(self, algebra_id, checked_triples, violations):
        self.algebra_id = algebra_id
        self.checked_triples = checked_triples
        self.violations = violations

    @property
    def ok(self):
        return not self.violations

    def to_json(self):
        return {
            "algebra": self.algebra_id,
            "checked_triples": self.checked_triples,
            "violations": [
                {
                    "triple": list(t),
                    "residual": [[k, format_fraction(c)] for k, c in sorted(r.items())],
                }
                for t, r in self.violations
            ],
            "ok": self.ok,
        }


def verify_jacobi(alg):
    """Exhaustive [a,[b,c]] + [b,[c,a]] + [c,[a,b]] = 0 over basis triples."""
    violations = []
    checked = 0
    for i in range(alg.dim):
        a = alg.basis_element(i)
        for j in range(i + 1, alg.dim):
            b = alg.basis_element(j)
            for k in range(j + 1, alg.dim):
                c = alg.basis_element(k)
                checked += 1
                residual = (
                    bracket(a, bracket(b, c))
                    + bracket(b, bracket(c, a))
                    + bracket(c, bracket(a, b))
                )
                if not residual.is_zero():
                    violations.append(((i, j, k), residual.coords))
    return JacobiReport(alg.algebra_id, checked, violations)


# ---------------------------------------------------------------------------
# Serialization and the algebra registry
# ---------------------------------------------------------------------------


def algebra_to_json(alg):
    doc = {
        "kind": alg.kind,
        "rank": alg.rank,
        "step": alg.step,
        "basis": [w.name for w in alg.basis],
        "structure": [
            [i, j, [[k, format_fraction(c)] for k, c in sorted(entry.items())]]
            for (i, j), entry in sorted(alg.structure.items())
        ],
    }
    if alg.kind == "amalgam":
        doc["param"] = alg.param
    if alg.kind == "abelian" and alg.weights:
        doc["weights"] = list(alg.weights)
    return doc


def _parse_word_name(name, by_name, index, degree_hint=None):
    """Rebuild a BasisWord from its bracket-string name."""
    name = name.strip()
    if not name.startswith("["):
        if any(ch in name for ch in "[],"):
            raise InputFormatError(f"bad basis word name {name!r}")
        return BasisWord(index, degree_hint or 1, label=name)
    if not name.endswith("]"):
        raise InputFormatError(f"unbalanced bracket word {name!r}")
    inner = name[1:-1]
    depth = 0
    split = None
    for pos, ch in enumerate(inner):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            split = pos
            break
    if split is None:
        raise InputFormatError(f"bad bracket word {name!r}")
    left_name, right_name = inner[:split], inner[split + 1 :]
    if left_name not in by_name or right_name not in by_name:
        raise InputFormatError(
            f"bracket word {name!r} references unknown factors"
        )
    left, right = by_name[left_name], by_name[right_name]
    return BasisWord(index, left.degree + right.degree, left=left, right=right)


def algebra_from_json(doc):
    try:
        kind = doc["kind"]
        rank = int(doc["rank"])
        step = int(doc["step"])
        names = list(doc["basis"])
        structure_rows = list(doc["structure"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed algebra descriptor: {exc}") from exc
    weights = doc.get("weights")
    words = []
    by_name = {}
    for index, name in enumerate(names):
        hint = weights[index] if (weights and index < len(weights)) else None
        w = _parse_word_name(name, by_name, index, degree_hint=hint)
        words.append(w)
        by_name[name] = w
    structure = {}
    for row in structure_rows:
        try:
            i, j, entry = int(row[0]), int(row[1]), row[2]
        except (TypeError, ValueError, IndexError) as exc:
            raise InputFormatError(f"malformed structure row {row!r}") from exc
        structure[(i, j)] = {int(k): parse_fraction(c) for k, c in entry}
    alg = LieAlgebra(
        kind,
        rank,
        step,
        words,
        structure,
        weights=weights,
        param=doc.get("param"),
    )
    if kind == "amalgam":
        rebuilt = amalgam_algebra(alg.param)
        alg.blocks = rebuilt.blocks
    return alg


_REGISTRY = {}


def get_algebra(algebra_id, size_cap=DEFAULT_SIZE_CAP):
    """Construct (and cache) an algebra from its identifier string.

    Identifiers: "free:RANK:STEP", "amalgam:I", "abelian:RANK" and
    "abelian:RANK:w1,w2,..." for weighted dilations.
    """
    key = str(algebra_id).strip()
    if key in _REGISTRY:
        return _REGISTRY[key]
    parts = key.split(":")
    try:
        if parts[0] == "free" and len(parts) == 3:
            alg = free_nilpotent_algebra(int(parts[1]), int(parts[2]), size_cap)
        elif parts[0] == "amalgam" and len(parts) == 2:
            alg = amalgam_algebra(int(parts[1]), size_cap)
        elif parts[0] == "abelian" and len(parts) == 2:
            alg = abelian_algebra(int(parts[1]), size_cap=size_cap)
        elif parts[0] == "abelian" and len(parts) == 3:
            weights = [int(w) for w in parts[2].split(",")]
            alg = abelian_algebra(int(parts[1]), weights, size_cap=size_cap)
        else:
            raise InputFormatError(f"unknown algebra id {algebra_id!r}")
    except ValueError as exc:
        raise InputFormatError(f"bad algebra id {algebra_id!r}: {exc}") from exc
    assert alg.algebra_id == key, (alg.algebra_id, key)
    _REGISTRY[key] = alg
    return alg
