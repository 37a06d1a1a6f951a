"""Differentiability along dilations: function ASTs, incremental ratios,
Gateaux probes, equi-Lipschitz checks, and null-family bookkeeping.

Functions are small ASTs over constants, first-layer coordinate
functionals, the homogeneous quasi-norm, left-translation and dilation
precomposition, sums, scalar multiples, min, max, and absolute value.
Every node evaluates exactly on rational group elements except the
quasi-norm, which is bracketed by a rational interval of recorded
width, so the probes below can report certified sign splits instead of
floating-point noise.

The null-family layer is deliberately symbolic: it validates the
sigma-ideal algebra of cylinder descriptors, unions, subsets, and
left-translation rewrites, and it records which preimages would have
to be null at which level, without claiming any measure-theoretic
fact.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InputFormatError, ValidationError
from .exactnum import fmt_float, format_fraction, parse_fraction
from .group_ops import GroupElement, bch_multiply, dilate
from .metrics.distance import distance_bracket
from .metrics.quasinorm import quasi_norm
from .ratlinalg import solve
from .sampling import SeededSampler

_QNORM_DIGITS = 18


class ValueBracket:
    """Rational interval [lo, hi]; exact when the endpoints coincide."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        self.lo = Fraction(lo)
        self.hi = self.lo if hi is None else Fraction(hi)
        assert self.lo <= self.hi

    @property
    def exact(self):
        return self.lo == self.hi

    @property
    def width(self):
        return self.hi - self.lo

    def midpoint(self):
        return (self.lo + self.hi) / 2

    def __add__(self, other):
        return ValueBracket(self.lo + other.lo, self.hi + other.hi)

    def scaled(self, c):
        c = Fraction(c)
        if c >= 0:
            return ValueBracket(self.lo * c, self.hi * c)
        return ValueBracket(self.hi * c, self.lo * c)

    def abs(self):
        if self.lo >= 0:
            return ValueBracket(self.lo, self.hi)
        if self.hi <= 0:
            return ValueBracket(-self.hi, -self.lo)
        return ValueBracket(0, max(-self.lo, self.hi))

    def __repr__(self):
        if self.exact:
            return f"ValueBracket({self.lo})"
        return f"ValueBracket({self.lo}, {self.hi})"

    def to_json(self):
        if self.exact:
            return {"value": format_fraction(self.lo), "exact": True}
        return {
            "lower": format_fraction(self.lo),
            "upper": format_fraction(self.hi),
            "width": fmt_float(self.width),
            "exact": False,
        }


def _gap_lower(a, b):
    """Certified lower bound for |a - b| between two brackets."""
    return max(Fraction(0), a.lo - b.hi, b.lo - a.hi)


def _gap_upper(a, b):
    return max(abs(a.hi - b.lo), abs(b.hi - a.lo))


class FunctionExpr:
    """Tagged AST node; use the module-level builders to construct."""

    __slots__ = ("op", "payload", "args")

    def __init__(self, op, payload=None, args=()):
        self.op = op
        self.payload = payload
        self.args = tuple(args)

    def uses_quasi_norm(self):
        return self.op == "qnorm" or any(a.uses_quasi_norm() for a in self.args)

    def evaluate(self, x):
        """ValueBracket for f(x); exact unless a quasi-norm is involved."""
        if self.op == "const":
            return ValueBracket(self.payload)
        if self.op == "coord":
            alg = x.algebra
            idx = self.payload
            if not 0 <= idx < alg.dim or alg.degrees[idx] != 1:
                raise ValidationError(
                    f"coordinate functional {idx} is not a first-layer "
                    f"coordinate of {alg.algebra_id}"
                )
            return ValueBracket(x.coords.get(idx, Fraction(0)))
        if self.op == "qnorm":
            value = quasi_norm(x)
            return ValueBracket(
                value.lower(_QNORM_DIGITS), value.upper(_QNORM_DIGITS)
            )
        if self.op == "left":
            g = self.payload
            if not g.algebra.same_algebra(x.algebra):
                raise ValidationError(
                    "left-translation node lives in a different algebra"
                )
            return self.args[0].evaluate(bch_multiply(g, x))
        if self.op == "dilate":
            return self.args[0].evaluate(dilate(self.payload, x))
        if self.op == "add":
            out = self.args[0].evaluate(x)
            for child in self.args[1:]:
                out = out + child.evaluate(x)
            return out
        if self.op == "scale":
            return self.args[0].evaluate(x).scaled(self.payload)
        if self.op == "min":
            vals = [a.evaluate(x) for a in self.args]
            return ValueBracket(min(v.lo for v in vals), min(v.hi for v in vals))
        if self.op == "max":
            vals = [a.evaluate(x) for a in self.args]
            return ValueBracket(max(v.lo for v in vals), max(v.hi for v in vals))
        if self.op == "abs":
            return self.args[0].evaluate(x).abs()
        raise ValidationError(f"unknown function node {self.op!r}")

    def lipschitz_upper(self):
        """Composition-rule upper estimate for the CC Lipschitz constant.

        None when no sound constant is available (any quasi-norm node:
        the box gauge admits no uniform CC comparison here).
        """
        if self.op == "const":
            return Fraction(0)
        if self.op == "coord":
            return Fraction(1)
        if self.op == "qnorm":
            return None
        if self.op == "left":
            return self.args[0].lipschitz_upper()
        if self.op == "dilate":
            child = self.args[0].lipschitz_upper()
            return None if child is None else abs(Fraction(self.payload)) * child
        if self.op == "add":
            parts = [a.lipschitz_upper() for a in self.args]
            return None if any(p is None for p in parts) else sum(parts)
        if self.op == "scale":
            child = self.args[0].lipschitz_upper()
            return None if child is None else abs(Fraction(self.payload)) * child
        if self.op in ("min", "max", "abs"):
            parts = [a.lipschitz_upper() for a in self.args]
            return None if any(p is None for p in parts) else max(parts)
        raise ValidationError(f"unknown function node {self.op!r}")

    def to_json(self):
        if self.op == "const":
            return {"op": "const", "value": format_fraction(self.payload)}
        if self.op == "coord":
            return {"op": "coord", "index": self.payload}
        if self.op == "qnorm":
            return {"op": "qnorm"}
        if self.op == "left":
            return {
                "op": "left",
                "g": self.payload.to_json(),
                "arg": self.args[0].to_json(),
            }
        if self.op == "dilate":
            return {
                "op": "dilate",
                "factor": format_fraction(self.payload),
                "arg": self.args[0].to_json(),
            }
        if self.op in ("add", "min", "max"):
            return {"op": self.op, "args": [a.to_json() for a in self.args]}
        if self.op == "scale":
            return {
                "op": "scale",
                "factor": format_fraction(self.payload),
                "arg": self.args[0].to_json(),
            }
        if self.op == "abs":
            return {"op": "abs", "arg": self.args[0].to_json()}
        raise ValidationError(f"unknown function node {self.op!r}")

    @classmethod
    def from_json(cls, doc):
        try:
            op = doc["op"]
        except (TypeError, KeyError) as exc:
            raise InputFormatError(f"function node needs an op: {doc!r}") from exc
        if op == "const":
            return const(parse_fraction(doc["value"]))
        if op == "coord":
            try:
                return coord(int(doc["index"]))
            except (KeyError, ValueError) as exc:
                raise InputFormatError(f"bad coord node {doc!r}") from exc
        if op == "qnorm":
            return qnorm()
        if op == "left":
            return precompose_left(
                GroupElement.from_json(doc["g"]), cls.from_json(doc["arg"])
            )
        if op == "dilate":
            return precompose_dilation(
                parse_fraction(doc["factor"]), cls.from_json(doc["arg"])
            )
        if op in ("add", "min", "max"):
            args = [cls.from_json(a) for a in doc.get("args", ())]
            if not args:
                raise InputFormatError(f"{op} node needs arguments")
            return cls(op, args=args)
        if op == "scale":
            return scale(parse_fraction(doc["factor"]), cls.from_json(doc["arg"]))
        if op == "abs":
            return absolute(cls.from_json(doc["arg"]))
        raise InputFormatError(f"unknown function node op {op!r}")


def const(c):
    return FunctionExpr("const", Fraction(c))


def coord(index):
    return FunctionExpr("coord", int(index))


def qnorm():
    return FunctionExpr("qnorm")


def precompose_left(g, f):
    return FunctionExpr("left", g, (f,))


def precompose_dilation(factor, f):
    return FunctionExpr("dilate", Fraction(factor), (f,))


def add(*fs):
    return FunctionExpr("add", args=fs)


def scale(c, f):
    return FunctionExpr("scale", Fraction(c), (f,))


def minimum(*fs):
    return FunctionExpr("min", args=fs)


def maximum(*fs):
    return FunctionExpr("max", args=fs)


def absolute(f):
    return FunctionExpr("abs", args=(f,))


# ---------------------------------------------------------------------------
# Incremental ratios and the Gateaux probe
# ---------------------------------------------------------------------------


def incremental_ratio(f, p, g, lam):
    """(f(p dilation_lam(g)) - f(p)) / lam as a ValueBracket."""
    lam = Fraction(lam)
    if lam == 0:
        raise ValidationError("incremental ratio needs a nonzero parameter")
    moved = f.evaluate(bch_multiply(p, dilate(lam, g)))
    base = f.evaluate(p)
    return (moved + base.scaled(-1)).scaled(Fraction(1) / lam)


def _default_tolerance(f):
    return Fraction(1, 10**9) if not f.uses_quasi_norm() else Fraction(1, 10**6)


def _classify_direction(f, p, g, schedule, tol):
    """Verdict for one direction over the two-sided schedule."""
    plus = [incremental_ratio(f, p, g, lam) for lam in schedule]
    minus = [incremental_ratio(f, p, g, -lam) for lam in schedule]
    tail = min(3, len(schedule))
    tail_vals = plus[-tail:] + minus[-tail:]

    split = _gap_lower(plus[-1], minus[-1])
    if split > tol:
        stable = all(
            _gap_lower(a, b) > tol for a, b in zip(plus[-tail:], minus[-tail:])
        )
        if stable:
            return {
                "verdict": "oscillating",
                "witness": {
                    "lambda_plus": format_fraction(schedule[-1]),
                    "lambda_minus": format_fraction(-schedule[-1]),
                    "gap_lower": format_fraction(split),
                },
                "limit": None,
            }

    hull_lo = min(v.lo for v in tail_vals)
    hull_hi = max(v.hi for v in tail_vals)
    if hull_hi - hull_lo <= tol:
        limit = (hull_lo + hull_hi) / 2
        rate = _gap_upper(plus[-1], plus[-2]) if len(plus) >= 2 else Fraction(0)
        return {
            "verdict": "converged",
            "limit": limit,
            "rate": fmt_float(rate),
            "witness": None,
        }
    return {"verdict": "undecided", "limit": None, "witness": None}


def _fit_first_layer_functional(alg, rows):
    """Exact linear fit of converged limits on first-layer coordinates."""
    first = alg.first_layer_indices()
    mat = [[g.coords.get(i, Fraction(0)) for i in first] for g, _ in rows]
    rhs = [limit for _, limit in rows]
    sol = solve(mat, rhs)
    if sol is None:
        return None
    for (g, limit), row in zip(rows, mat):
        if sum(c * v for c, v in zip(row, sol)) != limit:
            return None
    return {first[k]: sol[k] for k in range(len(first)) if sol[k] != 0}


def gateaux_probe(f, p, directions, schedule_steps=8, tolerance=None):
    """Directional differentiability report at p.

    Each direction gets a two-sided geometric schedule +-2^-m; verdicts
    are converged (tail hull within tolerance, both signs), oscillating
    (certified persistent sign split, with the witness pair), or
    undecided. If everything converges, a candidate differential is
    fitted exactly on the first-layer coordinates and the homomorphism
    identity d(gh) = d(g) + d(h) is probed on sampled pairs.
    """
    tol = _default_tolerance(f) if tolerance is None else Fraction(tolerance)
    schedule = [Fraction(1, 2**m) for m in range(1, schedule_steps + 1)]
    per_direction = []
    converged_rows = []
    for g in directions:
        row = _classify_direction(f, p, g, schedule, tol)
        row["direction"] = g.to_json()["coords"]
        if row["verdict"] == "converged":
            converged_rows.append((g, row["limit"]))
        per_direction.append(row)

    all_converged = bool(per_direction) and all(
        r["verdict"] == "converged" for r in per_direction
    )
    candidate = None
    homomorphism_ok = None
    if all_converged:
        alg = directions[0].algebra
        candidate = _fit_first_layer_functional(alg, converged_rows)
        homomorphism_ok = True
        pairs = 0
        for i in range(len(directions)):
            for j in range(i, len(directions)):
                if pairs >= 6:
                    break
                g, h = directions[i], directions[j]
                combined = _classify_direction(f, p, g * h, schedule, tol)
                if combined["verdict"] != "converged":
                    homomorphism_ok = False
                    break
                lhs = combined["limit"]
                rhs = converged_rows[i][1] + converged_rows[j][1]
                if abs(lhs - rhs) > 2 * tol:
                    homomorphism_ok = False
                    break
                pairs += 1

    for row in per_direction:
        if row["limit"] is not None:
            row["limit"] = format_fraction(row["limit"])
    return {
        "base": p.to_json(),
        "tolerance": format_fraction(tol),
        "schedule_steps": schedule_steps,
        "per_direction": per_direction,
        "candidate_differential": None
        if candidate is None
        else sorted((k, format_fraction(v)) for k, v in candidate.items()),
        "homomorphism_ok": homomorphism_ok,
        "nd_flagged": any(r["verdict"] == "oscillating" for r in per_direction),
        "label": "exact" if not f.uses_quasi_norm() else "certified-bound",
    }


def equilipschitz_check(f, p, pairs=None, samples=24, lambdas=None, lip=None, seed=0, budget=0):
    """Verify |IR_lam(g) - IR_lam(h)| <= Lip(f) * d(g, h) on samples.

    The right side uses a certified CC upper bound for d(g, h), which
    weakens the check (a larger right side can hide a violation); the
    report records this. Violations are certified: the left side uses
    the lower end of the interval difference. `pairs` supplies explicit
    (g, h) samples; otherwise first-layer pairs are drawn from the
    seed. `lip` overrides the composition-rule constant, for probing
    understated claims.
    """
    derived = f.lipschitz_upper()
    if lip is None:
        if derived is None:
            return {
                "status": "no-lipschitz-estimate",
                "checked": 0,
                "violations": [],
                "note": "no sound CC constant for quasi-norm nodes",
            }
        lip = derived
        source = "derived"
    else:
        lip = Fraction(lip)
        source = "claimed"
    lambdas = [Fraction(1, 2**m) for m in range(1, 5)] if lambdas is None else [
        Fraction(v) for v in lambdas
    ]
    alg = p.algebra
    if pairs is None:
        sampler = SeededSampler(seed)
        pairs = [
            (
                sampler.first_layer_element(alg, 2 * idx, span=1, den=4),
                sampler.first_layer_element(alg, 2 * idx + 1, span=1, den=4),
            )
            for idx in range(samples)
        ]
    violations = []
    checked = 0
    for g, h in pairs:
        pair_distance = distance_bracket(g, h, budget=budget)
        for lam in lambdas:
            for signed in (lam, -lam):
                checked += 1
                lhs = _gap_lower(
                    incremental_ratio(f, p, g, signed),
                    incremental_ratio(f, p, h, signed),
                )
                rhs = lip * pair_distance.upper
                if lhs > rhs:
                    violations.append(
                        {
                            "lambda": format_fraction(signed),
                            "g": g.to_json()["coords"],
                            "h": h.to_json()["coords"],
                            "lhs_lower": format_fraction(lhs),
                            "rhs": format_fraction(rhs),
                        }
                    )
    return {
        "status": "ok" if not violations else "violations",
        "lip": format_fraction(lip),
        "lip_source": source,
        "checked": checked,
        "violations": violations,
        "note": (
            "right side uses a certified upper bound on d(g, h); "
            "passing is therefore weaker than the true inequality"
        ),
        "label": "certified-bound" if violations else "evidence",
    }


# ---------------------------------------------------------------------------
# Null-family bookkeeping
# ---------------------------------------------------------------------------


class NullFamily:
    """Symbolic left-invariant sigma-ideal of set descriptors.

    Descriptors: the empty set, level cylinders (preimage of a
    translated Borel descriptor at one level), finite stand-ins for
    countable unions, and recorded subsets. Translation rewrites a
    cylinder's coset exactly; nothing here asserts that any set has
    measure zero.
    """

    def __init__(self):
        self.descriptors = {}
        self._fresh = 0
        self.add_descriptor({"kind": "empty"})

    def add_descriptor(self, descriptor):
        name = f"N{self._fresh}"
        self._fresh += 1
        self.descriptors[name] = descriptor
        return name

    def _require(self, name):
        if name not in self.descriptors:
            raise ValidationError(f"unknown descriptor {name!r}")
        return self.descriptors[name]

    def add_cylinder(self, level, borel, algebra_id, translation=None):
        if not isinstance(borel, str) or not borel:
            raise InputFormatError("borel descriptor must be a nonempty string")
        doc = {
            "kind": "cylinder",
            "level": int(level),
            "borel": borel,
            "algebra": algebra_id,
            "translation": None if translation is None else translation.to_json(),
        }
        return self.add_descriptor(doc)

    def add_union(self, parts):
        parts = list(parts)
        if not parts:
            raise InputFormatError("union needs at least one part")
        for part in parts:
            self._require(part)
        return self.add_descriptor({"kind": "union", "parts": parts})

    def add_subset(self, parent, constraint):
        self._require(parent)
        if not isinstance(constraint, str) or not constraint:
            raise InputFormatError("subset constraint must be a nonempty string")
        return self.add_descriptor(
            {"kind": "subset", "parent": parent, "constraint": constraint}
        )

    def translate(self, g, name):
        """Left translation: cylinder cosets rewrite q -> g q exactly."""
        doc = self._require(name)
        return self.add_descriptor(self._translated(g, doc))

    def _translated(self, g, doc):
        kind = doc["kind"]
        if kind == "empty":
            return {"kind": "empty"}
        if kind == "cylinder":
            if doc["translation"] is None:
                coset = g
            else:
                q = GroupElement.from_json(doc["translation"])
                if not q.algebra.same_algebra(g.algebra):
                    raise ValidationError(
                        "translation element lives in the wrong algebra for "
                        f"level {doc['level']}"
                    )
                coset = bch_multiply(g, q)
            out = dict(doc)
            out["translation"] = coset.to_json()
            return out
        if kind == "union":
            return {
                "kind": "union",
                "parts": [
                    self.add_descriptor(self._translated(g, self._require(p)))
                    for p in doc["parts"]
                ],
            }
        if kind == "subset":
            parent = self.add_descriptor(
                self._translated(g, self._require(doc["parent"]))
            )
            return {
                "kind": "subset",
                "parent": parent,
                "constraint": doc["constraint"],
            }
        raise ValidationError(f"unknown descriptor kind {kind!r}")

    def check_axioms(self, hooks=None):
        """The four axiom checks on everything stored so far.

        i) the empty set is present; ii) unions only reference stored
        parts; iii) subsets only reference stored parents; iv) the
        translation rewrite is exact and associative on stored cosets
        ((g h) q = g (h q), checked with exact group arithmetic).
        Optional `hooks` maps a level to a predicate on Borel
        descriptors; when given, cylinders must satisfy it.
        """
        axiom_i = any(d["kind"] == "empty" for d in self.descriptors.values())
        axiom_ii = all(
            all(p in self.descriptors for p in d["parts"])
            for d in self.descriptors.values()
            if d["kind"] == "union"
        )
        axiom_iii = all(
            d["parent"] in self.descriptors
            for d in self.descriptors.values()
            if d["kind"] == "subset"
        )
        axiom_iv = True
        hook_ok = True
        for doc in list(self.descriptors.values()):
            if doc["kind"] != "cylinder":
                continue
            if hooks is not None:
                hook = hooks.get(doc["level"])
                if hook is not None and not hook(doc["borel"]):
                    hook_ok = False
            if doc["translation"] is None:
                continue
            q = GroupElement.from_json(doc["translation"])
            g = GroupElement(q.algebra, {q.algebra.first_layer_indices()[0]: Fraction(1, 3)})
            h = g.inverse()
            once = bch_multiply(g, bch_multiply(h, q))
            twice = bch_multiply(bch_multiply(g, h), q)
            if once != twice:
                axiom_iv = False
        report = {
            "i-empty": axiom_i,
            "ii-unions": axiom_ii,
            "iii-subsets": axiom_iii,
            "iv-translation": axiom_iv,
        }
        if hooks is not None:
            report["membership-hooks"] = hook_ok
        report["ok"] = all(report.values())
        return report

    def to_json(self):
        return {"descriptors": dict(self.descriptors)}


def assemble_limit_family(per_level, cosets=()):
    """Union-of-levels family with recorded, undischarged obligations.

    `per_level` maps a level to (algebra_id, [borel descriptors]); the
    result is the union descriptor together with the list of preimages
    that a measure-theoretic argument would still need to certify null,
    one per (level, coset, borel) triple.
    """
    family = NullFamily()
    cylinder_ids = []
    obligations = []
    for level in sorted(per_level):
        algebra_id, borels = per_level[level]
        for borel in borels:
            cylinder_ids.append(family.add_cylinder(level, borel, algebra_id))
            for q in cosets:
                obligations.append(
                    {
                        "level": level,
                        "coset": q.to_json(),
                        "borel": borel,
                        "status": "recorded",
                    }
                )
    union_id = family.add_union(cylinder_ids) if cylinder_ids else None
    return {
        "family": family,
        "union": union_id,
        "obligations": obligations,
        "label": "evidence",
    }


def null_family_ops(family, op, **kwargs):
    """Single dispatch point used by the CLI."""
    if op == "add_union":
        return family.add_union(kwargs["parts"])
    if op == "add_subset":
        return family.add_subset(kwargs["parent"], kwargs["constraint"])
    if op == "translate":
        return family.translate(kwargs["g"], kwargs["name"])
    if op == "check_axioms":
        return family.check_axioms(hooks=kwargs.get("hooks"))
    if op == "assemble_limit_family":
        return assemble_limit_family(kwargs["per_level"], kwargs.get("cosets", ()))
    raise ValidationError(f"unknown null-family op {op!r}")
