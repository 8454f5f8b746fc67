"""Empirical checks of the analyzer's guarantees.

* `check_preservation`: the security signature of every node, after
  de-nesting and after explicit delay initialisation, is implied by the
  original signature (and equality is reported when it holds).
* `differential_semantics`: the three program forms produce bit-equal
  output streams on random inputs.
* `check_noninterference`: paired runs whose inputs agree at or below an
  observation level agree on every variable at or below that level.
* `generate_program`: a seeded random source of well-formed, causal,
  well-clocked programs used to drive the three checks at scale.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from seclus.ast import (
    BASE,
    Binop,
    Const,
    Equation,
    Expr,
    Fby,
    Ite,
    Merge,
    Node,
    NodeCall,
    Program,
    Unop,
    VarDecl,
    Var,
    When,
    validate,
)
from seclus.interp import (
    ABSENT,
    ClockMismatch,
    EvalError,
    History,
    StreamPrefix,
    run_node,
    schedule,
)
from seclus.normalise import fby_init, normalize_program
from seclus.sectypes import (
    GroundInstantiation,
    SecurityLattice,
    eval_ground,
    implies,
    two_point,
)
from seclus.typing import NodeSignature, check_program, node_signature

# ---------------------------------------------------------------------------
# Observation machinery
# ---------------------------------------------------------------------------


def project_history(
    H: History,
    X: Sequence[str],
    levels: Mapping[str, object],
    t: object,
    lat: SecurityLattice,
) -> History:
    """Restrict H to the variables of X whose level is at or below t."""
    return {x: H[x] for x in X if lat.leq(levels[x], t)}


def minimal_instantiation(
    sig: NodeSignature,
    input_levels: Mapping[str, object],
    clock_level: object,
    lat: SecurityLattice,
) -> GroundInstantiation:
    """Least ground instantiation satisfying the signature: outputs start
    at bottom and are raised to the evaluation of their constraint's left
    side until a fixpoint (outputs may feed each other's constraints)."""
    s: Dict[str, object] = {sig.clock_var: clock_level}
    for a in sig.input_vars:
        s[a] = input_levels[a]
    for b in sig.output_vars:
        s[b] = lat.bottom
    bounds = {}
    for c in sig.constraints:
        rhs = c.rhs
        name = rhs.name  # single type variable by construction
        bounds.setdefault(name, []).append(c.lhs)
    for _ in range(len(sig.output_vars) + 1):
        changed = False
        for b, lhss in bounds.items():
            val = lat.join_all([eval_ground(s, lhs, lat) for lhs in lhss])
            if val != s[b]:
                s[b] = val
                changed = True
        if not changed:
            break
    return s


def variable_levels(
    node: Node,
    sig: NodeSignature,
    input_levels_by_name: Mapping[str, object],
    clock_level: object,
    lat: SecurityLattice,
    output_levels_by_name: Optional[Mapping[str, object]] = None,
) -> Dict[str, object]:
    """Ground observation level for every variable of the node: inputs
    as given, outputs from the minimal instantiation (unless overridden
    by an explicit policy), locals by evaluating their eliminated types."""
    by_var = {
        a: input_levels_by_name[d.name] for d, a in zip(node.inputs, sig.input_vars)
    }
    s = minimal_instantiation(sig, by_var, clock_level, lat)
    levels: Dict[str, object] = {}
    for d, a in zip(node.inputs, sig.input_vars):
        levels[d.name] = s[a]
    for d, b in zip(node.outputs, sig.output_vars):
        levels[d.name] = s[b]
    for x, t in sig.local_types.items():
        levels[x] = eval_ground(s, t, lat)
    if output_levels_by_name:
        levels.update(output_levels_by_name)
    return levels


# ---------------------------------------------------------------------------
# Guarantee harnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreservationVerdict:
    node: str
    denesting_implied: bool
    denesting_equal: bool
    init_implied: bool
    init_equal: bool
    witness: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.denesting_implied and self.init_implied


def check_preservation(G: Program) -> List[PreservationVerdict]:
    """For every node, the original constraint set implies the one
    inferred after each pass (interface variables coincide by the
    deterministic naming scheme)."""
    before = check_program(G)
    after_n = check_program(normalize_program(G))
    after_i = check_program(fby_init(normalize_program(G)))
    out = []
    for name, sig in before.items():
        rn = implies(sig.constraints, after_n[name].constraints)
        ri = implies(sig.constraints, after_i[name].constraints)
        witness = None
        if not rn.holds:
            witness = {"pass": "denesting", "assignment": rn.witness}
        elif not ri.holds:
            witness = {"pass": "fby-init", "assignment": ri.witness}
        out.append(
            PreservationVerdict(
                name,
                rn.holds,
                sig.constraints == after_n[name].constraints,
                ri.holds,
                sig.constraints == after_i[name].constraints,
                witness,
            )
        )
    return out


def random_inputs(node: Node, N: int, rng: random.Random) -> List[StreamPrefix]:
    """All-present input prefixes (full base clock), values drawn small."""
    out = []
    for d in node.inputs:
        if d.type == "bool":
            out.append([rng.random() < 0.5 for _ in range(N)])
        else:
            out.append([rng.randrange(-8, 9) for _ in range(N)])
    return out


@dataclass(frozen=True)
class Divergence:
    node: str
    trial: int
    variable: str
    instant: int
    values: Tuple[object, object, object]


@dataclass(frozen=True)
class DifferentialReport:
    nodes: Tuple[str, ...]
    trials: int
    horizon: int
    seed: int
    divergences: Tuple[Divergence, ...]

    @property
    def ok(self) -> bool:
        return not self.divergences


def differential_semantics(
    G: Program,
    trials: int = 100,
    N: int = 50,
    seed: int = 0,
    engine: str = "compiled",
    nodes: str = "entry",
    jobs: int = 1,
) -> DifferentialReport:
    """Bit-exact output comparison of original / de-nested / delay-
    initialised forms on random full-clock inputs.

    `engine` selects the evaluator: "compiled" (default, fast path) or
    "reference" (the instant-by-instant interpreter).  Both are covered
    against each other by the test suite.

    `nodes` is "entry" (run the last node only; its callees are still
    exercised as sub-instances) or "all" (run every node as the top).

    Each trial draws its inputs from its own seed, so the report is
    identical whatever the execution order; `jobs > 1` splits the trial
    range over worker processes."""
    work = [
        (G, N, seed, engine, nodes, lo, hi) for lo, hi in _chunks(trials, jobs)
    ]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            parts = pool.map(_diff_trials, work)
    else:
        parts = [_diff_trials(w) for w in work]
    run_list = list(G.nodes) if nodes == "all" else [G.nodes[-1]]
    names = tuple(n.name for n in run_list)
    divergences: List[Divergence] = []
    seen = set()
    for part in parts:  # chunks are in trial order: first hit per node wins
        for d in part:
            if d.node not in seen:
                seen.add(d.node)
                divergences.append(d)
    order = {n: i for i, n in enumerate(names)}
    divergences.sort(key=lambda d: (order[d.node], d.trial))
    return DifferentialReport(names, trials, N, seed, tuple(divergences))


def _trial_rng(seed: int, stream: int, trial: int) -> random.Random:
    return random.Random((seed * 1_000_003 + stream) * 1_000_003 + trial)


def _chunks(n: int, k: int) -> List[Tuple[int, int]]:
    k = max(1, min(k, n))
    size = (n + k - 1) // k
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def _diff_trials(args) -> List[Divergence]:
    G, N, seed, engine, nodes, lo, hi = args
    forms = [
        (G, "lustre"),
        (normalize_program(G), "nlustre"),
        (fby_init(normalize_program(G)), "nlustre"),
    ]
    if engine == "compiled":
        from seclus.compiled import CompiledProgram

        compiled = [CompiledProgram(form) for form, _ in forms]

        def runner(k, name, inputs):
            return compiled[k].run(name, inputs, N=N)

    else:

        def runner(k, name, inputs):
            form, dialect = forms[k]
            return run_node(form, name, inputs, N=N, dialect=dialect)

    run_list = list(G.nodes) if nodes == "all" else [G.nodes[-1]]
    out: List[Divergence] = []
    for ni, node in enumerate(run_list):
        outs = [d.name for d in node.outputs]
        for trial in range(lo, hi):
            inputs = random_inputs(node, N, _trial_rng(seed, ni, trial))
            results = []
            for k in range(len(forms)):
                try:
                    H = runner(k, node.name, inputs)
                    results.append({x: H[x] for x in outs})
                except (ClockMismatch, EvalError) as exc:
                    results.append({"!error": [repr(exc)]})
            d = _first_divergence(node.name, trial, outs, results)
            if d is not None:
                out.append(d)
                break
    return out


def _first_divergence(name, trial, outs, results) -> Optional[Divergence]:
    a, b, c = results
    if a.keys() != b.keys() or a.keys() != c.keys():
        return Divergence(name, trial, "!error", -1, (str(a), str(b), str(c)))
    for x in a:
        for i, (u, v, w) in enumerate(zip(a[x], b[x], c[x])):
            if not (u == v == w):
                return Divergence(name, trial, x, i, (u, v, w))
    return None


@dataclass(frozen=True)
class NIViolation:
    level: object
    trial: int
    variable: str
    instant: int
    values: Tuple[object, object]


@dataclass(frozen=True)
class NIReport:
    node: str
    level: object
    trials: int
    violations: Tuple[NIViolation, ...]
    skipped: int = 0
    errors: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"


def check_noninterference(
    G: Program,
    f: str,
    lat: SecurityLattice,
    input_levels: Mapping[str, object],
    t: object,
    trials: int = 1000,
    N: int = 50,
    seed: int = 0,
    output_levels: Optional[Mapping[str, object]] = None,
    clock_pairing: str = "strict",
    engine: str = "compiled",
    jobs: int = 1,
) -> NIReport:
    """Paired-run test: draw input histories equal at or below t (same
    presence everywhere), run both, and compare every variable at or
    below t pointwise.

    `input_levels` is keyed by the node's input names; `output_levels`,
    when given, overrides the minimal instantiation (used to test
    rejected policies).  With all inputs on the base clock the two runs
    always share presence, so `clock_pairing` only matters for nodes
    with declared derived-clock inputs ("skip" counts such trials out).

    Per-trial seeding keeps the report independent of execution order;
    `jobs > 1` splits the trial range over worker processes."""
    work = [
        (G, f, lat, dict(input_levels), t, N, seed,
         dict(output_levels) if output_levels else None,
         clock_pairing, engine, lo, hi)
        for lo, hi in _chunks(trials, jobs)
    ]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            parts = pool.map(_ni_trials, work)
    else:
        parts = [_ni_trials(w) for w in work]
    violations: List[NIViolation] = []
    errors: List[str] = []
    skipped = 0
    for vs, es, sk in parts:
        if not violations:
            violations.extend(vs)
        errors.extend(es)
        skipped += sk
    return NIReport(f, t, trials, tuple(violations[:1]), skipped, tuple(errors))


def _ni_trials(args):
    (G, f, lat, input_levels, t, N, seed, output_levels,
     clock_pairing, engine, lo, hi) = args
    node = G.node(f)
    sig = check_program(G)[f]
    if engine == "compiled":
        from seclus.compiled import CompiledProgram

        cp = CompiledProgram(G)

        def runner(ins):
            return cp.run(f, ins, N=N)

    else:

        def runner(ins):
            return run_node(G, f, ins, N=N)

    levels = variable_levels(node, sig, input_levels, lat.bottom, lat, output_levels)
    low_inputs = [d.name for d in node.inputs if lat.leq(levels[d.name], t)]
    observed = sorted(x for x in levels if lat.leq(levels[x], t))
    violations: List[NIViolation] = []
    errors: List[str] = []
    skipped = 0
    for trial in range(lo, hi):
        rng = _trial_rng(seed, 0, trial)
        ins1 = random_inputs(node, N, rng)
        ins2 = random_inputs(node, N, rng)
        for k, d in enumerate(node.inputs):
            if d.name in low_inputs:
                ins2[k] = list(ins1[k])
        if clock_pairing == "skip" and any(
            not isinstance(d.clock, type(BASE)) for d in node.inputs
        ):
            skipped += 1
            continue
        try:
            H1 = runner(ins1)
            H2 = runner(ins2)
        except (ClockMismatch, EvalError) as exc:
            errors.append(f"trial {trial}: {exc!r}")
            continue
        for x in observed:
            s1, s2 = H1[x], H2[x]
            if s1 != s2:
                i = next(i for i, (u, v) in enumerate(zip(s1, s2)) if u != v)
                violations.append(NIViolation(t, trial, x, i, (s1[i], s2[i])))
                break
        if violations:
            break
    return violations, errors, skipped


# ---------------------------------------------------------------------------
# Random program generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_nodes: int = 5
    max_equations: int = 8
    max_depth: int = 4
    max_inputs: int = 3
    merge_depth: int = 2
    # call sites per program; keeps the tree of node instances (which
    # multiplies through chained calls) small enough to execute quickly
    max_calls: int = 6


_INT_BIN = ["+", "-", "*"]
_CMP = ["<", "<=", ">", ">=", "=", "<>"]
_BOOL_BIN = ["and", "or", "xor"]


class _Gen:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.nodes: List[Node] = []
        self.calls_left = cfg.max_calls

    def program(self) -> Program:
        count = self.rng.randint(1, self.cfg.max_nodes)
        for k in range(count):
            self.nodes.append(self.node(f"n{k}"))
        return Program(tuple(self.nodes))

    def node(self, name: str) -> Node:
        rng = self.rng
        n_in = rng.randint(1, self.cfg.max_inputs)
        inputs = tuple(
            VarDecl(f"i{k}", rng.choice(["bool", "int"])) for k in range(n_in)
        )
        n_eqs = rng.randint(1, self.cfg.max_equations)
        defined = [
            (f"x{k}", rng.choice(["bool", "int"])) for k in range(n_eqs - 1)
        ]
        defined.append(("out", rng.choice(["bool", "int"])))
        rng.shuffle(defined)
        outputs = (VarDecl("out", dict(defined)["out"]),)
        locals_ = tuple(VarDecl(x, ty) for x, ty in defined if x != "out")
        all_vars = {d.name: d.type for d in inputs}
        eqs = []
        ready = dict(all_vars)  # instantaneously usable
        every = dict(all_vars)
        every.update({x: ty for x, ty in defined})
        for x, ty in defined:
            e = self.expr(ty, ready, every, self.cfg.max_depth, self.cfg.merge_depth)
            eqs.append(Equation((x,), (e,)))
            ready[x] = ty
        return Node(name, inputs, outputs, locals_, tuple(eqs))

    def expr(self, ty, ready, every, depth, mdepth) -> Expr:
        rng = self.rng
        if depth <= 0:
            return self.leaf(ty, ready)
        kinds = ["leaf", "op", "op", "fby", "ite"]
        if ty in [t for t in ready.values()]:
            kinds.append("leaf")
        if mdepth > 0 and any(t == "bool" for t in ready.values()):
            kinds.append("merge")
        if self.nodes and self.calls_left > 0:
            kinds.append("call")
        k = rng.choice(kinds)
        if k == "leaf":
            return self.leaf(ty, ready)
        if k == "op":
            return self.op(ty, ready, every, depth, mdepth)
        if k == "fby":
            init = self.expr(ty, ready, every, depth - 1, mdepth)
            rest = self.expr(ty, every, every, depth - 1, mdepth)
            return Fby((init,), (rest,))
        if k == "ite":
            c = self.expr("bool", ready, every, depth - 1, mdepth)
            a = self.expr(ty, ready, every, depth - 1, mdepth)
            b = self.expr(ty, ready, every, depth - 1, mdepth)
            return Ite(c, (a,), (b,))
        if k == "merge":
            bools = [x for x, t in ready.items() if t == "bool"]
            x = rng.choice(bools)
            a = self.expr(ty, ready, every, depth - 1, mdepth - 1)
            b = self.expr(ty, ready, every, depth - 1, mdepth - 1)
            return Merge(x, (When((a,), x, True),), (When((b,), x, False),))
        # call an earlier node with matching output type, else fall back
        callees = [n for n in self.nodes if n.outputs[0].type == ty]
        if not callees:
            return self.op(ty, ready, every, depth, mdepth)
        self.calls_left -= 1
        callee = rng.choice(callees)
        args = tuple(
            self.expr(d.type, ready, every, depth - 2, mdepth) for d in callee.inputs
        )
        return NodeCall(callee.name, args)

    def op(self, ty, ready, every, depth, mdepth) -> Expr:
        rng = self.rng
        if ty == "int":
            if rng.random() < 0.15:
                e = self.expr("int", ready, every, depth - 1, mdepth)
                if isinstance(e, Const):  # fold: the parser folds -literal too
                    return Const(-e.value)
                return Unop("-", e)
            if rng.random() < 0.1:
                a = self.expr("int", ready, every, depth - 1, mdepth)
                return Binop(rng.choice(["div", "mod"]), a, Const(rng.choice([2, 3, 5])))
            a = self.expr("int", ready, every, depth - 1, mdepth)
            b = self.expr("int", ready, every, depth - 1, mdepth)
            return Binop(rng.choice(_INT_BIN), a, b)
        r = rng.random()
        if r < 0.2:
            return Unop("not", self.expr("bool", ready, every, depth - 1, mdepth))
        if r < 0.5:
            a = self.expr("int", ready, every, depth - 1, mdepth)
            b = self.expr("int", ready, every, depth - 1, mdepth)
            return Binop(rng.choice(_CMP), a, b)
        a = self.expr("bool", ready, every, depth - 1, mdepth)
        b = self.expr("bool", ready, every, depth - 1, mdepth)
        return Binop(rng.choice(_BOOL_BIN), a, b)

    def leaf(self, ty, ready) -> Expr:
        rng = self.rng
        opts = [x for x, t in ready.items() if t == ty]
        if opts and rng.random() < 0.75:
            return Var(rng.choice(opts))
        if ty == "bool":
            return Const(rng.random() < 0.5)
        return Const(rng.randrange(-4, 5))


def generate_program(cfg: GenConfig) -> Program:
    """Seeded random well-formed, causal, well-clocked program; retries
    internally until validation and scheduling succeed."""
    seed = cfg.seed
    while True:
        p = _Gen(GenConfig(**{**cfg.__dict__, "seed": seed})).program()
        if not validate(p):
            try:
                for n in p.nodes:
                    schedule(n)
                return p
            except Exception:
                pass
        seed = seed * 1_000_003 + 17


# ---------------------------------------------------------------------------
# Report serialisation
# ---------------------------------------------------------------------------


def report_json(obj) -> dict:
    from dataclasses import asdict, is_dataclass

    if is_dataclass(obj):
        d = asdict(obj)
        for extra in ("ok", "verdict"):
            if hasattr(obj, extra):
                d[extra] = getattr(obj, extra)
        return {k: report_json(v) for k, v in sorted(d.items())}
    if isinstance(obj, (list, tuple)):
        return [report_json(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): report_json(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, frozenset):
        return sorted(str(x) for x in obj)
    return obj
