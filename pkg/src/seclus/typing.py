"""Security-flow typing for Lustre/NLustre nodes.

Each node gets a signature: type variables for its inputs, outputs and
base clock plus a constraint set relating them.  Locals (and per-call-site
output variables) are eliminated by serial substitution, so a signature
speaks only about the node's interface.

Deterministic fresh naming: inputs a1, a2, ...; outputs b1, b2, ...;
base clock g; locals and call-site result variables d1, d2, ... in
declaration order followed by call order.  Running the checker twice on
the same program therefore produces literally identical signatures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from seclus.ast import (
    BASE,
    AnyEquation,
    Base,
    Binop,
    CallEq,
    Clock,
    Const,
    Equation,
    Expr,
    Fby,
    FbyEq,
    Ite,
    Merge,
    Node,
    NodeCall,
    On,
    Program,
    SimpleEq,
    Unop,
    Var,
    When,
    clock_env,
    topo_order,
)
from seclus.sectypes import (
    BOT,
    Constraint,
    ConstraintSet,
    GroundInstantiation,
    Refine,
    SecType,
    SecurityLattice,
    TVar,
    canon_constraints,
    canonicalize,
    join,
    satisfies,
    substitute,
    tvars,
)

# the reserved environment key for the base-clock type
BASE_KEY = "base"

TypeEnv = Dict[str, SecType]


class TypingError(Exception):
    pass


@dataclass(frozen=True)
class NodeSignature:
    """Interface-level flow contract of a node.

    `constraints` mention only `input_vars`, `output_vars` and
    `clock_var`.  `local_types` records, for every eliminated variable
    that names a declared local, the interface-level type it was
    substituted by (used to assign observation levels to locals).
    """

    name: str
    input_vars: Tuple[str, ...]
    output_vars: Tuple[str, ...]
    clock_var: str
    constraints: ConstraintSet
    local_types: Mapping[str, SecType] = field(default_factory=dict, compare=False)

    def rename(self, mapping: Mapping[str, str]) -> "NodeSignature":
        subst = {k: TVar(v) for k, v in mapping.items()}
        return NodeSignature(
            self.name,
            tuple(mapping.get(v, v) for v in self.input_vars),
            tuple(mapping.get(v, v) for v in self.output_vars),
            mapping.get(self.clock_var, self.clock_var),
            substitute(self.constraints, subst),
            {k: substitute(t, subst) for k, t in self.local_types.items()},
        )


SignatureEnv = Dict[str, NodeSignature]


class _Fresh:
    """Counter for the d-class variables (locals + call results)."""

    def __init__(self) -> None:
        self.n = 0

    def next(self) -> str:
        self.n += 1
        return f"d{self.n}"


def _lookup(env: TypeEnv, name: str) -> SecType:
    try:
        return env[name]
    except KeyError:
        raise TypingError(f"unbound variable {name!r}") from None


def type_clock(env: TypeEnv, ck: Clock) -> SecType:
    """Base clocks read the environment's base entry; sampled clocks
    join in the type of the sampling variable."""
    if isinstance(ck, Base):
        return _lookup(env, BASE_KEY)
    assert isinstance(ck, On)
    return join(type_clock(env, ck.clock), _lookup(env, ck.var))


def type_expr(
    env: TypeEnv, sigs: SignatureEnv, e: Expr, fresh: Optional[_Fresh] = None
) -> list[SecType]:
    """One security type per component stream of `e`, in order.

    Node-call results are refinement types: fresh result variables
    constrained by the callee signature instantiated at the argument
    types and the caller's base-clock type.
    """
    if fresh is None:
        fresh = _Fresh()
    if isinstance(e, Const):
        return [BOT]
    if isinstance(e, Var):
        return [_lookup(env, e.name)]
    if isinstance(e, Unop):
        return type_expr(env, sigs, e.operand, fresh)
    if isinstance(e, Binop):
        (l,) = type_expr(env, sigs, e.left, fresh)
        (r,) = type_expr(env, sigs, e.right, fresh)
        return [join(l, r)]
    if isinstance(e, When):
        x = _lookup(env, e.var)
        return [join(t, x) for t in _type_all(env, sigs, e.exprs, fresh)]
    if isinstance(e, Merge):
        theta = _lookup(env, e.var)
        ts = _type_all(env, sigs, e.on_true, fresh)
        fs = _type_all(env, sigs, e.on_false, fresh)
        _same_width(ts, fs)
        return [join(theta, a, b) for a, b in zip(ts, fs)]
    if isinstance(e, Ite):
        (theta,) = type_expr(env, sigs, e.cond, fresh)
        ts = _type_all(env, sigs, e.on_true, fresh)
        fs = _type_all(env, sigs, e.on_false, fresh)
        _same_width(ts, fs)
        return [join(theta, a, b) for a, b in zip(ts, fs)]
    if isinstance(e, Fby):
        ts = _type_all(env, sigs, e.init, fresh)
        fs = _type_all(env, sigs, e.rest, fresh)
        _same_width(ts, fs)
        return [join(a, b) for a, b in zip(ts, fs)]
    if isinstance(e, NodeCall):
        return _type_call(env, sigs, e.node, e.args, _lookup(env, BASE_KEY), fresh)
    raise TypingError(f"cannot type {type(e).__name__}")


def _type_call(
    env: TypeEnv,
    sigs: SignatureEnv,
    node: str,
    args: tuple[Expr, ...],
    clock_type: SecType,
    fresh: _Fresh,
) -> list[SecType]:
    if node not in sigs:
        raise TypingError(f"unknown node {node!r}")
    sig = sigs[node]
    arg_types = _type_all(env, sigs, args, fresh)
    if len(arg_types) != len(sig.input_vars):
        raise TypingError(
            f"call to {node!r}: {len(arg_types)} argument streams,"
            f" signature has {len(sig.input_vars)}"
        )
    results = [fresh.next() for _ in sig.output_vars]
    subst: dict[str, SecType] = {sig.clock_var: clock_type}
    subst.update(zip(sig.input_vars, arg_types))
    subst.update((b, TVar(r)) for b, r in zip(sig.output_vars, results))
    rho = substitute(sig.constraints, subst)
    if not rho:
        return [TVar(r) for r in results]
    return [canonicalize(Refine(TVar(r), rho)) for r in results]


def _type_all(env, sigs, es, fresh) -> list[SecType]:
    out: list[SecType] = []
    for e in es:
        out.extend(type_expr(env, sigs, e, fresh))
    return out


def _same_width(a: list, b: list) -> None:
    if len(a) != len(b):
        raise TypingError("branch width mismatch")


def type_equation(
    env: TypeEnv,
    sigs: SignatureEnv,
    eq: AnyEquation,
    clocks: Optional[Mapping[str, Clock]] = None,
    fresh: Optional[_Fresh] = None,
) -> ConstraintSet:
    """Constraints of one equation: for each defined variable x with rhs
    component type t and clock type c, require c|t <= env(x).  Refinement
    types are flattened into the set."""
    if fresh is None:
        fresh = _Fresh()
    if isinstance(eq, Equation):
        if clocks is None:
            clocks = {}
        types = _type_all(env, sigs, eq.exprs, fresh)
        if len(types) != len(eq.targets):
            raise TypingError(
                f"equation for {', '.join(eq.targets)}: width mismatch"
                f" ({len(types)} vs {len(eq.targets)})"
            )
        cons = []
        for x, t in zip(eq.targets, types):
            ckt = type_clock(env, clocks.get(x, BASE))
            cons.append(Constraint(join(ckt, t), _lookup(env, x)))
        return canon_constraints(cons)
    ckt = type_clock(env, eq.clock)
    if isinstance(eq, SimpleEq):
        (t,) = type_expr(env, sigs, eq.rhs, fresh)
        return canon_constraints([Constraint(join(ckt, t), _lookup(env, eq.target))])
    if isinstance(eq, FbyEq):
        (a,) = type_expr(env, sigs, eq.init, fresh)
        (b,) = type_expr(env, sigs, eq.rhs, fresh)
        return canon_constraints([Constraint(join(ckt, a, b), _lookup(env, eq.target))])
    if isinstance(eq, CallEq):
        # the clock type at the call's own annotation stands in for the
        # caller's base entry when instantiating the callee signature
        types = _type_call(env, sigs, eq.node, eq.args, ckt, fresh)
        if len(types) != len(eq.targets):
            raise TypingError(f"call equation for {', '.join(eq.targets)}: width mismatch")
        cons = [
            Constraint(join(ckt, t), _lookup(env, x)) for x, t in zip(eq.targets, types)
        ]
        return canon_constraints(cons)
    raise TypingError(f"cannot type equation {type(eq).__name__}")


# ---------------------------------------------------------------------------
# Local-variable elimination
# ---------------------------------------------------------------------------


def simplify(
    types: list[SecType], rho: ConstraintSet, deltas: list[str]
) -> tuple[list[SecType], ConstraintSet]:
    """Serially eliminate each variable in `deltas` by substituting the
    left side of its unique defining constraint for it."""
    out, _ = _eliminate(types, rho, deltas, strict=True)
    return out


def _eliminate(
    types: list[SecType], rho: ConstraintSet, deltas: list[str], strict: bool = False
) -> tuple[tuple[list[SecType], ConstraintSet], dict[str, SecType]]:
    types = [canonicalize(t) for t in types]
    rho = canon_constraints(rho)
    resolved: dict[str, SecType] = {}
    for d in deltas:
        defining = [c for c in rho if c.rhs == TVar(d)]
        if len(defining) != 1:
            # a call-result variable loses its defining constraint when
            # the callee ignores the argument it refines; if nothing else
            # mentions it, eliminating with bottom is exact
            occurs = any(d in tvars(c) for c in rho)
            if strict or defining or occurs:
                raise TypingError(
                    f"{len(defining)} constraints define {d!r}; expected exactly one"
                )
            resolved[d] = BOT
            continue
        nu = defining[0].lhs
        if d in tvars(nu):
            raise TypingError(f"{d!r} occurs in its own bound {nu}")
        step = {d: nu}
        rho = substitute(frozenset(rho - {defining[0]}), step)
        types = [substitute(t, step) for t in types]
        resolved = {k: substitute(v, step) for k, v in resolved.items()}
        resolved[d] = canonicalize(nu)
    return (types, rho), resolved


def node_signature(prog: Program, sigs: SignatureEnv, n: Node) -> NodeSignature:
    """Type every equation of `n` with fresh variables, then eliminate
    the locals and call-result variables."""
    in_vars = tuple(f"a{i}" for i in range(1, len(n.inputs) + 1))
    out_vars = tuple(f"b{i}" for i in range(1, len(n.outputs) + 1))
    fresh = _Fresh()
    local_vars = {d.name: fresh.next() for d in n.locals}
    env: TypeEnv = {BASE_KEY: TVar("g")}
    env.update(zip((d.name for d in n.inputs), map(TVar, in_vars)))
    env.update(zip((d.name for d in n.outputs), map(TVar, out_vars)))
    env.update((x, TVar(v)) for x, v in local_vars.items())

    clocks = clock_env(n)
    rho: set[Constraint] = set()
    for eq in n.equations:
        rho |= type_equation(env, sigs, eq, clocks, fresh)

    deltas = list(local_vars.values())
    deltas += [f"d{i}" for i in range(len(n.locals) + 1, fresh.n + 1)]
    (_, final), resolved = _eliminate([], frozenset(rho), deltas)

    interface = set(in_vars) | set(out_vars) | {"g"}
    leftover = tvars(final) - interface
    if leftover:
        raise TypingError(f"unresolved type variables {sorted(leftover)}")
    local_types = {x: resolved[v] for x, v in local_vars.items()}
    return NodeSignature(n.name, in_vars, out_vars, "g", final, local_types)


def check_program(prog: Program) -> SignatureEnv:
    """Signatures for every node, in dependency order."""
    order = topo_order(prog)
    if order is None:
        raise TypingError("node call graph is cyclic")
    sigs: SignatureEnv = {}
    for name in order:
        node = prog.node(name)
        sigs[name] = node_signature(prog, sigs, node)
    return sigs


# ---------------------------------------------------------------------------
# Policy checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolicyResult:
    secure: bool
    violation: Optional[Constraint] = None
    witness: Optional[GroundInstantiation] = None

    def __bool__(self) -> bool:
        return self.secure


def check_policy(
    sig: NodeSignature, policy: Mapping[str, object], lat: SecurityLattice
) -> PolicyResult:
    """Is the signature satisfied when interface variables are pinned to
    the given lattice levels?  `policy` maps type-variable names (or the
    node's own variable names via `policy_instantiation`) to elements."""
    s: GroundInstantiation = {}
    for v in (*sig.input_vars, *sig.output_vars, sig.clock_var):
        if v not in policy:
            raise TypingError(f"policy missing a level for {v!r}")
        lev = policy[v]
        if lev not in lat.elements:
            raise TypingError(f"{lev!r} is not an element of the lattice")
        s[v] = lev
    if satisfies(s, sig.constraints, lat):
        return PolicyResult(True)
    for c in sorted(sig.constraints, key=str):
        if not satisfies(s, frozenset([c]), lat):
            return PolicyResult(False, c, dict(s))
    raise AssertionError("unreachable")


def policy_instantiation(
    node: Node, sig: NodeSignature, named: Mapping[str, object]
) -> dict[str, object]:
    """Translate a policy keyed by source variable names (plus "base")
    into one keyed by the signature's type variables."""
    out: dict[str, object] = {}
    names = {d.name: v for d, v in zip(node.inputs, sig.input_vars)}
    names.update({d.name: v for d, v in zip(node.outputs, sig.output_vars)})
    names[BASE_KEY] = sig.clock_var
    for k, lev in named.items():
        if k not in names:
            raise TypingError(f"{k!r} is not an interface variable of {node.name}")
        out[names[k]] = lev
    return out


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _var_key(name: str) -> tuple:
    # dump order: clock first, then inputs, outputs, leftovers; numeric-aware
    klass = {"g": 0, "a": 1, "b": 2, "d": 3}.get(name[0], 4)
    digits = name[1:]
    num = int(digits) if digits.isdigit() else 0
    return (klass, num, name)


def _dump_type(t: SecType) -> str:
    from seclus.sectypes import Join as _Join, Bot as _Bot

    if isinstance(t, _Bot):
        return "bot"
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, _Join):
        names = sorted((e.name for e in t.elems if isinstance(e, TVar)), key=_var_key)
        rest = [_dump_type(e) for e in t.elems if not isinstance(e, TVar)]
        return "|".join(names + rest)
    return str(t)


def render_signature(sig: NodeSignature) -> str:
    """One-line dump: `f(a1,a2) =>g (b1) { g|a1|a2 <= b1 }`."""
    cons = sorted(sig.constraints, key=lambda c: (_dump_type(c.rhs), _dump_type(c.lhs)))
    body = ", ".join(f"{_dump_type(c.lhs)} <= {_dump_type(c.rhs)}" for c in cons)
    return (
        f"{sig.name}({','.join(sig.input_vars)}) =>{sig.clock_var}"
        f" ({','.join(sig.output_vars)}) {{ {body} }}"
    )
