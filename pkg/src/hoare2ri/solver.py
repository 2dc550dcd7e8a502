"""Validity, satisfiability and equivalence of constraints.

Queries go through a fixed pipeline of decision paths:

1. ground evaluation,
2. built-in reasoning (propositional abstraction of atoms and an
   implication checker over normalized polynomial atoms),
3. an external SMT-LIB2 solver process (``z3 -in`` unless configured),
4. a bounded search for counterexamples/models.

A path that cannot decide passes the query on.  Every model surfaced as a
counterexample or witness is re-evaluated with the theory's evaluator; a
model that does not check out is discarded and the verdict becomes Unknown.
"""

from __future__ import annotations

import enum
import itertools
import logging
import os
import random
import select
import shlex
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Union

from hoare2ri import poly as P
from hoare2ri import smtlib
from hoare2ri import theory as th
from hoare2ri.syntax import show
from hoare2ri.terms import App, BOOL, INT, Term, Var, ordered_vars

log = logging.getLogger(__name__)

ENV_VAR = "HOARE2RI_SOLVER"
DEFAULT_CMD = "z3 -in"
DEFAULT_TIMEOUT_MS = 10_000


class Status(enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN = "unknown"


Model = dict[Var, Union[int, bool]]


@dataclass(frozen=True)
class SolverVerdict:
    """Outcome of one query.

    For ``check_sat`` a VALID status means satisfiable (``model`` is a
    witness) and INVALID means unsatisfiable."""
    status: Status
    model: Optional[Model] = None
    reason: str = ""
    engine: str = ""
    query: str = ""

    @property
    def valid(self) -> bool:
        return self.status is Status.VALID

    @property
    def invalid(self) -> bool:
        return self.status is Status.INVALID

    @property
    def unknown(self) -> bool:
        return self.status is Status.UNKNOWN

    def model_text(self) -> str:
        if not self.model:
            return "{}"
        return "{" + ", ".join(f"{v.name}↦{_fmt(x)}" for v, x in self.model.items()) + "}"

    def to_json(self) -> dict:
        out = {"status": self.status.value, "engine": self.engine}
        if self.reason:
            out["reason"] = self.reason
        if self.model is not None:
            out["model"] = {v.name: x for v, x in self.model.items()}
        return out


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


# counters inspected by the test-suite (models rejected by re-evaluation)
STATS = {"models_confirmed": 0, "models_unconfirmed": 0, "smt_queries": 0}
_stats_lock = threading.Lock()


def _bump(key: str) -> None:
    with _stats_lock:
        STATS[key] += 1


# --- atom normalization -----------------------------------------------------

Atom = tuple  # ("eq"|"ne"|"ge", poly-key) or ("const", bool)


def _sign_normalize(p: P.Poly) -> P.Poly:
    items = sorted(((m, c) for m, c in p.items() if m != P.ONE), key=P._sort_key)
    if items and items[0][1] < 0:
        return P.pscale(p, -1)
    return p


def _canon(kind: str, p: P.Poly) -> tuple[Atom, Optional[P.Poly]]:
    if P.is_constant(p):
        c = P.constant_of(p)
        val = {"eq": c == 0, "ne": c != 0, "ge": c >= 0}[kind]
        return ("const", val), None
    g = P.content(p, skip_constant=True)
    c = P.constant_of(p)
    if kind in ("eq", "ne"):
        if c % g:
            return ("const", kind == "ne"), None
        q = {m: v // g for m, v in p.items()}
        q = _sign_normalize(q)
    else:
        q = {m: v // g for m, v in p.items() if m != P.ONE}
        c2 = c // g  # floor: tightening over the integers
        if c2:
            q[P.ONE] = c2
    return (kind, P.key(q)), q


def normalize_atom(t: Term, positive: bool = True):
    """Normalized comparison atom as ``(atom, poly)``; ``None`` when ``t`` is
    not a polynomial comparison."""
    if isinstance(t, App) and t.fun == th.NOT:
        return normalize_atom(t.args[0], not positive)
    if th.is_value(t) and t.fun.res_sort == BOOL:
        return ("const", th.decode(t) == positive), None
    if not isinstance(t, App) or t.fun not in th.COMPARISONS:
        return None
    a, b = P.to_poly(t.args[0]), P.to_poly(t.args[1])
    if a is None or b is None:
        return None
    d = P.padd(a, b, -1)
    f = t.fun
    if f == th.EQ:
        return _canon("eq" if positive else "ne", d)
    if f == th.NEQ:
        return _canon("ne" if positive else "eq", d)
    if f == th.GE:
        return _canon("ge", d) if positive else _canon("ge", P.padd(P.pscale(d, -1), P.const(-1)))
    # GT
    return _canon("ge", P.padd(d, P.const(-1))) if positive else _canon("ge", P.pscale(d, -1))


# --- built-in reasoning ------------------------------------------------------

def _prop_atoms(t: Term, acc: dict) -> None:
    if isinstance(t, App) and t.fun in (th.AND, th.OR, th.IMPLIES, th.NOT, th.BEQ):
        for a in t.args:
            _prop_atoms(a, acc)
        return
    if isinstance(t, App) and th.is_value(t):
        return
    key, polarity = _prop_key(t)
    acc.setdefault(key, None)


def _prop_key(t: Term):
    """Key of the propositional variable an atom maps to, plus polarity."""
    norm = normalize_atom(t)
    if norm is None:
        return ("opaque", show(t)), True
    (atom, q) = norm
    if atom[0] == "const":
        return atom, True
    kind, key = atom
    if kind == "ne":
        return ("eq", key), False
    if kind == "ge":
        # p >= 0 is the negation of -p - 1 >= 0
        other = P.key(P.padd(P.pscale(q, -1), P.const(-1)))
        if other < key:
            return ("ge", other), False
    return atom, True


def _prop_eval(t: Term, assign: dict) -> bool:
    if isinstance(t, App):
        f = t.fun
        if f == th.AND:
            return _prop_eval(t.args[0], assign) and _prop_eval(t.args[1], assign)
        if f == th.OR:
            return _prop_eval(t.args[0], assign) or _prop_eval(t.args[1], assign)
        if f == th.IMPLIES:
            return (not _prop_eval(t.args[0], assign)) or _prop_eval(t.args[1], assign)
        if f == th.NOT:
            return not _prop_eval(t.args[0], assign)
        if f == th.BEQ:
            return _prop_eval(t.args[0], assign) == _prop_eval(t.args[1], assign)
        if th.is_value(t):
            return bool(th.decode(t))
    key, pol = _prop_key(t)
    if key[0] == "const":
        return key[1]
    return assign[key] == pol


def propositionally_valid(phi: Term, max_atoms: int = 12) -> bool:
    atoms: dict = {}
    _prop_atoms(phi, atoms)
    keys = [k for k in atoms if k[0] != "const"]
    if len(keys) > max_atoms:
        return False
    for bits in itertools.product((False, True), repeat=len(keys)):
        if not _prop_eval(phi, dict(zip(keys, bits))):
            return False
    return True


def _atoms_of(conjs: list[Term]) -> Optional[list[tuple[Atom, Optional[P.Poly]]]]:
    out = []
    for c in conjs:
        n = normalize_atom(c)
        if n is None:
            return None
        out.append(n)
    return out


def _solve_unit(ants) -> Optional[tuple[Var, P.Poly, int]]:
    """An equation ``±v + rest = 0`` where ``v`` does not occur in ``rest``."""
    for idx, (atom, q) in enumerate(ants):
        if atom[0] != "eq":
            continue
        for m, c in q.items():
            if len(m) == 1 and m[0][1] == 1 and c in (1, -1):
                v = m[0][0]
                rest = {mm: cc for mm, cc in q.items() if mm != m}
                if v in P.variables(rest):
                    continue
                return v, P.pscale(rest, -c), idx
    return None


def _derive_equalities(ants):
    ges = {}
    for atom, q in ants:
        if atom[0] == "ge":
            ges[atom[1]] = q
    out = list(ants)
    for k, q in ges.items():
        neg = P.key(P.pscale(q, -1))
        if neg in ges:
            eq = _canon("eq", q)
            if eq not in out:
                out.append(eq)
    return out


def implication_valid(antecedent: list[Term], consequent: list[Term]) -> bool:
    """Sound, incomplete check of ``/\\ antecedent ==> /\\ consequent``."""
    ants = [n for n in (normalize_atom(a) for a in antecedent) if n is not None]
    cons = _atoms_of(consequent)
    if cons is None:
        return False
    for _ in range(16):
        if any(a == ("const", False) for a, _ in ants):
            return True
        ants = _derive_equalities(ants)
        solved = _solve_unit(ants)
        if solved is None:
            break
        v, val, idx = solved
        ants = [a for i, a in enumerate(ants) if i != idx]

        def subst(items):
            res = []
            for atom, q in items:
                if q is None:
                    res.append((atom, q))
                else:
                    res.append(_canon(atom[0], P.substitute(q, v, val)))
            return res
        ants, cons = subst(ants), subst(cons)
    if any(a == ("const", False) for a, _ in ants):
        return True
    # unsatisfiable antecedent: two bounds summing to a negative constant
    ge_polys = [q for a, q in ants if a[0] == "ge"]
    for q1, q2 in itertools.combinations(ge_polys, 2):
        s = P.padd(q1, q2)
        if P.is_constant(s) and P.constant_of(s) < 0:
            return True
    known = {a for a, _ in ants}
    ge_by_linear: dict[tuple, int] = {}
    for a, q in ants:
        if a[0] == "ge":
            lin = {m: c for m, c in q.items() if m != P.ONE}
            k = P.key(lin)
            ge_by_linear[k] = min(ge_by_linear.get(k, P.constant_of(q)), P.constant_of(q))
        if a[0] == "eq":
            for s in (1, -1):
                lin = {m: c * s for m, c in q.items() if m != P.ONE}
                k = P.key(lin)
                cst = P.constant_of(q) * s
                ge_by_linear[k] = min(ge_by_linear.get(k, cst), cst)
    for atom, q in cons:
        if atom == ("const", True) or atom in known:
            continue
        if atom[0] == "ge":
            lin = {m: c for m, c in q.items() if m != P.ONE}
            have = ge_by_linear.get(P.key(lin))
            if have is not None and have <= P.constant_of(q):
                continue
        if atom[0] == "ne":
            # p != 0 follows from p >= 1 or -p >= 1
            lin = {m: c for m, c in q.items() if m != P.ONE}
            c0 = P.constant_of(q)
            h1 = ge_by_linear.get(P.key(lin))
            h2 = ge_by_linear.get(P.key(P.pscale(lin, -1)))
            if (h1 is not None and _implies_pos(h1, c0)) or \
                    (h2 is not None and _implies_pos(h2, -c0)):
                continue
        return False
    return True


def _implies_pos(have_const: int, c0: int) -> bool:
    # lin + have_const >= 0  implies  lin + c0 > 0  when  c0 > have_const
    return c0 > have_const


def builtin_valid(phi: Term) -> bool:
    if propositionally_valid(phi):
        return True
    if isinstance(phi, App) and phi.fun == th.IMPLIES:
        return implication_valid(th.conjuncts(phi.args[0]), th.conjuncts(phi.args[1]))
    if isinstance(phi, App) and phi.fun == th.BEQ:
        a, b = phi.args
        return (implication_valid(th.conjuncts(a), th.conjuncts(b))
                and implication_valid(th.conjuncts(b), th.conjuncts(a)))
    return implication_valid([], th.conjuncts(phi))


def builtin_unsat(phi: Term) -> bool:
    return implication_valid(th.conjuncts(phi), [th.FALSE])


# --- the external process ----------------------------------------------------

class SmtSession:
    """One long-lived solver process spoken to over stdin/stdout."""

    def __init__(self, cmd: str, timeout_ms: int):
        self.cmd = cmd
        self.timeout_ms = timeout_ms
        self.proc: Optional[subprocess.Popen] = None
        self.buf = b""

    def start(self) -> None:
        self.proc = subprocess.Popen(shlex.split(self.cmd), stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, stderr=subprocess.DEVNULL)
        self.buf = b""
        self._send("(set-option :print-success false)\n"
                   "(set-option :produce-models true)\n(set-logic NIA)\n")

    def close(self) -> None:
        if self.proc is not None:
            try:
                self.proc.kill()
                self.proc.wait(timeout=2)
            except Exception:  # noqa: BLE001 - best effort teardown
                pass
            self.proc = None

    def _send(self, text: str) -> None:
        assert self.proc is not None and self.proc.stdin is not None
        self.proc.stdin.write(text.encode())
        self.proc.stdin.flush()

    def _read(self, deadline: float, done) -> str:
        assert self.proc is not None and self.proc.stdout is not None
        fd = self.proc.stdout.fileno()
        while True:
            self.buf = self.buf.lstrip()
            text = self.buf.decode(errors="replace")
            n = done(text)
            if n:
                self.buf = self.buf[len(text[:n].encode()):]
                return text[:n]
            left = deadline - time.monotonic()
            if left <= 0:
                raise TimeoutError
            ready, _, _ = select.select([fd], [], [], left)
            if not ready:
                raise TimeoutError
            chunk = os.read(fd, 65536)
            if not chunk:
                raise smtlib.ProtocolError("solver process closed its output")
            self.buf += chunk

    @staticmethod
    def _line(text: str) -> int:
        i = text.find("\n")
        return i + 1 if i >= 0 else 0

    @staticmethod
    def _sexpr(text: str) -> int:
        depth, seen = 0, False
        for i, ch in enumerate(text):
            if ch == "(":
                depth, seen = depth + 1, True
            elif ch == ")":
                depth -= 1
                if seen and depth == 0:
                    return i + 1
        return 0

    def check(self, lines: list[str], want_model: bool) -> tuple[str, Optional[str]]:
        if self.proc is None or self.proc.poll() is not None:
            self.start()
        deadline = time.monotonic() + self.timeout_ms / 1000
        try:
            self._send("(push 1)\n" + "\n".join(lines) + "\n(check-sat)\n")
            answer = self._read(deadline, self._line).strip()
            model = None
            if answer == "sat" and want_model:
                self._send("(get-model)\n")
                model = self._read(deadline, self._sexpr)
            self._send("(pop 1)\n")
        except TimeoutError:
            self.close()
            return "timeout", None
        except (OSError, BrokenPipeError) as e:
            self.close()
            raise smtlib.ProtocolError(str(e)) from e
        if answer not in ("sat", "unsat", "unknown"):
            self.close()
            raise smtlib.ProtocolError(f"unexpected solver reply {answer!r}")
        return answer, model


# --- the solver facade --------------------------------------------------------

@dataclass
class Solver:
    cmd: Optional[str] = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    external: bool = True
    search_bound: int = 3
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _local: threading.local = field(default_factory=threading.local, repr=False)
    _warned: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.cmd is None:
            self.cmd = os.environ.get(ENV_VAR) or DEFAULT_CMD

    # public API

    def check_valid(self, phi: Term) -> SolverVerdict:
        return self._cached("valid", phi, self._valid)

    def check_sat(self, phi: Term) -> SolverVerdict:
        return self._cached("sat", phi, self._sat)

    def check_equiv(self, phi: Term, psi: Term) -> SolverVerdict:
        return self.check_valid(th.iff(phi, psi))

    def check_implies(self, phi: Term, psi: Term) -> SolverVerdict:
        return self.check_valid(th.implies(phi, psi))

    @property
    def external_available(self) -> bool:
        if not self.external:
            return False
        exe = shlex.split(self.cmd)[0] if self.cmd else ""
        ok = bool(exe) and shutil.which(exe) is not None
        if not ok and not self._warned:
            log.warning("SMT solver %r not found; using the built-in fallback", self.cmd)
            self._warned = True
        return ok

    def close(self) -> None:
        sess = getattr(self._local, "session", None)
        if sess is not None:
            sess.close()
            self._local.session = None

    # internals

    def _cached(self, kind: str, phi: Term, fn) -> SolverVerdict:
        key = (kind, show(phi), tuple(sorted((v.name, v.sort.name) for v in ordered_vars(phi))))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        verdict = fn(phi)
        verdict = SolverVerdict(verdict.status, verdict.model, verdict.reason,
                                verdict.engine, f"{kind}: {show(phi)}")
        with self._lock:
            self._cache[key] = verdict
        return verdict

    def _session(self) -> SmtSession:
        sess = getattr(self._local, "session", None)
        if sess is None:
            sess = SmtSession(self.cmd, self.timeout_ms)
            self._local.session = sess
        return sess

    def _confirm(self, phi: Term, model: Model, want: bool, engine: str) -> SolverVerdict:
        env = dict(model)
        for v in ordered_vars(phi):
            env.setdefault(v, False if v.sort == BOOL else 0)
        try:
            ok = th.eval_py(phi, env) == want
        except th.EvalError:
            ok = False
        if not ok:
            _bump("models_unconfirmed")
            return SolverVerdict(Status.UNKNOWN, None, "model failed re-evaluation", engine)
        _bump("models_confirmed")
        full = {v: env[v] for v in ordered_vars(phi)}
        status = Status.INVALID if want is False else Status.VALID
        return SolverVerdict(status, full, "", engine)

    def _ground(self, phi: Term) -> Optional[bool]:
        if ordered_vars(phi):
            return None
        return bool(th.decode(th.eval_ground(phi)))

    def _valid(self, phi: Term) -> SolverVerdict:
        g = self._ground(phi)
        if g is not None:
            return SolverVerdict(Status.VALID if g else Status.INVALID, {} if not g else None,
                                 "", "ground")
        if builtin_valid(phi):
            return SolverVerdict(Status.VALID, None, "", "builtin")
        reason = "no decision procedure applied"
        if self.external_available:
            try:
                answer, model_text = self._smt(phi, negate=True)
            except smtlib.Unsupported as e:
                answer, model_text, reason = "unsupported", None, str(e)
            except smtlib.ProtocolError as e:
                answer, model_text, reason = "error", None, f"protocol-error: {e}"
            if answer == "unsat":
                return SolverVerdict(Status.VALID, None, "", "smt")
            if answer == "sat" and model_text is not None:
                model = self._read_model(phi, model_text)
                if model is not None:
                    return self._confirm(phi, model, False, "smt")
                reason = "protocol-error: unreadable model"
            elif answer in ("timeout", "unknown"):
                reason = f"solver {answer}"
        cex = self._search(phi, want=False)
        if cex is not None:
            return self._confirm(phi, cex, False, "search")
        return SolverVerdict(Status.UNKNOWN, None, reason, "none")

    def _sat(self, phi: Term) -> SolverVerdict:
        g = self._ground(phi)
        if g is not None:
            return SolverVerdict(Status.VALID if g else Status.INVALID, {} if g else None,
                                 "", "ground")
        if builtin_unsat(phi):
            return SolverVerdict(Status.INVALID, None, "", "builtin")
        reason = "no decision procedure applied"
        if self.external_available:
            try:
                answer, model_text = self._smt(phi, negate=False)
            except smtlib.Unsupported as e:
                answer, model_text, reason = "unsupported", None, str(e)
            except smtlib.ProtocolError as e:
                answer, model_text, reason = "error", None, f"protocol-error: {e}"
            if answer == "unsat":
                return SolverVerdict(Status.INVALID, None, "", "smt")
            if answer == "sat" and model_text is not None:
                model = self._read_model(phi, model_text)
                if model is not None:
                    return self._confirm(phi, model, True, "smt")
            elif answer in ("timeout", "unknown"):
                reason = f"solver {answer}"
        wit = self._search(phi, want=True)
        if wit is not None:
            return self._confirm(phi, wit, True, "search")
        return SolverVerdict(Status.UNKNOWN, None, reason, "none")

    def _smt(self, phi: Term, negate: bool):
        lines = smtlib.script(phi, negate)
        _bump("smt_queries")
        return self._session().check(lines, want_model=True)

    @staticmethod
    def _read_model(phi: Term, text: str) -> Optional[Model]:
        try:
            raw = smtlib.parse_model(text)
        except smtlib.ProtocolError:
            return None
        out: Model = {}
        for v in ordered_vars(phi):
            name = v.name
            if name in raw:
                out[v] = raw[name]
        return out

    def _search(self, phi: Term, want: bool) -> Optional[Model]:
        vs = ordered_vars(phi)
        if any(v.sort not in (INT, BOOL) for v in vs):
            return None
        b = self.search_bound
        doms = [(False, True) if v.sort == BOOL else range(-b, b + 1) for v in vs]
        size = 1
        for d in doms:
            size *= len(d)
        if size <= 20_000:
            candidates = itertools.product(*doms)
        else:
            rng = random.Random(self.seed)
            candidates = (tuple(rng.choice(d) for d in doms) for _ in range(20_000))
        for vals in candidates:
            env = dict(zip(vs, vals))
            try:
                if bool(th.eval_py(phi, env)) == want:
                    return env
            except th.EvalError:
                return None
        return None


_global_default: Optional[Solver] = None


def default_solver() -> Solver:
    global _global_default
    if _global_default is None:
        _global_default = Solver()
    return _global_default


def set_default_solver(s: Optional[Solver]) -> None:
    global _global_default
    if _global_default is not None and _global_default is not s:
        _global_default.close()
    _global_default = s


def check_valid(phi: Term, solver: Optional[Solver] = None) -> SolverVerdict:
    return (solver or default_solver()).check_valid(phi)


def check_sat(phi: Term, solver: Optional[Solver] = None) -> SolverVerdict:
    return (solver or default_solver()).check_sat(phi)


def check_equiv(phi: Term, psi: Term, solver: Optional[Solver] = None) -> SolverVerdict:
    return (solver or default_solver()).check_equiv(phi, psi)
