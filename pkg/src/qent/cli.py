"""``qent`` command-line interface.

Exit codes: 0 success, 1 analysis-level failure, 2 input error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from collections.abc import Callable
from typing import Any

import numpy as np

from . import config, entanglement as ent, factorization as fac, generalized as ge, psa as psa_mod
from . import relational as rel
from .errors import InputError, QentError
from .io import (
    LoadedValue,
    dumps_report,
    parse_factorization_file,
    parse_state_file,
    sha256_bytes,
    to_jsonable,
    validate_report,
    write_atomic,
)
from .operators import pure_density, random_density

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class Inputs:
    """Lazily loaded ``--input`` / ``--fact`` with digests for the report."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.records: list[dict[str, str]] = []
        self._state: LoadedValue | None = None

    def state(self, kinds: tuple[str, ...]) -> LoadedValue:
        if self.args.input is None:
            raise InputError(f"--input is required ({' or '.join(kinds)})")
        if self._state is None:
            self._state = parse_state_file(self.args.input, normalize=self.args.normalize)
            self.records.append({"role": "input", "path": self.args.input, "sha256": self._state.digest})
        if self._state.kind not in kinds:
            raise InputError(f"input kind {self._state.kind!r} not accepted here; expected {' or '.join(kinds)}")
        return self._state

    def factorization(self, dim: int) -> fac.Factorization:
        if self.args.fact is not None:
            f = parse_factorization_file(self.args.fact)
            with open(self.args.fact, "rb") as fh:
                self.records.append({"role": "fact", "path": self.args.fact, "sha256": sha256_bytes(fh.read())})
            f.check(dim)
            return f
        root = math.isqrt(dim)
        if root * root == dim:
            return fac.standard_factorization(root, root)
        if dim % 2 == 0:
            return fac.standard_factorization(2, dim // 2)
        raise InputError(f"no default factorization for dimension {dim}; pass --fact")


def _thresholds(args) -> rel.RelationThresholds:
    try:
        return rel.RelationThresholds(args.tau_intensive, args.tau_effective)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _density_of(value: LoadedValue) -> np.ndarray:
    return pure_density(value.value) if value.kind == "pure" else value.value


def cmd_analyze(args, inputs: Inputs) -> tuple[dict, list[str]]:
    st = inputs.state(("pure", "density"))
    f = inputs.factorization(st.dim)
    verdict = ent.classify_orthodox(st.value, f)
    rho = _density_of(st)
    out: dict[str, Any] = {
        "factorization": [f.d1, f.d2],
        "state_kind": st.kind,
        "orthodox": {"kind": verdict.kind, "measure": verdict.measure, "witness": verdict.witness},
        "negativity": ent.negativity(rho, f),
    }
    if st.kind == "pure":
        s = ent.schmidt(st.value, f)
        out["schmidt_coefficients"] = s.coefficients
        out["entropy_bits"] = ent.entanglement_entropy(s)
    if (f.d1, f.d2) == (2, 2):
        value, settings = ent.chsh_max(rho, f)
        out["chsh"] = {"value": value, "settings": settings, "violates_local_bound": value > 2.0}
    return out, []


def cmd_refactor_scan(args, inputs: Inputs) -> tuple[dict, list[str]]:
    st = inputs.state(("pure",))
    f = inputs.factorization(st.dim)
    psi = st.value
    local = np.diag(np.linspace(-1.0, 1.0, f.d1))
    s0 = ent.schmidt(psi, f)
    qcf_native = fac.qcf(f.local_left(local), f.local_right(local), psi)
    new_f, (wf, wg) = fac.entangling_factorization_for(psi, f)
    s1 = ent.schmidt(psi, new_f)
    qcf_new = fac.qcf(wf, wg, psi)
    out = {
        "factorization": [f.d1, f.d2],
        "native": {"entropy_bits": ent.entanglement_entropy(s0), "qcf_local": qcf_native,
                   "orthodox": ent.classify_orthodox(psi, f).kind},
        "entangling": {"entropy_bits": ent.entanglement_entropy(s1), "qcf_witness": qcf_new,
                       "orthodox": ent.classify_orthodox(psi, new_f).kind, "alignment": new_f.alignment},
    }
    failures = []
    if out["native"]["entropy_bits"] > 1e-9 or abs(qcf_native) > 1e-12:
        failures.append("native factorization does not show a product state")
    if out["entangling"]["entropy_bits"] < 1 - 1e-9:
        failures.append("entangling factorization entropy below 1 bit")
    if abs(qcf_new) <= 0.1:
        failures.append("witness QCF not above 0.1")
    return out, failures


def cmd_ks_check(args, inputs: Inputs) -> tuple[dict, list[str]]:
    st = inputs.state(("projector_family",))
    graph = psa_mod.build_powers_graph(st.value, labels=st.labels)
    contexts = psa_mod.enumerate_maximal_contexts(graph)
    search = psa_mod.binary_valuation_search(graph)
    resolving = [c for c in contexts if c.resolves_identity]
    rho = random_density(graph.dim, seed=args.seed)
    state = psa_mod.psa_from_density(rho, graph)
    residuals = [
        psa_mod.check_sigma_additivity(state, [graph.powers[m].projector for m in c.members if m != graph.identity_index])
        for c in resolving
        if len(c.members) > 1
    ]
    audit = max(residuals, default=0.0)
    out = {
        "powers": len(graph),
        "edges": len(graph.edges),
        "maximal_contexts": len(contexts),
        "identity_resolving_contexts": [[graph.powers[m].label for m in c.members] for c in resolving],
        "verdict": "SAT" if search.satisfiable else "UNSAT",
        "explored": search.explored,
        "witness_true_powers": (
            [graph.powers[i].label for i in search.witness.true_powers()] if search.witness else None
        ),
        "psa_exists": True,
        "sigma_additivity_max_residual": audit,
    }
    return out, ([] if audit < 1e-9 else ["sigma-additivity residual above 1e-9"])


def cmd_ge_check(args, inputs: Inputs) -> tuple[dict, list[str]]:
    st = inputs.state(("pure", "density"))
    f = inputs.factorization(st.dim)
    reductions = {
        "subsystem": ge.SubsystemPair(f),
        "local_observables": ge.ObservableProjection(ge.local_observable_set(f)),
        "full_operator_basis": ge.ObservableProjection(ge.full_operator_set(st.dim)),
    }
    out: dict[str, Any] = {"factorization": [f.d1, f.d2]}
    for name, red in reductions.items():
        try:
            v = ge.is_generalized_unentangled(st.value, red, seed=args.seed)
            entry: dict[str, Any] = {"kind": v.kind, "certificate": v.certificate, "heuristic": v.heuristic}
            if isinstance(red, ge.ObservableProjection) and st.kind == "pure":
                entry["relative_purity"] = ge.relative_purity(st.value, red.observables)
        except (ge.NotPure, ge.UnsupportedMixedRegime) as exc:
            entry = {"kind": None, "unsupported": f"{type(exc).__name__}: {exc}"}
        out[name] = entry
    failures = []
    if st.kind == "pure":
        out["matches_orthodox"] = ge.ge_matches_orthodox(st.value, f)
        if not out["matches_orthodox"]:
            failures.append("subsystem verdict disagrees with orthodox classification")
    return out, failures


def cmd_invariance_verify(args, inputs: Inputs) -> tuple[dict, list[str]]:
    if args.input is not None:
        st = inputs.state(("pure", "density"))
        f = inputs.factorization(st.dim)
        rng = np.random.default_rng(args.seed)
        graph = psa_mod.build_powers_graph([], dim=st.dim)
        state = psa_mod.psa_from_density(_density_of(st), graph)
        residuals = []
        for _ in range(args.trials):
            side = fac.Side.LEFT if rng.integers(2) == 0 else fac.Side.RIGHT
            t = fac.partial_trace_channel(f, side)
            u = fac.unitary_channel(fac.random_unitary(t.out_dim, seed=rng))
            residuals.append(fac.verify_factorization_invariance(state, t, u)[1])
    else:
        residuals = fac.invariance_sweep(args.trials, args.seed)
    passed = sum(r < 1e-10 for r in residuals)
    out = {"trials": args.trials, "passed": passed, "max_residual": max(residuals, default=0.0), "tolerance": 1e-10}
    return out, ([] if passed == args.trials else [f"{args.trials - passed} trials above tolerance"])


def cmd_classify(args, inputs: Inputs) -> tuple[dict, list[str]]:
    st = inputs.state(("pure", "density"))
    f = inputs.factorization(st.dim)
    graph = psa_mod.build_powers_graph([], dim=st.dim)
    report = rel.classify_relation(psa_mod.psa_from_density(_density_of(st), graph), f, _thresholds(args), args.seed)
    orth = ent.classify_orthodox(st.value, f)
    out: dict[str, Any] = {
        "factorization": [f.d1, f.d2],
        "verdict": report.verdict,
        "max_covariance": report.max_covariance,
        "anomaly": report.anomaly,
        "intensive_witness": None,
        "effective_witness": None,
    }
    if report.intensive_witness is not None:
        w = report.intensive_witness
        out["intensive_witness"] = {"covariance": w.covariance, "stage": w.stage, "left": w.left, "right": w.right}
    if report.effective_witness is not None:
        w = report.effective_witness
        out["effective_witness"] = {
            "off_mass": w.off_mass,
            "permutation": w.permutation,
            "supported_outcomes": w.supported_outcomes,
            "exact_search": w.exact_search,
        }
    related = report.verdict is rel.Verdict.QUANTUM_ENTANGLEMENT
    out["orthodox_comparison"] = {
        "orthodox": orth.kind,
        "divergent": related != (orth.kind is ent.Kind.ENTANGLED) and orth.kind is not ent.Kind.INCONCLUSIVE,
    }
    return out, []


def cmd_werner_sweep(args, inputs: Inputs) -> tuple[dict, list[str]]:
    th = ent.werner_thresholds(1e-6)
    f = fac.standard_factorization(2, 2)
    mid = (th["w_ppt"] + th["w_chsh"]) / 2
    rho = ent.werner_state(mid)
    witness = {"w": mid, "negativity": ent.negativity(rho, f), "chsh": ent.chsh_max(rho, f)[0]}
    nonempty = th["w_ppt"] < th["w_chsh"] and witness["negativity"] > 0 and witness["chsh"] <= 2
    out = {"thresholds": th, "interval_witness": witness, "entangled_but_local_interval": nonempty,
           "table": ent.werner_table(21)}
    return out, ([] if nonempty else ["no entangled-but-local interval found"])


COMMANDS: dict[str, tuple[Callable, str]] = {
    "analyze": (cmd_analyze, "orthodox classification, Schmidt data, negativity and CHSH"),
    "refactor-scan": (cmd_refactor_scan, "entangling re-factorization of a product state with QCF witnesses"),
    "ks-check": (cmd_ks_check, "binary valuation search and sigma-additivity audit on a projector family"),
    "ge-check": (cmd_ge_check, "generalized entanglement verdicts for the standard reductions"),
    "invariance-verify": (cmd_invariance_verify, "randomized factorization-invariance sweep"),
    "classify": (cmd_classify, "relational three-way verdict"),
    "werner-sweep": (cmd_werner_sweep, "PPT and CHSH thresholds of the Werner family"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="state, operator or projector-family file")
    common.add_argument("--fact", help="factorization file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--report", choices=("text", "structured"), default="text")
    common.add_argument("--output", help="write the report here (atomically) instead of stdout")
    common.add_argument("--normalize", action="store_true", help="rescale states to unit norm or trace")
    common.add_argument("--timestamp", action="store_true")
    defaults = config.Settings()
    common.add_argument("--tol-herm", type=float, default=defaults.tol_herm)
    common.add_argument("--tol-psd", type=float, default=defaults.tol_psd)
    th = rel.RelationThresholds()
    common.add_argument("--tau-intensive", type=float, default=th.tau_intensive)
    common.add_argument("--tau-effective", type=float, default=th.tau_effective)

    parser = argparse.ArgumentParser(prog="qent", description="Entanglement analysis on finite-dimensional states.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def _render_text(doc: dict) -> str:
    lines = [f"qent {doc['command']}"]
    if "timestamp" in doc:
        lines.append(f"timestamp: {doc['timestamp']}")
    for rec in doc["inputs"]:
        lines.append(f"{rec['role']}: {rec['path']} (sha256 {rec['sha256'][:12]})")

    def walk(obj, indent: int):
        pad = "  " * indent
        if isinstance(obj, dict):
            for k, v in obj.items():
                if isinstance(v, (dict, list)) and v and not _is_flat(v):
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}{k}: {_short(v)}")
        else:
            for item in obj:
                if isinstance(item, (dict, list)) and not _is_flat(item):
                    lines.append(f"{pad}-")
                    walk(item, indent + 1)
                else:
                    lines.append(f"{pad}- {_short(item)}")

    lines.append("results:")
    walk(doc["results"], 1)
    summary = doc["summary"]
    lines.append("PASS" if summary["passed"] else "FAIL: " + "; ".join(summary["failures"]))
    return "\n".join(lines) + "\n"


def _is_flat(v) -> bool:
    if isinstance(v, dict):
        return all(not isinstance(x, (dict, list)) for x in v.values()) and len(json.dumps(v)) < 80
    return all(not isinstance(x, (dict, list)) for x in v) or len(json.dumps(v)) < 80


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return json.dumps(v)


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    handler, _ = COMMANDS[args.command]
    inputs = Inputs(args)
    try:
        with config.override(tol_herm=args.tol_herm, tol_psd=args.tol_psd):
            results, failures = handler(args, inputs)
    except (InputError, OSError) as exc:
        code = type(exc).__name__
        print(json.dumps({"error": {"code": code, "message": str(exc)}}, sort_keys=True), file=stderr)
        return EXIT_INPUT
    except QentError as exc:
        print(json.dumps({"error": {"code": type(exc).__name__, "message": str(exc)}}, sort_keys=True), file=stderr)
        return EXIT_FAIL

    doc = {
        "command": args.command,
        "inputs": inputs.records,
        "configuration": {
            "seed": args.seed,
            "trials": args.trials,
            "normalize": args.normalize,
            "tol_herm": args.tol_herm,
            "tol_psd": args.tol_psd,
            "tau_intensive": args.tau_intensive,
            "tau_effective": args.tau_effective,
        },
        "results": to_jsonable(results),
        "summary": {"passed": not failures, "failures": failures},
    }
    if args.timestamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    validate_report(doc)
    text = dumps_report(doc) if args.report == "structured" else _render_text(doc)
    if args.output:
        write_atomic(args.output, text)
    else:
        stdout.write(text)
    return EXIT_OK if not failures else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
