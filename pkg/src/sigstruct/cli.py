"""
Command-line entry point and JSON file formats.

Subcommands ``dsf``, ``analyze``, ``synth``, ``qi`` and ``simulate`` read a
model file (and, where needed, a structure file), write a JSON report to
``--out`` and print a summary. Exit status: 0 for success, Stabilized or
exists; 2 for a valid negative answer (NotStabilizable, not-exists, not
QI, decay check failed); 1 for errors and Inconclusive runs.

Model file: either ``{"A", "B", "C", "D"}`` (``D`` optional) or the
partitioned ``{"A11", "A12", "A21", "A22", "B1", "B2"}``, plus optional
``"input_names"`` and ``"output_names"``. Structure file:
``{"Qbin", "Pbin"}`` with 0/1 entries and a zero ``Qbin`` diagonal.
Matrices are row-major lists of rows. Rational functions are written as
``{"num": [...], "den": [...]}`` with ascending coefficients, complex
numbers as ``{"re", "im"}``.

Default tolerances can be overridden with the environment variables
``SIGSTRUCT_TOL_RANK`` and ``SIGSTRUCT_TOL_STAB``; command-line flags
take precedence.
"""
import argparse
import csv
import json
import os
import sys

import numpy as np

from .analysis import existence_check, qi_boolean, qi_sampled, transfer_pattern
from .dsf import (BinaryStructure, Dsf, compute_dsf, default_freqs, edge_list,
                  effective_tf_pattern, structure_of)
from .exceptions import ModelFormatError, SigStructError
from .polyrat import Polynomial, RationalFunction
from .statespace import (TOL_RANK, TOL_STAB, PartitionedStateSpace, StateSpace,
                         eigenvalues, frequency_response, pbh_classify, simulate,
                         spectral_abscissa)
from .synth import (INCONCLUSIVE, NOT_STABILIZABLE, STABILIZED, SynthOptions,
                    export_controller, run_procedure)

__all__ = ['main', 'load_model', 'load_structure', 'parse_model', 'parse_structure',
           'rf_to_json', 'rf_from_json', 'dsf_to_json', 'dsf_from_json',
           'structure_to_json', 'report_exit_code', 'dumps', 'ENV_TOL_RANK',
           'ENV_TOL_STAB']

ENV_TOL_RANK = 'SIGSTRUCT_TOL_RANK'
ENV_TOL_STAB = 'SIGSTRUCT_TOL_STAB'

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

_FULL = ('A', 'B', 'C')
_PARTITIONED = ('A11', 'A12', 'A21', 'A22', 'B1', 'B2')


# ---------------------------------------------------------------- encoding

def complex_to_json(z):
    z = complex(z)
    return {'re': float(z.real), 'im': float(z.imag)}


def matrix_to_json(M):
    return np.asarray(M, dtype=float).tolist()


def rf_to_json(f):
    return {'num': [float(c) for c in f.num.coeffs],
            'den': [float(c) for c in f.den.coeffs]}


def rf_from_json(obj, field='rational'):
    if not isinstance(obj, dict) or 'num' not in obj or 'den' not in obj:
        raise ModelFormatError(f"{field}: expected {{'num': [...], 'den': [...]}}", field)
    num = _vector(obj['num'], field + '.num')
    den = _vector(obj['den'], field + '.den')
    if not np.any(den):
        raise ModelFormatError(f"{field}: zero denominator", field)
    return RationalFunction(Polynomial(num), Polynomial(den))


def dsf_to_json(dsf):
    return {'Q': [[rf_to_json(f) for f in row] for row in dsf.Q],
            'P': [[rf_to_json(f) for f in row] for row in dsf.P]}


def dsf_from_json(obj):
    try:
        Q = [[rf_from_json(f, f'Q[{i}][{j}]') for j, f in enumerate(row)]
             for i, row in enumerate(obj['Q'])]
        P = [[rf_from_json(f, f'P[{i}][{j}]') for j, f in enumerate(row)]
             for i, row in enumerate(obj['P'])]
    except KeyError as e:
        raise ModelFormatError(f"missing field {e.args[0]!r}", e.args[0]) from None
    return Dsf(Q, P)


def structure_to_json(bs):
    return {'Qbin': bs.Qbin.astype(int).tolist(), 'Pbin': bs.Pbin.astype(int).tolist()}


def statespace_to_json(sys):
    return {'A': matrix_to_json(sys.A), 'B': matrix_to_json(sys.B),
            'C': matrix_to_json(sys.C), 'D': matrix_to_json(sys.D)}


def dumps(report):
    """Deterministic JSON text of a report."""
    return json.dumps(report, indent=2, allow_nan=False) + '\n'


# ---------------------------------------------------------------- decoding

def _vector(x, field):
    try:
        v = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise ModelFormatError(f"{field}: expected a list of numbers", field) from None
    if v.ndim != 1:
        raise ModelFormatError(f"{field}: expected a flat list of numbers", field)
    if not np.all(np.isfinite(v)):
        raise ModelFormatError(f"{field}: entries must be finite", field)
    return v


def _matrix(obj, key, rows=None, cols=None):
    if key not in obj:
        raise ModelFormatError(f"missing field {key!r}", key)
    x = obj[key]
    try:
        M = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise ModelFormatError(f"{key}: expected a row-major matrix of numbers", key) from None
    if M.ndim == 1 and M.size == 0:
        M = M.reshape(rows or 0, cols or 0)
    if M.ndim != 2:
        raise ModelFormatError(f"{key}: expected a list of rows", key)
    if not np.all(np.isfinite(M)):
        raise ModelFormatError(f"{key}: entries must be finite", key)
    if rows is not None and M.shape[0] != rows:
        raise ModelFormatError(f"{key}: expected {rows} rows, got {M.shape[0]}", key)
    if cols is not None and M.shape[1] != cols:
        raise ModelFormatError(f"{key}: expected {cols} columns, got {M.shape[1]}", key)
    return M


def _names(obj, key, count, prefix):
    names = obj.get(key)
    if names is None:
        return [f'{prefix}{k + 1}' for k in range(count)]
    if not isinstance(names, list) or len(names) != count or \
            not all(isinstance(s, str) for s in names):
        raise ModelFormatError(f"{key}: expected {count} strings", key)
    return names


def parse_model(obj):
    """Build a model from a decoded model file.

    Returns
    -------
    (StateSpace, PartitionedStateSpace or None, dict)
        The plant, its partitioned form when the outputs select states
        (``None`` otherwise), and the input/output names.
    """
    if not isinstance(obj, dict):
        raise ModelFormatError("model file must hold a JSON object")
    full = [k for k in _FULL + ('D',) if k in obj]
    part = [k for k in _PARTITIONED if k in obj]
    if full and part:
        raise ModelFormatError(f"model mixes {full[0]!r} with partitioned {part[0]!r}",
                               part[0])
    if part:
        A11 = _matrix(obj, 'A11')
        q = A11.shape[0]
        if A11.shape[1] != q:
            raise ModelFormatError("A11: must be square", 'A11')
        A22 = _matrix(obj, 'A22')
        h = A22.shape[0]
        if A22.shape[1] != h:
            raise ModelFormatError("A22: must be square", 'A22')
        A12 = _matrix(obj, 'A12', q, h)
        A21 = _matrix(obj, 'A21', h, q)
        B1 = _matrix(obj, 'B1', q)
        B2 = _matrix(obj, 'B2', h, B1.shape[1])
        psys = PartitionedStateSpace(A11, A12, A21, A22, B1, B2)
        plant = psys.to_statespace()
    else:
        A = _matrix(obj, 'A')
        n = A.shape[0]
        if A.shape[1] != n:
            raise ModelFormatError("A: must be square", 'A')
        B = _matrix(obj, 'B', n)
        C = _matrix(obj, 'C', None, n)
        D = _matrix(obj, 'D', C.shape[0], B.shape[1]) if 'D' in obj else None
        plant = StateSpace(A, B, C, D)
        try:
            psys = PartitionedStateSpace.from_statespace(plant)
        except SigStructError:
            psys = None
    names = {'inputs': _names(obj, 'input_names', plant.ninputs, 'u'),
             'outputs': _names(obj, 'output_names', plant.noutputs, 'y')}
    return plant, psys, names


def parse_structure(obj, nodes=None, ninputs=None):
    """Build a ``BinaryStructure``; optional sizes are checked against the plant."""
    if not isinstance(obj, dict):
        raise ModelFormatError("structure file must hold a JSON object")
    Q = _matrix(obj, 'Qbin', nodes, nodes)
    P = _matrix(obj, 'Pbin', Q.shape[0], ninputs)
    for key, M in (('Qbin', Q), ('Pbin', P)):
        if not np.all((M == 0) | (M == 1)):
            raise ModelFormatError(f"{key}: entries must be 0 or 1", key)
    if Q.shape[0] != Q.shape[1]:
        raise ModelFormatError("Qbin: must be square", 'Qbin')
    if np.any(np.diag(Q)):
        raise ModelFormatError("Qbin: diagonal must be zero", 'Qbin')
    return BinaryStructure(Q.astype(bool), P.astype(bool))


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ModelFormatError(f"cannot read {what} file {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{what} file {path} is not valid JSON: {e}") from None


def load_model(path):
    return parse_model(_read_json(path, 'model'))


def load_structure(path, nodes=None, ninputs=None):
    return parse_structure(_read_json(path, 'structure'), nodes, ninputs)


# ---------------------------------------------------------------- commands

def _env_float(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == '':
        return default
    try:
        val = float(raw)
    except ValueError:
        raise ModelFormatError(f"{name}: not a number: {raw!r}", name) from None
    if not (val > 0 and np.isfinite(val)):
        raise ModelFormatError(f"{name}: must be positive", name)
    return val


def _tolerances(args):
    tol_rank = args.tol_rank if args.tol_rank is not None else _env_float(ENV_TOL_RANK, TOL_RANK)
    tol_stab = args.tol_stab if args.tol_stab is not None else _env_float(ENV_TOL_STAB, TOL_STAB)
    return tol_rank, tol_stab


def _options(args):
    tol_rank, tol_stab = _tolerances(args)
    kw = dict(tol_rank=tol_rank, tol_stab=tol_stab, seed=args.seed)
    if args.pole_radius is not None:
        kw['pole_radius'] = args.pole_radius
    if args.max_retries is not None:
        kw['max_retries'] = args.max_retries
    return SynthOptions(**kw)


def _freqs(args):
    return default_freqs(args.freq_samples)


def _need_structure(args, plant):
    if args.structure is None:
        raise ModelFormatError("--structure is required for this command", 'structure')
    return load_structure(args.structure, plant.ninputs, plant.noutputs)


def cmd_dsf(args):
    plant, psys, names = load_model(args.model)
    if psys is None:
        raise ModelFormatError("C: dsf needs outputs that select states "
                               "(rows of an identity) or a partitioned model", 'C')
    dsf, _ = compute_dsf(psys)
    bs = structure_of(dsf)
    err = 0.0
    for s in 1j * np.logspace(-2, 2, args.freq_samples):
        G = frequency_response(plant, s)
        err = max(err, float(np.max(np.abs(dsf.transfer_at(s) - G)) /
                             max(1.0, float(np.max(np.abs(G))))))
    report = {'command': 'dsf', 'q': dsf.q, 'm': dsf.m,
              'hidden_states': psys.h,
              'dsf': dsf_to_json(dsf),
              'structure': structure_to_json(bs),
              'edges': [list(e) for e in edge_list(bs, names['inputs'], names['outputs'])],
              'reconstruction_error': err}
    lines = [f"DSF with {dsf.q} measured and {psys.h} hidden states, {dsf.m} inputs"]
    for tag, M in (('Q', dsf.Q), ('P', dsf.P)):
        for i, row in enumerate(M):
            for j, f in enumerate(row):
                if not f.is_zero():
                    lines.append(f"  {tag}[{i + 1},{j + 1}] = {f}")
    lines.append(f"reconstruction error {err:.3g}")
    return EXIT_OK, report, lines


def _modes_json(modes):
    return [m.as_dict() for m in modes]


def cmd_analyze(args):
    plant, _, names = load_model(args.model)
    bs = _need_structure(args, plant)
    tol_rank, tol_stab = _tolerances(args)
    verdict = existence_check(plant, bs, tol_rank, tol_stab)
    report = {'command': 'analyze', 'exists': bool(verdict.exists),
              'structure': structure_to_json(bs),
              'verdict': verdict.as_dict(),
              'modes': _modes_json(pbh_classify(plant, tol_rank, tol_stab))}
    lines = [f"structured stabilizing controller {'exists' if verdict.exists else 'does not exist'}"]
    lines += _certificate_lines(verdict, names)
    return (EXIT_OK if verdict.exists else EXIT_NEGATIVE), report, lines


def _certificate_lines(verdict, names):
    lines = []
    for m in verdict.fixed_unstable_modes:
        ins = [n for n, b in zip(names['inputs'], m.controllable_from) if b]
        outs = [n for n, b in zip(names['outputs'], m.observable_at) if b]
        lines.append(f"  fixed mode {m.eigenvalue:.6g}: controllable from "
                     f"{', '.join(ins) or 'none'}; observable at {', '.join(outs) or 'none'}")
    return lines


def _synth_report(plant, bs, opts, names):
    rep = run_procedure(plant, bs, opts)
    cl = rep.closed_loop
    report = {'command': 'synth', 'verdict': rep.verdict,
              'structure': structure_to_json(bs),
              'options': opts.as_dict(),
              'unstable_counts': rep.unstable_counts(),
              'steps': [st.as_dict() for st in rep.per_step],
              'log': [st.log_line() for st in rep.per_step],
              'closed_loop_order': cl.n,
              'closed_loop_eigenvalues': [complex_to_json(z) for z in eigenvalues(cl.A)],
              'spectral_abscissa': float(spectral_abscissa(cl.A)) if cl.n else None,
              'certificate': None if rep.certificate is None else rep.certificate.as_dict(),
              'diagnostics': list(rep.diagnostics),
              'controller': None}
    if rep.verdict == STABILIZED:
        K, real = export_controller(rep)
        report['controller'] = {'dsf': dsf_to_json(K), 'realization': statespace_to_json(real)}
    lines = [f"verdict: {rep.verdict}",
             f"unstable counts per step: {rep.unstable_counts()}"]
    lines += ['  ' + st.log_line() for st in rep.per_step]
    if rep.certificate is not None:
        lines += _certificate_lines(rep.certificate, names)
    lines += ['  note: ' + d for d in rep.diagnostics]
    return rep, report, lines


_VERDICT_EXIT = {STABILIZED: EXIT_OK, NOT_STABILIZABLE: EXIT_NEGATIVE, INCONCLUSIVE: EXIT_ERROR}


def cmd_synth(args):
    plant, _, names = load_model(args.model)
    bs = _need_structure(args, plant)
    _, report, lines = _synth_report(plant, bs, _options(args), names)
    return _VERDICT_EXIT[report['verdict']], report, lines


def cmd_qi(args):
    plant, _, _ = load_model(args.model)
    bs = _need_structure(args, plant)
    freqs = _freqs(args)
    Kbin = effective_tf_pattern(bs)
    Gbin = transfer_pattern(plant, freqs)
    ok_s, cex = qi_sampled(bs, plant, freqs=freqs, seed=args.seed)
    report = {'command': 'qi', 'structure': structure_to_json(bs),
              'plant_pattern': Gbin.astype(int).tolist(),
              'qi_sampled': bool(ok_s),
              'counterexample': None if cex is None else cex.as_dict(),
              'effective_pattern': Kbin.astype(int).tolist(),
              'qi_boolean': bool(qi_boolean(Kbin, Gbin))}
    lines = [f"quadratically invariant (sampled): {ok_s}"]
    lines.append(f"quadratically invariant (sparsity): {report['qi_boolean']}")
    if cex is not None:
        lines.append(f"  counterexample at s = {cex.frequency:.4g}, residual {cex.residual:.3g}")
    return (EXIT_OK if ok_s else EXIT_NEGATIVE), report, lines


def cmd_simulate(args):
    plant, _, names = load_model(args.model)
    bs = _need_structure(args, plant)
    rep, report, lines = _synth_report(plant, bs, _options(args), names)
    report['command'] = 'simulate'
    if rep.verdict != STABILIZED:
        lines.append("nothing to simulate")
        return _VERDICT_EXIT[rep.verdict], report, lines
    cl = rep.closed_loop
    horizon = 20.0 / abs(spectral_abscissa(cl.A))
    rng = np.random.default_rng(args.seed)
    ratios, traj = [], None
    for k in range(args.trials):
        x0 = rng.normal(size=cl.n)
        t, X = simulate(cl, x0, horizon)
        ratios.append(float(np.linalg.norm(X[-1]) / np.linalg.norm(x0)))
        if k == 0:
            traj = (t, X)
    ok = max(ratios) <= args.decay
    report['simulation'] = {'horizon': horizon, 'decay_bound': args.decay,
                            'ratios': ratios, 'passed': bool(ok)}
    if args.trajectory:
        with open(args.trajectory, 'w', newline='') as fh:
            w = csv.writer(fh)
            w.writerow(['t'] + [f'x{i + 1}' for i in range(cl.n)])
            for ti, xi in zip(*traj):
                w.writerow([repr(float(ti))] + [repr(float(v)) for v in xi])
    lines.append(f"decay over T = {horizon:.4g}: worst ratio {max(ratios):.3g} "
                 f"({'pass' if ok else 'FAIL'} at {args.decay:g})")
    return (EXIT_OK if ok else EXIT_NEGATIVE), report, lines


def report_exit_code(report):
    """Exit status implied by a parsed report."""
    cmd = report.get('command')
    if cmd in ('synth',):
        return _VERDICT_EXIT[report['verdict']]
    if cmd == 'simulate':
        if report['verdict'] != STABILIZED:
            return _VERDICT_EXIT[report['verdict']]
        return EXIT_OK if report['simulation']['passed'] else EXIT_NEGATIVE
    if cmd == 'analyze':
        return EXIT_OK if report['exists'] else EXIT_NEGATIVE
    if cmd == 'qi':
        return EXIT_OK if report['qi_sampled'] else EXIT_NEGATIVE
    if cmd == 'dsf':
        return EXIT_OK
    raise ModelFormatError(f"unknown report command {cmd!r}", 'command')


_COMMANDS = {'dsf': cmd_dsf, 'analyze': cmd_analyze, 'synth': cmd_synth,
             'qi': cmd_qi, 'simulate': cmd_simulate}


def build_parser():
    ap = argparse.ArgumentParser(prog='sigstruct',
                                 description="Structured controller synthesis tools.")
    sub = ap.add_subparsers(dest='command', required=True)
    helps = {'dsf': "compute the dynamical structure function of a model",
             'analyze': "decide whether a structure admits a stabilizing controller",
             'synth': "design a controller link by link",
             'qi': "test quadratic invariance of a structure",
             'simulate': "synthesize, then check closed-loop decay by simulation"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument('--model', required=True)
        p.add_argument('--structure')
        p.add_argument('--out', help="write the JSON report here")
        p.add_argument('--tol-rank', type=float)
        p.add_argument('--tol-stab', type=float)
        p.add_argument('--seed', type=int, default=0)
        p.add_argument('--pole-radius', type=float)
        p.add_argument('--max-retries', type=int)
        p.add_argument('--freq-samples', type=int, default=8)
        p.add_argument('--format', choices=('json', 'text'), default='text',
                       help="what to print on standard output")
        if name == 'simulate':
            p.add_argument('--trajectory', help="CSV file for the first trajectory")
            p.add_argument('--trials', type=int, default=10)
            p.add_argument('--decay', type=float, default=1e-3)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code, report, lines = _COMMANDS[args.command](args)
    except (SigStructError, ValueError) as e:
        field = getattr(e, 'field', None)
        prefix = f"error in {field}: " if field and field not in str(e) else "error: "
        print(prefix + str(e), file=sys.stderr)
        return EXIT_ERROR
    text = dumps(report)
    if args.out:
        with open(args.out, 'w') as fh:
            fh.write(text)
    if args.format == 'json':
        sys.stdout.write(text)
    else:
        print('\n'.join(lines))
    return code


if __name__ == '__main__':
    sys.exit(main())
