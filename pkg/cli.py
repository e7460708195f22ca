import argparse
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence
from common import InvalidOperation, RunConfig, log, make_state, parse_shape, run_config
from tensorank.common import (
    DEFAULT_PRIME, BudgetExceeded, CertificateError, MalformedTensorFile, TensorError,
    frobenius_norm, load_tensor, normalize, set_quiet, tensor_to_json,
)
from tensorank.certifiers import rank_report
from tensorank.certifiers.common import report_to_json, term_to_json
from tensorank.combinatorics import bound_chain, exact_domination_number, greedy_3separated, greedy_dominating, verify_3separated, verify_dominating
from tensorank.generic import generic_rank, known_generic_rank, known_tables, orthogonal_basis_table, qunit_formulas, qunit_rank_entries
from tensorank.norms import entanglement_measures, nuclear_norm, nuclear_rank_estimate, spectral_norm
from tensorank.pencil import classify_222, rank_mxnx2
from tensorank.symmetric import ah_generic_symmetric_rank, symmetric_generic_rank
from visualizations.print_as_tsv import records_as_tsv, vis_print_as_tsv
from visualizations.print_json import vis_print_json
from visualizations.print_readable import vis_print_readable


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_MALFORMED = 3
EXIT_BUDGET = 4


def emit(config: RunConfig, data: Any) -> None:
    if config.output_format == 'pretty':
        vis_print_readable(data)
    elif config.output_format == 'tsv' and isinstance(data, dict):
        vis_print_as_tsv(['key', 'value'], [[k, data[k]] for k in sorted(data)])
    else:
        vis_print_json(data)


def _fraction(x: Fraction) -> str:
    return str(x)


def operation_make(args: argparse.Namespace, config: RunConfig) -> None:
    T = make_state(args.state, args.seed, args.normalize)
    log(f'Built {args.state}: shape {T.shape}, norm {frobenius_norm(T):.6g}')
    emit(config, tensor_to_json(T))


def operation_rank(args: argparse.Namespace, config: RunConfig) -> None:
    T = load_tensor(args.input)
    max_denominator = args.denominator if args.exact else None
    report = rank_report(
        T,
        r_cap=args.cap,
        max_denominator=max_denominator,
        fit_tol=config.tol or 1e-8,
        starts=config.starts,
        seed=config.seed,
        threads=config.threads,
        run_als=not args.no_als,
        verify_certificates=args.verify,
    )
    emit(config, report_to_json(report))


def operation_genrank(args: argparse.Namespace, config: RunConfig) -> None:
    if args.symmetric is not None:
        d, n = args.symmetric
        ah = ah_generic_symmetric_rank(d, n)
        computed = symmetric_generic_rank(d, n, config.seed, args.prime)
        emit(config, {'d': d, 'n': n, 'r_s_gen': computed, 'alexander_hirschowitz': ah.value, 'flag': ah.flag})
        return
    result = generic_rank(args.shape, config.trials, config.seed, args.prime, args.full, config.threads)
    data: Dict[str, Any] = {
        'shape': list(result.shape),
        'r0': result.r0,
        'r_gen': result.r_gen,
        'jacobian_dims': list(result.jacobian_dims),
        'd_sequence': [list(rd) for rd in result.d_sequence],
        'known': known_generic_rank(args.shape),
    }
    if len(set(args.shape)) == 1 and args.shape[0] >= 2 and len(args.shape) >= 2:
        q = qunit_formulas(args.shape[0], len(args.shape))
        data['qunit'] = {'theta': _fraction(q.theta), 'floor': q.floor, 'delta': q.delta, 'value': q.value, 'exact': q.exact}
    emit(config, data)


def _structure_json(rank: int, analysis: Any) -> Dict[str, Any]:
    structure = analysis.structure
    return {
        'rank': rank,
        'certificate': analysis.certificate,
        'witness': list(analysis.witness) if analysis.witness is not None else None,
        'structure': {
            'column_minimal_indices': list(structure.column_minimal_indices),
            'row_minimal_indices': list(structure.row_minimal_indices),
            'regular_core_dim': structure.regular_core_dim,
            'invariant_polynomials': [str(p.as_expr()) for p in structure.invariant_polynomials],
        },
    }


def operation_pencil(args: argparse.Namespace, config: RunConfig) -> None:
    T = load_tensor(args.input)
    rank, analysis = rank_mxnx2(T, args.denominator)
    data = _structure_json(rank, analysis)
    if T.shape == (2, 2, 2) and T.exact:
        data['orbit'] = classify_222(T).orbit_label
    emit(config, data)


def operation_norms(args: argparse.Namespace, config: RunConfig) -> None:
    T = load_tensor(args.input)
    selected = {name for name in ('spectral', 'nuclear', 'eta') if getattr(args, name)}
    selected = selected or {'spectral', 'nuclear', 'eta'}
    data: Dict[str, Any] = {'frobenius': frobenius_norm(T)}
    if data['frobenius'] > 0 and abs(data['frobenius'] - 1) > 1e-10:
        log('Warning: tensor is not normalized, normalizing before computing norms')
        T = normalize(T)
    if 'spectral' in selected:
        spectral = spectral_norm(T, starts=max(config.starts, 1), seed=config.seed, threads=config.threads)
        data['spectral'] = {
            'value': spectral.value,
            'maximizer': term_to_json(spectral.maximizer),
            'starts_converged': spectral.starts_converged,
            'starts': spectral.starts,
            'accepted': spectral.accepted,
        }
    if 'nuclear' in selected:
        nuclear = nuclear_norm(T, tol=config.tol or 1e-6, starts=config.starts, seed=config.seed, threads=config.threads)
        data['nuclear'] = {
            'primal': nuclear.primal_value,
            'dual': nuclear.dual_value,
            'gap': nuclear.gap,
            'verified': nuclear.verified,
            'nuclear_rank': nuclear_rank_estimate(nuclear).rank,
            'decomposition': [term_to_json(t) for t in nuclear.decomposition.terms],
            'witness': tensor_to_json(nuclear.dual_witness),
        }
    if 'eta' in selected:
        measures = entanglement_measures(T, starts=max(config.starts, 1), seed=config.seed)
        data['measures'] = {
            'eta': measures.eta,
            'eta_upper': measures.eta_upper,
            'geometric_measure': measures.geometric_measure,
            'schmidt_measure': measures.schmidt_measure,
        }
    emit(config, data)


def operation_domset(args: argparse.Namespace, config: RunConfig) -> None:
    shape = args.shape
    dominating = greedy_dominating(shape)
    separated = greedy_3separated(shape)
    chain = bound_chain(shape)
    data: Dict[str, Any] = {
        'shape': list(shape),
        'dominating': {'size': len(dominating), 'points': [list(p) for p in dominating.points],
                       'verified': verify_dominating(shape, dominating)},
        'separated': {'size': len(separated), 'points': [list(p) for p in separated.points],
                      'verified': verify_3separated(shape, separated)},
        'chain': {
            'r0': chain.r0,
            'fractional': _fraction(chain.fractional),
            'packing': chain.packing,
            'covering': chain.covering,
            'r_gen_known': chain.r_gen_known,
            'perfect_code': chain.perfect_code,
        },
    }
    if args.exact:
        gamma, witness = exact_domination_number(shape)
        data['exact_gamma'] = {'gamma': gamma, 'points': [list(p) for p in witness.points]}
    emit(config, data)


def _table_records(name: str) -> List[Dict[str, Any]]:
    tables = known_tables()
    if name == 'qunit':
        return [entry._asdict() for entry in qunit_rank_entries()]
    if name == '3x3p':
        return [
            {'p': p, 'r_gen': gen, 'r_max': '/'.join(map(str, rmax))}
            for p, (gen, rmax) in enumerate(zip(tables['generic_rank_3x3p'], tables['max_rank_3x3p']), start=1)
        ]
    if name == 'cubic':
        return [dict(zip(tables['cubic']['columns'], row)) for row in tables['cubic']['entries']]
    if name == 'orthogonal':
        return orthogonal_basis_table()
    if name == 'symmetric':
        return [{'d': d, 'n': n, 'r_s_max': v} for d, n, v in tables['max_symmetric_ranks']['entries']]
    raise InvalidOperation(f'Unknown table {name!r}')


def operation_tables(args: argparse.Namespace, config: RunConfig) -> None:
    records = _table_records(args.table)
    if config.output_format == 'tsv':
        records_as_tsv(records)
    else:
        emit(config, {args.table: records})


OPERATIONS = {
    'make': operation_make,
    'rank': operation_rank,
    'genrank': operation_genrank,
    'pencil': operation_pencil,
    'norms': operation_norms,
    'domset': operation_domset,
    'tables': operation_tables,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    def parse_pair(s: str) -> Sequence[int]:
        """Parse integer pairs like 3,5"""
        parts = s.split(',')
        if len(parts) != 2:
            raise ValueError('Not a valid pair')
        return (int(parts[0]), int(parts[1]))


    def add_common_options(parser: argparse.ArgumentParser, default_format: str = 'json') -> None:
        parser.add_argument('--seed', type=int, default=0, help='Seed for every random choice (default 0)')
        parser.add_argument('--format', choices=['json', 'pretty', 'tsv'], default=default_format, help=f'Output format (default {default_format})')


    def add_input(parser: argparse.ArgumentParser) -> None:
        parser.add_argument('--in', dest='input', default='-', help='Tensor JSON file, "-" for stdin (default)')


    parser = argparse.ArgumentParser(description='Compute, bound and certify ranks and norms of small tensors')
    parser.add_argument('--quiet', action='store_true', help='Silence progress messages on stderr')
    subparsers = parser.add_subparsers(dest='command', required=True, help='Operation')

    parse_make = subparsers.add_parser('make', help='Build a named state as tensor JSON')
    parse_make.add_argument('--state', required=True, help='State spec: w:d, ghz:n,d, identity:k,d, wkron2, wsquare, random:shape, rational:shape, poly:file, border:d,t')
    parse_make.add_argument('--normalize', action='store_true', help='Scale to unit Frobenius norm')
    add_common_options(parse_make)

    parse_rank = subparsers.add_parser('rank', help='Rank report with certificates')
    add_input(parse_rank)
    parse_rank.add_argument('--exact', action='store_true', help='Rationalize numeric input so exact certifiers apply')
    parse_rank.add_argument('--denominator', type=int, default=10**6, help='Denominator bound used with --exact')
    parse_rank.add_argument('--cap', type=int, default=None, help='Largest rank tried by ALS')
    parse_rank.add_argument('--starts', type=int, default=16, help='ALS starts per rank')
    parse_rank.add_argument('--tol', type=float, default=None, help='ALS relative fit tolerance (default 1e-8)')
    parse_rank.add_argument('--verify', action='store_true', help='Re-verify every certificate before printing')
    parse_rank.add_argument('--no-als', action='store_true', help='Skip the ALS upper bound search')
    add_common_options(parse_rank)

    parse_genrank = subparsers.add_parser('genrank', help='Generic rank by Terracini probes')
    group = parse_genrank.add_mutually_exclusive_group(required=True)
    group.add_argument('--shape', type=parse_shape, help='Shape like 3,3,3')
    group.add_argument('--symmetric', type=parse_pair, help='Symmetric generic rank for d,n')
    parse_genrank.add_argument('--trials', type=int, default=3, help='Random points per candidate rank')
    parse_genrank.add_argument('--prime', type=int, default=DEFAULT_PRIME, help='Field prime for exact probes')
    parse_genrank.add_argument('--full', action='store_true', help='Probe every r from 1, not from r0')
    add_common_options(parse_genrank)

    parse_pencil = subparsers.add_parser('pencil', help='Kronecker structure and exact rank of an m x n x 2 tensor')
    add_input(parse_pencil)
    parse_pencil.add_argument('--denominator', type=int, default=None, help='Rationalize numeric input with this denominator bound')
    add_common_options(parse_pencil)

    parse_norms = subparsers.add_parser('norms', help='Spectral and nuclear norms, entanglement measures')
    add_input(parse_norms)
    parse_norms.add_argument('--spectral', action='store_true', help='Spectral norm')
    parse_norms.add_argument('--nuclear', action='store_true', help='Nuclear norm with dual certificate')
    parse_norms.add_argument('--eta', action='store_true', help='Entanglement measures')
    parse_norms.add_argument('--starts', type=int, default=16, help='Multi-start count')
    parse_norms.add_argument('--tol', type=float, default=None, help='Nuclear duality gap tolerance (default 1e-6)')
    add_common_options(parse_norms)

    parse_domset = subparsers.add_parser('domset', help='Covering and packing bounds on generic rank')
    parse_domset.add_argument('--shape', type=parse_shape, required=True, help='Shape like 3,3,3')
    parse_domset.add_argument('--exact', action='store_true', help='Exact domination number (at most 32 vertices)')
    add_common_options(parse_domset)

    parse_tables = subparsers.add_parser('tables', help='Dump embedded known values')
    parse_tables.add_argument('--table', choices=['qunit', '3x3p', 'cubic', 'orthogonal', 'symmetric'], default='qunit')
    add_common_options(parse_tables, default_format='tsv')

    args = parser.parse_args(argv)
    set_quiet(args.quiet)
    try:
        config = run_config(args)
        OPERATIONS[args.command](args, config)
    except MalformedTensorFile as err:
        log(f'Malformed tensor file: {err}')
        return EXIT_MALFORMED
    except BudgetExceeded as err:
        log(f'Budget exceeded: {err}')
        return EXIT_BUDGET
    except (InvalidOperation, TensorError, CertificateError) as err:
        log(err)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
