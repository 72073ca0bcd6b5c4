import argparse
import logging
import os
import sys
from dataclasses import replace

from components.config import BUDGET_CHOICES, EXPONENT_CHOICES, build_config, load_config_file, parse_model_params
from components.exporters import export_extension
from components.history import render_run_history
from components.results import (constants_table, dumps_report, format_issues, format_report,
                                write_constants_csv, write_report)
from utils.assembly import build_extension, gamma_bound, resolve_budget, verify
from utils.bogovskii import bound_M, operator_report, select_exponent
from utils.boundary_data import MODELS, build_model, load_face_csv, validate
from utils.database import save_run
from utils.errors import (DataParseError, OrderingViolation, QuadratureFailure, ValidationFailed,
                          WrongDimension)
from utils.geometry import alpha_star, region_measures, star_regions
from utils.mollifier import duran_constants, norm_table
from utils.validator import FAILED, overall_status, status_from_issues

logger = logging.getLogger('solext')

DEFAULT_OUT = 'solext_out'
EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


def positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'{text!r} is not a number') from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f'must be positive, got {text}')
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', action='store_true', help='log debug output to stderr')
    common.add_argument('--record', action='store_true', help='store the run in the history database')

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument('--config', help='JSON configuration; flags override its fields')
    run.add_argument('--dim', type=int, choices=(2, 3), dest='dimension')
    run.add_argument('--L', type=float)
    run.add_argument('--a', type=float)
    run.add_argument('--b', type=float)
    run.add_argument('--c', type=float)
    run.add_argument('--model', choices=sorted(MODELS))
    run.add_argument('--model-param', action='append', metavar='KEY=VALUE', help='override a model parameter')
    run.add_argument('--face-data', help='CSV of sampled face data')
    run.add_argument('--budget', choices=BUDGET_CHOICES)
    run.add_argument('--seed', type=int)
    run.add_argument('--out', help='output directory')
    run.add_argument('--bog-exponent', choices=EXPONENT_CHOICES, help='kernel exponent; auto picks it by the oracle')

    parser = argparse.ArgumentParser(prog='solext', description='Solenoidal extensions of inflow-outflow data '
                                     'on a perforated box, with certified Dirichlet-norm bounds.')
    sub = parser.add_subparsers(dest='command', required=True)

    constants = sub.add_parser('constants', parents=[common], help='mollifier norms and operator constants')
    constants.add_argument('--dim', type=int, choices=(2, 3), default=2)
    constants.add_argument('--r', type=positive_float, default=1.0, help='mollifier radius')
    constants.add_argument('--out', help='also write constants.csv to this directory')

    sub.add_parser('bound', parents=[common, run], help='Bogovskii bound M and, with a datum, Gamma')
    sub.add_parser('extend', parents=[common, run], help='build, verify and export the extension')
    sub.add_parser('verify', parents=[common, run], help='build and verify the extension')
    sub.add_parser('models', parents=[common], help='list the shipped boundary data models')

    history = sub.add_parser('history', parents=[common], help='list recorded runs')
    history.add_argument('--filter', dest='filter_command', choices=('constants', 'bound', 'extend', 'verify'))
    history.add_argument('--limit', type=int, default=20)
    return parser


def configure_logging(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s', force=True)


def config_from_args(args):
    file_data = load_config_file(args.config) if args.config else {}
    overrides = {key: getattr(args, key) for key in
                 ('dimension', 'L', 'a', 'b', 'c', 'model', 'face_data', 'budget', 'seed', 'out', 'bog_exponent')}
    cli_params = parse_model_params(args.model_param)
    if cli_params:
        overrides['model_params'] = {**file_data.get('model_params', {}), **cli_params}
    return build_config(file_data, overrides)


def load_datum(config, domain):
    if config.face_data:
        return load_face_csv(config.face_data, domain.dimension, domain.L)
    if config.model:
        return build_model(config.model, domain, config.model_params)
    return None


def require_admissible(h, domain):
    report = validate(h, domain)
    if report.status == FAILED:
        raise ValidationFailed(f'boundary datum {h.name} is not admissible', report)
    if report.issues:
        logger.warning('%s', format_issues(report.issues, f'datum {h.name}'))
    return report


def emit(report, out_path=None):
    text = dumps_report(report)
    sys.stdout.write(text)
    if out_path:
        write_report(out_path, report)


def record(args, config, report, status):
    if args.record and not save_run(args.command, config, report, status):
        logger.warning('run was not recorded')


def cmd_constants(args):
    table = norm_table(args.dim, args.r)
    constants = duran_constants(args.dim, args.r, table)
    rows, issues = constants_table(table, constants)
    write_constants_csv(sys.stdout, rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, 'constants.csv'), 'w', encoding='utf-8', newline='') as out:
            write_constants_csv(out, rows)
    status = status_from_issues(issues)
    if issues:
        logger.warning('%s', format_issues(issues, 'constants'))
    record(args, {'dimension': args.dim, 'r': args.r}, {'rows': rows, 'issues': issues}, status)
    return EXIT_FAILED if status == FAILED else EXIT_OK


def cmd_bound(args):
    config = config_from_args(args)
    domain = config.domain()
    first, _ = star_regions(domain)
    constants = duran_constants(domain.dimension, first.radius)
    bound = bound_M(domain, constants)
    sigma, gamma = region_measures(domain)
    report = {
        'config': config.to_dict(), 'seed': config.seed, 'domain': domain.to_dict(),
        'sigma': sigma, 'gamma': gamma, 'bound': bound.to_dict(), 'M': bound.M,
        'duran': {'radius': constants.radius, 'computed': constants.values, 'published': constants.published,
                  'consistent': constants.consistent},
        'operators': operator_report(constants),
    }
    if domain.dimension == 2:
        report['alpha_star'] = alpha_star(domain)
    h = load_datum(config, domain)
    status = 'Passed'
    if h is not None:
        validation = require_admissible(h, domain)
        report['validation'] = validation.to_dict()
        gamma_report = gamma_bound(h, domain, config.budget, M=bound.M)
        report['Gamma'] = gamma_report.gamma
        report['gamma_report'] = gamma_report.to_dict()
        status = validation.status
    report['overall_status'] = status
    emit(report, os.path.join(config.out, 'bound.json') if config.out else None)
    record(args, config.to_dict(), report, status)
    return EXIT_OK


def kernel_exponent(config, domain, budget):
    """
    The kernel exponent to build with. ``auto`` runs the manufactured-divergence
    comparison on the budget's oracle grid and takes the setting it selects.
    """
    params = budget.get('bogovskii', domain.dimension)
    if config.bog_exponent != 'auto':
        return replace(params, exponent=config.bog_exponent), {'selected': config.bog_exponent, 'source': 'config'}
    oracle = select_exponent(domain, params, resolution=budget.get('oracle_grid', domain.dimension),
                             seed=config.seed)
    return replace(params, exponent=oracle['selected']), {**oracle, 'source': 'oracle'}


def run_extension(config):
    """Validate the datum, build the extension and verify it."""
    domain = config.domain()
    h = load_datum(config, domain)
    if h is None:
        raise DataParseError('a model (--model) or face data (--face-data) is required')
    validation = require_admissible(h, domain)
    budget = resolve_budget(config.budget)
    params, exponent = kernel_exponent(config, domain, budget)
    result = build_extension(h, domain, budget, strict=True, seed=config.seed, params=params)
    verification = verify(result, domain, h, seed=config.seed)
    categories = dict(verification.categories)
    categories['datum'] = {'issues': list(validation.issues), 'status': validation.status}
    report = {
        'config': config.to_dict(), 'seed': config.seed, 'validation': validation.to_dict(),
        'extension': result.to_dict(), 'verification': verification.to_dict(),
        'categories': categories, 'overall_status': overall_status(categories),
        'bog_exponent': params.exponent, 'exponent_oracle': exponent,
    }
    return result, report


def cmd_extend(args):
    config = config_from_args(args)
    out = config.out or DEFAULT_OUT
    result, report = run_extension(config)
    report['files'] = sorted(os.path.basename(p) for p in export_extension(result, out)) + ['report.json']
    emit(report, os.path.join(out, 'report.json'))
    print(format_report(report, 'Extension'), file=sys.stderr)
    record(args, config.to_dict(), report, report['overall_status'])
    return EXIT_FAILED if report['overall_status'] == FAILED else EXIT_OK


def cmd_verify(args):
    config = config_from_args(args)
    _, report = run_extension(config)
    emit(report, os.path.join(config.out, 'report.json') if config.out else None)
    print(format_report(report), file=sys.stderr)
    record(args, config.to_dict(), report, report['overall_status'])
    return EXIT_FAILED if report['overall_status'] == FAILED else EXIT_OK


def cmd_models(args):
    listing = {name: {'dimensions': list(spec.dimensions), 'defaults': spec.defaults,
                      'description': spec.description} for name, spec in MODELS.items()}
    sys.stdout.write(dumps_report(listing))
    return EXIT_OK


def cmd_history(args):
    sys.stdout.write(render_run_history(args.filter_command, args.limit) + '\n')
    return EXIT_OK


COMMANDS = {
    'constants': cmd_constants,
    'bound': cmd_bound,
    'extend': cmd_extend,
    'verify': cmd_verify,
    'models': cmd_models,
    'history': cmd_history,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except ValidationFailed as exc:
        logger.error('%s', exc)
        if exc.report is not None:
            logger.error('%s', format_issues(exc.report.issues, 'datum'))
        return EXIT_FAILED
    except (DataParseError, OrderingViolation, WrongDimension) as exc:
        logger.error('%s', exc)
        return EXIT_USAGE
    except ValueError as exc:
        logger.error('invalid parameter: %s', exc)
        return EXIT_USAGE
    except QuadratureFailure as exc:
        logger.error('numerical failure: %s', exc)
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())
