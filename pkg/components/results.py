"""Rendering of reports as terminal text, deterministic JSON and CSV tables."""
import csv
import json
import os
from dataclasses import replace

import numpy as np

from utils.bogovskii import operator_report
from utils.mollifier import ELL_PUBLISHED, OPERATOR_PUBLISHED, operator_coefficients
from utils.validator import make_issue, status_from_issues

STATUS_ICONS = {'Passed': '[ok]', 'Warning': '[warn]', 'Failed': '[FAIL]'}
FLOAT_FORMAT = '%.17g'
CONSTANT_COLUMNS = ('name', 'computed', 'paper_bound', 'margin')


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def dumps_report(data):
    """Deterministic JSON: sorted keys, fixed indentation, no timestamps."""
    return json.dumps(data, sort_keys=True, indent=2, default=_jsonable) + '\n'


def write_report(path, data):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as out:
        out.write(dumps_report(data))
    return path


def format_category_result(category_name, status):
    """One summary line for a report category."""
    return f'{STATUS_ICONS.get(status, "[?]")} {category_name}: {status}'


def format_category_details(category_results):
    """
    Detail lines for a report category.

    Args:
        category_results (dict): Category with 'status' and 'issues'

    Returns:
        list: Lines of text
    """
    if category_results['status'] == 'Passed':
        return ['    all checks passed']
    issues = category_results['issues']
    if not issues:
        return ['    no specific issues identified']
    lines = []
    for issue in issues:
        label = 'critical' if issue['severity'] == 'critical' else 'warning'
        lines.append(f'    {label} {issue["type"]}: {issue["description"]}')
    return lines


def format_report(report, title='Verification'):
    """
    Terminal summary of a report carrying 'categories' and 'overall_status'.

    Returns:
        str: Multi-line text
    """
    status = report['overall_status']
    headline = {'Passed': 'passed', 'Warning': 'passed with warnings'}.get(status, 'failed')
    lines = [f'{STATUS_ICONS.get(status, "[?]")} {title} {headline}']
    for name, category in report['categories'].items():
        lines.append(format_category_result(name, category['status']))
        if category['status'] != 'Passed':
            lines.extend(format_category_details(category))
    return '\n'.join(lines)


def format_issues(issues, title):
    """Terminal summary of a flat issue list, such as a datum validation report."""
    status = status_from_issues(issues)
    lines = [format_category_result(title, status)]
    if status != 'Passed':
        lines.extend(format_category_details({'status': status, 'issues': issues}))
    return '\n'.join(lines)


def _row(name, computed, paper_bound):
    return {'name': name, 'computed': float(computed), 'paper_bound': float(paper_bound),
            'margin': 1.0 - float(computed) / float(paper_bound)}


def constants_table(table, constants):
    """
    Rows of the constants table and the issues they raise.

    Norm rows fail when the computed value exceeds the published bound. Operator
    constants above the published value but within the value implied by the
    published norm bounds only warn.

    Args:
        table (NormTable): Mollifier norms at radius r
        constants (DuranConstants): Constants assembled from ``table``

    Returns:
        tuple: (rows, issues)
    """
    d = table.dimension
    rows = [_row('ell', table.ell, ELL_PUBLISHED[d])]
    issues = []
    if abs(rows[0]['margin']) > 5e-4:
        issues.append(make_issue('normalization', f'ell = {table.ell:.6g} departs from {ELL_PUBLISHED[d]}',
                                 'warning', value=table.ell))
    for value in table.rows():
        rows.append(_row(value.name, value.computed, value.paper_bound))
        if value.computed > value.paper_bound:
            issues.append(make_issue('norm_bound', f'{value.name} = {value.computed:.6g} exceeds '
                                     f'{value.paper_bound:.6g}', value=value.computed, limit=value.paper_bound))
    for name, computed in constants.values.items():
        rows.append(_row(f'duran_{name}', computed, constants.published[name]))
        issues += _rounding_issues(f'duran_{name}', computed, constants.published[name], constants.consistent[name])
    consistent = operator_coefficients(replace(constants, values=constants.consistent))
    for name, entry in operator_report(constants).items():
        rows.append(_row(name, entry['computed'], entry['paper_bound']))
        issues += _rounding_issues(name, entry['computed'], OPERATOR_PUBLISHED[d][name], consistent[name])
    return rows, issues


def _rounding_issues(name, computed, published, consistent):
    if computed <= published:
        return []
    if computed <= max(consistent, published):
        return [make_issue('published_rounding', f'{name} = {computed:.6g} exceeds the published {published:.6g} '
                           f'but not {consistent:.6g}', 'warning', value=computed, limit=consistent)]
    return [make_issue('constant_bound', f'{name} = {computed:.6g} exceeds {consistent:.6g}',
                       value=computed, limit=consistent)]


def write_constants_csv(stream, rows):
    """Write the constants table with 17 significant digits."""
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(CONSTANT_COLUMNS)
    for row in rows:
        writer.writerow([row['name']] + [FLOAT_FORMAT % row[key] for key in CONSTANT_COLUMNS[1:]])
