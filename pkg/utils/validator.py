"""Issue and status helpers shared by validation and verification reports."""

PASSED = 'Passed'
WARNING = 'Warning'
FAILED = 'Failed'


def make_issue(issue_type, description, severity='critical', **details):
    """
    Build one report issue.

    Args:
        issue_type (str): Short machine-readable category
        description (str): Human-readable explanation
        severity (str): 'critical' or 'warning'

    Returns:
        dict: The issue, with any extra numeric details attached
    """
    issue = {'type': issue_type, 'description': description, 'severity': severity}
    issue.update(details)
    return issue


def status_from_issues(issues):
    """Failed on any critical issue, Warning on any warning, Passed otherwise."""
    if any(issue['severity'] == 'critical' for issue in issues):
        return FAILED
    if any(issue['severity'] == 'warning' for issue in issues):
        return WARNING
    return PASSED


def overall_status(categories):
    """
    Combine the statuses of several report categories.

    Args:
        categories (dict): Category name -> dict carrying an 'issues' list

    Returns:
        str: Overall status
    """
    issues = [issue for category in categories.values() for issue in category.get('issues', [])]
    return status_from_issues(issues)


def check(value, limit, issue_type, description, severity='critical'):
    """
    Compare a measured value against a limit and return the issues it raises.

    Returns:
        list: Empty when ``value <= limit``, one issue otherwise
    """
    if value is not None and value <= limit:
        return []
    return [make_issue(issue_type, description, severity, value=value, limit=limit)]
