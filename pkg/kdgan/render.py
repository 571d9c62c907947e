#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Jinja rendering of the run reports
"""
import math

import pandas as pd
from jinja2 import Environment, PackageLoader, StrictUndefined

#: :class:`jinja2.Environment` of the package templates
JINJA_ENV = Environment(loader=PackageLoader("kdgan"), undefined=StrictUndefined, trim_blocks=True)


def render(template, params):
    """Render a template string or object

    Undefined parameters raise :class:`jinja2.UndefinedError`.

    Parameters
    ----------
    template: str, jinja2.Template
    params: dict

    Return
    ------
    str
    """
    if isinstance(template, str):
        template = JINJA_ENV.from_string(template)
    return template.render(params)


def render_template(name, params):
    """Render a package template like :file:`summary.md`"""
    return render(JINJA_ENV.get_template(name), params)


def filter_fmt(value, spec=".4g"):
    """Format a number, leaving other values untouched

    Example
    -------
    >>> filter_fmt(3.14159, ".3f")
    '3.142'
    >>> filter_fmt(None)
    'n/a'
    """
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return format(value, spec)
    return str(value)


def filter_markdown_table(records, tablefmt="github", index=False):
    """Convert a list of dicts or a :class:`pandas.DataFrame` to a markdown table"""
    df = records if isinstance(records, pd.DataFrame) else pd.DataFrame(records)
    if df.empty:
        return "*empty*"
    return df.to_markdown(tablefmt=tablefmt, index=index, floatfmt=".4g")


#: Default kdgan jinja filters
JINJA_FILTERS = dict(fmt=filter_fmt, markdown_table=filter_markdown_table)

JINJA_ENV.filters.update(JINJA_FILTERS)
