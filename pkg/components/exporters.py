"""Legacy ASCII VTK and CSV output of sampled fields."""
import csv
import logging
import os

import numpy as np

from utils.numerics import make_grid

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _fmt(values):
    return ' '.join(FLOAT_FORMAT % v for v in values)


def _vtk_order(values, shape):
    """Reorder C-ordered node values so that x varies fastest."""
    d = len(shape)
    arr = np.asarray(values, dtype=float)
    tail = arr.shape[1:]
    arr = arr.reshape(tuple(shape) + tail)
    axes = tuple(reversed(range(d))) + tuple(range(d, arr.ndim))
    return np.transpose(arr, axes).reshape((-1,) + tail)


def _pad3(values):
    """Pad 2d points or vectors with a zero third component."""
    values = np.atleast_2d(values)
    if values.shape[1] == 3:
        return values
    return np.hstack([values, np.zeros((values.shape[0], 3 - values.shape[1]))])


def _dims3(shape):
    return tuple(shape) + (1,) * (3 - len(shape))


def write_vtk_scalar(path, grid, values, name='phi', title='solext scalar field'):
    """
    Write a scalar field on a node-centred grid as STRUCTURED_POINTS.

    Args:
        path (str): Output file
        grid (Grid): Grid the values live on, C order
        values (array-like): One value per grid node
    """
    nx, ny, nz = _dims3(grid.shape)
    origin = list(grid.bounds[:, 0]) + [0.0] * (3 - len(grid.shape))
    spacing = list(grid.spacing) + [1.0] * (3 - len(grid.shape))
    ordered = _vtk_order(values, grid.shape)
    with open(path, 'w', encoding='utf-8') as out:
        out.write('# vtk DataFile Version 3.0\n')
        out.write(f'{title}\n')
        out.write('ASCII\n')
        out.write('DATASET STRUCTURED_POINTS\n')
        out.write(f'DIMENSIONS {nx} {ny} {nz}\n')
        out.write(f'ORIGIN {_fmt(origin)}\n')
        out.write(f'SPACING {_fmt(spacing)}\n')
        out.write(f'POINT_DATA {nx * ny * nz}\n')
        out.write(f'SCALARS {name} double\n')
        out.write('LOOKUP_TABLE default\n')
        for value in ordered:
            out.write(FLOAT_FORMAT % value + '\n')
    logger.debug('wrote %s', path)


def write_vtk_vectors(path, grid, fields, title='solext vector fields'):
    """
    Write vector fields on a grid as STRUCTURED_GRID with one VECTORS block each.

    2d vectors are padded with a zero third component.

    Args:
        path (str): Output file
        grid (Grid): Grid, C order
        fields (dict): Name -> (n, d) values on the grid nodes
    """
    nx, ny, nz = _dims3(grid.shape)
    points = _pad3(_vtk_order(grid.nodes, grid.shape))
    with open(path, 'w', encoding='utf-8') as out:
        out.write('# vtk DataFile Version 3.0\n')
        out.write(f'{title}\n')
        out.write('ASCII\n')
        out.write('DATASET STRUCTURED_GRID\n')
        out.write(f'DIMENSIONS {nx} {ny} {nz}\n')
        out.write(f'POINTS {points.shape[0]} double\n')
        for p in points:
            out.write(_fmt(p) + '\n')
        out.write(f'POINT_DATA {points.shape[0]}\n')
        for name, values in fields.items():
            out.write(f'VECTORS {name} double\n')
            for v in _pad3(_vtk_order(values, grid.shape)):
                out.write(_fmt(v) + '\n')
    logger.debug('wrote %s', path)


def write_samples_csv(path, points, fields):
    """
    Write one row per point: coordinates, then every component of every field.

    Args:
        path (str): Output file
        points (ndarray): (n, d) sample points
        fields (dict): Name -> (n,) or (n, k) values
    """
    points = np.atleast_2d(points)
    d = points.shape[1]
    header = [f'x{i + 1}' for i in range(d)]
    columns = [points]
    for name, values in fields.items():
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
            header.append(name)
        else:
            header.extend(f'{name}_{i + 1}' for i in range(values.shape[1]))
        columns.append(values)
    table = np.hstack(columns)
    with open(path, 'w', encoding='utf-8', newline='') as out:
        writer = csv.writer(out)
        writer.writerow(header)
        for row in table:
            writer.writerow([FLOAT_FORMAT % v for v in row])
    logger.debug('wrote %s', path)


def export_extension(result, out_dir, resolution=None):
    """
    Sample phi, A1, A2, A3 and v0 on a node-centred grid of Q and write them.

    Files: ``phi.vtk``, ``fields.vtk`` and ``fields.csv`` under ``out_dir``.

    Returns:
        list: Paths written
    """
    domain = result.domain
    d = domain.dimension
    grid = make_grid(domain.bounds, resolution or result.budget.get('grid', d))
    nodes = grid.nodes
    in_p = domain.in_p(nodes)
    live = ~in_p
    A1 = result.A1(nodes)
    A2 = result.A2(nodes)
    A3 = np.zeros_like(nodes)
    if np.any(live):
        A3[live] = result.A3(nodes[live])
    v0 = np.where(in_p[:, None], 0.0, A2 + A3)
    phi = result.cutoff.phi(nodes)
    fields = {'A1': A1, 'A2': A2, 'A3': A3, 'v0': v0}

    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, name) for name in ('phi.vtk', 'fields.vtk', 'fields.csv')]
    write_vtk_scalar(paths[0], grid, phi)
    write_vtk_vectors(paths[1], grid, fields)
    write_samples_csv(paths[2], nodes, {'phi': phi, **fields})
    logger.info('exported %d grid nodes to %s', nodes.shape[0], out_dir)
    return paths
