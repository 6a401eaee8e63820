import logging
from typing import Optional, Set, Tuple

import numpy as np

from geometry import all_crossings, segments_for
from model import EdgeMatrix, Instance


logger = logging.getLogger(__name__)

CANVAS_WIDTH = 800
MARGIN = 30
CABLE_COLORS = ['#1f77b4', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b', '#17becf']
CROSSING_COLOR = '#d62728'


class SVG:
    def __init__(self):
        self.svg = ''

    def header(self, width, height):
        self.svg += f"""<?xml version="1.0" standalone="no"?>
<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" xmlns="http://www.w3.org/2000/svg">
<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>
"""

    def group_start(self, attr):
        g_attr = [f'{key}="{value}"' for key, value in attr.items() if key in ['id', 'class']]
        self.svg += f'<g {" ".join(g_attr)}>\n'
        if 'title' in attr:
            self.svg += f'<title>{attr["title"]}</title>\n'

    def group_end(self):
        self.svg += '</g>\n'

    def line(self, x1, y1, x2, y2, stroke, width, extra=''):
        self.svg += f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" ' \
                    f'stroke="{stroke}" stroke-width="{width:.1f}" {extra}/>\n'

    def circle(self, x, y, r, fill, extra=''):
        self.svg += f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{r:.1f}" fill="{fill}" {extra}/>\n'

    def filled_rectangle(self, x1, y1, x2, y2, fill, extra=''):
        self.svg += f'<rect x="{x1:.1f}" y="{y1:.1f}" width="{x2 - x1:.1f}" height="{y2 - y1:.1f}" fill="{fill}" {extra}/>\n'

    def string_ttf(self, x, y, string, extra=''):
        self.svg += f'<text x="{x:.1f}" y="{y:.1f}" {extra}>{string}</text>\n'

    def get_svg(self):
        return f'{self.svg}</svg>\n'


def _canvas(instance: Instance) -> Tuple[np.ndarray, int, int]:
    """
    :return: (pixel coordinates per node with row 0 unused, width, height); north stays up
    """
    xy = instance.coordinates
    low, high = xy.min(axis=0), xy.max(axis=0)
    span = np.maximum(high - low, 1.0)
    scale = (CANVAS_WIDTH - 2 * MARGIN) / max(span)
    height = int(np.ceil(span[1] * scale)) + 2 * MARGIN
    pixels = np.empty((len(xy) + 1, 2))
    pixels[1:, 0] = MARGIN + (xy[:, 0] - low[0]) * scale
    pixels[1:, 1] = height - MARGIN - (xy[:, 1] - low[1]) * scale
    return pixels, CANVAS_WIDTH, height


def render_design(tree: EdgeMatrix, instance: Instance, title: Optional[str] = None) -> str:
    """
    Substations are black squares and turbines numbered circles. Cable width grows with the cable
    type; edges involved in a crossing are drawn in red.
    """
    pixels, width, height = _canvas(instance)
    pairs = tree.pairs()
    crossing: Set[int] = {idx for pair in all_crossings(segments_for(pairs, instance.coordinates)) for idx in pair}

    svg = SVG()
    svg.header(width, height)
    if title:
        svg.string_ttf(MARGIN, MARGIN / 2 + 4, title, extra='font-family="sans-serif" font-size="14"')

    svg.group_start({'id': 'cables'})
    for idx, row in enumerate(tree):
        (x1, y1), (x2, y2) = pixels[row.node_a], pixels[row.node_b]
        cable = 0 if row.cable is None else row.cable
        stroke = CROSSING_COLOR if idx in crossing else CABLE_COLORS[cable % len(CABLE_COLORS)]
        svg.line(x1, y1, x2, y2, stroke, 1.5 + cable)
    svg.group_end()

    svg.group_start({'id': 'nodes'})
    for node in instance.node_ids:
        x, y = pixels[node]
        if instance.is_substation(node):
            svg.filled_rectangle(x - 7, y - 7, x + 7, y + 7, 'black')
        else:
            svg.circle(x, y, 6, 'white', extra='stroke="black" stroke-width="1"')
            svg.string_ttf(x, y + 3, node, extra='font-family="sans-serif" font-size="7" text-anchor="middle"')
    svg.group_end()
    return svg.get_svg()


def plot_design(tree: EdgeMatrix, instance: Instance, path: str, title: Optional[str] = None):
    with open(path, 'w') as fd:
        fd.write(render_design(tree, instance, title=title))
    logger.debug(f'Wrote {path}')
