"""
Renderers for occupancy maps: plain PGM (P2), CSV and a PNG heatmap.
"""
import io
import logging

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .geometry import index_grids  # noqa: E402
from .maps import OccupancyMap  # noqa: E402

logger = logging.getLogger(__name__)


def to_pgm(occupancy: OccupancyMap) -> str:
    """P2 image, m_x columns by m_y rows; row 1 is i_y = 1, gray = round(255 * p)."""
    g = occupancy.geometry
    # rows are lateral, columns longitudinal
    pixels = np.rint(occupancy.grid().T * 255).astype(int)
    lines = ['P2', f'{g.m_x} {g.m_y}', '255']
    lines.extend(' '.join(str(v) for v in row) for row in pixels)
    return '\n'.join(lines) + '\n'


def to_dataframe(occupancy: OccupancyMap) -> pd.DataFrame:
    i_x, i_y = index_grids(occupancy.geometry)
    return pd.DataFrame({'i_x': i_x, 'i_y': i_y, 'p': occupancy.p})


def to_csv(occupancy: OccupancyMap) -> str:
    buf = io.StringIO()
    to_dataframe(occupancy).to_csv(buf, index=False, float_format='%.17g')
    return buf.getvalue()


def save_heatmap(occupancy: OccupancyMap, path: str, title: str = 'Predicted occupancy') -> None:
    """Heatmap in the ego frame: longitudinal axis up, lateral axis left to right."""
    g = occupancy.geometry
    fig, ax = plt.subplots(figsize=(4, 8))
    try:
        image = ax.imshow(
            occupancy.grid(),
            origin='lower',
            cmap='viridis',
            vmin=0.0,
            vmax=1.0,
            aspect='auto',
            extent=[g.y_min, g.y_max, g.x_min, g.x_max],
        )
        ax.set_xlabel('lateral y (m)')
        ax.set_ylabel('longitudinal x (m)')
        ax.set_title(f'{title}\np_oob={occupancy.p_oob:.3f}')
        fig.colorbar(image, ax=ax, label='P(occupied)')
        fig.tight_layout()
        fig.savefig(path, dpi=150)
    finally:
        plt.close(fig)
    logger.debug('heatmap written to %s', path)
