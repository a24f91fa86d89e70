import html
from typing import Dict, Iterable, List, Sequence

import numpy as np
import pandas as pd

from ..core import GridGmdp
from ..rewards import CoverageReward, GlobalReward, SafetyBonus, SynergyReward
from ..types import Trajectory

PALETTE = ("#1982C4", "#FF595E", "#8AC926", "#6A4C93", "#FFCA3A", "#E85D75")
CONFIDENCE_Z = 1.96


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".")


class SVGPlot:
    def __init__(
        self,
        width: int = 640,
        height: int = 420,
        title: str | None = None,
        debug: bool = False,
    ):
        """Line chart of objective against iteration, one curve per algorithm."""
        self.width = width
        self.height = height
        self.title = title
        self.debug = debug

        self.font_family = "'Helvetica Neue', Helvetica, Arial, sans-serif"
        self.left_margin = 70
        self.right_margin = 150  # legend column
        self.top_margin = 40 if title else 20
        self.bottom_margin = 50

    @property
    def plot_width(self) -> int:
        return self.width - self.left_margin - self.right_margin

    @property
    def plot_height(self) -> int:
        return self.height - self.top_margin - self.bottom_margin

    def render(self, summary: pd.DataFrame) -> str:
        """SVG for a summary frame with algorithm, iteration, mean, std, count."""
        algorithms = list(dict.fromkeys(summary["algorithm"]))
        x_max = max(int(summary["iteration"].max()) if len(summary) else 1, 1)

        half_width = np.where(
            summary["count"] > 1,
            CONFIDENCE_Z * summary["std"] / np.sqrt(summary["count"].clip(lower=1)),
            0.0,
        )
        lows = summary["mean"] - half_width
        highs = summary["mean"] + half_width
        y_min = float(lows.min()) if len(summary) else 0.0
        y_max = float(highs.max()) if len(summary) else 1.0
        if y_max - y_min < 1e-12:
            y_min, y_max = y_min - 1.0, y_max + 1.0
        pad = 0.05 * (y_max - y_min)
        y_min, y_max = y_min - pad, y_max + pad

        def sx(x: float) -> float:
            return self.left_margin + x / x_max * self.plot_width

        def sy(y: float) -> float:
            return self.top_margin + (y_max - y) / (y_max - y_min) * self.plot_height

        svg_lines = [
            f'<svg width="{self.width}" height="{self.height}" xmlns="http://www.w3.org/2000/svg">',  # noqa: E501
            "  <style>",
            f"    text {{ font-family: {self.font_family}; font-size: 12px; fill: #333333; }}",  # noqa: E501
            "    .axis { stroke: #333333; stroke-width: 1; }",
            "    .grid { stroke: #DDDDDD; stroke-width: 1; }",
            "    .curve { fill: none; stroke-width: 2; }",
            "    .band { stroke: none; opacity: 0.2; }",
            "    .title { font-size: 16px; font-weight: bold; fill: #1982C4; }",
            "  </style>",
            f'  <rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>',  # noqa: E501
        ]
        if self.title:
            svg_lines.append(
                f'  <text class="title" x="{self.left_margin}" y="24">{html.escape(self.title)}</text>'  # noqa: E501
            )

        # Gridlines and ticks
        for tick in np.linspace(y_min, y_max, 5):
            y = sy(tick)
            svg_lines.append(
                f'  <line class="grid" x1="{self.left_margin}" y1="{y:.2f}" x2="{self.left_margin + self.plot_width}" y2="{y:.2f}"/>'  # noqa: E501
            )
            svg_lines.append(
                f'  <text x="{self.left_margin - 8}" y="{y + 4:.2f}" text-anchor="end">{_fmt(tick)}</text>'  # noqa: E501
            )
        step = max(1, int(np.ceil(x_max / 10)))
        bottom = self.top_margin + self.plot_height
        for tick in range(0, x_max + 1, step):
            x = sx(tick)
            svg_lines.append(
                f'  <text x="{x:.2f}" y="{bottom + 18}" text-anchor="middle">{tick}</text>'  # noqa: E501
            )
        svg_lines.extend(
            [
                f'  <line class="axis" x1="{self.left_margin}" y1="{bottom}" x2="{self.left_margin + self.plot_width}" y2="{bottom}"/>',  # noqa: E501
                f'  <line class="axis" x1="{self.left_margin}" y1="{self.top_margin}" x2="{self.left_margin}" y2="{bottom}"/>',  # noqa: E501
                f'  <text x="{self.left_margin + self.plot_width / 2:.2f}" y="{self.height - 12}" text-anchor="middle">Iteration</text>',  # noqa: E501
                f'  <text x="16" y="{self.top_margin + self.plot_height / 2:.2f}" text-anchor="middle" transform="rotate(-90 16 {self.top_margin + self.plot_height / 2:.2f})">Objective J(π)</text>',  # noqa: E501
            ]
        )

        for i, algorithm in enumerate(algorithms):
            color = PALETTE[i % len(PALETTE)]
            rows = summary["algorithm"] == algorithm
            xs = summary.loc[rows, "iteration"].to_numpy()
            means = summary.loc[rows, "mean"].to_numpy()
            upper = highs[rows].to_numpy()
            lower = lows[rows].to_numpy()
            if (upper - lower > 0).any():
                outline = [(sx(x), sy(y)) for x, y in zip(xs, upper)]
                outline += [(sx(x), sy(y)) for x, y in zip(xs[::-1], lower[::-1])]
                points = " ".join(f"{x:.2f},{y:.2f}" for x, y in outline)
                svg_lines.append(
                    f'  <polygon class="band" fill="{color}" points="{points}"/>'
                )
            points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, means))
            svg_lines.append(
                f'  <polyline class="curve" stroke="{color}" points="{points}"/>'
            )
            legend_y = self.top_margin + 10 + 20 * i
            legend_x = self.left_margin + self.plot_width + 16
            svg_lines.append(
                f'  <line x1="{legend_x}" y1="{legend_y}" x2="{legend_x + 20}" y2="{legend_y}" stroke="{color}" stroke-width="3"/>'  # noqa: E501
            )
            svg_lines.append(
                f'  <text x="{legend_x + 28}" y="{legend_y + 4}">{html.escape(str(algorithm))}</text>'  # noqa: E501
            )

        svg_lines.append("</svg>")
        return "\n".join(svg_lines)


def emit_plot(summary: pd.DataFrame, title: str | None = None) -> str:
    return SVGPlot(title=title).render(summary)


def emit_trajectory_plot(
    gmdp: GridGmdp,
    trajectory: Trajectory | Sequence[int],
    highlights: Dict[str, Iterable[int]] | None = None,
    cell_size: int = 24,
) -> str:
    """Grid picture of a path; row 0 is drawn at the bottom.

    `highlights` maps a class name ("covered", "unsafe", "synergy", ...) to
    the cells to shade with it.
    """
    states = trajectory.states if isinstance(trajectory, Trajectory) else trajectory
    width, height = gmdp.width * cell_size, gmdp.height * cell_size
    fills = {
        "covered": "#8AC926",
        "unsafe": "#FF595E",
        "synergy": "#FFCA3A",
    }

    def center(state: int) -> tuple[float, float]:
        row, col = gmdp.coordinates(state)
        return (col + 0.5) * cell_size, (gmdp.height - row - 0.5) * cell_size

    svg_lines: List[str] = [
        f'<svg width="{width}" height="{height}" xmlns="http://www.w3.org/2000/svg">',
        f'  <rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for name, cells in (highlights or {}).items():
        fill = fills.get(name, "#6A4C93")
        for cell in sorted({int(c) for c in cells}):
            row, col = gmdp.coordinates(cell)
            svg_lines.append(
                f'  <rect class="{html.escape(name)}" x="{col * cell_size}" y="{(gmdp.height - row - 1) * cell_size}" width="{cell_size}" height="{cell_size}" fill="{fill}" opacity="0.45"/>'  # noqa: E501
            )
    for r in range(gmdp.height + 1):
        svg_lines.append(
            f'  <line x1="0" y1="{r * cell_size}" x2="{width}" y2="{r * cell_size}" stroke="#DDDDDD"/>'  # noqa: E501
        )
    for c in range(gmdp.width + 1):
        svg_lines.append(
            f'  <line x1="{c * cell_size}" y1="0" x2="{c * cell_size}" y2="{height}" stroke="#DDDDDD"/>'  # noqa: E501
        )
    if len(states):
        points = " ".join(f"{x:.1f},{y:.1f}" for x, y in map(center, states))
        svg_lines.append(
            f'  <polyline points="{points}" fill="none" stroke="#1982C4" stroke-width="3" stroke-linejoin="round"/>'  # noqa: E501
        )
        x0, y0 = center(states[0])
        svg_lines.append(
            f'  <circle cx="{x0:.1f}" cy="{y0:.1f}" r="{cell_size / 4:.1f}" fill="#1982C4"/>'  # noqa: E501
        )
    svg_lines.append("</svg>")
    return "\n".join(svg_lines)


def _components(reward: GlobalReward) -> List[GlobalReward]:
    if reward.decomposition is None:
        return [reward]
    return [part for piece in reward.decomposition for part in _components(piece)]


def trajectory_highlights(
    reward: GlobalReward, trajectory: Trajectory
) -> Dict[str, List[int]]:
    """Cells worth shading under a trajectory plot for this reward."""
    highlights: Dict[str, List[int]] = {}
    flat = trajectory.flat(reward.ground.num_states)
    for part in _components(reward):
        if isinstance(part, CoverageReward):
            highlights["covered"] = [int(c) for c in part.covered_cells(flat)]
        elif isinstance(part, SafetyBonus):
            highlights["unsafe"] = [int(s) for s in np.flatnonzero(part.unsafe)]
        elif isinstance(part, SynergyReward):
            members = np.flatnonzero(part.membership.any(axis=0))
            states = reward.ground.states_of(members)
            highlights["synergy"] = sorted({int(s) for s in states})
    return highlights
