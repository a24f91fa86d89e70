"""Export SVG plots as PNG or PDF."""

import subprocess
import sys
from pathlib import Path
from shutil import which

from ..errors import GrlError
from ..types import OutputFormat

try:
    import cairosvg  # type: ignore

    CAIRO_AVAILABLE = True
except (ImportError, OSError):
    CAIRO_AVAILABLE = False

# (tool name, executable), in order of preference
CONVERTERS = (
    ("inkscape", "inkscape"),
    ("imagemagick", "convert"),
    ("librsvg", "rsvg-convert"),
)


def find_converter_tool() -> tuple[str, str] | None:
    for tool_name, command in CONVERTERS:
        if which(command):
            return tool_name, command
    return None


def _converter_args(
    tool_name: str, command: str, source: Path, target: Path, format: str
) -> list[str]:
    if tool_name == "inkscape":
        return [command, "--export-type", format, str(source), "-o", str(target)]
    if tool_name == "imagemagick":
        return [command, str(source), str(target)]
    return [command, "-f", format, "-o", str(target), str(source)]


def convert_with_external_tool(
    svg_content: str, output_path: Path, format: OutputFormat, debug: bool = False
) -> str | None:
    """Convert with the first external tool found; returns its name on success."""
    tool = find_converter_tool()
    if tool is None:
        return None
    tool_name, command = tool
    temp_svg = output_path.with_name(f"{output_path.stem}.tmp.svg")
    try:
        temp_svg.write_text(svg_content, encoding="utf-8")
        subprocess.run(
            _converter_args(tool_name, command, temp_svg, output_path, format),
            check=True,
            capture_output=True,
        )
        return tool_name
    except subprocess.CalledProcessError as e:
        if debug:
            print(f"Debug: {tool_name} failed: {e.stderr.decode()}", file=sys.stderr)
        return None
    finally:
        temp_svg.unlink(missing_ok=True)


def _convert_with_cairo(svg_content: str, output_path: Path, format: OutputFormat):
    encoded = svg_content.encode()
    if format == "png":
        cairosvg.svg2png(bytestring=encoded, write_to=str(output_path), scale=2)
    else:
        cairosvg.svg2pdf(bytestring=encoded, write_to=str(output_path))


def save_with_format(
    svg_content: str,
    output_path: Path | str,
    format: OutputFormat = "svg",
    debug: bool = False,
) -> Path:
    """Write `svg_content` to `output_path` with its suffix replaced by `format`."""
    path = Path(output_path).with_suffix(f".{format}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "svg":
        path.write_text(svg_content, encoding="utf-8")
        return path

    tool_name = convert_with_external_tool(svg_content, path, format, debug)
    if tool_name is not None:
        if debug:
            print(
                f"Debug: Created {format.upper()} file using {tool_name} "
                f"({path.stat().st_size} bytes)",
                file=sys.stderr,
            )
        return path

    if CAIRO_AVAILABLE:
        try:
            _convert_with_cairo(svg_content, path, format)
            if debug:
                print(
                    f"Debug: Created {format.upper()} file using Cairo",
                    file=sys.stderr,
                )
            return path
        except Exception as e:
            if debug:
                print(f"Cairo conversion failed: {e}", file=sys.stderr)

    raise GrlError(
        f"Cannot create {format.upper()} file: no conversion tool available. "
        "Install Inkscape, ImageMagick or librsvg, or the cairo extra:\n"
        "  pip install 'grl-toolkit[cairo]'"
    )
